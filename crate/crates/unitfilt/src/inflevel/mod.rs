//! Infinite-level generators u_r, π, w, u_p, y and the special elements α, β, κ.

pub mod span;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fq::FqElem;
use crate::groupring::{vartheta, Gen, IwasawaElem, PhiGroupElem, SymElem, SymTerm};
use crate::indexfn::{ceil_log, factorial_mod, pow_sat, IndexError, IndexParams, KappaKind};
use crate::normfield::{FiltrationClass, NormCtx, NormFieldUnit};
use crate::padic::PadicInt;

#[derive(Debug, Error)]
pub enum InfError {
    #[error("graded solve has no solution at depth {0}")]
    Unsolvable(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("relation `{relation}` fails: residual at λ-depth {depth}")]
    Relation { relation: String, depth: usize },
    #[error("λ-precision {have} too small, need more than {need}")]
    Precision { need: usize, have: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("out of range: {0}")]
    Range(String),
}

/// Depth at which a/b differs from 1, None when equal mod λ^N.
pub fn residual(ctx: &NormCtx, a: &NormFieldUnit, b: &NormFieldUnit) -> Option<usize> {
    if a.val != b.val {
        return Some(0);
    }
    ctx.div(a, b).depth()
}

fn mul_binomial(ctx: &NormCtx, v: &mut [FqElem], d: usize, a: FqElem) {
    for idx in (d..v.len()).rev() {
        let t = ctx.fq.mul(a, v[idx - d]);
        v[idx] = ctx.fq.add(v[idx], t);
    }
}

fn div_binomial(ctx: &NormCtx, v: &mut [FqElem], d: usize, a: FqElem) {
    for idx in d..v.len() {
        let t = ctx.fq.mul(a, v[idx - d]);
        v[idx] = ctx.fq.sub(v[idx], t);
    }
}

/// N_Φ z = Π_k φ^k(z).
pub fn norm_phi_of(ctx: &NormCtx, z: &NormFieldUnit) -> NormFieldUnit {
    (1..ctx.fq.f as i64).fold(z.clone(), |acc, k| ctx.mul(&acc, &ctx.act_phi(z, k)))
}

/// x with N_Φ x = target, built one λ-degree at a time from factors 1 + cξλ^d.
pub fn solve_norm_phi(ctx: &NormCtx, target: &NormFieldUnit) -> Result<NormFieldUnit, InfError> {
    if !target.val.is_zero() {
        return Err(InfError::Precondition("target is not a unit".into()));
    }
    let f = ctx.fq.f;
    if f == 1 {
        return Ok(target.clone());
    }
    let mut x = ctx.one();
    let mut res = target.coeffs.clone();
    for d in 1..ctx.n {
        let c = res[d];
        if c.is_zero() {
            continue;
        }
        // the residual is φ-fixed, so c ∈ F_p and Tr(cξ) = c
        if ctx.fq.frob1(c) != c {
            return Err(InfError::Unsolvable(d));
        }
        let a = ctx.fq.mul(c, ctx.xi);
        mul_binomial(ctx, &mut x.coeffs, d, a);
        for k in 0..f as i64 {
            div_binomial(ctx, &mut res, d, ctx.fq.frobenius(a, k));
        }
    }
    Ok(x)
}

/// x with φ(x)/x = target; each degree solves a^p − a = c, taking the least solution.
pub fn solve_phi_minus_1(ctx: &NormCtx, target: &NormFieldUnit) -> Result<NormFieldUnit, InfError> {
    if !norm_phi_of(ctx, target).is_one() {
        return Err(InfError::Precondition("N_Φ(target) ≠ 1".into()));
    }
    let mut x = ctx.one();
    let mut res = target.coeffs.clone();
    for d in 1..ctx.n {
        let c = res[d];
        if c.is_zero() {
            continue;
        }
        let a = *ctx
            .fq
            .artin_schreier(c)
            .first()
            .ok_or(InfError::Unsolvable(d))?;
        mul_binomial(ctx, &mut x.coeffs, d, a);
        mul_binomial(ctx, &mut res, d, a);
        div_binomial(ctx, &mut res, d, ctx.fq.frob1(a));
    }
    Ok(x)
}

/// Multiply z by b^{1−φ}, b = ε_r(1 + ηλ^d), so that its coefficient at λ^d becomes `target`.
/// The norm N_Φ z is unchanged.
fn fix_leading(
    ctx: &NormCtx,
    z: &NormFieldUnit,
    d: usize,
    r: i64,
    target: FqElem,
) -> Result<NormFieldUnit, InfError> {
    let e = ctx.fq.sub(target, z.coeffs[d]);
    if e.is_zero() {
        return Ok(z.clone());
    }
    let eta = *ctx
        .fq
        .artin_schreier(ctx.fq.neg(e))
        .first()
        .ok_or(InfError::Unsolvable(d))?;
    let b = ctx.project_eigenspace(&ctx.binomial(d, eta), r);
    Ok(ctx.div(&ctx.mul(z, &b), &ctx.act_phi(&b, 1)))
}

/// Divide z by the φ-fixed ε_r(1 + aλ^d), a ∈ F_p.
fn strip_fixed(
    ctx: &NormCtx,
    z: &NormFieldUnit,
    d: usize,
    r: i64,
    a: FqElem,
) -> Result<NormFieldUnit, InfError> {
    if ctx.fq.frob1(a) != a {
        return Err(InfError::Unsolvable(d));
    }
    if a.is_zero() {
        return Ok(z.clone());
    }
    Ok(ctx.div(z, &ctx.project_eigenspace(&ctx.binomial(d, a), r)))
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub relation: String,
    /// λ-depth where the relation first fails; None when it holds to precision.
    pub residual_depth: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorSet {
    pub r: i64,
    pub u: NormFieldUnit,
    pub pi: Option<NormFieldUnit>,
    pub w: Option<NormFieldUnit>,
    pub y: Option<NormFieldUnit>,
    pub certificates: Vec<Certificate>,
}

fn class_cert(ctx: &NormCtx, name: &str, z: &NormFieldUnit, d: usize, lead: FqElem) -> Certificate {
    let residual_depth = match ctx.classify(z) {
        FiltrationClass::Depth { i, leading } if i == d && leading == lead => None,
        FiltrationClass::Depth { i, .. } => Some(i),
        FiltrationClass::Beyond { from } => Some(from),
        FiltrationClass::NonUnit { .. } => Some(0),
    };
    Certificate {
        relation: name.into(),
        residual_depth,
    }
}

fn rel_cert(ctx: &NormCtx, name: &str, a: &NormFieldUnit, b: &NormFieldUnit) -> Certificate {
    Certificate {
        relation: name.into(),
        residual_depth: residual(ctx, a, b),
    }
}

impl GeneratorSet {
    pub fn build(ctx: &NormCtx, r: i64) -> Result<Self, InfError> {
        let p = ctx.p as i64;
        if !(2..=p).contains(&r) {
            return Err(InfError::Range(format!("r = {r}")));
        }
        if ctx.usable() <= 2 * p as usize {
            return Err(InfError::Precision {
                need: 3 * p as usize,
                have: ctx.n,
            });
        }
        let xi = ctx.xi;
        let mut set = GeneratorSet {
            r,
            u: ctx.one(),
            pi: None,
            w: None,
            y: None,
            certificates: vec![],
        };
        if r <= p - 2 {
            set.u = ctx.project_eigenspace(&ctx.binomial(r as usize, xi), r);
            set.certificates
                .push(class_cert(ctx, "u_r ∈ V_r(ξ)", &set.u, r as usize, xi));
        } else if r == p - 1 {
            let pi = ctx.project_eigenspace(&ctx.lambda(), 0);
            let tpi = ctx.act_t(&pi);
            let x = solve_norm_phi(ctx, &tpi)?;
            let u0 = ctx.project_eigenspace(&x, r);
            let u = fix_leading(ctx, &u0, r as usize, r, xi)?;
            set.certificates
                .push(rel_cert(ctx, "φ(π) = π", &ctx.act_phi(&pi, 1), &pi));
            set.certificates
                .push(rel_cert(ctx, "N_Φ u = (γ−1)π", &norm_phi_of(ctx, &u), &tpi));
            set.certificates
                .push(class_cert(ctx, "u ∈ V_{p−1}(ξ)", &u, r as usize, xi));
            set.certificates.push(Certificate {
                relation: "π has valuation 1".into(),
                residual_depth: (pi.val != PadicInt::one(ctx.p, ctx.k)).then_some(0),
            });
            set.u = u;
            set.pi = Some(pi);
        } else {
            let pu = p as usize;
            let mxi = ctx.fq.neg(xi);
            let x = solve_norm_phi(ctx, &ctx.zeta())?;
            let w = fix_leading(ctx, &ctx.project_eigenspace(&x, r), 1, r, mxi)?;
            let tw = ctx.div(&ctx.act_t(&w), &ctx.int_pow(&w, p));
            let x2 = solve_phi_minus_1(ctx, &tw)?;
            let u1 = ctx.project_eigenspace(&x2, r);
            let a = ctx.fq.sub(u1.coeffs[pu], xi);
            let u2 = strip_fixed(ctx, &u1, pu, r, a)?;
            let y2 = ctx.mul(&u2, &ctx.rho(&w, 1));
            let a2 = ctx.fq.add(y2.coeffs[2 * pu - 1], xi);
            let u = strip_fixed(ctx, &u2, 2 * pu - 1, r, a2)?;
            let y = ctx.mul(&u, &ctx.rho(&w, 1));
            set.certificates.push(rel_cert(
                ctx,
                "N_Φ w = ζ",
                &norm_phi_of(ctx, &w),
                &ctx.zeta(),
            ));
            set.certificates.push(rel_cert(
                ctx,
                "(φ−1)u_p = (γ−1−p)w",
                &ctx.div(&ctx.act_phi(&u, 1), &u),
                &tw,
            ));
            set.certificates
                .push(class_cert(ctx, "w ∈ V_1(−ξ)", &w, 1, mxi));
            set.certificates
                .push(class_cert(ctx, "u_p ∈ V_p(ξ)", &u, pu, xi));
            set.certificates
                .push(class_cert(ctx, "y ∈ V_{2p−1}(−ξ)", &y, 2 * pu - 1, mxi));
            set.u = u;
            set.w = Some(w);
            set.y = Some(y);
        }
        if let Some(c) = set.certificates.iter().find(|c| c.residual_depth.is_some()) {
            return Err(InfError::Relation {
                relation: c.relation.clone(),
                depth: c.residual_depth.unwrap(),
            });
        }
        Ok(set)
    }
}

/// Evaluates symbolic elements against a generator set, caching T-power chains.
pub struct Evaluator<'a> {
    pub ctx: &'a NormCtx,
    pub gens: &'a GeneratorSet,
    chain_u: Vec<NormFieldUnit>,
    chain_w: Vec<NormFieldUnit>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a NormCtx, gens: &'a GeneratorSet) -> Self {
        let chain_w = gens.w.iter().cloned().collect();
        Evaluator {
            ctx,
            gens,
            chain_u: vec![gens.u.clone()],
            chain_w,
        }
    }

    pub fn t_power(&mut self, g: Gen, t: usize) -> Result<&NormFieldUnit, InfError> {
        let ctx = self.ctx;
        let chain = match g {
            Gen::U => &mut self.chain_u,
            Gen::W if !self.chain_w.is_empty() => &mut self.chain_w,
            Gen::W => return Err(InfError::Range("w exists only for r = p".into())),
            Gen::V => return Err(InfError::Range("v is a finite-level generator".into())),
        };
        while chain.len() <= t {
            let next = ctx.act_t(chain.last().unwrap());
            // past the truncation everything is 1
            let done = next.is_one();
            chain.push(next);
            if done {
                break;
            }
        }
        Ok(if t < chain.len() {
            &chain[t]
        } else {
            chain.last().unwrap()
        })
    }

    fn small_pow(&self, z: &NormFieldUnit, e: i64) -> NormFieldUnit {
        let ctx = self.ctx;
        if e.unsigned_abs() > ctx.p {
            return ctx.int_pow(z, e);
        }
        let pos = (0..e.unsigned_abs()).fold(ctx.one(), |acc, _| ctx.mul(&acc, z));
        if e < 0 {
            ctx.inv(&pos)
        } else {
            pos
        }
    }

    /// a·g for a ∈ A given by its T-coefficients.
    pub fn eval_a(&mut self, a: &IwasawaElem, g: Gen) -> Result<NormFieldUnit, InfError> {
        let ctx = self.ctx;
        let mut acc = ctx.one();
        for (d, c) in a.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let z = self.t_power(g, d)?.clone();
            acc = ctx.mul(&acc, &ctx.apply_phi_elem(c, &z));
        }
        Ok(acc)
    }

    pub fn eval(&mut self, s: &SymElem) -> Result<NormFieldUnit, InfError> {
        let ctx = self.ctx;
        let mut acc = ctx.one();
        for term in &s.terms {
            let mut z = self.t_power(term.gen, term.t as usize)?.clone();
            if let Some((j, k)) = term.vartheta {
                z = ctx.apply_phi_elem(&vartheta(ctx.p, ctx.fq.f, ctx.k, j, k), &z);
            }
            z = ctx.rho(&z, term.rho);
            acc = ctx.mul(&acc, &self.small_pow(&z, term.coef));
        }
        if s.den != 1 {
            let inv = PadicInt::new(ctx.p, ctx.k, s.den)
                .inv()
                .map_err(|_| InfError::Range("denominator divisible by p".into()))?;
            acc = ctx.zp_pow(&acc, &inv);
        }
        if s.pshift > 0 {
            acc = ctx.act_phi(&ctx.rho(&acc, s.pshift), s.pshift as i64);
        }
        Ok(acc)
    }
}

fn term(coef: i64, rho: u32, t: i64, gen: Gen) -> SymTerm {
    SymTerm {
        coef,
        rho,
        t: t as u64,
        vartheta: None,
        gen,
    }
}

fn factorial(k: i64) -> i64 {
    (1..=k).product()
}

/// α_{m,j} = (1/[r]!)({r−δ−j}! ρ^m T^j − Σ_{k=1}^m ρ^{m−k} T^{φ_{k−1}(j)−δ}) u_r.
pub fn alpha_sym(ip: &IndexParams, m: u32, j: i64) -> SymElem {
    let lead = if j == 0 && ip.r == ip.p - 1 {
        -1
    } else {
        factorial(ip.braces(ip.r - ip.delta - j))
    };
    let mut terms = vec![term(lead, m, j, Gen::U)];
    for k in 1..=m {
        terms.push(term(-1, m - k, ip.phi_m(k - 1, j) - ip.delta, Gen::U));
    }
    SymElem {
        r: ip.r,
        pshift: 0,
        den: factorial(ip.bracket(ip.r)),
        terms,
    }
}

/// β_{m,l} = (ρ^m T^{p^l−1} + Σ_{k=1}^m ρ^{m−k} T^{φ′_{k−1}(p^l−1)−1}) u_p + ρ^{m+l+1} w.
pub fn beta_sym(ip: &IndexParams, m: u32, l: u32) -> Result<SymElem, InfError> {
    if ip.delta != 1 {
        return Err(InfError::Range("β is defined only for r = p".into()));
    }
    let j = pow_sat(ip.p, l) - 1;
    let mut terms = vec![term(1, m, j, Gen::U)];
    for k in 1..=m {
        terms.push(term(1, m - k, ip.phi_prime_m(k - 1, j) - 1, Gen::U));
    }
    terms.push(term(1, m + l + 1, 0, Gen::W));
    Ok(SymElem {
        r: ip.r,
        pshift: 0,
        den: 1,
        terms,
    })
}

/// Effective s for gen_set (s is −1 only at r = p, i = 1, where κ_{0,1} still applies).
pub fn s_eff(ip: &IndexParams, i: i64) -> u32 {
    ip.s_of(i).max(0) as u32
}

pub fn kappa_sym(ip: &IndexParams, m: u32, i: i64) -> Result<SymElem, InfError> {
    ip.check_index(i)?;
    if m > s_eff(ip, i) {
        return Err(InfError::Range(format!(
            "m = {m} exceeds s = {}",
            ip.s_of(i)
        )));
    }
    let th = |k: u32| ip.theta_m(k, i);
    let terms = match ip.kappa_kind(m, i) {
        KappaKind::Single => vec![term(1, m, th(m), Gen::U)],
        KappaKind::Sum { sigma, a } => {
            let mut t = vec![term(1, m, th(m) - 1, Gen::U)];
            for k in (sigma..m).rev() {
                t.push(term(-a, k, th(k) - 1, Gen::U));
            }
            t
        }
        KappaKind::WithW { sigma, l } => {
            let mut t = vec![term(1, m, th(m) - 1, Gen::U)];
            for k in (sigma..m).rev() {
                t.push(term(1, k, th(k) - 1, Gen::U));
            }
            t.push(term(1, m + l + 1, 0, Gen::W));
            t
        }
    };
    Ok(SymElem {
        r: ip.r,
        pshift: 0,
        den: 1,
        terms,
    })
}

/// S_i = {κ_{m,i}}, plus p^{⌈log_p i⌉} w when r = p.
pub fn gen_set_sym(ip: &IndexParams, i: i64) -> Result<Vec<SymElem>, InfError> {
    let mut out: Vec<SymElem> = (0..=s_eff(ip, i))
        .map(|m| kappa_sym(ip, m, i))
        .collect::<Result<_, _>>()?;
    if ip.delta == 1 {
        out.push(SymElem::single(ip.r, Gen::W, 0, 0).times_p(ceil_log(ip.p, i)));
    }
    Ok(out)
}

fn binom(n: i64, k: i64) -> i64 {
    (0..k).fold(1i64, |acc, t| acc * (n - t) / (t + 1))
}

fn check_jk(p: i64, j: i64, k: i64) -> Result<(), InfError> {
    if 1 <= k && k <= j && j < p {
        Ok(())
    } else {
        Err(InfError::Range(format!(
            "need 1 ≤ k ≤ j ≤ p−1, got j = {j}, k = {k}"
        )))
    }
}

/// d_{j,k} = Σ_{h=1}^k (−1)^{j+h} C(k,h) h^j mod p.
pub fn d_coeff(p: i64, j: i64, k: i64) -> Result<i64, InfError> {
    check_jk(p, j, k)?;
    let s = (1..=k).fold(0i64, |acc, h| {
        let sign = if (j + h) % 2 == 0 { 1 } else { -1 };
        let hj = (0..j).fold(1i64, |x, _| x * h % p);
        (acc + sign * (binom(k, h) % p) * hj).rem_euclid(p)
    });
    Ok(s)
}

fn tuple_sum(len: i64, lo: i64, hi: i64, p: i64) -> i64 {
    // Σ over lo ≤ a_1 ≤ … ≤ a_len ≤ hi of Π a_i, by literal enumeration
    if len == 0 {
        return 1;
    }
    (lo..=hi).fold(0, |acc, a| (acc + a * tuple_sum(len - 1, a, hi, p)) % p)
}

/// c_{j,k} = (−1)^{j−k} k! Σ_{0 ≤ a_1 ≤ … ≤ a_{j−k} ≤ k} Π a_i mod p.
pub fn c_coeff(p: i64, j: i64, k: i64) -> Result<i64, InfError> {
    check_jk(p, j, k)?;
    let sign = if (j - k) % 2 == 0 { 1 } else { -1 };
    Ok((sign * factorial_mod(k, p) * tuple_sum(j - k, 0, k, p)).rem_euclid(p))
}

/// θ^{(γ−1)^j} against 1 + (Σ_k d_{j,k} ξ^k(1−ξ)) λ^{(j+1)p}, θ = 1 + ξ(1−ξ)(1−ξλ)^{−1}λ^{p+1}.
/// Returns the first λ-degree ≤ (j+1)p where the two disagree, with the computed coefficient.
pub fn recurexp_check(ctx: &NormCtx, j: i64) -> Result<Option<(usize, FqElem)>, InfError> {
    let p = ctx.p as i64;
    check_jk(p, j, 1)?;
    let top = ((j + 1) * p) as usize;
    if ctx.n <= top {
        return Err(InfError::Precision {
            need: top,
            have: ctx.n,
        });
    }
    let fq = &ctx.fq;
    let xi = ctx.xi;
    let lead = fq.mul(xi, fq.sub(FqElem::ONE, xi));
    let mut theta = ctx.one();
    let mut c = lead;
    for t in (p as usize + 1)..ctx.n {
        theta.coeffs[t] = c;
        c = fq.mul(c, xi);
    }
    let z = ctx.act_t_pow(&theta, j as usize);
    let mut expect = FqElem::ZERO;
    for k in 1..=j {
        let term = fq.mul(fq.pow(xi, k as u64), fq.sub(FqElem::ONE, xi));
        expect = fq.add(expect, fq.scale(d_coeff(p, j, k)?, term));
    }
    for d in 1..=top {
        let want = if d == top { expect } else { FqElem::ZERO };
        if z.coeffs[d] != want {
            return Ok(Some((d, z.coeffs[d])));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub m: u32,
    pub j: i64,
    pub trials: usize,
    /// no sampled element may reach this depth
    pub bound: usize,
    pub deepest: usize,
    pub counterexamples: Vec<String>,
}

fn random_phi(rng: &mut impl Rng, p: u64, f: usize, k: u32) -> PhiGroupElem {
    let md = crate::padic::modulus(p, k);
    PhiGroupElem {
        coeffs: (0..f)
            .map(|_| PadicInt {
                p,
                residue: rng.gen_range(0..md),
                precision: k,
            })
            .collect(),
    }
}

fn random_p_power(rng: &mut impl Rng, p: u64, k: u32, max: u64) -> PadicInt {
    PadicInt::new(p, k, p as i64).pow(rng.gen_range(0..=max))
}

/// Samples (p^m b T^j + c)u (+ d w when r = p) with b a unit mod p and c ∈ T^{j+1}A,
/// checking none reaches V_{φ_m(j)+p−1} (V_{φ′_m(j)+p−1} when r = p).
pub fn nonmembership_sample(
    ctx: &NormCtx,
    gens: &GeneratorSet,
    ip: &IndexParams,
    m: u32,
    j: i64,
    trials: usize,
    seed: u64,
) -> Result<SampleReport, InfError> {
    let (p, f, k) = (ctx.p, ctx.fq.f, ctx.k);
    let bound = (if ip.delta == 1 {
        ip.phi_prime_m(m, j)
    } else {
        ip.phi_m(m, j)
    } + ip.p
        - 1) as usize;
    if ctx.usable() < bound {
        return Err(InfError::Precision {
            need: bound + p as usize - 1,
            have: ctx.n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ j as u64);
    let mut ev = Evaluator::new(ctx, gens);
    let ju = j as usize;
    let extra = 3usize;
    let tb = ju + extra + 2;
    let pm = PadicInt::new(p, k, p as i64).pow(m as u64);
    let mut rep = SampleReport {
        m,
        j,
        trials,
        bound,
        deepest: 0,
        counterexamples: vec![],
    };
    for trial in 0..trials {
        let b = loop {
            let b = random_phi(&mut rng, p, f, k);
            if !b.in_p_ideal() {
                break b;
            }
        };
        let mut a = IwasawaElem::monomial(b.scale(&pm), ju, tb);
        if trial > 0 {
            let scale = random_p_power(&mut rng, p, k, 2);
            for e in ju + 1..tb {
                let c = random_phi(&mut rng, p, f, k).scale(&scale);
                a = a.add(&IwasawaElem::monomial(c, e, tb));
            }
        }
        let mut z = ev.eval_a(&a, Gen::U)?;
        if let Some(w) = gens.w.as_ref().filter(|_| rng.gen_range(0..4) > 0) {
            let d =
                random_phi(&mut rng, p, f, k).scale(&random_p_power(&mut rng, p, k, m as u64 + 3));
            z = ctx.mul(&z, &ctx.apply_phi_elem(&d, w));
        }
        let depth = match ctx.classify(&z) {
            FiltrationClass::Depth { i, .. } => i,
            FiltrationClass::Beyond { from } => from,
            FiltrationClass::NonUnit { .. } => 0,
        };
        rep.deepest = rep.deepest.max(depth);
        if depth >= bound {
            rep.counterexamples.push(format!(
                "trial {trial}: a = {:?} reaches depth {depth}",
                a.coeffs
            ));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_certify() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let ctx = NormCtx::new(p, f, 3 * (p * p) as usize + 1);
            for r in 2..=p as i64 {
                let g = GeneratorSet::build(&ctx, r)
                    .unwrap_or_else(|e| panic!("p={p} f={f} r={r}: {e}"));
                assert!(g.certificates.iter().all(|c| c.residual_depth.is_none()));
            }
        }
    }

    #[test]
    fn solvers_trivial_cases() {
        let ctx = NormCtx::new(5, 2, 40);
        assert!(solve_norm_phi(&ctx, &ctx.one()).unwrap().is_one());
        assert!(solve_phi_minus_1(&ctx, &ctx.one()).unwrap().is_one());
        let c1 = NormCtx::new(5, 1, 40);
        let t = c1.binomial(3, FqElem(2));
        assert_eq!(solve_norm_phi(&c1, &t).unwrap(), t);
        assert!(solve_phi_minus_1(&c1, &t).is_err());
    }

    #[test]
    fn combinatorial_identity() {
        for p in [3i64, 5, 7, 11, 13] {
            for j in 1..p {
                for k in 1..=j {
                    assert_eq!(
                        c_coeff(p, j, k).unwrap(),
                        d_coeff(p, j, k).unwrap(),
                        "p={p} j={j} k={k}"
                    );
                }
                assert_eq!(d_coeff(p, j, j).unwrap(), factorial_mod(j, p));
            }
            for k in 1..p {
                assert_eq!(d_coeff(p, p - 1, k).unwrap(), p - 1);
            }
        }
        assert!(d_coeff(5, 2, 3).is_err());
    }

    #[test]
    fn symbolic_examples() {
        let ip = IndexParams::new(5, 3).unwrap();
        assert_eq!(
            kappa_sym(&ip, 2, 11899).unwrap().render(),
            "(ρ²T⁹⁵ − ρT⁴⁷⁵ − T²³⁷⁹)u₃"
        );
        assert_eq!(gen_set_sym(&ip, 11899).unwrap().len(), 6);
        let ip5 = IndexParams::new(5, 5).unwrap();
        assert_eq!(
            kappa_sym(&ip5, 5, 92729).unwrap().render(),
            "(ρ⁵T⁴ + ρ⁴T²⁸)u₅ + ρ⁷w"
        );
        assert_eq!(
            kappa_sym(&ip5, 1, 92729).unwrap().render(),
            "(ρT³⁷⁰⁸ − T¹⁸⁵⁴⁴)u₅"
        );
        let gs = gen_set_sym(&ip5, 92729).unwrap();
        assert_eq!(gs.len(), 8);
        assert_eq!(gs[7].render(), "p⁸w");
        assert_eq!(
            kappa_sym(&IndexParams::new(5, 2).unwrap(), 0, 2)
                .unwrap()
                .render(),
            "u₂"
        );
        assert_eq!(beta_sym(&ip5, 0, 0).unwrap().render(), "u₅ + ρw");
    }
}

#[cfg(test)]
mod depth_tests {
    use super::*;

    #[test]
    fn alpha_beta_kappa_depths_small() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let ctx = NormCtx::new(p, f, 130);
            for r in 2..=p as i64 {
                let ip = IndexParams::new(p as i64, r).unwrap();
                let g = GeneratorSet::build(&ctx, r).unwrap();
                let mut ev = Evaluator::new(&ctx, &g);
                for m in 0..3 {
                    for j in 0..40 {
                        let d = ip.phi_m(m, j) as usize;
                        if d >= ctx.usable() {
                            break;
                        }
                        let z = ev.eval(&alpha_sym(&ip, m, j)).unwrap();
                        assert_eq!(
                            ctx.classify(&z),
                            FiltrationClass::Depth {
                                i: d,
                                leading: ctx.xi
                            },
                            "alpha p={p} f={f} r={r} m={m} j={j}"
                        );
                    }
                    if r == p as i64 {
                        for l in 0..4 {
                            let d = ip.phi_prime_m(m, pow_sat(p as i64, l) - 1) as usize;
                            if d >= ctx.usable() {
                                break;
                            }
                            let z = ev.eval(&beta_sym(&ip, m, l).unwrap()).unwrap();
                            assert_eq!(
                                ctx.classify(&z),
                                FiltrationClass::Depth {
                                    i: d,
                                    leading: ctx.fq.neg(ctx.xi)
                                },
                                "beta p={p} f={f} m={m} l={l}"
                            );
                        }
                    }
                }
                let mut i = r;
                while (i as usize) < ctx.usable() {
                    for s in gen_set_sym(&ip, i).unwrap() {
                        let z = ev.eval(&s).unwrap();
                        let c = ctx.classify(&z);
                        assert!(
                            c.at_least(i as usize),
                            "kappa p={p} f={f} i={i} {} -> {c:?}",
                            s.render()
                        );
                    }
                    i += p as i64 - 1;
                }
            }
        }
    }

    #[test]
    fn nonmembership_small() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 2)] {
            for r in 2..=p as i64 {
                let ip = IndexParams::new(p as i64, r).unwrap();
                let ctx = NormCtx::new(p, f, 3 * (p * p) as usize + 20);
                let g = GeneratorSet::build(&ctx, r).unwrap();
                for (m, j) in [(0u32, 0i64), (0, 1), (0, p as i64 - 1), (1, 1)] {
                    let Ok(rep) = nonmembership_sample(&ctx, &g, &ip, m, j, 20, 7) else {
                        continue;
                    };
                    assert!(rep.counterexamples.is_empty(), "p={p} f={f} r={r}: {rep:?}");
                }
            }
        }
        // b = 1, c = 0 at m = j = 0 is u_r itself
        let ctx = NormCtx::new(5, 1, 30);
        let g = GeneratorSet::build(&ctx, 3).unwrap();
        let rep =
            nonmembership_sample(&ctx, &g, &IndexParams::new(5, 3).unwrap(), 0, 0, 1, 1).unwrap();
        assert_eq!(rep.deepest, 3);
    }

    #[test]
    fn recurexp_series() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let ctx = NormCtx::new(p, f, (p * p + 2) as usize);
            for j in 1..p as i64 {
                assert_eq!(recurexp_check(&ctx, j).unwrap(), None, "p={p} f={f} j={j}");
            }
        }
    }
}
