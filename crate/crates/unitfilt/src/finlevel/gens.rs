//! Level-n generators u_{n,r}, π_n, v, w_n and the elements α_n, ω_n, β_n, κ_n, S_{n,i}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{embed_unit, norm_to, FinError, FnCtx, FnUnit};
use crate::fq::FqElem;
use crate::groupring::{vartheta, Gen, IwasawaElem, PhiGroupElem, SymElem, SymTerm};
use crate::indexfn::{ceil_log, pow_sat, IndexParams};
use crate::inflevel::{kappa_sym, s_eff, Certificate, SampleReport};
use crate::normfield::FiltrationClass;
use crate::padic::PadicInt;

/// x with N_Φ x = target, one λ-depth at a time from factors 1 + cξλ^d.
pub fn solve_norm_phi(ctx: &FnCtx, target: &FnUnit) -> Result<FnUnit, FinError> {
    if !target.val.is_zero() {
        return Err(FinError::Precondition("target is not a unit".into()));
    }
    if ctx.f == 1 {
        return Ok(target.clone());
    }
    let mut x = ctx.one();
    loop {
        let res = ctx.div(target, &ctx.norm_phi(&x));
        match ctx.classify(&res) {
            FiltrationClass::Depth { i, leading } => {
                if ctx.fq.frob1(leading) != leading {
                    return Err(FinError::Unsolvable(i));
                }
                x = ctx.mul(&x, &ctx.binomial(i, ctx.fq.mul(leading, ctx.xi)));
            }
            _ => return Ok(x),
        }
    }
}

/// x with φ(x)/x = target; each depth solves a^p − a = c with the least a.
pub fn solve_phi_minus_1(ctx: &FnCtx, target: &FnUnit) -> Result<FnUnit, FinError> {
    if ctx.classify(&ctx.norm_phi(target)).depth().is_some() {
        return Err(FinError::Precondition("N_Φ(target) ≠ 1".into()));
    }
    let mut x = ctx.one();
    let mut res = target.clone();
    while let FiltrationClass::Depth { i, leading } = ctx.classify(&res) {
        let a = *ctx
            .fq
            .artin_schreier(leading)
            .first()
            .ok_or(FinError::Unsolvable(i))?;
        let b = ctx.binomial(i, a);
        x = ctx.mul(&x, &b);
        res = ctx.div(&ctx.mul(&res, &b), &ctx.act_phi(&b, 1));
    }
    Ok(x)
}

/// Multiply z by b^{1−φ}, b = ε_r(1 + ηλ^d), moving its λ^d coefficient to `target`.
fn fix_leading(
    ctx: &FnCtx,
    z: &FnUnit,
    d: usize,
    r: i64,
    target: FqElem,
) -> Result<FnUnit, FinError> {
    let e = ctx.fq.sub(target, ctx.coeff_at(z, d)?);
    if e.is_zero() {
        return Ok(z.clone());
    }
    let eta = *ctx
        .fq
        .artin_schreier(ctx.fq.neg(e))
        .first()
        .ok_or(FinError::Unsolvable(d))?;
    let b = ctx.project_eigenspace(&ctx.binomial(d, eta), r);
    Ok(ctx.div(&ctx.mul(z, &b), &ctx.act_phi(&b, 1)))
}

/// Divide z by the φ-fixed ε_r(1 + aλ^d), a ∈ F_p.
fn strip_fixed(ctx: &FnCtx, z: &FnUnit, d: usize, r: i64, a: FqElem) -> Result<FnUnit, FinError> {
    if ctx.fq.frob1(a) != a {
        return Err(FinError::Unsolvable(d));
    }
    if a.is_zero() {
        return Ok(z.clone());
    }
    Ok(ctx.div(z, &ctx.project_eigenspace(&ctx.binomial(d, a), r)))
}

fn class_cert(ctx: &FnCtx, name: &str, z: &FnUnit, d: usize, lead: FqElem) -> Certificate {
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

fn rel_cert(ctx: &FnCtx, name: &str, a: &FnUnit, b: &FnUnit) -> Certificate {
    let residual_depth = if a.val != b.val {
        Some(0)
    } else {
        ctx.classify(&ctx.div(a, b)).depth()
    };
    Certificate {
        relation: name.into(),
        residual_depth,
    }
}

fn flag_cert(name: &str, ok: bool) -> Certificate {
    Certificate {
        relation: name.into(),
        residual_depth: (!ok).then_some(0),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FinGenerators {
    pub n: u32,
    pub r: i64,
    pub u: FnUnit,
    pub pi: Option<FnUnit>,
    /// v = v_n^{φ^{2−n}}, r = p−1
    pub v: Option<FnUnit>,
    pub v_n: Option<FnUnit>,
    pub w: Option<FnUnit>,
    pub y: Option<FnUnit>,
    pub certificates: Vec<Certificate>,
}

impl FinGenerators {
    pub fn build(ctx: &FnCtx, r: i64) -> Result<Self, FinError> {
        let p = ctx.p as i64;
        if !(2..=p).contains(&r) {
            return Err(FinError::Range(format!("r = {r}")));
        }
        if ctx.n < 2 {
            return Err(FinError::Range("level n ≥ 2 required".into()));
        }
        if ctx.usable() <= ctx.e + 2 * p as usize {
            return Err(FinError::Precision(format!(
                "usable depth {} too small",
                ctx.usable()
            )));
        }
        let xi = ctx.xi;
        let mut set = FinGenerators {
            n: ctx.n,
            r,
            u: ctx.one(),
            pi: None,
            v: None,
            v_n: None,
            w: None,
            y: None,
            certificates: vec![],
        };
        if r <= p - 2 {
            set.u = ctx.project_eigenspace(&ctx.binomial(r as usize, xi), r);
            set.certificates.push(class_cert(
                ctx,
                "u_{n,r} ∈ V_{n,r}(ξ)",
                &set.u,
                r as usize,
                xi,
            ));
        } else if r == p - 1 {
            set.build_r0(ctx)?;
        } else {
            let pu = p as usize;
            let mxi = ctx.fq.neg(xi);
            let x = solve_norm_phi(ctx, &ctx.zeta())?;
            let w = fix_leading(ctx, &ctx.project_eigenspace(&x, r), 1, r, mxi)?;
            let tw = ctx.div(&ctx.act_t(&w), &ctx.int_pow(&w, p));
            let x2 = solve_phi_minus_1(ctx, &tw)?;
            let u1 = ctx.project_eigenspace(&x2, r);
            let a = ctx.fq.sub(ctx.coeff_at(&u1, pu)?, xi);
            let u2 = strip_fixed(ctx, &u1, pu, r, a)?;
            let y2 = ctx.mul(&u2, &ctx.rho(&w, 1));
            let a2 = ctx.fq.add(ctx.coeff_at(&y2, 2 * pu - 1)?, xi);
            let u = strip_fixed(ctx, &u2, 2 * pu - 1, r, a2)?;
            let y = ctx.mul(&u, &ctx.rho(&w, 1));
            set.certificates
                .push(rel_cert(ctx, "N_Φ w_n = ζ", &ctx.norm_phi(&w), &ctx.zeta()));
            set.certificates.push(rel_cert(
                ctx,
                "(φ−1)u_{n,p} = (γ−1−p)w_n",
                &ctx.div(&ctx.act_phi(&u, 1), &u),
                &tw,
            ));
            set.certificates
                .push(class_cert(ctx, "w_n ∈ V_{n,1}(−ξ)", &w, 1, mxi));
            set.certificates
                .push(class_cert(ctx, "u_{n,p} ∈ V_{n,p}(ξ)", &u, pu, xi));
            set.certificates
                .push(class_cert(ctx, "y_n ∈ V_{n,2p−1}(−ξ)", &y, 2 * pu - 1, mxi));
            set.u = u;
            set.w = Some(w);
            set.y = Some(y);
        }
        if let Some(c) = set.certificates.iter().find(|c| c.residual_depth.is_some()) {
            return Err(FinError::Relation {
                relation: c.relation.clone(),
                depth: c.residual_depth.unwrap(),
            });
        }
        Ok(set)
    }

    fn build_r0(&mut self, ctx: &FnCtx) -> Result<(), FinError> {
        let (p, r, xi) = (ctx.p, ctx.p as i64 - 1, ctx.xi);
        let pi = ctx.project_eigenspace(&ctx.lambda(), 0);
        let tpi = ctx.act_t(&pi);
        let x = solve_norm_phi(ctx, &tpi)?;
        let u = fix_leading(ctx, &ctx.project_eigenspace(&x, r), r as usize, r, xi)?;
        // v_n lives in F_1: solve φ(v_n)/v_n = (N_{Γ_n} u)^{−1} there
        let c1 = FnCtx::new(p, ctx.f, 1, ctx.k)?;
        let g = norm_to(ctx, &c1, &u)?;
        let x1 = solve_phi_minus_1(&c1, &c1.inv(&g))?;
        let mut vn1 = c1.project_eigenspace(&x1, 0);
        let dm = c1.sub_elem(&vn1.unit, &c1.one_elem());
        if !c1.divisible_by_p_power(&dm, 1) {
            return Err(FinError::Relation {
                relation: "v_n ≡ 1 mod p".into(),
                depth: 0,
            });
        }
        let c = c1.residue(&super::FnElem {
            c: dm.c.iter().map(|&t| t / p).collect(),
        });
        let want = ctx.fq.frobenius(xi, ctx.n as i64 - 2);
        let a = ctx.fq.sub(c, want);
        if ctx.fq.frob1(a) != a {
            return Err(FinError::Unsolvable(c1.e));
        }
        let one_p = super::FnUnit {
            val: c1.one().val,
            unit: c1.scale_int(&c1.one_elem(), 1 + p),
        };
        vn1 = c1.mul(&vn1, &c1.int_pow(&one_p, -(a.0 as i64)));
        let v_n = embed_unit(&c1, ctx, &vn1)?;
        let v = ctx.act_phi(&v_n, 2 - ctx.n as i64);
        let vm = ctx.sub_elem(
            &ctx.sub_elem(&v.unit, &ctx.one_elem()),
            &ctx.scale_int(&ctx.const_elem(xi), p),
        );
        self.certificates
            .push(rel_cert(ctx, "φ(π_n) = π_n", &ctx.act_phi(&pi, 1), &pi));
        self.certificates.push(rel_cert(
            ctx,
            "N_Φ u_{n,p−1} = (γ−1)π_n",
            &ctx.norm_phi(&u),
            &tpi,
        ));
        self.certificates.push(class_cert(
            ctx,
            "u_{n,p−1} ∈ V_{n,p−1}(ξ)",
            &u,
            r as usize,
            xi,
        ));
        self.certificates.push(flag_cert(
            "π_n has valuation 1",
            pi.val == PadicInt::one(p, ctx.kexp),
        ));
        self.certificates.push(rel_cert(
            &c1,
            "N_{Γ_n} u_{n,p−1} = (1−φ)v_n",
            &g,
            &c1.div(&vn1, &c1.act_phi(&vn1, 1)),
        ));
        self.certificates
            .push(rel_cert(ctx, "γ(v_n) = v_n", &ctx.act_gamma(&v_n), &v_n));
        self.certificates.push(flag_cert(
            "v ≡ 1 + pξ mod p²",
            ctx.divisible_by_p_power(&vm, 2),
        ));
        self.certificates.push(class_cert(
            ctx,
            "v ∈ V_{n,e_n}(−ξ)",
            &v,
            ctx.e,
            ctx.fq.neg(xi),
        ));
        self.u = u;
        self.pi = Some(pi);
        self.v = Some(v);
        self.v_n = Some(v_n);
        Ok(())
    }
}

/// Evaluates symbolic elements on level-n generators, caching T-power chains.
pub struct FinEvaluator<'a> {
    pub ctx: &'a FnCtx,
    pub gens: &'a FinGenerators,
    chain_u: Vec<FnUnit>,
    chain_w: Vec<FnUnit>,
}

impl<'a> FinEvaluator<'a> {
    pub fn new(ctx: &'a FnCtx, gens: &'a FinGenerators) -> Self {
        let chain_w = gens.w.iter().cloned().collect();
        FinEvaluator {
            ctx,
            gens,
            chain_u: vec![gens.u.clone()],
            chain_w,
        }
    }

    pub fn t_power(&mut self, g: Gen, t: usize) -> Result<FnUnit, FinError> {
        let ctx = self.ctx;
        let chain = match g {
            Gen::U => &mut self.chain_u,
            Gen::W if !self.chain_w.is_empty() => &mut self.chain_w,
            Gen::W => return Err(FinError::Range("w_n exists only for r = p".into())),
            Gen::V => {
                let v = self
                    .gens
                    .v
                    .as_ref()
                    .ok_or_else(|| FinError::Range("v exists only for r = p−1".into()))?;
                // v is γ-fixed
                return Ok(if t == 0 { v.clone() } else { ctx.one() });
            }
        };
        while chain.len() <= t {
            let next = ctx.act_t(chain.last().unwrap());
            let done = ctx.is_one(&next);
            chain.push(next);
            if done {
                break;
            }
        }
        Ok(if t < chain.len() {
            chain[t].clone()
        } else {
            ctx.one()
        })
    }

    pub fn eval_a(&mut self, a: &IwasawaElem, g: Gen) -> Result<FnUnit, FinError> {
        let ctx = self.ctx;
        let mut acc = ctx.one();
        for (d, c) in a.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let z = self.t_power(g, d)?;
            acc = ctx.mul(&acc, &ctx.apply_phi_elem(c, &z)?);
        }
        Ok(acc)
    }

    pub fn eval(&mut self, s: &SymElem) -> Result<FnUnit, FinError> {
        let ctx = self.ctx;
        let mut acc = ctx.one();
        for term in &s.terms {
            let mut z = self.t_power(term.gen, term.t as usize)?;
            if let Some((j, k)) = term.vartheta {
                z = ctx.apply_phi_elem(&vartheta(ctx.p, ctx.f, ctx.kexp, j, k), &z)?;
            }
            z = ctx.rho(&z, term.rho);
            acc = ctx.mul(&acc, &ctx.int_pow(&z, term.coef));
        }
        if s.den != 1 {
            let inv = PadicInt::new(ctx.p, ctx.kexp, s.den)
                .inv()
                .map_err(|_| FinError::Range("denominator divisible by p".into()))?;
            acc = ctx.zp_pow(&acc, &inv)?;
        }
        if s.pshift > 0 {
            acc = ctx.zp_pow(
                &acc,
                &PadicInt::new(ctx.p, ctx.kexp, ctx.p as i64).pow(s.pshift as u64),
            )?;
        }
        Ok(acc)
    }
}

fn term(coef: i64, rho: u32, t: i64, vt: Option<(u32, u32)>, gen: Gen) -> SymTerm {
    SymTerm {
        coef,
        rho,
        t: t as u64,
        vartheta: vt,
        gen,
    }
}

/// ϑ_{j,k} as a symbolic factor; omitted when it is 1.
fn vt(j: u32, k: u32) -> Option<(u32, u32)> {
    (j == 2 && k > 0).then_some((j, k))
}

/// ω_{n,m,l} = Σ_{k=0}^l ρ^{m−k} ϑ_{n−m,k} T^{p^{n−m+k−2}(p−1)+p^k−1} u_{n,p−1} − v.
pub fn omega_sym(ip: &IndexParams, n: u32, m: u32, l: u32) -> Result<SymElem, FinError> {
    if ip.r != ip.p - 1 {
        return Err(FinError::Range("ω is defined only for r = p−1".into()));
    }
    if !(l <= m && m + 2 <= n) {
        return Err(FinError::Range(format!(
            "need l ≤ m ≤ n−2 (n={n}, m={m}, l={l})"
        )));
    }
    let p = ip.p;
    let mut terms: Vec<SymTerm> = (0..=l)
        .map(|k| {
            term(
                1,
                m - k,
                pow_sat(p, n - m + k - 2) * (p - 1) + pow_sat(p, k) - 1,
                vt(n - m, k),
                Gen::U,
            )
        })
        .collect();
    terms.push(term(-1, 0, 0, None, Gen::V));
    Ok(SymElem {
        r: ip.r,
        pshift: 0,
        den: 1,
        terms,
    })
}

/// Whether κ_{n,m,i} takes the ω-form: r = p−1 and p^m < i − e_n < p^{m+1}.
pub fn kappa_is_omega(ip: &IndexParams, n: u32, m: u32, i: i64) -> bool {
    let d = i - ip.e_of(n);
    ip.r == ip.p - 1 && m + 2 <= n && pow_sat(ip.p, m) < d && d < pow_sat(ip.p, m + 1)
}

/// κ_{n,m,i}: the infinite-level formula on level-n generators, or
/// Σ_{k=σ(m+1,i)}^m ρ^k ϑ_{n−m,m−k} T^{θ_k(i)−1} u_{n,p−1} − v in the ω band.
pub fn kappa_n_sym(ip: &IndexParams, n: u32, m: u32, i: i64) -> Result<SymElem, FinError> {
    if i > pow_sat(ip.p, n) {
        return Err(FinError::Range(format!("i = {i} exceeds p^n")));
    }
    if !kappa_is_omega(ip, n, m, i) {
        return kappa_sym(ip, m, i).map_err(|e| FinError::Range(e.to_string()));
    }
    let sigma = ip.sigma(m + 1, i)?;
    let mut terms: Vec<SymTerm> = (sigma..=m)
        .rev()
        .map(|k| term(1, k, ip.theta_m(k, i) - 1, vt(n - m, m - k), Gen::U))
        .collect();
    terms.push(term(-1, 0, 0, None, Gen::V));
    Ok(SymElem {
        r: ip.r,
        pshift: 0,
        den: 1,
        terms,
    })
}

/// The generating set of V_{n,i}: p^μ κ_{n,m,i−μe_n} for m ≤ s, plus p^μ v (r = p−1,
/// i ≤ (μ+1)e_n) or p^{μ+⌈log_p(i−μe_n)⌉} w_n (r = p).
pub fn gen_set_fin_sym(ip: &IndexParams, n: u32, i: i64) -> Result<Vec<SymElem>, FinError> {
    ip.check_index(i)?;
    let mu = ip.mu_of(n, i);
    let i0 = i - mu * ip.e_of(n);
    let mut out = (0..=s_eff(ip, i0))
        .map(|m| Ok(kappa_n_sym(ip, n, m, i0)?.times_p(mu as u32)))
        .collect::<Result<Vec<_>, FinError>>()?;
    if ip.r == ip.p - 1 && i <= (mu + 1) * ip.e_of(n) {
        out.push(SymElem::single(ip.r, Gen::V, 0, 0).times_p(mu as u32));
    }
    if ip.delta == 1 {
        out.push(SymElem::single(ip.r, Gen::W, 0, 0).times_p(mu as u32 + ceil_log(ip.p, i0)));
    }
    Ok(out)
}

/// Predicted class of ω_{n,m,l}: (e_n+p^{m+1}−1, ξ) for l = m; otherwise the case split on
/// whether p divides ϑ_{n−m,l+1}. The leading coefficient is returned as ϑ applied to ξ.
pub fn omega_prediction(ctx: &FnCtx, ip: &IndexParams, n: u32, m: u32, l: u32) -> (usize, FqElem) {
    let (p, e) = (ip.p, ip.e_of(n));
    let xi = ctx.xi;
    if l == m {
        return ((e + pow_sat(p, m + 1) - 1) as usize, xi);
    }
    let th = vartheta(ctx.p, ctx.f, ctx.kexp, n - m, l + 1);
    let lead = th
        .coeffs
        .iter()
        .enumerate()
        .fold(FqElem::ZERO, |acc, (k, c)| {
            ctx.fq.add(
                acc,
                ctx.fq
                    .scale((c.residue % ctx.p) as i64, ctx.fq.frobenius(xi, k as i64)),
            )
        });
    if !lead.is_zero() {
        ((e + pow_sat(p, m + 1) - pow_sat(p, m - l)) as usize, lead)
    } else {
        ((e + pow_sat(p, m + 1) - pow_sat(p, m - l - 1)) as usize, xi)
    }
}

/// Samples (p^m b T^j + c)u_{n,r} (+ d v for r = p−1, + d w_n for r = p), b a unit mod p and
/// c ∈ T^{j+1}A_n, checking none reaches the non-membership bound at level n.
pub fn nonmembership_sample_n(
    ctx: &FnCtx,
    gens: &FinGenerators,
    ip: &IndexParams,
    m: u32,
    j: i64,
    trials: usize,
    seed: u64,
) -> Result<SampleReport, FinError> {
    let (p, f, k) = (ctx.p, ctx.f, ctx.kexp);
    let n = ctx.n;
    let pn = pow_sat(ip.p, n);
    let fm = ip.phi_m(m, j);
    let bound = if ip.delta == 1 {
        if fm > pn {
            return Err(FinError::Range("need φ_m(j) ≤ p^n".into()));
        }
        (ip.phi_prime_m(m, j) + ip.p - 1).min(pn + ip.p - 1)
    } else if ip.r == ip.p - 1 {
        if fm >= pn || m + 2 > n {
            return Err(FinError::Range("need φ_m(j) < p^n and m ≤ n−2".into()));
        }
        ip.phi_prime_nm(n, m, j)? + ip.p - 1
    } else {
        if fm >= pn - 1 {
            return Err(FinError::Range("need φ_m(j) < p^n − 1".into()));
        }
        fm + ip.p - 1
    } as usize;
    if ctx.usable() < bound {
        return Err(FinError::Precision(format!(
            "usable {} < bound {bound}",
            ctx.usable()
        )));
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ j as u64 ^ ((n as u64) << 48));
    let mut ev = FinEvaluator::new(ctx, gens);
    let ju = j as usize;
    let tb = ju + 5;
    let pm = PadicInt::new(p, k, p as i64).pow(m as u64);
    let rand_phi = |rng: &mut ChaCha8Rng| PhiGroupElem {
        coeffs: (0..f)
            .map(|_| PadicInt {
                p,
                residue: rng.gen_range(0..crate::padic::modulus(p, k)),
                precision: k,
            })
            .collect(),
    };
    let rand_ppow =
        |rng: &mut ChaCha8Rng, max: u64| PadicInt::new(p, k, p as i64).pow(rng.gen_range(0..=max));
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
            let b = rand_phi(&mut rng);
            if !b.in_p_ideal() {
                break b;
            }
        };
        let mut a = IwasawaElem::monomial(b.scale(&pm), ju, tb);
        if trial > 0 {
            let scale = rand_ppow(&mut rng, 2);
            for e in ju + 1..tb {
                a = a.add(&IwasawaElem::monomial(
                    rand_phi(&mut rng).scale(&scale),
                    e,
                    tb,
                ));
            }
        }
        let mut z = ev.eval_a(&a, Gen::U)?;
        let mut d_used = None;
        if rng.gen_range(0..4) > 0 {
            let d = rand_phi(&mut rng).scale(&rand_ppow(&mut rng, m as u64 + 3));
            d_used = Some(d.coeffs.iter().map(|c| c.residue).collect::<Vec<_>>());
            if let Some(w) = gens.w.as_ref() {
                z = ctx.mul(&z, &ctx.apply_phi_elem(&d, w)?);
            } else if let Some(v) = gens.v.as_ref() {
                // d ∈ Z_p here
                z = ctx.mul(&z, &ctx.zp_pow(v, &d.coeffs[0])?);
            }
        }
        let depth = match ctx.classify(&z) {
            FiltrationClass::Depth { i, .. } => i,
            FiltrationClass::Beyond { from } => from,
            FiltrationClass::NonUnit { .. } => 0,
        };
        rep.deepest = rep.deepest.max(depth);
        if depth >= bound {
            rep.counterexamples.push(format!(
                "trial {trial}: a = {:?}, d = {d_used:?} reaches depth {depth}",
                a.coeffs
                    .iter()
                    .map(|c| c.coeffs.iter().map(|x| x.residue).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            ));
        }
    }
    Ok(rep)
}

/// Digits of b, digits of d, depth reached.
pub type Witness = (Vec<u64>, Vec<u64>, usize);

/// r = p: search b, d ∈ F_p[Φ] (b ≠ 0) with (T^{p^{n−1}−1}u_{n,p})^b (p^n d)w_n as deep as
/// p^n + p − 1, the cell φ_0(j) = p^n of the level-n non-membership bound. Returns the
/// digits of b and d and the depth reached.
pub fn boundary_witness(ctx: &FnCtx, gens: &FinGenerators) -> Result<Option<Witness>, FinError> {
    let w = gens
        .w
        .as_ref()
        .ok_or_else(|| FinError::Range("needs r = p".into()))?;
    let (p, f, k) = (ctx.p, ctx.f, ctx.kexp);
    let j = ctx.pn / p as usize - 1;
    let bound = ctx.pn + p as usize - 1;
    if ctx.usable() <= bound {
        return Err(FinError::Precision(format!(
            "usable {} ≤ {bound}",
            ctx.usable()
        )));
    }
    let mut ev = FinEvaluator::new(ctx, gens);
    let tu = ev.t_power(Gen::U, j)?;
    let wn = ctx.zp_pow(w, &PadicInt::new(p, k, p as i64).pow(ctx.n as u64))?;
    let q = p.pow(f as u32);
    let digits = |x: u64| -> Vec<u64> { (0..f).map(|t| x / p.pow(t as u32) % p).collect() };
    let elem = |d: &[u64]| PhiGroupElem {
        coeffs: d.iter().map(|&c| PadicInt::new(p, k, c as i64)).collect(),
    };
    for bi in 1..q {
        let zb = ctx.apply_phi_elem(&elem(&digits(bi)), &tu)?;
        for di in 0..q {
            let z = ctx.mul(&zb, &ctx.apply_phi_elem(&elem(&digits(di)), &wn)?);
            let depth = match ctx.classify(&z) {
                FiltrationClass::Depth { i, .. } => i,
                FiltrationClass::Beyond { from } => from,
                FiltrationClass::NonUnit { .. } => 0,
            };
            if depth >= bound {
                return Ok(Some((digits(bi), digits(di), depth)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inflevel::{alpha_sym, beta_sym};

    fn class(ctx: &FnCtx, z: &FnUnit) -> (usize, FqElem) {
        match ctx.classify(z) {
            FiltrationClass::Depth { i, leading } => (i, leading),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generators_certify() {
        for (p, f, n) in [
            (3u64, 1usize, 2u32),
            (3, 2, 2),
            (5, 1, 2),
            (5, 2, 2),
            (3, 1, 3),
            (3, 2, 3),
        ] {
            let k = FnCtx::precision_for(p, n, (p as usize).pow(n) + 3 * p as usize);
            let ctx = FnCtx::new(p, f, n, k).unwrap();
            for r in 2..=p as i64 {
                let g = FinGenerators::build(&ctx, r)
                    .unwrap_or_else(|e| panic!("p={p} f={f} n={n} r={r}: {e}"));
                assert!(g.certificates.iter().all(|c| c.residual_depth.is_none()));
            }
        }
    }

    #[test]
    fn special_elements_small() {
        let (p, f, n) = (3u64, 2usize, 3u32);
        let ctx = FnCtx::new(p, f, n, FnCtx::precision_for(p, n, 40)).unwrap();
        let pn = 27i64;
        for r in 2..=3i64 {
            let ip = IndexParams::new(3, r).unwrap();
            let g = FinGenerators::build(&ctx, r).unwrap();
            let mut ev = FinEvaluator::new(&ctx, &g);
            for m in 0..n {
                for j in 0..pn {
                    if ip.phi_m(m, j) >= pn - 1 {
                        break;
                    }
                    let z = ev.eval(&alpha_sym(&ip, m, j)).unwrap();
                    assert_eq!(
                        class(&ctx, &z),
                        (ip.phi_m(m, j) as usize, ctx.xi),
                        "r={r} m={m} j={j}"
                    );
                }
            }
            if r == 3 {
                for (m, l) in [(0u32, 0u32), (1, 0), (0, 1), (0, 2)] {
                    let z = ev.eval(&beta_sym(&ip, m, l).unwrap()).unwrap();
                    let want = if l + 1 == n && m == 0 {
                        (pn as usize, ctx.fq.frobenius(ctx.xi, -1))
                    } else {
                        (
                            ip.phi_prime_m(m, pow_sat(3, l) - 1) as usize,
                            ctx.fq.neg(ctx.xi),
                        )
                    };
                    assert_eq!(class(&ctx, &z), want, "β m={m} l={l}");
                }
            } else {
                for m in 0..=1u32 {
                    for l in 0..=m {
                        let z = ev.eval(&omega_sym(&ip, n, m, l).unwrap()).unwrap();
                        assert_eq!(
                            class(&ctx, &z),
                            omega_prediction(&ctx, &ip, n, m, l),
                            "ω m={m} l={l}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kappa_in_omega_band_matches_omega() {
        for (p, n) in [(3i64, 3u32), (5, 3), (3, 4)] {
            let ip = IndexParams::new(p, p - 1).unwrap();
            let e = ip.e_of(n);
            let mut i = e + p - 1;
            while i < pow_sat(p, n) {
                for m in 0..n - 1 {
                    if kappa_is_omega(&ip, n, m, i) {
                        let sg = ip.sigma(m + 1, i).unwrap();
                        let k4 = kappa_n_sym(&ip, n, m, i).unwrap();
                        let om = omega_sym(&ip, n, m, m - sg).unwrap();
                        let mut a = k4.terms.clone();
                        let mut b = om.terms.clone();
                        a.sort_by_key(|t| (t.rho, t.t));
                        b.sort_by_key(|t| (t.rho, t.t));
                        assert_eq!(a, b, "p={p} n={n} m={m} i={i}");
                    }
                }
                i += p - 1;
            }
        }
    }

    #[test]
    fn gen_set_sizes() {
        for p in [3i64, 5] {
            for r in 2..=p {
                let ip = IndexParams::new(p, r).unwrap();
                for n in 2..=3u32 {
                    let mut i = r;
                    while i <= pow_sat(p, n) + 2 * ip.e_of(n) {
                        let s = gen_set_fin_sym(&ip, n, i).unwrap();
                        assert!(
                            s.len() <= n as usize + 1,
                            "p={p} r={r} n={n} i={i}: {}",
                            s.len()
                        );
                        i += p - 1;
                    }
                }
            }
        }
    }

    fn tower(p: u64, f: usize, n: u32, k: u32) -> (FnCtx, FnCtx) {
        (
            FnCtx::new(p, f, n, k).unwrap(),
            FnCtx::new(p, f, n + 1, k).unwrap(),
        )
    }

    #[test]
    fn trace_of_lambda_powers() {
        for p in [3u64, 5] {
            let (lo, hi) = tower(p, 1, 2, 5);
            for k in 1..=(p * p) as usize {
                for eps in 0..=1usize {
                    let tr =
                        crate::finlevel::trace_down(&hi, &lo, &hi.lambda_pow(p as usize * k - eps))
                            .unwrap();
                    let want = lo.scale_int(&lo.lambda_pow(k - eps), p);
                    assert!(
                        lo.divisible_by_p_power(&lo.sub_elem(&tr, &want), 3),
                        "p={p} k={k} ε={eps}"
                    );
                }
            }
        }
    }

    #[test]
    fn norms_of_binomials() {
        let p = 3u64;
        let (lo, hi) = tower(p, 2, 2, 9);
        let (pn, e) = (9usize, lo.e);
        let eta = hi.xi;
        let frob = |x| lo.fq.frob1(x);
        for t in 1..=pn + 3 * p as usize * 4 {
            let nz = crate::finlevel::norm_down(&hi, &lo, &hi.binomial(t, eta)).unwrap();
            let c = lo.classify(&nz);
            if t < pn - 1 {
                assert_eq!(class(&lo, &nz), (t, frob(eta)), "t={t}");
            } else if t == pn - 1 || t == pn {
                assert_eq!(class(&lo, &nz), (t, lo.fq.sub(frob(eta), eta)), "t={t}");
            } else if t % p as usize == 0 || t % p as usize == p as usize - 1 {
                let eps = (t % p as usize != 0) as usize;
                let k = (t + eps) / p as usize;
                assert_eq!(class(&lo, &nz), (e + k - eps, lo.fq.neg(eta)), "t={t}");
            } else {
                assert!(
                    c.depth().is_none_or(|d| d >= e + t / p as usize),
                    "t={t}: {c:?}"
                );
            }
        }
    }

    #[test]
    fn norm_lowers_depth_boundedly() {
        let p = 3u64;
        let (lo, hi) = tower(p, 2, 2, 9);
        let pn = 9usize;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..30usize {
            let i = pn + t;
            let bound = pn + t - (p as usize - 1) * ((t + 1) / p as usize);
            for _ in 0..6 {
                let mut z = hi.one();
                for d in i..i + 6 {
                    let c = FqElem(rng.gen_range(0..9));
                    z = hi.mul(&z, &hi.binomial(d, c));
                }
                // the index must be a jump of the r-eigenspace filtration
                for r in (2..=p as i64).filter(|r| (i as i64 - r) % (p as i64 - 1) == 0) {
                    let zr = hi.project_eigenspace(&z, r);
                    let nz = crate::finlevel::norm_down(&hi, &lo, &zr).unwrap();
                    assert!(
                        lo.classify(&nz).depth().is_none_or(|d| d >= bound),
                        "t={t} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_cell_r_is_p() {
        for (p, n) in [(3u64, 2u32), (5, 2)] {
            for f in [1usize, 2] {
                let ctx = FnCtx::new(p, f, n, 4).unwrap();
                let g = FinGenerators::build(&ctx, p as i64).unwrap();
                let wit = boundary_witness(&ctx, &g).unwrap();
                // p^n w_n = ζ^{p^n} = 1 when f = 1; otherwise it cancels the leading term of T^j u
                assert_eq!(wit.is_some(), f > 1, "p={p} f={f}: {wit:?}");
                if let Some((_, _, d)) = wit {
                    assert_eq!(d, (p as usize).pow(n) + p as usize - 1);
                }
            }
        }
    }
}
