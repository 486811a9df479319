//! Generation, minimality and relation checks at level n, on the finite quotient
//! X = L/W of L = A u_{n,r} (⊕ Z_p[Φ]v for r = p−1, ⊕ Z_p[Φ]w_n for r = p).

use serde::Serialize;

use super::gens::{gen_set_fin_sym, FinEvaluator, FinGenerators};
use super::{FinError, FnCtx, FnUnit};
use crate::groupring::{fn_poly, Gen, IwasawaElem, PhiGroupElem, SymElem};
use crate::indexfn::{ceil_log, pow_sat, IndexParams};
use crate::inflevel::s_eff;
use crate::inflevel::span::{w_unneeded_predicted, Verdict};
use crate::modlinalg::{solve, RowModule, ZkMatrix};
use crate::normfield::FiltrationClass;
use crate::padic::{invmod, modulus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extra {
    None,
    V,
    W,
}

fn depth(ctx: &FnCtx, z: &FnUnit, top: usize) -> usize {
    match ctx.classify(z) {
        FiltrationClass::Depth { i, .. } => i.min(top),
        _ => top,
    }
}

struct Pivot {
    depth: usize,
    x: Vec<u64>,
    pos: usize,
    val: u32,
    /// z^{−e} for e = 1..p−1
    inv_pows: Vec<FnUnit>,
}

struct Builder<'c> {
    ctx: &'c FnCtx,
    md: u64,
    top: usize,
    pivots: Vec<Pivot>,
    by_depth: Vec<Vec<usize>>,
    relations: RowModule,
}

impl Builder<'_> {
    fn insert(&mut self, x: Vec<u64>, z: FnUnit) -> Result<(), FinError> {
        let ctx = self.ctx;
        let p = ctx.p;
        let mut queue = vec![(x, z)];
        while let Some((mut x, mut z)) = queue.pop() {
            loop {
                let d = depth(ctx, &z, self.top);
                if d >= self.top {
                    self.relations.insert(&x);
                    break;
                }
                let mut c = ctx.fq.coeffs(ctx.coeff_at(&z, d)?);
                for &pi in &self.by_depth[d] {
                    let pv = &self.pivots[pi];
                    let e = c[pv.pos] as u64 * invmod(pv.val as u64, p).unwrap() % p;
                    if e == 0 {
                        continue;
                    }
                    for (xt, &pt) in x.iter_mut().zip(&pv.x) {
                        *xt = (*xt + self.md - pt * e % self.md) % self.md;
                    }
                    z = ctx.mul(&z, &pv.inv_pows[e as usize - 1]);
                    if depth(ctx, &z, self.top) > d {
                        c = vec![0; c.len()];
                        break;
                    }
                    c = ctx.fq.coeffs(ctx.coeff_at(&z, d)?);
                }
                if c.iter().all(|&v| v == 0) {
                    continue;
                }
                let pos = c.iter().position(|&v| v != 0).unwrap();
                let inv1 = ctx.inv(&z);
                let mut inv_pows = vec![inv1.clone()];
                for _ in 2..p {
                    inv_pows.push(ctx.mul(inv_pows.last().unwrap(), &inv1));
                }
                let px: Vec<u64> = x.iter().map(|&v| v * p % self.md).collect();
                let pz = ctx.int_pow(&z, p as i64);
                self.by_depth[d].push(self.pivots.len());
                self.pivots.push(Pivot {
                    depth: d,
                    x,
                    pos,
                    val: c[pos],
                    inv_pows,
                });
                if px.iter().any(|&v| v != 0) {
                    queue.push((px, pz));
                }
                break;
            }
        }
        Ok(())
    }
}

/// V_{n,i}/W inside X for every i < top, from one filtered pass over h: X → V_{n,1}/V_{n,top}.
pub struct FinModel {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    pub r: i64,
    pub a: u32,
    pub b: usize,
    pub top: usize,
    pub dim: usize,
    pub extra: Extra,
    pivots: Vec<(usize, Vec<u64>)>,
    relations: RowModule,
}

impl FinModel {
    pub fn build(ctx: &FnCtx, gens: &FinGenerators, top: usize) -> Result<Self, FinError> {
        if ctx.usable() < top {
            return Err(FinError::Precision(format!(
                "usable depth {} < {top}",
                ctx.usable()
            )));
        }
        let (p, f) = (ctx.p, ctx.f);
        let extra_gen = match (&gens.v, &gens.w) {
            (Some(v), _) => Some((Extra::V, v.clone())),
            (_, Some(w)) => Some((Extra::W, w.clone())),
            _ => None,
        };
        let extra = extra_gen.as_ref().map_or(Extra::None, |e| e.0);
        let mut ev = FinEvaluator::new(ctx, gens);
        let mut b = 0usize;
        while depth(ctx, &ev.t_power(Gen::U, b)?, top) < top {
            b += 1;
        }
        let b = b.max(1);
        // least a with p^a·g ∈ V_top for each generator g
        let mut a = 1u32;
        for g in std::iter::once(&gens.u).chain(extra_gen.as_ref().map(|e| &e.1)) {
            let mut z = ctx.int_pow(g, p as i64);
            let mut k = 1u32;
            while depth(ctx, &z, top) < top {
                z = ctx.int_pow(&z, p as i64);
                k += 1;
            }
            a = a.max(k);
        }
        let dim = f * b + if extra == Extra::None { 0 } else { f };
        let md = modulus(p, a);
        let mut bld = Builder {
            ctx,
            md,
            top,
            pivots: vec![],
            by_depth: vec![vec![]; top],
            relations: RowModule::new(dim, p, a),
        };
        let mut basis: Vec<(usize, FnUnit)> = vec![];
        for e in 0..b {
            let te = ev.t_power(Gen::U, e)?;
            for k in 0..f {
                basis.push((k * b + e, ctx.act_phi(&te, k as i64)));
            }
        }
        if let Some((_, g)) = &extra_gen {
            for k in 0..f {
                basis.push((f * b + k, ctx.act_phi(g, k as i64)));
            }
        }
        for (idx, z) in basis {
            let mut x = vec![0u64; dim];
            x[idx] = 1;
            bld.insert(x, z)?;
        }
        let pivots = bld.pivots.into_iter().map(|pv| (pv.depth, pv.x)).collect();
        Ok(FinModel {
            p,
            f,
            n: ctx.n,
            r: gens.r,
            a,
            b,
            top,
            dim,
            extra,
            pivots,
            relations: bld.relations,
        })
    }

    pub fn modulus(&self) -> u64 {
        modulus(self.p, self.a)
    }

    /// log_p |h(X)| and log_p |V_{n,1}/V_{n,top}|; equal iff L surjects onto V_{n,1} mod V_{n,top}.
    pub fn image_vs_expected(&self) -> (u64, u64) {
        let pm1 = self.p as usize - 1;
        let r = self.r as usize % pm1;
        let depths = (1..self.top).filter(|d| d % pm1 == r).count();
        (self.pivots.len() as u64, (depths * self.f) as u64)
    }

    pub fn k_module(&self, i: usize) -> RowModule {
        let mut m = self.relations.clone();
        for (d, x) in &self.pivots {
            if *d >= i {
                m.insert(x);
            }
        }
        m
    }

    pub fn t_apply(&self, v: &[u64]) -> Vec<u64> {
        let (f, b, md) = (self.f, self.b, self.modulus());
        let mut out = vec![0u64; self.dim];
        for k in 0..f {
            for e in 0..b - 1 {
                out[k * b + e + 1] = v[k * b + e];
            }
        }
        if self.extra == Extra::W {
            // T(φ^k w_n) = pφ^k w_n + φ^{k+1}u − φ^k u
            for k in 0..f {
                let c = v[f * b + k];
                out[f * b + k] = (out[f * b + k] + c * self.p) % md;
                let k1 = (k + 1) % f;
                out[k1 * b] = (out[k1 * b] + c) % md;
                out[k * b] = (out[k * b] + md - c) % md;
            }
        }
        out
    }

    pub fn phi_apply(&self, v: &[u64]) -> Vec<u64> {
        let (f, b) = (self.f, self.b);
        let mut out = vec![0u64; self.dim];
        for k in 0..f {
            let k1 = (k + 1) % f;
            for e in 0..b {
                out[k1 * b + e] = v[k * b + e];
            }
            if self.extra != Extra::None {
                out[f * b + k1] = v[f * b + k];
            }
        }
        out
    }

    fn add_phi(&self, v: &mut [u64], c: &PhiGroupElem, base: usize, stride: usize) {
        let md = self.modulus();
        for (k, ck) in c.coeffs.iter().enumerate() {
            v[base + k * stride] = (v[base + k * stride] + ck.residue % md) % md;
        }
    }

    pub fn vector_of(&self, s: &SymElem) -> Vec<u64> {
        let (p, f, a, b, md) = (self.p, self.f, self.a, self.b, self.modulus());
        let mut v = vec![0u64; self.dim];
        let cu = s.coefficient(Gen::U, p, f, a, b);
        for (e, c) in cu.coeffs.iter().enumerate() {
            self.add_phi(&mut v, c, e, b);
        }
        let bound = s.max_t() as usize + 1;
        match self.extra {
            Extra::V => {
                // T kills v
                let cv = s.coefficient(Gen::V, p, f, a, bound);
                if let Some(c) = cv.coeffs.first() {
                    self.add_phi(&mut v, c, f * b, 1);
                }
            }
            Extra::W => {
                let cw = s.coefficient(Gen::W, p, f, a, bound);
                for (t, c) in cw.coeffs.iter().enumerate() {
                    let mut add = vec![0u64; self.dim];
                    self.add_phi(&mut add, c, f * b, 1);
                    for _ in 0..t {
                        add = self.t_apply(&add);
                    }
                    v.iter_mut().zip(add).for_each(|(x, y)| *x = (*x + y) % md);
                }
            }
            Extra::None => {}
        }
        v
    }

    pub fn tester(&self, i: usize) -> FinTester {
        let k = self.k_module(i);
        let mut jk = self.relations.clone();
        let md = self.modulus();
        for g in k.canonical_rows() {
            jk.insert(&g.iter().map(|&x| x * self.p % md).collect::<Vec<_>>());
            jk.insert(&self.t_apply(&g));
        }
        FinTester { k, jk }
    }
}

/// Nakayama test for V_{n,i}: S generates iff Z_p[Φ]S + J·V_{n,i} = V_{n,i} in X.
pub struct FinTester {
    k: RowModule,
    jk: RowModule,
}

impl FinTester {
    pub fn contains(&self, v: &[u64]) -> bool {
        self.k.contains(v)
    }

    pub fn check(&self, model: &FinModel, set: &[Vec<u64>]) -> Verdict {
        if let Some(index) = set.iter().position(|v| !self.k.contains(v)) {
            return Verdict::NotContained { index };
        }
        let mut m = self.jk.clone();
        for v in set {
            let mut x = v.clone();
            for _ in 0..model.f {
                m.insert(&x);
                x = model.phi_apply(&x);
            }
        }
        let missing = self.k.log_size() - m.log_size();
        if missing == 0 {
            Verdict::Generates
        } else {
            Verdict::Fails { missing }
        }
    }
}

/// Smallest model depth valid for every index up to imax: V_{n,j+e_n} = V_{n,j}^p ⊆ J·V_{n,i}
/// once j = max(i, p^{n−1}+1).
pub fn fin_top(ip: &IndexParams, n: u32, imax: i64) -> usize {
    (imax.max(pow_sat(ip.p, n - 1) + 1) + ip.e_of(n)) as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct FinGenReport {
    pub n: u32,
    pub i: i64,
    pub size: usize,
    pub full: Verdict,
    /// sizes of the generating subsets found by exhaustive search
    pub generating_subsets: Vec<Vec<usize>>,
    /// largest cocardinality of a generating subset
    pub max_cocardinality: usize,
    /// r = p: every generating subset contains all κ-terms
    pub kappas_necessary: Option<bool>,
    /// r = p: (w_n-term found necessary, predicted necessary)
    pub w_needed: Option<(bool, bool)>,
    /// r = p−1, i ≤ e_n: whether the v-term was found necessary
    pub v_needed: Option<bool>,
}

impl FinGenReport {
    pub fn consistent(&self) -> bool {
        self.full == Verdict::Generates
            && self.max_cocardinality <= 1
            && self.kappas_necessary != Some(false)
            && self.w_needed.is_none_or(|(seen, want)| seen == want)
            && self.v_needed != Some(false)
    }
}

/// Generation of S_{n,i} and exhaustive search over its subsets.
pub fn generation_report_n(
    model: &FinModel,
    ip: &IndexParams,
    i: i64,
) -> Result<FinGenReport, FinError> {
    let n = model.n;
    let syms = gen_set_fin_sym(ip, n, i)?;
    let vecs: Vec<Vec<u64>> = syms.iter().map(|s| model.vector_of(s)).collect();
    let tester = model.tester(i as usize);
    let full = tester.check(model, &vecs);
    let size = vecs.len();
    let mut generating_subsets = vec![];
    for mask in 0u32..(1 << size) {
        let sub: Vec<Vec<u64>> = (0..size)
            .filter(|t| mask >> t & 1 == 1)
            .map(|t| vecs[t].clone())
            .collect();
        if tester.check(model, &sub) == Verdict::Generates {
            generating_subsets.push((0..size).filter(|t| mask >> t & 1 == 1).collect::<Vec<_>>());
        }
    }
    let max_cocardinality = generating_subsets
        .iter()
        .map(|s| size - s.len())
        .max()
        .unwrap_or(0);
    let nk = syms
        .iter()
        .filter(|s| s.terms.iter().any(|t| t.gen == Gen::U))
        .count();
    let mu = ip.mu_of(n, i);
    let i0 = i - mu * ip.e_of(n);
    let kappas_necessary = (ip.delta == 1).then(|| {
        generating_subsets
            .iter()
            .all(|s| (0..nk).all(|k| s.contains(&k)))
    });
    let w_needed = (ip.delta == 1).then(|| {
        let seen = generating_subsets.iter().all(|s| s.contains(&(size - 1)));
        (seen, w_needed_predicted_n(ip, n, i0))
    });
    let has_v = ip.r == ip.p - 1 && i <= (mu + 1) * ip.e_of(n);
    let v_needed = (has_v && i0 <= ip.e_of(n))
        .then(|| generating_subsets.iter().all(|s| s.contains(&(size - 1))));
    Ok(FinGenReport {
        n,
        i,
        size,
        full,
        generating_subsets,
        max_cocardinality,
        kappas_necessary,
        w_needed,
        v_needed,
    })
}

/// r = p, i ≤ p^n: the infinite-level criterion (w needed iff i_s ≠ p+1), except that
/// p^n w_n ∈ A_n u_{n,p} makes the term p^{⌈log_p i⌉}w_n redundant once ⌈log_p i⌉ = n.
pub fn w_needed_predicted_n(ip: &IndexParams, n: u32, i: i64) -> bool {
    ceil_log(ip.p, i) < n && !w_unneeded_predicted(ip, i)
}

/// Sweep i ≡ r mod p−1 up to imax at level n; one model serves every i.
pub fn finite_sweep(
    p: u64,
    f: usize,
    n: u32,
    r: i64,
    imax: i64,
) -> Result<Vec<FinGenReport>, FinError> {
    let ip = IndexParams::new(p as i64, r)?;
    let top = fin_top(&ip, n, imax);
    let ctx = FnCtx::new(p, f, n, FnCtx::precision_for(p, n, top))?;
    let gens = FinGenerators::build(&ctx, r)?;
    let model = FinModel::build(&ctx, &gens, top)?;
    let (img, want) = model.image_vs_expected();
    if img != want {
        return Err(FinError::Precondition(format!(
            "generators reach p^{img} of p^{want} classes"
        )));
    }
    let mut out = vec![];
    let mut i = r;
    while i <= imax {
        out.push(generation_report_n(&model, &ip, i)?);
        i += p as i64 - 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FinKernelReport {
    pub n: u32,
    pub i: i64,
    pub a: u32,
    pub b: usize,
    pub kernel_generators: usize,
    /// (k, e): T^e-coefficient of c_k mod (p, φ−1) nonzero below T^{ε_k}
    pub violations: Vec<(u32, usize)>,
    /// q_k mod p where determined; None when every solution has b ∈ I
    pub q: Vec<Option<u64>>,
    /// k whose q_k disagrees between two solutions
    pub inconsistent: Vec<u32>,
}

/// Solutions of Σ c_m κ_{n,m,i} = b f_n u_{n,r} over A/(p^a, T^b), r ≤ p−2, checked against
/// c_k ≡ q_k b T^{ε_k} mod (p, T^{1+ε_k}, φ−1) with q_k independent of the solution.
pub fn relation_kernel_n(
    ip: &IndexParams,
    f: usize,
    n: u32,
    i: i64,
    a: u32,
    bnd: usize,
) -> Result<FinKernelReport, FinError> {
    if ip.r > ip.p - 2 {
        return Err(FinError::Range("relation_kernel_n needs r ≤ p−2".into()));
    }
    if i > pow_sat(ip.p, n) {
        return Err(FinError::Range("needs i ≤ p^n".into()));
    }
    let p = ip.p as u64;
    let deg = pow_sat(ip.p, n - 1) as usize;
    if bnd < deg + 2 {
        return Err(FinError::Range(format!("T-bound must be ≥ {}", deg + 2)));
    }
    let s = s_eff(ip, i);
    let fnp = fn_poly(p, f, a, n, bnd).map_err(|e| FinError::Range(e.to_string()))?;
    let mut gm: Vec<IwasawaElem> = (0..=s)
        .map(|m| Ok(super::gens::kappa_n_sym(ip, n, m, i)?.coefficient(Gen::U, p, f, a, bnd)))
        .collect::<Result<_, FinError>>()?;
    gm.push(fnp);
    let blocks = gm.len();
    let cols = blocks * f * bnd;
    let rows = f * bnd;
    let mut mat = ZkMatrix::zeros(rows, cols, p, a);
    for (m, g) in gm.iter().enumerate() {
        for k in 0..f {
            for e in 0..bnd {
                let mono =
                    IwasawaElem::monomial(PhiGroupElem::monomial(p, f, a, 1, k as i64), e, bnd);
                let prod = mono.mul(g);
                let col = (m * f + k) * bnd + e;
                for (d, c) in prod.coeffs.iter().enumerate() {
                    for (kk, ck) in c.coeffs.iter().enumerate() {
                        mat.set(kk * bnd + d, col, ck.residue);
                    }
                }
            }
        }
    }
    let sol = solve(&mat, &vec![0; rows]).map_err(|e| FinError::Range(e.to_string()))?;
    // coefficient of T^e in block m, reduced mod (p, φ−1)
    let coef = |v: &[u64], m: usize, e: usize| {
        (0..f).map(|k| v[(m * f + k) * bnd + e] % p).sum::<u64>() % p
    };
    let mut violations = vec![];
    let mut q: Vec<Option<u64>> = vec![None; s as usize + 1];
    let mut inconsistent = vec![];
    let mut pairs: Vec<Vec<(u64, u64)>> = vec![vec![]; s as usize + 1];
    for v in &sol.kernel {
        // the relation reads Σ c_m κ_m − b f_n = 0
        let b0 = (p - coef(v, blocks - 1, 0)) % p;
        for m in 0..=s as usize {
            let eps = ip.epsilon_m(m as u32, i) as usize;
            for e in 0..eps {
                if coef(v, m, e) != 0 {
                    violations.push((m as u32, e));
                }
            }
            pairs[m].push((coef(v, m, eps), b0));
        }
    }
    // q_k solves c = q·b0 on every solution; kernel vectors span, so test linear consistency
    for (m, pr) in pairs.iter().enumerate() {
        let mut qk: Option<u64> = None;
        let mut ok = true;
        for &(c, b0) in pr {
            if b0 == 0 {
                ok &= c == 0;
                continue;
            }
            let val = c * invmod(b0, p).unwrap() % p;
            match qk {
                None => qk = Some(val),
                Some(x) => ok &= x == val,
            }
        }
        if !ok {
            inconsistent.push(m as u32);
        }
        q[m] = qk;
    }
    Ok(FinKernelReport {
        n,
        i,
        a,
        b: bnd,
        kernel_generators: sol.kernel.len(),
        violations,
        q,
        inconsistent,
    })
}

/// Default truncation for relation_kernel_n: a = s + 2, b = p^{n−1} + max θ_m(i) + 2.
pub fn kernel_bounds_n(ip: &IndexParams, n: u32, i: i64) -> (u32, usize) {
    let s = s_eff(ip, i);
    let tmax = (0..=s).map(|m| ip.theta_m(m, i)).max().unwrap_or(0);
    (s + 2, (pow_sat(ip.p, n - 1) + tmax + 2) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_n2() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1)] {
            let ip_max = (p * p + p * (p - 1)) as i64;
            for r in 2..=p as i64 {
                for rep in finite_sweep(p, f, 2, r, ip_max).unwrap() {
                    assert!(rep.consistent(), "p={p} f={f} r={r}: {rep:?}");
                }
            }
        }
    }

    #[test]
    fn sweep_p3_n3_r_is_p() {
        for rep in finite_sweep(3, 1, 3, 3, 45).unwrap() {
            assert!(rep.consistent(), "{rep:?}");
        }
    }

    #[test]
    fn empty_set_fails() {
        let ip = IndexParams::new(3, 2).unwrap();
        let top = fin_top(&ip, 2, 10);
        let ctx = FnCtx::new(3, 1, 2, FnCtx::precision_for(3, 2, top)).unwrap();
        let g = FinGenerators::build(&ctx, 2).unwrap();
        let model = FinModel::build(&ctx, &g, top).unwrap();
        assert!(matches!(
            model.tester(4).check(&model, &[]),
            Verdict::Fails { .. }
        ));
    }

    #[test]
    fn kernel_congruences_match_removable_elements() {
        for (p, f) in [(3i64, 1usize), (5, 1), (5, 2)] {
            for r in 2..=p - 2 {
                let ip = IndexParams::new(p, r).unwrap();
                let reps = finite_sweep(p as u64, f, 2, r, p * p).unwrap();
                for rep in reps {
                    let (a, b) = kernel_bounds_n(&ip, 2, rep.i);
                    let ker = relation_kernel_n(&ip, f, 2, rep.i, a, b).unwrap();
                    assert!(
                        ker.violations.is_empty() && ker.inconsistent.is_empty(),
                        "p={p} r={r}: {ker:?}"
                    );
                    if rep.i <= p * r {
                        assert_eq!(rep.generating_subsets.len(), 1, "p={p} r={r} i={}", rep.i);
                    }
                    // a κ_k that can be dropped needs ε_k = 0 and p ∤ q_k
                    for k in 0..rep.size {
                        let droppable = rep.generating_subsets.iter().any(|s| !s.contains(&k));
                        if droppable {
                            assert_eq!(
                                ip.epsilon_m(k as u32, rep.i),
                                0,
                                "p={p} r={r} i={} k={k}",
                                rep.i
                            );
                            assert!(
                                ker.q[k].is_some_and(|q| q != 0),
                                "p={p} r={r} i={} k={k}: {ker:?}",
                                rep.i
                            );
                        }
                    }
                }
            }
        }
    }
}
