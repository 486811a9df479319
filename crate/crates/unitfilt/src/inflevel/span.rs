//! Generation and relation checks on the finite quotient X = L/W of the unit module
//! L = Au (⊕ Z_p[Φ]w when r = p), with W = (p^a, T^b)u ⊕ p^a w chosen inside J·V_i.

use serde::Serialize;

use crate::fq::{FqContext, FqElem};
use crate::groupring::{Gen, IwasawaElem, PhiGroupElem, SymElem};
use crate::indexfn::IndexParams;
use crate::modlinalg::{solve, RowModule, ZkMatrix};
use crate::padic::modulus;

use super::{gen_set_sym, kappa_sym, s_eff, Evaluator, GeneratorSet, InfError};
use crate::normfield::NormCtx;

/// z ← z·y mod λ^top for z, y ≡ 1 mod λ^d.
fn mul_from(fq: &FqContext, z: &mut [FqElem], y: &[FqElem], d: usize) {
    let top = z.len();
    for t in (d..top).rev() {
        let mut acc = fq.add(z[t], y[t]);
        let mut i = d;
        while i + d <= t {
            if !z[i].is_zero() && !y[t - i].is_zero() {
                acc = fq.add(acc, fq.mul(z[i], y[t - i]));
            }
            i += 1;
        }
        z[t] = acc;
    }
}

fn series_inv(fq: &FqContext, a: &[FqElem]) -> Vec<FqElem> {
    let n = a.len();
    let mut b = vec![FqElem::ZERO; n];
    b[0] = FqElem::ONE;
    for t in 1..n {
        let mut s = FqElem::ZERO;
        for j in 1..=t {
            if !a[j].is_zero() {
                s = fq.add(s, fq.mul(a[j], b[t - j]));
            }
        }
        b[t] = fq.neg(s);
    }
    b
}

/// z^p in characteristic p.
fn frob_power(fq: &FqContext, z: &[FqElem], p: usize) -> Vec<FqElem> {
    let mut out = vec![FqElem::ZERO; z.len()];
    out[0] = FqElem::ONE;
    let mut t = 1;
    while t * p < z.len() {
        out[t * p] = fq.frob1(z[t]);
        t += 1;
    }
    out
}

fn depth_of(z: &[FqElem]) -> usize {
    z.iter()
        .skip(1)
        .position(|c| !c.is_zero())
        .map_or(z.len(), |d| d + 1)
}

struct Pivot {
    depth: usize,
    x: Vec<u64>,
    /// F_p-coordinate carrying this pivot's leading coefficient, and its value there
    pos: usize,
    val: u32,
    /// h(x)^{−e} for e = 1..p−1
    inv_pows: Vec<Vec<FqElem>>,
}

/// V_i/W inside X for every i ≤ top, from one filtered pass over h: X → U_1/U_top.
pub struct QuotientModel {
    pub p: u64,
    pub f: usize,
    pub r: i64,
    pub a: u32,
    pub b: usize,
    pub top: usize,
    pub dim: usize,
    has_w: bool,
    /// (depth of h(x), x); K_i is spanned by the relations and the entries of depth ≥ i
    pivots: Vec<(usize, Vec<u64>)>,
    relations: RowModule,
}

struct Builder<'c> {
    fq: &'c FqContext,
    p: u64,
    md: u64,
    top: usize,
    pivots: Vec<Pivot>,
    by_depth: Vec<Vec<usize>>,
    relations: RowModule,
}

impl Builder<'_> {
    fn insert(&mut self, x: Vec<u64>, z: Vec<FqElem>) {
        let mut queue = vec![(x, z)];
        while let Some((mut x, mut z)) = queue.pop() {
            loop {
                let d = depth_of(&z);
                if d >= self.top {
                    self.relations.insert(&x);
                    break;
                }
                let mut c = self.fq.coeffs(z[d]);
                for &pi in &self.by_depth[d] {
                    let pv = &self.pivots[pi];
                    let e = (c[pv.pos] as u64
                        * crate::padic::invmod(pv.val as u64, self.p).unwrap())
                        % self.p;
                    if e == 0 {
                        continue;
                    }
                    for (xt, &pt) in x.iter_mut().zip(&pv.x) {
                        *xt = (*xt + self.md - (pt * e) % self.md) % self.md;
                    }
                    mul_from(self.fq, &mut z, &pv.inv_pows[e as usize - 1], d);
                    c = self.fq.coeffs(z[d]);
                }
                if c.iter().all(|&v| v == 0) {
                    continue;
                }
                let pos = c.iter().position(|&v| v != 0).unwrap();
                let inv1 = series_inv(self.fq, &z);
                let mut inv_pows = vec![inv1.clone()];
                for _ in 2..self.p {
                    let mut nx = inv_pows.last().unwrap().clone();
                    mul_from(self.fq, &mut nx, &inv1, d);
                    inv_pows.push(nx);
                }
                let px: Vec<u64> = x.iter().map(|&v| v * self.p % self.md).collect();
                let pz = frob_power(self.fq, &z, self.p as usize);
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
    }
}

impl QuotientModel {
    /// Model good for all i ≤ imax; ctx.n must exceed imax.
    pub fn build(ctx: &NormCtx, gens: &GeneratorSet, imax: usize) -> Result<Self, InfError> {
        let top = imax + 1;
        if ctx.n < top {
            return Err(InfError::Precision {
                need: top,
                have: ctx.n,
            });
        }
        let p = ctx.p;
        let f = ctx.fq.f;
        let has_w = gens.w.is_some();
        let mut ev = Evaluator::new(ctx, gens);
        // b − 1 = least t with T^t u ∈ V_imax
        let mut t = 0usize;
        while depth_of(&ev.t_power(Gen::U, t)?.coeffs[..top]) < imax {
            t += 1;
        }
        let b = t + 1;
        let dmin = if has_w { 1 } else { gens.r as u64 };
        let mut a = 1u32;
        while p.pow(a - 1) * dmin < imax as u64 {
            a += 1;
        }
        let dim = f * b + if has_w { f } else { 0 };
        let md = modulus(p, a);
        let mut bld = Builder {
            fq: &ctx.fq,
            p,
            md,
            top,
            pivots: vec![],
            by_depth: vec![vec![]; top],
            relations: RowModule::new(dim, p, a),
        };
        let mut basis: Vec<(usize, Vec<FqElem>)> = vec![];
        for e in 0..b {
            let te = ev.t_power(Gen::U, e)?.clone();
            for k in 0..f {
                basis.push((k * b + e, ctx.act_phi(&te, k as i64).coeffs[..top].to_vec()));
            }
        }
        if let Some(w) = &gens.w {
            for k in 0..f {
                basis.push((f * b + k, ctx.act_phi(w, k as i64).coeffs[..top].to_vec()));
            }
        }
        for (idx, z) in basis {
            let mut x = vec![0u64; dim];
            x[idx] = 1;
            bld.insert(x, z);
        }
        let pivots = bld.pivots.into_iter().map(|pv| (pv.depth, pv.x)).collect();
        Ok(QuotientModel {
            p,
            f,
            r: gens.r,
            a,
            b,
            top,
            dim,
            has_w,
            pivots,
            relations: bld.relations,
        })
    }

    pub fn modulus(&self) -> u64 {
        modulus(self.p, self.a)
    }

    /// V_i/W as a subgroup of X.
    pub fn k_module(&self, i: usize) -> RowModule {
        let mut m = self.relations.clone();
        for (d, x) in &self.pivots {
            if *d >= i {
                m.insert(x);
            }
        }
        m
    }

    /// log_p |V_i/W|.
    pub fn log_size(&self, i: usize) -> u64 {
        self.k_module(i).log_size()
    }

    pub fn t_apply(&self, v: &[u64]) -> Vec<u64> {
        let (f, b, md) = (self.f, self.b, self.modulus());
        let mut out = vec![0u64; self.dim];
        for k in 0..f {
            for e in 0..b - 1 {
                out[k * b + e + 1] = v[k * b + e];
            }
        }
        if self.has_w {
            // T(φ^k w) = pφ^k w + φ^{k+1}u − φ^k u
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
            if self.has_w {
                out[f * b + k1] = v[f * b + k];
            }
        }
        out
    }

    fn phi_coeff_vec(&self, c: &PhiGroupElem, gen: Gen, deg: usize) -> Vec<u64> {
        let mut v = vec![0u64; self.dim];
        for (k, ck) in c.coeffs.iter().enumerate() {
            match gen {
                Gen::U if deg < self.b => v[k * self.b + deg] = ck.residue,
                Gen::W => v[self.f * self.b + k] = ck.residue,
                _ => {}
            }
        }
        v
    }

    /// Coordinates of a symbolic element of L in X.
    pub fn vector_of(&self, s: &SymElem) -> Vec<u64> {
        let md = self.modulus();
        let cu = s.coefficient(Gen::U, self.p, self.f, self.a, self.b);
        let mut v = vec![0u64; self.dim];
        for (e, c) in cu.coeffs.iter().enumerate() {
            let add = self.phi_coeff_vec(c, Gen::U, e);
            v.iter_mut().zip(add).for_each(|(x, y)| *x = (*x + y) % md);
        }
        if self.has_w {
            let bound = s.max_t() as usize + 1;
            let cw = s.coefficient(Gen::W, self.p, self.f, self.a, bound);
            for (t, c) in cw.coeffs.iter().enumerate() {
                let mut add = self.phi_coeff_vec(c, Gen::W, 0);
                for _ in 0..t {
                    add = self.t_apply(&add);
                }
                v.iter_mut().zip(add).for_each(|(x, y)| *x = (*x + y) % md);
            }
        }
        v
    }

    pub fn tester(&self, i: usize) -> GenTester {
        let k = self.k_module(i);
        let mut jk = RowModule::new(self.dim, self.p, self.a);
        let md = self.modulus();
        for g in k.canonical_rows() {
            jk.insert(&g.iter().map(|&x| x * self.p % md).collect::<Vec<_>>());
            jk.insert(&self.t_apply(&g));
        }
        GenTester { i, k, jk }
    }
}

/// Nakayama test for V_i: S generates iff Z_p[Φ]S + J·V_i = V_i in X.
pub struct GenTester {
    pub i: usize,
    k: RowModule,
    jk: RowModule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Generates,
    /// Spans a subgroup of the stated log_p-index in V_i/J·V_i.
    Fails {
        missing: u64,
    },
    /// Some element does not lie in V_i.
    NotContained {
        index: usize,
    },
}

impl GenTester {
    pub fn contains(&self, v: &[u64]) -> bool {
        self.k.contains(v)
    }

    pub fn quotient_rank(&self) -> u64 {
        self.k.log_size() - self.jk.log_size()
    }

    pub fn check(&self, model: &QuotientModel, set: &[Vec<u64>]) -> Verdict {
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

#[derive(Clone, Debug, Serialize)]
pub struct GenReport {
    pub i: i64,
    pub s: u32,
    pub full: Verdict,
    /// verdict with κ_m removed (w-term kept when r = p)
    pub drop_one: Vec<Verdict>,
    /// r = p: whether S_i without the w-term generates, and whether i_s = p + 1
    pub without_w: Option<(bool, bool)>,
}

impl GenReport {
    /// Generation plus the minimality statements for this i.
    pub fn consistent(&self, r_is_p: bool) -> bool {
        let gens = self.full == Verdict::Generates;
        let minimal = self
            .drop_one
            .iter()
            .all(|v| matches!(v, Verdict::Fails { .. }));
        let wok = match self.without_w {
            Some((g, pred)) => g == pred,
            None => !r_is_p,
        };
        gens && minimal && wok
    }
}

/// generation_check for S_i and each S_i∖{κ_m}.
pub fn generation_report(
    model: &QuotientModel,
    ip: &IndexParams,
    i: i64,
) -> Result<GenReport, InfError> {
    let syms = gen_set_sym(ip, i)?;
    let vecs: Vec<Vec<u64>> = syms.iter().map(|s| model.vector_of(s)).collect();
    let tester = model.tester(i as usize);
    let full = tester.check(model, &vecs);
    let nk = s_eff(ip, i) as usize + 1;
    let drop_one = (0..nk)
        .map(|m| {
            let sub: Vec<Vec<u64>> = vecs
                .iter()
                .enumerate()
                .filter(|&(t, _)| t != m)
                .map(|(_, v)| v.clone())
                .collect();
            tester.check(model, &sub)
        })
        .collect();
    let without_w = (ip.delta == 1).then(|| {
        let g = tester.check(model, &vecs[..nk]) == Verdict::Generates;
        (g, w_unneeded_predicted(ip, i))
    });
    Ok(GenReport {
        i,
        s: nk as u32 - 1,
        full,
        drop_one,
        without_w,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub i: i64,
    pub a: u32,
    pub b: usize,
    /// log_p of the truncated relation module
    pub kernel_log_size: u64,
    pub kernel_generators: usize,
    /// (m, offending coefficient of T^e, e) for kernel vectors outside (p, T^{ε_m+1})
    pub violations: Vec<(u32, u64, usize)>,
    /// |X_m| (|X′_m| when r = p) for m = 0..s
    pub key_set_sizes: Vec<usize>,
}

/// σ′(k,i) = σ(k+1,i) when i_{k+1} = p^l + 1, else σ(k,i).
fn sigma_prime(ip: &IndexParams, k: u32, i: i64) -> Option<u32> {
    let kk = if ip.delta == 1 && ip.w_log(k, i).is_some() {
        k + 1
    } else {
        k
    };
    ip.sigma(kk, i).ok()
}

pub fn key_set(ip: &IndexParams, m: u32, i: i64) -> Vec<u32> {
    let s = s_eff(ip, i);
    (m + 1..=s)
        .filter(|&k| ip.epsilon_m(k, i) == 1 && sigma_prime(ip, k, i).is_some_and(|sg| sg <= m))
        .collect()
}

/// Relations Σ c_m κ_{m,i} = 0 over A/(p^a, T^b) (modulo A(φ−1)u and Z_p[Φ]w when r = p),
/// with a check that every c_m lies in (p, T^{ε_m(i)+1}).
pub fn relation_kernel(
    ip: &IndexParams,
    f: usize,
    i: i64,
    a: u32,
    b: usize,
) -> Result<KernelReport, InfError> {
    let p = ip.p as u64;
    let s = s_eff(ip, i);
    // modulo φ−1 only the augmentation survives
    let fe = if ip.delta == 1 { 1 } else { f };
    let gm: Vec<IwasawaElem> = (0..=s)
        .map(|m| {
            let c = kappa_sym(ip, m, i)?.coefficient(Gen::U, p, f, a, b);
            Ok(if fe == f { c } else { augment(&c, a, b) })
        })
        .collect::<Result<_, InfError>>()?;
    let cols = (s as usize + 1) * fe * b;
    let rows = fe * b;
    let mut mat = ZkMatrix::zeros(rows, cols, p, a);
    for (m, g) in gm.iter().enumerate() {
        for k in 0..fe {
            for e in 0..b {
                let mono =
                    IwasawaElem::monomial(PhiGroupElem::monomial(p, fe, a, 1, k as i64), e, b);
                let prod = mono.mul(g);
                let col = (m * fe + k) * b + e;
                for (d, c) in prod.coeffs.iter().enumerate() {
                    for (kk, ck) in c.coeffs.iter().enumerate() {
                        mat.set(kk * b + d, col, ck.residue);
                    }
                }
            }
        }
    }
    let sol = solve(&mat, &vec![0; rows]).map_err(|e| InfError::Range(e.to_string()))?;
    let mut kernel = RowModule::new(cols, p, a);
    let mut violations = vec![];
    for v in &sol.kernel {
        kernel.insert(v);
        for m in 0..=s {
            let eps = ip.epsilon_m(m, i) as usize;
            for k in 0..fe {
                for e in 0..=eps.min(b - 1) {
                    let c = v[(m as usize * fe + k) * b + e];
                    if c % p != 0 {
                        violations.push((m, c, e));
                    }
                }
            }
        }
    }
    let key_set_sizes = (0..=s).map(|m| key_set(ip, m, i).len()).collect();
    Ok(KernelReport {
        i,
        a,
        b,
        kernel_log_size: kernel.log_size(),
        kernel_generators: sol.kernel.len(),
        violations,
        key_set_sizes,
    })
}

fn augment(c: &IwasawaElem, a: u32, b: usize) -> IwasawaElem {
    let coeffs = c
        .coeffs
        .iter()
        .map(|g| {
            let s = g
                .coeffs
                .iter()
                .fold(g.coeffs[0].sub(&g.coeffs[0]), |acc, x| acc.add(x));
            PhiGroupElem {
                coeffs: vec![s.reduce(a)],
            }
        })
        .collect();
    IwasawaElem { coeffs, bound: b }
}

/// Default truncation for relation_kernel: a = s + 2, b = max θ_m(i) + 2.
pub fn kernel_bounds(ip: &IndexParams, i: i64) -> (u32, usize) {
    let s = s_eff(ip, i);
    let tmax = (0..=s).map(|m| ip.theta_m(m, i)).max().unwrap_or(0);
    (s + 2, (tmax + 2) as usize)
}

/// Whether i_s = p+1 (for r = p), the criterion for S_i alone generating.
pub fn w_unneeded_predicted(ip: &IndexParams, i: i64) -> bool {
    ip.i_ceil(s_eff(ip, i), i) == ip.p + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_generation_sweep() {
        for (p, f, imax) in [(3u64, 1usize, 60usize), (3, 2, 40), (5, 1, 60)] {
            let ctx = NormCtx::new(p, f, (imax + 1).max(3 * (p * p) as usize + 1));
            for r in 2..=p as i64 {
                let ip = IndexParams::new(p as i64, r).unwrap();
                let g = GeneratorSet::build(&ctx, r).unwrap();
                let model = QuotientModel::build(&ctx, &g, imax).unwrap();
                let mut i = r;
                while i as usize <= imax {
                    let rep = generation_report(&model, &ip, i).unwrap();
                    assert!(rep.consistent(r == p as i64), "p={p} f={f} r={r}: {rep:?}");
                    i += p as i64 - 1;
                }
            }
        }
    }

    #[test]
    fn empty_set_fails() {
        let ctx = NormCtx::new(3, 1, 40);
        let g = GeneratorSet::build(&ctx, 2).unwrap();
        let model = QuotientModel::build(&ctx, &g, 30).unwrap();
        assert!(matches!(
            model.tester(4).check(&model, &[]),
            Verdict::Fails { .. }
        ));
    }

    #[test]
    fn kernel_in_ideal() {
        for (p, r) in [(3i64, 2i64), (3, 3), (5, 2), (5, 3), (5, 5)] {
            let ip = IndexParams::new(p, r).unwrap();
            let mut i = r;
            while i <= 120 {
                let (a, b) = kernel_bounds(&ip, i);
                for (aa, bb) in [(a, b), (a + 1, b + p as usize - 1)] {
                    let rep = relation_kernel(&ip, 2, i, aa, bb).unwrap();
                    assert!(rep.violations.is_empty(), "p={p} r={r} i={i}: {rep:?}");
                }
                i += p - 1;
            }
        }
    }
}
