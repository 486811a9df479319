//! The pro-p completion D of F_q((λ))^× at λ-precision N, with the actions of
//! γ, Δ, φ and A = Z_p[Φ][[T]], eigenspace projection and depth classification.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fq::{FqContext, FqElem};
use crate::groupring::{epsilon_r_exponents, IwasawaElem, PhiGroupElem};
use crate::indexfn::ceil_log;
use crate::padic::{primitive_root, teichmuller, PadicInt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormError {
    #[error("p-adic precision {0} too small for λ-precision {1}")]
    Precision(u32, usize),
    #[error("element is not in the ω^{0} eigenspace")]
    NotEigen(i64),
    #[error("element is not a principal unit")]
    NotPrincipal,
}

/// λ^{val}·(1 + Σ_{i≥1} coeffs[i] λ^i) mod λ^N; coeffs[0] is always 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormFieldUnit {
    pub val: PadicInt,
    pub coeffs: Vec<FqElem>,
}

impl NormFieldUnit {
    pub fn lambda_precision(&self) -> usize {
        self.coeffs.len()
    }
    /// Index of the first nonzero coefficient past the constant, if any.
    pub fn depth(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .skip(1)
            .position(|c| !c.is_zero())
            .map(|d| d + 1)
    }
    pub fn is_one(&self) -> bool {
        self.val.is_zero() && self.depth().is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FiltrationClass {
    Depth {
        i: usize,
        leading: FqElem,
    },
    /// z ≡ 1 up to the usable precision
    Beyond {
        from: usize,
    },
    /// λ-exponent is nonzero
    NonUnit {
        val: PadicInt,
    },
}

impl FiltrationClass {
    pub fn depth(&self) -> Option<usize> {
        match self {
            FiltrationClass::Depth { i, .. } => Some(*i),
            _ => None,
        }
    }
    /// Whether the class certifies membership in U_i.
    pub fn at_least(&self, i: usize) -> bool {
        match self {
            FiltrationClass::Depth { i: d, .. } => *d >= i,
            FiltrationClass::Beyond { from } => *from >= i,
            FiltrationClass::NonUnit { .. } => false,
        }
    }
}

/// Shared context: F_q, λ-precision N, p-adic precision K, and the Δ substitution data.
pub struct NormCtx {
    pub fq: FqContext,
    pub p: u64,
    pub n: usize,
    pub k: u32,
    /// normal element of trace 1
    pub xi: FqElem,
    /// δ_d(λ) = 1 − (1−λ)^{ω(g^d)} for the least primitive root g
    delta_lambda: Vec<Vec<FqElem>>,
    /// δ_d(λ)/(ω(g^d) λ) as a principal unit
    delta_ratio: Vec<NormFieldUnit>,
}

impl NormCtx {
    pub fn new(p: u64, f: usize, n: usize) -> Self {
        let k = (ceil_log(p as i64, n as i64) + 2).max(4);
        Self::with_precision(p, f, n, k)
    }

    pub fn with_precision(p: u64, f: usize, n: usize, k: u32) -> Self {
        assert!(
            crate::padic::modulus(p, k) as u128 >= n as u128,
            "{}",
            NormError::Precision(k, n)
        );
        let fq = FqContext::new(p as u32, f).expect("valid field");
        let xi = fq.find_normal_xi();
        let mut ctx = NormCtx {
            fq,
            p,
            n,
            k,
            xi,
            delta_lambda: vec![],
            delta_ratio: vec![],
        };
        let g = primitive_root(p);
        let tg = teichmuller(p, g as i64, k).unwrap();
        for d in 0..p - 1 {
            let a = tg.pow(d);
            // one extra term so that the ratio is exact mod λ^N
            let one_minus = ctx.binomial_digit_product(&a, n + 1);
            let mut s: Vec<FqElem> = one_minus.iter().map(|&c| ctx.fq.neg(c)).collect();
            s[0] = FqElem::ZERO;
            let abar = ctx.fq.inv(s[1]).unwrap();
            let ratio: Vec<FqElem> = (0..n).map(|t| ctx.fq.mul(s[t + 1], abar)).collect();
            s.truncate(n);
            ctx.delta_lambda.push(s);
            ctx.delta_ratio.push(NormFieldUnit {
                val: PadicInt::zero(p, k),
                coeffs: ratio,
            });
        }
        ctx
    }

    /// (1−λ)^a = Π_t (1 − λ^{p^t})^{a_t} over the base-p digits of a.
    fn binomial_digit_product(&self, a: &PadicInt, len: usize) -> Vec<FqElem> {
        let mut acc = vec![FqElem::ZERO; len];
        acc[0] = FqElem::ONE;
        let mut pt = 1usize;
        for d in a.digits() {
            if pt >= len {
                break;
            }
            for _ in 0..d {
                // multiply by (1 − λ^{pt}) in place, high to low
                for idx in (pt..len).rev() {
                    acc[idx] = self.fq.sub(acc[idx], acc[idx - pt]);
                }
            }
            pt = pt.saturating_mul(self.p as usize);
        }
        acc
    }

    pub fn one(&self) -> NormFieldUnit {
        let mut coeffs = vec![FqElem::ZERO; self.n];
        coeffs[0] = FqElem::ONE;
        NormFieldUnit {
            val: PadicInt::zero(self.p, self.k),
            coeffs,
        }
    }

    /// λ itself.
    pub fn lambda(&self) -> NormFieldUnit {
        NormFieldUnit {
            val: PadicInt::one(self.p, self.k),
            ..self.one()
        }
    }

    /// 1 + Σ terms c λ^i.
    pub fn from_terms(&self, terms: &[(usize, FqElem)]) -> NormFieldUnit {
        let mut z = self.one();
        for &(i, c) in terms {
            if i < self.n {
                z.coeffs[i] = self.fq.add(z.coeffs[i], c);
            }
        }
        z
    }

    /// 1 + cλ^i.
    pub fn binomial(&self, i: usize, c: FqElem) -> NormFieldUnit {
        self.from_terms(&[(i, c)])
    }

    /// ζ = 1 − λ.
    pub fn zeta(&self) -> NormFieldUnit {
        self.binomial(1, self.fq.neg(FqElem::ONE))
    }

    fn series_mul(&self, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let n = self.n;
        let mut out = vec![FqElem::ZERO; n];
        let bnz: Vec<(usize, FqElem)> = b
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, &c)| (i, c))
            .collect();
        for (i, &x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for &(j, y) in &bnz {
                if i + j >= n {
                    break;
                }
                out[i + j] = self.fq.add(out[i + j], self.fq.mul(x, y));
            }
        }
        out
    }

    fn series_inv(&self, a: &[FqElem]) -> Vec<FqElem> {
        // a[0] = 1; b = 1/a by the triangular recurrence
        let n = self.n;
        let mut b = vec![FqElem::ZERO; n];
        b[0] = FqElem::ONE;
        let anz: Vec<(usize, FqElem)> = a
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, &c)| (i, c))
            .collect();
        for t in 1..n {
            let mut s = FqElem::ZERO;
            for &(j, c) in &anz {
                if j > t {
                    break;
                }
                s = self.fq.add(s, self.fq.mul(c, b[t - j]));
            }
            b[t] = self.fq.neg(s);
        }
        b
    }

    pub fn mul(&self, a: &NormFieldUnit, b: &NormFieldUnit) -> NormFieldUnit {
        NormFieldUnit {
            val: a.val.add(&b.val),
            coeffs: self.series_mul(&a.coeffs, &b.coeffs),
        }
    }

    pub fn inv(&self, a: &NormFieldUnit) -> NormFieldUnit {
        NormFieldUnit {
            val: a.val.neg(),
            coeffs: self.series_inv(&a.coeffs),
        }
    }

    pub fn div(&self, a: &NormFieldUnit, b: &NormFieldUnit) -> NormFieldUnit {
        self.mul(a, &self.inv(b))
    }

    pub fn int_pow(&self, a: &NormFieldUnit, e: i64) -> NormFieldUnit {
        self.zp_pow(a, &PadicInt::new(self.p, self.k, e))
    }

    fn small_pow(&self, a: &[FqElem], e: u64) -> Vec<FqElem> {
        let mut acc = self.one().coeffs;
        for _ in 0..e {
            acc = self.series_mul(&acc, a);
        }
        acc
    }

    /// λ ↦ λ^{p^t} with coefficients raised to p^t: the p^t-th power in characteristic p.
    fn frobenius_twist(&self, a: &[FqElem], t: u32) -> Vec<FqElem> {
        let step = (self.p as usize).saturating_pow(t);
        let mut out = vec![FqElem::ZERO; self.n];
        out[0] = FqElem::ONE;
        let mut idx = 1;
        while idx * step < self.n && idx < a.len() {
            out[idx * step] = self.fq.frobenius(a[idx], t as i64);
            idx += 1;
        }
        out
    }

    /// u^e for e ∈ Z_p through the base-p digits of e.
    pub fn zp_pow(&self, z: &NormFieldUnit, e: &PadicInt) -> NormFieldUnit {
        let needed = ceil_log(self.p as i64, self.n as i64);
        assert!(
            e.precision >= needed,
            "{}",
            NormError::Precision(e.precision, self.n)
        );
        let digits = e.digits();
        let mut cache: HashMap<u64, Vec<FqElem>> = HashMap::new();
        let mut acc = self.one().coeffs;
        for (t, &c) in digits.iter().enumerate() {
            if (self.p as usize).saturating_pow(t as u32) >= self.n {
                break;
            }
            if c == 0 {
                continue;
            }
            let base = cache
                .entry(c)
                .or_insert_with(|| self.small_pow(&z.coeffs, c))
                .clone();
            acc = self.series_mul(&acc, &self.frobenius_twist(&base, t as u32));
        }
        NormFieldUnit {
            val: z.val.mul(e),
            coeffs: acc,
        }
    }

    /// ρ^k-style stretch λ ↦ λ^{p^k} with coefficients unchanged, i.e. φ^{−k}(z^{p^k}).
    pub fn rho(&self, z: &NormFieldUnit, k: u32) -> NormFieldUnit {
        let step = (self.p as usize).saturating_pow(k);
        let mut out = self.one();
        let mut idx = 1usize;
        while idx.saturating_mul(step) < self.n {
            out.coeffs[idx * step] = z.coeffs[idx];
            idx += 1;
        }
        let pk = PadicInt::new(self.p, self.k, 1)
            .mul(&PadicInt::new(self.p, self.k, self.p as i64).pow(k as u64));
        out.val = z.val.mul(&pk);
        out
    }

    /// φ^k acts on coefficients by x ↦ x^{p^k}.
    pub fn act_phi(&self, z: &NormFieldUnit, k: i64) -> NormFieldUnit {
        let k = k.rem_euclid(self.fq.f as i64);
        if k == 0 {
            return z.clone();
        }
        NormFieldUnit {
            val: z.val,
            coeffs: z.coeffs.iter().map(|&c| self.fq.frobenius(c, k)).collect(),
        }
    }

    /// Σ a_j s^j mod λ^N for s with zero constant term.
    fn compose(&self, a: &[FqElem], s: &[FqElem]) -> Vec<FqElem> {
        let n = self.n;
        let snz: Vec<(usize, FqElem)> = s
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, &c)| (i, c))
            .collect();
        let mut acc: Vec<FqElem> = vec![a[n - 1]];
        for j in (0..n - 1).rev() {
            let len = n - j;
            let mut next = vec![FqElem::ZERO; len];
            next[0] = a[j];
            for (t, &x) in acc.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for &(u, c) in &snz {
                    if t + u >= len {
                        break;
                    }
                    next[t + u] = self.fq.add(next[t + u], self.fq.mul(x, c));
                }
            }
            acc = next;
        }
        acc
    }

    fn gamma_series(&self) -> Vec<FqElem> {
        let mut s = vec![FqElem::ZERO; self.n];
        let p = self.p as usize;
        s[1] = FqElem::ONE;
        if p < self.n {
            s[p] = FqElem::ONE;
        }
        if p + 1 < self.n {
            s[p + 1] = self.fq.neg(FqElem::ONE);
        }
        s
    }

    /// γ: λ ↦ λ + λ^p − λ^{p+1}.
    pub fn act_gamma(&self, z: &NormFieldUnit) -> NormFieldUnit {
        let mut unit = self.compose(&z.coeffs, &self.gamma_series());
        if !z.val.is_zero() {
            // λ^γ/λ = 1 + λ^{p−1} − λ^p
            let ratio = self.from_terms(&[
                (self.p as usize - 1, FqElem::ONE),
                (self.p as usize, self.fq.neg(FqElem::ONE)),
            ]);
            unit = self.series_mul(&unit, &self.zp_pow(&ratio, &z.val).coeffs);
        }
        NormFieldUnit {
            val: z.val,
            coeffs: unit,
        }
    }

    /// T z = z^{γ−1}.
    pub fn act_t(&self, z: &NormFieldUnit) -> NormFieldUnit {
        let g = self.act_gamma(z);
        let mut q = self.series_mul(&g.coeffs, &self.series_inv(&z.coeffs));
        q[0] = FqElem::ONE;
        NormFieldUnit {
            val: PadicInt::zero(self.p, self.k),
            coeffs: q,
        }
    }

    pub fn act_t_pow(&self, z: &NormFieldUnit, e: usize) -> NormFieldUnit {
        (0..e).fold(z.clone(), |acc, _| self.act_t(&acc))
    }

    /// δ = g^d acts by λ ↦ 1 − (1−λ)^{ω(δ)}; the constant ω(δ) mod p dies in D.
    pub fn act_delta(&self, z: &NormFieldUnit, d: usize) -> NormFieldUnit {
        let d = d % (self.p as usize - 1);
        if d == 0 {
            return z.clone();
        }
        let mut unit = self.compose(&z.coeffs, &self.delta_lambda[d]);
        if !z.val.is_zero() {
            unit = self.series_mul(&unit, &self.zp_pow(&self.delta_ratio[d], &z.val).coeffs);
        }
        NormFieldUnit {
            val: z.val,
            coeffs: unit,
        }
    }

    /// ε_r z = Π_δ δ(z)^{ω(δ)^{−r}/(p−1)}.
    pub fn project_eigenspace(&self, z: &NormFieldUnit, r: i64) -> NormFieldUnit {
        let ex = epsilon_r_exponents(self.p, r, self.k);
        let mut acc = self.one();
        for (d, e) in ex.iter().enumerate() {
            acc = self.mul(&acc, &self.zp_pow(&self.act_delta(z, d), e));
        }
        acc
    }

    /// Whether δ_g(z) = z^{ω(g)^r} holds to precision.
    pub fn in_eigenspace(&self, z: &NormFieldUnit, r: i64) -> bool {
        let w = crate::padic::omega_power(self.p, 1, r, self.k);
        self.act_delta(z, 1) == self.zp_pow(z, &w)
    }

    /// Π_k φ^k(z)^{c_k}.
    pub fn apply_phi_elem(&self, c: &PhiGroupElem, z: &NormFieldUnit) -> NormFieldUnit {
        let mut acc = self.one();
        for (k, ck) in c.coeffs.iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            acc = self.mul(&acc, &self.zp_pow(&self.act_phi(z, k as i64), ck));
        }
        acc
    }

    /// The action of a = Σ c_d T^d.
    pub fn apply_a(&self, a: &IwasawaElem, z: &NormFieldUnit) -> NormFieldUnit {
        let mut acc = self.one();
        let mut td = z.clone();
        for (d, c) in a.coeffs.iter().enumerate() {
            if d > 0 {
                td = self.act_t(&td);
            }
            if !c.is_zero() {
                acc = self.mul(&acc, &self.apply_phi_elem(c, &td));
            }
        }
        acc
    }

    /// Depth and leading coefficient; refuses within p−1 of the truncation edge.
    pub fn classify(&self, z: &NormFieldUnit) -> FiltrationClass {
        if !z.val.is_zero() {
            return FiltrationClass::NonUnit { val: z.val };
        }
        let usable = self.usable();
        match z.depth() {
            Some(d) if d < usable => FiltrationClass::Depth {
                i: d,
                leading: z.coeffs[d],
            },
            _ => FiltrationClass::Beyond { from: usable },
        }
    }

    /// Classification after checking the ω^r eigenspace condition.
    pub fn classify_checked(
        &self,
        z: &NormFieldUnit,
        r: i64,
    ) -> Result<FiltrationClass, NormError> {
        if !self.in_eigenspace(z, r) {
            return Err(NormError::NotEigen(r));
        }
        Ok(self.classify(z))
    }

    /// Depths below this are reported exactly.
    pub fn usable(&self) -> usize {
        self.n + 1 - self.p as usize
    }

    /// Pseudorandom element of V_i(ξ) in the ω^r eigenspace.
    pub fn sample_element(&self, r: i64, i: usize, leading: FqElem, seed: u64) -> NormFieldUnit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = self.one();
        z.coeffs[i] = leading;
        for t in i + 1..self.n {
            z.coeffs[t] = FqElem(rng.gen_range(0..self.fq.q));
        }
        let mut y = self.project_eigenspace(&z, r);
        if let FiltrationClass::Depth { i: d, leading: c } = self.classify(&y) {
            if d == i && c != leading {
                let fix = self.project_eigenspace(&self.binomial(i, self.fq.sub(leading, c)), r);
                y = self.mul(&y, &fix);
            }
        }
        y
    }

    pub fn to_json(&self, z: &NormFieldUnit) -> serde_json::Value {
        serde_json::json!({
            "val": z.val.residue,
            "K": z.val.precision,
            "coeffs": z.coeffs.iter().map(|&c| self.fq.to_json(c)).collect::<Vec<_>>(),
            "N": z.coeffs.len(),
        })
    }

    /// "λ^v(1 + aλ^i + …)" showing the first few nonzero terms.
    pub fn render(&self, z: &NormFieldUnit, terms: usize) -> String {
        let mut parts = vec!["1".to_string()];
        for (i, &c) in z.coeffs.iter().enumerate().skip(1) {
            if parts.len() > terms {
                parts.push("…".into());
                break;
            }
            if !c.is_zero() {
                parts.push(format!("({})λ^{}", self.fq.render(c), i));
            }
        }
        let body = parts.join(" + ");
        if z.val.is_zero() {
            body
        } else {
            format!("λ^{}·({})", z.val.signed(), body)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_laws() {
        let ctx = NormCtx::new(5, 2, 40);
        let x = ctx.xi;
        let a = ctx.binomial(1, x);
        let b = ctx.binomial(1, ctx.fq.neg(x));
        let prod = ctx.mul(&a, &b);
        assert_eq!(prod, ctx.binomial(2, ctx.fq.neg(ctx.fq.mul(x, x))));
        assert!(ctx.mul(&a, &ctx.inv(&a)).is_one());
        let l2 = ctx.mul(&ctx.lambda(), &ctx.lambda());
        assert_eq!(l2.val.residue, 2);
        // Frobenius in characteristic p
        let ap = ctx.int_pow(&a, 5);
        assert_eq!(ap, ctx.binomial(5, ctx.fq.pow(x, 5)));
        assert_eq!(ctx.int_pow(&a, -1), ctx.inv(&a));
        let s = ctx.sample_element(3, 3, x, 1);
        let e1 = PadicInt::new(5, ctx.k, 123);
        let e2 = PadicInt::new(5, ctx.k, -47);
        assert_eq!(
            ctx.zp_pow(&s, &e1.add(&e2)),
            ctx.mul(&ctx.zp_pow(&s, &e1), &ctx.zp_pow(&s, &e2))
        );
    }

    #[test]
    fn gamma_on_lambda_and_binomials() {
        let ctx = NormCtx::new(5, 1, 60);
        let g = ctx.act_gamma(&ctx.lambda());
        assert_eq!(g.val.residue, 1);
        assert_eq!(
            g.coeffs[..7],
            ctx.from_terms(&[(4, FqElem::ONE), (5, FqElem(4))]).coeffs[..7]
        );
        // (γ−1)(1+ξλ^i) ≡ 1 + iξλ^{i+p−1}
        for i in 1..20 {
            let z = ctx.binomial(i, FqElem(2));
            let c = ctx.classify(&ctx.act_t(&z));
            if i % 5 != 0 {
                assert_eq!(
                    c,
                    FiltrationClass::Depth {
                        i: i + 4,
                        leading: FqElem((2 * i as u32) % 5)
                    }
                );
            } else {
                assert!(c.at_least(i + 8), "i={i} {c:?}");
            }
        }
    }

    #[test]
    fn actions_commute() {
        let ctx = NormCtx::new(3, 2, 50);
        let z = ctx.from_terms(&[(1, FqElem(5)), (2, FqElem(7)), (4, FqElem(1))]);
        let a = ctx.act_gamma(&ctx.act_phi(&z, 1));
        let b = ctx.act_phi(&ctx.act_gamma(&z), 1);
        assert_eq!(a, b);
        let c = ctx.act_delta(&ctx.act_gamma(&z), 1);
        let d = ctx.act_gamma(&ctx.act_delta(&z, 1));
        assert_eq!(c, d);
        assert_eq!(ctx.act_phi(&z, 2), z);
        let ctx5 = NormCtx::new(5, 1, 50);
        let z5 = ctx5.from_terms(&[(1, FqElem(3)), (3, FqElem(1))]);
        // δ_g^4 = 1 and δ's compose
        let mut w = z5.clone();
        for _ in 0..4 {
            w = ctx5.act_delta(&w, 1);
        }
        assert_eq!(w, z5);
        assert_eq!(
            ctx5.act_delta(&ctx5.act_delta(&z5, 1), 2),
            ctx5.act_delta(&z5, 3)
        );
        assert_eq!(ctx5.act_delta(&ctx5.lambda(), 1).val.residue, 1);
        assert_eq!(
            ctx5.act_delta(&ctx5.lambda(), 1).coeffs[1..],
            ctx5.delta_ratio[1].coeffs[1..]
        );
    }

    #[test]
    fn projection() {
        let ctx = NormCtx::new(5, 2, 40);
        for r in 0..4i64 {
            let z = ctx.binomial(3, ctx.xi);
            let y = ctx.project_eigenspace(&z, r);
            assert!(ctx.in_eigenspace(&y, r));
            assert_eq!(ctx.project_eigenspace(&y, r), y);
            if r == 3 {
                assert_eq!(
                    ctx.classify(&y),
                    FiltrationClass::Depth {
                        i: 3,
                        leading: ctx.xi
                    }
                );
            } else {
                assert!(ctx.classify(&y).at_least(4));
            }
        }
        let pi = ctx.project_eigenspace(&ctx.lambda(), 4);
        assert_eq!(pi.val.residue, 1);
        assert!(ctx.in_eigenspace(&pi, 0));
        // partition of unity
        let z = ctx.sample_element(2, 2, ctx.xi, 9);
        let prod = (0..4).fold(ctx.one(), |acc, r| {
            ctx.mul(&acc, &ctx.project_eigenspace(&z, r))
        });
        assert_eq!(prod, z);
    }

    #[test]
    fn samples() {
        let ctx = NormCtx::new(3, 2, 40);
        let a = ctx.sample_element(3, 5, ctx.xi, 7);
        assert_eq!(a, ctx.sample_element(3, 5, ctx.xi, 7));
        assert_ne!(a, ctx.sample_element(3, 5, ctx.xi, 8));
        assert_eq!(
            ctx.classify(&a),
            FiltrationClass::Depth {
                i: 5,
                leading: ctx.xi
            }
        );
        assert!(ctx.in_eigenspace(&a, 1));
        assert!(matches!(
            ctx.classify(&ctx.one()),
            FiltrationClass::Beyond { .. }
        ));
    }
}
