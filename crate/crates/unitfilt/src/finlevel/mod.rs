//! Exact arithmetic in F_n = E(ζ_{p^n}) modulo p^K, norms and traces between levels.
//!
//! Elements are stored in the power basis ζ^t, 0 ≤ t < e_n, over O_E/p^K = (Z/p^K)[x]/(h).
//! Galois conjugations are exponent permutations; depth is read off after the triangular
//! change of basis ζ = 1 − λ, folding p = −λ^{e_n}·(1 + O(λ)).

pub mod gens;
pub mod span;

use serde::Serialize;
use thiserror::Error;

use crate::fq::{FqContext, FqElem};
use crate::groupring::{epsilon_r_exponents, IwasawaElem, PhiGroupElem};
use crate::indexfn::IndexError;
use crate::normfield::FiltrationClass;
use crate::padic::{modulus, omega_power, primitive_root, teichmuller, PadicInt};

#[derive(Debug, Error)]
pub enum FinError {
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("element is not in the ω^{0} eigenspace")]
    NotEigen(i64),
    #[error("element is not a unit")]
    NotUnit,
    #[error("element does not lie in the subfield of level {0}")]
    NotInSubfield(u32),
    #[error("graded solve has no solution at depth {0}")]
    Unsolvable(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("relation `{relation}` fails: residual at λ-depth {depth}")]
    Relation { relation: String, depth: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("out of range: {0}")]
    Range(String),
}

/// O_E/p^K as (Z/p^K)[x]/(h), h the coefficientwise lift of the F_q modulus.
#[derive(Clone, Debug)]
struct Unram {
    f: usize,
    md: u64,
    h: Vec<u64>,
    /// column j is φ(x^j) for the Witt–Frobenius φ
    frob: Vec<Vec<u64>>,
}

impl Unram {
    fn new(fq: &FqContext, md: u64, k: u32) -> Self {
        let f = fq.f;
        let h = fq.modulus.iter().map(|&c| c as u64).collect();
        let mut un = Unram {
            f,
            md,
            h,
            frob: vec![],
        };
        if f == 1 {
            un.frob = vec![vec![1]];
            return un;
        }
        // Newton lift of x^p to a root of h
        let mut x = vec![0u64; f];
        x[1] = 1;
        let mut y = un.pow(&x, fq.p as u64);
        for _ in 0..=k + 1 {
            let (hy, dhy) = un.eval_h(&y);
            let step = un.mul(&hy, &un.inv(fq, &dhy).expect("h is separable"));
            y = un.sub(&y, &step);
        }
        let mut col = un.one();
        for _ in 0..f {
            un.frob.push(col.clone());
            col = un.mul(&col, &y);
        }
        un
    }

    fn one(&self) -> Vec<u64> {
        let mut v = vec![0u64; self.f];
        v[0] = 1;
        v
    }

    fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x + self.md - y) % self.md)
            .collect()
    }

    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let f = self.f;
        let mut raw = vec![0u64; 2 * f - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                raw[i + j] = (raw[i + j] + x * y) % self.md;
            }
        }
        self.reduce_x(&mut raw);
        raw.truncate(f);
        raw
    }

    /// Reduce a vector of x-degree < 2f−1 modulo h in place.
    fn reduce_x(&self, raw: &mut [u64]) {
        let f = self.f;
        for d in (f..raw.len()).rev() {
            let c = raw[d];
            if c != 0 {
                for k in 0..f {
                    raw[d - f + k] = (raw[d - f + k] + (self.md - c) * self.h[k]) % self.md;
                }
                raw[d] = 0;
            }
        }
    }

    fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut acc = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// (h(y), h′(y)).
    fn eval_h(&self, y: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let mut hy = vec![0u64; self.f];
        let mut dhy = vec![0u64; self.f];
        let mut pw = self.one();
        for (d, &c) in self.h.iter().enumerate() {
            for t in 0..self.f {
                hy[t] = (hy[t] + c * pw[t]) % self.md;
            }
            if d + 1 < self.h.len() {
                let c1 = self.h[d + 1] * (d as u64 + 1) % self.md;
                for t in 0..self.f {
                    dhy[t] = (dhy[t] + c1 * pw[t]) % self.md;
                }
            }
            pw = self.mul(&pw, y);
        }
        (hy, dhy)
    }

    fn inv(&self, fq: &FqContext, a: &[u64]) -> Option<Vec<u64>> {
        let abar = fq.from_coeffs(
            &a.iter()
                .map(|&c| (c % fq.p as u64) as u32)
                .collect::<Vec<_>>(),
        );
        let b0 = fq.inv(abar).ok()?;
        let mut b: Vec<u64> = fq.coeffs(b0).iter().map(|&c| c as u64).collect();
        let two = {
            let mut t = vec![0u64; self.f];
            t[0] = 2 % self.md;
            t
        };
        // 2^7 correct digits after seven Newton steps
        for _ in 0..7 {
            b = self.mul(&b, &self.sub(&two, &self.mul(a, &b)));
        }
        Some(b)
    }

    fn frobenius(&self, a: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.f];
        for (j, &c) in a.iter().enumerate() {
            if c != 0 {
                for t in 0..self.f {
                    out[t] = (out[t] + c * self.frob[j][t]) % self.md;
                }
            }
        }
        out
    }
}

/// Σ_t c_t ζ^t, t < e_n, with c_t ∈ O_E/p^K stored as f consecutive residues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FnElem {
    pub c: Vec<u64>,
}

/// λ_n^{val}·unit, unit ≡ 1 mod λ_n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FnUnit {
    pub val: PadicInt,
    pub unit: FnElem,
}

/// Arithmetic context for level n at p-adic precision K (λ-precision K·e_n).
pub struct FnCtx {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    pub k: u32,
    pub md: u64,
    pub e: usize,
    pub pn: usize,
    /// precision of Z_p exponents, enough for u^{p^{kexp}} = 1 on principal units
    pub kexp: u32,
    pub fq: FqContext,
    pub xi: FqElem,
    un: Unram,
    /// C(t, s) mod p^K for s ≤ t < e, row-major
    binom: Vec<u64>,
    lam_pows: Vec<FnElem>,
    gamma_ratio: FnElem,
    delta_exp: Vec<usize>,
    delta_ratio: Vec<FnElem>,
}

impl FnCtx {
    pub fn new(p: u64, f: usize, n: u32, k: u32) -> Result<Self, FinError> {
        if n == 0 {
            return Err(FinError::Range("level must be at least 1".into()));
        }
        if k < 2 {
            return Err(FinError::Precision(format!("K = {k} < 2")));
        }
        let md = modulus(p, k);
        if md >= 1 << 20 {
            return Err(FinError::Precision(format!(
                "p^K = {md} exceeds the accumulator bound"
            )));
        }
        let fq = FqContext::new(p as u32, f).map_err(|e| FinError::Range(e.to_string()))?;
        let xi = fq.find_normal_xi();
        let un = Unram::new(&fq, md, k);
        let pn = (p as usize).pow(n);
        let e = pn - pn / p as usize;
        let mut binom = vec![0u64; e * e];
        for t in 0..e {
            binom[t * e] = 1;
            for s in 1..=t {
                binom[t * e + s] = (binom[(t - 1) * e + s - 1]
                    + if s < t { binom[(t - 1) * e + s] } else { 0 })
                    % md;
            }
        }
        let kexp = k + n + 2;
        let mut ctx = FnCtx {
            p,
            f,
            n,
            k,
            md,
            e,
            pn,
            kexp,
            fq,
            xi,
            un,
            binom,
            lam_pows: vec![],
            gamma_ratio: FnElem { c: vec![] },
            delta_exp: vec![],
            delta_ratio: vec![],
        };
        let lam = ctx.sub_elem(&ctx.one_elem(), &ctx.zeta_elem());
        let mut pw = ctx.one_elem();
        for _ in 0..k as usize * e {
            let next = ctx.mul_elem(&pw, &lam);
            ctx.lam_pows.push(pw);
            pw = next;
        }
        ctx.gamma_ratio = ctx.geometric(1 + p as usize);
        let g = primitive_root(p);
        let tg =
            teichmuller(p, g as i64, k.max(n + 1)).map_err(|e| FinError::Range(e.to_string()))?;
        for d in 0..p - 1 {
            let a = tg.pow(d);
            let a_n = (a.residue % pn as u64) as usize;
            ctx.delta_exp.push(a_n);
            // (1 − ζ^a)/(1 − ζ) divided by its Teichmüller residue ω(g^d)
            let w_inv = PadicInt::new(p, k, a.reduce(k).residue as i64)
                .inv()
                .expect("unit");
            let r = ctx.geometric(a_n);
            ctx.delta_ratio.push(ctx.scale_int(&r, w_inv.residue));
        }
        Ok(ctx)
    }

    /// Smallest K for which depths below `depth` classify exactly.
    pub fn precision_for(p: u64, n: u32, depth: usize) -> u32 {
        let pn = (p as usize).pow(n);
        let e = pn - pn / p as usize;
        ((depth + p as usize) / e + 1).max(3) as u32
    }

    /// Depths below this are reported exactly.
    pub fn usable(&self) -> usize {
        self.k as usize * self.e + 1 - self.p as usize
    }

    // ---- FnElem level ----

    pub fn zero_elem(&self) -> FnElem {
        FnElem {
            c: vec![0; self.e * self.f],
        }
    }

    pub fn one_elem(&self) -> FnElem {
        let mut z = self.zero_elem();
        z.c[0] = 1;
        z
    }

    pub fn zeta_elem(&self) -> FnElem {
        let mut z = self.zero_elem();
        z.c[self.f] = 1;
        z
    }

    /// 1 + ζ + … + ζ^{a−1}.
    fn geometric(&self, a: usize) -> FnElem {
        let mut v = vec![0u64; self.pn * self.f];
        for j in 0..a {
            let t = j % self.pn;
            v[t * self.f] = (v[t * self.f] + 1) % self.md;
        }
        self.reduce_cyclic(v)
    }

    pub fn add_elem(&self, a: &FnElem, b: &FnElem) -> FnElem {
        FnElem {
            c: a.c
                .iter()
                .zip(&b.c)
                .map(|(&x, &y)| (x + y) % self.md)
                .collect(),
        }
    }

    pub fn sub_elem(&self, a: &FnElem, b: &FnElem) -> FnElem {
        FnElem {
            c: a.c
                .iter()
                .zip(&b.c)
                .map(|(&x, &y)| (x + self.md - y) % self.md)
                .collect(),
        }
    }

    pub fn scale_int(&self, a: &FnElem, s: u64) -> FnElem {
        let s = s % self.md;
        FnElem {
            c: a.c.iter().map(|&x| x * s % self.md).collect(),
        }
    }

    /// Multiply every coefficient by an element of O_E/p^K.
    fn scale_unram(&self, a: &FnElem, s: &[u64]) -> FnElem {
        let f = self.f;
        let mut out = self.zero_elem();
        for t in 0..self.e {
            let blk = &a.c[t * f..(t + 1) * f];
            if blk.iter().any(|&x| x != 0) {
                out.c[t * f..(t + 1) * f].copy_from_slice(&self.un.mul(blk, s));
            }
        }
        out
    }

    /// Lift of an F_q element to O_E/p^K.
    pub fn lift(&self, c: FqElem) -> Vec<u64> {
        self.fq.coeffs(c).iter().map(|&x| x as u64).collect()
    }

    /// The constant element with residue-level coefficient c.
    pub fn const_elem(&self, c: FqElem) -> FnElem {
        let mut z = self.zero_elem();
        z.c[..self.f].copy_from_slice(&self.lift(c));
        z
    }

    /// Reduce a cyclic vector (exponents mod p^n, entries < p^K) modulo Φ_{p^n}.
    fn reduce_cyclic(&self, mut v: Vec<u64>) -> FnElem {
        let (f, e, md) = (self.f, self.e, self.md);
        let step = self.pn / self.p as usize;
        for d in e..self.pn {
            for j in 0..f {
                let c = v[d * f + j];
                if c == 0 {
                    continue;
                }
                let base = d - e;
                for s in 0..self.p as usize - 1 {
                    let idx = (base + s * step) * f + j;
                    v[idx] = (v[idx] + md - c) % md;
                }
            }
        }
        v.truncate(e * f);
        FnElem { c: v }
    }

    pub fn mul_elem(&self, a: &FnElem, b: &FnElem) -> FnElem {
        let (f, e, md) = (self.f, self.e, self.md);
        let w = 2 * f - 1;
        let mut raw = vec![0u64; (2 * e - 1) * w];
        let bnz: Vec<usize> = (0..e)
            .filter(|&s| b.c[s * f..(s + 1) * f].iter().any(|&x| x != 0))
            .collect();
        for t in 0..e {
            let ab = &a.c[t * f..(t + 1) * f];
            if ab.iter().all(|&x| x == 0) {
                continue;
            }
            for &s in &bnz {
                let bb = &b.c[s * f..(s + 1) * f];
                let base = (t + s) * w;
                for i in 0..f {
                    if ab[i] == 0 {
                        continue;
                    }
                    for j in 0..f {
                        raw[base + i + j] += ab[i] * bb[j];
                    }
                }
            }
        }
        let mut cyc = vec![0u64; self.pn * f];
        let mut blk = vec![0u64; w];
        for t in 0..2 * e - 1 {
            for (j, x) in blk.iter_mut().enumerate() {
                *x = raw[t * w + j] % md;
            }
            self.un.reduce_x(&mut blk);
            let tt = t % self.pn;
            for j in 0..f {
                cyc[tt * f + j] = (cyc[tt * f + j] + blk[j]) % md;
            }
        }
        self.reduce_cyclic(cyc)
    }

    fn pow_small(&self, a: &FnElem, mut e: u64) -> FnElem {
        let mut acc = self.one_elem();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_elem(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul_elem(&b, &b);
            }
        }
        acc
    }

    /// Residue of x modulo λ_n (ζ ≡ 1).
    pub fn residue(&self, x: &FnElem) -> FqElem {
        let f = self.f;
        let mut acc = vec![0u32; f];
        for t in 0..self.e {
            for j in 0..f {
                acc[j] = ((acc[j] as u64 + x.c[t * f + j]) % self.p) as u32;
            }
        }
        self.fq.from_coeffs(&acc)
    }

    /// Inverse of a unit by Newton iteration from the residue inverse.
    pub fn inv_elem(&self, x: &FnElem) -> Result<FnElem, FinError> {
        let r = self.residue(x);
        let r0 = self.fq.inv(r).map_err(|_| FinError::NotUnit)?;
        let mut y = self.scale_unram(&self.one_elem(), &self.lift(r0));
        let one = self.one_elem();
        let two = self.scale_int(&one, 2);
        for _ in 0..64 {
            let xy = self.mul_elem(x, &y);
            if xy == one {
                return Ok(y);
            }
            y = self.mul_elem(&y, &self.sub_elem(&two, &xy));
        }
        Err(FinError::Precision(
            "Newton inverse did not converge".into(),
        ))
    }

    /// λ-basis coefficients a_s = (−1)^s Σ_{t≥s} C(t,s) c_t.
    pub fn lambda_coeffs(&self, x: &FnElem) -> Vec<u64> {
        let (f, e, md) = (self.f, self.e, self.md);
        let mut out = vec![0u64; e * f];
        for t in 0..e {
            for j in 0..f {
                let c = x.c[t * f + j];
                if c == 0 {
                    continue;
                }
                for s in 0..=t {
                    let b = self.binom[t * e + s];
                    out[s * f + j] = (out[s * f + j] + b * c) % md;
                }
            }
        }
        for s in (1..e).step_by(2) {
            for j in 0..f {
                out[s * f + j] = (md - out[s * f + j]) % md;
            }
        }
        out
    }

    /// Σ_s a_s λ^s for λ-basis coefficients (inverse of `lambda_coeffs`).
    pub fn from_lambda_coeffs(&self, a: &[u64]) -> FnElem {
        let (f, e, md) = (self.f, self.e, self.md);
        let mut out = self.zero_elem();
        for s in 0..e {
            for j in 0..f {
                let c = a[s * f + j];
                if c == 0 {
                    continue;
                }
                // (1 − ζ)^s = Σ_t C(s,t)(−ζ)^t
                for t in 0..=s {
                    let b = self.binom[s * e + t] * c % md;
                    let b = if t % 2 == 1 { (md - b) % md } else { b };
                    out.c[t * f + j] = (out.c[t * f + j] + b) % md;
                }
            }
        }
        out
    }

    fn vp(&self, x: u64) -> u32 {
        if x == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        v
    }

    /// λ-adic valuation and leading residue, None for 0 mod p^K.
    pub fn valuation(&self, x: &FnElem) -> Option<(usize, FqElem)> {
        let (f, e) = (self.f, self.e);
        let a = self.lambda_coeffs(x);
        let mut best: Option<(usize, usize, u32)> = None;
        for s in 0..e {
            let v = (0..f).map(|j| self.vp(a[s * f + j])).min().unwrap();
            if v >= self.k {
                continue;
            }
            let tot = s + e * v as usize;
            if best.is_none_or(|(b, _, _)| tot < b) {
                best = Some((tot, s, v));
            }
        }
        let (tot, s, v) = best?;
        let pv = self.p.pow(v);
        let mut lead: Vec<u32> = (0..f)
            .map(|j| ((a[s * f + j] / pv) % self.p) as u32)
            .collect();
        if v % 2 == 1 {
            // p^v = (−λ^e)^v·(1 + O(λ))
            lead = lead
                .iter()
                .map(|&c| (self.p as u32 - c) % self.p as u32)
                .collect();
        }
        Some((tot, self.fq.from_coeffs(&lead)))
    }

    /// Whether all ζ-coefficients are divisible by p^j.
    pub fn divisible_by_p_power(&self, x: &FnElem, j: u32) -> bool {
        let pj = self.p.pow(j);
        x.c.iter().all(|&c| c % pj == 0)
    }

    /// λ^i as an element (0 beyond the precision).
    pub fn lambda_pow(&self, i: usize) -> FnElem {
        self.lam_pows
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.zero_elem())
    }

    /// ζ ↦ ζ^a for a prime to p.
    fn conj_elem(&self, x: &FnElem, a: usize) -> FnElem {
        let f = self.f;
        let mut v = vec![0u64; self.pn * f];
        for t in 0..self.e {
            let tt = t * a % self.pn;
            v[tt * f..(tt + 1) * f].copy_from_slice(&x.c[t * f..(t + 1) * f]);
        }
        self.reduce_cyclic(v)
    }

    fn frob_elem(&self, x: &FnElem) -> FnElem {
        let f = self.f;
        let mut out = self.zero_elem();
        for t in 0..self.e {
            let blk = &x.c[t * f..(t + 1) * f];
            if blk.iter().any(|&c| c != 0) {
                out.c[t * f..(t + 1) * f].copy_from_slice(&self.un.frobenius(blk));
            }
        }
        out
    }

    /// Coefficientwise Witt–Frobenius, k-fold (k mod f).
    pub fn act_phi_elem(&self, x: &FnElem, k: i64) -> FnElem {
        let k = k.rem_euclid(self.f as i64);
        (0..k).fold(x.clone(), |acc, _| self.frob_elem(&acc))
    }

    // ---- FnUnit level ----

    fn zero_val(&self) -> PadicInt {
        PadicInt::zero(self.p, self.kexp)
    }

    pub fn one(&self) -> FnUnit {
        FnUnit {
            val: self.zero_val(),
            unit: self.one_elem(),
        }
    }

    /// λ_n.
    pub fn lambda(&self) -> FnUnit {
        FnUnit {
            val: PadicInt::one(self.p, self.kexp),
            unit: self.one_elem(),
        }
    }

    pub fn zeta(&self) -> FnUnit {
        FnUnit {
            val: self.zero_val(),
            unit: self.zeta_elem(),
        }
    }

    pub fn is_one(&self, z: &FnUnit) -> bool {
        z.val.is_zero() && z.unit == self.one_elem()
    }

    /// 1 + Σ c λ^i.
    pub fn from_terms(&self, terms: &[(usize, FqElem)]) -> FnUnit {
        let mut x = self.one_elem();
        for &(i, c) in terms {
            x = self.add_elem(&x, &self.scale_unram(&self.lambda_pow(i), &self.lift(c)));
        }
        FnUnit {
            val: self.zero_val(),
            unit: x,
        }
    }

    pub fn binomial(&self, i: usize, c: FqElem) -> FnUnit {
        self.from_terms(&[(i, c)])
    }

    /// The principal unit x/τ(x̄) of a unit x.
    pub fn principal_part(&self, x: &FnElem) -> Result<FnUnit, FinError> {
        let r = self.residue(x);
        if r.is_zero() {
            return Err(FinError::NotUnit);
        }
        let lifted = self.lift(r);
        let mut tau = lifted;
        let q = self.fq.q as u64;
        for _ in 0..self.k {
            tau = self.un.pow(&tau, q);
        }
        let t = self.scale_unram(&self.one_elem(), &tau);
        Ok(FnUnit {
            val: self.zero_val(),
            unit: self.mul_elem(x, &self.inv_elem(&t)?),
        })
    }

    pub fn mul(&self, a: &FnUnit, b: &FnUnit) -> FnUnit {
        FnUnit {
            val: a.val.add(&b.val),
            unit: self.mul_elem(&a.unit, &b.unit),
        }
    }

    pub fn inv(&self, a: &FnUnit) -> FnUnit {
        FnUnit {
            val: a.val.neg(),
            unit: self
                .inv_elem(&a.unit)
                .expect("principal units are invertible"),
        }
    }

    pub fn div(&self, a: &FnUnit, b: &FnUnit) -> FnUnit {
        self.mul(a, &self.inv(b))
    }

    /// u^e for e ∈ Z_p through the base-p digits; needs u^{p^{prec(e)}} = 1.
    pub fn zp_pow(&self, z: &FnUnit, e: &PadicInt) -> Result<FnUnit, FinError> {
        let one = self.one_elem();
        let digits = e.digits();
        let mut acc = one.clone();
        let mut cur = z.unit.clone();
        let mut t = 0usize;
        while cur != one {
            if t >= e.precision as usize {
                return Err(FinError::Precision(format!(
                    "exponent known only mod p^{}",
                    e.precision
                )));
            }
            let d = digits.get(t).copied().unwrap_or(0);
            if d > 0 {
                acc = self.mul_elem(&acc, &self.pow_small(&cur, d));
            }
            cur = self.pow_small(&cur, self.p);
            t += 1;
        }
        let val = if z.val.is_zero() {
            self.zero_val()
        } else {
            z.val.mul(e)
        };
        Ok(FnUnit { val, unit: acc })
    }

    pub fn int_pow(&self, z: &FnUnit, e: i64) -> FnUnit {
        let unit = if e >= 0 {
            self.pow_small(&z.unit, e as u64)
        } else {
            self.inv_elem(&self.pow_small(&z.unit, e.unsigned_abs()))
                .expect("unit")
        };
        FnUnit {
            val: z.val.mul(&PadicInt::new(self.p, z.val.precision, e)),
            unit,
        }
    }

    /// Apply ζ ↦ ζ^a (a prime to p), with `ratio` = σ(λ)/λ normalized to a principal unit.
    fn conj_unit(&self, z: &FnUnit, a: usize, ratio: impl FnOnce() -> FnElem) -> FnUnit {
        let mut unit = self.conj_elem(&z.unit, a);
        if !z.val.is_zero() {
            let r = FnUnit {
                val: self.zero_val(),
                unit: ratio(),
            };
            unit = self.mul_elem(
                &unit,
                &self.zp_pow(&r, &z.val).expect("ratio is principal").unit,
            );
        }
        FnUnit { val: z.val, unit }
    }

    /// γ: ζ ↦ ζ^{1+p}.
    pub fn act_gamma(&self, z: &FnUnit) -> FnUnit {
        self.conj_unit(z, 1 + self.p as usize, || self.gamma_ratio.clone())
    }

    /// T z = z^{γ−1}.
    pub fn act_t(&self, z: &FnUnit) -> FnUnit {
        let g = self.act_gamma(z);
        FnUnit {
            val: self.zero_val(),
            unit: self.mul_elem(&g.unit, &self.inv_elem(&z.unit).expect("unit")),
        }
    }

    pub fn act_t_pow(&self, z: &FnUnit, e: usize) -> FnUnit {
        (0..e).fold(z.clone(), |acc, _| self.act_t(&acc))
    }

    /// δ = g^d: ζ ↦ ζ^{ω(δ)}; the Teichmüller constant of δ(λ)/λ dies in D_n.
    pub fn act_delta(&self, z: &FnUnit, d: usize) -> FnUnit {
        let d = d % (self.p as usize - 1);
        self.conj_unit(z, self.delta_exp[d], || self.delta_ratio[d].clone())
    }

    pub fn act_phi(&self, z: &FnUnit, k: i64) -> FnUnit {
        FnUnit {
            val: z.val,
            unit: self.act_phi_elem(&z.unit, k),
        }
    }

    /// ε_r z = Π_δ δ(z)^{ω(δ)^{−r}/(p−1)}.
    pub fn project_eigenspace(&self, z: &FnUnit, r: i64) -> FnUnit {
        let ex = epsilon_r_exponents(self.p, r, self.kexp);
        let mut acc = self.one();
        for (d, e) in ex.iter().enumerate() {
            acc = self.mul(
                &acc,
                &self
                    .zp_pow(&self.act_delta(z, d), e)
                    .expect("exponent precision"),
            );
        }
        acc
    }

    pub fn in_eigenspace(&self, z: &FnUnit, r: i64) -> bool {
        let w = omega_power(self.p, 1, r, self.kexp);
        self.zp_pow(z, &w)
            .map(|y| self.act_delta(z, 1) == y)
            .unwrap_or(false)
    }

    /// ρ^m z = φ^{−m}(z^{p^m}).
    pub fn rho(&self, z: &FnUnit, m: u32) -> FnUnit {
        let pm = PadicInt::new(self.p, self.kexp, self.p as i64).pow(m as u64);
        let zp = self.zp_pow(z, &pm).expect("p-power exponent");
        self.act_phi(&zp, -(m as i64))
    }

    /// Π_k φ^k(z)^{c_k}.
    pub fn apply_phi_elem(&self, c: &PhiGroupElem, z: &FnUnit) -> Result<FnUnit, FinError> {
        let mut acc = self.one();
        for (k, ck) in c.coeffs.iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            acc = self.mul(&acc, &self.zp_pow(&self.act_phi(z, k as i64), ck)?);
        }
        Ok(acc)
    }

    /// The action of a = Σ c_d T^d.
    pub fn apply_a(&self, a: &IwasawaElem, z: &FnUnit) -> Result<FnUnit, FinError> {
        let mut acc = self.one();
        let mut td = z.clone();
        for (d, c) in a.coeffs.iter().enumerate() {
            if d > 0 {
                td = self.act_t(&td);
            }
            if !c.is_zero() {
                acc = self.mul(&acc, &self.apply_phi_elem(c, &td)?);
            }
        }
        Ok(acc)
    }

    /// N_Φ z = Π_k φ^k(z).
    pub fn norm_phi(&self, z: &FnUnit) -> FnUnit {
        (1..self.f as i64).fold(z.clone(), |acc, k| self.mul(&acc, &self.act_phi(z, k)))
    }

    /// Depth and leading residue; refuses within p−1 of the precision edge.
    pub fn classify(&self, z: &FnUnit) -> FiltrationClass {
        if !z.val.is_zero() {
            return FiltrationClass::NonUnit { val: z.val };
        }
        let usable = self.usable();
        match self.valuation(&self.sub_elem(&z.unit, &self.one_elem())) {
            Some((d, c)) if d < usable => FiltrationClass::Depth { i: d, leading: c },
            _ => FiltrationClass::Beyond { from: usable },
        }
    }

    pub fn classify_checked(&self, z: &FnUnit, r: i64) -> Result<FiltrationClass, FinError> {
        if !self.in_eigenspace(z, r) {
            return Err(FinError::NotEigen(r));
        }
        Ok(self.classify(z))
    }

    /// Coefficient of z at λ^d, provided z ≡ 1 mod λ^d.
    pub fn coeff_at(&self, z: &FnUnit, d: usize) -> Result<FqElem, FinError> {
        match self.classify(z) {
            FiltrationClass::Depth { i, leading } if i == d => Ok(leading),
            FiltrationClass::Depth { i, .. } if i < d => {
                Err(FinError::Precondition(format!("depth {i} < {d}")))
            }
            FiltrationClass::NonUnit { .. } => Err(FinError::NotUnit),
            _ => Ok(FqElem::ZERO),
        }
    }

    pub fn to_json(&self, z: &FnUnit) -> serde_json::Value {
        serde_json::json!({
            "p": self.p, "f": self.f, "n": self.n, "K": self.k, "M": self.k as usize * self.e,
            "val": z.val.residue,
            "coeffs": z.unit.c.chunks(self.f).collect::<Vec<_>>(),
        })
    }
}

fn same_tower(hi: &FnCtx, lo: &FnCtx) -> Result<(), FinError> {
    if hi.p != lo.p || hi.f != lo.f || hi.k != lo.k || hi.fq.modulus != lo.fq.modulus || lo.n > hi.n
    {
        return Err(FinError::Precondition(
            "contexts are not levels of one tower".into(),
        ));
    }
    Ok(())
}

/// F_lo ⊂ F_hi: ζ_{p^lo} = ζ_{p^hi}^{p^{hi−lo}}.
pub fn embed(lo: &FnCtx, hi: &FnCtx, x: &FnElem) -> Result<FnElem, FinError> {
    same_tower(hi, lo)?;
    let step = hi.pn / lo.pn;
    let f = hi.f;
    let mut out = hi.zero_elem();
    for t in 0..lo.e {
        out.c[t * step * f..(t * step + 1) * f].copy_from_slice(&x.c[t * f..(t + 1) * f]);
    }
    Ok(out)
}

/// Inverse of `embed`; fails unless x lies in F_lo.
pub fn restrict(hi: &FnCtx, lo: &FnCtx, x: &FnElem) -> Result<FnElem, FinError> {
    same_tower(hi, lo)?;
    let step = hi.pn / lo.pn;
    let f = hi.f;
    let mut out = lo.zero_elem();
    for t in 0..hi.e {
        let blk = &x.c[t * f..(t + 1) * f];
        if t % step == 0 {
            out.c[t / step * f..(t / step + 1) * f].copy_from_slice(blk);
        } else if blk.iter().any(|&c| c != 0) {
            return Err(FinError::NotInSubfield(lo.n));
        }
    }
    Ok(out)
}

/// Tr_{hi,lo} for consecutive levels: Tr(ζ^t) = p ζ^t if p | t, else 0.
pub fn trace_down(hi: &FnCtx, lo: &FnCtx, x: &FnElem) -> Result<FnElem, FinError> {
    same_tower(hi, lo)?;
    if hi.n != lo.n + 1 {
        return Err(FinError::Precondition("levels must be consecutive".into()));
    }
    let f = hi.f;
    let mut out = lo.zero_elem();
    for b in 0..lo.e {
        for j in 0..f {
            out.c[b * f + j] = x.c[b * hi.p as usize * f + j] * hi.p % hi.md;
        }
    }
    Ok(out)
}

/// N_{hi,lo}: product over ζ ↦ ζ^a, a ≡ 1 mod p^lo; N(λ_hi) = λ_lo.
pub fn norm_to(hi: &FnCtx, lo: &FnCtx, z: &FnUnit) -> Result<FnUnit, FinError> {
    same_tower(hi, lo)?;
    let mut acc = z.unit.clone();
    let mut a = 1 + lo.pn;
    while a < hi.pn {
        acc = hi.mul_elem(&acc, &hi.conj_elem(&z.unit, a));
        a += lo.pn;
    }
    Ok(FnUnit {
        val: z.val.reduce(lo.kexp.min(z.val.precision)),
        unit: restrict(hi, lo, &acc)?,
    })
}

pub fn norm_down(hi: &FnCtx, lo: &FnCtx, z: &FnUnit) -> Result<FnUnit, FinError> {
    if hi.n != lo.n + 1 {
        return Err(FinError::Precondition("levels must be consecutive".into()));
    }
    norm_to(hi, lo, z)
}

pub fn embed_unit(lo: &FnCtx, hi: &FnCtx, z: &FnUnit) -> Result<FnUnit, FinError> {
    // val is a lift of its residue at the finer precision
    Ok(FnUnit {
        val: PadicInt::new(hi.p, hi.kexp, z.val.residue as i64),
        unit: embed(lo, hi, &z.unit)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fc(c: &FiltrationClass) -> (usize, FqElem) {
        match c {
            FiltrationClass::Depth { i, leading } => (*i, *leading),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zeta_has_order_pn() {
        for (p, f, n) in [(3u64, 1usize, 2u32), (3, 2, 3), (5, 2, 2)] {
            let ctx = FnCtx::new(p, f, n, 3).unwrap();
            let z = ctx.pow_small(&ctx.zeta_elem(), ctx.pn as u64);
            assert_eq!(z, ctx.one_elem());
            let z1 = ctx.pow_small(&ctx.zeta_elem(), (ctx.pn / p as usize) as u64);
            assert_ne!(z1, ctx.one_elem());
        }
    }

    #[test]
    fn p_is_minus_lambda_power() {
        for (p, n) in [(3u64, 2u32), (5, 2), (3, 3)] {
            let ctx = FnCtx::new(p, 1, n, 4).unwrap();
            let pe = ctx.scale_int(&ctx.one_elem(), p);
            let s = ctx.add_elem(&pe, &ctx.lambda_pow(ctx.e));
            let (v, _) = ctx.valuation(&s).unwrap();
            assert!(v >= ctx.pn, "p={p} n={n}: {v}");
            assert_eq!(ctx.valuation(&pe).unwrap(), (ctx.e, FqElem(p as u32 - 1)));
        }
    }

    #[test]
    fn inverse_and_lambda_basis_roundtrip() {
        let ctx = FnCtx::new(5, 2, 2, 3).unwrap();
        let x = ctx.add_elem(&ctx.one_elem(), &ctx.lambda_pow(1));
        assert_eq!(ctx.mul_elem(&x, &ctx.inv_elem(&x).unwrap()), ctx.one_elem());
        let y = ctx.from_terms(&[(3, FqElem(7)), (11, FqElem(2))]).unit;
        assert_eq!(ctx.from_lambda_coeffs(&ctx.lambda_coeffs(&y)), y);
    }

    #[test]
    fn galois_actions() {
        for (p, f, n) in [(3u64, 2usize, 2u32), (5, 1, 2), (3, 1, 3)] {
            let ctx = FnCtx::new(p, f, n, 3).unwrap();
            let lam = ctx.lambda_pow(1);
            let glam = ctx.sub_elem(
                &ctx.one_elem(),
                &ctx.conj_elem(&ctx.zeta_elem(), 1 + p as usize),
            );
            let pu = p as usize;
            let approx = ctx.sub_elem(
                &ctx.add_elem(&lam, &ctx.lambda_pow(pu)),
                &ctx.lambda_pow(pu + 1),
            );
            let (v, _) = ctx.valuation(&ctx.sub_elem(&glam, &approx)).unwrap();
            assert!(v > pu * (pu - 1), "p={p} n={n}: {v}");
            // γ^{p^{n−1}} = 1
            let z = ctx.from_terms(&[(1, ctx.xi), (2, FqElem(1))]);
            let g = (0..ctx.pn / pu).fold(z.clone(), |a, _| ctx.act_gamma(&a));
            assert_eq!(g, z);
            if f == 1 {
                assert_eq!(ctx.act_phi(&z, 1), z);
            } else {
                assert_ne!(ctx.act_phi(&z, 1), z);
                assert_eq!(ctx.act_phi(&z, 2), z);
            }
        }
    }

    #[test]
    fn eigenprojection_depths() {
        let ctx = FnCtx::new(5, 2, 2, 3).unwrap();
        for r in 0..4i64 {
            for i in 1..12usize {
                let z = ctx.project_eigenspace(&ctx.binomial(i, ctx.xi), r);
                assert!(ctx.in_eigenspace(&z, r));
                let c = ctx.classify(&z);
                if (i as i64 - r).rem_euclid(4) == 0 {
                    assert_eq!(fc(&c), (i, ctx.xi));
                } else {
                    assert!(c.depth().is_none_or(|d| d > i));
                }
            }
        }
        let pi = ctx.project_eigenspace(&ctx.lambda(), 0);
        assert_eq!(pi.val, PadicInt::one(5, ctx.kexp));
        assert_eq!(ctx.act_phi(&pi, 1), pi);
    }

    #[test]
    fn power_law() {
        let ctx = FnCtx::new(3, 2, 2, 5).unwrap();
        for i in 4..14usize {
            for eta in [ctx.xi, FqElem(1), FqElem(5)] {
                let z = ctx.binomial(i, eta);
                let zp = ctx.int_pow(&z, 3);
                assert_eq!(
                    fc(&ctx.classify(&zp)),
                    (i + ctx.e, ctx.fq.neg(eta)),
                    "i={i}"
                );
            }
        }
    }

    #[test]
    fn norm_and_trace_small() {
        let lo = FnCtx::new(3, 1, 2, 4).unwrap();
        let hi = FnCtx::new(3, 1, 3, 4).unwrap();
        let lam = FnUnit {
            val: PadicInt::one(3, hi.kexp),
            unit: hi.one_elem(),
        };
        assert_eq!(norm_down(&hi, &lo, &lam).unwrap().val.residue, 1);
        let zeta = norm_down(&hi, &lo, &hi.zeta()).unwrap();
        assert_eq!(zeta, lo.zeta());
        let x = hi.from_terms(&[(2, FqElem(1))]);
        let y = hi.from_terms(&[(5, FqElem(2))]);
        let lhs = norm_down(&hi, &lo, &hi.mul(&x, &y)).unwrap();
        let rhs = lo.mul(
            &norm_down(&hi, &lo, &x).unwrap(),
            &norm_down(&hi, &lo, &y).unwrap(),
        );
        assert_eq!(lhs, rhs);
        let one = trace_down(&hi, &lo, &hi.one_elem()).unwrap();
        assert_eq!(one, lo.scale_int(&lo.one_elem(), 3));
    }
}
