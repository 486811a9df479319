//! The residue field F_q = F_p[x]/(h) with table-driven arithmetic.
//!
//! Elements are packed as integers Σ c_k p^k (c_0 first), which doubles as
//! the lexicographic order used for every deterministic choice.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FqError {
    #[error("division by zero in F_q")]
    DivByZero,
    #[error("modulus is not monic irreducible of degree {0}")]
    BadModulus(usize),
    #[error("field too large (q = {0})")]
    TooLarge(u64),
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct FqElem(pub u32);

impl FqElem {
    pub const ZERO: FqElem = FqElem(0);
    pub const ONE: FqElem = FqElem(1);
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Clone)]
pub struct FqContext {
    pub p: u32,
    pub f: usize,
    pub q: u32,
    /// monic modulus, constant coefficient first, length f+1
    pub modulus: Vec<u32>,
    add_t: Vec<u16>,
    neg_t: Vec<u16>,
    log_t: Vec<u32>,
    exp_t: Vec<u16>,
    frob_t: Vec<u16>,
    trace_t: Vec<u8>,
}

impl fmt::Debug for FqContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.f, self.modulus)
    }
}

fn poly_mulmod(a: &[u32], b: &[u32], h: &[u32], p: u32) -> Vec<u32> {
    let f = h.len() - 1;
    let mut prod = vec![0u32; 2 * f];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for d in (f..prod.len()).rev() {
        let c = prod[d];
        if c != 0 {
            for k in 0..f {
                prod[d - f + k] = (prod[d - f + k] + (p - c) * h[k]) % p;
            }
            prod[d] = 0;
        }
    }
    prod.truncate(f);
    prod
}

fn poly_divides(g: &[u32], h: &[u32], p: u32) -> bool {
    // monic g divides h?
    let mut rem = h.to_vec();
    let dg = g.len() - 1;
    while rem.len() > dg {
        let c = *rem.last().unwrap();
        let shift = rem.len() - 1 - dg;
        if c != 0 {
            for k in 0..=dg {
                rem[shift + k] = (rem[shift + k] + (p - c) * g[k] % p) % p;
            }
        }
        rem.pop();
    }
    rem.iter().all(|&c| c == 0)
}

/// Monic polynomials of degree d in constant-first lexicographic order.
fn monic_polys(p: u32, d: usize) -> impl Iterator<Item = Vec<u32>> {
    let count = (p as u64).pow(d as u32);
    (0..count).map(move |mut idx| {
        let mut c = vec![0u32; d + 1];
        for k in (0..d).rev() {
            c[k] = (idx % p as u64) as u32;
            idx /= p as u64;
        }
        c[d] = 1;
        c
    })
}

pub fn is_irreducible(h: &[u32], p: u32) -> bool {
    let f = h.len() - 1;
    if f == 0 || *h.last().unwrap() != 1 {
        return false;
    }
    (1..=f / 2).all(|d| monic_polys(p, d).all(|g| !poly_divides(&g, h, p)))
}

impl FqContext {
    /// Context with the lexicographically least monic irreducible modulus.
    pub fn new(p: u32, f: usize) -> Result<Self, FqError> {
        let m = monic_polys(p, f)
            .find(|h| is_irreducible(h, p))
            .expect("irreducible polynomials exist");
        Self::with_modulus(p, &m)
    }

    pub fn with_modulus(p: u32, modulus: &[u32]) -> Result<Self, FqError> {
        let f = modulus.len() - 1;
        if !is_irreducible(modulus, p) {
            return Err(FqError::BadModulus(f));
        }
        let q64 = (p as u64).pow(f as u32);
        if q64 > 4096 {
            return Err(FqError::TooLarge(q64));
        }
        let q = q64 as u32;
        let unpack = |mut x: u32| -> Vec<u32> {
            (0..f)
                .map(|_| {
                    let c = x % p;
                    x /= p;
                    c
                })
                .collect()
        };
        let pack = |c: &[u32]| -> u32 { c.iter().rev().fold(0, |acc, &d| acc * p + d) };
        let qs = q as usize;
        let mut add_t = vec![0u16; qs * qs];
        let mut neg_t = vec![0u16; qs];
        for a in 0..q {
            let ca = unpack(a);
            neg_t[a as usize] = pack(&ca.iter().map(|&c| (p - c) % p).collect::<Vec<_>>()) as u16;
            for b in 0..q {
                let cb = unpack(b);
                let s: Vec<u32> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % p).collect();
                add_t[a as usize * qs + b as usize] = pack(&s) as u16;
            }
        }
        // find a generator of the multiplicative group
        let mut exp_t = vec![0u16; 2 * qs];
        let mut log_t = vec![0u32; qs];
        'gen: for g in 1..q {
            let cg = unpack(g);
            let mut cur = unpack(1);
            let mut seen = vec![false; qs];
            for e in 0..(q - 1) {
                let v = pack(&cur);
                if seen[v as usize] {
                    continue 'gen;
                }
                seen[v as usize] = true;
                exp_t[e as usize] = v as u16;
                log_t[v as usize] = e;
                cur = poly_mulmod(&cur, &cg, modulus, p);
            }
            break;
        }
        for e in (q - 1) as usize..2 * qs {
            exp_t[e] = exp_t[e - (q - 1) as usize];
        }
        let mut ctx = FqContext {
            p,
            f,
            q,
            modulus: modulus.to_vec(),
            add_t,
            neg_t,
            log_t,
            exp_t,
            frob_t: vec![],
            trace_t: vec![],
        };
        ctx.frob_t = (0..q)
            .map(|a| ctx.pow(FqElem(a), p as u64).0 as u16)
            .collect();
        ctx.trace_t = (0..q)
            .map(|a| {
                let mut s = FqElem::ZERO;
                let mut x = FqElem(a);
                for _ in 0..f {
                    s = ctx.add(s, x);
                    x = ctx.frob1(x);
                }
                debug_assert!(s.0 < p);
                s.0 as u8
            })
            .collect();
        Ok(ctx)
    }

    pub fn coeffs(&self, a: FqElem) -> Vec<u32> {
        let mut x = a.0;
        (0..self.f)
            .map(|_| {
                let c = x % self.p;
                x /= self.p;
                c
            })
            .collect()
    }

    pub fn from_coeffs(&self, c: &[u32]) -> FqElem {
        FqElem(c.iter().rev().fold(0, |acc, &d| acc * self.p + d % self.p))
    }

    /// Image of an integer under Z → F_p ⊂ F_q.
    pub fn from_int(&self, k: i64) -> FqElem {
        FqElem(k.rem_euclid(self.p as i64) as u32)
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        FqElem(self.add_t[a.0 as usize * self.q as usize + b.0 as usize] as u32)
    }
    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        FqElem(self.neg_t[a.0 as usize] as u32)
    }
    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        if a.0 == 0 || b.0 == 0 {
            return FqElem::ZERO;
        }
        FqElem(self.exp_t[(self.log_t[a.0 as usize] + self.log_t[b.0 as usize]) as usize] as u32)
    }
    pub fn inv(&self, a: FqElem) -> Result<FqElem, FqError> {
        if a.is_zero() {
            return Err(FqError::DivByZero);
        }
        let l = self.log_t[a.0 as usize];
        Ok(FqElem(
            self.exp_t[((self.q - 1 - l) % (self.q - 1)) as usize] as u32,
        ))
    }
    pub fn div(&self, a: FqElem, b: FqElem) -> Result<FqElem, FqError> {
        Ok(self.mul(a, self.inv(b)?))
    }
    pub fn pow(&self, a: FqElem, e: u64) -> FqElem {
        if e == 0 {
            return FqElem::ONE;
        }
        if a.is_zero() {
            return FqElem::ZERO;
        }
        let l = self.log_t[a.0 as usize] as u64 * (e % (self.q as u64 - 1)) % (self.q as u64 - 1);
        FqElem(self.exp_t[l as usize] as u32)
    }
    /// Multiplication by an integer.
    pub fn scale(&self, k: i64, a: FqElem) -> FqElem {
        self.mul(self.from_int(k), a)
    }
    #[inline]
    pub fn frob1(&self, a: FqElem) -> FqElem {
        FqElem(self.frob_t[a.0 as usize] as u32)
    }
    /// a^{p^k}; k may be negative.
    pub fn frobenius(&self, a: FqElem, k: i64) -> FqElem {
        let k = k.rem_euclid(self.f as i64);
        (0..k).fold(a, |x, _| self.frob1(x))
    }
    /// Tr_{F_q/F_p}, returned in 0..p.
    pub fn trace_phi(&self, a: FqElem) -> u32 {
        self.trace_t[a.0 as usize] as u32
    }

    /// Whether the Frobenius conjugates of a are F_p-linearly independent.
    pub fn is_normal(&self, a: FqElem) -> bool {
        let rows: Vec<Vec<u32>> = (0..self.f as i64)
            .map(|k| self.coeffs(self.frobenius(a, k)))
            .collect();
        fp_rank(&rows, self.p) == self.f
    }

    /// Lexicographically least normal element of trace 1.
    pub fn find_normal_xi(&self) -> FqElem {
        (1..self.q)
            .map(FqElem)
            .find(|&a| self.trace_phi(a) == 1 && self.is_normal(a))
            .expect("normal element of trace one exists")
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        (0..self.q).map(FqElem)
    }

    /// Solutions c of c^p − c = e, lexicographically least first; empty when Tr e ≠ 0.
    pub fn artin_schreier(&self, e: FqElem) -> Vec<FqElem> {
        // The map is F_p-linear; solve with modlinalg over F_p.
        let p = self.p as u64;
        let cols: Vec<Vec<u64>> = (0..self.f)
            .map(|k| {
                let basis =
                    self.from_coeffs(&(0..self.f).map(|t| (t == k) as u32).collect::<Vec<_>>());
                let img = self.sub(self.frob1(basis), basis);
                self.coeffs(img).into_iter().map(|c| c as u64).collect()
            })
            .collect();
        let mut m = crate::modlinalg::ZkMatrix::zeros(self.f, self.f, p, 1);
        for (k, col) in cols.iter().enumerate() {
            for (t, &v) in col.iter().enumerate() {
                m.set(t, k, v);
            }
        }
        let b: Vec<u64> = self.coeffs(e).into_iter().map(|c| c as u64).collect();
        match crate::modlinalg::solve(&m, &b) {
            Ok(sol) => {
                let x0 = self.from_coeffs(&sol.x.iter().map(|&c| c as u32).collect::<Vec<_>>());
                let mut all: Vec<FqElem> = (0..self.p as i64)
                    .map(|a| self.add(x0, self.from_int(a)))
                    .collect();
                all.sort();
                all
            }
            Err(_) => vec![],
        }
    }

    pub fn to_json(&self, a: FqElem) -> serde_json::Value {
        serde_json::json!(self.coeffs(a))
    }

    /// Readable form, e.g. "2+3x".
    pub fn render(&self, a: FqElem) -> String {
        if self.f == 1 {
            return a.0.to_string();
        }
        let c = self.coeffs(a);
        let parts: Vec<String> = c
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(k, &v)| match k {
                0 => v.to_string(),
                1 if v == 1 => "x".into(),
                1 => format!("{v}x"),
                _ if v == 1 => format!("x^{k}"),
                _ => format!("{v}x^{k}"),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

/// Rank of a matrix over F_p.
pub fn fp_rank(rows: &[Vec<u32>], p: u32) -> usize {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as u64).collect())
        .collect();
    let p = p as u64;
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&i| !m[i][c].is_multiple_of(p)) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = crate::indexfn::inv_mod(m[rank][c] as i64, p as i64) as u64;
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let fct = m[i][c] * inv % p;
                for k in 0..ncols {
                    m[i][k] = (m[i][k] + p * p - fct * m[rank][k] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arith() {
        let k = FqContext::new(5, 1).unwrap();
        assert_eq!(k.inv(FqElem(2)).unwrap(), FqElem(3));
        assert!(k.inv(FqElem::ZERO).is_err());
        assert_eq!(k.find_normal_xi(), FqElem::ONE);
        for a in k.elements() {
            assert_eq!(k.frobenius(a, 3), a);
            assert_eq!(k.trace_phi(a), a.0);
        }
    }

    #[test]
    fn given_modulus_example() {
        // x^2 + 4x + 2 over F_5
        let k = FqContext::with_modulus(5, &[2, 4, 1]).unwrap();
        let x = k.from_coeffs(&[0, 1]);
        assert_eq!(k.coeffs(k.mul(x, x)), vec![3, 1]);
        assert_eq!(k.trace_phi(x), 1);
        assert_eq!(k.frobenius(x, 1), k.pow(x, 5));
        assert_eq!(k.frobenius(x, 2), x);
        assert_eq!(k.frobenius(x, -1), k.frobenius(x, 1));
    }

    #[test]
    fn least_modulus_and_xi() {
        let k = FqContext::new(5, 2).unwrap();
        assert_eq!(k.modulus, vec![1, 1, 1]);
        let xi = k.find_normal_xi();
        // brute force: least trace-one element outside F_p
        let want = k
            .elements()
            .find(|&a| a.0 >= 5 && k.trace_phi(a) == 1)
            .unwrap();
        assert_eq!(xi, want);
        assert!(k.is_normal(xi));
        let k3 = FqContext::new(3, 2).unwrap();
        assert!(is_irreducible(&k3.modulus, 3));
    }

    #[test]
    fn frobenius_is_automorphism() {
        for (p, f) in [(3, 2), (5, 2), (3, 3), (3, 4)] {
            let k = FqContext::new(p, f).unwrap();
            for a in k.elements() {
                for b in k.elements().step_by(7) {
                    assert_eq!(k.frob1(k.add(a, b)), k.add(k.frob1(a), k.frob1(b)));
                    assert_eq!(k.frob1(k.mul(a, b)), k.mul(k.frob1(a), k.frob1(b)));
                }
            }
            let traces: std::collections::BTreeSet<u32> =
                k.elements().map(|a| k.trace_phi(a)).collect();
            assert_eq!(traces.len(), p as usize);
        }
    }

    #[test]
    fn artin_schreier_kernel() {
        let k = FqContext::new(5, 2).unwrap();
        let sols = k.artin_schreier(FqElem::ZERO);
        assert_eq!(sols, (0..5).map(FqElem).collect::<Vec<_>>());
        for e in k.elements() {
            let s = k.artin_schreier(e);
            if k.trace_phi(e) == 0 {
                assert_eq!(s.len(), 5);
                for c in s {
                    assert_eq!(k.sub(k.frob1(c), c), e);
                }
            } else {
                assert!(s.is_empty());
            }
        }
    }
}
