//! Z_p at a fixed finite precision, Teichmüller lifts, and the character ω.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("{0} is not a unit mod p")]
    NotUnit(u64),
    #[error("precision underflow")]
    Underflow,
    #[error("{0} is not divisible by p")]
    NotDivisible(u64),
    #[error("modulus p^K does not fit the machine word")]
    Overflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PadicInt {
    #[serde(skip)]
    pub p: u64,
    pub residue: u64,
    pub precision: u32,
}

pub fn modulus(p: u64, k: u32) -> u64 {
    p.checked_pow(k)
        .filter(|&m| m < (1u64 << 62))
        .expect("p^K exceeds 2^62")
}

/// Largest K with p^K < 2^62.
pub fn max_precision(p: u64) -> u32 {
    let mut k = 0;
    let mut acc = 1u64;
    while let Some(v) = acc.checked_mul(p).filter(|&v| v < (1u64 << 62)) {
        acc = v;
        k += 1;
    }
    k
}

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

/// Inverse of a unit modulo m via extended Euclid.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut nt, mut r, mut nr) = (0i128, 1i128, m as i128, (a % m) as i128);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    (r == 1).then(|| t.rem_euclid(m as i128) as u64)
}

impl PadicInt {
    pub fn new(p: u64, k: u32, v: i64) -> Self {
        let m = modulus(p, k);
        PadicInt {
            p,
            residue: (v as i128).rem_euclid(m as i128) as u64,
            precision: k,
        }
    }
    pub fn zero(p: u64, k: u32) -> Self {
        Self::new(p, k, 0)
    }
    pub fn one(p: u64, k: u32) -> Self {
        Self::new(p, k, 1)
    }
    pub fn modulus(&self) -> u64 {
        modulus(self.p, self.precision)
    }
    fn with_prec(&self, k: u32) -> Self {
        let k = k.min(self.precision);
        PadicInt {
            p: self.p,
            residue: self.residue % modulus(self.p, k),
            precision: k,
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let k = self.precision.min(o.precision);
        let m = modulus(self.p, k);
        PadicInt {
            p: self.p,
            residue: (self.residue % m + o.residue % m) % m,
            precision: k,
        }
    }
    pub fn neg(&self) -> Self {
        let m = self.modulus();
        PadicInt {
            residue: (m - self.residue) % m,
            ..*self
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        let k = self.precision.min(o.precision);
        let m = modulus(self.p, k);
        PadicInt {
            p: self.p,
            residue: mulmod(self.residue, o.residue, m),
            precision: k,
        }
    }
    pub fn is_unit(&self) -> bool {
        !self.residue.is_multiple_of(self.p)
    }
    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }
    pub fn inv(&self) -> Result<Self, PadicError> {
        invmod(self.residue, self.modulus())
            .map(|r| PadicInt {
                residue: r,
                ..*self
            })
            .ok_or(PadicError::NotUnit(self.residue))
    }
    /// Exact division by p^v; precision drops by v.
    pub fn div_exact(&self, v: u32) -> Result<Self, PadicError> {
        if v >= self.precision {
            return Err(PadicError::Underflow);
        }
        let pv = modulus(self.p, v);
        if !self.residue.is_multiple_of(pv) {
            return Err(PadicError::NotDivisible(self.residue));
        }
        Ok(PadicInt {
            p: self.p,
            residue: self.residue / pv,
            precision: self.precision - v,
        })
    }
    pub fn pow(&self, e: u64) -> Self {
        PadicInt {
            residue: powmod(self.residue, e, self.modulus()),
            ..*self
        }
    }
    /// p-adic valuation (precision if zero).
    pub fn valuation(&self) -> u32 {
        if self.residue == 0 {
            return self.precision;
        }
        let mut v = 0;
        let mut x = self.residue;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        v
    }
    /// Base-p digits, least significant first, `precision` of them.
    pub fn digits(&self) -> Vec<u64> {
        let mut x = self.residue;
        (0..self.precision)
            .map(|_| {
                let d = x % self.p;
                x /= self.p;
                d
            })
            .collect()
    }
    /// Residue as a signed representative in (−p^K/2, p^K/2].
    pub fn signed(&self) -> i128 {
        let m = self.modulus() as i128;
        let r = self.residue as i128;
        if r > m / 2 {
            r - m
        } else {
            r
        }
    }
    pub fn reduce(&self, k: u32) -> Self {
        self.with_prec(k)
    }
}

/// Teichmüller lift of a (p ∤ a) by iterating x ↦ x^p until it stabilizes.
pub fn teichmuller(p: u64, a: i64, k: u32) -> Result<PadicInt, PadicError> {
    let m = modulus(p, k);
    let mut x = (a as i128).rem_euclid(m as i128) as u64;
    if x.is_multiple_of(p) {
        return Err(PadicError::NotUnit(x));
    }
    loop {
        let y = powmod(x, p, m);
        if y == x {
            return Ok(PadicInt {
                p,
                residue: x,
                precision: k,
            });
        }
        x = y;
    }
}

/// Least positive primitive root mod p.
pub fn primitive_root(p: u64) -> u64 {
    let mut factors = vec![];
    let mut n = p - 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            factors.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&q| powmod(g, (p - 1) / q, p) != 1))
        .unwrap_or(1)
}

/// ω(δ_g^{idx})^j where g is the least primitive root; j may be negative.
pub fn omega_power(p: u64, idx: i64, j: i64, k: u32) -> PadicInt {
    let t = teichmuller(p, primitive_root(p) as i64, k).unwrap();
    let e = (idx * j).rem_euclid(p as i64 - 1) as u64;
    t.pow(e)
}
