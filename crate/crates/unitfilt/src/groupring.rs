//! Z_p[Φ] and truncated A = Z_p[Φ][[T]], the named elements ρ, N_Φ, N_{Γ_n}, f_n, ϑ,
//! ε_r exponent data, and symbolic element forms with Unicode rendering.

use serde::Serialize;
use thiserror::Error;

use crate::padic::{modulus, omega_power, PadicInt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("mismatched contexts")]
    Mismatch,
    #[error("truncation degree {0} too small, need {1}")]
    BoundTooSmall(usize, usize),
}

/// Σ_k c_k φ^k with φ^f = 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiGroupElem {
    pub coeffs: Vec<PadicInt>,
}

impl PhiGroupElem {
    pub fn zero(p: u64, f: usize, k: u32) -> Self {
        PhiGroupElem {
            coeffs: vec![PadicInt::zero(p, k); f],
        }
    }
    pub fn scalar(p: u64, f: usize, k: u32, c: i64) -> Self {
        let mut z = Self::zero(p, f, k);
        z.coeffs[0] = PadicInt::new(p, k, c);
        z
    }
    pub fn one(p: u64, f: usize, k: u32) -> Self {
        Self::scalar(p, f, k, 1)
    }
    /// c·φ^e, e taken mod f.
    pub fn monomial(p: u64, f: usize, k: u32, c: i64, e: i64) -> Self {
        let mut z = Self::zero(p, f, k);
        z.coeffs[e.rem_euclid(f as i64) as usize] = PadicInt::new(p, k, c);
        z
    }
    pub fn f(&self) -> usize {
        self.coeffs.len()
    }
    pub fn p(&self) -> u64 {
        self.coeffs[0].p
    }
    pub fn precision(&self) -> u32 {
        self.coeffs.iter().map(|c| c.precision).min().unwrap_or(0)
    }
    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.f(), o.f(), "{}", RingError::Mismatch);
        PhiGroupElem {
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }
    pub fn neg(&self) -> Self {
        PhiGroupElem {
            coeffs: self.coeffs.iter().map(|a| a.neg()).collect(),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.f(), o.f(), "{}", RingError::Mismatch);
        let f = self.f();
        let k = self.precision().min(o.precision());
        let mut out = Self::zero(self.p(), f, k);
        for (a, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (b, y) in o.coeffs.iter().enumerate() {
                out.coeffs[(a + b) % f] = out.coeffs[(a + b) % f].add(&x.mul(y));
            }
        }
        out
    }
    pub fn scale(&self, c: &PadicInt) -> Self {
        PhiGroupElem {
            coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect(),
        }
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    /// Membership in pZ_p[Φ].
    pub fn in_p_ideal(&self) -> bool {
        self.coeffs.iter().all(|c| c.residue % c.p == 0)
    }
    /// Σ_k c_k mod p: the image under Φ → 1, reduced mod p.
    pub fn augmentation_mod_p(&self) -> u64 {
        let p = self.p();
        self.coeffs.iter().map(|c| c.residue % p).sum::<u64>() % p
    }
}

/// ρ^m = p^m φ^{−m} in Z_p[Φ].
pub fn rho_power(p: u64, f: usize, k: u32, m: u32) -> PhiGroupElem {
    let pm = if m >= k { 0 } else { modulus(p, m) as i64 };
    PhiGroupElem::monomial(p, f, k, pm, -(m as i64))
}

/// N_Φ = Σ_k φ^k.
pub fn norm_phi(p: u64, f: usize, k: u32) -> PhiGroupElem {
    PhiGroupElem {
        coeffs: vec![PadicInt::one(p, k); f],
    }
}

/// ϑ_{2,k} = 1 + φ^{−1} + … + φ^{−k}; ϑ_{j,k} = 1 for j > 2.
pub fn vartheta(p: u64, f: usize, prec: u32, j: u32, k: u32) -> PhiGroupElem {
    assert!(j >= 2);
    if j > 2 {
        return PhiGroupElem::one(p, f, prec);
    }
    let mut z = PhiGroupElem::zero(p, f, prec);
    for t in 0..=k as i64 {
        let idx = (-t).rem_euclid(f as i64) as usize;
        z.coeffs[idx] = z.coeffs[idx].add(&PadicInt::one(p, prec));
    }
    z
}

/// Exponents ω(δ)^{−r}/(p−1) of ε_r, indexed by δ = g^d for the least primitive root g.
pub fn epsilon_r_exponents(p: u64, r: i64, k: u32) -> Vec<PadicInt> {
    let inv = PadicInt::new(p, k, p as i64 - 1)
        .inv()
        .expect("p−1 is a unit");
    (0..p as i64 - 1)
        .map(|d| omega_power(p, d, -r, k).mul(&inv))
        .collect()
}

/// Σ_d c_d T^d truncated below T^bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IwasawaElem {
    pub coeffs: Vec<PhiGroupElem>,
    pub bound: usize,
}

impl IwasawaElem {
    pub fn zero(bound: usize) -> Self {
        IwasawaElem {
            coeffs: vec![],
            bound,
        }
    }
    pub fn constant(c: PhiGroupElem, bound: usize) -> Self {
        Self::monomial(c, 0, bound)
    }
    pub fn monomial(c: PhiGroupElem, d: usize, bound: usize) -> Self {
        if d >= bound {
            return Self::zero(bound);
        }
        let z = PhiGroupElem::zero(c.p(), c.f(), c.precision());
        let mut coeffs = vec![z; d + 1];
        coeffs[d] = c;
        IwasawaElem { coeffs, bound }.trimmed()
    }
    pub fn t(p: u64, f: usize, k: u32, bound: usize) -> Self {
        Self::monomial(PhiGroupElem::one(p, f, k), 1, bound)
    }
    fn trimmed(mut self) -> Self {
        self.coeffs.truncate(self.bound);
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }
    pub fn coeff(&self, d: usize) -> Option<&PhiGroupElem> {
        self.coeffs.get(d)
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn add(&self, o: &Self) -> Self {
        let bound = self.bound.min(o.bound);
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n)
            .map(|d| match (self.coeffs.get(d), o.coeffs.get(d)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        IwasawaElem { coeffs, bound }.trimmed()
    }
    pub fn neg(&self) -> Self {
        IwasawaElem {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            bound: self.bound,
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        let bound = self.bound.min(o.bound);
        let n = (self.coeffs.len() + o.coeffs.len())
            .saturating_sub(1)
            .min(bound);
        let (Some(a0), Some(_)) = (self.coeffs.first(), o.coeffs.first()) else {
            return Self::zero(bound);
        };
        let k = a0.precision().min(o.coeffs[0].precision());
        let mut coeffs = vec![PhiGroupElem::zero(a0.p(), a0.f(), k); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        IwasawaElem { coeffs, bound }.trimmed()
    }
    pub fn scale(&self, c: &PhiGroupElem) -> Self {
        IwasawaElem {
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
            bound: self.bound,
        }
        .trimmed()
    }
    pub fn pow(&self, mut e: u64) -> Self {
        let a0 = &self.coeffs[0];
        let mut acc = Self::constant(
            PhiGroupElem::one(a0.p(), a0.f(), a0.precision()),
            self.bound,
        );
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }
}

/// f_n = (1+T)^{p^{n−1}} − 1, exact when bound > p^{n−1}.
pub fn fn_poly(p: u64, f: usize, k: u32, n: u32, bound: usize) -> Result<IwasawaElem, RingError> {
    let deg = (p as usize).pow(n - 1);
    if bound <= deg {
        return Err(RingError::BoundTooSmall(bound, deg + 1));
    }
    let one = IwasawaElem::constant(PhiGroupElem::one(p, f, k), bound);
    Ok(one
        .add(&IwasawaElem::t(p, f, k, bound))
        .pow(deg as u64)
        .sub(&one))
}

/// The lift T^{−1}f_n of N_{Γ_n}, materialized as a polynomial of degree p^{n−1} − 1.
pub fn norm_gamma_n(
    p: u64,
    f: usize,
    k: u32,
    n: u32,
    bound: usize,
) -> Result<IwasawaElem, RingError> {
    let fnp = fn_poly(p, f, k, n, bound + 1)?;
    let coeffs = fnp.coeffs[1..].to_vec();
    Ok(IwasawaElem { coeffs, bound }.trimmed())
}

/// Generator a symbolic term multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Gen {
    U,
    W,
    V,
}

/// coef·ϑ·ρ^rho·T^t acting on a generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymTerm {
    pub coef: i64,
    pub rho: u32,
    pub t: u64,
    /// (j, k) for a factor ϑ_{j,k}; omitted when it is 1.
    pub vartheta: Option<(u32, u32)>,
    pub gen: Gen,
}

/// p^{pshift}·Σ terms, rendered like "(ρ²T⁹⁵ − ρT⁴⁷⁵ − T²³⁷⁹)u₃ + ρ⁷w".
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymElem {
    pub r: i64,
    pub pshift: u32,
    /// Unit denominator (prime to p) dividing the whole element.
    pub den: i64,
    pub terms: Vec<SymTerm>,
}

const SUP: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
const SUB: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

pub fn superscript(n: u64) -> String {
    n.to_string()
        .chars()
        .map(|c| SUP[c.to_digit(10).unwrap() as usize])
        .collect()
}

pub fn subscript(n: u64) -> String {
    n.to_string()
        .chars()
        .map(|c| SUB[c.to_digit(10).unwrap() as usize])
        .collect()
}

fn monomial_text(t: &SymTerm) -> String {
    let mut s = String::new();
    if let Some((j, k)) = t.vartheta {
        s += &format!("ϑ_{{{j},{k}}}");
    }
    match t.rho {
        0 => {}
        1 => s.push('ρ'),
        e => s += &format!("ρ{}", superscript(e as u64)),
    }
    match t.t {
        0 => {}
        1 => s.push('T'),
        e => s += &format!("T{}", superscript(e)),
    }
    s
}

impl SymElem {
    pub fn single(r: i64, gen: Gen, rho: u32, t: u64) -> Self {
        SymElem {
            r,
            pshift: 0,
            den: 1,
            terms: vec![SymTerm {
                coef: 1,
                rho,
                t,
                vartheta: None,
                gen,
            }],
        }
    }
    pub fn terms_on(&self, g: Gen) -> impl Iterator<Item = &SymTerm> {
        self.terms.iter().filter(move |t| t.gen == g)
    }
    pub fn times_p(&self, e: u32) -> Self {
        SymElem {
            pshift: self.pshift + e,
            ..self.clone()
        }
    }
    pub fn max_t(&self) -> u64 {
        self.terms.iter().map(|t| t.t).max().unwrap_or(0)
    }

    /// Unicode rendering, e.g. (ρ²T⁹⁵ − ρT⁴⁷⁵ − T²³⁷⁹)u₃.
    pub fn render(&self) -> String {
        let mut groups: Vec<String> = vec![];
        for g in [Gen::U, Gen::W, Gen::V] {
            let ts: Vec<&SymTerm> = self.terms_on(g).collect();
            if ts.is_empty() {
                continue;
            }
            let gname = match g {
                Gen::U => format!("u{}", subscript(self.r as u64)),
                Gen::W => "w".into(),
                Gen::V => "v".into(),
            };
            let mut body = String::new();
            for (idx, t) in ts.iter().enumerate() {
                let mono = monomial_text(t);
                let mag = t.coef.unsigned_abs();
                let magtxt = match (mag, mono.is_empty()) {
                    (1, false) => String::new(),
                    (1, true) if ts.len() == 1 => String::new(),
                    (m, _) => m.to_string(),
                };
                let sign_neg = t.coef < 0;
                if idx == 0 {
                    if sign_neg {
                        body.push('−');
                    }
                } else {
                    body += if sign_neg { " − " } else { " + " };
                }
                body += &magtxt;
                body += &mono;
            }
            let piece = if ts.len() > 1 {
                format!("({body}){gname}")
            } else {
                format!("{body}{gname}")
            };
            groups.push(piece);
        }
        let mut s = String::new();
        for (idx, g) in groups.iter().enumerate() {
            if idx == 0 {
                s += g;
            } else if let Some(rest) = g.strip_prefix('−') {
                s += " − ";
                s += rest;
            } else {
                s += " + ";
                s += g;
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        if self.den != 1 {
            s = format!("(1/{})({s})", self.den);
        }
        match self.pshift {
            0 => s,
            e => {
                let pp = if e == 1 {
                    "p".to_string()
                } else {
                    format!("p{}", superscript(e as u64))
                };
                if groups.len() > 1 && self.den == 1 {
                    format!("{pp}({s})")
                } else {
                    format!("{pp}{s}")
                }
            }
        }
    }

    /// The A-coefficient of generator g, truncated below T^bound.
    pub fn coefficient(&self, g: Gen, p: u64, f: usize, k: u32, bound: usize) -> IwasawaElem {
        let mut acc = IwasawaElem::zero(bound);
        for t in self.terms_on(g) {
            // ρ^a p^b = p^{a+b} φ^{−a}
            let pw = t.rho + self.pshift;
            let pp = if pw < k { modulus(p, pw) as i64 } else { 0 };
            let mut c = PhiGroupElem::monomial(p, f, k, pp, -(t.rho as i64));
            c = c.scale(&PadicInt::new(p, k, t.coef));
            if self.den != 1 {
                c = c.scale(
                    &PadicInt::new(p, k, self.den)
                        .inv()
                        .expect("denominator prime to p"),
                );
            }
            if let Some((j, kk)) = t.vartheta {
                c = c.mul(&vartheta(p, f, k, j, kk));
            }
            acc = acc.add(&IwasawaElem::monomial(c, t.t as usize, bound));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_ints(a: &IwasawaElem) -> Vec<u64> {
        a.coeffs.iter().map(|c| c.coeffs[0].residue).collect()
    }

    #[test]
    fn group_relation_and_rho() {
        let (p, f, k) = (5, 3, 6);
        let phi = PhiGroupElem::monomial(p, f, k, 1, 1);
        let phi2 = PhiGroupElem::monomial(p, f, k, 1, (f - 1) as i64);
        assert_eq!(phi.mul(&phi2), PhiGroupElem::one(p, f, k));
        assert_eq!(rho_power(p, f, k, 0), PhiGroupElem::one(p, f, k));
        assert_eq!(rho_power(5, 1, 6, 3), PhiGroupElem::scalar(5, 1, 6, 125));
        // f=2, m=3 → p³φ
        assert_eq!(
            rho_power(5, 2, 6, 3),
            PhiGroupElem::monomial(5, 2, 6, 125, 1)
        );
        for m in 1..5 {
            assert!(rho_power(p, f, k, m).in_p_ideal());
        }
    }

    #[test]
    fn binomial_polys() {
        let t = IwasawaElem::t(5, 1, 8, 8);
        let one = IwasawaElem::constant(PhiGroupElem::one(5, 1, 8), 8);
        assert_eq!(poly_ints(&one.add(&t).pow(5)), vec![1, 5, 10, 10, 5, 1]);
        let trunc = IwasawaElem {
            bound: 3,
            ..one.add(&t)
        }
        .pow(5);
        assert_eq!(poly_ints(&trunc), vec![1, 5, 10]);
        assert_eq!(poly_ints(&fn_poly(5, 1, 8, 1, 4).unwrap()), vec![0, 1]);
        assert_eq!(
            poly_ints(&fn_poly(5, 1, 8, 2, 8).unwrap()),
            vec![0, 5, 10, 10, 5, 1]
        );
        assert!(fn_poly(5, 1, 8, 2, 5).is_err());
        let ng = norm_gamma_n(3, 2, 6, 3, 12).unwrap();
        let tt = IwasawaElem::t(3, 2, 6, 12);
        assert_eq!(ng.mul(&tt), fn_poly(3, 2, 6, 3, 12).unwrap());
        assert_eq!(ng.degree(), Some(8));
    }

    #[test]
    fn norm_and_vartheta() {
        assert_eq!(norm_phi(5, 1, 4), PhiGroupElem::one(5, 1, 4));
        assert_eq!(vartheta(5, 2, 4, 3, 7), PhiGroupElem::one(5, 2, 4));
        assert_eq!(vartheta(5, 2, 4, 2, 0), PhiGroupElem::one(5, 2, 4));
        assert!(vartheta(5, 1, 4, 2, 4).in_p_ideal());
        for f in 1..=3usize {
            for k in 0..40u32 {
                let hit = (k as i64 + 1) % (5 * f as i64) == 0;
                assert_eq!(vartheta(5, f, 4, 2, k).in_p_ideal(), hit, "f={f} k={k}");
            }
        }
    }

    #[test]
    fn epsilon_exponents() {
        for p in [3u64, 5, 7] {
            let k = 5;
            for d in 0..p as usize - 1 {
                let s = (0..p as i64 - 1).fold(PadicInt::zero(p, k), |acc, r| {
                    acc.add(&epsilon_r_exponents(p, r, k)[d])
                });
                assert_eq!(s.residue, (d == 0) as u64);
            }
        }
        let e = epsilon_r_exponents(3, 0, 4);
        assert_eq!(e[0].residue, e[1].residue);
        assert_eq!(e[0].mul(&PadicInt::new(3, 4, 2)).residue, 1);
    }

    fn term(coef: i64, rho: u32, t: u64, gen: Gen) -> SymTerm {
        SymTerm {
            coef,
            rho,
            t,
            vartheta: None,
            gen,
        }
    }

    #[test]
    fn rendering() {
        let k2 = SymElem {
            r: 3,
            pshift: 0,
            den: 1,
            terms: vec![
                term(1, 2, 95, Gen::U),
                term(-1, 1, 475, Gen::U),
                term(-1, 0, 2379, Gen::U),
            ],
        };
        assert_eq!(k2.render(), "(ρ²T⁹⁵ − ρT⁴⁷⁵ − T²³⁷⁹)u₃");
        assert_eq!(SymElem::single(3, Gen::U, 0, 2380).render(), "T²³⁸⁰u₃");
        let k6 = SymElem {
            r: 5,
            pshift: 0,
            den: 1,
            terms: vec![term(1, 6, 0, Gen::U), term(1, 7, 0, Gen::W)],
        };
        assert_eq!(k6.render(), "ρ⁶u₅ + ρ⁷w");
        let k = SymElem {
            r: 3,
            pshift: 0,
            den: 1,
            terms: vec![term(1, 2, 4, Gen::U), term(-3, 1, 1, Gen::U)],
        };
        assert_eq!(k.render(), "(ρ²T⁴ − 3ρT)u₃");
        assert_eq!(SymElem::single(3, Gen::U, 0, 0).times_p(2).render(), "p²u₃");
    }

    #[test]
    fn symbolic_coefficients() {
        let k2 = SymElem {
            r: 2,
            pshift: 1,
            den: 1,
            terms: vec![
                term(1, 1, 2, Gen::U),
                term(-2, 0, 0, Gen::U),
                term(1, 2, 0, Gen::W),
            ],
        };
        let c = k2.coefficient(Gen::U, 3, 2, 5, 6);
        assert_eq!(c.coeff(0).unwrap(), &PhiGroupElem::scalar(3, 2, 5, -6));
        assert_eq!(c.coeff(2).unwrap(), &PhiGroupElem::monomial(3, 2, 5, 9, 1));
        let w = k2.coefficient(Gen::W, 3, 2, 5, 6);
        assert_eq!(w.coeff(0).unwrap(), &PhiGroupElem::monomial(3, 2, 5, 27, 0));
    }
}
