//! Integer index functions: brackets, φ/ψ/θ families, σ, ε, the κ case split.
//!
//! Everything here is a pure function of `(p, r)` and small integers.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(i64),
    #[error("r = {r} outside 2..={p}")]
    BadR { p: i64, r: i64 },
    #[error("i = {i} is not congruent to r = {r} mod p-1")]
    BadIndex { i: i64, r: i64 },
    #[error("i = {0} exceeds the configured cap")]
    TooLarge(i64),
    #[error("sigma({m}, {i}) undefined: p^m divides i")]
    SigmaUndefined { m: u32, i: i64 },
    #[error("{0}")]
    Domain(String),
}

pub const INDEX_CAP: i64 = 10_000_000;

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// p^m, saturating at a large sentinel so that ceiling divisions stay correct.
pub fn pow_sat(p: i64, m: u32) -> i64 {
    let mut acc: i64 = 1;
    for _ in 0..m {
        acc = match acc.checked_mul(p) {
            Some(v) if v < i64::MAX / 64 => v,
            _ => return i64::MAX / 64,
        };
    }
    acc
}

fn pw(p: i64, m: u32) -> i64 {
    p.checked_pow(m).expect("index arithmetic overflow")
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + if a.rem_euclid(b) != 0 { 1 } else { 0 }
}

/// Smallest s ≥ 0 with p^s ≥ x, for a positive integer x.
pub fn ceil_log(p: i64, x: i64) -> u32 {
    let mut s = 0;
    let mut acc = 1i64;
    while acc < x {
        acc = acc.saturating_mul(p);
        s += 1;
    }
    s
}

/// ⌊log_p x⌋ for x ≥ 1.
pub fn floor_log(p: i64, x: i64) -> u32 {
    assert!(x >= 1);
    let mut s = 0;
    let mut acc = p;
    while acc <= x {
        s += 1;
        acc = acc.saturating_mul(p);
    }
    s
}

/// If x = p^l for some l ≥ 0, returns l.
pub fn exact_log(p: i64, x: i64) -> Option<u32> {
    if x < 1 {
        return None;
    }
    let mut y = x;
    let mut l = 0;
    while y % p == 0 {
        y /= p;
        l += 1;
    }
    (y == 1).then_some(l)
}

pub fn factorial_mod(k: i64, p: i64) -> i64 {
    (1..=k).fold(1 % p, |acc, t| acc * (t % p) % p)
}

pub fn inv_mod(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    let (mut t, mut nt, mut r, mut nr) = (0i64, 1i64, p, a);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    assert_eq!(r, 1, "{a} not invertible mod {p}");
    t.rem_euclid(p)
}

/// The shape of κ_{m,i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KappaKind {
    /// ρ^m T^{θ_m} u_r
    Single,
    /// (ρ^m T^{θ_m−1} − a Σ_{k=σ}^{m−1} ρ^k T^{θ_k−1}) u_r
    Sum { sigma: u32, a: i64 },
    /// (ρ^m T^{θ_m−1} + Σ_{k=σ(m+1,i)}^{m−1} ρ^k T^{θ_k−1}) u_p + ρ^{m+l+1} w
    WithW { sigma: u32, l: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexParams {
    pub p: i64,
    pub r: i64,
    pub delta: i64,
}

impl IndexParams {
    pub fn new(p: i64, r: i64) -> Result<Self, IndexError> {
        if p < 3 || !is_prime(p) {
            return Err(IndexError::NotOddPrime(p));
        }
        if !(2..=p).contains(&r) {
            return Err(IndexError::BadR { p, r });
        }
        Ok(IndexParams {
            p,
            r,
            delta: (r == p) as i64,
        })
    }

    pub fn check_index(&self, i: i64) -> Result<(), IndexError> {
        if i < 1 || (i - self.r).rem_euclid(self.p - 1) != 0 {
            return Err(IndexError::BadIndex { i, r: self.r });
        }
        if i > INDEX_CAP {
            return Err(IndexError::TooLarge(i));
        }
        Ok(())
    }

    pub fn bracket(&self, k: i64) -> i64 {
        k.rem_euclid(self.p)
    }

    pub fn braces(&self, k: i64) -> i64 {
        k.rem_euclid(self.p - 1)
    }

    pub fn angle(&self, a: i64, t: i64) -> i64 {
        (a + self.braces(t - a)).max(t)
    }

    /// φ^{(i0)}(a).
    pub fn phi_i(&self, i0: i64, a: i64) -> Result<i64, IndexError> {
        if i0 % self.p == 0 {
            return Err(IndexError::Domain(format!("p divides {i0}")));
        }
        if a == 0 {
            return Ok(i0);
        }
        let b = self.bracket(i0);
        Ok(self.p * a + (i0 - b) + self.braces(b - a))
    }

    pub fn phi(&self, a: i64) -> i64 {
        if a == 0 {
            return self.r;
        }
        self.p * (a + self.delta) + self.braces(self.r - self.delta - a)
    }

    pub fn phi_m(&self, m: u32, a: i64) -> i64 {
        pw(self.p, m) * (self.phi(a) + 1) - 1
    }

    pub fn phi_prime_m(&self, m: u32, a: i64) -> i64 {
        if self.delta == 1 {
            if let Some(l) = exact_log(self.p, a + 1) {
                return pw(self.p, m + l + 1) + pw(self.p, m + 1) - 1;
            }
        }
        self.phi_m(m, a)
    }

    pub fn e_of(&self, n: u32) -> i64 {
        assert!(n >= 1);
        pw(self.p, n - 1) * (self.p - 1)
    }

    pub fn phi_prime_nm(&self, n: u32, m: u32, j: i64) -> Result<i64, IndexError> {
        if n < 2 || m + 2 > n {
            return Err(IndexError::Domain(format!("need m <= n-2 (n={n}, m={m})")));
        }
        if self.r == self.p - 1 && j == self.e_of(n - m - 1) {
            return Ok(self.e_of(n) + pw(self.p, m + 1) - 1);
        }
        Ok(self.phi_prime_m(m, j))
    }

    pub fn psi(&self, a: i64) -> i64 {
        if self.r == self.p - 1 && a < self.p {
            return 0;
        }
        (self.angle(a, self.r) + 1) / self.p - self.delta
    }

    pub fn psi_m(&self, m: u32, a: i64) -> i64 {
        self.psi(ceil_div(a + 1, pow_sat(self.p, m)) - 1)
    }

    /// Whether a lies in the band p^{m+l+1}+p^m ≤ a ≤ p^{m+l+1}+p^{m+1}−1 for some l ≥ 0 (r = p).
    fn in_prime_band(&self, m: u32, a: i64) -> bool {
        if self.delta == 0 {
            return false;
        }
        let (pm, pm1) = (pow_sat(self.p, m), pow_sat(self.p, m + 1));
        let mut top = pow_sat(self.p, m + 1);
        while top <= a {
            if top + pm <= a && a < top + pm1 {
                return true;
            }
            top = top.saturating_mul(self.p);
        }
        false
    }

    pub fn psi_prime_m(&self, m: u32, a: i64) -> i64 {
        self.psi_m(m, a) - self.in_prime_band(m, a) as i64
    }

    pub fn theta_m(&self, m: u32, i: i64) -> i64 {
        self.psi(ceil_div(self.angle(i, self.r), pow_sat(self.p, m)))
    }

    pub fn i_ceil(&self, m: u32, i: i64) -> i64 {
        ceil_div(i, pow_sat(self.p, m))
    }

    pub fn sigma(&self, m: u32, i: i64) -> Result<u32, IndexError> {
        let pm = pow_sat(self.p, m);
        if i % pm == 0 {
            return Err(IndexError::SigmaUndefined { m, i });
        }
        Ok(floor_log(self.p, pm * self.i_ceil(m, i) - i))
    }

    pub fn epsilon_m(&self, m: u32, i: i64) -> i64 {
        self.theta_m(m, i) - self.psi_prime_m(m, i)
    }

    /// a_{m,i}; −1 in the two conventional cases.
    pub fn a_coeff(&self, m: u32, i: i64) -> i64 {
        let th = self.theta_m(m, i);
        if (self.r == self.p - 1 && th == 1) || self.w_log(m, i).is_some() {
            return -1;
        }
        let k = self.braces(self.r + 1 - self.delta - th);
        inv_mod(factorial_mod(k, self.p), self.p)
    }

    /// l with i_{m+1} − 1 = p^l, only when r = p.
    pub fn w_log(&self, m: u32, i: i64) -> Option<u32> {
        if self.delta == 0 {
            return None;
        }
        exact_log(self.p, self.i_ceil(m + 1, i) - 1)
    }

    /// s = ⌈log_p((i+1)/(r+1+δ(p−1)))⌉, which is −1 only for r = p, i = 1.
    pub fn s_of(&self, i: i64) -> i64 {
        let den = self.r + 1 + self.delta * (self.p - 1);
        if i + 1 > den {
            return ceil_log(self.p, ceil_div(i + 1, den)) as i64;
        }
        // (i+1)/den ≤ 1: find the largest t ≥ 0 with p^t·(i+1) ≤ den, answer −t.
        let mut t = 0;
        while pow_sat(self.p, t + 1) * (i + 1) <= den {
            t += 1;
        }
        -(t as i64)
    }

    /// Least μ ≥ 0 with i ≤ μ e_n + p^n.
    pub fn mu_of(&self, n: u32, i: i64) -> i64 {
        let (e, pn) = (self.e_of(n), pw(self.p, n));
        if i <= pn {
            0
        } else {
            ceil_div(i - pn, e)
        }
    }

    pub fn kappa_kind(&self, m: u32, i: i64) -> KappaKind {
        if let Some(l) = self.w_log(m, i) {
            let sigma = self
                .sigma(m + 1, i)
                .expect("p^{m+1} cannot divide i when i_{m+1}-1 is a p-power");
            return KappaKind::WithW { sigma, l };
        }
        let p = self.p;
        let im = self.i_ceil(m, i);
        let pm = pow_sat(p, m);
        let single =
            (im - (self.r + 1)).rem_euclid(p - 1) != 0 || im % p == 0 || i < pm || i % pm == 0;
        if single && !(self.r == p - 1 && im == p) {
            KappaKind::Single
        } else {
            let sigma = self.sigma(m, i).unwrap_or(0);
            KappaKind::Sum {
                sigma,
                a: self.a_coeff(m, i),
            }
        }
    }

    /// The three conditions of the equality characterization, evaluated literally.
    pub fn ineqcond_holds(&self, m: u32, k: u32, i: i64) -> bool {
        let p = self.p;
        let eps = if self.delta == 1 && exact_log(p, self.i_ceil(m + 1, i) - 1).is_some() {
            1
        } else {
            0
        };
        let ime = self.i_ceil(m + eps, i);
        let im = self.i_ceil(m, i);
        let c1 = ime % p != 0 || (self.r == p - 1 && im == p);
        let c2 = (ime - (self.r + 1)).rem_euclid(p - 1) == 0 && !(self.r == p - 1 && im == 1);
        let modulus = pow_sat(p, m + eps);
        let j = (-i).rem_euclid(modulus);
        let c3 = j > 0 && j < pow_sat(p, m + 1 - k);
        c1 && c2 && c3
    }

    /// r = p, ψ′_m(i) = p^l − 1 and i_{m+1} = p^l: the three conditions can hold
    /// literally here although the inequality is strict.
    pub fn ineqcond_exceptional(&self, m: u32, i: i64) -> bool {
        if self.delta == 0 {
            return false;
        }
        match (
            exact_log(self.p, self.psi_prime_m(m, i) + 1),
            exact_log(self.p, self.i_ceil(m + 1, i)),
        ) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// The three conditions with the exceptional family removed.
    pub fn ineqcond_refined(&self, m: u32, k: u32, i: i64) -> bool {
        self.ineqcond_holds(m, k, i) && !self.ineqcond_exceptional(m, i)
    }

    /// Both sides of φ′_{k−1}(ψ′_m(i)) − δ ≥ θ_{m−k}(i) − 1.
    pub fn ineq_sides(&self, m: u32, k: u32, i: i64) -> (i64, i64) {
        (
            self.phi_prime_m(k - 1, self.psi_prime_m(m, i)) - self.delta,
            self.theta_m(m - k, i) - 1,
        )
    }
}

/// Outcome of an exhaustive sweep over index identities.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub checks: u64,
    pub violations: Vec<String>,
    /// Statements that fail as literally written, with a count and the first witness.
    /// These are tallied separately from `violations`.
    pub literal_failures: BTreeMap<&'static str, (u64, (i64, u32, u32))>,
}

impl SuiteReport {
    fn merge(mut self, o: SuiteReport) -> SuiteReport {
        self.checks += o.checks;
        self.violations.extend(o.violations);
        self.violations.truncate(50);
        for (k, (n, w)) in o.literal_failures {
            let e = self.literal_failures.entry(k).or_insert((0, w));
            e.0 += n;
            e.1 = e.1.min(w);
        }
        self
    }
    fn literal(&mut self, ok: bool, name: &'static str, witness: (i64, u32, u32)) {
        if !ok {
            let e = self.literal_failures.entry(name).or_insert((0, witness));
            e.0 += 1;
            e.1 = e.1.min(witness);
        }
    }
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.violations.len() < 50 {
            self.violations.push(what());
        }
    }
}

/// Sweeps the φ/ψ Galois connections, the φ∘ψ trichotomy, θ- and ψ′-descent,
/// the equality characterization and the σ remark, for 1 ≤ i ≤ imax, m ≤ mmax.
pub fn index_suite(params: &IndexParams, imax: i64, mmax: u32) -> SuiteReport {
    use rayon::prelude::*;
    let ip = *params;
    let (p, r) = (ip.p, ip.r);
    let mut rep = SuiteReport::default();
    // Galois connections: ψ∘φ = id, φ strictly increasing.
    for m in 0..=mmax {
        let jmax = ip.psi_m(m, imax) + 2;
        for j in 0..=jmax {
            rep.check(ip.psi_m(m, ip.phi_m(m, j)) == j, || {
                format!("psi_{m}(phi_{m}({j})) != {j}")
            });
            rep.check(ip.psi_prime_m(m, ip.phi_prime_m(m, j)) == j, || {
                format!("psi'_{m}(phi'_{m}({j})) != {j}")
            });
            rep.check(ip.phi_m(m, j + 1) > ip.phi_m(m, j), || {
                format!("phi_{m} not increasing at {j}")
            });
            rep.check(ip.phi_prime_m(m, j + 1) > ip.phi_prime_m(m, j), || {
                format!("phi'_{m} not increasing at {j}")
            });
        }
    }
    let per_a = (1..=imax)
        .into_par_iter()
        .fold(SuiteReport::default, |mut rep, a| {
            for m in 0..=mmax {
                // φ_m(j) ≥ a ⇔ j ≥ ψ_m(a), given monotonicity.
                let s = ip.psi_m(m, a);
                rep.check(
                    ip.phi_m(m, s) >= a && (s == 0 || ip.phi_m(m, s - 1) < a),
                    || format!("connection phi_{m}/psi_{m} fails at a={a}"),
                );
                let s = ip.psi_prime_m(m, a);
                rep.check(
                    ip.phi_prime_m(m, s) >= a && (s == 0 || ip.phi_prime_m(m, s - 1) < a),
                    || format!("connection phi'_{m}/psi'_{m} fails at a={a}"),
                );
            }
            let ang = ip.angle(a, r);
            let want = if ang.rem_euclid(p) != p - 1 || (r == p - 1 && a <= r) {
                ang
            } else {
                ang + p - 1
            };
            rep.check(ip.phi(ip.psi(a)) == want, || {
                format!("phi(psi({a})) = {} != {want}", ip.phi(ip.psi(a)))
            });
            if (a - r).rem_euclid(p - 1) == 0 {
                index_checks_at(&ip, a, mmax, &mut rep);
            }
            rep
        })
        .reduce(SuiteReport::default, SuiteReport::merge);
    rep.merge(per_a)
}

fn index_checks_at(ip: &IndexParams, i: i64, mmax: u32, rep: &mut SuiteReport) {
    let p = ip.p;
    for m in 1..=mmax {
        let th = ip.theta_m(m, i);
        if th >= 1 {
            rep.check(ip.theta_m(m - 1, i) >= th + 2, || {
                format!("theta descent fails: m={m}, i={i}")
            });
        }
    }
    for m in 0..mmax {
        let (a, b) = (ip.psi_prime_m(m, i), ip.psi_prime_m(m + 1, i));
        rep.check(a >= b && ((a == b) == (a == 0)), || {
            format!("psi' descent fails: m={m}, i={i}")
        });
    }
    for m in 0..=mmax {
        let eps = ip.epsilon_m(m, i);
        rep.check(eps == 0 || eps == 1, || format!("epsilon_{m}({i}) = {eps}"));
    }
    for m in 1..=mmax {
        for k in 1..=m {
            let (lhs, rhs) = ip.ineq_sides(m, k, i);
            let cond = ip.ineqcond_refined(m, k, i);
            rep.literal(
                (lhs == rhs) == ip.ineqcond_holds(m, k, i),
                "equality iff conditions 1-3 (unrefined)",
                (i, m, k),
            );
            rep.check(lhs >= rhs, || {
                format!("inequality fails: m={m}, k={k}, i={i}")
            });
            rep.check((lhs == rhs) == cond, || {
                format!("equality characterization fails: p={p}, r={}, m={m}, k={k}, i={i} (equal={}, conditions={cond})", ip.r, lhs == rhs)
            });
            let lhs2 =
                pow_sat(p, m - k + 1).saturating_mul(ip.phi_prime_m(k - 1, ip.psi_prime_m(m, i)));
            rep.check((lhs == rhs) == (lhs2 < i), || {
                format!("equivalent condition fails: m={m}, k={k}, i={i}")
            });
        }
        let (ps, th) = (ip.psi_prime_m(m, i), ip.theta_m(m, i));
        rep.check(ps >= th - 1, || {
            format!("psi'_m >= theta_m - 1 fails: m={m}, i={i}")
        });
        let special =
            ip.delta == 1 && exact_log(p, ps + 1).is_some_and(|l| i > pow_sat(p, m + l + 1));
        if special {
            // here ψ′_m = θ_m − 1 always, whatever the k = 1 conditions say
            rep.check(ps == th - 1, || {
                format!("psi'_m = theta_m - 1 fails in the beta band: m={m}, i={i}")
            });
            rep.literal(
                (ps == th - 1) == ip.ineqcond_refined(m, 1, i),
                "psi'_m = theta_m - 1 iff conditions at k = 1",
                (i, m, 1),
            );
        } else {
            rep.check((ps == th - 1) == ip.ineqcond_refined(m, 1, i), || {
                format!("psi'_m = theta_m - 1 characterization fails: m={m}, i={i}")
            });
        }
        if let Ok(sg) = ip.sigma(m, i) {
            rep.check(sg < m, || format!("sigma({m},{i}) = {sg} out of range"));
            for k in 0..m {
                let ik = ip.i_ceil(k, i);
                rep.check((sg >= k) == (ik % pow_sat(p, m - k) != 0), || {
                    format!("sigma remark fails: m={m}, k={k}, i={i}")
                });
            }
            if let Ok(sg1) = ip.sigma(m + 1, i) {
                rep.check(sg1 >= sg, || format!("sigma not monotone at m={m}, i={i}"));
            }
        }
    }
    // θ_k(i) ≤ p^{n−k−1} whenever i ≤ p^n
    let n = ceil_log(p, i).max(1);
    for k in 0..n {
        rep.check(ip.theta_m(k, i) <= pow_sat(p, n - k - 1), || {
            format!("theta bound fails: n={n}, k={k}, i={i}")
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ip(p: i64, r: i64) -> IndexParams {
        IndexParams::new(p, r).unwrap()
    }

    #[test]
    fn brackets_and_angle() {
        let a = ip(5, 3);
        assert_eq!(a.bracket(0), 0);
        assert_eq!(a.bracket(-2), 3);
        assert_eq!(a.bracket(11899), 4);
        assert_eq!(a.braces(-1), 3);
        assert_eq!(a.braces(3 - 2380), 3);
        assert_eq!(a.angle(2380, 3), 2383);
        assert_eq!(a.angle(0, 3), 3);
        assert_eq!(a.angle(3, 3), 3);
    }

    #[test]
    fn phi_values() {
        let a = ip(5, 3);
        assert_eq!(a.phi_i(3, 1).unwrap(), 7);
        assert_eq!(a.phi_i(7, 0).unwrap(), 7);
        // T on V_9 lands at depth 9 + p − 1.
        assert_eq!(a.phi_i(9, 1).unwrap(), 13);
        assert!(a.phi_i(10, 1).is_err());
        assert_eq!(a.phi(1), 7);
        assert_eq!(a.phi_m(1, 1), 39);
        assert_eq!(ip(5, 5).phi_prime_m(0, 0), 9);
        assert_eq!(ip(5, 4).phi_prime_nm(2, 0, 4).unwrap(), 24);
        assert_eq!(
            ip(5, 3).phi_prime_nm(3, 1, 2).unwrap(),
            ip(5, 3).phi_m(1, 2)
        );
        // r = p − 1 and j = e_1: the exceptional value e_3 + p^2 − 1.
        assert_eq!(ip(3, 2).phi_prime_nm(3, 1, 2).unwrap(), 26);
        assert_eq!(
            ip(3, 2).phi_prime_nm(3, 1, 4).unwrap(),
            ip(3, 2).phi_m(1, 4)
        );
        assert!(a.phi_prime_nm(2, 1, 1).is_err());
    }

    #[test]
    fn phi_is_least_congruent_value() {
        for p in [3i64, 5, 7] {
            for r in 2..=p {
                let a = ip(p, r);
                for x in 1..200 {
                    let lo = p * (x + a.delta);
                    let want = (lo..).find(|v| (v - r).rem_euclid(p - 1) == 0).unwrap();
                    assert_eq!(a.phi(x), want);
                }
            }
        }
    }

    #[test]
    fn psi_values() {
        assert_eq!(ip(5, 3).psi(11899), 2380);
        assert_eq!(ip(5, 4).psi(3), 0);
        assert_eq!(ip(5, 5).psi_prime_m(0, 6), 0);
    }

    #[test]
    fn example_tables() {
        let a = ip(5, 3);
        let th: Vec<i64> = (0..6).map(|m| a.theta_m(m, 11899)).collect();
        assert_eq!(th, vec![2380, 476, 96, 20, 4, 1]);
        let b = ip(5, 5);
        let th: Vec<i64> = (0..7).map(|m| b.theta_m(m, 92729)).collect();
        // κ_6 = ρ^6 u_5 + ρ^7 w carries T^{θ_6 − 1} = T^0.
        assert_eq!(th, vec![18545, 3709, 741, 148, 29, 5, 1]);
        assert_eq!(a.sigma(2, 11899).unwrap(), 0);
        assert_eq!(b.sigma(3, 92729).unwrap(), 1);
        assert!(a.sigma(1, 25).is_err());
        assert_eq!(a.s_of(11899), 5);
        assert_eq!(b.s_of(92729), 6);
        assert_eq!(ceil_log(5, 92729), 8);
        assert_eq!(a.theta_m(0, 3), 0);
        for n in [2u32, 3] {
            for i in 1..=25 {
                assert_eq!(ip(5, 3).mu_of(n, i), 0);
            }
        }
        assert_eq!(ip(5, 3).mu_of(2, 26), 1);
    }

    #[test]
    fn s_edge_cases() {
        for p in [3i64, 5, 7] {
            for r in 2..p {
                assert_eq!(ip(p, r).s_of(r), 0);
            }
            assert_eq!(ip(p, p).s_of(1), -1);
            assert_eq!(ip(p, p).s_of(p), 0);
        }
    }

    #[test]
    fn kappa_kinds_example() {
        let a = ip(5, 3);
        let kinds: Vec<KappaKind> = (0..6).map(|m| a.kappa_kind(m, 11899)).collect();
        assert_eq!(kinds[0], KappaKind::Single);
        assert_eq!(kinds[1], KappaKind::Single);
        assert_eq!(kinds[2], KappaKind::Sum { sigma: 0, a: 1 });
        assert_eq!(kinds[3], KappaKind::Sum { sigma: 2, a: 1 });
        assert_eq!(kinds[4], KappaKind::Single);
        assert_eq!(kinds[5], KappaKind::Sum { sigma: 3, a: 1 });
        let b = ip(5, 5);
        assert_eq!(b.kappa_kind(5, 92729), KappaKind::WithW { sigma: 4, l: 1 });
        assert_eq!(b.kappa_kind(6, 92729), KappaKind::WithW { sigma: 6, l: 0 });
        assert_eq!(b.a_coeff(6, 92729), -1);
    }

    #[test]
    fn small_suite_clean() {
        for p in [3i64, 5] {
            for r in 2..=p {
                let rep = index_suite(&ip(p, r), 3000, 5);
                assert!(rep.violations.is_empty(), "{:?}", rep.violations);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(IndexParams::new(4, 2).is_err());
        assert!(IndexParams::new(5, 6).is_err());
        assert!(ip(5, 3).check_index(4).is_err());
        assert!(ip(5, 3).check_index(11899).is_ok());
    }
}
