//! Linear algebra over Z/p^K (Howell form, solving, kernels) and over F_q.

use thiserror::Error;

use crate::fq::{FqContext, FqElem};
use crate::padic::{invmod, modulus, mulmod};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("system is infeasible")]
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZkMatrix {
    pub rows: usize,
    pub cols: usize,
    pub p: u64,
    pub k: u32,
    pub data: Vec<u64>,
}

impl ZkMatrix {
    pub fn zeros(rows: usize, cols: usize, p: u64, k: u32) -> Self {
        ZkMatrix {
            rows,
            cols,
            p,
            k,
            data: vec![0; rows * cols],
        }
    }
    pub fn identity(n: usize, p: u64, k: u32) -> Self {
        let mut m = Self::zeros(n, n, p, k);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }
    pub fn from_rows(rows: &[Vec<u64>], cols: usize, p: u64, k: u32) -> Self {
        let mut m = Self::zeros(rows.len(), cols, p, k);
        let md = modulus(p, k);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                m.data[i * cols + j] = v % md;
            }
        }
        m
    }
    pub fn modulus(&self) -> u64 {
        modulus(self.p, self.k)
    }
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        let m = self.modulus();
        self.data[i * self.cols + j] = v % m;
    }
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_vecs(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
    pub fn mul_vec(&self, x: &[u64]) -> Vec<u64> {
        let m = self.modulus();
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(0u64, |acc, (&a, &b)| (acc + mulmod(a, b, m)) % m)
            })
            .collect()
    }
    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.p, self.k);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }
}

fn val(x: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut y = x;
    while y.is_multiple_of(p) {
        y /= p;
        v += 1;
    }
    v
}

/// A submodule of (Z/p^K)^n kept in Howell form: at most one row per pivot
/// column, pivot entries are powers of p, and p^{K−ν}·row always reduces.
#[derive(Clone, Debug)]
pub struct RowModule {
    pub p: u64,
    pub k: u32,
    pub n: usize,
    md: u64,
    /// rows[j] = Some((ν, row)) when column j carries a pivot p^ν
    rows: Vec<Option<(u32, Vec<u64>)>>,
}

impl RowModule {
    pub fn new(n: usize, p: u64, k: u32) -> Self {
        RowModule {
            p,
            k,
            n,
            md: modulus(p, k),
            rows: vec![None; n],
        }
    }

    fn axpy(&self, v: &mut [u64], c: u64, row: &[u64], from: usize) {
        if c == 0 {
            return;
        }
        let md = self.md;
        let neg = md - c % md;
        for t in from..self.n {
            if row[t] != 0 {
                v[t] = (v[t] + mulmod(neg, row[t], md)) % md;
            }
        }
    }

    /// Insert a vector; returns true if the module grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut grew = false;
        let mut work: Vec<(Vec<u64>, usize)> = vec![(v.iter().map(|&x| x % self.md).collect(), 0)];
        while let Some((mut v, start)) = work.pop() {
            let mut j = start;
            while j < self.n {
                if v[j] == 0 {
                    j += 1;
                    continue;
                }
                let nu = val(v[j], self.p);
                let unit = v[j] / self.p.pow(nu);
                let uinv = invmod(unit, self.md).unwrap();
                for t in j..self.n {
                    v[t] = mulmod(v[t], uinv, self.md);
                }
                match self.rows[j].take() {
                    Some((mu, row)) if mu <= nu => {
                        let c = self.p.pow(nu - mu);
                        self.axpy(&mut v, c, &row, j);
                        self.rows[j] = Some((mu, row));
                    }
                    Some((mu, row)) => {
                        let mut old = row;
                        let c = self.p.pow(mu - nu);
                        self.axpy(&mut old, c, &v, j);
                        let sat = self.saturation(&v, nu);
                        self.rows[j] = Some((nu, v.clone()));
                        grew = true;
                        if let Some(s) = sat {
                            work.push((s, j + 1));
                        }
                        v = old;
                    }
                    None => {
                        let sat = self.saturation(&v, nu);
                        self.rows[j] = Some((nu, v.clone()));
                        grew = true;
                        if let Some(s) = sat {
                            work.push((s, j + 1));
                        }
                        break;
                    }
                }
                j += 1;
            }
        }
        grew
    }

    fn saturation(&self, v: &[u64], nu: u32) -> Option<Vec<u64>> {
        if nu == 0 && self.k == 0 {
            return None;
        }
        let c = self.p.pow(self.k - nu);
        let s: Vec<u64> = v.iter().map(|&x| mulmod(x, c, self.md)).collect();
        s.iter().any(|&x| x != 0).then_some(s)
    }

    /// Reduce v against the pivots; zero result iff v lies in the module.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let mut v: Vec<u64> = v.iter().map(|&x| x % self.md).collect();
        for j in 0..self.n {
            if v[j] == 0 {
                continue;
            }
            match &self.rows[j] {
                Some((mu, row)) => {
                    let pm = self.p.pow(*mu);
                    if !v[j].is_multiple_of(pm) {
                        return v;
                    }
                    let c = v[j] / pm;
                    self.axpy(&mut v, c, row, j);
                }
                None => return v,
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// log_p of the module's cardinality.
    pub fn log_size(&self) -> u64 {
        self.rows
            .iter()
            .flatten()
            .map(|(nu, _)| (self.k - nu) as u64)
            .sum()
    }

    pub fn rank_rows(&self) -> usize {
        self.rows.iter().flatten().count()
    }

    /// Rows in canonical (reduced) Howell form, ordered by pivot column.
    pub fn canonical_rows(&self) -> Vec<Vec<u64>> {
        let mut rows: Vec<(usize, u32, Vec<u64>)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(j, r)| r.as_ref().map(|(nu, v)| (j, *nu, v.clone())))
            .collect();
        for b in 0..rows.len() {
            let (jb, nub) = (rows[b].0, rows[b].1);
            let pb = self.p.pow(nub);
            let rowb = rows[b].2.clone();
            for a in 0..b {
                let x = rows[a].2[jb];
                let c = x / pb;
                if c != 0 {
                    let mut ra = std::mem::take(&mut rows[a].2);
                    self.axpy(&mut ra, c, &rowb, jb);
                    rows[a].2 = ra;
                }
            }
        }
        rows.into_iter().map(|(_, _, v)| v).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &Vec<u64>> {
        self.rows.iter().flatten().map(|(_, v)| v)
    }
}

/// Canonical Howell form of the row module of M.
pub fn howell_form(m: &ZkMatrix) -> ZkMatrix {
    let mut rm = RowModule::new(m.cols, m.p, m.k);
    for i in 0..m.rows {
        rm.insert(m.row(i));
    }
    ZkMatrix::from_rows(&rm.canonical_rows(), m.cols, m.p, m.k)
}

/// Howell form H of M together with U such that H = U·M.
pub fn howell_form_with_transform(m: &ZkMatrix) -> (ZkMatrix, ZkMatrix) {
    let n = m.cols;
    let aug: Vec<Vec<u64>> = (0..m.rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.extend((0..m.rows).map(|t| (t == i) as u64));
            r
        })
        .collect();
    let mut rm = RowModule::new(n + m.rows, m.p, m.k);
    for r in &aug {
        rm.insert(r);
    }
    let (mut h, mut u) = (vec![], vec![]);
    for r in rm.canonical_rows() {
        if r[..n].iter().any(|&x| x != 0) {
            h.push(r[..n].to_vec());
            u.push(r[n..].to_vec());
        }
    }
    (
        ZkMatrix::from_rows(&h, n, m.p, m.k),
        ZkMatrix::from_rows(&u, m.rows, m.p, m.k),
    )
}

pub struct Solution {
    pub x: Vec<u64>,
    pub kernel: Vec<Vec<u64>>,
}

/// Solve M·x = b over Z/p^K; returns one solution and a spanning set of the kernel.
pub fn solve(m: &ZkMatrix, b: &[u64]) -> Result<Solution, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::Dimension(format!(
            "b has {} entries, M has {} rows",
            b.len(),
            m.rows
        )));
    }
    // Rows of [Mᵀ | I]: x ↦ xᵀMᵀ.
    let (nr, nc) = (m.cols, m.rows);
    let md = m.modulus();
    let mut rm = RowModule::new(nc + nr, m.p, m.k);
    for j in 0..nr {
        let mut r: Vec<u64> = (0..nc).map(|i| m.get(i, j)).collect();
        r.extend((0..nr).map(|t| (t == j) as u64));
        rm.insert(&r);
    }
    let mut target: Vec<u64> = b.iter().map(|&x| x % md).collect();
    target.extend(std::iter::repeat_n(0, nr));
    let red = rm.reduce(&target);
    if red[..nc].iter().any(|&x| x != 0) {
        return Err(LinalgError::Infeasible);
    }
    // target − Σ c·rows = red ⇒ Σ c·(second block) = −red second block
    let x: Vec<u64> = red[nc..].iter().map(|&v| (md - v) % md).collect();
    let kernel: Vec<Vec<u64>> = rm
        .canonical_rows()
        .into_iter()
        .filter(|r| r[..nc].iter().all(|&v| v == 0))
        .map(|r| r[nc..].to_vec())
        .collect();
    Ok(Solution { x, kernel })
}

pub struct FqSolution {
    pub x: Vec<FqElem>,
    pub kernel: Vec<Vec<FqElem>>,
}

/// Gaussian elimination over F_q for M·x = b (M given row-major, rows × cols).
pub fn fq_solve(
    ctx: &FqContext,
    m: &[Vec<FqElem>],
    b: &[FqElem],
) -> Result<FqSolution, LinalgError> {
    let rows = m.len();
    if b.len() != rows {
        return Err(LinalgError::Dimension("rhs length".into()));
    }
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<FqElem>> = m
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        })
        .collect();
    let mut pivots = vec![];
    let mut rank = 0;
    for c in 0..cols {
        let Some(pr) = (rank..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, pr);
        let inv = ctx.inv(a[rank][c]).unwrap();
        for t in 0..=cols {
            a[rank][t] = ctx.mul(a[rank][t], inv);
        }
        for i in 0..rows {
            if i != rank && !a[i][c].is_zero() {
                let f = a[i][c];
                for t in 0..=cols {
                    let s = ctx.mul(f, a[rank][t]);
                    a[i][t] = ctx.sub(a[i][t], s);
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    if (rank..rows).any(|i| !a[i][cols].is_zero()) {
        return Err(LinalgError::Infeasible);
    }
    let mut x = vec![FqElem::ZERO; cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = a[i][cols];
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&fc| {
            let mut v = vec![FqElem::ZERO; cols];
            v[fc] = FqElem::ONE;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = ctx.neg(a[i][fc]);
            }
            v
        })
        .collect();
    Ok(FqSolution { x, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn span_brute(rows: &[Vec<u64>], n: usize, md: u64) -> std::collections::BTreeSet<Vec<u64>> {
        let mut set = std::collections::BTreeSet::new();
        set.insert(vec![0; n]);
        loop {
            let mut added = vec![];
            for v in &set {
                for r in rows {
                    let w: Vec<u64> = v.iter().zip(r).map(|(a, b)| (a + b) % md).collect();
                    if !set.contains(&w) {
                        added.push(w);
                    }
                }
            }
            if added.is_empty() {
                return set;
            }
            set.extend(added);
        }
    }

    #[test]
    fn trivial_forms() {
        let i3 = ZkMatrix::identity(3, 5, 2);
        assert_eq!(howell_form(&i3), i3);
        let z = ZkMatrix::zeros(2, 2, 5, 2);
        assert_eq!(howell_form(&z).rows, 0);
        let m = ZkMatrix::from_rows(&[vec![5, 0], vec![0, 1]], 2, 5, 2);
        let h = howell_form(&m);
        assert_eq!(h.row_vecs(), vec![vec![5, 0], vec![0, 1]]);
    }

    #[test]
    fn membership_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let (p, k) = (3u64, 2u32);
            let md = 9;
            let nrows = rng.gen_range(1..4);
            let rows: Vec<Vec<u64>> = (0..nrows)
                .map(|_| {
                    (0..3)
                        .map(|_| rng.gen_range(0..md) * if rng.gen_bool(0.4) { 3 } else { 1 } % md)
                        .collect()
                })
                .collect();
            let span = span_brute(&rows, 3, md);
            let mut rm = RowModule::new(3, p, k);
            for r in &rows {
                rm.insert(r);
            }
            assert_eq!(3u64.pow(rm.log_size() as u32), span.len() as u64);
            for a in 0..md {
                for b in 0..md {
                    for c in 0..md {
                        let v = vec![a, b, c];
                        assert_eq!(rm.contains(&v), span.contains(&v));
                    }
                }
            }
            let h = howell_form(&ZkMatrix::from_rows(&rows, 3, p, k));
            assert_eq!(howell_form(&h), h);
            // canonical: any spanning set gives the same form
            let mut shuffled = rows.clone();
            shuffled.reverse();
            shuffled.push(span.iter().nth(span.len() / 2).unwrap().clone());
            assert_eq!(howell_form(&ZkMatrix::from_rows(&shuffled, 3, p, k)), h);
        }
    }

    #[test]
    fn solve_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = ZkMatrix::from_rows(
                &(0..3)
                    .map(|_| (0..3).map(|_| rng.gen_range(0..9)).collect())
                    .collect::<Vec<_>>(),
                3,
                3,
                2,
            );
            let x0: Vec<u64> = (0..3).map(|_| rng.gen_range(0..9)).collect();
            let b = m.mul_vec(&x0);
            let sol = solve(&m, &b).unwrap();
            assert_eq!(m.mul_vec(&sol.x), b);
            for kv in &sol.kernel {
                assert!(m.mul_vec(kv).iter().all(|&v| v == 0));
            }
            // every homogeneous solution lies in the kernel span
            let kspan = span_brute(&sol.kernel, 3, 9);
            for a in 0..9 {
                for bb in 0..9 {
                    for c in 0..9 {
                        let v = vec![a, bb, c];
                        if m.mul_vec(&v).iter().all(|&t| t == 0) {
                            assert!(kspan.contains(&v));
                        }
                    }
                }
            }
        }
        let id = ZkMatrix::identity(2, 5, 1);
        let s = solve(&id, &[3, 4]).unwrap();
        assert_eq!(s.x, vec![3, 4]);
        assert!(s.kernel.is_empty());
        let z = ZkMatrix::zeros(2, 2, 5, 1);
        assert_eq!(solve(&z, &[0, 0]).unwrap().kernel.len(), 2);
        assert_eq!(solve(&z, &[1, 0]).err(), Some(LinalgError::Infeasible));
    }

    #[test]
    fn fq_gauss() {
        let k = FqContext::new(5, 2).unwrap();
        let id = vec![
            vec![FqElem::ONE, FqElem::ZERO],
            vec![FqElem::ZERO, FqElem::ONE],
        ];
        let b = vec![FqElem(7), FqElem(13)];
        assert_eq!(fq_solve(&k, &id, &b).unwrap().x, b);
        let two = FqElem(2);
        let (a, b2) = (FqElem(7), FqElem(13));
        let sing = vec![vec![a, b2], vec![k.mul(two, a), k.mul(two, b2)]];
        let s = fq_solve(&k, &sing, &[FqElem::ZERO, FqElem::ZERO]).unwrap();
        assert_eq!(s.kernel.len(), 1);
    }

    #[test]
    fn transform_record() {
        let m = ZkMatrix::from_rows(&[vec![3, 6], vec![1, 2], vec![0, 3]], 2, 3, 2);
        let (h, u) = howell_form_with_transform(&m);
        for i in 0..h.rows {
            let mut acc = vec![0u64; 2];
            for t in 0..m.rows {
                for c in 0..2 {
                    acc[c] = (acc[c] + u.get(i, t) * m.get(t, c)) % 9;
                }
            }
            assert_eq!(acc, h.row(i).to_vec());
        }
    }
}
