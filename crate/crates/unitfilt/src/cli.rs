//! Command bodies and verification suites shared by the binary and the acceptance target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::finlevel::gens::{
    boundary_witness, gen_set_fin_sym, kappa_n_sym, nonmembership_sample_n, omega_prediction,
    omega_sym, FinEvaluator, FinGenerators,
};
use crate::finlevel::span::{
    fin_top, finite_sweep, generation_report_n, kernel_bounds_n, relation_kernel_n, FinModel,
};
use crate::finlevel::{norm_down, trace_down, FnCtx};
use crate::fq::FqElem;
use crate::indexfn::{index_suite, pow_sat, IndexParams};
use crate::inflevel::span::{
    generation_report, kernel_bounds, relation_kernel, QuotientModel, Verdict,
};
use crate::inflevel::{
    alpha_sym, beta_sym, c_coeff, d_coeff, gen_set_sym, kappa_sym, nonmembership_sample,
    recurexp_check, s_eff, Evaluator, GeneratorSet,
};
use crate::normfield::{FiltrationClass, NormCtx};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CHECK: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;

/// Pass/fail tally for one suite or criterion.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub name: String,
    pub checks: u64,
    pub failed: u64,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(name: &str) -> Self {
        Summary {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < 40 {
                self.failures.push(msg());
            }
        }
    }

    pub fn fail(&mut self, msg: String) {
        self.check(false, || msg);
    }

    pub fn absorb(&mut self, o: Summary) {
        self.checks += o.checks;
        self.failed += o.failed;
        for f in o.failures {
            if self.failures.len() < 40 {
                self.failures.push(format!("{}: {f}", o.name));
            }
        }
        self.notes
            .extend(o.notes.into_iter().map(|n| format!("{}: {n}", o.name)));
    }

    pub fn passed(&self) -> bool {
        self.checks > 0 && self.failed == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.checks == 0 {
            EXIT_EMPTY
        } else if self.failed > 0 {
            EXIT_CHECK
        } else {
            EXIT_PASS
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.checks == 0 {
            "EMPTY"
        } else if self.failed == 0 {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{verdict} {} ({} checks, {} failed)",
            self.name, self.checks, self.failed
        )
    }
}

fn merge_all(name: &str, parts: Vec<Summary>) -> Summary {
    let mut s = Summary::new(name);
    for p in parts {
        s.absorb(p);
    }
    s
}

fn depth_of(c: &FiltrationClass) -> usize {
    match c {
        FiltrationClass::Depth { i, .. } => *i,
        FiltrationClass::Beyond { from } => *from,
        FiltrationClass::NonUnit { .. } => 0,
    }
}

fn all_r(p: u64) -> Vec<i64> {
    (2..=p as i64).collect()
}

// ---------------------------------------------------------------- index

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IndexRow {
    pub m: u32,
    pub theta: i64,
    pub psi_prime: i64,
    pub sigma: Option<u32>,
    pub epsilon: i64,
    pub a: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IndexTable {
    pub p: i64,
    pub r: i64,
    pub i: i64,
    pub s: i64,
    pub rows: Vec<IndexRow>,
}

pub fn index_table(p: i64, r: i64, i: i64, max_m: Option<u32>) -> Result<IndexTable, String> {
    let ip = IndexParams::new(p, r).map_err(|e| e.to_string())?;
    ip.check_index(i).map_err(|e| e.to_string())?;
    let s = ip.s_of(i);
    let mmax = max_m.unwrap_or(s.max(0) as u32);
    let rows = (0..=mmax)
        .map(|m| IndexRow {
            m,
            theta: ip.theta_m(m, i),
            psi_prime: ip.psi_prime_m(m, ip.psi_m(m, i)),
            sigma: ip.sigma(m, i).ok(),
            epsilon: ip.epsilon_m(m, i),
            a: ip.a_coeff(m, i),
        })
        .collect();
    Ok(IndexTable { p, r, i, s, rows })
}

impl IndexTable {
    pub fn text(&self) -> String {
        let mut out = format!(
            "p = {}, r = {}, i = {}, s = {}\n",
            self.p, self.r, self.i, self.s
        );
        out += "m\tθ_m\tψ′_m\tσ(m,i)\tε_m\ta_{m,i}\n";
        for row in &self.rows {
            let sg = row.sigma.map_or("-".to_string(), |s| s.to_string());
            out += &format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                row.m, row.theta, row.psi_prime, sg, row.epsilon, row.a
            );
        }
        out
    }
}

// ---------------------------------------------------------------- kappa

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KappaEntry {
    pub m: u32,
    pub symbolic: String,
    /// λ-depth found, when verified
    pub depth: Option<usize>,
    pub ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KappaReport {
    pub p: u64,
    pub f: usize,
    pub r: i64,
    pub i: i64,
    pub n: Option<u32>,
    pub entries: Vec<KappaEntry>,
    /// why depths were not verified, if they were not
    pub unverified: Option<String>,
}

impl KappaReport {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.ok != Some(false))
    }

    pub fn text(&self) -> String {
        let lvl = self.n.map_or("∞".to_string(), |n| n.to_string());
        let mut out = format!(
            "p = {}, f = {}, r = {}, i = {}, level {}\n",
            self.p, self.f, self.r, self.i, lvl
        );
        for e in &self.entries {
            let dep = match (e.depth, e.ok) {
                (Some(d), Some(true)) => format!("depth {d} ≥ i"),
                (Some(d), _) => format!("depth {d} < i  FAILED"),
                _ => "depth unverified".into(),
            };
            let name = match self.n {
                Some(n) => format!("κ_{{{n},{},i}}", e.m),
                None => format!("κ_{{{},i}}", e.m),
            };
            out += &format!("{name} = {}    [{dep}]\n", e.symbolic);
        }
        if let Some(u) = &self.unverified {
            out += &format!("note: {u}\n");
        }
        out
    }
}

/// Precision and budget knobs shared by the commands.
#[derive(Clone, Copy, Debug)]
pub struct Knobs {
    /// λ-precision for the field of norms (None: auto)
    pub prec_lambda: Option<usize>,
    /// p-adic precision K at finite level (None: auto)
    pub prec_p: Option<u32>,
    /// largest i whose depths are verified numerically
    pub budget: i64,
    pub seed: u64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            prec_lambda: None,
            prec_p: None,
            budget: 400,
            seed: 1,
        }
    }
}

fn norm_ctx(p: u64, f: usize, need: usize, k: &Knobs) -> NormCtx {
    let auto = (need + p as usize).max(4 * p as usize + 2);
    NormCtx::new(p, f, k.prec_lambda.unwrap_or(auto).max(need))
}

fn fn_ctx(p: u64, f: usize, n: u32, depth: usize, k: &Knobs) -> Result<FnCtx, String> {
    let kk = k
        .prec_p
        .unwrap_or_else(|| FnCtx::precision_for(p, n, depth));
    FnCtx::new(p, f, n, kk).map_err(|e| e.to_string())
}

pub fn kappa_report(
    p: u64,
    f: usize,
    r: i64,
    i: i64,
    n: Option<u32>,
    k: &Knobs,
) -> Result<KappaReport, String> {
    let ip = IndexParams::new(p as i64, r).map_err(|e| e.to_string())?;
    ip.check_index(i).map_err(|e| e.to_string())?;
    let s = s_eff(&ip, i);
    let syms = match n {
        None => (0..=s)
            .map(|m| kappa_sym(&ip, m, i).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?,
        Some(n) => {
            if n < 2 {
                return Err("level n ≥ 2 required".into());
            }
            (0..=s)
                .map(|m| kappa_n_sym(&ip, n, m, i).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let mut entries: Vec<KappaEntry> = syms
        .iter()
        .enumerate()
        .map(|(m, sy)| KappaEntry {
            m: m as u32,
            symbolic: sy.render(),
            depth: None,
            ok: None,
        })
        .collect();
    let mut unverified = None;
    if i > k.budget {
        unverified = Some(format!(
            "i = {i} exceeds the verification budget {}",
            k.budget
        ));
    } else {
        let depths: Vec<usize> = match n {
            None => {
                let ctx = norm_ctx(p, f, i as usize + p as usize, k);
                let g = GeneratorSet::build(&ctx, r).map_err(|e| e.to_string())?;
                let mut ev = Evaluator::new(&ctx, &g);
                syms.iter()
                    .map(|sy| {
                        Ok(depth_of(
                            &ctx.classify(&ev.eval(sy).map_err(|e| e.to_string())?),
                        ))
                    })
                    .collect::<Result<_, String>>()?
            }
            Some(n) => {
                let ctx = fn_ctx(p, f, n, i as usize + 2 * p as usize, k)?;
                let g = FinGenerators::build(&ctx, r).map_err(|e| e.to_string())?;
                let mut ev = FinEvaluator::new(&ctx, &g);
                syms.iter()
                    .map(|sy| {
                        Ok(depth_of(
                            &ctx.classify(&ev.eval(sy).map_err(|e| e.to_string())?),
                        ))
                    })
                    .collect::<Result<_, String>>()?
            }
        };
        for (e, d) in entries.iter_mut().zip(depths) {
            e.depth = Some(d);
            e.ok = Some(d >= i as usize);
        }
    }
    Ok(KappaReport {
        p,
        f,
        r,
        i,
        n,
        entries,
        unverified,
    })
}

// ---------------------------------------------------------------- gens

#[derive(Clone, Debug, Serialize)]
pub struct GensReport {
    pub p: u64,
    pub f: usize,
    pub r: i64,
    pub i: i64,
    pub n: Option<u32>,
    pub elements: Vec<String>,
    pub cardinality: usize,
    pub verdict: Option<Verdict>,
    pub unverified: Option<String>,
}

impl GensReport {
    pub fn ok(&self) -> bool {
        self.verdict
            .as_ref()
            .is_none_or(|v| *v == Verdict::Generates)
    }

    pub fn text(&self) -> String {
        let lvl = self.n.map_or("∞".to_string(), |n| n.to_string());
        let mut out = format!(
            "p = {}, f = {}, r = {}, i = {}, level {}: {} elements\n",
            self.p, self.f, self.r, self.i, lvl, self.cardinality
        );
        for e in &self.elements {
            out += &format!("  {e}\n");
        }
        match (&self.verdict, &self.unverified) {
            (Some(v), _) => out += &format!("generation check: {v:?}\n"),
            (None, Some(u)) => out += &format!("note: {u}\n"),
            _ => {}
        }
        out
    }
}

pub fn gens_report(
    p: u64,
    f: usize,
    r: i64,
    i: i64,
    n: Option<u32>,
    k: &Knobs,
) -> Result<GensReport, String> {
    let ip = IndexParams::new(p as i64, r).map_err(|e| e.to_string())?;
    ip.check_index(i).map_err(|e| e.to_string())?;
    let syms = match n {
        None => gen_set_sym(&ip, i).map_err(|e| e.to_string())?,
        Some(n) if n >= 2 => gen_set_fin_sym(&ip, n, i).map_err(|e| e.to_string())?,
        Some(_) => return Err("level n ≥ 2 required".into()),
    };
    let elements: Vec<String> = syms.iter().map(|s| s.render()).collect();
    let mut verdict = None;
    let mut unverified = None;
    if i > k.budget {
        unverified = Some(format!(
            "i = {i} exceeds the verification budget {}",
            k.budget
        ));
    } else {
        match n {
            None => {
                let ctx = norm_ctx(p, f, i as usize + 1, k);
                let g = GeneratorSet::build(&ctx, r).map_err(|e| e.to_string())?;
                let model =
                    QuotientModel::build(&ctx, &g, i as usize).map_err(|e| e.to_string())?;
                verdict = Some(
                    generation_report(&model, &ip, i)
                        .map_err(|e| e.to_string())?
                        .full,
                );
            }
            Some(n) => {
                let top = fin_top(&ip, n, i);
                let ctx = fn_ctx(p, f, n, top, k)?;
                let g = FinGenerators::build(&ctx, r).map_err(|e| e.to_string())?;
                let model = FinModel::build(&ctx, &g, top).map_err(|e| e.to_string())?;
                verdict = Some(
                    generation_report_n(&model, &ip, i)
                        .map_err(|e| e.to_string())?
                        .full,
                );
            }
        }
    }
    Ok(GensReport {
        p,
        f,
        r,
        i,
        n,
        cardinality: elements.len(),
        elements,
        verdict,
        unverified,
    })
}

// ---------------------------------------------------------------- criteria

/// The two worked κ tables, transcribed.
pub fn kappa_tables() -> Summary {
    let mut s = Summary::new("kappa tables");
    let cases: [(i64, i64, &[&str]); 2] = [
        (
            3,
            11899,
            &[
                "T²³⁸⁰u₃",
                "ρT⁴⁷⁶u₃",
                "(ρ²T⁹⁵ − ρT⁴⁷⁵ − T²³⁷⁹)u₃",
                "(ρ³T¹⁹ − ρ²T⁹⁵)u₃",
                "ρ⁴T⁴u₃",
                "(ρ⁵ − ρ⁴T³ − ρ³T¹⁹)u₃",
            ],
        ),
        (
            5,
            92729,
            &[
                "T¹⁸⁵⁴⁵u₅",
                "(ρT³⁷⁰⁸ − T¹⁸⁵⁴⁴)u₅",
                "ρ²T⁷⁴¹u₅",
                "(ρ³T¹⁴⁷ − ρ²T⁷⁴⁰ − ρT³⁷⁰⁸)u₅",
                "ρ⁴T²⁹u₅",
                "(ρ⁵T⁴ + ρ⁴T²⁸)u₅ + ρ⁷w",
                "ρ⁶u₅ + ρ⁷w",
            ],
        ),
    ];
    for (r, i, want) in cases {
        match kappa_report(
            5,
            1,
            r,
            i,
            None,
            &Knobs {
                budget: 0,
                ..Default::default()
            },
        ) {
            Ok(rep) => {
                s.check(rep.entries.len() == want.len(), || {
                    format!("r={r}: {} entries", rep.entries.len())
                });
                for (e, w) in rep.entries.iter().zip(want) {
                    s.check(e.symbolic == *w, || {
                        format!("r={r} κ_{}: got {} want {w}", e.m, e.symbolic)
                    });
                }
            }
            Err(e) => s.fail(format!("r={r}: {e}")),
        }
    }
    s
}

/// κ, α, β depths in the field of norms for i ≤ imax.
pub fn depth_certification(imax: usize, only_p: Option<u64>) -> Summary {
    let jobs: Vec<(u64, usize, i64)> = [(3u64, 1usize), (3, 2), (5, 1), (5, 2)]
        .iter()
        .filter(|(p, _)| only_p.is_none_or(|q| q == *p))
        .flat_map(|&(p, f)| all_r(p).into_iter().map(move |r| (p, f, r)))
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(p, f, r)| {
            let mut s = Summary::new(&format!("p={p} f={f} r={r}"));
            if imax == 0 {
                return s;
            }
            let ip = IndexParams::new(p as i64, r).unwrap();
            let ctx = NormCtx::new(p, f, imax + p as usize + 1);
            let g = match GeneratorSet::build(&ctx, r) {
                Ok(g) => g,
                Err(e) => {
                    s.fail(e.to_string());
                    return s;
                }
            };
            let mut ev = Evaluator::new(&ctx, &g);
            let mut m = 0u32;
            while (ip.phi_m(m, 0) as usize) <= imax {
                let mut j = 0;
                while (ip.phi_m(m, j) as usize) <= imax {
                    let d = ip.phi_m(m, j) as usize;
                    let got = ev.eval(&alpha_sym(&ip, m, j)).map(|z| ctx.classify(&z));
                    s.check(
                        matches!(got, Ok(FiltrationClass::Depth { i, leading }) if i == d && leading == ctx.xi),
                        || format!("α_{{{m},{j}}}: {got:?}, want ({d}, ξ)"),
                    );
                    j += 1;
                }
                if r == p as i64 {
                    let mut l = 0;
                    while (ip.phi_prime_m(m, pow_sat(p as i64, l) - 1) as usize) <= imax {
                        let d = ip.phi_prime_m(m, pow_sat(p as i64, l) - 1) as usize;
                        let got = beta_sym(&ip, m, l).map_err(|e| e.to_string()).and_then(|b| ev.eval(&b).map_err(|e| e.to_string())).map(|z| ctx.classify(&z));
                        s.check(
                            matches!(got, Ok(FiltrationClass::Depth { i, leading }) if i == d && leading == ctx.fq.neg(ctx.xi)),
                            || format!("β_{{{m},{l}}}: {got:?}, want ({d}, −ξ)"),
                        );
                        l += 1;
                    }
                }
                m += 1;
            }
            let mut i = r;
            while i as usize <= imax {
                match gen_set_sym(&ip, i) {
                    Ok(set) => {
                        for sy in set {
                            let got = ev.eval(&sy).map(|z| ctx.classify(&z));
                            s.check(matches!(&got, Ok(c) if c.at_least(i as usize)), || {
                                format!("i={i} {}: {got:?}", sy.render())
                            });
                        }
                    }
                    Err(e) => s.fail(format!("i={i}: {e}")),
                }
                i += p as i64 - 1;
            }
            s
        })
        .collect();
    merge_all("depth certification", parts)
}

/// Index-function identities, exhaustive to imax.
pub fn index_identities(imax: i64) -> Summary {
    let jobs: Vec<(i64, i64)> = [3i64, 5, 7]
        .iter()
        .flat_map(|&p| (2..=p).map(move |r| (p, r)))
        .collect();
    let mut s = Summary::new("index identities");
    if imax <= 0 {
        return s;
    }
    for (p, r) in jobs {
        let rep = index_suite(&IndexParams::new(p, r).unwrap(), imax, 8);
        s.checks += rep.checks;
        s.failed += rep.violations.len() as u64;
        for v in rep.violations.into_iter().take(5) {
            s.failures.push(format!("p={p} r={r}: {v}"));
        }
        for (name, (count, wit)) in rep.literal_failures {
            s.notes.push(format!(
                "p={p} r={r}: literal form of {name} fails {count} times (first {wit:?})"
            ));
        }
    }
    s
}

/// c_{j,k} = d_{j,k} with c by tuple enumeration, and d_{p−1,k} = −1.
pub fn combinatorial_identity() -> Summary {
    let mut s = Summary::new("c = d");
    for p in [3i64, 5, 7, 11, 13] {
        for j in 1..p {
            for k in 1..=j {
                let (c, d) = (c_coeff(p, j, k), d_coeff(p, j, k));
                s.check(matches!((&c, &d), (Ok(a), Ok(b)) if a == b), || {
                    format!("p={p} j={j} k={k}: {c:?} vs {d:?}")
                });
            }
        }
        for k in 1..p {
            let d = d_coeff(p, p - 1, k);
            s.check(matches!(d, Ok(v) if v.rem_euclid(p) == p - 1), || {
                format!("p={p} d_{{p−1,{k}}} = {d:?}")
            });
        }
    }
    s
}

pub fn series_recursion() -> Summary {
    let mut s = Summary::new("γ-recursion series");
    for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
        let ctx = NormCtx::new(p, f, (p * p + 2 * p) as usize);
        for j in 1..p as i64 {
            let got = recurexp_check(&ctx, j);
            s.check(matches!(got, Ok(None)), || {
                format!("p={p} f={f} j={j}: {got:?}")
            });
        }
    }
    s
}

/// Residuals of the generator relations in the field of norms at λ-precision ≥ 3p².
pub fn generator_relations() -> Summary {
    let mut s = Summary::new("generator relations");
    for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
        let n = 3 * (p * p) as usize + p as usize;
        let ctx = NormCtx::new(p, f, n);
        for r in all_r(p) {
            match GeneratorSet::build(&ctx, r) {
                Ok(g) => {
                    for c in &g.certificates {
                        s.check(c.residual_depth.is_none(), || {
                            format!(
                                "p={p} f={f} r={r} {}: residual at {:?}",
                                c.relation, c.residual_depth
                            )
                        });
                    }
                }
                Err(e) => s.fail(format!("p={p} f={f} r={r}: {e}")),
            }
        }
        s.notes.push(format!(
            "p={p} f={f}: relations hold below λ^{}",
            ctx.usable()
        ));
    }
    s
}

fn trace_checks(s: &mut Summary) {
    for p in [3u64, 5] {
        for f in [1usize, 2] {
            let (lo, hi) = match (FnCtx::new(p, f, 2, 4), FnCtx::new(p, f, 3, 4)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    s.fail(format!("p={p} f={f}: {:?} {:?}", a.err(), b.err()));
                    continue;
                }
            };
            for k in 1..=(p * p) as usize {
                for eps in 0..=1usize {
                    let ok = trace_down(&hi, &lo, &hi.lambda_pow(p as usize * k - eps)).is_ok_and(
                        |tr| {
                            let want = lo.scale_int(&lo.lambda_pow(k - eps), p);
                            lo.divisible_by_p_power(&lo.sub_elem(&tr, &want), 3)
                        },
                    );
                    s.check(ok, || format!("trace p={p} f={f} k={k} ε={eps}"));
                }
            }
        }
    }
}

fn binomial_norm_checks(s: &mut Summary, seed: u64) {
    for p in [3u64, 5] {
        for f in [1usize, 2] {
            let pn = (p * p) as usize;
            let k = FnCtx::precision_for(p, 2, 2 * pn);
            let (lo, hi) = match (FnCtx::new(p, f, 2, k), FnCtx::new(p, f, 3, k)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    s.fail(format!("binomial norm p={p} f={f}: context"));
                    continue;
                }
            };
            let e = lo.e;
            let q = p.pow(f as u32) as u32;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p ^ ((f as u64) << 8));
            let pu = p as usize;
            for t in 1..=pn + 2 * pu {
                for _ in 0..4 {
                    let eta = FqElem(rng.gen_range(1..q));
                    let Ok(nz) = norm_down(&hi, &lo, &hi.binomial(t, eta)) else {
                        s.fail(format!("binomial norm p={p} f={f} t={t}: norm failed"));
                        continue;
                    };
                    let c = lo.classify(&nz);
                    let want = if t < pn - 1 {
                        Some((t, lo.fq.frob1(eta)))
                    } else if t <= pn {
                        let l = lo.fq.sub(lo.fq.frob1(eta), eta);
                        (!l.is_zero()).then_some((t, l))
                    } else if t % pu == 0 || t % pu == pu - 1 {
                        let eps = (t % pu != 0) as usize;
                        Some((e + (t + eps) / pu - eps, lo.fq.neg(eta)))
                    } else {
                        None
                    };
                    let ok = match want {
                        Some((d, l)) => c == FiltrationClass::Depth { i: d, leading: l },
                        // η ∈ F_p at t ∈ {p^n−1, p^n}, or the generic bound for t > p^n
                        None => c.at_least(if t <= pn { t + 1 } else { e + t / pu }),
                    };
                    s.check(ok, || {
                        format!("binomial norm p={p} f={f} t={t} η={eta:?}: {c:?}, want {want:?}")
                    });
                }
            }
        }
    }
}

fn power_checks(s: &mut Summary, seed: u64) {
    for p in [3u64, 5] {
        for f in [1usize, 2] {
            for n in [2u32, 3] {
                let pn = (p as usize).pow(n);
                let Ok(ctx) = FnCtx::new(p, f, n, FnCtx::precision_for(p, n, 2 * pn)) else {
                    s.fail(format!("power p={p} f={f} n={n}: context"));
                    continue;
                };
                let q = p.pow(f as u32) as u32;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p ^ (n as u64) << 4);
                for i in pn / p as usize + 1..=pn {
                    let eta = FqElem(rng.gen_range(1..q));
                    let z = ctx.project_eigenspace(&ctx.binomial(i, eta), i as i64);
                    let zp = ctx.int_pow(&z, p as i64);
                    let want = FiltrationClass::Depth {
                        i: i + ctx.e,
                        leading: ctx.fq.neg(eta),
                    };
                    let got = ctx.classify(&zp);
                    s.check(got == want, || {
                        format!("power p={p} f={f} n={n} i={i}: {got:?}")
                    });
                }
            }
        }
    }
}

fn presentation_checks(s: &mut Summary) {
    let jobs: Vec<(u64, usize, u32)> = [3u64, 5]
        .iter()
        .flat_map(|&p| {
            [1usize, 2]
                .into_iter()
                .flat_map(move |f| [2u32, 3].into_iter().map(move |n| (p, f, n)))
        })
        .collect();
    let parts: Vec<Summary> = jobs
        .par_iter()
        .map(|&(p, f, n)| {
            let mut s = Summary::new(&format!("p={p} f={f} n={n}"));
            let pn = (p as usize).pow(n);
            let ctx = match FnCtx::new(p, f, n, FnCtx::precision_for(p, n, pn + 3 * p as usize)) {
                Ok(c) => c,
                Err(e) => {
                    s.fail(e.to_string());
                    return s;
                }
            };
            let ipn = |r| IndexParams::new(p as i64, r).unwrap();
            for r in all_r(p) {
                let g = match FinGenerators::build(&ctx, r) {
                    Ok(g) => g,
                    Err(e) => {
                        s.fail(format!("r={r}: {e}"));
                        continue;
                    }
                };
                for c in &g.certificates {
                    s.check(c.residual_depth.is_none(), || format!("r={r} {}: {:?}", c.relation, c.residual_depth));
                }
                let ip = ipn(r);
                let mut ev = FinEvaluator::new(&ctx, &g);
                if r == p as i64 - 1 {
                    for m in 0..=n - 2 {
                        for l in 0..=m {
                            let want = omega_prediction(&ctx, &ip, n, m, l);
                            let got = omega_sym(&ip, n, m, l)
                                .and_then(|o| ev.eval(&o))
                                .map(|z| ctx.classify(&z));
                            s.check(
                                matches!(got, Ok(FiltrationClass::Depth { i, leading }) if (i, leading) == want),
                                || format!("ω_{{{n},{m},{l}}}: {got:?}, want {want:?}"),
                            );
                        }
                    }
                }
                if r == p as i64 {
                    let want = (pn, ctx.fq.frobenius(ctx.xi, -1));
                    let got = beta_sym(&ip, 0, n - 1).map_err(|e| e.to_string()).and_then(|b| ev.eval(&b).map_err(|e| e.to_string())).map(|z| ctx.classify(&z));
                    s.check(
                        matches!(got, Ok(FiltrationClass::Depth { i, leading }) if (i, leading) == want),
                        || format!("β_{{{n},0,{}}}: {got:?}, want {want:?}", n - 1),
                    );
                }
            }
            s
        })
        .collect();
    for part in parts {
        s.absorb(part);
    }
}

/// Finite-level arithmetic laws, generator relations and special-element depths.
pub fn finite_level(seed: u64) -> Summary {
    let mut s = Summary::new("finite level");
    trace_checks(&mut s);
    binomial_norm_checks(&mut s, seed);
    power_checks(&mut s, seed);
    presentation_checks(&mut s);
    s
}

/// Generation and minimality in the field of norms (i ≤ imax) and at level 2 (i ≤ p²+e_2).
pub fn generation_minimality(imax: usize, finite: bool, only_p: Option<u64>) -> Summary {
    let mut cases: Vec<(u64, i64)> = vec![(3, 2), (3, 3), (5, 2), (5, 3)];
    cases.retain(|(p, _)| only_p.is_none_or(|q| q == *p));
    let jobs: Vec<(u64, usize, i64)> = cases
        .iter()
        .flat_map(|&(p, r)| [1usize, 2].into_iter().map(move |f| (p, f, r)))
        .collect();
    let parts: Vec<Summary> = jobs
        .par_iter()
        .map(|&(p, f, r)| {
            let mut s = Summary::new(&format!("p={p} f={f} r={r}"));
            let ip = IndexParams::new(p as i64, r).unwrap();
            if imax > 0 {
                let ctx = NormCtx::new(p, f, (imax + 1).max(3 * (p * p) as usize + 1));
                let model = GeneratorSet::build(&ctx, r)
                    .map_err(|e| e.to_string())
                    .and_then(|g| QuotientModel::build(&ctx, &g, imax).map_err(|e| e.to_string()));
                match model {
                    Ok(model) => {
                        let mut i = r;
                        while i as usize <= imax {
                            match generation_report(&model, &ip, i) {
                                Ok(rep) => s.check(rep.consistent(r == p as i64), || format!("∞ i={i}: {rep:?}")),
                                Err(e) => s.fail(format!("∞ i={i}: {e}")),
                            }
                            let (a, b) = kernel_bounds(&ip, i);
                            for (aa, bb) in [(a, b), (a + 1, b + p as usize - 1)] {
                                match relation_kernel(&ip, f, i, aa, bb) {
                                    Ok(k) => s.check(k.violations.is_empty(), || format!("kernel ∞ i={i}: {:?}", k.violations)),
                                    Err(e) => s.fail(format!("kernel ∞ i={i}: {e}")),
                                }
                            }
                            i += p as i64 - 1;
                        }
                    }
                    Err(e) => s.fail(e),
                }
            }
            if finite {
                let n = 2;
                let imax_n = pow_sat(p as i64, n) + ip.e_of(n);
                match finite_sweep(p, f, n, r, imax_n) {
                    Ok(reps) => {
                        for rep in reps {
                            s.check(rep.consistent(), || format!("level 2 i={}: {rep:?}", rep.i));
                            if r <= p as i64 - 2 && rep.i <= pow_sat(p as i64, n) {
                                let (a, b) = kernel_bounds_n(&ip, n, rep.i);
                                match relation_kernel_n(&ip, f, n, rep.i, a, b) {
                                    Ok(k) => {
                                        s.check(k.violations.is_empty() && k.inconsistent.is_empty(), || {
                                            format!("kernel level 2 i={}: {k:?}", rep.i)
                                        });
                                        for kk in 0..rep.size {
                                            if rep.generating_subsets.iter().any(|g| !g.contains(&kk)) {
                                                s.check(
                                                    ip.epsilon_m(kk as u32, rep.i) == 0 && k.q[kk].is_some_and(|q| q != 0),
                                                    || format!("level 2 i={} κ_{kk} droppable but q = {:?}", rep.i, k.q[kk]),
                                                );
                                            }
                                        }
                                    }
                                    Err(e) => s.fail(format!("kernel level 2 i={}: {e}", rep.i)),
                                }
                            }
                        }
                    }
                    Err(e) => s.fail(format!("level 2: {e}")),
                }
            }
            s
        })
        .collect();
    merge_all("generation + minimality", parts)
}

/// Non-membership sampling: field of norms (r ≤ p−2 and r = p) and level n
/// (r ≤ p−2, r = p−1 with v, r = p with w_n), `trials` per (m, j) cell.
pub fn sampling(trials: usize, seed: u64, only_p: Option<u64>) -> Summary {
    let mut jobs: Vec<(u64, usize, i64, Option<u32>)> = vec![];
    for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
        for r in all_r(p) {
            if r != p as i64 - 1 {
                jobs.push((p, f, r, None));
            }
            jobs.push((p, f, r, Some(2)));
            if p == 3 {
                jobs.push((p, f, r, Some(3)));
            }
        }
    }
    jobs.retain(|j| only_p.is_none_or(|q| q == j.0));
    let parts: Vec<Summary> = jobs
        .par_iter()
        .map(|&(p, f, r, n)| {
            let lvl = n.map_or("∞".into(), |n| n.to_string());
            let mut s = Summary::new(&format!("p={p} f={f} r={r} level {lvl}"));
            if trials == 0 {
                return s;
            }
            let ip = IndexParams::new(p as i64, r).unwrap();
            let mut cells = 0;
            match n {
                None => {
                    let ctx = NormCtx::new(p, f, 12 * p as usize * p as usize);
                    let Ok(g) = GeneratorSet::build(&ctx, r) else {
                        s.fail("generators".into());
                        return s;
                    };
                    for m in 0..3u32 {
                        for j in 0..2 * p as i64 {
                            if let Ok(rep) = nonmembership_sample(&ctx, &g, &ip, m, j, trials, seed) {
                                cells += 1;
                                s.check(rep.counterexamples.is_empty(), || {
                                    format!("m={m} j={j} bound {}: {}", rep.bound, rep.counterexamples[0])
                                });
                            }
                        }
                    }
                }
                Some(n) => {
                    let pn = (p as usize).pow(n);
                    let Ok(ctx) = FnCtx::new(p, f, n, FnCtx::precision_for(p, n, 2 * pn + 2 * p as usize)) else {
                        s.fail("context".into());
                        return s;
                    };
                    let Ok(g) = FinGenerators::build(&ctx, r) else {
                        s.fail("generators".into());
                        return s;
                    };
                    for m in 0..n {
                        for j in 0..pn as i64 {
                            if ip.phi_m(m, j) > pn as i64 {
                                break;
                            }
                            if let Ok(rep) = nonmembership_sample_n(&ctx, &g, &ip, m, j, trials, seed) {
                                cells += 1;
                                s.check(rep.counterexamples.is_empty(), || {
                                    format!("m={m} j={j} bound {}: {} of {} trials reach it, e.g. {}", rep.bound, rep.counterexamples.len(), trials, rep.counterexamples[0])
                                });
                            }
                        }
                    }
                    if r == p as i64 && f > 1 {
                        if let Ok(Some((b, d, depth))) = boundary_witness(&ctx, &g) {
                            s.notes.push(format!(
                                "exhaustive witness at φ_0(p^{{n−1}}−1) = p^n: b = {b:?}, d = p^{n}·{d:?} reaches depth {depth}"
                            ));
                        }
                    }
                }
            }
            s.notes.push(format!("{cells} cells × {trials} trials"));
            s
        })
        .collect();
    merge_all("non-membership sampling", parts)
}

/// A named verification suite: index | series | generators | finite | minimality | all.
pub fn run_suite(
    name: &str,
    budget: Option<i64>,
    seed: u64,
    only_p: Option<u64>,
) -> Result<Vec<Summary>, String> {
    let cap = |default: i64| budget.map_or(default, |b| b.min(default));
    let mut out = vec![];
    let want = |s: &str| name == s || name == "all";
    if ![
        "index",
        "series",
        "generators",
        "finite",
        "minimality",
        "all",
    ]
    .contains(&name)
    {
        return Err(format!("unknown suite `{name}`"));
    }
    if want("index") {
        out.push(index_identities(cap(100_000)));
    }
    if want("series") && cap(1) > 0 {
        out.push(depth_certification(cap(300) as usize, only_p));
        out.push(combinatorial_identity());
        out.push(series_recursion());
    }
    if want("generators") && cap(1) > 0 {
        out.push(kappa_tables());
        out.push(generator_relations());
    }
    if want("finite") && cap(1) > 0 {
        out.push(finite_level(seed));
        out.push(sampling(cap(200) as usize, seed, only_p));
    }
    if want("minimality") && cap(1) > 0 {
        out.push(generation_minimality(cap(200) as usize, true, only_p));
    }
    Ok(out)
}

pub fn summaries_json(sums: &[Summary]) -> Value {
    let checks: u64 = sums.iter().map(|s| s.checks).sum();
    let failed: u64 = sums.iter().map(|s| s.failed).sum();
    json!({ "checks": checks, "failed": failed, "suites": sums })
}
