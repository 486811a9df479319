//! Acceptance run: one PASS/FAIL line per criterion with its wall time and time limit.

use std::time::{Duration, Instant};

use unitfilt::cli::{self, Summary};

const SEED: u64 = 20;

fn run(n: usize, limit_s: u64, f: impl FnOnce() -> Vec<Summary>) -> bool {
    let t = Instant::now();
    let sums = f();
    let el = t.elapsed();
    let checks: u64 = sums.iter().map(|s| s.checks).sum();
    let failed: u64 = sums.iter().map(|s| s.failed).sum();
    let in_time = el <= Duration::from_secs(limit_s);
    let ok = checks > 0 && failed == 0 && in_time;
    let names: Vec<&str> = sums.iter().map(|s| s.name.as_str()).collect();
    println!(
        "{} criterion {n}: {} ({checks} checks, {failed} failed, {:.1}s of {limit_s}s)",
        if ok { "PASS" } else { "FAIL" },
        names.join(" + "),
        el.as_secs_f64()
    );
    for s in &sums {
        for f in s.failures.iter().take(8) {
            println!("    {}: {f}", s.name);
        }
        for note in s
            .notes
            .iter()
            .filter(|n| n.contains("witness") || n.contains("literal"))
        {
            println!("    note: {note}");
        }
    }
    ok
}

fn main() {
    let results = [
        run(1, 10, || vec![cli::kappa_tables()]),
        run(2, 600, || vec![cli::depth_certification(300, None)]),
        run(3, 60, || vec![cli::index_identities(100_000)]),
        run(4, 60, || vec![cli::combinatorial_identity()]),
        run(5, 60, || vec![cli::series_recursion()]),
        run(6, 120, || vec![cli::generator_relations()]),
        run(7, 900, || vec![cli::finite_level(SEED)]),
        run(8, 1800, || {
            vec![cli::generation_minimality(200, true, None)]
        }),
        run(9, 600, || vec![cli::sampling(200, SEED, None)]),
    ];
    let passed = results.iter().filter(|&&b| b).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
