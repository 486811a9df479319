use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unitfilt::cli::{self, Knobs, Summary, EXIT_CHECK, EXIT_EMPTY, EXIT_PASS, EXIT_VALIDATION};

#[derive(Parser)]
#[command(
    name = "unitfilt",
    version,
    about = "Generators of eigenspace unit filtrations in cyclotomic towers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Emit {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    p: i64,
    #[arg(long, default_value_t = 1)]
    f: usize,
    #[arg(long)]
    r: i64,
    #[arg(long)]
    i: i64,
    /// finite level n (omit for the field of norms)
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    prec_lambda: Option<usize>,
    #[arg(long)]
    prec_p: Option<u32>,
    /// largest i whose depths or generation are verified
    #[arg(long, default_value_t = 400)]
    budget: i64,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table of θ_m, ψ′_m, σ, ε_m, a_{m,i}
    Index {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        r: i64,
        #[arg(long)]
        i: i64,
        /// largest m shown (default s)
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// κ elements with verified depths
    Kappa(Common),
    /// Generating set with a generation check
    Gens(Common),
    /// Run a verification suite
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// restrict sweeps to one prime
        #[arg(long)]
        p: Option<u64>,
        /// caps sweep ranges; 0 runs nothing
        #[arg(long)]
        budget: Option<i64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
}

fn validate(c: &Common) -> Result<(), String> {
    if c.p < 3 || !unitfilt::indexfn::is_prime(c.p) {
        return Err(format!("p = {} must be an odd prime", c.p));
    }
    if c.f == 0 {
        return Err("f must be ≥ 1".into());
    }
    if (c.p as u64).pow(c.f as u32) >= 1 << 16 {
        return Err("p^f too large".into());
    }
    Ok(())
}

fn knobs(c: &Common) -> Knobs {
    Knobs {
        prec_lambda: c.prec_lambda,
        prec_p: c.prec_p,
        budget: c.budget,
        ..Knobs::default()
    }
}

fn print<T: serde::Serialize>(emit: Emit, v: &T, text: impl FnOnce() -> String) {
    match emit {
        Emit::Json => println!("{}", serde_json::to_string_pretty(v).expect("serializable")),
        Emit::Text => print!("{}", text()),
    }
}

fn run(cli: Cli) -> i32 {
    match cli.cmd {
        Cmd::Index { p, r, i, m, emit } => match cli::index_table(p, r, i, m) {
            Ok(t) => {
                print(emit, &t, || t.text());
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            }
        },
        Cmd::Kappa(c) => {
            if let Err(e) = validate(&c) {
                eprintln!("error: {e}");
                return EXIT_VALIDATION;
            }
            match cli::kappa_report(c.p as u64, c.f, c.r, c.i, c.n, &knobs(&c)) {
                Ok(rep) => {
                    print(c.emit, &rep, || rep.text());
                    if rep.all_ok() {
                        EXIT_PASS
                    } else {
                        EXIT_CHECK
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_VALIDATION
                }
            }
        }
        Cmd::Gens(c) => {
            if let Err(e) = validate(&c) {
                eprintln!("error: {e}");
                return EXIT_VALIDATION;
            }
            match cli::gens_report(c.p as u64, c.f, c.r, c.i, c.n, &knobs(&c)) {
                Ok(rep) => {
                    print(c.emit, &rep, || rep.text());
                    if rep.ok() {
                        EXIT_PASS
                    } else {
                        EXIT_CHECK
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_VALIDATION
                }
            }
        }
        Cmd::Verify {
            suite,
            p,
            budget,
            seed,
            emit,
        } => {
            let sums = match cli::run_suite(&suite, budget, seed, p) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_VALIDATION;
                }
            };
            let total = Summary {
                name: suite.clone(),
                checks: sums.iter().map(|s| s.checks).sum(),
                failed: sums.iter().map(|s| s.failed).sum(),
                ..Summary::default()
            };
            print(emit, &cli::summaries_json(&sums), || {
                let mut out = String::new();
                for s in &sums {
                    out += &s.line();
                    out.push('\n');
                    for f in &s.failures {
                        out += &format!("    {f}\n");
                    }
                }
                if total.checks == 0 {
                    out += "no tests executed\n";
                }
                out
            });
            if total.checks == 0 {
                EXIT_EMPTY
            } else {
                total.exit_code()
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}
