//! Command-line front end: catalog dumps, single computations and the
//! verification suites.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use surfbraid::presentations::{abelianization, catalog, Family, Presentation};
use surfbraid::{klein, nilpotent_quotient, two_quotient_tower, Error, Word};

pub mod suites;

pub use suites::{run_suite, Bounds, Claim, SuiteResult, Verdict, SUITES};

#[derive(Parser, Debug)]
#[command(name = "surfbraid", version, about = "Surface braid group computations")]
struct Cli {
    /// Coset bound for enumerations.
    #[arg(long, global = true)]
    max_cosets: Option<usize>,
    /// Nilpotency class bound.
    #[arg(long, global = true)]
    class: Option<usize>,
    /// Tower depth or level bound, depending on the suite.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Write the suite report to this file instead of stdout.
    #[arg(long, global = true)]
    json: Option<std::path::PathBuf>,
    /// Seed for randomized claims.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print a catalog presentation.
    Catalog { family: String, n: usize, g: Option<usize> },
    /// Print abelian invariants.
    Abelianize { family: String, n: usize, g: Option<usize> },
    /// Print the lower central layers up to a class.
    Nq { family: String, n: usize, class: usize, g: Option<usize> },
    /// Print the orders of the mod-2 tower stages.
    Tower { family: String, n: usize, depth: usize, g: Option<usize> },
    /// Normal form of a word in P_n(K).
    Solve { n: usize, word: String },
    /// Run a verification suite.
    Verify { suite: String },
}

fn presentation(family: &str, n: usize, g: Option<usize>) -> surfbraid::Result<Presentation> {
    let f: Family = family.parse()?;
    catalog(f, n, g)
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    2
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let bounds = Bounds { max_cosets: cli.max_cosets, class: cli.class, depth: cli.depth, seed: cli.seed };
    let res: surfbraid::Result<i32> = (|| match &cli.cmd {
        Cmd::Catalog { family, n, g } => {
            let _ = write!(out, "{}", presentation(family, *n, *g)?.to_text());
            Ok(0)
        }
        Cmd::Abelianize { family, n, g } => {
            let a = abelianization(&presentation(family, *n, *g)?);
            let _ = writeln!(out, "{}", invariants(&a));
            Ok(0)
        }
        Cmd::Nq { family, n, class, g } => {
            let rep = nilpotent_quotient(&presentation(family, *n, *g)?, *class)?;
            for (k, l) in rep.layers.iter().enumerate() {
                let _ = writeln!(out, "layer {}: {}", k + 1, invariants(l));
            }
            Ok(0)
        }
        Cmd::Tower { family, n, depth, g } => {
            for q in two_quotient_tower(&presentation(family, *n, *g)?, *depth)? {
                let _ = writeln!(out, "stage {}: order 2^{}", q.stage, q.order_log2());
            }
            Ok(0)
        }
        Cmd::Solve { n, word } => {
            let x: Word = word.parse()?;
            let nf = klein::normal_form(*n, &x)?;
            if nf.is_identity() {
                let _ = writeln!(out, "trivial");
            } else {
                let _ = writeln!(out, "{nf}");
            }
            Ok(0)
        }
        Cmd::Verify { suite } => {
            let Some(r) = run_suite(suite, &bounds) else {
                return Err(Error::BadParameters(format!("unknown suite {suite:?}; expected one of {}", SUITES.join(", "))));
            };
            let text = serde_json::to_string_pretty(&r).expect("report serializes");
            match &cli.json {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return Ok(1);
                    }
                    for c in &r.claims {
                        let _ = writeln!(out, "{} {} ({} ms)", c.verdict, c.id, c.ms);
                    }
                }
                None => {
                    let _ = writeln!(out, "{text}");
                }
            }
            Ok(if r.all_pass() { 0 } else { 1 })
        }
    })();
    match res {
        Ok(code) => code,
        Err(e @ (Error::Parse(_) | Error::BadParameters(_) | Error::BadLevel(_) | Error::UnmappedSymbol(_))) => usage(e),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn invariants(a: &surfbraid::AbelianInvariants) -> String {
    let t: Vec<String> = a.torsion.iter().map(|x| x.to_string()).collect();
    format!("free_rank={} torsion=[{}]", a.free_rank, t.join(","))
}
