//! Command-line interface.
//!
//! Exit codes: 0 for equivalent, empty, or success; 1 for not equivalent,
//! nonempty, or a failed validation; 2 for parse and usage errors; 3 for fuel,
//! budget, and other solver failures.

use super::parser::parse;
use crate::automata;
use crate::error::{KmtError, Result};
use crate::oracle::{Budget, Oracle};
use crate::theories;
use crate::theory::{Engine, DEFAULT_FUEL};
use crate::validate::{validate_theory, ValidateOptions};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "kmt", version, about = "Decide equivalence and emptiness of KAT terms over client theories")]
pub struct Cli {
    /// Theory name, e.g. incnat, ltlf(incnat), prod(bitvec,incnat).
    #[arg(long, global = true, default_value = "incnat")]
    pub theory: String,
    /// Rule applications allowed per query.
    #[arg(long, global = true, default_value_t = DEFAULT_FUEL)]
    pub fuel: u64,
    /// Seed for randomized validation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest numeric value in oracle start states.
    #[arg(long, global = true, default_value_t = 8)]
    pub states: u64,
    /// Longest trace the oracle considers, in entries.
    #[arg(long = "trace-len", global = true, default_value_t = 4)]
    pub trace_len: usize,
    /// Run the queries in FILE concurrently, one per line.
    #[arg(long, value_name = "FILE")]
    pub batch: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Decide whether two terms denote the same traces.
    Equiv { p: String, q: String },
    /// Decide whether a term denotes no traces.
    Empty { p: String },
    /// Print the normal form of a term.
    Normalize { p: String },
    /// Compare two terms by brute force within the oracle budget.
    OracleEquiv { p: String, q: String },
    /// Check the theory's pushback, subterm, satisfiability and axiom contract.
    ValidateTheory {
        /// Random instances per axiom schema.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Write the term automaton in DOT format.
    Dot {
        p: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub fuel: u64,
    pub seed: u64,
    pub budget: Budget,
}

/// Runs the CLI on `args` (program name first), writing to the given streams.
pub fn run_with(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let settings = Settings { fuel: cli.fuel, seed: cli.seed, budget: Budget { states: cli.states, trace_len: cli.trace_len } };
    match (&cli.batch, &cli.command) {
        (Some(path), None) => run_batch(&cli.theory, path, settings, out, err),
        (None, Some(cmd)) => {
            let (code, text) = run_query(&cli.theory, cmd, settings);
            let _ = if code >= EXIT_USAGE { write!(err, "{text}") } else { write!(out, "{text}") };
            code
        }
        (Some(_), Some(_)) => {
            let _ = writeln!(err, "error: --batch cannot be combined with a subcommand");
            EXIT_USAGE
        }
        (None, None) => {
            let _ = writeln!(err, "error: a subcommand or --batch is required; see --help");
            EXIT_USAGE
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn exit_code(e: &KmtError) -> i32 {
    match e {
        KmtError::Parse { .. }
        | KmtError::UnknownAtom(_)
        | KmtError::NegatedAction(_)
        | KmtError::UnknownTheory(_)
        | KmtError::DuplicateTheory(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

/// Runs one query with a fresh theory instance; returns the exit code and output text.
pub fn run_query(theory: &str, cmd: &Command, s: Settings) -> (i32, String) {
    match query(theory, cmd, s) {
        Ok(r) => r,
        Err(e) => (exit_code(&e), format!("error: {e}\n")),
    }
}

fn query(theory: &str, cmd: &Command, s: Settings) -> Result<(i32, String)> {
    let th = theories::by_name(theory)?;
    // Parse everything before the engine exists: theories with query-driven
    // universes grow them while parsing.
    let terms: Vec<_> = match cmd {
        Command::Equiv { p, q } | Command::OracleEquiv { p, q } => vec![parse(&*th, p)?, parse(&*th, q)?],
        Command::Empty { p } | Command::Normalize { p } | Command::Dot { p, .. } => vec![parse(&*th, p)?],
        Command::ValidateTheory { .. } => vec![],
    };
    let eng = Engine::new(th.clone());
    eng.set_fuel(s.fuel);
    eng.set_check_measure(false);
    Ok(match cmd {
        Command::Equiv { .. } => {
            let r = automata::equivalent(&eng, terms[0], terms[1])?;
            if r.equivalent {
                (EXIT_OK, format!("equivalent\ncertificate: bisimulation of {} state pairs\n", r.pairs))
            } else {
                let w = r.witness.map(|w| w.to_string()).unwrap_or_default();
                (EXIT_NO, format!("not equivalent\ncounterexample:\n{w}\n"))
            }
        }
        Command::Empty { .. } => {
            let r = automata::empty(&eng, terms[0])?;
            if r.empty {
                (EXIT_OK, format!("empty\nexplored {} states\n", r.explored))
            } else {
                let w = r.witness.map(|w| w.to_string()).unwrap_or_default();
                (EXIT_NO, format!("nonempty\nwitness:\n{w}\n"))
            }
        }
        Command::Normalize { .. } => {
            eng.reset_fuel();
            let nf = eng.normalize(terms[0])?;
            (EXIT_OK, format!("{nf}\n"))
        }
        Command::OracleEquiv { .. } => {
            let o = Oracle::new(&*th, s.budget)?;
            match o.equiv_bounded(terms[0], terms[1])? {
                None => (
                    EXIT_OK,
                    format!("equivalent within bounds (values <= {}, traces <= {})\n", s.budget.states, s.budget.trace_len),
                ),
                Some(c) => (EXIT_NO, format!("not equivalent\ncounterexample: {c}\n")),
            }
        }
        Command::ValidateTheory { samples } => {
            let opts = ValidateOptions { budget: s.budget, instances: *samples, seed: s.seed };
            drop(eng);
            let rep = validate_theory(Arc::clone(&th), &opts)?;
            (if rep.passed() { EXIT_OK } else { EXIT_NO }, rep.to_string())
        }
        Command::Dot { output, .. } => {
            let aut = automata::build_term_automaton(terms[0]);
            std::fs::write(output, aut.to_dot())
                .map_err(|e| KmtError::Theory(format!("cannot write {}: {e}", output.display())))?;
            (EXIT_OK, format!("wrote {} ({} states)\n", output.display(), aut.states.len()))
        }
    })
}

/// Separator between the two terms of a binary query in a batch file.
pub const BATCH_SEP: &str = "<=>";

/// Parses one batch line: `equiv P <=> Q`, `oracle-equiv P <=> Q`,
/// `empty P`, or `normalize P`. Blank lines and `#` comments yield `None`.
pub fn parse_batch_line(line: &str) -> Option<std::result::Result<Command, String>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim().to_string();
    let pair = |rest: &str| -> std::result::Result<(String, String), String> {
        rest.split_once(BATCH_SEP)
            .map(|(p, q)| (p.trim().to_string(), q.trim().to_string()))
            .ok_or_else(|| format!("expected `P {BATCH_SEP} Q`"))
    };
    Some(match head {
        "equiv" => pair(&rest).map(|(p, q)| Command::Equiv { p, q }),
        "oracle-equiv" => pair(&rest).map(|(p, q)| Command::OracleEquiv { p, q }),
        "empty" => Ok(Command::Empty { p: rest }),
        "normalize" => Ok(Command::Normalize { p: rest }),
        other => Err(format!("unknown batch command `{other}`")),
    })
}

/// Stack for batch workers; normalization recurses on term structure.
const WORKER_STACK: usize = 256 << 20;

fn run_batch(theory: &str, path: &PathBuf, s: Settings, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let jobs: Vec<(usize, std::result::Result<Command, String>)> =
        text.lines().enumerate().filter_map(|(i, l)| parse_batch_line(l).map(|c| (i + 1, c))).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<parking_lot::Mutex<Option<(i32, String)>>> = jobs.iter().map(|_| parking_lot::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let worker = std::thread::Builder::new().stack_size(WORKER_STACK);
            let spawned = worker.spawn_scoped(scope, || loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some((_, job)) = jobs.get(i) else { break };
                let r = match job {
                    Ok(cmd) => run_query(theory, cmd, s),
                    Err(msg) => (EXIT_USAGE, format!("error: {msg}\n")),
                };
                *results[i].lock() = Some(r);
            });
            spawned.expect("spawn batch worker");
        }
    });
    let mut worst = EXIT_OK;
    for ((line, _), r) in jobs.iter().zip(results) {
        let (code, text) = r.into_inner().expect("every job ran");
        worst = worst.max(code);
        let _ = write!(out, "[line {line}] exit {code}\n{text}");
    }
    worst
}
