//! `rec-bounds` command line. Results go to stdout as JSON (CSV for
//! `curve`); failures go to stderr as a one-line JSON diagnostic.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 violated
//! requirement (failed validation suite, unaffordable stopping budget),
//! 3 numerical failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{default_constants_for, BoundInputs, StopDecision, TheoremId};
use crate::error::Error;
use crate::harness::{self, CurveSpec, RiskInputs, Suite, Sweep, ValidateOptions};

#[derive(Debug, Parser)]
#[command(name = "rec-bounds", version, about = "Reciprocal learning simulation and generalization bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a reciprocal learning experiment from a JSON config.
    Run {
        config: PathBuf,
    },
    /// Evaluate one bound.
    Bound {
        #[arg(long, value_parser = parse_theorem)]
        theorem: TheoremId,
        #[command(flatten)]
        inputs: InputArgs,
        /// Training risk for the gap bounds.
        #[arg(long, default_value_t = 0.0, value_parser = parse_real)]
        train_risk: f64,
        /// `R(P̂_0, θ̂_T)` for the data-dependent excess bound.
        #[arg(long, value_parser = parse_real)]
        risk_theta_t: Option<f64>,
        /// `R(P̂_0, θ̂_0)` for the data-dependent excess bound.
        #[arg(long, value_parser = parse_real)]
        risk_theta_0: Option<f64>,
    },
    /// Largest horizon whose anytime gap terms stay within a budget.
    Stop {
        #[arg(long, value_parser = parse_real)]
        epsilon: f64,
        #[command(flatten)]
        inputs: InputArgs,
    },
    /// Anytime gap terms over a grid of T or n, as CSV.
    Curve {
        #[arg(long, value_enum)]
        sweep: SweepArg,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
        /// Comma-separated confidence levels, one block each.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1])]
        deltas: Vec<f64>,
        #[command(flatten)]
        inputs: InputArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo validation suite.
    Validate {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for per-trial details.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepArg {
    #[value(name = "T", alias = "t")]
    T,
    #[value(name = "n")]
    N,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    #[value(alias = "oracle_ot")]
    OracleOt,
    Distortion,
    Concentration,
    #[value(alias = "paper_replication")]
    PaperReplication,
}

/// Bound symbols as flags. Values accept fractions such as `1/12`.
#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// JSON file with a full set of bound inputs; flags override its fields.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "T", visible_alias = "horizon")]
    pub horizon: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub d_z: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub l_s: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub l_ell: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub c_a: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub c_b: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub kappa: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub l_a: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub f_bound: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub covering_entropy: Option<f64>,
}

impl InputArgs {
    /// Starts from `--inputs` when given, otherwise from `--n`, `--d`,
    /// `--d-z` (required), `--p` (default 1) and `--delta` (default 0.05)
    /// with the default `C_a`, `C_b`. Remaining flags override.
    pub fn resolve(&self) -> crate::Result<BoundInputs> {
        let mut b = match &self.inputs {
            Some(path) => {
                let file = File::open(path)
                    .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
                serde_json::from_reader(file).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => {
                let missing = |flag: &str| Error::Config(format!("missing --{flag} (or --inputs)"));
                let n = self.n.ok_or_else(|| missing("n"))?;
                let d = self.d.ok_or_else(|| missing("d"))?;
                let d_z = self.d_z.ok_or_else(|| missing("d-z"))?;
                let p = self.p.unwrap_or(1.0);
                BoundInputs::new(d, p, d_z, n, self.delta.unwrap_or(harness::DEFAULT_DELTA))
            }
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { b.$f = v; } )* };
        }
        set!(n, m, horizon, p, d, d_z, l_s, l_ell, delta, kappa, f_bound);
        if self.inputs.is_none() && (self.c_a.is_none() || self.c_b.is_none()) {
            let (c_a, c_b) = default_constants_for(b.d, b.p, b.d_z);
            b.c_a = c_a;
            b.c_b = c_b;
        }
        set!(c_a, c_b);
        if self.gamma.is_some() {
            b.gamma = self.gamma;
        }
        if self.l_a.is_some() {
            b.l_a = self.l_a;
        }
        if self.covering_entropy.is_some() {
            b.covering_entropy = self.covering_entropy;
        }
        b.validate()?;
        Ok(b)
    }
}

fn parse_theorem(s: &str) -> Result<TheoremId, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown theorem `{s}`; expected one of gen-gap, anytime-gap, excess-risk, anytime-excess-risk, data-dependent-excess"))
}

/// A real number, or a fraction `a/b`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let bad = || format!("`{s}` is not a number or fraction");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// Failure carried to the process boundary.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub diagnostic: serde_json::Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::BudgetExhausted { .. } => (2, "budget_exhausted"),
            Error::Numerical(_) => (3, "numerical"),
            Error::MissingSymbol { .. } => (1, "missing_symbol"),
            Error::ConditionViolated { .. } => (1, "condition_violated"),
            Error::Io(_) => (1, "io"),
            Error::Json(_) | Error::Csv(_) | Error::Config(_) => (1, "config"),
            _ => (1, "invalid_input"),
        };
        let mut diagnostic = json!({"error": kind, "message": e.to_string(), "exit_code": code});
        match &e {
            Error::MissingSymbol { symbol, condition } => {
                diagnostic["symbol"] = json!(symbol);
                diagnostic["condition"] = json!(condition);
            }
            Error::ConditionViolated { condition, .. } => diagnostic["condition"] = json!(condition),
            Error::BudgetExhausted { epsilon, initial_gap } => {
                diagnostic["epsilon"] = json!(epsilon);
                diagnostic["initial_gap"] = json!(initial_gap);
            }
            _ => {}
        }
        Failure { code, diagnostic }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out).map_err(Error::from)?;
    Ok(())
}

/// Executes a parsed command.
pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config } => print_json(&harness::cmd_run(&config)?),
        Command::Bound { theorem, inputs, train_risk, risk_theta_t, risk_theta_0 } => {
            let risks = RiskInputs { train_risk, risk_theta_t, risk_theta_0 };
            print_json(&harness::cmd_bound(theorem, &inputs.resolve()?, &risks)?)
        }
        Command::Stop { epsilon, inputs } => match harness::cmd_stop(epsilon, &inputs.resolve()?)? {
            StopDecision::Finite { t_star, t_max } => print_json(&json!({"status": "finite", "t_star": t_star, "t_max": t_max})),
            StopDecision::Unbounded => print_json(&json!({"status": "unbounded"})),
        },
        Command::Curve { sweep, from, to, step, deltas, inputs, out } => {
            let sweep = match sweep {
                SweepArg::T => Sweep::T,
                SweepArg::N => Sweep::N,
            };
            let spec = CurveSpec::range(sweep, from, to, step, deltas, inputs.resolve()?)?;
            let rows = harness::cmd_curve(&spec)?;
            match out {
                Some(path) => harness::write_curve_csv(&rows, File::create(path).map_err(Error::from)?)?,
                None => harness::write_curve_csv(&rows, io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Validate { suite, trials, seed, out_dir } => {
            let suite = match suite {
                SuiteArg::OracleOt => Suite::OracleOt,
                SuiteArg::Distortion => Suite::Distortion,
                SuiteArg::Concentration => Suite::Concentration,
                SuiteArg::PaperReplication => Suite::PaperReplication,
            };
            let opts = ValidateOptions { trials, seed, out_dir, ..Default::default() };
            let report = harness::cmd_validate(suite, &opts)?;
            print_json(&report)?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 2,
                    diagnostic: json!({
                        "error": "validation_failed",
                        "message": format!("{} of {} checks violated", report.violations, report.trials),
                        "exit_code": 2,
                        "worst_case": report.worst_case,
                    }),
                })
            }
        }
    }
}

/// Parses `std::env::args`, runs the command and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let diag = json!({"error": "usage", "message": e.to_string().trim_end(), "exit_code": 1});
            eprintln!("{diag}");
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.diagnostic);
            ExitCode::from(f.code)
        }
    }
}
