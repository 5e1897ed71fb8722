//! Command-line surface: simulate models, compute exact rates, estimate from
//! data, evaluate error bounds, and drive Monte Carlo experiments.
//!
//! Exit codes: 0 success, 2 input or validation problems, 3 convergence
//! failures, 4 estimation singularities, 5 experiments where every trial
//! failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dirate::bounds::{self, ErrorBound, PRule};
use dirate::estimator;
use dirate::harness::{self, ScalingConfig};
use dirate::model::{Partition, TimeSeries, VarModel};
use dirate::prediction;
use dirate::Error;

#[derive(Parser)]
#[command(
    name = "dirate",
    version,
    about = "Directed-information rates of stationary Gaussian vector autoregressions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a stationary sample path from a model and write it as CSV.
    Simulate {
        /// Model description (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Number of time steps to draw.
        #[arg(long)]
        n: usize,
        /// RNG seed; the output is a pure function of (model, n, seed).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the exact rate of a model by horizon doubling.
    Truth {
        #[arg(long)]
        model: PathBuf,
        /// Convergence tolerance for the residual-covariance limits.
        #[arg(long, default_value_t = prediction::DEFAULT_TOL)]
        tol: f64,
        /// Output JSON path; omitted means print the JSON to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the rate from a time-series CSV.
    Estimate {
        /// Input series CSV with header w0,w1,...
        #[arg(long)]
        data: PathBuf,
        /// Partition JSON: {"x": [...], "y": [...], "z": [...]}.
        #[arg(long)]
        partition: PathBuf,
        /// Window order. Exactly one of --p and --p-rule is required.
        #[arg(long)]
        p: Option<usize>,
        /// Window-order rule: polylog, log(<a>), or fixed(<p>).
        #[arg(long = "p-rule")]
        p_rule: Option<String>,
        /// Also report the estimate in bits.
        #[arg(long)]
        bits: bool,
        /// Diagonal loading (exploratory only; voids the error bound).
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        /// Keep the raw series instead of removing the sample mean.
        #[arg(long)]
        no_mean_subtract: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the high-probability error bound for a model at (n, p).
    Bound {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Confidence parameter: the bound holds with probability 1 - nu.
        #[arg(long, default_value_t = 0.1)]
        nu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo scaling experiment from a config JSON.
    Experiment {
        /// ScalingConfig JSON.
        #[arg(long)]
        config: PathBuf,
        /// Results CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON path.
        #[arg(long)]
        summary: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } | Error::SingularAtFrequency { .. } => 3,
            Error::NotPositiveDefinite { .. }
            | Error::LeadingBlockSingular { .. }
            | Error::GramSingular
            | Error::InnovationSingular
            | Error::DegenerateData { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_model(path: &Path) -> Result<VarModel, Failure> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    Ok(VarModel::from_json(&text)?)
}

fn emit_json(value: &impl Serialize, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Failure::from(Error::from(e))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_rule(text: &str) -> Result<PRule, Failure> {
    let inner = |prefix: &str| {
        text.strip_prefix(prefix)
            .and_then(|r| r.strip_suffix(')'))
            .map(str::trim)
    };
    if text == "polylog" {
        return Ok(PRule::Polylog);
    }
    if let Some(arg) = inner("log(") {
        let a: f64 = arg
            .parse()
            .map_err(|_| Error::BadRule(format!("log rule needs a number, got {arg:?}")))?;
        return Ok(PRule::Log(a));
    }
    if let Some(arg) = inner("fixed(") {
        let p: usize = arg
            .parse()
            .map_err(|_| Error::BadRule(format!("fixed rule needs an integer, got {arg:?}")))?;
        return Ok(PRule::Fixed(p));
    }
    Err(fail(
        2,
        format!("unknown order rule {text:?}; expected polylog, log(<a>), or fixed(<p>)"),
    ))
}

/// Bound report as written to disk: the bound plus a note that the spectral
/// bounds feeding it are grid approximations.
#[derive(Serialize, Deserialize)]
struct BoundReport {
    #[serde(flatten)]
    bound: ErrorBound,
    note: String,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Simulate { model, n, seed, out } => {
            let model = load_model(&model)?;
            let data = dirate::model::simulate(&model, n, seed)?;
            let file = fs::File::create(&out).map_err(Error::from)?;
            data.write_csv(file)?;
            println!(
                "wrote {} samples x {} channels to {}",
                data.len(),
                data.n_w(),
                out.display()
            );
            Ok(())
        }
        Cmd::Truth { model, tol, out } => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(fail(2, format!("tolerance must be a positive number, got {tol}")));
            }
            let model = load_model(&model)?;
            let rate = prediction::exact_di_rate(&model, tol)?;
            if out.is_some() {
                println!(
                    "rate = {} nats (horizons: full {}, subprocess {})",
                    rate.value_nats, rate.sigma_horizon, rate.gamma_horizon
                );
            }
            emit_json(&rate, out.as_deref())
        }
        Cmd::Estimate {
            data,
            partition,
            p,
            p_rule,
            bits,
            ridge,
            no_mean_subtract,
            out,
        } => {
            let text = fs::read_to_string(&data).map_err(Error::from)?;
            let series = TimeSeries::read_csv(text.as_bytes())?;
            let text = fs::read_to_string(&partition).map_err(Error::from)?;
            let part: Partition =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let p = match (p, p_rule) {
                (Some(p), None) => p,
                (None, Some(rule)) => {
                    let chosen = bounds::choose_p(series.len(), parse_rule(&rule)?)?;
                    if chosen.clamped {
                        eprintln!("note: window order clamped to {}", chosen.p);
                    }
                    chosen.p
                }
                _ => return Err(fail(2, "exactly one of --p and --p-rule is required")),
            };
            let est = estimator::di_rate_estimate_ridged(
                &series,
                &part,
                p,
                !no_mean_subtract,
                ridge,
            )?;
            println!("I_hat = {} nats (p = {}, M = {})", est.i_hat_nats, est.p, est.m);
            if bits {
                println!("I_hat = {} bits", est.i_hat_nats / std::f64::consts::LN_2);
            }
            emit_json(&est, out.as_deref())
        }
        Cmd::Bound { model, n, p, nu, out } => {
            let model = load_model(&model)?;
            let params = bounds::params_from_model(&model, n, p, nu)?;
            let bound = bounds::total_error_bound(&params);
            let report = BoundReport {
                bound,
                note: "c_min and c_max are approximated on a 4096-point frequency grid".into(),
            };
            if out.is_some() {
                println!(
                    "epsilon = {}, total = {}, valid = {}",
                    report.bound.epsilon, report.bound.total, report.bound.valid
                );
            }
            emit_json(&report, out.as_deref())
        }
        Cmd::Experiment { config, out, summary } => {
            let text = fs::read_to_string(&config).map_err(Error::from)?;
            let cfg = ScalingConfig::from_json(&text)?;
            let table = harness::run_scaling_experiment(&cfg)?;
            let file = fs::File::create(&out).map_err(Error::from)?;
            harness::write_results_csv(&table, file)?;
            let rollup = harness::summarize(&table);
            emit_json(&rollup, Some(summary.as_path()))?;
            for e in &rollup.per_n {
                println!(
                    "N = {:>8}  p = {:>3}  median |err| = {:<12}  covered {}/{}  failures {}",
                    e.n,
                    e.p,
                    e.median_abs_err.map_or("n/a".into(), |v| format!("{v:.6}")),
                    e.covered,
                    e.trials,
                    e.failures
                );
            }
            if let Some(slope) = rollup.slope_median_abs_err {
                println!("fitted log-log slope of median |err|: {slope:.4}");
            }
            println!("coverage: {:.4}", rollup.coverage);
            println!("wrote {} and {}", out.display(), summary.display());
            if table.iter().all(|r| r.error.is_some()) {
                return Err(fail(5, "every trial failed; see the results table"));
            }
            Ok(())
        }
    }
}
