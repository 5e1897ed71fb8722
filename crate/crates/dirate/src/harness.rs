//! Monte Carlo experiments: simulate a model across sample sizes, estimate
//! the rate on each draw, compare against the exact rate and the error
//! bound, and reduce the trials to scaling and coverage summaries.
//!
//! Determinism contract: the result table is a pure function of the config.
//! Per-trial seeds are mixed from (master seed, N, trial index), and records
//! are kept in canonical (N, trial) order, so neither scheduling nor the
//! degree of parallelism can change a byte of the output.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundParams, PRule};
use crate::estimator;
use crate::model::{self, ModelSpec, VarModel};
use crate::prediction;
use crate::{Error, Result};

/// A full experiment description, JSON-loadable: which model, which sample
/// sizes, how many trials, how to pick p, the confidence level, and the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub model: ModelSpec,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub p_rule: PRule,
    pub nu: f64,
    pub master_seed: u64,
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidParameter("n_values must be nonempty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n_values must be strictly increasing".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must lie in (0, 1), got {}",
                self.nu
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScalingConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// One simulated trial: the estimate (absent when estimation failed), its
/// error against the exact rate, and how the bound judged it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub i_hat: Option<f64>,
    pub abs_err: Option<f64>,
    /// Bound total for this (N, p); infinity when the bound is invalid.
    pub bound_total: f64,
    pub bound_valid: bool,
    /// True exactly when the bound is valid and the error sits inside it.
    pub covered: bool,
    /// Failure description for trials whose estimation errored.
    pub error: Option<String>,
}

/// Mixes (master seed, N, trial) into a per-trial seed: the inputs are
/// spread by odd multipliers, then passed through the splitmix64 finalizer.
pub fn trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    let mut x = master
        ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03);
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Runs the whole grid: for every N and trial index, simulate, pick p by the
/// rule, estimate, and score against the exact rate and the bound. Estimation
/// failures become flagged records; configuration and model errors abort.
pub fn run_scaling_experiment(cfg: &ScalingConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let model = VarModel::from_spec(cfg.model.clone())?;
    let truth = prediction::exact_di_rate(&model, prediction::DEFAULT_TOL)?;

    // Bound ingredients that do not depend on N.
    let psd = model::psd_bounds(&model, 4096)?;
    let all: Vec<usize> = (0..model.n_w()).collect();
    let h = prediction::kalman_predictor_poles(&model, &all)?;
    let j = prediction::kalman_predictor_poles(&model, &model.partition().v_indices())?;
    let rho = h.rho.max(j.rho);
    let b = h.b.max(j.b);

    let mut jobs = Vec::with_capacity(cfg.n_values.len() * cfg.trials);
    for &n in &cfg.n_values {
        let chosen = bounds::choose_p(n, cfg.p_rule)?;
        let params = BoundParams::new(
            cfg.nu,
            n,
            chosen.p,
            model.n_w(),
            model.partition().n_y(),
            psd.c_min,
            psd.c_max,
            rho,
            b,
        )?;
        let bound = bounds::total_error_bound(&params);
        for trial in 0..cfg.trials {
            jobs.push((n, chosen.p, trial as u64, bound.total, bound.valid));
        }
    }

    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(n, p, trial, bound_total, bound_valid)| {
            let seed = trial_seed(cfg.master_seed, n as u64, trial);
            let outcome = model::simulate(&model, n, seed)
                .and_then(|data| estimator::di_rate_estimate(&data, model.partition(), p, true));
            match outcome {
                Ok(est) => {
                    let abs_err = (est.i_hat_nats - truth.value_nats).abs();
                    TrialRecord {
                        n,
                        p,
                        seed,
                        i_hat: Some(est.i_hat_nats),
                        abs_err: Some(abs_err),
                        bound_total,
                        bound_valid,
                        covered: bound_valid && abs_err <= bound_total,
                        error: None,
                    }
                }
                Err(e) => TrialRecord {
                    n,
                    p,
                    seed,
                    i_hat: None,
                    abs_err: None,
                    bound_total,
                    bound_valid,
                    covered: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(records)
}

/// Which per-N statistic of the error to fit the scaling law on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Median,
    Mean,
}

fn median_of_sorted(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

fn per_n_errors(table: &[TrialRecord]) -> Vec<(usize, Vec<f64>)> {
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in table {
        let Some(err) = rec.abs_err else { continue };
        match groups.iter_mut().find(|(n, _)| *n == rec.n) {
            Some((_, v)) => v.push(err),
            None => groups.push((rec.n, vec![err])),
        }
    }
    for (_, v) in &mut groups {
        v.sort_by(f64::total_cmp);
    }
    groups.sort_by_key(|(n, _)| *n);
    groups
}

/// Least-squares slope of log(per-N error statistic) against log N. Needs at
/// least three distinct N values with a successful trial each.
pub fn fit_log_slope(table: &[TrialRecord], statistic: Statistic) -> Result<f64> {
    let groups = per_n_errors(table);
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 3 sample sizes with successful trials, found {}",
            groups.len()
        )));
    }
    let points: Vec<(f64, f64)> = groups
        .iter()
        .map(|(n, errs)| {
            let stat = match statistic {
                Statistic::Median => median_of_sorted(errs),
                Statistic::Mean => errs.iter().sum::<f64>() / errs.len() as f64,
            };
            ((*n as f64).ln(), stat.max(1e-300).ln())
        })
        .collect();
    let k = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / k;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fraction of trials whose error the bound validly contained. Failed trials
/// and invalid-bound trials both count against coverage.
pub fn coverage(table: &[TrialRecord]) -> f64 {
    assert!(!table.is_empty(), "coverage of an empty table");
    table.iter().filter(|r| r.covered).count() as f64 / table.len() as f64
}

/// Per-N rollup for the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct PerNSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub failures: usize,
    pub median_abs_err: Option<f64>,
    pub covered: usize,
}

/// Experiment rollup: per-N medians, the fitted slope (absent when fewer
/// than three N values succeeded), and overall coverage.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub per_n: Vec<PerNSummary>,
    pub slope_median_abs_err: Option<f64>,
    pub coverage: f64,
}

pub fn summarize(table: &[TrialRecord]) -> ExperimentSummary {
    let mut per_n: Vec<PerNSummary> = Vec::new();
    for rec in table {
        let entry = match per_n.iter_mut().find(|e| e.n == rec.n) {
            Some(e) => e,
            None => {
                per_n.push(PerNSummary {
                    n: rec.n,
                    p: rec.p,
                    trials: 0,
                    failures: 0,
                    median_abs_err: None,
                    covered: 0,
                });
                per_n.last_mut().expect("just pushed")
            }
        };
        entry.trials += 1;
        if rec.abs_err.is_none() {
            entry.failures += 1;
        }
        if rec.covered {
            entry.covered += 1;
        }
    }
    per_n.sort_by_key(|e| e.n);
    for (n, errs) in per_n_errors(table) {
        if let Some(entry) = per_n.iter_mut().find(|e| e.n == n) {
            entry.median_abs_err = Some(median_of_sorted(&errs));
        }
    }
    ExperimentSummary {
        per_n,
        slope_median_abs_err: fit_log_slope(table, Statistic::Median).ok(),
        coverage: coverage(table),
    }
}

/// Writes the table as CSV with the fixed header
/// `N,p,seed,I_hat,abs_err,bound,valid,covered`. Missing estimates print as
/// NaN and invalid bounds as inf.
pub fn write_results_csv<W: io::Write>(table: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "p", "seed", "I_hat", "abs_err", "bound", "valid", "covered"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in table {
        let row = [
            r.n.to_string(),
            r.p.to_string(),
            r.seed.to_string(),
            format!("{}", r.i_hat.unwrap_or(f64::NAN)),
            format!("{}", r.abs_err.unwrap_or(f64::NAN)),
            format!("{}", r.bound_total),
            r.bound_valid.to_string(),
            r.covered.to_string(),
        ];
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
