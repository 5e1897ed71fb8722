//! Data-driven rate estimation: empirical block covariances over overlapping
//! windows, Schur-complement residual estimates, and the plug-in rate
//! Ĩ = ½(log det Γ̃_yy − log det Σ̃_yy).
//!
//! A second, independent path fits a vector autoregression by least squares
//! and takes the empirical residual covariance. The two agree algebraically,
//! so tests of their numerical agreement guard both implementations at once.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, BlockedSym, SymMatrix};
use crate::model::{Partition, TimeSeries};
use crate::prediction::ResidualCovariance;
use crate::{Error, Result};

/// Average of stacked-window outer products
/// `(1/M) Σ_k w[k:k+p+1] w[k:k+p+1]ᵀ` over the selected coordinates,
/// blocked as `[[Ã, B̃ᵀ], [B̃, R̃[0]]]` with the newest block last.
#[derive(Debug, Clone)]
pub struct EmpiricalBlockCov {
    p: usize,
    m: usize,
    d: usize,
    cov: SymMatrix,
}

impl EmpiricalBlockCov {
    pub(crate) fn from_parts(p: usize, m: usize, cov: SymMatrix) -> Self {
        let d = cov.dim() / (p + 1);
        assert_eq!(cov.dim(), d * (p + 1), "block covariance dimension mismatch");
        EmpiricalBlockCov { p, m, d, cov }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of overlapping windows averaged (M = N − p).
    pub fn window_count(&self) -> usize {
        self.m
    }

    pub fn coord_count(&self) -> usize {
        self.d
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }
}

/// Rate estimate in nats with its provenance: window order, counts, the two
/// log-determinants, and whether the sample mean was removed first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiEstimate {
    #[serde(rename = "I_hat_nats")]
    pub i_hat_nats: f64,
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub logdet_gamma_yy: f64,
    pub logdet_sigma_yy: f64,
    pub mean_subtracted: bool,
    /// Diagonal loading added before factoring; zero (the default) is the
    /// only setting the error bound covers, so the field is omitted then.
    #[serde(skip_serializing_if = "is_zero", default)]
    pub ridge: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Selected coordinates as a row-major d × N buffer, optionally with the
/// per-coordinate sample mean over all N samples removed.
fn selected_series(
    data: &TimeSeries,
    idx: &[usize],
    subtract_mean: bool,
) -> Result<(Vec<f64>, usize)> {
    linalg::check_selection(idx, data.n_w())?;
    assert!(!idx.is_empty(), "selection must keep at least one coordinate");
    let n = data.len();
    let d = idx.len();
    let mut out = Vec::with_capacity(n * d);
    for k in 0..n {
        let row = data.sample(k);
        for &i in idx {
            out.push(row[i]);
        }
    }
    if subtract_mean {
        for c in 0..d {
            let mean = (0..n).map(|k| out[k * d + c]).sum::<f64>() / n as f64;
            for k in 0..n {
                out[k * d + c] -= mean;
            }
        }
    }
    Ok((out, d))
}

fn constant_coordinate(series: &[f64], d: usize, n: usize) -> Option<usize> {
    (0..d).find(|&c| {
        let first = series[c];
        (1..n).all(|k| series[k * d + c] == first)
    })
}

/// Empirical block covariance over the M = N − p overlapping windows.
///
/// With `subtract_mean` the global sample mean is removed first; a constant
/// coordinate then zeroes out entirely, which with a single window leaves
/// nothing to estimate from and is reported as degenerate.
pub fn empirical_block_cov(
    data: &TimeSeries,
    idx: &[usize],
    p: usize,
    subtract_mean: bool,
) -> Result<EmpiricalBlockCov> {
    assert!(p >= 1, "window order must be at least 1");
    let n = data.len();
    if p >= n {
        return Err(Error::WindowTooLong { p, n });
    }
    let (series, d) = selected_series(data, idx, subtract_mean)?;
    let m = n - p;
    if subtract_mean && m < 2 {
        if let Some(coord) = constant_coordinate(&series, d, n) {
            return Err(Error::DegenerateData {
                coord: idx[coord],
                windows: m,
            });
        }
    }
    let dim = d * (p + 1);
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    let mut window = DVector::<f64>::zeros(dim);
    for k in 0..m {
        window
            .as_mut_slice()
            .copy_from_slice(&series[k * d..(k + p + 1) * d]);
        acc.ger(1.0, &window, &window, 1.0);
    }
    acc /= m as f64;
    Ok(EmpiricalBlockCov::from_parts(p, m, SymMatrix::new(acc)))
}

/// Residual covariance estimate `R̃[0] − B̃ Ã⁻¹ B̃ᵀ` by Schur complement on
/// the block covariance. No regularization: a singular leading block is an
/// error, not something to mask.
pub fn residual_cov_estimate(cov: &EmpiricalBlockCov) -> Result<ResidualCovariance> {
    let blocked = BlockedSym::new(cov.cov.clone(), cov.p * cov.d)?;
    match linalg::schur_complement(&blocked) {
        Ok(s) => Ok(ResidualCovariance::new(s, cov.p, 0.0)),
        Err(Error::NotPositiveDefinite { .. }) => Err(Error::LeadingBlockSingular {
            p: cov.p,
            m: cov.m,
        }),
        Err(e) => Err(e),
    }
}

/// Residual covariance of the least-squares fit `w[k+p] ≈ Θ·w[k:k+p]` over
/// the same M windows, normalized by M.
///
/// Deliberately avoids the block-covariance/Schur path: the Gram matrix is
/// accumulated directly and solved with nalgebra's factorization, so this
/// route and [`residual_cov_estimate`] check each other.
pub fn var_ls_residual_cov(
    data: &TimeSeries,
    idx: &[usize],
    p: usize,
    subtract_mean: bool,
) -> Result<ResidualCovariance> {
    assert!(p >= 1, "window order must be at least 1");
    let n = data.len();
    if p >= n {
        return Err(Error::WindowTooLong { p, n });
    }
    let (series, d) = selected_series(data, idx, subtract_mean)?;
    let m = n - p;
    let k_dim = d * p;
    let mut gram = DMatrix::<f64>::zeros(k_dim, k_dim);
    let mut cross = DMatrix::<f64>::zeros(k_dim, d);
    let mut x = DVector::<f64>::zeros(k_dim);
    let mut y = DVector::<f64>::zeros(d);
    for k in 0..m {
        x.as_mut_slice().copy_from_slice(&series[k * d..(k + p) * d]);
        y.as_mut_slice()
            .copy_from_slice(&series[(k + p) * d..(k + p + 1) * d]);
        gram.ger(1.0, &x, &x, 1.0);
        cross.ger(1.0, &x, &y, 1.0);
    }
    let gram_scale = gram.diagonal().max();
    let chol = nalgebra::Cholesky::new(gram).ok_or(Error::GramSingular)?;
    // A rank-deficient Gram can still factor with a roundoff-positive pivot;
    // reject it by pivot size relative to the Gram's scale instead of
    // solving garbage.
    let min_pivot = chol.l_dirty().diagonal().min().powi(2);
    if min_pivot <= 64.0 * k_dim as f64 * f64::EPSILON * gram_scale {
        return Err(Error::GramSingular);
    }
    let theta_t = chol.solve(&cross);
    let mut acc = DMatrix::<f64>::zeros(d, d);
    let mut r = DVector::<f64>::zeros(d);
    for k in 0..m {
        x.as_mut_slice().copy_from_slice(&series[k * d..(k + p) * d]);
        y.as_mut_slice()
            .copy_from_slice(&series[(k + p) * d..(k + p + 1) * d]);
        r.copy_from(&y);
        r.gemv(-1.0, &theta_t.transpose(), &x, 1.0);
        acc.ger(1.0, &r, &r, 1.0);
    }
    acc /= m as f64;
    Ok(ResidualCovariance::new(SymMatrix::new(acc), p, 0.0))
}

/// Plug-in rate estimate from one series: Σ̃ from all coordinates, Γ̃ from
/// the (y, z) subprocess, yy blocks of each, Ĩ = ½(log det Γ̃_yy − log det Σ̃_yy).
pub fn di_rate_estimate(
    data: &TimeSeries,
    partition: &Partition,
    p: usize,
    subtract_mean: bool,
) -> Result<DiEstimate> {
    di_rate_estimate_ridged(data, partition, p, subtract_mean, 0.0)
}

/// [`di_rate_estimate`] with diagonal loading `ridge ≥ 0` added to both block
/// covariances before factoring. Nonzero ridge is outside the error-bound
/// guarantee and is recorded in the estimate.
pub fn di_rate_estimate_ridged(
    data: &TimeSeries,
    partition: &Partition,
    p: usize,
    subtract_mean: bool,
    ridge: f64,
) -> Result<DiEstimate> {
    assert!(ridge >= 0.0, "ridge must be nonnegative");
    if partition.y().is_empty() {
        return Err(Error::EmptyY);
    }
    partition.validate(data.n_w())?;
    let n = data.len();

    let all: Vec<usize> = (0..data.n_w()).collect();
    let r_cov = loaded(empirical_block_cov(data, &all, p, subtract_mean)?, ridge);
    let sigma = residual_cov_estimate(&r_cov)?;
    let sigma_yy = sigma.block(partition.y())?;

    let v_idx = partition.v_indices();
    let q_cov = loaded(empirical_block_cov(data, &v_idx, p, subtract_mean)?, ridge);
    let gamma = residual_cov_estimate(&q_cov)?;
    let yy_in_v: Vec<usize> = (0..partition.n_y()).collect();
    let gamma_yy = gamma.block(&yy_in_v)?;

    let logdet_sigma_yy = linalg::cholesky_logdet(&sigma_yy)?;
    let logdet_gamma_yy = linalg::cholesky_logdet(&gamma_yy)?;
    Ok(DiEstimate {
        i_hat_nats: 0.5 * (logdet_gamma_yy - logdet_sigma_yy),
        p,
        m: n - p,
        n,
        logdet_gamma_yy,
        logdet_sigma_yy,
        mean_subtracted: subtract_mean,
        ridge,
    })
}

fn loaded(cov: EmpiricalBlockCov, ridge: f64) -> EmpiricalBlockCov {
    if ridge == 0.0 {
        return cov;
    }
    let dim = cov.cov().dim();
    let m = cov.cov().as_matrix() + DMatrix::<f64>::identity(dim, dim) * ridge;
    EmpiricalBlockCov::from_parts(cov.p, cov.m, SymMatrix::new(m))
}
