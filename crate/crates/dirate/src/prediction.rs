//! Ground truth for the directed-information rate: finite-horizon prediction
//! residuals from block-Toeplitz covariances, their geometric limits Σ and Γ,
//! the exact rate ½(log det Γ_yy − log det Σ_yy), and the predictor pole and
//! gain parameters (ρ, b) that feed the error bound.
//!
//! The limits are computed by horizon doubling on the same Schur-complement
//! path the estimator uses, rather than by spectral factorization. That keeps
//! one code path under test from two directions: exact autocovariances here,
//! empirical block covariances in the estimator.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, BlockedSym, Cholesky, SymMatrix};
use crate::model::{self, AutocovSequence, VarModel};
use crate::{Error, Result};

/// Default convergence tolerance for the horizon-doubling limit.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default horizon cap for the doubling loop.
pub const DEFAULT_I_MAX: usize = 4096;

const RICCATI_GAP: f64 = 1e-11;
const RICCATI_CAP: usize = 1_000_000;
const POLE_SAFETY: f64 = 1.02;
const GAIN_SAFETY: f64 = 1.1;
const CIRCLE_GRID: usize = 1024;

/// Residual covariance of the best linear prediction of `w[i]` from the
/// finite window `w[0..i]`.
#[derive(Debug, Clone)]
pub struct FiniteHorizonResidual {
    horizon: usize,
    cov: SymMatrix,
}

impl FiniteHorizonResidual {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }
}

/// Limit residual covariance (Σ for the full process, Γ for a subprocess),
/// with the horizon that achieved convergence and the final doubling gap.
#[derive(Debug, Clone)]
pub struct ResidualCovariance {
    full: SymMatrix,
    horizon: usize,
    gap: f64,
}

impl ResidualCovariance {
    pub(crate) fn new(full: SymMatrix, horizon: usize, gap: f64) -> Self {
        ResidualCovariance { full, horizon, gap }
    }

    pub fn full(&self) -> &SymMatrix {
        &self.full
    }

    /// Sub-block on the given coordinates (e.g. the yy block).
    pub fn block(&self, idx: &[usize]) -> Result<SymMatrix> {
        self.full.submatrix(idx)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }
}

/// Pole and gain parameters of the steady-state one-step predictor of a
/// (sub)process, packaged for the geometric tail bound.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorParams {
    /// Strictly exceeds every closed-loop pole magnitude (up to the 0.999
    /// ceiling), floored at 1e-3.
    pub rho: f64,
    /// Upper bound on ‖H(z)‖₂ over the circle |z| = rho, with safety factor.
    pub b: f64,
    pub pole_magnitudes: Vec<f64>,
}

/// Exact directed-information rate in nats, with the log-determinants and
/// convergence diagnostics behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiRate {
    pub value_nats: f64,
    pub sigma_yy_logdet: f64,
    pub gamma_yy_logdet: f64,
    pub tolerance: f64,
    pub sigma_horizon: usize,
    pub sigma_gap: f64,
    pub gamma_horizon: usize,
    pub gamma_gap: f64,
}

/// `S_i = R[0] − B_i A_i⁻¹ B_iᵀ` from the (i+1)-window block-Toeplitz
/// covariance, split as `[[A_i, B_iᵀ], [B_i, R[0]]]`.
pub fn finite_horizon_residual(acov: &AutocovSequence, i: usize) -> Result<FiniteHorizonResidual> {
    assert!(i >= 1, "prediction horizon must be at least 1");
    let t = acov.toeplitz(i + 1);
    let blocked = BlockedSym::new(t, i * acov.n_w())?;
    Ok(FiniteHorizonResidual {
        horizon: i,
        cov: linalg::schur_complement(&blocked)?,
    })
}

/// Limit of `S_i` by horizon doubling: i runs through 8, 16, 32, … until the
/// spectral norm of the last increment drops to `tol`.
///
/// Geometric convergence is guaranteed for stable rational processes, so the
/// loop normally exits after a handful of doublings; `i_max` bounds the
/// pathological cases.
pub fn exact_residual_cov(
    acov: &AutocovSequence,
    tol: f64,
    i_max: usize,
) -> Result<ResidualCovariance> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(i_max >= 16, "horizon cap must allow at least one doubling");
    assert!(
        acov.max_lag() >= i_max,
        "autocovariance supplies lags to {} but the cap is {i_max}",
        acov.max_lag()
    );
    let mut prev = finite_horizon_residual(acov, 8)?;
    let mut gap = f64::NAN;
    // Roundoff in the Schur complements scales with the window covariance,
    // whose largest entries sit in R[0].
    let roundoff = 64.0 * f64::EPSILON * (1.0 + linalg::spectral_norm(acov.lag(0)));
    let mut i = 16;
    while i <= i_max {
        let cur = finite_horizon_residual(acov, i)?;
        let diff = cur.cov.as_matrix() - prev.cov.as_matrix();
        gap = linalg::spectral_norm(&diff);
        let (_, hi) = linalg::eig_bounds(&SymMatrix::new(diff));
        // Longer windows can only shrink the residual, up to roundoff.
        assert!(
            hi <= tol + roundoff,
            "residual covariance grew between horizons {} and {i} (λ_max {hi:e})",
            prev.horizon
        );
        if gap <= tol {
            return Ok(ResidualCovariance::new(cur.cov, i, gap));
        }
        prev = cur;
        i *= 2;
    }
    Err(Error::NoConvergence {
        what: "residual-covariance horizon doubling",
        limit: i_max,
        gap,
    })
}

/// Exact rate `½(log det Γ_yy − log det Σ_yy)` from Σ of the full process and
/// Γ of the (y, z) subprocess, each a doubling limit at tolerance `tol`.
pub fn exact_di_rate(model: &VarModel, tol: f64) -> Result<DiRate> {
    let part = model.partition();
    let acov = model::autocovariance(model, DEFAULT_I_MAX)?;

    let sigma = exact_residual_cov(&acov, tol, DEFAULT_I_MAX)?;
    let sigma_yy = sigma.block(part.y())?;

    let v_idx = part.v_indices();
    let acov_v = acov.select(&v_idx)?;
    let gamma = exact_residual_cov(&acov_v, tol, DEFAULT_I_MAX)?;
    let yy_in_v: Vec<usize> = (0..part.n_y()).collect();
    let gamma_yy = gamma.block(&yy_in_v)?;

    let sigma_yy_logdet = linalg::cholesky_logdet(&sigma_yy)?;
    let gamma_yy_logdet = linalg::cholesky_logdet(&gamma_yy)?;
    Ok(DiRate {
        value_nats: 0.5 * (gamma_yy_logdet - sigma_yy_logdet),
        sigma_yy_logdet,
        gamma_yy_logdet,
        tolerance: tol,
        sigma_horizon: sigma.horizon(),
        sigma_gap: sigma.gap(),
        gamma_horizon: gamma.horizon(),
        gamma_gap: gamma.gap(),
    })
}

/// Steady-state one-step predictor of the selected coordinates, built from
/// the companion-form state space with observation `C` = selection of the
/// newest block. Returns the closed-loop pole magnitudes and the (ρ, b) pair
/// for the geometric tail bound.
///
/// The Riccati recursion runs in the measurement-noise-free form
/// `P ← A(P − P Cᵀ(C P Cᵀ)⁻¹ C P)Aᵀ + Q`, which is well-posed here because
/// the innovation covariance inherits the spectral floor of the process.
pub fn kalman_predictor_poles(model: &VarModel, idx: &[usize]) -> Result<PredictorParams> {
    linalg::check_selection(idx, model.n_w())?;
    assert!(!idx.is_empty(), "predictor needs at least one observed coordinate");

    let a = model.companion();
    let q = model.companion_noise();
    let dim = a.nrows();
    let mut c = DMatrix::<f64>::zeros(idx.len(), dim);
    for (r, &i) in idx.iter().enumerate() {
        c[(r, i)] = 1.0;
    }

    let innovation_chol = |pct: &DMatrix<f64>| -> Result<Cholesky> {
        match Cholesky::factor(&SymMatrix::new(&c * pct)) {
            Ok(chol) => Ok(chol),
            Err(Error::NotPositiveDefinite { .. }) => Err(Error::InnovationSingular),
            Err(e) => Err(e),
        }
    };

    let mut p = model::solve_discrete_lyapunov(&a, &q)?;
    let mut converged = false;
    let mut gap = f64::NAN;
    for _ in 0..RICCATI_CAP {
        let pct = &p * c.transpose();
        let chol = innovation_chol(&pct)?;
        // inn⁻¹ (C P) through the factor, never as an explicit inverse.
        let inn_inv_cp = chol.solve(&pct.transpose());
        let reduced = &p - &pct * &inn_inv_cp;
        let next = SymMatrix::new(&a * reduced * a.transpose() + &q).into_matrix();
        gap = (&next - &p).norm();
        p = next;
        if gap <= RICCATI_GAP {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "Riccati recursion",
            limit: RICCATI_CAP,
            gap,
        });
    }

    let pct = &p * c.transpose();
    let chol = innovation_chol(&pct)?;
    let gain = &a * &pct * chol.solve(&DMatrix::identity(idx.len(), idx.len()));

    let closed_loop = &a - &gain * &c;
    let pole_magnitudes: Vec<f64> = closed_loop
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .collect();
    let max_pole = pole_magnitudes.iter().copied().fold(0.0f64, f64::max);
    let rho = (max_pole * POLE_SAFETY).clamp(1e-3, 0.999);

    // b = safety × max over the circle |z| = ρ of ‖C (zI − A_cl)⁻¹ K‖₂.
    let cl_c: DMatrix<Complex<f64>> = closed_loop.map(|v| Complex::new(v, 0.0));
    let c_c: DMatrix<Complex<f64>> = c.map(|v| Complex::new(v, 0.0));
    let k_c: DMatrix<Complex<f64>> = gain.map(|v| Complex::new(v, 0.0));
    let mut b_max = 0.0f64;
    for t in 0..CIRCLE_GRID {
        let omega = 2.0 * std::f64::consts::PI * (t as f64) / (CIRCLE_GRID as f64);
        let z = Complex::from_polar(rho, omega);
        let m = DMatrix::<Complex<f64>>::identity(dim, dim) * z - &cl_c;
        let inv = m
            .try_inverse()
            .ok_or(Error::SingularAtFrequency { omega })?;
        let h = &c_c * inv * &k_c;
        let norm = h.svd(false, false).singular_values.max();
        b_max = b_max.max(norm);
    }

    Ok(PredictorParams {
        rho,
        b: GAIN_SAFETY * b_max,
        pole_magnitudes,
    })
}
