//! Non-asymptotic error machinery: the concentration radius ε, the geometric
//! tail of finite-window prediction, the total high-probability bound on the
//! rate estimate, and rules for choosing the window order p from N.

use serde::{Deserialize, Serialize};

use crate::model::VarModel;
use crate::prediction;
use crate::{Error, Result};

/// Everything the bound formulas consume. `m = n − p` always; construct via
/// [`BoundParams::new`] or [`params_from_model`] so the invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub nu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub p: usize,
    #[serde(rename = "n_W")]
    pub n_w: usize,
    #[serde(rename = "n_Y")]
    pub n_y: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub rho: f64,
    pub b: f64,
}

impl BoundParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nu: f64,
        n: usize,
        p: usize,
        n_w: usize,
        n_y: usize,
        c_min: f64,
        c_max: f64,
        rho: f64,
        b: f64,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(nu > 0.0 && nu < 1.0) {
            return bad(format!("confidence parameter nu must lie in (0, 1), got {nu}"));
        }
        if p < 1 || p >= n {
            return bad(format!("window order p = {p} must satisfy 1 <= p < N = {n}"));
        }
        if n_w == 0 || n_y == 0 || n_y > n_w {
            return bad(format!("dimensions n_W = {n_w}, n_Y = {n_y} are inconsistent"));
        }
        if !(c_min > 0.0 && c_min <= c_max && c_max.is_finite()) {
            return bad(format!("spectral bounds c_min = {c_min}, c_max = {c_max} are invalid"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return bad(format!("tail base rho must lie in (0, 1), got {rho}"));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return bad(format!("tail gain b must be finite and nonnegative, got {b}"));
        }
        Ok(BoundParams {
            nu,
            n,
            m: n - p,
            p,
            n_w,
            n_y,
            c_min,
            c_max,
            rho,
            b,
        })
    }
}

/// The evaluated bound. `total` is `f64::INFINITY` whenever the validity gate
/// ε < c_min fails; that is a reportable result, not an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBound {
    pub epsilon: f64,
    pub tail_term: f64,
    #[serde(with = "total_repr")]
    pub total: f64,
    pub valid: bool,
    pub params: BoundParams,
}

/// JSON shape of `total`: a plain number when finite, the string "inf" when
/// the bound is vacuous.
mod total_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Concentration radius for the empirical block covariances:
/// `ε = 2 c_max · max{(p+1)·8·L, √((2p+1)·8·L)}` with
/// `L = (ln(2/ν) + n_W (1+p) ln 13) / M`.
pub fn epsilon(params: &BoundParams) -> f64 {
    let m = params.m as f64;
    let p = params.p as f64;
    let level = ((2.0 / params.nu).ln() + params.n_w as f64 * (1.0 + p) * 13.0f64.ln()) / m;
    let linear = (p + 1.0) * 8.0 * level;
    let sqrt = ((2.0 * p + 1.0) * 8.0 * level).sqrt();
    2.0 * params.c_max * linear.max(sqrt)
}

/// Deterministic truncation penalty of predicting from p lags instead of the
/// whole past: `c_max · b² · ρ^{2(p+1)} / (1 − ρ)²`.
pub fn tail_term(params: &BoundParams) -> f64 {
    params.c_max * params.b * params.b * params.rho.powi(2 * (params.p as i32 + 1))
        / (1.0 - params.rho).powi(2)
}

fn compose_total(eps: f64, tail: f64, n_y: usize, c_min: f64, c_max: f64) -> f64 {
    let floor = c_min - eps;
    let inflation = 1.0 + (c_max + eps).powi(2) / (floor * floor);
    n_y as f64 / floor * (tail + eps * inflation)
}

/// High-probability bound on `|Ĩ − rate|`: with probability at least 1 − ν,
/// the error is at most `(n_Y/(c_min − ε)) · (tail + ε·(1 + (c_max+ε)²/(c_min−ε)²))`,
/// provided ε < c_min. Outside that region the bound says nothing and `total`
/// is the infinity sentinel.
pub fn total_error_bound(params: &BoundParams) -> ErrorBound {
    let eps = epsilon(params);
    let tail = tail_term(params);
    let valid = eps < params.c_min;
    let total = if valid {
        compose_total(eps, tail, params.n_y, params.c_min, params.c_max)
    } else {
        f64::INFINITY
    };
    ErrorBound {
        epsilon: eps,
        tail_term: tail,
        total,
        valid,
        params: *params,
    }
}

/// Assembles [`BoundParams`] for a model at sample size `n` and window order
/// `p`: spectral bounds from the frequency grid, (ρ, b) as the elementwise
/// max of the full-process and subprocess predictor parameters.
pub fn params_from_model(model: &VarModel, n: usize, p: usize, nu: f64) -> Result<BoundParams> {
    let psd = crate::model::psd_bounds(model, 4096)?;
    let all: Vec<usize> = (0..model.n_w()).collect();
    let h = prediction::kalman_predictor_poles(model, &all)?;
    let j = prediction::kalman_predictor_poles(model, &model.partition().v_indices())?;
    BoundParams::new(
        nu,
        n,
        p,
        model.n_w(),
        model.partition().n_y(),
        psd.c_min,
        psd.c_max,
        h.rho.max(j.rho),
        h.b.max(j.b),
    )
}

/// Rule for picking the window order from the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRule {
    /// Use the given order as-is (still clamped to the feasible range).
    Fixed(usize),
    /// `⌈a · ln N⌉`, the regime the error bound's closing rate needs.
    Log(f64),
    /// `⌈(ln N)²⌉`, trading a log factor of rate for model-order safety.
    Polylog,
}

/// A chosen window order, with a flag recording whether the feasible-range
/// clamp `[1, ⌊N/4⌋]` moved it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenP {
    pub p: usize,
    pub clamped: bool,
}

/// Applies a [`PRule`] at sample size `n ≥ 8` and clamps to `[1, ⌊n/4⌋]` so
/// the window count stays within a constant factor of n.
pub fn choose_p(n: usize, rule: PRule) -> Result<ChosenP> {
    if n < 8 {
        return Err(Error::BadRule(format!(
            "sample size {n} is too small for any window rule (need at least 8)"
        )));
    }
    let raw = match rule {
        PRule::Fixed(p) => p,
        PRule::Log(a) => {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::BadRule(format!(
                    "log rule needs a positive finite coefficient, got {a}"
                )));
            }
            (a * (n as f64).ln()).ceil() as usize
        }
        PRule::Polylog => (n as f64).ln().powi(2).ceil() as usize,
    };
    let p = raw.clamp(1, n / 4);
    Ok(ChosenP {
        p,
        clamped: p != raw,
    })
}
