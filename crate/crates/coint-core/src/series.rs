//! Core data types, residual computation, OLS fitting and the
//! conditional AR(1) log-likelihood that the rest of the crate builds on.

use crate::error::{CointError, Result};
use crate::gauss::{ln_normal_pdf, LN_2PI};
use serde::{Deserialize, Serialize};

/// Minimum usable series length.
pub const MIN_LEN: usize = 3;

/// A pair of aligned observation series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SeriesPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CointError::LengthMismatch {
                x_len: x.len(),
                y_len: y.len(),
            });
        }
        if x.len() < MIN_LEN {
            return Err(CointError::TooShort {
                min: MIN_LEN,
                got: x.len(),
            });
        }
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(CointError::NonFinite { field: "x", index: i });
            }
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(CointError::NonFinite { field: "y", index: i });
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Regression parameters of the cointegration relation
/// `y_t = alpha + beta * x_t + eps_t`, with innovation variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
}

impl RegressionParams {
    pub fn new(alpha: f64, beta: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(CointError::InvalidParameter(format!(
                "sigma2 must be a positive real, got {sigma2}"
            )));
        }
        Ok(Self { alpha, beta, sigma2 })
    }
}

/// Residual series `eps_t = y_t - alpha - beta * x_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals(pub Vec<f64>);

impl Residuals {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Observed range max - min; the default width for the wide uniform
    /// density on a residual observation.
    pub fn range(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &e in &self.0 {
            lo = lo.min(e);
            hi = hi.max(e);
        }
        hi - lo
    }
}

/// OLS estimates together with the degenerate zero-residual flag that
/// callers need before taking `sigma2` at face value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    pub alpha: f64,
    pub beta: f64,
    /// Mean squared residual over all T points.
    pub sigma2: f64,
    /// True when the fit is exact and `sigma2` is (numerically) zero.
    pub zero_residuals: bool,
}

impl OlsFit {
    /// The fit as regression parameters; errors when residuals vanish.
    pub fn params(&self) -> Result<RegressionParams> {
        if self.zero_residuals {
            return Err(CointError::ZeroResiduals);
        }
        RegressionParams::new(self.alpha, self.beta, self.sigma2)
    }
}

/// Density placed on the first residual in the AR(1) likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitDensity {
    /// Stationary marginal N(0, sigma2 / (1 - phi^2)); needs |phi| < 1.
    Stationary,
    /// Improper uniform of the given width: log p(eps_1) = -log(width).
    UniformImproper { width: f64 },
}

/// eps_t = y_t - alpha - beta * x_t
pub fn compute_residuals(pair: &SeriesPair, params: &RegressionParams) -> Residuals {
    Residuals(
        pair.x()
            .iter()
            .zip(pair.y())
            .map(|(&x, &y)| y - params.alpha - params.beta * x)
            .collect(),
    )
}

/// Least-squares fit of (alpha, beta) with sigma2 the mean squared
/// residual over all T points.
pub fn ols_fit(pair: &SeriesPair) -> Result<OlsFit> {
    let t = pair.len() as f64;
    let mean_x: f64 = pair.x().iter().sum::<f64>() / t;
    let mean_y: f64 = pair.y().iter().sum::<f64>() / t;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in pair.x().iter().zip(pair.y()) {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(CointError::DegenerateRegressor);
    }
    let beta = sxy / sxx;
    let alpha = mean_y - beta * mean_x;
    let mut ss = 0.0;
    for (&x, &y) in pair.x().iter().zip(pair.y()) {
        let e = y - alpha - beta * x;
        ss += e * e;
    }
    let sigma2 = ss / t;
    // scale-relative threshold for "exact" fits
    let scale = pair.y().iter().map(|v| v * v).sum::<f64>() / t;
    let zero_residuals = sigma2 <= 1e-28 * scale.max(1.0);
    Ok(OlsFit {
        alpha,
        beta,
        sigma2,
        zero_residuals,
    })
}

/// Conditional AR(1) log-likelihood of the residual chain:
/// log p(eps_1) - (1/2 sigma2) sum_{t=2}^T (eps_t - phi eps_{t-1})^2
///             - ((T-1)/2) log(2 pi sigma2).
pub fn ar1_loglik(eps: &Residuals, phi: f64, sigma2: f64, init: InitDensity) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(CointError::InvalidParameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if phi.abs() > 1.0 {
        return Err(CointError::InvalidPhi { phi });
    }
    let e = eps.as_slice();
    let t = e.len();
    let log_init = match init {
        InitDensity::Stationary => {
            if phi.abs() >= 1.0 {
                return Err(CointError::InvalidPhi { phi });
            }
            ln_normal_pdf(e[0], 0.0, sigma2 / (1.0 - phi * phi))
        }
        InitDensity::UniformImproper { width } => -width.ln(),
    };
    let mut ss = 0.0;
    for w in e.windows(2) {
        let d = w[1] - phi * w[0];
        ss += d * d;
    }
    Ok(log_init - ss / (2.0 * sigma2) - (t as f64 - 1.0) / 2.0 * (LN_2PI + sigma2.ln()))
}
