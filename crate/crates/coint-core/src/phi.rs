//! Exact posterior inference over the mean-reversion coefficient `phi`:
//! the batch completion-of-square posterior, the sequential filter, moment
//! computation on (-1, 1), and the cointegration marginal likelihood.

use crate::error::{CointError, Result};
use crate::gauss::{self, LN_2PI};
use crate::quad;
use crate::series::Residuals;

const LN_HALF: f64 = -std::f64::consts::LN_2;

/// Whether the posterior density carries the sqrt(1 - phi^2) factor
/// contributed by the stationary prior on the first residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefactor {
    None,
    Semicircle,
}

/// Truncated-Gaussian posterior over phi on (-1, 1):
/// density proportional to prefactor(phi) * N(phi | f, f_var).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPosterior {
    pub f: f64,
    pub f_var: f64,
    pub prefactor: Prefactor,
}

impl PhiPosterior {
    /// Log of the unnormalized density at `phi` in (-1, 1).
    pub fn log_unnorm_density(&self, phi: f64) -> f64 {
        let d = phi - self.f;
        let core = -d * d / (2.0 * self.f_var);
        match self.prefactor {
            Prefactor::None => core,
            Prefactor::Semicircle => core + 0.5 * (1.0 - phi * phi).ln(),
        }
    }
}

/// Sufficient statistics of the stationary-prior posterior:
/// e12 = sum_{t=2}^T eps_t eps_{t-1}, e1 = sum_{t=3}^T eps_{t-1}^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiStats {
    pub e12: f64,
    pub e1: f64,
}

/// First and second non-central moments of phi.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhiMoments {
    pub m1: f64,
    pub m2: f64,
}

pub fn phi_stats(eps: &Residuals) -> PhiStats {
    let e = eps.as_slice();
    let e12: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
    let e1: f64 = e[1..e.len() - 1].iter().map(|v| v * v).sum();
    PhiStats { e12, e1 }
}

/// Stationary-prior posterior: f = e12/e1, F = sigma2/e1, with the
/// semicircle prefactor.
pub fn batch_posterior(eps: &Residuals, sigma2: f64) -> Result<PhiPosterior> {
    let stats = phi_stats(eps);
    if stats.e1 <= 0.0 {
        return Err(CointError::DegenerateStats);
    }
    Ok(PhiPosterior {
        f: stats.e12 / stats.e1,
        f_var: sigma2 / stats.e1,
        prefactor: Prefactor::Semicircle,
    })
}

/// Uniform-eps1-prior posterior, where both sums run from t = 2.
pub fn batch_posterior_uniform(eps: &Residuals, sigma2: f64) -> Result<PhiPosterior> {
    let e = eps.as_slice();
    let e12: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
    let e1: f64 = e[..e.len() - 1].iter().map(|v| v * v).sum();
    if e1 <= 0.0 {
        return Err(CointError::AllZeroResiduals);
    }
    Ok(PhiPosterior {
        f: e12 / e1,
        f_var: sigma2 / e1,
        prefactor: Prefactor::None,
    })
}

/// Sequential filter over the residual chain. Initialization is deferred
/// past zero lags; zero-lag steps are identity updates.
pub fn sequential_filter(eps: &Residuals, sigma2: f64) -> Result<PhiPosterior> {
    let e = eps.as_slice();
    let mut state: Option<(f64, f64)> = None;
    for t in 1..e.len() {
        let prev = e[t - 1];
        if prev == 0.0 {
            continue;
        }
        state = Some(match state {
            None => (e[t] / prev, sigma2 / (prev * prev)),
            Some((f, f_var)) => {
                let denom = sigma2 + prev * prev * f_var;
                (
                    (f * sigma2 + e[t] * prev * f_var) / denom,
                    sigma2 * f_var / denom,
                )
            }
        });
    }
    match state {
        Some((f, f_var)) => Ok(PhiPosterior {
            f,
            f_var,
            prefactor: Prefactor::None,
        }),
        None => Err(CointError::AllZeroResiduals),
    }
}

/// Moments of the normalized posterior on (-1, 1) by deterministic
/// adaptive quadrature of the log density.
pub fn posterior_moments(post: &PhiPosterior) -> Result<PhiMoments> {
    let (m1, m2) = quad::log_density_moments(|phi| post.log_unnorm_density(phi), -1.0, 1.0)?;
    Ok(PhiMoments { m1, m2 })
}

/// Truncated-Gaussian moments by closed form where reliable, falling
/// back to quadrature for very flat components.
pub(crate) fn trunc_moments_robust(f: f64, f_var: f64) -> Result<PhiMoments> {
    if f_var <= 1e8 {
        let (m1, m2) = gauss::trunc_normal_moments(f, f_var);
        if m1.is_finite() && m2.is_finite() && m1.abs() < 1.0 && m2 >= m1 * m1 && m2 <= 1.0 {
            return Ok(PhiMoments { m1, m2 });
        }
    }
    let post = PhiPosterior {
        f,
        f_var,
        prefactor: Prefactor::None,
    };
    posterior_moments(&post)
}

/// log l_C: marginal likelihood of the cointegration model with the
/// uniform prior on phi and the stationary prior on eps_1, by log-space
/// quadrature over (-1, 1).
pub fn coint_marginal_loglik(eps: &Residuals, sigma2: f64) -> Result<f64> {
    let e = eps.as_slice();
    let t = e.len() as f64;
    let e1sq = e[0] * e[0];
    let s2: f64 = e[1..].iter().map(|v| v * v).sum();
    let s1p: f64 = e[..e.len() - 1].iter().map(|v| v * v).sum();
    let e12: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
    let ln_norm = -0.5 * t * (LN_2PI + sigma2.ln());
    quad::log_integral(
        |phi| {
            LN_HALF
                + 0.5 * (1.0 - phi * phi).ln()
                - e1sq * (1.0 - phi * phi) / (2.0 * sigma2)
                - (s2 - 2.0 * phi * e12 + phi * phi * s1p) / (2.0 * sigma2)
        },
        -1.0,
        1.0,
    )
    .map(|v| v + ln_norm)
}

/// Uniform-eps1 variant of the marginal likelihood:
/// log p(eps_1) = -log(width), no semicircle prefactor.
pub fn coint_marginal_loglik_uniform(eps: &Residuals, sigma2: f64, width: f64) -> Result<f64> {
    let e = eps.as_slice();
    let t = e.len() as f64;
    let s2: f64 = e[1..].iter().map(|v| v * v).sum();
    let s1p: f64 = e[..e.len() - 1].iter().map(|v| v * v).sum();
    let e12: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
    let ln_norm = -width.ln() - 0.5 * (t - 1.0) * (LN_2PI + sigma2.ln());
    quad::log_integral(
        |phi| LN_HALF - (s2 - 2.0 * phi * e12 + phi * phi * s1p) / (2.0 * sigma2),
        -1.0,
        1.0,
    )
    .map(|v| v + ln_norm)
}
