//! Bayesian cointegration estimation and testing.
//!
//! Two series are cointegrated when their OLS residuals
//! `eps_t = y_t - alpha - beta * x_t` follow a stationary AR(1) process
//! `eps_t = phi * eps_{t-1} + eta_t` with `|phi| < 1`. This crate treats
//! `phi` as a latent variable with a uniform prior on `(-1, 1)`, computes
//! its exact truncated-Gaussian posterior, fits the regression parameters
//! by EM, and decides cointegration by the Bayes factor between the
//! random-walk model (`phi = 1`) and the cointegration marginal
//! likelihood. A classical OLS + Dickey-Fuller baseline is included for
//! comparison, along with an exact switching model that segments a pair
//! into intermittent cointegrated and random-walk regimes, and a Monte
//! Carlo harness for false-positive/false-negative and ROC studies.

pub mod em;
mod error;
mod gauss;
pub mod experiments;
pub mod phi;
mod quad;
pub mod series;
pub mod switching;
pub mod testing;

pub use em::{em_fit, em_fit_uniform, expected_energy, m_step, EmConfig, EmTrace};
pub use error::{CointError, Result};
pub use experiments::{
    run_rates, run_roc, run_segment_recovery, simulate, simulate_segmented, RatesReport,
    RecoveryReport, RocReport, SegmentSpec, SimSpec, XProcess,
};
pub use phi::{
    batch_posterior, coint_marginal_loglik, coint_marginal_loglik_uniform, phi_stats,
    posterior_moments, sequential_filter, PhiMoments, PhiPosterior, PhiStats, Prefactor,
};
pub use series::{
    ar1_loglik, compute_residuals, ols_fit, InitDensity, OlsFit, RegressionParams, Residuals,
    SeriesPair,
};
pub use switching::{
    map_phi, map_regimes, switch_em, switch_filter, switch_smooth, ComponentPost, FilterSlice,
    FilteredSwitch, MixtureComponent, SmoothSlice, SmoothedSwitch, SwitchConfig,
};
pub use testing::{
    bayes_test, classical_test, dickey_fuller, dickey_fuller_tau, rw_loglik, rw_sigma2, DfNull,
    DfResult, TestResult,
};
