//! Exact inference and learning for the intermittent-cointegration reset
//! model: a latent binary regime per time step (random walk or
//! cointegrated), where each cointegrated segment draws a fresh
//! mean-reversion coefficient held constant until the next reset.
//! Segment starts sever the dependence on the past, so the filtered
//! posterior is a finite mixture with one component per possible segment
//! start and exact inference costs O(T^2) overall.

use crate::em::{EmConfig, EmTrace, EnergyWeights};
use crate::error::{CointError, Result};
use crate::gauss::{ln_normal_pdf, ln_trunc_mass, log_sum_exp};
use crate::phi::trunc_moments_robust;
use crate::series::{compute_residuals, RegressionParams, Residuals, SeriesPair, MIN_LEN};

/// Clamp margin keeping point estimates of phi strictly inside (-1, 1).
const PHI_CLAMP: f64 = 1e-6;

/// User-specified regime dynamics and the uniform density applied to the
/// residual at each segment start (and to the first residual).
#[derive(Debug, Clone, Copy)]
pub struct SwitchConfig {
    /// p(first regime is random walk)
    pub p_init_rw: f64,
    /// p(random walk continues)
    pub p_rw_to_rw: f64,
    /// p(cointegrated segment continues)
    pub p_c_to_c: f64,
    /// width of the uniform density on segment-start residuals
    pub reset_width: f64,
}

impl SwitchConfig {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_init_rw", self.p_init_rw),
            ("p_rw_to_rw", self.p_rw_to_rw),
            ("p_c_to_c", self.p_c_to_c),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CointError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.reset_width > 0.0) || !self.reset_width.is_finite() {
            return Err(CointError::InvalidParameter(format!(
                "reset_width must be positive and finite, got {}",
                self.reset_width
            )));
        }
        Ok(())
    }
}

/// Per-segment posterior over the mean-reversion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPost {
    /// No in-segment lag observed yet: phi still uniform on (-1, 1).
    Uniform,
    /// Gaussian with the given mean and variance, truncated to (-1, 1).
    Gaussian { f: f64, f_var: f64 },
}

impl ComponentPost {
    /// First and second moments of the truncated posterior.
    pub fn moments(&self) -> Result<(f64, f64)> {
        match *self {
            ComponentPost::Uniform => Ok((0.0, 1.0 / 3.0)),
            ComponentPost::Gaussian { f, f_var } => {
                let m = trunc_moments_robust(f, f_var)?;
                Ok((m.m1, m.m2))
            }
        }
    }

    /// One-step predictive log density of `cur` given the previous
    /// residual `lag`, together with the updated posterior. A zero lag
    /// carries no information about phi: identity update.
    fn advance(&self, lag: f64, cur: f64, sigma2: f64) -> (f64, ComponentPost) {
        if lag == 0.0 {
            return (ln_normal_pdf(cur, 0.0, sigma2), *self);
        }
        match *self {
            ComponentPost::Uniform => {
                let f = cur / lag;
                let f_var = sigma2 / (lag * lag);
                let em = -(2.0 * lag.abs()).ln() + ln_trunc_mass(f, f_var);
                (em, ComponentPost::Gaussian { f, f_var })
            }
            ComponentPost::Gaussian { f, f_var } => {
                let denom = sigma2 + lag * lag * f_var;
                let f_new = (f * sigma2 + cur * lag * f_var) / denom;
                let v_new = sigma2 * f_var / denom;
                let em = ln_normal_pdf(cur, f * lag, denom) + ln_trunc_mass(f_new, v_new)
                    - ln_trunc_mass(f, f_var);
                (
                    em,
                    ComponentPost::Gaussian {
                        f: f_new,
                        f_var: v_new,
                    },
                )
            }
        }
    }
}

/// One mixture component of the cointegrated branch, indexed by the time
/// of its segment's first residual.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    /// 1-based time of the segment's first residual.
    pub start: usize,
    /// Normalized log probability of this component within its slice.
    pub log_weight: f64,
    pub post: ComponentPost,
}

/// Filtered posterior at one time step.
#[derive(Debug, Clone)]
pub struct FilterSlice {
    /// 1-based time index, 2..=T.
    pub t: usize,
    /// log p(regime = random walk | residuals up to t)
    pub log_rw: f64,
    /// Cointegrated components in increasing segment-start order.
    pub comps: Vec<MixtureComponent>,
    /// Log normalizer of this step.
    pub log_z: f64,
    /// Log emission of the random-walk branch at this step.
    pub(crate) log_em_rw: f64,
    /// Log emission applied to each component at this step, aligned
    /// with `comps`.
    pub(crate) log_em: Vec<f64>,
}

/// Full forward pass output.
#[derive(Debug, Clone)]
pub struct FilteredSwitch {
    /// Slices for t = 2..=T.
    pub slices: Vec<FilterSlice>,
    pub loglik: f64,
}

/// Smoothed posterior at one time step.
#[derive(Debug, Clone)]
pub struct SmoothSlice {
    /// 1-based time index, 2..=T.
    pub t: usize,
    /// p(regime = random walk | all residuals)
    pub rw_prob: f64,
    /// Per-segment-start smoothed membership weights; the posteriors are
    /// the filtered ones (the exact smoothed phi posterior is a mixture
    /// over segment ends and is summarized by the moment fields below).
    pub comps: Vec<MixtureComponent>,
    /// Smoothed E[phi_t], counting the random-walk branch as phi = 1.
    pub phi_mean: f64,
    /// Smoothed E[phi_t^2], same convention.
    pub phi_m2: f64,
}

/// Per-step expected sufficient statistics for the M-step, indexed by
/// the 1-based time (entries 0 and 1 unused). Only Gaussian emission
/// steps contribute; segment-start resets are parameter-free.
#[derive(Debug, Clone)]
pub(crate) struct EnergyStats {
    /// Smoothed random-walk probability per step.
    pub q_rw: Vec<f64>,
    /// Probability the step is an in-segment Gaussian emission.
    pub g1: Vec<f64>,
    /// Same, weighted by the segment's posterior E[phi].
    pub gm1: Vec<f64>,
    /// Same, weighted by the segment's posterior E[phi^2].
    pub gm2: Vec<f64>,
}

/// Full backward pass output.
#[derive(Debug, Clone)]
pub struct SmoothedSwitch {
    /// Slices for t = 2..=T.
    pub slices: Vec<SmoothSlice>,
    pub(crate) energy: EnergyStats,
}

/// Forward (filtering) pass. Maintains, per step, the random-walk mass
/// and one component per possible segment start; returns the slices and
/// the log marginal likelihood of the residuals.
pub fn switch_filter(eps: &Residuals, sigma2: f64, cfg: &SwitchConfig) -> Result<FilteredSwitch> {
    cfg.validate()?;
    if !(sigma2 > 0.0) {
        return Err(CointError::ZeroVariance);
    }
    let e = eps.as_slice();
    if e.len() < MIN_LEN {
        return Err(CointError::TooShort {
            min: MIN_LEN,
            got: e.len(),
        });
    }
    let t_len = e.len();
    let ln_reset = -cfg.reset_width.ln();
    let ln_rr = cfg.p_rw_to_rw.ln();
    let ln_rc = (-cfg.p_rw_to_rw).ln_1p();
    let ln_cc = cfg.p_c_to_c.ln();
    let ln_cr = (-cfg.p_c_to_c).ln_1p();

    let mut slices: Vec<FilterSlice> = Vec::with_capacity(t_len - 1);
    let mut loglik = ln_reset; // uniform density on the first residual

    // t = 2: random walk, or a segment attached to the first residual
    // whose phi prior is still uniform (first Gaussian emission).
    {
        let em_rw = ln_normal_pdf(e[1], e[0], sigma2);
        let rw_un = cfg.p_init_rw.ln() + em_rw;
        let (em_c, post) = ComponentPost::Uniform.advance(e[0], e[1], sigma2);
        let c_un = (-cfg.p_init_rw).ln_1p() + em_c;
        let log_z = crate::gauss::log_add_exp(rw_un, c_un);
        if !log_z.is_finite() {
            return Err(CointError::InvalidParameter(
                "regime configuration assigns zero probability to the data".into(),
            ));
        }
        let mut comps = Vec::new();
        let mut log_em = Vec::new();
        if c_un > f64::NEG_INFINITY {
            comps.push(MixtureComponent {
                start: 1,
                log_weight: c_un - log_z,
                post,
            });
            log_em.push(em_c);
        }
        loglik += log_z;
        slices.push(FilterSlice {
            t: 2,
            log_rw: rw_un - log_z,
            comps,
            log_z,
            log_em_rw: em_rw,
            log_em,
        });
    }

    for t in 3..=t_len {
        let (lag, cur) = (e[t - 2], e[t - 1]);
        let prev = slices.last().unwrap();
        let em_rw = ln_normal_pdf(cur, lag, sigma2);
        let prev_c_mass = log_sum_exp(
            &prev
                .comps
                .iter()
                .map(|c| c.log_weight)
                .collect::<Vec<f64>>(),
        );
        let rw_un = crate::gauss::log_add_exp(prev.log_rw + ln_rr, prev_c_mass + ln_cr) + em_rw;

        let mut comps = Vec::with_capacity(prev.comps.len() + 1);
        let mut log_em = Vec::with_capacity(prev.comps.len() + 1);
        let mut un_weights = Vec::with_capacity(prev.comps.len() + 2);
        un_weights.push(rw_un);
        for c in &prev.comps {
            let (em, post) = c.post.advance(lag, cur, sigma2);
            let w = c.log_weight + ln_cc + em;
            comps.push(MixtureComponent {
                start: c.start,
                log_weight: w,
                post,
            });
            log_em.push(em);
            un_weights.push(w);
        }
        let fresh_un = prev.log_rw + ln_rc + ln_reset;
        if fresh_un > f64::NEG_INFINITY {
            comps.push(MixtureComponent {
                start: t,
                log_weight: fresh_un,
                post: ComponentPost::Uniform,
            });
            log_em.push(ln_reset);
            un_weights.push(fresh_un);
        }
        let log_z = log_sum_exp(&un_weights);
        if !log_z.is_finite() {
            return Err(CointError::InvalidParameter(
                "regime configuration assigns zero probability to the data".into(),
            ));
        }
        for c in &mut comps {
            c.log_weight -= log_z;
        }
        loglik += log_z;
        slices.push(FilterSlice {
            t,
            log_rw: rw_un - log_z,
            comps,
            log_z,
            log_em_rw: em_rw,
            log_em,
        });
    }
    Ok(FilteredSwitch { slices, loglik })
}

/// Backward (correction-smoothing) pass. Produces exact smoothed regime
/// marginals and per-step smoothed phi moments, plus the expected
/// sufficient statistics for the M-step. O(T^2) total.
pub fn switch_smooth(
    filtered: &FilteredSwitch,
    eps: &Residuals,
    _sigma2: f64,
    cfg: &SwitchConfig,
) -> Result<SmoothedSwitch> {
    cfg.validate()?;
    let slices = &filtered.slices;
    let n = slices.len();
    let t_len = eps.len();
    debug_assert_eq!(n, t_len - 1);
    let ln_reset = -cfg.reset_width.ln();
    let ln_rr = cfg.p_rw_to_rw.ln();
    let ln_rc = (-cfg.p_rw_to_rw).ln_1p();
    let ln_cc = cfg.p_c_to_c.ln();
    let ln_cr = (-cfg.p_c_to_c).ln_1p();

    // backward messages, aligned with the filter slices
    let mut b_rw = vec![0.0f64; n];
    let mut b_comp: Vec<Vec<f64>> = slices.iter().map(|s| vec![0.0; s.comps.len()]).collect();
    for i in (0..n - 1).rev() {
        let nx = &slices[i + 1];
        let fresh_idx = if nx.comps.len() == slices[i].comps.len() + 1 {
            Some(nx.comps.len() - 1)
        } else {
            None
        };
        let mut acc = ln_rr + nx.log_em_rw + b_rw[i + 1];
        if let Some(fi) = fresh_idx {
            acc = crate::gauss::log_add_exp(acc, ln_rc + ln_reset + b_comp[i + 1][fi]);
        }
        b_rw[i] = acc - nx.log_z;
        for j in 0..slices[i].comps.len() {
            let cont = ln_cc + nx.log_em[j] + b_comp[i + 1][j];
            let stop = ln_cr + nx.log_em_rw + b_rw[i + 1];
            b_comp[i][j] = crate::gauss::log_add_exp(cont, stop) - nx.log_z;
        }
    }

    // difference arrays over 1-based time for the per-step accumulators
    let mut d_cp = vec![0.0f64; t_len + 2]; // coint membership probability
    let mut d_cm1 = vec![0.0f64; t_len + 2]; // membership-weighted E[phi]
    let mut d_cm2 = vec![0.0f64; t_len + 2];
    let mut d_g1 = vec![0.0f64; t_len + 2]; // Gaussian-emission probability
    let mut d_gm1 = vec![0.0f64; t_len + 2];
    let mut d_gm2 = vec![0.0f64; t_len + 2];

    // segment posterior for the span [start .. end] is the filtered
    // component at the end slice; gamma is the probability the segment
    // is exactly that span given all data
    for i in 0..n {
        let sl = &slices[i];
        let end = sl.t;
        for c in sl.comps.iter() {
            let ln_gamma = if i + 1 < n {
                let nx = &slices[i + 1];
                c.log_weight + ln_cr + nx.log_em_rw + b_rw[i + 1] - nx.log_z
            } else {
                c.log_weight
            };
            if ln_gamma == f64::NEG_INFINITY {
                continue;
            }
            let gamma = ln_gamma.exp();
            let (m1, m2) = c.post.moments()?;
            let member_lo = c.start.max(2);
            d_cp[member_lo] += gamma;
            d_cp[end + 1] -= gamma;
            d_cm1[member_lo] += gamma * m1;
            d_cm1[end + 1] -= gamma * m1;
            d_cm2[member_lo] += gamma * m2;
            d_cm2[end + 1] -= gamma * m2;
            // Gaussian emissions: every member step except the reset
            // itself; the segment attached to the first residual has no
            // reset step.
            let gauss_lo = if c.start == 1 { 2 } else { c.start + 1 };
            if gauss_lo <= end {
                d_g1[gauss_lo] += gamma;
                d_g1[end + 1] -= gamma;
                d_gm1[gauss_lo] += gamma * m1;
                d_gm1[end + 1] -= gamma * m1;
                d_gm2[gauss_lo] += gamma * m2;
                d_gm2[end + 1] -= gamma * m2;
            }
        }
    }
    let prefix = |d: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; t_len + 1];
        let mut acc = 0.0;
        for t in 0..=t_len {
            acc += d[t];
            out[t] = acc;
        }
        out
    };
    let cp = prefix(&d_cp);
    let cm1 = prefix(&d_cm1);
    let cm2 = prefix(&d_cm2);
    let g1 = prefix(&d_g1);
    let gm1 = prefix(&d_gm1);
    let gm2 = prefix(&d_gm2);

    let mut out = Vec::with_capacity(n);
    let mut q_rw = vec![0.0f64; t_len + 1];
    for i in 0..n {
        let sl = &slices[i];
        let t = sl.t;
        let rw_prob = (sl.log_rw + b_rw[i]).exp();
        q_rw[t] = rw_prob;
        let comps: Vec<MixtureComponent> = sl
            .comps
            .iter()
            .zip(&b_comp[i])
            .map(|(c, &b)| MixtureComponent {
                start: c.start,
                log_weight: c.log_weight + b,
                post: c.post,
            })
            .collect();
        out.push(SmoothSlice {
            t,
            rw_prob,
            comps,
            phi_mean: rw_prob + cm1[t],
            phi_m2: rw_prob + cm2[t],
        });
        // consistency of the two decompositions of the coint mass
        debug_assert!((cp[t] - (1.0 - rw_prob)).abs() < 1e-8);
    }
    Ok(SmoothedSwitch {
        slices: out,
        energy: EnergyStats {
            q_rw,
            g1,
            gm1,
            gm2,
        },
    })
}

/// Tridiagonal expected-energy weights assembled from the smoothed
/// sufficient statistics.
fn energy_weights(stats: &EnergyStats, t_len: usize) -> EnergyWeights {
    let mut diag = vec![0.0f64; t_len];
    let mut off = vec![0.0f64; t_len - 1];
    let mut norm = 0.0;
    for t in 2..=t_len {
        let i = t - 1;
        diag[i] += stats.q_rw[t] + stats.g1[t];
        diag[i - 1] += stats.q_rw[t] + stats.gm2[t];
        off[i - 1] -= stats.q_rw[t] + stats.gm1[t];
        norm += stats.q_rw[t] + stats.g1[t];
    }
    EnergyWeights {
        diag,
        off,
        norm_count: norm,
    }
}

/// EM for the regression parameters under the switching model: the
/// E-step runs filter + smoother at the current parameters, the M-step
/// solves the 2x2 linear system from the expected energy and then
/// updates the variance. The reset width stays fixed across iterations
/// so the objective is a single likelihood surface.
pub fn switch_em(
    pair: &SeriesPair,
    init: &RegressionParams,
    cfg: &SwitchConfig,
    em_cfg: &EmConfig,
) -> Result<(RegressionParams, SmoothedSwitch, EmTrace)> {
    cfg.validate()?;
    if em_cfg.max_iters < 1 || !(em_cfg.rel_tol > 0.0) {
        return Err(CointError::InvalidParameter(
            "max_iters must be >= 1 and rel_tol > 0".into(),
        ));
    }
    let mut params = *init;
    let mut trace = EmTrace {
        loglik_history: Vec::new(),
        params_history: Vec::new(),
        converged: false,
    };
    for _ in 0..em_cfg.max_iters {
        let eps = compute_residuals(pair, &params);
        let filt = switch_filter(&eps, params.sigma2, cfg)?;
        let ll = filt.loglik;
        if let Some(&prev) = trace.loglik_history.last() {
            if (ll - prev).abs() <= em_cfg.rel_tol * ll.abs().max(1.0) {
                trace.loglik_history.push(ll);
                trace.params_history.push(params);
                trace.converged = true;
                break;
            }
        }
        trace.loglik_history.push(ll);
        trace.params_history.push(params);
        let sm = switch_smooth(&filt, &eps, params.sigma2, cfg)?;
        let weights = energy_weights(&sm.energy, pair.len());
        // all-random-walk weights annihilate the intercept direction;
        // hold alpha fixed there (still a monotone, generalized M-step)
        params = match weights.solve(pair) {
            Err(CointError::DegenerateRegressor) => weights.solve_fixed_alpha(pair, params.alpha)?,
            other => other?,
        };
    }
    let eps = compute_residuals(pair, &params);
    let filt = switch_filter(&eps, params.sigma2, cfg)?;
    let sm = switch_smooth(&filt, &eps, params.sigma2, cfg)?;
    Ok((params, sm, trace))
}

/// Maximum-posterior-marginal regime sequence for t = 2..=T; ties go to
/// the cointegrated regime.
pub fn map_regimes(smoothed: &SmoothedSwitch) -> Vec<u8> {
    smoothed
        .slices
        .iter()
        .map(|s| u8::from(s.rw_prob > 0.5))
        .collect()
}

/// Point estimate of phi per time step given a regime sequence
/// (entries for t = 2..=T): 1 on random-walk steps; within each maximal
/// cointegrated run, the clamped posterior mean of the run's own
/// uniform-prior phi posterior; 0 for runs carrying no lag information.
pub fn map_phi(eps: &Residuals, _sigma2: f64, regimes: &[u8]) -> Result<Vec<f64>> {
    let e = eps.as_slice();
    if regimes.len() + 1 != e.len() {
        return Err(CointError::LengthMismatch {
            x_len: regimes.len() + 1,
            y_len: e.len(),
        });
    }
    let mut out = vec![1.0f64; regimes.len()];
    let mut i = 0;
    while i < regimes.len() {
        if regimes[i] != 0 {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < regimes.len() && regimes[j + 1] == 0 {
            j += 1;
        }
        // run covers times a..=b; its residual values start at the lag
        // of the first Gaussian emission: the very first residual when
        // attached to the start of the series, the reset value otherwise
        let (a, b) = (i + 2, j + 2);
        let lo = if a == 2 { 0 } else { a - 1 };
        let vals = &e[lo..b];
        let mut num = 0.0;
        let mut den = 0.0;
        for w in vals.windows(2) {
            num += w[0] * w[1];
            den += w[0] * w[0];
        }
        let phi_hat = if den > 0.0 {
            (num / den).clamp(-1.0 + PHI_CLAMP, 1.0 - PHI_CLAMP)
        } else {
            0.0
        };
        for k in i..=j {
            out[k] = phi_hat;
        }
        i = j + 1;
    }
    Ok(out)
}
