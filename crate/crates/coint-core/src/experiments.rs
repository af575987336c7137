//! Synthetic data generation and the Monte Carlo harnesses comparing the
//! Bayes-factor test against the classical OLS + Dickey-Fuller baseline,
//! plus a segment-recovery study for the switching model.
//!
//! Every report is a pure function of its spec and seeds: each series
//! gets seed = base_seed + index, and reductions are order-independent,
//! so parallel and serial execution produce identical results.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::em::EmConfig;
use crate::error::{CointError, Result};
use crate::series::{ols_fit, SeriesPair, MIN_LEN};
use crate::switching::{map_regimes, switch_em, SwitchConfig};
use crate::testing::{bayes_test, classical_test, dickey_fuller_tau, DfNull};

/// Decorrelates the phi draw of a rates/ROC series from its noise draw.
const SIM_SEED_OFFSET: u64 = 0x517c_c1b7_2722_0a95;
/// Null-calibration sample size used by the experiment harnesses.
const DF_CALIB_N: usize = 10_000;

/// Regressor process for simulation.
#[derive(Debug, Clone)]
pub enum XProcess {
    /// Standard-Gaussian-increment random walk.
    RandomWalk,
    /// Caller-provided regressor values (must match t_len).
    Supplied(Vec<f64>),
}

/// Generative-model simulation spec: y_t = alpha + beta x_t + eps_t with
/// AR(1) residuals; phi = 1 encodes a pure random walk.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub t_len: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub phi: f64,
    pub x_process: XProcess,
    pub seed: u64,
}

impl SimSpec {
    /// Cointegrated or random-walk pair with default regression
    /// parameters (alpha 0, beta 1, unit variance, random-walk x).
    pub fn basic(t_len: usize, phi: f64, seed: u64) -> Self {
        SimSpec {
            t_len,
            alpha: 0.0,
            beta: 1.0,
            sigma2: 1.0,
            phi,
            x_process: XProcess::RandomWalk,
            seed,
        }
    }
}

/// Draw one series pair from the generative model. The first residual is
/// a stationary draw when |phi| < 1 and zero when phi = 1.
pub fn simulate(spec: &SimSpec) -> Result<SeriesPair> {
    if spec.t_len < MIN_LEN {
        return Err(CointError::TooShort {
            min: MIN_LEN,
            got: spec.t_len,
        });
    }
    if !(spec.sigma2 > 0.0) {
        return Err(CointError::ZeroVariance);
    }
    if !(spec.phi.abs() <= 1.0) {
        return Err(CointError::InvalidPhi { phi: spec.phi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x: Vec<f64> = match &spec.x_process {
        XProcess::RandomWalk => {
            let mut cur = 0.0;
            (0..spec.t_len)
                .map(|_| {
                    cur += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                    cur
                })
                .collect()
        }
        XProcess::Supplied(v) => {
            if v.len() != spec.t_len {
                return Err(CointError::LengthMismatch {
                    x_len: v.len(),
                    y_len: spec.t_len,
                });
            }
            v.clone()
        }
    };
    let sd = spec.sigma2.sqrt();
    let mut eps = Vec::with_capacity(spec.t_len);
    let mut cur = if spec.phi.abs() < 1.0 {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            * (spec.sigma2 / (1.0 - spec.phi * spec.phi)).sqrt()
    } else {
        0.0
    };
    eps.push(cur);
    for _ in 1..spec.t_len {
        cur = spec.phi * cur
            + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        eps.push(cur);
    }
    let y: Vec<f64> = x
        .iter()
        .zip(&eps)
        .map(|(&xv, &ev)| spec.alpha + spec.beta * xv + ev)
        .collect();
    SeriesPair::new(x, y)
}

/// Piecewise-AR(1) residual spec: consecutive segments of given lengths,
/// each with its own phi (1 for random-walk stretches). The residual
/// chain is continuous across boundaries.
#[derive(Debug, Clone)]
pub struct SegmentSpec {
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
    /// (length, phi) per segment; lengths must sum to at least MIN_LEN.
    pub segments: Vec<(usize, f64)>,
    pub seed: u64,
}

impl SegmentSpec {
    pub fn t_len(&self) -> usize {
        self.segments.iter().map(|s| s.0).sum()
    }
}

/// Simulate a segmented pair; also returns the true regime labels for
/// t = 2..=T (1 on random-walk steps).
pub fn simulate_segmented(spec: &SegmentSpec) -> Result<(SeriesPair, Vec<u8>)> {
    let t_len = spec.t_len();
    if t_len < MIN_LEN {
        return Err(CointError::TooShort {
            min: MIN_LEN,
            got: t_len,
        });
    }
    if !(spec.sigma2 > 0.0) {
        return Err(CointError::ZeroVariance);
    }
    let mut phis = Vec::with_capacity(t_len);
    for &(len, phi) in &spec.segments {
        if !(phi.abs() <= 1.0) {
            return Err(CointError::InvalidPhi { phi });
        }
        phis.extend(std::iter::repeat(phi).take(len));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Vec::with_capacity(t_len);
    let mut cx = 0.0;
    for _ in 0..t_len {
        cx += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        x.push(cx);
    }
    let sd = spec.sigma2.sqrt();
    let first_phi = phis[0];
    let mut cur = if first_phi.abs() < 1.0 {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            * (spec.sigma2 / (1.0 - first_phi * first_phi)).sqrt()
    } else {
        0.0
    };
    let mut eps = Vec::with_capacity(t_len);
    eps.push(cur);
    for t in 1..t_len {
        cur = phis[t] * cur
            + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        eps.push(cur);
    }
    let y: Vec<f64> = x
        .iter()
        .zip(&eps)
        .map(|(&xv, &ev)| spec.alpha + spec.beta * xv + ev)
        .collect();
    let truth: Vec<u8> = (1..t_len).map(|t| u8::from(phis[t] == 1.0)).collect();
    Ok((SeriesPair::new(x, y)?, truth))
}

/// One row of the false-positive / false-negative comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub method: String,
    pub t_len: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub n_true_neg: usize,
    pub n_true_pos: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesReport {
    pub rows: Vec<RateRow>,
}

/// False-positive / false-negative rates per series length for both
/// methods. Per length, half the series are cointegrated with phi drawn
/// uniformly on (-1, 1) and half are random walks; the Bayes test uses
/// log C = 2 and the classical test 5% significance.
pub fn run_rates(lengths: &[usize], n_per_length: usize, base_seed: u64) -> Result<RatesReport> {
    if n_per_length == 0 || n_per_length % 2 != 0 {
        return Err(CointError::InvalidParameter(
            "n_per_length must be positive and even".into(),
        ));
    }
    let cfg = EmConfig::default();
    let mut rows = Vec::new();
    for (li, &t_len) in lengths.iter().enumerate() {
        let null = DfNull::calibrate(t_len, DF_CALIB_N, base_seed.wrapping_add(t_len as u64));
        let outcomes: Vec<(bool, bool, bool)> = (0..n_per_length as u64)
            .into_par_iter()
            .map(|i| {
                let seed = base_seed + (li * n_per_length) as u64 + i;
                let coint_truth = i < n_per_length as u64 / 2;
                let phi = if coint_truth {
                    ChaCha8Rng::seed_from_u64(seed).random_range(-1.0..1.0)
                } else {
                    1.0
                };
                let spec = SimSpec::basic(t_len, phi, seed.wrapping_add(SIM_SEED_OFFSET));
                let pair = simulate(&spec)?;
                let bayes = bayes_test(&pair, &cfg, 2.0)?.cointegrated;
                let classical = classical_test(&pair, &null)?.reject_unit_root;
                Ok((coint_truth, bayes, classical))
            })
            .collect::<Result<Vec<_>>>()?;
        let n_pos = outcomes.iter().filter(|o| o.0).count();
        let n_neg = outcomes.len() - n_pos;
        for (method, pick) in [
            ("bayes", 1usize),
            ("classical", 2usize),
        ] {
            let pred = |o: &(bool, bool, bool)| if pick == 1 { o.1 } else { o.2 };
            let fp = outcomes.iter().filter(|o| !o.0 && pred(o)).count();
            let fn_ = outcomes.iter().filter(|o| o.0 && !pred(o)).count();
            rows.push(RateRow {
                method: method.to_string(),
                t_len,
                fp_rate: fp as f64 / n_neg as f64,
                fn_rate: fn_ as f64 / n_pos as f64,
                n_true_neg: n_neg,
                n_true_pos: n_pos,
            });
        }
    }
    Ok(RatesReport { rows })
}

/// One point of a ROC curve.
#[derive(Debug, Clone, Serialize)]
pub struct RocPoint {
    pub method: String,
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocReport {
    pub t_len: usize,
    pub n: usize,
    pub points: Vec<RocPoint>,
    /// Threshold-free areas under the curve (rank statistic over the
    /// underlying scores), exact for the full sweep.
    pub auc_bayes: f64,
    pub auc_classical: f64,
}

/// Probability a positive outranks a negative (ties count half): the
/// area under the full empirical ROC curve.
fn rank_auc(pos: &mut Vec<f64>, neg: &mut Vec<f64>) -> f64 {
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0f64;
    let mut j_lt = 0usize; // negatives strictly below pos value
    let mut j_le = 0usize; // negatives at or below pos value
    for &p in pos.iter() {
        while j_lt < neg.len() && neg[j_lt] < p {
            j_lt += 1;
        }
        while j_le < neg.len() && neg[j_le] <= p {
            j_le += 1;
        }
        wins += j_lt as f64 + 0.5 * (j_le - j_lt) as f64;
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

/// ROC comparison at one series length. The Bayes curve sweeps the given
/// log-threshold list; the classical curve sweeps significance levels on
/// a uniform grid including both endpoints. AUCs come from the rank
/// statistic on the underlying scores, independent of either grid.
pub fn run_roc(
    t_len: usize,
    n: usize,
    log_c_thresholds: &[f64],
    base_seed: u64,
) -> Result<RocReport> {
    if n == 0 || n % 2 != 0 {
        return Err(CointError::InvalidParameter(
            "n must be positive and even".into(),
        ));
    }
    let cfg = EmConfig::default();
    let null = DfNull::calibrate(t_len, DF_CALIB_N, base_seed.wrapping_add(t_len as u64));
    // per series: (truth, log Bayes factor, tau)
    let scored: Vec<(bool, f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i;
            let coint_truth = i < n as u64 / 2;
            let phi = if coint_truth {
                ChaCha8Rng::seed_from_u64(seed).random_range(-1.0..1.0)
            } else {
                1.0
            };
            let spec = SimSpec::basic(t_len, phi, seed.wrapping_add(SIM_SEED_OFFSET));
            let pair = simulate(&spec)?;
            let bf = bayes_test(&pair, &cfg, 2.0)?.log_bayes_factor;
            let fit = ols_fit(&pair)?.params()?;
            let eps = crate::series::compute_residuals(&pair, &fit);
            let tau = dickey_fuller_tau(&eps)?;
            Ok((coint_truth, bf, tau))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_pos = scored.iter().filter(|s| s.0).count();
    let n_neg = scored.len() - n_pos;

    let mut points = Vec::new();
    for &thr in log_c_thresholds {
        let tp = scored.iter().filter(|s| s.0 && s.1 < thr).count();
        let fp = scored.iter().filter(|s| !s.0 && s.1 < thr).count();
        points.push(RocPoint {
            method: "bayes".into(),
            threshold: thr,
            tpr: tp as f64 / n_pos as f64,
            fpr: fp as f64 / n_neg as f64,
        });
    }
    let levels: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    for &level in &levels {
        let crit = if level <= 0.0 {
            f64::NEG_INFINITY
        } else if level >= 1.0 {
            f64::INFINITY
        } else {
            null.quantile(level)
        };
        let tp = scored.iter().filter(|s| s.0 && s.2 < crit).count();
        let fp = scored.iter().filter(|s| !s.0 && s.2 < crit).count();
        points.push(RocPoint {
            method: "classical".into(),
            threshold: level,
            tpr: tp as f64 / n_pos as f64,
            fpr: fp as f64 / n_neg as f64,
        });
    }
    // higher score = more cointegrated: -logBF and -tau
    let mut bp: Vec<f64> = scored.iter().filter(|s| s.0).map(|s| -s.1).collect();
    let mut bn: Vec<f64> = scored.iter().filter(|s| !s.0).map(|s| -s.1).collect();
    let mut cp: Vec<f64> = scored.iter().filter(|s| s.0).map(|s| -s.2).collect();
    let mut cn: Vec<f64> = scored.iter().filter(|s| !s.0).map(|s| -s.2).collect();
    Ok(RocReport {
        t_len,
        n,
        points,
        auc_bayes: rank_auc(&mut bp, &mut bn),
        auc_classical: rank_auc(&mut cp, &mut cn),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub n_runs: usize,
    /// Mean over true boundaries of the distance to the nearest detected
    /// boundary (series length when nothing is detected).
    pub mean_boundary_error: f64,
    /// Fraction of time steps whose MAP regime matches the truth.
    pub regime_accuracy: f64,
}

/// Segment-recovery study: simulate `n` segmented series, run switching
/// inference, and score the MAP regimes against the generating labels.
/// With `fit_params` set, the regression parameters are learned by EM
/// from an OLS start; otherwise the generative parameters are used.
/// Series with no cointegrated stretch leave the regression
/// unidentifiable — maximum likelihood then prefers a spuriously
/// centered fit — so parameter fitting only makes sense when some
/// segment is cointegrated.
pub fn run_segment_recovery(
    spec: &SegmentSpec,
    cfg: &SwitchConfig,
    n: usize,
    fit_params: bool,
) -> Result<RecoveryReport> {
    if n == 0 {
        return Err(CointError::InvalidParameter("n must be positive".into()));
    }
    let em_cfg = EmConfig::default();
    let per_run: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut run_spec = spec.clone();
            run_spec.seed = spec.seed + i;
            let (pair, truth) = simulate_segmented(&run_spec)?;
            let sm = if fit_params {
                let init = ols_fit(&pair)?.params()?;
                switch_em(&pair, &init, cfg, &em_cfg)?.1
            } else {
                let params =
                    crate::series::RegressionParams::new(spec.alpha, spec.beta, spec.sigma2)?;
                let eps = crate::series::compute_residuals(&pair, &params);
                let filt = crate::switching::switch_filter(&eps, spec.sigma2, cfg)?;
                crate::switching::switch_smooth(&filt, &eps, spec.sigma2, cfg)?
            };
            let map = map_regimes(&sm);
            let hits = map
                .iter()
                .zip(&truth)
                .filter(|(a, b)| a == b)
                .count();
            let accuracy = hits as f64 / truth.len() as f64;
            let boundaries = |r: &[u8]| -> Vec<usize> {
                r.windows(2)
                    .enumerate()
                    .filter(|(_, w)| w[0] != w[1])
                    .map(|(k, _)| k + 1)
                    .collect()
            };
            let true_b = boundaries(&truth);
            let det_b = boundaries(&map);
            let err = if true_b.is_empty() {
                0.0
            } else if det_b.is_empty() {
                truth.len() as f64
            } else {
                true_b
                    .iter()
                    .map(|&tb| {
                        det_b
                            .iter()
                            .map(|&db| (db as f64 - tb as f64).abs())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum::<f64>()
                    / true_b.len() as f64
            };
            Ok((err, accuracy))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_boundary_error = per_run.iter().map(|r| r.0).sum::<f64>() / n as f64;
    let regime_accuracy = per_run.iter().map(|r| r.1).sum::<f64>() / n as f64;
    Ok(RecoveryReport {
        n_runs: n,
        mean_boundary_error,
        regime_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residuals_of(pair: &SeriesPair, alpha: f64, beta: f64) -> Vec<f64> {
        pair.x()
            .iter()
            .zip(pair.y())
            .map(|(&x, &y)| y - alpha - beta * x)
            .collect()
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = SimSpec::basic(100, 0.5, 7);
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
    }

    #[test]
    fn white_noise_residuals_have_tiny_lag_autocorrelation() {
        let spec = SimSpec::basic(10_000, 0.0, 3);
        let pair = simulate(&spec).unwrap();
        let e = residuals_of(&pair, 0.0, 1.0);
        let mut num = 0.0;
        let mut den = 0.0;
        for w in e.windows(2) {
            num += w[0] * w[1];
        }
        for &v in &e {
            den += v * v;
        }
        let rho = num / den;
        assert!(rho.abs() < 3.0 / (e.len() as f64).sqrt(), "rho {rho}");
    }

    #[test]
    fn stationary_variance_matches_oracle() {
        let spec = SimSpec::basic(10_000, 0.5, 11);
        let pair = simulate(&spec).unwrap();
        let e = residuals_of(&pair, 0.0, 1.0);
        let var = e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64;
        assert!((var - 4.0 / 3.0).abs() < 0.1 * 4.0 / 3.0, "var {var}");
    }

    #[test]
    fn random_walk_sim_starts_at_zero() {
        let spec = SimSpec::basic(50, 1.0, 13);
        let pair = simulate(&spec).unwrap();
        let e = residuals_of(&pair, 0.0, 1.0);
        assert_eq!(e[0], 0.0);
    }

    #[test]
    fn supplied_regressor_is_used_verbatim() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let spec = SimSpec {
            x_process: XProcess::Supplied(x.clone()),
            ..SimSpec::basic(20, 0.3, 5)
        };
        let pair = simulate(&spec).unwrap();
        assert_eq!(pair.x(), &x[..]);
    }

    #[test]
    fn segmented_labels_follow_segments() {
        let spec = SegmentSpec {
            alpha: 0.0,
            beta: 1.0,
            sigma2: 1.0,
            segments: vec![(5, 0.5), (4, 1.0), (3, -0.3)],
            seed: 2,
        };
        let (pair, truth) = simulate_segmented(&spec).unwrap();
        assert_eq!(pair.len(), 12);
        assert_eq!(truth.len(), 11);
        // labels for t = 2..=12: coint through t=5, RW t=6..9, coint after
        assert_eq!(truth, vec![0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn rates_report_is_deterministic_and_sane() {
        let a = run_rates(&[30], 20, 99).unwrap();
        let b = run_rates(&[30], 20, 99).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for row in &a.rows {
            assert!((0.0..=1.0).contains(&row.fp_rate));
            assert!((0.0..=1.0).contains(&row.fn_rate));
            assert_eq!(row.n_true_neg + row.n_true_pos, 20);
        }
        assert_eq!(a.rows.len(), 2);
    }

    #[test]
    fn rates_rejects_odd_n() {
        assert!(matches!(
            run_rates(&[30], 7, 1),
            Err(CointError::InvalidParameter(_))
        ));
    }

    #[test]
    fn roc_endpoints_and_monotonicity() {
        let rep = run_roc(40, 40, &[f64::NEG_INFINITY, 0.0, 2.0, f64::INFINITY], 5).unwrap();
        let bayes: Vec<&RocPoint> = rep.points.iter().filter(|p| p.method == "bayes").collect();
        assert_relative_eq!(bayes[0].tpr, 0.0);
        assert_relative_eq!(bayes[0].fpr, 0.0);
        assert_relative_eq!(bayes.last().unwrap().tpr, 1.0);
        assert_relative_eq!(bayes.last().unwrap().fpr, 1.0);
        for w in bayes.windows(2) {
            assert!(w[1].tpr >= w[0].tpr && w[1].fpr >= w[0].fpr);
        }
        let classical: Vec<&RocPoint> = rep
            .points
            .iter()
            .filter(|p| p.method == "classical")
            .collect();
        assert_relative_eq!(classical[0].tpr, 0.0);
        assert_relative_eq!(classical[0].fpr, 0.0);
        assert_relative_eq!(classical.last().unwrap().tpr, 1.0);
        assert_relative_eq!(classical.last().unwrap().fpr, 1.0);
        for w in classical.windows(2) {
            assert!(w[1].tpr >= w[0].tpr && w[1].fpr >= w[0].fpr);
        }
        assert!((0.0..=1.0).contains(&rep.auc_bayes));
        assert!((0.0..=1.0).contains(&rep.auc_classical));
    }

    #[test]
    fn rank_auc_hand_cases() {
        // perfect separation
        assert_relative_eq!(
            rank_auc(&mut vec![2.0, 3.0], &mut vec![0.0, 1.0]),
            1.0
        );
        // pure ties
        assert_relative_eq!(rank_auc(&mut vec![1.0], &mut vec![1.0]), 0.5);
        // one inversion out of four pairs
        assert_relative_eq!(
            rank_auc(&mut vec![1.0, 3.0], &mut vec![0.0, 2.0]),
            0.75
        );
    }

    #[test]
    fn recovery_no_switch_data_classified_cointegrated() {
        let spec = SegmentSpec {
            alpha: 0.0,
            beta: 1.0,
            sigma2: 1.0,
            segments: vec![(120, 0.4)],
            seed: 31,
        };
        let cfg = SwitchConfig {
            p_init_rw: 0.5,
            p_rw_to_rw: 0.98,
            p_c_to_c: 0.98,
            reset_width: 10.0,
        };
        let rep = run_segment_recovery(&spec, &cfg, 10, true).unwrap();
        assert!(rep.regime_accuracy >= 0.95, "{}", rep.regime_accuracy);
        assert_relative_eq!(rep.mean_boundary_error, 0.0);
    }

    #[test]
    fn recovery_rw_only_data_classified_rw() {
        let spec = SegmentSpec {
            alpha: 0.0,
            beta: 1.0,
            sigma2: 1.0,
            segments: vec![(120, 1.0)],
            seed: 37,
        };
        let cfg = SwitchConfig {
            p_init_rw: 0.5,
            p_rw_to_rw: 0.98,
            p_c_to_c: 0.98,
            reset_width: 10.0,
        };
        let rep = run_segment_recovery(&spec, &cfg, 10, false).unwrap();
        assert!(rep.regime_accuracy >= 0.95, "{}", rep.regime_accuracy);
    }
}
