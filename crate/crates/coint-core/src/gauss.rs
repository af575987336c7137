//! Gaussian density helpers: log densities, robust tail masses, and
//! closed-form moments of a normal truncated to (-1, 1).

use libm::{erf, erfc};

pub const LN_2PI: f64 = 1.837877066409345483560659472811;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// log N(x | mean, var)
#[inline]
pub fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var)
}

#[inline]
fn ln_std_pdf(x: f64) -> f64 {
    -0.5 * (LN_2PI + x * x)
}

/// log of the standard normal upper tail P(X > x).
pub fn ln_std_ccdf(x: f64) -> f64 {
    if x < 25.0 {
        (0.5 * erfc(x / SQRT_2)).ln()
    } else {
        // asymptotic expansion; erfc underflows past ~37 and loses
        // precision before that
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
            + 105.0 / (x2 * x2 * x2 * x2);
        -0.5 * x2 - 0.5 * LN_2PI - x.ln() + series.ln()
    }
}

/// log of the standard normal mass on (a, b), a <= b.
pub fn ln_std_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a > 0.0 {
        let la = ln_std_ccdf(a);
        let lb = ln_std_ccdf(b);
        la + ln1m_exp(lb - la)
    } else if b < 0.0 {
        ln_std_mass(-b, -a)
    } else {
        (0.5 * (erf(b / SQRT_2) - erf(a / SQRT_2))).ln()
    }
}

/// log(1 - exp(d)) for d <= 0.
#[inline]
fn ln1m_exp(d: f64) -> f64 {
    if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-(d.exp())).ln_1p()
    }
}

/// log of the mass of N(mean, var) on (-1, 1).
pub fn ln_trunc_mass(mean: f64, var: f64) -> f64 {
    let s = var.sqrt();
    ln_std_mass((-1.0 - mean) / s, (1.0 - mean) / s)
}

/// First and second non-central moments of N(mean, var) truncated
/// to (-1, 1). Tail ratios are formed in log space so the formulas
/// stay usable when nearly all mass lies outside the interval.
pub fn trunc_normal_moments(mean: f64, var: f64) -> (f64, f64) {
    let s = var.sqrt();
    let a = (-1.0 - mean) / s;
    let b = (1.0 - mean) / s;
    let ln_z = ln_std_mass(a, b);
    let la = ln_std_pdf(a);
    let lb = ln_std_pdf(b);
    // lambda = (pdf(a) - pdf(b)) / Z and t2 = (a pdf(a) - b pdf(b)) / Z,
    // factored from the larger pdf with the residual carried through
    // expm1 so nearly-equal tails keep relative accuracy
    let (lambda, t2) = if la >= lb {
        let d = (lb - la).exp_m1();
        let r = (la - ln_z).exp();
        (-r * d, r * ((a - b) - b * d))
    } else {
        let d = (la - lb).exp_m1();
        let r = (lb - ln_z).exp();
        (r * d, r * ((a - b) + a * d))
    };
    let m1 = mean + s * lambda;
    let m2 = mean * mean + var * (1.0 + t2) + 2.0 * mean * s * lambda;
    (m1, m2)
}

/// log-sum-exp over a slice; -inf entries contribute nothing.
pub fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = vals.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// log(exp(a) + exp(b))
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
