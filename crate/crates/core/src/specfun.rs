//! Scalar special functions behind the closed forms: incomplete gamma with
//! nonpositive parameter, the moment integrals of the capacity matrix, and
//! truncated generalized hypergeometric series.

use statrs::function::factorial::ln_factorial as statrs_ln_factorial;
use statrs::function::gamma::gamma_ui;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadConfig};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const CF_MAX_ITER: usize = 5000;
const FPMIN: f64 = 1e-300;

/// Above this error amplification the downward recurrence is abandoned.
pub const RECURRENCE_AMPLIFICATION_LIMIT: f64 = 1e6;

pub fn ln_factorial(n: usize) -> f64 {
    statrs_ln_factorial(n as u64)
}

/// `ln Γ_(m)(n) = ln Π_{i=1}^{m} (n − i)!`, requires `n ≥ m`.
pub fn ln_multi_factorial(m: usize, n: usize) -> f64 {
    assert!(n >= m, "Γ_(m)(n) needs n ≥ m");
    (1..=m).map(|i| ln_factorial(n - i)).sum()
}

/// Falling factorial `[a]_k = a (a−1) ⋯ (a−k+1)`, `[a]_0 = 1`.
pub fn falling_factorial(a: f64, k: usize) -> f64 {
    (0..k).map(|i| a - i as f64).product()
}

/// Rising factorial `(a)_k = a (a+1) ⋯ (a+k−1)`, `(a)_0 = 1`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).map(|i| a + i as f64).product()
}

/// `e^x E₁(x)` for `x > 0`.
pub fn exp1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("E1 needs x > 0, got {x}"));
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(x.exp() * (-EULER_GAMMA - x.ln() - sum))
    } else {
        let mut b = x + 1.0;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..CF_MAX_ITER {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h);
            }
        }
        Err(Error::NoConvergence {
            msg: format!("E1 continued fraction at x={x}"),
            estimate: h,
        })
    }
}

/// `e^x x^{-a} Γ(a, x)` by the Legendre continued fraction (valid for every
/// real `a` once `x > 0`; fast for large `x`).
fn gamma_cf_core(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = if b.abs() < FPMIN { 1.0 / FPMIN } else { 1.0 / b };
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        msg: format!("incomplete gamma continued fraction at a={a}, x={x}"),
        estimate: h,
    })
}

/// `e^x Γ(a, x)` by direct quadrature, substituting `t = x e^s`.
pub fn upper_incomplete_gamma_scaled_quadrature(a: f64, x: f64) -> Result<f64> {
    let r = integrate(
        |s| (a * s - x * s.exp_m1()).exp(),
        0.0,
        f64::INFINITY,
        &QuadConfig::rel(1e-13),
    );
    if !r.converged {
        return Err(Error::NoConvergence {
            msg: format!("incomplete gamma quadrature at a={a}, x={x}"),
            estimate: x.powf(a) * r.value,
        });
    }
    Ok(x.powf(a) * r.value)
}

fn gamma_scaled_positive(a: f64, x: f64) -> Result<f64> {
    if (a - 1.0).abs() == 0.0 {
        return Ok(1.0);
    }
    if x >= 1.5 {
        Ok(x.powf(a) * gamma_cf_core(a, x)?)
    } else {
        Ok(gamma_ui(a, x) * x.exp())
    }
}

/// Downward recurrence `G(s−1) = (G(s) − x^{s−1}) / (s−1)` on the scaled
/// function `G(s) = e^x Γ(s, x)`, from `seed = G(top)` down to `top − steps`.
///
/// Returns every value on the ladder (index 0 is the seed) together with the
/// accumulated relative-error amplification of each entry.
fn recur_down(top: f64, seed: f64, steps: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut values = Vec::with_capacity(steps + 1);
    let mut amplification = Vec::with_capacity(steps + 1);
    values.push(seed);
    amplification.push(1.0);
    let ln_x = x.ln();
    let mut g = seed;
    let mut amp = 1.0;
    for k in 1..=steps {
        let s = top - k as f64;
        let power = (s * ln_x).exp();
        let next = (g - power) / s;
        let denom = (s * next).abs();
        amp = (amp * g.abs() + power.abs()) / denom.max(f64::MIN_POSITIVE);
        g = next;
        values.push(g);
        amplification.push(amp);
    }
    (values, amplification)
}

/// `e^x Γ(a, x)`; overflow-free counterpart of [`upper_incomplete_gamma`].
pub fn upper_incomplete_gamma_scaled(a: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("incomplete gamma needs finite x > 0, got {x}"));
    }
    if !a.is_finite() {
        return domain("incomplete gamma needs finite a");
    }
    if a > 0.0 {
        return gamma_scaled_positive(a, x);
    }
    let steps = (-a).floor() as usize + usize::from(a.fract() != 0.0);
    let top = a + steps as f64;
    let seed = if top == 0.0 {
        exp1_scaled(x)?
    } else {
        gamma_scaled_positive(top, x)?
    };
    let (values, amp) = recur_down(top, seed, steps, x);
    let last = *values.last().expect("seed present");
    if *amp.last().expect("seed present") <= RECURRENCE_AMPLIFICATION_LIMIT && last.is_finite() && last > 0.0 {
        return Ok(last);
    }
    log::debug!("incomplete gamma recurrence ill-conditioned at a={a}, x={x}; using continued fraction");
    match gamma_cf_core(a, x) {
        Ok(h) => Ok(x.powf(a) * h),
        Err(_) => upper_incomplete_gamma_scaled_quadrature(a, x),
    }
}

/// Upper incomplete gamma `Γ(a, x) = ∫ₓ^∞ t^{a−1} e^{−t} dt`.
///
/// For `a ≤ 0` the value is obtained by downward recurrence from `E₁(x)` (or
/// from the fractional part of `a`); when the recurrence amplifies rounding
/// beyond [`RECURRENCE_AMPLIFICATION_LIMIT`] it falls back to the continued
/// fraction, then to quadrature.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(upper_incomplete_gamma_scaled(a, x)? * (-x).exp())
}

/// `e^μ Γ(−k, μ)` for `k = 0..=m`.
fn scaled_gamma_ladder(m: usize, mu: f64) -> Result<Vec<f64>> {
    let (values, amp) = recur_down(0.0, exp1_scaled(mu)?, m, mu);
    values
        .into_iter()
        .zip(amp)
        .enumerate()
        .map(|(k, (v, a))| {
            if a <= RECURRENCE_AMPLIFICATION_LIMIT && v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                upper_incomplete_gamma_scaled(-(k as f64), mu)
            }
        })
        .collect()
}

/// `∫₀^∞ x^m e^{−xμ} ln(1+x) dx`
/// `= m! e^μ Σ_{i=0}^{m} Γ(i−m, μ) / μ^{i+1}` (natural-log units).
pub fn log_moment_integral(m: usize, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("log moment needs mu > 0, got {mu}"));
    }
    let ladder = scaled_gamma_ladder(m, mu)?;
    let ln_mu = mu.ln();
    let ln_mfact = ln_factorial(m);
    // all summands are positive
    let sum: f64 = (0..=m)
        .map(|i| {
            let g = ladder[m - i];
            (ln_mfact + g.ln() - (i as f64 + 1.0) * ln_mu).exp()
        })
        .sum();
    Ok(sum)
}

/// Closed form alongside an independent quadrature of the same integral.
#[derive(Debug, Clone, Copy)]
pub struct LogMomentCheck {
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_diff: f64,
}

pub fn log_moment_integral_checked(m: usize, mu: f64) -> Result<LogMomentCheck> {
    let closed_form = log_moment_integral(m, mu)?;
    let quadrature = log_moment_quadrature(m, mu)?;
    Ok(LogMomentCheck {
        closed_form,
        quadrature,
        rel_diff: ((closed_form - quadrature) / quadrature).abs(),
    })
}

/// Quadrature of the log moment in the scaled variable `y = μx`.
pub fn log_moment_quadrature(m: usize, mu: f64) -> Result<f64> {
    let ln_norm = -(m as f64 + 1.0) * mu.ln();
    let r = integrate(
        |y: f64| {
            if y == 0.0 {
                return 0.0;
            }
            (m as f64 * y.ln() - y + ln_norm).exp() * (y / mu).ln_1p()
        },
        0.0,
        f64::INFINITY,
        &QuadConfig::rel(1e-13),
    );
    if !r.converged {
        return Err(Error::NoConvergence {
            msg: format!("log moment quadrature m={m}, mu={mu}"),
            estimate: r.value,
        });
    }
    Ok(r.value)
}

/// `∫₀^∞ x^m e^{−xμ} dx = m! / μ^{m+1}`.
pub fn power_moment_integral(m: usize, mu: f64) -> f64 {
    (ln_factorial(m) - (m as f64 + 1.0) * mu.ln()).exp()
}

/// Outcome of a truncated series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub converged: bool,
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v.fract() == 0.0
}

/// Partial sum of `Σ_k (a₁)_k⋯(a_p)_k / ((b₁)_k⋯(b_q)_k) · z^k / k!`.
///
/// Summation stops once a term falls below `tolerance · |sum|` or after
/// `truncation` terms; the result reports which happened.
pub fn scalar_pfq(a: &[f64], b: &[f64], z: f64, truncation: usize, tolerance: f64) -> Result<SeriesSum> {
    if truncation == 0 {
        return domain("truncation must be at least one term");
    }
    let terminates = a.iter().any(|&v| is_nonpositive_integer(v));
    let degree = a
        .iter()
        .filter(|&&v| is_nonpositive_integer(v))
        .map(|&v| (-v) as usize)
        .min();
    if let Some(bad) = b.iter().find(|&&v| {
        is_nonpositive_integer(v) && degree.is_none_or(|deg| ((-v) as usize) < deg)
    }) {
        return domain(format!("lower parameter {bad} is a nonpositive integer reached by the series"));
    }
    if !terminates && z != 0.0 {
        let (p, q) = (a.len(), b.len());
        if p > q + 1 || (p == q + 1 && z.abs() >= 1.0) {
            return domain(format!("{p}F{q} series diverges at z={z}"));
        }
    }

    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..truncation {
        let kf = k as f64;
        let num: f64 = a.iter().map(|&ai| ai + kf).product();
        let den: f64 = b.iter().map(|&bi| bi + kf).product();
        term *= num / den * z / (kf + 1.0);
        if term == 0.0 {
            return Ok(SeriesSum {
                value: sum,
                terms: k + 1,
                converged: true,
            });
        }
        sum += term;
        if term.abs() < tolerance * sum.abs() {
            return Ok(SeriesSum {
                value: sum,
                terms: k + 2,
                converged: true,
            });
        }
    }
    Ok(SeriesSum {
        value: sum,
        terms: truncation,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_of_one_is_exponential() {
        let v = upper_incomplete_gamma(1.0, 2.0).unwrap();
        assert!(rel(v, (-2f64).exp()) < 1e-15);
        assert!((v - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn gamma_of_zero_is_e1() {
        let v = upper_incomplete_gamma(0.0, 1.0).unwrap();
        assert!((v - 0.219384).abs() < 1e-6);
        // E1(1) reference 0.21938393439552027368
        assert!(rel(v, 0.219_383_934_395_520_27) < 1e-14);
    }

    #[test]
    fn recurrence_matches_quadrature_at_minus_two() {
        let v = upper_incomplete_gamma_scaled(-2.0, 0.5).unwrap();
        let q = upper_incomplete_gamma_scaled_quadrature(-2.0, 0.5).unwrap();
        assert!(rel(v, q) < 1e-10, "{v} vs {q}");
    }

    #[test]
    fn rejects_nonpositive_x() {
        assert!(matches!(upper_incomplete_gamma(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(upper_incomplete_gamma(0.5, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn continued_fraction_takes_over_for_large_x() {
        // the ladder to a = -10 at x = 50 amplifies rounding by ~50^10/10!
        let v = upper_incomplete_gamma_scaled(-10.0, 50.0).unwrap();
        let q = upper_incomplete_gamma_scaled_quadrature(-10.0, 50.0).unwrap();
        assert!(rel(v, q) < 1e-11, "{v} vs {q}");
    }

    #[test]
    fn log_moment_examples() {
        let v = log_moment_integral(0, 1.0).unwrap();
        assert!((v - 0.596347).abs() < 1e-6);
        let c = log_moment_integral_checked(1, 2.0).unwrap();
        assert!(c.rel_diff < 1e-9, "{c:?}");
        let c = log_moment_integral_checked(0, 1e3).unwrap();
        assert!(c.rel_diff < 1e-9, "{c:?}");
        // leading order 1/μ²
        assert!(rel(c.closed_form, 1e-6) < 3e-3);
    }

    #[test]
    fn power_moments() {
        assert!(rel(power_moment_integral(0, 1.0), 1.0) < 1e-15);
        assert!(rel(power_moment_integral(2, 1.0), 2.0) < 1e-14);
        assert!(rel(power_moment_integral(3, 0.5), 96.0) < 1e-14);
    }

    #[test]
    fn series_examples() {
        let e = scalar_pfq(&[], &[], 1.0, 100, 1e-16).unwrap();
        assert!(e.converged);
        assert!(rel(e.value, std::f64::consts::E) < 1e-15);
        let binom = scalar_pfq(&[2.0], &[], 0.5, 500, 1e-16).unwrap();
        assert!(rel(binom.value, 4.0) < 1e-14);
        let log = scalar_pfq(&[1.0, 1.0], &[2.0], 0.5, 500, 1e-16).unwrap();
        assert!(rel(log.value, -(0.5f64.ln()) / 0.5) < 1e-14);
        assert!((log.value - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn series_edge_cases() {
        assert!(matches!(scalar_pfq(&[1.0, 1.0], &[], 0.5, 10, 1e-12), Err(Error::Domain(_))));
        assert!(matches!(scalar_pfq(&[1.0], &[], 1.0, 10, 1e-12), Err(Error::Domain(_))));
        assert!(matches!(scalar_pfq(&[1.0], &[-2.0], 0.1, 10, 1e-12), Err(Error::Domain(_))));
        assert!(matches!(scalar_pfq(&[1.0], &[], 0.1, 0, 1e-12), Err(Error::Domain(_))));
        // terminating polynomial: 2F0(-2, 1; ; z) = 1 - 2z + 2z²
        let poly = scalar_pfq(&[-2.0, 1.0], &[], 3.0, 10, 1e-16).unwrap();
        assert!(poly.converged);
        assert!(rel(poly.value, 1.0 - 6.0 + 18.0) < 1e-15);
        // a terminating series never meets b = -5
        assert!(scalar_pfq(&[-2.0], &[-5.0], 0.3, 10, 1e-16).is_ok());
        let capped = scalar_pfq(&[], &[], 30.0, 3, 1e-16).unwrap();
        assert!(!capped.converged);
        assert_eq!(capped.terms, 3);
    }

    #[test]
    fn factorial_helpers() {
        assert!((ln_multi_factorial(3, 3) - (2f64.ln() + 0.0 + 0.0)).abs() < 1e-14);
        assert_eq!(falling_factorial(5.0, 3), 60.0);
        assert_eq!(falling_factorial(2.0, 3), 0.0);
        assert_eq!(pochhammer(3.0, 2), 12.0);
    }
}
