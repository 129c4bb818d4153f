//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Finite intervals are bisected where the local error estimate is largest.
//! A semi-infinite upper limit is handled by the map `t = a + s / (1 - s)`.
//! [`integrate_ordered`] nests the 1-D rule over the ordered simplex
//! `b >= x_1 >= x_2 >= ... >= x_d >= a`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadConfig {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    resasc *= half.abs();
    resabs *= half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

fn adapt<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = 15;
    heap.push(first);
    let mut converged = false;
    for _ in 0..cfg.max_subdivisions {
        if !value.is_finite() {
            break;
        }
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (v, e) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    if !converged && e <= cfg.abs_tol.max(cfg.rel_tol * v.abs()) {
        converged = true;
    }
    QuadResult {
        value: v,
        abs_error: e,
        evaluations,
        converged: converged && v.is_finite(),
    }
}

/// Integrates `f` over `[a, b]`; `b` may be `f64::INFINITY`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if b == f64::INFINITY {
        adapt(
            |s| {
                if s >= 1.0 {
                    return 0.0;
                }
                let one_minus = 1.0 - s;
                let t = a + s / one_minus;
                if !t.is_finite() {
                    return 0.0;
                }
                f(t) / (one_minus * one_minus)
            },
            0.0,
            1.0,
            cfg,
        )
    } else if a == b {
        QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        }
    } else {
        adapt(f, a, b, cfg)
    }
}

/// Integrates `f(x_1, …, x_d)` over `b >= x_1 >= … >= x_d >= a` by nesting
/// 1-D rules. `b` may be infinite; inner limits are always finite.
pub fn integrate_ordered<F: Fn(&[f64]) -> f64>(
    f: F,
    dim: usize,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> QuadResult {
    assert!(dim >= 1, "ordered integral needs at least one variable");
    let mut point = vec![0.0; dim];
    let mut all_converged = true;
    let mut evaluations = 0;
    let r = ordered_level(&f, &mut point, 0, a, b, cfg, &mut all_converged, &mut evaluations);
    QuadResult {
        converged: r.converged && all_converged,
        evaluations,
        ..r
    }
}

#[allow(clippy::too_many_arguments)]
fn ordered_level<F: Fn(&[f64]) -> f64>(
    f: &F,
    point: &mut Vec<f64>,
    level: usize,
    a: f64,
    upper: f64,
    cfg: &QuadConfig,
    all_converged: &mut bool,
    evaluations: &mut usize,
) -> QuadResult {
    let dim = point.len();
    let inner_cfg = QuadConfig {
        rel_tol: cfg.rel_tol * 0.1,
        abs_tol: cfg.abs_tol * 0.1,
        ..*cfg
    };
    let point_cell = std::cell::RefCell::new(std::mem::take(point));
    let res = integrate(
        |x| {
            if level + 1 == dim {
                let mut p = point_cell.borrow_mut();
                p[level] = x;
                *evaluations += 1;
                f(&p)
            } else {
                let mut p = std::mem::take(&mut *point_cell.borrow_mut());
                p[level] = x;
                let inner = ordered_level(f, &mut p, level + 1, a, x, &inner_cfg, all_converged, evaluations);
                *point_cell.borrow_mut() = p;
                if !inner.converged {
                    *all_converged = false;
                }
                inner.value
            }
        },
        a,
        upper,
        cfg,
    );
    *point = point_cell.into_inner();
    if !res.converged {
        *all_converged = false;
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, &QuadConfig::default());
        assert!((r.value - 10.0).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &QuadConfig::default());
        assert!((r.value - 1.0).abs() < 1e-12, "{r:?}");
        let r = integrate(|x| x.powi(4) * (-2.0 * x).exp(), 1.0, f64::INFINITY, &QuadConfig::default());
        // closed form: e^{-2} * (1/2 + 4/4 + 12/8 + 24/16 + 24/32) = e^{-2} * 5.25
        assert!((r.value - (-2f64).exp() * 5.25).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadConfig::rel(1e-10));
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn ordered_simplex_volume() {
        // volume of 1 >= x1 >= x2 >= x3 >= 0 is 1/3!
        let r = integrate_ordered(|_| 1.0, 3, 0.0, 1.0, &QuadConfig::rel(1e-10));
        assert!((r.value - 1.0 / 6.0).abs() < 1e-12);
        // ordered integral of a symmetric function is 1/d! of the orthant integral
        let r = integrate_ordered(
            |x| (-(x[0] + x[1])).exp(),
            2,
            0.0,
            f64::INFINITY,
            &QuadConfig::rel(1e-9),
        );
        assert!((r.value - 0.5).abs() < 1e-8, "{r:?}");
    }
}
