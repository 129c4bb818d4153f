#![allow(clippy::needless_range_loop)]
//! Oracles shared by the integration tests. They deliberately avoid the
//! library's own evaluation paths: hypergeometric references are plain
//! determinants at 320 bits, Monte Carlo uses nalgebra's Cholesky, and the
//! nested quadrature is a fixed Gauss–Legendre rule on mapped intervals.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const BITS: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, BITS)
}

fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let (words, _, sign, exp, _) = x.as_raw_parts().expect("finite");
    // value = 0.w × 2^exp with the leading word last
    let top = *words.last().expect("nonzero mantissa") as f64 / 2f64.powi(64);
    let v = top * 2f64.powi(exp);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

fn big_det(mut a: Vec<Vec<BigFloat>>) -> BigFloat {
    let n = a.len();
    let mut acc = BigFloat::from_u64(1, BITS);
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&r, &s| big_to_f64(&a[r][c]).abs().total_cmp(&big_to_f64(&a[s][c]).abs()))
            .expect("nonempty");
        if a[piv][c].is_zero() {
            return BigFloat::new(BITS);
        }
        if piv != c {
            a.swap(piv, c);
            acc = acc.neg();
        }
        for r in c + 1..n {
            let f = a[r][c].div(&a[c][c], BITS, RM);
            for j in c..n {
                let t = f.mul(&a[c][j], BITS, RM);
                a[r][j] = a[r][j].sub(&t, BITS, RM);
            }
        }
        acc = acc.mul(&a[c][c], BITS, RM);
    }
    acc
}

/// Scalar kernels whose determinants define the matrix-argument functions.
#[derive(Debug, Clone)]
pub enum Family {
    /// `₀F̃₀`, kernel `e^z`.
    Exp,
    /// `₁F̃₀(r)`, kernel `(1 − z)^{m − r − 1}`.
    Binomial(f64),
    /// `₁F̃₁(a; b)`, kernel `₁F₁(a − m + 1; b − m + 1; z)`.
    Kummer(f64, f64),
}

fn kummer(a: f64, b: f64, z: &BigFloat) -> BigFloat {
    let mut term = BigFloat::from_u64(1, BITS);
    let mut sum = term.clone();
    for k in 0..10_000usize {
        let kf = k as f64;
        term = term
            .mul(&big(a + kf), BITS, RM)
            .div(&big(b + kf), BITS, RM)
            .mul(z, BITS, RM)
            .div(&BigFloat::from_u64(k as u64 + 1, BITS), BITS, RM);
        sum = sum.add(&term, BITS, RM);
        if term.is_zero() || (kf > (a * big_to_f64(z)).abs() + 10.0 && big_to_f64(&term).abs() < 1e-90) {
            break;
        }
    }
    sum
}

/// `Π_{i=1}^m (a − i + 1)^{i − 1}`.
fn psi(a: f64, m: usize) -> BigFloat {
    (1..=m).fold(BigFloat::from_u64(1, BITS), |acc, i| {
        acc.mul(&big(a - i as f64 + 1.0).powi(i - 1, BITS, RM), BITS, RM)
    })
}

fn vandermonde(x: &[f64]) -> BigFloat {
    let mut acc = BigFloat::from_u64(1, BITS);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            acc = acc.mul(&big(x[i]).sub(&big(x[j]), BITS, RM), BITS, RM);
        }
    }
    acc
}

/// Matrix-argument function at distinct `λ` and distinct `w`:
/// `Γ_m(m) · c · det[f(λ_i w_j)] / (V(λ) V(w))`.
pub fn distinct_reference(family: &Family, lambdas: &[f64], w: &[f64]) -> f64 {
    let m = w.len();
    let mut cc = Consts::new().expect("constants");
    let rows: Vec<Vec<BigFloat>> = lambdas
        .iter()
        .map(|&l| {
            w.iter()
                .map(|&wj| {
                    let z = big(l).mul(&big(wj), BITS, RM);
                    match family {
                        Family::Exp => z.exp(BITS, RM, &mut cc),
                        Family::Binomial(r) => {
                            let base = BigFloat::from_u64(1, BITS).sub(&z, BITS, RM);
                            assert!(!base.is_negative(), "binomial kernel needs λw < 1");
                            base.ln(BITS, RM, &mut cc).mul(&big(m as f64 - r - 1.0), BITS, RM).exp(BITS, RM, &mut cc)
                        }
                        Family::Kummer(a, b) => kummer(a + 1.0 - m as f64, b + 1.0 - m as f64, &z),
                    }
                })
                .collect()
        })
        .collect();
    let gamma_m = (1..=m).fold(BigFloat::from_u64(1, BITS), |acc, i| {
        (1..=(m - i) as u64).fold(acc, |a, k| a.mul(&BigFloat::from_u64(k, BITS), BITS, RM))
    });
    let constant = match family {
        Family::Exp => BigFloat::from_u64(1, BITS),
        Family::Binomial(r) => BigFloat::from_u64(1, BITS).div(&psi(*r, m), BITS, RM),
        Family::Kummer(a, b) => psi(*b, m).div(&psi(*a, m), BITS, RM),
    };
    let num = big_det(rows).mul(&gamma_m, BITS, RM).mul(&constant, BITS, RM);
    let den = vandermonde(lambdas).mul(&vandermonde(w), BITS, RM);
    big_to_f64(&num.div(&den, BITS, RM))
}

/// Limit as a group of `l` coincident `w0` values forms, by spreading the group
/// over `w0(1 + ε o)` with symmetric offsets `o` (error even in `ε`) and
/// extrapolating `(100 P(1e−4) − P(1e−3)) / 99`.
pub fn richardson_limit(family: &Family, lambdas: &[f64], w0: f64, l: usize, others: &[f64]) -> f64 {
    let offsets: Vec<f64> = (0..l).map(|i| i as f64 - (l as f64 - 1.0) / 2.0).collect();
    let at = |eps: f64| {
        let mut w: Vec<f64> = offsets.iter().map(|o| w0 * (1.0 + eps * o)).collect();
        w.extend_from_slice(others);
        distinct_reference(family, lambdas, &w)
    };
    (100.0 * at(1e-4) - at(1e-3)) / 99.0
}

/// A randomized confluent instance: distinct `λ`, a `w0` group of size `l`
/// plus distinct extra values, all with `|λ w| < 0.9`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub lambdas: Vec<f64>,
    pub w0: f64,
    pub l: usize,
    pub others: Vec<f64>,
}

impl Instance {
    pub fn random(rng: &mut impl Rng, l: usize) -> Self {
        let extra = rng.random_range(0..=2usize);
        let m = l + extra;
        let w0 = rng.random_range(0.4..1.2);
        let mut others = Vec::new();
        let mut last = w0;
        for _ in 0..extra {
            last += rng.random_range(0.3..0.5);
            others.push(last);
        }
        let scale = 0.88 / last;
        let lambdas = (0..m)
            .map(|k| scale * (-1.0 + 2.0 * (k as f64 + rng.random_range(0.15..0.85)) / m as f64))
            .collect();
        Self { lambdas, w0, l, others }
    }

    pub fn groups(&self) -> Vec<(f64, usize)> {
        let mut g = vec![(self.w0, self.l)];
        g.extend(self.others.iter().map(|&v| (v, 1)));
        g
    }
}

/// `E ln det(I_p + H Φ H†)` by Monte Carlo with `Φ = diag(eigenvalues)` and
/// `H` (`p × n`) i.i.d. unit-variance circular complex Gaussian.
/// Returns `(mean, standard error)` in nats.
pub fn mc_log_det(eigenvalues: &[f64], p: usize, samples: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 4096;
    let n = eigenvalues.len();
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let h = DMatrix::<Complex<f64>>::from_fn(p, n, |_, j| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(re, im) * (0.5 * eigenvalues[j]).sqrt()
                });
                let m = DMatrix::<Complex<f64>>::identity(p, p) + &h * h.adjoint();
                let l = m.cholesky().expect("positive definite").unpack();
                let v: f64 = (0..p).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
                s += v;
                s2 += v * v;
            }
            (s, s2, count)
        })
        .collect();
    let (s, s2, k) = sums.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s / k as f64;
    let var = (s2 / k as f64 - mean * mean) * k as f64 / (k as f64 - 1.0);
    (mean, (var / k as f64).sqrt())
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (mut q0, mut q1) = (1.0, x);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    let d = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                    return (x, 2.0 / ((1.0 - x * x) * d * d));
                }
            }
        })
        .collect()
}

/// `∫₀^∞ f` by composite Gauss–Legendre on a geometric partition of
/// `[0, 80]`; integrands here decay at least like `e^{−x}`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64) -> f64 {
    integrate_interval(&f, 0.0, 80.0)
}

/// `∫_a^b f` on a partition refined towards `a`.
pub fn integrate_interval(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre(24);
    let mut edges = vec![a];
    let width = b - a;
    let mut t = 1e-6;
    while t < 1.0 {
        edges.push(a + width * t);
        t *= 4.0;
    }
    edges.push(b);
    edges
        .windows(2)
        .map(|e| {
            let (h, c) = (0.5 * (e[1] - e[0]), 0.5 * (e[1] + e[0]));
            rule.iter().map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
        })
        .sum()
}

/// `∫₀^∞ f(u) du` as `∫ f(e^y) e^y dy` over `y ∈ [lo, hi]` with unit panels
/// of a 24-point rule; suits integrands with a sharp feature near 0 and
/// smooth decay beyond `e^hi`.
pub fn integrate_log_scale(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let rule = gauss_legendre(24);
    let panels = ((hi - lo).ceil() as usize).max(1) * 2;
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let c = lo + h * (k as f64 + 0.5);
            rule.iter()
                .map(|(x, w)| {
                    let y = c + 0.5 * h * x;
                    let u = y.exp();
                    w * f(u) * u
                })
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}
