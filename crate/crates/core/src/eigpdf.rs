//! Joint density of the nonzero ordered eigenvalues of `W = H Φ H†`, for
//! `H` a `p × n` standard complex Gaussian matrix and `Φ` with eigenvalues of
//! arbitrary multiplicity.
//!
//! Both the Wishart (`p ≥ n`) and the pseudo-Wishart (`n > p`) regime are
//! covered: for `n > p` the matrix `G̃` gains `n − p` constant columns.

use std::fmt::Write as _;

use crate::covariance::{multiplicity_index, CovarianceSpec, MuGroup, MultiplicityIndex};
use crate::error::{domain, Error, Result};
use crate::linalg::SquareMatrix;
use crate::montecarlo::{collect_samples, sample_eigenvalue_draw};
use crate::quad::{integrate, integrate_ordered, QuadConfig, QuadResult};
use crate::signed_log::SignedLogValue;
use crate::specfun::{falling_factorial, ln_multi_factorial};

/// Negative pdf values smaller than this fraction of the Hadamard bound of
/// the determinant product are rounding noise and read as zero.
const NEGATIVE_NOISE: f64 = 1e-10;

/// Largest `n_min` accepted by [`EigenPdf::normalization_check`].
pub const MAX_NORMALIZATION_DIM: usize = 3;

/// `K` in signed-log form:
/// `(−1)^{p(n−n_min)} / Γ_(n_min)(p) · Π μ_i^{m_i p} / (Π Γ_(m_i)(m_i) Π_{i<j} (μ_i − μ_j)^{m_i m_j})`.
pub(crate) fn normalization_constant(mu: &[MuGroup], n: usize, p: usize) -> SignedLogValue {
    let n_min = n.min(p);
    let mut ln = -ln_multi_factorial(n_min, p);
    for (a, g) in mu.iter().enumerate() {
        ln += (g.multiplicity * p) as f64 * g.mu.ln();
        ln -= ln_multi_factorial(g.multiplicity, g.multiplicity);
        for h in &mu[a + 1..] {
            ln -= (g.multiplicity * h.multiplicity) as f64 * (g.mu - h.mu).ln();
        }
    }
    let sign = if (p * (n - n_min)).is_multiple_of(2) { 1 } else { -1 };
    SignedLogValue::new(sign, ln)
}

/// Joint eigenvalue density for a fixed `(Φ, p)`.
#[derive(Debug, Clone)]
pub struct EigenPdf {
    spec: CovarianceSpec,
    mu: Vec<MuGroup>,
    index: MultiplicityIndex,
    p: usize,
    n_min: usize,
    k: SignedLogValue,
}

impl EigenPdf {
    pub fn new(spec: &CovarianceSpec, p: usize) -> Result<Self> {
        let n = spec.dim();
        if n == 0 || p == 0 {
            return domain("eigenvalue density needs n ≥ 1 and p ≥ 1");
        }
        let mu = spec.mu_groups();
        let index = multiplicity_index(mu.iter().map(|g| g.multiplicity));
        Ok(Self {
            spec: spec.clone(),
            k: normalization_constant(&mu, n, p),
            mu,
            index,
            p,
            n_min: n.min(p),
        })
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn constant(&self) -> SignedLogValue {
        self.k
    }

    /// `G̃(x, μ)`, an `n × n` matrix.
    pub fn g_tilde(&self, x: &[f64]) -> SquareMatrix {
        let n = self.spec.dim();
        SquareMatrix::from_fn(n, |i, j| {
            let mu = self.mu[self.index.e[i]].mu;
            let d = self.index.d[i];
            if j < self.n_min {
                (-x[j]).powi(d as i32) * (-mu * x[j]).exp()
            } else {
                let top = n - j - 1;
                if d > top {
                    0.0
                } else {
                    falling_factorial(top as f64, d) * mu.powi((top - d) as i32)
                }
            }
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_min {
            return domain(format!("expected {} eigenvalues, got {}", self.n_min, x.len()));
        }
        if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return domain("eigenvalues must be positive and finite");
        }
        if x.windows(2).any(|w| w[0] <= w[1]) {
            return domain("eigenvalues must be strictly decreasing");
        }
        Ok(())
    }

    /// Density at a strictly decreasing positive point.
    pub fn joint_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.eval(x)
    }

    /// Density without argument checks; ties give zero.
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = SquareMatrix::from_fn(self.n_min, |i, j| x[j].powi(i as i32));
        let g = self.g_tilde(x);
        let power: SignedLogValue = x
            .iter()
            .map(|&xi| SignedLogValue::exp((self.p - self.n_min) as f64 * xi.ln()))
            .product();
        let value = self.k * v.log_det() * g.log_det() * power;
        if value.sign() >= 0 {
            return Ok(value.to_f64());
        }
        let bound = self.k.abs() * hadamard_bound(&v) * hadamard_bound(&g) * power;
        if (value.logmag() - bound.logmag()).exp() < NEGATIVE_NOISE {
            Ok(0.0)
        } else {
            Err(Error::Internal(format!(
                "density came out negative ({value}) at x={x:?}"
            )))
        }
    }

    fn eval_ordered_or_zero(&self, x: &[f64]) -> f64 {
        if x.windows(2).any(|w| w[0] <= w[1]) || x.iter().any(|&v| v <= 0.0) {
            return 0.0;
        }
        self.eval(x).unwrap_or(f64::NAN)
    }

    /// Integral of the density over the ordered positive orthant; should be 1.
    pub fn normalization_check(&self, cfg: &QuadConfig) -> Result<QuadResult> {
        if self.n_min > MAX_NORMALIZATION_DIM {
            return domain(format!(
                "nested quadrature limited to n_min ≤ {MAX_NORMALIZATION_DIM}, got {}",
                self.n_min
            ));
        }
        // the total is 1, so an absolute floor keeps near-empty inner slices
        // from demanding unattainable relative accuracy
        let cfg = QuadConfig {
            abs_tol: cfg.abs_tol.max(cfg.rel_tol * 1e-2),
            ..*cfg
        };
        let r = integrate_ordered(|x| self.eval_ordered_or_zero(x), self.n_min, 0.0, f64::INFINITY, &cfg);
        if !r.converged {
            return Err(Error::NoConvergence {
                msg: "normalization quadrature".into(),
                estimate: r.value,
            });
        }
        Ok(r)
    }

    /// Marginal density of the largest eigenvalue at `x1`.
    pub fn largest_eigenvalue_density(&self, x1: f64, cfg: &QuadConfig) -> Result<f64> {
        if !(x1 > 0.0) {
            return Ok(0.0);
        }
        if self.n_min == 1 {
            return self.eval(&[x1]);
        }
        if self.n_min > MAX_NORMALIZATION_DIM {
            return domain("largest-eigenvalue marginal limited to n_min ≤ 3");
        }
        let r = integrate_ordered(
            |rest| {
                let mut x = Vec::with_capacity(self.n_min);
                x.push(x1);
                x.extend_from_slice(rest);
                self.eval_ordered_or_zero(&x)
            },
            self.n_min - 1,
            0.0,
            x1,
            cfg,
        );
        Ok(r.value)
    }

    /// Probability that the largest eigenvalue falls in `[lo, hi]`.
    pub fn largest_eigenvalue_probability(&self, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<f64> {
        let inner = QuadConfig {
            rel_tol: cfg.rel_tol * 0.1,
            ..*cfg
        };
        let mut err = None;
        let r = integrate(
            |x| match self.largest_eigenvalue_density(x, &inner) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            cfg,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }
}

fn hadamard_bound(m: &SquareMatrix) -> SignedLogValue {
    (0..m.dim())
        .map(|i| {
            let norm2: f64 = (0..m.dim()).map(|j| m.get(i, j).powi(2)).sum();
            SignedLogValue::exp(0.5 * norm2.ln())
        })
        .product()
}

/// `count` reproducible draws of the descending nonzero eigenvalues of
/// `H Φ H†`.
pub fn sample_eigenvalues(spec: &CovarianceSpec, p: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return domain("count must be at least 1");
    }
    if spec.dim() == 0 || p == 0 {
        return domain("sampling needs n ≥ 1 and p ≥ 1");
    }
    let sqrt_phi: Vec<f64> = spec.eigenvalues().iter().map(|v| v.sqrt()).collect();
    Ok(collect_samples(count, seed, |rng| sample_eigenvalue_draw(rng, &sqrt_phi, p)))
}

/// Fixed-bin histogram of scalar samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Samples seen, including those outside the bins.
    pub total: usize,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return domain("histogram needs at least one bin and hi > lo");
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &s in samples {
            if s >= lo && s < hi {
                let b = (((s - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        Ok(Self {
            edges,
            counts,
            total: samples.len(),
        })
    }

    pub fn bin_probability(&self, b: usize) -> f64 {
        self.counts[b] as f64 / self.total as f64
    }

    /// Binomial standard error of [`Histogram::bin_probability`].
    pub fn bin_stderr(&self, b: usize) -> f64 {
        let q = self.bin_probability(b);
        (q * (1.0 - q) / self.total as f64).sqrt()
    }

    pub fn width(&self, b: usize) -> f64 {
        self.edges[b + 1] - self.edges[b]
    }

    /// CSV rows `bin_left,bin_right,density,stderr[,model_density]`.
    pub fn to_csv(&self, model_density: Option<&[f64]>, header_comment: &str) -> String {
        let mut s = String::new();
        for line in header_comment.lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str("bin_left,bin_right,density,stderr");
        if model_density.is_some() {
            s.push_str(",model_density");
        }
        s.push('\n');
        for b in 0..self.counts.len() {
            let w = self.width(b);
            let _ = write!(
                s,
                "{:.6},{:.6},{:.9e},{:.9e}",
                self.edges[b],
                self.edges[b + 1],
                self.bin_probability(b) / w,
                self.bin_stderr(b) / w
            );
            if let Some(m) = model_density {
                let _ = write!(s, ",{:.9e}", m[b]);
            }
            s.push('\n');
        }
        s
    }
}
