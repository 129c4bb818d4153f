//! Monte Carlo oracle: sampled channels `H` with i.i.d. unit-variance
//! circularly symmetric complex Gaussian entries.
//!
//! Samples are generated in fixed-size shards; shard `s` draws from a ChaCha
//! stream selected by `(seed, s)`, so results do not depend on how shards are
//! scheduled across threads. Shard statistics are merged in shard order.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::CovarianceSpec;

pub const SHARD_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// `|value − mean|` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.mean).abs() / self.stderr
    }
}

/// Random stream for one shard.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn shard_ranges(count: usize) -> Vec<(u64, usize)> {
    (0..count.div_ceil(SHARD_SIZE))
        .map(|s| (s as u64, SHARD_SIZE.min(count - s * SHARD_SIZE)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Self) -> Self {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

/// Sample mean and standard error of `draw` over `count` reproducible draws.
pub fn estimate_mean<F>(count: usize, seed: u64, draw: F) -> MonteCarloEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    assert!(count >= 2, "need at least two samples for a standard error");
    let shards: Vec<Moments> = shard_ranges(count)
        .into_par_iter()
        .map(|(s, len)| {
            let mut rng = shard_rng(seed, s);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    let total = shards.into_iter().fold(Moments::default(), Moments::merge);
    let var = total.m2 / (total.n - 1) as f64;
    MonteCarloEstimate {
        mean: total.mean,
        stderr: (var / total.n as f64).sqrt(),
        count: total.n,
        seed,
    }
}

/// Runs `draw` `count` times reproducibly, preserving sample order.
pub fn collect_samples<T, F>(count: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    shard_ranges(count)
        .into_par_iter()
        .flat_map_iter(|(s, len)| {
            let mut rng = shard_rng(seed, s);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Standard complex Gaussian: real and imaginary parts each of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `G = H Φ^{1/2}` for a `p × n` Gaussian `H` and diagonal `Φ`, column-major
/// (`g[c * p + r]`).
fn draw_scaled_channel<R: Rng + ?Sized>(rng: &mut R, p: usize, sqrt_phi: &[f64]) -> Vec<Complex<f64>> {
    let mut g = Vec::with_capacity(p * sqrt_phi.len());
    for &s in sqrt_phi {
        for _ in 0..p {
            g.push(complex_gaussian(rng) * s);
        }
    }
    g
}

/// Gram matrix of the smaller side: `G G†` (`p ≤ n`) or `G† G`, row-major.
fn small_gram(g: &[Complex<f64>], p: usize, n: usize) -> (usize, Vec<Complex<f64>>) {
    if p <= n {
        let mut a = vec![Complex::new(0.0, 0.0); p * p];
        for c in 0..n {
            let col = &g[c * p..(c + 1) * p];
            for r in 0..p {
                for s in 0..=r {
                    a[r * p + s] += col[r] * col[s].conj();
                }
            }
        }
        fill_upper(&mut a, p);
        (p, a)
    } else {
        let mut a = vec![Complex::new(0.0, 0.0); n * n];
        for r in 0..n {
            for s in 0..=r {
                let cr = &g[r * p..(r + 1) * p];
                let cs = &g[s * p..(s + 1) * p];
                a[r * n + s] = cs.iter().zip(cr).map(|(x, y)| x.conj() * y).sum();
            }
        }
        fill_upper(&mut a, n);
        (n, a)
    }
}

fn fill_upper(a: &mut [Complex<f64>], k: usize) {
    for r in 0..k {
        for s in r + 1..k {
            a[r * k + s] = a[s * k + r].conj();
        }
    }
}

/// `ln det A` for Hermitian positive definite `A` by Cholesky.
fn hermitian_log_det(a: &mut [Complex<f64>], k: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..k {
        let mut d = a[j * k + j].re;
        for l in 0..j {
            d -= a[j * k + l].norm_sqr();
        }
        let d = d.sqrt();
        acc += d.ln();
        a[j * k + j] = Complex::new(d, 0.0);
        for i in j + 1..k {
            let mut v = a[i * k + j];
            for l in 0..j {
                v -= a[i * k + l] * a[j * k + l].conj();
            }
            a[i * k + j] = v / d;
        }
    }
    2.0 * acc
}

/// One draw of `ln det(I_p + H Φ H†)`.
pub fn sample_log_det<R: Rng + ?Sized>(rng: &mut R, spec: &CovarianceSpec, p: usize) -> f64 {
    let sqrt_phi: Vec<f64> = spec.eigenvalues().iter().map(|v| v.sqrt()).collect();
    sample_log_det_sqrt(rng, &sqrt_phi, p)
}

fn sample_log_det_sqrt<R: Rng + ?Sized>(rng: &mut R, sqrt_phi: &[f64], p: usize) -> f64 {
    let n = sqrt_phi.len();
    let g = draw_scaled_channel(rng, p, sqrt_phi);
    let (k, mut a) = small_gram(&g, p, n);
    for i in 0..k {
        a[i * k + i] += 1.0;
    }
    hermitian_log_det(&mut a, k)
}

/// Monte Carlo estimate of `E ln det(I_p + H Φ H†)` in nats.
pub fn capacity_mc(spec: &CovarianceSpec, p: usize, samples: usize, seed: u64) -> MonteCarloEstimate {
    let sqrt_phi: Vec<f64> = spec.eigenvalues().iter().map(|v| v.sqrt()).collect();
    estimate_mean(samples, seed, |rng| sample_log_det_sqrt(rng, &sqrt_phi, p))
}

/// Descending nonzero eigenvalues of one draw of `H Φ H†`.
pub fn sample_eigenvalue_draw<R: Rng + ?Sized>(rng: &mut R, sqrt_phi: &[f64], p: usize) -> Vec<f64> {
    let n = sqrt_phi.len();
    let g = draw_scaled_channel(rng, p, sqrt_phi);
    let (k, a) = small_gram(&g, p, n);
    let m = DMatrix::from_row_slice(k, k, &a);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_mean() {
        let est = estimate_mean(100_000, 7, |rng| complex_gaussian(rng).norm_sqr());
        assert!(est.z_score(1.0) < 3.0, "{est:?}");
    }

    #[test]
    fn deterministic_in_seed() {
        let a = estimate_mean(20_000, 42, |rng| complex_gaussian(rng).re);
        let b = estimate_mean(20_000, 42, |rng| complex_gaussian(rng).re);
        assert_eq!(a, b);
        let c = estimate_mean(20_000, 43, |rng| complex_gaussian(rng).re);
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn gram_log_det_matches_eigenvalues() {
        let mut rng = shard_rng(3, 0);
        let sqrt_phi = [1.0, 0.5, 2.0];
        for p in [2, 3, 4] {
            let mut r1 = rng.clone();
            let ld = sample_log_det_sqrt(&mut r1, &sqrt_phi, p);
            let ev = sample_eigenvalue_draw(&mut rng, &sqrt_phi, p);
            let from_ev: f64 = ev.iter().map(|x| x.ln_1p()).sum();
            assert!((ld - from_ev).abs() < 1e-10, "{ld} vs {from_ev}");
        }
    }

    #[test]
    fn trace_identity() {
        // E tr(HΦH†) = p tr Φ
        let sqrt_phi = [1.0f64, 0.7];
        let est = estimate_mean(50_000, 11, |rng| sample_eigenvalue_draw(rng, &sqrt_phi, 3).iter().sum());
        assert!(est.z_score(3.0 * 1.49) < 3.0, "{est:?}");
    }
}
