//! Multiuser values against a paired Monte Carlo that reuses the interferer
//! columns of `H` in both log-determinants, so the difference has small
//! variance even when each term is large.

use mimocap::capacity::capacity_mu;
use mimocap::figures::fig4_scenario;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

fn log_det(m: DMatrix<Complex<f64>>) -> f64 {
    let l = m.cholesky().expect("positive definite").unpack();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

/// `(mean, stderr)` in bits of `ln det(I + H Ψ̃ H†) − ln det(I + H₁ Ψ H₁†)`.
fn paired_mc(nr: usize, desired: (usize, f64), interferer: (usize, f64), samples: usize, seed: u64) -> (f64, f64) {
    let (n0, r0) = desired;
    let (n1, r1) = interferer;
    let diffs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut draw = || Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
            let h0 = DMatrix::from_fn(nr, n0, |_, _| draw() * (0.5 * r0).sqrt());
            let h1 = DMatrix::from_fn(nr, n1, |_, _| draw() * (0.5 * r1).sqrt());
            let i = DMatrix::<Complex<f64>>::identity(nr, nr);
            let interference = &h1 * h1.adjoint();
            log_det(&i + &interference + &h0 * h0.adjoint()) - log_det(&i + interference)
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean / std::f64::consts::LN_2, (var / n).sqrt() / std::f64::consts::LN_2)
}

#[test]
fn fig4_points_match_paired_monte_carlo() {
    for (nt1, sir) in [(1, 0.0), (2, -20.0), (4, -40.0), (6, 10.0), (10, -40.0), (10, 20.0)] {
        let s = fig4_scenario(nt1, sir).unwrap();
        let closed = capacity_mu(&s).unwrap().value_bits;
        let (mean, se) = paired_mc(6, (6, s.rho(0)), (nt1, s.rho(1)), 100_000, 40 + nt1 as u64);
        let z = (closed - mean) / se;
        assert!(z.abs() <= 3.0, "NT1={nt1} SIR={sir}: closed {closed} vs mc {mean} ± {se} (z={z:.2})");
    }
}
