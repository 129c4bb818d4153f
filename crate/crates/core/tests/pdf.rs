mod common;

use common::{integrate_half_line, integrate_interval};
use mimocap::eigpdf::EigenPdf;
use mimocap::quad::QuadConfig;
use mimocap::verify::PDF_PATTERNS;
use mimocap::CovarianceSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Largest eigenvalue of `H diag(phi) H†` for a `2 × 2` channel, from the
/// closed-form eigenvalues of a 2 × 2 Hermitian matrix.
fn largest_eigenvalue_2x2(rng: &mut impl Rng, phi: [f64; 2]) -> f64 {
    let mut h = [[(0.0, 0.0); 2]; 2];
    for row in &mut h {
        for (j, z) in row.iter_mut().enumerate() {
            let s = (0.5 * phi[j]).sqrt();
            *z = (s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal));
        }
    }
    let norm2 = |r: &[(f64, f64); 2]| r.iter().map(|z| z.0 * z.0 + z.1 * z.1).sum::<f64>();
    let (a, d) = (norm2(&h[0]), norm2(&h[1]));
    // off-diagonal entry Σ_j h_0j conj(h_1j)
    let (br, bi) = h[0].iter().zip(&h[1]).fold((0.0, 0.0), |acc, (x, y)| {
        (acc.0 + x.0 * y.0 + x.1 * y.1, acc.1 + x.1 * y.0 - x.0 * y.1)
    });
    0.5 * (a + d) + (0.25 * (a - d).powi(2) + br * br + bi * bi).sqrt()
}

#[test]
fn largest_eigenvalue_histogram_matches_density() {
    const SAMPLES: usize = 400_000;
    const BINS: usize = 20;
    let phi = [2.0, 0.5];
    let pdf = EigenPdf::new(&CovarianceSpec::from_groups(&[(phi[0], 1), (phi[1], 1)]).unwrap(), 2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let draws: Vec<f64> = (0..SAMPLES).map(|_| largest_eigenvalue_2x2(&mut rng, phi)).collect();
    let hi = 16.0;
    let width = hi / BINS as f64;
    let mut counts = [0usize; BINS];
    for &x in &draws {
        if x < hi {
            counts[(x / width) as usize] += 1;
        }
    }
    let cfg = QuadConfig::rel(1e-9);
    let mut worst = 0.0f64;
    for (b, &c) in counts.iter().enumerate() {
        let p = pdf.largest_eigenvalue_probability(b as f64 * width, (b + 1) as f64 * width, &cfg).unwrap();
        let phat = c as f64 / SAMPLES as f64;
        let se = (p * (1.0 - p) / SAMPLES as f64).sqrt().max(1e-12);
        worst = worst.max((phat - p).abs() / se);
    }
    assert!(worst <= 3.0, "sup bin discrepancy {worst:.2} standard errors");
}

#[test]
fn density_is_nonnegative_on_random_points() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for (groups, p) in PDF_PATTERNS {
        let pdf = EigenPdf::new(&CovarianceSpec::from_groups(groups).unwrap(), p).unwrap();
        let k = pdf.n_min();
        for _ in 0..10_000 {
            let mut x: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..15.0)).collect();
            x.sort_by(|a, b| b.total_cmp(a));
            if x.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            let v = pdf.joint_pdf(&x).unwrap();
            assert!(v >= 0.0, "{groups:?} p={p} at {x:?}: {v}");
        }
    }
}

#[test]
fn two_dimensional_patterns_integrate_to_one() {
    // independent fixed-rule quadrature over x₁ ≥ x₂ > 0
    for (groups, p) in PDF_PATTERNS {
        let pdf = EigenPdf::new(&CovarianceSpec::from_groups(groups).unwrap(), p).unwrap();
        if pdf.n_min() != 2 {
            continue;
        }
        let total = integrate_half_line(|x1| {
            integrate_interval(
                &|x2: f64| if x2 < x1 { pdf.joint_pdf(&[x1, x2]).unwrap_or(0.0) } else { 0.0 },
                0.0,
                x1,
            )
        });
        assert!((total - 1.0).abs() < 1e-6, "{groups:?} p={p}: {total}");
    }
}

#[test]
fn rejects_unordered_points() {
    let pdf = EigenPdf::new(&CovarianceSpec::scalar(1.0, 2).unwrap(), 2).unwrap();
    assert!(pdf.joint_pdf(&[0.5, 1.0]).is_err());
    assert!(pdf.joint_pdf(&[1.0, -0.5]).is_err());
    assert!(pdf.joint_pdf(&[1.0]).is_err());
}
