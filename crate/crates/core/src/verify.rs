//! Verification suites run by `mimocap verify`.
//!
//! Each suite compares a closed form against an independent route:
//! quadrature, Monte Carlo, or a high-precision evaluation at perturbed,
//! distinct arguments. The report is plain text and depends only on the
//! depth and seed.

use std::fmt::Write as _;

use rand::Rng;

use crate::capacity::{capacity_su, det_integral_identity, DetIntegral};
use crate::covariance::CovarianceSpec;
use crate::eigpdf::EigenPdf;
use crate::error::Result;
use crate::highprec::{hyp_distinct, Kernel};
use crate::hypfun::{hyp0f0, hyp1f0, hyp_pfq, EigenArgument};
use crate::montecarlo::{capacity_mc, shard_rng};
use crate::quad::{integrate_ordered, QuadConfig};
use crate::signed_log::SignedLogValue;
use crate::specfun::{
    log_moment_integral_checked, upper_incomplete_gamma_scaled, upper_incomplete_gamma_scaled_quadrature,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Quick,
    Full,
}

impl std::str::FromStr for Depth {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Self::Quick),
            "full" => Ok(Self::Full),
            _ => crate::error::domain(format!("verify depth must be quick or full, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub depth: Depth,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let depth = match self.depth {
            Depth::Quick => "quick",
            Depth::Full => "full",
        };
        let _ = writeln!(s, "mimocap verify: depth {depth}, seed {}", self.seed);
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "{n}/{} checks passed", self.checks.len());
        s
    }
}

fn check(name: &str, worst: f64, tol: f64, what: &str) -> Check {
    Check {
        name: name.into(),
        passed: worst <= tol,
        detail: format!("{what} {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    Check {
        name: name.into(),
        passed: false,
        detail: format!("error: {e}"),
    }
}

/// Closed form vs Monte Carlo grid: `(groups (λ, multiplicity), p)`.
pub const MC_GRID: [(&[(f64, usize)], usize); 12] = [
    (&[(1.0, 1)], 1),
    (&[(2.0, 1), (0.5, 1)], 1),
    (&[(1.5, 2)], 2),
    (&[(2.0, 2), (0.7, 1)], 2),
    (&[(3.0, 1), (1.0, 1)], 3),
    (&[(4.0, 1), (1.5, 1), (0.4, 1)], 3),
    (&[(2.0, 2), (0.5, 2)], 2),
    (&[(3.0, 3), (0.8, 1)], 4),
    (&[(2.5, 3), (0.6, 3)], 3),
    (&[(1.2, 3)], 6),
    (&[(5.0, 2), (2.0, 2), (0.3, 2)], 6),
    (&[(4.0, 1), (2.0, 1), (1.0, 1), (0.5, 1)], 6),
];

/// Normalization patterns `(groups, p)` with `n_min ≤ 3`.
pub const PDF_PATTERNS: [(&[(f64, usize)], usize); 6] = [
    (&[(1.0, 2)], 2),
    (&[(2.0, 1), (0.5, 1)], 2),
    (&[(1.0, 3)], 2),
    (&[(2.0, 2), (0.5, 2)], 2),
    (&[(1.5, 2), (0.4, 1)], 3),
    (&[(3.0, 1), (1.0, 1), (0.3, 1)], 3),
];

fn special_functions(depth: Depth) -> Vec<Check> {
    let step = if depth == Depth::Full { 0.25 } else { 1.0 };
    let mut worst = 0.0f64;
    let mut err = None;
    let n = (11.0 / step) as usize;
    for i in 0..=n {
        let a = -10.0 + step * i as f64;
        for x in [0.01, 0.1, 1.0, 10.0] {
            match (upper_incomplete_gamma_scaled(a, x), upper_incomplete_gamma_scaled_quadrature(a, x)) {
                (Ok(v), Ok(q)) => worst = worst.max(((v - q) / q).abs()),
                (Err(e), _) | (_, Err(e)) => err = Some(format!("a={a}, x={x}: {e}")),
            }
        }
    }
    let gamma = match err {
        Some(e) => failed("special/incomplete_gamma", e),
        None => check("special/incomplete_gamma", worst, 1e-8, "max relative difference from quadrature"),
    };
    let mut worst = 0.0f64;
    let mut err = None;
    let mus: &[f64] = if depth == Depth::Full { &[0.05, 0.2, 1.0, 5.0, 20.0, 50.0] } else { &[0.05, 1.0, 50.0] };
    for m in 0..=10 {
        for &mu in mus {
            match log_moment_integral_checked(m, mu) {
                Ok(c) => worst = worst.max(c.rel_diff),
                Err(e) => err = Some(format!("m={m}, mu={mu}: {e}")),
            }
        }
    }
    let moment = match err {
        Some(e) => failed("special/log_moment", e),
        None => check("special/log_moment", worst, 1e-9, "max relative difference from quadrature"),
    };
    vec![gamma, moment]
}

/// Richardson extrapolation of the distinct-argument value as the `L`
/// coincident `w` collapse, `(100 P(ε/10) − P(ε)) / 99` with `ε = 1e−3`.
fn richardson(kernel: &Kernel<'_>, lambdas: &[f64], others: &[f64], w0: f64, l: usize) -> Result<f64> {
    let offsets: &[f64] = if l == 2 { &[-1.0, 1.0] } else { &[-1.0, 0.0, 1.0] };
    let at = |eps: f64| -> Result<f64> {
        let mut w: Vec<f64> = offsets.iter().map(|o| w0 * (1.0 + eps * o)).collect();
        w.extend_from_slice(others);
        Ok(hyp_distinct(kernel, lambdas, &w, 256)?.to_f64())
    };
    Ok((100.0 * at(1e-4)? - at(1e-3)?) / 99.0)
}

#[derive(Debug, Clone, Copy)]
enum Family {
    F00,
    F10,
    Pfq,
}

fn confluence(depth: Depth, seed: u64) -> Vec<Check> {
    let per_family = if depth == Depth::Full { 20 } else { 5 };
    let mut out = Vec::new();
    for (fi, family) in [Family::F00, Family::F10, Family::Pfq].into_iter().enumerate() {
        let mut rng = shard_rng(seed, 100 + fi as u64);
        let mut worst = 0.0f64;
        let mut err = None;
        for inst in 0..per_family {
            let l = if depth == Depth::Full && inst % 2 == 1 { 3 } else { 2 };
            let extra = rng.random_range(0..=2usize);
            let m = l + extra;
            let w0 = rng.random_range(0.3..1.3);
            let others: Vec<f64> = (0..extra).map(|k| w0 + 0.35 * (k as f64 + 1.0) + rng.random_range(0.0..0.1)).collect();
            // keep |λ w| < 0.9 so the binomial kernel stays on its real branch
            let half_width = 0.9 / (others.last().copied().unwrap_or(w0) * 1.01);
            let lambdas: Vec<f64> = (0..m)
                .map(|k| half_width * (-1.0 + 2.0 * (k as f64 + rng.random_range(0.1..0.9)) / m as f64))
                .collect();
            let mut groups = vec![(w0, l)];
            groups.extend(others.iter().map(|&v| (v, 1)));
            let arg = EigenArgument::from_groups(groups).expect("distinct groups");
            let r = rng.random_range(0.2..2.4) + 0.05;
            let a = [rng.random_range(0.6..3.0) + 0.01];
            let b = [m as f64 + rng.random_range(0.3..2.0)];
            let (value, kernel) = match family {
                Family::F00 => (hyp0f0(&lambdas, &arg), Kernel::Exp),
                Family::F10 => (hyp1f0(r, &lambdas, &arg), Kernel::Binomial { r }),
                Family::Pfq => (hyp_pfq(&a, &b, &lambdas, &arg), Kernel::Pfq { a: &a, b: &b }),
            };
            match value.and_then(|v| Ok((v, richardson(&kernel, &lambdas, &others, w0, l)?))) {
                Ok((v, reference)) => {
                    worst = worst.max(v.rel_diff(&SignedLogValue::from_f64(reference)));
                }
                Err(e) => err = Some(format!("instance {inst}: {e}")),
            }
        }
        let name = match family {
            Family::F00 => "confluence/0F0",
            Family::F10 => "confluence/1F0",
            Family::Pfq => "confluence/1F1",
        };
        out.push(match err {
            Some(e) => failed(name, e),
            None => check(
                name,
                worst,
                1e-6,
                &format!("{per_family} instances, max relative difference from extrapolated limit"),
            ),
        });
    }
    out
}

fn pdf_normalization(depth: Depth) -> Vec<Check> {
    let cfg = QuadConfig::rel(1e-7);
    let mut out = Vec::new();
    for (groups, p) in PDF_PATTERNS {
        let spec = CovarianceSpec::from_groups(groups).expect("valid pattern");
        let n_min = spec.dim().min(p);
        if depth == Depth::Quick && n_min > 2 {
            continue;
        }
        let name = format!("pdf/normalization {groups:?} p={p}");
        let c = EigenPdf::new(&spec, p).and_then(|pdf| pdf.normalization_check(&cfg));
        out.push(match c {
            Ok(r) => check(&name, (r.value - 1.0).abs(), 1e-4, "|integral − 1|"),
            Err(e) => failed(&name, e),
        });
    }
    // Φ = I, n = p = 2: (x₁ − x₂)² e^{−x₁−x₂}
    let pdf = EigenPdf::new(&CovarianceSpec::scalar(1.0, 2).expect("identity"), 2).expect("valid");
    let mut worst = 0.0f64;
    for (x1, x2) in [(0.5f64, 0.1f64), (1.0, 0.3), (2.5, 2.4), (4.0, 0.5), (7.0, 3.0)] {
        let want = (x1 - x2) * (x1 - x2) * (-(x1 + x2)).exp();
        match pdf.joint_pdf(&[x1, x2]) {
            Ok(v) => worst = worst.max(((v - want) / want).abs()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(check("pdf/wishart_identity", worst, 1e-10, "max relative pointwise difference"));
    out
}

fn closed_vs_monte_carlo(depth: Depth, seed: u64) -> Vec<Check> {
    let samples = if depth == Depth::Full { 1_000_000 } else { 100_000 };
    let mut out = Vec::new();
    for (k, (groups, p)) in MC_GRID.iter().enumerate() {
        let spec = CovarianceSpec::from_groups(groups).expect("valid grid case");
        if depth == Depth::Quick && spec.dim().min(*p) > 2 {
            continue;
        }
        let name = format!("capacity/monte_carlo {groups:?} p={p}");
        match capacity_su(&spec, *p) {
            Ok(c) => {
                let mc = capacity_mc(&spec, *p, samples, seed.wrapping_add(k as u64));
                let mut chk = check(&name, mc.z_score(c.value_nats), 3.0, &format!("{samples} samples, |z|"));
                let _ = write!(chk.detail, "; closed {:.6} bits, mc {:.6} bits", c.value_bits, mc.mean / std::f64::consts::LN_2);
                out.push(chk);
            }
            Err(e) => out.push(failed(&name, e)),
        }
    }
    out
}

/// Families for the determinant-integral identity on `[0, ∞)` with
/// `ξ(x) = e^{−x}`, `ξ̃(x) = ln(1+x)`, `Φ_i(x) = x^i`, `Ψ_i(x) = e^{−c_i x}`.
pub fn identity_family(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    match n {
        2 => (vec![0.5, 1.5], vec![vec![], vec![]]),
        _ => (vec![0.3, 1.0, 2.0], vec![vec![1.0], vec![2.0], vec![4.0]]),
    }
}

fn small_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("identity families have n ≤ 3"),
    }
}

/// The identity's left-hand side by nested quadrature over `x₁ ≥ x₂ ≥ 0`.
pub fn identity_by_quadrature(n: usize) -> f64 {
    let (c, block) = identity_family(n);
    let f = |x: &[f64]| {
        let phi = [vec![1.0, 1.0], vec![x[0], x[1]]];
        let psi: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![(-c[i] * x[0]).exp(), (-c[i] * x[1]).exp()];
                row.extend_from_slice(&block[i]);
                row
            })
            .collect();
        small_det(&phi) * small_det(&psi) * (-(x[0] + x[1])).exp() * (x[0].ln_1p() + x[1].ln_1p())
    };
    integrate_ordered(f, 2, 0.0, f64::INFINITY, &QuadConfig::rel(1e-9)).value
}

pub fn identity_closed(n: usize) -> Result<f64> {
    let (c, block) = identity_family(n);
    let one = |_: f64| 1.0;
    let lin = |x: f64| x;
    let psi_fns: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = c
        .iter()
        .map(|&ci| Box::new(move |x: f64| (-ci * x).exp()) as Box<dyn Fn(f64) -> f64 + Sync>)
        .collect();
    let xi = |x: f64| (-x).exp();
    let xi_tilde = |x: f64| x.ln_1p();
    let problem = DetIntegral {
        phi: vec![&one, &lin],
        psi: psi_fns.iter().map(|f| f.as_ref()).collect(),
        psi_const: block,
        xi: &xi,
        xi_tilde: &xi_tilde,
        a: 0.0,
        b: f64::INFINITY,
    };
    det_integral_identity(&problem, &QuadConfig::rel(1e-12))
}

fn determinant_identity(depth: Depth) -> Vec<Check> {
    let ns: &[usize] = if depth == Depth::Full { &[2, 3] } else { &[2] };
    ns.iter()
        .map(|&n| {
            let name = format!("identity/p=2 n={n}");
            match identity_closed(n) {
                Ok(v) => {
                    let q = identity_by_quadrature(n);
                    check(&name, ((v - q) / q).abs(), 1e-4, "relative difference from nested quadrature")
                }
                Err(e) => failed(&name, e),
            }
        })
        .collect()
}

pub fn run_verify(depth: Depth, seed: u64) -> VerifyReport {
    let mut checks = special_functions(depth);
    checks.extend(confluence(depth, seed));
    checks.extend(pdf_normalization(depth));
    checks.extend(closed_vs_monte_carlo(depth, seed));
    checks.extend(determinant_identity(depth));
    VerifyReport { depth, seed, checks }
}
