//! Closed-form ergodic mutual information and the quantities built on it:
//! the multiuser difference formula, the Gaussian-interference baseline, the
//! relay bound, SNR/SIR sweeps and the generic ordered-domain
//! determinant-integral identity.
//!
//! Internally everything is in nats; `value_bits` is derived at the end.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::covariance::{build_interference_matrices, multiplicity_index, CovarianceSpec, NetworkScenario};
use crate::eigpdf::normalization_constant;
use crate::error::{domain, Error, Result};
use crate::highprec::{self, ClosedFormTerms};
use crate::linalg::SquareMatrix;
use crate::montecarlo::{capacity_mc, MonteCarloEstimate};
use crate::quad::{integrate, QuadConfig};
use crate::signed_log::SignedLogValue;
use crate::specfun::{falling_factorial, log_moment_integral, power_moment_integral};

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityOptions {
    /// Warn when `max_k |det R^(k)| / min_k |det R^(k)|` exceeds this.
    pub spread_limit: f64,
    /// Relative agreement required between consecutive precision rungs.
    pub precision_tolerance: f64,
    /// Highest working precision tried, in bits.
    pub max_precision_bits: usize,
    /// Samples of the Monte Carlo cross-check run on a warning; 0 disables it.
    pub fallback_samples: usize,
    pub seed: u64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            spread_limit: 1e12,
            precision_tolerance: 1e-13,
            max_precision_bits: highprec::MAX_PRECISION_BITS,
            fallback_samples: 100_000,
            seed: 0x6d69_6d6f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapacityDiagnostics {
    pub n_min: usize,
    /// `K det R^(k)` for each `k`.
    pub terms: Vec<SignedLogValue>,
    pub det_spread: f64,
    /// `Σ_k |K det R^(k)| / |Σ_k K det R^(k)|`.
    pub cancellation: f64,
    /// Working precision of the reported value (53 = double).
    pub precision_bits: usize,
    pub warnings: Vec<String>,
    /// Monte Carlo estimate in nats, present only when a warning fired.
    pub monte_carlo: Option<MonteCarloEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value_nats: f64,
    pub value_bits: f64,
    pub diagnostics: CapacityDiagnostics,
}

impl CapacityResult {
    fn from_nats(value_nats: f64, diagnostics: CapacityDiagnostics) -> Self {
        Self {
            value_nats,
            value_bits: value_nats / LN_2,
            diagnostics,
        }
    }

    fn zero() -> Self {
        Self::from_nats(0.0, CapacityDiagnostics::default())
    }

    fn scaled(&self, c: f64) -> Self {
        Self::from_nats(self.value_nats * c, self.diagnostics.clone())
    }
}

/// Entries of the matrices `R^(k)`: the shared columns, plus the
/// log-moment column that replaces column `k`.
struct MomentMatrices {
    base: SquareMatrix,
    log_column: Vec<Vec<f64>>,
}

fn moment_matrices(spec: &CovarianceSpec, p: usize) -> Result<MomentMatrices> {
    let n = spec.dim();
    let n_min = n.min(p);
    let mu = spec.mu_groups();
    let index = multiplicity_index(mu.iter().map(|g| g.multiplicity));
    let mut base = SquareMatrix::zeros(n);
    let mut log_column = vec![vec![0.0; n]; n_min];
    for i in 0..n {
        let rate = mu[index.e[i]].mu;
        let d = index.d[i];
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..n {
            if j < n_min {
                let m = p - n_min + j + d;
                base.set(i, j, sign * power_moment_integral(m, rate));
                log_column[j][i] = sign * log_moment_integral(m, rate)?;
            } else {
                let top = n - j - 1;
                let v = if d > top {
                    0.0
                } else {
                    falling_factorial(top as f64, d) * rate.powi((top - d) as i32)
                };
                base.set(i, j, v);
            }
        }
    }
    if !base.is_finite() || log_column.iter().flatten().any(|v| !v.is_finite()) {
        return domain("moment matrix entries overflow; the covariance is too extreme");
    }
    Ok(MomentMatrices { base, log_column })
}

/// `E ln det(I_p + H Φ H†)` for a `p × n` standard complex Gaussian `H`.
pub fn capacity_su(spec: &CovarianceSpec, p: usize) -> Result<CapacityResult> {
    capacity_su_with(spec, p, &CapacityOptions::default())
}

fn closed_form_f64(spec: &CovarianceSpec, p: usize) -> Result<ClosedFormTerms> {
    let n = spec.dim();
    let n_min = n.min(p);
    let k_const = normalization_constant(&spec.mu_groups(), n, p);
    let mats = moment_matrices(spec, p)?;
    let terms: Vec<SignedLogValue> = (0..n_min)
        .map(|k| {
            let mut r = mats.base.clone();
            for (i, &v) in mats.log_column[k].iter().enumerate() {
                r.set(i, k, v);
            }
            k_const * r.log_det()
        })
        .collect();
    if terms.iter().any(|t| !t.logmag().is_finite() && !t.is_zero()) {
        return Err(Error::Internal("non-finite determinant in the closed form".into()));
    }
    Ok(ClosedFormTerms {
        total: terms.iter().copied().sum(),
        abs_sum: terms.iter().map(|t| t.abs()).sum(),
        terms,
        precision_bits: 53,
    })
}

fn agrees(a: &ClosedFormTerms, b: &ClosedFormTerms, rel_tol: f64) -> bool {
    let (x, y) = (a.total.to_f64(), b.total.to_f64());
    x.is_finite() && y.is_finite() && (x - y).abs() <= rel_tol * x.abs().max(y.abs())
}

/// Evaluates the closed form at increasing precision until two consecutive
/// rungs agree; returns the last rung and whether agreement was reached.
fn stable_closed_form(spec: &CovarianceSpec, p: usize, opts: &CapacityOptions) -> Result<(ClosedFormTerms, bool)> {
    let mu = spec.mu_groups();
    let mut prev = closed_form_f64(spec, p).ok();
    let mut bits = 128;
    loop {
        let cur = highprec::closed_form_terms(&mu, p, bits)?;
        if prev.as_ref().is_some_and(|pr| agrees(pr, &cur, opts.precision_tolerance)) {
            return Ok((cur, true));
        }
        if bits >= opts.max_precision_bits {
            return Ok((cur, false));
        }
        log::debug!("closed form unstable below {bits} bits (n={}, p={p}); escalating", spec.dim());
        prev = Some(cur);
        bits *= 2;
    }
}

pub fn capacity_su_with(spec: &CovarianceSpec, p: usize, opts: &CapacityOptions) -> Result<CapacityResult> {
    let n = spec.dim();
    if p == 0 {
        return domain("p must be at least 1");
    }
    if n == 0 {
        return Ok(CapacityResult::zero());
    }
    if opts.max_precision_bits > highprec::MAX_PRECISION_BITS {
        return domain(format!("precision is capped at {} bits", highprec::MAX_PRECISION_BITS));
    }
    let (cf, stable) = stable_closed_form(spec, p, opts)?;
    let (lo, hi) = cf.terms.iter().filter(|t| !t.is_zero()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        (lo.min(t.logmag()), hi.max(t.logmag()))
    });
    let det_spread = if hi >= lo { (hi - lo).exp() } else { 1.0 };
    let cancellation = if cf.total.is_zero() {
        f64::INFINITY
    } else {
        (cf.abs_sum.logmag() - cf.total.logmag()).exp()
    };

    let mut warnings = Vec::new();
    if !stable {
        warnings.push(format!(
            "closed form did not stabilize within {} bits (sum cancels by {cancellation:.2e})",
            cf.precision_bits
        ));
    }
    if det_spread > opts.spread_limit {
        warnings.push(format!("per-k determinant magnitudes span a factor {det_spread:.2e}"));
    }
    if let Some(gap) = spec.min_relative_gap() {
        if gap < 1e-6 {
            warnings.push(format!("eigenvalue groups closer than {gap:.2e} relative"));
        }
    }
    let monte_carlo = (!warnings.is_empty() && opts.fallback_samples >= 2).then(|| {
        warnings.iter().for_each(|w| log::warn!("{w}; attaching a Monte Carlo estimate"));
        capacity_mc(spec, p, opts.fallback_samples, opts.seed)
    });

    let mut value = cf.total.to_f64();
    if value < 0.0 {
        if -value <= 1e-10 * cf.abs_sum.to_f64() {
            warnings.push(format!("tiny negative closed-form value {value:e} set to zero"));
            value = 0.0;
        } else {
            return Err(Error::Internal(format!(
                "closed form returned negative mutual information {value:e} nats (n={n}, p={p}, {} bits)",
                cf.precision_bits
            )));
        }
    }
    Ok(CapacityResult::from_nats(
        value,
        CapacityDiagnostics {
            n_min: n.min(p),
            terms: cf.terms,
            det_spread,
            cancellation,
            precision_bits: cf.precision_bits,
            warnings,
            monte_carlo,
        },
    ))
}

/// Tolerance-free reference by one-dimensional quadrature, used to
/// cross-check the closed form for `n_min = 1`.
pub fn capacity_su_rank_one_quadrature(spec: &CovarianceSpec, p: usize) -> Result<f64> {
    if spec.dim().min(p) != 1 {
        return domain("rank-one quadrature needs min(n, p) = 1");
    }
    let pdf = crate::eigpdf::EigenPdf::new(spec, p)?;
    let r = integrate(
        |x| if x > 0.0 { pdf.joint_pdf(&[x]).unwrap_or(f64::NAN) * x.ln_1p() } else { 0.0 },
        0.0,
        f64::INFINITY,
        &QuadConfig::rel(1e-11),
    );
    Ok(r.value)
}

fn merge_diagnostics(a: &CapacityResult, b: &CapacityResult) -> CapacityDiagnostics {
    let mut d = a.diagnostics.clone();
    d.warnings.extend(b.diagnostics.warnings.iter().cloned());
    d
}

/// Multiuser mutual information `C_SU(Ψ̃) − C_SU(Ψ)` at `NR` receive
/// antennas.
pub fn capacity_mu(scenario: &NetworkScenario) -> Result<CapacityResult> {
    capacity_mu_with(scenario, &CapacityOptions::default())
}

pub fn capacity_mu_with(scenario: &NetworkScenario, opts: &CapacityOptions) -> Result<CapacityResult> {
    let (psi, psi_tilde) = build_interference_matrices(scenario)?;
    let with_desired = capacity_su_with(&psi_tilde, scenario.nr, opts)?;
    if psi.dim() == 0 {
        return Ok(with_desired);
    }
    let interference = capacity_su_with(&psi, scenario.nr, opts)?;
    let mut value = with_desired.value_nats - interference.value_nats;
    let mut diagnostics = merge_diagnostics(&with_desired, &interference);
    let scale = with_desired.value_nats.abs().max(1e-300);
    if value < 0.0 {
        if -value <= 1e-9 * scale {
            diagnostics
                .warnings
                .push(format!("tiny negative multiuser difference {value:e} set to zero"));
            value = 0.0;
        } else {
            return Err(Error::Internal(format!(
                "multiuser difference is negative: {value:e} nats"
            )));
        }
    }
    if let (Some(a), Some(b)) = (with_desired.diagnostics.monte_carlo, interference.diagnostics.monte_carlo) {
        diagnostics.monte_carlo = Some(MonteCarloEstimate {
            mean: a.mean - b.mean,
            stderr: a.stderr.hypot(b.stderr),
            count: a.count,
            seed: a.seed,
        });
    }
    Ok(CapacityResult::from_nats(value, diagnostics))
}

/// The desired link alone, with the interference folded into white noise of
/// power `σ² + Σ_{i≥1} P_i`.
pub fn capacity_gaussian_approx(scenario: &NetworkScenario) -> Result<CapacityResult> {
    capacity_gaussian_approx_with(scenario, &CapacityOptions::default())
}

pub fn capacity_gaussian_approx_with(scenario: &NetworkScenario, opts: &CapacityOptions) -> Result<CapacityResult> {
    scenario.validate()?;
    let u = scenario.desired();
    let noise = scenario.sigma2 + scenario.total_interference_power();
    let spec = CovarianceSpec::scalar(u.power / (u.nt as f64 * noise), u.nt)?;
    capacity_su_with(&spec, scenario.nr, opts)
}

/// Relay-network bound `½ E ln det(I + H Φ H†)`.
pub fn relay_upper_bound(spec: &CovarianceSpec, p: usize) -> Result<CapacityResult> {
    relay_upper_bound_with(spec, p, &CapacityOptions::default())
}

pub fn relay_upper_bound_with(spec: &CovarianceSpec, p: usize, opts: &CapacityOptions) -> Result<CapacityResult> {
    Ok(capacity_su_with(spec, p, opts)?.scaled(0.5))
}

/// Jensen bound on [`relay_upper_bound`]: `½ p ln(1 + tr Φ)`, from
/// `E[H Φ H†] = tr Φ · I_p`.
pub fn relay_jensen_bound(spec: &CovarianceSpec, p: usize) -> CapacityResult {
    CapacityResult::from_nats(0.5 * p as f64 * spec.trace().ln_1p(), CapacityDiagnostics::default())
}

/// One-dimensional function handed to [`det_integral_identity`].
pub type ScalarFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Ingredients of the ordered-domain integral
/// `∫_{b ≥ x_1 ≥ … ≥ x_p ≥ a} |Φ(x)| |Ψ(x)| Π ξ(x_m) Σ_i ξ̃(x_i) dx`.
pub struct DetIntegral<'a> {
    /// `Φ_i`, `i < p`: row `i` of the `p × p` matrix `Φ_i(x_j)`.
    pub phi: Vec<ScalarFn<'a>>,
    /// `Ψ_i`, `i < n`: row `i` of the first `p` columns of the `n × n` matrix.
    pub psi: Vec<ScalarFn<'a>>,
    /// `n × (n − p)` constant block of `Ψ`, row-major by `i`.
    pub psi_const: Vec<Vec<f64>>,
    pub xi: ScalarFn<'a>,
    pub xi_tilde: ScalarFn<'a>,
    pub a: f64,
    pub b: f64,
}

/// Evaluates the ordered integral of [`DetIntegral`] as `Σ_k det C^(k)`, where
/// `c^(k)_{ij} = ∫ Φ_j Ψ_i ξ · (ξ̃ if j = k else 1)` for `j < p` and the
/// constant block elsewhere. Each one-dimensional integral uses `cfg`.
pub fn det_integral_identity(problem: &DetIntegral<'_>, cfg: &QuadConfig) -> Result<f64> {
    let p = problem.phi.len();
    let n = problem.psi.len();
    if p == 0 || n < p {
        return domain(format!("need 1 ≤ p ≤ n, got p={p}, n={n}"));
    }
    if problem.psi_const.len() != n || problem.psi_const.iter().any(|r| r.len() != n - p) {
        return domain("constant block must be n × (n − p)");
    }
    let element = |i: usize, j: usize, weighted: bool, k: usize| -> Result<f64> {
        let f = |x: f64| {
            let base = (problem.phi[j])(x) * (problem.psi[i])(x) * (problem.xi)(x);
            if weighted {
                base * (problem.xi_tilde)(x)
            } else {
                base
            }
        };
        let r = integrate(f, problem.a, problem.b, cfg);
        if !r.value.is_finite() {
            return domain(format!("element integral (i={i}, j={j}, k={k}) is not finite"));
        }
        if !r.converged {
            log::warn!("element integral (i={i}, j={j}, k={k}) did not reach tolerance");
        }
        Ok(r.value)
    };
    let plain: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..p).map(|j| element(i, j, false, usize::MAX)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut total = SignedLogValue::ZERO;
    for k in 0..p {
        let mut c = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = if j == k {
                    element(i, j, true, k)?
                } else if j < p {
                    plain[i][j]
                } else {
                    problem.psi_const[i][j - p]
                };
                c.set(i, j, v);
            }
        }
        total = total + c.log_det();
    }
    Ok(total.to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    Sir,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_db: f64,
    /// `NaN` when the point failed; see `error`.
    pub c_mu_bits: f64,
    pub c_gauss_bits: f64,
    /// Interference-free single-user value at the same SNR.
    pub c_su_ref_bits: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSweep {
    pub scenario: NetworkScenario,
    pub axis: SweepAxis,
    pub grid_db: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn sweep_point(scenario: &NetworkScenario, axis: SweepAxis, db: f64, opts: &CapacityOptions) -> SweepPoint {
    let eval = || -> Result<(CapacityResult, CapacityResult, CapacityResult)> {
        let s = match axis {
            SweepAxis::Snr => scenario.with_snr(db_to_linear(db))?,
            SweepAxis::Sir => scenario.with_sir(db_to_linear(db))?,
        };
        let mu = capacity_mu_with(&s, opts)?;
        let gauss = capacity_gaussian_approx_with(&s, opts)?;
        let su = capacity_mu_with(&s.without_interference(), opts)?;
        Ok((mu, gauss, su))
    };
    match eval() {
        Ok((mu, gauss, su)) => {
            let mut warnings = mu.diagnostics.warnings.clone();
            warnings.extend(gauss.diagnostics.warnings.iter().cloned());
            SweepPoint {
                axis_db: db,
                c_mu_bits: mu.value_bits,
                c_gauss_bits: gauss.value_bits,
                c_su_ref_bits: su.value_bits,
                warnings,
                error: None,
            }
        }
        Err(e) => SweepPoint {
            axis_db: db,
            c_mu_bits: f64::NAN,
            c_gauss_bits: f64::NAN,
            c_su_ref_bits: f64::NAN,
            warnings: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates the scenario along an SNR or SIR grid (dB). Points are computed
/// concurrently and returned in grid order; failures are kept as points with
/// an error message.
pub fn sweep(scenario: &NetworkScenario, axis: SweepAxis, grid_db: &[f64]) -> Result<ScenarioSweep> {
    sweep_with(scenario, axis, grid_db, &CapacityOptions::default())
}

pub fn sweep_with(
    scenario: &NetworkScenario,
    axis: SweepAxis,
    grid_db: &[f64],
    opts: &CapacityOptions,
) -> Result<ScenarioSweep> {
    scenario.validate()?;
    if grid_db.is_empty() {
        return domain("sweep grid is empty");
    }
    if grid_db.windows(2).any(|w| !(w[1] > w[0])) || grid_db.iter().any(|v| !v.is_finite()) {
        return domain("sweep grid must be finite and strictly increasing");
    }
    if axis == SweepAxis::Sir && scenario.interferers().is_empty() {
        return domain("an SIR sweep needs at least one interferer");
    }
    let points = grid_db.par_iter().map(|&db| sweep_point(scenario, axis, db, opts)).collect();
    Ok(ScenarioSweep {
        scenario: scenario.clone(),
        axis,
        grid_db: grid_db.to_vec(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::User;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn scalar_channel() {
        let c = capacity_su(&CovarianceSpec::scalar(1.0, 1).unwrap(), 1).unwrap();
        assert!((c.value_nats - 0.596_347_362_323_194).abs() < 1e-12);
        assert!((c.value_bits - 0.86036).abs() < 1e-4);
        assert!(rel(c.value_bits * LN_2, c.value_nats) < 1e-15);
    }

    #[test]
    fn rank_one_cases_match_quadrature() {
        for (groups, p) in [(vec![(1.0, 2)], 1), (vec![(2.0, 1), (0.5, 2)], 1), (vec![(0.7, 1)], 4)] {
            let spec = CovarianceSpec::from_groups(&groups).unwrap();
            let c = capacity_su(&spec, p).unwrap().value_nats;
            let q = capacity_su_rank_one_quadrature(&spec, p).unwrap();
            assert!(rel(c, q) < 1e-9, "{groups:?} p={p}: {c} vs {q}");
        }
    }

    #[test]
    fn empty_covariance_has_zero_capacity() {
        assert_eq!(capacity_su(&CovarianceSpec::empty(), 3).unwrap().value_nats, 0.0);
    }

    #[test]
    fn multiuser_without_interferers_is_single_user() {
        let s = NetworkScenario::new(3, vec![User { nt: 2, power: 4.0 }], 1.0).unwrap();
        let mu = capacity_mu(&s).unwrap();
        let su = capacity_su(&CovarianceSpec::scalar(2.0, 2).unwrap(), 3).unwrap();
        assert_eq!(mu.value_nats, su.value_nats);
        let g = capacity_gaussian_approx(&s).unwrap();
        assert_eq!(g.value_nats, su.value_nats);
    }

    #[test]
    fn relay_bound_is_half() {
        let spec = CovarianceSpec::from_groups(&[(1.0, 2), (0.3, 1)]).unwrap();
        let c = capacity_su(&spec, 2).unwrap();
        let r = relay_upper_bound(&spec, 2).unwrap();
        assert_eq!(r.value_nats, c.value_nats / 2.0);
        assert!(r.value_nats < relay_jensen_bound(&spec, 2).value_nats);
    }

    #[test]
    fn identity_single_term() {
        let one = |_: f64| 1.0;
        let ex = |x: f64| (-x).exp();
        let problem = DetIntegral {
            phi: vec![&one],
            psi: vec![&one],
            psi_const: vec![vec![]],
            xi: &ex,
            xi_tilde: &one,
            a: 0.0,
            b: f64::INFINITY,
        };
        let v = det_integral_identity(&problem, &QuadConfig::rel(1e-12)).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let s = NetworkScenario::new(2, vec![User { nt: 1, power: 1.0 }, User { nt: 1, power: 1.0 }], 1.0).unwrap();
        assert!(sweep(&s, SweepAxis::Sir, &[]).is_err());
        assert!(sweep(&s, SweepAxis::Sir, &[1.0, 1.0]).is_err());
        let single = s.without_interference();
        assert!(sweep(&single, SweepAxis::Sir, &[0.0]).is_err());
        let sw = sweep(&s, SweepAxis::Sir, &[-10.0, 0.0, 10.0]).unwrap();
        assert_eq!(sw.points.len(), 3);
        assert!(sw.points.windows(2).all(|w| w[0].c_mu_bits <= w[1].c_mu_bits));
    }
}
