//! Hypergeometric functions of two matrix arguments in determinant form,
//! extended to coincident eigenvalues of the second argument by confluence.
//!
//! With distinct eigenvalues the functions reduce to a ratio of a determinant
//! of scalar functions `f(λ_i w_j)` over the two Vandermonde products. When `L`
//! of the `w` coincide the ratio is 0/0; its continuous extension replaces the
//! `L` columns by the derivatives `f^{(L−1)}(w), …, f(w)`, keeps only the
//! nonzero Vandermonde factors and divides by `Π_{i<L} i!`.

use crate::error::{domain, Error, Result};
use crate::linalg::SquareMatrix;
use crate::signed_log::SignedLogValue;
use crate::specfun::{ln_multi_factorial, pochhammer, scalar_pfq};

/// Relative gap between distinct `w` groups below which a warning is logged.
pub const CONDITIONING_GAP: f64 = 1e-6;

const SERIES_TERMS: usize = 20_000;
const SERIES_TOL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgGroup {
    pub value: f64,
    pub multiplicity: usize,
}

/// Eigenvalues of a diagonal matrix argument, grouped by exact equality.
///
/// Zero and negative values are allowed; groups keep the order given.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenArgument {
    groups: Vec<ArgGroup>,
    m: usize,
}

impl EigenArgument {
    pub fn from_groups(groups: Vec<(f64, usize)>) -> Result<Self> {
        if groups.is_empty() {
            return domain("matrix argument needs at least one eigenvalue");
        }
        let mut out: Vec<ArgGroup> = Vec::with_capacity(groups.len());
        for (value, multiplicity) in groups {
            if !value.is_finite() {
                return domain(format!("eigenvalue {value} is not finite"));
            }
            if multiplicity == 0 {
                return domain("multiplicity must be positive");
            }
            if out.iter().any(|g| g.value == value) {
                return domain(format!("eigenvalue {value} appears in two groups"));
            }
            out.push(ArgGroup { value, multiplicity });
        }
        let m = out.iter().map(|g| g.multiplicity).sum();
        Ok(Self { groups: out, m })
    }

    /// Groups exactly equal entries, keeping first-occurrence order.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &v in values {
            match groups.iter_mut().find(|g| g.0 == v) {
                Some(g) => g.1 += 1,
                None => groups.push((v, 1)),
            }
        }
        Self::from_groups(groups)
    }

    pub fn groups(&self) -> &[ArgGroup] {
        &self.groups
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn is_distinct(&self) -> bool {
        self.groups.iter().all(|g| g.multiplicity == 1)
    }

    pub fn values(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.value, g.multiplicity))
            .collect()
    }

    /// Smallest `|w_g − w_h| / max(|w_g|, |w_h|)` over distinct groups.
    pub fn min_relative_gap(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, ga) in self.groups.iter().enumerate() {
            for gb in &self.groups[a + 1..] {
                let scale = ga.value.abs().max(gb.value.abs());
                let gap = (ga.value - gb.value).abs() / scale;
                best = Some(best.map_or(gap, |b: f64| b.min(gap)));
            }
        }
        best
    }
}

/// A family `f_i(w) = f(λ_i, w)` whose `w`-derivatives are available in
/// closed form.
pub trait DerivativeFamily {
    /// `∂ⁿ/∂wⁿ f(λ, w)`.
    fn derivative(&self, lambda: f64, order: usize, w: f64) -> Result<f64>;
}

impl<F: Fn(f64, usize, f64) -> Result<f64>> DerivativeFamily for F {
    fn derivative(&self, lambda: f64, order: usize, w: f64) -> Result<f64> {
        self(lambda, order, w)
    }
}

fn check_lambdas(lambdas: &[f64], m: usize) -> Result<()> {
    if lambdas.len() != m {
        return domain(format!(
            "{} lambda values for a {m}-dimensional second argument",
            lambdas.len()
        ));
    }
    for (i, a) in lambdas.iter().enumerate() {
        if !a.is_finite() {
            return domain(format!("lambda {a} is not finite"));
        }
        if lambdas[i + 1..].contains(a) {
            return domain(format!("lambda values must be distinct; {a} repeats"));
        }
    }
    Ok(())
}

fn warn_if_ill_conditioned(w: &EigenArgument) {
    if let Some(gap) = w.min_relative_gap() {
        if gap < CONDITIONING_GAP {
            log::warn!(
                "w groups are separated by a relative gap of {gap:.3e}; \
                 expect about {:.0} lost digits, consider merging them",
                (1.0 / gap).log10()
            );
        }
    }
}

/// `Π_{i<j} (λ_i − λ_j)`.
fn lambda_vandermonde(lambdas: &[f64]) -> SignedLogValue {
    let mut acc = SignedLogValue::ONE;
    for (i, a) in lambdas.iter().enumerate() {
        for b in &lambdas[i + 1..] {
            acc = acc * SignedLogValue::from_f64(a - b);
        }
    }
    acc
}

/// Product of the nonvanishing `w` Vandermonde factors and of the
/// `Π_{i<L} i!` scalings: `Π_{g<h} (w_g − w_h)^{L_g L_h} · Π_g Γ_(L_g)(L_g)`.
fn w_denominator(w: &EigenArgument) -> SignedLogValue {
    let g = w.groups();
    let mut acc = SignedLogValue::ONE;
    for (a, ga) in g.iter().enumerate() {
        acc = acc * SignedLogValue::exp(ln_multi_factorial(ga.multiplicity, ga.multiplicity));
        for gb in &g[a + 1..] {
            let e = (ga.multiplicity * gb.multiplicity) as i32;
            acc = acc * SignedLogValue::from_f64(ga.value - gb.value).powi(e);
        }
    }
    acc
}

/// Determinant whose column block for a group of multiplicity `L` holds
/// `column(λ_i, n, w)` for `n = L−1, …, 0`.
fn confluent_det(
    lambdas: &[f64],
    w: &EigenArgument,
    mut column: impl FnMut(f64, usize, f64) -> Result<f64>,
) -> Result<SignedLogValue> {
    let m = w.dim();
    let mut mat = SquareMatrix::zeros(m);
    let mut col = 0;
    for g in w.groups() {
        for l in 0..g.multiplicity {
            let order = g.multiplicity - 1 - l;
            for (i, &lam) in lambdas.iter().enumerate() {
                let v = column(lam, order, g.value)?;
                if !v.is_finite() {
                    return domain(format!(
                        "non-finite matrix entry at lambda={lam}, w={}, derivative order {order}",
                        g.value
                    ));
                }
                mat.set(i, col, v);
            }
            col += 1;
        }
    }
    Ok(mat.log_det())
}

/// Continuous extension of
/// `|f_i(w_j)| / (Π_{i<j}(λ_i − λ_j) Π_{i<j}(w_i − w_j))`
/// to coincident `w`: coincident columns become the successive derivatives,
/// vanishing factors are dropped and each group of size `L` contributes a
/// further `1 / Π_{i<L} i!`.
pub fn confluent_det_ratio<F: DerivativeFamily + ?Sized>(
    family: &F,
    lambdas: &[f64],
    w: &EigenArgument,
) -> Result<SignedLogValue> {
    check_lambdas(lambdas, w.dim())?;
    warn_if_ill_conditioned(w);
    let det = confluent_det(lambdas, w, |lam, n, wv| family.derivative(lam, n, wv))?;
    Ok(det / (lambda_vandermonde(lambdas) * w_denominator(w)))
}

/// `ψ^{(m)}(a) = Π_{i=1}^{m} Π_j (a_j − i + 1)^{i−1}`.
pub fn psi_constant(params: &[f64], m: usize) -> SignedLogValue {
    let mut acc = SignedLogValue::ONE;
    for i in 1..=m {
        for &a in params {
            acc = acc * SignedLogValue::from_f64(a - i as f64 + 1.0).powi(i as i32 - 1);
        }
    }
    acc
}

/// `₀F̃₀(Λ, W)`.
pub fn hyp0f0(lambdas: &[f64], w: &EigenArgument) -> Result<SignedLogValue> {
    check_lambdas(lambdas, w.dim())?;
    warn_if_ill_conditioned(w);
    let m = w.dim();
    let det = confluent_det(lambdas, w, |lam, n, wv| Ok(lam.powi(n as i32) * (lam * wv).exp()))?;
    let num = SignedLogValue::exp(ln_multi_factorial(m, m));
    Ok(num * det / (lambda_vandermonde(lambdas) * w_denominator(w)))
}

fn real_power(base: f64, exponent: f64) -> Result<f64> {
    if base == 0.0 {
        return domain("singular factor 1 − λw = 0");
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return domain(format!("1 − λw = {base} < 0 raised to non-integer power {exponent}"));
    }
    Ok(base.powf(exponent))
}

/// `₁F̃₀(r; Λ, W)`.
pub fn hyp1f0(r: f64, lambdas: &[f64], w: &EigenArgument) -> Result<SignedLogValue> {
    check_lambdas(lambdas, w.dim())?;
    warn_if_ill_conditioned(w);
    let m = w.dim();
    let gamma = m as f64 - r - 1.0;
    let det = confluent_det(lambdas, w, |lam, n, wv| {
        Ok(lam.powi(n as i32) * real_power(1.0 - lam * wv, gamma - n as f64)?)
    })?;
    // each group of size L contributes (−1)^{L(L−1)/2} Π_{n<L} [γ]_n
    let mut constant = SignedLogValue::exp(ln_multi_factorial(m, m));
    for g in w.groups() {
        let l = g.multiplicity;
        if (l * (l - 1) / 2) % 2 == 1 {
            constant = -constant;
        }
        for n in 1..l {
            for k in 0..n {
                constant = constant * SignedLogValue::from_f64(gamma - k as f64);
            }
        }
    }
    let psi = psi_constant(&[r], m);
    if psi.is_zero() {
        return domain(format!("normalization ψ(r) vanishes at r={r}"));
    }
    Ok(constant * det / (psi * lambda_vandermonde(lambdas) * w_denominator(w)))
}

fn pfq_entry(a: &[f64], b: &[f64], z: f64) -> Result<f64> {
    let s = scalar_pfq(a, b, z, SERIES_TERMS, SERIES_TOL)?;
    if !s.converged {
        return Err(Error::NoConvergence {
            msg: format!("scalar series at z={z} did not settle within {SERIES_TERMS} terms"),
            estimate: s.value,
        });
    }
    Ok(s.value)
}

/// `ₚF̃_q(a; b; Λ, W)`.
pub fn hyp_pfq(a: &[f64], b: &[f64], lambdas: &[f64], w: &EigenArgument) -> Result<SignedLogValue> {
    check_lambdas(lambdas, w.dim())?;
    warn_if_ill_conditioned(w);
    let m = w.dim();
    let shift = 1.0 - m as f64;
    let at: Vec<f64> = a.iter().map(|v| v + shift).collect();
    let bt: Vec<f64> = b.iter().map(|v| v + shift).collect();
    let det = confluent_det(lambdas, w, |lam, n, wv| {
        let an: Vec<f64> = at.iter().map(|v| v + n as f64).collect();
        let bn: Vec<f64> = bt.iter().map(|v| v + n as f64).collect();
        Ok(lam.powi(n as i32) * pfq_entry(&an, &bn, lam * wv)?)
    })?;
    let mut constant = SignedLogValue::exp(ln_multi_factorial(m, m));
    for g in w.groups() {
        for i in 1..g.multiplicity {
            for &v in &at {
                constant = constant * SignedLogValue::from_f64(pochhammer(v, i));
            }
            for &v in &bt {
                let den = SignedLogValue::from_f64(pochhammer(v, i));
                if den.is_zero() {
                    return domain(format!("shifted lower parameter {v} reaches zero"));
                }
                constant = constant / den;
            }
        }
    }
    let psi_a = psi_constant(a, m);
    if psi_a.is_zero() {
        return domain("normalization ψ(a) vanishes");
    }
    let psi_b = psi_constant(b, m);
    Ok(constant * psi_b * det / (psi_a * lambda_vandermonde(lambdas) * w_denominator(w)))
}
