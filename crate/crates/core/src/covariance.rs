//! Eigenvalue/multiplicity representations of one-sided correlation matrices
//! and the interference covariances of the multiuser link.

use crate::error::{domain, Result};

/// Relative gap below which two eigenvalues are treated as one group.
pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-9;

/// One distinct eigenvalue of `Φ` together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenGroup {
    pub value: f64,
    pub multiplicity: usize,
}

/// One distinct eigenvalue of `Φ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuGroup {
    pub mu: f64,
    pub multiplicity: usize,
}

/// Positive-definite correlation matrix given by its distinct eigenvalues.
///
/// Groups are kept in decreasing eigenvalue order, so the inverse
/// eigenvalues returned by [`CovarianceSpec::mu_groups`] come out strictly
/// decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    groups: Vec<EigenGroup>,
    n: usize,
}

impl CovarianceSpec {
    /// The zero-dimensional covariance (no antennas).
    pub fn empty() -> Self {
        Self {
            groups: Vec::new(),
            n: 0,
        }
    }

    /// `value · I_multiplicity`.
    pub fn scalar(value: f64, multiplicity: usize) -> Result<Self> {
        if multiplicity == 0 {
            return domain("multiplicity must be positive");
        }
        canonicalize(&vec![value; multiplicity], 0.0)
    }

    /// Builds a spec from (eigenvalue, multiplicity) pairs, merging groups
    /// closer than [`DEFAULT_MERGE_TOLERANCE`].
    pub fn from_groups(groups: &[(f64, usize)]) -> Result<Self> {
        Self::from_groups_with_tolerance(groups, DEFAULT_MERGE_TOLERANCE)
    }

    pub fn from_groups_with_tolerance(groups: &[(f64, usize)], merge_tolerance: f64) -> Result<Self> {
        if groups.iter().any(|&(_, m)| m == 0) {
            return domain("multiplicity must be positive");
        }
        let raw: Vec<f64> = groups
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect();
        canonicalize(&raw, merge_tolerance)
    }

    /// Total dimension (sum of multiplicities).
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Distinct eigenvalues of `Φ⁻¹`, strictly decreasing.
    pub fn mu_groups(&self) -> Vec<MuGroup> {
        self.groups
            .iter()
            .rev()
            .map(|g| MuGroup {
                mu: 1.0 / g.value,
                multiplicity: g.multiplicity,
            })
            .collect()
    }

    /// All `n` eigenvalues, each repeated by its multiplicity, decreasing.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.value, g.multiplicity))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.groups.iter().map(|g| g.value * g.multiplicity as f64).sum()
    }

    /// `c · Φ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("scale factor must be positive, got {c}"));
        }
        Ok(Self {
            groups: self
                .groups
                .iter()
                .map(|g| EigenGroup {
                    value: g.value * c,
                    multiplicity: g.multiplicity,
                })
                .collect(),
            n: self.n,
        })
    }

    /// Smallest relative gap between adjacent distinct eigenvalues, or
    /// `None` with fewer than two groups.
    pub fn min_relative_gap(&self) -> Option<f64> {
        self.groups
            .windows(2)
            .map(|w| (w[0].value - w[1].value) / w[0].value)
            .min_by(f64::total_cmp)
    }
}

/// Groups raw eigenvalues into a canonical [`CovarianceSpec`].
///
/// Sorted neighbours whose relative gap is at most `merge_tolerance` fall in
/// one group whose eigenvalue is the arithmetic mean of its members.
pub fn canonicalize(raw_eigenvalues: &[f64], merge_tolerance: f64) -> Result<CovarianceSpec> {
    if raw_eigenvalues.is_empty() {
        return domain("eigenvalue list is empty");
    }
    if !(merge_tolerance >= 0.0) {
        return domain("merge tolerance must be nonnegative");
    }
    if let Some(bad) = raw_eigenvalues.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return domain(format!("eigenvalues must be positive and finite, got {bad}"));
    }
    let mut sorted = raw_eigenvalues.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut clusters: Vec<Vec<f64>> = vec![vec![sorted[0]]];
    for w in sorted.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        if (prev - cur) / prev <= merge_tolerance {
            clusters.last_mut().expect("nonempty").push(cur);
        } else {
            clusters.push(vec![cur]);
        }
    }
    let groups = clusters
        .into_iter()
        .map(|c| EigenGroup {
            // exact duplicates keep their value bit-for-bit
            value: if c.iter().all(|&v| v == c[0]) {
                c[0]
            } else {
                c.iter().sum::<f64>() / c.len() as f64
            },
            multiplicity: c.len(),
        })
        .collect();
    Ok(CovarianceSpec {
        groups,
        n: raw_eigenvalues.len(),
    })
}

/// Row bookkeeping for the confluent determinants: row `i` uses inverse
/// eigenvalue group `e[i]` (0-based index into [`CovarianceSpec::mu_groups`])
/// differentiated `d[i]` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityIndex {
    pub e: Vec<usize>,
    pub d: Vec<usize>,
}

pub fn index_maps(spec: &CovarianceSpec) -> MultiplicityIndex {
    multiplicity_index(spec.mu_groups().iter().map(|g| g.multiplicity))
}

pub(crate) fn multiplicity_index(multiplicities: impl IntoIterator<Item = usize>) -> MultiplicityIndex {
    let mut e = Vec::new();
    let mut d = Vec::new();
    for (g, m) in multiplicities.into_iter().enumerate() {
        for k in 0..m {
            e.push(g);
            d.push(m - 1 - k);
        }
    }
    MultiplicityIndex { e, d }
}

/// One transmitter: antenna count and mean received power per receive
/// antenna (linear scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    pub nt: usize,
    pub power: f64,
}

/// Desired link (user 0) plus co-channel interferers at a common receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    pub nr: usize,
    pub users: Vec<User>,
    pub sigma2: f64,
}

impl NetworkScenario {
    pub fn new(nr: usize, users: Vec<User>, sigma2: f64) -> Result<Self> {
        let s = Self { nr, users, sigma2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr == 0 {
            return domain("NR must be at least 1");
        }
        if self.users.is_empty() {
            return domain("scenario needs the desired user");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return domain(format!("noise variance must be positive, got {}", self.sigma2));
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.nt == 0 {
                return domain(format!("user {k} has no antennas"));
            }
            if !(u.power > 0.0 && u.power.is_finite()) {
                return domain(format!("user {k} power must be positive, got {}", u.power));
            }
        }
        Ok(())
    }

    pub fn desired(&self) -> &User {
        &self.users[0]
    }

    pub fn interferers(&self) -> &[User] {
        &self.users[1..]
    }

    /// Per-antenna normalized power `P_i / (NT_i σ²)` of user `i`.
    pub fn rho(&self, i: usize) -> f64 {
        let u = &self.users[i];
        u.power / (u.nt as f64 * self.sigma2)
    }

    pub fn snr(&self) -> f64 {
        self.users[0].power / self.sigma2
    }

    /// `P_0 / Σ_{i≥1} P_i`, infinite without interferers.
    pub fn sir(&self) -> f64 {
        let total: f64 = self.interferers().iter().map(|u| u.power).sum();
        if total == 0.0 {
            f64::INFINITY
        } else {
            self.users[0].power / total
        }
    }

    pub fn total_interference_power(&self) -> f64 {
        self.interferers().iter().map(|u| u.power).sum()
    }

    /// Copy with every interferer power scaled so that the SIR equals `sir`
    /// while the interferers keep their mutual power ratios.
    pub fn with_sir(&self, sir: f64) -> Result<Self> {
        if !(sir > 0.0) {
            return domain("SIR must be positive");
        }
        let total = self.total_interference_power();
        if total == 0.0 {
            return Ok(self.clone());
        }
        let factor = self.users[0].power / (sir * total);
        let mut out = self.clone();
        out.users[1..].iter_mut().for_each(|u| u.power *= factor);
        out.validate()?;
        Ok(out)
    }

    /// Copy with all powers scaled so that `P_0/σ² = snr`, keeping the SIR.
    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        if !(snr > 0.0) {
            return domain("SNR must be positive");
        }
        let factor = snr * self.sigma2 / self.users[0].power;
        let mut out = self.clone();
        out.users.iter_mut().for_each(|u| u.power *= factor);
        out.validate()?;
        Ok(out)
    }

    /// The same receiver with only the desired user.
    pub fn without_interference(&self) -> Self {
        Self {
            nr: self.nr,
            users: vec![self.users[0]],
            sigma2: self.sigma2,
        }
    }
}

/// Interference-only covariance `Ψ` and interference-plus-signal covariance
/// `Ψ̃ = ϱ₀ I ⊕ Ψ`, as (Ψ, Ψ̃).
pub fn build_interference_matrices(scenario: &NetworkScenario) -> Result<(CovarianceSpec, CovarianceSpec)> {
    scenario.validate()?;
    let expand = |range: std::ops::Range<usize>| -> Vec<f64> {
        range
            .flat_map(|i| std::iter::repeat_n(scenario.rho(i), scenario.users[i].nt))
            .collect()
    };
    let k = scenario.users.len();
    let psi = if k > 1 {
        canonicalize(&expand(1..k), DEFAULT_MERGE_TOLERANCE)?
    } else {
        CovarianceSpec::empty()
    };
    let psi_tilde = canonicalize(&expand(0..k), DEFAULT_MERGE_TOLERANCE)?;
    Ok((psi, psi_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn mu_pairs(spec: &CovarianceSpec) -> Vec<(f64, usize)> {
        spec.mu_groups().iter().map(|g| (g.mu, g.multiplicity)).collect()
    }

    #[test]
    fn exact_duplicates_merge() {
        let s = canonicalize(&[2.0, 2.0, 0.5], DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(
            s.groups(),
            &[
                EigenGroup { value: 2.0, multiplicity: 2 },
                EigenGroup { value: 0.5, multiplicity: 1 }
            ]
        );
        assert_eq!(mu_pairs(&s), vec![(2.0, 1), (0.5, 2)]);
        assert_eq!(s.dim(), 3);
    }

    #[test]
    fn single_value() {
        let s = canonicalize(&[1.0], 0.0).unwrap();
        assert_eq!(s.groups(), &[EigenGroup { value: 1.0, multiplicity: 1 }]);
    }

    #[test]
    fn near_duplicates_merge_to_mean() {
        let s = canonicalize(&[1.0, 1.0 + 1e-9, 3.0], 1e-6).unwrap();
        assert_eq!(s.num_groups(), 2);
        assert_eq!(s.groups()[0], EigenGroup { value: 3.0, multiplicity: 1 });
        assert_eq!(s.groups()[1].multiplicity, 2);
        assert!((s.groups()[1].value - (1.0 + 0.5e-9)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(canonicalize(&[], 0.0), Err(Error::Domain(_))));
        assert!(matches!(canonicalize(&[1.0, 0.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(canonicalize(&[1.0, -2.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(canonicalize(&[1.0], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn index_map_examples() {
        let two_one = CovarianceSpec::from_groups(&[(1.0, 2), (0.5, 1)]).unwrap();
        // mu view: (2.0, 1), (1.0, 2)
        let idx = index_maps(&two_one);
        assert_eq!(idx.e, vec![0, 1, 1]);
        assert_eq!(idx.d, vec![0, 1, 0]);

        let idx = multiplicity_index([2, 1]);
        assert_eq!(idx.e, vec![0, 0, 1]);
        assert_eq!(idx.d, vec![1, 0, 0]);

        let idx = multiplicity_index([1, 1, 1]);
        assert_eq!(idx.d, vec![0, 0, 0]);

        let idx = index_maps(&CovarianceSpec::scalar(0.3, 3).unwrap());
        assert_eq!(idx.e, vec![0, 0, 0]);
        assert_eq!(idx.d, vec![2, 1, 0]);
    }

    #[test]
    fn equal_powers_merge_into_one_group() {
        let p = 3.5;
        let sc = NetworkScenario::new(
            6,
            vec![User { nt: 6, power: p }, User { nt: 6, power: p }],
            1.0,
        )
        .unwrap();
        let (psi, psi_t) = build_interference_matrices(&sc).unwrap();
        assert_eq!(psi.groups(), &[EigenGroup { value: p / 6.0, multiplicity: 6 }]);
        assert_eq!(psi_t.groups(), &[EigenGroup { value: p / 6.0, multiplicity: 12 }]);
    }

    #[test]
    fn coinciding_interferer_powers() {
        let sc = NetworkScenario::new(
            6,
            vec![
                User { nt: 3, power: 1.0 },
                User { nt: 2, power: 0.5 },
                User { nt: 1, power: 0.25 },
            ],
            1.0,
        )
        .unwrap();
        let (psi, psi_t) = build_interference_matrices(&sc).unwrap();
        assert_eq!(psi.groups(), &[EigenGroup { value: 0.25, multiplicity: 3 }]);
        assert_eq!(psi_t.num_groups(), 2);
        assert!((psi_t.groups()[0].value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(psi_t.groups()[0].multiplicity, 3);
        assert_eq!(psi_t.groups()[1], EigenGroup { value: 0.25, multiplicity: 3 });
    }

    #[test]
    fn no_interferers_gives_empty_psi() {
        let sc = NetworkScenario::new(4, vec![User { nt: 2, power: 10.0 }], 1.0).unwrap();
        let (psi, psi_t) = build_interference_matrices(&sc).unwrap();
        assert_eq!(psi.dim(), 0);
        assert_eq!(psi_t.groups(), &[EigenGroup { value: 5.0, multiplicity: 2 }]);
        assert!(sc.sir().is_infinite());
    }

    #[test]
    fn scenario_validation() {
        assert!(NetworkScenario::new(0, vec![User { nt: 1, power: 1.0 }], 1.0).is_err());
        assert!(NetworkScenario::new(2, vec![], 1.0).is_err());
        assert!(NetworkScenario::new(2, vec![User { nt: 0, power: 1.0 }], 1.0).is_err());
        assert!(NetworkScenario::new(2, vec![User { nt: 1, power: -1.0 }], 1.0).is_err());
        assert!(NetworkScenario::new(2, vec![User { nt: 1, power: 1.0 }], 0.0).is_err());
    }

    #[test]
    fn sir_rescaling_preserves_ratios() {
        let sc = NetworkScenario::new(
            6,
            vec![
                User { nt: 3, power: 10.0 },
                User { nt: 3, power: 2.0 },
                User { nt: 3, power: 6.0 },
            ],
            1.0,
        )
        .unwrap();
        let s = sc.with_sir(0.1).unwrap();
        assert!((s.sir() - 0.1).abs() < 1e-14);
        assert!((s.users[2].power / s.users[1].power - 3.0).abs() < 1e-12);
        let s = sc.with_snr(100.0).unwrap();
        assert!((s.snr() - 100.0).abs() < 1e-12);
        assert!((s.sir() - sc.sir()).abs() < 1e-12);
    }

    fn raw_list() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop::sample::select(vec![0.1, 0.5, 1.0, 2.0, 7.5]), 1..10)
            .prop_flat_map(|base| {
                let n = base.len();
                (Just(base), prop::collection::vec(-1e-12f64..1e-12, n))
            })
            .prop_map(|(b, jitter)| b.iter().zip(jitter).map(|(v, j)| v * (1.0 + j)).collect())
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(raw in raw_list()) {
            let once = canonicalize(&raw, 1e-9).unwrap();
            let twice = canonicalize(&once.eigenvalues(), 1e-9).unwrap();
            prop_assert_eq!(once.num_groups(), twice.num_groups());
            for (a, b) in once.groups().iter().zip(twice.groups()) {
                prop_assert_eq!(a.multiplicity, b.multiplicity);
                prop_assert!((a.value - b.value).abs() <= 1e-15 * a.value);
            }
        }

        #[test]
        fn canonicalize_ignores_order(raw in raw_list(), seed in any::<u64>()) {
            let mut shuffled = raw.clone();
            // deterministic Fisher–Yates driven by the proptest seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(canonicalize(&raw, 1e-9).unwrap(), canonicalize(&shuffled, 1e-9).unwrap());
        }

        #[test]
        fn index_map_reconstructs_multiplicities(mults in prop::collection::vec(1usize..5, 1..5)) {
            let idx = multiplicity_index(mults.iter().copied());
            prop_assert_eq!(idx.e.len(), mults.iter().sum::<usize>());
            for (i, (&e, &d)) in idx.e.iter().zip(&idx.d).enumerate() {
                prop_assert!(d < mults[e]);
                let upto: usize = mults[..=e].iter().sum();
                // 1-based row index satisfies d_i = m_1 + … + m_{e_i} − i
                prop_assert_eq!(d, upto - (i + 1));
            }
            for (g, &m) in mults.iter().enumerate() {
                prop_assert_eq!(idx.e.iter().filter(|&&e| e == g).count(), m);
            }
        }
    }
}
