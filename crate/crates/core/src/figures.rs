//! Scenario builders and CSV data for the four reference figures.
//!
//! - fig2: single-user MIMO-(6,3), transmit powers `{1+Δ (×3), 1−Δ (×3)}`
//!   normalized so the total is the SNR, swept over SNR for five Δ.
//! - fig3: relay-network bound, 4 source antennas and 5 relays with 2
//!   antennas each, relay powers ∝ {1,2,5,10,20}, exact vs Jensen over SNR.
//! - fig4: MIMO-(6,6) at SNR 10 dB with one interferer of NT₁ antennas,
//!   swept over SIR, plus single-user references.
//! - fig5: NR = 6 at SNR 10 dB with one or two interferers that each copy
//!   the desired antenna count NT₀ ∈ {3,4,5,6}, swept over the total SIR.
//!
//! MIMO-(a,b) means a transmit and b receive antennas.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::capacity::{
    capacity_su_with, db_to_linear, relay_jensen_bound, relay_upper_bound_with, sweep_with, CapacityOptions, SweepAxis,
};
use crate::covariance::{CovarianceSpec, NetworkScenario, User};
use crate::error::{domain, Error, Result};
use crate::report::{field, num, sweep_csv, write_file, Table};
use crate::scenario::text_digest;

pub const FIG2_DELTAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const FIG3_WEIGHTS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
pub const FIG4_NT1: [usize; 5] = [1, 2, 4, 6, 10];
pub const FIG5_NT0: [usize; 4] = [3, 4, 5, 6];
pub const FIG_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            _ => domain(format!("unknown figure `{s}`; expected fig2, fig3, fig4 or fig5")),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }

    /// Default sweep grid in dB.
    pub fn default_grid(self) -> Vec<f64> {
        let (a, b, step) = match self {
            Self::Fig2 | Self::Fig3 => (0.0, 30.0, 1.0),
            Self::Fig4 | Self::Fig5 => (-40.0, 40.0, 2.0),
        };
        let n = ((b - a) / step) as usize;
        (0..=n).map(|i| a + step * i as f64).collect()
    }
}

/// Transmit covariance of fig2 at linear SNR: eigenvalues `SNR (1 ± Δ) / 6`,
/// with zero-power antennas dropped (at Δ = 1 only three remain).
pub fn fig2_spec(delta: f64, snr: f64) -> Result<CovarianceSpec> {
    if !(0.0..=1.0).contains(&delta) {
        return domain(format!("Δ must lie in [0, 1], got {delta}"));
    }
    let hi = snr * (1.0 + delta) / 6.0;
    let lo = snr * (1.0 - delta) / 6.0;
    if lo > 0.0 {
        CovarianceSpec::from_groups(&[(hi, 3), (lo, 3)])
    } else {
        CovarianceSpec::from_groups(&[(hi, 3)])
    }
}

pub const FIG2_RECEIVE: usize = 3;

/// Relay covariance of fig3: each relay's two antennas share its weight and
/// `tr Φ = SNR`.
pub fn fig3_spec(snr: f64) -> Result<CovarianceSpec> {
    let total: f64 = FIG3_WEIGHTS.iter().sum::<f64>() * 2.0;
    let groups: Vec<(f64, usize)> = FIG3_WEIGHTS.iter().map(|w| (snr * w / total, 2)).collect();
    CovarianceSpec::from_groups(&groups)
}

pub const FIG3_SOURCE: usize = 4;

/// fig4 scenario at the given SIR (dB); σ² = 1 so powers equal SNR terms.
pub fn fig4_scenario(nt1: usize, sir_db: f64) -> Result<NetworkScenario> {
    let p0 = db_to_linear(FIG_SNR_DB);
    NetworkScenario::new(
        6,
        vec![User { nt: 6, power: p0 }, User { nt: nt1, power: p0 / db_to_linear(sir_db) }],
        1.0,
    )
}

/// fig5 scenario: `interferers` users with `nt0` antennas each, equal
/// powers summing to `P₀ / SIR`.
pub fn fig5_scenario(nt0: usize, interferers: usize, sir_db: f64) -> Result<NetworkScenario> {
    let p0 = db_to_linear(FIG_SNR_DB);
    let each = p0 / db_to_linear(sir_db) / interferers as f64;
    let mut users = vec![User { nt: nt0, power: p0 }];
    users.extend(std::iter::repeat_n(User { nt: nt0, power: each }, interferers));
    NetworkScenario::new(6, users, 1.0)
}

/// Transmit covariance of an interference-free single user with `nt`
/// equal-power antennas at SNR (dB).
pub fn single_user(nt: usize, snr_db: f64) -> Result<CovarianceSpec> {
    CovarianceSpec::scalar(db_to_linear(snr_db) / nt as f64, nt)
}

/// One CSV file of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub contents: String,
}

fn snr_curve(
    title: &str,
    config: &str,
    grid: &[f64],
    column: &str,
    eval: impl Fn(f64) -> Result<(f64, Vec<String>)> + Sync,
) -> String {
    use rayon::prelude::*;
    let digest = text_digest(config);
    let mut t = Table::new(
        &[title, &format!("snr_db in dB; {column} in bits/s/Hz; scenario_digest {digest}")],
        &["snr_db", column, "warnings", "scenario_digest"],
    );
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&db| {
            let (value, notes) = match eval(db) {
                Ok((v, w)) => (v, w.join("; ")),
                Err(e) => (f64::NAN, format!("error: {e}")),
            };
            vec![num(db), num(value), field(&notes), digest.clone()]
        })
        .collect();
    rows.iter().for_each(|r| t.row(r));
    t.finish()
}

fn fig2(grid: &[f64], opts: &CapacityOptions) -> Vec<CsvFile> {
    FIG2_DELTAS
        .iter()
        .map(|&delta| {
            let config = format!("fig2 n_t=6 n_r={FIG2_RECEIVE} delta={delta} powers={{1+delta x3, 1-delta x3}}");
            let contents = snr_curve(
                &format!("single-user MIMO-(6,3), transmit powers 1±Δ, Δ = {delta}"),
                &config,
                grid,
                "c_su_bits",
                |db| {
                    let c = capacity_su_with(&fig2_spec(delta, db_to_linear(db))?, FIG2_RECEIVE, opts)?;
                    Ok((c.value_bits, c.diagnostics.warnings))
                },
            );
            CsvFile {
                name: format!("fig2_delta_{delta:.2}.csv"),
                contents,
            }
        })
        .collect()
}

fn fig3(grid: &[f64], opts: &CapacityOptions) -> Vec<CsvFile> {
    let config = format!("fig3 source={FIG3_SOURCE} relays=5x2 weights={FIG3_WEIGHTS:?} snr=trace");
    let exact = snr_curve(
        "relay-network bound C_u = C_SU / 2 (exact)",
        &config,
        grid,
        "c_u_bits",
        |db| {
            let r = relay_upper_bound_with(&fig3_spec(db_to_linear(db))?, FIG3_SOURCE, opts)?;
            Ok((r.value_bits, r.diagnostics.warnings))
        },
    );
    let jensen = snr_curve(
        "Jensen bound p/2 log2(1 + tr Phi)",
        &config,
        grid,
        "c_jensen_bits",
        |db| Ok((relay_jensen_bound(&fig3_spec(db_to_linear(db))?, FIG3_SOURCE).value_bits, Vec::new())),
    );
    vec![
        CsvFile {
            name: "fig3_exact.csv".into(),
            contents: exact,
        },
        CsvFile {
            name: "fig3_jensen.csv".into(),
            contents: jensen,
        },
    ]
}

fn reference_table(title: &str, rows: &[(&str, usize, usize)], opts: &CapacityOptions) -> Result<String> {
    let mut t = Table::new(
        &[title, &format!("snr_db in dB ({FIG_SNR_DB}); c_su_bits in bits/s/Hz")],
        &["reference", "n_t", "n_r", "snr_db", "c_su_bits", "scenario_digest"],
    );
    for &(kind, nt, nr) in rows {
        let c = capacity_su_with(&single_user(nt, FIG_SNR_DB)?, nr, opts)?;
        let digest = text_digest(&format!("single-user n_t={nt} n_r={nr} snr_db={FIG_SNR_DB}"));
        t.row(&[kind.into(), nt.to_string(), nr.to_string(), num(FIG_SNR_DB), num(c.value_bits), digest]);
    }
    Ok(t.finish())
}

fn fig4(grid: &[f64], opts: &CapacityOptions) -> Result<Vec<CsvFile>> {
    let mut files = Vec::new();
    for nt1 in FIG4_NT1 {
        let s = fig4_scenario(nt1, 0.0)?;
        let sw = sweep_with(&s, SweepAxis::Sir, grid, opts)?;
        files.push(CsvFile {
            name: format!("fig4_nt1_{nt1}.csv"),
            contents: sweep_csv(&sw, &format!("MIMO-(6,6), SNR {FIG_SNR_DB} dB, one interferer with NT1 = {nt1}")),
        });
    }
    let mut refs = vec![("diamond", 6, 6)];
    refs.extend(FIG4_NT1.iter().filter(|&&k| k < 6).map(|&k| ("circle", 6, 6 - k)));
    files.push(CsvFile {
        name: "fig4_reference.csv".into(),
        contents: reference_table("single-user references: diamond MIMO-(6,6), circles MIMO-(6,6-NT1)", &refs, opts)?,
    });
    Ok(files)
}

fn fig5(grid: &[f64], opts: &CapacityOptions) -> Result<Vec<CsvFile>> {
    let mut files = Vec::new();
    for k in [1usize, 2] {
        for nt0 in FIG5_NT0 {
            let s = fig5_scenario(nt0, k, 0.0)?;
            let sw = sweep_with(&s, SweepAxis::Sir, grid, opts)?;
            files.push(CsvFile {
                name: format!("fig5_interferers_{k}_nt0_{nt0}.csv"),
                contents: sweep_csv(
                    &sw,
                    &format!("MIMO-({nt0},6), SNR {FIG_SNR_DB} dB, {k} interferer(s) with {nt0} antennas each"),
                ),
            });
        }
    }
    let refs: Vec<(&str, usize, usize)> = FIG5_NT0.iter().map(|&n| ("circle", n, 6)).collect();
    files.push(CsvFile {
        name: "fig5_reference.csv".into(),
        contents: reference_table("interference-free single-user MIMO-(NT0,6)", &refs, opts)?,
    });
    Ok(files)
}

/// CSV contents of every curve of `figure`, in a fixed order.
pub fn figure_data(figure: Figure, grid: Option<&[f64]>, opts: &CapacityOptions) -> Result<Vec<CsvFile>> {
    let default = figure.default_grid();
    let grid = grid.unwrap_or(&default);
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("figure grid must be nonempty and strictly increasing");
    }
    match figure {
        Figure::Fig2 => Ok(fig2(grid, opts)),
        Figure::Fig3 => Ok(fig3(grid, opts)),
        Figure::Fig4 => fig4(grid, opts),
        Figure::Fig5 => fig5(grid, opts),
    }
}

/// Writes the figure's CSV files into directory `out`.
pub fn run_figure(figure: Figure, out: &Path, grid: Option<&[f64]>, opts: &CapacityOptions) -> Result<Vec<PathBuf>> {
    let files = figure_data(figure, grid, opts)?;
    let mut paths = Vec::with_capacity(files.len());
    for f in files {
        let path = out.join(&f.name);
        write_file(&path, &f.contents)?;
        paths.push(path);
    }
    Ok(paths)
}
