//! Command execution behind the `mimocap` binary, kept in the library so the
//! commands are testable without spawning processes.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::capacity::{
    capacity_gaussian_approx_with, capacity_mu_with, sweep_with, CapacityOptions, CapacityResult, SweepAxis,
};
use crate::covariance::build_interference_matrices;
use crate::eigpdf::{sample_eigenvalues, EigenPdf, Histogram};
use crate::error::{domain, Result};
use crate::figures::{run_figure, Figure};
use crate::montecarlo::capacity_mc;
use crate::quad::QuadConfig;
use crate::report::{num, sweep_csv, write_file};
use crate::scenario::{load_scenario, scenario_digest};
use crate::verify::{run_verify, Depth};
use crate::NetworkScenario;

pub const MIN_MC_SAMPLES: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;
const MAX_MODEL_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Capacity,
    Sweep,
    Pdf,
    Verify,
    Figure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub scenario: Option<PathBuf>,
    /// File for capacity/sweep/pdf output, directory for figures.
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub mc_samples: Option<usize>,
    pub figure: Option<Figure>,
    pub axis: SweepAxis,
    pub grid: Option<Vec<f64>>,
    pub depth: Depth,
    pub bins: usize,
    pub spread_limit: Option<f64>,
    pub precision_tolerance: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            scenario: None,
            out: None,
            seed: DEFAULT_SEED,
            mc_samples: None,
            figure: None,
            axis: SweepAxis::Sir,
            grid: None,
            depth: Depth::Quick,
            bins: 40,
            spread_limit: None,
            precision_tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.mc_samples {
            if n < MIN_MC_SAMPLES {
                return domain(format!("--mc-samples must be at least {MIN_MC_SAMPLES}, got {n}"));
            }
        }
        let needs_scenario = matches!(self.command, Command::Capacity | Command::Sweep | Command::Pdf);
        if needs_scenario && self.scenario.is_none() {
            return domain("this command needs --scenario PATH");
        }
        if self.command == Command::Sweep && self.grid.is_none() {
            return domain("sweep needs --grid start:stop:step");
        }
        if self.command == Command::Figure && self.figure.is_none() {
            return domain("figure needs --figure fig2|fig3|fig4|fig5");
        }
        if self.bins == 0 {
            return domain("--bins must be positive");
        }
        if let Some(t) = self.precision_tolerance {
            if !(t > 0.0 && t < 1.0) {
                return domain("precision tolerance must lie in (0, 1)");
            }
        }
        Ok(())
    }

    pub fn capacity_options(&self) -> CapacityOptions {
        let mut o = CapacityOptions {
            seed: self.seed,
            ..CapacityOptions::default()
        };
        if let Some(n) = self.mc_samples {
            o.fallback_samples = n;
        }
        if let Some(s) = self.spread_limit {
            o.spread_limit = s;
        }
        if let Some(t) = self.precision_tolerance {
            o.precision_tolerance = t;
        }
        o
    }

    fn load(&self) -> Result<NetworkScenario> {
        load_scenario(self.scenario.as_deref().expect("validated"))
    }
}

/// Text produced by a command and whether it succeeded (verify can fail
/// without an error).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub success: bool,
}

fn emit(cfg: &RunConfig, text: String) -> Result<Outcome> {
    match &cfg.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Outcome {
                output: format!("wrote {}\n", path.display()),
                success: true,
            })
        }
        None => Ok(Outcome {
            output: text,
            success: true,
        }),
    }
}

fn describe(label: &str, r: &CapacityResult, s: &mut String) {
    let _ = writeln!(s, "{label}: {} bits/s/Hz ({} nats)", num(r.value_bits), num(r.value_nats));
    for w in &r.diagnostics.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    if let Some(mc) = r.diagnostics.monte_carlo {
        let _ = writeln!(
            s,
            "  monte carlo fallback: {} ± {} bits/s/Hz ({} samples)",
            num(mc.mean / std::f64::consts::LN_2),
            num(mc.stderr / std::f64::consts::LN_2),
            mc.count
        );
    }
}

fn run_capacity(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.load()?;
    let opts = cfg.capacity_options();
    let mu = capacity_mu_with(&s, &opts)?;
    let gauss = capacity_gaussian_approx_with(&s, &opts)?;
    let su = capacity_mu_with(&s.without_interference(), &opts)?;
    let mut out = String::new();
    let _ = writeln!(out, "# scenario_digest {}", scenario_digest(&s));
    let _ = writeln!(
        out,
        "# NR={} users={} SNR={} dB SIR={} dB",
        s.nr,
        s.users.len(),
        num(10.0 * s.snr().log10()),
        num(10.0 * s.sir().log10())
    );
    describe("c_mu", &mu, &mut out);
    describe("c_gauss", &gauss, &mut out);
    describe("c_su_ref", &su, &mut out);
    if let Some(n) = cfg.mc_samples {
        let (psi, psi_tilde) = build_interference_matrices(&s)?;
        let a = capacity_mc(&psi_tilde, s.nr, n, cfg.seed);
        let (mean, se) = if psi.dim() == 0 {
            (a.mean, a.stderr)
        } else {
            let b = capacity_mc(&psi, s.nr, n, cfg.seed.wrapping_add(1));
            (a.mean - b.mean, a.stderr.hypot(b.stderr))
        };
        let _ = writeln!(
            out,
            "monte carlo c_mu: {} ± {} bits/s/Hz ({n} samples, seed {})",
            num(mean / std::f64::consts::LN_2),
            num(se / std::f64::consts::LN_2),
            cfg.seed
        );
    }
    emit(cfg, out)
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.load()?;
    let grid = cfg.grid.as_deref().expect("validated");
    let sw = sweep_with(&s, cfg.axis, grid, &cfg.capacity_options())?;
    let axis = match cfg.axis {
        SweepAxis::Snr => "SNR",
        SweepAxis::Sir => "SIR",
    };
    emit(cfg, sweep_csv(&sw, &format!("{axis} sweep, NR={}, {} users", s.nr, s.users.len())))
}

/// Histogram of the largest eigenvalue of `H Ψ̃ H†` (`NR` rows) against the
/// marginal from the joint density when `n_min ≤ 3`.
fn run_pdf(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.load()?;
    let (_, psi_tilde) = build_interference_matrices(&s)?;
    let samples = cfg.mc_samples.unwrap_or(100_000);
    let draws = sample_eigenvalues(&psi_tilde, s.nr, samples, cfg.seed)?;
    let mut largest: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    largest.sort_by(f64::total_cmp);
    let hi = largest[((largest.len() as f64 * 0.995) as usize).min(largest.len() - 1)];
    let hist = Histogram::new(&largest, 0.0, hi, cfg.bins)?;
    let pdf = EigenPdf::new(&psi_tilde, s.nr)?;
    let model = if pdf.n_min() <= MAX_MODEL_DIM {
        let qc = QuadConfig::rel(1e-6);
        let m = (0..cfg.bins)
            .map(|b| Ok(pdf.largest_eigenvalue_probability(hist.edges[b], hist.edges[b + 1], &qc)? / hist.width(b)))
            .collect::<Result<Vec<f64>>>()?;
        Some(m)
    } else {
        None
    };
    let header = format!(
        "largest eigenvalue of H Psi~ H^H, NR={}, {samples} samples, seed {}\n\
         densities per unit eigenvalue; model_density is the bin average of the exact marginal\n\
         scenario_digest {}",
        s.nr,
        cfg.seed,
        scenario_digest(&s)
    );
    emit(cfg, hist.to_csv(model.as_deref(), &header))
}

fn run_figure_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let fig = cfg.figure.expect("validated");
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let paths = run_figure(fig, &dir, cfg.grid.as_deref(), &cfg.capacity_options())?;
    let mut out = String::new();
    for p in paths {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(Outcome {
        output: out,
        success: true,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        Command::Capacity => run_capacity(cfg),
        Command::Sweep => run_sweep(cfg),
        Command::Pdf => run_pdf(cfg),
        Command::Figure => run_figure_cmd(cfg),
        Command::Verify => {
            let report = run_verify(cfg.depth, cfg.seed);
            let passed = report.passed();
            let mut o = emit(cfg, report.to_text())?;
            o.success = passed;
            Ok(o)
        }
    }
}
