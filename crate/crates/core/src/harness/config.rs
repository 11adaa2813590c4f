//! Experiment configuration: a flat TOML document whose keys mirror the CLI
//! flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adiabatic::SweepSide;
use crate::disorder::DisorderSpec;
use crate::error::{Error, Result};
use crate::free_transfer::FreeRunOptions;
use crate::resonance::SearchOptions;

/// Environment variable that overrides the master seed of a configuration.
pub const SEED_ENV: &str = "SPINXFER_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Free transfer at the compensation point for every chain length.
    FreeSweepN,
    /// Free transfer with the compensating field offset by each deviation.
    CompensationScan,
    /// Landau-Zener sweep through the anticrossing.
    AdiabaticRun,
    /// Time-averaged leakage over a grid of terminal fields.
    LeakageVsField,
    /// Full metric bundle at the transfer peak, per realization.
    MonteCarloFidelity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::FreeSweepN,
        ExperimentKind::CompensationScan,
        ExperimentKind::AdiabaticRun,
        ExperimentKind::LeakageVsField,
        ExperimentKind::MonteCarloFidelity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FreeSweepN => "free-sweep-n",
            ExperimentKind::CompensationScan => "compensation-scan",
            ExperimentKind::AdiabaticRun => "adiabatic-run",
            ExperimentKind::LeakageVsField => "leakage-vs-field",
            ExperimentKind::MonteCarloFidelity => "monte-carlo-fidelity",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Every parameter of a run. Missing keys take the defaults below; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    /// Chain length, used when `n_list` is empty.
    pub n: usize,
    pub n_list: Vec<usize>,
    /// `(sigma_J / J)^2`
    pub sigma_j2: f64,
    /// `(sigma_B / J)^2`
    pub sigma_b2: f64,
    /// Applied terminal field, used when `b_grid` is empty.
    pub b_field: f64,
    pub b_grid: Vec<f64>,
    /// Offsets from the compensating field (compensation scans only).
    pub deviations: Vec<f64>,
    pub beta: f64,
    pub f_target: f64,
    pub alpha_scale: f64,
    /// Hold after the ramp, in units of the sweep duration.
    pub settle: f64,
    pub sweep_side: SweepSide,
    /// Local error per unit time for the sweep integrator.
    pub tol: f64,
    /// Uniform output samples of a swept trajectory.
    pub trajectory_samples: usize,
    pub sender_theta: f64,
    pub sender_phi: f64,
    /// Free-run horizon in units of the free transfer time.
    pub horizon_factor: f64,
    pub samples_per_tf: usize,
    /// Half-width of the compensation search window; derived from the
    /// disorder strength when absent.
    pub search_halfwidth: Option<f64>,
    pub coarse_points: usize,
    pub realizations: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub emit_plot_data: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let free = FreeRunOptions::default();
        Self {
            kind: None,
            n: 10,
            n_list: Vec::new(),
            sigma_j2: 0.0,
            sigma_b2: 0.0,
            b_field: 5.0,
            b_grid: Vec::new(),
            deviations: vec![0.0],
            beta: 20.0,
            f_target: 0.66,
            alpha_scale: 1.0,
            settle: 0.0,
            sweep_side: SweepSide::Sender,
            tol: 1e-8,
            trajectory_samples: 1000,
            sender_theta: std::f64::consts::FRAC_PI_2,
            sender_phi: 0.0,
            horizon_factor: free.horizon_factor,
            samples_per_tf: free.samples_per_tf,
            search_halfwidth: None,
            coarse_points: SearchOptions::default().coarse_points,
            realizations: 100,
            master_seed: 0,
            workers: 0,
            out: PathBuf::from("spinxfer-out"),
            emit_plot_data: false,
        }
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}` {msg}"))
}

fn check(key: &str, ok: bool, what: &str, value: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, format_args!("must be {what}, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Replaces the master seed with the value of [`SEED_ENV`], if set.
    pub fn apply_seed_env(&mut self) -> Result<()> {
        if let Ok(text) = std::env::var(SEED_ENV) {
            self.master_seed = text.trim().parse().map_err(|_| {
                Error::Config(format!("{SEED_ENV}={text:?} is not an unsigned integer"))
            })?;
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| invalid("kind", "is missing"))
    }

    pub fn chain_lengths(&self) -> Vec<usize> {
        if self.n_list.is_empty() {
            vec![self.n]
        } else {
            self.n_list.clone()
        }
    }

    pub fn fields(&self) -> Vec<f64> {
        if self.b_grid.is_empty() {
            vec![self.b_field]
        } else {
            self.b_grid.clone()
        }
    }

    /// Deviation grid for compensation scans; other kinds run at zero.
    pub fn deviation_grid(&self) -> Vec<f64> {
        match self.kind {
            Some(ExperimentKind::CompensationScan) => self.deviations.clone(),
            _ => vec![0.0],
        }
    }

    pub fn disorder(&self, n_sites: usize, b_field: f64) -> Result<DisorderSpec> {
        DisorderSpec::from_variances(
            n_sites,
            self.sigma_j2,
            self.sigma_b2,
            b_field,
            self.master_seed,
        )
    }

    pub fn search_options(&self) -> SearchOptions {
        let base = SearchOptions::for_sigma_b(self.sigma_b2.sqrt());
        SearchOptions {
            halfwidth: self.search_halfwidth.unwrap_or(base.halfwidth),
            coarse_points: self.coarse_points,
            ..base
        }
    }

    pub fn free_run_options(&self) -> FreeRunOptions {
        FreeRunOptions {
            horizon_factor: self.horizon_factor,
            samples_per_tf: self.samples_per_tf,
        }
    }

    /// Checks every precondition that does not depend on a sampled chain.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        let ns = self.chain_lengths();
        let key_n = if self.n_list.is_empty() {
            "n"
        } else {
            "n_list"
        };
        for &n in &ns {
            check(key_n, n >= 2, "at least 2", n)?;
        }
        for (key, v) in [("sigma_j2", self.sigma_j2), ("sigma_b2", self.sigma_b2)] {
            check(
                key,
                v >= 0.0 && v.is_finite(),
                "a finite non-negative number",
                v,
            )?;
        }
        let key_b = if self.b_grid.is_empty() {
            "b_field"
        } else {
            "b_grid"
        };
        for b in self.fields() {
            check(
                key_b,
                b >= 2.0 && b.is_finite(),
                "a finite field of at least 2 J (above the band edge)",
                b,
            )?;
        }
        if kind == ExperimentKind::CompensationScan {
            check("deviations", !self.deviations.is_empty(), "non-empty", "[]")?;
            for &d in &self.deviations {
                check("deviations", d.is_finite(), "finite", d)?;
            }
        }
        if kind == ExperimentKind::AdiabaticRun {
            check(
                "beta",
                self.beta > 0.0 && self.beta.is_finite(),
                "positive",
                self.beta,
            )?;
            check(
                "f_target",
                self.f_target > 0.0 && self.f_target < 1.0,
                "strictly between 0 and 1",
                self.f_target,
            )?;
            check(
                "alpha_scale",
                self.alpha_scale > 0.0 && self.alpha_scale.is_finite(),
                "positive",
                self.alpha_scale,
            )?;
            check(
                "settle",
                self.settle >= 0.0 && self.settle.is_finite(),
                "non-negative",
                self.settle,
            )?;
            check(
                "tol",
                self.tol > 0.0 && self.tol < 1.0,
                "in (0, 1)",
                self.tol,
            )?;
            check(
                "trajectory_samples",
                self.trajectory_samples >= 2,
                "at least 2",
                self.trajectory_samples,
            )?;
        }
        check(
            "sender_theta",
            (0.0..=std::f64::consts::PI).contains(&self.sender_theta),
            "in [0, pi]",
            self.sender_theta,
        )?;
        check(
            "sender_phi",
            (0.0..std::f64::consts::TAU).contains(&self.sender_phi),
            "in [0, 2 pi)",
            self.sender_phi,
        )?;
        check(
            "horizon_factor",
            self.horizon_factor >= 1.0 && self.horizon_factor.is_finite(),
            "at least 1",
            self.horizon_factor,
        )?;
        check(
            "samples_per_tf",
            self.samples_per_tf >= 2,
            "at least 2",
            self.samples_per_tf,
        )?;
        if let Some(h) = self.search_halfwidth {
            check("search_halfwidth", h > 0.0 && h.is_finite(), "positive", h)?;
        }
        check(
            "coarse_points",
            self.coarse_points >= SearchOptions::MIN_COARSE_POINTS,
            "at least 33",
            self.coarse_points,
        )?;
        check(
            "realizations",
            self.realizations >= 1,
            "at least 1",
            self.realizations,
        )?;
        Ok(())
    }
}
