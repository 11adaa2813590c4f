use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spinxfer::harness::ExperimentConfig;
use spinxfer::{ExperimentKind, SweepSide};

#[derive(Debug, Parser)]
#[command(
    name = "spinxfer",
    version,
    about = "Spin-chain state transfer experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free transfer at the compensation point over a list of chain lengths.
    FreeSweepN {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        free: FreeArgs,
    },
    /// Peak free-transfer fidelity with the compensating field offset.
    CompensationScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        free: FreeArgs,
        /// Offsets from the compensating field, in units of J.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        deviations: Option<Vec<f64>>,
    },
    /// Landau-Zener sweep through the terminal anticrossing.
    AdiabaticRun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: ChainArgs,
        /// Sweep half-range in units of the effective coupling.
        #[arg(long)]
        beta: Option<f64>,
        /// Fidelity the sweep rate is calibrated for.
        #[arg(long)]
        f_target: Option<f64>,
        /// Multiplier applied to the calibrated sweep rate.
        #[arg(long)]
        alpha_scale: Option<f64>,
        /// Constant-field hold after the ramp, in units of the sweep duration.
        #[arg(long)]
        settle: Option<f64>,
        /// Lower the receiver field instead of raising the sender field.
        #[arg(long)]
        receiver_side: bool,
        /// Local error per unit time of the integrator.
        #[arg(long)]
        tol: Option<f64>,
        /// Uniform output samples of the trajectory.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Time-averaged leakage over a grid of terminal fields.
    LeakageVsField {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        free: FreeArgs,
    },
    /// Fidelity, entanglement and eavesdropping measures per realization.
    MonteCarloFidelity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        free: FreeArgs,
        /// Polar angle of the transmitted qubit.
        #[arg(long)]
        theta: Option<f64>,
        /// Azimuth of the transmitted qubit.
        #[arg(long)]
        phi: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the SPINXFER_SEED environment variable).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of disorder realizations.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Also write small CSV tables ready for plotting.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Chain lengths, e.g. `5-15` or `5,7,9`.
    #[arg(long, value_parser = parse_n_list)]
    pub n_list: Option<NList>,
    /// Normalized coupling variance (sigma_J / J)^2.
    #[arg(long)]
    pub sigma_j2: Option<f64>,
    /// Normalized field variance (sigma_B / J)^2.
    #[arg(long)]
    pub sigma_b2: Option<f64>,
    /// Applied terminal field in units of J.
    #[arg(long)]
    pub b_field: Option<f64>,
    /// Terminal fields, e.g. `3,4,5`.
    #[arg(long, value_delimiter = ',')]
    pub b_grid: Option<Vec<f64>>,
    /// Half-width of the compensation search window.
    #[arg(long)]
    pub search_halfwidth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FreeArgs {
    /// Free-run horizon in units of the free transfer time.
    #[arg(long)]
    pub horizon_factor: Option<f64>,
    /// Output samples per free transfer time.
    #[arg(long)]
    pub samples_per_tf: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NList(pub Vec<usize>);

/// Parses comma-separated lengths and inclusive ranges `a-b`.
pub fn parse_n_list(text: &str) -> Result<NList, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{s}` is not a chain length"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    Ok(NList(out))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Common {
    fn base(&self, kind: ExperimentKind) -> spinxfer::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::load(path)?;
                if let Some(file_kind) = cfg.kind {
                    if file_kind != kind {
                        return Err(spinxfer::Error::Config(format!(
                            "`kind` in {} is {file_kind}, but the subcommand is {kind}",
                            path.display()
                        )));
                    }
                }
                cfg
            }
            None => ExperimentConfig::default(),
        };
        cfg.kind = Some(kind);
        cfg.apply_seed_env()?;
        set(&mut cfg.master_seed, self.seed);
        set(&mut cfg.out, self.out.clone());
        set(&mut cfg.realizations, self.realizations);
        set(&mut cfg.workers, self.workers);
        cfg.emit_plot_data |= self.emit_plot_data;
        Ok(cfg)
    }
}

impl ChainArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        set(&mut cfg.n, self.n);
        if self.n.is_some() && self.n_list.is_none() {
            cfg.n_list.clear();
        }
        set(&mut cfg.n_list, self.n_list.map(|l| l.0));
        set(&mut cfg.sigma_j2, self.sigma_j2);
        set(&mut cfg.sigma_b2, self.sigma_b2);
        set(&mut cfg.b_field, self.b_field);
        if self.b_field.is_some() && self.b_grid.is_none() {
            cfg.b_grid.clear();
        }
        set(&mut cfg.b_grid, self.b_grid);
        if self.search_halfwidth.is_some() {
            cfg.search_halfwidth = self.search_halfwidth;
        }
    }
}

impl FreeArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        set(&mut cfg.horizon_factor, self.horizon_factor);
        set(&mut cfg.samples_per_tf, self.samples_per_tf);
    }
}

impl Cli {
    /// Builds the run configuration: file values, then the seed environment
    /// variable, then flags.
    pub fn into_config(self) -> spinxfer::Result<ExperimentConfig> {
        let cfg = match self.command {
            Command::FreeSweepN {
                common,
                chain,
                free,
            } => {
                let mut cfg = common.base(ExperimentKind::FreeSweepN)?;
                chain.apply(&mut cfg);
                free.apply(&mut cfg);
                cfg
            }
            Command::CompensationScan {
                common,
                chain,
                free,
                deviations,
            } => {
                let mut cfg = common.base(ExperimentKind::CompensationScan)?;
                chain.apply(&mut cfg);
                free.apply(&mut cfg);
                set(&mut cfg.deviations, deviations);
                cfg
            }
            Command::AdiabaticRun {
                common,
                chain,
                beta,
                f_target,
                alpha_scale,
                settle,
                receiver_side,
                tol,
                samples,
            } => {
                let mut cfg = common.base(ExperimentKind::AdiabaticRun)?;
                chain.apply(&mut cfg);
                set(&mut cfg.beta, beta);
                set(&mut cfg.f_target, f_target);
                set(&mut cfg.alpha_scale, alpha_scale);
                set(&mut cfg.settle, settle);
                set(&mut cfg.tol, tol);
                set(&mut cfg.trajectory_samples, samples);
                if receiver_side {
                    cfg.sweep_side = SweepSide::Receiver;
                }
                cfg
            }
            Command::LeakageVsField {
                common,
                chain,
                free,
            } => {
                let mut cfg = common.base(ExperimentKind::LeakageVsField)?;
                chain.apply(&mut cfg);
                free.apply(&mut cfg);
                cfg
            }
            Command::MonteCarloFidelity {
                common,
                chain,
                free,
                theta,
                phi,
            } => {
                let mut cfg = common.base(ExperimentKind::MonteCarloFidelity)?;
                chain.apply(&mut cfg);
                free.apply(&mut cfg);
                set(&mut cfg.sender_theta, theta);
                set(&mut cfg.sender_phi, phi);
                cfg
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
