//! Declarative experiment runner.
//!
//! A run is a grid of points (chain length x terminal field x deviation)
//! times a number of disorder realizations. Every (point, realization) unit
//! is independent and seeded by its realization index alone, so the units
//! run in parallel and are merged back in index order. Aggregates are
//! therefore independent of scheduling.

mod config;
mod stats;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::adiabatic::{simulate_adiabatic, AdiabaticOptions, AdiabaticRun, SweepPlan};
use crate::chain::ChainRealization;
use crate::disorder::RealizationRecord;
use crate::error::{Error, Result};
use crate::free_transfer::{run_free, Trajectory};
use crate::metrics::{average_fidelity, entanglement_of_formation, MetricBundle, SenderState};
use crate::output::{fmt_f64, write_csv, write_json};
use crate::resonance::find_anticrossing;

pub use config::{ExperimentConfig, ExperimentKind, SEED_ENV};
pub use stats::Summary;

/// One grid point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub b_field: f64,
    pub deviation: f64,
}

/// Metrics recorded per realization, in column order.
pub fn metric_names(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::FreeSweepN
        | ExperimentKind::CompensationScan
        | ExperimentKind::LeakageVsField => &[
            "delta_b_star",
            "v",
            "tau_f",
            "f_max",
            "t_at_max",
            "mean_leakage",
            "localization_defect",
        ],
        ExperimentKind::MonteCarloFidelity => &[
            "delta_b_star",
            "v",
            "tau_f",
            "f_max",
            "t_at_max",
            "average_fidelity",
            "entanglement",
            "mean_leakage",
            "leakage_at_peak",
            "distinguishability_powerful",
            "distinguishability_weak_max",
        ],
        ExperimentKind::AdiabaticRun => &[
            "delta_b_star",
            "v",
            "alpha",
            "tau_a",
            "predicted_fidelity",
            "final_fidelity",
            "fidelity_at_sweep_end",
            "terminal_occupation",
            "norm_drift",
            "accepted_steps",
        ],
    }
}

/// Result of one (point, realization) unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOutcome {
    pub point: usize,
    pub index: u64,
    pub record: RealizationRecord,
    pub metrics: std::result::Result<Vec<f64>, Error>,
}

/// Swept trajectory kept for export (first realization of each point).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepExport {
    pub point: usize,
    pub plan: SweepPlan,
    pub trajectory: Trajectory,
}

/// Everything a run produces, before and after it is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub kind: ExperimentKind,
    pub points: Vec<GridPoint>,
    pub metric_names: Vec<&'static str>,
    /// Per-point, per-metric aggregates over successful realizations.
    pub summaries: Vec<Vec<Summary>>,
    pub outcomes: Vec<UnitOutcome>,
    pub sweeps: Vec<SweepExport>,
    pub failed: usize,
    pub total: usize,
}

struct Evaluated {
    metrics: Vec<f64>,
    sweep: Option<(SweepPlan, Trajectory)>,
}

fn evaluate_unit(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    point: &GridPoint,
    chain: &ChainRealization,
    keep_trajectory: bool,
) -> Result<Evaluated> {
    let b = point.b_field;
    let res = find_anticrossing(chain, b, &cfg.search_options())?;
    let v = res.half_splitting;
    if kind == ExperimentKind::AdiabaticRun {
        let plan = SweepPlan::calibrated(
            v,
            cfg.beta,
            cfg.f_target,
            cfg.alpha_scale,
            res.delta_b_star,
            cfg.sweep_side,
        )?;
        let opts = AdiabaticOptions {
            tol: cfg.tol,
            settle: cfg.settle * plan.duration,
            samples: cfg.trajectory_samples,
        };
        let run: AdiabaticRun = simulate_adiabatic(chain, b, &plan, &opts)?;
        let metrics = vec![
            res.delta_b_star,
            v,
            plan.alpha,
            plan.duration,
            plan.predicted_fidelity(),
            run.final_fidelity(),
            run.fidelity_at_sweep_end(),
            run.terminal_occupation(),
            run.stats.max_norm_drift,
            run.stats.accepted as f64,
        ];
        let sweep = keep_trajectory.then_some((plan, run.trajectory));
        return Ok(Evaluated { metrics, sweep });
    }

    let (traj, summary) = run_free(
        chain,
        b,
        res.delta_b_star,
        v,
        point.deviation,
        &cfg.free_run_options(),
    )?;
    let mut metrics = vec![
        res.delta_b_star,
        v,
        summary.tau_f,
        summary.f_max,
        summary.t_at_max,
    ];
    if kind == ExperimentKind::MonteCarloFidelity {
        let sender = SenderState::new(cfg.sender_theta, cfg.sender_phi)?;
        let peak = traj
            .index_near(summary.t_at_max)
            .expect("trajectory is not empty");
        let bundle = MetricBundle::evaluate(&traj.states[peak], sender)?;
        let f = summary.f_max.clamp(0.0, 1.0);
        metrics.extend([
            average_fidelity(f)?,
            entanglement_of_formation(f)?,
            summary.mean_leakage,
            bundle.leakage,
            bundle.distinguishability_powerful,
            bundle.distinguishability_weak_max,
        ]);
    } else {
        metrics.extend([summary.mean_leakage, res.localization_defect]);
    }
    Ok(Evaluated {
        metrics,
        sweep: None,
    })
}

fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for n in cfg.chain_lengths() {
        for b_field in cfg.fields() {
            for deviation in cfg.deviation_grid() {
                points.push(GridPoint {
                    n,
                    b_field,
                    deviation,
                });
            }
        }
    }
    points
}

/// Runs every unit of the configuration and aggregates, without touching
/// the file system.
pub fn evaluate_experiment(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    let points = grid(cfg);
    let specs = points
        .iter()
        .map(|p| cfg.disorder(p.n, p.b_field))
        .collect::<Result<Vec<_>>>()?;
    let homogeneous = cfg.sigma_j2 == 0.0 && cfg.sigma_b2 == 0.0;
    // Without disorder every realization is the same chain, so only the
    // first one is simulated.
    let simulated = if homogeneous { 1 } else { cfg.realizations };
    let units: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..simulated as u64).map(move |i| (p, i)))
        .collect();

    let work = || {
        units
            .par_iter()
            .map(|&(p, index)| {
                let chain = specs[p].sample_realization(index);
                let out = evaluate_unit(cfg, kind, &points[p], &chain, index == 0);
                (p, index, chain, out)
            })
            .collect::<Vec<_>>()
    };
    let results = if cfg.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("`workers`: {e}")))?
            .install(work)
    };

    let mut outcomes = Vec::with_capacity(points.len() * cfg.realizations);
    let mut sweeps = Vec::new();
    for (p, index, chain, out) in results {
        let metrics = match out {
            Ok(ev) => {
                if let Some((plan, trajectory)) = ev.sweep {
                    sweeps.push(SweepExport {
                        point: p,
                        plan,
                        trajectory,
                    });
                }
                Ok(ev.metrics)
            }
            Err(e) => Err(e),
        };
        outcomes.push(UnitOutcome {
            point: p,
            index,
            record: RealizationRecord::new(&specs[p], index, &chain),
            metrics: metrics.clone(),
        });
        if homogeneous {
            for copy in 1..cfg.realizations as u64 {
                let chain = specs[p].sample_realization(copy);
                outcomes.push(UnitOutcome {
                    point: p,
                    index: copy,
                    record: RealizationRecord::new(&specs[p], copy, &chain),
                    metrics: metrics.clone(),
                });
            }
        }
    }

    let total = outcomes.len();
    let failed = outcomes.iter().filter(|o| o.metrics.is_err()).count();
    if failed * 10 > total {
        let first = outcomes
            .iter()
            .find_map(|o| o.metrics.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failed,
            total,
            first,
        });
    }

    let names = metric_names(kind);
    let summaries = (0..points.len())
        .map(|p| {
            (0..names.len())
                .map(|m| {
                    Summary::of(
                        outcomes
                            .iter()
                            .filter(|o| o.point == p)
                            .filter_map(|o| o.metrics.as_ref().ok().map(|v| v[m])),
                    )
                })
                .collect()
        })
        .collect();

    Ok(RunArtifact {
        config: cfg.clone(),
        kind,
        points,
        metric_names: names.to_vec(),
        summaries,
        outcomes,
        sweeps,
        failed,
        total,
    })
}

/// Evaluates the configuration and writes its artifact to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    let started = unix_seconds();
    let artifact = evaluate_experiment(cfg)?;
    artifact.write(&cfg.out, started)?;
    Ok(artifact)
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: ExperimentKind,
    config: &'a ExperimentConfig,
    master_seed: u64,
    seeding: &'static str,
    unit_system: &'static str,
    realization_indices: [u64; 2],
    search: crate::resonance::SearchOptions,
    free_run: crate::free_transfer::FreeRunOptions,
    points: Vec<PointEntry>,
    metrics: &'a [&'static str],
    units: usize,
    failed: usize,
    failures: Vec<FailureEntry>,
    files: Vec<String>,
    started_unix: f64,
    finished_unix: f64,
}

#[derive(Serialize)]
struct PointEntry {
    n: usize,
    b_field: f64,
    deviation: f64,
    /// `deviation` relative to the applied terminal field.
    deviation_percent_of_field: f64,
}

#[derive(Serialize)]
struct FailureEntry {
    point: usize,
    index: u64,
    error: String,
}

#[derive(Serialize)]
struct RealizationLine<'a> {
    point: usize,
    n: usize,
    b_field: f64,
    deviation: f64,
    index: u64,
    master_seed: u64,
    couplings: &'a [f64],
    static_fields: &'a [f64],
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<serde_json::Map<String, serde_json::Value>>,
}

impl RunArtifact {
    fn grid_columns(&self) -> &'static [&'static str] {
        match self.kind {
            ExperimentKind::CompensationScan => &["n", "b_field", "deviation"],
            _ => &["n", "b_field"],
        }
    }

    fn grid_values(&self, p: &GridPoint) -> Vec<String> {
        let mut row = vec![p.n.to_string(), fmt_f64(p.b_field)];
        if self.kind == ExperimentKind::CompensationScan {
            row.push(fmt_f64(p.deviation));
        }
        row
    }

    /// Header and rows of the aggregate table.
    pub fn data_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header: Vec<String> = self.grid_columns().iter().map(|s| s.to_string()).collect();
        header.extend(["ok".to_string(), "failed".to_string()]);
        for name in &self.metric_names {
            for stat in ["mean", "std", "min", "max"] {
                header.push(format!("{name}_{stat}"));
            }
        }
        let rows = self
            .points
            .iter()
            .enumerate()
            .map(|(p, point)| {
                let mut row = self.grid_values(point);
                let ok = self.summaries[p].first().map_or(0, |s| s.count);
                let all = self.outcomes.iter().filter(|o| o.point == p).count();
                row.push(ok.to_string());
                row.push((all - ok).to_string());
                for s in &self.summaries[p] {
                    row.extend([s.mean, s.std, s.min, s.max].map(fmt_f64));
                }
                row
            })
            .collect();
        (header, rows)
    }

    /// Aggregate of metric `name` at grid point `point`.
    pub fn summary(&self, point: usize, name: &str) -> Option<&Summary> {
        let m = self.metric_names.iter().position(|n| *n == name)?;
        self.summaries.get(point)?.get(m)
    }

    fn realization_lines(&self) -> Result<String> {
        let mut text = String::new();
        for o in &self.outcomes {
            let p = &self.points[o.point];
            let (status, error, metrics) = match &o.metrics {
                Ok(values) => {
                    let map = self
                        .metric_names
                        .iter()
                        .zip(values)
                        .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                        .collect();
                    ("ok", None, Some(map))
                }
                Err(e) => ("failed", Some(e.to_string()), None),
            };
            let line = RealizationLine {
                point: o.point,
                n: p.n,
                b_field: p.b_field,
                deviation: p.deviation,
                index: o.index,
                master_seed: o.record.master_seed,
                couplings: &o.record.couplings,
                static_fields: &o.record.static_fields,
                status,
                error,
                metrics,
            };
            text += &serde_json::to_string(&line)
                .map_err(|e| Error::Config(format!("cannot serialize realization: {e}")))?;
            text.push('\n');
        }
        Ok(text)
    }

    fn sweep_suffix(&self, point: usize) -> String {
        if self.points.len() == 1 {
            String::new()
        } else {
            format!("_p{point}")
        }
    }

    /// Writes data tables, per-realization records, sweep exports, optional
    /// plot tables and the manifest into `dir`. Returns the written files.
    pub fn write(&self, dir: &Path, started_unix: f64) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();

        let (header, rows) = self.data_table();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let data = dir.join("data.csv");
        write_csv(&data, &header_refs, &rows)?;
        files.push(data);

        let lines = dir.join("realizations.jsonl");
        std::fs::write(&lines, self.realization_lines()?).map_err(|e| Error::io(&lines, e))?;
        files.push(lines);

        for sweep in &self.sweeps {
            let suffix = self.sweep_suffix(sweep.point);
            let traj_path = dir.join(format!("trajectory{suffix}.csv"));
            let file = std::fs::File::create(&traj_path).map_err(|e| Error::io(&traj_path, e))?;
            sweep
                .trajectory
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| Error::io(&traj_path, e))?;
            files.push(traj_path);
            let plan_path = dir.join(format!("sweep_plan{suffix}.json"));
            write_json(&plan_path, &sweep.plan)?;
            files.push(plan_path);
        }

        if self.config.emit_plot_data {
            files.extend(self.write_plot_data(dir)?);
        }

        let manifest_path = dir.join("manifest.json");
        let mut names: Vec<String> = files
            .iter()
            .filter_map(|f| f.file_name().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        names.push("manifest.json".into());
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            kind: self.kind,
            config: &self.config,
            master_seed: self.config.master_seed,
            seeding: "splitmix64 stream keyed by (master_seed, realization index); couplings drawn before fields",
            unit_system: "hbar = 1; energies and fields in units of the mean coupling J; times in hbar/J",
            realization_indices: [0, self.config.realizations as u64 - 1],
            search: self.config.search_options(),
            free_run: self.config.free_run_options(),
            points: self
                .points
                .iter()
                .map(|p| PointEntry {
                    n: p.n,
                    b_field: p.b_field,
                    deviation: p.deviation,
                    deviation_percent_of_field: 100.0 * p.deviation / p.b_field,
                })
                .collect(),
            metrics: &self.metric_names,
            units: self.total,
            failed: self.failed,
            failures: self
                .outcomes
                .iter()
                .filter_map(|o| {
                    o.metrics.as_ref().err().map(|e| FailureEntry {
                        point: o.point,
                        index: o.index,
                        error: e.to_string(),
                    })
                })
                .collect(),
            files: names,
            started_unix,
            finished_unix: unix_seconds(),
        };
        write_json(&manifest_path, &manifest)?;
        files.push(manifest_path);
        Ok(files)
    }

    fn write_plot_data(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        let mut table = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
            let path = dir.join(name);
            write_csv(&path, header, &rows)?;
            files.push(path);
            Ok(())
        };
        let column = |p: usize, name: &str| {
            self.summary(p, name)
                .map(|s| (s.mean, s.std))
                .unwrap_or((f64::NAN, f64::NAN))
        };
        let by_point = |x: &dyn Fn(&GridPoint) -> f64, metric: &str| -> Vec<Vec<String>> {
            self.points
                .iter()
                .enumerate()
                .map(|(p, point)| {
                    let (m, s) = column(p, metric);
                    vec![fmt_f64(x(point)), fmt_f64(m), fmt_f64(s)]
                })
                .collect()
        };
        match self.kind {
            ExperimentKind::FreeSweepN => {
                table(
                    "plot_tau_f_vs_n.csv",
                    &["n", "tau_f_mean", "tau_f_std"],
                    by_point(&|p| p.n as f64, "tau_f"),
                )?;
                table(
                    "plot_f_max_vs_n.csv",
                    &["n", "f_max_mean", "f_max_std"],
                    by_point(&|p| p.n as f64, "f_max"),
                )?;
            }
            ExperimentKind::CompensationScan => table(
                "plot_f_max_vs_deviation.csv",
                &["deviation", "f_max_mean", "f_max_std"],
                by_point(&|p| p.deviation, "f_max"),
            )?,
            ExperimentKind::LeakageVsField => {
                for n in self.config.chain_lengths() {
                    let rows = self
                        .points
                        .iter()
                        .enumerate()
                        .filter(|(_, point)| point.n == n)
                        .map(|(p, point)| {
                            let (m, s) = column(p, "mean_leakage");
                            vec![fmt_f64(point.b_field), fmt_f64(m), fmt_f64(s)]
                        })
                        .collect();
                    table(
                        &format!("plot_leakage_vs_field_n{n}.csv"),
                        &["b_field", "mean_leakage_mean", "mean_leakage_std"],
                        rows,
                    )?;
                }
            }
            ExperimentKind::MonteCarloFidelity => {
                let rows = self
                    .outcomes
                    .iter()
                    .filter_map(|o| {
                        let v = o.metrics.as_ref().ok()?;
                        Some(vec![o.index.to_string(), fmt_f64(v[3]), fmt_f64(v[7])])
                    })
                    .collect();
                table(
                    "plot_fidelity_by_realization.csv",
                    &["index", "f_max", "mean_leakage"],
                    rows,
                )?;
            }
            ExperimentKind::AdiabaticRun => {
                for sweep in &self.sweeps {
                    let t = &sweep.trajectory;
                    let rows = (0..t.len())
                        .map(|i| {
                            vec![
                                fmt_f64(t.times[i]),
                                fmt_f64(t.occ_last[i]),
                                fmt_f64(t.leakage[i]),
                            ]
                        })
                        .collect();
                    table(
                        &format!(
                            "plot_fidelity_vs_time{}.csv",
                            self.sweep_suffix(sweep.point)
                        ),
                        &["time", "fidelity", "leakage"],
                        rows,
                    )?;
                }
            }
        }
        Ok(files)
    }
}
