//! Free evolution at fixed terminal fields.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::chain::{chain_spectrum, AmplitudeState, ChainRealization, SiteOnePropagator};
use crate::error::{Error, Result};
use crate::output::fmt_f64;
use crate::resonance::tuned_chain;

/// Sampled evolution of the single-excitation amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeState>,
    pub occ_first: Vec<f64>,
    /// Also the transfer fidelity `F = |c_N|^2`.
    pub occ_last: Vec<f64>,
    pub leakage: Vec<f64>,
}

impl Trajectory {
    /// Panics if the states are not in strictly increasing time order.
    pub fn from_states(states: Vec<AmplitudeState>) -> Self {
        assert!(
            states.windows(2).all(|w| w[0].time < w[1].time),
            "trajectory times must be strictly increasing"
        );
        let times = states.iter().map(|s| s.time).collect();
        let occ_first = states.iter().map(AmplitudeState::occ_first).collect();
        let occ_last = states.iter().map(AmplitudeState::occ_last).collect();
        let leakage = states.iter().map(crate::metrics::leakage).collect();
        Self {
            times,
            states,
            occ_first,
            occ_last,
            leakage,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn fidelity(&self) -> &[f64] {
        &self.occ_last
    }

    pub fn n_sites(&self) -> usize {
        self.states.first().map_or(0, AmplitudeState::n_sites)
    }

    pub fn last(&self) -> Option<&AmplitudeState> {
        self.states.last()
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            (self.times[a] - t)
                .abs()
                .total_cmp(&(self.times[b] - t).abs())
        })
    }

    /// CSV with columns `time, re_c1, im_c1, ..., re_cN, im_cN, occ_first,
    /// occ_last, eps`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.n_sites();
        let mut header = vec!["time".to_string()];
        for k in 1..=n {
            header.push(format!("re_c{k}"));
            header.push(format!("im_c{k}"));
        }
        header.extend(["occ_first", "occ_last", "eps"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![fmt_f64(self.times[i])];
            for c in &self.states[i].amplitudes {
                row.push(fmt_f64(c.re));
                row.push(fmt_f64(c.im));
            }
            row.push(fmt_f64(self.occ_first[i]));
            row.push(fmt_f64(self.occ_last[i]));
            row.push(fmt_f64(self.leakage[i]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `tau_f = pi / (2 V)` in units of hbar/J.
pub fn free_transfer_time(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::VanishingCoupling(v));
    }
    Ok(std::f64::consts::FRAC_PI_2 / v)
}

/// Sampling defaults for free runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRunOptions {
    /// Horizon in units of `tau_f`.
    pub horizon_factor: f64,
    /// Samples per `tau_f`.
    pub samples_per_tf: usize,
}

impl Default for FreeRunOptions {
    fn default() -> Self {
        Self {
            horizon_factor: 1.5,
            samples_per_tf: 500,
        }
    }
}

impl FreeRunOptions {
    /// `(horizon, dt)` for a given free transfer time.
    pub fn horizon_and_step(&self, tau_f: f64) -> (f64, f64) {
        (
            self.horizon_factor * tau_f,
            tau_f / self.samples_per_tf as f64,
        )
    }
}

/// Evolves `|1>` exactly under the chain with `B_1 = b_mean + delta_b` and
/// `B_N = b_mean`, sampling at `0, dt, 2 dt, ...` up to `horizon`.
pub fn simulate_free(
    chain: &ChainRealization,
    b_mean: f64,
    delta_b: f64,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain {
            name: "horizon",
            value: horizon,
            domain: "(0, inf)",
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain {
            name: "dt",
            value: dt,
            domain: "(0, inf)",
        });
    }
    let spec = chain_spectrum(&tuned_chain(chain, b_mean, delta_b))?;
    let prop = SiteOnePropagator::new(&spec);
    let steps = (horizon / dt * (1.0 + 1e-12)).floor() as usize;
    let states = (0..=steps).map(|i| prop.state_at(dt * i as f64)).collect();
    Ok(Trajectory::from_states(states))
}

/// Largest sampled fidelity and its time, refined by a parabola through the
/// maximum and its two neighbours when both exist.
pub fn peak_fidelity(traj: &Trajectory) -> Result<(f64, f64)> {
    let f = traj.fidelity();
    if f.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    let mut i = 0;
    for (k, &v) in f.iter().enumerate() {
        if v > f[i] {
            i = k;
        }
    }
    if i == 0 || i + 1 == f.len() {
        return Ok((f[i], traj.times[i]));
    }
    let (t0, t1, t2) = (traj.times[i - 1], traj.times[i], traj.times[i + 1]);
    match parabola_vertex((t0, f[i - 1]), (t1, f[i]), (t2, f[i + 1])) {
        Some((t, v)) if t >= t0 && t <= t2 => Ok((v.clamp(f[i], 1.0), t)),
        _ => Ok((f[i], t1)),
    }
}

/// Vertex of the parabola through three points with distinct abscissae.
fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<(f64, f64)> {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let a = (d1 - d0) / (x2 - x0);
    if !(a < 0.0) {
        return None;
    }
    let b = d0 - a * (x0 + x1);
    let x = -b / (2.0 * a);
    let y = y1 + d0 * (x - x1) + a * (x - x0) * (x - x1);
    Some((x, y))
}

/// Peak of the slow transfer oscillation.
///
/// `F(t)` is the slow doublet oscillation modulated by fast beating against
/// the band. This takes the highest local maximum of the sampled fidelity and
/// fits a parabola through it and the neighbouring local maxima on either
/// side, which tracks the envelope rather than a single beat. Needs the
/// sampling to resolve the beating; returns `None` when fewer than three
/// local maxima are available around the top one.
pub fn envelope_peak(traj: &Trajectory) -> Option<(f64, f64)> {
    let f = traj.fidelity();
    let maxima: Vec<usize> = (1..f.len().saturating_sub(1))
        .filter(|&k| f[k] > f[k - 1] && f[k] >= f[k + 1])
        .collect();
    let top = (0..maxima.len()).max_by(|&a, &b| f[maxima[a]].total_cmp(&f[maxima[b]]))?;
    if top == 0 || top + 1 == maxima.len() {
        return None;
    }
    let pt = |m: usize| {
        let k = maxima[m];
        let (t, v) = parabola_vertex(
            (traj.times[k - 1], f[k - 1]),
            (traj.times[k], f[k]),
            (traj.times[k + 1], f[k + 1]),
        )
        .unwrap_or((traj.times[k], f[k]));
        (t, v)
    };
    parabola_vertex(pt(top - 1), pt(top), pt(top + 1))
}

/// Summary of one free run at the compensation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRunSummary {
    pub tau_f: f64,
    pub f_max: f64,
    pub t_at_max: f64,
    pub mean_leakage: f64,
}

/// Runs the free protocol for a chain whose resonance has already been
/// located, with the compensating field offset by `deviation`.
pub fn run_free(
    chain: &ChainRealization,
    b_mean: f64,
    delta_b_star: f64,
    v: f64,
    deviation: f64,
    opts: &FreeRunOptions,
) -> Result<(Trajectory, FreeRunSummary)> {
    let tau_f = free_transfer_time(v)?;
    let (horizon, dt) = opts.horizon_and_step(tau_f);
    let traj = simulate_free(chain, b_mean, delta_b_star + deviation, horizon, dt)?;
    let (f_max, t_at_max) = peak_fidelity(&traj)?;
    let mean_leakage = crate::metrics::time_averaged_leakage(&traj, tau_f)?;
    Ok((
        traj,
        FreeRunSummary {
            tau_f,
            f_max,
            t_at_max,
            mean_leakage,
        },
    ))
}
