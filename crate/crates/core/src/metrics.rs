//! Transfer quality and information-leakage measures.
//!
//! The sender encodes `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`. Only the
//! single-excitation amplitudes evolve; the vacuum is stationary, so every
//! quantity here is a function of the amplitudes and of `(theta, phi)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::AmplitudeState;
use crate::error::{Error, Result};
use crate::free_transfer::Trajectory;

fn unit_interval(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: x,
            domain: "[0, 1]",
        })
    }
}

/// Fidelity averaged over the Bloch sphere of input states, for transfer
/// probability `f = |c_N|^2` and a receiver that corrects the phase of `c_N`.
///
/// The transmitted amplitude is `sqrt(f)`, so the average is
/// `1/3 + (1 + sqrt(f))^2 / 6`.
pub fn average_fidelity(f: f64) -> Result<f64> {
    unit_interval("fidelity", f)?;
    Ok(1.0 / 3.0 + (1.0 + f.sqrt()).powi(2) / 6.0)
}

/// Entanglement of formation between the receiver and a spin that was
/// initially in a singlet with the sender.
pub fn entanglement_of_formation(f: f64) -> Result<f64> {
    unit_interval("fidelity", f)?;
    let root = (1.0 - f).sqrt();
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(h((1.0 + root) / 2.0) + h((1.0 - root) / 2.0))
}

/// Interior occupation `1 - |c_1|^2 - |c_N|^2`, clipped to [0, 1].
pub fn leakage(state: &AmplitudeState) -> f64 {
    (1.0 - state.occ_first() - state.occ_last()).clamp(0.0, 1.0)
}

/// Trapezoidal time average of the leakage over `[t_0, until]`, using the
/// samples that fall inside that window.
pub fn time_averaged_leakage(traj: &Trajectory, until: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    let end = until * (1.0 + 1e-12);
    let n = traj.times.iter().take_while(|&&t| t <= end).count();
    if n < 2 {
        return Ok(traj.leakage[0]);
    }
    let mut area = 0.0;
    for i in 1..n {
        let dt = traj.times[i] - traj.times[i - 1];
        area += 0.5 * dt * (traj.leakage[i] + traj.leakage[i - 1]);
    }
    Ok(area / (traj.times[n - 1] - traj.times[0]))
}

/// Bloch angles of the sender's qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenderState {
    pub theta: f64,
    pub phi: f64,
}

impl SenderState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain {
                name: "theta",
                value: theta,
                domain: "[0, pi]",
            });
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(Error::Domain {
                name: "phi",
                value: phi,
                domain: "[0, 2 pi)",
            });
        }
        Ok(Self { theta, phi })
    }
}

/// Which part of the chain the eavesdropper holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EavesdropperScope {
    /// All interior sites 2..N-1.
    Powerful,
    /// A single interior site, numbered 1..N along the chain.
    Weak(usize),
}

/// Labels of the two basis states an effective matrix is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectiveBasis {
    /// `{|0~>, |Psi~>}`: interior vacuum and the normalized interior
    /// excitation.
    Interior,
    /// `{|0>_n, |1>_n}` of one site.
    Site(usize),
}

/// 2x2 density matrix on the eavesdropper's effective two-dimensional
/// support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDensityMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub basis: EffectiveBasis,
}

impl EffectiveDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.entries[0][0].re + self.entries[1][1].re
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let m = &self.entries;
        let hermitian = (m[0][1] - m[1][0].conj()).norm() <= tol
            && m[0][0].im.abs() <= tol
            && m[1][1].im.abs() <= tol;
        let [lo, _] = self.eigenvalues();
        hermitian && (self.trace() - 1.0).abs() <= tol && lo >= -tol
    }
}

/// Eigenvalues of a 2x2 Hermitian matrix, ascending.
fn hermitian_eigenvalues(m: &[[Complex64; 2]; 2]) -> [f64; 2] {
    let mean = 0.5 * (m[0][0].re + m[1][1].re);
    let half_diff = 0.5 * (m[0][0].re - m[1][1].re);
    let r = (half_diff * half_diff + m[0][1].norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// Trace distance `1/2 ||rho - sigma||_1`.
pub fn trace_distance(rho: &EffectiveDensityMatrix, sigma: &EffectiveDensityMatrix) -> f64 {
    let d: [[Complex64; 2]; 2] =
        std::array::from_fn(|i| std::array::from_fn(|j| rho.entries[i][j] - sigma.entries[i][j]));
    let [a, b] = hermitian_eigenvalues(&d);
    0.5 * (a.abs() + b.abs())
}

/// Normalized interior excitation `|Psi~>`: the amplitudes on sites 2..N-1
/// divided by their norm. `None` when the interior is empty.
pub fn interior_state(state: &AmplitudeState) -> Option<Vec<Complex64>> {
    let n = state.n_sites();
    if n < 3 {
        return None;
    }
    let interior = &state.amplitudes[1..n - 1];
    let norm = interior.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    Some(interior.iter().map(|c| c / norm).collect())
}

/// Weight `a` the eavesdropper sees: `eps` for the powerful one, `|c_n|^2`
/// for a single site.
pub fn eavesdropper_weight(state: &AmplitudeState, scope: EavesdropperScope) -> Result<f64> {
    let n = state.n_sites();
    match scope {
        EavesdropperScope::Powerful => Ok(leakage(state)),
        EavesdropperScope::Weak(site) => {
            if site < 2 || site + 1 > n {
                return Err(Error::ScopeOutOfRange { site, n_sites: n });
            }
            Ok(state.occupation(site - 1))
        }
    }
}

/// Reduced states of the eavesdropper for the sender's state and its
/// orthogonal partner.
pub fn eavesdropper_states(
    state: &AmplitudeState,
    sender: SenderState,
    scope: EavesdropperScope,
) -> Result<(EffectiveDensityMatrix, EffectiveDensityMatrix)> {
    let a = eavesdropper_weight(state, scope)?;
    let basis = match scope {
        EavesdropperScope::Powerful => EffectiveBasis::Interior,
        EavesdropperScope::Weak(n) => EffectiveBasis::Site(n),
    };
    Ok(reduced_pair(a, sender, basis))
}

/// The pair of reduced states parameterized by the visible weight `a`.
pub fn reduced_pair(
    a: f64,
    sender: SenderState,
    basis: EffectiveBasis,
) -> (EffectiveDensityMatrix, EffectiveDensityMatrix) {
    let (s, c) = (0.5 * sender.theta).sin_cos();
    let coherence = Complex64::from_polar(a.sqrt() * c * s, sender.phi);
    let real = |x: f64| Complex64::new(x, 0.0);
    // entries[1][0] is <Psi~| rho |0~>, entries[0][1] its conjugate
    let rho = EffectiveDensityMatrix {
        entries: [
            [real(1.0 - a * s * s), coherence.conj()],
            [coherence, real(a * s * s)],
        ],
        basis,
    };
    let rho_perp = EffectiveDensityMatrix {
        entries: [
            [real(1.0 - a * c * c), -coherence.conj()],
            [-coherence, real(a * c * c)],
        ],
        basis,
    };
    (rho, rho_perp)
}

/// Closed-form trace distance `sqrt(a^2 cos^2 theta + a sin^2 theta)`.
pub fn distinguishability(a: f64, theta: f64) -> Result<f64> {
    unit_interval("a", a)?;
    let (s, c) = theta.sin_cos();
    Ok((a * a * c * c + a * s * s).sqrt())
}

/// Everything measurable on one state, for export next to trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub time: f64,
    pub fidelity: f64,
    pub average_fidelity: f64,
    pub entanglement: f64,
    pub leakage: f64,
    pub sender: SenderState,
    pub distinguishability_powerful: f64,
    /// Largest single-site distinguishability over the interior.
    pub distinguishability_weak_max: f64,
}

impl MetricBundle {
    pub fn evaluate(state: &AmplitudeState, sender: SenderState) -> Result<Self> {
        let f = state.occ_last().clamp(0.0, 1.0);
        let eps = leakage(state);
        let n = state.n_sites();
        let mut weak_max: f64 = 0.0;
        for site in 2..n {
            let a = eavesdropper_weight(state, EavesdropperScope::Weak(site))?;
            weak_max = weak_max.max(distinguishability(a.min(1.0), sender.theta)?);
        }
        Ok(Self {
            time: state.time,
            fidelity: f,
            average_fidelity: average_fidelity(f)?,
            entanglement: entanglement_of_formation(f)?,
            leakage: eps,
            sender,
            distinguishability_powerful: distinguishability(eps, sender.theta)?,
            distinguishability_weak_max: weak_max,
        })
    }
}
