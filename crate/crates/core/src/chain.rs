//! Single-excitation XY spin chain: Hamiltonian, spectrum and exact
//! propagation in the eigenbasis.
//!
//! Units throughout the crate: hbar = 1, energies in units of the mean
//! coupling J, times in hbar/J.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, RealMatrix};

/// One concrete chain: couplings, static site fields and the two applied
/// terminal fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRealization {
    /// `J_k` between sites k and k+1, length N-1.
    pub couplings: Vec<f64>,
    /// Static (random) field on every site, length N.
    pub static_fields: Vec<f64>,
    /// Applied field on the sender site.
    pub ext_field_first: f64,
    /// Applied field on the receiver site.
    pub ext_field_last: f64,
}

impl ChainRealization {
    pub fn new(
        couplings: Vec<f64>,
        static_fields: Vec<f64>,
        ext_field_first: f64,
        ext_field_last: f64,
    ) -> Result<Self> {
        let chain = Self {
            couplings,
            static_fields,
            ext_field_first,
            ext_field_last,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Uniform couplings `J = 1`, no static disorder, both terminal fields
    /// equal to `terminal_field`.
    pub fn homogeneous(n_sites: usize, terminal_field: f64) -> Self {
        assert!(n_sites >= 2, "a chain needs at least two sites");
        Self {
            couplings: vec![1.0; n_sites - 1],
            static_fields: vec![0.0; n_sites],
            ext_field_first: terminal_field,
            ext_field_last: terminal_field,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.static_fields.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.static_fields.len();
        if n < 2 {
            return Err(Error::InvalidChain(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        if self.couplings.len() != n - 1 {
            return Err(Error::InvalidChain(format!(
                "{} couplings for {} sites (expected {})",
                self.couplings.len(),
                n,
                n - 1
            )));
        }
        let all_finite = self
            .couplings
            .iter()
            .chain(&self.static_fields)
            .chain([&self.ext_field_first, &self.ext_field_last])
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidChain("non-finite entry".into()));
        }
        Ok(())
    }

    /// Copy of this chain with the applied terminal fields replaced.
    pub fn with_terminal_fields(&self, first: f64, last: f64) -> Self {
        Self {
            ext_field_first: first,
            ext_field_last: last,
            ..self.clone()
        }
    }

    /// Copy with every energy multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            couplings: self.couplings.iter().map(|j| j * s).collect(),
            static_fields: self.static_fields.iter().map(|b| b * s).collect(),
            ext_field_first: self.ext_field_first * s,
            ext_field_last: self.ext_field_last * s,
        }
    }

    /// Site-reversed chain (k -> N+1-k).
    pub fn mirrored(&self) -> Self {
        Self {
            couplings: self.couplings.iter().rev().copied().collect(),
            static_fields: self.static_fields.iter().rev().copied().collect(),
            ext_field_first: self.ext_field_last,
            ext_field_last: self.ext_field_first,
        }
    }
}

/// Tridiagonal Hamiltonian of the chain in the site basis.
pub fn build_hamiltonian(chain: &ChainRealization) -> RealMatrix {
    let n = chain.n_sites();
    let mut h = RealMatrix::zeros(n);
    for (k, b) in chain.static_fields.iter().enumerate() {
        h[(k, k)] = *b;
    }
    h[(0, 0)] += chain.ext_field_first;
    h[(n - 1, n - 1)] += chain.ext_field_last;
    for (k, j) in chain.couplings.iter().enumerate() {
        h[(k, k + 1)] = *j;
        h[(k + 1, k)] = *j;
    }
    h
}

/// Eigen-decomposition of a chain Hamiltonian with the terminal doublet
/// identified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: RealMatrix,
    /// (upper, lower) doublet state indices.
    pub doublet_indices: (usize, usize),
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Component `site` of eigenvector `j`.
    pub fn component(&self, site: usize, j: usize) -> f64 {
        self.eigenvectors[(site, j)]
    }

    /// Energy splitting of the doublet (non-negative).
    pub fn doublet_gap(&self) -> f64 {
        let (hi, lo) = self.doublet_indices;
        (self.eigenvalues[hi] - self.eigenvalues[lo]).abs()
    }
}

/// Diagonalizes a symmetric chain Hamiltonian.
pub fn diagonalize(h: &RealMatrix) -> Result<Spectrum> {
    if !h.is_symmetric() {
        return Err(Error::InvalidChain("Hamiltonian is not symmetric".into()));
    }
    if h.dim() < 2 {
        return Err(Error::InvalidChain("need at least 2 sites".into()));
    }
    let (eigenvalues, eigenvectors) = symmetric_eigen(h)?;
    let n = eigenvalues.len();
    let mut doublet = (n - 1, n - 2);
    // exact ties: the state with more weight on site 1 is listed first
    if eigenvalues[n - 1] == eigenvalues[n - 2]
        && eigenvectors[(0, n - 2)].abs() > eigenvectors[(0, n - 1)].abs()
    {
        doublet = (n - 2, n - 1);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        doublet_indices: doublet,
    })
}

/// Convenience: build and diagonalize in one step.
pub fn chain_spectrum(chain: &ChainRealization) -> Result<Spectrum> {
    diagonalize(&build_hamiltonian(chain))
}

/// Doublet indices together with the isolation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubletInfo {
    pub upper: usize,
    pub lower: usize,
    /// Gap between the lower doublet level and the highest band level.
    /// Infinite when the chain has no interior states.
    pub guard_gap: f64,
    pub splitting: f64,
}

impl DoubletInfo {
    pub fn is_isolated(&self) -> bool {
        self.guard_gap >= self.splitting
    }
}

/// Identifies the terminal doublet and reports how well it is separated from
/// the band.
pub fn isolated_doublet(spec: &Spectrum) -> DoubletInfo {
    let (upper, lower) = spec.doublet_indices;
    let n = spec.dim();
    let splitting = spec.doublet_gap();
    let guard_gap = if n > 2 {
        spec.eigenvalues[n - 2] - spec.eigenvalues[n - 3]
    } else {
        f64::INFINITY
    };
    DoubletInfo {
        upper,
        lower,
        guard_gap,
        splitting,
    }
}

/// Like [`isolated_doublet`] but fails when the doublet is not separated
/// from the band by more than its own splitting.
pub fn require_isolated_doublet(spec: &Spectrum) -> Result<DoubletInfo> {
    let info = isolated_doublet(spec);
    if info.is_isolated() {
        Ok(info)
    } else {
        Err(Error::IsolationViolated {
            guard_gap: info.guard_gap,
            splitting: info.splitting,
        })
    }
}

/// Single-excitation amplitudes `c_k` at a given time. The vacuum component
/// is not tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl AmplitudeState {
    /// Excitation localized on `site` (0-based) at t = 0.
    pub fn localized(n_sites: usize, site: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            time: 0.0,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn occupation(&self, site: usize) -> f64 {
        self.amplitudes[site].norm_sqr()
    }

    pub fn occ_first(&self) -> f64 {
        self.occupation(0)
    }

    pub fn occ_last(&self) -> f64 {
        self.occupation(self.n_sites() - 1)
    }
}

/// Exact propagation: `c(t) = sum_j exp(-i E_j t) v_j <v_j, c(0)>`.
///
/// `t` is the elapsed time; the returned state carries `initial.time + t`.
pub fn propagate(spec: &Spectrum, initial: &AmplitudeState, t: f64) -> AmplitudeState {
    let n = spec.dim();
    debug_assert_eq!(n, initial.n_sites());
    if t == 0.0 {
        return initial.clone();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let overlap: Complex64 = (0..n)
            .map(|k| initial.amplitudes[k] * spec.component(k, j))
            .sum();
        if overlap == Complex64::new(0.0, 0.0) {
            continue;
        }
        let coeff = overlap * Complex64::from_polar(1.0, -spec.eigenvalues[j] * t);
        for (k, c) in out.iter_mut().enumerate() {
            *c += coeff * spec.component(k, j);
        }
    }
    AmplitudeState {
        amplitudes: out,
        time: initial.time + t,
    }
}

/// Propagator specialized to the |1> initial state, reused across many
/// sample times.
#[derive(Debug, Clone)]
pub(crate) struct SiteOnePropagator<'a> {
    spec: &'a Spectrum,
    weights: Vec<f64>,
}

impl<'a> SiteOnePropagator<'a> {
    pub(crate) fn new(spec: &'a Spectrum) -> Self {
        let weights = (0..spec.dim()).map(|j| spec.component(0, j)).collect();
        Self { spec, weights }
    }

    pub(crate) fn state_at(&self, t: f64) -> AmplitudeState {
        let n = self.spec.dim();
        if t == 0.0 {
            return AmplitudeState::localized(n, 0);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (j, w) in self.weights.iter().enumerate() {
            let coeff = Complex64::from_polar(*w, -self.spec.eigenvalues[j] * t);
            for (k, c) in out.iter_mut().enumerate() {
                *c += coeff * self.spec.component(k, j);
            }
        }
        AmplitudeState {
            amplitudes: out,
            time: t,
        }
    }
}
