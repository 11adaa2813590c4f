//! Reproducible Gaussian disorder.
//!
//! # Generator
//!
//! Every realization owns an independent stream derived only from
//! `(master_seed, index)`, so realizations can be drawn in any order or in
//! parallel and still be bit-identical.
//!
//! * `mix(z)` is the SplitMix64 finalizer:
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!    z *= 0x94D049BB133111EB; z ^= z >> 31` (wrapping arithmetic).
//! * Stream key: `key = mix(master_seed ^ mix(index + GAMMA))` with
//!   `GAMMA = 0x9E3779B97F4A7C15`.
//! * The k-th 64-bit word (k = 0, 1, ...) is `mix(key + (k + 1) * GAMMA)`.
//! * Uniform variates in (0, 1]: `((word >> 11) + 1) * 2^-53`.
//! * Normal variates by Box-Muller on consecutive uniform pairs `(u1, u2)`:
//!   `r = sqrt(-2 ln u1)`, yielding `r cos(2 pi u2)` then `r sin(2 pi u2)`.
//!
//! A realization consumes normals in this order: the N-1 couplings
//! `J_1..J_{N-1}`, then the N static fields `B_1..B_N`.

use serde::{Deserialize, Serialize};

use crate::chain::ChainRealization;
use crate::error::{Error, Result};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream for one realization.
#[derive(Debug, Clone)]
pub struct RealizationStream {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl RealizationStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self {
            key: mix(master_seed ^ mix(index.wrapping_add(GAMMA))),
            counter: 0,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in (0, 1].
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Parameters of the disorder ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub n_sites: usize,
    /// Mean coupling; 1 in natural units.
    pub mean_coupling: f64,
    pub sigma_j: f64,
    pub sigma_b: f64,
    /// Applied receiver-side field; the sender side is set by the
    /// resonance search.
    pub mean_terminal_field: f64,
    pub master_seed: u64,
}

impl DisorderSpec {
    /// Builds a spec from normalized variances `(sigma_J/J)^2` and
    /// `(sigma_B/J)^2` with `J = 1`.
    pub fn from_variances(
        n_sites: usize,
        sigma_j2: f64,
        sigma_b2: f64,
        mean_terminal_field: f64,
        master_seed: u64,
    ) -> Result<Self> {
        for (name, v) in [("sigma_j2", sigma_j2), ("sigma_b2", sigma_b2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    domain: "[0, inf)",
                });
            }
        }
        let spec = Self {
            n_sites,
            mean_coupling: 1.0,
            sigma_j: sigma_j2.sqrt(),
            sigma_b: sigma_b2.sqrt(),
            mean_terminal_field,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn homogeneous(n_sites: usize, mean_terminal_field: f64) -> Self {
        Self {
            n_sites,
            mean_coupling: 1.0,
            sigma_j: 0.0,
            sigma_b: 0.0,
            mean_terminal_field,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::Domain {
                name: "n_sites",
                value: self.n_sites as f64,
                domain: "[2, inf)",
            });
        }
        let checks = [
            ("sigma_j", self.sigma_j),
            ("sigma_b", self.sigma_b),
            ("mean_terminal_field", self.mean_terminal_field),
        ];
        for (name, v) in checks {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    domain: "[0, inf)",
                });
            }
        }
        if !(self.mean_coupling > 0.0 && self.mean_coupling.is_finite()) {
            return Err(Error::Domain {
                name: "mean_coupling",
                value: self.mean_coupling,
                domain: "(0, inf)",
            });
        }
        Ok(())
    }

    /// `(sigma_J / J)^2`
    pub fn normalized_sigma_j2(&self) -> f64 {
        (self.sigma_j / self.mean_coupling).powi(2)
    }

    /// `(sigma_B / J)^2`
    pub fn normalized_sigma_b2(&self) -> f64 {
        (self.sigma_b / self.mean_coupling).powi(2)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.sigma_j == 0.0 && self.sigma_b == 0.0
    }

    /// Realization number `index` of the ensemble. The receiver field is set
    /// to the mean terminal field; the sender field starts at the same value
    /// and is adjusted later by the compensation search.
    ///
    /// Negative couplings that the Gaussian occasionally produces are kept.
    pub fn sample_realization(&self, index: u64) -> ChainRealization {
        let n = self.n_sites;
        let mut stream = RealizationStream::new(self.master_seed, index);
        let couplings = (0..n - 1)
            .map(|_| self.mean_coupling + self.sigma_j * stream.next_standard_normal())
            .collect();
        let static_fields = (0..n)
            .map(|_| self.sigma_b * stream.next_standard_normal())
            .collect();
        ChainRealization {
            couplings,
            static_fields,
            ext_field_first: self.mean_terminal_field,
            ext_field_last: self.mean_terminal_field,
        }
    }
}

/// JSON-serializable record of a sampled realization for audit and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub master_seed: u64,
    pub index: u64,
    pub couplings: Vec<f64>,
    pub static_fields: Vec<f64>,
}

impl RealizationRecord {
    pub fn new(spec: &DisorderSpec, index: u64, chain: &ChainRealization) -> Self {
        Self {
            master_seed: spec.master_seed,
            index,
            couplings: chain.couplings.clone(),
            static_fields: chain.static_fields.clone(),
        }
    }
}
