//! Shared inputs for the benchmarks.

use spinxfer::{find_anticrossing, ChainRealization, DisorderSpec, ResonanceResult, SearchOptions};

/// Applied terminal field used throughout the benchmarks.
pub const FIELD: f64 = 5.0;

/// Disordered chain of `n` sites with its located anticrossing.
pub fn compensated_chain(n: usize, seed: u64) -> (ChainRealization, ResonanceResult) {
    let spec = DisorderSpec::from_variances(n, 0.1, 0.5, FIELD, seed).expect("valid spec");
    let chain = spec.sample_realization(0);
    let opts = SearchOptions::for_sigma_b(spec.sigma_b);
    let res = find_anticrossing(&chain, FIELD, &opts).expect("resonance found");
    (chain, res)
}
