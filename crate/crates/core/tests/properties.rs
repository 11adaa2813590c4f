use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use spinxfer::disorder::RealizationStream;
use spinxfer::metrics::EavesdropperScope;
use spinxfer::{
    average_fidelity, build_hamiltonian, chain_spectrum, distinguishability, eavesdropper_states,
    entanglement_of_formation, find_anticrossing, propagate, trace_distance, AmplitudeState,
    ChainRealization, DisorderSpec, SearchOptions, SenderState,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(2016),
        ..ProptestConfig::default()
    }
}

fn chain_strategy() -> impl Strategy<Value = ChainRealization> {
    (3usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(0.6f64..1.4, n - 1),
            prop::collection::vec(-0.3f64..0.3, n),
            3.0f64..8.0,
            -0.5f64..0.5,
        )
            .prop_map(|(j, b, field, skew)| {
                ChainRealization::new(j, b, field + skew, field).unwrap()
            })
    })
}

fn random_state(n: usize, seed: u64) -> AmplitudeState {
    let mut stream = RealizationStream::new(seed, 0);
    let mut state = AmplitudeState::localized(n, 0);
    for c in &mut state.amplitudes {
        *c = num_complex::Complex64::new(
            stream.next_standard_normal(),
            stream.next_standard_normal(),
        );
    }
    let norm = state.norm_sqr().sqrt();
    for c in &mut state.amplitudes {
        *c /= norm;
    }
    state
}

fn max_diff(a: &AmplitudeState, b: &AmplitudeState) -> f64 {
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn hamiltonian_is_symmetric_and_reconstructed(chain in chain_strategy()) {
        let h = build_hamiltonian(&chain);
        prop_assert!(h.is_symmetric());
        let spec = chain_spectrum(&chain).unwrap();
        let n = spec.dim();
        let mut err: f64 = 0.0;
        for (r, row) in h.rows().enumerate() {
            for (c, &value) in row.iter().enumerate() {
                let rebuilt: f64 = (0..n)
                    .map(|j| spec.component(r, j) * spec.eigenvalues[j] * spec.component(c, j))
                    .sum();
                err = err.max((rebuilt - value).abs());
            }
        }
        prop_assert!(err <= 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn propagation_is_unitary_and_composes(
        chain in chain_strategy(),
        seed in any::<u64>(),
        t1 in 0.0f64..500.0,
        t2 in 0.0f64..500.0,
    ) {
        let spec = chain_spectrum(&chain).unwrap();
        let psi = random_state(chain.n_sites(), seed);
        let direct = propagate(&spec, &psi, t1 + t2);
        let stepped = propagate(&spec, &propagate(&spec, &psi, t1), t2);
        prop_assert!((direct.norm_sqr() - 1.0).abs() <= 1e-9);
        prop_assert!(max_diff(&direct, &stepped) <= 1e-9);
    }

    #[test]
    fn mirror_symmetric_chains_commute_with_reflection(
        n in 3usize..10,
        pool_j in prop::collection::vec(0.6f64..1.4, 5),
        pool_b in prop::collection::vec(-0.3f64..0.3, 5),
        terminal in 3.0f64..8.0,
        t in 0.0f64..200.0,
    ) {
        let couplings: Vec<f64> = (0..n - 1).map(|k| pool_j[k.min(n - 2 - k)]).collect();
        let static_fields: Vec<f64> = (0..n).map(|k| pool_b[k.min(n - 1 - k)]).collect();
        let chain = ChainRealization::new(couplings, static_fields, terminal, terminal).unwrap();
        prop_assert_eq!(&chain, &chain.mirrored());

        let spec = chain_spectrum(&chain).unwrap();
        let from_first = propagate(&spec, &AmplitudeState::localized(n, 0), t);
        let from_last = propagate(&spec, &AmplitudeState::localized(n, n - 1), t);
        for k in 0..n {
            let d = from_first.amplitudes[k].norm() - from_last.amplitudes[n - 1 - k].norm();
            prop_assert!(d.abs() <= 1e-9);
        }
    }

    #[test]
    fn trace_distance_matches_closed_form(
        a in 0.0f64..=1.0,
        theta in 0.0f64..std::f64::consts::PI,
        phi in 0.0f64..std::f64::consts::TAU,
        n in 4usize..9,
        seed in any::<u64>(),
    ) {
        let sender = SenderState::new(theta, phi).unwrap();
        let d = distinguishability(a, theta).unwrap();
        let d0 = distinguishability(a, 0.0).unwrap();
        prop_assert!(d >= d0 - 1e-15);
        prop_assert!((0.5..=1.0).contains(&(0.5 * (1.0 + d))));
        let bigger = distinguishability((a + 0.1).min(1.0), theta).unwrap();
        prop_assert!(bigger >= d - 1e-15);

        // on an actual state, the closed form uses the weight the scope sees
        let state = random_state(n, seed);
        let eps: f64 = (1..n - 1).map(|k| state.occupation(k)).sum();
        let (rho, rho_perp) =
            eavesdropper_states(&state, sender, EavesdropperScope::Powerful).unwrap();
        let expected = distinguishability(eps.min(1.0), theta).unwrap();
        prop_assert!((trace_distance(&rho, &rho_perp) - expected).abs() <= 1e-10);

        let site = 2 + (seed as usize) % (n - 2);
        let (rho, rho_perp) =
            eavesdropper_states(&state, sender, EavesdropperScope::Weak(site)).unwrap();
        let weak = trace_distance(&rho, &rho_perp);
        let weak_expected = distinguishability(state.occupation(site - 1), theta).unwrap();
        prop_assert!((weak - weak_expected).abs() <= 1e-10);
        prop_assert!(weak <= expected + 1e-12);
    }

    #[test]
    fn fidelity_measures_are_monotone(f in 0.0f64..1.0, step in 1e-6f64..0.1) {
        let g = (f + step).min(1.0);
        prop_assert!(average_fidelity(g).unwrap() >= average_fidelity(f).unwrap());
        prop_assert!(
            entanglement_of_formation(g).unwrap() >= entanglement_of_formation(f).unwrap() - 1e-15
        );
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn compensation_scales_with_energy(chain in chain_strategy(), s in 0.3f64..3.0) {
        let field = chain.ext_field_last;
        let window = |halfwidth| SearchOptions {
            halfwidth,
            ..SearchOptions::default()
        };
        let base = find_anticrossing(&chain, field, &window(2.0)).unwrap();
        let opts = window(2.0 * s);
        let scaled = find_anticrossing(&chain.scaled(s), s * field, &opts).unwrap();
        prop_assert!((scaled.delta_b_star / s - base.delta_b_star).abs() <= 1e-8);
        prop_assert!((scaled.half_splitting / s - base.half_splitting).abs() <= 1e-8 * base.half_splitting.max(1e-6));
        prop_assert!((scaled.localization_defect - base.localization_defect).abs() <= 1e-8);
    }
}

#[test]
fn effective_coupling_decreases_with_length() {
    for field in [3.0, 5.0] {
        let mut previous = f64::INFINITY;
        for n in 3..=15 {
            let chain = ChainRealization::homogeneous(n, field);
            let v = find_anticrossing(&chain, field, &SearchOptions::default())
                .unwrap()
                .half_splitting;
            assert!(v < previous, "V(N={n}) = {v} at B = {field}");
            previous = v;
        }
    }
}

#[test]
fn concatenated_streams_have_no_serial_correlation() {
    let draws: Vec<f64> = (0..1000u64)
        .flat_map(|index| {
            let mut stream = RealizationStream::new(2016, index);
            (0..100).map(move |_| stream.next_uniform())
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var: f64 = draws.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = draws
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum();
    let r = cov / var;
    assert!(r.abs() < 0.05, "lag-one correlation {r}");
    assert!((mean - 0.5).abs() < 0.005);
}

#[test]
fn sampled_disorder_has_requested_moments() {
    let spec = DisorderSpec::from_variances(12, 0.1, 0.5, 5.0, 7).unwrap();
    let (mut js, mut bs) = (Vec::new(), Vec::new());
    for index in 0..2000 {
        let chain = spec.sample_realization(index);
        js.extend(chain.couplings);
        bs.extend(chain.static_fields);
    }
    let moments = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        (m, v)
    };
    let (mj, vj) = moments(&js);
    let (mb, vb) = moments(&bs);
    assert!((mj - 1.0).abs() < 0.005, "coupling mean {mj}");
    assert!((vj - 0.1).abs() < 0.004, "coupling variance {vj}");
    assert!(mb.abs() < 0.01, "field mean {mb}");
    assert!((vb - 0.5).abs() < 0.02, "field variance {vb}");
}
