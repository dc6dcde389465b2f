mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use qvzne::qv::{heavy_set, ideal_distribution};
use qvzne::sim::{exact_heavy_prob, readout_distribution, sample_counts, simulate, DensityState, NoiseModel};
use qvzne::transpile::rebase_only;
use qvzne::zne::{combine_local_ensemble, hop_from_counts};
use qvzne::folding::fold_local_ensemble;
use qvzne::generate_qv_circuit;

fn noisy(p2: f64, p1: f64, flip: f64) -> NoiseModel {
    NoiseModel {
        p2,
        p1: Some(p1),
        readout_flip: flip,
        idle_z_rate: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn noisy_states_stay_physical(c in common::native_circuit(4, 40), p2 in 0.0f64..=1.0, p1 in 0.0f64..=1.0) {
        let rho = simulate(&c, &noisy(p2, p1, 0.0)).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.trace().im.abs() < 1e-10);
        prop_assert!(rho.hermiticity_defect() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn counts_sum_to_shots(c in common::native_circuit(3, 20), shots in 1u64..5000, seed in any::<u64>(), flip in 0.0f64..=0.5) {
        let rho = simulate(&c, &NoiseModel::depolarizing(0.05)).unwrap();
        let counts = sample_counts(&rho, shots, flip, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(counts.values().sum::<u64>(), shots);
        prop_assert!(counts.keys().all(|k| k.len() == c.n_qubits()));
        prop_assert!(counts.values().all(|&k| k > 0));
    }
}

#[test]
fn noiseless_diagonal_matches_ideal_distribution() {
    for seed in 0..5 {
        let c = rebase_only(&generate_qv_circuit(4, seed).unwrap().circuit).unwrap();
        let rho = simulate(&c, &NoiseModel::noiseless()).unwrap();
        let p = ideal_distribution(&c).unwrap();
        for (a, b) in rho.diagonal().iter().zip(&p) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_heavy_prob_matches_sampling() {
    let c = rebase_only(&generate_qv_circuit(4, 9).unwrap().circuit).unwrap();
    let heavy = heavy_set(&ideal_distribution(&c).unwrap()).unwrap();
    let rho = simulate(&c, &NoiseModel::depolarizing(0.03)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (shots, flip) in [(1_000_000u64, 0.0), (100_000, 0.02)] {
        let exact = exact_heavy_prob(&rho, &heavy, flip).unwrap();
        let counts = sample_counts(&rho, shots, flip, &mut rng).unwrap();
        let est = hop_from_counts(&counts, &heavy).unwrap();
        let se = (exact * (1.0 - exact) / shots as f64).sqrt();
        assert!((est - exact).abs() < 3.0 * se, "{est} vs {exact} ± {se}");
    }
}

#[test]
fn half_flip_readout_is_uniform() {
    let rho = DensityState::new(3).unwrap();
    let p = readout_distribution(&rho, 0.5);
    assert!(p.iter().all(|v| (v - 0.125).abs() < 1e-15));
    let shots = 100_000u64;
    let counts = sample_counts(&rho, shots, 0.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(counts.len(), 8);
    // Pearson χ² with 7 degrees of freedom; 99.9% quantile is 24.3
    let expected = shots as f64 / 8.0;
    let chi2: f64 = counts.values().map(|&k| (k as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 24.3, "χ² = {chi2}");
}

#[test]
fn pure_ground_state_samples_zero() {
    let rho = DensityState::new(2).unwrap();
    let counts = sample_counts(&rho, 500, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(counts.len(), 1);
    assert_eq!(counts["00"], 500);
}

#[test]
fn local_ensemble_mean_tracks_exact_average() {
    let qv = generate_qv_circuit(4, 2).unwrap();
    let c = rebase_only(&qv.circuit).unwrap();
    let heavy = heavy_set(&ideal_distribution(&c).unwrap()).unwrap();
    let noise = NoiseModel::depolarizing(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let folds = fold_local_ensemble(&c, 1.5, 10, &mut rng).unwrap();
    let shots = 20_000u64;
    let mut exact = Vec::new();
    let mut sampled = Vec::new();
    for f in &folds {
        let rho = simulate(&f.circuit, &noise).unwrap();
        exact.push(exact_heavy_prob(&rho, &heavy, 0.0).unwrap());
        let counts = sample_counts(&rho, shots, 0.0, &mut rng).unwrap();
        sampled.push(hop_from_counts(&counts, &heavy).unwrap());
    }
    let e = combine_local_ensemble(&exact).unwrap();
    let s = combine_local_ensemble(&sampled).unwrap();
    let se = (e * (1.0 - e) / (shots * 10) as f64).sqrt();
    assert!((s - e).abs() < 3.0 * se, "{s} vs {e} ± {se}");
}
