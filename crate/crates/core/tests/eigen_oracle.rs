//! Power iteration against a dense Hermitian eigendecomposition.

mod common;

use common::{alignment, dense_eigen, random_gapped_psd};
use mimo_exposure::antenna::ArrayConfig;
use mimo_exposure::beamforming::{dominant_eigenvector, dominant_eigenvector_dense, PowerIterationOptions};
use mimo_exposure::channel::{covariance_from_clusters, generate_clusters};
use mimo_exposure::scenario::{default_scenario, drop_ue, ScenarioKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dense_solver_matches_oracle_on_gapped_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = PowerIterationOptions::default();
    for case in 0..60 {
        let n = rng.random_range(4..=64);
        let m = random_gapped_psd(&mut rng, n, case);
        let oracle = dense_eigen(&m);
        let got = dominant_eigenvector_dense(&m, &opts).unwrap();
        let rel = (got.eigenvalue - oracle[0].0).abs() / oracle[0].0;
        assert!(rel <= 1e-8, "case {case} n {n}: eigenvalue error {rel:e}");
        let align = alignment(got.beamformer.weights(), &oracle[0].1);
        assert!(align >= 1.0 - 1e-9, "case {case} n {n}: alignment {align}");
    }
}

#[test]
fn factored_solver_matches_oracle_on_channel_covariances() {
    let array = ArrayConfig::default();
    let opts = PowerIterationOptions {
        max_iter: 40_000,
        ..Default::default()
    };
    for kind in [ScenarioKind::Uma, ScenarioKind::Umi] {
        let params = default_scenario(kind);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 40 {
            let ue = drop_ue(&params, &mut rng).unwrap();
            let clusters = generate_clusters(&params.channel, &ue, &mut rng);
            let cov = covariance_from_clusters(&array, &clusters);
            let dense = cov.matrix();
            let oracle = dense_eigen(&dense);
            if oracle[0].0 - oracle[1].0 < 0.01 * oracle[0].0 {
                continue;
            }
            checked += 1;
            let got = dominant_eigenvector(&cov, &opts).unwrap();
            let rel = (got.eigenvalue - oracle[0].0).abs() / oracle[0].0;
            assert!(rel <= 1e-8, "{kind}: eigenvalue error {rel:e}");
            let align = alignment(got.beamformer.weights(), &oracle[0].1);
            assert!(align >= 1.0 - 1e-9, "{kind}: alignment {align}");
        }
    }
}
