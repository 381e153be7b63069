use qnee_core::ansatz::{apply_circuit, outcome_distribution, CircuitParams};
use qnee_core::hybrid::{
    evaluate_cnn, fd_gradient, run_qnee, FdScheme, Inner, InnerMode, ParamInit, QneeConfig,
};
use qnee_core::neural::{EntropyNet, NetConfig, TrainConfig};
use qnee_core::quantum::{random, shannon_entropy, von_neumann_exact, DensityMatrix};
use qnee_core::record::{extract_eigen, read_curve_csv, write_curve_csv, EstimationRecord};
use qnee_core::seed::rng_from;
use qnee_core::Error;

const NET: NetConfig = NetConfig {
    embed_dim: 32,
    hidden_width: 64,
};

fn neural_cfg() -> QneeConfig {
    QneeConfig {
        net: NET,
        nn_initial: TrainConfig {
            learning_rate: 1e-3,
            ..TrainConfig::default().with_iters(2000)
        },
        nn_step: TrainConfig {
            learning_rate: 1e-3,
            ..TrainConfig::default().with_iters(100)
        },
        ..QneeConfig::default()
    }
}

fn exact_cfg(n_outer: usize) -> QneeConfig {
    QneeConfig {
        inner: InnerMode::Exact,
        n_outer,
        n_trials: 2,
        eta_q: 0.05,
        ..QneeConfig::default()
    }
}

fn random_rho(n: usize, seed: u64) -> DensityMatrix {
    random::density_matrix(n, None, &mut rng_from(seed))
}

fn warm_net(n: usize) -> Inner {
    Inner::Neural(EntropyNet::new(n, NET, 11).unwrap())
}

#[test]
fn evaluation_on_a_diagonal_state_with_identity_circuit() {
    let rho = DensityMatrix::from_diagonal(&[0.9, 0.1, 0.0, 0.0]).unwrap();
    let params = CircuitParams::zeros(2, 2);
    let cfg = neural_cfg();
    let e = evaluate_cnn(&rho, &params, &warm_net(2), &cfg.nn_initial, &cfg, 1).unwrap();
    let s = von_neumann_exact(&rho);
    assert!((s - 0.3251).abs() < 1e-4);
    assert!((e.cost - s).abs() < 0.05, "{} vs {s}", e.cost);
}

#[test]
fn evaluation_on_the_maximally_mixed_state_ignores_the_circuit() {
    let rho = DensityMatrix::maximally_mixed(2);
    let cfg = neural_cfg();
    for seed in [1, 2] {
        let params = CircuitParams::random(2, 2, seed);
        let e = evaluate_cnn(&rho, &params, &warm_net(2), &cfg.nn_initial, &cfg, seed).unwrap();
        assert!((e.cost - 2.0 * 2f64.ln()).abs() < 0.05, "{}", e.cost);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let rho = random_rho(2, 4);
    let params = CircuitParams::random(2, 2, 4);
    let cfg = QneeConfig {
        nn_step: neural_cfg().nn_step,
        ..neural_cfg()
    };
    let a = evaluate_cnn(&rho, &params, &warm_net(2), &cfg.nn_step, &cfg, 9).unwrap();
    let b = evaluate_cnn(&rho, &params, &warm_net(2), &cfg.nn_step, &cfg, 9).unwrap();
    assert_eq!(a.cost.to_bits(), b.cost.to_bits());
    assert_eq!(a.h_table, b.h_table);
}

fn shannon_at(rho: &DensityMatrix, p: &CircuitParams) -> f64 {
    shannon_entropy(&outcome_distribution(rho, p).unwrap())
}

#[test]
fn noise_free_gradient_matches_shannon_central_differences() {
    for (n, scheme) in [(2, FdScheme::Forward), (3, FdScheme::Forward), (2, FdScheme::Central)] {
        let rho = random_rho(n, n as u64);
        let params = CircuitParams::random(n, 2, 17);
        let cfg = QneeConfig {
            fd_step: 1e-4,
            fd_scheme: scheme,
            ..exact_cfg(1)
        };
        let g = fd_gradient(&rho, &params, &Inner::Exact, &cfg, 0).unwrap();
        let eps = 1e-5;
        for (k, gk) in g.iter().enumerate() {
            let fd = (shannon_at(&rho, &params.perturbed(k, eps)) - shannon_at(&rho, &params.perturbed(k, -eps)))
                / (2.0 * eps);
            assert!((fd - gk).abs() < 1e-3, "{n} qubits, angle {k}: {gk} vs {fd}");
        }
    }
}

#[test]
fn gradient_vanishes_at_a_diagonalizing_circuit() {
    let rho = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.15, 0.05]).unwrap();
    let cfg = QneeConfig {
        fd_scheme: FdScheme::Central,
        fd_step: 1e-4,
        ..exact_cfg(1)
    };
    let g = fd_gradient(&rho, &CircuitParams::zeros(2, 2), &Inner::Exact, &cfg, 0).unwrap();
    assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-6, "{g:?}");
}

#[test]
fn zero_entropy_state_is_a_global_minimum() {
    let rho = DensityMatrix::from_diagonal(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let params = CircuitParams::zeros(3, 2);
    let cfg = exact_cfg(1);
    let e = evaluate_cnn(&rho, &params, &Inner::Exact, &cfg.nn_step, &cfg, 0).unwrap();
    assert!(e.cost.abs() < 1e-12);
    let g = fd_gradient(&rho, &params, &Inner::Exact, &cfg, 0).unwrap();
    assert!(g.iter().all(|&x| x >= -1e-9), "{g:?}");
}

#[test]
fn noise_free_costs_bound_the_entropy_and_the_estimate_is_their_minimum() {
    for seed in 0..6u64 {
        let n = 2 + (seed as usize) % 2;
        let rho = random_rho(n, 100 + seed);
        let rec = run_qnee(&rho, &QneeConfig { seed, ..exact_cfg(15) }).unwrap();
        let s = von_neumann_exact(&rho);
        let costs: Vec<f64> = rec.trials.iter().flat_map(|t| t.history.iter().map(|p| p.cost)).collect();
        assert!(costs.iter().all(|&c| c >= s - 1e-6));
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(rec.estimate, min);
        assert_eq!(rec.exact_entropy, Some(s));
        for t in &rec.trials {
            assert!(rec.estimate <= t.estimate);
        }
    }
}

#[test]
fn restarts_follow_distinct_trajectories() {
    let rho = random_rho(2, 8);
    let rec = run_qnee(&rho, &QneeConfig { n_trials: 3, ..exact_cfg(5) }).unwrap();
    let a = &rec.trials[0].best_params;
    assert!(rec.trials[1..].iter().all(|t| &t.best_params != a));
    let costs: Vec<Vec<u64>> = rec
        .trials
        .iter()
        .map(|t| t.history.iter().map(|p| p.cost.to_bits()).collect())
        .collect();
    assert_ne!(costs[0], costs[1]);
    assert_ne!(costs[1], costs[2]);
}

#[test]
fn descent_reaches_the_entropy_of_a_real_state() {
    // The ansatz is real orthogonal, so only real states can be fully diagonalized.
    let diag = DensityMatrix::from_diagonal(&[0.55, 0.25, 0.15, 0.05]).unwrap();
    let rho = apply_circuit(&diag, &CircuitParams::random(2, 2, 21)).unwrap();
    let cfg = QneeConfig {
        n_trials: 2,
        n_layers: Some(2),
        eta_q: 0.1,
        ..exact_cfg(300)
    };
    let rec = run_qnee(&rho, &cfg).unwrap();
    let h = &rec.trials[0].history;
    assert!(h.last().unwrap().cost < h[0].cost);
    let s = von_neumann_exact(&rho);
    assert!(rec.estimate - s < 0.01, "{} vs {s}", rec.estimate);
}

#[test]
fn complex_states_leave_a_gap_for_the_real_ansatz() {
    let rho = random_rho(2, 21);
    let rec = run_qnee(&rho, &QneeConfig { n_trials: 2, eta_q: 0.1, ..exact_cfg(200) }).unwrap();
    assert!(rec.estimate > von_neumann_exact(&rho) + 0.05);
}

#[test]
fn pure_state_under_a_random_unitary_is_estimated_near_zero() {
    let zero = DensityMatrix::from_diagonal(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let rho = apply_circuit(&zero, &CircuitParams::random(2, 3, 77)).unwrap();
    let cfg = QneeConfig {
        n_layers: Some(2),
        n_outer: 150,
        eta_q: 0.05,
        n_trials: 1,
        n_shots: 10_000,
        seed: 1,
        ..neural_cfg()
    };
    let rec = run_qnee(&rho, &cfg).unwrap();
    assert!(rec.estimate <= 0.05, "{}", rec.estimate);
}

#[test]
fn estimates_stay_above_the_entropy_up_to_shot_noise() {
    let cfg = QneeConfig {
        n_outer: 2,
        n_trials: 1,
        n_shots: 10_000,
        ..neural_cfg()
    };
    for seed in 0..20u64 {
        let rho = random_rho(2, 300 + seed);
        let s = von_neumann_exact(&rho);
        let rec = run_qnee(&rho, &QneeConfig { seed, ..cfg.clone() }).unwrap();
        let best = rec.best();
        let p = outcome_distribution(&rho, &best.best_params).unwrap();
        let h: Vec<f64> = best.eigen.iter().fold(vec![0.0; p.len()], |mut h, e| {
            h[e.index] = e.value.ln();
            h
        });
        let mean: f64 = p.iter().zip(&h).map(|(p, h)| p * h).sum();
        let var: f64 = p.iter().zip(&h).map(|(p, h)| p * (h - mean).powi(2)).sum();
        let sigma = (var / cfg.n_shots as f64).sqrt();
        assert!(rec.estimate >= s - 3.0 * sigma, "seed {seed}: {} < {s} - 3·{sigma}", rec.estimate);
    }
}

#[test]
fn eigenpairs_of_a_diagonal_state() {
    let diag = [0.5, 0.3, 0.15, 0.05];
    let rho = DensityMatrix::from_diagonal(&diag).unwrap();
    let cfg = QneeConfig {
        n_outer: 0,
        n_trials: 1,
        init: ParamInit::Zeros,
        ..neural_cfg()
    };
    let rec = run_qnee(&rho, &cfg).unwrap();
    let pairs = extract_eigen(&rec, 4).unwrap();
    for (k, pair) in pairs.iter().enumerate() {
        assert_eq!(pair.string.index(), k);
        assert!((pair.value - diag[k]).abs() < 0.02, "{k}: {}", pair.value);
    }
    let lhs: f64 = pairs.iter().map(|p| p.value * p.vector.expectation(rho.matrix()).re).sum();
    let rhs: f64 = pairs.iter().map(|p| p.value * p.value).sum();
    assert!(lhs >= rhs - 0.01);
    assert!(matches!(extract_eigen(&rec, 5), Err(Error::Argument(_))));
}

#[test]
fn pure_state_has_one_dominant_eigenvalue() {
    let rho = DensityMatrix::from_diagonal(&[0.0, 1.0, 0.0, 0.0]).unwrap();
    let cfg = QneeConfig {
        n_outer: 0,
        n_trials: 1,
        init: ParamInit::Zeros,
        ..neural_cfg()
    };
    let rec = run_qnee(&rho, &cfg).unwrap();
    let e = rec.eigenvalues();
    assert!((e[0] - 1.0).abs() < 0.02, "{e:?}");
    assert!(e[1..].iter().all(|&x| x < 0.02), "{e:?}");
    assert_eq!(rec.best().eigen[0].index, 1);
}

#[test]
fn all_trials_diverging_is_an_estimation_error() {
    let rho = random_rho(2, 5);
    let blowup = TrainConfig {
        learning_rate: 1e6,
        ..TrainConfig::default().with_iters(200)
    };
    let cfg = QneeConfig {
        n_outer: 1,
        n_trials: 2,
        nn_initial: blowup.clone(),
        nn_step: blowup,
        ..neural_cfg()
    };
    match run_qnee(&rho, &cfg) {
        Err(Error::Estimation { histories }) => assert_eq!(histories.len(), 2),
        other => panic!("expected estimation failure, got {other:?}"),
    }
}

#[test]
fn record_serialization_round_trips() {
    let rho = random_rho(2, 6);
    let rec = run_qnee(&rho, &exact_cfg(3)).unwrap();
    let back = EstimationRecord::from_json(&rec.to_json().unwrap()).unwrap();
    assert_eq!(back, rec);

    let mut buf = Vec::new();
    write_curve_csv(&[&rec], &mut buf).unwrap();
    let rows = read_curve_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 4);
    assert_eq!(rows[0].c_nn, rec.trials[0].history[0].cost);
    assert_eq!(rows[0].exact_entropy, rec.exact_entropy);
}
