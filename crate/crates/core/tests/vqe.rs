use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whrf::hamiltonian::*;
use whrf::simulator::{CompiledObservable, GradientMode, InitialState};
use whrf::vqe::*;

fn small_experiment(family: AnsatzFamily, initial: InitialKind, instances: usize) -> ExperimentConfig {
    ExperimentConfig {
        hamiltonian: FermiHubbardSpec::standard(4, 3),
        ansatz: AnsatzConfig {
            family,
            p: (family == AnsatzFamily::Random).then_some(6),
            r: 1,
            layers: 2,
            f: 1,
            initial,
        },
        instances,
        training: TrainingConfig { max_iters: 3000, ..Default::default() },
        master_seed: 11,
    }
}

#[test]
fn experiments_are_deterministic() {
    for (family, initial) in [
        (AnsatzFamily::Random, InitialKind::Default),
        (AnsatzFamily::Random, InitialKind::Clifford),
        (AnsatzFamily::Hva, InitialKind::Default),
    ] {
        let cfg = small_experiment(family, initial, 4);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn single_instance_equals_direct_training() {
    let cfg = small_experiment(AnsatzFamily::Random, InitialKind::Clifford, 1);
    let report = run_experiment(&cfg).unwrap();
    let h = build_fermi_hubbard(&cfg.hamiltonian).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let mut rng = instance_rng(cfg.master_seed, 0);
    let a = build_random_ansatz(4, 6, 1, rng.random())
        .unwrap()
        .with_initial(InitialState::CliffordPrefix(rng.random()));
    let init = uniform_params(6, &mut rng);
    let res = train(&a, &CompiledObservable::new(&h).unwrap(), &stats, &cfg.training, &init).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.final_normalized_energy, Some(res.final_normalized_energy));
    assert_eq!(row.iterations, Some(res.iterations_used));
    assert_eq!(row.halt_reason, res.halt_reason.to_string());
}

#[test]
fn hva_training_stays_in_the_half_filled_sector() {
    let spec = FermiHubbardSpec::standard(6, 2);
    let h = build_fermi_hubbard(&spec).unwrap();
    let sector = restrict_to_sector(&h, 3).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let a = build_hva_ansatz(&spec, 3, 1).unwrap();
    let init = uniform_params(a.num_params(), &mut ChaCha8Rng::seed_from_u64(1));
    for iters in [1, 10, 100, 1000] {
        let cfg = TrainingConfig { max_iters: iters, ..Default::default() };
        let res = train(&a, &obs, &sector.stats, &cfg, &init).unwrap();
        let s = a.prepare::<f64>(&res.final_params).unwrap();
        assert!((s.weight_probability(3) - 1.0).abs() < 1e-8, "after {iters} iterations");
    }
}

#[test]
fn final_energy_does_not_exceed_initial() {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, 0)).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let cfg = TrainingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..8 {
        let a = build_random_ansatz(4, 10, 1, seed).unwrap();
        let res = train(&a, &obs, &stats, &cfg, &uniform_params(10, &mut rng)).unwrap();
        assert!(res.final_energy <= res.initial_energy + cfg.tol);
        assert!(res.final_normalized_energy >= -1e-9);
    }
}

#[test]
fn parameter_shift_and_adjoint_train_identically_up_to_rounding() {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, 0)).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let a = build_random_ansatz(4, 5, 2, 4).unwrap();
    let init = uniform_params(5, &mut ChaCha8Rng::seed_from_u64(3));
    let mut cfg = TrainingConfig { max_iters: 200, ..Default::default() };
    let adj = train(&a, &obs, &stats, &cfg, &init).unwrap();
    cfg.gradient_mode = GradientMode::ParameterShift;
    let ps = train(&a, &obs, &stats, &cfg, &init).unwrap();
    assert!((adj.final_energy - ps.final_energy).abs() < 1e-8);
}

fn six_qubit_runs(p: usize, seeds: std::ops::Range<u64>) -> Vec<TrainingResult> {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(6, 0)).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let cfg = TrainingConfig::default();
    seeds
        .map(|seed| {
            let a = build_random_ansatz(6, p, 1, seed).unwrap();
            let init = uniform_params(p, &mut ChaCha8Rng::seed_from_u64(seed + 100));
            train(&a, &obs, &stats, &cfg, &init).unwrap()
        })
        .collect()
}

#[test]
fn gradient_at_tol_halt_is_bounded_by_the_predicted_gain() {
    // The halt rule requires η‖∇F‖² ≤ tol.
    let cfg = TrainingConfig::default();
    let bound = (cfg.tol / cfg.learning_rate).sqrt();
    for res in six_qubit_runs(12, 0..4) {
        assert_eq!(res.halt_reason, HaltReason::Tol);
        assert!(res.final_gradient_norm <= bound, "{} > {bound}", res.final_gradient_norm);
    }
}

#[test]
#[ignore = "tol = 1e-5 on the raw energy only guarantees ‖∇F‖ ≤ √(tol/η) ≈ 1.4e-2"]
fn gradient_at_tol_halt_below_1e_3() {
    for res in six_qubit_runs(12, 0..4) {
        assert_eq!(res.halt_reason, HaltReason::Tol);
        assert!(res.final_gradient_norm <= 1e-3, "{}", res.final_gradient_norm);
    }
}

#[test]
fn invalid_experiments_are_rejected() {
    let mut cfg = small_experiment(AnsatzFamily::Hva, InitialKind::Default, 1);
    cfg.ansatz.p = Some(7);
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small_experiment(AnsatzFamily::Random, InitialKind::Default, 0);
    assert!(run_experiment(&cfg).is_err());
    cfg.instances = 1;
    cfg.training.momentum = 1.0;
    assert!(run_experiment(&cfg).is_err());
}
