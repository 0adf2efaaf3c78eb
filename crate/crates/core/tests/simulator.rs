use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use whrf::hamiltonian::*;
use whrf::pauli::{sample_uniform_pauli, PauliString};
use whrf::simulator::*;
use whrf::vqe::{build_random_ansatz, uniform_params};

fn dense_pauli(n: usize, p: &PauliString) -> DMatrix<Complex64> {
    PauliSum::from_terms(n, [(1.0, p.clone())]).unwrap().to_dense().unwrap()
}

fn dense_prepare(a: &AnsatzProgram, theta: &[f64]) -> DVector<Complex64> {
    let n = a.num_qubits();
    let d = 1 << n;
    let init = a.initial().prepare::<f64>(n).unwrap();
    let mut psi = DVector::from_iterator(d, init.amplitudes().iter().copied());
    for rot in a.rotations() {
        let angle = rot.scale * theta[rot.param_index];
        let u = DMatrix::<Complex64>::identity(d, d) * Complex64::new(angle.cos(), 0.0)
            - dense_pauli(n, &rot.generator) * Complex64::new(0.0, angle.sin());
        psi = u * psi;
    }
    psi
}

#[test]
fn prepared_state_matches_dense_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..10 {
        let a = build_random_ansatz(3, 5, 2, seed).unwrap();
        let theta = uniform_params(5, &mut rng);
        let ours = a.prepare::<f64>(&theta).unwrap();
        let oracle = dense_prepare(&a, &theta);
        for (x, y) in ours.amplitudes().iter().zip(oracle.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn clifford_prefix_matches_dense_path() {
    let a = build_random_ansatz(3, 4, 1, 2).unwrap().with_initial(InitialState::CliffordPrefix(17));
    let theta = [0.3, -1.1, 2.0, 0.7];
    let ours = a.prepare::<f64>(&theta).unwrap();
    let oracle = dense_prepare(&a, &theta);
    for (x, y) in ours.amplitudes().iter().zip(oracle.iter()) {
        assert!((x - y).norm() < 1e-12);
    }
    assert!((ours.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn energy_matches_dense_expectation() {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, 1)).unwrap();
    let dense = h.to_dense().unwrap();
    let compiled = CompiledObservable::new(&h).unwrap();
    let dense_obs = DenseObservable::new(dense.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let s = StateVector::<f64>::random(4, &mut rng).unwrap();
        let v = DVector::from_iterator(16, s.amplitudes().iter().copied());
        let oracle = (v.adjoint() * &dense * &v)[(0, 0)].re;
        for e in [energy(&s, &compiled).unwrap(), energy(&s, &h).unwrap(), energy(&s, &dense_obs).unwrap()] {
            assert!((e - oracle).abs() < 1e-12, "{e} vs {oracle}");
        }
    }
}

#[test]
fn gradient_modes_agree_on_hubbard() {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(6, 0)).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5 {
        let a = build_random_ansatz(6, 8, 2, seed).unwrap();
        let theta = uniform_params(8, &mut rng);
        let ps = parameter_shift_gradient(&a, &theta, &obs).unwrap();
        let fd = finite_difference_gradient(&a, &theta, &obs, FD_STEP).unwrap();
        let (_, adj) = adjoint_gradient(&a, &theta, &obs).unwrap();
        let scale = ps.iter().map(|g| g.abs()).fold(1e-3, f64::max);
        for i in 0..8 {
            assert!((ps[i] - adj[i]).abs() < 1e-10 * scale);
            assert!((ps[i] - fd[i]).abs() < 1e-6 * scale, "{} vs {}", ps[i], fd[i]);
        }
    }
}

#[test]
fn pauli_apply_matches_dense_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let p = sample_uniform_pauli(4, false, &mut rng);
        let s = StateVector::<f64>::random(4, &mut rng).unwrap();
        let ours = s.apply_pauli(&p).unwrap();
        let v = DVector::from_iterator(16, s.amplitudes().iter().copied());
        let oracle = dense_pauli(4, &p) * v;
        for (x, y) in ours.amplitudes().iter().zip(oracle.iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, 0)).unwrap();
    let h32: PauliSum<f32> = h.cast();
    let a = build_random_ansatz(4, 6, 1, 3).unwrap();
    let theta = [0.2, -0.4, 1.0, 2.5, -3.0, 0.1];
    let t32: Vec<f32> = theta.iter().map(|&t| t as f32).collect();
    let e64 = energy(&a.prepare::<f64>(&theta).unwrap(), &CompiledObservable::new(&h).unwrap()).unwrap();
    let e32 = energy(&a.prepare::<f32>(&t32).unwrap(), &CompiledObservable::new(&h32).unwrap()).unwrap();
    assert!((e64 - e32 as f64).abs() < 1e-4);
}

#[test]
fn oversized_systems_are_rejected() {
    assert!(StateVector::<f64>::zero(MAX_SIM_QUBITS + 1).is_err());
    assert!(PauliSum::<f64>::new(MAX_DENSE_QUBITS + 1).to_dense().is_err());
}
