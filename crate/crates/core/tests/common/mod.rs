//! Invariants shared by the property tests and the acceptance run. Each check is
//! a function of one master seed so the whole suite can be replayed per seed.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whrf::cch::{cch_log_density, CchDensity, CchParams};
use whrf::checks::{loss_histogram_check, mgf_derivatives_at_zero};
use whrf::freeprob::{density, mp_density, stieltjes, stieltjes_rule, FreeModelParams, DEFAULT_NODES};
use whrf::hamiltonian::*;
use whrf::kacrice::{log_crt_all_k, log_crt_k_mc, log_prefactor};
use whrf::pauli::{commutes, multiply, sample_uniform_pauli, Phase, PauliString};
use whrf::randmat::*;
use whrf::simulator::{energy, CompiledObservable, InitialState};
use whrf::stats::{chi_square_uniform_pvalue, ks_statistic, mean_var};
use whrf::vqe::*;

pub type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn runner(seed: u64, cases: u32) -> TestRunner {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

fn run<S: Strategy>(seed: u64, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    runner(seed, cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn pauli_strategy() -> impl Strategy<Value = PauliString> {
    (1usize..=40, any::<u64>(), any::<u64>(), 0i64..4).prop_map(|(n, x, z, k)| {
        let mask = (1u64 << n) - 1;
        PauliString::from_u64(n, x & mask, z & mask).unwrap().with_phase(Phase::from_exponent(k))
    })
}

fn same_size_triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1usize..=40).prop_flat_map(|n| {
        let one = move || {
            (any::<u64>(), any::<u64>(), 0i64..4).prop_map(move |(x, z, k)| {
                let mask = (1u64 << n) - 1;
                PauliString::from_u64(n, x & mask, z & mask).unwrap().with_phase(Phase::from_exponent(k))
            })
        };
        (one(), one(), one())
    })
}

pub fn pauli_algebra(seed: u64) -> Outcome {
    run(seed, 256, same_size_triple(), |(a, b, c)| {
        let left = multiply(&multiply(&a, &b).unwrap(), &c).unwrap();
        let right = multiply(&a, &multiply(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!(commutes(&a, &b).unwrap(), commutes(&b, &a).unwrap());
        let u = a.unsigned();
        prop_assert!(multiply(&u, &u).unwrap().is_identity());
        Ok(())
    })?;
    run(seed ^ 1, 64, pauli_strategy(), |a| {
        prop_assert!(commutes(&a, &a).unwrap());
        Ok(())
    })
}

pub fn pauli_sampling_uniform(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0.0; 15];
    for _ in 0..100_000 {
        let p = sample_uniform_pauli(2, true, &mut rng);
        let (x, z) = p.low_masks().unwrap();
        counts[(x | (z << 2)) as usize - 1] += 1.0;
    }
    let pv = chi_square_uniform_pvalue(&counts);
    ensure!(pv > 1e-3, "chi-square p-value {pv}");
    Ok(())
}

pub fn hamiltonian_structure(seed: u64) -> Outcome {
    for n in [2, 4, 6] {
        let h = build_fermi_hubbard(&FermiHubbardSpec::standard(n, seed)).map_err(|e| e.to_string())?;
        ensure!(h.is_real(), "n = {n}: complex coefficient");
        let d = h.to_dense().map_err(|e| e.to_string())?;
        let herm = (&d - d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        ensure!(herm < 1e-12, "n = {n}: not Hermitian ({herm})");
        let trace = d.trace().re;
        let expect = (1u64 << n) as f64 * h.identity_coefficient();
        ensure!((trace - expect).abs() < 1e-9, "n = {n}: trace {trace} vs {expect}");
        let stats = spectral_stats(&diagonalize(&h).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let tilde = stats.nuclear_norm / stats.dim as f64;
        ensure!((stats.c_vqa - tilde).abs() <= 1e-12 * tilde.max(1.0), "n = {n}: λ̄ − λ₁ identity");
    }
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, seed)).unwrap();
    let m0 = spectral_stats(&diagonalize(&h).unwrap()).unwrap().m;
    run(seed, 16, (0.01f64..100.0, -50.0f64..50.0), |(a, b)| {
        let m = spectral_stats(&diagonalize(&h.affine(a, b)).unwrap()).unwrap().m;
        prop_assert!((m - m0).abs() <= 1e-9 * m0, "m {} vs {}", m, m0);
        Ok(())
    })
}

pub fn simulator_bounds(seed: u64) -> Outcome {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, seed)).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    run(seed, 64, (any::<u64>(), 1usize..12, 1usize..4, any::<bool>()), |(s, p, r, clifford)| {
        let mut a = build_random_ansatz(4, p, r, s).unwrap();
        if clifford {
            a = a.with_initial(InitialState::CliffordPrefix(s.rotate_left(7)));
        }
        let theta = uniform_params(p, &mut ChaCha8Rng::seed_from_u64(s));
        let state = a.prepare::<f64>(&theta).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-9);
        let e = energy(&state, &obs).unwrap();
        prop_assert!(e >= stats.lambda_min - 1e-9 && e <= stats.lambda_max + 1e-9);
        Ok(())
    })
}

pub fn clifford_mean_energy(seed: u64) -> Outcome {
    let h = build_fermi_hubbard(&FermiHubbardSpec::standard(4, seed)).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let theta = uniform_params(8, &mut ChaCha8Rng::seed_from_u64(seed));
    let r = loss_histogram_check(&h, &stats, 1, &theta, 400, seed).map_err(|e| e.to_string())?;
    let se = (r.sample_variance / r.draws as f64).sqrt();
    ensure!((r.sample_mean - 1.0).abs() <= 5.0 * se, "mean {} (se {se})", r.sample_mean);
    let again = loss_histogram_check(&h, &stats, 1, &theta, 400, seed).unwrap();
    ensure!(r == again, "histogram check not deterministic");
    Ok(())
}

pub fn vqe_runs(seed: u64) -> Outcome {
    let spec = FermiHubbardSpec::standard(4, seed);
    let cfg = ExperimentConfig {
        hamiltonian: spec.clone(),
        ansatz: AnsatzConfig {
            family: AnsatzFamily::Random,
            p: Some(6),
            r: 1,
            layers: 1,
            f: 1,
            initial: InitialKind::Default,
        },
        instances: 3,
        training: TrainingConfig { max_iters: 2000, ..Default::default() },
        master_seed: seed,
    };
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure!(a == run_experiment(&cfg).unwrap(), "experiment not reproducible");

    let h = build_fermi_hubbard(&spec).unwrap();
    let obs = CompiledObservable::new(&h).unwrap();
    let stats = spectral_stats(&diagonalize(&h).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let prog = build_random_ansatz(4, 8, 1, rng.random()).unwrap();
        let res = train(&prog, &obs, &stats, &cfg.training, &uniform_params(8, &mut rng)).unwrap();
        ensure!(res.final_energy <= res.initial_energy + cfg.training.tol, "energy increased");
        ensure!(res.final_normalized_energy >= -1e-9, "below ground state");
    }

    let sector = restrict_to_sector(&h, 2).unwrap();
    let hva = build_hva_ansatz(&spec, 2, 1).unwrap();
    let init = uniform_params(hva.num_params(), &mut rng);
    for iters in [1, 30, 300] {
        let t = TrainingConfig { max_iters: iters, ..Default::default() };
        let res = train(&hva, &obs, &sector.stats, &t, &init).unwrap();
        let w = hva.prepare::<f64>(&res.final_params).unwrap().weight_probability(2);
        ensure!((w - 1.0).abs() < 1e-8, "HVA left the sector after {iters} steps ({w})");
    }
    Ok(())
}

pub fn randmat_samplers(seed: u64) -> Outcome {
    let params = EnsembleParams::from_gamma(12, 0.3, 1.5, 0.2).unwrap();
    let a = sample_c(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let b = sample_c(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    ensure!(a == b, "sample_c not deterministic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sample_wishart_real(12, params.wishart_dof(), &mut rng);
    let n = sample_goe(12, &mut rng);
    let (x1, x2) = (0.1, 0.45);
    let c1 = assemble_c(&EnsembleParams { x: x1, ..params.clone() }, &w, &n);
    let c2 = assemble_c(&EnsembleParams { x: x2, ..params.clone() }, &w, &n);
    let k = params.r / params.m * ((2.0 * params.m * x2).sqrt() - (2.0 * params.m * x1).sqrt());
    let diff = (&c2 - &c1 - &n * k).abs().max();
    ensure!(diff < 1e-12 * c2.abs().max(), "C(x) not affine in √x: {diff}");
    Ok(())
}

pub fn spectral_convergence(seed: u64) -> Outcome {
    let (g, r, x) = (0.25, 1.0, 0.3);
    let mu = density(&FreeModelParams::new(g, r, x).unwrap(), DEFAULT_NODES).map_err(|e| e.to_string())?;
    let cdf = mu.cdf();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev = f64::INFINITY;
    for p in [64usize, 128, 256, 512] {
        let ens = EnsembleParams::from_gamma(p, g, r, x).unwrap();
        let ks: Vec<f64> = (0..20)
            .map(|_| ks_statistic(&sym_eigenvalues(&sample_c(&ens, &mut rng).unwrap()), &cdf))
            .collect();
        let mean = mean_var(&ks).0;
        ensure!(mean < prev, "mean KS {mean} at p = {p} not below {prev}");
        prev = mean;
    }
    // Scaling a Wishart by a rescales its law: R_{aA}(z) = a R_A(az).
    let (p, dof) = (256usize, 1024usize);
    let base = mp_density(p as f64 / dof as f64).unwrap();
    let base_cdf = base.cdf();
    for a in [0.5, 3.0] {
        let ev: Vec<f64> = sym_eigenvalues(&(sample_wishart_real(p, dof, &mut rng) * (a / dof as f64)));
        let d = ks_statistic(&ev, |l| base_cdf(l / a));
        ensure!(d < 0.03, "scaled Wishart a = {a}: KS {d}");
    }
    Ok(())
}

pub fn free_measures(seed: u64) -> Outcome {
    run(seed, 6, (0.05f64..2.5, 1.0f64..3.0, 0.0f64..1.0), |(g, r, x)| {
        let params = FreeModelParams::new(g, r, x).unwrap();
        let mu = density(&params, DEFAULT_NODES).unwrap();
        prop_assert!(mu.density.iter().all(|d| *d >= 0.0));
        prop_assert!((mu.mass() - 1.0).abs() <= 1e-4, "mass {}", mu.mass());
        Ok(())
    })?;
    let params = FreeModelParams::new(0.3, 1.0, 0.2).unwrap();
    run(seed ^ 2, 64, (-2.0f64..8.0, 1e-3f64..5.0), |(re, im)| {
        let z = num_complex::Complex64::new(re, im);
        let up = stieltjes(&params, z);
        let down = stieltjes(&params, z.conj());
        prop_assert!((down - up.conj()).norm() <= 1e-12 * up.norm());
        prop_assert!((stieltjes_rule(&params, z.conj()) - stieltjes_rule(&params, z).conj()).norm() <= 1e-12 * up.norm());
        Ok(())
    })
}

pub fn kacrice_invariants(seed: u64) -> Outcome {
    ensure!(log_prefactor(0.3, 2048, 4096.0, 1.0).is_finite(), "prefactor overflow");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = log_crt_all_k(0.3, 8, 24.0, 1.0, 200, &mut rng).map_err(|e| e.to_string())?;
    for w in all.windows(2) {
        ensure!(w[1].log_value >= w[0].log_value, "not monotone in k at k = {}", w[1].k);
    }
    let small = log_crt_k_mc(0.2, 0, 16, 80.0, 1.0, 400, &mut rng).unwrap();
    let large = log_crt_k_mc(0.2, 0, 16, 80.0, 1.0, 4000, &mut rng).unwrap();
    let ratio = small.mc_std_error / large.mc_std_error / 10f64.sqrt();
    ensure!((ratio - 1.0).abs() < 0.3, "standard error ratio / √10 = {ratio}");
    Ok(())
}

pub fn cch_shape(seed: u64) -> Outcome {
    run(seed, 24, (0.01f64..0.95, 1.0f64..2000.0), |(g, m)| {
        let p = CchParams::new(g, m).unwrap();
        let d = CchDensity::new(&p, 20_000);
        prop_assert!((d.mass() - 1.0).abs() < 1e-6);
        let h = 1e-4;
        for i in 1..500 {
            let e = 0.5 * i as f64 / 500.0;
            if e - h > 0.0 && e + h < 0.5 {
                let d2 = cch_log_density(e + h, &p) - 2.0 * cch_log_density(e, &p) + cch_log_density(e - h, &p);
                prop_assert!(d2 < 0.0, "not concave at {}", e);
            }
        }
        Ok(())
    })
}

pub fn mgf_moment_matching(seed: u64) -> Outcome {
    run(seed, 32, proptest::collection::vec(-5.0f64..5.0, 16..200), |spectrum| {
        let stats = match spectral_stats(&spectrum) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let ((a1, a2), (b1, b2)) = mgf_derivatives_at_zero(&spectrum, stats.m, 1e-4).unwrap();
        prop_assert!((a1 - b1).abs() < 1e-6 && (a2 - b2).abs() < 1e-6, "({}, {}) vs ({}, {})", a1, a2, b1, b2);
        Ok(())
    })
}

pub const ALL: &[(&str, fn(u64) -> Outcome)] = &[
    ("pauli algebra", pauli_algebra),
    ("pauli sampling uniformity", pauli_sampling_uniform),
    ("hamiltonian structure", hamiltonian_structure),
    ("simulator norm and energy bounds", simulator_bounds),
    ("clifford-prefixed mean energy", clifford_mean_energy),
    ("vqe determinism, descent, sector", vqe_runs),
    ("randmat samplers", randmat_samplers),
    ("spectral convergence and scaling", spectral_convergence),
    ("free measures", free_measures),
    ("kac-rice invariants", kacrice_invariants),
    ("cch shape", cch_shape),
    ("mgf moment matching", mgf_moment_matching),
];

/// Every invariant under one seed, with failures collected rather than raised.
pub fn run_all(seed: u64) -> Vec<(&'static str, Outcome)> {
    ALL.iter().map(|(name, f)| (*name, f(seed))).collect()
}
