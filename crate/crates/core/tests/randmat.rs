use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};
use whrf::freeprob::{mp_density, sc_density};
use whrf::kacrice::hessian_closed_form_sample;
use whrf::randmat::*;
use whrf::stats::{ks_statistic, mean_var};

fn within(sample_mean: f64, target: f64, sd: f64, n: usize) -> bool {
    (sample_mean - target).abs() <= 5.0 * sd / (n as f64).sqrt()
}

#[test]
fn goe_entry_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut diag, mut off) = (Vec::new(), Vec::new());
    for _ in 0..2000 {
        let g = sample_goe(6, &mut rng);
        diag.push(g[(2, 2)]);
        off.push(g[(1, 4)]);
    }
    let (md, vd) = mean_var(&diag);
    let (mo, vo) = mean_var(&off);
    assert!(within(md, 0.0, 2f64.sqrt(), 2000) && within(mo, 0.0, 1.0, 2000));
    assert!((vd - 2.0).abs() < 5.0 * 2.0 * (2.0 / 2000f64).sqrt());
    assert!((vo - 1.0).abs() < 5.0 * (2.0 / 2000f64).sqrt());
}

#[test]
fn wishart_entry_moments_on_both_paths() {
    for (p, dof) in [(5usize, 3usize), (5, 40)] {
        let mut rng = ChaCha8Rng::seed_from_u64(dof as u64);
        let (mut d, mut o) = (Vec::new(), Vec::new());
        let draws = 4000;
        for _ in 0..draws {
            let w = sample_wishart_real(p, dof, &mut rng);
            d.push(w[(3, 3)]);
            o.push(w[(0, 2)]);
        }
        let k = dof as f64;
        let (md, vd) = mean_var(&d);
        let (mo, vo) = mean_var(&o);
        assert!(within(md, k, (2.0 * k).sqrt(), draws), "dof {dof}: diag mean {md}");
        assert!(within(mo, 0.0, k.sqrt(), draws), "dof {dof}: off mean {mo}");
        // Var of a sample variance ≈ 2σ⁴/n for near-Gaussian entries; the chi-square diagonal has a heavier tail.
        assert!((vd / (2.0 * k) - 1.0).abs() < 0.15, "dof {dof}: diag var {vd}");
        assert!((vo / k - 1.0).abs() < 0.15, "dof {dof}: off var {vo}");
    }
}

#[test]
fn goe_spectrum_follows_semicircle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = 512;
    let mut ev = Vec::new();
    for _ in 0..4 {
        ev.extend(sym_eigenvalues(&(sample_goe(p, &mut rng) / (p as f64).sqrt())));
    }
    let sc = sc_density();
    let cdf = sc.cdf();
    let d = ks_statistic(&ev, |x| cdf(x));
    assert!(d < 0.02, "KS {d}");
}

#[test]
fn wishart_spectrum_follows_marchenko_pastur() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, dof) in [(256usize, 1024usize), (256, 128)] {
        let gamma = p as f64 / dof as f64;
        let mut ev = Vec::new();
        for _ in 0..4 {
            ev.extend(sym_eigenvalues(&(sample_wishart_real(p, dof, &mut rng) / dof as f64)));
        }
        let mp = mp_density(gamma).unwrap();
        let atom: f64 = mp.atoms.iter().map(|a| a.1).sum();
        // Split off the kernel of a rank-deficient W, then test the bulk against the conditional law.
        let zeros = ev.iter().filter(|&&l| l.abs() < 1e-9).count();
        assert_eq!(zeros as f64 / ev.len() as f64, atom);
        let bulk: Vec<f64> = ev.into_iter().filter(|l| l.abs() >= 1e-9).collect();
        let cdf = mp.cdf();
        let d = ks_statistic(&bulk, |x| (cdf(x) - atom) / (1.0 - atom));
        assert!(d < 0.02, "gamma {gamma}: KS {d}");
    }
}

#[test]
fn whrf_loss_is_gamma_distributed() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 16;
    let law = Gamma::new(m as f64, m as f64).unwrap();
    let theta = [0.4, -1.3, 2.2];
    let samples: Vec<f64> = (0..5000)
        .map(|_| WhrfField::sample(3, m, 1, &mut rng).unwrap().value(&theta).unwrap())
        .collect();
    let d = ks_statistic(&samples, |x| law.cdf(x));
    assert!(d < 0.02, "KS {d}");
}

#[test]
fn whrf_gradient_variance_matches_law() {
    // Var(m ∂_i F) = 2 r m x at the conditioning energy x, before conditioning on ∇F = 0.
    let (p, m, r) = (2usize, 12usize, 2usize);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut scaled = Vec::new();
    let mut loss = Vec::new();
    for _ in 0..20000 {
        let s = whrf_direct(p, m, r, &mut rng).unwrap();
        scaled.push(m as f64 * s.gradient[0] / (s.loss).sqrt());
        loss.push(s.loss);
    }
    let (mean, var) = mean_var(&scaled);
    // Conditional on F = x the gradient is N(0, 2rx/m)·... so m∂F/√x has variance 2rm.
    let target = 2.0 * r as f64 * m as f64;
    assert!(mean.abs() < 5.0 * (target / 20000.0).sqrt());
    assert!((var / target - 1.0).abs() < 0.05, "var {var}, target {target}");
}

#[test]
fn conditioned_hessian_moments() {
    let (p, m, r, x) = (3usize, 12usize, 1usize, 0.4);
    let draws = 6000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut dd, mut od, mut dc, mut oc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..draws {
        let h = WhrfField::sample_conditioned(p, m, r, x, &mut rng).unwrap().at_north_pole().hessian;
        dd.push(h[(0, 0)]);
        od.push(h[(0, 1)]);
        let c = hessian_closed_form_sample(x, p, m as f64, r as f64, &mut rng).unwrap();
        dc.push(c[(0, 0)]);
        oc.push(c[(0, 1)]);
    }
    let z = |a: &[f64], b: &[f64], f: fn(&[f64]) -> f64, se: fn(&[f64]) -> f64| {
        (f(a) - f(b)).abs() / (se(a).powi(2) + se(b).powi(2)).sqrt()
    };
    let mean = |v: &[f64]| mean_var(v).0;
    let var = |v: &[f64]| mean_var(v).1;
    let se_mean = whrf::stats::std_error;
    let se_var = whrf::stats::variance_std_error;
    // Conditioning ∇F = 0 removes one real degree of freedom from each |X_a|².
    let direct_mean = 2.0 - 2.0 * x - 1.0 / m as f64;
    assert!((mean(&dd) - direct_mean).abs() < 5.0 * se_mean(&dd), "{} vs {direct_mean}", mean(&dd));
    assert!((mean(&dc) - (2.0 - 2.0 * x)).abs() < 5.0 * se_mean(&dc));
    assert!(z(&od, &oc, mean, se_mean) < 5.0, "off-diagonal means");
    assert!(z(&od, &oc, var, se_var) < 5.0, "off-diagonal variances {} vs {}", var(&od), var(&oc));
    // The explicit field's diagonal variance has no x-dependent part at r = 1.
    let expect_direct = 4.0 * (r * r) as f64 / m as f64 + 4.0 * x * (r * (r - 1)) as f64 / m as f64;
    assert!((var(&dd) - expect_direct).abs() < 5.0 * se_var(&dd), "{} vs {expect_direct}", var(&dd));
}

#[test]
fn pooled_spectrum_is_sorted_and_sized() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = EnsembleParams::from_gamma(16, 0.25, 1.0, 0.3).unwrap();
    let ev = pooled_c_spectrum(&params, 3, &mut rng).unwrap();
    assert_eq!(ev.len(), 48);
    assert!(ev.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn whrf_size_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    assert!(WhrfField::sample(8, 4, 2, &mut rng).is_err());
}
