//! Random-matrix samplers: GOE, real Wishart, the conditioned-Hessian ensemble
//! `C(x)`, and an explicit Wishart hypertoroidal random field.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest matrix the dense samplers accept.
pub const MAX_DIM: usize = 2048;

/// Largest `q = p·r` for the explicit WHRF (the factor matrix has `2^q` rows).
pub const MAX_WHRF_SLOTS: usize = 14;

/// `(p, m, r, x)` with `γ = p / 2m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub p: usize,
    pub m: f64,
    pub r: f64,
    pub x: f64,
}

impl EnsembleParams {
    pub fn new(p: usize, m: f64, r: f64, x: f64) -> Result<Self> {
        let s = Self { p, m, r, x };
        s.validate()?;
        Ok(s)
    }

    /// Parameters with `m = p / 2γ`.
    pub fn from_gamma(p: usize, gamma: f64, r: f64, x: f64) -> Result<Self> {
        Self::new(p, p as f64 / (2.0 * gamma), r, x)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > MAX_DIM {
            return Err(Error::InvalidArgument(format!("p must lie in 1..={MAX_DIM}, got {}", self.p)));
        }
        if !(self.m >= 1.0) || !self.m.is_finite() {
            return Err(Error::InvalidArgument(format!("m must be >= 1, got {}", self.m)));
        }
        if !(self.r >= 1.0) || !self.r.is_finite() {
            return Err(Error::InvalidArgument(format!("r must be >= 1, got {}", self.r)));
        }
        if !(self.x >= 0.0) || !self.x.is_finite() {
            return Err(Error::InvalidArgument(format!("x must be >= 0, got {}", self.x)));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.p as f64 / (2.0 * self.m)
    }

    /// Integer Wishart degrees of freedom `round(2m)`.
    pub fn wishart_dof(&self) -> usize {
        (2.0 * self.m).round().max(1.0) as usize
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// GOE with `N(0,2)` diagonal and `N(0,1)` off-diagonal entries.
pub fn sample_goe<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    for j in 0..p {
        m[(j, j)] = std::f64::consts::SQRT_2 * normal(rng);
        for i in j + 1..p {
            let v = normal(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// `W ∼ W_p(dof, I)`.
///
/// Uses the Bartlett factor `A Aᵀ` (lower-triangular `A`, chi diagonal) when
/// `dof ≥ p` and the direct product `G Gᵀ` otherwise; both have the same law.
pub fn sample_wishart_real<R: Rng + ?Sized>(p: usize, dof: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(dof >= 1, "Wishart needs at least one degree of freedom");
    if dof >= p {
        let mut a = DMatrix::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new((dof - i) as f64).expect("positive dof");
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = normal(rng);
            }
        }
        let w = &a * a.transpose();
        symmetrize(w)
    } else {
        let g = DMatrix::from_fn(p, dof, |_, _| normal(rng));
        symmetrize(&g * g.transpose())
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// `(r/m)(W + √(2mx) N)` from given draws.
pub fn assemble_c(params: &EnsembleParams, w: &DMatrix<f64>, n: &DMatrix<f64>) -> DMatrix<f64> {
    let s = (2.0 * params.m * params.x).sqrt();
    (w + n * s) * (params.r / params.m)
}

/// Sample of `C(x) = (r/m)(W + √(2mx)N)` with `W ∼ W_p(round(2m), I)` and `N ∼ GOE_p`.
pub fn sample_c<R: Rng + ?Sized>(params: &EnsembleParams, rng: &mut R) -> Result<DMatrix<f64>> {
    params.validate()?;
    let w = sample_wishart_real(params.p, params.wishart_dof(), rng);
    let n = sample_goe(params.p, rng);
    Ok(assemble_c(params, &w, &n))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Pooled eigenvalues of `draws` samples of `C(x)`.
pub fn pooled_c_spectrum<R: Rng + ?Sized>(params: &EnsembleParams, draws: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(draws * params.p);
    for _ in 0..draws {
        out.extend(sym_eigenvalues(&sample_c(params, rng)?));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Explicit WHRF `F(θ) = m⁻¹ Σ_μ |Σ_a w_a(θ) X_{aμ}|²` with `J = X X†`.
///
/// Slot `k = s·p + i` of the `q = p·r` tensor factors carries a copy of
/// parameter `i`; bit `k` of a row index selects `cos` (0) or `sin` (1).
#[derive(Debug, Clone)]
pub struct WhrfField {
    p: usize,
    r: usize,
    m: usize,
    /// `2^q × m` standard complex normal factor, `E|X|² = 1`.
    x: DMatrix<Complex64>,
}

/// Value, gradient and Hessian of a WHRF at `θ = 0`.
#[derive(Debug, Clone)]
pub struct WhrfSample {
    pub loss: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

impl WhrfField {
    pub fn sample<R: Rng + ?Sized>(p: usize, m: usize, r: usize, rng: &mut R) -> Result<Self> {
        let q = p * r;
        if p == 0 || r == 0 || m == 0 {
            return Err(Error::InvalidArgument("p, m and r must be positive".into()));
        }
        if q > MAX_WHRF_SLOTS {
            return Err(Error::DimensionTooLarge {
                n: q,
                max: MAX_WHRF_SLOTS,
            });
        }
        let x = DMatrix::from_fn(1 << q, m, |_, _| complex_normal(rng));
        Ok(Self { p, r, m, x })
    }

    /// Field conditioned on `F(0) = x0` and `∇F(0) = 0` (exact Gaussian conditioning).
    pub fn sample_conditioned<R: Rng + ?Sized>(p: usize, m: usize, r: usize, x0: f64, rng: &mut R) -> Result<Self> {
        if !(x0 > 0.0) {
            return Err(Error::InvalidArgument(format!("conditioning energy must be > 0, got {x0}")));
        }
        let mut f = Self::sample(p, m, r, rng)?;
        // Row 0 has an independent norm and direction; fix the norm so J₀₀ = m·x0.
        let norm0 = (0..m).map(|mu| f.x[(0, mu)].norm_sqr()).sum::<f64>().sqrt();
        let target = (m as f64 * x0).sqrt();
        for mu in 0..m {
            f.x[(0, mu)] *= target / norm0;
        }
        // ∂_iF ∝ Σ_s Re c_{e(i@s)} with c_a = ⟨X₀, X_a⟩/|X₀| i.i.d.; conditioning the sum
        // on zero subtracts the per-parameter mean of Re c along the unit vector X₀/|X₀|.
        let u: Vec<Complex64> = (0..m).map(|mu| f.x[(0, mu)] / target).collect();
        for i in 0..p {
            let rows: Vec<usize> = (0..r).map(|s| 1usize << (s * p + i)).collect();
            let re_c: Vec<f64> = rows
                .iter()
                .map(|&a| (0..m).map(|mu| f.x[(a, mu)] * u[mu].conj()).sum::<Complex64>().re)
                .collect();
            let mean = re_c.iter().sum::<f64>() / r as f64;
            for &a in &rows {
                for mu in 0..m {
                    f.x[(a, mu)] -= u[mu] * mean;
                }
            }
        }
        Ok(f)
    }

    pub fn num_params(&self) -> usize {
        self.p
    }

    pub fn dof(&self) -> usize {
        self.m
    }

    /// `J_{ab} = Σ_μ X_{aμ} conj(X_{bμ})`.
    fn j(&self, a: usize, b: usize) -> Complex64 {
        (0..self.m).map(|mu| self.x[(a, mu)] * self.x[(b, mu)].conj()).sum()
    }

    fn slot_bit(&self, i: usize, s: usize) -> usize {
        1usize << (s * self.p + i)
    }

    /// `F(θ)` by direct contraction.
    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.p {
            return Err(Error::InvalidArgument(format!(
                "expected {} angles, got {}",
                self.p,
                theta.len()
            )));
        }
        let q = self.p * self.r;
        let (c, s): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.cos(), t.sin())).unzip();
        let w: Vec<f64> = (0..1usize << q)
            .map(|a| {
                (0..q)
                    .map(|k| {
                        let i = k % self.p;
                        if a >> k & 1 == 0 {
                            c[i]
                        } else {
                            s[i]
                        }
                    })
                    .product()
            })
            .collect();
        let mut total = 0.0;
        for mu in 0..self.m {
            let acc: Complex64 = w.iter().enumerate().map(|(a, wa)| self.x[(a, mu)] * *wa).sum();
            total += acc.norm_sqr();
        }
        Ok(total / self.m as f64)
    }

    /// Loss, gradient and Hessian at `θ = 0` from the index formulas.
    pub fn at_north_pole(&self) -> WhrfSample {
        let (p, r) = (self.p, self.r);
        let mf = self.m as f64;
        let j00 = self.j(0, 0).re;
        let gradient = DVector::from_fn(p, |i, _| {
            2.0 * (0..r).map(|s| self.j(self.slot_bit(i, s), 0).re).sum::<f64>() / mf
        });
        let mut hessian = DMatrix::zeros(p, p);
        for i in 0..p {
            for jdx in i..p {
                let mut acc = 0.0;
                for s in 0..r {
                    for t in 0..r {
                        let (a, b) = (self.slot_bit(i, s), self.slot_bit(jdx, t));
                        if a != b {
                            acc += 2.0 * self.j(a | b, 0).re;
                        }
                        acc += 2.0 * self.j(a, b).re;
                    }
                }
                if i == jdx {
                    acc -= 2.0 * r as f64 * j00;
                }
                hessian[(i, jdx)] = acc / mf;
                hessian[(jdx, i)] = acc / mf;
            }
        }
        WhrfSample {
            loss: j00 / mf,
            gradient,
            hessian,
        }
    }
}

/// Fresh explicit WHRF evaluated at `θ = 0`.
pub fn whrf_direct<R: Rng + ?Sized>(p: usize, m: usize, r: usize, rng: &mut R) -> Result<WhrfSample> {
    Ok(WhrfField::sample(p, m, r, rng)?.at_north_pole())
}
