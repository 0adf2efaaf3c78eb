//! Pauli-sum Hamiltonians, the disordered spinless Fermi–Hubbard chain, and
//! dense spectral statistics.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, Phase};
use crate::scalar::Real;

/// Largest qubit count accepted by the dense eigensolver.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Real-weighted sum of phase-free Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum<T> {
    n: usize,
    terms: Vec<(T, PauliString)>,
}

impl<T: Real> PauliSum<T> {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// Builds a sum, merging duplicate operators.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, PauliString)>,
    {
        let mut s = Self::new(n);
        for (c, p) in terms {
            s.add_term(c, p)?;
        }
        Ok(s)
    }

    /// Adds `c · op`. A `-1` phase is folded into the coefficient; imaginary phases are rejected.
    pub fn add_term(&mut self, c: T, op: PauliString) -> Result<()> {
        if op.num_qubits() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: op.num_qubits(),
            });
        }
        let c = match op.phase() {
            Phase::ONE => c,
            Phase::MINUS_ONE => -c,
            ph => {
                return Err(Error::NonHermitian(format!(
                    "term {op} carries phase {ph}"
                )))
            }
        };
        let op = op.unsigned();
        match self.terms.iter_mut().find(|(_, o)| *o == op) {
            Some((acc, _)) => *acc += c,
            None => self.terms.push((c, op)),
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    /// Term count `A`, identity included when present.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the identity string (zero when absent).
    pub fn identity_coefficient(&self) -> T {
        self.terms
            .iter()
            .filter(|(_, p)| p.is_identity())
            .map(|(c, _)| *c)
            .sum()
    }

    /// Sum without its identity component.
    pub fn without_identity(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(_, p)| !p.is_identity())
                .cloned()
                .collect(),
        }
    }

    /// Removes terms with `|c| <= tol`.
    pub fn pruned(&self, tol: T) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| c.abs() > tol)
                .cloned()
                .collect(),
        }
    }

    /// `a·H + b·I`.
    pub fn affine(&self, a: T, b: T) -> Self {
        let mut out = Self {
            n: self.n,
            terms: self.terms.iter().map(|(c, p)| (*c * a, p.clone())).collect(),
        };
        out.add_term(b, PauliString::identity(self.n))
            .expect("identity has matching size");
        out
    }

    pub fn cast<U: Real>(&self) -> PauliSum<U> {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(c, p)| (U::lit(c.to_f64_lossy()), p.clone()))
                .collect(),
        }
    }

    fn check_dense(&self) -> Result<()> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::DimensionTooLarge {
                n: self.n,
                max: MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }

    /// Dense `2ⁿ × 2ⁿ` matrix in the computational basis (qubit 0 is bit 0 of the index).
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, p) in &self.terms {
            let c = c.to_f64_lossy();
            for k in 0..dim {
                let (j, ph) = p.basis_action(k as u64);
                let (re, im) = ph.as_pair();
                m[(j as usize, k)] += Complex64::new(c * f64::from(re), c * f64::from(im));
            }
        }
        Ok(m)
    }

    /// True when every term has an even number of `Y` factors, so the matrix is real.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(_, p)| {
            let ys = (0..p.num_qubits()).filter(|&q| p.letter(q) == Pauli::Y).count();
            ys % 2 == 0
        })
    }
}

impl<T: Real> fmt::Display for PauliSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c:+}*{}", &p.to_string()[1..])?;
        }
        Ok(())
    }
}

/// Disordered spinless Fermi–Hubbard chain with open boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermiHubbardSpec {
    pub n: usize,
    #[serde(default = "default_t")]
    pub t_mean: f64,
    #[serde(default = "default_u")]
    pub u_mean: f64,
    #[serde(default = "default_variance")]
    pub disorder_variance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_t() -> f64 {
    1.0
}
fn default_u() -> f64 {
    2.0
}
fn default_variance() -> f64 {
    1e-2
}

/// Pauli terms contributed by one link `(l, l+1)`.
#[derive(Debug, Clone)]
pub struct LinkTerms {
    pub link: usize,
    pub t: f64,
    pub u: f64,
    /// `-(T/2) XX`, `-(T/2) YY`.
    pub hopping: Vec<(f64, PauliString)>,
    /// `(U/4)(I - Z_l - Z_{l+1} + Z_l Z_{l+1})`.
    pub coulomb: Vec<(f64, PauliString)>,
}

impl FermiHubbardSpec {
    /// `t = 1`, `U = 2` with variance `1e-2` disorder.
    pub fn standard(n: usize, seed: u64) -> Self {
        Self {
            n,
            t_mean: 1.0,
            u_mean: 2.0,
            disorder_variance: 1e-2,
            seed,
        }
    }

    pub fn clean(n: usize, t: f64, u: f64) -> Self {
        Self {
            n,
            t_mean: t,
            u_mean: u,
            disorder_variance: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "Fermi-Hubbard chain needs an even n >= 2, got {}",
                self.n
            )));
        }
        if !(self.disorder_variance >= 0.0) || !self.disorder_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "disorder variance must be finite and >= 0, got {}",
                self.disorder_variance
            )));
        }
        if !self.t_mean.is_finite() || !self.u_mean.is_finite() {
            return Err(Error::InvalidArgument("T and U must be finite".into()));
        }
        Ok(())
    }

    /// Per-link `(T_l, U_l)`, drawn as `T_0, U_0, T_1, U_1, …` from the spec seed.
    pub fn couplings(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let sd = self.disorder_variance.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let t = Normal::new(self.t_mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let u = Normal::new(self.u_mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok((0..self.n - 1)
            .map(|_| {
                let tl = t.sample(&mut rng);
                let ul = u.sample(&mut rng);
                (tl, ul)
            })
            .collect())
    }

    /// Jordan–Wigner terms grouped by link, before merging.
    pub fn link_terms(&self) -> Result<Vec<LinkTerms>> {
        let n = self.n;
        let couplings = self.couplings()?;
        let mut out = Vec::with_capacity(n - 1);
        for (l, &(t, u)) in couplings.iter().enumerate() {
            let pair = |a: Pauli, b: Pauli| {
                PauliString::from_sparse(n, &[(l, a), (l + 1, b)]).expect("link within chain")
            };
            let hopping = vec![(-t / 2.0, pair(Pauli::X, Pauli::X)), (-t / 2.0, pair(Pauli::Y, Pauli::Y))];
            let coulomb = vec![
                (u / 4.0, PauliString::identity(n)),
                (-u / 4.0, PauliString::single(n, l, Pauli::Z)?),
                (-u / 4.0, PauliString::single(n, l + 1, Pauli::Z)?),
                (u / 4.0, pair(Pauli::Z, Pauli::Z)),
            ];
            out.push(LinkTerms {
                link: l,
                t,
                u,
                hopping,
                coulomb,
            });
        }
        Ok(out)
    }
}

/// Jordan–Wigner image of the chain as a merged Pauli sum.
pub fn build_fermi_hubbard(spec: &FermiHubbardSpec) -> Result<PauliSum<f64>> {
    let links = spec.link_terms()?;
    let mut h = PauliSum::new(spec.n);
    for lt in links {
        for (c, p) in lt.hopping.into_iter().chain(lt.coulomb) {
            h.add_term(c, p)?;
        }
    }
    Ok(h)
}

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-12 * scale {
        return Err(Error::NonHermitian(format!("max |H - H^†| = {dev:e}")));
    }
    Ok(())
}

/// Dense Hermitian eigendecomposition; takes the real symmetric path when possible.
pub fn eigh_dense(m: &DMatrix<Complex64>) -> Result<Eigen> {
    check_hermitian(m)?;
    let real = m.iter().all(|z| z.im == 0.0);
    let (values, vectors) = if real {
        let re = m.map(|z| z.re);
        let e = re.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors.map(|v| Complex64::new(v, 0.0)))
    } else {
        let e = m.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, order[c])]);
    Ok(Eigen {
        values: sorted,
        vectors: vecs,
    })
}

/// Dense eigenvalues only.
pub fn eigvals_dense(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let mut v: Vec<f64> = if m.iter().all(|z| z.im == 0.0) {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Ascending eigenvalues of `h`.
pub fn diagonalize<T: Real>(h: &PauliSum<T>) -> Result<Vec<f64>> {
    eigvals_dense(&h.to_dense()?)
}

/// Eigenpairs of `h`.
pub fn eigh<T: Real>(h: &PauliSum<T>) -> Result<Eigen> {
    eigh_dense(&h.to_dense()?)
}

/// Spectral summary used to normalize energies and compute `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub dim: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_mean: f64,
    /// `‖H − λ₁‖_* = Σ(λ_i − λ₁)`.
    pub nuclear_norm: f64,
    /// `‖H − λ̄‖_F² = Σ(λ_i − λ̄)²`.
    pub frobenius_sq: f64,
    pub m: f64,
    pub m_rounded: u64,
    /// `λ̄ − λ₁`.
    pub c_vqa: f64,
}

impl SpectralStats {
    /// Overparameterization factor `γ = p / 2m`.
    pub fn gamma(&self, p: usize) -> f64 {
        p as f64 / (2.0 * self.m)
    }

    /// `(E − λ₁) / (λ̄ − λ₁)`.
    pub fn normalize(&self, e_raw: f64) -> f64 {
        (e_raw - self.lambda_min) / self.c_vqa
    }

    pub fn denormalize(&self, e: f64) -> f64 {
        self.lambda_min + e * self.c_vqa
    }
}

/// Statistics of a sorted spectrum.
pub fn spectral_stats(eigs: &[f64]) -> Result<SpectralStats> {
    if eigs.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if eigs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("spectrum must be sorted ascending".into()));
    }
    let dim = eigs.len();
    let l1 = eigs[0];
    let lmax = eigs[dim - 1];
    let mean = eigs.iter().sum::<f64>() / dim as f64;
    let nuclear: f64 = eigs.iter().map(|l| l - l1).sum();
    let frob: f64 = eigs.iter().map(|l| (l - mean).powi(2)).sum();
    let scale = l1.abs().max(lmax.abs()).max(1.0);
    if lmax - l1 <= 1e-12 * scale || frob <= 0.0 {
        return Err(Error::DegenerateSpectrum(l1));
    }
    let m = nuclear * nuclear / frob;
    Ok(SpectralStats {
        dim,
        lambda_min: l1,
        lambda_max: lmax,
        lambda_mean: mean,
        nuclear_norm: nuclear,
        frobenius_sq: frob,
        m,
        m_rounded: m.round().max(1.0) as u64,
        c_vqa: mean - l1,
    })
}

/// `normalized_energy(E, stats) = (E − λ₁)/c_VQA`.
pub fn normalized_energy(e_raw: f64, stats: &SpectralStats) -> Result<f64> {
    if !(stats.c_vqa > 0.0) {
        return Err(Error::DegenerateSpectrum(stats.lambda_min));
    }
    Ok(stats.normalize(e_raw))
}

/// A Hamiltonian projected onto a fixed-Hamming-weight sector.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub fermion_count: usize,
    /// Basis indices of the sector, ascending.
    pub basis: Vec<usize>,
    pub matrix: DMatrix<Complex64>,
    pub eigenvalues: Vec<f64>,
    pub stats: SpectralStats,
}

/// Basis indices with `weight` bits set among `n`.
pub fn sector_basis(n: usize, weight: usize) -> Vec<usize> {
    (0..1usize << n)
        .filter(|k| k.count_ones() as usize == weight)
        .collect()
}

/// Largest matrix element linking different Hamming weights.
pub fn number_leak(m: &DMatrix<Complex64>) -> f64 {
    let mut leak: f64 = 0.0;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r.count_ones() != c.count_ones() {
                leak = leak.max(m[(r, c)].norm());
            }
        }
    }
    leak
}

/// Projects onto the `fermion_count` sector after checking `[H, N] = 0` to `1e-9`.
pub fn restrict_to_sector<T: Real>(h: &PauliSum<T>, fermion_count: usize) -> Result<SectorHamiltonian> {
    if fermion_count > h.num_qubits() {
        return Err(Error::InvalidArgument(format!(
            "sector {fermion_count} exceeds {} qubits",
            h.num_qubits()
        )));
    }
    let full = h.to_dense()?;
    let leak = number_leak(&full);
    if leak > 1e-9 {
        return Err(Error::NumberNotConserved(leak));
    }
    let basis = sector_basis(h.num_qubits(), fermion_count);
    let d = basis.len();
    let matrix = DMatrix::from_fn(d, d, |r, c| full[(basis[r], basis[c])]);
    let eigenvalues = eigvals_dense(&matrix)?;
    let stats = spectral_stats(&eigenvalues)?;
    Ok(SectorHamiltonian {
        fermion_count,
        basis,
        matrix,
        eigenvalues,
        stats,
    })
}
