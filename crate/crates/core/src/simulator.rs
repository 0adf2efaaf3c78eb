//! Dense statevector simulation of Pauli-rotation circuits.

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::pauli::{PauliString, Phase};
use crate::scalar::Real;

/// Largest register the simulator will allocate.
pub const MAX_SIM_QUBITS: usize = 24;

/// Finite-difference step in radians.
pub const FD_STEP: f64 = 1e-4;

fn unit<T: Real>(ph: Phase) -> Complex<T> {
    let (re, im) = ph.as_pair();
    Complex::new(T::lit(f64::from(re)), T::lit(f64::from(im)))
}

/// `2ⁿ` complex amplitudes; bit `j` of the index is qubit `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Computational basis state `|k⟩`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(Error::DimensionTooLarge {
                n,
                max: MAX_SIM_QUBITS,
            });
        }
        let dim = 1usize << n;
        if k >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[k] = Complex::new(T::one(), T::zero());
        Ok(Self { n, amps })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Wraps amplitudes after checking the length and normalizing.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let mut s = Self {
            n: dim.trailing_zeros() as usize,
            amps,
        };
        let norm = s.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidArgument("state has zero or non-finite norm".into()));
        }
        for a in &mut s.amps {
            *a = *a / norm;
        }
        Ok(s)
    }

    /// Haar-random state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        use rand_distr::StandardNormal;
        let amps = (0..1usize << n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        Self::from_amplitudes(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_n(other.n)?;
        Ok(dot(&self.amps, &other.amps))
    }

    /// Total probability on basis states of Hamming weight `w`.
    pub fn weight_probability(&self, w: usize) -> T {
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k.count_ones() as usize == w)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn cast<U: Real>(&self) -> StateVector<U> {
        StateVector {
            n: self.n,
            amps: self
                .amps
                .iter()
                .map(|a| Complex::new(U::lit(a.re.to_f64_lossy()), U::lit(a.im.to_f64_lossy())))
                .collect(),
        }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: n,
            });
        }
        Ok(())
    }

    /// `P|s⟩`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        self.check_n(p.num_qubits())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        for (k, a) in self.amps.iter().enumerate() {
            let (j, ph) = p.basis_action(k as u64);
            out[j as usize] = unit::<T>(ph) * *a;
        }
        Ok(Self { n: self.n, amps: out })
    }

    /// In-place `e^{−iθg}` for a Hermitian Pauli `g`.
    pub fn rotate(&mut self, g: &PauliString, angle: T) -> Result<()> {
        self.check_n(g.num_qubits())?;
        if !g.is_hermitian() {
            return Err(Error::NonHermitian(format!("rotation generator {g}")));
        }
        rotate_in_place(&mut self.amps, g, angle);
        Ok(())
    }

    /// Hadamard on `q`.
    pub fn h(&mut self, q: usize) {
        let bit = 1usize << q;
        let r = T::FRAC_1_SQRT_2();
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a, b) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = (a + b) * r;
                self.amps[k | bit] = (a - b) * r;
            }
        }
    }

    /// Phase gate diag(1, i) on `q`.
    pub fn s(&mut self, q: usize) {
        let bit = 1usize << q;
        for (k, a) in self.amps.iter_mut().enumerate() {
            if k & bit != 0 {
                *a = Complex::new(-a.im, a.re);
            }
        }
    }

    /// CNOT with control `c`, target `t`.
    pub fn cx(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for k in 0..self.amps.len() {
            if k & cb != 0 && k & tb == 0 {
                self.amps.swap(k, k | tb);
            }
        }
    }
}

#[inline]
fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

fn rotate_in_place<T: Real>(amps: &mut [Complex<T>], g: &PauliString, angle: T) {
    let (c, s) = (angle.cos(), angle.sin());
    let (xm, zm) = g.low_masks().expect("simulator registers fit one word");
    let (x, z) = (xm as usize, zm as usize);
    // g|k⟩ = base · (−1)^{|z & k|} |k ⊕ x⟩
    let base = unit::<T>(g.phase() * Phase::from_exponent(i64::from((xm & zm).count_ones())));
    let sign = |k: usize| if (z & k).count_ones() % 2 == 0 { T::one() } else { -T::one() };
    let mis = Complex::new(T::zero(), -s);
    if x == 0 {
        for (k, a) in amps.iter_mut().enumerate() {
            let d = base * sign(k);
            *a = *a * c + mis * d * *a;
        }
        return;
    }
    let low = x & x.wrapping_neg();
    for k in 0..amps.len() {
        if k & low != 0 {
            continue;
        }
        let j = k ^ x;
        let (a, b) = (amps[k], amps[j]);
        // (g s)_k = base·sign(j)·s_j, (g s)_j = base·sign(k)·s_k
        amps[k] = a * c + mis * base * sign(j) * b;
        amps[j] = b * c + mis * base * sign(k) * a;
    }
}

/// `e^{−iθg}|s⟩` as a new state.
pub fn apply_pauli_rotation<T: Real>(
    s: &StateVector<T>,
    g: &PauliString,
    angle: T,
) -> Result<StateVector<T>> {
    let mut out = s.clone();
    out.rotate(g, angle)?;
    Ok(out)
}

/// Gates per `n²` in [`random_clifford_state`]. At `2n²` the energy variance
/// over draws was still about twice the Haar value for six qubits; `10n²` matches it.
pub const CLIFFORD_GATES_PER_N2: usize = 10;

/// Random H/S/CX walk of `10n²` gates applied to `|0…0⟩`.
pub fn random_clifford_state<T: Real>(n: usize, seed: u64) -> Result<StateVector<T>> {
    let mut s = StateVector::zero(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..CLIFFORD_GATES_PER_N2 * n * n {
        let kind = if n >= 2 { rng.random_range(0..3) } else { rng.random_range(0..2) };
        match kind {
            0 => s.h(rng.random_range(0..n)),
            1 => s.s(rng.random_range(0..n)),
            _ => {
                let c = rng.random_range(0..n);
                let mut t = rng.random_range(0..n - 1);
                if t >= c {
                    t += 1;
                }
                s.cx(c, t);
            }
        }
    }
    Ok(s)
}

/// Reference state the circuit acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Computational basis state, bit `j` = qubit `j`.
    Basis(u64),
    /// Random Clifford-circuit state drawn from this seed.
    CliffordPrefix(u64),
}

impl InitialState {
    pub fn prepare<T: Real>(&self, n: usize) -> Result<StateVector<T>> {
        match *self {
            InitialState::Basis(k) => StateVector::basis(n, k as usize),
            InitialState::CliffordPrefix(seed) => random_clifford_state(n, seed),
        }
    }
}

/// One `e^{−i·scale·θ_idx·generator}` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub generator: PauliString,
    pub param_index: usize,
    pub scale: f64,
}

/// Ordered Pauli-rotation circuit with shared parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzProgram {
    n: usize,
    p: usize,
    rotations: Vec<Rotation>,
    initial: InitialState,
}

impl AnsatzProgram {
    /// Checks that generators are Hermitian strings on `n` qubits and each index in `0..p` is used.
    pub fn new(n: usize, p: usize, rotations: Vec<Rotation>, initial: InitialState) -> Result<Self> {
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::DimensionTooLarge {
                n,
                max: MAX_SIM_QUBITS,
            });
        }
        let mut used = vec![false; p];
        for r in &rotations {
            if r.generator.num_qubits() != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: r.generator.num_qubits(),
                });
            }
            if !r.generator.is_hermitian() {
                return Err(Error::NonHermitian(format!("generator {}", r.generator)));
            }
            if r.param_index >= p {
                return Err(Error::InvalidArgument(format!(
                    "parameter index {} >= p = {p}",
                    r.param_index
                )));
            }
            used[r.param_index] = true;
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!("parameter {i} governs no rotation")));
        }
        Ok(Self {
            n,
            p,
            rotations,
            initial,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        self.p
    }

    /// Rotation count `q`.
    pub fn num_rotations(&self) -> usize {
        self.rotations.len()
    }

    /// `q / p` when integral.
    pub fn multiplicity(&self) -> Option<usize> {
        (self.rotations.len() % self.p == 0).then(|| self.rotations.len() / self.p)
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn initial(&self) -> InitialState {
        self.initial
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    fn check_params<T>(&self, params: &[T]) -> Result<()> {
        if params.len() != self.p {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.p,
                params.len()
            )));
        }
        Ok(())
    }

    fn angle<T: Real>(&self, j: usize, params: &[T]) -> T {
        let r = &self.rotations[j];
        T::lit(r.scale) * params[r.param_index]
    }

    /// Applies the circuit to a given input state.
    pub fn apply<T: Real>(&self, start: StateVector<T>, params: &[T]) -> Result<StateVector<T>> {
        self.check_params(params)?;
        start.check_n(self.n)?;
        let mut s = start;
        for j in 0..self.rotations.len() {
            rotate_in_place(&mut s.amps, &self.rotations[j].generator, self.angle(j, params));
        }
        Ok(s)
    }

    /// `|θ⟩`, rotations applied in listed order to the initial state.
    pub fn prepare<T: Real>(&self, params: &[T]) -> Result<StateVector<T>> {
        self.apply(self.initial.prepare(self.n)?, params)
    }

    fn prepare_shifted<T: Real>(&self, init: &StateVector<T>, params: &[T], j0: usize, delta: T) -> StateVector<T> {
        let mut s = init.clone();
        for j in 0..self.rotations.len() {
            let mut a = self.angle(j, params);
            if j == j0 {
                a += delta;
            }
            rotate_in_place(&mut s.amps, &self.rotations[j].generator, a);
        }
        s
    }
}

/// `prepare(a, params)`.
pub fn prepare<T: Real>(a: &AnsatzProgram, params: &[T]) -> Result<StateVector<T>> {
    a.prepare(params)
}

/// A Hermitian operator acting on statevectors.
pub trait Observable<T: Real> {
    fn num_qubits(&self) -> usize;

    /// `out = H ψ`; `out` is overwritten.
    fn apply_into(&self, psi: &[Complex<T>], out: &mut [Complex<T>]);

    /// `⟨ψ|H|ψ⟩` with the imaginary part checked.
    fn expectation(&self, s: &StateVector<T>) -> Result<T> {
        if s.num_qubits() != self.num_qubits() {
            return Err(Error::SizeMismatch {
                left: s.num_qubits(),
                right: self.num_qubits(),
            });
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); s.dim()];
        self.apply_into(s.amplitudes(), &mut out);
        let e = dot(s.amplitudes(), &out);
        check_real(e)
    }
}

fn check_real<T: Real>(e: Complex<T>) -> Result<T> {
    let tol = T::lit(1e-9) * (T::one() + e.re.abs());
    // f32 accumulations cannot meet an absolute 1e-9.
    let tol = tol.max(T::epsilon() * T::lit(64.0) * (T::one() + e.re.abs()));
    if e.im.abs() > tol {
        return Err(Error::NonHermitian(format!(
            "expectation has imaginary part {}",
            e.im
        )));
    }
    Ok(e.re)
}

/// Pauli sum compiled into per-X-mask diagonal tables.
#[derive(Debug, Clone)]
pub struct CompiledObservable<T> {
    n: usize,
    /// `(x, d)` with `H|k⟩ ∋ d[k] |k ⊕ x⟩`.
    groups: Vec<(usize, Vec<Complex<T>>)>,
}

impl<T: Real> CompiledObservable<T> {
    pub fn new(h: &PauliSum<T>) -> Result<Self> {
        let n = h.num_qubits();
        if n > MAX_SIM_QUBITS {
            return Err(Error::DimensionTooLarge {
                n,
                max: MAX_SIM_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut groups: Vec<(usize, Vec<Complex<T>>)> = Vec::new();
        for (c, p) in h.terms() {
            let (xm, _) = p.low_masks().expect("n <= 64");
            let x = xm as usize;
            let idx = match groups.iter().position(|(gx, _)| *gx == x) {
                Some(i) => i,
                None => {
                    groups.push((x, vec![Complex::new(T::zero(), T::zero()); dim]));
                    groups.len() - 1
                }
            };
            let table = &mut groups[idx].1;
            for (k, d) in table.iter_mut().enumerate() {
                let (_, ph) = p.basis_action(k as u64);
                *d += unit::<T>(ph) * *c;
            }
        }
        groups.sort_by_key(|g| g.0);
        Ok(Self { n, groups })
    }
}

impl<T: Real> Observable<T> for CompiledObservable<T> {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn apply_into(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        out.iter_mut().for_each(|o| *o = Complex::new(T::zero(), T::zero()));
        for (x, d) in &self.groups {
            for (k, (a, dk)) in psi.iter().zip(d).enumerate() {
                out[k ^ x] += *dk * *a;
            }
        }
    }
}

impl<T: Real> Observable<T> for PauliSum<T> {
    fn num_qubits(&self) -> usize {
        PauliSum::num_qubits(self)
    }

    fn apply_into(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        out.iter_mut().for_each(|o| *o = Complex::new(T::zero(), T::zero()));
        for (c, p) in self.terms() {
            for (k, a) in psi.iter().enumerate() {
                let (j, ph) = p.basis_action(k as u64);
                out[j as usize] += unit::<T>(ph) * *a * *c;
            }
        }
    }
}

/// Dense Hermitian operator.
#[derive(Debug, Clone)]
pub struct DenseObservable {
    n: usize,
    matrix: DMatrix<Complex64>,
}

impl DenseObservable {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || d == 0 || !d.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "dense observable must be square with power-of-two size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            n: d.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

impl<T: Real> Observable<T> for DenseObservable {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn apply_into(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        let d = self.matrix.nrows();
        for (r, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, a) in psi.iter().enumerate() {
                acc += self.matrix[(r, c)] * Complex64::new(a.re.to_f64_lossy(), a.im.to_f64_lossy());
            }
            *o = Complex::new(T::lit(acc.re), T::lit(acc.im));
        }
    }
}

/// `Re⟨s|H|s⟩`, rejecting a non-negligible imaginary part.
pub fn energy<T: Real, O: Observable<T> + ?Sized>(s: &StateVector<T>, h: &O) -> Result<T> {
    h.expectation(s)
}

/// How the gradient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Exact `F(φ+π/4) − F(φ−π/4)` per rotation occurrence.
    ParameterShift,
    /// Central differences with step [`FD_STEP`].
    FiniteDifference,
    /// Exact reverse-mode sweep; same values as parameter shift at `O(q)` cost.
    #[default]
    Adjoint,
}

/// Energy at `params` together with `∇F`.
pub fn energy_and_gradient<T: Real, O: Observable<T> + ?Sized>(
    a: &AnsatzProgram,
    params: &[T],
    h: &O,
    mode: GradientMode,
) -> Result<(T, Vec<T>)> {
    match mode {
        GradientMode::Adjoint => adjoint_gradient(a, params, h),
        GradientMode::ParameterShift => {
            let e = energy(&a.prepare(params)?, h)?;
            Ok((e, parameter_shift_gradient(a, params, h)?))
        }
        GradientMode::FiniteDifference => {
            let e = energy(&a.prepare(params)?, h)?;
            Ok((e, finite_difference_gradient(a, params, h, T::lit(FD_STEP))?))
        }
    }
}

/// `∇F` in the requested mode.
pub fn gradient<T: Real, O: Observable<T> + ?Sized>(
    a: &AnsatzProgram,
    params: &[T],
    h: &O,
    mode: GradientMode,
) -> Result<Vec<T>> {
    energy_and_gradient(a, params, h, mode).map(|(_, g)| g)
}

fn check_observable<T: Real, O: Observable<T> + ?Sized>(a: &AnsatzProgram, h: &O) -> Result<()> {
    if a.num_qubits() != h.num_qubits() {
        return Err(Error::SizeMismatch {
            left: a.num_qubits(),
            right: h.num_qubits(),
        });
    }
    Ok(())
}

/// Exact shift-rule gradient, summed over every rotation sharing a parameter.
pub fn parameter_shift_gradient<T: Real, O: Observable<T> + ?Sized>(
    a: &AnsatzProgram,
    params: &[T],
    h: &O,
) -> Result<Vec<T>> {
    a.check_params(params)?;
    check_observable(a, h)?;
    let init = a.initial.prepare::<T>(a.n)?;
    let shift = T::FRAC_PI_4();
    let mut g = vec![T::zero(); a.p];
    for (j, rot) in a.rotations.iter().enumerate() {
        let plus = energy(&a.prepare_shifted(&init, params, j, shift), h)?;
        let minus = energy(&a.prepare_shifted(&init, params, j, -shift), h)?;
        g[rot.param_index] += (plus - minus) * T::lit(rot.scale);
    }
    Ok(g)
}

/// Central finite differences with step `step`.
pub fn finite_difference_gradient<T: Real, O: Observable<T> + ?Sized>(
    a: &AnsatzProgram,
    params: &[T],
    h: &O,
    step: T,
) -> Result<Vec<T>> {
    a.check_params(params)?;
    check_observable(a, h)?;
    let mut work = params.to_vec();
    let mut g = Vec::with_capacity(a.p);
    for i in 0..a.p {
        work[i] = params[i] + step;
        let plus = energy(&a.prepare(&work)?, h)?;
        work[i] = params[i] - step;
        let minus = energy(&a.prepare(&work)?, h)?;
        work[i] = params[i];
        g.push((plus - minus) / (step + step));
    }
    Ok(g)
}

/// Reverse-mode gradient: one forward pass, one backward pass.
pub fn adjoint_gradient<T: Real, O: Observable<T> + ?Sized>(
    a: &AnsatzProgram,
    params: &[T],
    h: &O,
) -> Result<(T, Vec<T>)> {
    check_observable(a, h)?;
    let phi = a.prepare(params)?;
    let mut phi = phi.amps;
    let mut lam = vec![Complex::new(T::zero(), T::zero()); phi.len()];
    h.apply_into(&phi, &mut lam);
    let e = check_real(dot(&phi, &lam))?;
    let mut tmp = vec![Complex::new(T::zero(), T::zero()); phi.len()];
    let mut g = vec![T::zero(); a.p];
    let two = T::lit(2.0);
    for j in (0..a.rotations.len()).rev() {
        let rot = &a.rotations[j];
        for (k, v) in phi.iter().enumerate() {
            let (t, ph) = rot.generator.basis_action(k as u64);
            tmp[t as usize] = unit::<T>(ph) * *v;
        }
        let d = two * dot(&lam, &tmp).im;
        g[rot.param_index] += d * T::lit(rot.scale);
        let back = -a.angle(j, params);
        rotate_in_place(&mut phi, &rot.generator, back);
        rotate_in_place(&mut lam, &rot.generator, back);
    }
    Ok((e, g))
}

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut t = (theta + T::PI()) % two_pi;
    if t < T::zero() {
        t += two_pi;
    }
    t - T::PI()
}
