//! Bit-mask Pauli strings.
//!
//! A [`PauliString`] on `n` qubits is stored as a pair of bit masks `(x, z)`
//! plus a global phase `i^k`. Qubit `j` carries `I`, `X`, `Z` or `Y` for
//! `(x_j, z_j)` equal to `(0,0)`, `(1,0)`, `(0,1)` and `(1,1)` respectively.
//! Text rendering lists qubit 0 first, e.g. `+XIZY`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Global phase `i^k`, `k` taken mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    /// Exponent `k` in `0..4`.
    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `(re, im)` of the unit.
    pub fn as_pair(self) -> (i8, i8) {
        match self.0 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })
    }
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An `n`-qubit Pauli operator `i^k · σ_0 ⊗ … ⊗ σ_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Phase,
}

fn words(n: usize) -> usize {
    n.div_ceil(WORD).max(1)
}

fn popcount(words: impl Iterator<Item = u64>) -> u32 {
    words.map(u64::count_ones).sum()
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: Phase::ONE,
        }
    }

    /// Build from explicit masks. Bits at positions `>= n` are rejected.
    pub fn from_masks(n: usize, x: Vec<u64>, z: Vec<u64>, phase: Phase) -> Result<Self> {
        let w = words(n);
        if x.len() != w || z.len() != w {
            return Err(Error::InvalidArgument(format!(
                "mask length must be {w} words for {n} qubits"
            )));
        }
        let s = Self { n, x, z, phase };
        if !s.masks_in_range() {
            return Err(Error::InvalidArgument(format!(
                "mask bits set beyond qubit {n}"
            )));
        }
        Ok(s)
    }

    /// Convenience constructor for `n <= 64`.
    pub fn from_u64(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > WORD {
            return Err(Error::InvalidArgument("from_u64 needs n <= 64".into()));
        }
        Self::from_masks(n, vec![x], vec![z], Phase::ONE)
    }

    /// `letter` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        let mut s = Self::identity(n);
        s.set(qubit, letter)?;
        Ok(s)
    }

    /// Product of letters on the given qubits.
    pub fn from_sparse(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(q, p) in factors {
            s.set(q, p)?;
        }
        Ok(s)
    }

    fn set(&mut self, qubit: usize, letter: Pauli) -> Result<()> {
        if qubit >= self.n {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n
            )));
        }
        let (xb, zb) = letter.bits();
        let (w, b) = (qubit / WORD, qubit % WORD);
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
        Ok(())
    }

    fn masks_in_range(&self) -> bool {
        let w = words(self.n);
        let tail = self.n % WORD;
        let top = if self.n == 0 {
            0
        } else if tail == 0 {
            u64::MAX
        } else {
            (1u64 << tail) - 1
        };
        let ok_word = |m: &[u64]| {
            m.iter().enumerate().all(|(i, &v)| match i.cmp(&(w - 1)) {
                std::cmp::Ordering::Less => true,
                _ => v & !top == 0,
            })
        };
        ok_word(&self.x) && ok_word(&self.z)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn x_mask(&self) -> &[u64] {
        &self.x
    }

    pub fn z_mask(&self) -> &[u64] {
        &self.z
    }

    /// Masks as single words; `None` when `n > 64`.
    pub fn low_masks(&self) -> Option<(u64, u64)> {
        (self.n <= WORD).then(|| (self.x[0], self.z[0]))
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        let (w, b) = (qubit / WORD, qubit % WORD);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        popcount(self.x.iter().zip(&self.z).map(|(a, b)| a | b))
    }

    /// True when both masks vanish (any phase).
    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity_up_to_phase() && self.phase == Phase::ONE
    }

    /// Hermitian iff the phase is `±1`.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Same operator content with phase `+1`.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(Phase::ONE)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Group product `self · other` with accumulated phase.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        // σ(x,z) = i^{x·z} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{z1·x2}.
        let y1 = popcount(self.x.iter().zip(&self.z).map(|(a, b)| a & b));
        let y2 = popcount(other.x.iter().zip(&other.z).map(|(a, b)| a & b));
        let swap = popcount(self.z.iter().zip(&other.x).map(|(a, b)| a & b));
        let x: Vec<u64> = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z: Vec<u64> = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        let y = popcount(x.iter().zip(&z).map(|(a, b)| a & b));
        let k = i64::from(y1) + i64::from(y2) + 2 * i64::from(swap) - i64::from(y)
            + i64::from(self.phase.exponent())
            + i64::from(other.phase.exponent());
        Ok(Self {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(k),
        })
    }

    /// Image of the basis state `|k⟩`: `P|k⟩ = phase · |k ⊕ x⟩`. Only valid for `n <= 64`.
    #[inline]
    pub fn basis_action(&self, k: u64) -> (u64, Phase) {
        let (x, z) = (self.x[0], self.z[0]);
        let k_exp = (x & z).count_ones() + 2 * (z & k).count_ones();
        (k ^ x, self.phase * Phase::from_exponent(i64::from(k_exp)))
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        let s = popcount(
            self.x
                .iter()
                .zip(&other.z)
                .zip(self.z.iter().zip(&other.x))
                .map(|((ax, bz), (az, bx))| (ax & bz) ^ (az & bx)),
        );
        Ok(s % 2 == 0)
    }
}

/// Free-function form of [`PauliString::multiply`].
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.multiply(b)
}

/// Free-function form of [`PauliString::commutes`].
pub fn commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    a.commutes(b)
}

/// Uniform draw over the `4^n` mask pairs (or `4^n - 1` without identity), phase `+1`.
///
/// Sign is never sampled: `±Q` only reparameterizes `θ → -θ` in a rotation.
pub fn sample_uniform_pauli<R: Rng + ?Sized>(
    n: usize,
    exclude_identity: bool,
    rng: &mut R,
) -> PauliString {
    assert!(n >= 1, "need at least one qubit");
    let w = words(n);
    let tail = n % WORD;
    loop {
        let mut x: Vec<u64> = (0..w).map(|_| rng.random()).collect();
        let mut z: Vec<u64> = (0..w).map(|_| rng.random()).collect();
        if tail != 0 {
            let top = (1u64 << tail) - 1;
            x[w - 1] &= top;
            z[w - 1] &= top;
        }
        let s = PauliString {
            n,
            x,
            z,
            phase: Phase::ONE,
        };
        if !(exclude_identity && s.is_identity_up_to_phase()) {
            return s;
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-][i]LETTERS`, e.g. `+XIZY`, `-iZZ`, `XX`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, rest) = match s.strip_prefix('-') {
            Some(r) => (2, r),
            None => (0, s.strip_prefix('+').unwrap_or(s)),
        };
        let (imag, letters) = match rest.strip_prefix('i') {
            Some(r) => (1, r),
            None => (0, rest),
        };
        if letters.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string '{s}'")));
        }
        let n = letters.chars().count();
        let mut out = PauliString::identity(n);
        for (q, c) in letters.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::Parse(format!("bad Pauli letter '{c}' in '{s}'"))),
            };
            out.set(q, p)?;
        }
        out.phase = Phase::from_exponent(sign + imag);
        Ok(out)
    }
}
