//! Limiting spectral measure `μ*_x` of `C(x)`: Stieltjes transform from the
//! cubic equation, inversion to a density, support edges, the band edge `E₀`
//! and the logarithmic local-minima asymptotics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cubic::{cubic_discriminant, solve_cubic_reversed};
use crate::error::{Error, Result};

/// Imaginary offsets used for the Richardson-extrapolated density.
pub const EPSILONS: (f64, f64) = (1e-6, 1e-7);

/// Quadrature nodes per support interval.
pub const DEFAULT_NODES: usize = 2000;

const SCAN_POINTS: usize = 20_000;

/// `(γ, r, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeModelParams {
    pub gamma: f64,
    pub r: f64,
    pub x: f64,
}

impl FreeModelParams {
    pub fn new(gamma: f64, r: f64, x: f64) -> Result<Self> {
        let s = Self { gamma, r, x };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.r >= 1.0) || !self.r.is_finite() {
            return Err(Error::InvalidArgument(format!("r must be >= 1, got {}", self.r)));
        }
        if !(self.x >= 0.0) || !self.x.is_finite() {
            return Err(Error::InvalidArgument(format!("x must be >= 0, got {}", self.x)));
        }
        Ok(())
    }

    /// `[a₃, a₂, a₁, a₀]` of `8r³γ²x G³ − 2rγ(z+2rx) G² + (z − 2r(1−γ)) G − 1`.
    pub fn coefficients(&self, z: Complex64) -> [Complex64; 4] {
        let FreeModelParams { gamma: g, r, x } = *self;
        [
            Complex64::new(8.0 * r.powi(3) * g * g * x, 0.0),
            -(z + 2.0 * r * x) * (2.0 * r * g),
            z - 2.0 * r * (1.0 - g),
            Complex64::new(-1.0, 0.0),
        ]
    }

    /// `R(w) = 2r/(1 − 2rγw) + 4r²γx·w`.
    pub fn r_transform(&self, w: Complex64) -> Complex64 {
        let FreeModelParams { gamma: g, r, x } = *self;
        2.0 * r / (1.0 - 2.0 * r * g * w) + 4.0 * r * r * g * x * w
    }

    /// Interval guaranteed to contain the support: MP support (with 0) widened by the semicircle radius.
    pub fn support_bound(&self) -> (f64, f64) {
        let FreeModelParams { gamma: g, r, x } = *self;
        let sc = 4.0 * r * (g * x).sqrt();
        let lo = (2.0 * r * (1.0 - g.sqrt()).powi(2)).min(0.0) - sc;
        let hi = 2.0 * r * (1.0 + g.sqrt()).powi(2) + sc;
        let pad = 1e-9 * (hi - lo).max(1.0);
        (lo - pad, hi + pad)
    }
}

/// Finite roots `G` of the Stieltjes equation at `z`.
pub fn roots(params: &FreeModelParams, z: Complex64) -> Vec<Complex64> {
    let [a3, a2, a1, a0] = params.coefficients(z);
    solve_cubic_reversed(a3, a2, a1, a0).into_iter().flatten().collect()
}

/// Polynomial residual at `g`, relative to the size of its terms.
pub fn residual(params: &FreeModelParams, z: Complex64, g: Complex64) -> f64 {
    let [a3, a2, a1, a0] = params.coefficients(z);
    let terms = [a3 * g * g * g, a2 * g * g, a1 * g, a0];
    let sum: Complex64 = terms.iter().sum();
    sum.norm() / terms.iter().map(|t| t.norm()).fold(0.0, f64::max)
}

/// Per-point branch rule: most negative imaginary part for `Im z > 0`, conjugate symmetry below.
pub fn stieltjes_rule(params: &FreeModelParams, z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return stieltjes_rule(params, z.conj()).conj();
    }
    roots(params, z)
        .into_iter()
        .min_by(|a, b| a.im.total_cmp(&b.im))
        .expect("at least two finite roots")
}

/// `G*_x(z)`, following the branch continuously down from `Re z + i·L` where `G ≈ 1/z`.
pub fn stieltjes(params: &FreeModelParams, z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return stieltjes(params, z.conj()).conj();
    }
    let (lo, hi) = params.support_bound();
    let top = 1e3 * (hi - lo).max(1.0).max(z.re.abs());
    let target = z.im.max(1e-14);
    if target >= top {
        return nearest(roots(params, z), Complex64::new(1.0, 0.0) / z);
    }
    let steps = 400;
    let ratio = (target / top).powf(1.0 / steps as f64);
    let mut im = top;
    let mut w = Complex64::new(z.re, im);
    let mut g = nearest(roots(params, w), Complex64::new(1.0, 0.0) / w);
    for _ in 0..steps {
        im *= ratio;
        w = Complex64::new(z.re, im);
        g = nearest(roots(params, w), g);
    }
    if z.im > 0.0 {
        g = nearest(roots(params, z), g);
    }
    g
}

fn nearest(cands: Vec<Complex64>, target: Complex64) -> Complex64 {
    cands
        .into_iter()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .expect("nonempty root set")
}

/// `−(1/π) Im G(λ + iε)` extrapolated to `ε → 0` from two offsets.
pub fn density_at(params: &FreeModelParams, lambda: f64) -> f64 {
    let (e1, e2) = EPSILONS;
    let rho = |e: f64| -stieltjes_rule(params, Complex64::new(lambda, e)).im / std::f64::consts::PI;
    let (r1, r2) = (rho(e1), rho(e2));
    ((e1 * r2 - e2 * r1) / (e1 - e2)).max(0.0)
}

/// Discriminant at real `λ`; negative strictly inside the support.
pub fn discriminant(params: &FreeModelParams, lambda: f64) -> f64 {
    let [a3, a2, a1, a0] = params.coefficients(Complex64::new(lambda, 0.0));
    if params.x == 0.0 {
        a1.re * a1.re - 4.0 * a2.re * a0.re
    } else {
        cubic_discriminant(a3.re, a2.re, a1.re, a0.re)
    }
}

fn bisect_sign<F: Fn(f64) -> bool>(mut a: f64, mut b: f64, inside: F) -> f64 {
    // inside(a) != inside(b); returns the transition point.
    let ia = inside(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if inside(mid) == ia {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Support intervals located by discriminant sign changes, edges refined by bisection.
pub fn support_intervals(params: &FreeModelParams) -> Vec<(f64, f64)> {
    let (lo, hi) = params.support_bound();
    let inside = |l: f64| discriminant(params, l) < 0.0;
    let h = (hi - lo) / SCAN_POINTS as f64;
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev = inside(lo);
    if prev {
        start = Some(lo);
    }
    for k in 1..=SCAN_POINTS {
        let l = lo + h * k as f64;
        let cur = inside(l);
        if cur != prev {
            let edge = bisect_sign(l - h, l, inside);
            if cur {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
            prev = cur;
        }
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    out
}

/// Density samples on Chebyshev-mapped nodes plus point masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    weights: Vec<f64>,
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    /// Evaluates `pdf` on `nodes` mapped nodes per interval.
    pub fn from_pdf<F: Fn(f64) -> f64>(intervals: &[(f64, f64)], nodes: usize, pdf: F) -> Self {
        let mut grid = Vec::with_capacity(intervals.len() * nodes);
        let mut density = Vec::with_capacity(grid.capacity());
        let mut weights = Vec::with_capacity(grid.capacity());
        for &(a, b) in intervals {
            for k in 0..nodes {
                let t = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
                let l = a + (b - a) * (1.0 - t.cos()) / 2.0;
                grid.push(l);
                density.push(pdf(l).max(0.0));
                weights.push(std::f64::consts::PI / nodes as f64 * (b - a) / 2.0 * t.sin());
            }
        }
        Self {
            grid,
            density,
            weights,
            atoms: Vec::new(),
        }
    }

    pub fn with_atom(mut self, location: f64, mass: f64) -> Self {
        self.atoms.push((location, mass));
        self
    }

    /// Mass of the continuous part.
    pub fn continuous_mass(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, d)| w * d).sum()
    }

    /// Total mass, atoms included.
    pub fn mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let cont: f64 = self
            .grid
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((&l, &d), &w)| w * d * f(l))
            .sum();
        cont + self.atoms.iter().map(|&(l, m)| m * f(l)).sum::<f64>()
    }

    /// Piecewise-linear CDF through the cumulative node masses.
    pub fn cdf(&self) -> impl Fn(f64) -> f64 + '_ {
        let mut order: Vec<usize> = (0..self.grid.len()).collect();
        order.sort_by(|&a, &b| self.grid[a].total_cmp(&self.grid[b]));
        let xs: Vec<f64> = order.iter().map(|&i| self.grid[i]).collect();
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        for &i in &order {
            let m = self.weights[i] * self.density[i];
            cum.push(acc + m / 2.0);
            acc += m;
        }
        let total = acc.max(f64::MIN_POSITIVE);
        let atoms = self.atoms.clone();
        move |l: f64| {
            let atom: f64 = atoms.iter().filter(|a| a.0 <= l).map(|a| a.1).sum();
            let cont_frac = if xs.is_empty() || l < xs[0] {
                0.0
            } else if l >= xs[xs.len() - 1] {
                1.0
            } else {
                let j = xs.partition_point(|&x| x <= l);
                let (x0, x1) = (xs[j - 1], xs[j]);
                let (c0, c1) = (cum[j - 1], cum[j]);
                let t = if x1 > x0 { (l - x0) / (x1 - x0) } else { 0.0 };
                (c0 + t * (c1 - c0)) / total
            };
            (atom + cont_frac * acc).min(1.0)
        }
    }

    /// Smallest point of the continuous support, `None` if there are no nodes.
    pub fn min_support(&self) -> Option<f64> {
        self.grid.iter().copied().fold(None, |m, l| Some(m.map_or(l, |v: f64| v.min(l))))
    }
}

/// `μ*_x` as a normalized measure.
pub fn density(params: &FreeModelParams, nodes: usize) -> Result<SpectralMeasure> {
    params.validate()?;
    let intervals = support_intervals(params);
    let mut mu = SpectralMeasure::from_pdf(&intervals, nodes.max(16), |l| density_at(params, l));
    let cont = mu.continuous_mass();
    let missing = 1.0 - cont;
    if params.gamma > 1.0 && missing > 1e-4 {
        let loc = if params.x == 0.0 {
            0.0
        } else {
            mu.min_support().unwrap_or(0.0).min(0.0)
        };
        mu = mu.with_atom(loc, missing);
        if params.x == 0.0 && (missing - (1.0 - 1.0 / params.gamma)).abs() > 1e-4 {
            return Err(Error::Normalization { mass: cont });
        }
    }
    let mass = mu.mass();
    if (mass - 1.0).abs() > 1e-4 || !mass.is_finite() {
        return Err(Error::Normalization { mass });
    }
    Ok(mu)
}

/// `λ*_{x,1}`, the infimum of the support of `μ*_x`.
pub fn support_edge_min(params: &FreeModelParams) -> Result<f64> {
    params.validate()?;
    if params.x == 0.0 && params.gamma >= 1.0 {
        return Ok(0.0);
    }
    support_intervals(params)
        .first()
        .map(|iv| iv.0)
        .ok_or_else(|| Error::Numerical(format!("no support found for {params:?}")))
}

/// Independent locator: smallest `λ` with density above `1e-8`, by bisection from the left bound.
pub fn support_edge_min_by_density(params: &FreeModelParams) -> Result<f64> {
    params.validate()?;
    let (lo, hi) = params.support_bound();
    let n = SCAN_POINTS;
    let h = (hi - lo) / n as f64;
    let above = |l: f64| density_at(params, l) > 1e-8;
    let first = (1..=n)
        .map(|k| lo + h * k as f64)
        .find(|&l| above(l))
        .ok_or_else(|| Error::Numerical("density never exceeds 1e-8".into()))?;
    Ok(bisect_sign(first - h, first, above))
}

/// `E₀` solving `λ*_{E₀,1} = 2rE₀`; `None` when `γ ≥ 1`.
pub fn band_edge_e0(gamma: f64, r: f64) -> Result<Option<f64>> {
    FreeModelParams::new(gamma, r, 0.0)?;
    if gamma >= 1.0 {
        return Ok(None);
    }
    let g = |e: f64| -> Result<f64> {
        Ok(support_edge_min(&FreeModelParams::new(gamma, r, e)?)? - 2.0 * r * e)
    };
    let mut hi = 1.0;
    let mut tries = 0;
    while g(hi)? >= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Bracketing(format!("no sign change of g(E) up to E = {hi}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Large-p asymptotic `(1/p) ln E[Crt₀(E)]`, `−∞` outside the band.
pub fn asymptotic_log_crt0(e: f64, gamma: f64, r: f64, q: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::OutsideDomain {
            x: e,
            domain: "E > 0".into(),
        });
    }
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be > 0, got {q}")));
    }
    let params = FreeModelParams::new(gamma, r, e)?;
    if gamma >= 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let edge = support_edge_min(&params)?;
    if edge / r < 2.0 * e {
        return Ok(f64::NEG_INFINITY);
    }
    let mu = density(&params, DEFAULT_NODES)?;
    let integral = mu.integrate(|l| (l / r - 2.0 * e).abs().ln());
    Ok(0.5 * (std::f64::consts::PI * q / (2.0 * gamma)).ln()
        + (1.0 - e) / (2.0 * gamma)
        + 0.5 * (1.0 / gamma - 1.0) * e.ln()
        + integral)
}

/// Marchenko–Pastur density of `W/dof` with ratio `γ`, continuous part.
pub fn mp_pdf(gamma: f64, l: f64) -> f64 {
    let (a, b) = ((1.0 - gamma.sqrt()).powi(2), (1.0 + gamma.sqrt()).powi(2));
    if l <= a || l >= b || l <= 0.0 {
        return 0.0;
    }
    ((b - l) * (l - a)).sqrt() / (2.0 * std::f64::consts::PI * gamma * l)
}

/// Marchenko–Pastur law, atom `1 − 1/γ` at zero when `γ > 1`.
pub fn mp_density(gamma: f64) -> Result<SpectralMeasure> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    let iv = [((1.0 - gamma.sqrt()).powi(2), (1.0 + gamma.sqrt()).powi(2))];
    let mu = SpectralMeasure::from_pdf(&iv, DEFAULT_NODES, |l| mp_pdf(gamma, l));
    Ok(if gamma > 1.0 {
        mu.with_atom(0.0, 1.0 - 1.0 / gamma)
    } else {
        mu
    })
}

/// Semicircle density on `[−2, 2]`.
pub fn sc_pdf(l: f64) -> f64 {
    if l.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - l * l).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

pub fn sc_density() -> SpectralMeasure {
    SpectralMeasure::from_pdf(&[(-2.0, 2.0)], DEFAULT_NODES, sc_pdf)
}
