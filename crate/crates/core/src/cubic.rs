//! Closed-form roots of complex quadratics and cubics with Newton polishing.

use num_complex::Complex;

use crate::scalar::Real;

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Roots of `a z² + b z + c = 0`, `a ≠ 0`, using the cancellation-free form.
pub fn solve_quadratic<T: Real>(a: Complex<T>, b: Complex<T>, cc: Complex<T>) -> [Complex<T>; 2] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let disc = (b * b - a * cc * four).sqrt();
    // Pick the sign that avoids subtracting nearly equal numbers.
    let q = if (b.conj() * disc).re >= T::zero() {
        -(b + disc) / two
    } else {
        -(b - disc) / two
    };
    if q.norm() == T::zero() {
        return [c(T::zero()), c(T::zero())];
    }
    [q / a, cc / q]
}

/// Principal cube root.
fn cbrt<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() == T::zero() {
        return z;
    }
    Complex::from_polar(z.norm().cbrt(), z.arg() / T::lit(3.0))
}

/// Roots of the monic cubic `u³ + b u² + c u + d = 0`.
pub fn solve_cubic_monic<T: Real>(b: Complex<T>, cc: Complex<T>, d: Complex<T>) -> [Complex<T>; 3] {
    let three = T::lit(3.0);
    let b3 = b / three;
    // Depressed form t³ + p t + q with u = t − b/3.
    let p = cc - b * b3;
    let q = b3 * b3 * b3 * T::lit(2.0) - b3 * cc + d;
    let s = (q * q / T::lit(4.0) + p * p * p / T::lit(27.0)).sqrt();
    let half_q = q / T::lit(2.0);
    let w = if (-half_q + s).norm() >= (-half_q - s).norm() {
        -half_q + s
    } else {
        -half_q - s
    };
    let c1 = cbrt(w);
    let omega = Complex::new(-T::lit(0.5), T::lit(3.0).sqrt() / T::lit(2.0));
    let mut roots = [c(T::zero()); 3];
    let mut rot = c(T::one());
    for r in roots.iter_mut() {
        let ck = c1 * rot;
        let t = if ck.norm() == T::zero() {
            c(T::zero())
        } else {
            ck - p / (ck * three)
        };
        *r = t - b3;
        rot = rot * omega;
    }
    for r in roots.iter_mut() {
        *r = polish(*r, b, cc, d);
    }
    roots
}

fn polish<T: Real>(mut u: Complex<T>, b: Complex<T>, cc: Complex<T>, d: Complex<T>) -> Complex<T> {
    for _ in 0..3 {
        let f = ((u + b) * u + cc) * u + d;
        let df = (u * T::lit(3.0) + b * T::lit(2.0)) * u + cc;
        if df.norm() == T::zero() {
            break;
        }
        let step = f / df;
        let next = u - step;
        let fn_ = ((next + b) * next + cc) * next + d;
        if fn_.norm() < f.norm() {
            u = next;
        } else {
            break;
        }
    }
    u
}

/// Roots of `a₃z³ + a₂z² + a₁z + a₀ = 0` with `a₀ ≠ 0` via the reversed polynomial in `1/z`.
///
/// When `a₃ = 0` only the two finite roots of the quadratic are meaningful; the third entry is `None`.
pub fn solve_cubic_reversed<T: Real>(
    a3: Complex<T>,
    a2: Complex<T>,
    a1: Complex<T>,
    a0: Complex<T>,
) -> [Option<Complex<T>>; 3] {
    if a3.norm() == T::zero() {
        let [r1, r2] = solve_quadratic(a2, a1, a0);
        return [Some(r1), Some(r2), None];
    }
    // a₀u³ + a₁u² + a₂u + a₃ = 0 with u = 1/z.
    let us = solve_cubic_monic(a1 / a0, a2 / a0, a3 / a0);
    let mut out = [None; 3];
    for (o, u) in out.iter_mut().zip(us) {
        *o = (u.norm() > T::zero()).then(|| c(T::one()) / u);
    }
    out
}

/// Discriminant of the real cubic `a z³ + b z² + c z + d`.
pub fn cubic_discriminant<T: Real>(a: T, b: T, cc: T, d: T) -> T {
    T::lit(18.0) * a * b * cc * d - T::lit(4.0) * b * b * b * d + b * b * cc * cc
        - T::lit(4.0) * a * cc * cc * cc
        - T::lit(27.0) * a * a * d * d
}

/// Evaluates `Σ coeffs[k] z^k`.
pub fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    coeffs.iter().rev().fold(c(T::zero()), |acc, k| acc * z + k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_cubic_with_known_roots() {
        // (u−1)(u−2)(u+3) = u³ − 7u + 6
        let r = solve_cubic_monic(cx(0.0, 0.0), cx(-7.0, 0.0), cx(6.0, 0.0));
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn triple_root() {
        // (u−2)³
        let r = solve_cubic_monic(cx(-6.0, 0.0), cx(12.0, 0.0), cx(-8.0, 0.0));
        for z in r {
            assert!((z - cx(2.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn discriminant_sign() {
        assert!(cubic_discriminant(1.0, 0.0, -7.0, 6.0) > 0.0);
        assert!(cubic_discriminant(1.0, 0.0, 1.0, 1.0) < 0.0);
    }

    #[test]
    fn quadratic_roots() {
        let [a, b] = solve_quadratic(cx(1.0, 0.0), cx(-3.0, 0.0), cx(2.0, 0.0));
        let mut v = [a.re, b.re];
        v.sort_by(f64::total_cmp);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn f32_cubic() {
        let r = solve_cubic_monic(
            Complex::new(0.0f32, 0.0),
            Complex::new(-7.0f32, 0.0),
            Complex::new(6.0f32, 0.0),
        );
        for z in r {
            let f = ((z) * z - Complex::new(7.0, 0.0)) * z + Complex::new(6.0, 0.0);
            assert!(f.norm() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn residuals_small(br in -5.0f64..5.0, bi in -5.0f64..5.0, cr in -5.0f64..5.0,
                           ci in -5.0f64..5.0, dr in -5.0f64..5.0, di in -5.0f64..5.0) {
            let (b, cc, d) = (cx(br, bi), cx(cr, ci), cx(dr, di));
            let roots = solve_cubic_monic(b, cc, d);
            for u in roots {
                let f = ((u + b) * u + cc) * u + d;
                let scale = 1.0 + u.norm().powi(3) + (b * u * u).norm() + (cc * u).norm() + d.norm();
                prop_assert!(f.norm() / scale < 1e-12, "residual {} at {}", f.norm(), u);
            }
            // Vieta: sum of roots is −b.
            let s = roots[0] + roots[1] + roots[2];
            prop_assert!((s + b).norm() < 1e-9 * (1.0 + b.norm()));
        }
    }
}
