//! Complementary error function for complex arguments.

use std::f64::consts::PI;

use num_complex::Complex64;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

fn use_series(z: Complex64) -> bool {
    z.re < 1.5 && z.norm() < 6.0
}

/// Maclaurin series of `erf`.
fn erf_series(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= -z2 / k as f64;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() || k > 400 {
            break;
        }
    }
    sum * FRAC_2_SQRT_PI
}

/// Faddeeva function `w(z) = e^{-z^2} erfc(-iz)` for `Im z >= 0` by the
/// Laplace continued fraction, evaluated with the modified Lentz method.
fn faddeeva_cf(z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = if z.norm() == 0.0 { tiny } else { z };
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..200_000 {
        let a = -(k as f64) * 0.5;
        d = z + a * d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        d = 1.0 / d;
        c = z + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(0.0, 1.0 / PI.sqrt()) / f
}

/// Scaled complementary error function `e^{z^2} erfc(z)`.
pub fn erfcx_c(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return 2.0 * (z * z).exp() - erfcx_c(-z);
    }
    if use_series(z) {
        (z * z).exp() * (1.0 - erf_series(z))
    } else {
        faddeeva_cf(Complex64::new(-z.im, z.re))
    }
}

/// `erfc(z) = (2 / sqrt(pi)) int_z^inf e^{-t^2} dt`.
pub fn erfc_c(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return 2.0 - erfc_c(-z);
    }
    if use_series(z) {
        1.0 - erf_series(z)
    } else {
        let e = -(z * z);
        let w = faddeeva_cf(Complex64::new(-z.im, z.re));
        if e.re < -745.0 {
            return Complex64::new(0.0, 0.0);
        }
        e.exp() * w
    }
}

/// `ln |erfc(z)|`, finite where `erfc(z)` itself would overflow.
pub fn ln_abs_erfc(z: Complex64) -> f64 {
    if z.re >= 0.0 {
        return erfcx_c(z).norm().ln() - (z * z).re;
    }
    // erfc(z) = 2 - e^{-z^2} erfcx(-z)
    let mz = -z;
    let growth = -(mz * mz).re;
    let x = erfcx_c(mz);
    if growth > 700.0 {
        return x.norm().ln() + growth;
    }
    (2.0 - (-(mz * mz)).exp() * x).norm().ln()
}

/// Real complementary error function.
pub fn erfc(x: f64) -> f64 {
    erfc_c(Complex64::new(x, 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use errorfunctions::ComplexErrorFunctions;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_values() {
        assert_eq!(erfc_c(c(0.0, 0.0)), c(1.0, 0.0));
        assert!((erfc_c(c(1.0, 0.0)).re - 0.157_299_207_050_285_13).abs() < 1e-15);
        let v = erfc_c(c(0.0, 1.0));
        assert!((v.re - 1.0).abs() < 1e-15);
        assert!((v.im + 1.650_425_758_797_542_8).abs() < 1e-14);
        assert!((erfcx_c(c(1.0, 0.0)).re - 0.427_583_576_155_807_04).abs() < 1e-15);
    }

    #[test]
    fn imaginary_axis_taylor_oracle() {
        // erfc(iy) = 1 - i (2/sqrt(pi)) sum y^{2k+1} / (k! (2k+1))
        for y in [0.3, 1.0, 2.5, 4.0] {
            let mut term: f64 = y;
            let mut s = y;
            for k in 1..200 {
                term *= y * y / k as f64;
                s += term / (2 * k + 1) as f64;
            }
            let v = erfc_c(c(0.0, y));
            let expect = -FRAC_2_SQRT_PI * s;
            assert!((v.im - expect).abs() <= 1e-13 * expect.abs(), "y={y}");
        }
    }

    #[test]
    fn deep_complex_plane_against_oracle() {
        let mut worst: f64 = 0.0;
        for i in -30..=30 {
            for j in -30..=30 {
                let z = c(i as f64 * 0.45, j as f64 * 0.9);
                if z.norm() > 30.0 {
                    continue;
                }
                let ours = erfcx_c(z);
                let theirs = z.erfcx();
                worst = worst.max((ours - theirs).norm() / theirs.norm());
            }
        }
        assert!(worst <= 1e-12, "worst relative error {worst:e}");
    }

    #[test]
    fn log_modulus_is_consistent() {
        for z in [c(0.3, 0.2), c(-1.2, 3.0), c(2.0, -7.0), c(-3.0, 20.0), c(5.0, 1.0)] {
            let direct = erfc_c(z).norm().ln();
            assert!((ln_abs_erfc(z) - direct).abs() < 1e-12 * direct.abs().max(1.0), "{z}");
        }
        // would overflow if formed directly
        assert!(ln_abs_erfc(c(-1.0, 40.0)).is_finite());
    }

    proptest! {
        #[test]
        fn matches_oracle(re in -5.0f64..5.0, im in -25.0f64..25.0) {
            let z = c(re, im);
            let ours = erfcx_c(z);
            let theirs = z.erfcx();
            prop_assert!((ours - theirs).norm() <= 1e-12 * theirs.norm());
        }

        #[test]
        fn conjugate_symmetry(re in -4.0f64..4.0, im in -4.0f64..4.0) {
            let z = c(re, im);
            prop_assert!((erfc_c(z.conj()) - erfc_c(z).conj()).norm() <= 1e-14 * erfc_c(z).norm().max(1.0));
        }
    }
}
