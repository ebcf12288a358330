//! Scalar special functions and random sampling helpers.
//!
//! Holds the modified Bessel functions needed for the Von Mises
//! characteristic factor, circular/heavy-tailed angle samplers used by the
//! spatial-correlation integration, and the complex Gaussian primitives for
//! channel draws.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Modified Bessel function of the first kind, order 0.
///
/// Abramowitz & Stegun 9.8.1/9.8.2 polynomial approximations, |error| < 2e-7.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75).powi(2);
        1.0 + y
            * (3.5156229
                + y * (3.0899424
                    + y * (1.2067492 + y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))))
    } else {
        let z = 3.75 / ax;
        (ax.exp() / ax.sqrt())
            * (0.39894228
                + z * (0.1328592e-1
                    + z * (0.225319e-2
                        + z * (-0.157565e-2
                            + z * (0.916281e-2
                                + z * (-0.2057706e-1
                                    + z * (0.2635537e-1
                                        + z * (-0.1647633e-1 + z * 0.392377e-2))))))))
    }
}

/// Modified Bessel function of the first kind, order 1.
///
/// Abramowitz & Stegun 9.8.3/9.8.4 polynomial approximations.
pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let ans = if ax < 3.75 {
        let y = (x / 3.75).powi(2);
        ax * (0.5
            + y * (0.87890594
                + y * (0.51498869
                    + y * (0.15084934
                        + y * (0.2658733e-1 + y * (0.301532e-2 + y * 0.32411e-3))))))
    } else {
        let z = 3.75 / ax;
        let a = 0.2282967e-1
            + z * (-0.2895312e-1 + z * (0.1787654e-1 - z * 0.420059e-2));
        let b = 0.39894228
            + z * (-0.3988024e-1
                + z * (-0.362018e-2 + z * (0.163801e-2 + z * (-0.1031555e-1 + z * a))));
        (ax.exp() / ax.sqrt()) * b
    };
    if x < 0.0 {
        -ans
    } else {
        ans
    }
}

/// Ratio I1(kappa)/I0(kappa), the mean resultant length of a zero-mean
/// Von Mises distribution with concentration `kappa`.
pub fn bessel_ratio_i1_i0(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    // For large arguments the two exponential prefactors cancel; use the
    // asymptotic expansion of the ratio directly to avoid overflow.
    if kappa > 500.0 {
        let k = kappa;
        return 1.0 - 1.0 / (2.0 * k) - 1.0 / (8.0 * k * k) - 1.0 / (8.0 * k * k * k);
    }
    bessel_i1(kappa) / bessel_i0(kappa)
}

/// One draw of a standard circularly-symmetric complex Gaussian CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Samples a zero-mean Von Mises angle with concentration `kappa` in
/// [-pi, pi), via the Best-Fisher rejection algorithm.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    if kappa <= 1e-12 {
        return rng.gen_range(-PI..PI);
    }
    let a = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let b = (a - (2.0 * a).sqrt()) / (2.0 * kappa);
    let r = (1.0 + b * b) / (2.0 * b);
    loop {
        let u1: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return theta;
        }
    }
}

/// Samples a Laplace variate with location `mu` and scale `b`, truncated to
/// `[lo, hi]` by resampling.
pub fn sample_truncated_laplace<R: Rng + ?Sized>(
    rng: &mut R,
    mu: f64,
    b: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    loop {
        let u: f64 = rng.gen_range(-0.5..0.5);
        let x = mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}
