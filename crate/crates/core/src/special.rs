//! Special functions: exponentially scaled modified Bessel functions of the
//! first kind, the exponential integral `E1`, and `erf`.
//!
//! The Green's functions are evaluated at late times where `I0(t)` alone is of
//! order `1e42`, so everything is exposed in the scaled form `e^{-z} I(z)`.

pub use statrs::function::erf::{erf, erfc};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover from power series to the large-argument expansion.
const BESSEL_ASYMPTOTIC_FROM: f64 = 25.0;

fn bessel_series_scaled(nu: u32, z: f64) -> f64 {
    // sum_k (z/2)^{2k+nu} / (k! (k+nu)!) with e^{-z} folded into the first term
    let q = 0.25 * z * z;
    let mut term = (0.5 * z).powi(nu as i32) * (-z).exp();
    for k in 1..=nu {
        term /= k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn bessel_asymptotic_scaled(nu: u32, z: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * z);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// `e^{-|z|} I0(z)`.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let z = z.abs();
    if z < BESSEL_ASYMPTOTIC_FROM {
        bessel_series_scaled(0, z)
    } else {
        bessel_asymptotic_scaled(0, z)
    }
}

/// `e^{-|z|} I1(z)`.
pub fn bessel_i1_scaled(z: f64) -> f64 {
    let a = z.abs();
    let v = if a < BESSEL_ASYMPTOTIC_FROM {
        bessel_series_scaled(1, a)
    } else {
        bessel_asymptotic_scaled(1, a)
    };
    v.copysign(z)
}

/// `e^{-z} I1(z) / z` for `z >= 0`, with the limit `1/2` at the origin.
pub fn bessel_i1_over_z_scaled(z: f64) -> f64 {
    let z = z.abs();
    if z < 1e-3 {
        let q = 0.25 * z * z;
        (-z).exp() * 0.5 * (1.0 + q / 2.0 + q * q / 12.0)
    } else {
        bessel_i1_scaled(z) / z
    }
}

pub fn bessel_i0(z: f64) -> f64 {
    bessel_i0_scaled(z) * z.abs().exp()
}

pub fn bessel_i1(z: f64) -> f64 {
    bessel_i1_scaled(z) * z.abs().exp()
}

/// Exponential integral `E1(x) = int_x^inf e^{-s}/s ds` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 is defined here for positive arguments");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let mut k = 1.0;
        loop {
            term *= -x / k;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            k += 1.0;
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        (-x).exp() * exp_integral_e1_cf(x)
    }
}

/// `e^x E1(x)` by the Lentz continued fraction, for `x > 1`.
fn exp_integral_e1_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `e^x E1(x)`, finite for large `x`.
pub fn exp_integral_e1_scaled(x: f64) -> f64 {
    if x <= 1.0 {
        x.exp() * exp_integral_e1(x)
    } else {
        exp_integral_e1_cf(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `e^{-z} I_n(z) = (1/pi) int_0^pi e^{z (cos th - 1)} cos(n th) dth`,
    /// evaluated with the trapezoid rule, which converges geometrically for
    /// periodic integrands.
    fn bessel_scaled_oracle(n: u32, z: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let f = |th: f64| (z * (th.cos() - 1.0)).exp() * (n as f64 * th).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn bessel_matches_integral_representation() {
        for &z in &[0.0, 1e-6, 0.3, 1.0, 2.5, 7.0, 15.0, 24.9, 25.1, 40.0, 99.0, 300.0] {
            let r0 = bessel_scaled_oracle(0, z);
            let r1 = bessel_scaled_oracle(1, z);
            assert!(
                (bessel_i0_scaled(z) - r0).abs() <= 1e-13 * r0 + 1e-15,
                "I0 z={z}: {} vs {r0}",
                bessel_i0_scaled(z)
            );
            assert!(
                (bessel_i1_scaled(z) - r1).abs() <= 1e-13 * r1 + 1e-15,
                "I1 z={z}: {} vs {r1}",
                bessel_i1_scaled(z)
            );
        }
    }

    #[test]
    fn bessel_known_values() {
        // I0(1), I1(1) from standard tables
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i1(1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert_eq!(bessel_i0(0.0), 1.0);
        assert_eq!(bessel_i1(0.0), 0.0);
        assert!((bessel_i1(-2.0) + bessel_i1(2.0)).abs() < 1e-15);
    }

    #[test]
    fn i1_over_z_is_continuous_at_origin() {
        assert!((bessel_i1_over_z_scaled(0.0) - 0.5).abs() < 1e-16);
        for &z in &[5e-4, 1e-3, 1.0001e-3, 0.01] {
            let direct = bessel_i1_scaled(z) / z;
            assert!((bessel_i1_over_z_scaled(z) - direct).abs() < 1e-15, "z={z}");
        }
    }

    #[test]
    fn e1_known_values() {
        // Abramowitz & Stegun table 5.1
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-15);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-16);
        assert!((exp_integral_e1_scaled(10.0) - 0.091_563_333_939_788_08).abs() < 1e-15);
    }

    #[test]
    fn e1_is_the_integral_of_exp_over_s() {
        // d/dx E1 = -e^{-x}/x by central differences
        for &x in &[0.05, 0.7, 1.0, 1.3, 6.0] {
            let h = 1e-5 * x;
            let fd = (exp_integral_e1(x + h) - exp_integral_e1(x - h)) / (2.0 * h);
            assert!((fd + (-x).exp() / x).abs() < 1e-8 * (1.0 / x));
        }
    }
}
