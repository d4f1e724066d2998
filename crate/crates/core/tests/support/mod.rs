//! Slow reference evaluators used as independent oracles by the
//! integration tests. None of this shares code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Tanh-sinh quadrature of `f` over `[a, b]` with step `h` in the
/// transformed variable.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, h: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let kmax = (3.2 / h).ceil() as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        let x = mid + half * u.tanh();
        if x <= a || x >= b {
            continue;
        }
        sum += w * f(x);
    }
    sum * half * h
}

/// `J_n(x)` from Bessel's integral, evaluated with the periodic trapezoid
/// rule (exponentially convergent).
pub fn ref_bessel_j(n: u32, x: f64) -> f64 {
    let m = (2.0 * (x + n as f64) + 200.0) as usize;
    let h = PI / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        let tau = (i as f64 + 0.5) * h;
        sum += (n as f64 * tau - x * tau.sin()).cos();
    }
    sum * h / PI
}

/// `Y_n(x)` from its integral representation
/// `(1/pi) int_0^pi sin(x sin t - n t) dt
///  - (1/pi) int_0^inf (e^{nt} + (-1)^n e^{-nt}) e^{-x sinh t} dt`.
pub fn ref_bessel_y(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    let first = tanh_sinh(|t| (x * t.sin() - nf * t).sin(), 0.0, PI, 1.0 / 512.0) / PI;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    // the integrand is negligible once x sinh t - n t exceeds ~ 750
    let mut upper = 1.0;
    while x * f64::sinh(upper) - nf * upper < 760.0 {
        upper += 0.5;
    }
    let second = tanh_sinh(
        |t| (nf * t - x * t.sinh()).exp() + sign * (-nf * t - x * t.sinh()).exp(),
        0.0,
        upper,
        1.0 / 512.0,
    ) / PI;
    first - second
}

/// `K_0(x) = int_0^inf exp(-x cosh t) dt` by the trapezoid rule.
pub fn ref_bessel_k0(x: f64) -> f64 {
    // scaled by e^{x} so that large x does not underflow
    let h = 1.0 / 64.0;
    let mut sum = 0.5;
    let mut i = 1;
    loop {
        let t = i as f64 * h;
        let v = (-x * (t.cosh() - 1.0)).exp();
        sum += v;
        if v < 1e-30 * sum {
            break;
        }
        i += 1;
    }
    sum * h * (-x).exp()
}

/// `H0^(1)(i x)` from the ascending series with complex argument.
pub fn ref_hankel0_imaginary(x: f64) -> (f64, f64) {
    // z = i x: (z/2)^2 = -x^2/4, so J0(ix) = I0(x) and
    // Y0(ix) = (2/pi)[(ln(ix/2)+g) J0(ix) + sum (-1)^{k+1} H_k (z^2/4)^k/(k!)^2]
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut rest = 0.0;
    for k in 1..300 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        // (-1)^{k+1} (-q)^k = -q^k
        rest -= term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    let log_re = (x / 2.0).ln() + EULER_GAMMA;
    let log_im = PI / 2.0;
    let y_re = 2.0 / PI * (log_re * i0 + rest);
    let y_im = 2.0 / PI * (log_im * i0);
    // H = J + iY with J = i0 (real)
    (i0 - y_im, y_re)
}
