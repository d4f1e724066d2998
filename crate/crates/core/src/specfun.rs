//! Integer-order Bessel, Hankel and Macdonald functions of positive real
//! argument.
//!
//! Below `z = 25` the J-table comes from the ascending series (`z <= 1`) or
//! Miller's backward recurrence normalised by `J0 + 2 sum J_2k = 1`; Y0 and
//! Y1 then follow from their Neumann expansions in the same table. Above
//! `z = 25` orders 0 and 1 use the Hankel asymptotic expansion. Higher
//! orders come from upward recurrence, which is stable for Y everywhere and
//! for J while `n < z`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Highest order covered by the accuracy contract.
pub const MAX_ORDER: u32 = 10;

const ASYMPTOTIC_FROM: f64 = 25.0;
const SERIES_UP_TO: f64 = 1.0;

/// Values and first derivatives of `J_n` and `Y_n` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderValues<T> {
    pub j: T,
    pub y: T,
    pub dj: T,
    pub dy: T,
}

fn check_argument<T: Real>(z: T) -> Result<()> {
    if z > T::zero() && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Bessel argument must be finite and > 0",
            value: z.as_f64(),
        })
    }
}

fn check_order(order: u32) -> Result<()> {
    if order <= MAX_ORDER {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Bessel order above the supported maximum of 10",
            value: order as f64,
        })
    }
}

/// Bessel function of the first kind `J_order(z)`.
pub fn bessel_j<T: Real>(order: u32, z: T) -> Result<T> {
    check_order(order)?;
    check_argument(z)?;
    let (j, _) = cylinder_table(order as usize, z);
    Ok(j[order as usize])
}

/// Bessel function of the second kind `Y_order(z)`.
pub fn bessel_y<T: Real>(order: u32, z: T) -> Result<T> {
    check_order(order)?;
    check_argument(z)?;
    let (_, y) = cylinder_table(order as usize, z);
    Ok(y[order as usize])
}

/// `J`, `Y` and their derivatives, the latter from
/// `C'_n = C_{n-1} - (n/z) C_n` (and `C'_0 = -C_1`).
pub fn cylinder_values<T: Real>(order: u32, z: T) -> Result<CylinderValues<T>> {
    check_order(order)?;
    check_argument(z)?;
    let n = order as usize;
    let (j, y) = cylinder_table(n + 1, z);
    let (dj, dy) = if n == 0 {
        (-j[1], -y[1])
    } else {
        let nz = T::from_usize_lossy(n) / z;
        (j[n - 1] - nz * j[n], y[n - 1] - nz * y[n])
    };
    Ok(CylinderValues {
        j: j[n],
        y: y[n],
        dj,
        dy,
    })
}

/// Hankel function of the first kind `H^(1)_order(z) = J + iY`.
pub fn hankel1<T: Real>(order: u32, z: T) -> Result<Complex<T>> {
    let v = cylinder_values(order, z)?;
    Ok(Complex::new(v.j, v.y))
}

/// Derivative of `H^(1)_order` with respect to its argument.
pub fn hankel1_prime<T: Real>(order: u32, z: T) -> Result<Complex<T>> {
    let v = cylinder_values(order, z)?;
    Ok(Complex::new(v.dj, v.dy))
}

/// `H^(1)_order(z)` together with its derivative.
pub fn hankel1_with_prime<T: Real>(order: u32, z: T) -> Result<(Complex<T>, Complex<T>)> {
    let v = cylinder_values(order, z)?;
    Ok((Complex::new(v.j, v.y), Complex::new(v.dj, v.dy)))
}

/// Macdonald function `K_0(x)`.
///
/// Ascending series for `x <= 2`, Steed's continued fraction (Temme's CF2
/// at order zero) above.
pub fn bessel_k0<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || x.is_nan() {
        return Err(Error::Domain {
            what: "K0 argument must be > 0",
            value: x.as_f64(),
        });
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    if x <= T::lit(2.0) {
        Ok(k0_series(x))
    } else {
        Ok(k0_continued_fraction(x))
    }
}

fn k0_series<T: Real>(x: T) -> T {
    let q = x * x / T::lit(4.0);
    let log_part = (x / T::lit(2.0)).ln() + T::euler_gamma();
    let mut term = T::one();
    let mut i0 = T::one();
    let mut harmonic = T::zero();
    let mut rest = T::zero();
    for k in 1..200 {
        let kf = T::from_usize_lossy(k);
        term = term * q / (kf * kf);
        harmonic = harmonic + T::one() / kf;
        i0 = i0 + term;
        rest = rest + term * harmonic;
        if term * harmonic < T::epsilon() * rest.abs() * T::lit(0.1) {
            break;
        }
    }
    -log_part * i0 + rest
}

fn k0_continued_fraction<T: Real>(x: T) -> T {
    let two = T::lit(2.0);
    let mut b = two * (T::one() + x);
    let mut d = T::one() / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = T::zero();
    let mut q2 = T::one();
    let a1 = T::lit(0.25);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = T::one() + q * delh;
    for i in 2..10_000usize {
        let fi = T::from_usize_lossy(i);
        a = a - two * (fi - T::one());
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = T::one() / (b + a * d);
        delh = (b * d - T::one()) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < T::epsilon() * T::lit(0.5) {
            break;
        }
    }
    (T::PI() / (two * x)).sqrt() * (-x).exp() / s
}

/// `J_0..=J_nmax` and `Y_0..=Y_nmax` at `z > 0`.
pub(crate) fn cylinder_table<T: Real>(nmax: usize, z: T) -> (Vec<T>, Vec<T>) {
    let nmax = nmax.max(1);
    if z >= T::lit(ASYMPTOTIC_FROM) {
        let (j0, y0) = hankel_asymptotic(0, z);
        let (j1, y1) = hankel_asymptotic(1, z);
        let j = recur_upward(j0, j1, nmax, z);
        let y = recur_upward(y0, y1, nmax, z);
        return (j, y);
    }

    let jt = if z <= T::lit(SERIES_UP_TO) {
        j_series_table(nmax + 24, z)
    } else {
        j_miller_table(nmax, z)
    };
    let (y0, y1) = neumann_y01(&jt, z);
    let y = recur_upward(y0, y1, nmax, z);
    (jt[..=nmax].to_vec(), y)
}

fn recur_upward<T: Real>(c0: T, c1: T, nmax: usize, z: T) -> Vec<T> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(c0);
    out.push(c1);
    for n in 1..nmax {
        let next = T::lit(2.0) * T::from_usize_lossy(n) / z * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

fn j_series_table<T: Real>(nmax: usize, z: T) -> Vec<T> {
    let half = z / T::lit(2.0);
    let q = half * half;
    let mut lead = T::one();
    let mut out = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        if n > 0 {
            lead = lead * half / T::from_usize_lossy(n);
        }
        let mut term = lead;
        let mut sum = lead;
        for k in 1..100usize {
            term = -term * q / (T::from_usize_lossy(k) * T::from_usize_lossy(k + n));
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.01) {
                break;
            }
        }
        out.push(sum);
    }
    out
}

fn j_miller_table<T: Real>(nmax: usize, z: T) -> Vec<T> {
    let zc = z.ceil().to_usize().unwrap_or(0);
    let mut start = nmax.max(zc) + 40;
    if start % 2 == 1 {
        start += 1;
    }
    let big = T::max_value().sqrt() * T::epsilon();
    let mut j = vec![T::zero(); start + 2];
    j[start] = T::one();
    for k in (1..=start).rev() {
        let v = T::lit(2.0) * T::from_usize_lossy(k) / z * j[k] - j[k + 1];
        j[k - 1] = v;
        if v.abs() > big {
            let s = T::one() / v.abs();
            for x in j[k - 1..].iter_mut() {
                *x = *x * s;
            }
        }
    }
    let mut norm = j[0];
    let mut i = 2;
    while i <= start {
        norm = norm + T::lit(2.0) * j[i];
        i += 2;
    }
    j.truncate(start + 1);
    for x in j.iter_mut() {
        *x = *x / norm;
    }
    j
}

/// Y0 and Y1 from the Neumann expansions
/// `Y0 = (2/pi)[(ln(z/2)+g) J0 - 2 sum (-1)^k J_2k / k]` and its negative
/// derivative.
fn neumann_y01<T: Real>(j: &[T], z: T) -> (T, T) {
    let two_over_pi = T::lit(2.0) / T::PI();
    let log_part = (z / T::lit(2.0)).ln() + T::euler_gamma();
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut k = 1usize;
    while 2 * k + 1 < j.len() {
        let kf = T::from_usize_lossy(k);
        let sign = if k.is_multiple_of(2) { T::one() } else { -T::one() };
        s0 = s0 + sign * j[2 * k] / kf;
        s1 = s1 + sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
        k += 1;
    }
    let y0 = two_over_pi * (log_part * j[0] - T::lit(2.0) * s0);
    let y1 = -two_over_pi * (j[0] / z - log_part * j[1] - s1);
    (y0, y1)
}

fn hankel_asymptotic<T: Real>(order: u32, z: T) -> (T, T) {
    let mu = T::lit(4.0 * (order * order) as f64);
    let eight_z = T::lit(8.0) * z;
    let mut a = T::one();
    let mut p = T::one();
    let mut q = T::zero();
    let mut last = T::infinity();
    for k in 1..200usize {
        let odd = T::from_usize_lossy(2 * k - 1);
        a = a * (mu - odd * odd) / (T::from_usize_lossy(k) * eight_z);
        if a.abs() > last || a == T::zero() {
            break;
        }
        last = a.abs();
        // a_k enters P for even k and Q for odd k with alternating signs.
        match k % 4 {
            0 => p = p + a,
            1 => q = q + a,
            2 => p = p - a,
            _ => q = q - a,
        }
        if a.abs() < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    let chi = z - (T::lit(order as f64) / T::lit(2.0) + T::lit(0.25)) * T::PI();
    let (s, c) = chi.sin_cos();
    let amp = (T::lit(2.0) / (T::PI() * z)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}
