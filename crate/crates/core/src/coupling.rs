//! Point-interaction coupling between a one-dimensional lead and the cavity
//! plane, and the cylindrical-tube model it is matched against.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::{hankel1_with_prime, MAX_ORDER};

/// Smallest admissible magnitude of an amplitude denominator.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// Coefficients of the boundary conditions
///
/// ```text
/// phi1'(0) = A phi1(0) + B L0
/// L1       = C phi1(0) + D L0
/// ```
///
/// restricted to the real branch `B = 2 pi C`. `D` is a logarithm of a
/// length in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> CouplingParams<T> {
    /// Builds a real parameter set, checking `B = 2 pi C` to a relative
    /// tolerance of a few ulps.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        for (what, v) in [("A", a), ("B", b), ("C", c), ("D", d)] {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("coefficient {what} is not finite")));
            }
        }
        if !satisfies_boundary_form(Complex::new(b, T::zero()), Complex::new(c, T::zero())) {
            return Err(Error::Invalid(format!(
                "B = {b} and C = {c} violate B = 2 pi C"
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Fully decoupled junction: `B = C = 0`.
    pub fn decoupled(a: T, d: T) -> Self {
        Self { a, b: T::zero(), c: T::zero(), d }
    }
}

/// `B = 2 pi conj(C)` for the general complex family, to relative
/// precision `64 eps`.
pub fn satisfies_boundary_form<T: Real>(b: Complex<T>, c: Complex<T>) -> bool {
    let target = c.conj() * T::TAU();
    let scale = b.norm().max(target.norm());
    if scale == T::zero() {
        return true;
    }
    (b - target).norm() <= T::lit(64.0) * T::epsilon() * scale
}

/// Parameters reproducing an antenna of radius `a` (metres) in the
/// long-wave limit: `A = 1/2a`, `D = -ln a`, `B = sqrt(2 pi / a)`,
/// `C = B / 2 pi`.
pub fn identify_parameters<T: Real>(a: T) -> Result<CouplingParams<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::Domain { what: "antenna radius must be positive", value: a.as_f64() });
    }
    let b = (T::TAU() / a).sqrt();
    Ok(CouplingParams {
        a: T::lit(0.5) / a,
        b,
        c: b / T::TAU(),
        d: -a.ln(),
    })
}

/// Reflection and transmission amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair<T> {
    pub r: Complex<T>,
    pub t: Complex<T>,
}

/// Returns `(D-, D+)` for the point junction.
fn point_denominators<T: Real>(p: &CouplingParams<T>, k: T) -> (Complex<T>, Complex<T>) {
    let two_over_pi = T::lit(2.0) / T::PI();
    let log_part = T::euler_gamma() - p.d + (k / T::lit(2.0)).ln();
    let bracket = Complex::new(T::one(), two_over_pi * log_part);
    let coupling = Complex::new(T::zero(), two_over_pi * p.b * p.c);
    let minus = Complex::new(p.a, -k) * bracket + coupling;
    let plus = Complex::new(p.a, k) * bracket + coupling;
    (minus, plus)
}

/// Amplitudes of a plane wave in the lead scattered by the point junction.
pub fn point_amplitudes<T: Real>(p: &CouplingParams<T>, k: T) -> Result<AmplitudePair<T>> {
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::Domain { what: "wavenumber must be positive", value: k.as_f64() });
    }
    let (minus, plus) = point_denominators(p, k);
    let size = plus.norm();
    if size.as_f64() < SINGULAR_THRESHOLD {
        return Err(Error::Singular(size.as_f64()));
    }
    Ok(AmplitudePair {
        r: -minus / plus,
        t: Complex::new(T::zero(), T::lit(2.0) * p.c * k) / plus,
    })
}

/// `|D+|^2 - |D-|^2` for the point junction. Equals `(8/pi) k B C`.
pub fn point_flux_defect<T: Real>(p: &CouplingParams<T>, k: T) -> T {
    let (minus, plus) = point_denominators(p, k);
    plus.norm_sqr() - minus.norm_sqr()
}

/// Amplitudes for a lead of radius `a` opening into the plane, partial
/// wave `order`.
pub fn tube_amplitudes<T: Real>(a: T, order: u32, k: T) -> Result<AmplitudePair<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::Domain { what: "antenna radius must be positive", value: a.as_f64() });
    }
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::Domain { what: "wavenumber must be positive", value: k.as_f64() });
    }
    if order > MAX_ORDER {
        return Err(Error::Domain { what: "partial-wave order above supported maximum", value: order as f64 });
    }
    let x = k * a;
    let (h, dh) = hankel1_with_prime(order, x)?;
    let two_x = T::lit(2.0) * x;
    let minus = Complex::new(T::one(), -two_x) * h + dh * two_x;
    let plus = Complex::new(T::one(), two_x) * h + dh * two_x;
    let size = plus.norm();
    if size.as_f64() < SINGULAR_THRESHOLD {
        return Err(Error::Singular(size.as_f64()));
    }
    let amp = T::lit(4.0) * (two_x / T::PI()).sqrt();
    Ok(AmplitudePair { r: -minus / plus, t: Complex::new(T::zero(), amp) / plus })
}

/// `|r_point - r_tube|` for the s-wave at radius `a`.
pub fn low_energy_mismatch<T: Real>(a: T, k: T) -> Result<T> {
    let point = point_amplitudes(&identify_parameters(a)?, k)?;
    let tube = tube_amplitudes(a, 0, k)?;
    Ok((point.r - tube.r).norm())
}

/// Generalized boundary values `(L0, L1)` of `b G(., x0; k)`, where `xi` is
/// the regularized Green's function at `x0`.
pub fn greens_boundary_values<T: Real>(b: Complex<T>, xi: Complex<T>) -> (Complex<T>, Complex<T>) {
    (-b / T::TAU(), b * xi)
}

/// Residuals of the two boundary conditions; both vanish iff they hold.
pub fn bc_residual<T: Real>(
    p: &CouplingParams<T>,
    phi1: Complex<T>,
    dphi1: Complex<T>,
    l0: Complex<T>,
    l1: Complex<T>,
) -> (Complex<T>, Complex<T>) {
    (dphi1 - phi1 * p.a - l0 * p.b, l1 - phi1 * p.c - l0 * p.d)
}
