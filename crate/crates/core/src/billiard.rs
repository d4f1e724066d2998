//! Dirichlet rectangle: eigenbasis, smooth counting function and the
//! regularised Green's function at the antenna point.
//!
//! The regularised value
//! `xi(x0; k) = lim_{x -> x0} [G(x, x0; k) + ln|x - x0| / 2pi]`
//! is evaluated from the eigenfunction expansion, with every mode paired
//! against the counterterm `1/(4 pi n)` of its rank `n` in the
//! energy-ordered basis. Truncation at the cutoff is compensated by a closed
//! form for the remainder; see [`GreenEvaluator::xi`].

use std::cmp::Ordering;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::bessel_k0;

/// Cutoff must exceed `|k^2|` by at least this factor for `xi` evaluation.
pub const CUTOFF_SAFETY_FACTOR: f64 = 25.0;

/// Default cap on the number of stored modes.
pub const DEFAULT_MAX_MODES: usize = 10_000_000;

/// Weights below this fraction of `4/|M|` are treated as exact nodal zeros.
const NODAL_THRESHOLD: f64 = 1e-24;

/// Relative distance under which a real `k^2` is considered to sit on a pole.
const POLE_TOLERANCE: f64 = 1e-12;

/// Image contributions are dropped once `kappa * d` exceeds this value
/// (`K0(32) < 1e-14`).
const IMAGE_CUTOFF: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// The cavity `[0, c1] x [0, c2]`, side lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle<T> {
    c1: T,
    c2: T,
}

impl<T: Real> Rectangle<T> {
    pub fn new(c1: T, c2: T) -> Result<Self> {
        for (v, what) in [(c1, "side c1 must be > 0"), (c2, "side c2 must be > 0")] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Domain {
                    what,
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> T {
        self.c1
    }

    pub fn c2(&self) -> T {
        self.c2
    }

    pub fn area(&self) -> T {
        self.c1 * self.c2
    }

    pub fn perimeter(&self) -> T {
        T::lit(2.0) * (self.c1 + self.c2)
    }

    /// True when `p` lies strictly inside.
    pub fn contains_interior(&self, p: &Point<T>) -> bool {
        p.x > T::zero() && p.x < self.c1 && p.y > T::zero() && p.y < self.c2
    }

    pub fn contains_closed(&self, p: &Point<T>) -> bool {
        p.x >= T::zero() && p.x <= self.c1 && p.y >= T::zero() && p.y <= self.c2
    }

    /// Distance from an interior point to the nearest wall.
    pub fn wall_distance(&self, p: &Point<T>) -> T {
        p.x.min(self.c1 - p.x).min(p.y).min(self.c2 - p.y)
    }

    /// Ratio `c1 / c2`.
    pub fn aspect(&self) -> T {
        self.c1 / self.c2
    }
}

/// Dirichlet mode label `(n, m)`, both at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    n: u32,
    m: u32,
}

impl ModeIndex {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain {
                what: "mode indices must be >= 1",
                value: n.min(m) as f64,
            });
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

/// Closed-cavity eigenvalue `(n pi / c1)^2 + (m pi / c2)^2` in 1/m^2.
pub fn eigenvalue<T: Real>(rect: &Rectangle<T>, idx: ModeIndex) -> T {
    let a = T::lit(idx.n as f64) * T::PI() / rect.c1;
    let b = T::lit(idx.m as f64) * T::PI() / rect.c2;
    a * a + b * b
}

/// Normalised eigenfunction `2/sqrt(c1 c2) sin(n pi x/c1) sin(m pi y/c2)`.
pub fn eigenfunction<T: Real>(rect: &Rectangle<T>, idx: ModeIndex, pt: &Point<T>) -> Result<T> {
    if !rect.contains_closed(pt) {
        return Err(Error::Domain {
            what: "point outside the rectangle",
            value: pt.x.as_f64(),
        });
    }
    let sx = (T::lit(idx.n as f64) * T::PI() * pt.x / rect.c1).sin();
    let sy = (T::lit(idx.m as f64) * T::PI() * pt.y / rect.c2).sin();
    Ok(T::lit(2.0) / rect.area().sqrt() * sx * sy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T> {
    pub index: ModeIndex,
    pub energy: T,
}

fn mode_order<T: Real>(a: &Mode<T>, b: &Mode<T>) -> Ordering {
    a.energy
        .partial_cmp(&b.energy)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.index.cmp(&b.index))
}

/// All modes with eigenvalue `<= cutoff`, ascending in energy with ties
/// broken lexicographically by `(n, m)`.
pub fn enumerate_modes<T: Real>(
    rect: &Rectangle<T>,
    cutoff: T,
    max_modes: usize,
) -> Result<Vec<Mode<T>>> {
    let lowest = eigenvalue(rect, ModeIndex { n: 1, m: 1 });
    if !(cutoff > lowest) || !cutoff.is_finite() {
        return Err(Error::Invalid(format!(
            "cutoff {} must exceed the lowest eigenvalue {}",
            cutoff.as_f64(),
            lowest.as_f64()
        )));
    }
    // Weyl estimate for an early resource check.
    let estimate = (rect.area() * cutoff / (T::lit(4.0) * T::PI())).as_f64();
    if estimate > 1.05 * max_modes as f64 + 10.0 {
        return Err(Error::Resource {
            count: estimate as usize,
            max: max_modes,
        });
    }

    let pi = T::PI();
    let mut modes = Vec::new();
    let mut n = 1u32;
    loop {
        let kx = T::lit(n as f64) * pi / rect.c1;
        let rest = cutoff - kx * kx;
        if rest < T::zero() {
            break;
        }
        let mut mmax = (rect.c2 * rest.sqrt() / pi).floor().to_u32().unwrap_or(0);
        // guard the floor against rounding at the cutoff
        while mmax > 0 && eigenvalue(rect, ModeIndex { n, m: mmax }) > cutoff {
            mmax -= 1;
        }
        while eigenvalue(rect, ModeIndex { n, m: mmax + 1 }) <= cutoff {
            mmax += 1;
        }
        for m in 1..=mmax {
            let index = ModeIndex { n, m };
            modes.push(Mode {
                index,
                energy: eigenvalue(rect, index),
            });
        }
        if modes.len() > max_modes {
            return Err(Error::Resource {
                count: modes.len(),
                max: max_modes,
            });
        }
        n += 1;
    }
    modes.sort_by(mode_order);
    Ok(modes)
}

/// Smooth counting function `|M| E / 4pi - P sqrt(E) / 4pi + 1/4`.
pub fn weyl_mean_counting<T: Real>(rect: &Rectangle<T>, energy: T) -> T {
    let four_pi = T::lit(4.0) * T::PI();
    let e = energy.max(T::zero());
    rect.area() * e / four_pi - rect.perimeter() * e.sqrt() / four_pi + T::lit(0.25)
}

/// One stored expansion term: eigenvalue and `|phi_n(x0)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTerm<T> {
    pub index: ModeIndex,
    pub energy: T,
    pub weight: T,
}

/// A distinct eigenvalue with non-zero coupling at `x0`. Degenerate modes
/// are merged and their weights added.
#[derive(Debug, Clone, PartialEq)]
pub struct VisiblePole<T> {
    pub energy: T,
    pub weight: T,
    pub modes: Vec<ModeIndex>,
}

/// Precomputed expansion data for `xi(x0; k)` in one rectangle.
#[derive(Debug, Clone)]
pub struct GreenEvaluator<T> {
    rect: Rectangle<T>,
    x0: Point<T>,
    cutoff: T,
    terms: Vec<GreenTerm<T>>,
    poles: Vec<VisiblePole<T>>,
    /// `sum_n 1/(4 pi n)` over the stored terms.
    counterterm: T,
    /// `sum_n w_n - cutoff/4pi`: deviation of the local spectral function
    /// from its mean at the cutoff.
    local_excess: T,
    /// k-independent part of the truncation remainder.
    tail_offset: T,
}

impl<T: Real> GreenEvaluator<T> {
    pub fn new(rect: Rectangle<T>, x0: Point<T>, cutoff: T) -> Result<Self> {
        Self::with_max_modes(rect, x0, cutoff, DEFAULT_MAX_MODES)
    }

    pub fn with_max_modes(
        rect: Rectangle<T>,
        x0: Point<T>,
        cutoff: T,
        max_modes: usize,
    ) -> Result<Self> {
        if !rect.contains_interior(&x0) {
            return Err(Error::Domain {
                what: "antenna point must lie strictly inside the rectangle",
                value: x0.x.as_f64(),
            });
        }
        let modes = enumerate_modes(&rect, cutoff, max_modes)?;
        let nodal = T::lit(NODAL_THRESHOLD) * T::lit(4.0) / rect.area();
        let terms: Vec<GreenTerm<T>> = modes
            .iter()
            .map(|mode| {
                let phi = eigenfunction(&rect, mode.index, &x0).unwrap_or(T::zero());
                let w = phi * phi;
                GreenTerm {
                    index: mode.index,
                    energy: mode.energy,
                    weight: if w < nodal { T::zero() } else { w },
                }
            })
            .collect();

        let four_pi = T::lit(4.0) * T::PI();
        let n_terms = terms.len();
        let counterterm = (1..=n_terms)
            .rev()
            .fold(T::zero(), |acc, n| acc + T::one() / (four_pi * T::from_usize_lossy(n)));
        let local_count = terms.iter().fold(T::zero(), |acc, t| acc + t.weight);
        let local_excess = local_count - cutoff / four_pi;

        // Remainder of the rank-paired series beyond N, taking the local
        // spectral density as 1/4pi and sum_{n>N} 1/n ~ -ln(N + 1/2):
        //   (1/4pi)[ln(4pi(N+1/2)/|M|) - ln(cutoff - k^2)] - excess/(cutoff - k^2).
        // The rank-paired series converges to xi only up to the constant
        // (1/4pi)[ln(|M|/pi) - gamma]; that constant is folded in here so
        // xi carries the free-space singularity -ln(kappa/2)/2pi - gamma/2pi.
        // Together the logs of |M| cancel:
        let n_half = T::from_usize_lossy(n_terms) + T::lit(0.5);
        let tail_offset = ((T::lit(4.0) * n_half).ln() - T::euler_gamma()) / four_pi;

        let poles = merge_visible(&terms);
        Ok(Self {
            rect,
            x0,
            cutoff,
            terms,
            poles,
            counterterm,
            local_excess,
            tail_offset,
        })
    }

    pub fn rect(&self) -> &Rectangle<T> {
        &self.rect
    }

    pub fn x0(&self) -> &Point<T> {
        &self.x0
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn terms(&self) -> &[GreenTerm<T>] {
        &self.terms
    }

    /// Distinct eigenvalues with non-zero weight, ascending.
    pub fn visible_poles(&self) -> &[VisiblePole<T>] {
        &self.poles
    }

    /// Largest `|k^2|` accepted by [`Self::xi`].
    pub fn max_ksq(&self) -> T {
        self.cutoff / T::lit(CUTOFF_SAFETY_FACTOR)
    }

    fn check(&self, ksq: Complex<T>) -> Result<()> {
        if !(ksq.norm() <= self.max_ksq()) {
            return Err(Error::Cutoff {
                cutoff: self.cutoff.as_f64(),
                ksq: ksq.norm().as_f64(),
                factor: CUTOFF_SAFETY_FACTOR,
            });
        }
        if ksq.im == T::zero() {
            if let Some(p) = self.nearest_pole(ksq.re) {
                if (p.energy - ksq.re).abs() <= T::lit(POLE_TOLERANCE) * p.energy {
                    return Err(Error::Pole {
                        ksq: ksq.re.as_f64(),
                        eigenvalue: p.energy.as_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Visible pole closest to a real energy.
    pub fn nearest_pole(&self, energy: T) -> Option<&VisiblePole<T>> {
        let pos = self.poles.partition_point(|p| p.energy < energy);
        let below = pos.checked_sub(1).map(|i| &self.poles[i]);
        let above = self.poles.get(pos);
        match (below, above) {
            (Some(b), Some(a)) => {
                if energy - b.energy <= a.energy - energy {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        }
    }

    /// Regularised Green's function `xi(x0; k)` at complex energy `ksq = k^2`.
    ///
    /// Returns the rank-paired sum over the stored modes plus the
    /// truncation remainder
    /// `(1/4pi)[ln(4pi(N+1/2)/|M|) - ln(L - k^2)] - R/(L - k^2)`,
    /// where `L` is the cutoff and `R = sum w_n - L/4pi`, plus the constant
    /// `(1/4pi)[ln(|M|/pi) - gamma]` that aligns the series with the
    /// coincidence limit.
    pub fn xi(&self, ksq: Complex<T>) -> Result<Complex<T>> {
        self.check(ksq)?;
        Ok(self.evaluate(ksq, None).0)
    }

    /// `xi` and its derivative with respect to `ksq`.
    pub fn xi_with_derivative(&self, ksq: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        self.check(ksq)?;
        Ok(self.evaluate(ksq, None))
    }

    /// `xi` with every term at the eigenvalue `pole_energy` removed, and its
    /// derivative. No pole check is made for that eigenvalue.
    pub fn xi_without_pole(
        &self,
        ksq: Complex<T>,
        pole_energy: T,
    ) -> Result<(Complex<T>, Complex<T>)> {
        if !(ksq.norm() <= self.max_ksq()) {
            return Err(Error::Cutoff {
                cutoff: self.cutoff.as_f64(),
                ksq: ksq.norm().as_f64(),
                factor: CUTOFF_SAFETY_FACTOR,
            });
        }
        Ok(self.evaluate(ksq, Some(pole_energy)))
    }

    fn evaluate(&self, ksq: Complex<T>, skip: Option<T>) -> (Complex<T>, Complex<T>) {
        let tol = T::lit(POLE_TOLERANCE);
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut dsum = Complex::new(T::zero(), T::zero());
        for t in &self.terms {
            if t.weight == T::zero() {
                continue;
            }
            if let Some(e) = skip {
                if (t.energy - e).abs() <= tol * e {
                    continue;
                }
            }
            let inv = (Complex::new(t.energy, T::zero()) - ksq).inv();
            let term = inv * t.weight;
            sum = sum + term;
            dsum = dsum + term * inv;
        }
        let four_pi = T::lit(4.0) * T::PI();
        let gap = Complex::new(self.cutoff, T::zero()) - ksq;
        let gap_inv = gap.inv();
        let value = sum - Complex::new(self.counterterm, T::zero()) - gap.ln() / four_pi
            - gap_inv * self.local_excess
            + Complex::new(self.tail_offset, T::zero());
        let deriv = dsum + gap_inv / four_pi - gap_inv * gap_inv * self.local_excess;
        (value, deriv)
    }

    /// Declared size of the truncation error at `ksq`: one maximal weight
    /// plus the local-count excess, divided by the distance to the cutoff.
    pub fn tail_bound(&self, ksq: Complex<T>) -> T {
        let w_max = T::lit(4.0) / self.rect.area();
        let gap = (Complex::new(self.cutoff, T::zero()) - ksq).norm();
        (w_max + self.local_excess.abs()) / gap
    }
}

fn merge_visible<T: Real>(terms: &[GreenTerm<T>]) -> Vec<VisiblePole<T>> {
    let tol = T::lit(POLE_TOLERANCE);
    let mut poles: Vec<VisiblePole<T>> = Vec::new();
    for t in terms.iter().filter(|t| t.weight > T::zero()) {
        if let Some(last) = poles.last_mut() {
            if (t.energy - last.energy).abs() <= tol * last.energy {
                last.weight = last.weight + t.weight;
                last.modes.push(t.index);
                continue;
            }
        }
        poles.push(VisiblePole {
            energy: t.energy,
            weight: t.weight,
            modes: vec![t.index],
        });
    }
    poles
}

/// `xi(x0; i kappa)` from the method of images: the free-space value
/// `-(gamma + ln(kappa/2))/2pi` plus `(+-1/2pi) K0(kappa d)` for every
/// non-trivial Dirichlet image, signed by reflection parity.
pub fn xi_image_oracle<T: Real>(rect: &Rectangle<T>, x0: &Point<T>, kappa: T) -> Result<T> {
    if !(kappa > T::zero()) {
        return Err(Error::Domain {
            what: "kappa must be > 0",
            value: kappa.as_f64(),
        });
    }
    if !rect.contains_interior(x0) {
        return Err(Error::Domain {
            what: "point must lie strictly inside the rectangle",
            value: x0.x.as_f64(),
        });
    }
    let two_pi = T::lit(2.0) * T::PI();
    let free = -(T::euler_gamma() + (kappa / T::lit(2.0)).ln()) / two_pi;
    let reach = T::lit(IMAGE_CUTOFF) / kappa;
    let px = ((reach + rect.c1) / (T::lit(2.0) * rect.c1)).ceil().to_i64().unwrap_or(0) + 1;
    let py = ((reach + rect.c2) / (T::lit(2.0) * rect.c2)).ceil().to_i64().unwrap_or(0) + 1;

    let mut images = T::zero();
    for p in -px..=px {
        for q in -py..=py {
            for (sx, sy) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                if p == 0 && q == 0 && sx == 1 && sy == 1 {
                    continue;
                }
                let ix = T::lit(2.0 * p as f64) * rect.c1 + T::lit(sx as f64) * x0.x;
                let iy = T::lit(2.0 * q as f64) * rect.c2 + T::lit(sy as f64) * x0.y;
                let d = (ix - x0.x).hypot(iy - x0.y);
                let arg = kappa * d;
                if arg > T::lit(IMAGE_CUTOFF) {
                    continue;
                }
                let sign = T::lit((sx * sy) as f64);
                images = images + sign * bessel_k0(arg)?;
            }
        }
    }
    Ok(free + images / two_pi)
}
