//! Antenna-cavity scattering: reflection on the real axis, the resonance
//! condition in the complex plane, and its roots.

use log::warn;
use num_complex::Complex;
use rayon::prelude::*;

use crate::billiard::{
    eigenvalue, GreenEvaluator, ModeIndex, Point, Rectangle, VisiblePole, CUTOFF_SAFETY_FACTOR,
};
use crate::coupling::{identify_parameters, CouplingParams};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::SPEED_OF_LIGHT;

/// Which denominator defines a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResonanceCondition {
    /// `pi Z (1 + 2ika) - 1`, the denominator of the reflection amplitude.
    #[default]
    Rr1,
    /// `pi Z (1 + ika) - 1`.
    Eq18,
}

impl ResonanceCondition {
    fn factor<T: Real>(self) -> T {
        match self {
            ResonanceCondition::Rr1 => T::lit(2.0),
            ResonanceCondition::Eq18 => T::one(),
        }
    }
}

/// A rectangle with an antenna of radius `a` at `x0`.
#[derive(Debug, Clone)]
pub struct ResonatorSystem<T> {
    rect: Rectangle<T>,
    x0: Point<T>,
    a: T,
    params: CouplingParams<T>,
    evaluator: GreenEvaluator<T>,
    condition: ResonanceCondition,
}

impl<T: Real> ResonatorSystem<T> {
    /// Builds the system with an explicit basis cutoff (1/m^2).
    pub fn new(rect: Rectangle<T>, x0: Point<T>, a: T, cutoff: T) -> Result<Self> {
        let params = identify_parameters(a)?;
        let evaluator = GreenEvaluator::new(rect, x0, cutoff)?;
        Ok(Self { rect, x0, a, params, evaluator, condition: ResonanceCondition::Rr1 })
    }

    /// Builds the system with cutoff `factor * max(k_max^2, 4 lambda_11)`.
    pub fn for_band(rect: Rectangle<T>, x0: Point<T>, a: T, k_max: T, factor: T) -> Result<Self> {
        if !(factor >= T::lit(CUTOFF_SAFETY_FACTOR)) {
            return Err(Error::Invalid(format!(
                "cutoff factor {factor} below the safety margin {CUTOFF_SAFETY_FACTOR}"
            )));
        }
        let ground = eigenvalue(&rect, ModeIndex::new(1, 1)?);
        let cutoff = factor * (k_max * k_max).max(T::lit(4.0) * ground);
        Self::new(rect, x0, a, cutoff)
    }

    pub fn with_condition(mut self, condition: ResonanceCondition) -> Self {
        self.condition = condition;
        self
    }

    pub fn rect(&self) -> &Rectangle<T> {
        &self.rect
    }

    pub fn x0(&self) -> &Point<T> {
        &self.x0
    }

    pub fn radius(&self) -> T {
        self.a
    }

    pub fn params(&self) -> &CouplingParams<T> {
        &self.params
    }

    pub fn evaluator(&self) -> &GreenEvaluator<T> {
        &self.evaluator
    }

    pub fn condition(&self) -> ResonanceCondition {
        self.condition
    }

    /// Largest wavenumber the basis supports.
    pub fn max_k(&self) -> T {
        self.evaluator.max_ksq().sqrt()
    }

    fn log_radius_term(&self) -> T {
        self.a.ln() / T::TAU()
    }

    /// `Z = xi(x0; k) - ln(a)/2pi`.
    pub fn z_eval(&self, ksq: Complex<T>) -> Result<Complex<T>> {
        Ok(self.evaluator.xi(ksq)? - self.log_radius_term())
    }

    /// `Z` and `dZ/d(k^2)`.
    pub fn z_with_derivative(&self, ksq: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let (xi, dxi) = self.evaluator.xi_with_derivative(ksq)?;
        Ok((xi - self.log_radius_term(), dxi))
    }

    /// Reflection amplitude `-conj(F)/F` for real `k`, with `F` the
    /// configured resonance denominator. For the default condition this is
    /// `-[pi Z (1 - 2ika) - 1] / [pi Z (1 + 2ika) - 1]`.
    pub fn reflection(&self, k: T) -> Result<Complex<T>> {
        if !(k > T::zero()) {
            return Err(Error::Domain { what: "wavenumber must be positive", value: k.as_f64() });
        }
        let z = self.z_eval(Complex::new(k * k, T::zero()))?.re;
        let pz = T::PI() * z;
        let lead = self.condition.factor::<T>() * k * self.a;
        let num = Complex::new(pz - T::one(), -pz * lead);
        let den = Complex::new(pz - T::one(), pz * lead);
        Ok(-num / den)
    }

    /// Resonance condition `F(k) = pi Z(k^2) (1 + c ika) - 1`, `c = 2` for
    /// the default condition.
    pub fn condition_residual(&self, k: Complex<T>) -> Result<Complex<T>> {
        Ok(self.residual_with_derivative(k)?.0)
    }

    /// `F(k)` and `dF/dk`.
    pub fn residual_with_derivative(&self, k: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        if !(k.re > T::zero()) {
            return Err(Error::Domain { what: "Re k must be positive", value: k.re.as_f64() });
        }
        let (z, dz) = self.z_with_derivative(k * k)?;
        let c = self.condition.factor::<T>() * self.a;
        let lead = Complex::new(T::one(), T::zero()) + Complex::new(T::zero(), c) * k;
        let f = z * lead * T::PI() - T::one();
        let df = (dz * k * T::lit(2.0) * lead + z * Complex::new(T::zero(), c)) * T::PI();
        Ok((f, df))
    }

    /// `pi Z(E) - 1` and its derivative for real `E`.
    fn real_gap(&self, energy: T) -> Result<(T, T)> {
        let (z, dz) = self.z_with_derivative(Complex::new(energy, T::zero()))?;
        Ok((T::PI() * z.re - T::one(), T::PI() * dz.re))
    }

    /// Solves `pi Z(E) = 1` on `(lo, hi)` where the gap rises from negative
    /// to positive. Safeguarded Newton with bisection fallback.
    fn solve_gap(&self, mut lo: T, mut hi: T) -> Result<Option<T>> {
        let (g_lo, _) = self.real_gap(lo)?;
        let (g_hi, _) = self.real_gap(hi)?;
        if !(g_lo < T::zero() && g_hi > T::zero()) {
            return Ok(None);
        }
        let mut x = T::lit(0.5) * (lo + hi);
        let tol = T::lit(4.0) * T::epsilon();
        for _ in 0..200 {
            let (g, dg) = self.real_gap(x)?;
            if g == T::zero() {
                return Ok(Some(x));
            }
            if g < T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - g / dg;
            let next = if dg > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                T::lit(0.5) * (lo + hi)
            };
            if (next - x).abs() <= tol * x.abs().max(T::one()) || hi - lo <= tol * hi.abs() {
                return Ok(Some(next));
            }
            x = next;
        }
        Ok(Some(x))
    }

    /// Energy window strictly between two poles, kept clear of the pole
    /// guard.
    fn open_window(lo: T, hi: T) -> (T, T) {
        let guard = T::lit(1e-10).max(T::lit(64.0) * T::epsilon());
        (lo + guard * lo.abs().max(T::one()), hi - guard * hi.abs().max(T::one()))
    }

    /// Real crossing of `pi Z = 1` above visible pole `i`.
    fn crossing_above(&self, i: usize) -> Result<Option<T>> {
        let poles = self.evaluator.visible_poles();
        let top = self.evaluator.max_ksq();
        let lo = poles[i].energy;
        let hi = poles.get(i + 1).map_or(top, |p| p.energy.min(top));
        if hi <= lo {
            return Ok(None);
        }
        let (lo, hi) = Self::open_window(lo, hi);
        let hi = if poles.get(i + 1).is_some_and(|p| p.energy <= top) { hi } else { top };
        self.solve_gap(lo, hi)
    }

    /// Real crossing at positive energy below the first visible pole.
    fn crossing_below_first(&self) -> Result<Option<T>> {
        let Some(first) = self.evaluator.visible_poles().first() else {
            return Ok(None);
        };
        let (_, hi) = Self::open_window(T::zero(), first.energy);
        let lo = T::lit(1e-12) * first.energy;
        self.solve_gap(lo, hi)
    }

    fn halfwidth_at(&self, energy: T) -> Result<T> {
        let (_, dg) = self.real_gap(energy)?;
        let lead = self.condition.factor::<T>() * energy.sqrt() * self.a;
        Ok(lead / dg)
    }

    fn pole_of(&self, idx: ModeIndex) -> Option<usize> {
        self.evaluator.visible_poles().iter().position(|p| p.modes.contains(&idx))
    }

    /// First-order estimate `(E* - lambda_n, |Im E|)` for the resonance
    /// attached to mode `idx`.
    ///
    /// `E*` is the real solution of `pi Z(E) = 1` above `lambda_n`;
    /// linearising `F` there gives `|Im E| = c k a / (pi Z'(E*))` with
    /// `c = 2` (or 1 for [`ResonanceCondition::Eq18`]). Invisible modes give
    /// `(0, 0)`.
    pub fn perturbative_estimate(&self, idx: ModeIndex) -> Result<(T, T)> {
        let lambda = eigenvalue(&self.rect, idx);
        if lambda > self.evaluator.max_ksq() {
            return Err(Error::Cutoff {
                cutoff: self.evaluator.cutoff().as_f64(),
                ksq: lambda.as_f64(),
                factor: CUTOFF_SAFETY_FACTOR,
            });
        }
        let Some(i) = self.pole_of(idx) else {
            return Ok((T::zero(), T::zero()));
        };
        let crossing = self.crossing_above(i)?.ok_or_else(|| Error::Isolation {
            n: idx.n(),
            m: idx.m(),
            reason: "no real crossing of pi Z = 1 before the next pole".into(),
        })?;
        let width = self.halfwidth_at(crossing)?;
        let poles = self.evaluator.visible_poles();
        let gap = [i.checked_sub(1), Some(i + 1)]
            .into_iter()
            .flatten()
            .filter_map(|j| poles.get(j))
            .map(|p| (p.energy - lambda).abs())
            .fold(T::infinity(), T::min);
        if gap <= T::lit(5.0) * width {
            return Err(Error::Isolation {
                n: idx.n(),
                m: idx.m(),
                reason: format!("neighbouring pole at distance {gap} within 5 widths ({width})"),
            });
        }
        Ok((crossing - lambda, width))
    }

    /// Rounding level of `F` near `k`: cancellation in the nearest pole
    /// term, or the change of `F` across one ulp of `k` when the resonance
    /// is narrow.
    fn residual_floor(&self, k: Complex<T>, df: Complex<T>) -> T {
        let ksq = k * k;
        let peak = self
            .evaluator
            .nearest_pole(ksq.re)
            .map(|p| p.weight / (Complex::new(p.energy, T::zero()) - ksq).norm())
            .unwrap_or(T::zero());
        let lead = T::one() + self.condition.factor::<T>() * self.a * k.norm();
        let grid = T::lit(4.0) * T::epsilon() * k.norm() * df.norm();
        (T::lit(64.0) * T::epsilon() * T::PI() * (T::one() + peak) * lead).max(grid)
    }

    /// Damped Newton on `F(k)` from `k0`.
    fn newton(&self, k0: Complex<T>, opts: &SearchOptions) -> Result<(Complex<T>, T)> {
        let mut k = k0;
        let (mut f, mut df) = self.residual_with_derivative(k)?;
        let step_tol = T::lit(opts.tol) * T::lit(1e-3);
        let tol = |k: Complex<T>, df: Complex<T>| T::lit(opts.tol).max(self.residual_floor(k, df));
        for _ in 0..opts.max_iter {
            let step = f / df;
            let mut scale = T::one();
            let mut accepted = None;
            for _ in 0..40 {
                let trial = k - step * scale;
                if trial.re > T::zero() {
                    if let Ok((tf, tdf)) = self.residual_with_derivative(trial) {
                        if tf.norm() < f.norm() || tf.norm() <= T::lit(opts.tol) * T::lit(1e-3) {
                            accepted = Some((trial, tf, tdf));
                            break;
                        }
                    }
                }
                scale = scale * T::lit(0.5);
            }
            let Some((kn, fnew, dfnew)) = accepted else {
                break;
            };
            let moved = (kn - k).norm();
            k = kn;
            f = fnew;
            df = dfnew;
            if f.norm() < tol(k, df) && moved <= step_tol * k.norm() {
                return Ok((k, f.norm()));
            }
        }
        if f.norm() < tol(k, df) {
            Ok((k, f.norm()))
        } else {
            Err(Error::Invalid(format!(
                "Newton did not converge from {k0} (|F| = {:e} at {k})",
                f.norm().as_f64()
            )))
        }
    }

    fn resonance_from_seed(&self, seed: &Seed<T>, opts: &SearchOptions) -> Result<Resonance<T>> {
        let width = self.halfwidth_at(seed.energy)?;
        let k_real = seed.energy.sqrt();
        let k0 = Complex::new(k_real, -width / (T::lit(2.0) * k_real));
        let (k, residual) = self.newton(k0, opts)?;
        if !(k.im < T::zero()) {
            return Err(Error::Invalid(format!("root {k} is not in the lower half-plane")));
        }
        Ok(Resonance::new(k, residual, seed.mode))
    }

    /// Complex roots of the resonance condition with `Re k` in `band`.
    ///
    /// Each visible pole below `k_max^2` seeds one search, started from the
    /// real crossing of `pi Z = 1` between it and the next visible pole. A
    /// crossing at positive energy below the first pole is searched too.
    /// Seeds that fail are reported, not fatal.
    pub fn find_resonances(&self, band: (T, T), opts: &SearchOptions) -> Result<ResonanceSearch<T>> {
        let (k_min, k_max) = band;
        if !(k_min >= T::zero() && k_max > k_min) {
            return Err(Error::Invalid(format!("band [{k_min}, {k_max}] is not ordered")));
        }
        if k_max * k_max > self.evaluator.max_ksq() {
            return Err(Error::Cutoff {
                cutoff: self.evaluator.cutoff().as_f64(),
                ksq: (k_max * k_max).as_f64(),
                factor: CUTOFF_SAFETY_FACTOR,
            });
        }
        let poles = self.evaluator.visible_poles();
        let e_min = k_min * k_min;
        let e_max = k_max * k_max;
        let first = poles.partition_point(|p| p.energy < e_min).saturating_sub(1);
        let last = poles.partition_point(|p| p.energy <= e_max);

        let mut tasks: Vec<Option<usize>> = Vec::new();
        if first == 0 {
            tasks.push(None);
        }
        tasks.extend((first..last).map(Some));

        let outcomes: Vec<std::result::Result<Option<Resonance<T>>, SeedFailure>> = tasks
            .par_iter()
            .map(|task| {
                let mode = task.map(|i| pole_label(&poles[i]));
                let crossing = match task {
                    Some(i) => self.crossing_above(*i),
                    None => self.crossing_below_first(),
                };
                let fail = |reason: String| SeedFailure { seed_mode: mode, reason };
                let energy = match crossing {
                    Ok(Some(e)) => e,
                    Ok(None) => return Ok(None),
                    Err(e) => return Err(fail(e.to_string())),
                };
                let seed = Seed { energy, mode };
                self.resonance_from_seed(&seed, opts).map(Some).map_err(|e| fail(e.to_string()))
            })
            .collect();

        let mut roots = Vec::new();
        let mut failures = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok(Some(r)) => roots.push(r),
                Ok(None) => {}
                Err(f) => {
                    warn!("resonance seed {:?} skipped: {}", f.seed_mode, f.reason);
                    failures.push(f);
                }
            }
        }
        roots.retain(|r: &Resonance<T>| r.k.re >= k_min && r.k.re <= k_max);
        roots.sort_by(|a, b| a.k.re.partial_cmp(&b.k.re).unwrap_or(std::cmp::Ordering::Equal));
        let radius = T::lit(opts.dedup_radius.unwrap_or(1e-6)) * k_max;
        let mut unique: Vec<Resonance<T>> = Vec::with_capacity(roots.len());
        for r in roots {
            if unique.last().is_some_and(|u| (u.k - r.k).norm() <= radius) {
                continue;
            }
            unique.push(r);
        }
        Ok(ResonanceSearch { resonances: unique, failures })
    }

    /// Visible distinct eigenvalues with `sqrt(lambda)` in `band`.
    pub fn visible_count(&self, band: (T, T)) -> usize {
        let (lo, hi) = (band.0 * band.0, band.1 * band.1);
        self.evaluator
            .visible_poles()
            .iter()
            .filter(|p| p.energy >= lo && p.energy <= hi)
            .count()
    }

    /// Locates resonances from the reflection phase on the real axis,
    /// independently of the complex root search.
    ///
    /// `theta(k) = arg r(k)` winds by `2 pi` across each resonance. The band
    /// is cut at a grid of spacing `grid_step` and at every visible pole;
    /// inside each piece `pi Z - 1` is monotone, so each upward sign change
    /// brackets one resonance. Around it `theta` is sampled densely; the
    /// centre is the maximum of `d theta/dk` and the width its half-width
    /// at half maximum.
    pub fn phase_scan_oracle(&self, band: (T, T), grid_step: T) -> Result<PhaseScan<T>> {
        let (k_min, k_max) = band;
        if !(grid_step > T::zero()) || !(k_max > k_min) || !(k_min >= T::zero()) {
            return Err(Error::Invalid("phase scan needs an ordered band and positive step".into()));
        }
        let e_min = k_min * k_min;
        let e_max = k_max * k_max;
        let mut cuts: Vec<T> = Vec::new();
        let steps = ((k_max - k_min) / grid_step).ceil().to_usize().unwrap_or(0);
        for i in 0..=steps {
            let k = (k_min + grid_step * T::from_usize_lossy(i)).min(k_max);
            if k > T::zero() {
                cuts.push(k * k);
            }
        }
        let guard = T::lit(1e-9);
        for p in self.evaluator.visible_poles() {
            if p.energy > e_min && p.energy < e_max {
                cuts.push(p.energy * (T::one() - guard));
                cuts.push(p.energy * (T::one() + guard));
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup();

        let gap = |e: T| -> Result<T> { Ok(self.real_gap(e)?.0) };
        let mut brackets = Vec::new();
        let mut prev = gap(cuts[0])?;
        for w in cuts.windows(2) {
            let next = gap(w[1])?;
            let straddles_pole = self
                .evaluator
                .nearest_pole(T::lit(0.5) * (w[0] + w[1]))
                .is_some_and(|p| p.energy > w[0] && p.energy < w[1]);
            if prev < T::zero() && next > T::zero() && !straddles_pole {
                brackets.push((w[0], w[1]));
            }
            prev = next;
        }

        let mut centres = Vec::with_capacity(brackets.len());
        for &(lo, hi) in &brackets {
            let e_star = self.solve_gap(lo, hi)?.unwrap_or(T::lit(0.5) * (lo + hi));
            centres.push(e_star.sqrt());
        }

        let mut peaks = Vec::with_capacity(centres.len());
        let mut unresolved = 0;
        for (i, &kc) in centres.iter().enumerate() {
            let left = if i > 0 { centres[i - 1] } else { k_min };
            let right = centres.get(i + 1).copied().unwrap_or(k_max);
            match self.resolve_peak(kc, left, right)? {
                Some(peak) => peaks.push(peak),
                None => {
                    unresolved += 1;
                    warn!("phase scan: peak near k = {kc} could not be resolved from its neighbours");
                    peaks.push(PhasePeak { k_center: kc, width: T::nan(), resolved: false });
                }
            }
        }
        let fine = peaks
            .iter()
            .filter(|p| p.resolved)
            .map(|p| p.width)
            .fold(k_max * T::lit(1e-6), T::min)
            * T::lit(0.25);
        let winding = self.phase_winding(&cuts, &centres, fine)?;
        Ok(PhaseScan { peaks, winding, unresolved })
    }

    /// Unwrapped `theta` samples on `[lo, hi]`.
    fn sample_phase(&self, lo: T, hi: T, n: usize) -> Result<(Vec<T>, Vec<T>)> {
        let mut ks = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        let mut last = T::zero();
        let mut offset = T::zero();
        for i in 0..n {
            let k = lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1);
            let raw = self.reflection(k)?.arg();
            if i > 0 {
                let mut d = raw - last;
                while d > T::PI() {
                    d = d - T::TAU();
                    offset = offset - T::TAU();
                }
                while d < -T::PI() {
                    d = d + T::TAU();
                    offset = offset + T::TAU();
                }
            }
            last = raw;
            ks.push(k);
            theta.push(raw + offset);
        }
        Ok((ks, theta))
    }

    fn resolve_peak(&self, kc: T, left: T, right: T) -> Result<Option<PhasePeak<T>>> {
        // local scale from the slope of pi Z - 1 in k
        let e = kc * kc;
        let (_, dg_de) = self.real_gap(e)?;
        let lead = self.condition.factor::<T>() * kc * self.a;
        let scale = lead / (dg_de * T::lit(2.0) * kc);
        let half_span = T::lit(30.0) * scale;
        let lo = (kc - half_span).max(T::lit(0.5) * (left + kc));
        let hi = (kc + half_span).min(T::lit(0.5) * (kc + right));
        if !(hi > lo) {
            return Ok(None);
        }
        let mut n = 2001;
        let (ks, theta) = loop {
            let (ks, theta) = self.sample_phase(lo, hi, n)?;
            let max_step = theta.windows(2).map(|w| (w[1] - w[0]).abs()).fold(T::zero(), T::max);
            if max_step < T::PI() / T::lit(8.0) || n > 64_000 {
                break (ks, theta);
            }
            n = 4 * n - 3;
        };
        let h = ks[1] - ks[0];
        let delay: Vec<T> = (1..ks.len() - 1)
            .map(|i| (theta[i + 1] - theta[i - 1]) / (T::lit(2.0) * h))
            .collect();
        let (imax, &dmax) = delay
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty delay");
        if !(dmax > T::zero()) {
            return Ok(None);
        }
        // parabolic refinement of the maximum
        let mut centre = ks[imax + 1];
        if imax > 0 && imax + 1 < delay.len() {
            let (y0, y1, y2) = (delay[imax - 1], delay[imax], delay[imax + 1]);
            let denom = y0 - T::lit(2.0) * y1 + y2;
            if denom < T::zero() {
                centre = centre + h * T::lit(0.5) * (y0 - y2) / denom;
            }
        }
        let half = T::lit(0.5) * dmax;
        let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<T> {
            for i in range {
                let (a, b) = (delay[i], delay[i + 1]);
                if (a - half) * (b - half) <= T::zero() && a != b {
                    return Some(ks[i + 1] + h * (half - a) / (b - a));
                }
            }
            None
        };
        let right_cross = crossing(&mut (imax..delay.len() - 1));
        let left_cross = crossing(&mut (0..imax).rev());
        match (left_cross, right_cross) {
            (Some(l), Some(r)) => {
                Ok(Some(PhasePeak { k_center: centre, width: T::lit(0.5) * (r - l), resolved: true }))
            }
            _ => Ok(None),
        }
    }

    /// Total unwrapped change of `theta` over the cut grid, with adaptive
    /// subdivision wherever the increment is large or a resonance lies
    /// inside.
    fn phase_winding(&self, cuts_e: &[T], centres: &[T], fine: T) -> Result<T> {
        let mut total = T::zero();
        let ks: Vec<T> = cuts_e.iter().map(|e| e.sqrt()).collect();
        let mut thetas = Vec::with_capacity(ks.len());
        for &k in &ks {
            thetas.push(self.reflection(k)?.arg());
        }
        for i in 0..ks.len() - 1 {
            total = total + self.segment_winding(ks[i], ks[i + 1], thetas[i], thetas[i + 1], centres, fine, 0)?;
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn segment_winding(
        &self,
        a: T,
        b: T,
        ta: T,
        tb: T,
        centres: &[T],
        fine: T,
        depth: u32,
    ) -> Result<T> {
        let mut d = tb - ta;
        while d > T::PI() {
            d = d - T::TAU();
        }
        while d < -T::PI() {
            d = d + T::TAU();
        }
        let contains = centres.iter().any(|&c| c >= a && c <= b);
        let small = d.abs() < T::PI() / T::lit(8.0);
        if depth >= 60 || (small && (!contains || b - a <= fine)) {
            return Ok(d);
        }
        let mid = T::lit(0.5) * (a + b);
        let tm = match self.reflection(mid) {
            Ok(r) => r.arg(),
            Err(_) => return Ok(d),
        };
        Ok(self.segment_winding(a, mid, ta, tm, centres, fine, depth + 1)?
            + self.segment_winding(mid, b, tm, tb, centres, fine, depth + 1)?)
    }
}

fn pole_label<T>(pole: &VisiblePole<T>) -> ModeIndex {
    pole.modes[0]
}

struct Seed<T> {
    energy: T,
    mode: Option<ModeIndex>,
}

/// Newton and deduplication settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Acceptance threshold on `|F(k)|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative to `k_max`; `None` means `1e-6`.
    pub dedup_radius: Option<f64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, dedup_radius: None }
    }
}

/// A complex root of the resonance condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance<T> {
    pub k: Complex<T>,
    pub energy: Complex<T>,
    pub frequency_ghz: T,
    /// `|Im E|`, 1/m^2.
    pub halfwidth: T,
    pub residual: T,
    pub seed_mode: Option<ModeIndex>,
}

impl<T: Real> Resonance<T> {
    fn new(k: Complex<T>, residual: T, seed_mode: Option<ModeIndex>) -> Self {
        let energy = k * k;
        Self {
            k,
            energy,
            frequency_ghz: T::lit(SPEED_OF_LIGHT) * k.re / T::TAU() * T::lit(1e-9),
            halfwidth: energy.im.abs(),
            residual,
            seed_mode,
        }
    }
}

/// A seed that produced no accepted root.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed_mode: Option<ModeIndex>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ResonanceSearch<T> {
    pub resonances: Vec<Resonance<T>>,
    pub failures: Vec<SeedFailure>,
}

/// A peak of the phase delay `d theta/dk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePeak<T> {
    pub k_center: T,
    /// Half-width at half maximum in `k`; NaN when unresolved.
    pub width: T,
    pub resolved: bool,
}

#[derive(Debug, Clone)]
pub struct PhaseScan<T> {
    pub peaks: Vec<PhasePeak<T>>,
    /// Unwrapped change of `arg r` across the band.
    pub winding: T,
    pub unresolved: usize,
}
