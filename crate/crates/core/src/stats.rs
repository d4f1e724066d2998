//! Ensemble generation, unfolding and nearest-neighbour spacing statistics.
//!
//! Everything here runs in `f64`.

use log::{info, warn};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::billiard::{enumerate_modes, weyl_mean_counting, ModeIndex, Point, Rectangle};
use crate::error::{Error, Result};
use crate::resonance::{Resonance, ResonanceCondition, ResonatorSystem, SearchOptions};
use crate::SPEED_OF_LIGHT;

/// `1 - exp(-1/4)`.
pub const POISSON_SMALL_S_FRACTION: f64 = 0.221_199_216_928_595_12;
/// Spacings below this count as "small".
pub const SMALL_S: f64 = 0.25;
/// Minimum sample for [`poisson_compare`].
pub const MIN_COMPARE_SAMPLE: usize = 50;

/// Frequency in GHz of a wavenumber in 1/m.
pub fn freq_from_k(k: f64) -> f64 {
    SPEED_OF_LIGHT * k / std::f64::consts::TAU * 1e-9
}

/// Wavenumber in 1/m of a frequency in GHz.
pub fn k_from_freq(f_ghz: f64) -> f64 {
    f_ghz * 1e9 * std::f64::consts::TAU / SPEED_OF_LIGHT
}

/// SplitMix64 finaliser applied to `master + (index + 1) * golden`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one cavity.
pub fn cavity_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Provenance {
    #[default]
    Computed,
    Ingested,
}

/// Strictly increasing level values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelSequence {
    values: Vec<f64>,
    provenance: Provenance,
}

impl LevelSequence {
    /// Sorts and drops exact duplicates. Non-finite values are rejected.
    pub fn new(mut values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite level {bad}")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values, provenance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), provenance: self.provenance }
    }
}

/// Maps energies (1/m^2) through the smooth counting function of `rect`.
pub fn unfold(levels: &LevelSequence, rect: &Rectangle<f64>) -> LevelSequence {
    levels.map(|e| weyl_mean_counting(rect, e))
}

/// Divides by the mean nearest spacing, so the result has mean spacing 1.
pub fn unfold_by_mean_spacing(levels: &LevelSequence) -> LevelSequence {
    let v = levels.values();
    if v.len() < 2 {
        return levels.clone();
    }
    let mean = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if mean > 0.0 {
        levels.map(|x| x / mean)
    } else {
        levels.clone()
    }
}

/// `x[i+1] - x[i]`.
pub fn nearest_spacings(levels: &LevelSequence) -> Vec<f64> {
    levels.values().windows(2).map(|w| w[1] - w[0]).collect()
}

/// Removes `round(fraction * n)` distinct entries chosen uniformly.
pub fn thin_random<R: Rng + ?Sized>(
    levels: &LevelSequence,
    fraction: f64,
    rng: &mut R,
) -> Result<LevelSequence> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Invalid(format!("missing fraction {fraction} outside [0, 1)")));
    }
    let n = levels.len();
    let remove = (fraction * n as f64).round() as usize;
    if remove == 0 {
        return Ok(levels.clone());
    }
    let mut drop = vec![false; n];
    for i in sample(rng, n, remove) {
        drop[i] = true;
    }
    let values = levels
        .values()
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(&v, _)| v)
        .collect();
    Ok(LevelSequence { values, provenance: levels.provenance })
}

/// Histogram of spacings on `[0, s_max]`, normalised over the covered range.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    /// Every spacing offered, including those beyond `s_max`.
    pub sample_count: usize,
}

impl SpacingHistogram {
    pub fn from_spacings(spacings: &[f64], bins: usize, s_max: f64) -> Result<Self> {
        if bins == 0 || !(s_max > 0.0) {
            return Err(Error::Invalid(format!("histogram needs bins > 0 and s_max > 0 (got {bins}, {s_max})")));
        }
        let width = s_max / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for &s in spacings {
            if (0.0..=s_max).contains(&s) {
                let i = ((s / width) as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        let inside: usize = counts.iter().sum();
        let densities = counts
            .iter()
            .map(|&c| if inside == 0 { 0.0 } else { c as f64 / (inside as f64 * width) })
            .collect();
        Ok(Self { bin_edges, densities, sample_count: spacings.len() })
    }

    /// Builds a histogram from explicit edges and densities.
    pub fn from_parts(bin_edges: Vec<f64>, densities: Vec<f64>, sample_count: usize) -> Result<Self> {
        if bin_edges.len() != densities.len() + 1 || densities.is_empty() {
            return Err(Error::Invalid("histogram needs one more edge than densities".into()));
        }
        if bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("histogram edges must increase".into()));
        }
        if densities.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Invalid("histogram densities must be non-negative".into()));
        }
        Ok(Self { bin_edges, densities, sample_count })
    }

    /// `sum density * width`.
    pub fn total_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// Kolmogorov distance between the binned CDF and `1 - exp(-s)`
    /// restricted to the covered range, both renormalised to it.
    pub fn ks_to_poisson(&self) -> f64 {
        let lo = self.bin_edges[0];
        let hi = *self.bin_edges.last().expect("edges");
        let reference = |s: f64| ((-lo).exp() - (-s).exp()) / ((-lo).exp() - (-hi).exp());
        let mass = self.total_mass();
        let mut cdf = 0.0;
        let mut worst: f64 = 0.0;
        for (d, w) in self.densities.iter().zip(self.bin_edges.windows(2)) {
            cdf += d * (w[1] - w[0]) / if mass > 0.0 { mass } else { 1.0 };
            worst = worst.max((cdf - reference(w[1])).abs());
        }
        worst
    }

    /// Largest difference between two binned CDFs on identical edges.
    pub fn ks_between(&self, other: &SpacingHistogram) -> Result<f64> {
        if self.bin_edges.len() != other.bin_edges.len()
            || self.bin_edges.iter().zip(&other.bin_edges).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
        {
            return Err(Error::Invalid("histograms have different bin edges".into()));
        }
        let (ma, mb) = (self.total_mass(), other.total_mass());
        let mut ca = 0.0;
        let mut cb = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..self.densities.len() {
            let w = self.bin_edges[i + 1] - self.bin_edges[i];
            ca += self.densities[i] * w / ma.max(f64::MIN_POSITIVE);
            cb += other.densities[i] * w / mb.max(f64::MIN_POSITIVE);
            worst = worst.max((ca - cb).abs());
        }
        Ok(worst)
    }
}

/// Comparison of a spacing sample with the exponential law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonComparison {
    pub ks_distance: f64,
    pub small_s_fraction: f64,
    pub poisson_small_s_fraction: f64,
    pub sample_count: usize,
}

/// Kolmogorov-Smirnov distance to `1 - exp(-s)` and the fraction of
/// spacings below `1/4`.
pub fn poisson_compare(spacings: &[f64]) -> Result<PoissonComparison> {
    if spacings.len() < MIN_COMPARE_SAMPLE {
        return Err(Error::SampleTooSmall { got: spacings.len(), need: MIN_COMPARE_SAMPLE });
    }
    let mut s = spacings.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let ks = s.iter().enumerate().fold(0.0_f64, |acc, (i, &x)| {
        let f = 1.0 - (-x.max(0.0)).exp();
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    let small = s.iter().filter(|&&x| x < SMALL_S).count() as f64 / n;
    Ok(PoissonComparison {
        ks_distance: ks,
        small_s_fraction: small,
        poisson_small_s_fraction: POISSON_SMALL_S_FRACTION,
        sample_count: spacings.len(),
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::SampleTooSmall { got: a.len().min(b.len()), need: 1 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        worst = worst.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    Ok(worst)
}

/// Which variable the spacings are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpacingVariable {
    /// `Re E = (Re k)^2`, unfolded with the smooth counting function.
    #[default]
    Energy,
    /// Frequency, scaled by the cavity's mean frequency spacing.
    Frequency,
}

/// Parameters of an ensemble run. Defaults follow the measurement setup:
/// sides 0.20-0.50 m, 0.5 mm antenna radius, levels below 10 GHz, 7% of
/// levels dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_cavities: usize,
    pub c_range: (f64, f64),
    pub antenna_radius: f64,
    pub f_max_ghz: f64,
    pub missing_fraction: f64,
    pub master_seed: u64,
    pub bins: usize,
    pub s_max: f64,
    pub spacing_variable: SpacingVariable,
    pub condition: ResonanceCondition,
    /// Basis cutoff as a multiple of `k_max^2`.
    pub cutoff_factor: f64,
    /// Use bare eigenvalues and no antenna.
    pub decoupled: bool,
    pub search: SearchOptions,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n_cavities: 10,
            c_range: (0.20, 0.50),
            antenna_radius: 5e-4,
            f_max_ghz: 10.0,
            missing_fraction: 0.07,
            master_seed: 0,
            bins: 20,
            s_max: 4.0,
            spacing_variable: SpacingVariable::Energy,
            condition: ResonanceCondition::Rr1,
            cutoff_factor: crate::billiard::CUTOFF_SAFETY_FACTOR,
            decoupled: false,
            search: SearchOptions::default(),
            threads: 0,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        let (lo, hi) = self.c_range;
        if self.n_cavities == 0 {
            return bad("n_cavities must be at least 1".into());
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("side range [{lo}, {hi}] must be positive and ordered"));
        }
        if !(self.antenna_radius > 0.0) || 4.0 * self.antenna_radius >= lo {
            return bad(format!("antenna radius {} must be positive and well inside the cavity", self.antenna_radius));
        }
        if !(self.f_max_ghz > 0.0 && self.f_max_ghz.is_finite()) {
            return bad(format!("f_max {} GHz must be positive", self.f_max_ghz));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad(format!("missing fraction {} outside [0, 1)", self.missing_fraction));
        }
        if self.bins == 0 || !(self.s_max > 0.0) {
            return bad("histogram needs bins >= 1 and s_max > 0".into());
        }
        if !(self.cutoff_factor >= crate::billiard::CUTOFF_SAFETY_FACTOR) {
            return bad(format!("cutoff factor {} below {}", self.cutoff_factor, crate::billiard::CUTOFF_SAFETY_FACTOR));
        }
        if !(self.search.tol > 0.0) || self.search.max_iter == 0 {
            return bad("search tolerance and iteration limit must be positive".into());
        }
        Ok(())
    }

    pub fn k_max(&self) -> f64 {
        k_from_freq(self.f_max_ghz)
    }
}

/// `min |ratio - p/q|` over `q <= q_max`.
pub fn rational_distance(ratio: f64, q_max: u32) -> f64 {
    (1..=q_max)
        .map(|q| {
            let q = q as f64;
            (ratio - (ratio * q).round() / q).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Margin kept from rationals `p/q`, `q <= 10`, by the control draws.
pub const ASPECT_GUARD: f64 = 5e-4;

/// Geometry of one cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    pub rect: Rectangle<f64>,
    pub x0: Point<f64>,
}

/// Draws sides uniformly in `c_range` and `x0` uniformly in the interior,
/// at least `2a` from every wall. With `guard_aspect` the side ratio and
/// its square are kept [`ASPECT_GUARD`] away from rationals with
/// denominator up to 10.
pub fn draw_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    c_range: (f64, f64),
    a: f64,
    guard_aspect: bool,
) -> Result<CavityGeometry> {
    let side = |rng: &mut R| {
        if c_range.1 > c_range.0 {
            rng.random_range(c_range.0..c_range.1)
        } else {
            c_range.0
        }
    };
    for _ in 0..10_000 {
        let (c1, c2) = (side(rng), side(rng));
        if guard_aspect {
            let ratio = c2 / c1;
            if rational_distance(ratio, 10) < ASPECT_GUARD || rational_distance(ratio * ratio, 10) < ASPECT_GUARD {
                continue;
            }
        }
        let rect = Rectangle::new(c1, c2)?;
        for _ in 0..10_000 {
            let x0 = Point::new(rng.random::<f64>() * c1, rng.random::<f64>() * c2);
            if rect.contains_interior(&x0) && rect.wall_distance(&x0) >= 2.0 * a {
                return Ok(CavityGeometry { rect, x0 });
            }
        }
        return Err(Error::Invalid(format!("no admissible antenna point in {c1} x {c2} for a = {a}")));
    }
    Err(Error::Invalid("aspect-ratio guard rejected every draw".into()))
}

/// Nearest-neighbour spacings of the first `n_levels` Dirichlet eigenvalues
/// of `rect`, unfolded with the smooth counting function.
pub fn decoupled_spacings(rect: &Rectangle<f64>, n_levels: usize) -> Result<Vec<f64>> {
    if n_levels < 2 {
        return Ok(Vec::new());
    }
    let mut cutoff = 4.0 * std::f64::consts::PI * n_levels as f64 / rect.area();
    let modes = loop {
        let modes = enumerate_modes(rect, cutoff, crate::billiard::DEFAULT_MAX_MODES)?;
        if modes.len() > n_levels {
            break modes;
        }
        cutoff *= 1.25;
    };
    let energies: Vec<f64> = modes.iter().take(n_levels).map(|m| m.energy).collect();
    let levels = LevelSequence::new(energies, Provenance::Computed)?;
    Ok(nearest_spacings(&unfold(&levels, rect)))
}

/// Outcome of one cavity.
#[derive(Debug, Clone, PartialEq)]
pub enum CavityStatus {
    Ok,
    /// Finished, but some seeds produced no root.
    Partial { failed_seeds: usize },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityReport {
    pub cavity_id: usize,
    pub geometry: Option<CavityGeometry>,
    pub status: CavityStatus,
    pub levels: usize,
    pub removed: usize,
    pub spacings: usize,
}

/// A resonance together with the cavity it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResonance {
    pub cavity_id: usize,
    pub geometry: CavityGeometry,
    pub a: f64,
    pub resonance: Resonance<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub cavities: Vec<CavityReport>,
    pub pooled_mean_spacing: f64,
    pub poisson: Option<PoissonComparison>,
}

impl EnsembleReport {
    pub fn failed(&self) -> usize {
        self.cavities.iter().filter(|c| matches!(c.status, CavityStatus::Failed(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub resonances: Vec<CavityResonance>,
    /// `(cavity_id, s)` in cavity order.
    pub spacings: Vec<(usize, f64)>,
    pub histogram: SpacingHistogram,
    pub report: EnsembleReport,
}

struct CavityOutcome {
    report: CavityReport,
    resonances: Vec<CavityResonance>,
    spacings: Vec<f64>,
}

fn run_cavity(spec: &EnsembleSpec, id: usize) -> CavityOutcome {
    let mut rng = cavity_rng(spec.master_seed, id as u64);
    let failed = |geometry, reason: String| {
        warn!("cavity {id} skipped: {reason}");
        CavityOutcome {
            report: CavityReport {
                cavity_id: id,
                geometry,
                status: CavityStatus::Failed(reason),
                levels: 0,
                removed: 0,
                spacings: 0,
            },
            resonances: Vec::new(),
            spacings: Vec::new(),
        }
    };
    let geometry = match draw_geometry(&mut rng, spec.c_range, spec.antenna_radius, spec.decoupled) {
        Ok(g) => g,
        Err(e) => return failed(None, e.to_string()),
    };
    let k_max = spec.k_max();
    let mut status = CavityStatus::Ok;
    let mut resonances = Vec::new();
    let k_values: Vec<f64> = if spec.decoupled {
        match enumerate_modes(&geometry.rect, k_max * k_max * 1.0001 + 1.0, crate::billiard::DEFAULT_MAX_MODES) {
            Ok(modes) => modes.iter().map(|m| m.energy.sqrt()).filter(|&k| k <= k_max).collect(),
            Err(Error::Invalid(_)) => Vec::new(),
            Err(e) => return failed(Some(geometry), e.to_string()),
        }
    } else {
        let system = ResonatorSystem::for_band(geometry.rect, geometry.x0, spec.antenna_radius, k_max, spec.cutoff_factor)
            .map(|s| s.with_condition(spec.condition));
        let system = match system {
            Ok(s) => s,
            Err(e) => return failed(Some(geometry), e.to_string()),
        };
        match system.find_resonances((0.0, k_max), &spec.search) {
            Ok(found) => {
                if !found.failures.is_empty() {
                    status = CavityStatus::Partial { failed_seeds: found.failures.len() };
                }
                resonances = found
                    .resonances
                    .iter()
                    .map(|r| CavityResonance { cavity_id: id, geometry, a: spec.antenna_radius, resonance: *r })
                    .collect();
                found.resonances.iter().map(|r| r.k.re).collect()
            }
            Err(e) => return failed(Some(geometry), e.to_string()),
        }
    };

    let levels = match spec.spacing_variable {
        SpacingVariable::Energy => k_values.iter().map(|k| k * k).collect(),
        SpacingVariable::Frequency => k_values.iter().map(|&k| freq_from_k(k)).collect(),
    };
    let levels = match LevelSequence::new(levels, Provenance::Computed) {
        Ok(l) => l,
        Err(e) => return failed(Some(geometry), e.to_string()),
    };
    let unfolded = match spec.spacing_variable {
        SpacingVariable::Energy => unfold(&levels, &geometry.rect),
        SpacingVariable::Frequency => unfold_by_mean_spacing(&levels),
    };
    let thinned = match thin_random(&unfolded, spec.missing_fraction, &mut rng) {
        Ok(t) => t,
        Err(e) => return failed(Some(geometry), e.to_string()),
    };
    // restore unit mean spacing after dropping levels
    let scale = if unfolded.is_empty() { 1.0 } else { thinned.len() as f64 / unfolded.len() as f64 };
    let spacings: Vec<f64> = nearest_spacings(&thinned).into_iter().map(|s| s * scale).collect();
    info!("cavity {id}: {} levels, {} spacings", levels.len(), spacings.len());
    CavityOutcome {
        report: CavityReport {
            cavity_id: id,
            geometry: Some(geometry),
            status,
            levels: levels.len(),
            removed: unfolded.len() - thinned.len(),
            spacings: spacings.len(),
        },
        resonances,
        spacings,
    }
}

/// Runs every cavity of `spec`, pools the spacings and histograms them.
/// Cavity failures are reported, not fatal. Output is independent of the
/// thread count.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<CavityOutcome> =
        pool.install(|| (0..spec.n_cavities).into_par_iter().map(|id| run_cavity(spec, id)).collect());

    let mut resonances = Vec::new();
    let mut spacings = Vec::new();
    let mut cavities = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let id = outcome.report.cavity_id;
        spacings.extend(outcome.spacings.iter().map(|&s| (id, s)));
        resonances.extend(outcome.resonances);
        cavities.push(outcome.report);
    }
    let pooled: Vec<f64> = spacings.iter().map(|&(_, s)| s).collect();
    let histogram = SpacingHistogram::from_spacings(&pooled, spec.bins, spec.s_max)?;
    let pooled_mean_spacing =
        if pooled.is_empty() { f64::NAN } else { pooled.iter().sum::<f64>() / pooled.len() as f64 };
    let poisson = poisson_compare(&pooled).ok();
    Ok(EnsembleResult {
        resonances,
        spacings,
        histogram,
        report: EnsembleReport { cavities, pooled_mean_spacing, poisson },
    })
}

/// Mode label as `(n, m)`, or `None`.
pub fn seed_pair(mode: Option<ModeIndex>) -> Option<(u32, u32)> {
    mode.map(|m| (m.n(), m.m()))
}
