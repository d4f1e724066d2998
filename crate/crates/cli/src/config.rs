//! JSON run configuration. Keys are snake_case with units in the name.

use std::path::Path;

use cavity_scatter::billiard::{Point, Rectangle, CUTOFF_SAFETY_FACTOR};
use cavity_scatter::resonance::{ResonanceCondition, SearchOptions};
use cavity_scatter::stats::{EnsembleSpec, SpacingVariable};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionName {
    Rr1,
    Eq18,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingName {
    Energy,
    Frequency,
}

/// Geometry for the single-cavity commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub c1_m: f64,
    pub c2_m: f64,
    pub x0_m: [f64; 2],
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self { c1_m: 0.3, c2_m: 0.2, x0_m: [0.11, 0.07] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub n_cavities: usize,
    pub side_range_m: [f64; 2],
    pub antenna_radius_m: f64,
    #[serde(rename = "f_max_GHz")]
    pub f_max_ghz: f64,
    pub missing_fraction: f64,
    pub master_seed: u64,
    pub bins: usize,
    pub s_max: f64,
    pub spacing_variable: SpacingName,
    pub resonance_condition: ConditionName,
    pub cutoff_factor: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative to the band's largest wavenumber.
    pub dedup_radius_rel: f64,
    pub decoupled: bool,
    pub cavity: CavityConfig,
}

impl Default for Config {
    fn default() -> Self {
        let spec = EnsembleSpec::default();
        let search = SearchOptions::default();
        Self {
            n_cavities: spec.n_cavities,
            side_range_m: [spec.c_range.0, spec.c_range.1],
            antenna_radius_m: spec.antenna_radius,
            f_max_ghz: spec.f_max_ghz,
            missing_fraction: spec.missing_fraction,
            master_seed: spec.master_seed,
            bins: spec.bins,
            s_max: spec.s_max,
            spacing_variable: SpacingName::Energy,
            resonance_condition: ConditionName::Rr1,
            cutoff_factor: spec.cutoff_factor,
            newton_tol: search.tol,
            newton_max_iter: search.max_iter,
            dedup_radius_rel: 1e-6,
            decoupled: false,
            cavity: CavityConfig::default(),
        }
    }
}

fn check(ok: bool, key: &str, message: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, message()))
    }
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path.is_empty() { ".".into() } else { path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let [lo, hi] = self.side_range_m;
        check(self.n_cavities >= 1, "n_cavities", || "must be at least 1".into())?;
        check(lo > 0.0 && hi >= lo && hi.is_finite(), "side_range_m", || {
            format!("[{lo}, {hi}] must be positive and ordered")
        })?;
        check(self.antenna_radius_m > 0.0 && self.antenna_radius_m.is_finite(), "antenna_radius_m", || {
            format!("{} must be positive", self.antenna_radius_m)
        })?;
        check(4.0 * self.antenna_radius_m < lo.min(self.cavity.c1_m).min(self.cavity.c2_m), "antenna_radius_m", || {
            format!("{} too large for the cavity sides", self.antenna_radius_m)
        })?;
        check(self.f_max_ghz > 0.0 && self.f_max_ghz.is_finite(), "f_max_GHz", || {
            format!("{} must be positive", self.f_max_ghz)
        })?;
        check((0.0..1.0).contains(&self.missing_fraction), "missing_fraction", || {
            format!("{} must lie in [0, 1)", self.missing_fraction)
        })?;
        check(self.bins >= 1, "bins", || "must be at least 1".into())?;
        check(self.s_max > 0.0 && self.s_max.is_finite(), "s_max", || format!("{} must be positive", self.s_max))?;
        check(self.cutoff_factor >= CUTOFF_SAFETY_FACTOR, "cutoff_factor", || {
            format!("{} below the minimum {CUTOFF_SAFETY_FACTOR}", self.cutoff_factor)
        })?;
        check(self.newton_tol > 0.0 && self.newton_tol.is_finite(), "newton_tol", || {
            format!("{} must be positive", self.newton_tol)
        })?;
        check(self.newton_max_iter >= 1, "newton_max_iter", || "must be at least 1".into())?;
        check(self.dedup_radius_rel >= 0.0 && self.dedup_radius_rel.is_finite(), "dedup_radius_rel", || {
            format!("{} must be non-negative", self.dedup_radius_rel)
        })?;
        let c = &self.cavity;
        check(c.c1_m > 0.0 && c.c1_m.is_finite(), "cavity.c1_m", || format!("{} must be positive", c.c1_m))?;
        check(c.c2_m > 0.0 && c.c2_m.is_finite(), "cavity.c2_m", || format!("{} must be positive", c.c2_m))?;
        let [x, y] = c.x0_m;
        check(x > 0.0 && x < c.c1_m && y > 0.0 && y < c.c2_m, "cavity.x0_m", || {
            format!("({x}, {y}) is not inside the {} x {} rectangle", c.c1_m, c.c2_m)
        })?;
        Ok(())
    }

    pub fn condition(&self) -> ResonanceCondition {
        match self.resonance_condition {
            ConditionName::Rr1 => ResonanceCondition::Rr1,
            ConditionName::Eq18 => ResonanceCondition::Eq18,
        }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions { tol: self.newton_tol, max_iter: self.newton_max_iter, dedup_radius: Some(self.dedup_radius_rel) }
    }

    pub fn rect(&self) -> CliResult<Rectangle<f64>> {
        Ok(Rectangle::new(self.cavity.c1_m, self.cavity.c2_m)?)
    }

    pub fn x0(&self) -> Point<f64> {
        Point::new(self.cavity.x0_m[0], self.cavity.x0_m[1])
    }

    pub fn ensemble_spec(&self, threads: usize) -> EnsembleSpec {
        EnsembleSpec {
            n_cavities: self.n_cavities,
            c_range: (self.side_range_m[0], self.side_range_m[1]),
            antenna_radius: self.antenna_radius_m,
            f_max_ghz: self.f_max_ghz,
            missing_fraction: self.missing_fraction,
            master_seed: self.master_seed,
            bins: self.bins,
            s_max: self.s_max,
            spacing_variable: match self.spacing_variable {
                SpacingName::Energy => SpacingVariable::Energy,
                SpacingName::Frequency => SpacingVariable::Frequency,
            },
            condition: self.condition(),
            cutoff_factor: self.cutoff_factor,
            decoupled: self.decoupled,
            search: self.search(),
            threads,
        }
    }
}
