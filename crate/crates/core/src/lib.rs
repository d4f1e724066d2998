//! Scattering model of a flat rectangular microwave cavity coupled to a thin
//! antenna through a point interaction.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the accuracy
//! contracts and the statistics pipeline use.

pub mod billiard;
pub mod coupling;
pub mod error;
pub mod resonance;
pub mod scalar;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Real, EULER_GAMMA};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Rectangle = billiard::Rectangle<f64>;
pub type Rectangle32 = billiard::Rectangle<f32>;
pub type Point = billiard::Point<f64>;
pub type GreenEvaluator = billiard::GreenEvaluator<f64>;
pub type GreenEvaluator32 = billiard::GreenEvaluator<f32>;
pub type Complex = num_complex::Complex<f64>;

pub use billiard::ModeIndex;
pub type CouplingParams = coupling::CouplingParams<f64>;
pub type AmplitudePair = coupling::AmplitudePair<f64>;
pub type ResonatorSystem = resonance::ResonatorSystem<f64>;
pub type ResonatorSystem32 = resonance::ResonatorSystem<f32>;
pub type Resonance = resonance::Resonance<f64>;
