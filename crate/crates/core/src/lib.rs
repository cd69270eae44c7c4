//! Continuous wavelet analysis on graded nilpotent Lie groups.
//!
//! Windows are synthesized from spectral multipliers of Rockland operators
//! and analysed through the quasi-regular representation of `N ⋊ R+`.

pub mod decay;
pub mod error;
pub mod field;
pub mod grid;
pub mod group;
pub mod quad;
pub mod rockland;
pub mod spectral;
pub mod wavelet;

pub use error::{Error, Result};
pub use field::{Resampling, SampledField};
pub use grid::GridSpec;
pub use group::{GPoint, GradedGroup, Weight};
pub use rockland::{Calculus, Multiplier, Profile, ProfileSpec, RocklandOperator, SynthesisPath};
pub use wavelet::{GGrid, ScaleGrid, WaveletCoefficients, WeightSpec, Window};
