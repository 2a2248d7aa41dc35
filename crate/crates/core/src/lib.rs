//! Numerical laboratory for rearrangement-based function-space inequalities.
//!
//! The crate evaluates decreasing rearrangements, Lorentz quasinorms and the
//! heat-semigroup (thermic) Besov and Triebel-Lizorkin quasinorms of
//! Gaussian-mixture test functions, implements constructive auxiliary lemmas
//! with their explicit constants, and measures Gagliardo-Nirenberg type
//! ratios over function families, index grids and dilations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod funcspace;
pub mod heat;
pub mod lemma_kit;
pub mod lorentz;
pub mod quad;
pub mod rearrange;
pub mod smoothnorms;
pub mod verifier;

mod exponent;
mod numeric;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use funcspace::{AnalyticFunction, GaussianTerm, GridSpec, MultiIndex, SampledField};
pub use heat::HeatScale;
pub use lorentz::LorentzIndex;
pub use rearrange::{AveragedProfile, StepProfile};
