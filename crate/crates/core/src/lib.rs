//! Certified arithmetic for Birkhoff sums of irrational circle rotations:
//! exact continued fractions and Ostrowski numeration, rotation functions
//! with rational discontinuities or logarithmic singularities, exact and
//! enclosure-based Birkhoff evaluators, and Monte-Carlo density experiments.

pub mod certified;
pub mod cf;
pub mod dyadic;
pub mod error;

pub use certified::{AlphaLinear, CertifiedValue};
pub use cf::{
    certified_frac, construct_alpha, convergents, expand_cf, ostrowski_expand, ostrowski_value,
    sample_alpha, CongruenceTarget, ConstructedAlpha, ContinuedFraction, ConvergentTable,
    OstrowskiExpansion, Parity, Tail,
};
pub use dyadic::{DyInterval, Dyadic, Rat};
pub use error::{CoreError, PrecisionPolicy, Result};
