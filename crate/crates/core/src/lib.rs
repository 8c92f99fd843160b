//! Hausdorff dimension of continued-fraction sets defined by growth
//! conditions on partial quotients.

pub mod cf;
pub mod construct;
pub mod dd;
pub mod dimension;
pub mod error;
pub mod logscalar;
pub mod rate;
pub mod stochastic;
pub mod weights;

pub use cf::{
    convergents_of, cylinder_of, expand_certified, legendre_check, parse_rational, value_of,
    verify_classical_bounds, ClassicalBoundsReport, Convergents, Cylinder, DepthBounds, DigitMode,
    DigitSequence, LegendreHit, Rational,
};
pub use dd::DoubleDouble;
pub use error::{Error, Result};
pub use logscalar::LogScalar;
pub use rate::{
    predicted_dimensions, GrowthExponents, LimitExponents, PredictedDimensions, RateFunction,
    RateKind,
};
pub use weights::WeightVector;
