//! Janson-type lower-tail bounds for arbitrary monotone events on finite
//! product spaces, checked against an exhaustive enumeration oracle.

pub mod bounds;
pub mod dependency;
pub mod error;
pub mod generate;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod outcomes;
pub mod prob;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{CoordSet, UpSet};
pub use scalar::Scalar;

pub type ProductSpace = model::ProductSpace<f64>;
pub type EventFamily = model::EventFamily<f64>;
pub type ProbValue = prob::ProbValue<f64>;
pub type IndicatorLaw = outcomes::IndicatorLaw<f64>;
pub type Summary = bounds::Summary<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
pub type ExactDistribution = oracle::ExactDistribution<f64>;
