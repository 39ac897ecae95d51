//! Quantitative stability of optimal transport under general costs.
//!
//! The generic core (`sphere`, `cost`, `c_geometry`, `concavity`, `ot`) works over any
//! [`Scalar`] (f32 or f64). Applications, experiments and the CLI run in f64; the
//! aliases below name the f64 instantiations.

pub mod applications;
pub mod c_geometry;
pub mod cli;
pub mod concavity;
pub mod cost;
pub mod error;
pub mod hull;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod ot;
pub mod scalar;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type UnitVector = sphere::UnitVector<f64>;
pub type TangentVector = sphere::TangentVector<f64>;
pub type GroundSpace = sphere::GroundSpace<f64>;
pub type CostModel = cost::CostModel<f64>;
pub type ExtendedReal = cost::ExtendedReal<f64>;

pub type UnitVectorF32 = sphere::UnitVector<f32>;
pub type GroundSpaceF32 = sphere::GroundSpace<f32>;
pub type CostModelF32 = cost::CostModel<f32>;
pub type DiscreteMeasure = ot::DiscreteMeasure<f64>;
pub type TransportPlan = ot::TransportPlan<f64>;
pub type SolveResult = ot::SolveResult<f64>;
pub type Potential = concavity::Potential<f64>;
pub type DiscreteMeasureF32 = ot::DiscreteMeasure<f32>;
