//! Numerical certification of uniform expansion and hyperbolicity for maps of
//! the circle and the two-torus, starting from data on periodic orbits.

pub mod certifier;
pub mod cocycle;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod periodic;
pub mod scalar;
pub mod shadowing;
pub mod splitting;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point = maps::StatePoint<f64>;
pub type Model = maps::MapModel<f64>;
pub type Orbit = periodic::PeriodicOrbit<f64>;
pub type Segment = maps::OrbitSegment<f64>;
pub type Sequence = cocycle::CocycleSequence<f64>;
pub type Field = splitting::SplittingField<f64>;
pub type Conjugacy = shadowing::ConjugacyModel<f64>;

pub type Point32 = maps::StatePoint<f32>;
pub type Model32 = maps::MapModel<f32>;
pub type Orbit32 = periodic::PeriodicOrbit<f32>;
pub type Sequence32 = cocycle::CocycleSequence<f32>;
