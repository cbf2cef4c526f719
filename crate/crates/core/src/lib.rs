//! Symmetry-aware object SLAM backend.
//!
//! Multi-hypothesis object detections are classified by symmetry type
//! (asymmetric / discrete / continuous), associated to persistent map
//! objects using only the pose parameters that symmetry leaves observable,
//! and jointly optimized with camera poses through per-type max-mixture
//! factor graph edges.
//!
//! The crate is generic over the scalar type (`f32` or `f64`) through the
//! [`scalar::Real`] trait; concrete aliases for the common case live at the
//! crate root.

pub mod association;
pub mod categorizer;
pub mod liegroup;
pub mod optimizer;
pub mod scalar;
pub mod sim;
pub mod testutil;

pub use scalar::Real;

pub type Rotation64 = liegroup::Rotation<f64>;
pub type AxisAngle64 = liegroup::AxisAngle<f64>;
pub type Pose64 = liegroup::Pose<f64>;
pub type SphericalAxis64 = liegroup::SphericalAxis<f64>;
pub type Scenario64 = sim::Scenario<f64>;
pub type HypothesisSet64 = sim::HypothesisSet<f64>;
pub type CategorizedDetection64 = categorizer::CategorizedDetection<f64>;
pub type ObjectMap64 = association::ObjectMap<f64>;
pub type GraphState64 = optimizer::GraphState<f64>;
pub type Edge64 = optimizer::Edge<f64>;

pub type Rotation32 = liegroup::Rotation<f32>;
pub type Pose32 = liegroup::Pose<f32>;
pub type Scenario32 = sim::Scenario<f32>;
