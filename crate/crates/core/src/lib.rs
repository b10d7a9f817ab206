//! Point-group symmetry of polyhedral diagrams for algebraic graphic statics.
//!
//! The crate detects the edge symmetry of a diagram, turns it into linear
//! edge-length constraints stacked onto the closing equation, reports the
//! reduction in geometric degrees of freedom, and manipulates independent
//! edge lengths while keeping the symmetry.

pub mod closing;
pub mod diagram;
pub mod export;
pub mod fingerprint;
pub mod generate;
pub mod models;
pub mod pipeline;
pub mod point_group;
pub mod report;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
