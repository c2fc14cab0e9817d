//! Equitable convex partitions of a planar region among `m` agents.
//!
//! Each agent owns one cell of a power diagram. Distributed gradient laws on
//! the generator weights and positions drive every cell toward the same
//! measure, and optionally toward a Voronoi partition with compact cells.
//! The crate also carries non-distributed baselines, partition metrics, and
//! a seeded simulation harness.

pub mod baselines;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod sim;

pub use density::{DensityField, Quadrature};
pub use dynamics::{Law, LawParams, ParamOverrides, Scheme, State, Stepper, System};
pub use error::{Error, Result};
pub use geometry::{power_diagram, ConvexPolygon, GeneratorSet, HalfPlane, Point, PowerDiagram};
pub use metrics::PartitionMetrics;
pub use sim::{BatchSummary, MetricsRow, RunOutcome, RunRecord, SimConfig, Snapshot};
