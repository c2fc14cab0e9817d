//! Convex polygons and power diagrams in the plane.
//!
//! Cells are built by clipping the workspace against every pairwise dominance
//! half-plane. Each cell edge remembers which generator's bisector produced
//! it, which is how faces and neighbor sets are recovered without a separate
//! adjacency pass.

mod diagram;
mod point;
mod polygon;

pub use diagram::{
    bisector_crossing, power_bisector, power_diagram, Adjacency, Face, GeneratorSet, PowerDiagram,
    DISTINCT_EPS, MIN_FACE_LENGTH,
};
pub use point::Point;
pub use polygon::{closest_on_segment, signed_area, ConvexPolygon, EdgeTag, HalfPlane, VERTEX_EPS};
