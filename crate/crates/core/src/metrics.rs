//! Quality measures of a partition: measure spread, distance from a Voronoi
//! diagram, and roundness of the cells.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::Evaluation;
use crate::geometry::{bisector_crossing, ConvexPolygon, GeneratorSet, PowerDiagram};

/// `max_i λ_{V_i} − min_i λ_{V_i}`; empty cells count as measure 0.
pub fn area_error(masses: &[f64]) -> f64 {
    let (lo, hi) = masses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    if masses.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Mean over neighboring pairs of the offset between where the pair's
/// bisector crosses the segment `g_i g_j` and the segment midpoint, relative
/// to half the segment length. Zero for a Voronoi diagram.
///
/// If the bisector misses the segment the crossing with the supporting line
/// is used, so a single term can exceed 1.
pub fn voronoi_defect(diagram: &PowerDiagram, gens: &GeneratorSet) -> f64 {
    let faces = diagram.faces();
    if faces.is_empty() {
        return 0.0;
    }
    let total: f64 = faces
        .iter()
        .map(|f| {
            let (gi, gj) = (gens.position(f.i), gens.position(f.j));
            let pow = bisector_crossing(gi, gens.weight(f.i), gj, gens.weight(f.j));
            let vor = gi.lerp(gj, 0.5);
            pow.distance(vor) / (0.5 * gi.distance(gj))
        })
        .sum();
    total / faces.len() as f64
}

/// `4π·area/perimeter²`; 1 for a disc. `None` for an empty polygon.
pub fn isoperimetric_ratio(poly: &ConvexPolygon) -> Option<f64> {
    if poly.is_empty() {
        return None;
    }
    let p = poly.perimeter();
    Some(4.0 * PI * poly.area() / (p * p))
}

/// Closed-form isoperimetric ratio of a regular `n`-gon.
pub fn regular_polygon_ratio(n: usize) -> f64 {
    let n = n as f64;
    PI / (n * (PI / n).tan())
}

/// Mean isoperimetric ratio over the nonempty cells, and how many cells were
/// skipped for being empty.
pub fn partition_q(diagram: &PowerDiagram) -> (f64, usize) {
    let qs: Vec<f64> = diagram.cells().iter().filter_map(isoperimetric_ratio).collect();
    let skipped = diagram.len() - qs.len();
    if qs.is_empty() {
        return (0.0, skipped);
    }
    (qs.iter().sum::<f64>() / qs.len() as f64, skipped)
}

/// Every reported quantity of one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionMetrics {
    pub area_error: f64,
    pub voronoi_defect: f64,
    pub q_mean: f64,
    pub hv: f64,
    pub cell_measures: Vec<f64>,
    /// `None` for empty cells.
    pub cell_q: Vec<Option<f64>>,
    pub empty_cells: usize,
}

impl PartitionMetrics {
    pub fn new(eval: &Evaluation, gens: &GeneratorSet) -> Self {
        let (q_mean, empty_cells) = partition_q(&eval.diagram);
        let hv = eval.masses.iter().map(|m| 1.0 / m).sum();
        Self {
            area_error: area_error(&eval.masses),
            voronoi_defect: voronoi_defect(&eval.diagram, gens),
            q_mean,
            hv,
            cell_measures: eval.masses.clone(),
            cell_q: eval.diagram.cells().iter().map(isoperimetric_ratio).collect(),
            empty_cells,
        }
    }

    pub fn min_cell_measure(&self) -> f64 {
        self.cell_measures.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_cell_measure(&self) -> f64 {
        self.cell_measures.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
