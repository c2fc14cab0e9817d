use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, EdgeTag, HalfPlane, Point};
use crate::error::{Error, Result};

/// Minimum separation for two generator positions to count as distinct.
pub const DISTINCT_EPS: f64 = 1e-9;
/// Shared edges shorter than this do not make two cells neighbors.
pub const MIN_FACE_LENGTH: f64 = 1e-10;

/// Ordered power generators: positions `g_i` and weights `w_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGenerators")]
pub struct GeneratorSet {
    positions: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGenerators {
    positions: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawGenerators> for GeneratorSet {
    type Error = Error;
    fn try_from(r: RawGenerators) -> Result<Self> {
        GeneratorSet::new(r.positions, r.weights)
    }
}

impl GeneratorSet {
    pub fn new(positions: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParams("need at least one generator".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::InvalidParams(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParams("non-finite generator data".into()));
        }
        if let Some((i, j)) = closest_pair_below(&positions, DISTINCT_EPS) {
            return Err(Error::CoincidentGenerators(i, j));
        }
        Ok(Self { positions, weights })
    }

    /// Generators with all weights zero (an ordinary Voronoi configuration).
    pub fn unweighted(positions: Vec<Point>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, vec![0.0; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn position(&self, i: usize) -> Point {
        self.positions[i]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Same positions, different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.positions.clone(), weights)
    }

    /// Adds `t` to every weight.
    pub fn shifted(&self, t: f64) -> Self {
        Self {
            positions: self.positions.clone(),
            weights: self.weights.iter().map(|w| w + t).collect(),
        }
    }

    /// Checks that every position lies in `region`.
    pub fn check_within(&self, region: &ConvexPolygon) -> Result<()> {
        match self.positions.iter().position(|p| !region.contains(*p)) {
            Some(i) => Err(Error::InvalidParams(format!(
                "generator {i} at {:?} lies outside the region",
                self.positions[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn min_separation(&self) -> f64 {
        let p = &self.positions;
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min(p[i].distance(p[j]));
            }
        }
        best
    }
}

fn closest_pair_below(p: &[Point], eps: f64) -> Option<(usize, usize)> {
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i].distance(p[j]) <= eps {
                return Some((i, j));
            }
        }
    }
    None
}

/// Dominance half-plane of `(gi, wi)` over `(gj, wj)`:
/// `(gj − gi)·x <= ½(|gj|² − |gi|² + wi − wj)`.
pub fn power_bisector(gi: Point, wi: f64, gj: Point, wj: f64) -> Result<HalfPlane> {
    let d = gj - gi;
    if d.norm() <= DISTINCT_EPS {
        return Err(Error::CoincidentGenerators(0, 1));
    }
    // Only the weight difference enters, so a common shift cancels exactly.
    let c = 0.5 * (gj.norm_sq() - gi.norm_sq() + (wi - wj));
    HalfPlane::new(d, c)
}

/// Point where the bisector of two power generators crosses the line through
/// their positions.
pub fn bisector_crossing(gi: Point, wi: f64, gj: Point, wj: f64) -> Point {
    let d = gj - gi;
    let s = 0.5 + (wi - wj) / (2.0 * d.norm_sq());
    gi + d * s
}

/// The segment shared by two adjacent cells, stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub i: usize,
    pub j: usize,
    pub a: Point,
    pub b: Point,
}

impl Face {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// An entry of a generator's neighbor list: the neighbor and the index of the
/// shared face in [`PowerDiagram::faces`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacency {
    pub neighbor: usize,
    pub face: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDiagram {
    cells: Vec<ConvexPolygon>,
    faces: Vec<Face>,
    adjacency: Vec<Vec<Adjacency>>,
}

impl PowerDiagram {
    pub fn cells(&self) -> &[ConvexPolygon] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &ConvexPolygon {
        &self.cells[i]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn adjacency(&self, i: usize) -> &[Adjacency] {
        &self.adjacency[i]
    }

    /// Sorted neighbor indices `N_i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.adjacency[i].iter().map(|a| a.neighbor).collect()
    }

    pub fn face_between(&self, i: usize, j: usize) -> Option<&Face> {
        self.adjacency[i]
            .iter()
            .find(|a| a.neighbor == j)
            .map(|a| &self.faces[a.face])
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of a generator minimizing the power distance at `x`.
    pub fn locate(gens: &GeneratorSet, x: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, (g, w)) in gens.positions().iter().zip(gens.weights()).enumerate() {
            let d = (x - *g).norm_sq() - w;
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// Power diagram of `region` by clipping the region against every pairwise
/// dominance half-plane (O(m²) clips).
pub fn power_diagram(region: &ConvexPolygon, gens: &GeneratorSet) -> Result<PowerDiagram> {
    let m = gens.len();
    let g = gens.positions();
    let w = gens.weights();
    let mut cells = Vec::with_capacity(m);
    for i in 0..m {
        let mut cell = region.clone();
        for j in 0..m {
            if j == i {
                continue;
            }
            let h = power_bisector(g[i], w[i], g[j], w[j])
                .map_err(|_| Error::CoincidentGenerators(i.min(j), i.max(j)))?;
            cell = cell.clip_tagged(&h, EdgeTag::Generator(j));
            if cell.is_empty() {
                break;
            }
        }
        cells.push(cell);
    }

    let mut faces = Vec::new();
    let mut adjacency = vec![Vec::new(); m];
    for (i, cell) in cells.iter().enumerate() {
        for (a, b, tag) in cell.edges() {
            if let EdgeTag::Generator(j) = tag {
                if j > i && a.distance(b) > MIN_FACE_LENGTH {
                    let face = faces.len();
                    faces.push(Face { i, j, a, b });
                    adjacency[i].push(Adjacency { neighbor: j, face });
                    adjacency[j].push(Adjacency { neighbor: i, face });
                }
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_by_key(|a| a.neighbor);
    }
    Ok(PowerDiagram {
        cells,
        faces,
        adjacency,
    })
}
