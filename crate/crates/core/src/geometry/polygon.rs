use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Consecutive vertices closer than this are merged.
pub const VERTEX_EPS: f64 = 1e-12;
/// Points within this signed distance of a clipping line count as inside.
const CLIP_EPS: f64 = 1e-13;

/// Origin of a polygon edge: the original region boundary, or the bisector
/// shared with another generator's cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Boundary,
    Generator(usize),
}

/// Closed half-plane `{x : n·x <= c}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    normal: Point,
    offset: f64,
}

impl HalfPlane {
    /// Builds `{x : n·x <= c}`, rescaling so that the normal has unit length.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite() && offset.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "half-plane needs a finite nonzero normal, got {normal:?}, offset {offset}"
            )));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    #[inline]
    pub fn normal(&self) -> Point {
        self.normal
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Positive outside, negative inside.
    #[inline]
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) <= 1e-12
    }

    /// Closest point on the boundary line to `p`.
    pub fn foot(&self, p: Point) -> Point {
        p - self.normal * self.signed_distance(p)
    }
}

/// A convex polygon stored as counter-clockwise vertices. The polygon with no
/// vertices is the empty set.
///
/// Every edge carries an [`EdgeTag`]; edge `k` runs from vertex `k` to vertex
/// `k + 1` (cyclically).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    tags: Vec<EdgeTag>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates and normalizes a vertex list. Clockwise input is reversed;
    /// repeated and collinear vertices are dropped.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Ok(Self::empty());
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon(format!("non-finite vertex {p:?}")));
        }
        let mut vertices = vertices;
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let tags = vec![EdgeTag::Boundary; vertices.len()];
        let poly = normalized(vertices, tags);
        if poly.is_empty() {
            return Err(Error::InvalidPolygon(
                "fewer than three distinct non-collinear vertices".into(),
            ));
        }
        let n = poly.vertices.len();
        for k in 0..n {
            let a = poly.vertices[k];
            let b = poly.vertices[(k + 1) % n];
            let c = poly.vertices[(k + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            if e1.cross(e2) < -1e-12 * e1.norm() * e2.norm() {
                return Err(Error::InvalidPolygon(format!("reflex vertex at {b:?}")));
            }
        }
        // Winding twice around would pass the local test; compare turning to 2π.
        let turning: f64 = (0..n)
            .map(|k| {
                let e1 = poly.vertices[(k + 1) % n] - poly.vertices[k];
                let e2 = poly.vertices[(k + 2) % n] - poly.vertices[(k + 1) % n];
                e1.cross(e2).atan2(e1.dot(e2))
            })
            .sum();
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidPolygon("self-intersecting vertex list".into()));
        }
        Ok(poly)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    /// Axis-aligned rectangle with opposite corners `lo` and `hi`.
    pub fn rectangle(lo: Point, hi: Point) -> Self {
        Self::new(vec![
            Point::new(lo.x, lo.y),
            Point::new(hi.x, lo.y),
            Point::new(hi.x, hi.y),
            Point::new(lo.x, hi.y),
        ])
        .expect("rectangle with distinct corners")
    }

    /// Regular `n`-gon with the given circumradius; the first vertex sits at
    /// angle `phase`.
    pub fn regular(n: usize, center: Point, circumradius: f64, phase: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("regular polygon needs n >= 3, got {n}")));
        }
        let verts = (0..n)
            .map(|k| center + Point::from_angle(phase + 2.0 * PI * k as f64 / n as f64) * circumradius)
            .collect();
        Self::new(verts)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    #[inline]
    pub fn tags(&self) -> &[EdgeTag] {
        &self.tags
    }

    /// Edges as `(start, end, tag)`.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, EdgeTag)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n], self.tags[k]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).max(0.0)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b, _)| a.distance(b)).sum()
    }

    /// Largest distance between two vertices, which for a convex polygon is
    /// its diameter.
    pub fn diameter(&self) -> f64 {
        self.diameter_pair().map_or(0.0, |(a, b)| a.distance(b))
    }

    /// A pair of vertices realizing the diameter.
    pub fn diameter_pair(&self) -> Option<(Point, Point)> {
        let v = &self.vertices;
        let mut best: Option<(f64, Point, Point)> = None;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let d = v[i].distance(v[j]);
                if best.is_none_or(|(bd, _, _)| d > bd) {
                    best = Some((d, v[i], v[j]));
                }
            }
        }
        match (best, v.first()) {
            (Some((_, a, b)), _) => Some((a, b)),
            (None, Some(&p)) => Some((p, p)),
            (None, None) => None,
        }
    }

    /// Area centroid, `None` for the empty polygon.
    pub fn centroid(&self) -> Option<Point> {
        let n = self.vertices.len();
        if n == 0 {
            return None;
        }
        let origin = self.vertices[0];
        let mut a2 = 0.0;
        let mut acc = Point::ZERO;
        for k in 1..n.saturating_sub(1) {
            let p = self.vertices[k] - origin;
            let q = self.vertices[k + 1] - origin;
            let c = p.cross(q);
            a2 += c;
            acc += (p + q) * c;
        }
        if a2 <= 0.0 {
            return None;
        }
        Some(origin + acc / (3.0 * a2))
    }

    /// Closed-set membership with a small tolerance.
    pub fn contains(&self, p: Point) -> bool {
        if self.is_empty() {
            return false;
        }
        self.edges().all(|(a, b, _)| {
            let e = b - a;
            e.cross(p - a) >= -1e-12 * e.norm()
        })
    }

    /// Distance from `p` to the nearest boundary point.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b, _)| p.distance(closest_on_segment(a, b, p)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest point of the polygon to `p` (identity for interior points).
    pub fn project(&self, p: Point) -> Point {
        if self.is_empty() || self.contains(p) {
            return p;
        }
        let mut best = (f64::INFINITY, p);
        for (a, b, _) in self.edges() {
            let q = closest_on_segment(a, b, p);
            let d = p.distance(q);
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    /// Range of `dir · x` over the polygon.
    pub fn extent(&self, dir: Point) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| dir.dot(*v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// `self ∩ h`; new edges along the clipping line are tagged `Boundary`.
    pub fn clip(&self, h: &HalfPlane) -> ConvexPolygon {
        self.clip_tagged(h, EdgeTag::Boundary)
    }

    /// `self ∩ h`, tagging any new edge on the clipping line with `tag`.
    pub fn clip_tagged(&self, h: &HalfPlane, tag: EdgeTag) -> ConvexPolygon {
        let n = self.vertices.len();
        if n == 0 {
            return Self::empty();
        }
        let mut d = [0.0f64; 32];
        let mut dist_heap;
        let dist: &mut [f64] = if n <= d.len() {
            &mut d[..n]
        } else {
            dist_heap = vec![0.0; n];
            &mut dist_heap
        };
        let mut any_out = false;
        let mut any_in = false;
        for (k, v) in self.vertices.iter().enumerate() {
            let s = h.signed_distance(*v);
            dist[k] = s;
            if s > CLIP_EPS {
                any_out = true;
            } else {
                any_in = true;
            }
        }
        if !any_out {
            return self.clone();
        }
        if !any_in {
            return Self::empty();
        }

        let mut verts = Vec::with_capacity(n + 1);
        let mut tags = Vec::with_capacity(n + 1);
        for k in 0..n {
            let next = (k + 1) % n;
            let (p, q) = (self.vertices[k], self.vertices[next]);
            let (dp, dq) = (dist[k], dist[next]);
            let p_in = dp <= CLIP_EPS;
            let q_in = dq <= CLIP_EPS;
            match (p_in, q_in) {
                (true, true) => {
                    verts.push(p);
                    tags.push(self.tags[k]);
                }
                (true, false) => {
                    verts.push(p);
                    tags.push(self.tags[k]);
                    let t = (dp / (dp - dq)).clamp(0.0, 1.0);
                    verts.push(p.lerp(q, t));
                    tags.push(tag);
                }
                (false, true) => {
                    let t = (dp / (dp - dq)).clamp(0.0, 1.0);
                    verts.push(p.lerp(q, t));
                    tags.push(self.tags[k]);
                }
                (false, false) => {}
            }
        }
        normalized(verts, tags)
    }
}

/// Shoelace signed area (positive for counter-clockwise order).
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let origin = vertices[0];
    let mut a2 = 0.0;
    for k in 1..n - 1 {
        a2 += (vertices[k] - origin).cross(vertices[k + 1] - origin);
    }
    0.5 * a2
}

pub fn closest_on_segment(a: Point, b: Point, p: Point) -> Point {
    let e = b - a;
    let len2 = e.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(e) / len2).clamp(0.0, 1.0);
    a + e * t
}

/// Drops near-duplicate and collinear vertices; fewer than three survivors or
/// a non-positive area give the empty polygon.
fn normalized(mut verts: Vec<Point>, mut tags: Vec<EdgeTag>) -> ConvexPolygon {
    loop {
        let n = verts.len();
        if n < 3 {
            return ConvexPolygon::empty();
        }
        // Remove the start of any vanishing edge; the previous edge absorbs it.
        if let Some(k) = (0..n).find(|&k| verts[k].distance(verts[(k + 1) % n]) <= VERTEX_EPS) {
            verts.remove(k);
            tags.remove(k);
            continue;
        }
        let collinear = (0..n).find(|&k| {
            let prev = verts[(k + n - 1) % n];
            let next = verts[(k + 1) % n];
            let e1 = verts[k] - prev;
            let e2 = next - verts[k];
            e1.cross(e2).abs() <= 1e-14 * e1.norm() * e2.norm() && e1.dot(e2) > 0.0
        });
        if let Some(k) = collinear {
            verts.remove(k);
            tags.remove(k);
            continue;
        }
        break;
    }
    if signed_area(&verts) <= 0.0 {
        return ConvexPolygon::empty();
    }
    ConvexPolygon { vertices: verts, tags }
}
