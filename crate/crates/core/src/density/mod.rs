//! Density fields over the workspace and integrals of the density (and its
//! first moment) over polygons and segments.
//!
//! Uniform densities are integrated in closed form and grid densities by
//! clipping against the grid cells, so both are exact. Gaussian densities use
//! a fan triangulation from vertex 0, uniform subdivision of each triangle
//! down to [`QuadratureSpec::max_edge`], and a fixed symmetric triangle rule.

mod quadrature;

use serde::{Deserialize, Serialize};

pub use quadrature::{gauss_legendre_unit, Quadrature, QuadratureSpec, TrianglePoint};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, HalfPlane, Point};

/// Regions lighter than this have no meaningful centroid.
pub const ZERO_MASS_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DensityField {
    Uniform {
        value: f64,
    },
    /// `amplitude · exp(−rate · |x − center|²)`.
    Gaussian {
        center: Point,
        rate: f64,
        amplitude: f64,
    },
    Grid(GridDensity),
}

/// Piecewise-constant density on an axis-aligned grid; zero outside it.
/// `values[row][col]` covers `[origin.x + col·hx, +hx] × [origin.y + row·hy, +hy]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub origin: Point,
    pub cell_size: Point,
    pub values: Vec<Vec<f64>>,
}

impl DensityField {
    pub fn uniform(value: f64) -> Self {
        DensityField::Uniform { value }
    }

    /// `exp(−5((x − 0.8)² + (y − 0.8)²))`, peaked near the north-east corner
    /// of the unit square.
    pub fn corner_gaussian() -> Self {
        DensityField::Gaussian {
            center: Point::new(0.8, 0.8),
            rate: 5.0,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match self {
            DensityField::Uniform { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("uniform density must be >= 0, got {value}"));
                }
            }
            DensityField::Gaussian {
                center,
                rate,
                amplitude,
            } => {
                if !center.is_finite() || !(*rate > 0.0) || !(*amplitude > 0.0) {
                    return bad("gaussian density needs rate > 0 and amplitude > 0".into());
                }
                if !rate.is_finite() || !amplitude.is_finite() {
                    return bad("gaussian parameters must be finite".into());
                }
            }
            DensityField::Grid(g) => {
                if !(g.cell_size.x > 0.0 && g.cell_size.y > 0.0) || !g.origin.is_finite() {
                    return bad("grid cell sizes must be positive".into());
                }
                let cols = g.values.first().map_or(0, Vec::len);
                if cols == 0 || g.values.iter().any(|r| r.len() != cols) {
                    return bad("grid values must be a non-empty rectangular matrix".into());
                }
                if g.values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("grid values must be finite and >= 0".into());
                }
            }
        }
        Ok(())
    }

    /// Density at `x`.
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            DensityField::Uniform { value } => *value,
            DensityField::Gaussian {
                center,
                rate,
                amplitude,
            } => amplitude * (-rate * (x - *center).norm_sq()).exp(),
            DensityField::Grid(g) => g.eval(x),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, DensityField::Uniform { .. })
    }
}

impl GridDensity {
    fn rows(&self) -> usize {
        self.values.len()
    }

    fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    fn cell_index(&self, x: Point) -> Option<(usize, usize)> {
        let c = ((x.x - self.origin.x) / self.cell_size.x).floor();
        let r = ((x.y - self.origin.y) / self.cell_size.y).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < self.rows() && c < self.cols()).then_some((r, c))
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.cell_index(x).map_or(0.0, |(r, c)| self.values[r][c])
    }

    fn cell_rect(&self, r: usize, c: usize) -> [HalfPlane; 4] {
        let x0 = self.origin.x + c as f64 * self.cell_size.x;
        let y0 = self.origin.y + r as f64 * self.cell_size.y;
        let x1 = x0 + self.cell_size.x;
        let y1 = y0 + self.cell_size.y;
        [
            HalfPlane::new(Point::new(1.0, 0.0), x1).unwrap(),
            HalfPlane::new(Point::new(-1.0, 0.0), -x0).unwrap(),
            HalfPlane::new(Point::new(0.0, 1.0), y1).unwrap(),
            HalfPlane::new(Point::new(0.0, -1.0), -y0).unwrap(),
        ]
    }

    fn index_range(lo: f64, hi: f64, origin: f64, h: f64, n: usize) -> std::ops::Range<usize> {
        let a = ((lo - origin) / h).floor().max(0.0) as usize;
        let b = (((hi - origin) / h).ceil().max(0.0) as usize).min(n);
        a.min(b)..b
    }

    fn moments(&self, poly: &ConvexPolygon) -> (f64, Point) {
        let (xlo, xhi) = poly.extent(Point::new(1.0, 0.0));
        let (ylo, yhi) = poly.extent(Point::new(0.0, 1.0));
        let cols = Self::index_range(xlo, xhi, self.origin.x, self.cell_size.x, self.cols());
        let rows = Self::index_range(ylo, yhi, self.origin.y, self.cell_size.y, self.rows());
        let mut mass = 0.0;
        let mut first = Point::ZERO;
        for r in rows {
            for c in cols.clone() {
                let v = self.values[r][c];
                if v == 0.0 {
                    continue;
                }
                let piece = self
                    .cell_rect(r, c)
                    .iter()
                    .fold(poly.clone(), |acc, h| acc.clip(h));
                if let Some(ctr) = piece.centroid() {
                    let a = piece.area();
                    mass += v * a;
                    first += ctr * (v * a);
                }
            }
        }
        (mass, first)
    }

    fn segment_moments(&self, a: Point, b: Point) -> (f64, Point) {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return (0.0, Point::ZERO);
        }
        let mut ts = vec![0.0, 1.0];
        let mut crossings = |start: f64, delta: f64, origin: f64, h: f64, n: usize| {
            if delta == 0.0 {
                return;
            }
            for k in 0..=n {
                let t = (origin + k as f64 * h - start) / delta;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        };
        crossings(a.x, d.x, self.origin.x, self.cell_size.x, self.cols());
        crossings(a.y, d.y, self.origin.y, self.cell_size.y, self.rows());
        ts.sort_by(f64::total_cmp);
        let mut mass = 0.0;
        let mut first = Point::ZERO;
        for w in ts.windows(2) {
            let piece = (w[1] - w[0]) * len;
            if piece <= 0.0 {
                continue;
            }
            let mid = a.lerp(b, 0.5 * (w[0] + w[1]));
            let v = self.eval(mid);
            mass += v * piece;
            first += mid * (v * piece);
        }
        (mass, first)
    }
}

/// `(∫_P λ, ∫_P x λ)` over a convex polygon.
pub fn region_moments(poly: &ConvexPolygon, density: &DensityField, q: &Quadrature) -> (f64, Point) {
    if poly.is_empty() {
        return (0.0, Point::ZERO);
    }
    match density {
        DensityField::Uniform { value } => {
            let a = poly.area();
            let c = poly.centroid().unwrap_or(Point::ZERO);
            (value * a, c * (value * a))
        }
        DensityField::Grid(g) => g.moments(poly),
        DensityField::Gaussian { .. } => {
            let v = poly.vertices();
            let mut mass = 0.0;
            let mut first = Point::ZERO;
            for k in 1..v.len() - 1 {
                let (m, f) = triangle_moments(v[0], v[k], v[k + 1], density, q);
                mass += m;
                first += f;
            }
            (mass, first)
        }
    }
}

fn triangle_moments(a: Point, b: Point, c: Point, density: &DensityField, q: &Quadrature) -> (f64, Point) {
    let longest = a.distance(b).max(b.distance(c)).max(c.distance(a));
    let k = ((longest / q.spec().max_edge).ceil() as usize).max(1);
    let e1 = (b - a) / k as f64;
    let e2 = (c - a) / k as f64;
    let sub_area = 0.5 * e1.cross(e2).abs();
    let rule = q.triangle_rule();
    let mut mass = 0.0;
    let mut first = Point::ZERO;
    let mut accumulate = |p0: Point, p1: Point, p2: Point| {
        let mut m = 0.0;
        let mut f = Point::ZERO;
        for tp in rule {
            let x = p0 * tp.bary[0] + p1 * tp.bary[1] + p2 * tp.bary[2];
            let val = tp.weight * density.eval(x);
            m += val;
            f += x * val;
        }
        mass += m * sub_area;
        first += f * sub_area;
    };
    for i in 0..k {
        for j in 0..k - i {
            let p0 = a + e1 * i as f64 + e2 * j as f64;
            accumulate(p0, p0 + e1, p0 + e2);
            if i + j + 1 < k {
                accumulate(p0 + e1, p0 + e1 + e2, p0 + e2);
            }
        }
    }
    (mass, first)
}

/// `λ_P = ∫_P λ(x) dx`.
pub fn region_measure(poly: &ConvexPolygon, density: &DensityField, q: &Quadrature) -> f64 {
    region_moments(poly, density, q).0
}

/// Alias of [`region_measure`], named for the mass/centroid pair.
pub fn region_mass(poly: &ConvexPolygon, density: &DensityField, q: &Quadrature) -> f64 {
    region_measure(poly, density, q)
}

/// Density-weighted centroid.
pub fn region_centroid(poly: &ConvexPolygon, density: &DensityField, q: &Quadrature) -> Result<Point> {
    let (m, f) = region_moments(poly, density, q);
    if m <= ZERO_MASS_EPS {
        return Err(Error::ZeroMassRegion(m));
    }
    Ok(f / m)
}

/// `(∫_s λ ds, ∫_s x λ ds)` along the segment `a → b`.
pub fn segment_moments(a: Point, b: Point, density: &DensityField, q: &Quadrature) -> (f64, Point) {
    let len = a.distance(b);
    if len == 0.0 {
        return (0.0, Point::ZERO);
    }
    match density {
        DensityField::Uniform { value } => (value * len, a.lerp(b, 0.5) * (value * len)),
        DensityField::Grid(g) => g.segment_moments(a, b),
        DensityField::Gaussian { .. } => {
            let pieces = ((len / q.spec().max_edge).ceil() as usize).max(1);
            let h = len / pieces as f64;
            let mut mass = 0.0;
            let mut first = Point::ZERO;
            for k in 0..pieces {
                for &(t, w) in q.segment_rule() {
                    let x = a.lerp(b, (k as f64 + t) / pieces as f64);
                    let val = w * h * density.eval(x);
                    mass += val;
                    first += x * val;
                }
            }
            (mass, first)
        }
    }
}

/// `∫_s λ ds`.
pub fn face_integral(a: Point, b: Point, density: &DensityField, q: &Quadrature) -> f64 {
    segment_moments(a, b, density, q).0
}

/// `∫_s (x − g) λ ds`.
pub fn face_first_moment(a: Point, b: Point, g: Point, density: &DensityField, q: &Quadrature) -> Point {
    let (m, f) = segment_moments(a, b, density, q);
    f - g * m
}
