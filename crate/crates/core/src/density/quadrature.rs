use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule selection for polygon and segment integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Polynomial degree integrated exactly on each triangle.
    pub triangle_degree: u32,
    /// Gauss–Legendre points per segment piece.
    pub segment_points: usize,
    /// Triangles and segments are subdivided until no edge exceeds this.
    pub max_edge: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            triangle_degree: 6,
            segment_points: 8,
            max_edge: 0.125,
        }
    }
}

/// A point of a triangle rule in barycentric coordinates; weights sum to one
/// and are scaled by the triangle area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePoint {
    pub weight: f64,
    pub bary: [f64; 3],
}

/// Precomputed rule tables for a [`QuadratureSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    spec: QuadratureSpec,
    triangle: Vec<TrianglePoint>,
    /// Nodes and weights on `[0, 1]`.
    segment: Vec<(f64, f64)>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(QuadratureSpec::default()).expect("default quadrature spec is valid")
    }
}

impl Quadrature {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        if spec.triangle_degree < 2 {
            return Err(Error::InvalidParams(format!(
                "triangle rule degree must be >= 2, got {}",
                spec.triangle_degree
            )));
        }
        if spec.segment_points < 2 {
            return Err(Error::InvalidParams(format!(
                "segment rule needs >= 2 points, got {}",
                spec.segment_points
            )));
        }
        if !(spec.max_edge > 0.0 && spec.max_edge.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "max_edge must be positive, got {}",
                spec.max_edge
            )));
        }
        let triangle = if spec.triangle_degree == 6 {
            dunavant_degree6()
        } else {
            conical_product(spec.triangle_degree)
        };
        Ok(Self {
            spec,
            triangle,
            segment: gauss_legendre_unit(spec.segment_points),
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn triangle_rule(&self) -> &[TrianglePoint] {
        &self.triangle
    }

    pub fn segment_rule(&self) -> &[(f64, f64)] {
        &self.segment
    }
}

/// Symmetric 12-point rule exact for degree 6 (Dunavant).
fn dunavant_degree6() -> Vec<TrianglePoint> {
    let orbits3 = [
        (0.116_786_275_726_379, 0.501_426_509_658_179, 0.249_286_745_170_910),
        (0.050_844_906_370_207, 0.873_821_971_016_996, 0.063_089_014_491_502),
    ];
    let (w6, a, b, c) = (
        0.082_851_075_618_374,
        0.053_145_049_844_817,
        0.310_352_451_033_784,
        0.636_502_499_121_399,
    );
    let mut pts = Vec::with_capacity(12);
    for (w, p, q) in orbits3 {
        for bary in [[p, q, q], [q, p, q], [q, q, p]] {
            pts.push(TrianglePoint { weight: w, bary });
        }
    }
    for bary in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        pts.push(TrianglePoint { weight: w6, bary });
    }
    pts
}

/// Collapsed tensor-product Gauss rule exact for total degree `degree`.
fn conical_product(degree: u32) -> Vec<TrianglePoint> {
    let n = (degree as usize + 2).div_ceil(2);
    let gl = gauss_legendre_unit(n);
    let mut pts = Vec::with_capacity(n * n);
    for &(u, wu) in &gl {
        for &(v, wv) in &gl {
            let l1 = u;
            let l2 = v * (1.0 - u);
            pts.push(TrianglePoint {
                weight: 2.0 * wu * wv * (1.0 - u),
                bary: [1.0 - l1 - l2, l1, l2],
            });
        }
    }
    pts
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
