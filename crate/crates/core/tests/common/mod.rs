#![allow(dead_code)]

use equipart::dynamics::Evaluation;
use equipart::geometry::{ConvexPolygon, GeneratorSet, Point};
use equipart::{DensityField, Quadrature};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Vertices on a randomly rotated ellipse at sorted random angles, so the
/// polygon is convex by construction.
pub fn random_polygon(rng: &mut impl Rng) -> ConvexPolygon {
    loop {
        let n = rng.random_range(3..=9);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let (a, b) = (rng.random_range(0.3..0.6), rng.random_range(0.3..0.6));
        let rot = rng.random_range(0.0..std::f64::consts::PI);
        let center = Point::new(rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
        let (c, s) = (rot.cos(), rot.sin());
        let pts = angles
            .iter()
            .map(|t| {
                let (x, y) = (a * t.cos(), b * t.sin());
                center + Point::new(c * x - s * y, s * x + c * y)
            })
            .collect();
        if let Ok(p) = ConvexPolygon::new(pts) {
            if p.area() > 0.05 {
                return p;
            }
        }
    }
}

pub fn random_point_in(rng: &mut impl Rng, region: &ConvexPolygon) -> Point {
    let (x0, x1) = region.extent(Point::new(1.0, 0.0));
    let (y0, y1) = region.extent(Point::new(0.0, 1.0));
    loop {
        let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if region.contains(p) {
            return p;
        }
    }
}

/// A gaussian with random center, rate and amplitude, or a random 3×3 grid.
pub fn random_density(rng: &mut impl Rng) -> DensityField {
    match rng.random_range(0..3) {
        0 => DensityField::uniform(rng.random_range(0.5..2.0)),
        1 => DensityField::Gaussian {
            center: Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)),
            rate: rng.random_range(1.0..8.0),
            amplitude: rng.random_range(0.5..2.0),
        },
        _ => DensityField::Grid(equipart::density::GridDensity {
            origin: Point::new(0.0, 0.0),
            cell_size: Point::new(1.0 / 3.0, 1.0 / 3.0),
            values: (0..3).map(|_| (0..3).map(|_| rng.random_range(0.2..2.0)).collect()).collect(),
        }),
    }
}

/// `m` generators in `region`, pairwise at least `sep` apart, with weights
/// drawn from `[-w, w]`.
pub fn random_generators(rng: &mut impl Rng, region: &ConvexPolygon, m: usize, w: f64, sep: f64) -> GeneratorSet {
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < m {
        let p = random_point_in(rng, region);
        if pts.iter().all(|q| q.distance(p) >= sep) {
            pts.push(p);
        }
    }
    let weights = (0..m).map(|_| if w > 0.0 { rng.random_range(-w..w) } else { 0.0 }).collect();
    GeneratorSet::new(pts, weights).unwrap()
}

/// Random generators on the unit square whose cells all carry at least
/// `frac` of the total mass.
pub fn balanced_instance(rng: &mut impl Rng, m: usize, density: &DensityField, frac: f64) -> (GeneratorSet, Evaluation) {
    let sq = ConvexPolygon::unit_square();
    loop {
        let gens = random_generators(rng, &sq, m, 0.02, 0.08);
        if let Ok(e) = Evaluation::new(&sq, &gens, density, &Quadrature::default()) {
            if e.min_mass() >= frac * e.total_mass() {
                return (gens, e);
            }
        }
    }
}

pub fn objective(region: &ConvexPolygon, gens: &GeneratorSet, density: &DensityField, targets: Option<&[f64]>) -> f64 {
    let e = Evaluation::new(region, gens, density, &Quadrature::default()).unwrap();
    e.objective(targets).unwrap()
}

/// Central finite differences of the objective in every weight and position
/// coordinate, with step `h`.
pub fn finite_difference(
    region: &ConvexPolygon,
    gens: &GeneratorSet,
    density: &DensityField,
    targets: Option<&[f64]>,
    h: f64,
) -> (Vec<f64>, Vec<Point>) {
    let m = gens.len();
    let mut dw = vec![0.0; m];
    let mut dg = vec![Point::ZERO; m];
    let bump_w = |i: usize, s: f64| {
        let mut w = gens.weights().to_vec();
        w[i] += s;
        objective(region, &gens.with_weights(w).unwrap(), density, targets)
    };
    let bump_g = |i: usize, d: Point| {
        let mut p = gens.positions().to_vec();
        p[i] = p[i] + d;
        objective(region, &GeneratorSet::new(p, gens.weights().to_vec()).unwrap(), density, targets)
    };
    for i in 0..m {
        dw[i] = (bump_w(i, h) - bump_w(i, -h)) / (2.0 * h);
        let ex = Point::new(h, 0.0);
        let ey = Point::new(0.0, h);
        dg[i] = Point::new(
            (bump_g(i, ex) - bump_g(i, ex * -1.0)) / (2.0 * h),
            (bump_g(i, ey) - bump_g(i, ey * -1.0)) / (2.0 * h),
        );
    }
    (dw, dg)
}

/// `|a − b| ≤ max(rel·|b|, abs)`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= (rel * b.abs()).max(abs)
}

/// Rounds every weight to a multiple of 2^-30. For |w| < 1 and shifts like
/// -5, 1 or 17.3, `w + t` is then exact, so a shift test measures the
/// diagram construction and not the rounding of its input.
pub fn dyadic_weights(gens: &GeneratorSet) -> GeneratorSet {
    let q = (30f64).exp2();
    gens.with_weights(gens.weights().iter().map(|w| (w * q).round() / q).collect()).unwrap()
}
