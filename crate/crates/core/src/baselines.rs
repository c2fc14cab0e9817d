//! Centralized equitable partitions: slabs, angular sectors, the equal-weight
//! Voronoi construction for uniform measures, and the feasibility check for
//! equitable Voronoi diagrams on a segment.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::{region_measure, DensityField, Quadrature};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, HalfPlane, Point};

/// Smallest `x` in `[lo, hi]` with `f(x) >= target`, for nondecreasing `f`,
/// to the last representable bit.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn unit(direction: Point) -> Result<Point> {
    let n = direction.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParams(format!("direction {direction:?} has no length")));
    }
    Ok(direction / n)
}

fn check_count(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParams("need at least one cell".into()));
    }
    Ok(())
}

/// `region ∩ {lo <= v·x <= hi}`.
fn slab(region: &ConvexPolygon, v: Point, lo: f64, hi: f64) -> ConvexPolygon {
    let upper = HalfPlane::new(v, hi).expect("unit normal");
    let lower = HalfPlane::new(-v, -lo).expect("unit normal");
    region.clip(&upper).clip(&lower)
}

/// Region cut by parallel lines orthogonal to `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedPartition {
    /// Unit vector; cell `k` is `{offsets[k-1] <= direction·x <= offsets[k]}`.
    pub direction: Point,
    /// The `m − 1` interior cut offsets, increasing.
    pub offsets: Vec<f64>,
    pub cells: Vec<ConvexPolygon>,
}

/// Cuts `region` into `m` slabs orthogonal to `direction`, each holding
/// `1/m` of the measure.
pub fn slice_partition(region: &ConvexPolygon, density: &DensityField, m: usize, direction: Point) -> Result<SlicedPartition> {
    check_count(m)?;
    density.validate()?;
    let v = unit(direction)?;
    let q = Quadrature::default();
    let total = region_measure(region, density, &q);
    if !(total > 0.0) {
        return Err(Error::ZeroMassRegion(total));
    }
    let (lo, hi) = region.extent(v);
    let mut offsets = Vec::with_capacity(m - 1);
    let mut cells = Vec::with_capacity(m);
    let mut start = lo;
    for k in 1..m {
        let share = total * (k as f64) / (m as f64);
        let s = bisect(|s| region_measure(&slab(region, v, lo, s), density, &q), share, start, hi);
        cells.push(slab(region, v, start, s));
        offsets.push(s);
        start = s;
    }
    cells.push(slab(region, v, start, hi));
    Ok(SlicedPartition {
        direction: v,
        offsets,
        cells,
    })
}

/// One angular sector of a [`SweptPartition`], stored as convex wedges of at
/// most a quarter turn each (a sector wider than a half turn is not convex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptCell {
    /// Angles measured from the positive x-axis; `end > start`.
    pub start: f64,
    pub end: f64,
    pub pieces: Vec<ConvexPolygon>,
}

impl SweptCell {
    pub fn measure(&self, density: &DensityField, q: &Quadrature) -> f64 {
        self.pieces.iter().map(|p| region_measure(p, density, q)).sum()
    }
}

/// Region swept by a ray turning about an interior pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptPartition {
    pub pivot: Point,
    pub cells: Vec<SweptCell>,
}

fn sector(region: &ConvexPolygon, pivot: Point, start: f64, end: f64) -> Vec<ConvexPolygon> {
    let mut pieces = Vec::new();
    let mut a = start;
    while a < end {
        let b = (a + FRAC_PI_2).min(end);
        let (ua, ub) = (Point::from_angle(a), Point::from_angle(b));
        // Left of the ray at angle a, right of the ray at angle b.
        let left = HalfPlane::new(-ua.perp(), -ua.perp().dot(pivot)).expect("unit normal");
        let right = HalfPlane::new(ub.perp(), ub.perp().dot(pivot)).expect("unit normal");
        let piece = region.clip(&left).clip(&right);
        if !piece.is_empty() {
            pieces.push(piece);
        }
        a = b;
    }
    pieces
}

/// Sweeps a ray about `pivot`, starting at angle `start_angle`, and cuts
/// whenever the swept sector holds `1/m` of the measure.
pub fn sweep_partition(
    region: &ConvexPolygon,
    density: &DensityField,
    m: usize,
    pivot: Point,
    start_angle: f64,
) -> Result<SweptPartition> {
    check_count(m)?;
    density.validate()?;
    if !start_angle.is_finite() {
        return Err(Error::InvalidParams("start angle must be finite".into()));
    }
    if !region.contains(pivot) || region.distance_to_boundary(pivot) <= 1e-12 {
        return Err(Error::InvalidParams(format!("pivot {pivot:?} is not strictly inside the region")));
    }
    let q = Quadrature::default();
    let total = region_measure(region, density, &q);
    if !(total > 0.0) {
        return Err(Error::ZeroMassRegion(total));
    }
    let swept = |end: f64| -> f64 {
        sector(region, pivot, start_angle, end)
            .iter()
            .map(|p| region_measure(p, density, &q))
            .sum()
    };
    let stop = start_angle + TAU;
    let mut cells = Vec::with_capacity(m);
    let mut a = start_angle;
    for k in 1..m {
        let share = total * (k as f64) / (m as f64);
        let b = bisect(swept, share, a, stop);
        cells.push(SweptCell {
            start: a,
            end: b,
            pieces: sector(region, pivot, a, b),
        });
        a = b;
    }
    cells.push(SweptCell {
        start: a,
        end: stop,
        pieces: sector(region, pivot, a, stop),
    });
    Ok(SweptPartition { pivot, cells })
}

/// Collinear generators whose equal-weight Voronoi diagram is equitable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimodalVoronoi {
    /// Unit vector along which the generators line up.
    pub direction: Point,
    /// Point of the generator line; generator `i` is
    /// `anchor + (t_i − direction·anchor)·direction`.
    pub anchor: Point,
    /// `s_0 < … < s_m`: slab boundaries holding `k/m` of the measure.
    pub cuts: Vec<f64>,
    /// Coordinate of each generator along `direction`; `t_i ∈ [s_{i-1}, s_i]`.
    pub t: Vec<f64>,
    pub generators: Vec<Point>,
}

/// Equitable Voronoi generators for a uniform density on a convex region.
///
/// Generators sit on a line parallel to `direction`, so every bisector is
/// orthogonal to it and the cells are the equal-measure slabs. With no
/// direction, the line through the two farthest vertices is used, which keeps
/// every generator inside the region. A given direction is anchored at the
/// area centroid.
pub fn unimodal_voronoi(
    region: &ConvexPolygon,
    density: &DensityField,
    m: usize,
    direction: Option<Point>,
) -> Result<UnimodalVoronoi> {
    check_count(m)?;
    density.validate()?;
    if !density.is_uniform() {
        return Err(Error::UnsupportedDensity(
            "equitable Voronoi generators are only constructed for a constant density".into(),
        ));
    }
    let (direction, anchor) = match direction {
        Some(d) => (unit(d)?, region.centroid().ok_or(Error::ZeroMassRegion(0.0))?),
        None => {
            let (a, b) = region.diameter_pair().ok_or(Error::ZeroMassRegion(0.0))?;
            (unit(b - a)?, a)
        }
    };
    let sliced = slice_partition(region, density, m, direction)?;
    let (lo, hi) = region.extent(direction);
    let mut cuts = Vec::with_capacity(m + 1);
    cuts.push(lo);
    cuts.extend(&sliced.offsets);
    cuts.push(hi);

    let len = |i: usize| cuts[i + 1] - cuts[i];
    // Shortest slab, first one on ties.
    let kappa = (0..m).fold(0, |best, i| if len(i) < len(best) { i } else { best });
    let mut t = vec![0.0; m];
    t[kappa] = 0.5 * (cuts[kappa] + cuts[kappa + 1]);
    for i in kappa..m - 1 {
        t[i + 1] = 2.0 * cuts[i + 1] - t[i];
    }
    for i in (1..=kappa).rev() {
        t[i - 1] = 2.0 * cuts[i] - t[i];
    }
    let base = direction.dot(anchor);
    let generators = t.iter().map(|&ti| anchor + direction * (ti - base)).collect();
    Ok(UnimodalVoronoi {
        direction,
        anchor,
        cuts,
        t,
        generators,
    })
}

/// Piecewise-constant density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOneD")]
pub struct OneDDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOneD {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawOneD> for OneDDensity {
    type Error = Error;
    fn try_from(r: RawOneD) -> Result<Self> {
        Self::new(r.breakpoints, r.values)
    }
}

impl OneDDensity {
    /// `values[k]` holds on `[breakpoints[k], breakpoints[k+1]]`; breakpoints
    /// run from 0 to 1 and increase strictly.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidParams(format!("1-D density: {msg}")));
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return bad("need n + 1 breakpoints for n values");
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("breakpoints must increase strictly");
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("values must be finite and nonnegative");
        }
        let d = Self { breakpoints, values };
        if !(d.total() > 0.0) {
            return Err(Error::ZeroMassRegion(d.total()));
        }
        Ok(d)
    }

    pub fn uniform() -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![1.0],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.cumulative(1.0)
    }

    /// Mass of `[0, x]`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (w, v) in self.breakpoints.windows(2).zip(&self.values) {
            if x <= w[0] {
                break;
            }
            acc += v * (x.min(w[1]) - w[0]);
        }
        acc
    }

    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// The set `{x : cumulative(x) = target}` as `(lo, hi)`; a single point
    /// unless the density vanishes there.
    pub fn quantile(&self, target: f64) -> (f64, f64) {
        let mut acc = 0.0;
        let mut lo = None;
        let mut hi = 1.0;
        for (w, &v) in self.breakpoints.windows(2).zip(&self.values) {
            let next = acc + v * (w[1] - w[0]);
            if lo.is_none() && next >= target {
                lo = Some(if v > 0.0 { (w[0] + (target - acc) / v).min(w[1]) } else { w[0] });
            }
            if next > target {
                hi = if v > 0.0 { (w[0] + (target - acc) / v).clamp(w[0], w[1]) } else { w[0] };
                break;
            }
            acc = next;
        }
        let lo = lo.unwrap_or(1.0);
        (lo, hi.max(lo))
    }
}

/// The constraint between two generators implied by the midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `g_second − g_first` equals the value.
    Difference(f64),
    /// `g_first + g_second` equals the value.
    Sum(f64),
}

/// Two generators that cannot both stay in their cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// 1-based generator indices, `first < second`.
    pub first: usize,
    pub second: usize,
    pub relation: Relation,
    pub first_cell: (f64, f64),
    pub second_cell: (f64, f64),
    /// Range the relation's left side can take with both generators in
    /// their cells; it misses the required value.
    pub attainable: (f64, f64),
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = (self.first, self.second);
        match self.relation {
            Relation::Difference(d) => write!(f, "g{j} - g{i} = {d}")?,
            Relation::Sum(s) => write!(f, "g{i} + g{j} = {s}")?,
        }
        write!(
            f,
            " is impossible with g{i} in [{}, {}] and g{j} in [{}, {}] (attainable range [{}, {}])",
            self.first_cell.0, self.first_cell.1, self.second_cell.0, self.second_cell.1, self.attainable.0, self.attainable.1
        )
    }
}

/// Outcome of [`oned_equitable_voronoi_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OneDVerdict {
    Feasible { boundaries: Vec<f64>, generators: Vec<f64> },
    Infeasible { boundaries: Vec<f64>, certificate: Certificate },
    /// The density vanishes at a quantile, so boundary `index` (1-based) may
    /// sit anywhere in `range` and the check with fixed boundaries does not
    /// settle the question.
    Degenerate { index: usize, range: (f64, f64) },
}

impl OneDVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OneDVerdict::Feasible { .. })
    }
}

/// Decides whether `m` generators on `[0, 1]` can have an equitable Voronoi
/// partition under `rho`.
///
/// The equitable boundaries `b_1 < … < b_{m−1}` are the quantiles of `rho`.
/// A Voronoi boundary is the midpoint of its two generators, so
/// `g_{i+1} = 2b_i − g_i`: every generator is `c_i ± g_1`, and the cell
/// constraints `b_{i−1} ≤ g_i ≤ b_i` become intervals for `g_1`.
pub fn oned_equitable_voronoi_check(rho: &OneDDensity, m: usize) -> Result<OneDVerdict> {
    if m < 2 {
        return Err(Error::InvalidParams("the 1-D check needs at least two generators".into()));
    }
    let total = rho.total();
    let mut b = vec![0.0];
    for k in 1..m {
        let (lo, hi) = rho.quantile(total * k as f64 / m as f64);
        if hi - lo > 1e-12 {
            return Ok(OneDVerdict::Degenerate { index: k, range: (lo, hi) });
        }
        b.push(lo);
    }
    b.push(1.0);
    let boundaries = b[1..m].to_vec();
    let cell = |i: usize| (b[i], b[i + 1]);

    // g_i = c_i + sign_i·x with x = g_1.
    let mut c = vec![0.0; m];
    for i in 1..m {
        c[i] = 2.0 * b[i] - c[i - 1];
    }
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..m {
        let (lo, hi) = cell(i);
        let (a, z) = if sign(i) > 0.0 { (lo - c[i], hi - c[i]) } else { (c[i] - hi, c[i] - lo) };
        lower = lower.max(a);
        upper = upper.min(z);
    }
    if lower <= upper {
        let x = 0.5 * (lower + upper);
        let generators: Vec<f64> = (0..m).map(|i| c[i] + sign(i) * x).collect();
        if generators.windows(2).all(|w| w[1] > w[0]) {
            return Ok(OneDVerdict::Feasible { boundaries, generators });
        }
    }

    // Most local violated pair: smallest index gap, then largest violation.
    let mut best: Option<(usize, f64, Certificate)> = None;
    for i in 0..m {
        for j in i + 1..m {
            let (ci, cj) = (cell(i), cell(j));
            let (relation, value, attainable) = if sign(i) == sign(j) {
                let d = c[j] - c[i];
                (Relation::Difference(d), d, (cj.0 - ci.1, cj.1 - ci.0))
            } else {
                let s = c[i] + c[j];
                (Relation::Sum(s), s, (ci.0 + cj.0, ci.1 + cj.1))
            };
            let violation = (attainable.0 - value).max(value - attainable.1);
            // Touching the end of the range forces a shared boundary point.
            if violation < 0.0 {
                continue;
            }
            let gap = j - i;
            let better = best.as_ref().is_none_or(|(g, v, _)| gap < *g || (gap == *g && violation > *v));
            if better {
                let cert = Certificate {
                    first: i + 1,
                    second: j + 1,
                    relation,
                    first_cell: ci,
                    second_cell: cj,
                    attainable,
                };
                best = Some((gap, violation, cert));
            }
        }
    }
    let certificate = best.map(|(_, _, c)| c).ok_or_else(|| {
        Error::InvalidParams("generator intervals are empty but no pair conflicts; numerical trouble".into())
    })?;
    Ok(OneDVerdict::Infeasible { boundaries, certificate })
}
