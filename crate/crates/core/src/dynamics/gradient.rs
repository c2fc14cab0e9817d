use crate::density::{region_moments, segment_moments, DensityField, Quadrature, ZERO_MASS_EPS};
use crate::error::{Error, Result};
use crate::geometry::{power_diagram, ConvexPolygon, GeneratorSet, Point, PowerDiagram};

/// A power diagram together with the density integrals the laws need:
/// cell masses and first moments, and the mass and first moment of every face.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub diagram: PowerDiagram,
    pub masses: Vec<f64>,
    /// `∫_{V_i} x λ`.
    pub moments: Vec<Point>,
    /// `∫_{Δ_ij} λ`, indexed like `diagram.faces()`.
    pub face_masses: Vec<f64>,
    /// `∫_{Δ_ij} x λ`, indexed like `diagram.faces()`.
    pub face_moments: Vec<Point>,
}

impl Evaluation {
    pub fn new(region: &ConvexPolygon, gens: &GeneratorSet, density: &DensityField, q: &Quadrature) -> Result<Self> {
        let diagram = power_diagram(region, gens)?;
        let (masses, moments) = diagram
            .cells()
            .iter()
            .map(|c| region_moments(c, density, q))
            .unzip();
        let (face_masses, face_moments) = diagram
            .faces()
            .iter()
            .map(|f| segment_moments(f.a, f.b, density, q))
            .unzip();
        Ok(Self {
            diagram,
            masses,
            moments,
            face_masses,
            face_moments,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First index whose cell is too light to carry the objective.
    pub fn first_empty(&self) -> Option<usize> {
        self.masses.iter().position(|&m| m <= ZERO_MASS_EPS)
    }

    /// Density-weighted centroid of cell `i`.
    pub fn centroid(&self, i: usize) -> Result<Point> {
        let m = self.masses[i];
        if m <= ZERO_MASS_EPS {
            return Err(Error::EmptyCell(i));
        }
        Ok(self.moments[i] / m)
    }

    /// Objective `Σ β_i²/λ_{V_i}`, with `β ≡ 1` when `targets` is `None`.
    pub fn objective(&self, targets: Option<&[f64]>) -> Result<f64> {
        if let Some(i) = self.first_empty() {
            return Err(Error::EmptyCell(i));
        }
        Ok(match targets {
            None => self.masses.iter().map(|m| 1.0 / m).sum(),
            Some(beta) => self.masses.iter().zip(beta).map(|(m, b)| b * b / m).sum(),
        })
    }

    /// Gradient of `Σ β_i²/λ_{V_i}` with respect to generator `i`'s weight
    /// and position. Reads only cell `i`, its faces and its neighbors' masses.
    pub fn local_gradient(&self, gens: &GeneratorSet, targets: Option<&[f64]>, i: usize) -> (f64, Point) {
        let scale = |k: usize| {
            let b = targets.map_or(1.0, |t| t[k]);
            b * b / (self.masses[k] * self.masses[k])
        };
        let gi = gens.position(i);
        let si = scale(i);
        let mut dw = 0.0;
        let mut dg = Point::ZERO;
        for adj in self.diagram.adjacency(i) {
            let j = adj.neighbor;
            let gamma = gi.distance(gens.position(j));
            let diff = scale(j) - si;
            let f0 = self.face_masses[adj.face];
            let f1 = self.face_moments[adj.face];
            dw += diff * f0 / (2.0 * gamma);
            dg += (f1 - gi * f0) * (diff / gamma);
        }
        (dw, dg)
    }
}

/// Per-agent partial derivatives of the objective plus the cell data the
/// position laws use.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub dh_dw: Vec<f64>,
    pub dh_dg: Vec<Point>,
    pub masses: Vec<f64>,
    /// `C_{V_i} − g_i`.
    pub centroid_offsets: Vec<Point>,
}

impl GradientBundle {
    pub fn new(eval: &Evaluation, gens: &GeneratorSet, targets: Option<&[f64]>) -> Result<Self> {
        if let Some(i) = eval.first_empty() {
            return Err(Error::EmptyCell(i));
        }
        let m = eval.len();
        let mut dh_dw = Vec::with_capacity(m);
        let mut dh_dg = Vec::with_capacity(m);
        let mut centroid_offsets = Vec::with_capacity(m);
        for i in 0..m {
            let (w, g) = eval.local_gradient(gens, targets, i);
            dh_dw.push(w);
            dh_dg.push(g);
            centroid_offsets.push(eval.centroid(i)? - gens.position(i));
        }
        Ok(Self {
            dh_dw,
            dh_dg,
            masses: eval.masses.clone(),
            centroid_offsets,
        })
    }

    /// Descent direction `−∂H/∂g_i`.
    pub fn descent(&self, i: usize) -> Point {
        -self.dh_dg[i]
    }
}

/// Weight part of the gradient of `Σ 1/λ_{V_i}`.
pub fn grad_w_hv(eval: &Evaluation, gens: &GeneratorSet) -> Result<Vec<f64>> {
    Ok(GradientBundle::new(eval, gens, None)?.dh_dw)
}

/// Weight and position parts of the gradient of `Σ 1/λ_{V_i}`.
pub fn grad_hv_tilde(eval: &Evaluation, gens: &GeneratorSet) -> Result<GradientBundle> {
    GradientBundle::new(eval, gens, None)
}

/// `Σ 1/λ_{V_i}`.
pub fn hv_value(eval: &Evaluation) -> Result<f64> {
    eval.objective(None)
}

/// `Σ β_i²/λ_{V_i}`.
pub fn hv_beta_value(eval: &Evaluation, beta: &[f64]) -> Result<f64> {
    eval.objective(Some(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn eval(gens: &GeneratorSet, density: &DensityField) -> Evaluation {
        Evaluation::new(&ConvexPolygon::unit_square(), gens, density, &Quadrature::default()).unwrap()
    }

    #[test]
    fn symmetric_pair_has_zero_gradient() {
        let gens = GeneratorSet::unweighted(vec![p(0.25, 0.5), p(0.75, 0.5)]).unwrap();
        let e = eval(&gens, &DensityField::uniform(1.0));
        let b = grad_hv_tilde(&e, &gens).unwrap();
        assert_eq!(b.dh_dw, vec![0.0, 0.0]);
        assert_eq!(hv_value(&e).unwrap(), 4.0);
    }

    #[test]
    fn single_generator() {
        let gens = GeneratorSet::unweighted(vec![p(0.3, 0.6)]).unwrap();
        let e = eval(&gens, &DensityField::uniform(2.0));
        let b = grad_hv_tilde(&e, &gens).unwrap();
        assert_eq!(b.dh_dw, vec![0.0]);
        assert_eq!(b.dh_dg, vec![Point::ZERO]);
        assert_eq!(hv_value(&e).unwrap(), 0.5);
    }

    #[test]
    fn quadrant_centers_are_critical() {
        let gens = GeneratorSet::unweighted(vec![p(0.25, 0.25), p(0.75, 0.25), p(0.25, 0.75), p(0.75, 0.75)]).unwrap();
        let e = eval(&gens, &DensityField::uniform(1.0));
        let b = grad_hv_tilde(&e, &gens).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(b.dh_dw[i], 0.0, epsilon = 1e-12);
            assert!(b.dh_dg[i].norm() < 1e-12);
            assert!(b.centroid_offsets[i].norm() < 1e-12);
        }
        assert_abs_diff_eq!(hv_value(&e).unwrap(), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_objective_at_target() {
        let gens = GeneratorSet::unweighted(vec![p(0.25, 0.5), p(0.75, 0.5)]).unwrap();
        let e = eval(&gens, &DensityField::uniform(1.0));
        assert_abs_diff_eq!(hv_beta_value(&e, &[0.5, 0.5]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn smaller_cell_has_negative_weight_gradient() {
        let gens = GeneratorSet::unweighted(vec![p(0.2, 0.5), p(0.6, 0.5)]).unwrap();
        let e = eval(&gens, &DensityField::uniform(1.0));
        let g = grad_w_hv(&e, &gens).unwrap();
        assert!(g[0] < 0.0 && g[1] > 0.0);
        assert_eq!(g[0], -g[1]);
    }

    #[test]
    fn empty_cell_is_an_error() {
        let gens = GeneratorSet::new(vec![p(0.25, 0.5), p(0.75, 0.5)], vec![0.0, 5.0]).unwrap();
        let e = eval(&gens, &DensityField::uniform(1.0));
        assert!(matches!(grad_w_hv(&e, &gens), Err(Error::EmptyCell(0))));
        assert!(matches!(hv_value(&e), Err(Error::EmptyCell(0))));
    }
}
