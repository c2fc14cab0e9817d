use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gradient::Evaluation;
use super::law::{controls, Control, Law};
use super::params::LawParams;
use crate::density::{region_measure, DensityField, Quadrature};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, GeneratorSet, Point};

/// Halvings tried before a step is declared failed.
pub const MAX_HALVINGS: u32 = 20;
/// Accepted cells must keep at least this share of the total measure.
pub const MASS_FLOOR: f64 = 1e-6;
/// Allowed objective increase per accepted step (round-off slack).
pub const DESCENT_SLACK: f64 = 1e-12;
/// Growth of the trial sub-step after an accepted one.
const GROWTH: f64 = 1.5;

/// How a step turns controls into a new configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `x + dt·f(x)` for weights and positions alike.
    Euler,
    /// Positions as in `Euler`; the weight-descent and weight-decay terms are
    /// linearized and taken implicitly, which removes the step-size limit
    /// their stiffness imposes.
    #[default]
    SemiImplicit,
}

struct Linearization {
    lap: DMatrix<f64>,
    d: DVector<f64>,
    hessian: DMatrix<f64>,
}

/// Everything that stays fixed during a run.
#[derive(Debug, Clone)]
pub struct System {
    pub region: ConvexPolygon,
    pub density: DensityField,
    pub quadrature: Quadrature,
    pub law: Law,
    pub params: LawParams,
    total_mass: f64,
}

/// A generator configuration with its evaluated diagram.
#[derive(Debug, Clone)]
pub struct State {
    pub gens: GeneratorSet,
    pub eval: Evaluation,
    pub objective: f64,
}

/// Outcome of one accepted step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: State,
    pub dt: f64,
    pub halvings: u32,
}

/// Outcome of [`Stepper::advance`].
#[derive(Debug, Clone)]
pub struct AdvanceReport {
    pub state: State,
    pub substeps: usize,
    /// Smallest accepted sub-step.
    pub min_dt: f64,
}

impl System {
    pub fn new(region: ConvexPolygon, density: DensityField, quadrature: Quadrature, law: Law, params: LawParams) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::InvalidPolygon("workspace is empty".into()));
        }
        density.validate()?;
        let total_mass = region_measure(&region, &density, &quadrature);
        if !(total_mass > 0.0) {
            return Err(Error::ZeroMassRegion(total_mass));
        }
        if let Law::Beta(beta) = &law {
            super::params::validate_fractions(beta, beta.len())?;
        }
        Ok(Self {
            region,
            density,
            quadrature,
            law,
            params,
            total_mass,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn targets(&self) -> Option<&[f64]> {
        self.law.targets(&self.params)
    }

    pub fn evaluate(&self, gens: &GeneratorSet) -> Result<Evaluation> {
        Evaluation::new(&self.region, gens, &self.density, &self.quadrature)
    }

    /// Checks the configuration against the workspace and parameters, and
    /// evaluates it.
    pub fn state(&self, gens: GeneratorSet) -> Result<State> {
        gens.check_within(&self.region)?;
        self.params.validate(gens.len())?;
        if let Some(t) = self.targets() {
            if t.len() != gens.len() {
                return Err(Error::InvalidParams(format!(
                    "{} target fractions for {} generators",
                    t.len(),
                    gens.len()
                )));
            }
        }
        let eval = self.evaluate(&gens)?;
        let objective = eval.objective(self.targets())?;
        Ok(State { gens, eval, objective })
    }

    pub fn controls(&self, state: &State) -> Result<Vec<Control>> {
        controls(&self.law, &state.eval, &state.gens, &self.params)
    }

    fn moved_positions(&self, gens: &GeneratorSet, controls: &[Control], dt: f64) -> Vec<Point> {
        gens.positions()
            .iter()
            .zip(controls)
            .map(|(g, c)| {
                if c.dg == Point::ZERO {
                    *g
                } else {
                    self.region.project(*g + c.dg * dt)
                }
            })
            .collect()
    }

    /// Forward-Euler update over `dt`, projecting positions back into the
    /// workspace.
    pub fn apply(&self, gens: &GeneratorSet, controls: &[Control], dt: f64) -> Result<GeneratorSet> {
        let weights = gens.weights().iter().zip(controls).map(|(w, c)| w + c.dw * dt).collect();
        GeneratorSet::new(self.moved_positions(gens, controls, dt), weights)
    }

    /// Gauss–Newton approximation `L·D·L` of the Hessian of the objective in
    /// the weights: `L` is the face-weighted graph Laplacian with
    /// `L_ij = −∫_{Δ_ij} λ / (2γ_ij)` and `D = diag(2β_k²/λ_k³)`. It is exact
    /// wherever the cells are equitable.
    pub fn weight_hessian(&self, state: &State) -> DMatrix<f64> {
        self.linearize(state).hessian
    }

    fn linearize(&self, state: &State) -> Linearization {
        let m = state.gens.len();
        let eval = &state.eval;
        let mut lap = DMatrix::<f64>::zeros(m, m);
        for (f, mass) in eval.diagram.faces().iter().zip(&eval.face_masses) {
            let c = mass / (2.0 * state.gens.position(f.i).distance(state.gens.position(f.j)));
            lap[(f.i, f.i)] += c;
            lap[(f.j, f.j)] += c;
            lap[(f.i, f.j)] -= c;
            lap[(f.j, f.i)] -= c;
        }
        let targets = self.targets();
        let d = DVector::from_iterator(
            m,
            eval.masses.iter().enumerate().map(|(k, l)| {
                let b = targets.map_or(1.0, |t| t[k]);
                2.0 * b * b / (l * l * l)
            }),
        );
        let hessian = &lap * DMatrix::from_diagonal(&d) * &lap;
        Linearization { lap, d, hessian }
    }

    /// First-order change of the cell measures when generators move by
    /// `shifts` at fixed weights.
    fn measure_shift(&self, state: &State, shifts: &[Point]) -> DVector<f64> {
        let eval = &state.eval;
        let mut out = DVector::zeros(shifts.len());
        for (f, (mass, moment)) in eval.diagram.faces().iter().zip(eval.face_masses.iter().zip(&eval.face_moments)) {
            let (gi, gj) = (state.gens.position(f.i), state.gens.position(f.j));
            let gamma = gi.distance(gj);
            // Moving g_i by d pushes the shared face outward from cell i at
            // normal speed (x − g_i)·d/γ.
            let a = (*moment - gi * *mass).dot(shifts[f.i]) / gamma;
            let b = (*moment - gj * *mass).dot(shifts[f.j]) / gamma;
            out[f.i] += a - b;
            out[f.j] += b - a;
        }
        out
    }

    /// Semi-implicit update. Positions move explicitly by `Δg`; the weight
    /// increment solves
    /// `(I + dt·(k·LDL + diag(G)))·Δw = dt·dw − dt·k·L·D·(∂λ/∂g)·Δg`,
    /// the linearization of the weight rate at the end of the step (see
    /// [`System::weight_hessian`] for `L` and `D`; `k` is the law's descent
    /// gain and `G` the decay gains).
    fn apply_semi_implicit(&self, state: &State, lin: &Linearization, controls: &[Control], dt: f64) -> Result<GeneratorSet> {
        let m = controls.len();
        let k = self.law.descent_gain();
        let positions = self.moved_positions(&state.gens, controls, dt);
        let mut rhs = DVector::from_iterator(m, controls.iter().map(|c| dt * c.dw));
        if positions.as_slice() != state.gens.positions() {
            let shifts: Vec<Point> = positions.iter().zip(state.gens.positions()).map(|(a, b)| *a - *b).collect();
            let dl = self.measure_shift(state, &shifts);
            rhs -= &lin.lap * lin.d.component_mul(&dl) * (k * dt);
        }
        let mut a = &lin.hessian * (k * dt);
        for (i, c) in controls.iter().enumerate() {
            a[(i, i)] += 1.0 + dt * c.decay;
        }
        let delta = match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidParams("singular weight update".into()))?,
        };
        let weights = state.gens.weights().iter().zip(delta.iter()).map(|(w, d)| w + d).collect();
        GeneratorSet::new(positions, weights)
    }

    fn accept(&self, state: &State, gens: GeneratorSet) -> Option<State> {
        let eval = self.evaluate(&gens).ok()?;
        if eval.min_mass() < MASS_FLOOR * self.total_mass {
            return None;
        }
        let objective = eval.objective(self.targets()).ok()?;
        (objective <= state.objective + DESCENT_SLACK).then_some(State { gens, eval, objective })
    }

    fn step_with(&self, state: &State, controls: &[Control], dt: f64, scheme: Scheme) -> Result<StepReport> {
        if controls.iter().all(Control::is_zero) {
            return Ok(StepReport {
                state: state.clone(),
                dt,
                halvings: 0,
            });
        }
        let lin = (scheme == Scheme::SemiImplicit).then(|| self.linearize(state));
        let mut h = dt;
        for halvings in 0..=MAX_HALVINGS {
            let next = match &lin {
                None => self.apply(&state.gens, controls, h),
                Some(lin) => self.apply_semi_implicit(state, lin, controls, h),
            };
            if let Some(next) = next.ok().and_then(|g| self.accept(state, g)) {
                return Ok(StepReport {
                    state: next,
                    dt: h,
                    halvings,
                });
            }
            h *= 0.5;
        }
        Err(Error::StepFailed {
            halvings: MAX_HALVINGS,
            dt: h * 2.0,
        })
    }

    /// One forward-Euler step of length `dt`, halved until the new
    /// configuration keeps every cell above the mass floor and does not
    /// increase the objective.
    pub fn euler_step(&self, state: &State, dt: f64) -> Result<StepReport> {
        self.step(state, dt, Scheme::Euler)
    }

    /// One step of `scheme` with the same acceptance rule as
    /// [`System::euler_step`].
    pub fn step(&self, state: &State, dt: f64, scheme: Scheme) -> Result<StepReport> {
        let c = self.controls(state)?;
        self.step_with(state, &c, dt, scheme)
    }
}

/// Covers fixed time intervals with a sequence of accepted sub-steps,
/// carrying the last accepted sub-step length between calls.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    hint: Option<f64>,
}

impl Default for Stepper {
    fn default() -> Self {
        Self::new(Scheme::default())
    }
}

impl Stepper {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, hint: None }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Advances `state` by exactly `dt` of simulated time.
    pub fn advance(&mut self, sys: &System, state: State, dt: f64) -> Result<AdvanceReport> {
        let mut state = state;
        let mut elapsed = 0.0;
        let mut substeps = 0;
        let mut min_dt = dt;
        while elapsed < dt {
            let remaining = dt - elapsed;
            let trial = self.hint.map_or(remaining, |h| (h * GROWTH).min(remaining));
            // Absorb a sliver left by rounding into this step.
            let trial = if remaining - trial < 1e-9 * dt { remaining } else { trial };
            let c = sys.controls(&state)?;
            let report = sys.step_with(&state, &c, trial, self.scheme)?;
            self.hint = (report.halvings > 0 || trial < remaining).then_some(report.dt).or(self.hint);
            if report.halvings == 0 && trial == remaining && self.hint.is_some_and(|h| h >= dt) {
                self.hint = None;
            }
            elapsed = if report.dt == remaining { dt } else { elapsed + report.dt };
            min_dt = min_dt.min(report.dt);
            substeps += 1;
            state = report.state;
        }
        Ok(AdvanceReport { state, substeps, min_dt })
    }
}
