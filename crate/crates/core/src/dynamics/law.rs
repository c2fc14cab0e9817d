use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use super::gains::{collision_angle, psi_gain, ramp, theta};
use super::gradient::{Evaluation, GradientBundle};
use super::params::LawParams;
use crate::error::Result;
use crate::geometry::{GeneratorSet, Point};

/// Which vector field drives the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    /// Weight descent only; positions stay fixed.
    Weights,
    /// Weight descent plus gated motion toward cell centroids.
    Centroidal,
    /// Weight descent plus weight decay, compensated by position motion.
    Voronoi,
    /// Componentwise sum of `Centroidal` and `Voronoi`.
    Combined,
    /// Weight descent on `Σ β_i²/λ_{V_i}`, driving cell `i` to share `β_i`.
    Beta(Vec<f64>),
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::Weights => "weights",
            Law::Centroidal => "centroidal",
            Law::Voronoi => "voronoi",
            Law::Combined => "combined",
            Law::Beta(_) => "beta",
        }
    }

    /// Multiple of `−∂H/∂w` contained in the weight rate.
    pub fn descent_gain(&self) -> f64 {
        match self {
            Law::Combined => 2.0,
            _ => 1.0,
        }
    }

    pub fn moves_positions(&self) -> bool {
        matches!(self, Law::Centroidal | Law::Voronoi | Law::Combined)
    }

    /// Measure shares the objective targets, if not all equal.
    pub fn targets<'a>(&'a self, params: &'a LawParams) -> Option<&'a [f64]> {
        match self {
            Law::Beta(beta) => Some(beta),
            _ => params.target_fractions.as_deref(),
        }
    }
}

/// Time derivative of one generator's weight and position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    pub dw: f64,
    pub dg: Point,
    /// Coefficient `G_i` of the weight-decay term `−G_i·w_i` included in `dw`.
    pub decay: f64,
}

impl std::ops::Add for Control {
    type Output = Control;
    fn add(self, o: Control) -> Control {
        Control {
            dw: self.dw + o.dw,
            dg: self.dg + o.dg,
            decay: self.decay + o.decay,
        }
    }
}

impl Control {
    pub fn is_zero(&self) -> bool {
        self.dw == 0.0 && self.dg == Point::ZERO
    }
}

/// Product of collision gains over every other generator within `big_delta`
/// of `g_i`, with approach angles taken from `heading`.
fn collision_product(gens: &GeneratorSet, i: usize, heading: Point, params: &LawParams) -> f64 {
    let gi = gens.position(i);
    let mut prod = 1.0;
    for (j, &gj) in gens.positions().iter().enumerate() {
        if j == i {
            continue;
        }
        let rho = gi.distance(gj);
        if rho > params.big_delta {
            continue;
        }
        prod *= psi_gain(rho, collision_angle(gi, gj, heading), params.big_delta, params.small_delta);
        if prod == 0.0 {
            break;
        }
    }
    prod
}

/// Position part of the centroidal law for agent `i`.
pub fn centroidal_motion(gens: &GeneratorSet, bundle: &GradientBundle, params: &LawParams, i: usize) -> Point {
    let v_c = bundle.centroid_offsets[i];
    let v_d = bundle.descent(i);
    let gate = theta(params.beta_theta, v_c.dot(v_d));
    if gate == 0.0 {
        return Point::ZERO;
    }
    let speed = FRAC_2_PI * (v_d.norm_sq() / params.alpha).atan();
    let prod = collision_product(gens, i, v_c, params);
    v_c * (speed * gate * prod)
}

/// Weight-decay gain `G_i` and compensating motion of the Voronoi-defect law
/// for agent `i`; the weight rate gains `−G_i·w_i`.
pub fn voronoi_terms(
    eval: &Evaluation,
    gens: &GeneratorSet,
    bundle: &GradientBundle,
    params: &LawParams,
    i: usize,
) -> (f64, Point) {
    let grad_g = bundle.dh_dg[i];
    let s = grad_g.norm();
    let speed_gate = ramp(params.eps1, params.eps2, s);
    if speed_gate == 0.0 {
        return (0.0, Point::ZERO);
    }
    let gi = gens.position(i);
    let cell = eval.diagram.cell(i);
    let clearance = if cell.contains(gi) {
        cell.distance_to_boundary(gi)
    } else {
        0.0
    };
    let wall_gate = ramp(0.0, params.eps3, clearance);
    if wall_gate == 0.0 {
        return (0.0, Point::ZERO);
    }
    let wi = gens.weight(i);
    let heading = grad_g * (wi * bundle.dh_dw[i]);
    let gain = speed_gate * wall_gate * collision_product(gens, i, heading, params);
    (gain, heading * (gain / (s * s)))
}

/// Control of agent `i` under `law`.
pub fn agent_control(
    law: &Law,
    eval: &Evaluation,
    gens: &GeneratorSet,
    bundle: &GradientBundle,
    params: &LawParams,
    i: usize,
) -> Control {
    let descent = Control {
        dw: -bundle.dh_dw[i],
        ..Control::default()
    };
    let centroidal = || Control {
        dg: centroidal_motion(gens, bundle, params, i),
        ..descent
    };
    let voronoi = || {
        let (gain, dg) = voronoi_terms(eval, gens, bundle, params, i);
        Control {
            dw: -bundle.dh_dw[i] - gens.weight(i) * gain,
            dg,
            decay: gain,
        }
    };
    match law {
        Law::Weights | Law::Beta(_) => descent,
        Law::Centroidal => centroidal(),
        Law::Voronoi => voronoi(),
        Law::Combined => centroidal() + voronoi(),
    }
}

/// Controls of all agents, all computed from the same snapshot.
pub fn controls(law: &Law, eval: &Evaluation, gens: &GeneratorSet, params: &LawParams) -> Result<Vec<Control>> {
    let bundle = GradientBundle::new(eval, gens, law.targets(params))?;
    Ok((0..gens.len())
        .map(|i| agent_control(law, eval, gens, &bundle, params, i))
        .collect())
}

/// `⟨∇H, (dw, dg)⟩`, the rate of change of the objective under `controls`.
pub fn objective_rate(bundle: &GradientBundle, controls: &[Control]) -> f64 {
    controls
        .iter()
        .enumerate()
        .map(|(i, c)| bundle.dh_dw[i] * c.dw + bundle.dh_dg[i].dot(c.dg))
        .sum()
}
