//! Objective `H = Σ 1/λ_{V_i}` over power diagrams, its gradients, the
//! control laws built on them, and forward-Euler integration.
//!
//! Every agent's control is computed from its own cell, the faces it shares
//! with its neighbors, the neighbors' masses, and the positions of generators
//! within `big_delta` of it.

mod gains;
mod gradient;
mod law;
mod params;
mod step;

pub use gains::{collision_angle, psi, sat, theta};
pub use gradient::{grad_hv_tilde, grad_w_hv, hv_beta_value, hv_value, Evaluation, GradientBundle};
pub use law::{agent_control, centroidal_motion, controls, objective_rate, voronoi_terms, Control, Law};
pub use params::{LawParams, ParamOverrides};
pub use step::{AdvanceReport, Scheme, State, StepReport, Stepper, System, DESCENT_SLACK, MASS_FLOOR, MAX_HALVINGS};
