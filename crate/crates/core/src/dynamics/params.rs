use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexPolygon;

/// Free constants of the control laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawParams {
    /// Scale of the arctan speed factor in the centroidal law.
    pub alpha: f64,
    /// Sharpness of the smooth step gating centroidal motion.
    pub beta_theta: f64,
    /// Radius inside which other generators damp motion.
    pub big_delta: f64,
    /// Radius below which motion toward another generator stops.
    pub small_delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Desired share of the total measure per cell; `None` means equal shares.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_fractions: Option<Vec<f64>>,
}

/// Partial [`LawParams`], as read from a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub beta_theta: Option<f64>,
    pub big_delta: Option<f64>,
    pub small_delta: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub target_fractions: Option<Vec<f64>>,
}

impl LawParams {
    /// Defaults scaled to the workspace diameter.
    pub fn for_region(region: &ConvexPolygon) -> Self {
        let diam = region.diameter();
        let big_delta = 0.1 * diam;
        Self {
            alpha: 1e-3,
            beta_theta: 10.0,
            big_delta,
            small_delta: big_delta / 4.0,
            eps1: 1e-4,
            eps2: 1e-3,
            eps3: 0.05 * diam,
            target_fractions: None,
        }
    }

    pub fn with_overrides(mut self, o: &ParamOverrides) -> Self {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut self.alpha, o.alpha);
        set(&mut self.beta_theta, o.beta_theta);
        // Overriding Δ alone keeps δ at a quarter of it.
        if let (Some(big), None) = (o.big_delta, o.small_delta) {
            self.small_delta = big / 4.0;
        }
        set(&mut self.big_delta, o.big_delta);
        set(&mut self.small_delta, o.small_delta);
        set(&mut self.eps1, o.eps1);
        set(&mut self.eps2, o.eps2);
        set(&mut self.eps3, o.eps3);
        if o.target_fractions.is_some() {
            self.target_fractions.clone_from(&o.target_fractions);
        }
        self
    }

    /// Checks every field; `m` is the number of generators the targets must cover.
    pub fn validate(&self, m: usize) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta_theta", self.beta_theta),
            ("big_delta", self.big_delta),
            ("small_delta", self.small_delta),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.small_delta >= self.big_delta {
            return Err(Error::InvalidParams(format!(
                "small_delta ({}) must be below big_delta ({})",
                self.small_delta, self.big_delta
            )));
        }
        if self.eps1 >= self.eps2 {
            return Err(Error::InvalidParams(format!(
                "eps1 ({}) must be below eps2 ({})",
                self.eps1, self.eps2
            )));
        }
        if let Some(beta) = &self.target_fractions {
            validate_fractions(beta, m)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_fractions(beta: &[f64], m: usize) -> Result<()> {
    if beta.len() != m {
        return Err(Error::InvalidParams(format!(
            "{} target fractions for {m} generators",
            beta.len()
        )));
    }
    if beta.iter().any(|b| !(*b > 0.0 && *b < 1.0)) && m > 1 {
        return Err(Error::InvalidParams("target fractions must lie in (0, 1)".into()));
    }
    let sum: f64 = beta.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!("target fractions sum to {sum}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_defaults() {
        let p = LawParams::for_region(&ConvexPolygon::unit_square());
        let d = 2f64.sqrt();
        assert!((p.big_delta - 0.1 * d).abs() < 1e-15);
        assert!((p.small_delta - 0.025 * d).abs() < 1e-15);
        assert!((p.eps3 - 0.05 * d).abs() < 1e-15);
        p.validate(3).unwrap();
    }

    #[test]
    fn overrides_apply() {
        let base = LawParams::for_region(&ConvexPolygon::unit_square());
        let o: ParamOverrides = serde_json::from_str(r#"{"alpha": 0.5, "big_delta": 0.2}"#).unwrap();
        let p = base.with_overrides(&o);
        assert_eq!(p.alpha, 0.5);
        assert_eq!(p.big_delta, 0.2);
        assert_eq!(p.small_delta, 0.05);
        assert!(serde_json::from_str::<ParamOverrides>(r#"{"alhpa": 1}"#).is_err());
    }

    #[test]
    fn rejects_inconsistent_values() {
        let base = LawParams::for_region(&ConvexPolygon::unit_square());
        let mut p = base.clone();
        p.eps1 = p.eps2;
        assert!(p.validate(2).is_err());
        let mut p = base.clone();
        p.small_delta = p.big_delta * 2.0;
        assert!(p.validate(2).is_err());
        let mut p = base;
        p.target_fractions = Some(vec![0.5, 0.6]);
        assert!(p.validate(2).is_err());
        p.target_fractions = Some(vec![0.5, 0.5]);
        assert!(p.validate(3).is_err());
        p.validate(2).unwrap();
    }
}
