//! Scenario parameters and the per-speed derived quantities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::EnvelopeError;

/// Slack used by every inequality check in the model and solver, in SI
/// units. Keeps feasibility decisions stable against rounding at branch
/// boundaries.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Scenario parameters: obstacle geometry, vehicle actuation limits,
/// perception range, localization drift rate and pipeline latency.
///
/// Wire names follow the conventional short symbols so config files read
/// like the parameter table they come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightParams {
    /// Obstacle half-width `r` (m).
    #[serde(rename = "r")]
    pub obstacle_radius: f64,
    /// Safety/inflation distance `d` (m); obstacles grow by this much in
    /// configuration space and the camera sits this far behind the hull.
    #[serde(rename = "d")]
    pub safety_margin: f64,
    /// Maximum lateral acceleration `a_max` (m/s²).
    #[serde(rename = "a_max")]
    pub accel_max: f64,
    /// Maximum lateral jerk `j_max` (m/s³).
    #[serde(rename = "j_max")]
    pub jerk_max: f64,
    /// Mean obstacle spacing `R` (m).
    #[serde(rename = "R")]
    pub obstacle_spacing: f64,
    /// Localization drift rate `e` (dimensionless): lateral map error per
    /// unit of forward travel.
    #[serde(rename = "e")]
    pub drift_rate: f64,
    /// Sensing range `S` (m).
    #[serde(rename = "S")]
    pub sensing_range: f64,
    /// Total observation-to-actuation latency `tau` (s).
    #[serde(rename = "tau")]
    pub latency: f64,
    /// Optional named latency terms (s); when present their sum must equal
    /// `tau` to within 1e-12 s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_components: Option<BTreeMap<String, f64>>,
}

impl FlightParams {
    /// The default scenario used throughout the docs and tests.
    pub fn defaults() -> Self {
        FlightParams {
            obstacle_radius: 0.1,
            safety_margin: 0.37,
            accel_max: 20.0,
            jerk_max: 120.0,
            obstacle_spacing: 3.0,
            drift_rate: 0.01,
            sensing_range: 6.0,
            latency: 0.01,
            latency_components: Some(BTreeMap::from([
                ("depth".to_string(), 0.004),
                ("position".to_string(), 0.006),
            ])),
        }
    }

    /// Inflated obstacle half-extent without drift: `r + d` (m).
    pub fn clearance_radius(&self) -> f64 {
        self.obstacle_radius + self.safety_margin
    }

    /// Forward distance available between detection and the obstacle
    /// plane in configuration space: `S - d` (m).
    pub fn perception_distance(&self) -> f64 {
        self.sensing_range - self.safety_margin
    }

    /// Checks every structural invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        let positive = [
            ("r", self.obstacle_radius),
            ("d", self.safety_margin),
            ("a_max", self.accel_max),
            ("j_max", self.jerk_max),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(EnvelopeError::InvalidParam {
                    field: name.to_string(),
                    message: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if !(self.sensing_range > self.safety_margin) {
            return Err(EnvelopeError::InvalidParam {
                field: "S".to_string(),
                message: format!(
                    "sensing range must exceed the safety margin d = {} m, got {} m",
                    self.safety_margin, self.sensing_range
                ),
            });
        }
        if !(self.obstacle_spacing > self.clearance_radius()) {
            return Err(EnvelopeError::InvalidParam {
                field: "R".to_string(),
                message: format!(
                    "obstacle spacing must exceed r + d = {} m, got {} m",
                    self.clearance_radius(),
                    self.obstacle_spacing
                ),
            });
        }
        if !(self.drift_rate >= 0.0) || !self.drift_rate.is_finite() {
            return Err(EnvelopeError::InvalidParam {
                field: "e".to_string(),
                message: format!("drift rate must be finite and >= 0, got {}", self.drift_rate),
            });
        }
        if !(self.latency >= 0.0) || !self.latency.is_finite() {
            return Err(EnvelopeError::InvalidParam {
                field: "tau".to_string(),
                message: format!("latency must be finite and >= 0, got {}", self.latency),
            });
        }
        if let Some(components) = &self.latency_components {
            let terms: Vec<(String, f64)> =
                components.iter().map(|(k, v)| (k.clone(), *v)).collect();
            let sum = total_latency(&terms)?;
            if (sum - self.latency).abs() > 1e-12 {
                return Err(EnvelopeError::InvalidParam {
                    field: "latency_components".to_string(),
                    message: format!(
                        "components sum to {sum} s but tau = {} s (tolerance 1e-12 s)",
                        self.latency
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Sums named latency terms. Terms are accumulated in ascending value
/// order so the result is exactly permutation-invariant.
pub fn total_latency(components: &[(String, f64)]) -> Result<f64, EnvelopeError> {
    for (name, value) in components {
        if !(*value >= 0.0) || !value.is_finite() {
            return Err(EnvelopeError::InvalidParam {
                field: format!("latency_components.{name}"),
                message: format!("latency term must be finite and >= 0, got {value}"),
            });
        }
    }
    let mut values: Vec<f64> = components.iter().map(|(_, v)| *v).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite latency terms"));
    Ok(values.iter().sum())
}

/// Quantities derived for one candidate forward speed: the lateral room
/// `L`, the avoidance duration `T` and the post-latency control window
/// `T' = T - tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Lateral room before the adjacent obstacle: `L = R - r - d` (m).
    pub return_distance: f64,
    /// Avoidance-stage duration `T = (S - d) / v_x` (s).
    pub stage1_duration: f64,
    /// Control window `T' = T - tau` (s); positive for feasible speeds.
    pub control_window: f64,
    /// Forward speed this derivation was computed for (m/s).
    pub forward_speed: f64,
}

impl DerivedParams {
    /// Derives the timing quantities for `forward_speed`, rejecting
    /// speeds whose control window closes before actuation starts.
    pub fn for_speed(params: &FlightParams, forward_speed: f64) -> Result<Self, EnvelopeError> {
        if !(forward_speed > 0.0) || !forward_speed.is_finite() {
            return Err(EnvelopeError::InvalidParam {
                field: "v_x".to_string(),
                message: format!("forward speed must be finite and > 0, got {forward_speed}"),
            });
        }
        let stage1_duration = params.perception_distance() / forward_speed;
        let control_window = stage1_duration - params.latency;
        if control_window <= 0.0 {
            return Err(EnvelopeError::InfeasibleLatency {
                forward_speed,
                stage1_duration,
                latency: params.latency,
            });
        }
        Ok(DerivedParams {
            return_distance: return_distance(params),
            stage1_duration,
            control_window,
            forward_speed,
        })
    }
}

/// Lateral room available before the adjacent obstacle: `L = R - r - d`.
pub fn return_distance(params: &FlightParams) -> f64 {
    params.obstacle_spacing - params.obstacle_radius - params.safety_margin
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_distance_matches_defaults() {
        let p = FlightParams::defaults();
        assert_eq!(return_distance(&p), 3.0 - 0.1 - 0.37);
    }

    #[test]
    fn return_distance_boundary_epsilon() {
        let mut p = FlightParams::defaults();
        let eps = 1e-6;
        p.obstacle_spacing = p.clearance_radius() + eps;
        p.validate().unwrap();
        assert!((return_distance(&p) - eps).abs() < 1e-15);
    }

    #[test]
    fn return_distance_open_world() {
        let mut p = FlightParams::defaults();
        p.obstacle_spacing = 1e6;
        assert!((return_distance(&p) - 1e6).abs() < 1.0);
    }

    #[test]
    fn spacing_invariant_rejected_with_field_name() {
        let mut p = FlightParams::defaults();
        p.obstacle_spacing = 0.4;
        let err = p.validate().unwrap_err();
        match err {
            EnvelopeError::InvalidParam { field, .. } => assert_eq!(field, "R"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn latency_sum_is_order_independent() {
        let a = [
            ("a".to_string(), 1.0),
            ("b".to_string(), 2.0),
            ("c".to_string(), 3.0),
        ];
        let b = [
            ("c".to_string(), 3.0),
            ("a".to_string(), 1.0),
            ("b".to_string(), 2.0),
        ];
        assert_eq!(total_latency(&a).unwrap(), 6.0);
        assert_eq!(total_latency(&a).unwrap(), total_latency(&b).unwrap());
    }

    #[test]
    fn latency_empty_sum_is_zero() {
        assert_eq!(total_latency(&[]).unwrap(), 0.0);
    }

    #[test]
    fn latency_defaults_sum_matches_table() {
        let terms = [
            ("depth".to_string(), 0.004),
            ("position".to_string(), 0.006),
        ];
        assert!((total_latency(&terms).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn negative_latency_term_rejected() {
        let terms = [("depth".to_string(), -0.001)];
        assert!(total_latency(&terms).is_err());
    }

    #[test]
    fn inconsistent_components_rejected() {
        let mut p = FlightParams::defaults();
        p.latency = 0.02;
        let err = p.validate().unwrap_err();
        match err {
            EnvelopeError::InvalidParam { field, .. } => {
                assert_eq!(field, "latency_components")
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn latency_infeasible_speed_rejected() {
        let p = FlightParams::defaults();
        // T = 5.63 / v <= tau = 0.01 for v >= 563.
        let err = DerivedParams::for_speed(&p, 600.0).unwrap_err();
        assert!(matches!(err, EnvelopeError::InfeasibleLatency { .. }));
    }

    #[test]
    fn derived_params_identities() {
        let p = FlightParams::defaults();
        let dp = DerivedParams::for_speed(&p, 10.0).unwrap();
        assert_eq!(dp.stage1_duration * 10.0, p.perception_distance());
        assert_eq!(dp.control_window, dp.stage1_duration - p.latency);
    }
}
