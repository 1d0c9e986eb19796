//! Verdicts on the preparation and measurement uncertainty relations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::metrics::{ErrorEstimate, Method};
use crate::state::{spread, MixedState};

/// Relative slack on `hbar/2` for the measurement relation.
pub const MEASUREMENT_SLACK: f64 = 2e-4;
/// Relative slack on `hbar/2` for the preparation relation.
pub const PREPARATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Preparation,
    Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub axis: Axis,
    /// `null` when unbounded.
    pub value: Option<f64>,
    pub method: Method,
    pub per_epsilon: Vec<[f64; 2]>,
    pub converged: bool,
    pub unbounded: bool,
    /// `"family lower bound"` for suprema over finite search sets.
    pub label: String,
}

impl From<&ErrorEstimate> for Component {
    fn from(e: &ErrorEstimate) -> Self {
        Component {
            axis: e.axis,
            value: e.value,
            method: e.method,
            per_epsilon: e.per_epsilon.iter().map(|s| [s.epsilon, s.sup]).collect(),
            converged: e.converged,
            unbounded: e.is_unbounded(),
            label: if e.lower_bound {
                "family lower bound"
            } else {
                "exact"
            }
            .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: Relation,
    pub hbar: f64,
    pub components: Vec<Component>,
    /// `null` when a component is unbounded.
    pub product: Option<f64>,
    pub bound: f64,
    pub margin: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl RelationReport {
    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }
}

/// Checks `dq * dp >= hbar/2` up to [`MEASUREMENT_SLACK`].
///
/// An unbounded component passes with a note, whatever the other one is.
pub fn verify_measurement_ur(
    dq: Option<&ErrorEstimate>,
    dp: Option<&ErrorEstimate>,
    hbar: f64,
) -> Result<RelationReport> {
    let (dq, dp) = match (dq, dp) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingEstimate),
    };
    let bound = hbar / 2.0;
    let components = vec![Component::from(dq), Component::from(dp)];
    let (product, margin, pass, note) = match (dq.value, dp.value) {
        (Some(a), Some(b)) => {
            let product = a * b;
            (
                Some(product),
                Some(product - bound),
                product >= bound * (1.0 - MEASUREMENT_SLACK),
                None,
            )
        }
        _ => (
            None,
            None,
            true,
            Some("unbounded component: the product is infinite".to_string()),
        ),
    };
    Ok(RelationReport {
        relation: Relation::Measurement,
        hbar,
        components,
        product,
        bound,
        margin,
        pass,
        note,
        subject: None,
        config_hash: None,
    })
}

/// Checks `spread_Q * spread_P >= hbar/2` for one state up to [`PREPARATION_SLACK`].
pub fn verify_preparation_ur(rho: &MixedState, hbar: f64) -> Result<RelationReport> {
    let component = |axis| -> Result<Component> {
        let value = spread(rho, axis)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteMoment);
        }
        Ok(Component {
            axis,
            value: Some(value),
            method: Method::Spread,
            per_epsilon: Vec::new(),
            converged: true,
            unbounded: false,
            label: "exact".into(),
        })
    };
    let components = vec![component(Axis::Position)?, component(Axis::Momentum)?];
    let product = components[0].value.unwrap_or(0.0) * components[1].value.unwrap_or(0.0);
    let bound = hbar / 2.0;
    Ok(RelationReport {
        relation: Relation::Preparation,
        hbar,
        components,
        product: Some(product),
        bound,
        margin: Some(product - bound),
        pass: product >= bound * (1.0 - PREPARATION_SLACK),
        note: None,
        subject: None,
        config_hash: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::metrics::covariant_estimate;
    use crate::povm::{from_pure, CovariantMeasurement};
    use crate::state::{gaussian_state, vacuum, PureState};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn grid() -> GridSpec {
        GridSpec::balanced(1024, 1.0).unwrap()
    }

    fn product_for(m: &CovariantMeasurement) -> RelationReport {
        let dq = covariant_estimate(m, Axis::Position).unwrap();
        let dp = covariant_estimate(m, Axis::Momentum).unwrap();
        verify_measurement_ur(Some(&dq), Some(&dp), 1.0).unwrap()
    }

    #[test]
    fn vacuum_device_is_an_equality_case() {
        let r = product_for(&from_pure(vacuum(&grid()).unwrap()).unwrap());
        assert!(r.pass);
        assert_abs_diff_eq!(r.product.unwrap(), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn squeezed_device_is_an_equality_case() {
        let r = product_for(&from_pure(gaussian_state(&grid(), 0.0, 0.0, 2.0).unwrap()).unwrap());
        assert_abs_diff_eq!(r.components[0].value.unwrap(), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.components[1].value.unwrap(), 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(r.product.unwrap(), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn thermal_mixture_has_a_positive_margin() {
        let g = grid();
        let sigma = MixedState::mixture(vec![
            (0.5, vacuum(&g).unwrap()),
            (0.5, gaussian_state(&g, 0.0, 0.0, 2.0).unwrap()),
        ])
        .unwrap();
        let r = product_for(&CovariantMeasurement::new(sigma).unwrap());
        assert!(r.pass);
        assert!(r.margin.unwrap() > 0.1);
    }

    #[test]
    fn unbounded_component_passes_with_a_note() {
        let m = from_pure(vacuum(&grid()).unwrap()).unwrap();
        let dq = covariant_estimate(&m, Axis::Position).unwrap();
        let mut dp = dq.clone();
        dp.axis = Axis::Momentum;
        dp.value = None;
        let r = verify_measurement_ur(Some(&dq), Some(&dp), 1.0).unwrap();
        assert!(r.pass && r.product.is_none() && r.note.is_some());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["product"].is_null());
        assert_eq!(json["components"][1]["unbounded"], true);
        assert!(matches!(
            verify_measurement_ur(None, None, 1.0),
            Err(Error::MissingEstimate)
        ));
    }

    #[test]
    fn violation_fails() {
        let m = from_pure(vacuum(&grid()).unwrap()).unwrap();
        let mut dq = covariant_estimate(&m, Axis::Position).unwrap();
        let dp = covariant_estimate(&m, Axis::Momentum).unwrap();
        dq.value = Some(0.5);
        let r = verify_measurement_ur(Some(&dq), Some(&dp), 1.0).unwrap();
        assert!(!r.pass);
        assert!(r.margin.unwrap() < 0.0);
    }

    #[test]
    fn preparation_examples() {
        let g = grid();
        let v = verify_preparation_ur(&vacuum(&g).unwrap().into(), 1.0).unwrap();
        assert!(v.pass);
        assert_abs_diff_eq!(v.product.unwrap(), 0.5, epsilon = 1e-6);
        let sq =
            verify_preparation_ur(&gaussian_state(&g, 0.0, 0.0, 0.2).unwrap().into(), 1.0).unwrap();
        assert_abs_diff_eq!(sq.product.unwrap(), 0.5, epsilon = 1e-6);
        let w = (0.5f64).sqrt();
        let one = Complex64::new(1.0, 0.0);
        let cat = PureState::superpose(&[
            (one, &gaussian_state(&g, -3.0, 0.0, w).unwrap()),
            (one, &gaussian_state(&g, 3.0, 0.0, w).unwrap()),
        ])
        .unwrap();
        let c = verify_preparation_ur(&cat.into(), 1.0).unwrap();
        assert!(c.pass && c.product.unwrap() > 0.5);
    }

    #[test]
    fn json_schema() {
        let r = verify_preparation_ur(&vacuum(&grid()).unwrap().into(), 1.0).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "relation",
            "hbar",
            "components",
            "product",
            "bound",
            "margin",
            "pass",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["relation"], "preparation");
        let c = &json["components"][0];
        for key in [
            "axis",
            "value",
            "method",
            "per_epsilon",
            "converged",
            "unbounded",
        ] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        let back: RelationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
