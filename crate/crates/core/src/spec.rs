//! Declarative state descriptions, as used in suite configuration files.
//!
//! ```json
//! {"kind": "mixture", "components": [
//!   {"weight": 0.5, "state": {"kind": "vacuum"}},
//!   {"weight": 0.5, "state": {"kind": "gaussian", "q0": 1.0, "sigma_x": 0.4}}
//! ]}
//! ```

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::state::{gaussian_state, vacuum, MixedState, PureState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    /// `sigma_x` defaults to the vacuum width `sqrt(hbar/2)`.
    Gaussian {
        #[serde(default)]
        q0: f64,
        #[serde(default)]
        p0: f64,
        #[serde(default)]
        sigma_x: Option<f64>,
    },
    PositionEigenstate {
        x: f64,
    },
    MomentumEigenstate {
        p: f64,
    },
    Superposition {
        terms: Vec<Term>,
    },
    Mixture {
        components: Vec<Weighted>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// `[re, im]`.
    #[serde(default = "unit_coefficient")]
    pub coeff: [f64; 2],
    pub state: StateSpec,
}

fn unit_coefficient() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weighted {
    pub weight: f64,
    pub state: StateSpec,
}

impl StateSpec {
    pub fn gaussian(q0: f64, p0: f64, sigma_x: f64) -> Self {
        StateSpec::Gaussian {
            q0,
            p0,
            sigma_x: Some(sigma_x),
        }
    }

    /// Equal-weight superposition of two vacuum-width packets at `-a` and `a`.
    pub fn cat(a: f64, sign: f64) -> Self {
        StateSpec::Superposition {
            terms: vec![
                Term {
                    coeff: [1.0, 0.0],
                    state: StateSpec::Gaussian {
                        q0: -a,
                        p0: 0.0,
                        sigma_x: None,
                    },
                },
                Term {
                    coeff: [sign, 0.0],
                    state: StateSpec::Gaussian {
                        q0: a,
                        p0: 0.0,
                        sigma_x: None,
                    },
                },
            ],
        }
    }

    pub fn build(&self, grid: &GridSpec) -> Result<MixedState> {
        match self {
            StateSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidWeights("mixture without components".into()));
                }
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.state.build_pure(grid)?)))
                    .collect::<Result<Vec<_>>>()?;
                MixedState::mixture(parts)
            }
            other => Ok(MixedState::pure(other.build_pure(grid)?)),
        }
    }

    /// Fails for mixtures.
    pub fn build_pure(&self, grid: &GridSpec) -> Result<PureState> {
        match self {
            StateSpec::Vacuum => vacuum(grid),
            StateSpec::Gaussian { q0, p0, sigma_x } => {
                gaussian_state(grid, *q0, *p0, sigma_x.unwrap_or((grid.hbar / 2.0).sqrt()))
            }
            StateSpec::PositionEigenstate { x } => PureState::position_eigenstate(*grid, *x),
            StateSpec::MomentumEigenstate { p } => PureState::momentum_eigenstate(*grid, *p),
            StateSpec::Superposition { terms } => {
                let built = terms
                    .iter()
                    .map(|t| {
                        Ok((
                            Complex64::new(t.coeff[0], t.coeff[1]),
                            t.state.build_pure(grid)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<(Complex64, &PureState)> =
                    built.iter().map(|(c, s)| (*c, s)).collect();
                PureState::superpose(&refs)
            }
            StateSpec::Mixture { .. } => Err(Error::InvalidArgument(
                "a mixture cannot be used where a pure state is required".into(),
            )),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Vacuum => write!(f, "vacuum"),
            StateSpec::Gaussian { q0, p0, sigma_x } => match sigma_x {
                Some(s) => write!(f, "gaussian(q0={q0}, p0={p0}, sigma_x={s})"),
                None => write!(f, "gaussian(q0={q0}, p0={p0})"),
            },
            StateSpec::PositionEigenstate { x } => write!(f, "position eigenstate at {x}"),
            StateSpec::MomentumEigenstate { p } => write!(f, "momentum eigenstate at {p}"),
            StateSpec::Superposition { terms } => {
                write!(f, "superposition of {} terms", terms.len())
            }
            StateSpec::Mixture { components } => {
                write!(f, "mixture of {} components", components.len())
            }
        }
    }
}
