//! Calibration errors, metric errors and the devices they are evaluated on.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dist::{rms_deviation, Distribution1D, MASS_TOLERANCE};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Axis, GridSpec};
use crate::pointer::SequentialDevice;
use crate::povm::{covariant_calibration_error, marginal, CovariantMeasurement};
use crate::state::{distribution, gaussian_state, MixedState, PureState};
use crate::transport::wasserstein2;

/// Something that turns an input state into a distribution of one observable.
pub trait MarginalDevice: Send + Sync {
    fn axis(&self) -> Axis;
    fn output(&self, rho: &MixedState) -> Result<Distribution1D>;
    fn describe(&self) -> String;
}

/// Output of `device` on `rho`, checked for unit and normalization.
pub fn checked_output(device: &dyn MarginalDevice, rho: &MixedState) -> Result<Distribution1D> {
    let out = device.output(rho)?;
    if out.unit() != device.axis() {
        return Err(Error::AxisMismatch {
            expected: device.axis(),
            actual: out.unit(),
        });
    }
    let mass = out.mass();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NotNormalized { mass });
    }
    Ok(out)
}

/// The sharp observable itself.
#[derive(Debug, Clone, Copy)]
pub struct IdealDevice(pub Axis);

impl MarginalDevice for IdealDevice {
    fn axis(&self) -> Axis {
        self.0
    }

    fn output(&self, rho: &MixedState) -> Result<Distribution1D> {
        distribution(rho, self.0)
    }

    fn describe(&self) -> String {
        format!("ideal {}", self.0.name())
    }
}

#[derive(Debug, Clone)]
pub struct CovariantMarginal {
    pub measurement: Arc<CovariantMeasurement>,
    pub axis: Axis,
    pub label: String,
}

impl MarginalDevice for CovariantMarginal {
    fn axis(&self) -> Axis {
        self.axis
    }

    fn output(&self, rho: &MixedState) -> Result<Distribution1D> {
        marginal(&self.measurement, rho, self.axis)
    }

    fn describe(&self) -> String {
        format!("covariant {} marginal ({})", self.axis.name(), self.label)
    }
}

#[derive(Debug, Clone)]
pub struct SequentialMarginal {
    pub device: Arc<SequentialDevice>,
    pub axis: Axis,
    pub label: String,
}

impl MarginalDevice for SequentialMarginal {
    fn axis(&self) -> Axis {
        self.axis
    }

    fn output(&self, rho: &MixedState) -> Result<Distribution1D> {
        self.device.output(self.axis, rho)
    }

    fn describe(&self) -> String {
        let which = match self.axis {
            Axis::Position => "pointer readout",
            Axis::Momentum => "disturbed momentum",
        };
        format!("sequential {which} ({})", self.label)
    }
}

/// Device defined by a closure, for ad hoc experiments.
pub struct FnDevice<F> {
    pub axis: Axis,
    pub name: String,
    pub f: F,
}

impl<F> MarginalDevice for FnDevice<F>
where
    F: Fn(&MixedState) -> Result<Distribution1D> + Send + Sync,
{
    fn axis(&self) -> Axis {
        self.axis
    }

    fn output(&self, rho: &MixedState) -> Result<Distribution1D> {
        (self.f)(rho)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Strictly decreasing positive tolerances `eps_1 > ... > eps_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonSchedule {
    values: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSchedule(format!(
                "non-positive tolerance {v}"
            )));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "not strictly decreasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(EpsilonSchedule { values })
    }

    /// `start * ratio^k` for `k < count`, with values below `floor` replaced
    /// by `floor` and duplicates dropped.
    pub fn geometric(start: f64, ratio: f64, count: usize, floor: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "ratio {ratio} not in (0, 1)"
            )));
        }
        let mut values: Vec<f64> = Vec::new();
        let mut eps = start;
        for _ in 0..count {
            let v = eps.max(floor);
            if values.last().is_none_or(|&last| v < last) {
                values.push(v);
            }
            eps *= ratio;
        }
        Self::new(values)
    }

    /// Halving from one, six steps, floored at four grid spacings along `axis`.
    pub fn standard(grid: &GridSpec, axis: Axis) -> Result<Self> {
        Self::geometric(1.0, 0.5, 6, grid_floor(grid, axis))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl TryFrom<Vec<f64>> for EpsilonSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsilonSchedule> for Vec<f64> {
    fn from(s: EpsilonSchedule) -> Self {
        s.values
    }
}

/// Smallest tolerance the grid resolves along `axis`.
pub fn grid_floor(grid: &GridSpec, axis: Axis) -> f64 {
    4.0 * grid.spacing(axis)
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub xi: f64,
    pub tier: usize,
    /// rms deviation of the ideal distribution from `xi`.
    pub deviation: f64,
    pub state: MixedState,
}

/// States approximately concentrated at known values of one observable.
#[derive(Debug, Clone)]
pub struct CalibrationFamily {
    axis: Axis,
    grid: GridSpec,
    members: Vec<FamilyMember>,
    descriptor: String,
}

impl CalibrationFamily {
    /// Computes each member's deviation from its target value.
    pub fn new(
        axis: Axis,
        states: Vec<(f64, usize, MixedState)>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let grid = *states
            .first()
            .ok_or_else(|| Error::InvalidArgument("calibration family has no members".into()))?
            .2
            .grid();
        let members = exec::map_slice(&states, |(xi, tier, state)| {
            if *state.grid() != grid {
                return Err(Error::GridMismatch(
                    "family members on different grids".into(),
                ));
            }
            Ok(FamilyMember {
                xi: *xi,
                tier: *tier,
                deviation: rms_deviation(&distribution(state, axis)?, *xi)?,
                state: state.clone(),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
        Ok(CalibrationFamily {
            axis,
            grid,
            members,
            descriptor: descriptor.into(),
        })
    }

    /// Gaussian packets centred at each `xi` with spread `eps/sqrt(2) * r`
    /// along `axis`, one tier per tolerance in `schedule`.
    ///
    /// Every member of tier `k` is checked to lie within `eps_k` of its target.
    pub fn gaussian(
        grid: &GridSpec,
        axis: Axis,
        schedule: &EpsilonSchedule,
        xis: &[f64],
        ratios: &[f64],
    ) -> Result<Self> {
        let mut states = Vec::new();
        for (tier, &eps) in schedule.values().iter().enumerate() {
            for &r in ratios {
                let width = eps / 2f64.sqrt() * r;
                for &xi in xis {
                    let psi = match axis {
                        Axis::Position => gaussian_state(grid, xi, 0.0, width)?,
                        Axis::Momentum => gaussian_state(grid, 0.0, xi, grid.hbar / (2.0 * width))?,
                    };
                    states.push((xi, tier, MixedState::pure(psi)));
                }
            }
        }
        let descriptor = format!(
            "gaussian {} family: {} targets in [{}, {}], width ratios {:?}",
            axis.name(),
            xis.len(),
            xis.first().copied().unwrap_or(0.0),
            xis.last().copied().unwrap_or(0.0),
            ratios
        );
        let family = Self::new(axis, states, descriptor)?;
        for m in &family.members {
            let eps = schedule.values()[m.tier];
            if m.deviation > eps {
                return Err(Error::InvalidArgument(format!(
                    "member at {} (tier {}) deviates by {} > {eps}",
                    m.xi, m.tier, m.deviation
                )));
            }
        }
        Ok(family)
    }

    /// Nine targets over `[-3, 3]` and width ratios `1, 3/4, 1/2`.
    pub fn standard(grid: &GridSpec, axis: Axis, schedule: &EpsilonSchedule) -> Result<Self> {
        let xis: Vec<f64> = (0..9).map(|i| -3.0 + 0.75 * i as f64).collect();
        Self::gaussian(grid, axis, schedule, &xis, &[1.0, 0.75, 0.5])
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn states(&self) -> Vec<MixedState> {
        self.members.iter().map(|m| m.state.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Limit of per-tolerance suprema over a calibration family.
    FamilyLimit,
    /// Exact noise size of a covariant measurement.
    CovariantShortcut,
    /// Largest transport distance over a finite probe set.
    ProbeSupremum,
    /// Spread of a single state.
    Spread,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FamilyLimit => "family_limit",
            Method::CovariantShortcut => "covariant_shortcut",
            Method::ProbeSupremum => "probe_supremum",
            Method::Spread => "spread",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSup {
    pub epsilon: f64,
    /// Supremum over every member within `epsilon` of its target.
    pub sup: f64,
    /// Calibration deviation of the member attaining `sup`.
    pub deviation: f64,
    /// Supremum over the members generated for this tolerance only.
    pub tier_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub axis: Axis,
    pub method: Method,
    /// `None` when the estimate diverges.
    pub value: Option<f64>,
    pub per_epsilon: Vec<EpsilonSup>,
    pub converged: bool,
    /// True when `value` is a supremum over a finite search set.
    pub lower_bound: bool,
    pub family: String,
    /// Index of the maximizing probe state, for probe suprema.
    pub maximizer: Option<usize>,
}

impl ErrorEstimate {
    pub fn is_unbounded(&self) -> bool {
        self.value.is_none()
    }

    /// Per-tolerance suprema are nonincreasing as the tolerance shrinks.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.per_epsilon
            .windows(2)
            .all(|w| w[1].sup <= w[0].sup + slack)
    }
}

impl fmt::Display for ErrorEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{v:.6}")?,
            None => write!(f, "unbounded")?,
        }
        write!(f, " ({}, {})", self.axis.name(), self.method.name())
    }
}

/// Relative Cauchy tolerance on the last two extrapolated limits.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;
/// Growth of the tier suprema over the last two steps that signals divergence.
pub const DIVERGENCE_GROWTH: f64 = 10.0;

/// Linear extrapolation of `sup^2` against `deviation^2` to zero deviation,
/// one value per tolerance after the first.
///
/// Each point is paired with the nearest earlier point of different
/// deviation. Exact when the device adds independent noise, since the
/// output's mean square deviation is then `deviation^2 + noise^2`.
fn extrapolations(per_epsilon: &[EpsilonSup]) -> Vec<f64> {
    (1..per_epsilon.len())
        .map(|k| {
            let cur = &per_epsilon[k];
            let d1 = cur.deviation.powi(2);
            let prev = per_epsilon[..k]
                .iter()
                .rev()
                .find(|e| (e.deviation.powi(2) - d1).abs() > 1e-12 * d1.max(1e-300));
            match prev {
                None => cur.sup,
                Some(prev) => {
                    let d0 = prev.deviation.powi(2);
                    let (s0, s1) = (prev.sup.powi(2), cur.sup.powi(2));
                    ((d0 * s1 - d1 * s0) / (d0 - d1))
                        .max(0.0)
                        .sqrt()
                        .min(cur.sup)
                }
            }
        })
        .collect()
}

/// Calibration error of `device` estimated from `family`.
///
/// For each tolerance the supremum of the output's rms deviation from the
/// target is taken over all members within that tolerance, so the sequence
/// is nonincreasing. The reported value extrapolates the last two suprema
/// to zero deviation; it has converged when the last two extrapolations agree
/// to [`CONVERGENCE_TOLERANCE`] relative. Growth of the tier suprema by more
/// than [`DIVERGENCE_GROWTH`] over the last two steps, ending beyond half the
/// grid range, marks the estimate unbounded.
pub fn calibration_error(
    device: &dyn MarginalDevice,
    family: &CalibrationFamily,
    schedule: &EpsilonSchedule,
) -> Result<ErrorEstimate> {
    let axis = device.axis();
    if family.axis() != axis {
        return Err(Error::AxisMismatch {
            expected: axis,
            actual: family.axis(),
        });
    }
    let floor = grid_floor(family.grid(), axis);
    if schedule.last() < floor * (1.0 - 1e-12) {
        return Err(Error::InvalidSchedule(format!(
            "last tolerance {} is below the grid floor {floor}",
            schedule.last()
        )));
    }
    let values: Vec<f64> = exec::map_slice(family.members(), |m| {
        rms_deviation(&checked_output(device, &m.state)?, m.xi)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let slack = 1.0 + 1e-12;
    let mut per_epsilon = Vec::with_capacity(schedule.len());
    for (tier, &eps) in schedule.values().iter().enumerate() {
        let mut best: Option<(f64, f64)> = None;
        let mut tier_sup: Option<f64> = None;
        for (m, &v) in family.members().iter().zip(&values) {
            if m.deviation <= eps * slack && best.is_none_or(|(s, _)| v > s) {
                best = Some((v, m.deviation));
            }
            if m.tier == tier {
                tier_sup = Some(tier_sup.map_or(v, |t: f64| t.max(v)));
            }
        }
        let (sup, deviation) = best.ok_or(Error::EmptyFamily(eps))?;
        per_epsilon.push(EpsilonSup {
            epsilon: eps,
            sup,
            deviation,
            tier_sup,
        });
    }

    let k = per_epsilon.len();
    let limits = extrapolations(&per_epsilon);
    let last = limits.last().copied().unwrap_or(per_epsilon[k - 1].sup);
    let converged = limits.len() >= 2 && {
        let prev = limits[limits.len() - 2];
        (last - prev).abs() <= CONVERGENCE_TOLERANCE * last.max(1e-3)
    };

    let half_range = match axis {
        Axis::Position => family.grid().length() / 2.0,
        Axis::Momentum => family.grid().momentum_range().1,
    };
    let tiers: Vec<f64> = per_epsilon.iter().filter_map(|e| e.tier_sup).collect();
    let unbounded = tiers.len() >= 2 && {
        let end = tiers[tiers.len() - 1];
        let start = tiers[tiers.len().saturating_sub(3)];
        end > DIVERGENCE_GROWTH * start && end > half_range
    };

    Ok(ErrorEstimate {
        axis,
        method: Method::FamilyLimit,
        value: (!unbounded).then_some(last),
        per_epsilon,
        converged: converged && !unbounded,
        lower_bound: true,
        family: family.descriptor().to_string(),
        maximizer: None,
    })
}

/// Exact calibration error of a covariant marginal as an [`ErrorEstimate`].
pub fn covariant_estimate(m: &CovariantMeasurement, axis: Axis) -> Result<ErrorEstimate> {
    Ok(ErrorEstimate {
        axis,
        method: Method::CovariantShortcut,
        value: Some(covariant_calibration_error(m, axis)?),
        per_epsilon: Vec::new(),
        converged: true,
        lower_bound: false,
        family: "generating density".into(),
        maximizer: None,
    })
}

/// Largest transport distance between ideal and device outputs over `probes`.
///
/// A finite probe set only certifies a lower bound on the metric error.
pub fn global_error(device: &dyn MarginalDevice, probes: &[MixedState]) -> Result<ErrorEstimate> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("empty probe set".into()));
    }
    let axis = device.axis();
    let ideal = IdealDevice(axis);
    let dists: Vec<f64> = exec::map_slice(probes, |rho| {
        wasserstein2(&ideal.output(rho)?, &checked_output(device, rho)?)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let (index, value) =
        dists
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
    Ok(ErrorEstimate {
        axis,
        method: Method::ProbeSupremum,
        value: Some(value),
        per_epsilon: Vec::new(),
        converged: true,
        lower_bound: true,
        family: format!("{} probe states", probes.len()),
        maximizer: Some(index),
    })
}

/// Probe states for metric errors along `axis`: sharp eigenstates, the
/// calibration family, Gaussian mixtures and two-peak superpositions.
pub fn standard_probes(
    grid: &GridSpec,
    axis: Axis,
    family: &CalibrationFamily,
) -> Result<Vec<MixedState>> {
    let mut probes = Vec::new();
    for xi in [-1.0, 0.0, 1.5] {
        let sharp = match axis {
            Axis::Position => PureState::position_eigenstate(*grid, xi)?,
            Axis::Momentum => PureState::momentum_eigenstate(*grid, xi)?,
        };
        probes.push(MixedState::pure(sharp));
    }
    probes.extend(family.states());
    let w = (grid.hbar / 2.0).sqrt();
    probes.push(MixedState::mixture(vec![
        (0.5, gaussian_state(grid, -1.0, 0.5, w)?),
        (0.5, gaussian_state(grid, 1.5, -0.5, 0.7 * w)?),
    ])?);
    probes.push(MixedState::mixture(vec![
        (0.2, gaussian_state(grid, 0.0, 0.0, 0.5 * w)?),
        (0.3, gaussian_state(grid, 0.5, 1.0, w)?),
        (0.5, gaussian_state(grid, -0.5, -1.0, 1.5 * w)?),
    ])?);
    let one = Complex64::new(1.0, 0.0);
    for a in [1.5, 3.0] {
        let l = gaussian_state(grid, -a, 0.0, w)?;
        let r = gaussian_state(grid, a, 0.0, w)?;
        probes.push(PureState::superpose(&[(one, &l), (one, &r)])?.into());
        probes.push(PureState::superpose(&[(one, &l), (-one, &r)])?.into());
    }
    Ok(probes)
}
