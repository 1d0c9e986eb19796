//! Sequential measurement: a von Neumann pointer reads out position, then
//! momentum is measured ideally.
//!
//! The pointer starts in `phi` and is shifted by `lambda * x`; reading it at
//! `y` leaves the system in `chi_y(x) = phi(y - lambda x) psi(x)`. Outcomes
//! are reported as `u = y / lambda`, which is the same as running the model
//! at unit coupling with the rescaled probe `phi_l(z) = sqrt(lambda) phi(lambda z)`.
//! All sums over pointer outcomes use the input grid (`du = dx`) with
//! periodic index arithmetic.

use num_complex::Complex64;

use crate::dist::{sup_norm_diff, Distribution1D};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Axis, GridSpec};
use crate::povm::{marginal, CovariantMeasurement};
use crate::state::{
    boundary_mass, gaussian_state, MixedState, PureState, ALIASING_LIMIT, BOUNDARY_MASS_LIMIT,
};

/// Sup-norm tolerance of the covariant equivalence check.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-4;

/// Pointer outcomes handled per parallel task.
const BLOCK: usize = 32;

#[derive(Debug, Clone)]
pub struct VonNeumannModel {
    probe: PureState,
    lambda: f64,
    effective: PureState,
}

impl VonNeumannModel {
    pub fn new(probe: PureState, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be positive, got {lambda}"
            )));
        }
        let g = *probe.grid();
        if !g.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let effective = if lambda == 1.0 {
            probe.clone()
        } else {
            let mom = probe.momentum_amplitudes(&g.fourier());
            let (lo, hi) = g.position_range();
            // The interpolant is periodic; the probe itself vanishes off the grid.
            let amps = g
                .positions()
                .into_iter()
                .map(|z| {
                    let t = lambda * z;
                    if t < lo || t >= hi {
                        Complex64::new(0.0, 0.0)
                    } else {
                        probe.evaluate(&mom, t) * lambda.sqrt()
                    }
                })
                .collect();
            PureState::normalized(g, amps)?
        };
        Ok(VonNeumannModel {
            probe,
            lambda,
            effective,
        })
    }

    pub fn probe(&self) -> &PureState {
        &self.probe
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grid(&self) -> &GridSpec {
        self.probe.grid()
    }

    /// The unit-coupling probe `sqrt(lambda) phi(lambda z)`.
    pub fn effective_probe(&self) -> &PureState {
        &self.effective
    }

    fn check_grid(&self, g: &GridSpec) -> Result<()> {
        if g != self.grid() {
            return Err(Error::GridMismatch(
                "input and probe live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `phi_l(x_i - x_j)` with the offset wrapped onto the grid.
    fn probe_offset(&self, i: usize, j: usize) -> Complex64 {
        let n = self.grid().n;
        self.effective.amplitudes()[(i + n + n / 2 - j) % n]
    }
}

/// Unnormalized post-measurement state for the pointer reading `y`.
#[derive(Debug, Clone)]
pub struct ConditionalState {
    pub y: f64,
    pub amplitudes: Vec<Complex64>,
    dx: f64,
}

impl ConditionalState {
    /// `||chi_y||^2`, the density of the reading `y`.
    pub fn weight(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dx
    }
}

/// `chi_y(x) = phi(y - lambda x) psi(x)` on the input grid.
pub fn conditional_state(
    model: &VonNeumannModel,
    input: &PureState,
    y: f64,
) -> Result<ConditionalState> {
    let g = *input.grid();
    model.check_grid(&g)?;
    let lambda = model.lambda;
    let phi = &model.probe;
    let n = g.n as isize;
    let amplitudes = if lambda == 1.0 && g.node_offset(Axis::Position, y).is_some() {
        let shift = g.node_offset(Axis::Position, y).unwrap_or(0);
        // y - x_j is probe node (shift - j + n) mod n.
        (0..n)
            .map(|j| {
                let k = (shift - j + n).rem_euclid(n) as usize;
                phi.amplitudes()[k] * input.amplitudes()[j as usize]
            })
            .collect()
    } else {
        let mom = phi.momentum_amplitudes(&g.fourier());
        (0..g.n)
            .map(|j| phi.evaluate(&mom, y - lambda * g.x(j)) * input.amplitudes()[j])
            .collect()
    };
    Ok(ConditionalState {
        y,
        amplitudes,
        dx: g.dx,
    })
}

/// Distribution of the reported pointer value `u = y / lambda`.
pub fn effective_position_distribution(
    model: &VonNeumannModel,
    input: &MixedState,
) -> Result<Distribution1D> {
    let g = *input.grid();
    model.check_grid(&g)?;
    let n = g.n;
    let noise: Vec<f64> = model
        .effective
        .amplitudes()
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let mut weights = vec![0.0; n];
    for (w, s) in input.components() {
        for (acc, a) in weights.iter_mut().zip(s.amplitudes()) {
            *acc += w * a.norm_sqr();
        }
    }
    let support: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    let dens = exec::map_indices(n, |i| {
        support
            .iter()
            .map(|&(j, v)| noise[(i + n + n / 2 - j) % n] * v)
            .sum::<f64>()
            * g.dx
    });
    let mass = boundary_mass(&g, &dens.iter().map(|f| f * g.dx).collect::<Vec<_>>());
    if mass > BOUNDARY_MASS_LIMIT {
        return Err(Error::SupportOverflow {
            mass,
            context: "pointer readout".into(),
        });
    }
    Distribution1D::new(Axis::Position, g.x0, g.dx, dens)
}

/// Momentum distribution after the pointer reading, summed over readings.
pub fn disturbed_momentum_distribution(
    model: &VonNeumannModel,
    input: &MixedState,
) -> Result<Distribution1D> {
    disturbed_momentum_by_bins(model, input, BLOCK)
}

/// As [`disturbed_momentum_distribution`], first summing the post-measurement
/// momentum densities within bins of `bin` consecutive pointer readings.
pub fn disturbed_momentum_by_bins(
    model: &VonNeumannModel,
    input: &MixedState,
    bin: usize,
) -> Result<Distribution1D> {
    let g = *input.grid();
    model.check_grid(&g)?;
    if bin == 0 {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let n = g.n;
    let fourier = g.fourier();
    let partials = exec::map_indices(n.div_ceil(bin), |b| {
        let mut acc = vec![0.0; n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut dens = vec![0.0; n];
        for i in b * bin..((b + 1) * bin).min(n) {
            for (w, s) in input.components() {
                for (j, (slot, a)) in buf.iter_mut().zip(s.amplitudes()).enumerate() {
                    *slot = model.probe_offset(i, j) * a;
                }
                fourier.momentum_density_into(&mut buf, &mut dens);
                for (o, d) in acc.iter_mut().zip(&dens) {
                    *o += w * d;
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; n];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    total.iter_mut().for_each(|t| *t *= g.dx);
    let dp = g.dp();
    let mass = boundary_mass(&g, &total.iter().map(|f| f * dp).collect::<Vec<_>>());
    if mass > ALIASING_LIMIT {
        return Err(Error::Aliasing {
            mass,
            threshold: ALIASING_LIMIT,
        });
    }
    Distribution1D::new(Axis::Momentum, g.p(0), dp, total)
}

/// Position then momentum readout of one [`VonNeumannModel`].
#[derive(Debug, Clone)]
pub struct SequentialDevice {
    pub model: VonNeumannModel,
}

impl SequentialDevice {
    pub fn new(model: VonNeumannModel) -> Self {
        SequentialDevice { model }
    }

    /// Output distribution of `Q'` (position) or `P'` (momentum).
    pub fn output(&self, axis: Axis, input: &MixedState) -> Result<Distribution1D> {
        match axis {
            Axis::Position => effective_position_distribution(&self.model, input),
            Axis::Momentum => disturbed_momentum_distribution(&self.model, input),
        }
    }
}

/// The covariant measurement with the same two marginals, `sigma(x) = phi_l(-x)^*`.
///
/// The match is verified on a few test states; a sup-norm deviation above
/// [`EQUIVALENCE_TOLERANCE`] is reported as [`Error::NotCovariantEquivalent`].
pub fn induced_covariant_sigma(model: &VonNeumannModel) -> Result<CovariantMeasurement> {
    let sigma = model.effective.parity_reflect()?.conjugate();
    let m = CovariantMeasurement::new(sigma.into())?;
    let g = *model.grid();
    let width = (g.hbar / 2.0).sqrt();
    let one = Complex64::new(1.0, 0.0);
    let left = gaussian_state(&g, -1.5, 0.0, width)?;
    let right = gaussian_state(&g, 1.5, 0.0, width)?;
    let tests: Vec<MixedState> = vec![
        gaussian_state(&g, 0.0, 0.0, width)?.into(),
        gaussian_state(&g, 0.7, -0.5, 0.6 * width)?.into(),
        PureState::superpose(&[(one, &left), (one, &right)])?.into(),
    ];
    let device = SequentialDevice::new(model.clone());
    let mut worst: f64 = 0.0;
    for rho in &tests {
        for axis in [Axis::Position, Axis::Momentum] {
            worst = worst.max(sup_norm_diff(
                &device.output(axis, rho)?,
                &marginal(&m, rho, axis)?,
            )?);
        }
    }
    if worst > EQUIVALENCE_TOLERANCE {
        return Err(Error::NotCovariantEquivalent {
            deviation: worst,
            tolerance: EQUIVALENCE_TOLERANCE,
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::convolve;
    use crate::povm::covariant_calibration_error;
    use crate::state::{distribution, vacuum};
    use crate::transport::wasserstein2;
    use approx::assert_abs_diff_eq;

    fn grid() -> GridSpec {
        GridSpec::balanced(512, 1.0).unwrap()
    }

    fn model(s: f64) -> VonNeumannModel {
        VonNeumannModel::new(gaussian_state(&grid(), 0.0, 0.0, s).unwrap(), 1.0).unwrap()
    }

    fn vac() -> MixedState {
        vacuum(&grid()).unwrap().into()
    }

    #[test]
    fn readings_are_complete() {
        let g = grid();
        let m = model(0.5);
        let psi = gaussian_state(&g, 0.4, 0.3, 0.8).unwrap();
        let total: f64 = (0..g.n)
            .map(|j| conditional_state(&m, &psi, g.x(j)).unwrap().weight())
            .sum::<f64>()
            * g.dx;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn off_node_readings_interpolate_the_probe() {
        let g = grid();
        let m = model(0.5);
        let psi = vacuum(&g).unwrap();
        let y = 0.3 * g.dx + 0.4;
        let chi = conditional_state(&m, &psi, y).unwrap();
        let on = conditional_state(&m, &psi, 5.0 * g.dx).unwrap();
        // The reading density is Gaussian with variance 1/2 + s^2.
        let density = |y: f64| (-y * y / 1.5).exp() / (1.5 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(chi.weight(), density(y), epsilon = 1e-9);
        assert_abs_diff_eq!(on.weight(), density(5.0 * g.dx), epsilon = 1e-9);
    }

    #[test]
    fn sharp_probe_concentrates_the_conditional_state() {
        let g = grid();
        let m = model(0.12);
        let psi = vacuum(&g).unwrap();
        let y = 40.0 * g.dx;
        let chi = conditional_state(&m, &psi, y).unwrap();
        let norm = chi.weight();
        let mean: f64 = chi
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| g.x(j) * a.norm_sqr())
            .sum::<f64>()
            * g.dx
            / norm;
        assert!((mean - y).abs() < 0.1 * y);
    }

    #[test]
    fn readout_is_a_convolution_with_the_probe() {
        let m = model(0.5);
        let out = effective_position_distribution(&m, &vac()).unwrap();
        assert_abs_diff_eq!(out.variance(), 0.75, epsilon = 1e-9);
        let noise = distribution(&m.effective_probe().clone().into(), Axis::Position).unwrap();
        let conv = convolve(&distribution(&vac(), Axis::Position).unwrap(), &noise).unwrap();
        assert!(sup_norm_diff(&out, &conv).unwrap() < 1e-5);
    }

    #[test]
    fn displaced_probe_shifts_the_readout() {
        let g = grid();
        let a = 10.0 * g.dx;
        let m = VonNeumannModel::new(gaussian_state(&g, a, 0.0, 0.5).unwrap(), 1.0).unwrap();
        let out = effective_position_distribution(&m, &vac()).unwrap();
        assert_abs_diff_eq!(out.mean(), a, epsilon = 1e-9);
    }

    #[test]
    fn sharp_probe_approaches_ideal_readout() {
        let g = GridSpec::new(1024, 40.0, 1.0).unwrap();
        let m = VonNeumannModel::new(gaussian_state(&g, 0.0, 0.0, 0.05).unwrap(), 1.0).unwrap();
        let rho: MixedState = vacuum(&g).unwrap().into();
        let out = effective_position_distribution(&m, &rho).unwrap();
        let ideal = distribution(&rho, Axis::Position).unwrap();
        assert!(wasserstein2(&ideal, &out).unwrap() <= 0.06);
    }

    #[test]
    fn kicks_have_the_conjugate_width() {
        let s = 0.8;
        let m = model(s);
        let rho: MixedState = gaussian_state(&grid(), 0.3, 0.5, 0.7).unwrap().into();
        let out = disturbed_momentum_distribution(&m, &rho).unwrap();
        let g = grid();
        let sp = 1.0 / (2.0 * s);
        let dens = g
            .momenta()
            .iter()
            .map(|p| (-p * p / (2.0 * sp * sp)).exp())
            .collect();
        let kick = Distribution1D::normalized(Axis::Momentum, g.p(0), g.dp(), dens).unwrap();
        let expect = convolve(&distribution(&rho, Axis::Momentum).unwrap(), &kick).unwrap();
        assert!(sup_norm_diff(&out, &expect).unwrap() < 1e-4);
    }

    #[test]
    fn strong_measurement_heats_the_momentum() {
        // s = 0.1: kick std 5, beyond +-6 sigma only if the grid is wide in momentum.
        let g = GridSpec::new(1024, 40.0, 1.0).unwrap();
        let m = VonNeumannModel::new(gaussian_state(&g, 0.0, 0.0, 0.1).unwrap(), 1.0).unwrap();
        let out = disturbed_momentum_distribution(&m, &vacuum(&g).unwrap().into()).unwrap();
        assert!((out.variance() - 25.5).abs() < 0.02 * 25.5);
    }

    #[test]
    fn binning_the_readings_changes_nothing() {
        let m = model(0.6);
        let rho: MixedState = gaussian_state(&grid(), -0.4, 0.2, 0.9).unwrap().into();
        let fine = disturbed_momentum_by_bins(&m, &rho, 1).unwrap();
        for bin in [7, 64, 512] {
            let coarse = disturbed_momentum_by_bins(&m, &rho, bin).unwrap();
            assert!(sup_norm_diff(&fine, &coarse).unwrap() < 1e-10);
        }
    }

    #[test]
    fn weak_measurement_barely_disturbs() {
        let ideal = distribution(&vac(), Axis::Momentum).unwrap();
        let mut last = f64::INFINITY;
        for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let out = disturbed_momentum_distribution(&model(s), &vac()).unwrap();
            let d = wasserstein2(&ideal, &out).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 0.1);
    }

    #[test]
    fn vacuum_width_probe_induces_the_vacuum() {
        let m = induced_covariant_sigma(&model((0.5f64).sqrt())).unwrap();
        let v = vacuum(&grid()).unwrap();
        let overlap = m.sigma().components()[0].1.inner(&v).norm_sqr();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn induced_sigma_carries_the_probe_widths() {
        for s in [0.25, 1.0, 2.0] {
            let m = induced_covariant_sigma(&model(s)).unwrap();
            let dq = covariant_calibration_error(&m, Axis::Position).unwrap();
            let dp = covariant_calibration_error(&m, Axis::Momentum).unwrap();
            assert_abs_diff_eq!(dq, s, epsilon = 1e-6);
            assert_abs_diff_eq!(dq * dp, 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn displaced_probe_induces_a_displaced_sigma() {
        let g = grid();
        let (s, a) = (0.5, 0.75);
        let m = VonNeumannModel::new(gaussian_state(&g, a, 0.0, s).unwrap(), 1.0).unwrap();
        let cm = induced_covariant_sigma(&m).unwrap();
        let dq = covariant_calibration_error(&cm, Axis::Position).unwrap();
        assert_abs_diff_eq!(dq, (s * s + a * a).sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn coupling_strength_rescales_the_probe() {
        let g = grid();
        let probe = gaussian_state(&g, 0.0, 0.0, 1.0).unwrap();
        let m = VonNeumannModel::new(probe, 2.0).unwrap();
        let out = effective_position_distribution(&m, &vac()).unwrap();
        // Readout noise std 1/lambda = 0.5.
        assert_abs_diff_eq!(out.variance(), 0.75, epsilon = 1e-6);
        assert!(VonNeumannModel::new(vacuum(&g).unwrap(), 0.0).is_err());
    }
}
