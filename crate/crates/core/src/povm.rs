//! Covariant phase-space observables generated by a density `sigma`.
//!
//! The outcome density at `(q, p)` is `tr(rho T sigma T^*) / (2 pi hbar)`
//! with `T = T(q, p)` the translation of [`PureState::apply_weyl`]. Its
//! marginals are convolutions of the state's distributions with those of the
//! parity-reflected `sigma`: an outcome is `q = x - s` with `x ~ rho` and
//! `s ~ sigma` independent.

use num_complex::Complex64;

use crate::dist::{convolve, rms_deviation, Distribution1D};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Axis, GridSpec};
use crate::phase::{PhaseDistribution2D, PhaseGrid, PhaseKind};
use crate::state::{distribution, MixedState, PureState};

/// Largest mass a quadrature may lose at the edges of its phase grid.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CovariantMeasurement {
    sigma: MixedState,
    sigma_q: Distribution1D,
    sigma_p: Result<Distribution1D>,
    noise_q: Distribution1D,
    noise_p: Result<Distribution1D>,
}

impl CovariantMeasurement {
    /// Caches the distributions of `sigma` and of its parity reflection.
    ///
    /// A `sigma` whose momentum distribution aliases (a sharp position
    /// eigenstate, say) is accepted; only momentum-side queries then fail.
    pub fn new(sigma: MixedState) -> Result<Self> {
        let reflected = sigma.parity_reflect()?;
        Ok(CovariantMeasurement {
            sigma_q: distribution(&sigma, Axis::Position)?,
            sigma_p: distribution(&sigma, Axis::Momentum),
            noise_q: distribution(&reflected, Axis::Position)?,
            noise_p: distribution(&reflected, Axis::Momentum),
            sigma,
        })
    }

    pub fn sigma(&self) -> &MixedState {
        &self.sigma
    }

    pub fn grid(&self) -> &GridSpec {
        self.sigma.grid()
    }

    /// Distribution of `sigma` itself along `axis`.
    pub fn sigma_distribution(&self, axis: Axis) -> Result<&Distribution1D> {
        match axis {
            Axis::Position => Ok(&self.sigma_q),
            Axis::Momentum => self.sigma_p.as_ref().map_err(Clone::clone),
        }
    }

    /// Law of the additive noise `output - input` along `axis`.
    pub fn noise(&self, axis: Axis) -> Result<&Distribution1D> {
        match axis {
            Axis::Position => Ok(&self.noise_q),
            Axis::Momentum => self.noise_p.as_ref().map_err(Clone::clone),
        }
    }

    fn check_grid(&self, rho: &MixedState) -> Result<()> {
        if rho.grid() != self.grid() {
            return Err(Error::GridMismatch(
                "state and generating density live on different grids".into(),
            ));
        }
        Ok(())
    }
}

/// Pointwise outcome density, evaluated through explicit Weyl translations.
pub fn outcome_density(m: &CovariantMeasurement, rho: &MixedState, q: f64, p: f64) -> Result<f64> {
    m.check_grid(rho)?;
    let two_pi_hbar = 2.0 * std::f64::consts::PI * rho.grid().hbar;
    let mut total = 0.0;
    for (ws, phi) in m.sigma.components() {
        let moved = phi.apply_weyl(q, p)?;
        for (wr, psi) in rho.components() {
            total += ws * wr * moved.inner(psi).norm_sqr();
        }
    }
    Ok(total / two_pi_hbar)
}

/// Momentum-grid indices of the phase grid's `p` nodes, if they are all nodes.
fn aligned_momentum_indices(grid: &GridSpec, pg: &PhaseGrid) -> Option<Vec<usize>> {
    pg.p.nodes()
        .into_iter()
        .map(|p| {
            let off = grid.node_offset(Axis::Momentum, p)?;
            let k = off + (grid.n / 2) as isize;
            (0..grid.n as isize).contains(&k).then_some(k as usize)
        })
        .collect()
}

/// `e^{-i p x_j / hbar}` for every phase-grid momentum and state-grid position.
fn plane_wave_table(grid: &GridSpec, pg: &PhaseGrid) -> Vec<Vec<Complex64>> {
    pg.p.nodes()
        .into_iter()
        .map(|p| {
            (0..grid.n)
                .map(|j| Complex64::from_polar(1.0, -p * grid.x(j) / grid.hbar))
                .collect()
        })
        .collect()
}

/// One row `q = q_i` of the outcome density, by FFT when possible.
fn outcome_row(m: &CovariantMeasurement, rho: &MixedState, q: f64, columns: &Columns) -> Vec<f64> {
    let g = rho.grid();
    let fourier = g.fourier();
    let mut row = vec![0.0; columns.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); g.n];
    let mut dens = vec![0.0; g.n];
    for (ws, phi) in m.sigma.components() {
        let moved = phi.translated_amplitudes(q);
        for (wr, psi) in rho.components() {
            for ((b, t), a) in buf.iter_mut().zip(&moved).zip(psi.amplitudes()) {
                *b = t.conj() * a;
            }
            match columns {
                Columns::Fft(idx) => {
                    fourier.momentum_density_into(&mut buf, &mut dens);
                    for (r, &k) in row.iter_mut().zip(idx) {
                        *r += ws * wr * dens[k];
                    }
                }
                Columns::Direct(table) => {
                    let scale = g.dx * g.dx / (2.0 * std::f64::consts::PI * g.hbar);
                    for (r, waves) in row.iter_mut().zip(table) {
                        let s: Complex64 = buf.iter().zip(waves).map(|(b, w)| b * w).sum();
                        *r += ws * wr * s.norm_sqr() * scale;
                    }
                }
            }
        }
    }
    row
}

enum Columns {
    Fft(Vec<usize>),
    Direct(Vec<Vec<Complex64>>),
}

impl Columns {
    fn len(&self) -> usize {
        match self {
            Columns::Fft(v) => v.len(),
            Columns::Direct(v) => v.len(),
        }
    }
}

fn tabulate(
    m: &CovariantMeasurement,
    rho: &MixedState,
    pg: &PhaseGrid,
    columns: &Columns,
) -> Vec<f64> {
    exec::map_indices(pg.q.count, |i| outcome_row(m, rho, pg.q.node(i), columns)).concat()
}

/// Outcome density tabulated on `pg`.
///
/// Fails with [`Error::Coverage`] when the midpoint-rule mass on `pg`
/// deviates from one by more than the phase-mass tolerance.
pub fn outcome_distribution(
    m: &CovariantMeasurement,
    rho: &MixedState,
    pg: &PhaseGrid,
) -> Result<PhaseDistribution2D> {
    outcome_distribution_as(m, rho, pg, PhaseKind::Outcome)
}

pub(crate) fn outcome_distribution_as(
    m: &CovariantMeasurement,
    rho: &MixedState,
    pg: &PhaseGrid,
    kind: PhaseKind,
) -> Result<PhaseDistribution2D> {
    m.check_grid(rho)?;
    let g = rho.grid();
    let columns = match aligned_momentum_indices(g, pg) {
        Some(idx) => Columns::Fft(idx),
        None => Columns::Direct(plane_wave_table(g, pg)),
    };
    PhaseDistribution2D::new(*pg, tabulate(m, rho, pg, &columns), kind)
}

/// Output distribution of the `q` outcomes: `rho_Q * (reflected sigma)_Q`.
pub fn marginal_q(m: &CovariantMeasurement, rho: &MixedState) -> Result<Distribution1D> {
    marginal(m, rho, Axis::Position)
}

/// Output distribution of the `p` outcomes: `rho_P * (reflected sigma)_P`.
pub fn marginal_p(m: &CovariantMeasurement, rho: &MixedState) -> Result<Distribution1D> {
    marginal(m, rho, Axis::Momentum)
}

pub fn marginal(m: &CovariantMeasurement, rho: &MixedState, axis: Axis) -> Result<Distribution1D> {
    m.check_grid(rho)?;
    convolve(&distribution(rho, axis)?, m.noise(axis)?)
}

/// Marginal on the `axis` nodes of `pg` by integrating the outcome density
/// over the other axis of `pg`.
///
/// Every density value comes from an explicit plane-wave sum, independent of
/// both the FFT tabulation and the convolution shortcut.
pub fn direct_marginal_oracle(
    m: &CovariantMeasurement,
    rho: &MixedState,
    axis: Axis,
    pg: &PhaseGrid,
) -> Result<Distribution1D> {
    m.check_grid(rho)?;
    let columns = Columns::Direct(plane_wave_table(rho.grid(), pg));
    let table =
        PhaseDistribution2D::unchecked(*pg, tabulate(m, rho, pg, &columns), PhaseKind::Outcome)?;
    let truncated = 1.0 - table.mass();
    if truncated.abs() > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            truncated,
            threshold: TRUNCATION_LIMIT,
        });
    }
    let a = pg.axis(axis);
    Distribution1D::new(axis, a.origin, a.spacing, table.marginal_values(axis))
}

/// Calibration error of the `axis` marginal: the rms size of its noise about zero.
pub fn covariant_calibration_error(m: &CovariantMeasurement, axis: Axis) -> Result<f64> {
    rms_deviation(m.noise(axis)?, 0.0)
}

/// Covariant measurement generated by a single pure state.
pub fn from_pure(sigma: PureState) -> Result<CovariantMeasurement> {
    CovariantMeasurement::new(MixedState::pure(sigma))
}
