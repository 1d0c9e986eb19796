//! Pure and mixed states of one degree of freedom sampled on a [`GridSpec`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::grid::{Axis, Fourier, GridSpec};

/// Allowed deviation of `sum |psi|^2 dx` from one.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Largest probability allowed in the position boundary zone.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
/// Largest probability allowed in the momentum boundary zone.
pub const ALIASING_LIMIT: f64 = 1e-6;

/// Sum of `weights` over the outer nodes of the grid.
pub(crate) fn boundary_mass(grid: &GridSpec, weights: &[f64]) -> f64 {
    let m = grid.boundary_points();
    let n = weights.len();
    weights[..m].iter().chain(&weights[n - m..]).sum()
}

/// Normalized wavefunction on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Checks normalization and that the position boundary zone is empty.
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::unchecked(grid, amplitudes)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { mass: norm });
        }
        state.check_boundary("state")?;
        Ok(state)
    }

    /// Rescales `amplitudes` to unit norm, then validates as [`PureState::new`].
    pub fn normalized(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::unchecked(grid, amplitudes)?;
        let norm = state.norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { mass: norm });
        }
        let s = norm.sqrt().recip();
        state.amplitudes.iter_mut().for_each(|a| *a *= s);
        state.check_boundary("state")?;
        Ok(state)
    }

    fn unchecked(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.n
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFiniteMoment);
        }
        Ok(PureState { grid, amplitudes })
    }

    /// Discrete position eigenstate at the node nearest to `xi`.
    ///
    /// Its momentum distribution is flat over the whole momentum grid, so it
    /// is only meaningful for position-side quantities.
    pub fn position_eigenstate(grid: GridSpec, xi: f64) -> Result<Self> {
        let j = grid
            .nearest_index(Axis::Position, xi)
            .ok_or_else(|| Error::InvalidArgument(format!("position {xi} is off the grid")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n];
        amplitudes[j] = Complex64::new(grid.dx.sqrt().recip(), 0.0);
        Ok(PureState { grid, amplitudes })
    }

    /// Discrete momentum eigenstate (plane wave filling the periodic grid) at
    /// the momentum node nearest to `p`.
    pub fn momentum_eigenstate(grid: GridSpec, p: f64) -> Result<Self> {
        let k = grid
            .nearest_index(Axis::Momentum, p)
            .ok_or_else(|| Error::InvalidArgument(format!("momentum {p} is off the grid")))?;
        let pk = grid.p(k);
        let amp = grid.length().sqrt().recip();
        let amplitudes = (0..grid.n)
            .map(|j| Complex64::from_polar(amp, pk * grid.x(j) / grid.hbar))
            .collect();
        Ok(PureState { grid, amplitudes })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    /// `|psi(x_j)|^2 dx` per node.
    pub fn position_weights(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr() * self.grid.dx)
            .collect()
    }

    pub fn boundary_mass(&self) -> f64 {
        boundary_mass(&self.grid, &self.position_weights())
    }

    fn check_boundary(&self, context: &str) -> Result<()> {
        let mass = self.boundary_mass();
        if mass > BOUNDARY_MASS_LIMIT {
            return Err(Error::SupportOverflow {
                mass,
                context: context.to_string(),
            });
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx
    }

    pub fn momentum_amplitudes(&self, fourier: &Fourier) -> Vec<Complex64> {
        fourier.to_momentum(&self.amplitudes)
    }

    /// Probability per momentum node, `|psi_tilde(p_k)|^2 dp`.
    pub fn momentum_weights(&self, fourier: &Fourier) -> Vec<f64> {
        let dp = self.grid.dp();
        self.momentum_amplitudes(fourier)
            .iter()
            .map(|a| a.norm_sqr() * dp)
            .collect()
    }

    /// Band-limited interpolation of the wavefunction at an arbitrary point.
    pub fn evaluate(&self, momentum: &[Complex64], x: f64) -> Complex64 {
        let g = &self.grid;
        let scale = g.dp() / (2.0 * PI * g.hbar).sqrt();
        momentum
            .iter()
            .enumerate()
            .map(|(k, a)| a * Complex64::from_polar(scale, g.p(k) * x / g.hbar))
            .sum()
    }

    /// `psi(x - q)` by an index shift when `q` is a multiple of `dx`,
    /// otherwise by a phase ramp in momentum space. The grid wraps around.
    pub(crate) fn translated_amplitudes(&self, q: f64) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n as isize;
        if let Some(shift) = g.node_offset(Axis::Position, q) {
            return (0..n)
                .map(|j| self.amplitudes[(j - shift).rem_euclid(n) as usize])
                .collect();
        }
        let fourier = g.fourier();
        let mut phi = fourier.to_momentum(&self.amplitudes);
        for (k, a) in phi.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -g.p(k) * q / g.hbar);
        }
        fourier.to_position(&phi)
    }

    /// Weyl translation `(W(q,p) psi)(x) = exp(-iqp/2hbar) exp(ipx/hbar) psi(x - q)`.
    ///
    /// Shifts the position distribution by `q` and the momentum distribution
    /// by `p`. Fails if the translated state puts more mass into a boundary
    /// zone than the input had.
    pub fn apply_weyl(&self, q: f64, p: f64) -> Result<PureState> {
        let g = self.grid;
        let global = -q * p / (2.0 * g.hbar);
        let shifted = self.translated_amplitudes(q);
        let amplitudes = shifted
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::from_polar(1.0, global + p * g.x(j) / g.hbar))
            .collect();
        let out = PureState {
            grid: g,
            amplitudes,
        };
        let before = self.boundary_mass();
        let after = out.boundary_mass();
        if after > BOUNDARY_MASS_LIMIT.max(before * (1.0 + 1e-9) + 1e-15) {
            return Err(Error::SupportOverflow {
                mass: after,
                context: format!("position after translation by q = {q}"),
            });
        }
        if p != 0.0 {
            let fourier = g.fourier();
            let limit = ALIASING_LIMIT
                .max(boundary_mass(&g, &self.momentum_weights(&fourier)) * (1.0 + 1e-9) + 1e-15);
            let mass = boundary_mass(&g, &out.momentum_weights(&fourier));
            if mass > limit {
                return Err(Error::SupportOverflow {
                    mass,
                    context: format!("momentum after boost by p = {p}"),
                });
            }
        }
        Ok(out)
    }

    /// `psi(x) -> psi(-x)`; the grid must be symmetric about the origin.
    pub fn parity_reflect(&self) -> Result<PureState> {
        if !self.grid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let n = self.grid.n;
        let amplitudes = (0..n).map(|j| self.amplitudes[(n - j) % n]).collect();
        Ok(PureState {
            grid: self.grid,
            amplitudes,
        })
    }

    /// Complex conjugate `psi(x)^*` (reverses the momentum distribution).
    pub fn conjugate(&self) -> PureState {
        PureState {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
        }
    }

    /// Componentwise sum `sum_i c_i psi_i`, renormalized.
    pub fn superpose(terms: &[(Complex64, &PureState)]) -> Result<PureState> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty superposition".into()))?;
        let grid = *first.1.grid();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n];
        for (c, s) in terms {
            if *s.grid() != grid {
                return Err(Error::GridMismatch(
                    "superposition terms on different grids".into(),
                ));
            }
            for (a, b) in amplitudes.iter_mut().zip(s.amplitudes()) {
                *a += c * b;
            }
        }
        PureState::normalized(grid, amplitudes)
    }
}

/// Gaussian wave packet `psi(x) ~ exp(-(x-q0)^2 / (4 sigma_x^2) + i p0 x / hbar)`.
///
/// The packet and its Fourier transform must both fit comfortably on the grid:
/// `q0 +- 6 sigma_x` inside the position range and `p0 +- 6 hbar/(2 sigma_x)`
/// inside the momentum range.
pub fn gaussian_state(grid: &GridSpec, q0: f64, p0: f64, sigma_x: f64) -> Result<PureState> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma_x must be positive, got {sigma_x}"
        )));
    }
    let (xlo, xhi) = grid.position_range();
    if q0 - 6.0 * sigma_x < xlo || q0 + 6.0 * sigma_x > xhi {
        return Err(Error::SupportOverflow {
            mass: f64::NAN,
            context: format!(
                "gaussian at q0 = {q0} with sigma_x = {sigma_x} exceeds [{xlo}, {xhi})"
            ),
        });
    }
    let sigma_p = grid.hbar / (2.0 * sigma_x);
    let (plo, phi) = grid.momentum_range();
    if p0 - 6.0 * sigma_p < plo || p0 + 6.0 * sigma_p > phi {
        return Err(Error::SupportOverflow {
            mass: f64::NAN,
            context: format!(
                "gaussian at p0 = {p0} with sigma_p = {sigma_p} exceeds [{plo}, {phi})"
            ),
        });
    }
    let amplitudes = grid
        .positions()
        .into_iter()
        .map(|x| {
            Complex64::from_polar(
                (-(x - q0).powi(2) / (4.0 * sigma_x * sigma_x)).exp(),
                p0 * x / grid.hbar,
            )
        })
        .collect();
    PureState::normalized(*grid, amplitudes)
}

/// Centred minimum-uncertainty Gaussian with equal spreads `sqrt(hbar/2)`.
pub fn vacuum(grid: &GridSpec) -> Result<PureState> {
    gaussian_state(grid, 0.0, 0.0, (grid.hbar / 2.0).sqrt())
}

/// Convex combination of pure states sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    components: Vec<(f64, PureState)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, PureState)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidWeights("no components".into()))?;
        let grid = *first.1.grid();
        let mut total = 0.0;
        for (w, s) in &components {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
            }
            if *s.grid() != grid {
                return Err(Error::GridMismatch(
                    "mixture components on different grids".into(),
                ));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(MixedState { components })
    }

    /// Rescales positive weights to sum to one.
    pub fn mixture(components: Vec<(f64, PureState)>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Self::new(
            components
                .into_iter()
                .map(|(w, s)| (w / total, s))
                .collect(),
        )
    }

    pub fn pure(state: PureState) -> Self {
        MixedState {
            components: vec![(1.0, state)],
        }
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].1.grid()
    }

    fn map(&self, f: impl Fn(&PureState) -> Result<PureState>) -> Result<MixedState> {
        Ok(MixedState {
            components: self
                .components
                .iter()
                .map(|(w, s)| Ok((*w, f(s)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn apply_weyl(&self, q: f64, p: f64) -> Result<MixedState> {
        self.map(|s| s.apply_weyl(q, p))
    }

    pub fn parity_reflect(&self) -> Result<MixedState> {
        self.map(PureState::parity_reflect)
    }

    pub fn conjugate(&self) -> MixedState {
        MixedState {
            components: self
                .components
                .iter()
                .map(|(w, s)| (*w, s.conjugate()))
                .collect(),
        }
    }
}

impl From<PureState> for MixedState {
    fn from(s: PureState) -> Self {
        MixedState::pure(s)
    }
}

/// Density `f(x_j) = sum_k w_k |psi_k(x_j)|^2`.
pub fn position_distribution(state: &MixedState) -> Distribution1D {
    let g = state.grid();
    let mut dens = vec![0.0; g.n];
    for (w, s) in state.components() {
        for (d, a) in dens.iter_mut().zip(s.amplitudes()) {
            *d += w * a.norm_sqr();
        }
    }
    Distribution1D::normalized(Axis::Position, g.x0, g.dx, dens)
        .expect("a valid state has unit norm")
}

/// Momentum density on the ascending momentum nodes.
///
/// Fails with [`Error::Aliasing`] when more than [`ALIASING_LIMIT`] of the
/// probability sits in the momentum boundary zone.
pub fn momentum_distribution(state: &MixedState) -> Result<Distribution1D> {
    let g = *state.grid();
    let fourier = g.fourier();
    let mut weights = vec![0.0; g.n];
    for (w, s) in state.components() {
        for (acc, v) in weights.iter_mut().zip(s.momentum_weights(&fourier)) {
            *acc += w * v;
        }
    }
    let mass = boundary_mass(&g, &weights);
    if mass > ALIASING_LIMIT {
        return Err(Error::Aliasing {
            mass,
            threshold: ALIASING_LIMIT,
        });
    }
    let dp = g.dp();
    Distribution1D::normalized(
        Axis::Momentum,
        g.p(0),
        dp,
        weights.into_iter().map(|w| w / dp).collect(),
    )
}

pub fn distribution(state: &MixedState, axis: Axis) -> Result<Distribution1D> {
    match axis {
        Axis::Position => Ok(position_distribution(state)),
        Axis::Momentum => momentum_distribution(state),
    }
}

/// Standard deviation of the position or momentum distribution.
pub fn spread(state: &MixedState, axis: Axis) -> Result<f64> {
    Ok(distribution(state, axis)?.std_dev())
}
