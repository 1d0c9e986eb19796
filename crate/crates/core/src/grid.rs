//! Uniform position grid with its induced momentum grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which canonical variable a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Position,
    Momentum,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Position => "position",
            Axis::Momentum => "momentum",
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::Position => Axis::Momentum,
            Axis::Momentum => Axis::Position,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "position" | "q" => Ok(Axis::Position),
            "momentum" | "p" => Ok(Axis::Momentum),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

/// Fraction of grid points (split evenly over both ends) forming the boundary zone.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// `n` points `x_j = x0 + j*dx` with the Planck constant used for every
/// momentum conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub dx: f64,
    pub x0: f64,
    pub hbar: f64,
}

impl GridSpec {
    /// Grid of `n` points centred on the origin, `x0 = -length/2`.
    pub fn new(n: usize, length: f64, hbar: f64) -> Result<Self> {
        Self::with_origin(n, length / n as f64, -length / 2.0, hbar)
    }

    pub fn with_origin(n: usize, dx: f64, x0: f64, hbar: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {dx}"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(GridSpec { n, dx, x0, hbar })
    }

    /// Grid whose position and momentum spacings coincide: `length = sqrt(2*pi*hbar*n)`.
    pub fn balanced(n: usize, hbar: f64) -> Result<Self> {
        Self::new(n, (2.0 * PI * hbar * n as f64).sqrt(), hbar)
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / (self.n as f64 * self.dx)
    }

    /// Momentum node `k`, ordered ascending: `p_k = (k - n/2) * dp`.
    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.p(k)).collect()
    }

    /// Covered momentum range `[-pi*hbar/dx, pi*hbar/dx)`.
    pub fn momentum_range(&self) -> (f64, f64) {
        let half = PI * self.hbar / self.dx;
        (-half, half)
    }

    pub fn position_range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.length())
    }

    /// Node spacing along an axis.
    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Position => self.dx,
            Axis::Momentum => self.dp(),
        }
    }

    /// First node along an axis.
    pub fn origin(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Position => self.x0,
            Axis::Momentum => self.p(0),
        }
    }

    pub fn node(&self, axis: Axis, i: usize) -> f64 {
        match axis {
            Axis::Position => self.x(i),
            Axis::Momentum => self.p(i),
        }
    }

    /// Number of points in each boundary zone.
    pub fn boundary_points(&self) -> usize {
        ((self.n as f64 * BOUNDARY_FRACTION / 2.0).ceil() as usize).max(1)
    }

    pub fn is_symmetric(&self) -> bool {
        let expect = -(self.n as f64) * self.dx / 2.0;
        (self.x0 - expect).abs() <= 1e-12 * self.length()
    }

    /// Index of the position node closest to `x`, if inside the grid.
    pub fn nearest_index(&self, axis: Axis, value: f64) -> Option<usize> {
        let t = ((value - self.origin(axis)) / self.spacing(axis)).round();
        (t >= 0.0 && t < self.n as f64).then_some(t as usize)
    }

    /// Signed node offset if `shift` is an integer multiple of the spacing.
    pub fn node_offset(&self, axis: Axis, shift: f64) -> Option<isize> {
        let t = shift / self.spacing(axis);
        let r = t.round();
        ((t - r).abs() < 1e-9).then_some(r as isize)
    }

    pub fn fourier(&self) -> Fourier {
        Fourier::new(*self)
    }
}

/// Unitary position <-> momentum transform on a [`GridSpec`].
///
/// `psi_tilde(p_k) = (2*pi*hbar)^{-1/2} * sum_j psi(x_j) exp(-i p_k x_j / hbar) dx`,
/// with momentum nodes in ascending order.
#[derive(Clone)]
pub struct Fourier {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fourier {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Position amplitudes -> momentum amplitudes.
    pub fn to_momentum(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n;
        let mut buf = psi.to_vec();
        self.forward.process(&mut buf);
        let scale = g.dx / (2.0 * PI * g.hbar).sqrt();
        (0..n)
            .map(|k| {
                let m = (k + n / 2) % n;
                let phase = Complex64::from_polar(scale, -g.p(k) * g.x0 / g.hbar);
                buf[m] * phase
            })
            .collect()
    }

    /// Momentum amplitudes -> position amplitudes.
    pub fn to_position(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let scale = (2.0 * PI * g.hbar).sqrt() / g.dx / n as f64;
        for (k, v) in phi.iter().enumerate() {
            let m = (k + n / 2) % n;
            buf[m] = v * Complex64::from_polar(scale, g.p(k) * g.x0 / g.hbar);
        }
        self.inverse.process(&mut buf);
        buf
    }

    /// In-place forward transform returning only `|psi_tilde(p_k)|^2` (ascending `k`).
    pub fn momentum_density_into(&self, buf: &mut [Complex64], out: &mut [f64]) {
        let g = &self.grid;
        let n = g.n;
        self.forward.process(buf);
        let scale = g.dx * g.dx / (2.0 * PI * g.hbar);
        for (k, o) in out.iter_mut().enumerate() {
            *o = buf[(k + n / 2) % n].norm_sqr() * scale;
        }
    }
}
