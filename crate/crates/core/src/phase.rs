//! Rectangular phase-space grids and tabulated phase-space functions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

impl AxisGrid {
    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    pub fn last(&self) -> f64 {
        self.node(self.count - 1)
    }
}

/// Outcome space sampled on a `q x p` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q: AxisGrid,
    pub p: AxisGrid,
}

impl PhaseGrid {
    pub fn new(q: AxisGrid, p: AxisGrid) -> Result<Self> {
        for (name, a) in [("q", q), ("p", p)] {
            if !(a.spacing > 0.0 && a.spacing.is_finite()) || a.count < 2 || !a.origin.is_finite() {
                return Err(Error::InvalidGrid(format!("bad {name} axis {a:?}")));
            }
        }
        Ok(PhaseGrid { q, p })
    }

    /// Symmetric lattice whose nodes are every `stride`-th node of the state
    /// grid in both position and momentum; `count` must be odd.
    pub fn aligned(grid: &GridSpec, stride: usize, count: usize) -> Result<Self> {
        if stride == 0 || count < 3 || count.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "need stride >= 1 and odd count >= 3, got {stride}, {count}"
            )));
        }
        if stride * (count - 1) >= grid.n {
            return Err(Error::InvalidGrid(format!(
                "phase grid of {count} x stride {stride} exceeds the {}-point state grid",
                grid.n
            )));
        }
        let half = (count - 1) / 2;
        let make = |h: f64| AxisGrid {
            origin: -(half as f64) * stride as f64 * h,
            spacing: stride as f64 * h,
            count,
        };
        PhaseGrid::new(make(grid.dx), make(grid.dp()))
    }

    /// 129 x 129 lattice with the smallest stride reaching +-8 on both axes.
    pub fn default_for(grid: &GridSpec) -> Result<Self> {
        let h = grid.dx.max(grid.dp());
        let stride = ((8.0 / (64.0 * h)).ceil() as usize).max(1);
        Self::aligned(grid, stride, 129)
    }

    pub fn axis(&self, axis: Axis) -> &AxisGrid {
        match axis {
            Axis::Position => &self.q,
            Axis::Momentum => &self.p,
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.q.spacing * self.p.spacing
    }

    pub fn len(&self) -> usize {
        self.q.count * self.p.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Outcome,
    Husimi,
    Wigner,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Outcome => "outcome",
            PhaseKind::Husimi => "husimi",
            PhaseKind::Wigner => "wigner",
        }
    }
}

/// Smallest value accepted for nonnegative kinds.
pub const PHASE_NEGATIVE_FLOOR: f64 = -1e-10;
/// Accepted deviation of the double quadrature from one.
pub const PHASE_MASS_TOLERANCE: f64 = 1e-6;

/// Values `g(q_i, p_j)` stored row-major (`q` outer).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution2D {
    grid: PhaseGrid,
    values: Vec<f64>,
    kind: PhaseKind,
}

impl PhaseDistribution2D {
    /// Validates sign (except for Wigner functions) and unit mass.
    pub fn new(grid: PhaseGrid, values: Vec<f64>, kind: PhaseKind) -> Result<Self> {
        let d = Self::unchecked(grid, values, kind)?;
        if kind != PhaseKind::Wigner {
            if let Some((index, &value)) = d
                .values
                .iter()
                .enumerate()
                .find(|(_, &v)| v < PHASE_NEGATIVE_FLOOR)
            {
                return Err(Error::NegativeDensity { index, value });
            }
        }
        let mass = d.mass();
        if (mass - 1.0).abs() > PHASE_MASS_TOLERANCE {
            return Err(Error::Coverage {
                escaping: 1.0 - mass,
            });
        }
        Ok(d)
    }

    pub(crate) fn unchecked(grid: PhaseGrid, values: Vec<f64>, kind: PhaseKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {} x {} phase grid",
                values.len(),
                grid.q.count,
                grid.p.count
            )));
        }
        Ok(PhaseDistribution2D { grid, values, kind })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn kind(&self) -> PhaseKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.p.count + j]
    }

    /// Midpoint-rule double integral.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Raw marginal sums along the complementary axis (not renormalized).
    pub fn marginal_values(&self, axis: Axis) -> Vec<f64> {
        let (nq, np) = (self.grid.q.count, self.grid.p.count);
        match axis {
            Axis::Position => (0..nq)
                .map(|i| {
                    self.values[i * np..(i + 1) * np].iter().sum::<f64>() * self.grid.p.spacing
                })
                .collect(),
            Axis::Momentum => (0..np)
                .map(|j| {
                    (0..nq).map(|i| self.values[i * np + j]).sum::<f64>() * self.grid.q.spacing
                })
                .collect(),
        }
    }

    /// Marginal along `axis` as a normalized distribution.
    pub fn marginal(&self, axis: Axis) -> Result<Distribution1D> {
        let a = self.grid.axis(axis);
        Distribution1D::normalized(axis, a.origin, a.spacing, self.marginal_values(axis))
    }

    /// `sum |a - b| dq dp` over a common grid.
    pub fn l1_distance(&self, other: &PhaseDistribution2D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("phase grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_area())
    }

    pub fn sup_distance(&self, other: &PhaseDistribution2D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("phase grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `q,p,value` rows with the grid and kind in leading comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "# kind={}", self.kind.name())?;
        writeln!(
            w,
            "# q_origin={} q_spacing={} q_count={}",
            g.q.origin, g.q.spacing, g.q.count
        )?;
        writeln!(
            w,
            "# p_origin={} p_spacing={} p_count={}",
            g.p.origin, g.p.spacing, g.p.count
        )?;
        writeln!(w, "q,p,value")?;
        for i in 0..g.q.count {
            for j in 0..g.p.count {
                writeln!(w, "{},{},{}", g.q.node(i), g.p.node(j), self.value(i, j))?;
            }
        }
        Ok(())
    }
}
