//! Grid-sampled probability densities on the line and finite point measures.
//!
//! A [`Distribution1D`] stores density samples `f_j` at uniform nodes `x_j`;
//! every moment and transport computation treats it as the atomic measure
//! with mass `f_j * spacing` at `x_j`. Under that reading the second moment
//! about a point is exactly the squared transport distance to the point mass,
//! and the discrete convolution is exactly the law of the sum of independent
//! samples.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Axis;

/// Values below this are treated as rounding noise and clipped to zero.
pub const NEGATIVE_FLOOR: f64 = -1e-12;
/// Accepted deviation of the total mass from one before renormalizing.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution1D {
    unit: Axis,
    origin: f64,
    spacing: f64,
    density: Vec<f64>,
}

impl Distribution1D {
    /// Validates `density` (clips tiny negatives, renormalizes to unit mass).
    pub fn new(unit: Axis, origin: f64, spacing: f64, density: Vec<f64>) -> Result<Self> {
        let mut d = Self::raw(unit, origin, spacing, density)?;
        let mass = d.mass();
        if !mass.is_finite() || (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized { mass });
        }
        d.density.iter_mut().for_each(|f| *f /= mass);
        Ok(d)
    }

    /// Like [`Distribution1D::new`] but rescales any positive total mass.
    pub fn normalized(unit: Axis, origin: f64, spacing: f64, density: Vec<f64>) -> Result<Self> {
        let mut d = Self::raw(unit, origin, spacing, density)?;
        let mass = d.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NotNormalized { mass });
        }
        d.density.iter_mut().for_each(|f| *f /= mass);
        Ok(d)
    }

    fn raw(unit: Axis, origin: f64, spacing: f64, mut density: Vec<f64>) -> Result<Self> {
        if density.is_empty() {
            return Err(Error::InvalidArgument("empty density".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || !origin.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "origin {origin}, spacing {spacing}"
            )));
        }
        for (index, f) in density.iter_mut().enumerate() {
            if !f.is_finite() {
                return Err(Error::NonFiniteMoment);
            }
            if *f < 0.0 {
                if *f < NEGATIVE_FLOOR {
                    return Err(Error::NegativeDensity { index, value: *f });
                }
                *f = 0.0;
            }
        }
        Ok(Distribution1D {
            unit,
            origin,
            spacing,
            density,
        })
    }

    /// Single-cell approximation of the point mass at `xi`.
    pub fn point(unit: Axis, xi: f64, spacing: f64) -> Self {
        Distribution1D {
            unit,
            origin: xi,
            spacing,
            density: vec![1.0 / spacing],
        }
    }

    pub fn unit(&self) -> Axis {
        self.unit
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.node(j))
    }

    /// `(x_j, f_j)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.density
            .iter()
            .enumerate()
            .map(|(j, &f)| (self.node(j), f))
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing
    }

    /// Atoms `(x_j, f_j * spacing)` with positive mass, ascending in `x`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.samples()
            .filter(|&(_, f)| f > 0.0)
            .map(|(x, f)| (x, f * self.spacing))
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.samples().map(|(x, f)| x * f).sum::<f64>() * self.spacing
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples()
            .map(|(x, f)| (x - m).powi(2) * f)
            .sum::<f64>()
            * self.spacing
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().max(0.0).sqrt()
    }

    /// Same densities with every node moved by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Distribution1D {
            origin: self.origin + c,
            ..self.clone()
        }
    }

    /// Mirror image `x -> -x`.
    pub fn reflected(&self) -> Self {
        let last = self.node(self.len() - 1);
        let mut density = self.density.clone();
        density.reverse();
        Distribution1D {
            unit: self.unit,
            origin: -last,
            spacing: self.spacing,
            density,
        }
    }

    /// Density at `x` if `x` coincides with a node, zero outside the support.
    pub fn value_at_node(&self, x: f64) -> Option<f64> {
        let t = (x - self.origin) / self.spacing;
        let r = t.round();
        if (t - r).abs() > 1e-6 {
            return None;
        }
        if r < 0.0 || r >= self.len() as f64 {
            return Some(0.0);
        }
        Some(self.density[r as usize])
    }

    /// Restricts to `count` nodes starting at `origin` (must be node-aligned).
    pub fn restrict(&self, origin: f64, count: usize) -> Result<Self> {
        let offset = node_offset(self.origin, origin, self.spacing)?;
        let mut density = vec![0.0; count];
        let mut escaping = 0.0;
        for (j, &f) in self.density.iter().enumerate() {
            let k = j as isize + offset;
            if k >= 0 && (k as usize) < count {
                density[k as usize] = f;
            } else {
                escaping += f * self.spacing;
            }
        }
        if escaping > 1e-9 {
            let lo = self
                .density
                .iter()
                .position(|&f| f * self.spacing > 1e-12)
                .unwrap_or(0);
            let hi = self
                .density
                .iter()
                .rposition(|&f| f * self.spacing > 1e-12)
                .unwrap_or(0);
            return Err(Error::DoesNotFit {
                escaping,
                required: hi - lo + 1,
            });
        }
        Distribution1D::normalized(self.unit, origin, self.spacing, density)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# unit={}", self.unit.name())?;
        writeln!(w, "x,density")?;
        for (x, f) in self.samples() {
            writeln!(w, "{x},{f}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Parses the `x,density` format written by [`Distribution1D::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut unit = None;
        let mut header = false;
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(u) = comment.trim().strip_prefix("unit=") {
                    unit = Some(u.parse::<Axis>().map_err(|e| Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?);
                }
                continue;
            }
            if !header {
                if line.replace(' ', "") != "x,density" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected header `x,density`, found `{line}`"),
                    });
                }
                header = true;
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected two columns".into(),
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            };
            xs.push(parse(cols.next())?);
            fs.push(parse(cols.next())?);
            if cols.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected two columns".into(),
                });
            }
        }
        let unit = unit.ok_or(Error::Parse {
            line: 1,
            message: "missing `# unit=` comment".into(),
        })?;
        if xs.len() < 2 {
            return Err(Error::Parse {
                line: 0,
                message: "need at least two rows".into(),
            });
        }
        let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        for (j, x) in xs.iter().enumerate() {
            if (x - (xs[0] + j as f64 * spacing)).abs() > 1e-9 * spacing.abs().max(1.0) {
                return Err(Error::Parse {
                    line: j + 3,
                    message: "grid is not uniform".into(),
                });
            }
        }
        Distribution1D::new(unit, xs[0], spacing, fs)
    }
}

/// Finite list of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    unit: Option<Axis>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidWeights("no atoms".into()));
        }
        let mut total = 0.0;
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::NonFiniteMoment);
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(DiscreteMeasure { atoms, unit: None })
    }

    /// Rescales positive weights to sum to one.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Self::new(atoms.into_iter().map(|(x, w)| (x, w / total)).collect())
    }

    /// Point measure at `xi`.
    pub fn point(xi: f64) -> Self {
        DiscreteMeasure {
            atoms: vec![(xi, 1.0)],
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: Axis) -> Self {
        self.unit = Some(unit);
        self
    }

    pub fn unit(&self) -> Option<Axis> {
        self.unit
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl From<&Distribution1D> for DiscreteMeasure {
    fn from(d: &Distribution1D) -> Self {
        DiscreteMeasure {
            atoms: d.atoms(),
            unit: Some(d.unit()),
        }
    }
}

/// Root mean square deviation of `d` from the value `xi`.
pub fn rms_deviation(d: &Distribution1D, xi: f64) -> Result<f64> {
    let m2 = d.samples().map(|(x, f)| (x - xi).powi(2) * f).sum::<f64>() * d.spacing();
    if !m2.is_finite() {
        return Err(Error::NonFiniteMoment);
    }
    Ok(m2.max(0.0).sqrt())
}

fn check_compatible(a: &Distribution1D, b: &Distribution1D) -> Result<()> {
    if a.unit() != b.unit() {
        return Err(Error::UnitMismatch {
            left: a.unit(),
            right: b.unit(),
        });
    }
    if (a.spacing() - b.spacing()).abs() > 1e-9 * a.spacing() {
        return Err(Error::SpacingMismatch {
            left: a.spacing(),
            right: b.spacing(),
        });
    }
    Ok(())
}

fn node_offset(from: f64, to: f64, spacing: f64) -> Result<isize> {
    let t = (from - to) / spacing;
    let r = t.round();
    if (t - r).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "origins {from} and {to} are not node-aligned"
        )));
    }
    Ok(r as isize)
}

/// Density of the sum of independent samples from `a` and `b`.
///
/// The result lives on the extended grid starting at `a.origin + b.origin`
/// with `a.len() + b.len() - 1` nodes, so no mass is ever truncated.
pub fn convolve(a: &Distribution1D, b: &Distribution1D) -> Result<Distribution1D> {
    check_compatible(a, b)?;
    let h = a.spacing();
    let len = a.len() + b.len() - 1;
    let density = if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; len];
        for (i, &fa) in a.density().iter().enumerate() {
            if fa == 0.0 {
                continue;
            }
            for (j, &fb) in b.density().iter().enumerate() {
                out[i + j] += fa * fb * h;
            }
        }
        out
    } else {
        let size = len.next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let pad = |d: &[f64]| {
            let mut v = vec![Complex64::new(0.0, 0.0); size];
            for (slot, &f) in v.iter_mut().zip(d) {
                slot.re = f;
            }
            v
        };
        let mut fa = pad(a.density());
        let mut fb = pad(b.density());
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inv.process(&mut fa);
        let scale = h / size as f64;
        // FFT rounding leaves ~1e-16 relative noise; clip it before validation.
        let peak = fa.iter().take(len).map(|c| c.re.abs()).fold(0.0, f64::max) * scale;
        fa.iter()
            .take(len)
            .map(|c| {
                let v = c.re * scale;
                if v.abs() < 1e-13 * peak.max(1.0) {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    };
    Distribution1D::normalized(a.unit(), a.origin() + b.origin(), h, density)
}

/// Generalized inverse CDF, linear inside each cell `[x_j - h/2, x_j + h/2]`.
pub fn quantile(d: &Distribution1D, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidProbability(t));
    }
    let h = d.spacing();
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &f) in d.density().iter().enumerate() {
        let w = f * h;
        if w <= 0.0 {
            continue;
        }
        last = j;
        if cum + w >= t {
            let frac = ((t - cum) / w).clamp(0.0, 1.0);
            return Ok(d.node(j) - h / 2.0 + h * frac);
        }
        cum += w;
    }
    Ok(d.node(last) + h / 2.0)
}

/// Largest pointwise density difference over the union of two node-aligned grids.
pub fn sup_norm_diff(a: &Distribution1D, b: &Distribution1D) -> Result<f64> {
    check_compatible(a, b)?;
    let h = a.spacing();
    let offset = node_offset(b.origin(), a.origin(), h)?;
    let lo = 0.min(offset);
    let hi = (a.len() as isize).max(offset + b.len() as isize);
    let mut sup: f64 = 0.0;
    for k in lo..hi {
        let fa = if k >= 0 && (k as usize) < a.len() {
            a.density()[k as usize]
        } else {
            0.0
        };
        let kb = k - offset;
        let fb = if kb >= 0 && (kb as usize) < b.len() {
            b.density()[kb as usize]
        } else {
            0.0
        };
        sup = sup.max((fa - fb).abs());
    }
    Ok(sup)
}

/// Largest difference between `coarse` and `fine` at the nodes of `coarse`;
/// the nodes of `coarse` must coincide with nodes of `fine`.
pub fn sup_norm_diff_at_nodes(coarse: &Distribution1D, fine: &Distribution1D) -> Result<f64> {
    if coarse.unit() != fine.unit() {
        return Err(Error::UnitMismatch {
            left: coarse.unit(),
            right: fine.unit(),
        });
    }
    let mut sup: f64 = 0.0;
    for (x, f) in coarse.samples() {
        let g = fine.value_at_node(x).ok_or_else(|| {
            Error::GridMismatch(format!("node {x} is not on the comparison grid"))
        })?;
        sup = sup.max((f - g).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    pub(crate) fn gaussian(mean: f64, std: f64, origin: f64, h: f64, n: usize) -> Distribution1D {
        let dens = (0..n)
            .map(|j| {
                let x = origin + j as f64 * h;
                (-(x - mean).powi(2) / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt())
            })
            .collect();
        Distribution1D::normalized(Axis::Position, origin, h, dens).unwrap()
    }

    fn uniform_unit_interval(n_cells: usize) -> Distribution1D {
        let h = 1.0 / n_cells as f64;
        Distribution1D::new(Axis::Position, h / 2.0, h, vec![1.0; n_cells]).unwrap()
    }

    #[test]
    fn rms_examples() {
        let p = Distribution1D::point(Axis::Position, 2.5, 0.1);
        assert_abs_diff_eq!(rms_deviation(&p, 2.5).unwrap(), 0.0, epsilon = 1e-6);

        let u = uniform_unit_interval(1000);
        assert_abs_diff_eq!(
            rms_deviation(&u, 0.0).unwrap(),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-6
        );

        let g = gaussian(1.5, 0.8, -10.0, 0.02, 1000);
        let expect = (1.5f64.powi(2) + 0.64).sqrt();
        assert_abs_diff_eq!(rms_deviation(&g, 0.0).unwrap(), expect, epsilon = 1e-9);
    }

    #[test]
    fn convolve_gaussians() {
        let h = 0.02;
        let a = gaussian(0.0, 0.6, -10.0, h, 1000);
        let b = gaussian(0.0, 0.8, -10.0, h, 1000);
        let c = convolve(&a, &b).unwrap();
        assert_abs_diff_eq!(c.origin(), -20.0, epsilon = 1e-12);
        let expect = gaussian(0.0, 1.0, -20.0, h, c.len());
        assert!(sup_norm_diff(&c, &expect).unwrap() < 1e-8);
        assert_abs_diff_eq!(c.mean(), a.mean() + b.mean(), epsilon = 1e-8);
        assert_abs_diff_eq!(c.variance(), a.variance() + b.variance(), epsilon = 1e-8);
    }

    #[test]
    fn convolve_with_point_mass_shifts() {
        let h = 0.05;
        let a = gaussian(0.0, 1.0, -10.0, h, 400);
        let point = Distribution1D::point(Axis::Position, 1.5, h);
        let c = convolve(&a, &point).unwrap();
        let expect = gaussian(1.5, 1.0, -8.5, h, 400);
        assert!(sup_norm_diff(&c, &expect).unwrap() < 1e-12);

        let zero = Distribution1D::point(Axis::Position, 0.0, h);
        assert!(sup_norm_diff(&convolve(&a, &zero).unwrap(), &a).unwrap() < 1e-12);
    }

    #[test]
    fn convolve_rejects_mismatch() {
        let a = gaussian(0.0, 1.0, -10.0, 0.05, 400);
        let mut b = a.clone();
        b.unit = Axis::Momentum;
        assert!(matches!(convolve(&a, &b), Err(Error::UnitMismatch { .. })));
        let c = gaussian(0.0, 1.0, -10.0, 0.04, 400);
        assert!(matches!(
            convolve(&a, &c),
            Err(Error::SpacingMismatch { .. })
        ));
    }

    #[test]
    fn quantile_examples() {
        let g = gaussian(0.7, 1.0, -10.0, 0.02, 1001);
        assert_abs_diff_eq!(quantile(&g, 0.5).unwrap(), 0.7, epsilon = 0.02);
        let u = uniform_unit_interval(200);
        assert_abs_diff_eq!(quantile(&u, 0.25).unwrap(), 0.25, epsilon = 1.0 / 200.0);
        let std = gaussian(0.0, 1.0, -10.0, 0.02, 1001);
        assert_abs_diff_eq!(quantile(&std, 0.8413).unwrap(), 1.0, epsilon = 0.04);
        assert!(matches!(
            quantile(&u, 0.0),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            quantile(&u, 1.0),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn negative_densities() {
        let d = Distribution1D::new(Axis::Position, 0.0, 1.0, vec![-1e-14, 1.0]).unwrap();
        assert_eq!(d.density()[0], 0.0);
        assert!(matches!(
            Distribution1D::new(Axis::Position, 0.0, 1.0, vec![-1e-3, 1.0]),
            Err(Error::NegativeDensity { index: 0, .. })
        ));
        assert!(matches!(
            Distribution1D::new(Axis::Position, 0.0, 1.0, vec![0.5, 0.4]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn restrict_reports_required_size() {
        let g = gaussian(0.0, 1.0, -10.0, 0.05, 400);
        let ok = g.restrict(-8.0, 320).unwrap();
        assert_abs_diff_eq!(ok.mass(), 1.0, epsilon = 1e-12);
        match g.restrict(-1.0, 40) {
            Err(Error::DoesNotFit { escaping, required }) => {
                assert!(escaping > 0.1);
                assert!(required > 40);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reflection_is_involution() {
        let g = gaussian(1.2, 0.5, -5.0, 0.05, 256);
        let r = g.reflected();
        assert_abs_diff_eq!(r.mean(), -g.mean(), epsilon = 1e-12);
        assert!(sup_norm_diff(&r.reflected(), &g).unwrap() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let g = gaussian(0.3, 0.9, -6.0, 0.125, 96);
        let text = g.to_csv_string();
        assert!(text.starts_with("# unit=position\nx,density\n"));
        let back = Distribution1D::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), g.len());
        assert!(sup_norm_diff(&back, &g).unwrap() < 1e-15);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let bad = "# unit=position\nx,density\n0,1\n1,oops\n";
        match Distribution1D::read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Distribution1D::read_csv("x,density\n0,1\n".as_bytes()).is_err());
    }
}
