//! Quadratic-cost optimal transport on the line.
//!
//! [`wasserstein2`] integrates the squared difference of the two quantile
//! functions exactly: for atomic measures both quantiles are step functions,
//! so the integral is a finite sum over the merged CDF breakpoints.
//! [`wasserstein2_coupling_oracle`] solves the same problem as a linear
//! program over the coupling polytope and shares no code with it.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::dist::{convolve, rms_deviation, DiscreteMeasure, Distribution1D};
use crate::error::{Error, Result};
use crate::grid::Axis;

/// Anything that can be viewed as a finite weighted point set on the line.
pub trait Measure {
    fn unit(&self) -> Option<Axis>;
    /// Atoms sorted by position with weights summing to one.
    fn sorted_atoms(&self) -> Vec<(f64, f64)>;
}

impl Measure for Distribution1D {
    fn unit(&self) -> Option<Axis> {
        Some(Distribution1D::unit(self))
    }

    fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms = self.atoms();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        atoms.iter_mut().for_each(|a| a.1 /= total);
        atoms
    }
}

impl Measure for DiscreteMeasure {
    fn unit(&self) -> Option<Axis> {
        DiscreteMeasure::unit(self)
    }

    fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms = self.atoms().to_vec();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    }
}

fn check_units(a: Option<Axis>, b: Option<Axis>) -> Result<()> {
    match (a, b) {
        (Some(l), Some(r)) if l != r => Err(Error::UnitMismatch { left: l, right: r }),
        _ => Ok(()),
    }
}

fn prefix_sums(atoms: &[(f64, f64)]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = atoms
        .iter()
        .map(|&(_, w)| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Wasserstein-2 distance `(int_0^1 |Qa(t) - Qb(t)|^2 dt)^{1/2}`.
pub fn wasserstein2<A: Measure + ?Sized, B: Measure + ?Sized>(a: &A, b: &B) -> Result<f64> {
    check_units(a.unit(), b.unit())?;
    let xa = a.sorted_atoms();
    let xb = b.sorted_atoms();
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::InvalidWeights("empty measure".into()));
    }
    if xa
        .iter()
        .chain(&xb)
        .any(|&(x, w)| !x.is_finite() || !w.is_finite())
    {
        return Err(Error::NonFiniteMoment);
    }
    let ca = prefix_sums(&xa);
    let cb = prefix_sums(&xb);
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut cost = 0.0;
    while i < xa.len() && j < xb.len() {
        let next = ca[i].min(cb[j]);
        if next > t {
            cost += (next - t) * (xa[i].0 - xb[j].0).powi(2);
            t = next;
        }
        if ca[i] <= next {
            i += 1;
        }
        if cb[j] <= next {
            j += 1;
        }
    }
    if !cost.is_finite() {
        return Err(Error::NonFiniteMoment);
    }
    Ok(cost.max(0.0).sqrt())
}

/// Transport plan between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// `gamma[i][j]`: mass moved from atom `i` of the source to atom `j` of the target.
    pub gamma: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let cols = self.gamma.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.gamma.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// `sum_ij gamma_ij |x_i - y_j|^2`.
    pub fn cost(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
        let mut c = 0.0;
        for (row, &(x, _)) in self.gamma.iter().zip(a.atoms()) {
            for (g, &(y, _)) in row.iter().zip(b.atoms()) {
                c += g * (x - y).powi(2);
            }
        }
        c
    }
}

/// Largest atom count accepted by the LP oracle.
pub const ORACLE_MAX_ATOMS: usize = 64;

/// Exact optimal transport cost by linear programming; returns `(W2, plan)`.
pub fn wasserstein2_coupling_oracle(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
) -> Result<(f64, Coupling)> {
    check_units(a.unit(), b.unit())?;
    let (na, nb) = (a.len(), b.len());
    if na > ORACLE_MAX_ATOMS || nb > ORACLE_MAX_ATOMS {
        return Err(Error::InvalidArgument(format!(
            "oracle accepts at most {ORACLE_MAX_ATOMS} atoms, got {na} x {nb}"
        )));
    }
    for m in [a, b] {
        let total: f64 = m.atoms().iter().map(|x| x.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("marginal sums to {total}")));
        }
    }

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = a
        .atoms()
        .iter()
        .map(|&(x, _)| {
            b.atoms()
                .iter()
                .map(|&(y, _)| lp.add_var((x - y).powi(2), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (row, &(_, w)) in vars.iter().zip(a.atoms()) {
        let expr: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, w);
    }
    // The last column constraint is implied by the others.
    for (j, &(_, w)) in b.atoms().iter().enumerate().take(nb - 1) {
        let expr: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, w);
    }
    let solution = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let gamma = vars
        .iter()
        .map(|row| row.iter().map(|&v| solution[v].max(0.0)).collect())
        .collect();
    let plan = Coupling { gamma };
    Ok((plan.cost(a, b).max(0.0).sqrt(), plan))
}

/// Compares `W2(mu, mu * nu)` with the noise size `D(nu; 0)`; returns `(lhs, rhs)`.
pub fn noise_bound_check(mu: &Distribution1D, nu: &Distribution1D) -> Result<(f64, f64)> {
    let eta = convolve(mu, nu)?;
    Ok((wasserstein2(mu, &eta)?, rms_deviation(nu, 0.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(mean: f64, std: f64, origin: f64, h: f64, n: usize) -> Distribution1D {
        let dens = (0..n)
            .map(|j| {
                let x = origin + j as f64 * h;
                (-(x - mean).powi(2) / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt())
            })
            .collect();
        Distribution1D::normalized(Axis::Position, origin, h, dens).unwrap()
    }

    #[test]
    fn point_masses() {
        let a = DiscreteMeasure::point(-1.0);
        let b = DiscreteMeasure::point(2.5);
        assert_abs_diff_eq!(wasserstein2(&a, &b).unwrap(), 3.5, epsilon = 1e-15);
    }

    #[test]
    fn translation_costs_the_shift() {
        let d = gaussian(0.0, 1.0, -10.0, 0.05, 400);
        let c = 1.35;
        assert_abs_diff_eq!(wasserstein2(&d, &d.shifted(c)).unwrap(), c, epsilon = 1e-6);
        assert_abs_diff_eq!(wasserstein2(&d, &d).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn centred_gaussians_differ_by_their_widths() {
        // Atomic discretization error is O(h^2); h = 0.01 keeps it below 1e-4.
        let h = 0.01;
        let a = gaussian(0.0, 1.0, -20.0, h, 4000);
        let b = gaussian(0.0, 2.0, -20.0, h, 4000);
        let w = wasserstein2(&a, &b).unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-4);

        // Independent route: trapezoid integral of (Qa - Qb)^2 with Qb = 2 Qa,
        // i.e. integral of x^2 phi(x) dx over the standard normal.
        let m = 200_000;
        let (lo, hi) = (-12.0f64, 12.0f64);
        let step = (hi - lo) / m as f64;
        let integral: f64 = (0..=m)
            .map(|k| {
                let x = lo + k as f64 * step;
                let wt = if k == 0 || k == m { 0.5 } else { 1.0 };
                wt * x * x * (-x * x / 2.0).exp() / (2.0 * PI).sqrt() * step
            })
            .sum();
        assert_abs_diff_eq!(w, integral.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn unit_guard() {
        let a = DiscreteMeasure::point(0.0).with_unit(Axis::Position);
        let b = DiscreteMeasure::point(0.0).with_unit(Axis::Momentum);
        assert!(matches!(
            wasserstein2(&a, &b),
            Err(Error::UnitMismatch { .. })
        ));
    }

    #[test]
    fn point_measure_distance_is_rms() {
        let d = gaussian(0.4, 0.7, -8.0, 0.05, 320);
        for xi in [-1.0, 0.0, 0.4, 2.0] {
            let w = wasserstein2(&d, &DiscreteMeasure::point(xi)).unwrap();
            assert_abs_diff_eq!(w, rms_deviation(&d, xi).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn oracle_examples() {
        let a = DiscreteMeasure::new(vec![(0.0, 0.25), (1.0, 0.5), (3.0, 0.25)]).unwrap();
        let (cost, plan) = wasserstein2_coupling_oracle(&a, &a).unwrap();
        assert_abs_diff_eq!(cost, 0.0, epsilon = 1e-9);
        for (i, row) in plan.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if i != j {
                    assert!(*g < 1e-12);
                }
            }
        }

        let delta = DiscreteMeasure::point(0.0);
        let split = DiscreteMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let (cost, plan) = wasserstein2_coupling_oracle(&delta, &split).unwrap();
        assert_abs_diff_eq!(cost, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(plan.row_sums()[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(wasserstein2(&delta, &split).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn oracle_rejects_bad_marginals() {
        let a = DiscreteMeasure::point(0.0);
        let big = DiscreteMeasure::normalized((0..65).map(|i| (i as f64, 1.0)).collect()).unwrap();
        assert!(wasserstein2_coupling_oracle(&a, &big).is_err());
        assert!(DiscreteMeasure::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
    }

    #[test]
    fn noise_bound_examples() {
        let h = 0.05;
        let nu = gaussian(0.3, 0.8, -8.0, h, 320);
        let narrow = Distribution1D::point(Axis::Position, 1.0, h);
        let (lhs, rhs) = noise_bound_check(&narrow, &nu).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-4);

        let mu = gaussian(-0.5, 1.1, -8.0, h, 320);
        let zero = Distribution1D::point(Axis::Position, 0.0, h);
        let (lhs, rhs) = noise_bound_check(&mu, &zero).unwrap();
        assert_abs_diff_eq!(lhs, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(rhs, 0.0, epsilon = 1e-12);
    }

    fn measure() -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec((-5.0f64..5.0, 0.05f64..1.0), 1..12)
            .prop_map(|atoms| DiscreteMeasure::normalized(atoms).unwrap())
    }

    proptest! {
        #[test]
        fn quantile_formula_matches_lp(a in measure(), b in measure()) {
            let w = wasserstein2(&a, &b).unwrap();
            let (lp, plan) = wasserstein2_coupling_oracle(&a, &b).unwrap();
            prop_assert!((w - lp).abs() < 1e-8, "{w} vs {lp}");
            for (s, &(_, wa)) in plan.row_sums().iter().zip(a.atoms()) {
                prop_assert!((s - wa).abs() < 1e-10);
            }
            for (s, &(_, wb)) in plan.column_sums().iter().zip(b.atoms()) {
                prop_assert!((s - wb).abs() < 1e-10);
            }
        }

        #[test]
        fn symmetric_and_triangle(a in measure(), b in measure(), c in measure()) {
            let ab = wasserstein2(&a, &b).unwrap();
            prop_assert!((ab - wasserstein2(&b, &a).unwrap()).abs() < 1e-10);
            let ac = wasserstein2(&a, &c).unwrap();
            let cb = wasserstein2(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-8);
        }
    }
}
