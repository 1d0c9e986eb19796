//! Husimi and Wigner functions on a [`PhaseGrid`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::Axis;
use crate::phase::{PhaseDistribution2D, PhaseGrid, PhaseKind};
use crate::povm::{outcome_distribution_as, CovariantMeasurement};
use crate::state::{vacuum, MixedState, ALIASING_LIMIT};

/// Outcome distribution of the covariant measurement generated by the vacuum.
pub fn husimi(rho: &MixedState, pg: &PhaseGrid) -> Result<PhaseDistribution2D> {
    let m = CovariantMeasurement::new(vacuum(rho.grid())?.into())?;
    outcome_distribution_as(&m, rho, pg, PhaseKind::Husimi)
}

/// `W(q,p) = (1/(pi hbar)) sum_y <q+y|rho|q-y> e^{-2ipy/hbar} dy`, one FFT per `q` row.
///
/// The `q` nodes of `pg` must be state-grid nodes and its `p` nodes multiples
/// of `dp/2`. The transform over `y` only resolves momenta below
/// `pi hbar / (2 dx)`; states with more than the aliasing limit of their
/// momentum probability beyond that are rejected.
pub fn wigner(rho: &MixedState, pg: &PhaseGrid) -> Result<PhaseDistribution2D> {
    let g = *rho.grid();
    let n = g.n;
    let cutoff = PI * g.hbar / (2.0 * g.dx);
    let fourier = g.fourier();
    let mut outside = 0.0;
    for (w, s) in rho.components() {
        let weights = s.momentum_weights(&fourier);
        outside += w
            * (0..n)
                .filter(|&k| g.p(k).abs() >= cutoff)
                .map(|k| weights[k])
                .sum::<f64>();
    }
    if outside > ALIASING_LIMIT {
        return Err(Error::Aliasing {
            mass: outside,
            threshold: ALIASING_LIMIT,
        });
    }

    let rows: Vec<usize> =
        pg.q.nodes()
            .into_iter()
            .map(|q| {
                g.nearest_index(Axis::Position, q)
                    .filter(|&i| (g.x(i) - q).abs() < 1e-9 * g.dx.max(q.abs()))
                    .ok_or_else(|| Error::GridMismatch(format!("q = {q} is not a state-grid node")))
            })
            .collect::<Result<_>>()?;
    // p = k dp / 2 picks FFT bin k.
    let half_dp = g.dp() / 2.0;
    let bins: Vec<usize> =
        pg.p.nodes()
            .into_iter()
            .map(|p| {
                let t = p / half_dp;
                let k = t.round();
                if (t - k).abs() > 1e-9 || k.abs() >= (n / 2) as f64 {
                    return Err(Error::GridMismatch(format!("p = {p} is not resolvable")));
                }
                Ok((k as isize).rem_euclid(n as isize) as usize)
            })
            .collect::<Result<_>>()?;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = g.dx / (PI * g.hbar);
    let half = (n / 2) as isize;
    let values = exec::map_indices(rows.len(), |r| {
        let i = rows[r] as isize;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for m in -half..half {
            let (a, b) = (i + m, i - m);
            if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                continue;
            }
            let c: Complex64 = rho
                .components()
                .iter()
                .map(|(w, s)| *w * s.amplitudes()[a as usize] * s.amplitudes()[b as usize].conj())
                .sum();
            buf[m.rem_euclid(n as isize) as usize] = c;
        }
        fft.process(&mut buf);
        bins.iter().map(|&k| buf[k].re * scale).collect::<Vec<_>>()
    })
    .concat();
    PhaseDistribution2D::new(*pg, values, PhaseKind::Wigner)
}

/// Wigner function convolved with the vacuum's Wigner function
/// `exp(-(q^2 + p^2)/hbar) / (pi hbar)`, by midpoint quadrature on `pg`.
pub fn smear_wigner(rho: &MixedState, pg: &PhaseGrid) -> Result<PhaseDistribution2D> {
    let w = wigner(rho, pg)?;
    let hbar = rho.grid().hbar;
    let kernel = |u: f64| (-u * u / hbar).exp() / (PI * hbar).sqrt();
    let (nq, np) = (pg.q.count, pg.p.count);
    let kq: Vec<f64> = (0..nq)
        .map(|d| kernel(d as f64 * pg.q.spacing) * pg.q.spacing)
        .collect();
    let kp: Vec<f64> = (0..np)
        .map(|d| kernel(d as f64 * pg.p.spacing) * pg.p.spacing)
        .collect();

    // Along p within each row, then along q within each column.
    let along_p = exec::map_indices(nq, |i| {
        (0..np)
            .map(|j| {
                (0..np)
                    .map(|b| w.value(i, b) * kp[j.abs_diff(b)])
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
    });
    let values = exec::map_indices(nq, |i| {
        (0..np)
            .map(|j| {
                (0..nq)
                    .map(|a| along_p[a][j] * kq[i.abs_diff(a)])
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
    })
    .concat();
    PhaseDistribution2D::new(*pg, values, PhaseKind::Husimi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::state::{distribution, gaussian_state, PureState};
    use approx::assert_abs_diff_eq;

    fn grid() -> GridSpec {
        GridSpec::balanced(512, 1.0).unwrap()
    }

    fn cat(g: &GridSpec, a: f64) -> MixedState {
        let l = gaussian_state(g, -a, 0.0, (0.5f64).sqrt()).unwrap();
        let r = gaussian_state(g, a, 0.0, (0.5f64).sqrt()).unwrap();
        let one = Complex64::new(1.0, 0.0);
        PureState::superpose(&[(one, &l), (one, &r)])
            .unwrap()
            .into()
    }

    #[test]
    fn vacuum_husimi_is_the_analytic_gaussian() {
        let g = grid();
        let pg = PhaseGrid::aligned(&g, 2, 129).unwrap();
        let h = husimi(&vacuum(&g).unwrap().into(), &pg).unwrap();
        for i in (0..129).step_by(7) {
            for j in (0..129).step_by(5) {
                let (q, p) = (pg.q.node(i), pg.p.node(j));
                let expect = (-(q * q + p * p) / 2.0).exp() / (2.0 * PI);
                assert_abs_diff_eq!(h.value(i, j), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn vacuum_wigner_is_the_analytic_gaussian() {
        let g = grid();
        let pg = PhaseGrid::aligned(&g, 2, 127).unwrap();
        let w = wigner(&vacuum(&g).unwrap().into(), &pg).unwrap();
        // The analytic value underflows far out; only roundoff may dip below zero.
        assert!(w.min() > -1e-14);
        for i in (0..127).step_by(9) {
            for j in (0..127).step_by(4) {
                let (q, p) = (pg.q.node(i), pg.p.node(j));
                let expect = (-(q * q + p * p)).exp() / PI;
                assert_abs_diff_eq!(w.value(i, j), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn wigner_marginals_are_the_state_distributions() {
        let g = grid();
        let rho = MixedState::mixture(vec![
            (0.4, gaussian_state(&g, 1.0, 0.5, 0.6).unwrap()),
            (0.6, gaussian_state(&g, -0.7, -0.2, 0.9).unwrap()),
        ])
        .unwrap();
        let pg = PhaseGrid::aligned(&g, 1, 201).unwrap();
        let w = wigner(&rho, &pg).unwrap();
        for axis in [Axis::Position, Axis::Momentum] {
            let exact = distribution(&rho, axis).unwrap();
            let marg = w.marginal_values(axis);
            for (k, v) in marg.iter().enumerate() {
                let x = pg.axis(axis).node(k);
                assert_abs_diff_eq!(*v, exact.value_at_node(x).unwrap(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn cat_wigner_goes_negative_but_its_smearing_does_not() {
        let g = grid();
        let rho = cat(&g, 3.0);
        let pg = PhaseGrid::aligned(&g, 2, 127).unwrap();
        assert!(wigner(&rho, &pg).unwrap().min() < -0.05);
        let s = smear_wigner(&rho, &pg).unwrap();
        assert!(s.min() > -1e-8);
        assert_abs_diff_eq!(s.mass(), 1.0, epsilon = 1e-6);
        let h = husimi(&rho, &pg).unwrap();
        assert!(h.l1_distance(&s).unwrap() < 1e-4);
    }

    #[test]
    fn wigner_rejects_wide_momenta() {
        let g = grid();
        let fast: MixedState = gaussian_state(&g, 0.0, 0.0, 0.12).unwrap().into();
        let pg = PhaseGrid::aligned(&g, 2, 127).unwrap();
        assert!(matches!(wigner(&fast, &pg), Err(Error::Aliasing { .. })));
    }
}
