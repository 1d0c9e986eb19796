//! The preparation, covariant and sequential suites.

use std::sync::Arc;

use anyhow::{Context as _, Result};
use rayon::prelude::*;
use serde::Serialize;
use unclab::dist::sup_norm_diff_at_nodes;
use unclab::grid::{Axis, GridSpec};
use unclab::husimi::{husimi, wigner};
use unclab::metrics::{
    calibration_error, global_error, standard_probes, CalibrationFamily, CovariantMarginal,
    EpsilonSchedule, ErrorEstimate, MarginalDevice, SequentialMarginal,
};
use unclab::phase::{PhaseGrid, PHASE_MASS_TOLERANCE};
use unclab::pointer::{induced_covariant_sigma, SequentialDevice, VonNeumannModel};
use unclab::povm::{
    covariant_calibration_error, direct_marginal_oracle, marginal, CovariantMeasurement,
};
use unclab::report::{verify_measurement_ur, verify_preparation_ur, RelationReport};
use unclab::state::{distribution, spread, vacuum, MixedState};
use unclab::Error;

use crate::config::SuiteConfig;
use crate::output::{slug, OutputDir};

/// Family limit vs the noise rms of the covariant shortcut.
pub const SHORTCUT_TOL: f64 = 1e-3;
/// Allowed amount by which the probe supremum may undercut the family limit.
pub const ORDERING_SLACK: f64 = 1e-6;
/// Probe supremum vs family limit for covariant devices.
pub const EQUALITY_TOL: f64 = 2e-3;
/// Convolution marginal vs direct quadrature, sup norm at phase-grid nodes.
pub const QUADRATURE_TOL: f64 = 1e-4;

const AXES: [Axis; 2] = [Axis::Position, Axis::Momentum];

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub subject: String,
    pub check: String,
    /// `null` when the comparison could not be evaluated.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl OracleCheck {
    fn at_most(subject: &str, check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        OracleCheck {
            subject: subject.to_string(),
            check: check.into(),
            value: Some(value),
            tolerance,
            pass: value <= tolerance,
            detail: None,
        }
    }

    fn failed(subject: &str, check: impl Into<String>, tolerance: f64, detail: String) -> Self {
        OracleCheck {
            subject: subject.to_string(),
            check: check.into(),
            value: None,
            tolerance,
            pass: false,
            detail: Some(detail),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub config_hash: String,
    pub pass: bool,
    pub reports: Vec<RelationReport>,
    pub oracles: Vec<OracleCheck>,
    /// Files written by this suite besides `result.json`.
    pub files: Vec<String>,
}

impl SuiteResult {
    pub fn relations_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn oracles_pass(&self) -> bool {
        self.oracles.iter().all(|o| o.pass)
    }
}

#[derive(Serialize)]
struct DeviceEstimates {
    device: String,
    calibration: Vec<ErrorEstimate>,
    global: Vec<ErrorEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    covariant_shortcut: Option<[f64; 2]>,
}

pub struct Context<'a> {
    pub cfg: &'a SuiteConfig,
    pub hash: String,
    pub out: &'a mut OutputDir,
}

impl Context<'_> {
    fn finish(
        &mut self,
        suite: &str,
        reports: Vec<RelationReport>,
        oracles: Vec<OracleCheck>,
        before: usize,
    ) -> Result<SuiteResult> {
        let reports = reports
            .into_iter()
            .map(|mut r| {
                r.config_hash = Some(self.hash.clone());
                r
            })
            .collect();
        let mut result = SuiteResult {
            suite: suite.to_string(),
            config_hash: self.hash.clone(),
            pass: false,
            reports,
            oracles,
            files: self.out.files()[before..].to_vec(),
        };
        result.pass = result.relations_pass() && result.oracles_pass();
        self.out
            .write_json(&format!("{suite}/result.json"), &result)?;
        Ok(result)
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn schedule(cfg: &SuiteConfig, grid: &GridSpec, axis: Axis) -> Result<EpsilonSchedule> {
    match &cfg.schedule {
        Some(s) => Ok(s.clone()),
        None => Ok(EpsilonSchedule::standard(grid, axis)?),
    }
}

struct Estimates {
    calibration: [ErrorEstimate; 2],
    global: [ErrorEstimate; 2],
}

fn estimate(
    cfg: &SuiteConfig,
    grid: &GridSpec,
    devices: [&dyn MarginalDevice; 2],
) -> Result<Estimates> {
    let mut cal = Vec::new();
    let mut glob = Vec::new();
    for (axis, device) in AXES.into_iter().zip(devices) {
        let sched = schedule(cfg, grid, axis)?;
        let family = CalibrationFamily::standard(grid, axis, &sched)?;
        cal.push(calibration_error(device, &family, &sched)?);
        glob.push(global_error(
            device,
            &standard_probes(grid, axis, &family)?,
        )?);
    }
    let pair = |v: Vec<ErrorEstimate>| -> [ErrorEstimate; 2] {
        v.try_into().expect("one estimate per axis")
    };
    Ok(Estimates {
        calibration: pair(cal),
        global: pair(glob),
    })
}

fn ordering_checks(subject: &str, e: &Estimates, equality: bool) -> Vec<OracleCheck> {
    let mut v = Vec::new();
    for (cal, glob) in e.calibration.iter().zip(&e.global) {
        let (Some(c), Some(g)) = (cal.value, glob.value) else {
            continue;
        };
        let axis = cal.axis.name();
        v.push(OracleCheck::at_most(
            subject,
            format!("ordering {axis}"),
            c - g,
            ORDERING_SLACK,
        ));
        if equality {
            v.push(OracleCheck::at_most(
                subject,
                format!("equality {axis}"),
                (g - c).abs(),
                EQUALITY_TOL,
            ));
        }
    }
    v
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "unbounded".to_string(), |x| format!("{x:.6}"))
}

fn print_report(r: &RelationReport) {
    let parts: Vec<String> = r
        .components
        .iter()
        .map(|c| format!("{}={}", c.axis.name(), fmt_value(c.value)))
        .collect();
    println!(
        "{} {} {}: {} product={}",
        if r.pass { "PASS" } else { "FAIL" },
        serde_json::to_value(r.relation)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        r.subject.as_deref().unwrap_or("?"),
        parts.join(" "),
        fmt_value(r.product)
    );
}

fn print_failed_oracles(checks: &[OracleCheck]) {
    for o in checks.iter().filter(|o| !o.pass) {
        println!(
            "FAIL oracle {} {}: {} > {:e}{}",
            o.subject,
            o.check,
            o.value
                .map_or_else(|| "not evaluated".to_string(), |x| format!("{x:.3e}")),
            o.tolerance,
            o.detail
                .as_ref()
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        );
    }
}

pub fn prep(ctx: &mut Context) -> Result<SuiteResult> {
    let cfg = ctx.cfg;
    let grid = cfg.grid.build(cfg.hbar)?;
    let before = ctx.out.files().len();
    let evaluated = cfg
        .prep_states
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<_> {
            let rho = s
                .state
                .build(&grid)
                .with_context(|| format!("prep_states[{i}] `{}`", s.name))?;
            let report = verify_preparation_ur(&rho, cfg.hbar)
                .with_context(|| format!("prep_states[{i}] `{}`", s.name))?
                .with_subject(s.name.clone());
            let csvs = AXES
                .iter()
                .map(|&axis| {
                    let d = distribution(&rho, axis)?;
                    csv_bytes(|b| d.write_csv(b))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((report, csvs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::new();
    for (s, (report, csvs)) in cfg.prep_states.iter().zip(evaluated) {
        for (axis, bytes) in AXES.iter().zip(csvs) {
            ctx.out.write(
                &format!("prep/distributions/{}.{}.csv", slug(&s.name), axis.name()),
                &bytes,
            )?;
        }
        print_report(&report);
        reports.push(report);
    }
    // First state within 1e-9 of the smallest product.
    let min = reports
        .iter()
        .filter_map(|r| r.product)
        .fold(f64::INFINITY, f64::min);
    if let Some(r) = reports
        .iter()
        .find(|r| r.product.is_some_and(|p| p <= min + 1e-9))
    {
        println!(
            "prep: {} states, minimum product {min:.6} ({})",
            reports.len(),
            r.subject.as_deref().unwrap_or("?")
        );
    }
    ctx.finish("prep", reports, Vec::new(), before)
}

fn phase_grid(cfg: &SuiteConfig, grid: &GridSpec) -> Result<PhaseGrid> {
    Ok(match &cfg.phase_grid {
        Some(p) => {
            PhaseGrid::aligned(grid, p.stride, p.count).context("invalid config at `phase_grid`")?
        }
        None => PhaseGrid::default_for(grid)?,
    })
}

pub fn covariant(ctx: &mut Context) -> Result<SuiteResult> {
    let cfg = ctx.cfg;
    let grid = cfg.grid.build(cfg.hbar)?;
    let pg = phase_grid(cfg, &grid)?;
    let before = ctx.out.files().len();
    let inputs = cfg
        .oracle_states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.state
                .build(&grid)
                .with_context(|| format!("oracle_states[{i}] `{}`", s.name))
        })
        .collect::<Result<Vec<MixedState>>>()?;

    let evaluated = cfg
        .covariant
        .par_iter()
        .enumerate()
        .map(|(i, d)| -> Result<_> {
            let at = || format!("covariant[{i}] `{}`", d.name);
            let sigma = d.sigma.build(&grid).with_context(at)?;
            let m = Arc::new(CovariantMeasurement::new(sigma).with_context(at)?);
            let subject = format!("covariant {}", d.name);
            let [dq, dp] = AXES.map(|axis| CovariantMarginal {
                measurement: m.clone(),
                axis,
                label: d.name.clone(),
            });
            let est = estimate(cfg, &grid, [&dq, &dp]).with_context(at)?;
            let report = verify_measurement_ur(
                Some(&est.calibration[0]),
                Some(&est.calibration[1]),
                cfg.hbar,
            )?
            .with_subject(subject.clone());

            let mut checks = Vec::new();
            let mut shortcut = [0.0; 2];
            for (k, axis) in AXES.into_iter().enumerate() {
                shortcut[k] = covariant_calibration_error(&m, axis)?;
                if let Some(v) = est.calibration[k].value {
                    checks.push(OracleCheck::at_most(
                        &subject,
                        format!("shortcut {}", axis.name()),
                        (v - shortcut[k]).abs(),
                        SHORTCUT_TOL,
                    ));
                }
            }
            checks.extend(ordering_checks(&subject, &est, true));
            for (s, rho) in cfg.oracle_states.iter().zip(&inputs) {
                for axis in AXES {
                    let name = format!("quadrature {} {}", s.name, axis.name());
                    let check = match direct_marginal_oracle(&m, rho, axis, &pg) {
                        Ok(oracle) => {
                            let conv = marginal(&m, rho, axis)?;
                            OracleCheck::at_most(
                                &subject,
                                name,
                                sup_norm_diff_at_nodes(&oracle, &conv)?,
                                QUADRATURE_TOL,
                            )
                        }
                        Err(e @ (Error::Truncation { .. } | Error::Coverage { .. })) => {
                            OracleCheck::failed(&subject, name, QUADRATURE_TOL, e.to_string())
                        }
                        Err(e) => return Err(e).with_context(at),
                    };
                    checks.push(check);
                }
            }
            let estimates = DeviceEstimates {
                device: subject,
                calibration: est.calibration.to_vec(),
                global: est.global.to_vec(),
                covariant_shortcut: Some(shortcut),
            };
            Ok((report, checks, estimates))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::new();
    let mut oracles = Vec::new();
    let mut estimates = Vec::new();
    for (r, c, e) in evaluated {
        print_report(&r);
        print_failed_oracles(&c);
        reports.push(r);
        oracles.extend(c);
        estimates.push(e);
    }
    ctx.out.write_json("covariant/estimates.json", &estimates)?;

    // A phase grid too coarse for the dumps fails their mass check; that is
    // reported like any other oracle failure.
    let vac: MixedState = vacuum(&grid)?.into();
    for (kind, table) in [("husimi", husimi(&vac, &pg)), ("wigner", wigner(&vac, &pg))] {
        match table {
            Ok(t) => ctx.out.write(
                &format!("covariant/vacuum_{kind}.csv"),
                &csv_bytes(|b| t.write_csv(b))?,
            )?,
            Err(e @ Error::Coverage { .. }) => {
                let check = OracleCheck::failed(
                    "vacuum",
                    format!("{kind} normalization"),
                    PHASE_MASS_TOLERANCE,
                    e.to_string(),
                );
                print_failed_oracles(std::slice::from_ref(&check));
                oracles.push(check);
            }
            Err(e) => return Err(e.into()),
        }
    }

    let passed = oracles.iter().filter(|o| o.pass).count();
    println!(
        "covariant: {} devices, {passed}/{} oracle checks passed",
        reports.len(),
        oracles.len()
    );
    ctx.finish("covariant", reports, oracles, before)
}

pub fn sequential(ctx: &mut Context) -> Result<SuiteResult> {
    let cfg = ctx.cfg;
    let grid = cfg.sequential_grid.build(cfg.hbar)?;
    let before = ctx.out.files().len();
    let devices = cfg.sequential_devices();

    let evaluated = devices
        .par_iter()
        .map(|(d, _)| -> Result<_> {
            let at = || format!("sequential device `{}`", d.name);
            let probe = d.probe.build_pure(&grid).with_context(at)?;
            let model = VonNeumannModel::new(probe, d.lambda).with_context(at)?;
            let dev = Arc::new(SequentialDevice::new(model));
            let subject = format!("sequential {}", d.name);
            let [dq, dp] = AXES.map(|axis| SequentialMarginal {
                device: dev.clone(),
                axis,
                label: d.name.clone(),
            });
            let est = estimate(cfg, &grid, [&dq, &dp]).with_context(at)?;
            let report = verify_measurement_ur(
                Some(&est.calibration[0]),
                Some(&est.calibration[1]),
                cfg.hbar,
            )?
            .with_subject(subject.clone());

            let mut checks = ordering_checks(&subject, &est, false);
            match induced_covariant_sigma(&dev.model) {
                Ok(m) => {
                    for (k, axis) in AXES.into_iter().enumerate() {
                        if let Some(v) = est.calibration[k].value {
                            let s = covariant_calibration_error(&m, axis)?;
                            checks.push(OracleCheck::at_most(
                                &subject,
                                format!("equivalent shortcut {}", axis.name()),
                                (v - s).abs(),
                                SHORTCUT_TOL,
                            ));
                        }
                    }
                }
                Err(e @ Error::NotCovariantEquivalent { .. }) => checks.push(OracleCheck::failed(
                    &subject,
                    "covariant equivalence",
                    unclab::pointer::EQUIVALENCE_TOLERANCE,
                    e.to_string(),
                )),
                Err(e) => return Err(e).with_context(at),
            }
            let probe_std = spread(&MixedState::pure(dev.model.probe().clone()), Axis::Position)?;
            let estimates = DeviceEstimates {
                device: subject,
                calibration: est.calibration.to_vec(),
                global: est.global.to_vec(),
                covariant_shortcut: None,
            };
            Ok((report, checks, estimates, probe_std))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::new();
    let mut oracles = Vec::new();
    let mut estimates = Vec::new();
    let mut sweep = Vec::new();
    for ((d, width), (r, c, e, probe_std)) in devices.iter().zip(evaluated) {
        print_report(&r);
        print_failed_oracles(&c);
        if width.is_some() {
            sweep.push((
                probe_std,
                r.components[0].value,
                r.components[1].value,
                r.product,
                d.name.clone(),
            ));
        }
        reports.push(r);
        oracles.extend(c);
        estimates.push(e);
    }
    ctx.out
        .write_json("sequential/estimates.json", &estimates)?;

    sweep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut csv = String::from("probe_std,delta_q,delta_p,product\n");
    let cell = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |x| x.to_string());
    for (s, dq, dp, prod, _) in &sweep {
        csv.push_str(&format!(
            "{s},{},{},{}\n",
            cell(*dq),
            cell(*dp),
            cell(*prod)
        ));
    }
    if !sweep.is_empty() {
        ctx.out.write("sequential/tradeoff.csv", csv.as_bytes())?;
    }

    let passed = oracles.iter().filter(|o| o.pass).count();
    println!(
        "sequential: {} devices, {passed}/{} oracle checks passed",
        reports.len(),
        oracles.len()
    );
    ctx.finish("sequential", reports, oracles, before)
}
