//! Scenario-level orchestration: trajectory, covering, two-control steering,
//! reduction to one control and the global scaling step, with the checks
//! each stage is judged by.

use std::sync::Arc;

use crate::coupling::Coupling;
use crate::data::EndpointData;
use crate::error::{Error, Result};
use crate::fictitious::{self, SteerConfig, SteeringPlan, TwoControls};
use crate::field::{Field, Grid, Mask};
use crate::geometry::{self, CoveringSet};
use crate::io::Report;
use crate::reducer::{self, CouplingSpec, NewtonConfig, Reduced, SpecKind};
use crate::scenario::{CouplingKind, Scenario};
use crate::trajectory::{self, Elementary, Profiles, TrajectoryTriple};
use crate::wavelab::System;

/// Everything built once per scenario and grid.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub grid: Grid,
    pub covering: CoveringSet,
    pub profiles: Arc<Profiles>,
    pub elementaries: Vec<Elementary>,
    /// kappa-scaled return trajectory; None when linearizing at rest
    pub background: Option<TrajectoryTriple>,
    pub coupling: Coupling,
}

impl Setup {
    pub fn new(s: &Scenario, levels: u32) -> Result<Setup> {
        s.validate()?;
        let grid = s.grid(levels)?;
        grid.check_cfl(s.nu1.max(s.nu2))?;
        let covering = geometry::build_covering(s.t_end, s.a, s.b, s.delta, s.epsilon0, s.nu1, s.nu2)?;
        // physical half-width nu2 * eps of every copy equals the rectangle width
        let profiles = Arc::new(Profiles::build(
            s.t_end,
            s.delta,
            covering.epsilon / s.nu2,
            trajectory::DEFAULT_DELTA_PRIME,
            trajectory::DEFAULT_DELTA_DOUBLE_PRIME,
            s.jet_order,
        )?);
        let elementaries = covering
            .centers
            .iter()
            .map(|&c| Elementary::new(profiles.clone(), c, s.nu1, s.nu2, s.l))
            .collect::<Result<Vec<_>>>()?;
        let background = if s.return_triple {
            let parts = elementaries.iter().map(|e| e.ubar_hbar(grid)).collect::<Result<Vec<_>>>()?;
            Some(trajectory::scale(&trajectory::superpose(&parts)?, s.kappa))
        } else {
            None
        };
        Ok(Setup { scenario: s.clone(), grid, covering, profiles, elementaries, background, coupling: s.coupling() })
    }

    /// System around the background multiplied by `scale` (u by scale,
    /// v by scale^3).
    pub fn system(&self, scale: f64) -> System {
        let sys = System::new(self.scenario.nu1, self.scenario.nu2, self.coupling.clone());
        match &self.background {
            None => sys,
            Some(b) if scale == 1.0 => sys.with_background(Arc::new(b.u.clone()), Arc::new(b.v.clone())),
            Some(b) => sys.with_background(Arc::new(b.u.scaled(scale)), Arc::new(b.v.scaled(scale * scale * scale))),
        }
    }

    pub fn plan(&self) -> Result<SteeringPlan> {
        SteeringPlan::new(&self.covering, self.scenario.l, self.grid, self.scenario.eta)
    }

    pub fn q_delta(&self) -> Mask {
        Mask::from_fn(self.grid, |t, x| self.covering.in_q_delta(t, x))
    }

    pub fn data(&self) -> Result<EndpointData> {
        self.scenario.endpoint_data()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptions {
    /// factor on the background
    pub background_scale: f64,
    /// factors on the two Newton tolerances
    pub tol_scale: (f64, f64),
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { background_scale: 1.0, tol_scale: (1.0, 1.0) }
    }
}

#[derive(Debug, Clone)]
pub struct LocalRun {
    pub two: TwoControls,
    pub reduced: Reduced,
    pub spec: CouplingSpec,
    pub system: System,
}

/// Steers with two controls, then removes the second one by Newton.
pub fn run_local(setup: &Setup, plan: &SteeringPlan, data: &EndpointData, opts: LocalOptions) -> Result<LocalRun> {
    let s = &setup.scenario;
    let sys = setup.system(opts.background_scale);
    let cfg = SteerConfig { compat_order: s.compat_order, ..SteerConfig::default() };
    let two = fictitious::steer_two_controls(&sys, plan, data, cfg)?;
    let q = setup.q_delta();
    let spec = match (&setup.background, s.coupling) {
        (Some(_), _) => CouplingSpec::from_region(SpecKind::CubicShifted, &sys, &two.u, &two.v, &q),
        (None, CouplingKind::Cubic) => CouplingSpec::from_region(SpecKind::Cubic, &sys, &two.u, &two.v, &q),
        (None, _) => CouplingSpec::at_rest(&sys),
    };
    let ncfg = NewtonConfig {
        tol: (s.tol.newton_u * opts.tol_scale.0, s.tol.newton_v * opts.tol_scale.1),
        max_iter: s.newton_max_iter,
        ..NewtonConfig::default()
    };
    let reduced = reducer::reduce_to_one_control(&sys, (&two.u, &two.v, &two.h1), None, &spec, &q, ncfg)?;
    Ok(LocalRun { two, reduced, spec, system: sys })
}

#[derive(Debug, Clone)]
pub struct GlobalRun {
    pub alpha: f64,
    /// homogeneous size of the unscaled data
    pub m: f64,
    pub u: Field,
    pub v: Field,
    pub h: Field,
    /// residual of the scaled-back triple around the scaled-back background
    pub residual: (f64, f64),
    /// |h| / M
    pub ratio: f64,
    pub local: LocalRun,
}

/// Shrinks the data by (alpha, alpha^3) with alpha = min(1, radius / (2M)),
/// runs the local pipeline and scales the result back. Cubic couplings only.
pub fn global_scale_control(setup: &Setup, plan: &SteeringPlan, data: &EndpointData, radius: f64) -> Result<GlobalRun> {
    if setup.scenario.coupling != CouplingKind::Cubic {
        return Err(Error::OutOfDomain("global scaling needs the homogeneous cubic coupling".into()));
    }
    let m = data.homogeneous_size();
    // largest power of two below radius / 2m, so the rescaling is exact
    let alpha = if m > 0.0 { dyadic_floor((radius / (2.0 * m)).min(1.0)) } else { 1.0 };
    let scaled = data.scaled(alpha, alpha * alpha * alpha);
    let a3 = alpha * alpha * alpha;
    let opts = LocalOptions { background_scale: 1.0, tol_scale: (alpha, a3) };
    let local = run_local(setup, plan, &scaled, opts)?;
    let r = &local.reduced;
    let (u, v, h) = (r.u.scaled(1.0 / alpha), r.v.scaled(1.0 / a3), r.h.scaled(1.0 / alpha));
    let back = setup.system(1.0 / alpha);
    let residual = reducer::apply_d(&back, &u, &v, &h).norms();
    let ratio = if m > 0.0 { h.max_abs() / m } else { 0.0 };
    Ok(GlobalRun { alpha, m, u, v, h, residual, ratio, local })
}

fn dyadic_floor(x: f64) -> f64 {
    2f64.powi(x.log2().floor() as i32)
}

/// One named pass/fail outcome with its measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Check {
        Check { name: name.into(), pass, detail }
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Check {
        Check::new(name, value <= bound, format!("{value:e} <= {bound:e}"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: Report,
    pub checks: Vec<Check>,
    /// (file name, contents)
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    fn merge(&mut self, prefix: &str, other: Outcome) {
        self.report.extend(prefix, &other.report);
        self.checks.extend(other.checks);
        self.artifacts.extend(other.artifacts);
    }
}

/// Samples per axis of the certificate and floor scans.
const SCAN: (usize, usize) = (400, 200);
/// Largest |box v - u^3| accepted from the closed-form residual.
pub const PDE_RESIDUAL_TOL: f64 = 1e-8;
pub const FLATNESS_TOL: f64 = 1e-12;
pub const FLOOR_MIN: f64 = 1e-10;
/// Bound on how far the reduction may move the endpoint slices.
pub const SLICE_MOVE_TOL: f64 = 1e-7;
/// Cells of stencil bleed allowed around [a, b] for the final control.
pub const BLEED_CELLS: f64 = 2.0;

/// Trajectory checks. With `certify`, a failing regularity certificate
/// fails the outcome; otherwise it is only reported.
pub fn check_trajectory(setup: &Setup, certify: bool) -> Outcome {
    let mut o = Outcome::default();
    let s = &setup.scenario;
    let k = s.kappa;
    let e0 = &setup.elementaries[0];
    o.report.put("copies", setup.elementaries.len()).put_f("epsilon", e0.epsilon()).put_f("half_width", e0.half_width());
    let residual = setup.elementaries.iter().map(|e| e.pde_residual(setup.grid)).fold(0.0, f64::max);
    o.report.put_f("pde_residual", residual);
    o.checks.push(Check::at_most("trajectory.pde_residual", residual, PDE_RESIDUAL_TOL));
    let flat = setup
        .elementaries
        .iter()
        .map(|e| e.endpoint_flatness(0.0, 200).max(e.endpoint_flatness(s.t_end, 200)))
        .fold(0.0, f64::max);
    o.report.put_f("endpoint_flatness", flat);
    o.checks.push(Check::at_most("trajectory.endpoint_flatness", flat, FLATNESS_TOL));
    let (t0, t1) = (setup.covering.delta, s.t_end - setup.covering.delta);
    for (i, (&(lo, hi), e)) in setup.covering.rects.iter().zip(&setup.elementaries).enumerate() {
        let floor = k * k * e.floor_on_rect(t0, t1, lo, hi, SCAN.0, SCAN.1);
        o.report.put_f(&format!("floor.rect{}", i + 1), floor);
        o.checks.push(Check::new(&format!("trajectory.floor.rect{}", i + 1), floor >= FLOOR_MIN, format!("{floor:e} >= {FLOOR_MIN:e}")));
    }
    let cert = trajectory::vzzz_certificate(e0, SCAN.0, SCAN.1);
    o.report.put_f("certificate.sup_ratio", cert.sup_ratio).put("certificate.ok", cert.ok);
    if certify {
        o.checks.push(Check::new("vzzz_certificate", cert.ok, format!("sup ratio {:e} must be negative", cert.sup_ratio)));
    }
    if let Some(b) = &setup.background {
        let stride = crate::io::stride_for(&b.u, 200, 400);
        o.artifacts.push(("trajectory.csv".into(), crate::io::fields_csv(&["u", "v", "h"], &[&b.u, &b.v, &b.h], stride)));
    }
    o
}

pub fn check_covering(c: &CoveringSet, l: f64) -> Outcome {
    let mut o = Outcome::default();
    o.report.put("rects", c.n()).put_f("epsilon", c.epsilon).put_f("delta", c.delta);
    for (i, d) in c.gap_deltas().iter().enumerate() {
        o.report.put_f(&format!("gap_delta{}", i + 1), *d);
    }
    let valid = c.validate();
    o.checks.push(Check::new("covering.valid", valid.is_ok(), valid.err().map_or("ok".into(), |e| e.to_string())));
    let (hits, total) = c.characteristic_coverage(l, geometry::CHARACTERISTIC_SAMPLES);
    o.report.put("characteristics.hits", hits).put("characteristics.total", total);
    o.checks.push(Check::new("covering.characteristics", hits == total, format!("{hits} of {total} meet Q_delta")));
    o.artifacts.push(("covering.csv".into(), c.to_csv()));
    o
}

pub fn check_steering(setup: &Setup, two: &TwoControls) -> Outcome {
    let mut o = Outcome::default();
    let s = &setup.scenario;
    let r = &two.report;
    o.report
        .put("sweeps", r.sweeps)
        .put_f("arrival_error", r.arrival_error)
        .put_f("final_error.position", r.final_error.0)
        .put_f("final_error.velocity", r.final_error.1)
        .put_f("initial_error.position", r.initial_error.0)
        .put_f("initial_error.velocity", r.initial_error.1)
        .put_f("h1.peak", r.audit.peak[0])
        .put_f("h2.peak", r.audit.peak[1])
        .put_f("h1.outside_q_delta", r.audit.outside_q_delta[0])
        .put_f("h2.outside_q_delta", r.audit.outside_q_delta[1])
        .put_f("h1.outside_q_2delta", r.audit.outside_q_2delta[0])
        .put_f("h2.outside_q_2delta", r.audit.outside_q_2delta[1])
        .put_f("outside_relative", r.audit.relative_outside())
        .put_f("data_norm", r.data_norm)
        .put_f("h1.ratio", r.h_ratio[0])
        .put_f("h2.ratio", r.h_ratio[1])
        .put_f("state_ratio", r.state_ratio);
    let fe = r.final_error.0.max(r.final_error.1);
    o.checks.push(Check::at_most("steer.final_error", fe, s.tol.final_slice));
    o.checks.push(Check::at_most("steer.outside_q_delta", r.audit.relative_outside(), s.tol.support));
    let stride = crate::io::stride_for(&two.u, 200, 400);
    o.artifacts.push(("steer.csv".into(), crate::io::fields_csv(&["u", "v", "h1", "h2"], &[&two.u, &two.v, &two.h1, &two.h2], stride)));
    o
}

/// Largest change between two fields on the first two and last two rows.
pub fn slice_move(a: &Field, b: &Field) -> f64 {
    let g = a.grid;
    [0, 1, g.nt - 2, g.nt - 1]
        .iter()
        .map(|&n| a.row(n).iter().zip(b.row(n)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Mask of nodes further than BLEED_CELLS cells from the strip [a, b].
pub fn beyond_bleed(grid: Grid, a: f64, b: f64) -> Mask {
    let pad = BLEED_CELLS * grid.dx * (1.0 + 1e-9);
    Mask::from_fn(grid, |_, x| x < a - pad || x > b + pad)
}

pub fn check_reduction(setup: &Setup, run: &LocalRun) -> Outcome {
    let mut o = Outcome::default();
    let s = &setup.scenario;
    let r = &run.reduced;
    let (r1, r2) = r.residual;
    let moved = slice_move(&r.u, &run.two.u).max(slice_move(&r.v, &run.two.v));
    let outside = r.h.max_abs_where(&beyond_bleed(setup.grid, s.a, s.b));
    o.report
        .put("iterations", r.iterations())
        .put_f("floor", run.spec.floor)
        .put_f("residual.u", r1)
        .put_f("residual.v", r2)
        .put_f("slice_move", moved)
        .put_f("h.peak", r.h.max_abs())
        .put_f("h.outside_ab", outside);
    o.checks.push(Check::at_most("reduce.residual.u", r1, s.tol.newton_u));
    o.checks.push(Check::at_most("reduce.residual.v", r2, s.tol.newton_v));
    o.checks.push(Check::at_most("reduce.slice_move", moved, SLICE_MOVE_TOL));
    o.checks.push(Check::at_most("reduce.h_outside_ab", outside, 0.0));
    let stride = crate::io::stride_for(&r.u, 200, 400);
    o.artifacts.push(("reduced.csv".into(), crate::io::fields_csv(&["u", "v", "h"], &[&r.u, &r.v, &r.h], stride)));
    o.artifacts.push(("newton_trace.csv".into(), r.trace_csv()));
    o
}

pub fn check_global(setup: &Setup, run: &GlobalRun) -> Outcome {
    let mut o = Outcome::default();
    let s = &setup.scenario;
    o.report
        .put_f("alpha", run.alpha)
        .put_f("m", run.m)
        .put_f("ratio", run.ratio)
        .put_f("residual.u", run.residual.0)
        .put_f("residual.v", run.residual.1);
    o.checks.push(Check::at_most("global.residual.u", run.residual.0, s.tol.newton_u));
    o.checks.push(Check::at_most("global.residual.v", run.residual.1, s.tol.newton_v));
    let stride = crate::io::stride_for(&run.u, 200, 400);
    o.artifacts.push(("global.csv".into(), crate::io::fields_csv(&["u", "v", "h"], &[&run.u, &run.v, &run.h], stride)));
    o
}

/// All stage checks of one scenario; the certificate is reported only.
pub fn verify(setup: &Setup) -> Result<Outcome> {
    let mut o = Outcome::default();
    if setup.background.is_some() {
        o.merge("trajectory", check_trajectory(setup, false));
    }
    o.merge("covering", check_covering(&setup.covering, setup.scenario.l));
    let plan = setup.plan()?;
    let run = run_local(setup, &plan, &setup.data()?, LocalOptions::default())?;
    o.merge("steer", check_steering(setup, &run.two));
    o.merge("reduce", check_reduction(setup, &run));
    Ok(o)
}

/// One stage of the pipeline as exposed by the command line and the C
/// interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Trajectory,
    Covering,
    Steer,
    Reduce,
    Global,
    Verify,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Trajectory => "trajectory",
            Stage::Covering => "covering",
            Stage::Steer => "steer",
            Stage::Reduce => "reduce",
            Stage::Global => "global",
            Stage::Verify => "verify",
        }
    }
}

/// Runs one stage on a scenario with `levels` dyadic grid refinements.
pub fn run_stage(stage: Stage, s: &Scenario, levels: u32) -> Result<Outcome> {
    if stage == Stage::Covering {
        s.validate()?;
        let c = geometry::build_covering(s.t_end, s.a, s.b, s.delta, s.epsilon0, s.nu1, s.nu2)?;
        return Ok(check_covering(&c, s.l));
    }
    let setup = Setup::new(s, levels)?;
    match stage {
        Stage::Trajectory => Ok(check_trajectory(&setup, true)),
        Stage::Steer => {
            let plan = setup.plan()?;
            let cfg = SteerConfig { compat_order: s.compat_order, ..SteerConfig::default() };
            let two = fictitious::steer_two_controls(&setup.system(1.0), &plan, &setup.data()?, cfg)?;
            Ok(check_steering(&setup, &two))
        }
        Stage::Reduce => {
            let plan = setup.plan()?;
            let run = run_local(&setup, &plan, &setup.data()?, LocalOptions::default())?;
            let mut o = check_steering(&setup, &run.two);
            let r = check_reduction(&setup, &run);
            o.report.extend("reduce", &r.report);
            o.checks.extend(r.checks);
            o.artifacts.extend(r.artifacts);
            Ok(o)
        }
        Stage::Global => {
            let plan = setup.plan()?;
            let run = global_scale_control(&setup, &plan, &setup.data()?, s.radius)?;
            Ok(check_global(&setup, &run))
        }
        Stage::Verify => verify(&setup),
        Stage::Covering => unreachable!(),
    }
}

/// `key = value` summary: the report, one `check.<name>` line per check
/// and the overall status.
pub fn summary(stage: &str, o: &Outcome) -> String {
    let mut r = Report::default();
    r.put("command", stage);
    r.entries.extend(o.report.entries.iter().cloned());
    for c in &o.checks {
        r.put(&format!("check.{}", c.name), format!("{} ({})", if c.pass { "pass" } else { "fail" }, c.detail));
    }
    r.put("status", if o.passed() { "pass" } else { "fail" });
    r.to_text()
}
