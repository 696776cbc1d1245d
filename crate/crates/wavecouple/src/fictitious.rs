//! Two-control steering: forward and backward solutions blended in time on
//! the covering rectangles, boundary-controlled strips outside them, glued by
//! a space cutoff. The equation residuals of the glued pair are the two
//! controls, supported in Q_delta.

use rayon::prelude::*;

use crate::compat::{self, Equations};
use crate::data::EndpointData;
use crate::error::{Error, Result};
use crate::fd;
use crate::field::{Field, Grid, Mask};
use crate::geometry::CoveringSet;
use crate::profiles::cutoff::step;
use crate::wavelab::{self, CauchySlice, Direction, Stepper, Strip, StripKind, System};

/// Time cutoff: 1 on [0, delta], 0 on [T - delta, T].
pub fn phi(t: f64, t_end: f64, delta: f64) -> f64 {
    1.0 - step((t - delta) / (t_end - 2.0 * delta))
}

#[derive(Debug, Clone)]
pub struct SteeringPlan {
    pub covering: CoveringSet,
    pub l: f64,
    pub grid: Grid,
    pub gap_deltas: Vec<f64>,
    pub end_deltas: (f64, f64),
    pub strips: Vec<Strip>,
    /// phi at each row
    pub phi: Vec<f64>,
    /// xi at each column
    pub xi: Vec<f64>,
    /// last row with t <= delta and first row with t >= T - delta
    pub n0: usize,
    pub n1: usize,
    /// decay length (cells) of the auxiliary strip data
    pub eta: usize,
}

impl SteeringPlan {
    pub fn new(covering: &CoveringSet, l: f64, grid: Grid, eta: usize) -> Result<SteeringPlan> {
        let gap_deltas = covering.gap_deltas();
        let end_deltas = covering.end_deltas(l);
        let n = covering.n();
        if end_deltas.0 <= 0.0 || end_deltas.1 <= 0.0 {
            return Err(Error::TimeTooShort(format!(
                "end strips cannot be steered within T - 2 delta = {}",
                covering.t_end - 2.0 * covering.delta
            )));
        }
        if let Some(i) = gap_deltas.iter().position(|d| *d <= 0.0) {
            return Err(Error::TimeTooShort(format!("gap {} cannot be crossed within T - 2 delta", i + 1)));
        }
        let margin = |i: usize| -> (f64, f64) {
            let left = if i == 0 { end_deltas.0 } else { gap_deltas[i - 1] };
            let right = if i + 1 == n { end_deltas.1 } else { gap_deltas[i] };
            (left, right)
        };
        let (dx, nx) = (grid.dx, grid.nx);
        // xi reaches 1 two cells inside each rectangle so that no stencil
        // centred outside Q_delta sees the transition
        let inset = XI_INSET_CELLS * dx;
        for i in 0..n {
            let (dl, dr) = margin(i);
            if dl.min(dr) <= 2.0 * inset {
                return Err(Error::CflViolation(format!("margins of rectangle {} span fewer than {} cells", i + 1, 2 * XI_INSET_CELLS as usize)));
            }
        }
        let xi_at = |x: f64| -> f64 {
            for (i, &(lo, hi)) in covering.rects.iter().enumerate() {
                if x >= lo && x <= hi {
                    let (dl, dr) = margin(i);
                    let left = 1.0 - step((x - lo - inset) / (dl - inset));
                    let right = step((x - (hi - dr)) / (dr - inset));
                    return left.max(right);
                }
            }
            1.0
        };
        let floor = |x: f64| ((x / dx + 1e-9).floor() as usize).min(nx - 1);
        let ceil = |x: f64| ((x / dx - 1e-9).ceil() as usize).min(nx - 1);
        let mut strips = vec![Strip { kind: StripKind::Left, jl: 0, jr: ceil(covering.rects[0].0 + end_deltas.0) }];
        for i in 0..n - 1 {
            let d = gap_deltas[i];
            strips.push(Strip { kind: StripKind::Gap, jl: floor(covering.rects[i].1 - d), jr: ceil(covering.rects[i + 1].0 + d) });
        }
        strips.push(Strip { kind: StripKind::Right, jl: floor(covering.rects[n - 1].1 - end_deltas.1), jr: nx - 1 });
        let xi: Vec<f64> = (0..nx).map(|j| xi_at(grid.x(j))).collect();
        for s in &strips {
            if s.jr < s.jl + 4 {
                return Err(Error::CflViolation(format!("strip columns {}..{} unresolved", s.jl, s.jr)));
            }
            if (s.kind != StripKind::Left && xi[s.jl] != 0.0) || (s.kind != StripKind::Right && xi[s.jr] != 0.0) {
                return Err(Error::OutOfDomain(format!("strip edge columns {}..{} not on the xi = 0 plateau", s.jl, s.jr)));
            }
        }
        for w in strips.windows(2) {
            if w[1].jl < w[0].jr {
                return Err(Error::OverlappingSupports(format!("strips {:?} and {:?} overlap", w[0], w[1])));
            }
        }
        if let Some(j) = (0..nx).find(|&j| xi[j] > 0.0 && !strips.iter().any(|s| j > s.jl && j < s.jr || (j == s.jl && s.kind == StripKind::Left) || (j == s.jr && s.kind == StripKind::Right))) {
            return Err(Error::OutOfDomain(format!("xi > 0 at column {j} outside every strip")));
        }
        let (t_end, delta) = (covering.t_end, covering.delta);
        let phi: Vec<f64> = (0..grid.nt).map(|n| phi(grid.t(n), t_end, delta)).collect();
        let (n0, n1) = wavelab::rows_between(&grid, delta, t_end - delta);
        // gap strips need the decay zone inside the grid
        let room = strips
            .iter()
            .filter(|s| s.kind == StripKind::Gap)
            .map(|s| s.jl.min(nx - 1 - s.jr) - 1)
            .min()
            .unwrap_or(usize::MAX);
        Ok(SteeringPlan { covering: covering.clone(), l, grid, gap_deltas, end_deltas, strips, phi, xi, n0, n1, eta: eta.min(room) })
    }

    /// Index of the strip whose interior (or physical edge) contains column j.
    fn strip_of(&self, j: usize) -> Option<usize> {
        self.strips.iter().position(|s| {
            (j > s.jl && j < s.jr) || (j == s.jl && s.kind == StripKind::Left) || (j == s.jr && s.kind == StripKind::Right)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SteerConfig {
    pub compat_order: usize,
    pub max_sweeps: usize,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig { compat_order: compat::DEFAULT_ORDER, max_sweeps: 30 }
    }
}

pub const SWEEP_TOL: f64 = 1e-10;

/// Distance (cells) between a rectangle edge and the start of xi's decay.
pub const XI_INSET_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupportAudit {
    /// max |h_i| outside Q_delta
    pub outside_q_delta: [f64; 2],
    /// max |h_i| outside Q_2delta
    pub outside_q_2delta: [f64; 2],
    pub peak: [f64; 2],
}

impl SupportAudit {
    /// Largest outside-Q_delta value relative to the peak.
    pub fn relative_outside(&self) -> f64 {
        (0..2).map(|i| if self.peak[i] > 0.0 { self.outside_q_delta[i] / self.peak[i] } else { 0.0 }).fold(0.0, f64::max)
    }
}

pub fn support_audit(h1: &Field, h2: &Field, covering: &CoveringSet) -> SupportAudit {
    let g = h1.grid;
    let q1 = Mask::from_fn(g, |t, x| covering.in_q_delta(t, x)).not();
    let q2 = Mask::from_fn(g, |t, x| covering.in_q_2delta(t, x)).not();
    SupportAudit {
        outside_q_delta: [h1.max_abs_where(&q1), h2.max_abs_where(&q1)],
        outside_q_2delta: [h1.max_abs_where(&q2), h2.max_abs_where(&q2)],
        peak: [h1.max_abs(), h2.max_abs()],
    }
}

#[derive(Debug, Clone, Default)]
pub struct SteerReport {
    pub sweeps: usize,
    pub arrival_error: f64,
    /// audit of the unmasked residual controls
    pub audit: SupportAudit,
    /// max slice errors at t = 0 and t = T of the re-solved pair:
    /// (position, velocity)
    pub initial_error: (f64, f64),
    pub final_error: (f64, f64),
    pub data_norm: f64,
    pub h_ratio: [f64; 2],
    pub state_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TwoControls {
    pub u: Field,
    pub v: Field,
    pub h1: Field,
    pub h2: Field,
    pub report: SteerReport,
}

/// Planned steering of one component with a frozen source.
fn steer_component(
    st: &Stepper,
    plan: &SteeringPlan,
    first: &CauchySlice,
    last: &CauchySlice,
    src: &Field,
) -> Result<(Field, f64)> {
    let grid = plan.grid;
    let s = |n: usize, j: usize| src.at(n, j);
    let zero = |_| (0.0, 0.0);
    let (fw, bw) = rayon::join(
        || wavelab::solve_scalar(st, grid, Direction::Forward, first, &s, &zero),
        || wavelab::solve_scalar(st, grid, Direction::Backward, last, &s, &zero),
    );
    let (fw, bw) = (fw?, bw?);
    let strips: Vec<wavelab::StripSolution> = plan
        .strips
        .par_iter()
        .map(|&strip| wavelab::strip_control(st, &fw, &bw, src, strip, plan.n0, plan.n1, plan.eta))
        .collect::<Result<_>>()?;
    let arrival = strips.iter().map(|s| s.arrival_error).fold(0.0, f64::max);
    let owner: Vec<Option<usize>> = (0..grid.nx).map(|j| plan.strip_of(j)).collect();
    let out = Field::from_rows("u", grid, |n, row| {
        let p = plan.phi[n];
        for (j, out) in row.iter_mut().enumerate() {
            let (f, b) = (fw.at(n, j), bw.at(n, j));
            let blend = if p == 1.0 {
                f
            } else if p == 0.0 {
                b
            } else {
                b + p * (f - b)
            };
            let xi = plan.xi[j];
            *out = if xi == 0.0 {
                blend
            } else {
                let sv = strips[owner[j].expect("xi > 0 lies in a strip")].at(n, j);
                if xi == 1.0 {
                    sv
                } else {
                    blend + xi * (sv - blend)
                }
            };
        }
    });
    Ok((out, arrival))
}

/// Residual W u - s on interior nodes, zero on the grid boundary.
fn residual(u: &Field, nu: f64, s: &Field) -> Field {
    let g = u.grid;
    let mut h = fd::wave2(u, nu);
    for n in 1..g.nt - 1 {
        let row = h.row_mut(n);
        for j in 1..g.nx - 1 {
            row[j] -= s.at(n, j);
        }
    }
    h
}

fn slice_error(a: &CauchySlice, b: &CauchySlice) -> (f64, f64) {
    let n = a.value.len();
    let m = |x: &[f64], y: &[f64]| (1..n - 1).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max);
    (m(&a.value, &b.value), m(&a.velocity, &b.velocity))
}

/// Steers the (possibly shifted) system from the initial to the final data
/// with one control per equation supported in Q_delta.
pub fn steer_two_controls(sys: &System, plan: &SteeringPlan, data: &EndpointData, cfg: SteerConfig) -> Result<TwoControls> {
    let grid = plan.grid;
    let eqs = Equations { nu1: sys.nu1, nu2: sys.nu2, coupling: sys.coupling.clone() };
    let report = compat::check_compatibility(&eqs, data, cfg.compat_order, compat::DEFAULT_TOL)?;
    if let Some(v) = report.violations.first() {
        return Err(Error::DataIncompatible(format!(
            "{} violation(s), first at corner {} eq {} n {} value {:e}",
            report.violations.len(),
            v.corner.label(),
            v.equation,
            v.n,
            v.value
        )));
    }
    let (s1, s2) = sys.steppers(&grid)?;
    let u_first = CauchySlice::sample(0.0, &data.u0, &data.u1, &grid);
    let v_first = CauchySlice::sample(0.0, &data.v0, &data.v1, &grid);
    let u_last = CauchySlice::sample(grid.t_end, &data.u0f, &data.u1f, &grid);
    let v_last = CauchySlice::sample(grid.t_end, &data.v0f, &data.v1f, &grid);

    let mut u = Field::zeros("u", grid);
    let mut v = Field::zeros("v", grid);
    let mut sweeps = 0;
    let arrival = loop {
        sweeps += 1;
        let src1 = sys.source_field(1, &u, &v);
        let (nu, a1) = steer_component(&s1, plan, &u_first, &u_last, &src1)?;
        let src2 = sys.source_field(2, &nu, &v);
        let (nv, a2) = steer_component(&s2, plan, &v_first, &v_last, &src2)?;
        let change = nu.sub(&u).max_abs().max(nv.sub(&v).max_abs());
        u = nu;
        v = nv;
        if change < SWEEP_TOL {
            break a1.max(a2);
        }
        if sweeps >= cfg.max_sweeps {
            return Err(Error::PicardDiverged(format!("sweep change {change:e} after {sweeps} sweeps")));
        }
    };
    let src1 = sys.source_field(1, &u, &v);
    let src2 = sys.source_field(2, &u, &v);
    let h1 = residual(&u, sys.nu1, &src1).renamed("h1");
    let h2 = residual(&v, sys.nu2, &src2).renamed("h2");
    let audit = support_audit(&h1, &h2, &plan.covering);
    let keep = Mask::from_fn(grid, |t, x| plan.covering.in_q_delta(t, x));
    let h1 = h1.masked(&keep);
    let h2 = h2.masked(&keep);

    let (u, v) = wavelab::solve_forward(sys, grid, &u_first, &v_first, Some((&h1, &h2)))?;
    let last = grid.nt - 1;
    let uf = wavelab::final_slice(&s1, &u, &|j| sys.f(1, last, j, u.at(last, j), v.at(last, j)) + h1.at(last, j));
    let vf = wavelab::final_slice(&s2, &v, &|j| sys.f(2, last, j, u.at(last, j), v.at(last, j)) + h2.at(last, j));
    let ui = wavelab::initial_slice(&s1, &u, &|j| sys.f(1, 0, j, u.at(0, j), v.at(0, j)) + h1.at(0, j));
    let vi = wavelab::initial_slice(&s2, &v, &|j| sys.f(2, 0, j, u.at(0, j), v.at(0, j)) + h2.at(0, j));
    let max2 = |a: (f64, f64), b: (f64, f64)| (a.0.max(b.0), a.1.max(b.1));
    let final_error = max2(slice_error(&uf, &u_last), slice_error(&vf, &v_last));
    let initial_error = max2(slice_error(&ui, &u_first), slice_error(&vi, &v_first));
    let (nu_, nv_) = data.norms();
    let data_norm = nu_.max(nv_);
    let ratio = |x: f64| if data_norm > 0.0 { x / data_norm } else { 0.0 };
    let report = SteerReport {
        sweeps,
        arrival_error: arrival,
        audit,
        initial_error,
        final_error,
        data_norm,
        h_ratio: [ratio(h1.max_abs()), ratio(h2.max_abs())],
        state_ratio: ratio(u.max_abs().max(v.max_abs())),
    };
    Ok(TwoControls { u, v, h1, h2, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::Coupling;
    use crate::geometry::build_covering;

    fn setup(nx: usize) -> (CoveringSet, Grid) {
        let (l, t) = (1.0, 1.0);
        let cov = build_covering(t, 0.05, 0.95, 0.2, 0.15, 4.0, 4.0).unwrap();
        let dx = l / (nx - 1) as f64;
        let nt = (t * 4.0 / (0.9 * dx)).ceil() as usize + 1;
        (cov, Grid::new(t, l, nt, nx).unwrap())
    }

    #[test]
    fn plan_cutoffs() {
        let (cov, g) = setup(401);
        let plan = SteeringPlan::new(&cov, 1.0, g, 32).unwrap();
        assert_eq!(plan.strips.len(), cov.n() + 1);
        assert_eq!(phi(0.0, 1.0, 0.2), 1.0);
        assert_eq!(phi(0.2, 1.0, 0.2), 1.0);
        assert_eq!(phi(0.8, 1.0, 0.2), 0.0);
        assert_eq!(plan.xi[0], 1.0);
        assert_eq!(plan.xi[g.nx - 1], 1.0);
        // xi vanishes on every rectangle core
        for (i, &(lo, hi)) in cov.rects.iter().enumerate() {
            let dl = if i == 0 { plan.end_deltas.0 } else { plan.gap_deltas[i - 1] };
            let dr = if i + 1 == cov.n() { plan.end_deltas.1 } else { plan.gap_deltas[i] };
            for j in 0..g.nx {
                let x = g.x(j);
                if x >= lo + dl && x <= hi - dr {
                    assert_eq!(plan.xi[j], 0.0);
                }
                if x < cov.rects[0].0 || x > cov.rects[cov.n() - 1].1 {
                    assert_eq!(plan.xi[j], 1.0);
                }
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let (cov, g) = setup(201);
        let plan = SteeringPlan::new(&cov, 1.0, g, 16).unwrap();
        let sys = System::new(4.0, 4.0, Coupling::cubic());
        let out = steer_two_controls(&sys, &plan, &EndpointData::zero(1.0), SteerConfig::default()).unwrap();
        assert_eq!(out.u.max_abs() + out.v.max_abs() + out.h1.max_abs() + out.h2.max_abs(), 0.0);
    }

    #[test]
    fn sine_mode_steered_to_rest() {
        let (cov, g) = setup(401);
        let plan = SteeringPlan::new(&cov, 1.0, g, 64).unwrap();
        let sys = System::new(4.0, 4.0, Coupling::cubic());
        let data = EndpointData::sine_mode(1.0, 1, 1e-3);
        let out = steer_two_controls(&sys, &plan, &data, SteerConfig::default()).unwrap();
        let r = &out.report;
        assert!(r.sweeps <= 2, "{r:?}");
        assert!(r.initial_error.0 == 0.0 && r.initial_error.1 < 1e-14);
        assert!(r.final_error.0 < 1e-5 && r.final_error.1 < 1e-4, "{r:?}");
        assert!(r.audit.relative_outside() < 1e-8, "{r:?}");
        let again = support_audit(&out.h1, &out.h2, &cov);
        assert_eq!(again.outside_q_delta, [0.0, 0.0]);
    }

    #[test]
    fn audit_flags_mass_outside() {
        let (cov, g) = setup(101);
        let mut h = Field::zeros("h", g);
        let z = Field::zeros("z", g);
        assert_eq!(support_audit(&h, &z, &cov).outside_q_delta, [0.0, 0.0]);
        h.set(g.nt / 2, g.col(cov.a), 1.0);
        assert_eq!(support_audit(&h, &z, &cov).outside_q_delta[0], 1.0);
    }

    #[test]
    fn incompatible_data_rejected() {
        let (cov, g) = setup(101);
        let plan = SteeringPlan::new(&cov, 1.0, g, 8).unwrap();
        let sys = System::new(4.0, 4.0, Coupling::cubic());
        let data = EndpointData::bump(1.0, 0.0, 0.3, 1e-3);
        assert!(matches!(steer_two_controls(&sys, &plan, &data, SteerConfig::default()), Err(Error::DataIncompatible(_))));
    }
}
