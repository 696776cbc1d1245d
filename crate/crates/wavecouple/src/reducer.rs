//! Elimination of the second control: the residual operator D, its
//! linearization, the explicit right inverse of the linearization and a
//! damped Newton loop built on it.
//!
//! All fields are perturbations around the background carried by the
//! [`System`]; couplings are evaluated in shifted form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{Field, Mask};
use crate::wavelab::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveOp {
    /// three-point stencils, the operator the leapfrog solver inverts
    Leapfrog,
    /// fourth-order stencils with one-sided closures
    Fourth,
}

fn wave(u: &Field, nu: f64, op: WaveOp) -> Field {
    match op {
        WaveOp::Leapfrog => fd::wave2(u, nu),
        WaveOp::Fourth => fd::wave4(u, nu),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    General,
    Cubic,
    CubicShifted,
}

/// Coupling class plus the smallest admissible |df2/du| on Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec {
    pub kind: SpecKind,
    pub floor: f64,
}

pub const FLOOR_FRACTION: f64 = 1e-6;

impl CouplingSpec {
    /// Floor at FLOOR_FRACTION times the largest |df2/du| over `region`.
    pub fn from_region(kind: SpecKind, sys: &System, u: &Field, v: &Field, region: &Mask) -> CouplingSpec {
        let peak = df2du(sys, u, v).max_abs_where(region);
        CouplingSpec { kind, floor: FLOOR_FRACTION * peak }
    }

    /// Floor at half of |df2/du(0, 0)|, for couplings non-degenerate at rest.
    pub fn at_rest(sys: &System) -> CouplingSpec {
        CouplingSpec { kind: SpecKind::General, floor: 0.5 * sys.coupling.grad(2, 0.0, 0.0).0.abs() }
    }
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub r1: Field,
    pub r2: Field,
}

impl Residual {
    pub fn norms(&self) -> (f64, f64) {
        (self.r1.max_abs(), self.r2.max_abs())
    }
}

fn interior(f: &mut Field) {
    let g = f.grid;
    for n in 0..g.nt {
        let row = f.row_mut(n);
        if n == 0 || n + 1 == g.nt {
            row.fill(0.0);
        } else {
            row[0] = 0.0;
            row[g.nx - 1] = 0.0;
        }
    }
}

/// D(u, v, h) = (W1 u - f1 - h, W2 v - f2) on interior nodes.
pub fn apply_d_with(sys: &System, u: &Field, v: &Field, h: &Field, op: WaveOp) -> Residual {
    let mut r1 = wave(u, sys.nu1, op);
    let mut r2 = wave(v, sys.nu2, op);
    let g = u.grid;
    r1.data.par_chunks_mut(g.nx).zip(r2.data.par_chunks_mut(g.nx)).enumerate().for_each(|(n, (a, b))| {
        for j in 0..g.nx {
            let (x, y) = (u.at(n, j), v.at(n, j));
            a[j] -= sys.f(1, n, j, x, y) + h.at(n, j);
            b[j] -= sys.f(2, n, j, x, y);
        }
    });
    interior(&mut r1);
    interior(&mut r2);
    Residual { r1: r1.renamed("r1"), r2: r2.renamed("r2") }
}

pub fn apply_d(sys: &System, u: &Field, v: &Field, h: &Field) -> Residual {
    apply_d_with(sys, u, v, h, WaveOp::Leapfrog)
}

fn df2du(sys: &System, u: &Field, v: &Field) -> Field {
    Field::from_rows("df2du", u.grid, |n, row| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = sys.grad(2, n, j, u.at(n, j), v.at(n, j)).0;
        }
    })
}

/// L_z(du, dv, dh) = (W1 du - Df1 (du, dv) - dh, W2 dv - Df2 (du, dv)).
pub fn linearize(sys: &System, u: &Field, v: &Field, du: &Field, dv: &Field, dh: &Field) -> Residual {
    let g = u.grid;
    let mut r1 = fd::wave2(du, sys.nu1);
    let mut r2 = fd::wave2(dv, sys.nu2);
    r1.data.par_chunks_mut(g.nx).zip(r2.data.par_chunks_mut(g.nx)).enumerate().for_each(|(n, (a, b))| {
        for j in 0..g.nx {
            let (x, y) = (u.at(n, j), v.at(n, j));
            let (p, q) = (du.at(n, j), dv.at(n, j));
            let (f1u, f1v) = sys.grad(1, n, j, x, y);
            let (f2u, f2v) = sys.grad(2, n, j, x, y);
            a[j] -= f1u * p + f1v * q + dh.at(n, j);
            b[j] -= f2u * p + f2v * q;
        }
    });
    interior(&mut r1);
    interior(&mut r2);
    Residual { r1, r2 }
}

#[derive(Debug, Clone)]
pub struct Increment {
    pub du: Field,
    pub dv: Field,
    pub dh: Field,
}

/// Right inverse of L_z: dv = 0, du = -r2 / (df2/du), dh = W1 du - (df1/du) du - r1,
/// applied to the residual restricted to `region`. Fails where r2 is nonzero
/// in the region and |df2/du| is below the floor.
pub fn infinitesimal_inverse(
    sys: &System,
    u: &Field,
    v: &Field,
    r: &Residual,
    spec: &CouplingSpec,
    region: &Mask,
) -> Result<Increment> {
    let g = u.grid;
    let d = df2du(sys, u, v);
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut du = Field::zeros("du", g);
    for n in 0..g.nt {
        for j in 0..g.nx {
            let r2 = r.r2.at(n, j);
            if r2 == 0.0 || !region.at(n, j) {
                continue;
            }
            let dd = d.at(n, j);
            if !(dd.abs() >= spec.floor) || dd == 0.0 {
                if worst.map_or(true, |w| dd.abs() < w.2) {
                    worst = Some((n, j, dd.abs()));
                }
                continue;
            }
            du.set(n, j, -r2 / dd);
        }
    }
    if let Some((n, j, dd)) = worst {
        return Err(Error::FloorViolated(format!(
            "|df2/du| = {dd:e} below floor {:e} at (t, x) = ({}, {})",
            spec.floor,
            g.t(n),
            g.x(j)
        )));
    }
    let mut dh = fd::wave2(&du, sys.nu1);
    for n in 0..g.nt {
        for j in 0..g.nx {
            let f1u = sys.grad(1, n, j, u.at(n, j), v.at(n, j)).0;
            let r1 = if region.at(n, j) { r.r1.at(n, j) } else { 0.0 };
            let val = dh.at(n, j) - f1u * du.at(n, j) - r1;
            dh.set(n, j, val);
        }
    }
    interior(&mut dh);
    Ok(Increment { du, dv: Field::zeros("dv", g), dh: dh.renamed("dh") })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// tolerances of the two residual components
    pub tol: (f64, f64),
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: (1e-7, 1e-7), max_iter: 25, max_halvings: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub residual_inf: f64,
    pub step_damping: f64,
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub u: Field,
    pub v: Field,
    pub h: Field,
    pub trace: Vec<IterRecord>,
    pub residual: (f64, f64),
}

impl Reduced {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    /// CSV `iter,residual_inf,step_damping`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iter,residual_inf,step_damping\n");
        for r in &self.trace {
            s.push_str(&format!("{},{:.17e},{:.17e}\n", r.iter, r.residual_inf, r.step_damping));
        }
        s
    }
}

fn score(r: &Residual, tol: (f64, f64)) -> f64 {
    let (a, b) = r.norms();
    (a / tol.0).max(b / tol.1)
}

/// Damped Newton iteration z <- z + M_z(target - D(z)) until both residual
/// components are below their tolerances. Corrections are driven by the
/// residual inside `region` only, so z is left unchanged away from it.
pub fn reduce_to_one_control(
    sys: &System,
    z0: (&Field, &Field, &Field),
    target: Option<&Residual>,
    spec: &CouplingSpec,
    region: &Mask,
    cfg: NewtonConfig,
) -> Result<Reduced> {
    let (mut u, mut v, mut h) = (z0.0.clone(), z0.1.clone(), z0.2.clone());
    let defect = |u: &Field, v: &Field, h: &Field| -> Residual {
        let mut r = apply_d(sys, u, v, h);
        if let Some(t) = target {
            r.r1 = r.r1.sub(&t.r1);
            r.r2 = r.r2.sub(&t.r2);
        }
        r
    };
    // cells reached by the stencil of W du
    let bleed = region.dilate(1);
    let resync = |u: &Field, v: &Field, h: &mut Field| {
        let w = fd::wave2(u, sys.nu1);
        let g = u.grid;
        for n in 1..g.nt - 1 {
            for j in 1..g.nx - 1 {
                if bleed.at(n, j) {
                    let t = target.map_or(0.0, |t| t.r1.at(n, j));
                    h.set(n, j, w.at(n, j) - sys.f(1, n, j, u.at(n, j), v.at(n, j)) - t);
                }
            }
        }
    };
    let mut r = defect(&u, &v, &h);
    let mut s = score(&r, cfg.tol);
    let norm = |r: &Residual| r.norms().0.max(r.norms().1);
    let mut trace = vec![IterRecord { iter: 0, residual_inf: norm(&r), step_damping: 0.0 }];
    let mut iter = 0;
    while s > 1.0 {
        if iter == cfg.max_iter {
            return Err(Error::NewtonStalled(format!("residual {:e} after {iter} iterations; trace {trace:?}", norm(&r))));
        }
        iter += 1;
        let neg = Residual { r1: r.r1.scaled(-1.0), r2: r.r2.scaled(-1.0) };
        let inc = infinitesimal_inverse(sys, &u, &v, &neg, spec, region)?;
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let tu = u.zip_with(&inc.du, |a, b| a + damping * b);
            let tv = v.zip_with(&inc.dv, |a, b| a + damping * b);
            let mut th = h.zip_with(&inc.dh, |a, b| a + damping * b);
            // h is re-read from the first equation so that the increments'
            // rounding does not accumulate at the scale of |h|
            resync(&tu, &tv, &mut th);
            let tr = defect(&tu, &tv, &th);
            let ts = score(&tr, cfg.tol);
            if ts < s {
                accepted = Some((tu, tv, th, tr, ts));
                break;
            }
            damping *= 0.5;
        }
        let Some((tu, tv, th, tr, ts)) = accepted else {
            return Err(Error::NewtonStalled(format!("no decrease from {:e} after {} halvings; trace {trace:?}", norm(&r), cfg.max_halvings)));
        };
        u = tu;
        v = tv;
        h = th;
        r = tr;
        s = ts;
        trace.push(IterRecord { iter, residual_inf: norm(&r), step_damping: damping });
    }
    let residual = r.norms();
    Ok(Reduced { u: u.renamed("u"), v: v.renamed("v"), h: h.renamed("h"), trace, residual })
}
