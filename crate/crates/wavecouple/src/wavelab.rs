//! Constant-speed 1D wave solvers: leapfrog marching, d'Alembert boundary
//! control, Picard iteration for semilinear sources, sidewise marching, the
//! characteristic flux diagnostic and discrete strip control.

use std::sync::Arc;

use crate::coupling::Coupling;
use crate::data::{self, ScalarData, SpatialFn};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::jet::Jet;
use crate::profiles::cutoff::{step, step_jet};

/// Magnitude beyond which a solution is declared to have blown up.
pub const BLOW_UP: f64 = 1e6;

/// Leapfrog coefficients of one component on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepper {
    pub nu: f64,
    pub dt: f64,
    /// (nu dt / dx)^2
    pub c2: f64,
    pub dt2: f64,
}

impl Stepper {
    pub fn new(grid: &Grid, nu: f64) -> Result<Stepper> {
        grid.check_cfl(nu)?;
        let c = nu * grid.dt / grid.dx;
        Ok(Stepper { nu, dt: grid.dt, c2: c * c, dt2: grid.dt * grid.dt })
    }

    /// Next value from the previous one, the current three-point stencil and
    /// the source at the current node.
    #[inline]
    pub fn next(&self, prev: f64, l: f64, c: f64, r: f64, s: f64) -> f64 {
        (2.0 * c - prev) + self.c2 * (r - 2.0 * c + l) + self.dt2 * s
    }

    /// Second-order first step from position c, velocity w (signed with the
    /// marching direction) and source s.
    #[inline]
    pub fn start(&self, l: f64, c: f64, r: f64, w: f64, s: f64) -> f64 {
        c + self.dt * w + 0.5 * (self.c2 * (r - 2.0 * c + l) + self.dt2 * s)
    }

    /// Velocity at the first row of a march recovered from rows 0 and 1,
    /// inverting [`Stepper::start`].
    #[inline]
    pub fn velocity(&self, l: f64, c: f64, r: f64, next: f64, s: f64) -> f64 {
        (next - c - 0.5 * (self.c2 * (r - 2.0 * c + l) + self.dt2 * s)) / self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Position and velocity along a t-slice (or, for sidewise marching, value
/// and x-derivative along an x-slice).
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySlice {
    pub position: f64,
    pub value: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl CauchySlice {
    pub fn zeros(position: f64, n: usize) -> CauchySlice {
        CauchySlice { position, value: vec![0.0; n], velocity: vec![0.0; n] }
    }

    pub fn sample(position: f64, value: &SpatialFn, velocity: &SpatialFn, grid: &Grid) -> CauchySlice {
        CauchySlice { position, value: data::sample(value, grid), velocity: data::sample(velocity, grid) }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.value.len() != n || self.velocity.len() != n {
            return Err(Error::OutOfDomain(format!("slice has {} samples, grid axis has {n}", self.value.len())));
        }
        if !self.value.iter().chain(&self.velocity).all(|v| v.is_finite()) {
            return Err(Error::OutOfDomain("slice contains non-finite samples".into()));
        }
        Ok(())
    }
}

fn check_row(row: &[f64], n: usize) -> Result<()> {
    if row.iter().any(|v| !(v.abs() <= BLOW_UP)) {
        return Err(Error::BlowUp(format!("|field| exceeds {BLOW_UP:e} at row {n}")));
    }
    Ok(())
}

/// Per-node source of K coupled components: (n, j, values at (n, j)).
pub type Source<'a, const K: usize> = &'a (dyn Fn(usize, usize, &[f64; K]) -> [f64; K] + Sync);
/// Boundary values (left, right) of K components at row n.
pub type Traces<'a, const K: usize> = &'a (dyn Fn(usize) -> [(f64, f64); K] + Sync);

/// Leapfrog march of K components over the whole grid.
pub fn march<const K: usize>(
    steppers: [&Stepper; K],
    grid: Grid,
    dir: Direction,
    first: [&CauchySlice; K],
    src: Source<'_, K>,
    traces: Traces<'_, K>,
) -> Result<[Field; K]> {
    let (nt, nx) = (grid.nt, grid.nx);
    for s in &first {
        s.check(nx)?;
    }
    let row_of = |k: usize| if dir == Direction::Forward { k } else { nt - 1 - k };
    let sign = if dir == Direction::Forward { 1.0 } else { -1.0 };
    let mut out: [Field; K] = std::array::from_fn(|_| Field::zeros("u", grid));
    let values_at = |fields: &[Field; K], n: usize, j: usize| -> [f64; K] { std::array::from_fn(|c| fields[c].at(n, j)) };

    let n0 = row_of(0);
    let tr = traces(n0);
    for c in 0..K {
        let row = out[c].row_mut(n0);
        row.copy_from_slice(&first[c].value);
        row[0] = tr[c].0;
        row[nx - 1] = tr[c].1;
    }
    let n1 = row_of(1);
    let tr = traces(n1);
    for j in 1..nx - 1 {
        let s = src(n0, j, &values_at(&out, n0, j));
        for c in 0..K {
            let cur = out[c].row(n0);
            let v = steppers[c].start(cur[j - 1], cur[j], cur[j + 1], sign * first[c].velocity[j], s[c]);
            out[c].set(n1, j, v);
        }
    }
    for c in 0..K {
        out[c].set(n1, 0, tr[c].0);
        out[c].set(n1, nx - 1, tr[c].1);
    }
    let mut s_row = vec![[0.0; K]; nx];
    for k in 1..nt - 1 {
        let (np, nc, nn) = (row_of(k - 1), row_of(k), row_of(k + 1));
        for (j, s) in s_row.iter_mut().enumerate().take(nx - 1).skip(1) {
            *s = src(nc, j, &values_at(&out, nc, j));
        }
        let tr = traces(nn);
        for c in 0..K {
            let st = steppers[c];
            let mut next = vec![0.0; nx];
            {
                let prev = out[c].row(np);
                let cur = out[c].row(nc);
                for j in 1..nx - 1 {
                    next[j] = st.next(prev[j], cur[j - 1], cur[j], cur[j + 1], s_row[j][c]);
                }
            }
            next[0] = tr[c].0;
            next[nx - 1] = tr[c].1;
            check_row(&next, nn)?;
            out[c].row_mut(nn).copy_from_slice(&next);
        }
    }
    Ok(out)
}

/// Single component with a source that does not depend on the solution.
pub fn solve_scalar(
    st: &Stepper,
    grid: Grid,
    dir: Direction,
    first: &CauchySlice,
    src: &(dyn Fn(usize, usize) -> f64 + Sync),
    traces: &(dyn Fn(usize) -> (f64, f64) + Sync),
) -> Result<Field> {
    let [u] = march([st], grid, dir, [first], &|n, j, _: &[f64; 1]| [src(n, j)], &|n| [traces(n)])?;
    Ok(u)
}

/// Coupled system u_tt - nu1^2 u_xx = f1 + h1, v_tt - nu2^2 v_xx = f2 + h2
/// with f_i shifted around an optional background (ub, vb).
#[derive(Debug, Clone)]
pub struct System {
    pub nu1: f64,
    pub nu2: f64,
    pub coupling: Coupling,
    pub background: Option<(Arc<Field>, Arc<Field>)>,
}

impl System {
    pub fn new(nu1: f64, nu2: f64, coupling: Coupling) -> System {
        System { nu1, nu2, coupling, background: None }
    }

    pub fn with_background(mut self, ub: Arc<Field>, vb: Arc<Field>) -> System {
        self.background = Some((ub, vb));
        self
    }

    #[inline]
    pub fn background_at(&self, n: usize, j: usize) -> (f64, f64) {
        match &self.background {
            None => (0.0, 0.0),
            Some((ub, vb)) => (ub.at(n, j), vb.at(n, j)),
        }
    }

    /// Shifted coupling f_i at node (n, j).
    #[inline]
    pub fn f(&self, i: usize, n: usize, j: usize, u: f64, v: f64) -> f64 {
        let (ub, vb) = self.background_at(n, j);
        self.coupling.shifted(i, ub, vb, u, v)
    }

    /// Gradient of f_i at the full state background + (u, v).
    #[inline]
    pub fn grad(&self, i: usize, n: usize, j: usize, u: f64, v: f64) -> (f64, f64) {
        let (ub, vb) = self.background_at(n, j);
        self.coupling.grad(i, ub + u, vb + v)
    }

    pub fn steppers(&self, grid: &Grid) -> Result<(Stepper, Stepper)> {
        grid.check_cfl(self.nu1.max(self.nu2))?;
        Ok((Stepper::new(grid, self.nu1)?, Stepper::new(grid, self.nu2)?))
    }

    /// Field of f_i evaluated on given (u, v).
    pub fn source_field(&self, i: usize, u: &Field, v: &Field) -> Field {
        let g = u.grid;
        Field::from_rows("f", g, |n, row| {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.f(i, n, j, u.at(n, j), v.at(n, j));
            }
        })
    }
}

/// Coupled march with zero Dirichlet traces and optional controls.
pub fn solve_system(
    sys: &System,
    grid: Grid,
    dir: Direction,
    u_first: &CauchySlice,
    v_first: &CauchySlice,
    controls: Option<(&Field, &Field)>,
) -> Result<(Field, Field)> {
    let (s1, s2) = sys.steppers(&grid)?;
    let src = |n: usize, j: usize, w: &[f64; 2]| {
        let (h1, h2) = controls.map_or((0.0, 0.0), |(a, b)| (a.at(n, j), b.at(n, j)));
        [sys.f(1, n, j, w[0], w[1]) + h1, sys.f(2, n, j, w[0], w[1]) + h2]
    };
    let [u, v] = march([&s1, &s2], grid, dir, [u_first, v_first], &src, &|_| [(0.0, 0.0); 2])?;
    Ok((u.renamed("u"), v.renamed("v")))
}

pub fn solve_forward(
    sys: &System,
    grid: Grid,
    u_first: &CauchySlice,
    v_first: &CauchySlice,
    controls: Option<(&Field, &Field)>,
) -> Result<(Field, Field)> {
    solve_system(sys, grid, Direction::Forward, u_first, v_first, controls)
}

pub fn solve_backward(
    sys: &System,
    grid: Grid,
    u_last: &CauchySlice,
    v_last: &CauchySlice,
    controls: Option<(&Field, &Field)>,
) -> Result<(Field, Field)> {
    solve_system(sys, grid, Direction::Backward, u_last, v_last, controls)
}

/// Position and velocity of a field at its last row, the velocity taken by
/// inverting the backward first step (consistent with the backward march).
pub fn final_slice(st: &Stepper, u: &Field, src_last: &dyn Fn(usize) -> f64) -> CauchySlice {
    let g = u.grid;
    let (nl, np) = (g.nt - 1, g.nt - 2);
    let cur = u.row(nl);
    let prev = u.row(np);
    let mut vel = vec![0.0; g.nx];
    for j in 1..g.nx - 1 {
        // backward start: prev = cur - dt w + ...; so w = -(prev - cur - ...)/dt
        vel[j] = -st.velocity(cur[j - 1], cur[j], cur[j + 1], prev[j], src_last(j));
    }
    CauchySlice { position: g.t_end, value: cur.to_vec(), velocity: vel }
}

/// Position and velocity at the first row, inverting the forward first step.
pub fn initial_slice(st: &Stepper, u: &Field, src_first: &dyn Fn(usize) -> f64) -> CauchySlice {
    let g = u.grid;
    let cur = u.row(0);
    let next = u.row(1);
    let mut vel = vec![0.0; g.nx];
    for j in 1..g.nx - 1 {
        vel[j] = st.velocity(cur[j - 1], cur[j], cur[j + 1], next[j], src_first(j));
    }
    CauchySlice { position: 0.0, value: cur.to_vec(), velocity: vel }
}

/// Discrete energy at half steps n + 1/2 (conserved exactly by the
/// unforced leapfrog with homogeneous Dirichlet traces).
pub fn energy(u: &Field, nu: f64) -> Vec<f64> {
    let g = u.grid;
    let (dt, dx) = (g.dt, g.dx);
    (0..g.nt - 1)
        .map(|n| {
            let (a, b) = (u.row(n), u.row(n + 1));
            let mut e = 0.0;
            for j in 0..g.nx {
                let ut = (b[j] - a[j]) / dt;
                e += 0.5 * ut * ut * dx;
                if j + 1 < g.nx {
                    e += 0.5 * nu * nu * (b[j + 1] - b[j]) * (a[j + 1] - a[j]) / dx;
                }
            }
            e
        })
        .collect()
}

/// Continuous energy 0.5 * int (w^2 + nu^2 u_x^2) of a sampled slice.
pub fn slice_energy(s: &CauchySlice, nu: f64, dx: f64) -> f64 {
    let n = s.value.len();
    let mut e = 0.0;
    for j in 0..n {
        let wt = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        e += 0.5 * wt * s.velocity[j] * s.velocity[j] * dx;
        if j + 1 < n {
            let ux = (s.value[j + 1] - s.value[j]) / dx;
            e += 0.5 * nu * nu * ux * ux * dx;
        }
    }
    e
}

// ---------------------------------------------------------------- d'Alembert

const GAUSS5_X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GAUSS5_W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];

/// int_0^s f by composite five-point Gauss-Legendre on panels <= `panel`.
fn integrate(f: &SpatialFn, s: f64, panel: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let n = (s.abs() / panel).ceil().max(1.0) as usize;
    let h = s / n as f64;
    let mut acc = 0.0;
    for p in 0..n {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GAUSS5_X.iter().zip(&GAUSS5_W) {
            acc += w * data::value(f, mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// Jet of the antiderivative int_0^y f at the jet y.
fn antiderivative(f: &SpatialFn, y: &Jet, panel: f64) -> Jet {
    let order = y.order();
    let y0 = y.value();
    let local = f(&Jet::variable(y0, order));
    let mut coeffs = vec![integrate(f, y0, panel)];
    for m in 0..order {
        coeffs.push(local.coeff(m) / (m + 1) as f64);
    }
    y.compose(&coeffs)
}

/// C^k blend across (p, q) of the degree-k Taylor polynomials at both ends.
#[derive(Debug, Clone, Copy)]
struct Bridge {
    p: f64,
    q: f64,
    jp: Jet,
    jq: Jet,
}

impl Bridge {
    fn eval(&self, s: &Jet) -> Jet {
        let beta = step_jet(&((*s - self.p) / (self.q - self.p)));
        let tp = taylor_on(&self.jp, self.p, s);
        let tq = taylor_on(&self.jq, self.q, s);
        (1.0 - beta) * tp + beta * tq
    }
}

/// Evaluates the Taylor polynomial `t` (about `at`) on the jet `s`.
fn taylor_on(t: &Jet, at: f64, s: &Jet) -> Jet {
    let w = *s - at;
    let mut acc = Jet::zero(s.order());
    for &c in t.coeffs().iter().rev() {
        acc = acc * w + c;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Boundary values at the grid times plus time jets at t = 0 and t = T.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub side: Side,
    pub values: Vec<f64>,
    pub jets: [Vec<f64>; 2],
}

/// d'Alembert representation u = F(x - nu t) + G(x + nu t) on [0, L] with F
/// and G fixed by initial and final data and bridged across the gap.
#[derive(Clone)]
pub struct DAlembert {
    pub nu: f64,
    pub l: f64,
    pub t_end: f64,
    pub one_sided: bool,
    /// controlled side; data are mirrored when it is the right one
    pub side: Side,
    data: ScalarData,
    order: usize,
    bridge_f: Bridge,
    bridge_g: Option<Bridge>,
    panel: f64,
}

impl DAlembert {
    fn f_init(&self, s: &Jet) -> Jet {
        0.5 * (self.data.u0)(s) - antiderivative(&self.data.u1, s, self.panel) * (0.5 / self.nu)
    }

    fn g_init(&self, s: &Jet) -> Jet {
        0.5 * (self.data.u0)(s) + antiderivative(&self.data.u1, s, self.panel) * (0.5 / self.nu)
    }

    fn f_final(&self, s: &Jet) -> Jet {
        let y = *s + self.nu * self.t_end;
        0.5 * (self.data.u0f)(&y) - antiderivative(&self.data.u1f, &y, self.panel) * (0.5 / self.nu)
    }

    fn g_final(&self, s: &Jet) -> Jet {
        let y = *s - self.nu * self.t_end;
        0.5 * (self.data.u0f)(&y) + antiderivative(&self.data.u1f, &y, self.panel) * (0.5 / self.nu)
    }

    pub fn big_f(&self, s: &Jet) -> Jet {
        let (l, nt) = (self.l, self.nu * self.t_end);
        let x = s.value();
        if !self.one_sided {
            if x >= 0.0 {
                self.f_init(s)
            } else if x <= l - nt {
                self.f_final(s)
            } else {
                self.bridge_f.eval(s)
            }
        } else if x >= l {
            -self.g_init(&(2.0 * l - *s))
        } else if x >= 0.0 {
            self.f_init(s)
        } else if x <= l - nt {
            self.f_final(s)
        } else if x <= 2.0 * l - nt {
            -self.g_final(&(2.0 * l - *s))
        } else {
            self.bridge_f.eval(s)
        }
    }

    pub fn big_g(&self, s: &Jet) -> Jet {
        let (l, nt) = (self.l, self.nu * self.t_end);
        let x = s.value();
        if x <= l {
            self.g_init(s)
        } else if self.one_sided {
            -self.big_f(&(2.0 * l - *s))
        } else if x >= nt {
            self.g_final(s)
        } else {
            self.bridge_g.expect("two-sided bridge").eval(s)
        }
    }

    /// u at (t, x) in the original orientation.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        let x = if self.side == Side::Right && self.one_sided { self.l - x } else { x };
        let tt = Jet::constant(t, 0);
        self.eval_tjet(&tt, x).value()
    }

    fn eval_tjet(&self, t: &Jet, x: f64) -> Jet {
        self.big_f(&(x - self.nu * *t)) + self.big_g(&(x + self.nu * *t))
    }

    /// Boundary trace at x = 0 (or x = L) on the times of `grid`.
    pub fn trace(&self, side: Side, grid: &Grid) -> BoundaryTrace {
        let x = match (side, self.one_sided && self.side == Side::Right) {
            (Side::Left, false) | (Side::Right, true) => 0.0,
            _ => self.l,
        };
        let values = (0..grid.nt).map(|n| self.eval_tjet(&Jet::constant(grid.t(n), 0), x).value()).collect();
        let jet = |t: f64| {
            let j = self.eval_tjet(&Jet::variable(t, self.order), x);
            (0..=self.order).map(|k| j.derivative(k)).collect()
        };
        BoundaryTrace { side, values, jets: [jet(0.0), jet(self.t_end)] }
    }
}

fn jet_order(k: usize) -> usize {
    k.clamp(1, crate::jet::MAX_ORDER - 1)
}

/// Two-sided linear boundary control steering (u0, u1) at t = 0 to
/// (u0f, u1f) at t = T; needs nu T > L.
pub fn dalembert_two_sided(nu: f64, data: &ScalarData, t_end: f64, l: f64, k: usize) -> Result<DAlembert> {
    let nt = nu * t_end;
    if !(nt > l) {
        return Err(Error::TimeTooShort(format!("nu T = {nt} must exceed L = {l} for two-sided control")));
    }
    let order = jet_order(k);
    let placeholder = Bridge { p: 0.0, q: 1.0, jp: Jet::zero(order), jq: Jet::zero(order) };
    let mut d = DAlembert {
        nu,
        l,
        t_end,
        one_sided: false,
        side: Side::Left,
        data: data.clone(),
        order,
        bridge_f: placeholder,
        bridge_g: Some(placeholder),
        panel: l / 256.0,
    };
    let (p, q) = (l - nt, 0.0);
    d.bridge_f = Bridge { p, q, jp: d.f_final(&Jet::variable(p, order)), jq: d.f_init(&Jet::variable(q, order)) };
    let (p, q) = (l, nt);
    d.bridge_g = Some(Bridge { p, q, jp: d.g_init(&Jet::variable(p, order)), jq: d.g_final(&Jet::variable(q, order)) });
    Ok(d)
}

/// One-sided control from `side`, homogeneous Dirichlet on the other side;
/// needs nu T > 2L.
pub fn dalembert_one_sided(nu: f64, side: Side, data: &ScalarData, t_end: f64, l: f64, k: usize) -> Result<DAlembert> {
    let nt = nu * t_end;
    if !(nt > 2.0 * l) {
        return Err(Error::TimeTooShort(format!("nu T = {nt} must exceed 2L = {} for one-sided control", 2.0 * l)));
    }
    let order = jet_order(k);
    let data = match side {
        Side::Left => data.clone(),
        Side::Right => ScalarData {
            u0: data::mirrored(&data.u0, l),
            u1: data::mirrored(&data.u1, l),
            u0f: data::mirrored(&data.u0f, l),
            u1f: data::mirrored(&data.u1f, l),
        },
    };
    let placeholder = Bridge { p: 0.0, q: 1.0, jp: Jet::zero(order), jq: Jet::zero(order) };
    let mut d = DAlembert { nu, l, t_end, one_sided: true, side, data, order, bridge_f: placeholder, bridge_g: None, panel: l / 256.0 };
    let (p, q) = (2.0 * l - nt, 0.0);
    let jp = -d.g_final(&(2.0 * l - Jet::variable(p, order)));
    d.bridge_f = Bridge { p, q, jp, jq: d.f_init(&Jet::variable(q, order)) };
    Ok(d)
}

// ------------------------------------------------------- semilinear control

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sides {
    Both,
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct SegmentControl {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub field: Field,
    pub iterations: usize,
    /// ratio of the last two successive-iterate differences
    pub contraction: f64,
    /// max |u(T) - u0f| and max |u_t(T) - u1f|
    pub final_error: (f64, f64),
}

/// Picard iteration for u_tt - nu^2 u_xx = f(u) on the grid's segment with
/// boundary control on `sides`: each iterate is the frozen-source forward
/// solution plus a d'Alembert correction steering its final defect to zero.
#[allow(clippy::too_many_arguments)]
pub fn semilinear_boundary_control(
    nu: f64,
    f: &(dyn Fn(f64) -> f64 + Sync),
    lipschitz: f64,
    data: &ScalarData,
    grid: Grid,
    sides: Sides,
    k: usize,
    tol: f64,
) -> Result<SegmentControl> {
    let t_end = grid.t_end;
    if lipschitz * t_end * t_end > 0.5 {
        return Err(Error::PicardDiverged(format!(
            "source Lipschitz bound {lipschitz} times T^2 = {} exceeds the small-data radius 0.5",
            lipschitz * t_end * t_end
        )));
    }
    let st = Stepper::new(&grid, nu)?;
    let first = CauchySlice::sample(0.0, &data.u0, &data.u1, &grid);
    let target = CauchySlice::sample(t_end, &data.u0f, &data.u1f, &grid);
    let mut w = Field::zeros("w", grid);
    let mut last_change = f64::INFINITY;
    let mut contraction = 0.0;
    for it in 1..=50 {
        let s = w.map(f);
        let p = solve_scalar(&st, grid, Direction::Forward, &first, &|n, j| s.at(n, j), &|_| (0.0, 0.0))?;
        let pf = final_slice(&st, &p, &|j| s.at(grid.nt - 1, j));
        let defect = ScalarData {
            u0: data::zero(),
            u1: data::zero(),
            u0f: data::sampled(target.value.iter().zip(&pf.value).map(|(a, b)| a - b).collect(), grid.dx),
            u1f: data::sampled(target.velocity.iter().zip(&pf.velocity).map(|(a, b)| a - b).collect(), grid.dx),
        };
        let (left, right) = match sides {
            Sides::Both => {
                let d = dalembert_two_sided(nu, &defect, t_end, grid.l, k)?;
                (d.trace(Side::Left, &grid).values, d.trace(Side::Right, &grid).values)
            }
            Sides::Left => (dalembert_one_sided(nu, Side::Left, &defect, t_end, grid.l, k)?.trace(Side::Left, &grid).values, vec![0.0; grid.nt]),
            Sides::Right => (vec![0.0; grid.nt], dalembert_one_sided(nu, Side::Right, &defect, t_end, grid.l, k)?.trace(Side::Right, &grid).values),
        };
        let next = solve_scalar(&st, grid, Direction::Forward, &first, &|n, j| s.at(n, j), &|n| (left[n], right[n]))?;
        let change = next.sub(&w).max_abs();
        if it > 1 && last_change.is_finite() && last_change > 0.0 {
            contraction = change / last_change;
        }
        if it > 2 && change > 10.0 * last_change {
            return Err(Error::PicardDiverged(format!("iterate change grew from {last_change:e} to {change:e}")));
        }
        w = next;
        if change < tol || (it > 1 && change == 0.0) {
            let fin = final_slice(&st, &w, &|j| f(w.at(grid.nt - 1, j)));
            let e0 = fin.value.iter().zip(&target.value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let e1 = fin.velocity.iter().zip(&target.velocity).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            // the first iterate is the linear construction when the source of zero vanishes
            let iterations = if it > 1 && change == 0.0 { it - 1 } else { it };
            return Ok(SegmentControl { left, right, field: w, iterations, contraction, final_error: (e0, e1) });
        }
        last_change = change;
    }
    Err(Error::PicardDiverged(format!("no convergence to {tol:e} in 50 iterations")))
}

// ------------------------------------------------------------- sidewise

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeEdge {
    /// rows 0 and nt-1 are identified
    Periodic,
    /// u_tt taken as zero on the first and last row
    Zero,
}

/// Marches u_xx = u_tt / nu^2 in x from the column at `slice.position`
/// (value and x-derivative over all rows) towards increasing x (`dir` > 0)
/// or decreasing x. Columns behind the slice stay zero.
pub fn sidewise_solve(nu: f64, slice: &CauchySlice, dir: i32, grid: Grid, edge: TimeEdge) -> Result<Field> {
    let mu = grid.dx / (nu * grid.dt);
    if mu > 1.0 + 1e-12 {
        return Err(Error::CflViolation(format!("sidewise Courant number dx/(nu dt) = {mu:.4} exceeds 1")));
    }
    slice.check(grid.nt)?;
    let nt = grid.nt;
    let mu2 = mu * mu;
    let utt = |col: &[f64], n: usize| -> f64 {
        match edge {
            TimeEdge::Periodic => {
                let p = nt - 1;
                let m = n % p;
                col[(m + 1) % p] - 2.0 * col[m] + col[(m + p - 1) % p]
            }
            TimeEdge::Zero => {
                if n == 0 || n + 1 == nt {
                    0.0
                } else {
                    col[n + 1] - 2.0 * col[n] + col[n - 1]
                }
            }
        }
    };
    let j0 = grid.col(slice.position);
    let cols: Vec<usize> = if dir > 0 { (j0..grid.nx).collect() } else { (0..=j0).rev().collect() };
    let s = if dir > 0 { 1.0 } else { -1.0 };
    let mut out = Field::zeros("u", grid);
    let mut prev = slice.value.clone();
    for n in 0..nt {
        out.set(n, j0, prev[n]);
    }
    if cols.len() < 2 {
        return Ok(out);
    }
    let mut cur: Vec<f64> = (0..nt).map(|n| prev[n] + s * grid.dx * slice.velocity[n] + 0.5 * mu2 * utt(&prev, n)).collect();
    if edge == TimeEdge::Periodic {
        cur[nt - 1] = cur[0];
    }
    for n in 0..nt {
        out.set(n, cols[1], cur[n]);
    }
    for &j in &cols[2..] {
        let mut next: Vec<f64> = (0..nt).map(|n| 2.0 * cur[n] - prev[n] + mu2 * utt(&cur, n)).collect();
        if edge == TimeEdge::Periodic {
            next[nt - 1] = next[0];
        }
        check_row(&next, j)?;
        for n in 0..nt {
            out.set(n, j, next[n]);
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(out)
}

// ---------------------------------------------------- characteristic flux

/// Compares w(t, x0 + nu t) - w(0, x0) with int_0^t h(s, x0 + nu s) ds for
/// w = u_t - nu u_x, at 100 sampled characteristics; returns the max defect.
pub fn characteristic_flux_check(u: &Field, h: &Field, nu: f64) -> Result<f64> {
    let g = u.grid;
    let t_max = g.t_end.min(0.95 * g.l / nu);
    let rows_max = (t_max / g.dt).floor() as usize;
    if rows_max < 2 {
        return Err(Error::CharacteristicExitsDomain(format!(
            "every characteristic of speed {nu} leaves [0, {}] within two steps",
            g.l
        )));
    }
    let w = |n: usize, j: usize| -> f64 {
        let ut = if n == 0 {
            (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) / (2.0 * g.dt)
        } else if n + 1 == g.nt {
            (3.0 * u.at(n, j) - 4.0 * u.at(n - 1, j) + u.at(n - 2, j)) / (2.0 * g.dt)
        } else {
            (u.at(n + 1, j) - u.at(n - 1, j)) / (2.0 * g.dt)
        };
        let ux = if j == 0 {
            (-3.0 * u.at(n, 0) + 4.0 * u.at(n, 1) - u.at(n, 2)) / (2.0 * g.dx)
        } else if j + 1 == g.nx {
            (3.0 * u.at(n, j) - 4.0 * u.at(n, j - 1) + u.at(n, j - 2)) / (2.0 * g.dx)
        } else {
            (u.at(n, j + 1) - u.at(n, j - 1)) / (2.0 * g.dx)
        };
        ut - nu * ux
    };
    let interp = |f: &dyn Fn(usize, usize) -> f64, n: usize, x: f64| -> Result<f64> {
        if x < -1e-12 || x > g.l + 1e-12 {
            return Err(Error::CharacteristicExitsDomain(format!("x = {x} outside [0, {}]", g.l)));
        }
        let s = (x / g.dx).clamp(0.0, (g.nx - 1) as f64);
        let j = (s.floor() as usize).min(g.nx - 2);
        let a = s - j as f64;
        Ok((1.0 - a) * f(n, j) + a * f(n, j + 1))
    };
    let hv = |n: usize, j: usize| h.at(n, j);
    let mut worst = 0.0f64;
    for a in 0..10 {
        let n = (rows_max * (a + 1) / 10).max(2);
        let t = g.t(n);
        for b in 0..10 {
            let x0 = (g.l - nu * t) * (b as f64 + 0.5) / 10.0;
            let lhs = interp(&w, n, x0 + nu * t)? - interp(&w, 0, x0)?;
            let mut rhs = 0.0;
            for m in 0..=n {
                let wt = if m == 0 || m == n { 0.5 } else { 1.0 };
                rhs += wt * interp(&hv, m, x0 + nu * g.t(m))?;
            }
            rhs *= g.dt;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

// ------------------------------------------------------- strip control

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripKind {
    /// [0, x_r], wall at x = 0
    Left,
    /// [x_l, L], wall at x = L
    Right,
    /// interior strip
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strip {
    pub kind: StripKind,
    pub jl: usize,
    pub jr: usize,
}

/// Solution on the columns jl..=jr of a strip.
#[derive(Debug, Clone)]
pub struct StripSolution {
    pub strip: Strip,
    pub nt: usize,
    pub width: usize,
    pub data: Vec<f64>,
    /// max over the strip of |S - b| on rows n1 - 1, n1
    pub arrival_error: f64,
}

impl StripSolution {
    #[inline]
    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.data[n * self.width + (j - self.strip.jl)]
    }
}

/// Maximum number of mismatch corrections in [`strip_control`].
pub const REFINE_PASSES: usize = 20;

/// Boundary control of one strip, fully discrete.
///
/// `p` is a forward and `b` a backward solution of the same leapfrog scheme
/// with source `src` on the full grid. The returned strip solution equals p
/// up to row n0 and reaches b on rows n1 - 1, n1. Its edge values between
/// n0 and n1 are p plus the edge values of the free-space backward leapfrog
/// from the two-row state chi (b - p) at n1 - 1, n1, with chi = 1 on the strip
/// and a flat decay over `eta` cells. End strips use a Dirichlet wall at the
/// physical boundary; interior strips first cancel the discrete velocity mass
/// of that state with bumps placed beyond the decay zone. The arrival
/// mismatch left by numerical dispersion is steered away by repeating the
/// construction on it.
pub fn strip_control(
    st: &Stepper,
    p: &Field,
    b: &Field,
    src: &Field,
    strip: Strip,
    n0: usize,
    n1: usize,
    eta: usize,
) -> Result<StripSolution> {
    let g = p.grid;
    let (nt, nx) = (g.nt, g.nx);
    let Strip { kind, jl, jr } = strip;
    if !(jl < jr && jr < nx && 1 <= n0 && n0 + 2 < n1 && n1 < nt) {
        return Err(Error::OutOfDomain(format!("strip columns {jl}..{jr} or rows {n0}..{n1} invalid")));
    }
    let eta = eta.max(2);
    let span = ((st.nu * g.dt * (n1 - n0) as f64) / g.dx).ceil() as i64;
    let pad = span / 2 + 6 * eta as i64 + 16;
    let (kl, kr): (i64, i64) = match kind {
        StripKind::Left => (0, jr as i64 + pad),
        StripKind::Right => (jl as i64 - pad, nx as i64 - 1),
        StripKind::Gap => (jl as i64 - pad, jr as i64 + pad),
    };
    if kind == StripKind::Gap && (jl < eta + 1 || jr + eta + 1 >= nx) {
        return Err(Error::OutOfDomain("interior strip decay zone leaves the grid".into()));
    }
    let m = (kr - kl + 1) as usize;
    let idx = |k: i64| (k - kl) as usize;
    let chi = |k: i64| -> f64 {
        let (l, r) = (jl as i64, jr as i64);
        if k >= l && k <= r {
            1.0
        } else if k > r {
            1.0 - step((k - r) as f64 / eta as f64)
        } else {
            1.0 - step((l - k) as f64 / eta as f64)
        }
    };
    let init_row = |n: usize| -> Vec<f64> {
        let mut row = vec![0.0; m];
        for k in kl..=kr {
            if k >= 0 && (k as usize) < nx {
                let c = chi(k);
                if c != 0.0 {
                    let j = k as usize;
                    row[idx(k)] = c * (b.at(n, j) - p.at(n, j));
                }
            }
        }
        row
    };
    let (el, er) = (idx(jl as i64), idx(jr as i64));
    // edge values for rows n0..=n1 of the free-space backward solution from
    // the two-row state (w_cur at n1 - 1, w_next at n1)
    let aux_edges = |mut w_next: Vec<f64>, mut w_cur: Vec<f64>| -> Vec<(f64, f64)> {
        if kind == StripKind::Gap {
            let mass: f64 = w_next.iter().zip(&w_cur).map(|(a, c)| a - c).sum();
            let width = 2 * eta;
            let mut bumps = vec![0.0; m];
            let mut total = 0.0;
            for o in 0..=width {
                let v = crate::profiles::cutoff::bump(o as f64 / width as f64);
                for &k in &[jr as i64 + 2 * eta as i64 + o as i64, jl as i64 - 2 * eta as i64 - o as i64] {
                    bumps[idx(k)] += v;
                    total += v;
                }
            }
            for (w, bv) in w_cur.iter_mut().zip(&bumps) {
                *w += mass * bv / total;
            }
        }
        let mut edge = vec![(0.0, 0.0); n1 - n0 + 1];
        edge[n1 - n0] = (w_next[el], w_next[er]);
        edge[n1 - 1 - n0] = (w_cur[el], w_cur[er]);
        let mut w_prev = vec![0.0; m];
        for n in (n0 + 1..n1).rev() {
            // row n - 1 from rows n, n + 1
            for i in 1..m - 1 {
                w_prev[i] = st.next(w_next[i], w_cur[i - 1], w_cur[i], w_cur[i + 1], 0.0);
            }
            w_prev[0] = 0.0;
            w_prev[m - 1] = 0.0;
            edge[n - 1 - n0] = (w_prev[el], w_prev[er]);
            std::mem::swap(&mut w_next, &mut w_cur);
            std::mem::swap(&mut w_cur, &mut w_prev);
        }
        edge
    };
    let width = jr - jl + 1;
    let solve = |edge: &[(f64, f64)], last: usize| -> Result<Vec<f64>> {
        let mut s = vec![0.0; (last + 1) * width];
        let trace = |n: usize| -> (f64, f64) {
            if n <= n0 {
                (p.at(n, jl), p.at(n, jr))
            } else if n < n1 {
                let (a, c) = edge[n - n0];
                (p.at(n, jl) + a, p.at(n, jr) + c)
            } else {
                (b.at(n, jl), b.at(n, jr))
            }
        };
        for n in 0..2 {
            s[n * width..(n + 1) * width].copy_from_slice(&p.row(n)[jl..=jr]);
        }
        for n in 1..last {
            let (prev, rest) = s.split_at_mut(n * width);
            let prev = &prev[(n - 1) * width..];
            let (cur, next) = rest.split_at_mut(width);
            let next = &mut next[..width];
            for i in 1..width - 1 {
                next[i] = st.next(prev[i], cur[i - 1], cur[i], cur[i + 1], src.at(n, jl + i));
            }
            let (a, c) = trace(n + 1);
            next[0] = a;
            next[width - 1] = c;
            check_row(next, n + 1)?;
        }
        Ok(s)
    };
    let mismatch = |s: &[f64], n: usize| -> Vec<f64> {
        let mut row = vec![0.0; m];
        for i in 0..width {
            row[idx((jl + i) as i64)] = b.at(n, jl + i) - s[n * width + i];
        }
        row
    };
    let arrival = |s: &[f64]| -> f64 {
        [n1 - 1, n1].iter().flat_map(|&n| (0..width).map(move |i| (n, i))).map(|(n, i)| (s[n * width + i] - b.at(n, jl + i)).abs()).fold(0.0, f64::max)
    };
    let mut edge = aux_edges(init_row(n1), init_row(n1 - 1));
    let mut s = solve(&edge, n1)?;
    let mut err = arrival(&s);
    // the remaining mismatch comes from the dispersive tail of the auxiliary
    // solution; steering it again contracts it by the same small factor
    for _ in 0..REFINE_PASSES {
        if err == 0.0 {
            break;
        }
        let extra = aux_edges(mismatch(&s, n1), mismatch(&s, n1 - 1));
        let trial: Vec<(f64, f64)> = edge.iter().zip(&extra).map(|(a, c)| (a.0 + c.0, a.1 + c.1)).collect();
        let ts = solve(&trial, n1)?;
        let te = arrival(&ts);
        if !(te < err) {
            break;
        }
        edge = trial;
        s = ts;
        err = te;
    }
    let s = solve(&edge, nt - 1)?;
    let arrival_error = arrival(&s);
    Ok(StripSolution { strip, nt, width, data: s, arrival_error })
}

/// Sources of both components as a function of t only, for rows helpers.
pub fn rows_between(grid: &Grid, t0: f64, t1: f64) -> (usize, usize) {
    let n0 = ((t0 / grid.dt) + 1e-9).floor() as usize;
    let n1 = ((t1 / grid.dt) - 1e-9).ceil() as usize;
    (n0.min(grid.nt - 1), n1.min(grid.nt - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(t: f64, l: f64, nx: usize, nu: f64, cfl: f64) -> Grid {
        let dx = l / (nx - 1) as f64;
        let nt = (t * nu / (cfl * dx)).ceil() as usize + 1;
        Grid::new(t, l, nt, nx).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid(1.0, 1.0, 41, 1.0, 0.9);
        let sys = System::new(1.0, 1.0, Coupling::cubic());
        let z = CauchySlice::zeros(0.0, g.nx);
        let (u, v) = solve_forward(&sys, g, &z, &z, None).unwrap();
        assert_eq!(u.max_abs() + v.max_abs(), 0.0);
    }

    #[test]
    fn standing_wave_second_order() {
        let mut errs = vec![];
        for &nx in &[101, 201] {
            let g = grid(1.0, 1.0, nx, 1.0, 0.9);
            let st = Stepper::new(&g, 1.0).unwrap();
            let s = CauchySlice::sample(0.0, &data::sine(1, 1.0, 1.0), &data::zero(), &g);
            let u = solve_scalar(&st, g, Direction::Forward, &s, &|_, _| 0.0, &|_| (0.0, 0.0)).unwrap();
            let exact = Field::from_fn("e", g, |t, x| (PI * t).cos() * (PI * x).sin());
            errs.push(u.sub(&exact).max_abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(errs[1] < 1e-4 && order > 1.9, "{errs:?} {order}");
    }

    #[test]
    fn energy_is_conserved() {
        let g = grid(2.0, 1.0, 201, 1.0, 0.9);
        let st = Stepper::new(&g, 1.0).unwrap();
        let s = CauchySlice::sample(0.0, &data::bump(0.4, 0.3, 1.0), &data::sine(2, 0.5, 1.0), &g);
        let u = solve_scalar(&st, g, Direction::Forward, &s, &|_, _| 0.0, &|_| (0.0, 0.0)).unwrap();
        let e = energy(&u, 1.0);
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0];
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn backward_reverses_forward() {
        let g = grid(1.0, 1.0, 101, 1.0, 0.9);
        let st = Stepper::new(&g, 1.0).unwrap();
        let s = CauchySlice::sample(0.0, &data::bump(0.5, 0.4, 1.0), &data::zero(), &g);
        let u = solve_scalar(&st, g, Direction::Forward, &s, &|_, _| 0.0, &|_| (0.0, 0.0)).unwrap();
        let fin = final_slice(&st, &u, &|_| 0.0);
        let back = solve_scalar(&st, g, Direction::Backward, &fin, &|_, _| 0.0, &|_| (0.0, 0.0)).unwrap();
        assert!(back.sub(&u).max_abs() < 1e-10);
    }

    #[test]
    fn cfl_and_blow_up_are_reported() {
        let g = Grid::new(1.0, 1.0, 11, 101).unwrap();
        assert!(matches!(Stepper::new(&g, 1.0), Err(Error::CflViolation(_))));
        let g = grid(1.0, 1.0, 41, 1.0, 0.9);
        let sys = System::new(1.0, 1.0, Coupling { f1: crate::coupling::Poly2::new(&[(1.0, 3, 0)]), f2: Default::default() });
        let s = CauchySlice::sample(0.0, &data::sine(1, 50.0, 1.0), &data::zero(), &g);
        let z = CauchySlice::zeros(0.0, g.nx);
        assert!(matches!(solve_forward(&sys, g, &s, &z, None), Err(Error::BlowUp(_))));
    }

    fn sine_to_rest(l: f64) -> ScalarData {
        ScalarData { u0: data::sine(1, 1.0, l), u1: data::zero(), u0f: data::zero(), u1f: data::zero() }
    }

    #[test]
    fn zero_to_zero_gives_zero_traces() {
        let z = ScalarData { u0: data::zero(), u1: data::zero(), u0f: data::zero(), u1f: data::zero() };
        let g = grid(1.5, 1.0, 41, 1.0, 0.9);
        let d = dalembert_two_sided(1.0, &z, 1.5, 1.0, 4).unwrap();
        assert!(d.trace(Side::Left, &g).values.iter().all(|v| *v == 0.0));
        let d = dalembert_one_sided(1.0, Side::Left, &z, 2.5, 1.0, 4).unwrap();
        assert!(d.trace(Side::Left, &g).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_sided_control_reaches_rest() {
        let (l, nu) = (1.0, 1.0);
        let t = 1.5 * l / nu;
        let d = dalembert_two_sided(nu, &sine_to_rest(l), t, l, 4).unwrap();
        // representation reproduces the data
        assert!((d.value(0.0, 0.3) - (PI * 0.3).sin()).abs() < 1e-12);
        assert!(d.value(t, 0.3).abs() < 1e-12);
        let mut errs = vec![];
        for nx in [201usize, 401] {
            let g = grid(t, l, nx, nu, 0.9);
            let (lt, rt) = (d.trace(Side::Left, &g), d.trace(Side::Right, &g));
            let st = Stepper::new(&g, nu).unwrap();
            let s = CauchySlice::sample(0.0, &data::sine(1, 1.0, l), &data::zero(), &g);
            let u = solve_scalar(&st, g, Direction::Forward, &s, &|_, _| 0.0, &|n| (lt.values[n], rt.values[n])).unwrap();
            let fin = final_slice(&st, &u, &|_| 0.0);
            let e: f64 = fin.value.iter().chain(&fin.velocity).fold(0.0, |a, b| a.max(b.abs()));
            errs.push(e);
        }
        assert!(errs[1] < 1e-3 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn transported_packet_leaves_through_the_left() {
        let (l, nu) = (1.0, 1.0);
        let t = 1.2;
        let phi = data::bump(0.5, 0.4, 1.0);
        let phi_c = phi.clone();
        // u1 = nu phi' for a left-moving packet G(x + nu t)
        let u1: SpatialFn = Arc::new(move |x: &Jet| {
            let j = phi_c(&Jet::variable(x.value(), x.order() + 1));
            x.compose(&j.diff().coeffs()[..]) * nu
        });
        let data = ScalarData { u0: phi, u1, u0f: data::zero(), u1f: data::zero() };
        let d = dalembert_two_sided(nu, &data, t, l, 4).unwrap();
        let g = grid(t, l, 401, nu, 0.9);
        let lt = d.trace(Side::Left, &g);
        let peak = lt.values.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-3);
        for k in 0..=20 {
            assert!(d.value(t, k as f64 / 20.0).abs() < 1e-8);
        }
    }

    #[test]
    fn time_too_short() {
        let d = sine_to_rest(1.0);
        assert!(matches!(dalembert_two_sided(1.0, &d, 0.9, 1.0, 4), Err(Error::TimeTooShort(_))));
        assert!(matches!(dalembert_one_sided(1.0, Side::Left, &d, 1.8, 1.0, 4), Err(Error::TimeTooShort(_))));
    }

    #[test]
    fn one_sided_control_keeps_far_side_homogeneous() {
        let (l, nu, t) = (1.0, 1.0, 2.2);
        for side in [Side::Left, Side::Right] {
            let d = dalembert_one_sided(nu, side, &sine_to_rest(l), t, l, 4).unwrap();
            let far = if side == Side::Left { l } else { 0.0 };
            for k in 0..=50 {
                assert!(d.value(t * k as f64 / 50.0, far).abs() < 1e-10);
            }
            assert!((d.value(0.0, 0.3) - (PI * 0.3).sin()).abs() < 1e-12);
            assert!(d.value(t, 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_jets_match_corner_data() {
        let d = dalembert_two_sided(1.0, &sine_to_rest(1.0), 1.2, 1.0, 4).unwrap();
        let g = grid(1.2, 1.0, 41, 1.0, 0.9);
        let tr = d.trace(Side::Left, &g);
        // u(0, 0) = 0, u_t(0, 0) = u1(0) = 0
        assert!(tr.jets[0][0].abs() < 1e-14 && tr.jets[0][1].abs() < 1e-12);
    }

    #[test]
    fn picard_without_coupling_is_linear_construction() {
        let (l, nu, t) = (1.0, 1.0, 1.3);
        let g = grid(t, l, 201, nu, 0.9);
        let d = ScalarData { u0: data::sine(1, 1e-3, l), u1: data::zero(), u0f: data::zero(), u1f: data::zero() };
        let r = semilinear_boundary_control(nu, &|_| 0.0, 0.0, &d, g, Sides::Both, 4, 1e-10).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.final_error.0 < 1e-6);
    }

    #[test]
    fn picard_contracts_for_weak_coupling() {
        let (l, nu, t) = (1.0, 1.0, 1.3);
        let g = grid(t, l, 201, nu, 0.9);
        let d = ScalarData { u0: data::sine(1, 1e-2, l), u1: data::zero(), u0f: data::zero(), u1f: data::zero() };
        let f = |u: f64| 1e-3 * (u + u * u * u);
        let r = semilinear_boundary_control(nu, &f, 1.1e-3, &d, g, Sides::Both, 4, 1e-10).unwrap();
        assert!(r.iterations <= 5, "{}", r.iterations);
        assert!(r.contraction < 1e-2);
        assert!(r.final_error.0 < 1e-5);
        assert!(matches!(
            semilinear_boundary_control(nu, &f, 1.0, &d, g, Sides::Both, 4, 1e-10),
            Err(Error::PicardDiverged(_))
        ));
    }

    #[test]
    fn sidewise_plane_wave_and_constants() {
        // unit sidewise Courant number: F(x - nu t) propagates exactly
        let (nu, nt, nx) = (1.0, 41, 21);
        let g = Grid::new(1.0, 0.5, nt, nx).unwrap();
        let f = |s: f64| (2.0 * PI * s).sin();
        let slice = CauchySlice {
            position: 0.0,
            value: (0..nt).map(|n| f(-g.t(n))).collect(),
            velocity: (0..nt).map(|n| 2.0 * PI * (2.0 * PI * -g.t(n)).cos()).collect(),
        };
        let u = sidewise_solve(nu, &slice, 1, g, TimeEdge::Periodic).unwrap();
        for n in 0..nt {
            for j in 0..nx {
                assert!((u.at(n, j) - f(g.x(j) - g.t(n))).abs() < 1e-2);
            }
        }
        let c = CauchySlice { position: 0.0, value: vec![2.0; nt], velocity: vec![0.0; nt] };
        let u = sidewise_solve(nu, &c, 1, g, TimeEdge::Periodic).unwrap();
        assert!(u.data.iter().all(|v| *v == 2.0));
        let bad = Grid::new(1.0, 1.0, 11, 11).unwrap();
        assert!(matches!(sidewise_solve(0.5, &c, 1, bad, TimeEdge::Zero), Err(Error::CflViolation(_)) | Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn sidewise_round_trip_is_second_order() {
        let mut errs = vec![];
        for m in [40usize, 80] {
            let g = Grid::new(1.0, 0.25, 2 * m + 1, m + 1).unwrap();
            let slice = CauchySlice {
                position: 0.0,
                value: (0..g.nt).map(|n| (2.0 * PI * g.t(n)).sin()).collect(),
                velocity: (0..g.nt).map(|n| (2.0 * PI * g.t(n)).cos()).collect(),
            };
            let right = sidewise_solve(1.0, &slice, 1, g, TimeEdge::Periodic).unwrap();
            let j = g.nx - 1;
            let back = CauchySlice {
                position: g.l,
                value: (0..g.nt).map(|n| right.at(n, j)).collect(),
                velocity: (0..g.nt)
                    .map(|n| (3.0 * right.at(n, j) - 4.0 * right.at(n, j - 1) + right.at(n, j - 2)) / (2.0 * g.dx))
                    .collect(),
            };
            let left = sidewise_solve(1.0, &back, -1, g, TimeEdge::Periodic).unwrap();
            errs.push((0..g.nt).map(|n| (left.at(n, 0) - slice.value[n]).abs()).fold(0.0, f64::max));
        }
        let rate = errs[0] / errs[1];
        assert!(errs[1] < 1e-3 && rate > 3.0, "{errs:?}");
    }

    #[test]
    fn flux_check_on_travelling_wave() {
        let (nu, nx) = (1.0, 201);
        let g = Grid::new(0.5, 1.0, 101, nx).unwrap();
        // difference quotients are exact on quadratics
        let u = Field::from_fn("u", g, |t, x| (x - nu * t).powi(2));
        let h = Field::zeros("h", g);
        assert!(characteristic_flux_check(&u, &h, nu).unwrap() < 1e-8);
    }

    #[test]
    fn flux_check_is_second_order() {
        let mut d = vec![];
        for &nx in &[101, 201] {
            let g = Grid::new(0.5, 1.0, nx, nx).unwrap();
            // box u = (2 + t^2) sin x + 0.51 cos(x - 0.7 t)
            let u = Field::from_fn("u", g, |t, x| t * t * x.sin() + (x - 0.7 * t).cos());
            let h = Field::from_fn("h", g, |t, x| (2.0 + t * t) * x.sin() + 0.51 * (x - 0.7 * t).cos());
            d.push(characteristic_flux_check(&u, &h, 1.0).unwrap());
        }
        let ratio = d[0] / d[1];
        assert!(ratio > 3.0 && ratio < 5.0, "{d:?}");
    }

    fn strip_case(kind: StripKind, x0: f64, x1: f64, nx: usize, eta: usize) -> (StripSolution, Field, usize) {
        let (l, nu, t) = (1.0, 1.0, 1.4);
        let g = grid(t, l, nx, nu, 0.9);
        let st = Stepper::new(&g, nu).unwrap();
        let s = CauchySlice::sample(0.0, &data::bump(0.5, 0.6, 1.0), &data::sine(2, 0.5, 1.0), &g);
        let p = solve_scalar(&st, g, Direction::Forward, &s, &|_, _| 0.0, &|_| (0.0, 0.0)).unwrap();
        let b = Field::zeros("b", g);
        let (jl, jr) = (g.col(x0), g.col(x1));
        let (n0, n1) = rows_between(&g, 0.1, 1.3);
        let sol = strip_control(&st, &p, &b, &Field::zeros("s", g), Strip { kind, jl, jr }, n0, n1, eta).unwrap();
        (sol, p, n0)
    }

    #[test]
    fn strip_control_reaches_target_and_starts_from_forward() {
        for (kind, x0, x1) in [(StripKind::Gap, 0.4, 0.6), (StripKind::Left, 0.0, 0.2), (StripKind::Right, 0.75, 1.0)] {
            let (sol, p, n0) = strip_case(kind, x0, x1, 401, 32);
            for n in 0..=n0 {
                for j in sol.strip.jl..=sol.strip.jr {
                    assert_eq!(sol.at(n, j).to_bits(), p.at(n, j).to_bits());
                }
            }
            assert!(sol.arrival_error < 2e-6, "{kind:?} {}", sol.arrival_error);
        }
    }
}
