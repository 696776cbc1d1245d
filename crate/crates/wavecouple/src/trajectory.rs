//! Elementary return trajectory (u, v, h) = (V^{1/3}, sum f_i g_i, box u),
//! superposition of disjoint copies, scaling and diagnostics.
//!
//! Space is measured internally in units of the second speed, so the
//! elementary profile lives at unit speed: z = |x - x0| / (nu2 * lambda(t)).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{Field, Grid};
use crate::jet::Jet;
use crate::profiles::temporal::DEFAULT_ORDER;
use crate::profiles::{
    build_bumps, build_stationary, build_temporal, build_temporal_unchecked, BumpTriple, StationaryProfile, TemporalProfiles,
};

pub const DEFAULT_DELTA_PRIME: f64 = 0.03;
pub const DEFAULT_DELTA_DOUBLE_PRIME: f64 = 0.22;

/// The three profile families shared by every elementary copy.
#[derive(Debug, Clone)]
pub struct Profiles {
    pub stationary: StationaryProfile,
    pub bumps: BumpTriple,
    pub temporal: TemporalProfiles,
}

impl Profiles {
    pub fn build(
        t_end: f64,
        delta: f64,
        epsilon: f64,
        delta_prime: f64,
        delta_double_prime: f64,
        order: usize,
    ) -> Result<Profiles> {
        let stationary = build_stationary(delta_prime, delta_double_prime)?;
        let bumps = build_bumps(delta_double_prime)?;
        let temporal = build_temporal(t_end, delta, epsilon, &stationary, &bumps, order)?;
        Ok(Profiles { stationary, bumps, temporal })
    }

    pub fn with_defaults(t_end: f64, delta: f64, epsilon: f64) -> Result<Profiles> {
        Profiles::build(t_end, delta, epsilon, DEFAULT_DELTA_PRIME, DEFAULT_DELTA_DOUBLE_PRIME, DEFAULT_ORDER)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Return,
    Steered,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl SupportBox {
    /// Touching boxes, up to rounding of the centers, do not overlap.
    fn overlaps(&self, o: &SupportBox) -> bool {
        let slack = 1e-12 * (self.x1 - self.x0).max(o.x1 - o.x0);
        self.x0 < o.x1 - slack && o.x0 < self.x1 - slack && self.t0 < o.t1 && o.t0 < self.t1
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        t >= self.t0 && t <= self.t1 && x >= self.x0 && x <= self.x1
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryTriple {
    pub u: Field,
    pub v: Field,
    pub h: Field,
    pub supports: Vec<SupportBox>,
    pub kind: Kind,
}

/// One shifted copy of the return trajectory.
#[derive(Debug, Clone)]
pub struct Elementary {
    pub x0: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub profiles: Arc<Profiles>,
}

/// Time-dependent scalars of one instant, relative to f0(t).
#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub zero: bool,
    pub lambda: f64,
    /// ln f0(t)
    pub ln_f0: f64,
    /// ln(f0 / lambda^2)
    pub ln_v: f64,
    ld: f64,
    ldd: f64,
    /// (f_i, f_i', f_i'') / f0(t)
    f: [[f64; 3]; 4],
}

impl Elementary {
    pub fn new(profiles: Arc<Profiles>, x0: f64, nu1: f64, nu2: f64, l: f64) -> Result<Elementary> {
        let e = Elementary { x0, nu1, nu2, profiles };
        let hw = e.half_width();
        if !(hw <= x0 && hw <= l - x0) {
            return Err(Error::OutOfDomain(format!(
                "half-width {hw} does not fit around x0 = {x0} in [0, {l}]"
            )));
        }
        Ok(e)
    }

    pub fn epsilon(&self) -> f64 {
        self.profiles.temporal.epsilon()
    }

    /// Physical half-width of the support, nu2 * epsilon.
    pub fn half_width(&self) -> f64 {
        self.nu2 * self.epsilon()
    }

    pub fn t_end(&self) -> f64 {
        self.profiles.temporal.t_end()
    }

    pub fn support_box(&self) -> SupportBox {
        SupportBox {
            t0: 0.0,
            t1: self.t_end(),
            x0: self.x0 - self.half_width(),
            x1: self.x0 + self.half_width(),
        }
    }

    pub fn row(&self, t: f64) -> Row {
        let tj = self.profiles.temporal.eval(t);
        if tj.is_zero() {
            return Row { zero: true, lambda: 0.0, ln_f0: f64::NEG_INFINITY, ln_v: f64::NEG_INFINITY, ld: 0.0, ldd: 0.0, f: [[0.0; 3]; 4] };
        }
        let lam = tj.lambda;
        let mut f = [[0.0; 3]; 4];
        for i in 0..4 {
            for k in 0..3 {
                f[i][k] = tj.f[i].derivative(k);
            }
        }
        Row {
            zero: false,
            lambda: lam.value(),
            ln_f0: tj.ln_f0,
            ln_v: tj.ln_f0 - 2.0 * lam.value().ln(),
            ld: lam.derivative(1),
            ldd: lam.derivative(2),
            f,
        }
    }

    /// z at (row, x), or `None` outside the support.
    pub fn z_of(&self, row: &Row, x: f64) -> Option<f64> {
        if row.zero {
            return None;
        }
        let z = (x - self.x0).abs() / (self.nu2 * row.lambda);
        if z < 1.0 {
            Some(z)
        } else {
            None
        }
    }

    /// g_i^{(k)}(z) for k = 0..=top.
    fn spatial(&self, z: f64, top: usize) -> [[f64; 6]; 4] {
        let mut g = [[0.0; 6]; 4];
        let g0 = self.profiles.stationary.g_jet(z, top);
        for k in 0..=top {
            g[0][k] = g0.derivative(k);
        }
        if !self.profiles.bumps.is_zero() && (z - 0.75).abs() < self.profiles.bumps.support_radius() {
            for i in 1..=3 {
                let gi = self.profiles.bumps.g_jet(i, z, top);
                for k in 0..=top {
                    g[i][k] = gi.derivative(k);
                }
            }
        }
        g
    }

    /// m-th z-derivative of the i-th summand of lambda^2 V, relative to f0.
    fn a_term(row: &Row, g: &[f64; 6], i: usize, z: f64, m: usize) -> f64 {
        let (lam, ld, ldd) = (row.lambda, row.ld, row.ldd);
        let [f, fd, fdd] = row.f[i];
        let mf = m as f64;
        let c = 2.0 * lam * ld * fd + (lam * ldd - 2.0 * ld * ld) * f;
        let ld2 = ld * ld;
        lam * lam * fdd * g[m] - c * (z * g[m + 1] + mf * g[m])
            - f * ((1.0 - z * z * ld2) * g[m + 2] - ld2 * (2.0 * mf * z * g[m + 1] + mf * (mf - 1.0) * g[m]))
    }

    /// (lambda^2 V)_z^m / f0 split as (stationary term, bump terms).
    pub fn lambda2_v_zderiv(&self, row: &Row, z: f64, m: usize) -> (f64, f64) {
        let g = self.spatial(z, m + 2);
        let a0 = Self::a_term(row, &g[0], 0, z, m);
        let r: f64 = (1..4).map(|i| Self::a_term(row, &g[i], i, z, m)).sum();
        (a0, r)
    }

    /// V = box v at (t, x) from the closed-form expansion.
    pub fn big_v_at(&self, row: &Row, x: f64) -> f64 {
        match self.z_of(row, x) {
            None => 0.0,
            Some(z) => {
                let (a, r) = self.lambda2_v_zderiv(row, z, 0);
                row.ln_v.exp() * (a + r)
            }
        }
    }

    /// V at normalised distance z from the centre; avoids the roundoff of
    /// forming x0 + offset when sampling at sub-ulp-relative spacings.
    pub fn big_v_at_z(&self, row: &Row, z: f64) -> f64 {
        let z = z.abs();
        if row.zero || z >= 1.0 {
            return 0.0;
        }
        let (a, r) = self.lambda2_v_zderiv(row, z, 0);
        row.ln_v.exp() * (a + r)
    }

    pub fn vbar_at(&self, row: &Row, x: f64) -> f64 {
        match self.z_of(row, x) {
            None => 0.0,
            Some(z) => {
                let g = self.spatial(z, 0);
                let s: f64 = (0..4).map(|i| row.f[i][0] * g[i][0]).sum();
                row.ln_f0.exp() * s
            }
        }
    }

    pub fn vbar(&self, t: f64, x: f64) -> f64 {
        self.vbar_at(&self.row(t), x)
    }

    pub fn ubar(&self, t: f64, x: f64) -> f64 {
        self.big_v_at(&self.row(t), x).cbrt()
    }

    /// Time jet of v at fixed x by composing f_i(t) with g_i(z(t)).
    pub fn vbar_tjet(&self, t: f64, x: f64, order: usize) -> Jet {
        self.tjets(t, x, order).0
    }

    /// Time jet of box v = v_tt - nu2^2 v_xx at fixed x.
    pub fn box_v_tjet(&self, t: f64, x: f64, order: usize) -> Jet {
        let (v, vxx) = self.tjets(t, x, order + 2);
        v.diff().diff() - vxx.truncate(order)
    }

    /// Returns (v, nu2^2 v_xx) as time jets.
    fn tjets(&self, t: f64, x: f64, order: usize) -> (Jet, Jet) {
        let tj = self.profiles.temporal.eval_order(t, (order + 6).max(self.profiles.temporal.order()));
        if tj.is_zero() {
            return (Jet::zero(order), Jet::zero(order));
        }
        let lam = tj.lambda.truncate(order);
        let r = (x - self.x0).abs() / self.nu2;
        let z = lam.recip() * r;
        if z.value() >= 1.0 {
            return (Jet::zero(order), Jet::zero(order));
        }
        let scale = tj.ln_f0.exp();
        let mut v = Jet::zero(order);
        let mut vxx = Jet::zero(order);
        let inv_l2 = (lam * lam).recip();
        for i in 0..4 {
            let gj = if i == 0 {
                self.profiles.stationary.g_jet(z.value(), order + 2)
            } else {
                self.profiles.bumps.g_jet(i, z.value(), order + 2)
            };
            let g_of_t = z.compose(gj.coeffs());
            let g2 = gj.diff().diff();
            let g2_of_t = z.compose(g2.coeffs());
            let fi = tj.f[i].truncate(order);
            v += fi * g_of_t;
            vxx += fi * g2_of_t * inv_l2;
        }
        (v * scale, vxx * scale)
    }

    /// Column range touched by the support at a row.
    fn cols(&self, grid: &Grid, row: &Row) -> Option<(usize, usize)> {
        if row.zero {
            return None;
        }
        let hw = self.nu2 * row.lambda;
        grid.cols_within(self.x0 - hw, self.x0 + hw)
    }

    /// Samples (v, V) on a grid.
    pub fn sample(&self, grid: Grid) -> (Field, Field) {
        let rows: Vec<Row> = (0..grid.nt).into_par_iter().map(|n| self.row(grid.t(n))).collect();
        let mut v = Field::from_rows("v", grid, |n, out| {
            let row = &rows[n];
            if let Some((lo, hi)) = self.cols(&grid, row) {
                for j in lo..=hi {
                    out[j] = self.vbar_at(row, grid.x(j));
                }
            }
        });
        let mut big_v = Field::from_rows("V", grid, |n, out| {
            let row = &rows[n];
            if let Some((lo, hi)) = self.cols(&grid, row) {
                for j in lo..=hi {
                    out[j] = self.big_v_at(row, grid.x(j));
                }
            }
        });
        v.analytic = true;
        big_v.analytic = true;
        (v, big_v)
    }

    /// V = box v on the grid from the closed-form expansion.
    pub fn wave_residual_v(&self, grid: Grid) -> Field {
        self.sample(grid).1
    }

    /// Builds (u, v, h) with u the real cube root of V and h its discrete
    /// wave operator, zeroed outside the support.
    pub fn ubar_hbar(&self, grid: Grid) -> Result<TrajectoryTriple> {
        let cells = self.half_width() / grid.dx;
        if cells < 4.0 {
            return Err(Error::CflViolation(format!(
                "support half-width spans {cells:.2} cells; at least 4 needed"
            )));
        }
        let (v, big_v) = self.sample(grid);
        let mut u = big_v.map(f64::cbrt).renamed("u");
        u.analytic = true;
        let mut h = fd::wave4(&u, self.nu1).renamed("h");
        for n in 0..grid.nt {
            let row = self.row(grid.t(n));
            let cols = self.cols(&grid, &row);
            let r = h.row_mut(n);
            for (j, val) in r.iter_mut().enumerate() {
                if !matches!(cols, Some((lo, hi)) if j >= lo && j <= hi) {
                    *val = 0.0;
                }
            }
        }
        Ok(TrajectoryTriple { u, v, h, supports: vec![self.support_box()], kind: Kind::Return })
    }

    /// max |box v - u^3| over support nodes, with box v from time jets.
    pub fn pde_residual(&self, grid: Grid) -> f64 {
        (0..grid.nt)
            .into_par_iter()
            .map(|n| {
                let t = grid.t(n);
                let row = self.row(t);
                let mut m = 0.0f64;
                if let Some((lo, hi)) = self.cols(&grid, &row) {
                    for j in lo..=hi {
                        let x = grid.x(j);
                        let u = self.big_v_at(&row, x).cbrt();
                        let bv = self.box_v_tjet(t, x, 0).value();
                        m = m.max((bv - u * u * u).abs());
                    }
                }
                m
            })
            .reduce(|| 0.0, f64::max)
    }

    /// max over x of |v|, |v_t|, |u|, |u_t| at time t.
    pub fn endpoint_flatness(&self, t: f64, samples: usize) -> f64 {
        let hw = self.half_width();
        let mut m = 0.0f64;
        for k in 0..=samples {
            let x = self.x0 - hw + 2.0 * hw * k as f64 / samples as f64;
            let v = self.vbar_tjet(t, x, 1);
            let bv = self.box_v_tjet(t, x, 1);
            let (u, ut) = if bv.value() == 0.0 {
                (0.0, 0.0)
            } else {
                let c = bv.cbrt();
                (c.value(), c.derivative(1))
            };
            m = m.max(v.value().abs()).max(v.derivative(1).abs()).max(u.abs()).max(ut.abs());
        }
        m
    }

    /// min of 3u^2 over a lattice of a rectangle.
    pub fn floor_on_rect(&self, t0: f64, t1: f64, x0: f64, x1: f64, nts: usize, nxs: usize) -> f64 {
        let mut m = f64::INFINITY;
        for a in 0..=nts {
            let t = t0 + (t1 - t0) * a as f64 / nts as f64;
            let row = self.row(t);
            for b in 0..=nxs {
                let x = x0 + (x1 - x0) * b as f64 / nxs as f64;
                let u = self.big_v_at(&row, x).cbrt();
                m = m.min(3.0 * u * u);
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    /// sup of (lambda^2 V_zzz) / f0 over the band
    pub sup_ratio: f64,
    /// the certified constant, -sup_ratio
    pub c: f64,
    /// sup |bump part| / f0
    pub bump_part: f64,
    pub ok: bool,
}

/// Certificate that lambda^2 V_zzz / f0 stays below -C on
/// (0, T) x [3/4 - delta''/2, 3/4 + delta''/2].
pub fn vzzz_certificate(e: &Elementary, nts: usize, nzs: usize) -> Certificate {
    let dpp = e.profiles.stationary.delta_double_prime();
    let t_end = e.t_end();
    let (sup, bump) = (1..nts)
        .into_par_iter()
        .map(|a| {
            let row = e.row(t_end * a as f64 / nts as f64);
            let mut s = f64::NEG_INFINITY;
            let mut r_sup = 0.0f64;
            if !row.zero {
                for b in 0..=nzs {
                    let z = 0.75 - dpp / 2.0 + dpp * b as f64 / nzs as f64;
                    let (a0, r) = e.lambda2_v_zderiv(&row, z, 3);
                    s = s.max(a0 + r);
                    r_sup = r_sup.max(r.abs());
                }
            }
            (s, r_sup)
        })
        .reduce(|| (f64::NEG_INFINITY, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    Certificate { sup_ratio: sup, c: -sup, bump_part: bump, ok: sup < 0.0 }
}

/// Largest epsilon in [lo, hi] for which the certificate holds, by
/// bisection in log epsilon (the sup is monotone in epsilon to the accuracy
/// of the scan). The epsilon-smallness checks of the temporal family are
/// skipped so the sweep can pass beyond them. Returns lo if the certificate
/// already fails there and hi if it holds at hi.
pub fn certificate_threshold(
    t_end: f64,
    delta: f64,
    delta_prime: f64,
    delta_double_prime: f64,
    (lo, hi): (f64, f64),
    iters: usize,
    (nts, nzs): (usize, usize),
) -> Result<f64> {
    let stationary = build_stationary(delta_prime, delta_double_prime)?;
    let bumps = build_bumps(delta_double_prime)?;
    let holds = |eps: f64| -> Result<bool> {
        let temporal = build_temporal_unchecked(t_end, delta, eps, &stationary, &bumps, DEFAULT_ORDER)?;
        let p = Arc::new(Profiles { stationary: stationary.clone(), bumps: bumps.clone(), temporal });
        let e = Elementary::new(p, 0.5, 1.0, 1.0, 1.0)?;
        Ok(vzzz_certificate(&e, nts, nzs).ok)
    };
    if !holds(lo)? {
        return Ok(lo);
    }
    if holds(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if holds(m.exp())? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a.exp())
}

/// Sum of elementary triples with pairwise disjoint supports.
pub fn superpose(parts: &[TrajectoryTriple]) -> Result<TrajectoryTriple> {
    let first = parts
        .first()
        .ok_or_else(|| Error::OutOfDomain("nothing to superpose".into()))?;
    let boxes: Vec<SupportBox> = parts.iter().flat_map(|p| p.supports.iter().copied()).collect();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[i].overlaps(&boxes[j]) {
                return Err(Error::OverlappingSupports(format!(
                    "x-intervals [{}, {}] and [{}, {}]",
                    boxes[i].x0, boxes[i].x1, boxes[j].x0, boxes[j].x1
                )));
            }
        }
    }
    let mut out = first.clone();
    for p in &parts[1..] {
        out.u.add_assign(&p.u);
        out.v.add_assign(&p.v);
        out.h.add_assign(&p.h);
    }
    out.supports = boxes;
    Ok(out)
}

/// (kappa u, kappa^3 v, kappa h).
pub fn scale(triple: &TrajectoryTriple, kappa: f64) -> TrajectoryTriple {
    TrajectoryTriple {
        u: triple.u.scaled(kappa),
        v: triple.v.scaled(kappa * kappa * kappa),
        h: triple.h.scaled(kappa),
        supports: triple.supports.clone(),
        kind: triple.kind,
    }
}

/// Refinement study of h = box_{nu1} u by the fourth-order stencil applied
/// to the closed-form u at fixed sample points of [delta/2, T - delta/2] x
/// [x0 - 1.05 hw, x0 + 1.05 hw], with spacing hw / (cells * 2^l), l = 0, 1, 2.
#[derive(Debug, Clone)]
pub struct Convergence {
    /// max |W_l - W_{l+1}| for l = 0, 1
    pub diffs: [f64; 2],
    pub order: f64,
    /// max |W_2|
    pub scale: f64,
}

pub fn hbar_convergence(e: &Elementary, cells: usize, nts: usize, nxs: usize) -> Convergence {
    const C4: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    let delta = e.profiles.temporal.delta();
    let (ta, tb) = (0.5 * delta, e.t_end() - 0.5 * delta);
    let hw = e.half_width();
    let xs: Vec<f64> = (0..nxs)
        .map(|k| e.x0 - 1.05 * hw + 2.1 * hw * k as f64 / (nxs - 1) as f64)
        .collect();
    let per_time: Vec<([f64; 2], f64)> = (0..nts)
        .into_par_iter()
        .map(|a| {
            let t = ta + (tb - ta) * a as f64 / (nts - 1) as f64;
            let mut w = vec![vec![0.0; nxs]; 3];
            for (l, wl) in w.iter_mut().enumerate() {
                let h = hw / (cells << l) as f64;
                let dt = h / e.nu1;
                let rows: Vec<Row> = (0..5).map(|k| e.row(t + (k as f64 - 2.0) * dt)).collect();
                for (j, &x) in xs.iter().enumerate() {
                    let mut utt = 0.0;
                    let mut uxx = 0.0;
                    for k in 0..5 {
                        utt += C4[k] * e.big_v_at(&rows[k], x).cbrt();
                        uxx += C4[k] * e.big_v_at(&rows[2], x + (k as f64 - 2.0) * h).cbrt();
                    }
                    wl[j] = utt / (dt * dt) - e.nu1 * e.nu1 * uxx / (h * h);
                }
            }
            let mut d = [0.0f64; 2];
            let mut sc = 0.0f64;
            for j in 0..nxs {
                d[0] = d[0].max((w[0][j] - w[1][j]).abs());
                d[1] = d[1].max((w[1][j] - w[2][j]).abs());
                sc = sc.max(w[2][j].abs());
            }
            (d, sc)
        })
        .collect();
    let mut diffs = [0.0f64; 2];
    let mut scale = 0.0f64;
    for (d, sc) in per_time {
        diffs[0] = diffs[0].max(d[0]);
        diffs[1] = diffs[1].max(d[1]);
        scale = scale.max(sc);
    }
    Convergence { diffs, order: (diffs[0] / diffs[1]).log2(), scale }
}

/// l1 norms of the dx_k stencil weights (times h^k).
const STENCIL_L1: [f64; 3] = [18.0 / 12.0, 64.0 / 12.0, 44.0 / 8.0];

/// FD derivative maxima of u-bar at one time across dyadic spacings.
#[derive(Debug, Clone)]
pub struct DerivativeBounds {
    /// max |d^k u/dx^k| for k = 1, 2, 3; one row per level.
    pub levels: Vec<[f64; 3]>,
    /// Rounding floor per level: 8 eps_mach max|u| ||w_k||_1 / h^k.
    pub noise: Vec<[f64; 3]>,
}

impl DerivativeBounds {
    /// Largest relative change between successive levels after removing the
    /// rounding floors of both levels. Values indistinguishable from rounding
    /// count as bounded.
    pub fn worst_change(&self) -> f64 {
        let mut worst = 0.0f64;
        for l in 0..self.levels.len() - 1 {
            for k in 0..3 {
                let (a, b) = (self.levels[l][k], self.levels[l + 1][k]);
                let excess = ((a - b).abs() - self.noise[l][k] - self.noise[l + 1][k]).max(0.0);
                if excess > 0.0 {
                    worst = worst.max(excess / a.abs().max(b.abs()));
                }
            }
        }
        worst
    }
}

/// Max |d^k u/dx^k| (k = 1, 2, 3) at time t over |z - zc| <= 0.05, for
/// spacings nu2 lambda / (base_cells 2^l), l = 0, 1, 2.
/// Samples are taken in z directly (forming x0 + offset would add a position
/// rounding of ulp(x0)) and at half-cell offsets, so the contact line itself,
/// where the cube root amplifies cancellation error in V, is never sampled.
pub fn derivative_bounds(e: &Elementary, t: f64, zc: f64, base_cells: usize) -> DerivativeBounds {
    let row = e.row(t);
    let scale = e.nu2 * row.lambda;
    let mut levels = Vec::new();
    let mut noise = Vec::new();
    for level in 0..3u32 {
        let cells = base_cells << level;
        let h = scale / cells as f64;
        let half = (0.05 * cells as f64).ceil() as i64;
        let pad = 3i64;
        let samples: Vec<f64> = (-half - pad..=half + pad)
            .map(|k| e.big_v_at_z(&row, zc + (k as f64 + 0.5) / cells as f64).cbrt())
            .collect();
        let g = Grid::new(1.0, h * (samples.len() - 1) as f64, 3, samples.len()).expect("valid grid");
        let mut f = Field::zeros("u", g);
        f.row_mut(1).copy_from_slice(&samples);
        let mut m = [0.0f64; 3];
        for j in pad as usize..samples.len() - pad as usize {
            for k in 1..=3 {
                m[k - 1] = m[k - 1].max(fd::dx_k(&f, 1, j, k).abs());
            }
        }
        let top = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 8.0 * f64::EPSILON * top;
        levels.push(m);
        noise.push([1, 2, 3].map(|k| floor * STENCIL_L1[k - 1] / h.powi(k as i32)));
    }
    DerivativeBounds { levels, noise }
}
