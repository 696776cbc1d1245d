//! Time conditions, delta admissibility, delta-covering sets and the hull Q.

use num_rational::BigRational;

use crate::error::{Error, Result};

/// Resolution of the dyadic searches for delta and delta_i, as a fraction of T.
pub const DYADIC_STEPS: u32 = 1 << 20;

/// Number of characteristics sampled per speed by the covering check.
pub const CHARACTERISTIC_SAMPLES: usize = 1000;

fn slowness(nu1: f64, nu2: f64) -> f64 {
    (1.0 / nu1).max(1.0 / nu2)
}

/// T > 2(L - b) max(1/nu) and T > 2a max(1/nu), both strict.
pub fn check_time(t_end: f64, l: f64, a: f64, b: f64, nu1: f64, nu2: f64) -> bool {
    let m = slowness(nu1, nu2);
    t_end > 2.0 * (l - b) * m && t_end > 2.0 * a * m
}

/// T - 2 delta > 2 (max(a, L - b) + 2 delta) max(1/nu).
pub fn delta_condition(t_end: f64, l: f64, a: f64, b: f64, nu1: f64, nu2: f64, delta: f64) -> bool {
    let m = slowness(nu1, nu2);
    t_end - 2.0 * delta > 2.0 * (a.max(l - b) + 2.0 * delta) * m
}

/// Largest k * res < bound with `ok(k * res)`, assuming `ok` is monotone
/// (true below some threshold). Returns None if even the first step fails.
fn dyadic_largest(res: f64, bound: f64, ok: impl Fn(f64) -> bool) -> Option<f64> {
    let mut kmax = (bound / res).ceil() as u64;
    while kmax > 0 && kmax as f64 * res >= bound {
        kmax -= 1;
    }
    if kmax == 0 || !ok(res) {
        return None;
    }
    let (mut lo, mut hi) = (1u64, kmax);
    if ok(hi as f64 * res) {
        return Some(hi as f64 * res);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid as f64 * res) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo as f64 * res)
}

/// Largest dyadic delta below min(T/2, (b-a)/2)/2 for which the delta
/// condition holds at 2 delta.
pub fn admissible_delta(t_end: f64, l: f64, a: f64, b: f64, nu1: f64, nu2: f64) -> Result<f64> {
    let bound = (t_end / 2.0).min((b - a) / 2.0) / 2.0;
    let res = t_end / DYADIC_STEPS as f64;
    dyadic_largest(res, bound, |d| delta_condition(t_end, l, a, b, nu1, nu2, 2.0 * d)).ok_or_else(|| {
        Error::NoAdmissibleDelta(format!("no dyadic delta below {bound} satisfies the time condition at 2 delta"))
    })
}

/// Rounded-rectangle level set in coordinates scaled so that the margin
/// around the core rectangle is one unit in both t and x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundedRect {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
    pub margin_t: f64,
    pub margin_x: f64,
}

impl RoundedRect {
    /// Negative inside, zero on the boundary of the dilated, rounded rectangle.
    pub fn level(&self, t: f64, x: f64) -> f64 {
        let qt = ((t - 0.5 * (self.t0 + self.t1)).abs() - 0.5 * (self.t1 - self.t0)) / self.margin_t;
        let qx = ((x - 0.5 * (self.x0 + self.x1)).abs() - 0.5 * (self.x1 - self.x0)) / self.margin_x;
        let outside = (qt.max(0.0).powi(2) + qx.max(0.0).powi(2)).sqrt();
        outside + qt.max(qx).min(0.0) - 1.0
    }
}

/// Width of the log-sum-exp smooth minimum uniting the hull pieces.
const SMOOTH_MIN: f64 = 0.05;

/// Hull Q as a union of rounded rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub pieces: Vec<RoundedRect>,
}

impl Hull {
    pub fn level(&self, t: f64, x: f64) -> f64 {
        let psi: Vec<f64> = self.pieces.iter().map(|p| p.level(t, x)).collect();
        let m = psi.iter().cloned().fold(f64::INFINITY, f64::min);
        let s: f64 = psi.iter().map(|p| (-(p - m) / SMOOTH_MIN).exp()).sum();
        m - SMOOTH_MIN * s.ln()
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.level(t, x) <= 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringSet {
    pub t_end: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// (a_i, b_i), sharing the time band [delta, T - delta]
    pub rects: Vec<(f64, f64)>,
    pub centers: Vec<f64>,
    pub hull: Hull,
}

impl CoveringSet {
    pub fn n(&self) -> usize {
        self.rects.len()
    }

    /// Membership in Q_delta = union of [delta, T - delta] x [a_i, b_i].
    pub fn in_q_delta(&self, t: f64, x: f64) -> bool {
        t >= self.delta && t <= self.t_end - self.delta && self.rects.iter().any(|&(lo, hi)| x >= lo && x <= hi)
    }

    /// Membership in Q_{2 delta}: each rectangle shrunk by delta in time and
    /// by a quarter of its width in space.
    pub fn in_q_2delta(&self, t: f64, x: f64) -> bool {
        let d = 2.0 * self.delta;
        t >= d
            && t <= self.t_end - d
            && self.rects.iter().any(|&(lo, hi)| {
                let w = 0.25 * (hi - lo);
                x >= lo + w && x <= hi - w
            })
    }

    /// CSV rows `i,a_i,b_i,x_i`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,a_i,b_i,x_i\n");
        for (i, (&(lo, hi), &c)) in self.rects.iter().zip(&self.centers).enumerate() {
            s.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", i + 1, lo, hi, c));
        }
        s
    }

    /// Checks every covering invariant; gap inequalities in exact rationals.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadEpsilon(m));
        let n = self.rects.len();
        if n == 0 {
            return bad("covering has no rectangles".into());
        }
        if self.rects[0].0 != self.a + self.delta || self.rects[n - 1].1 != self.b - self.delta {
            return bad(format!("end rectangles must start at a + delta and end at b - delta, got {:?}", (self.rects[0].0, self.rects[n - 1].1)));
        }
        let q = |x: f64| BigRational::from_float(x).expect("finite covering data");
        let m = q(1.0 / self.nu1).max(q(1.0 / self.nu2));
        let horizon = q(self.t_end) - q(self.delta) * q(2.0);
        for (i, &(lo, hi)) in self.rects.iter().enumerate() {
            if !(lo < hi) {
                return bad(format!("rectangle {} is empty", i + 1));
            }
            if i + 1 < n {
                let gap = (q(self.rects[i + 1].0) - q(hi)) * m.clone();
                if !(gap > q(0.0) && gap < horizon) {
                    return bad(format!("gap {} violates 0 < gap max(1/nu) < T - 2 delta", i + 1));
                }
            }
        }
        for &(lo, hi) in &self.rects {
            for k in 0..=16 {
                let x = lo + (hi - lo) * k as f64 / 16.0;
                for &t in &[self.delta, 0.5 * self.t_end, self.t_end - self.delta] {
                    if !(self.hull.level(t, x) < 0.0) {
                        return bad(format!("rectangle point ({t}, {x}) not interior to the hull"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Margins delta_i of the gap strips: the largest dyadic value below
    /// half the adjacent rectangle widths with
    /// (T - 2 delta) - 2 delta_i > (a_{i+1} - b_i + 4 delta_i) max(1/nu).
    pub fn gap_deltas(&self) -> Vec<f64> {
        let m = slowness(self.nu1, self.nu2);
        let horizon = self.t_end - 2.0 * self.delta;
        let res = self.t_end / DYADIC_STEPS as f64;
        (0..self.n().saturating_sub(1))
            .map(|i| {
                let gap = self.rects[i + 1].0 - self.rects[i].1;
                let half = 0.5 * (self.rects[i].1 - self.rects[i].0).min(self.rects[i + 1].1 - self.rects[i + 1].0);
                dyadic_largest(res, half, |d| horizon - 2.0 * d > (gap + 4.0 * d) * m).unwrap_or(0.0)
            })
            .collect()
    }

    /// Margins of the two end strips [0, a_1 + d0] and [b_N - dN, L], from
    /// the one-sided rule (T - 2 delta) > 2 (strip length) max(1/nu).
    pub fn end_deltas(&self, l: f64) -> (f64, f64) {
        let m = slowness(self.nu1, self.nu2);
        let horizon = self.t_end - 2.0 * self.delta;
        let res = self.t_end / DYADIC_STEPS as f64;
        let n = self.n();
        let half0 = 0.5 * (self.rects[0].1 - self.rects[0].0);
        let half_n = 0.5 * (self.rects[n - 1].1 - self.rects[n - 1].0);
        let a1 = self.rects[0].0;
        let bn = self.rects[n - 1].1;
        let d0 = dyadic_largest(res, half0, |d| horizon > 2.0 * (a1 + d) * m).unwrap_or(0.0);
        let dn = dyadic_largest(res, half_n, |d| horizon > 2.0 * (l - bn + d) * m).unwrap_or(0.0);
        (d0, dn)
    }

    /// Fraction of sampled characteristics (with reflection at 0 and L) of
    /// each speed that meet Q_delta during [0, T]; returns (hits, total).
    pub fn characteristic_coverage(&self, l: f64, samples: usize) -> (usize, usize) {
        let mut hits = 0;
        let mut total = 0;
        for &nu in &[self.nu1, self.nu2] {
            for k in 0..samples {
                let x0 = l * (k as f64 + 0.5) / samples as f64;
                let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
                total += 1;
                if self.ray_meets_q_delta(l, nu, x0, dir) {
                    hits += 1;
                }
            }
        }
        (hits, total)
    }

    fn ray_meets_q_delta(&self, l: f64, nu: f64, x0: f64, dir: f64) -> bool {
        let (t0, t1) = (self.delta, self.t_end - self.delta);
        let (mut t, mut x, mut d) = (0.0, x0, dir);
        while t < t1 {
            let wall = if d > 0.0 { l } else { 0.0 };
            let te = (t + (wall - x).abs() / nu).min(self.t_end);
            let xe = x + d * nu * (te - t);
            // time range on this leg inside each rect column
            for &(lo, hi) in &self.rects {
                let (sa, sb) = if d > 0.0 { (x, xe) } else { (xe, x) };
                if sb < lo || sa > hi {
                    continue;
                }
                let ta = t + ((if d > 0.0 { lo.max(x) - x } else { x - hi.min(x) }) / nu).max(0.0);
                let tb = t + ((if d > 0.0 { hi.min(xe) - x } else { x - lo.max(xe) }) / nu).max(0.0);
                if ta.max(t0) <= tb.min(t1) {
                    return true;
                }
            }
            t = te;
            x = xe;
            d = -d;
        }
        false
    }
}

/// Builds the covering for T, [a, b], delta and the largest allowed
/// rectangle width epsilon0.
pub fn build_covering(t_end: f64, a: f64, b: f64, delta: f64, epsilon0: f64, nu1: f64, nu2: f64) -> Result<CoveringSet> {
    let span = b - a - 2.0 * delta;
    if !(span > 0.0) {
        return Err(Error::BadEpsilon(format!("b - a - 2 delta = {span} must be positive")));
    }
    if !(epsilon0 > 0.0) {
        return Err(Error::BadEpsilon(format!("epsilon0 = {epsilon0} must be positive")));
    }
    if !(epsilon0 * slowness(nu1, nu2) < t_end - 2.0 * delta) {
        return Err(Error::BadEpsilon(format!(
            "epsilon0 max(1/nu) = {} must stay below T - 2 delta = {}",
            epsilon0 * slowness(nu1, nu2),
            t_end - 2.0 * delta
        )));
    }
    // relative slack absorbs the rounding of b - a - 2 delta
    let fits = |n: usize| span / (2 * n - 1) as f64 <= epsilon0 * (1.0 + 1e-12);
    let mut n = ((span / epsilon0 + 1.0) / 2.0).ceil().max(1.0) as usize;
    while n > 1 && fits(n - 1) {
        n -= 1;
    }
    while !fits(n) {
        n += 1;
    }
    let eps = span / (2 * n - 1) as f64;
    let a1 = a + delta;
    let mut rects = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    for i in 1..=n {
        let lo = a1 + (2 * i - 2) as f64 * eps;
        let hi = if i == n { b - delta } else { a1 + (2 * i - 1) as f64 * eps };
        rects.push((lo, hi));
        centers.push(a + delta + (2.0 * i as f64 - 1.5) * eps);
    }
    let pieces = rects
        .iter()
        .map(|&(lo, hi)| RoundedRect {
            t0: delta,
            t1: t_end - delta,
            x0: lo,
            x1: hi,
            margin_t: delta / 4.0,
            margin_x: eps / 8.0,
        })
        .collect();
    let c = CoveringSet { t_end, a, b, delta, epsilon: eps, nu1, nu2, rects, centers, hull: Hull { pieces } };
    c.validate()?;
    Ok(c)
}
