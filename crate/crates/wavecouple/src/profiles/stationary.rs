//! Stationary pair (g, G) on [0, 1] with g'' = G.
//!
//! G is assembled from fixed pieces: -2 near 0, the cubic (z - 3/4)^3 around
//! 3/4, the second derivative of the tail exp(-1/(1-z^2)) near 1, and two
//! shape functions with free amplitudes (A, B) that are fixed by matching g
//! and g' to the tail at 1 - delta'.

use nalgebra::{Matrix2, Vector2};

use super::cutoff::{bump_jet, step_jet};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Positive zero of 3z^4 - 1; the tail's second derivative is negative below it.
pub const TAIL_INFLECTION: f64 = 0.759_835_685_651_593_1;

/// Target spacing of the quadrature table.
const TABLE_STEP: f64 = 1.0 / 2048.0;

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Cumulative first and second antiderivatives on a uniform table.
#[derive(Debug, Clone)]
struct Table {
    /// integral of G from 0 to z_j
    d1: Vec<f64>,
    /// double integral of G from 0 to z_j
    d0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StationaryProfile {
    delta_prime: f64,
    delta_double_prime: f64,
    amp_a: f64,
    amp_b: f64,
    h: f64,
    table: Table,
}

/// Which term of G to evaluate while building tables.
#[derive(Clone, Copy)]
enum Part {
    Fixed,
    Left,
    Right,
}

/// exp(-1/(1 - z^2)) as a jet; zero at and beyond 1.
pub fn tail_jet(z: &Jet) -> Jet {
    let order = z.order();
    let one_minus = 1.0 - *z * *z;
    if one_minus.value() <= 0.0 {
        return Jet::zero(order);
    }
    let e = -one_minus.recip();
    if e.value() < -745.0 {
        return Jet::zero(order);
    }
    e.exp()
}

impl StationaryProfile {
    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    pub fn delta_double_prime(&self) -> f64 {
        self.delta_double_prime
    }

    /// Solved template amplitudes (A, B), both positive.
    pub fn amplitudes(&self) -> (f64, f64) {
        (self.amp_a, self.amp_b)
    }

    fn z_match(&self) -> f64 {
        1.0 - self.delta_prime
    }

    fn part_jet(dp: f64, dpp: f64, part: Part, z0: f64, order: usize) -> Jet {
        let zv = Jet::variable(z0, order);
        let z = &zv;
        let w = *z - 0.75;
        match part {
            Part::Left => {
                let lo = dpp;
                let hi = 0.75 - dpp / 2.0;
                if z0 <= lo || z0 >= hi {
                    return Jet::zero(order);
                }
                w * bump_jet(&((*z - lo) / (hi - lo)))
            }
            Part::Right => {
                let lo = 0.75 + dpp / 2.0;
                let hi = 1.0 - dp;
                if z0 <= lo || z0 >= hi {
                    return Jet::zero(order);
                }
                w * bump_jet(&((*z - lo) / (hi - lo)))
            }
            Part::Fixed => {
                let mut g = Jet::zero(order);
                if z0 < 2.0 * dpp {
                    let chi0 = 1.0 - step_jet(&((*z - dpp) / dpp));
                    g += chi0 * -2.0;
                }
                let aw = w.value().abs();
                if aw < dpp {
                    let chic = if aw <= dpp / 2.0 {
                        Jet::constant(1.0, order)
                    } else {
                        let sw = if w.value() > 0.0 { w } else { -w };
                        1.0 - step_jet(&((sw - dpp / 2.0) / (dpp / 2.0)))
                    };
                    g += chic * w * w * w;
                }
                let start = 1.0 - 2.0 * dp;
                if z0 > start && z0 < 1.0 {
                    let chit = step_jet(&((*z - start) / dp));
                    let t = tail_jet(&Jet::variable(z0, order + 2));
                    g += chit * t.diff().diff().truncate(order);
                }
                g
            }
        }
    }

    /// Jet of G at z to the given order.
    pub fn big_g_jet(&self, z: f64, order: usize) -> Jet {
        let (dp, dpp) = (self.delta_prime, self.delta_double_prime);
        Self::part_jet(dp, dpp, Part::Fixed, z, order)
            + Self::part_jet(dp, dpp, Part::Left, z, order) * self.amp_a
            + Self::part_jet(dp, dpp, Part::Right, z, order) * self.amp_b
    }

    pub fn big_g(&self, z: f64) -> f64 {
        if !(0.0..1.0).contains(&z) {
            return 0.0;
        }
        self.big_g_jet(z, 0).value()
    }

    /// (g, g') from the table at an interior point.
    fn table_eval(&self, z: f64) -> (f64, f64) {
        let n = self.table.d1.len() - 1;
        let j = ((z / self.h).floor() as usize).min(n - 1);
        let zj = j as f64 * self.h;
        let (i1, m) = self.cell_integrals(zj, z);
        let d1 = self.table.d1[j] + i1;
        let d0 = self.table.d0[j] + self.table.d1[j] * (z - zj) + m;
        (1.0 + d0, d1)
    }

    fn cell_integrals(&self, lo: f64, hi: f64) -> (f64, f64) {
        if hi <= lo {
            return (0.0, 0.0);
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut i1 = 0.0;
        let mut m = 0.0;
        for k in 0..8 {
            let s = mid + half * GL_NODES[k];
            let gv = self.big_g(s);
            i1 += GL_WEIGHTS[k] * gv;
            m += GL_WEIGHTS[k] * (hi - s) * gv;
        }
        (i1 * half, m * half)
    }

    /// g(z), extended evenly for z < 0 and by zero for z >= 1.
    pub fn g(&self, z: f64) -> f64 {
        self.g_jet(z, 0).value()
    }

    /// Jet of g at z to the given order.
    pub fn g_jet(&self, z: f64, order: usize) -> Jet {
        if z < 0.0 {
            let j = self.g_jet(-z, order);
            let c: Vec<f64> = (0..=order)
                .map(|k| if k % 2 == 1 { -j.coeff(k) } else { j.coeff(k) })
                .collect();
            return Jet::from_coeffs(&c, order);
        }
        if z >= 1.0 {
            return Jet::zero(order);
        }
        if z <= self.delta_double_prime {
            let zj = Jet::variable(z, order);
            return 1.0 - zj * zj;
        }
        if z >= self.z_match() {
            return tail_jet(&Jet::variable(z, order));
        }
        let (g, gp) = self.table_eval(z);
        let mut c = vec![0.0; order + 1];
        c[0] = g;
        if order >= 1 {
            c[1] = gp;
        }
        if order >= 2 {
            let gg = self.big_g_jet(z, order - 2);
            for k in 0..=order - 2 {
                c[k + 2] = gg.coeff(k) / ((k + 1) * (k + 2)) as f64;
            }
        }
        Jet::from_coeffs(&c, order)
    }
}

fn build_table(dp: f64, dpp: f64, part: Part, h: f64, n: usize) -> Table {
    let f = |s: f64| StationaryProfile::part_jet(dp, dpp, part, s, 0).value();
    let mut d1 = vec![0.0; n + 1];
    let mut d0 = vec![0.0; n + 1];
    for j in 0..n {
        let lo = j as f64 * h;
        let hi = (j + 1) as f64 * h;
        let half = 0.5 * h;
        let mid = lo + half;
        let mut i1 = 0.0;
        let mut m = 0.0;
        for k in 0..8 {
            let s = mid + half * GL_NODES[k];
            let gv = f(s);
            i1 += GL_WEIGHTS[k] * gv;
            m += GL_WEIGHTS[k] * (hi - s) * gv;
        }
        d1[j + 1] = d1[j] + i1 * half;
        d0[j + 1] = d0[j] + d1[j] * h + m * half;
    }
    Table { d1, d0 }
}

/// Builds (g, G) for the given transition widths.
pub fn build_stationary(delta_prime: f64, delta_double_prime: f64) -> Result<StationaryProfile> {
    let (dp, dpp) = (delta_prime, delta_double_prime);
    if !(dp > 0.0 && dp < 0.25 && dpp > 0.0 && dpp < 0.25) {
        return Err(Error::OutOfDomain(format!(
            "need 0 < delta' < 1/4 and 0 < delta'' < 1/4, got {dp}, {dpp}"
        )));
    }
    if dp + dpp > 0.25 || 1.0 - 2.0 * dp < 0.75 + dpp / 2.0 || 1.0 - 2.0 * dp <= TAIL_INFLECTION {
        return Err(Error::NoSolution(format!(
            "template ranges too narrow for delta' = {dp}, delta'' = {dpp}"
        )));
    }
    let z1 = 1.0 - dp;
    let n = (z1 / TABLE_STEP).ceil() as usize;
    let h = z1 / n as f64;
    let fixed = build_table(dp, dpp, Part::Fixed, h, n);
    let left = build_table(dp, dpp, Part::Left, h, n);
    let right = build_table(dp, dpp, Part::Right, h, n);

    let tail = tail_jet(&Jet::variable(z1, 1));
    let target = Vector2::new(tail.value(), tail.coeff(1));
    let jac = Matrix2::new(left.d0[n], right.d0[n], left.d1[n], right.d1[n]);
    let lu = jac.lu();
    let mut ab = Vector2::new(1.0, 1.0);
    let mut converged = false;
    for _ in 0..8 {
        let resid = Vector2::new(
            1.0 + fixed.d0[n] + ab[0] * left.d0[n] + ab[1] * right.d0[n],
            fixed.d1[n] + ab[0] * left.d1[n] + ab[1] * right.d1[n],
        ) - target;
        if resid.amax() < 1e-14 {
            converged = true;
            break;
        }
        let step = lu
            .solve(&resid)
            .ok_or_else(|| Error::NoSolution("singular matching Jacobian".into()))?;
        ab -= step;
    }
    if !converged || !(ab[0] > 0.0 && ab[1] > 0.0) {
        return Err(Error::NoSolution(format!(
            "matching amplitudes ({}, {}) violate the sign pattern",
            ab[0], ab[1]
        )));
    }
    let combine = |f: &[f64], l: &[f64], r: &[f64]| -> Vec<f64> {
        (0..=n).map(|j| f[j] + ab[0] * l[j] + ab[1] * r[j]).collect()
    };
    let table = Table {
        d1: combine(&fixed.d1, &left.d1, &right.d1),
        d0: combine(&fixed.d0, &left.d0, &right.d0),
    };
    let prof = StationaryProfile {
        delta_prime: dp,
        delta_double_prime: dpp,
        amp_a: ab[0],
        amp_b: ab[1],
        h,
        table,
    };
    for k in 1..4000 {
        let z = k as f64 / 4000.0;
        let gv = prof.big_g(z);
        // past the tail's underflow point G is exactly 0
        let representable = tail_jet(&Jet::variable(z, 0)).value() > 0.0;
        let bad = if z < 0.75 {
            gv >= 0.0
        } else if z > 0.75 {
            gv < 0.0 || (gv == 0.0 && representable)
        } else {
            false
        };
        if bad {
            return Err(Error::NoSolution(format!("sign of G fails at z = {z}")));
        }
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_profile() -> StationaryProfile {
        build_stationary(0.1, 0.1).unwrap()
    }

    #[test]
    fn prescribed_values() {
        let p = default_profile();
        assert_eq!(p.g(0.0), 1.0);
        assert_eq!(p.big_g(0.75), 0.0);
        assert_relative_eq!(p.big_g(0.0), -2.0);
        let (a, b) = p.amplitudes();
        assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn cubic_band_and_tail() {
        let p = default_profile();
        for k in 0..=10 {
            let z = 0.7 + 0.01 * k as f64;
            assert_relative_eq!(p.big_g(z), (z - 0.75).powi(3), epsilon = 1e-15);
        }
        for k in 0..10 {
            let z = 0.9 + 0.0099 * k as f64;
            let t = (-1.0 / (1.0 - z * z)).exp();
            assert_relative_eq!(p.g(z), t, epsilon = 1e-300, max_relative = 1e-14);
        }
    }

    #[test]
    fn matching_is_continuous() {
        let p = default_profile();
        let z1 = 1.0 - p.delta_prime();
        let (g, gp) = p.table_eval(z1);
        let t = tail_jet(&Jet::variable(z1, 1));
        assert_relative_eq!(g, t.value(), epsilon = 1e-13);
        assert_relative_eq!(gp, t.coeff(1), epsilon = 1e-13);
        let inner = p.g_jet(z1 - 1e-9, 1);
        assert!((inner.value() - t.value()).abs() < 1e-9);
    }

    #[test]
    fn g_jet_second_coefficient_is_half_big_g() {
        let p = default_profile();
        for z in [0.3, 0.6, 0.8, 0.85] {
            let j = p.g_jet(z, 4);
            assert_relative_eq!(2.0 * j.coeff(2), p.big_g(z), epsilon = 1e-14);
        }
    }

    #[test]
    fn narrow_ranges_rejected() {
        assert!(matches!(build_stationary(0.15, 0.15), Err(Error::NoSolution(_))));
        assert!(build_stationary(0.3, 0.1).is_err());
    }
}
