//! Temporal family: lambda0, lambda = eps * lambda0, f0 and the corrections
//! f1, f2, f3 chosen so that lambda^2 V has a cubic contact at z = 3/4.
//!
//! All f_i jets are kept relative to the scalar f0(t), so the very small
//! amplitudes near t = 0 and t = T never underflow; `ln_f0` carries the scale.

use super::bumps::BumpTriple;
use super::cutoff::step_jet;
use super::stationary::StationaryProfile;
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};

pub const DEFAULT_ORDER: usize = 8;

/// Below this exponent a quantity is treated as exactly zero.
const LN_TINY: f64 = -700.0;

/// Bridge samples used by the epsilon checks.
const BRIDGE_SAMPLES: usize = 4000;

/// Highest z-derivative of the spatial profiles tabulated at 3/4.
const ZJ: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Temporal {
    Lambda0,
    Lambda,
    F0,
    F1,
    F2,
    F3,
}

/// Time jets of the family at a single instant.
#[derive(Debug, Clone, Copy)]
pub struct TemporalJets {
    /// ln f0(t); `-inf` when everything vanishes.
    pub ln_f0: f64,
    /// lambda(t) jet (absolute).
    pub lambda: Jet,
    /// f_i(t) / f0(t) jets, orders K, K-2, K-4, K-6.
    pub f: [Jet; 4],
}

impl TemporalJets {
    pub fn is_zero(&self) -> bool {
        self.ln_f0 == f64::NEG_INFINITY
    }

    fn zero(order: usize) -> Self {
        TemporalJets {
            ln_f0: f64::NEG_INFINITY,
            lambda: Jet::zero(order),
            f: [
                Jet::zero(order),
                Jet::zero(order.saturating_sub(2)),
                Jet::zero(order.saturating_sub(4)),
                Jet::zero(order.saturating_sub(6)),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemporalProfiles {
    t_end: f64,
    delta: f64,
    epsilon: f64,
    order: usize,
    /// g_i^{(j)}(3/4), i = 0..3, j = 0..ZJ
    g_at: [[f64; ZJ + 1]; 4],
    c2_norm: f64,
    max_speed: f64,
}

/// m-th z-derivative of A_i, the i-th summand of lambda^2 V:
/// A_i = lambda^2 f_i'' g_i - c_i z g_i' - (1 - z^2 lambda'^2) f_i g_i'',
/// c_i = 2 lambda lambda' f_i' + (lambda lambda'' - 2 lambda'^2) f_i.
/// `g` holds g_i^{(j)}(z) for j = m..m+2.
pub fn a_zderiv(lambda: &Jet, f: &Jet, g: &[f64], z: f64, m: usize) -> Jet {
    let ld = lambda.diff();
    let ldd = ld.diff();
    let fd = f.diff();
    let fdd = fd.diff();
    let mf = m as f64;
    let (gm, gm1, gm2) = (g[m], g[m + 1], g[m + 2]);
    let c = *lambda * ld * fd * 2.0 + (*lambda * ldd - ld * ld * 2.0) * *f;
    let lsq = *lambda * *lambda;
    let ldsq = ld * ld;
    lsq * fdd * gm - c * (z * gm1 + mf * gm) - *f * ((1.0 - ldsq * (z * z)) * gm2 - ldsq * (2.0 * mf * z * gm1 + mf * (mf - 1.0) * gm))
}

impl TemporalProfiles {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// sup over time of |r| + |r'| + |r''| with r = 1/(1 - (3/4 lambda')^2).
    pub fn c2_norm(&self) -> f64 {
        self.c2_norm
    }

    /// sup of |lambda'|.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Exponent p with lambda0 = exp(p), as a jet; `None` when lambda0 = 0.
    fn lambda0_exponent(&self, t: f64, order: usize) -> Option<Jet> {
        let (tt, d) = (self.t_end, self.delta);
        if t <= 0.0 || t >= tt {
            return None;
        }
        if t >= d && t <= tt - d {
            return Some(Jet::zero(order));
        }
        let tv = Jet::variable(t, order);
        let tau = if t < 0.5 * tt { tv } else { tt - tv };
        let q = tv * (tt - tv);
        let sigma = 1.0 - step_jet(&((tau - 0.5 * d) / (0.5 * d)));
        let p = -(q.powf(-0.5) * sigma);
        if p.value() < LN_TINY {
            None
        } else {
            Some(p)
        }
    }

    pub fn lambda0_jet(&self, t: f64, order: usize) -> Jet {
        match self.lambda0_exponent(t, order) {
            Some(p) if p.value() == 0.0 && p.coeffs().iter().all(|&c| c == 0.0) => {
                Jet::constant(1.0, order)
            }
            Some(p) => p.exp(),
            None => Jet::zero(order),
        }
    }

    /// ln f0 and the relative jet f0 / f0(t).
    fn f0_relative(&self, t: f64, order: usize) -> Option<(f64, Jet)> {
        let tt = self.t_end;
        if t <= 0.0 || t >= tt {
            return None;
        }
        let tv = Jet::variable(t, order);
        let e = -(tv * (tt - tv)).recip();
        let e0 = e.value();
        Some((e0, (e - e0).exp()))
    }

    /// All time jets at t expanded to the profile order.
    pub fn eval(&self, t: f64) -> TemporalJets {
        self.eval_order(t, self.order)
    }

    /// As [`eval`](Self::eval) with an explicit base order (>= 6).
    pub fn eval_order(&self, t: f64, order: usize) -> TemporalJets {
        let Some((ln_f0, f0)) = self.f0_relative(t, order) else {
            return TemporalJets::zero(order);
        };
        let Some(p) = self.lambda0_exponent(t, order) else {
            return TemporalJets::zero(order);
        };
        let lambda = if p.coeffs().iter().all(|&c| c == 0.0) {
            Jet::constant(self.epsilon, order)
        } else {
            p.exp() * self.epsilon
        };
        if ln_f0 - 2.0 * lambda.value().ln() < LN_TINY {
            return TemporalJets::zero(order);
        }
        let mut f = [f0, Jet::zero(0), Jet::zero(0), Jet::zero(0)];
        let ld = lambda.diff();
        let w = 1.0 - ld * ld * (9.0 / 16.0);
        for m in 0..3 {
            let mut s = a_zderiv(&lambda, &f[0], &self.g_at[0], 0.75, m);
            for i in 1..=m {
                s += a_zderiv(&lambda, &f[i], &self.g_at[i], 0.75, m);
            }
            f[m + 1] = s / w;
        }
        TemporalJets { ln_f0, lambda, f }
    }

    /// Jet of one member of the family at t, in absolute scale.
    pub fn jet_of(&self, which: Temporal, t: f64, order: usize) -> Result<Jet> {
        if !(0.0..=self.t_end).contains(&t) || !t.is_finite() {
            return Err(Error::OutOfDomain(format!("t = {t} outside [0, {}]", self.t_end)));
        }
        let need = match which {
            Temporal::Lambda0 | Temporal::Lambda | Temporal::F0 => order,
            Temporal::F1 => order + 2,
            Temporal::F2 => order + 4,
            Temporal::F3 => order + 6,
        };
        if need > MAX_ORDER {
            return Err(Error::OrderTooLow(format!(
                "{which:?} to order {order} needs base order {need} > {MAX_ORDER}"
            )));
        }
        match which {
            Temporal::Lambda0 => return Ok(self.lambda0_jet(t, order)),
            Temporal::Lambda => return Ok(self.lambda0_jet(t, order) * self.epsilon),
            _ => {}
        }
        let tj = self.eval_order(t, need.max(6));
        if tj.is_zero() {
            return Ok(Jet::zero(order));
        }
        let idx = match which {
            Temporal::F0 => 0,
            Temporal::F1 => 1,
            Temporal::F2 => 2,
            _ => 3,
        };
        Ok(tj.f[idx].truncate(order) * tj.ln_f0.exp())
    }

    /// Sampled sup |f_i| / (eps^{2i'} sup |f0|) for i = 1, 2, 3, with
    /// exponents 2, 2, 4.
    pub fn correction_ratios(&self, samples: usize) -> [f64; 3] {
        let f0_max = (-4.0 / (self.t_end * self.t_end)).exp();
        let mut sup = [0.0f64; 3];
        for k in 1..samples {
            let t = self.t_end * k as f64 / samples as f64;
            let tj = self.eval(t);
            if tj.is_zero() {
                continue;
            }
            let s = tj.ln_f0.exp();
            for i in 0..3 {
                sup[i] = sup[i].max((tj.f[i + 1].value() * s).abs());
            }
        }
        let e2 = self.epsilon * self.epsilon;
        [sup[0] / (e2 * f0_max), sup[1] / (e2 * f0_max), sup[2] / (e2 * e2 * f0_max)]
    }

    /// g_i^{(j)}(3/4) used by the contact conditions.
    pub fn spatial_jets_at_contact(&self) -> &[[f64; ZJ + 1]; 4] {
        &self.g_at
    }
}

/// Builds the temporal family and checks the epsilon-smallness conditions.
pub fn build_temporal(
    t_end: f64,
    delta: f64,
    epsilon: f64,
    stationary: &StationaryProfile,
    bumps: &BumpTriple,
    order: usize,
) -> Result<TemporalProfiles> {
    build_inner(t_end, delta, epsilon, stationary, bumps, order, true)
}

/// As [`build_temporal`] but only records the smallness diagnostics; used
/// by threshold sweeps that must look past the first failure.
pub fn build_temporal_unchecked(
    t_end: f64,
    delta: f64,
    epsilon: f64,
    stationary: &StationaryProfile,
    bumps: &BumpTriple,
    order: usize,
) -> Result<TemporalProfiles> {
    build_inner(t_end, delta, epsilon, stationary, bumps, order, false)
}

fn build_inner(
    t_end: f64,
    delta: f64,
    epsilon: f64,
    stationary: &StationaryProfile,
    bumps: &BumpTriple,
    order: usize,
    check: bool,
) -> Result<TemporalProfiles> {
    if !(t_end > 0.0 && delta > 0.0 && delta < 0.5 * t_end) {
        return Err(Error::OutOfDomain(format!("need 0 < delta < T/2, got T = {t_end}, delta = {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::OutOfDomain(format!("epsilon = {epsilon} must be positive")));
    }
    if !(6..=MAX_ORDER).contains(&order) {
        return Err(Error::OrderTooLow(format!("jet order {order} outside 6..={MAX_ORDER}")));
    }
    let mut g_at = [[0.0; ZJ + 1]; 4];
    let g0 = stationary.g_jet(0.75, ZJ);
    for j in 0..=ZJ {
        g_at[0][j] = g0.derivative(j);
    }
    for i in 1..=3 {
        let gi = bumps.g_jet(i, 0.75, ZJ);
        for j in 0..=ZJ {
            g_at[i][j] = gi.derivative(j);
        }
    }
    let mut prof = TemporalProfiles {
        t_end,
        delta,
        epsilon,
        order,
        g_at,
        c2_norm: 1.0,
        max_speed: 0.0,
    };
    // lambda0 is symmetric about T/2 and constant on [delta, T - delta]
    let mut sup = [1.0f64, 0.0, 0.0];
    let mut max_speed = 0.0f64;
    for k in 1..=BRIDGE_SAMPLES {
        let t = delta * k as f64 / BRIDGE_SAMPLES as f64;
        let lam = prof.lambda0_jet(t, 3) * epsilon;
        let ld = lam.diff();
        max_speed = max_speed.max(ld.value().abs());
        let den = 1.0 - ld * ld * (9.0 / 16.0);
        if den.value() <= 0.0 && check {
            return Err(Error::EpsilonTooLarge(format!("1 - (3/4 lambda')^2 <= 0 at t = {t}")));
        }
        if 1.0 - ld.value() * ld.value() <= 0.5 && check {
            return Err(Error::EpsilonTooLarge(format!(
                "1 - (z lambda')^2 <= 1/2 at t = {t}, z = 1"
            )));
        }
        let r = den.recip();
        for n in 0..3 {
            sup[n] = sup[n].max(r.derivative(n).abs());
        }
    }
    prof.c2_norm = sup.iter().sum();
    prof.max_speed = max_speed;
    if prof.c2_norm > 10.0 && check {
        return Err(Error::EpsilonTooLarge(format!(
            "C2 norm of 1/(1 - (3/4 lambda')^2) is {} > 10",
            prof.c2_norm
        )));
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_bumps, build_stationary};
    use approx::assert_relative_eq;

    fn family(t_end: f64, delta: f64, eps: f64) -> TemporalProfiles {
        let s = build_stationary(0.1, 0.1).unwrap();
        let b = build_bumps(0.1).unwrap();
        build_temporal(t_end, delta, eps, &s, &b, DEFAULT_ORDER).unwrap()
    }

    #[test]
    fn lambda0_shape() {
        let p = family(1.0, 0.2, 0.001);
        assert_eq!(p.lambda0_jet(0.5, 3).value(), 1.0);
        assert_eq!(p.lambda0_jet(0.5, 3).coeff(1), 0.0);
        assert_eq!(p.lambda0_jet(0.0, 3).value(), 0.0);
        assert_eq!(p.lambda0_jet(1.0, 3).value(), 0.0);
        let t = 0.07;
        let want = (-(1.0f64 / (t * (1.0 - t))).sqrt()).exp();
        assert_relative_eq!(p.lambda0_jet(t, 0).value(), want, max_relative = 1e-14);
        assert!(p.lambda0_jet(0.15, 0).value() > 0.0);
    }

    #[test]
    fn f0_midpoint_closed_form() {
        let p = family(1.0, 0.2, 0.001);
        let j = p.jet_of(Temporal::F0, 0.5, 2).unwrap();
        assert_relative_eq!(j.value(), (-4.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn endpoint_clamp_is_exact() {
        let p = family(1.0, 0.2, 0.001);
        for t in [0.0, 1.0] {
            for which in [Temporal::F0, Temporal::F1, Temporal::F2, Temporal::F3] {
                let j = p.jet_of(which, t, 2).unwrap();
                assert!(j.coeffs().iter().all(|&c| c == 0.0));
            }
        }
        assert!(matches!(p.jet_of(Temporal::F0, 1.5, 2), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn plateau_first_correction() {
        let eps = 0.001;
        let p = family(1.0, 0.2, eps);
        let t = 0.4;
        let f1 = p.jet_of(Temporal::F1, t, 0).unwrap().value();
        let f0dd = p.jet_of(Temporal::F0, t, 2).unwrap().derivative(2);
        let g0 = p.spatial_jets_at_contact()[0][0];
        assert_relative_eq!(f1, eps * eps * g0 * f0dd, max_relative = 1e-12);
    }

    #[test]
    fn large_epsilon_rejected() {
        let s = build_stationary(0.1, 0.1).unwrap();
        let b = build_bumps(0.1).unwrap();
        let r = build_temporal(1.0, 0.2, 0.5, &s, &b, DEFAULT_ORDER);
        assert!(matches!(r, Err(Error::EpsilonTooLarge(_))));
    }
}
