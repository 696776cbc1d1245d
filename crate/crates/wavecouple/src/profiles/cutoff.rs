//! Flat C-infinity cutoffs built from `exp(-1/s)`.

use crate::jet::Jet;

/// Exponent magnitude beyond which the logistic form is treated as saturated.
const SATURATE: f64 = 700.0;

/// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`, flat at both ends.
pub fn step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let q = 1.0 / s - 1.0 / (1.0 - s);
        if q > SATURATE {
            0.0
        } else if q < -SATURATE {
            1.0
        } else {
            1.0 / (1.0 + q.exp())
        }
    }
}

/// Jet version of [`step`] composed with an inner jet.
pub fn step_jet(s: &Jet) -> Jet {
    let order = s.order();
    let s0 = s.value();
    if s0 <= 0.0 {
        return Jet::zero(order);
    }
    if s0 >= 1.0 {
        return Jet::constant(1.0, order);
    }
    let q = s.recip() - (1.0 - *s).recip();
    if q.value() > SATURATE || !q.is_finite() {
        return Jet::zero(order);
    }
    if q.value() < -SATURATE {
        return Jet::constant(1.0, order);
    }
    if q.value() > 0.0 {
        let e = (-q).exp();
        e / (e + 1.0)
    } else {
        (q.exp() + 1.0).recip()
    }
}

/// Flat bump, positive exactly on `(0, 1)`.
pub fn bump(s: f64) -> f64 {
    step(2.0 * s) * step(2.0 - 2.0 * s)
}

pub fn bump_jet(s: &Jet) -> Jet {
    step_jet(&(*s * 2.0)) * step_jet(&(2.0 - *s * 2.0))
}

/// Plateau cutoff: 1 on `[lo, hi]`, 0 outside `[lo - w, hi + w]`.
pub fn plateau(x: f64, lo: f64, hi: f64, w: f64) -> f64 {
    step((x - (lo - w)) / w) * step(((hi + w) - x) / w)
}
