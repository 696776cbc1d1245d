//! Truncated Taylor series in one variable.
//!
//! A [`Jet`] of order `K` stores `c_0..c_K`, the Taylor coefficients of a
//! scalar quantity at an expansion point, so `d^n/dt^n = n! * c_n`.
//! Every operation is exact up to the truncation order.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 14;
const N: usize = MAX_ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; N],
    order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet { c: [0.0; N], order }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.c[0] = value;
        j
    }

    /// The independent variable expanded at `x`.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut j = Self::constant(x, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Build from Taylor coefficients; missing ones are zero.
    pub fn from_coeffs(coeffs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (k, &v) in coeffs.iter().take(order + 1).enumerate() {
            j.c[k] = v;
        }
        j
    }

    /// Build from derivatives `f, f', f'', ...`.
    pub fn from_derivatives(derivs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (k, &v) in derivs.iter().take(order + 1).enumerate() {
            j.c[k] = v / factorial(k);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        if k <= self.order {
            self.c[k]
        } else {
            0.0
        }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `d^n/dt^n` at the expansion point.
    pub fn derivative(&self, n: usize) -> f64 {
        self.coeff(n) * factorial(n)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut j = Self::zero(order);
        j.c[..=order].copy_from_slice(&self.c[..=order]);
        j
    }

    /// Jet of the derivative; the order drops by one.
    pub fn diff(&self) -> Self {
        if self.order == 0 {
            return Self::zero(0);
        }
        let mut j = Self::zero(self.order - 1);
        for k in 0..self.order {
            j.c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        j
    }

    /// `n`-fold derivative, saturating at order zero.
    pub fn diff_n(&self, n: usize) -> Self {
        (0..n).fold(*self, |j, _| j.diff())
    }

    fn binary_order(&self, other: &Jet) -> usize {
        self.order.min(other.order)
    }

    pub fn recip(&self) -> Self {
        let mut q = Self::zero(self.order);
        let b0 = self.c[0];
        q.c[0] = 1.0 / b0;
        for k in 1..=self.order {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * q.c[k - j];
            }
            q.c[k] = -s / b0;
        }
        q
    }

    pub fn exp(&self) -> Self {
        let mut b = Self::zero(self.order);
        b.c[0] = self.c[0].exp();
        for k in 1..=self.order {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * b.c[k - j];
            }
            b.c[k] = s / k as f64;
        }
        b
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut b = Self::zero(self.order);
        b.c[0] = a0.ln();
        for k in 1..=self.order {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * b.c[j] * self.c[k - j];
            }
            b.c[k] = (self.c[k] - s / k as f64) / a0;
        }
        b
    }

    /// `self^p` for a positive leading coefficient.
    pub fn powf(&self, p: f64) -> Self {
        let a0 = self.c[0];
        let mut b = Self::zero(self.order);
        b.c[0] = a0.powf(p);
        for k in 1..=self.order {
            let mut s = 0.0;
            for j in 1..=k {
                s += (p * j as f64 - (k - j) as f64) * self.c[j] * b.c[k - j];
            }
            b.c[k] = s / (k as f64 * a0);
        }
        b
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0, self.order);
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// Real cube root; the leading coefficient must be nonzero.
    pub fn cbrt(&self) -> Self {
        if self.c[0] < 0.0 {
            -((-*self).powf(1.0 / 3.0))
        } else {
            self.powf(1.0 / 3.0)
        }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = Self::zero(self.order);
        let mut c = Self::zero(self.order);
        s.c[0] = self.c[0].sin();
        c.c[0] = self.c[0].cos();
        for k in 1..=self.order {
            let (mut ss, mut cc) = (0.0, 0.0);
            for j in 1..=k {
                let w = j as f64 * self.c[j];
                ss += w * c.c[k - j];
                cc += w * s.c[k - j];
            }
            s.c[k] = ss / k as f64;
            c.c[k] = -cc / k as f64;
        }
        (s, c)
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    /// Compose a power series `sum a_k w^k` (expanded at this jet's value)
    /// with `w = self - self.value()`.
    pub fn compose(&self, outer: &[f64]) -> Self {
        let mut w = *self;
        w.c[0] = 0.0;
        let mut acc = Self::zero(self.order);
        for &a in outer.iter().take(self.order + 1).rev() {
            acc = acc * w;
            acc.c[0] += a;
        }
        acc
    }

    /// Compose an outer jet (taken at this jet's value) with this jet.
    pub fn compose_jet(&self, outer: &Jet) -> Self {
        self.compose(outer.coeffs())
    }

    /// Evaluate the truncated polynomial at offset `h` from the expansion point.
    pub fn eval_at(&self, h: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * h + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut j = *self;
        for v in j.c[..=j.order].iter_mut() {
            *v *= s;
        }
        j
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut j = Jet::zero(order);
        for k in 0..=order {
            j.c[k] = self.c[k] + rhs.c[k];
        }
        j
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut j = Jet::zero(order);
        for k in 0..=order {
            j.c[k] = self.c[k] - rhs.c[k];
        }
        j
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut j = Jet::zero(order);
        for k in 0..=order {
            let mut s = 0.0;
            for i in 0..=k {
                s += self.c[i] * rhs.c[k - i];
            }
            j.c[k] = s;
        }
        j
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut q = Jet::zero(order);
        let b0 = rhs.c[0];
        for k in 0..=order {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= rhs.c[j] * q.c[k - j];
            }
            q.c[k] = s / b0;
        }
        q
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip().scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exp_series_at_zero() {
        let e = Jet::variable(0.0, 6).exp();
        for k in 0..=6 {
            assert_relative_eq!(e.coeff(k), 1.0 / factorial(k), epsilon = 1e-15);
        }
    }

    #[test]
    fn derivative_extraction_matches_sin() {
        let x = 0.7;
        let s = Jet::variable(x, 8).sin();
        let expect = [x.sin(), x.cos(), -x.sin(), -x.cos()];
        for n in 0..=8 {
            assert_relative_eq!(s.derivative(n), expect[n % 4], epsilon = 1e-12);
        }
    }

    #[test]
    fn reciprocal_geometric_series() {
        let one_minus_x = 1.0 - Jet::variable(0.0, 10);
        let r = one_minus_x.recip();
        for k in 0..=10 {
            assert_relative_eq!(r.coeff(k), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn powf_matches_closed_form() {
        // (1+x)^{1/3} = 1 + x/3 - x^2/9 + 5x^3/81
        let j = (1.0 + Jet::variable(0.0, 3)).powf(1.0 / 3.0);
        assert_relative_eq!(j.coeff(1), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(j.coeff(2), -1.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(j.coeff(3), 5.0 / 81.0, epsilon = 1e-15);
    }

    #[test]
    fn cbrt_of_negative_leading_term() {
        let j = Jet::variable(-8.0, 2).cbrt();
        assert_relative_eq!(j.value(), -2.0, epsilon = 1e-15);
        // d/dx x^{1/3} = x^{-2/3}/3 = 1/12 at -8
        assert_relative_eq!(j.derivative(1), 1.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn compose_polynomial() {
        // outer (w) = 2 + 3w + w^2 at the value of x = 1 + t
        let inner = Jet::variable(1.0, 4);
        let out = inner.compose(&[2.0, 3.0, 1.0]);
        assert_eq!(out.coeffs(), &[2.0, 3.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn diff_shifts_coefficients() {
        let j = Jet::from_coeffs(&[1.0, 2.0, 3.0, 4.0], 3).diff();
        assert_eq!(j.coeffs(), &[2.0, 6.0, 12.0]);
    }

    proptest! {
        #[test]
        fn exp_ln_round_trip(a0 in 0.5f64..5.0, a1 in -2.0f64..2.0, a2 in -2.0f64..2.0) {
            let j = Jet::from_coeffs(&[a0, a1, a2], 8);
            let back = j.ln().exp();
            for k in 0..=8 {
                prop_assert!((back.coeff(k) - j.coeff(k)).abs() < 1e-10 * (1.0 + j.coeff(k).abs()));
            }
        }

        #[test]
        fn truncation_is_idempotent(a0 in 0.5f64..3.0, a1 in -1.0f64..1.0, order in 2usize..10) {
            // composing with its own truncation re-derives identical coefficients
            let j = Jet::from_coeffs(&[a0, a1, 0.3], MAX_ORDER);
            let full = j.sqrt().truncate(order);
            let short = j.truncate(order).sqrt();
            for k in 0..=order {
                prop_assert!((full.coeff(k) - short.coeff(k)).abs() < 1e-13);
            }
        }

        #[test]
        fn quotient_inverts_product(a0 in 0.5f64..2.0, b0 in 0.5f64..2.0, a1 in -1.0f64..1.0, b1 in -1.0f64..1.0) {
            let a = Jet::from_coeffs(&[a0, a1, 0.2, -0.1], 6);
            let b = Jet::from_coeffs(&[b0, b1, -0.3], 6);
            let q = (a * b) / b;
            for k in 0..=6 {
                prop_assert!((q.coeff(k) - a.coeff(k)).abs() < 1e-12);
            }
        }
    }
}
