//! Polynomial couplings f1(u, v), f2(u, v) and their shifted forms around a
//! background trajectory.

use std::ops::{Add, Mul, Sub};

use crate::jet::Jet;

/// Commutative ring operations shared by scalars, jets and series.
pub trait Algebra: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn scale(&self, c: f64) -> Self;
    fn constant_like(&self, c: f64) -> Self;
}

impl Algebra for f64 {
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
}

impl Algebra for Jet {
    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, c)
    }
    fn constant_like(&self, c: f64) -> Self {
        Jet::constant(c, self.order())
    }
}

/// One monomial c u^a v^b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub c: f64,
    pub a: u32,
    pub b: u32,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn pow<A: Algebra>(x: &A, n: u32) -> A {
    let mut acc = x.constant_like(1.0);
    for _ in 0..n {
        acc = acc * x.clone();
    }
    acc
}

/// Polynomial in (u, v) without constant term.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    pub terms: Vec<Term>,
}

impl Poly2 {
    pub fn new(terms: &[(f64, u32, u32)]) -> Poly2 {
        Poly2 { terms: terms.iter().map(|&(c, a, b)| Term { c, a, b }).collect() }
    }

    pub fn eval<A: Algebra>(&self, u: &A, v: &A) -> A {
        let mut acc = u.constant_like(0.0);
        for t in &self.terms {
            acc = acc + (pow(u, t.a) * pow(v, t.b)).scale(t.c);
        }
        acc
    }

    /// (d/du, d/dv) at scalar arguments.
    pub fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        let mut du = 0.0;
        let mut dv = 0.0;
        for t in &self.terms {
            if t.a > 0 {
                du += t.c * t.a as f64 * u.powi(t.a as i32 - 1) * v.powi(t.b as i32);
            }
            if t.b > 0 {
                dv += t.c * t.b as f64 * u.powi(t.a as i32) * v.powi(t.b as i32 - 1);
            }
        }
        (du, dv)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.c == 0.0)
    }

    /// Lipschitz bound of the polynomial on |u|, |v| <= r.
    pub fn lipschitz(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c.abs() * (t.a + t.b) as f64 * r.powi((t.a + t.b) as i32 - 1))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub f1: Poly2,
    pub f2: Poly2,
}

impl Coupling {
    /// f1 = 0, f2 = u^3.
    pub fn cubic() -> Coupling {
        Coupling { f1: Poly2::default(), f2: Poly2::new(&[(1.0, 3, 0)]) }
    }

    /// f1 = 0, f2 = c u + u^3; df2/du(0, 0) = c.
    pub fn cubic_plus_linear(c: f64) -> Coupling {
        Coupling { f1: Poly2::default(), f2: Poly2::new(&[(c, 1, 0), (1.0, 3, 0)]) }
    }

    /// f1 = 0, f2 = c u.
    pub fn linear(c: f64) -> Coupling {
        Coupling { f1: Poly2::default(), f2: Poly2::new(&[(c, 1, 0)]) }
    }

    pub fn f<A: Algebra>(&self, i: usize, u: &A, v: &A) -> A {
        match i {
            1 => self.f1.eval(u, v),
            2 => self.f2.eval(u, v),
            _ => panic!("equation index {i} must be 1 or 2"),
        }
    }

    /// f_i(ub + u, vb + v) - f_i(ub, vb), binomially expanded so that no
    /// large background powers cancel.
    pub fn shifted(&self, i: usize, ub: f64, vb: f64, u: f64, v: f64) -> f64 {
        let p = match i {
            1 => &self.f1,
            2 => &self.f2,
            _ => panic!("equation index {i} must be 1 or 2"),
        };
        let mut acc = 0.0;
        for t in &p.terms {
            let mut sum = 0.0;
            for k in 0..=t.a {
                for l in 0..=t.b {
                    if k == 0 && l == 0 {
                        continue;
                    }
                    let cu = binomial(t.a, k) * ub.powi((t.a - k) as i32) * u.powi(k as i32);
                    let cv = binomial(t.b, l) * vb.powi((t.b - l) as i32) * v.powi(l as i32);
                    sum += cu * cv;
                }
            }
            acc += t.c * sum;
        }
        acc
    }

    pub fn grad(&self, i: usize, u: f64, v: f64) -> (f64, f64) {
        match i {
            1 => self.f1.grad(u, v),
            2 => self.f2.grad(u, v),
            _ => panic!("equation index {i} must be 1 or 2"),
        }
    }

    /// f1 = 0 and f2 depends on u only, so frozen-source iterations are
    /// exact after one sweep.
    pub fn is_cascade(&self) -> bool {
        self.f1.is_zero() && self.f2.terms.iter().all(|t| t.c == 0.0 || t.b == 0)
    }

    /// Lipschitz bound of (f1, f2) on the ball of radius r.
    pub fn lipschitz(&self, r: f64) -> f64 {
        self.f1.lipschitz(r).max(self.f2.lipschitz(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values_and_gradients() {
        let c = Coupling::cubic();
        assert_eq!(c.f(2, &2.0, &5.0), 8.0);
        assert_eq!(c.f(1, &2.0, &5.0), 0.0);
        assert_eq!(c.grad(2, 2.0, 1.0), (12.0, 0.0));
    }

    #[test]
    fn shifted_cubic_expansion() {
        let c = Coupling::cubic();
        let (ub, u) = (1.5, 0.25);
        let want = u * u * u + 3.0 * ub * u * u + 3.0 * ub * ub * u;
        assert!((c.shifted(2, ub, 0.0, u, 0.0) - want).abs() < 1e-14);
    }

    #[test]
    fn jets_match_scalar_evaluation() {
        let c = Coupling::cubic_plus_linear(2.0);
        let u = Jet::variable(0.5, 3);
        let v = Jet::constant(0.0, 3);
        let j = c.f(2, &u, &v);
        assert!((j.value() - (1.0 + 0.125)).abs() < 1e-15);
        assert!((j.derivative(1) - c.grad(2, 0.5, 0.0).0).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_bound() {
        assert!((Coupling::cubic().lipschitz(0.1) - 0.03).abs() < 1e-15);
        assert!(Coupling::cubic().is_cascade());
        let mixed = Coupling { f1: Poly2::new(&[(1.0, 0, 1)]), f2: Poly2::default() };
        assert!(!mixed.is_cascade());
    }
}
