//! Corner compatibility of endpoint data: time derivatives at the four
//! corners of [0, T] x [0, L] induced by the equations, evaluated from
//! spatial jets of the data.

use std::ops::{Add, Mul, Sub};

use crate::coupling::{Algebra, Coupling, Poly2};
use crate::data::{EndpointData, SpatialFn};
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_ORDER: usize = 4;

/// Time jet of f(u, v) to order n from time jets of u and v.
pub fn time_jets_of_coupling(f: &Poly2, u: &Jet, v: &Jet, n: usize) -> Result<Jet> {
    if u.order() < n || v.order() < n {
        return Err(Error::OrderTooLow(format!(
            "time jets of order {} and {} cannot give order {n}",
            u.order(),
            v.order()
        )));
    }
    Ok(f.eval(&u.truncate(n), &v.truncate(n)))
}

/// Power series in t whose coefficients are jets in x.
#[derive(Debug, Clone)]
struct TSeries(Vec<Jet>);

impl Add for TSeries {
    type Output = TSeries;
    fn add(self, o: TSeries) -> TSeries {
        TSeries(self.0.into_iter().zip(o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for TSeries {
    type Output = TSeries;
    fn sub(self, o: TSeries) -> TSeries {
        TSeries(self.0.into_iter().zip(o.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul for TSeries {
    type Output = TSeries;
    fn mul(self, o: TSeries) -> TSeries {
        let n = self.0.len().min(o.0.len());
        let ord = self.0[0].order().min(o.0[0].order());
        let mut out = vec![Jet::zero(ord); n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        TSeries(out)
    }
}

impl Algebra for TSeries {
    fn scale(&self, c: f64) -> Self {
        TSeries(self.0.iter().map(|a| a.scale(c)).collect())
    }
    fn constant_like(&self, c: f64) -> Self {
        let ord = self.0[0].order();
        let mut v = vec![Jet::zero(ord); self.0.len()];
        v[0] = Jet::constant(c, ord);
        TSeries(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Corner {
    /// (t = 0, x = 0)
    InitialLeft,
    InitialRight,
    FinalLeft,
    FinalRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::InitialLeft, Corner::InitialRight, Corner::FinalLeft, Corner::FinalRight];

    pub fn label(self) -> &'static str {
        match self {
            Corner::InitialLeft => "0-0",
            Corner::InitialRight => "0-L",
            Corner::FinalLeft => "T-0",
            Corner::FinalRight => "T-L",
        }
    }

    pub fn is_initial(self) -> bool {
        matches!(self, Corner::InitialLeft | Corner::InitialRight)
    }

    pub fn is_left(self) -> bool {
        matches!(self, Corner::InitialLeft | Corner::FinalLeft)
    }
}

/// Speeds and coupling entering the corner recurrence.
#[derive(Debug, Clone)]
pub struct Equations {
    pub nu1: f64,
    pub nu2: f64,
    pub coupling: Coupling,
}

/// t-Taylor coefficients (as x-jets at the corner's x) of u and v to
/// degree n, from u_tt = nu1^2 u_xx + f1, v_tt = nu2^2 v_xx + f2.
fn corner_series(eq: &Equations, data: &EndpointData, corner: Corner, n: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let order = n + 2;
    if order > MAX_ORDER {
        return Err(Error::OrderTooLow(format!("corner order {n} needs jets beyond {MAX_ORDER}")));
    }
    let x0 = if corner.is_left() { 0.0 } else { data.l };
    let jet = |f: &SpatialFn| f(&Jet::variable(x0, order));
    let (u0, u1, v0, v1) = if corner.is_initial() {
        (jet(&data.u0), jet(&data.u1), jet(&data.v0), jet(&data.v1))
    } else {
        (jet(&data.u0f), jet(&data.u1f), jet(&data.v0f), jet(&data.v1f))
    };
    let mut a = vec![u0, u1];
    let mut b = vec![v0, v1];
    let (c1, c2) = (eq.nu1 * eq.nu1, eq.nu2 * eq.nu2);
    for m in 0..n.saturating_sub(1) {
        let su = TSeries(a[..=m].to_vec());
        let sv = TSeries(b[..=m].to_vec());
        let f1 = eq.coupling.f1.eval(&su, &sv).0[m];
        let f2 = eq.coupling.f2.eval(&su, &sv).0[m];
        let d = ((m + 2) * (m + 1)) as f64;
        let next_a = (a[m].diff().diff() * c1 + f1.truncate(a[m].order().saturating_sub(2))) / d;
        let next_b = (b[m].diff().diff() * c2 + f2.truncate(b[m].order().saturating_sub(2))) / d;
        a.push(next_a);
        b.push(next_b);
    }
    Ok((a, b))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// d^n/dt^n of u (equation 1) or v (equation 2) at a corner.
pub fn corner_derivative(eq: &Equations, data: &EndpointData, n: usize, corner: Corner, equation: usize) -> Result<f64> {
    let (a, b) = corner_series(eq, data, corner, n)?;
    let s = match equation {
        1 => &a,
        2 => &b,
        _ => return Err(Error::OutOfDomain(format!("equation {equation} must be 1 or 2"))),
    };
    Ok(factorial(n) * s[n].value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub corner: Corner,
    pub equation: usize,
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompatReport {
    pub order: usize,
    pub violations: Vec<Violation>,
}

impl CompatReport {
    pub fn is_compatible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Lines `corner,eq,n,value`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("corner,eq,n,value\n");
        for v in &self.violations {
            s.push_str(&format!("{},{},{},{:.17e}\n", v.corner.label(), v.equation, v.n, v.value));
        }
        s
    }
}

fn corner_values(eq: &Equations, data: &EndpointData, corner: Corner, k: usize) -> Result<[Vec<f64>; 2]> {
    let (a, b) = corner_series(eq, data, corner, k)?;
    let vals = |s: &[Jet]| (0..=k).map(|n| factorial(n) * s[n].value()).collect();
    Ok([vals(&a), vals(&b)])
}

/// Every (corner, equation, n <= k) with |d^n/dt^n| > tol.
pub fn check_compatibility(eq: &Equations, data: &EndpointData, k: usize, tol: f64) -> Result<CompatReport> {
    let mut violations = vec![];
    for corner in Corner::ALL {
        let vals = corner_values(eq, data, corner, k)?;
        for (e, vs) in vals.iter().enumerate() {
            for (n, &value) in vs.iter().enumerate() {
                if !(value.abs() <= tol) {
                    violations.push(Violation { corner, equation: e + 1, n, value });
                }
            }
        }
    }
    Ok(CompatReport { order: k, violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlledSides {
    Both,
    Left,
    Right,
}

/// Time jets a boundary control must match at t = 0 and t = T.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlJets {
    /// [equation][time 0 or T] derivatives 0..=k at x = 0, if controlled
    pub left: Option<[[Vec<f64>; 2]; 2]>,
    pub right: Option<[[Vec<f64>; 2]; 2]>,
    /// uncontrolled corners whose homogeneous condition fails
    pub violations: Vec<Violation>,
}

pub fn boundary_control_jets(eq: &Equations, data: &EndpointData, k: usize, sides: ControlledSides, tol: f64) -> Result<ControlJets> {
    let side = |left: bool| -> Result<[[Vec<f64>; 2]; 2]> {
        let (c0, c1) = if left { (Corner::InitialLeft, Corner::FinalLeft) } else { (Corner::InitialRight, Corner::FinalRight) };
        let [u0, v0] = corner_values(eq, data, c0, k)?;
        let [u1, v1] = corner_values(eq, data, c1, k)?;
        Ok([[u0, u1], [v0, v1]])
    };
    let (with_left, with_right) = match sides {
        ControlledSides::Both => (true, true),
        ControlledSides::Left => (true, false),
        ControlledSides::Right => (false, true),
    };
    let mut violations = vec![];
    for corner in Corner::ALL {
        let controlled = if corner.is_left() { with_left } else { with_right };
        if controlled {
            continue;
        }
        let vals = corner_values(eq, data, corner, k)?;
        for (e, vs) in vals.iter().enumerate() {
            for (n, &value) in vs.iter().enumerate() {
                if !(value.abs() <= tol) {
                    violations.push(Violation { corner, equation: e + 1, n, value });
                }
            }
        }
    }
    Ok(ControlJets {
        left: if with_left { Some(side(true)?) } else { None },
        right: if with_right { Some(side(false)?) } else { None },
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::profiles::cutoff::step_jet;
    use std::sync::Arc;

    fn cubic(nu1: f64, nu2: f64) -> Equations {
        Equations { nu1, nu2, coupling: Coupling::cubic() }
    }

    #[test]
    fn coupling_time_jets() {
        let f = Coupling::cubic().f2;
        let t = Jet::variable(0.0, 5);
        let j = time_jets_of_coupling(&f, &t, &Jet::zero(5), 5).unwrap();
        for k in 0..=5 {
            assert_eq!(j.coeff(k), if k == 3 { 1.0 } else { 0.0 });
        }
        let lin = Coupling::linear(2.5).f2;
        let u = Jet::from_coeffs(&[1.0, 2.0, 3.0], 2);
        let j = time_jets_of_coupling(&lin, &u, &Jet::zero(2), 2).unwrap();
        assert_eq!(j.coeffs(), &[2.5, 5.0, 7.5]);
        let j0 = time_jets_of_coupling(&f, &Jet::constant(2.0, 0), &Jet::constant(0.0, 0), 0).unwrap();
        assert_eq!(j0.value(), 8.0);
        assert!(matches!(time_jets_of_coupling(&f, &u, &u, 3), Err(Error::OrderTooLow(_))));
    }

    #[test]
    fn low_order_corner_derivatives() {
        let c = |v: f64| -> SpatialFn { Arc::new(move |x: &Jet| Jet::constant(v, x.order())) };
        let quad = |a: f64, b: f64, cc: f64| -> SpatialFn { Arc::new(move |x: &Jet| *x * *x * cc + *x * b + a) };
        let d = EndpointData { u0: quad(0.5, 0.0, 0.25), u1: c(0.7), v0: quad(0.2, 0.0, 1.0), ..EndpointData::zero(1.0) };
        let eq = cubic(2.0, 3.0);
        assert_eq!(corner_derivative(&eq, &d, 1, Corner::InitialLeft, 1).unwrap(), 0.7);
        // nu1^2 u0'' + f1 with f1 = 0
        assert!((corner_derivative(&eq, &d, 2, Corner::InitialLeft, 1).unwrap() - 4.0 * 0.5).abs() < 1e-14);
        // nu2^2 v0'' + u0^3
        assert!((corner_derivative(&eq, &d, 2, Corner::InitialLeft, 2).unwrap() - (9.0 * 2.0 + 0.125)).abs() < 1e-13);
        let z = EndpointData::zero(1.0);
        let r = check_compatibility(&eq, &z, 4, DEFAULT_TOL).unwrap();
        assert!(r.is_compatible());
    }

    #[test]
    fn bump_at_boundary_violates_at_order_zero() {
        let d = EndpointData { u0: data::bump(0.0, 0.4, 1.0), ..EndpointData::zero(1.0) };
        let r = check_compatibility(&cubic(1.0, 1.0), &d, 4, DEFAULT_TOL).unwrap();
        assert!(r.violations.iter().any(|v| v.corner == Corner::InitialLeft && v.equation == 1 && v.n == 0));
    }

    fn sine_data() -> EndpointData {
        EndpointData::sine_mode(1.0, 1, 1e-3)
    }

    #[test]
    fn sine_data_is_compatible_and_perturbation_is_caught_once() {
        let eq = cubic(1.0, 1.0);
        assert!(check_compatibility(&eq, &sine_data(), 4, DEFAULT_TOL).unwrap().is_compatible());
        let mut d = sine_data();
        let bump: SpatialFn = Arc::new(|x: &Jet| (1.0 - step_jet(&(*x / 0.1))) * (*x * *x) * 0.5e-3);
        d.u0 = data::sum(&d.u0, &bump);
        let r = check_compatibility(&eq, &d, 4, DEFAULT_TOL).unwrap();
        assert_eq!(r.violations.len(), 1, "{:?}", r.violations);
        let v = r.violations[0];
        assert_eq!((v.corner, v.equation, v.n), (Corner::InitialLeft, 1, 2));
        assert!((v.value - 1e-3).abs() < 1e-12);
        assert!(r.to_text().contains("0-0,1,2,"));
    }

    #[test]
    fn control_jets() {
        let eq = cubic(1.0, 1.0);
        let d = EndpointData { u1: data::bump(0.0, 0.4, 1.0), ..EndpointData::zero(1.0) };
        let j = boundary_control_jets(&eq, &d, 3, ControlledSides::Both, DEFAULT_TOL).unwrap();
        let left = j.left.unwrap();
        assert_eq!(left[0][0][1], data::value(&d.u1, 0.0));
        assert!(j.violations.is_empty());
        let z = boundary_control_jets(&eq, &EndpointData::zero(1.0), 3, ControlledSides::Both, DEFAULT_TOL).unwrap();
        assert!(z.left.unwrap().iter().flatten().flatten().all(|v| *v == 0.0));
        let one = boundary_control_jets(&eq, &d, 3, ControlledSides::Right, DEFAULT_TOL).unwrap();
        assert!(one.left.is_none() && !one.violations.is_empty());
        assert!(one.violations.iter().all(|v| v.corner.is_left()));
    }
}
