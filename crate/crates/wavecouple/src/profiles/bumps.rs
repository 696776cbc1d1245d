//! Spatial bumps g1, g2, g3 concentrated at z = 3/4.
//!
//! g_i = p_i(z - 3/4) * beta(z) where beta is a flat-topped bump vanishing for
//! |z - 3/4| >= delta''/2. The quartic p_i is fixed by asking the jet of g_i at
//! 3/4 to be the unit vector e_{i+1} up to order 4; with a flat top p_i is the
//! monomial (z - 3/4)^{i+1} / (i+1)!.

use nalgebra::{Matrix5, Vector5};

use super::cutoff::step_jet;
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone)]
pub struct BumpTriple {
    delta_double_prime: f64,
    coeffs: [[f64; 5]; 3],
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

impl BumpTriple {
    /// All three bumps identically zero.
    pub fn zero(delta_double_prime: f64) -> Self {
        BumpTriple { delta_double_prime, coeffs: [[0.0; 5]; 3] }
    }

    /// Polynomial coefficients of p_i in powers of (z - 3/4), i in 1..=3.
    pub fn poly(&self, i: usize) -> [f64; 5] {
        self.coeffs[i - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    /// Half-width of the support around 3/4.
    pub fn support_radius(&self) -> f64 {
        0.5 * self.delta_double_prime
    }

    /// 1 - S(|z - 3/4| / (delta''/2)), flat at 3/4 and at the support edge.
    fn beta_jet(dpp: f64, z: f64, order: usize) -> Jet {
        let r = 0.5 * dpp;
        let w = z - 0.75;
        if w.abs() >= r {
            return Jet::zero(order);
        }
        let b = 1.0 - step_jet(&(Jet::variable(w.abs(), order) / r));
        if w < 0.0 {
            // beta is even in w
            let c: Vec<f64> = (0..=order)
                .map(|k| if k % 2 == 1 { -b.coeff(k) } else { b.coeff(k) })
                .collect();
            Jet::from_coeffs(&c, order)
        } else {
            b
        }
    }

    /// Jet of g_i at z, i in 1..=3.
    pub fn g_jet(&self, i: usize, z: f64, order: usize) -> Jet {
        let w = z - 0.75;
        if w.abs() >= self.support_radius() {
            return Jet::zero(order);
        }
        let wj = Jet::variable(w, order);
        let p = self.coeffs[i - 1]
            .iter()
            .rev()
            .fold(Jet::zero(order), |acc, &a| acc * wj + a);
        p * Self::beta_jet(self.delta_double_prime, z, order)
    }

    pub fn g(&self, i: usize, z: f64) -> f64 {
        self.g_jet(i, z, 0).value()
    }
}

/// Solves the three jet-matching systems.
pub fn build_bumps(delta_double_prime: f64) -> Result<BumpTriple> {
    let dpp = delta_double_prime;
    if !(dpp > 0.0 && dpp < 0.25) {
        return Err(Error::OutOfDomain(format!("delta'' = {dpp} outside (0, 1/4)")));
    }
    let beta = BumpTriple::beta_jet(dpp, 0.75, 4);
    // row j: derivative j of p * beta at 3/4, column l: coefficient a_l
    let mut m = Matrix5::zeros();
    for j in 0..5 {
        for l in 0..=j {
            m[(j, l)] = binomial(j, l) * factorial(l) * beta.derivative(j - l);
        }
    }
    if beta.value() == 0.0 {
        return Err(Error::SingularSystem("beta(3/4) = 0".into()));
    }
    let lu = m.lu();
    let mut coeffs = [[0.0; 5]; 3];
    for i in 1..=3 {
        let mut rhs = Vector5::zeros();
        rhs[i + 1] = 1.0;
        let a = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem(format!("bump {i} jet system")))?;
        for l in 0..5 {
            coeffs[i - 1][l] = a[l];
        }
    }
    Ok(BumpTriple { delta_double_prime: dpp, coeffs })
}
