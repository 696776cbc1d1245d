//! Spatial functions with jet evaluation, and initial/final data families.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::field::Grid;
use crate::jet::Jet;
use crate::profiles::cutoff::bump_jet;

/// A function of x evaluated on jets, so values and derivatives at a point
/// come from one call.
pub type SpatialFn = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

pub fn zero() -> SpatialFn {
    Arc::new(|x: &Jet| Jet::zero(x.order()))
}

/// amplitude * sin(m pi x / L)
pub fn sine(m: u32, amplitude: f64, l: f64) -> SpatialFn {
    let k = m as f64 * PI / l;
    Arc::new(move |x: &Jet| (*x * k).sin() * amplitude)
}

/// amplitude * flat bump supported on (center - width/2, center + width/2).
pub fn bump(center: f64, width: f64, amplitude: f64) -> SpatialFn {
    Arc::new(move |x: &Jet| bump_jet(&((*x - (center - 0.5 * width)) / width)) * amplitude)
}

pub fn scaled(f: &SpatialFn, c: f64) -> SpatialFn {
    let f = f.clone();
    Arc::new(move |x: &Jet| f(x) * c)
}

pub fn sum(f: &SpatialFn, g: &SpatialFn) -> SpatialFn {
    let (f, g) = (f.clone(), g.clone());
    Arc::new(move |x: &Jet| f(x) + g(x))
}

/// x -> f(L - x)
pub fn mirrored(f: &SpatialFn, l: f64) -> SpatialFn {
    let f = f.clone();
    Arc::new(move |x: &Jet| f(&(l - *x)))
}

/// Samples on the uniform nodes x_j = j * dx, interpolated by the cubic
/// through the four nearest nodes (jets beyond order 3 vanish).
pub fn sampled(values: Vec<f64>, dx: f64) -> SpatialFn {
    let values = Arc::new(values);
    Arc::new(move |x: &Jet| {
        let n = values.len();
        let x0 = x.value();
        let i = ((x0 / dx).floor() as i64 - 1).clamp(0, n as i64 - 4) as usize;
        let nodes: Vec<f64> = (0..4).map(|k| (i + k) as f64 * dx - x0).collect();
        // Newton divided differences in the local variable w = x - x0
        let mut c: Vec<f64> = (0..4).map(|k| values[i + k]).collect();
        for lvl in 1..4 {
            for k in (lvl..4).rev() {
                c[k] = (c[k] - c[k - 1]) / (nodes[k] - nodes[k - lvl]);
            }
        }
        // expand prod (w - nodes) into monomials
        let mut poly = [0.0; 4];
        let mut basis = [1.0, 0.0, 0.0, 0.0];
        for k in 0..4 {
            for d in 0..4 {
                poly[d] += c[k] * basis[d];
            }
            if k < 3 {
                let mut next = [0.0; 4];
                for d in 0..4 {
                    if d + 1 < 4 {
                        next[d + 1] += basis[d];
                    }
                    next[d] -= nodes[k] * basis[d];
                }
                basis = next;
            }
        }
        x.compose(&poly)
    })
}

pub fn value(f: &SpatialFn, x: f64) -> f64 {
    f(&Jet::constant(x, 0)).value()
}

/// Derivatives f, f', ..., f^(order) at x.
pub fn derivatives(f: &SpatialFn, x: f64, order: usize) -> Vec<f64> {
    let j = f(&Jet::variable(x, order));
    (0..=order).map(|k| j.derivative(k)).collect()
}

pub fn sample(f: &SpatialFn, grid: &Grid) -> Vec<f64> {
    (0..grid.nx).map(|j| value(f, grid.x(j))).collect()
}

/// Sup norm over `samples + 1` equispaced points of [0, L].
pub fn sup_norm(f: &SpatialFn, l: f64, samples: usize) -> f64 {
    (0..=samples).map(|k| value(f, l * k as f64 / samples as f64).abs()).fold(0.0, f64::max)
}

/// Initial (t = 0) and final (t = T) position and velocity of both components.
#[derive(Clone)]
pub struct EndpointData {
    pub l: f64,
    pub u0: SpatialFn,
    pub u1: SpatialFn,
    pub v0: SpatialFn,
    pub v1: SpatialFn,
    pub u0f: SpatialFn,
    pub u1f: SpatialFn,
    pub v0f: SpatialFn,
    pub v1f: SpatialFn,
}

impl std::fmt::Debug for EndpointData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointData").field("l", &self.l).finish_non_exhaustive()
    }
}

/// One scalar component's endpoint data.
#[derive(Clone)]
pub struct ScalarData {
    pub u0: SpatialFn,
    pub u1: SpatialFn,
    pub u0f: SpatialFn,
    pub u1f: SpatialFn,
}

impl EndpointData {
    pub fn zero(l: f64) -> EndpointData {
        let z = zero();
        EndpointData {
            l,
            u0: z.clone(),
            u1: z.clone(),
            v0: z.clone(),
            v1: z.clone(),
            u0f: z.clone(),
            u1f: z.clone(),
            v0f: z.clone(),
            v1f: z,
        }
    }

    /// Both positions start in sine mode m at rest and are steered to rest.
    pub fn sine_mode(l: f64, m: u32, amplitude: f64) -> EndpointData {
        let s = sine(m, amplitude, l);
        EndpointData { u0: s.clone(), v0: s, ..EndpointData::zero(l) }
    }

    /// Both positions start as a flat bump at rest and are steered to rest.
    pub fn bump(l: f64, center: f64, width: f64, amplitude: f64) -> EndpointData {
        let b = bump(center, width, amplitude);
        EndpointData { u0: b.clone(), v0: b, ..EndpointData::zero(l) }
    }

    /// u-parts multiplied by `cu`, v-parts by `cv`.
    pub fn scaled(&self, cu: f64, cv: f64) -> EndpointData {
        EndpointData {
            l: self.l,
            u0: scaled(&self.u0, cu),
            u1: scaled(&self.u1, cu),
            v0: scaled(&self.v0, cv),
            v1: scaled(&self.v1, cv),
            u0f: scaled(&self.u0f, cu),
            u1f: scaled(&self.u1f, cu),
            v0f: scaled(&self.v0f, cv),
            v1f: scaled(&self.v1f, cv),
        }
    }

    pub fn component(&self, i: usize) -> ScalarData {
        match i {
            1 => ScalarData { u0: self.u0.clone(), u1: self.u1.clone(), u0f: self.u0f.clone(), u1f: self.u1f.clone() },
            2 => ScalarData { u0: self.v0.clone(), u1: self.v1.clone(), u0f: self.v0f.clone(), u1f: self.v1f.clone() },
            _ => panic!("component {i} must be 1 or 2"),
        }
    }

    /// (max sup norm of the u-parts, max sup norm of the v-parts).
    pub fn norms(&self) -> (f64, f64) {
        let n = |f: &SpatialFn| sup_norm(f, self.l, 2000);
        let u = n(&self.u0).max(n(&self.u1)).max(n(&self.u0f)).max(n(&self.u1f));
        let v = n(&self.v0).max(n(&self.v1)).max(n(&self.v0f)).max(n(&self.v1f));
        (u, v)
    }

    /// M = |u-data| + |v-data|^(1/3), the homogeneous size of the data.
    pub fn homogeneous_size(&self) -> f64 {
        let (u, v) = self.norms();
        u + v.cbrt()
    }
}
