//! Uniform (t, x) lattice and sampled scalar fields.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_end: f64,
    pub l: f64,
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
}

impl Grid {
    pub fn new(t_end: f64, l: f64, nt: usize, nx: usize) -> Result<Grid> {
        if nt < 3 || nx < 3 || !(t_end > 0.0) || !(l > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "grid needs nt, nx >= 3 and positive extents, got {nt} x {nx} on [0,{t_end}] x [0,{l}]"
            )));
        }
        Ok(Grid {
            t_end,
            l,
            nt,
            nx,
            dt: t_end / (nt - 1) as f64,
            dx: l / (nx - 1) as f64,
        })
    }

    pub fn t(&self, n: usize) -> f64 {
        if n + 1 == self.nt {
            self.t_end
        } else {
            n as f64 * self.dt
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        if j + 1 == self.nx {
            self.l
        } else {
            j as f64 * self.dx
        }
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cfl(&self, nu_max: f64) -> f64 {
        nu_max * self.dt / self.dx
    }

    pub fn check_cfl(&self, nu_max: f64) -> Result<()> {
        let c = self.cfl(nu_max);
        if c > 0.95 + 1e-12 {
            return Err(Error::CflViolation(format!("CFL number {c:.4} exceeds 0.95")));
        }
        Ok(())
    }

    /// Grid with `2^levels` times as many cells along each axis.
    pub fn refine(&self, levels: u32) -> Grid {
        let k = 1usize << levels;
        Grid::new(self.t_end, self.l, (self.nt - 1) * k + 1, (self.nx - 1) * k + 1)
            .expect("refinement of a valid grid")
    }

    /// Nearest column index to x (clamped).
    pub fn col(&self, x: f64) -> usize {
        ((x / self.dx).round().max(0.0) as usize).min(self.nx - 1)
    }

    /// Column range [lo, hi] of nodes with x in [x0, x1].
    pub fn cols_within(&self, x0: f64, x1: f64) -> Option<(usize, usize)> {
        let lo = (x0 / self.dx).ceil().max(0.0) as usize;
        let hi = ((x1 / self.dx).floor() as i64).min(self.nx as i64 - 1);
        if hi < lo as i64 {
            None
        } else {
            Some((lo, hi as usize))
        }
    }

    /// Row range [lo, hi] of nodes with t in [t0, t1].
    pub fn rows_within(&self, t0: f64, t1: f64) -> Option<(usize, usize)> {
        let lo = (t0 / self.dt - 1e-9).ceil().max(0.0) as usize;
        let hi = ((t1 / self.dt + 1e-9).floor() as i64).min(self.nt as i64 - 1);
        if hi < lo as i64 {
            None
        } else {
            Some((lo, hi as usize))
        }
    }
}

/// nt x nx samples stored row-major by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub grid: Grid,
    pub data: Vec<f64>,
    /// Values come from closed forms rather than a discrete solve.
    pub analytic: bool,
}

impl Field {
    pub fn zeros(name: &str, grid: Grid) -> Field {
        Field { name: name.to_string(), grid, data: vec![0.0; grid.len()], analytic: false }
    }

    /// Fills each row in parallel; `f(n, row)` writes row n.
    pub fn from_rows<F>(name: &str, grid: Grid, f: F) -> Field
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let mut field = Field::zeros(name, grid);
        field
            .data
            .par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(n, row)| f(n, row));
        field
    }

    pub fn from_fn<F>(name: &str, grid: Grid, f: F) -> Field
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        Field::from_rows(name, grid, |n, row| {
            let t = grid.t(n);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(t, grid.x(j));
            }
        })
    }

    pub fn renamed(mut self, name: &str) -> Field {
        self.name = name.to_string();
        self
    }

    #[inline]
    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.data[n * self.grid.nx + j]
    }

    #[inline]
    pub fn set(&mut self, n: usize, j: usize, v: f64) {
        let nx = self.grid.nx;
        self.data[n * nx + j] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.data[n * nx..(n + 1) * nx]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let nx = self.grid.nx;
        &mut self.data[n * nx..(n + 1) * nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |value| over nodes where `keep` is true.
    pub fn max_abs_where(&self, keep: &Mask) -> f64 {
        self.data
            .iter()
            .zip(&keep.data)
            .filter(|(_, &k)| k)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
    }

    pub fn row_max_abs(&self, n: usize) -> f64 {
        self.row(n).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut f = self.clone();
        f.data.iter_mut().for_each(|v| *v *= s);
        f
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Field) {
        assert_eq!(self.grid, other.grid);
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Field {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Field { name: self.name.clone(), grid: self.grid, data, analytic: false }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        let data = self.data.iter().map(|&a| f(a)).collect();
        Field { name: self.name.clone(), grid: self.grid, data, analytic: false }
    }

    /// Sets values to zero where `keep` is false.
    pub fn masked(&self, keep: &Mask) -> Field {
        let mut f = self.clone();
        f.data.iter_mut().zip(&keep.data).for_each(|(v, &k)| {
            if !k {
                *v = 0.0
            }
        });
        f
    }
}

/// Boolean node set on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: Grid,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, value: bool) -> Mask {
        Mask { grid, data: vec![value; grid.len()] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> bool + Sync>(grid: Grid, f: F) -> Mask {
        let mut data = vec![false; grid.len()];
        data.par_chunks_mut(grid.nx).enumerate().for_each(|(n, row)| {
            let t = grid.t(n);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(t, grid.x(j));
            }
        });
        Mask { grid, data }
    }

    #[inline]
    pub fn at(&self, n: usize, j: usize) -> bool {
        self.data[n * self.grid.nx + j]
    }

    pub fn not(&self) -> Mask {
        Mask { grid: self.grid, data: self.data.iter().map(|b| !b).collect() }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Nodes within `k` cells (Chebyshev distance) of the set.
    pub fn dilate(&self, k: usize) -> Mask {
        let (nt, nx) = (self.grid.nt, self.grid.nx);
        let mut out = vec![false; self.data.len()];
        for n in 0..nt {
            for j in 0..nx {
                if !self.at(n, j) {
                    continue;
                }
                for m in n.saturating_sub(k)..=(n + k).min(nt - 1) {
                    for i in j.saturating_sub(k)..=(j + k).min(nx - 1) {
                        out[m * nx + i] = true;
                    }
                }
            }
        }
        Mask { grid: self.grid, data: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_steps() {
        let g = Grid::new(2.0, 1.0, 5, 3).unwrap();
        assert_eq!(g.dt, 0.5);
        assert_eq!(g.dx, 0.5);
        assert_eq!(g.t(4), 2.0);
        assert_eq!(g.cfl(1.0), 1.0);
        assert!(g.check_cfl(1.0).is_err());
        let r = g.refine(1);
        assert_eq!((r.nt, r.nx), (9, 5));
    }

    #[test]
    fn field_rows_and_masks() {
        let g = Grid::new(1.0, 1.0, 3, 4).unwrap();
        let f = Field::from_fn("f", g, |t, x| t + 10.0 * x);
        assert_eq!(f.at(2, 0), 1.0);
        let m = Mask::from_fn(g, |_, x| x > 0.5);
        assert_eq!(m.count(), 6);
        assert_eq!(f.masked(&m).row(0)[1], 0.0);
        assert_eq!(Mask::from_fn(g, |t, x| t == 0.0 && x == 0.0).dilate(1).count(), 4);
        let rows = g.rows_within(0.2, 1.0).unwrap();
        assert_eq!(rows, (1, 2));
    }
}
