//! Finite-difference wave operators on a [`Field`].

use rayon::prelude::*;

use crate::field::Field;

const CENTRAL4: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
/// Fourth-order one-sided second derivative at offset 0 and 1 from the edge.
const EDGE0: [f64; 6] = [45.0 / 12.0, -154.0 / 12.0, 214.0 / 12.0, -156.0 / 12.0, 61.0 / 12.0, -10.0 / 12.0];
const EDGE1: [f64; 6] = [10.0 / 12.0, -15.0 / 12.0, -4.0 / 12.0, 14.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];

/// Fourth-order second derivative of a strided sequence at index i.
#[inline]
fn d2_4(get: impl Fn(usize) -> f64, i: usize, n: usize) -> f64 {
    if i >= 2 && i + 2 < n {
        (0..5).map(|k| CENTRAL4[k] * get(i + k - 2)).sum()
    } else if i == 0 {
        (0..6).map(|k| EDGE0[k] * get(k)).sum()
    } else if i == 1 {
        (0..6).map(|k| EDGE1[k] * get(k)).sum()
    } else if i + 1 == n {
        (0..6).map(|k| EDGE0[k] * get(n - 1 - k)).sum()
    } else {
        (0..6).map(|k| EDGE1[k] * get(n - 1 - k)).sum()
    }
}

/// u_tt - nu^2 u_xx with fourth-order stencils and one-sided closures.
pub fn wave4(u: &Field, nu: f64) -> Field {
    let g = u.grid;
    let (it2, ix2) = (1.0 / (g.dt * g.dt), nu * nu / (g.dx * g.dx));
    Field::from_rows("wave4", g, |n, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let utt = d2_4(|m| u.at(m, j), n, g.nt);
            let uxx = d2_4(|i| u.at(n, i), j, g.nx);
            *out = utt * it2 - uxx * ix2;
        }
    })
}

/// Three-point discrete wave operator on interior nodes (rows 1..nt-2,
/// columns 1..nx-2); zero elsewhere. This is the operator the leapfrog
/// solver inverts exactly.
pub fn wave2(u: &Field, nu: f64) -> Field {
    let g = u.grid;
    let (it2, ix2) = (1.0 / (g.dt * g.dt), nu * nu / (g.dx * g.dx));
    let mut out = Field::zeros("wave2", g);
    out.data
        .par_chunks_mut(g.nx)
        .enumerate()
        .for_each(|(n, row)| {
            if n == 0 || n + 1 == g.nt {
                return;
            }
            let (a, b, c) = (u.row(n - 1), u.row(n), u.row(n + 1));
            for j in 1..g.nx - 1 {
                row[j] = (c[j] - 2.0 * b[j] + a[j]) * it2 - (b[j + 1] - 2.0 * b[j] + b[j - 1]) * ix2;
            }
        });
    out
}

/// Fourth-order derivative of order k (1..=3) along x at node (n, j);
/// central stencils, requires 3 <= j < nx - 3.
pub fn dx_k(u: &Field, n: usize, j: usize, k: usize) -> f64 {
    let h = u.grid.dx;
    let f = |o: i64| u.at(n, (j as i64 + o) as usize);
    match k {
        1 => (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h),
        2 => (-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * h * h),
        3 => (f(-3) - 8.0 * f(-2) + 13.0 * f(-1) - 13.0 * f(1) + 8.0 * f(2) - f(3)) / (8.0 * h * h * h),
        _ => panic!("derivative order {k} not supported"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn wave4_is_exact_on_quartics() {
        let g = Grid::new(1.0, 1.0, 11, 11).unwrap();
        let u = Field::from_fn("u", g, |t, x| t.powi(4) + 3.0 * x.powi(3) * t);
        let w = wave4(&u, 2.0);
        for n in 0..g.nt {
            for j in 0..g.nx {
                let (t, x) = (g.t(n), g.x(j));
                let want = 12.0 * t * t - 4.0 * 18.0 * x * t;
                assert!((w.at(n, j) - want).abs() < 1e-9, "{n} {j}");
            }
        }
    }

    #[test]
    fn wave2_vanishes_on_travelling_waves_at_unit_cfl() {
        let g = Grid::new(1.0, 1.0, 21, 21).unwrap();
        let u = Field::from_fn("u", g, |t, x| (3.0 * (x - t)).sin());
        assert!(wave2(&u, 1.0).max_abs() < 1e-9);
    }

    #[test]
    fn third_derivative_stencil() {
        let g = Grid::new(1.0, 1.0, 3, 41).unwrap();
        let u = Field::from_fn("u", g, |_, x| x.powi(5));
        let q = Field::from_fn("q", g, |_, x| x.powi(4));
        let x = g.x(20);
        assert!((dx_k(&u, 0, 20, 3) - 60.0 * x * x).abs() < 1e-6);
        assert!((dx_k(&q, 0, 20, 1) - 4.0 * x.powi(3)).abs() < 1e-12);
    }
}
