//! Dense symmetric linear algebra for the KKT systems.
//!
//! The solver reduces each Newton step to a quasi-definite system
//! `[[G + dI, F], [F', -dI]]` which is factored as `L D L'` without pivoting.
//! The factorization is blocked for cache efficiency; the trailing update is
//! parallelized over columns. Tiny or wrong-signed pivots are bumped to a
//! sign-respecting floor and counted.

use rayon::prelude::*;

/// Unpivoted `L D L'` factorization of a symmetric matrix stored as its lower
/// triangle in column-major order. `L` is unit lower triangular (stored below
/// the diagonal), `D` is stored on the diagonal.
pub struct LdlFactor {
    n: usize,
    data: Vec<f64>,
    pub pivot_bumps: usize,
}

const PANEL: usize = 48;

/// Factors `a` (full column-major `n x n`, only the lower triangle is read)
/// in place. `signs[j]` gives the expected sign of pivot `j` (+1 or -1);
/// pivots smaller in magnitude than `dyn_floor` (or with the wrong sign) are
/// replaced by `signs[j] * dyn_floor`.
pub fn ldl_factor(mut a: Vec<f64>, n: usize, signs: &[i8], dyn_floor: f64) -> LdlFactor {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(signs.len(), n);
    let mut bumps = 0usize;
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + PANEL).min(n);
        // Factor the panel columns with right-looking updates inside the panel.
        for j in k0..k1 {
            let mut dj = a[j * n + j];
            let want = signs[j] as f64;
            if !(dj * want > dyn_floor) {
                dj = want * dyn_floor.max(dj.abs());
                bumps += 1;
            }
            a[j * n + j] = dj;
            let inv = 1.0 / dj;
            // Split borrows: column j is finalized before columns > j are touched.
            for i in j + 1..n {
                a[j * n + i] *= inv;
            }
            for c in j + 1..k1 {
                let f = dj * a[j * n + c];
                if f == 0.0 {
                    continue;
                }
                let (col_j, col_c) = split_two(&mut a, n, j, c);
                for i in c..n {
                    col_c[i] -= col_j[i] * f;
                }
            }
        }
        // Trailing update: A22 -= L21 * D * L21'.
        if k1 < n {
            let (panel, trailing) = a.split_at_mut(k1 * n);
            trailing
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(local_c, col)| {
                    let c = k1 + local_c;
                    for j in k0..k1 {
                        let lcj = panel[j * n + c];
                        if lcj == 0.0 {
                            continue;
                        }
                        let f = panel[j * n + j] * lcj;
                        let lj = &panel[j * n..j * n + n];
                        for i in c..n {
                            col[i] -= lj[i] * f;
                        }
                    }
                });
        }
        k0 = k1;
    }
    LdlFactor {
        n,
        data: a,
        pivot_bumps: bumps,
    }
}

fn split_two(a: &mut [f64], n: usize, j: usize, c: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(j < c);
    let (lo, hi) = a.split_at_mut(c * n);
    (&lo[j * n..j * n + n], &mut hi[..n])
}

impl LdlFactor {
    /// Solves `(L D L') x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.n;
        let a = &self.data;
        for j in 0..n {
            let rj = rhs[j];
            if rj != 0.0 {
                for i in j + 1..n {
                    rhs[i] -= a[j * n + i] * rj;
                }
            }
        }
        for j in 0..n {
            rhs[j] /= a[j * n + j];
        }
        for j in (0..n).rev() {
            let mut acc = rhs[j];
            for i in j + 1..n {
                acc -= a[j * n + i] * rhs[i];
            }
            rhs[j] = acc;
        }
    }
}

/// Symmetric Jacobi-scaled `L D L'` factorization: factors `S A S` where
/// `S = diag(1/sqrt(colmax))`, so that static regularization and pivot
/// floors act relative to the natural scale of each row. Solves undo the
/// scaling transparently.
pub struct ScaledLdl {
    scale: Vec<f64>,
    factor: LdlFactor,
}

pub fn ldl_factor_scaled(
    mut a: Vec<f64>,
    n: usize,
    signs: &[i8],
    static_reg: f64,
) -> ScaledLdl {
    // Column max magnitudes (symmetric matrix: read the stored lower triangle
    // both ways).
    let mut colmax = vec![0.0f64; n];
    for j in 0..n {
        for i in j..n {
            let v = a[j * n + i].abs();
            if v > colmax[j] {
                colmax[j] = v;
            }
            if v > colmax[i] {
                colmax[i] = v;
            }
        }
    }
    let scale: Vec<f64> = colmax
        .iter()
        .map(|&v| 1.0 / v.max(1e-128).sqrt())
        .collect();
    for j in 0..n {
        for i in j..n {
            a[j * n + i] *= scale[i] * scale[j];
        }
    }
    for j in 0..n {
        a[j * n + j] += signs[j] as f64 * static_reg;
    }
    let factor = ldl_factor(a, n, signs, 1e-14);
    ScaledLdl { scale, factor }
}

impl ScaledLdl {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        for (r, s) in rhs.iter_mut().zip(&self.scale) {
            *r *= s;
        }
        self.factor.solve_in_place(rhs);
        for (r, s) in rhs.iter_mut().zip(&self.scale) {
            *r *= s;
        }
    }

    /// Number of pivots that had to be bumped to the floor; nonzero counts
    /// indicate near-singularity absorbed by regularization.
    pub fn pivot_bumps(&self) -> usize {
        self.factor.pivot_bumps
    }
}

/// `y = A x` for a symmetric `A` of which only the lower triangle (column
/// major) is stored.
#[cfg(test)]
pub fn sym_matvec_lower(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        let xj = x[j];
        let col = &a[j * n..j * n + n];
        y[j] += col[j] * xj;
        let mut acc = 0.0;
        for i in j + 1..n {
            y[i] += col[i] * xj;
            acc += col[i] * x[i];
        }
        y[j] += acc;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_lower(rows: &[&[f64]]) -> (Vec<f64>, usize) {
        let n = rows.len();
        let mut a = vec![0.0; n * n];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if i >= j {
                    a[j * n + i] = v;
                }
            }
        }
        (a, n)
    }

    #[test]
    fn ldl_solves_spd_system() {
        let (a, n) = dense_lower(&[
            &[4.0, 1.0, 0.5],
            &[1.0, 3.0, 0.2],
            &[0.5, 0.2, 2.0],
        ]);
        let f = ldl_factor(a.clone(), n, &[1, 1, 1], 1e-14);
        assert_eq!(f.pivot_bumps, 0);
        let x_true = [1.0, -2.0, 3.0];
        let mut rhs = vec![0.0; n];
        sym_matvec_lower(&a, n, &x_true, &mut rhs);
        f.solve_in_place(&mut rhs);
        for (got, want) in rhs.iter().zip(x_true.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ldl_solves_quasi_definite_system() {
        // [[P, F], [F', -E]] with P, E positive definite.
        let (a, n) = dense_lower(&[
            &[5.0, 1.0, 2.0, 1.0],
            &[1.0, 4.0, 0.0, 3.0],
            &[2.0, 0.0, -2.0, 0.1],
            &[1.0, 3.0, 0.1, -3.0],
        ]);
        let f = ldl_factor(a.clone(), n, &[1, 1, -1, -1], 1e-14);
        let x_true = [0.3, -1.0, 2.0, 0.7];
        let mut rhs = vec![0.0; n];
        sym_matvec_lower(&a, n, &x_true, &mut rhs);
        f.solve_in_place(&mut rhs);
        for (got, want) in rhs.iter().zip(x_true.iter()) {
            assert!((got - want).abs() < 1e-10, "{rhs:?}");
        }
    }

    #[test]
    fn ldl_blocked_matches_on_larger_matrix() {
        // Random-ish diagonally dominant SPD matrix larger than one panel.
        let n = 131;
        let mut a = vec![0.0; n * n];
        let mut state = 1234567u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        for j in 0..n {
            for i in j..n {
                let v = next() * 0.1;
                a[j * n + i] = v;
            }
            a[j * n + j] = 2.0 + next().abs();
        }
        let f = ldl_factor(a.clone(), n, &vec![1i8; n], 1e-14);
        let x_true: Vec<f64> = (0..n).map(|i| ((i % 7) as f64) - 3.0).collect();
        let mut rhs = vec![0.0; n];
        sym_matvec_lower(&a, n, &x_true, &mut rhs);
        f.solve_in_place(&mut rhs);
        let err: f64 = rhs
            .iter()
            .zip(&x_true)
            .map(|(g, w)| (g - w).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max err {err}");
    }
}
