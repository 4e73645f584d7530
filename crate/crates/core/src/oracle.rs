//! Brute-force and quadrature oracles used to validate the other modules.
//!
//! Everything here is deliberately independent of the orthonormal-basis
//! machinery: grid search over monomial evaluations, tensor Gauss rules for
//! integrals, and a dense eigensolver for PSD checks.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::basis1d::MeasureFamily;
use crate::poly::MonomialPoly;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid of {0} points exceeds the 10^7 budget")]
    GridTooLarge(usize),
    #[error("matrix asymmetry {0:.3e} exceeds 1e-12")]
    Asymmetric(f64),
}

/// Tensor evaluation grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub points_per_axis: Vec<usize>,
}

impl GridSpec {
    pub fn uniform(bounds: Vec<(f64, f64)>, points: usize) -> Self {
        let n = bounds.len();
        Self {
            bounds,
            points_per_axis: vec![points; n],
        }
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    fn point(&self, mut flat: usize) -> Vec<f64> {
        let n = self.bounds.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let k = self.points_per_axis[i];
            let idx = flat % k;
            flat /= k;
            let (lo, hi) = self.bounds[i];
            x[i] = if k == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * idx as f64 / (k - 1) as f64
            };
        }
        x
    }
}

/// Minimum of `p` over grid points where every constraint is at least
/// `-1e-9` (so boundary minimizers are not excluded by rounding). Returns
/// `None` when no grid point is feasible.
pub fn grid_minimize(
    p: &MonomialPoly,
    feasibility: &[MonomialPoly],
    grid: &GridSpec,
) -> Result<Option<(f64, Vec<f64>)>, OracleError> {
    let total = grid.total_points();
    if total > 10_000_000 {
        return Err(OracleError::GridTooLarge(total));
    }
    if grid.points_per_axis.iter().any(|&k| k < 2) && grid.points_per_axis.iter().any(|&k| k >= 2)
    {
        // mixed 1-point axes are fine; nothing to validate here
    }
    let best = (0..total)
        .into_par_iter()
        .fold(
            || None::<(f64, Vec<f64>)>,
            |acc, flat| {
                let x = grid.point(flat);
                if feasibility.iter().any(|g| g.eval(&x) < -1e-9) {
                    return acc;
                }
                let v = p.eval(&x);
                match acc {
                    Some((b, _)) if b <= v => acc,
                    _ => Some((v, x)),
                }
            },
        )
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, r) => r,
                (l, None) => l,
                (Some((va, xa)), Some((vb, xb))) => {
                    // deterministic tie-break on the point itself
                    if va < vb || (va == vb && xa <= xb) {
                        Some((va, xa))
                    } else {
                        Some((vb, xb))
                    }
                }
            },
        );
    Ok(best)
}

/// Integral of `p` against the tensor product measure, via a Gauss rule
/// exact for `degree <= exactness`.
pub fn integrate(p: &MonomialPoly, families: &[MeasureFamily], exactness: usize) -> f64 {
    assert_eq!(families.len(), p.n());
    assert!(exactness >= p.degree());
    let m = exactness / 2 + 1;
    let rules: Vec<_> = families
        .iter()
        .map(|f| f.gauss_rule(m).expect("gauss rule within cap"))
        .collect();
    let mut total = 0.0;
    let counts: Vec<usize> = rules.iter().map(|r| r.nodes.len()).collect();
    let combos: usize = counts.iter().product();
    for flat in 0..combos {
        let mut idx = flat;
        let mut x = vec![0.0; p.n()];
        let mut w = 1.0;
        for i in (0..p.n()).rev() {
            let k = idx % counts[i];
            idx /= counts[i];
            x[i] = rules[i].nodes[k];
            w *= rules[i].weights[k];
        }
        total += w * p.eval(&x);
    }
    total
}

/// Smallest eigenvalue of a symmetric matrix (dense row-major). Rejects
/// matrices whose asymmetry exceeds 1e-12.
pub fn min_eigenvalue(mat: &[f64], side: usize) -> Result<f64, OracleError> {
    let mut worst = 0.0f64;
    for i in 0..side {
        for j in 0..i {
            worst = worst.max((mat[i * side + j] - mat[j * side + i]).abs());
        }
    }
    let scale = mat.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if worst > 1e-12 * scale {
        return Err(OracleError::Asymmetric(worst));
    }
    let m = DMatrix::from_row_slice(side, side, mat);
    Ok(m
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}
