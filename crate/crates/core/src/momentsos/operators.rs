//! Moment and localizing operators.
//!
//! For block `j` the localizing matrix at a pseudo-moment vector `y` has
//! entries `[M_{d-d_j}(g_j y)]_{ab} = l_y(g_j b_a b_b)`; expanding
//! `g_j b_a b_b` in the orthonormal basis gives the linear map from `y` to
//! the scaled vectorization of the matrix, which is what the conic
//! assembly needs.

use std::collections::BTreeMap;

use regmomsos_conic::svec_index;

use super::{MomentError, POPInstance};
use crate::poly::{multi_indices, n_indices, to_ortho, MultiIndex, OrthoPoly};

/// One moment or localizing operator: the sparse linear map
/// `y -> svec(M_{d-d_j}(g_j y))`.
#[derive(Debug, Clone)]
pub struct OperatorBlock {
    pub side: usize,
    pub half_degree: usize,
    /// Triplets `(svec_row, y_index, coefficient)`; off-diagonal rows carry
    /// the sqrt(2) vectorization factor.
    pub entries: Vec<(usize, usize, f64)>,
}

impl OperatorBlock {
    /// Dense matrix `M_{d-d_j}(g_j y)` (row-major) at a moment vector.
    pub fn matrix(&self, y: &[f64]) -> Vec<f64> {
        let s = self.side;
        let mut sv = vec![0.0; s * (s + 1) / 2];
        for &(row, yi, c) in &self.entries {
            sv[row] += c * y[yi];
        }
        regmomsos_conic::smat(&sv, s)
    }
}

/// Operators for all blocks `j = 0..=m` at level `d`, along with the
/// graded-lexicographic index set for `y`.
#[derive(Debug, Clone)]
pub struct MomentOperators {
    pub level: usize,
    pub indices: Vec<MultiIndex>,
    pub blocks: Vec<OperatorBlock>,
    /// Orthonormal coefficients of the mapped objective over `indices`.
    pub objective: Vec<f64>,
}

/// Builds the moment operator family for `inst` at level `d`.
pub fn build_operators(inst: &POPInstance, d: usize) -> Result<MomentOperators, MomentError> {
    let min = inst.min_level();
    if d < min {
        return Err(MomentError::LevelTooSmall { d, min });
    }
    let n = inst.n;
    let families = &inst.families;
    let indices = multi_indices(n, 2 * d);
    let index_of: BTreeMap<MultiIndex, usize> = indices
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, a)| (a, i))
        .collect();

    let p_ortho = to_ortho(&inst.mapped_objective(), families)?;
    let mut objective = vec![0.0; indices.len()];
    for (alpha, &c) in p_ortho.coeffs() {
        objective[index_of[alpha]] = c;
    }

    let mut gs: Vec<(usize, Option<OrthoPoly>)> = vec![(0, None)];
    for (g, dj) in inst
        .mapped_constraints()
        .iter()
        .zip(inst.constraint_half_degrees())
    {
        gs.push((dj, Some(to_ortho(g, families)?)));
    }

    let mut blocks = Vec::with_capacity(gs.len());
    for (dj, g_ortho) in gs {
        let side_deg = d - dj;
        let side = n_indices(n, side_deg);
        let basis = multi_indices(n, side_deg);
        let mut entries = Vec::new();
        for a in 0..side {
            let ba = OrthoPoly::basis_element(families, basis[a].clone());
            for b in a..side {
                let bb = OrthoPoly::basis_element(families, basis[b].clone());
                let mut prod = ba.multiply(&bb)?;
                if let Some(g) = &g_ortho {
                    prod = prod.multiply(g)?;
                }
                let factor = if a == b {
                    1.0
                } else {
                    std::f64::consts::SQRT_2
                };
                let row = svec_index(a, b, side);
                for (gamma, &c) in prod.coeffs() {
                    entries.push((row, index_of[gamma], factor * c));
                }
            }
        }
        blocks.push(OperatorBlock {
            side,
            half_degree: dj,
            entries,
        });
    }
    Ok(MomentOperators {
        level: d,
        indices,
        blocks,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis1d::MeasureFamily;
    use crate::bm::DomainSpec;
    use crate::oracle;
    use crate::poly::MonomialPoly;
    use approx::assert_abs_diff_eq;

    fn unconstrained_1d(p: MonomialPoly) -> POPInstance {
        POPInstance {
            name: "test".into(),
            n: 1,
            objective: p,
            constraints: vec![],
            families: vec![MeasureFamily::GaussianStd],
            domain_map: None,
            bm_domain: DomainSpec::Unbounded,
            oracle_box: None,
            known_minimum: None,
        }
    }

    #[test]
    fn hermite_moment_matrix_level_one() {
        // M_1(y) = [[y_0, y_1], [y_1, y_0 + sqrt(2) y_2]].
        let inst = unconstrained_1d(MonomialPoly::var(1, 0));
        let ops = build_operators(&inst, 1).unwrap();
        assert_eq!(ops.blocks.len(), 1);
        let y = [0.3, -0.7, 0.9];
        let m = ops.blocks[0].matrix(&y);
        assert_abs_diff_eq!(m[0], y[0], epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], y[1], epsilon = 1e-14);
        assert_abs_diff_eq!(m[2], y[1], epsilon = 1e-14);
        assert_abs_diff_eq!(
            m[3],
            y[0] + std::f64::consts::SQRT_2 * y[2],
            epsilon = 1e-13
        );
    }

    #[test]
    fn reference_measure_moment_matrix_is_identity() {
        // y = e_0 is the moment vector of the reference measure itself.
        for fam in MeasureFamily::ALL {
            let mut inst = unconstrained_1d(MonomialPoly::from_terms(1, [(vec![4], 1.0)]));
            inst.families = vec![fam];
            let ops = build_operators(&inst, 2).unwrap();
            let mut y = vec![0.0; ops.indices.len()];
            y[0] = 1.0;
            let m = ops.blocks[0].matrix(&y);
            let side = ops.blocks[0].side;
            for i in 0..side {
                for j in 0..side {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(m[i * side + j], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_constraint_block_equals_moment_block() {
        let mut inst = unconstrained_1d(MonomialPoly::var(1, 0));
        inst.constraints = vec![MonomialPoly::constant(1, 1.0)];
        let ops = build_operators(&inst, 2).unwrap();
        assert_eq!(ops.blocks.len(), 2);
        let y: Vec<f64> = (0..ops.indices.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let m0 = ops.blocks[0].matrix(&y);
        let m1 = ops.blocks[1].matrix(&y);
        assert_eq!(ops.blocks[0].side, ops.blocks[1].side);
        for (a, b) in m0.iter().zip(&m1) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    /// Entries must match direct quadrature of `g b_a b_b` against the
    /// measure when `y` holds the measure's own basis moments.
    #[test]
    fn entries_match_quadrature_oracle() {
        let g = MonomialPoly::from_terms(1, [(vec![0], 1.0), (vec![2], -1.0)]);
        let mut inst = unconstrained_1d(MonomialPoly::var(1, 0));
        inst.families = vec![MeasureFamily::ArcsineUnit];
        inst.constraints = vec![g.clone()];
        let d = 3;
        let ops = build_operators(&inst, d).unwrap();
        // y = basis moments of the reference measure = e_0.
        let mut y = vec![0.0; ops.indices.len()];
        y[0] = 1.0;
        let blk = &ops.blocks[1];
        let m = blk.matrix(&y);
        let side = blk.side;
        let rule = MeasureFamily::ArcsineUnit.gauss_rule(2 * d + 4).unwrap();
        for a in 0..side {
            for b in 0..side {
                let direct = rule.integrate(|x| {
                    let bv = MeasureFamily::ArcsineUnit.eval_basis(side - 1, x);
                    g.eval(&[x]) * bv[a] * bv[b]
                });
                assert!(
                    (m[a * side + b] - direct).abs() <= 1e-10,
                    "({a},{b}): {} vs {direct}",
                    m[a * side + b]
                );
            }
        }
    }

    /// Origin instance: the truncated moment vector of the Dirac mass at 0
    /// keeps every localizer positive semidefinite.
    #[test]
    fn dirac_moment_vector_is_feasible_for_origin() {
        let inst = POPInstance {
            name: "origin".into(),
            n: 1,
            objective: MonomialPoly::var(1, 0),
            constraints: vec![MonomialPoly::from_terms(1, [(vec![2], -1.0)])],
            families: vec![MeasureFamily::GaussianStd],
            domain_map: None,
            bm_domain: DomainSpec::Point(vec![vec![0.0]]),
            oracle_box: None,
            known_minimum: Some(0.0),
        };
        for d in 1..=4usize {
            let ops = build_operators(&inst, d).unwrap();
            let b0 = MeasureFamily::GaussianStd.eval_basis(2 * d, 0.0);
            let y: Vec<f64> = ops
                .indices
                .iter()
                .map(|a| b0[a.0[0] as usize])
                .collect();
            for blk in &ops.blocks {
                let m = blk.matrix(&y);
                let min = oracle::min_eigenvalue(&m, blk.side).unwrap();
                assert!(min >= -1e-10, "d={d}: min eig {min}");
            }
        }
    }

    #[test]
    fn level_too_small_is_rejected() {
        let inst = unconstrained_1d(MonomialPoly::from_terms(1, [(vec![6], 1.0)]));
        assert!(matches!(
            build_operators(&inst, 2),
            Err(MomentError::LevelTooSmall { .. })
        ));
        assert!(build_operators(&inst, 3).is_ok());
    }
}
