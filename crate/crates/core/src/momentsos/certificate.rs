//! Certificate recovery from conic duals and independent verification.
//!
//! At an optimum of the moment-side program, the equality multiplier of the
//! normalization row is the bound `v`, the dual slack on the norm-cone
//! block carries the coefficients of the residual polynomial `r`, and the
//! dual slacks of the PSD blocks are the Gram matrices `Q_j` of the
//! sum-of-squares multipliers, so that
//! `p - v = r + sum_j (b' Q_j b) g_j` holds up to solver tolerance.
//! Verification recomputes that identity from scratch through polynomial
//! arithmetic and checks the Gram spectra, then recomputes the certified
//! bound independently of the solver.

use regmomsos_conic::{smat, ConicSolution};

use super::{Assembly, Mode, MomentError, POPInstance};
use crate::oracle;
use crate::poly::{to_ortho, MultiIndex, OrthoPoly};

/// A recovered sum-of-squares certificate `(v, r, Q_j)`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub v: f64,
    pub r: OrthoPoly,
    /// Dense row-major Gram matrix per operator block.
    pub grams: Vec<(usize, Vec<f64>)>,
    /// `||r||_{L^2(mu)}`, recomputed from the coefficients.
    pub residual_norm: f64,
    /// Dual slack on the norm-cone head, when present; coincides with
    /// `residual_norm` at a penalized optimum and with `eps` at a
    /// regularized one.
    pub soc_dual_t: Option<f64>,
}

/// Certified lower bound for a mode, from the certificate quantities.
pub fn certified_bound(mode: &Mode, v: f64, residual_norm: f64, c2d: Option<f64>) -> Option<f64> {
    match mode {
        Mode::Penalized { c2d } => Some(v - c2d * residual_norm),
        Mode::Regularized { eps } => c2d.map(|c| v - c * eps),
        Mode::Standard => Some(v),
    }
}

/// Reads the certificate out of a solved relaxation.
///
/// The bound `v` is the normalization-row multiplier and the Gram matrices
/// are the PSD dual slacks, which an interior-point solve always returns
/// positive semidefinite. The residual polynomial is then recomputed as the
/// exact coefficient defect `p - v - sum_j s_j g_j`, rather than read from
/// the norm-cone dual slack: the two agree up to the solver's dual
/// residual, but the recomputed form makes the certificate identity hold to
/// working precision, so the tuple certifies the bound regardless of how
/// accurately the solver converged. In the standard mode (no norm cone)
/// `r` stays zero and the defect is surfaced by verification instead.
pub fn recover_certificate(
    inst: &POPInstance,
    assembly: &Assembly,
    solution: &ConicSolution,
) -> Result<Certificate, MomentError> {
    let lay = &assembly.layout;
    if solution.y_dual.len() <= lay.row_y0 || solution.y_dual.iter().any(|v| !v.is_finite()) {
        return Err(MomentError::MissingDuals);
    }
    let v = solution.y_dual[lay.row_y0];
    let mut grams = Vec::with_capacity(lay.psd_cols.len());
    for &(col0, side) in &lay.psd_cols {
        let sv = &solution.s[col0..col0 + side * (side + 1) / 2];
        grams.push((side, smat(sv, side)));
    }
    let r = if lay.soc {
        sos_defect(inst, assembly, v, &grams)?
    } else {
        OrthoPoly::zero(&inst.families)
    };
    let residual_norm = r.l2_norm();
    Ok(Certificate {
        v,
        r,
        grams,
        residual_norm,
        soc_dual_t: lay.t_col.map(|t| solution.s[t]),
    })
}

/// The defect polynomial `p - v - sum_j (b' Q_j b) g_j` in the orthonormal
/// basis.
fn sos_defect(
    inst: &POPInstance,
    assembly: &Assembly,
    v: f64,
    grams: &[(usize, Vec<f64>)],
) -> Result<OrthoPoly, MomentError> {
    let families = &inst.families;
    let mut lhs = to_ortho(&inst.mapped_objective(), families)?;
    lhs.add_coeff(MultiIndex(vec![0; inst.n]), -v);
    let mut g_ortho: Vec<Option<OrthoPoly>> = vec![None];
    for g in inst.mapped_constraints() {
        g_ortho.push(Some(to_ortho(&g, families)?));
    }
    let d = assembly.operators.level;
    for (j, (side, q)) in grams.iter().enumerate() {
        let dj = assembly.operators.blocks[j].half_degree;
        let basis = crate::poly::multi_indices(inst.n, d - dj);
        let mut s_j = OrthoPoly::zero(families);
        for a in 0..*side {
            let ba = OrthoPoly::basis_element(families, basis[a].clone());
            for b in a..*side {
                let coef = q[a * side + b] * if a == b { 1.0 } else { 2.0 };
                if coef == 0.0 {
                    continue;
                }
                let bb = OrthoPoly::basis_element(families, basis[b].clone());
                s_j = s_j.add(&ba.multiply(&bb)?.scale(coef));
            }
        }
        let term = match &g_ortho[j] {
            Some(g) => s_j.multiply(g)?,
            None => s_j,
        };
        lhs = lhs.sub(&term);
    }
    Ok(lhs)
}

/// Outcome of recomputing a certificate from scratch.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    /// Coefficient norm of `p - v - r - sum_j s_j g_j`.
    pub identity_residual: f64,
    /// Smallest eigenvalue over all Gram matrices.
    pub gram_min_eig: f64,
    pub residual_norm: f64,
    /// Bound recomputed from the certificate, independent of the solver.
    pub recomputed_bound: Option<f64>,
    /// `|recomputed - reported|` when a reported bound was supplied.
    pub bound_discrepancy: Option<f64>,
    pub pass: bool,
}

/// Recomputes the sum-of-squares identity and Gram spectra for a
/// certificate. `reported_bound` is compared against the independently
/// recomputed bound. The report always comes back; `pass` summarizes
/// whether the identity residual stays within `tol`, every Gram matrix is
/// positive semidefinite up to `1e-8`, and any reported bound matches to
/// `1e-8 (1 + |bound|)`.
pub fn verify_certificate(
    inst: &POPInstance,
    assembly: &Assembly,
    cert: &Certificate,
    reported_bound: Option<f64>,
    tol: f64,
) -> Result<VerificationReport, MomentError> {
    let families = &inst.families;
    let p_ortho = to_ortho(&inst.mapped_objective(), families)?;
    let mut lhs = p_ortho;
    lhs.add_coeff(MultiIndex(vec![0; inst.n]), -cert.v);
    lhs = lhs.sub(&cert.r);

    let g_ortho: Vec<Option<OrthoPoly>> = {
        let mut gs = vec![None];
        for g in inst.mapped_constraints() {
            gs.push(Some(to_ortho(&g, families)?));
        }
        gs
    };
    let d = assembly.operators.level;
    let mut gram_min_eig = f64::INFINITY;
    for (j, (side, q)) in cert.grams.iter().enumerate() {
        gram_min_eig = gram_min_eig.min(
            oracle::min_eigenvalue(q, *side).map_err(|_| MomentError::MissingDuals)?,
        );
        // s_j = b' Q_j b over the degree-(d - d_j) basis.
        let dj = assembly.operators.blocks[j].half_degree;
        let basis = crate::poly::multi_indices(inst.n, d - dj);
        let mut s_j = OrthoPoly::zero(families);
        for a in 0..*side {
            let ba = OrthoPoly::basis_element(families, basis[a].clone());
            for b in a..*side {
                let coef = q[a * side + b] * if a == b { 1.0 } else { 2.0 };
                if coef == 0.0 {
                    continue;
                }
                let bb = OrthoPoly::basis_element(families, basis[b].clone());
                let prod = ba.multiply(&bb)?;
                s_j = s_j.add(&prod.scale(coef));
            }
        }
        let term = match &g_ortho[j] {
            Some(g) => s_j.multiply(g)?,
            None => s_j,
        };
        lhs = lhs.sub(&term);
    }
    let identity_residual = lhs.l2_norm();
    let c2d = inst.bm_constant(d).certified();
    let recomputed_bound = certified_bound(&assembly.mode, cert.v, cert.residual_norm, c2d);
    let bound_discrepancy = match (reported_bound, recomputed_bound) {
        (Some(rep), Some(rec)) => Some((rep - rec).abs()),
        _ => None,
    };
    let bound_ok = bound_discrepancy
        .map(|delta| {
            delta <= 1e-8 * (1.0 + recomputed_bound.unwrap().abs())
        })
        .unwrap_or(true);
    let pass = identity_residual <= tol && gram_min_eig >= -1e-8 && bound_ok;
    Ok(VerificationReport {
        identity_residual,
        gram_min_eig,
        residual_norm: cert.residual_norm,
        recomputed_bound,
        bound_discrepancy,
        pass,
    })
}

/// One certified bound with the provenance needed to re-verify it.
#[derive(Debug, Clone)]
pub struct BoundRecord {
    pub d: usize,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub c2d: Option<f64>,
    /// Optimal value of the moment-side program.
    pub primal_value: f64,
    /// The bound component `v` (normalization multiplier).
    pub dual_value: f64,
    /// `t* = ||r*||`.
    pub residual_norm: f64,
    pub certified_bound: Option<f64>,
    pub status: String,
    pub verify_residual: f64,
    pub wall_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::assemble;
    use crate::basis1d::MeasureFamily;
    use crate::bm::DomainSpec;
    use crate::poly::MonomialPoly;
    use regmomsos_conic::{solve, SolverSettings};

    fn x_squared() -> POPInstance {
        POPInstance {
            name: "xsq".into(),
            n: 1,
            objective: MonomialPoly::from_terms(1, [(vec![2], 1.0)]),
            constraints: vec![],
            families: vec![MeasureFamily::GaussianStd],
            domain_map: None,
            bm_domain: DomainSpec::Unbounded,
            oracle_box: None,
            known_minimum: Some(0.0),
        }
    }

    #[test]
    fn standard_certificate_for_x_squared() {
        // x^2 = b_1^2: expect v = 0, r = 0, and the Gram supported on b_1.
        let asm = assemble(&x_squared(), 1, Mode::Standard).unwrap();
        let sol = solve(&asm.program, &SolverSettings::default()).unwrap();
        let cert = recover_certificate(&x_squared(), &asm, &sol).unwrap();
        assert!(cert.v.abs() <= 1e-7, "v = {}", cert.v);
        assert!(cert.residual_norm <= 1e-8);
        let (side, q) = &cert.grams[0];
        assert_eq!(*side, 2);
        assert!((q[side + 1] - 1.0).abs() <= 1e-6, "Q_11 = {}", q[side + 1]);
        let report = verify_certificate(&x_squared(), &asm, &cert, None, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.identity_residual <= 1e-7);
    }

    #[test]
    fn regularized_certificate_verifies() {
        let inst = x_squared();
        let asm = assemble(&inst, 2, Mode::Regularized { eps: 0.05 }).unwrap();
        let sol = solve(&asm.program, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, regmomsos_conic::SolveStatus::Optimal);
        let cert = recover_certificate(&inst, &asm, &sol).unwrap();
        let report = verify_certificate(&inst, &asm, &cert, None, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
        // At a regularized optimum the norm constraint is active, so
        // ||r*|| = eps, and the dual slack head is eps by construction.
        assert!((cert.residual_norm - 0.05).abs() <= 1e-6, "{}", cert.residual_norm);
        assert!((cert.soc_dual_t.unwrap() - 0.05).abs() <= 1e-6);
    }

    #[test]
    fn perturbed_certificate_is_flagged() {
        let inst = x_squared();
        let asm = assemble(&inst, 1, Mode::Standard).unwrap();
        let sol = solve(&asm.program, &SolverSettings::default()).unwrap();
        let mut cert = recover_certificate(&inst, &asm, &sol).unwrap();
        cert.v += 1e-3;
        let report = verify_certificate(&inst, &asm, &cert, None, 1e-6).unwrap();
        assert!(!report.pass);
        assert!((report.identity_residual - 1e-3).abs() <= 1e-4);
    }
}
