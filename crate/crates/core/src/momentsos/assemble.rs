//! Conic assembly of the moment-side relaxations.

use regmomsos_conic::{ConeBlock, ConeSpec, ConicProgram};

use super::{build_operators, MomentError, MomentOperators, POPInstance};

/// Relaxation variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Objective `l_y(p) + eps ||y||_2`. At `eps = 0` the norm variable and
    /// its cone are omitted entirely, which recovers the standard hierarchy.
    Regularized { eps: f64 },
    /// Constraint `||y||_2 <= c2d` with objective `l_y(p)`.
    Penalized { c2d: f64 },
    /// The standard moment relaxation (free `y`).
    Standard,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Regularized { .. } => "regularized",
            Mode::Penalized { .. } => "penalized",
            Mode::Standard => "standard",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Mode::Regularized { eps } => Some(*eps),
            _ => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Mode::Penalized { c2d } => Some(*c2d),
            _ => None,
        }
    }
}

/// Column/row map of an assembled program, needed for certificate recovery.
#[derive(Debug, Clone)]
pub struct Layout {
    pub ny: usize,
    /// Whether `(t, y)` sits in a second-order cone; otherwise `y` is free.
    pub soc: bool,
    pub t_col: Option<usize>,
    pub y_col0: usize,
    /// `(column offset, side)` per operator block.
    pub psd_cols: Vec<(usize, usize)>,
    pub row_y0: usize,
    pub row_t: Option<usize>,
}

/// An assembled relaxation: the conic program plus everything needed to
/// interpret its solution.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub mode: Mode,
    pub program: ConicProgram,
    pub layout: Layout,
    pub operators: MomentOperators,
}

/// Assembles the moment-side program for `inst` at level `d` in the given
/// mode.
pub fn assemble(inst: &POPInstance, d: usize, mode: Mode) -> Result<Assembly, MomentError> {
    match mode {
        Mode::Regularized { eps } => {
            assert!(eps >= 0.0, "negative regularization");
            if eps == 0.0 {
                build(inst, d, mode, None)
            } else {
                build(inst, d, mode, Some(SocKind::Objective(eps)))
            }
        }
        Mode::Penalized { c2d } => {
            assert!(c2d > 0.0, "penalized mode needs a positive radius");
            build(inst, d, mode, Some(SocKind::FixedRadius(c2d)))
        }
        Mode::Standard => build(inst, d, mode, None),
    }
}

enum SocKind {
    /// `eps * t` appears in the objective.
    Objective(f64),
    /// Row `t = c2d` pins the radius.
    FixedRadius(f64),
}

fn build(
    inst: &POPInstance,
    d: usize,
    mode: Mode,
    soc: Option<SocKind>,
) -> Result<Assembly, MomentError> {
    let ops = build_operators(inst, d)?;
    let ny = ops.indices.len();
    let mut cone = ConeSpec::new();
    let (t_col, y_col0) = if soc.is_some() {
        cone.push(ConeBlock::SecondOrder(1 + ny));
        (Some(0), 1)
    } else {
        cone.push(ConeBlock::Free(ny));
        (None, 0)
    };
    let mut col = y_col0 + ny;
    let mut psd_cols = Vec::with_capacity(ops.blocks.len());
    for blk in &ops.blocks {
        cone.push(ConeBlock::Psd(blk.side));
        psd_cols.push((col, blk.side));
        col += blk.side * (blk.side + 1) / 2;
    }
    let total_cols = col;

    let mut c = vec![0.0; total_cols];
    for (i, &pc) in ops.objective.iter().enumerate() {
        c[y_col0 + i] = pc;
    }
    if let (Some(SocKind::Objective(eps)), Some(t)) = (&soc, t_col) {
        c[t] = *eps;
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    // Row 0: l_y(1) = y_0 = 1.
    triplets.push((0, y_col0, 1.0));
    b.push(1.0);
    let mut row = 1;
    for (blk, &(col0, _side)) in ops.blocks.iter().zip(&psd_cols) {
        let nsv = blk.side * (blk.side + 1) / 2;
        for sv in 0..nsv {
            triplets.push((row + sv, col0 + sv, 1.0));
            b.push(0.0);
        }
        for &(sv, yi, coef) in &blk.entries {
            triplets.push((row + sv, y_col0 + yi, -coef));
        }
        row += nsv;
    }
    let mut row_t = None;
    if let (Some(SocKind::FixedRadius(c2d)), Some(t)) = (&soc, t_col) {
        triplets.push((row, t, 1.0));
        b.push(*c2d);
        row_t = Some(row);
    }

    let program = ConicProgram::new(c, triplets, b, cone)?;
    Ok(Assembly {
        mode,
        program,
        layout: Layout {
            ny,
            soc: soc.is_some(),
            t_col,
            y_col0,
            psd_cols,
            row_y0: 0,
            row_t,
        },
        operators: ops,
    })
}

/// Directly assembled standard moment relaxation. This is an independent
/// code path from [`assemble`] so the two can be cross-checked.
pub fn assemble_standard(inst: &POPInstance, d: usize) -> Result<Assembly, MomentError> {
    let ops = build_operators(inst, d)?;
    let ny = ops.indices.len();
    let mut cone = ConeSpec::new();
    cone.push(ConeBlock::Free(ny));
    let mut psd_cols = Vec::with_capacity(ops.blocks.len());
    let mut col = ny;
    for blk in &ops.blocks {
        cone.push(ConeBlock::Psd(blk.side));
        psd_cols.push((col, blk.side));
        col += blk.side * (blk.side + 1) / 2;
    }
    let mut c = vec![0.0; col];
    c[..ny].copy_from_slice(&ops.objective);
    let mut triplets = vec![(0usize, 0usize, 1.0)];
    let mut b = vec![1.0];
    let mut row = 1;
    for (blk, &(col0, _)) in ops.blocks.iter().zip(&psd_cols) {
        let nsv = blk.side * (blk.side + 1) / 2;
        for sv in 0..nsv {
            triplets.push((row + sv, col0 + sv, 1.0));
            b.push(0.0);
        }
        for &(sv, yi, coef) in &blk.entries {
            triplets.push((row + sv, yi, -coef));
        }
        row += nsv;
    }
    let program = ConicProgram::new(c, triplets, b, cone)?;
    Ok(Assembly {
        mode: Mode::Standard,
        program,
        layout: Layout {
            ny,
            soc: false,
            t_col: None,
            y_col0: 0,
            psd_cols,
            row_y0: 0,
            row_t: None,
        },
        operators: ops,
    })
}

/// Direct assembly of the dual sum-of-squares problem (maximize `v` subject
/// to `p - v = r + sum_j s_j g_j`, `||r|| <= eps`), used to cross-check the
/// moment-side assembly. Returns just the conic program; its optimal value
/// equals the dual value of the moment side.
pub fn assemble_sos_direct(
    inst: &POPInstance,
    d: usize,
    eps: f64,
) -> Result<ConicProgram, MomentError> {
    assert!(eps >= 0.0);
    let ops = build_operators(inst, d)?;
    let ny = ops.indices.len();
    let with_r = eps > 0.0;
    // Columns: v (free), optionally (t_r, r) in a second-order cone, then
    // Gram blocks.
    let mut cone = ConeSpec::new();
    cone.push(ConeBlock::Free(1));
    let r_col0 = if with_r {
        cone.push(ConeBlock::SecondOrder(1 + ny));
        Some(2)
    } else {
        None
    };
    let mut col = if with_r { 1 + 1 + ny } else { 1 };
    let mut gram_cols = Vec::new();
    for blk in &ops.blocks {
        cone.push(ConeBlock::Psd(blk.side));
        gram_cols.push(col);
        col += blk.side * (blk.side + 1) / 2;
    }
    let mut c = vec![0.0; col];
    c[0] = -1.0; // maximize v
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = vec![0.0; ny];
    // Coefficient-matching rows: v delta_{alpha 0} + r_alpha
    //   + sum_j (S_j' Q_j)_alpha = p_alpha.
    triplets.push((0, 0, 1.0));
    for (i, &pc) in ops.objective.iter().enumerate() {
        b[i] = pc;
    }
    if let Some(rc) = r_col0 {
        for i in 0..ny {
            triplets.push((i, rc + i, 1.0));
        }
    }
    for (blk, &col0) in ops.blocks.iter().zip(&gram_cols) {
        for &(sv, yi, coef) in &blk.entries {
            triplets.push((yi, col0 + sv, coef));
        }
    }
    let mut rows = ny;
    if with_r {
        // t_r = eps.
        triplets.push((rows, 1, 1.0));
        b.push(eps);
        rows += 1;
    }
    let _ = rows;
    Ok(ConicProgram::new(c, triplets, b, cone)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis1d::MeasureFamily;
    use crate::bm::DomainSpec;
    use crate::poly::MonomialPoly;
    use regmomsos_conic::{solve, SolverSettings};

    fn x_squared_instance() -> POPInstance {
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
    fn standard_mode_solves_x_squared() {
        // min x^2 over the line: the level-1 standard relaxation is exact.
        let asm = assemble_standard(&x_squared_instance(), 1).unwrap();
        let sol = solve(&asm.program, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, regmomsos_conic::SolveStatus::Optimal);
        assert!(sol.primal_obj.abs() <= 1e-7, "{}", sol.primal_obj);
    }

    #[test]
    fn regularized_at_zero_matches_standard_everywhere() {
        let inst = x_squared_instance();
        let a = assemble(&inst, 2, Mode::Regularized { eps: 0.0 }).unwrap();
        let b = assemble_standard(&inst, 2).unwrap();
        let sa = solve(&a.program, &SolverSettings::default()).unwrap();
        let sb = solve(&b.program, &SolverSettings::default()).unwrap();
        assert!(
            (sa.primal_obj - sb.primal_obj).abs() <= 1e-6,
            "{} vs {}",
            sa.primal_obj,
            sb.primal_obj
        );
    }

    #[test]
    fn sos_direct_matches_moment_side() {
        let inst = x_squared_instance();
        let eps = 0.1;
        let mom = assemble(&inst, 2, Mode::Regularized { eps }).unwrap();
        let sos = assemble_sos_direct(&inst, 2, eps).unwrap();
        let sm = solve(&mom.program, &SolverSettings::default()).unwrap();
        let ss = solve(&sos, &SolverSettings::default()).unwrap();
        // max v = -min(-v)
        assert!(
            (sm.dual_obj + ss.primal_obj).abs() <= 1e-6,
            "moment dual {} vs sos primal {}",
            sm.dual_obj,
            -ss.primal_obj
        );
    }
}
