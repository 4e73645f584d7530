//! Homogeneous self-dual interior-point method.
//!
//! The embedding follows the simplified homogeneous model: find
//! `(x, y, s, tau, kappa)` with
//!
//! ```text
//! A'y + s - c tau = 0        x in K, s in K*, tau, kappa >= 0
//! A x   - b tau   = 0
//! c'x - b'y + kappa = 0
//! ```
//!
//! driven to complementarity `x o s = 0`, `tau kappa = 0` by a Mehrotra
//! predictor-corrector with Nesterov-Todd scaling and step fraction 0.99 to
//! the cone boundary. Free variables carry no barrier and their dual slack
//! is pinned to zero.
//!
//! Each Newton step reduces to a linear solve in `(dx, dy)`. Two
//! factorizations are available:
//!
//! * normal equations `[[A_c H A_c', A_f], [A_f', 0]]` - the fast path for
//!   large problems, but its accuracy degrades with the square of the
//!   scaling condition number;
//! * the augmented form `[[-H^{-1}, A_c', 0], [A_c, 0, A_f], [0, A_f', 0]]`
//!   - larger but far better conditioned.
//!
//! Small problems use the augmented form throughout; large ones start on
//! the normal equations and switch over when the Newton-system residual of
//! a computed direction stops contracting. Directions are polished by
//! iterative refinement against the exact (factorization-free) Newton
//! operator, the computed `dx` is re-projected onto its primal equation
//! through a mu-independent `A A'` factorization, and `ds`/`dkappa` are
//! recovered from the dual and gap rows so that all linear rows of the
//! Newton system hold to machine precision; the remaining error is absorbed
//! by the complementarity rows, where it only perturbs the centering.
//!
//! The method is deterministic: no randomized pivoting or nondeterministic
//! reductions are used, so a given program and settings reproduce identical
//! iterates.

use rayon::prelude::*;

use crate::linalg::{dot, ldl_factor_scaled, norm2, ScaledLdl};
use crate::scaling::NtScaling;
use crate::{ConeBlock, ConicProgram, ConicSolution, SolveStatus, SolverError, SolverSettings};

/// Problems whose augmented system is at most this large always use it.
const AUGMENTED_SIZE_LIMIT: usize = 1000;
/// A direction whose Newton residual exceeds this (relative) after
/// refinement triggers the switch to the augmented solver.
const DEFECT_SWITCH_TOL: f64 = 1e-9;

struct Csr {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

struct Csc {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

fn build_sparse(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> (Csr, Csc) {
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(r, c, v) in triplets {
        if v != 0.0 {
            by_row[r].push((c, v));
        }
    }
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for row in by_row.iter_mut() {
        row.sort_unstable_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(c, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        for (c, v) in merged {
            col_idx.push(c);
            vals.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    let csr = Csr {
        row_ptr,
        col_idx,
        vals,
    };
    let mut counts = vec![0usize; n + 1];
    for &c in &csr.col_idx {
        counts[c + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let mut col_ptr = counts.clone();
    let mut row_idx = vec![0usize; csr.col_idx.len()];
    let mut cvals = vec![0.0; csr.col_idx.len()];
    for r in 0..m {
        for k in csr.row_ptr[r]..csr.row_ptr[r + 1] {
            let c = csr.col_idx[k];
            let slot = col_ptr[c];
            row_idx[slot] = r;
            cvals[slot] = csr.vals[k];
            col_ptr[c] += 1;
        }
    }
    let csc = Csc {
        col_ptr: counts,
        row_idx,
        vals: cvals,
    };
    (csr, csc)
}

impl Csr {
    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.row_ptr.len() - 1 {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            out[r] = acc;
        }
    }

    fn matvec_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.row_ptr.len() - 1 {
            let yr = y[r];
            if yr != 0.0 {
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    out[self.col_idx[k]] += self.vals[k] * yr;
                }
            }
        }
    }
}

/// One direction's right-hand sides.
struct Rhs<'a> {
    dx: &'a [f64],
    dy: &'a [f64],
    dtau: f64,
    ds: &'a [f64],
    dkappa: f64,
}

/// Factored KKT system for one interior-point iteration.
enum KktFactor {
    /// Bordered normal equations over `(dy, dx_free)`.
    NormalEq(ScaledLdl),
    /// Augmented system over `(dx_conic, dy, dx_free)`.
    Augmented(ScaledLdl),
}

struct Workspace {
    n: usize,
    m: usize,
    nf: usize,
    csr: Csr,
    csc: Csc,
    c: Vec<f64>,
    b: Vec<f64>,
    cone_blocks: Vec<(usize, ConeBlock)>,
    free_cols: Vec<usize>,
    conic_local: Vec<usize>,
    conic_cols: Vec<usize>,
    z: Vec<f64>,
    g: Vec<f64>,
    ne_signs: Vec<i8>,
    aug_signs: Vec<i8>,
}

const FREE_LOCAL: usize = usize::MAX;

impl Workspace {
    fn new(prog: &ConicProgram) -> Self {
        let n = prog.num_vars();
        let m = prog.num_rows();
        let (csr, csc) = build_sparse(m, n, &prog.a_triplets);
        let offsets = prog.cone.offsets();
        let mut cone_blocks = Vec::new();
        let mut free_cols = Vec::new();
        let mut conic_local = vec![FREE_LOCAL; n];
        let mut conic_cols = Vec::new();
        for (bi, blk) in prog.cone.blocks().iter().enumerate() {
            let off = offsets[bi];
            cone_blocks.push((off, *blk));
            match blk {
                ConeBlock::Free(d) => {
                    for j in 0..*d {
                        free_cols.push(off + j);
                    }
                }
                _ => {
                    for j in 0..blk.veclen() {
                        conic_local[off + j] = conic_cols.len();
                        conic_cols.push(off + j);
                    }
                }
            }
        }
        let nf = free_cols.len();
        let nc = conic_cols.len();
        let mut ne_signs = vec![1i8; m + nf];
        for s in ne_signs.iter_mut().skip(m) {
            *s = -1;
        }
        let mut aug_signs = vec![-1i8; nc + m + nf];
        for s in aug_signs.iter_mut().skip(nc).take(m) {
            *s = 1;
        }
        Workspace {
            n,
            m,
            nf,
            csr,
            csc,
            c: prog.c.clone(),
            b: prog.b.clone(),
            cone_blocks,
            free_cols,
            conic_local,
            conic_cols,
            z: vec![0.0; nc * m],
            g: vec![0.0; m * m],
            ne_signs,
            aug_signs,
        }
    }

    fn cone_identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.n];
        for &(off, blk) in &self.cone_blocks {
            match blk {
                ConeBlock::Free(_) => {}
                ConeBlock::NonNeg(d) => e[off..off + d].fill(1.0),
                ConeBlock::SecondOrder(_) => e[off] = 1.0,
                ConeBlock::Psd(s) => {
                    for i in 0..s {
                        e[off + crate::svec_index(i, i, s)] = 1.0;
                    }
                }
            }
        }
        e
    }

    fn barrier_degree(&self) -> usize {
        self.cone_blocks
            .iter()
            .map(|(_, b)| b.barrier_degree())
            .sum()
    }

    fn augmented_dim(&self) -> usize {
        self.conic_cols.len() + self.m + self.nf
    }

    /// Forms and factors the bordered normal equations
    /// `[[A_c H A_c', A_f], [A_f', 0]]`.
    fn factor_normal_eq(&mut self, nt: &NtScaling, static_reg: f64) -> KktFactor {
        let m = self.m;
        let nc = self.conic_cols.len();
        self.z.iter_mut().for_each(|v| *v = 0.0);
        let mut local0 = 0usize;
        for (bi, &(off, blk)) in self.cone_blocks.iter().enumerate() {
            let len = blk.veclen();
            match blk {
                ConeBlock::Free(_) => continue,
                ConeBlock::NonNeg(_) => {
                    if let crate::scaling::ScalingBlock::NonNeg { w2, .. } = &nt.blocks[bi].1 {
                        for k in 0..len {
                            let j = off + k;
                            for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                                let r = self.csc.row_idx[p];
                                self.z[(local0 + k) * m + r] = w2[k] * self.csc.vals[p];
                            }
                        }
                    }
                }
                ConeBlock::SecondOrder(_) | ConeBlock::Psd(_) => {
                    let h = nt.dense_h(bi);
                    for k in 0..len {
                        let j = off + k;
                        for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                            let r = self.csc.row_idx[p];
                            let v = self.csc.vals[p];
                            for i in 0..len {
                                self.z[(local0 + i) * m + r] += v * h[i * len + k];
                            }
                        }
                    }
                }
            }
            local0 += len;
        }
        debug_assert_eq!(local0, nc);
        let z = &self.z;
        let csr = &self.csr;
        let conic_local = &self.conic_local;
        self.g.par_chunks_mut(m).enumerate().for_each(|(r, grow)| {
            grow.iter_mut().for_each(|v| *v = 0.0);
            for k in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                let j = csr.col_idx[k];
                let lj = conic_local[j];
                if lj == FREE_LOCAL {
                    continue;
                }
                let v = csr.vals[k];
                let zrow = &z[lj * m..lj * m + m];
                for (g, zv) in grow.iter_mut().zip(zrow) {
                    *g += v * zv;
                }
            }
        });
        let mb = m + self.nf;
        let mut border = vec![0.0; mb * mb];
        for c in 0..m {
            for r in c..m {
                border[c * mb + r] = self.g[r * m + c];
            }
        }
        for (f, &j) in self.free_cols.iter().enumerate() {
            for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                let r = self.csc.row_idx[p];
                border[r * mb + (m + f)] = self.csc.vals[p];
            }
        }
        KktFactor::NormalEq(ldl_factor_scaled(border, mb, &self.ne_signs, static_reg))
    }

    /// Forms and factors the augmented system
    /// `[[-H^{-1}, A_c', 0], [A_c, 0, A_f], [0, A_f', 0]]`.
    fn factor_augmented(&self, nt: &NtScaling, static_reg: f64) -> KktFactor {
        let m = self.m;
        let nc = self.conic_cols.len();
        let na = nc + m + self.nf;
        let mut a = vec![0.0; na * na];
        // -H^{-1} blocks on the leading diagonal.
        let mut local0 = 0usize;
        for (bi, &(off, blk)) in self.cone_blocks.iter().enumerate() {
            let len = blk.veclen();
            match blk {
                ConeBlock::Free(_) => continue,
                ConeBlock::NonNeg(_) => {
                    if let crate::scaling::ScalingBlock::NonNeg { w2, .. } = &nt.blocks[bi].1 {
                        for k in 0..len {
                            let d = local0 + k;
                            a[d * na + d] = -1.0 / w2[k];
                        }
                    }
                }
                ConeBlock::SecondOrder(_) | ConeBlock::Psd(_) => {
                    let hinv = nt.dense_hinv(bi);
                    for kc in 0..len {
                        let col = local0 + kc;
                        for kr in kc..len {
                            a[col * na + (local0 + kr)] = -hinv[kr * len + kc];
                        }
                    }
                }
            }
            let _ = off;
            local0 += len;
        }
        // A_c in the (1,0) block (rows nc..nc+m, cols 0..nc).
        for r in 0..m {
            for k in self.csr.row_ptr[r]..self.csr.row_ptr[r + 1] {
                let j = self.csr.col_idx[k];
                let lj = self.conic_local[j];
                if lj != FREE_LOCAL {
                    a[lj * na + (nc + r)] = self.csr.vals[k];
                }
            }
        }
        // A_f' in the (2,1) block (rows nc+m.., cols nc..nc+m).
        for (f, &j) in self.free_cols.iter().enumerate() {
            for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                let r = self.csc.row_idx[p];
                a[(nc + r) * na + (nc + m + f)] = self.csc.vals[p];
            }
        }
        KktFactor::Augmented(ldl_factor_scaled(a, na, &self.aug_signs, static_reg))
    }

    /// Residual of the KKT subsystem
    /// `-H^{-1} dx_c + A_c' dy = rx_c ; A dx = ry ; A_f' dy = rx_f`
    /// at a candidate `(dx, dy)`.
    fn kkt_defect(
        &self,
        nt: &NtScaling,
        rx: &[f64],
        ry: &[f64],
        dx: &[f64],
        dy: &[f64],
        out_x: &mut [f64],
        out_y: &mut [f64],
    ) {
        let n = self.n;
        let m = self.m;
        let mut hinv_dx = vec![0.0; n];
        nt.apply_hinv(dx, &mut hinv_dx);
        self.csr.matvec_t(dy, out_x);
        for i in 0..n {
            out_x[i] = rx[i] - (out_x[i] - hinv_dx[i]);
        }
        for &j in &self.free_cols {
            let mut aty = 0.0;
            for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                aty += self.csc.vals[p] * dy[self.csc.row_idx[p]];
            }
            out_x[j] = rx[j] - aty;
        }
        self.csr.matvec(dx, out_y);
        for r in 0..m {
            out_y[r] = ry[r] - out_y[r];
        }
    }

    /// Solves the linear subsystem in `(dx, dy)` for targets
    /// `-H^{-1} dx_c + A_c' dy = rx_c`, `A dx = ry`, `A_f' dy = rx_f`,
    /// with one refinement pass against the exact operator.
    fn solve_xy(
        &self,
        nt: &NtScaling,
        kkt: &KktFactor,
        rx: &[f64],
        ry: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dy) = self.solve_xy_once(nt, kkt, rx, ry);
        // One defect-correction pass; keep the better candidate.
        let mut ex = vec![0.0; self.n];
        let mut ey = vec![0.0; self.m];
        self.kkt_defect(nt, rx, ry, &dx, &dy, &mut ex, &mut ey);
        let d0 = norm2(&ex).max(norm2(&ey));
        let scale = 1.0 + norm2(rx).max(norm2(ry));
        if d0 > 1e-14 * scale {
            let (cx, cy) = self.solve_xy_once(nt, kkt, &ex, &ey);
            let dx2: Vec<f64> = dx.iter().zip(&cx).map(|(a, b)| a + b).collect();
            let dy2: Vec<f64> = dy.iter().zip(&cy).map(|(a, b)| a + b).collect();
            self.kkt_defect(nt, rx, ry, &dx2, &dy2, &mut ex, &mut ey);
            if norm2(&ex).max(norm2(&ey)) < d0 {
                dx = dx2;
                dy = dy2;
            }
        }
        (dx, dy)
    }

    fn solve_xy_once(
        &self,
        nt: &NtScaling,
        kkt: &KktFactor,
        rx: &[f64],
        ry: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let m = self.m;
        let nc = self.conic_cols.len();
        match kkt {
            KktFactor::NormalEq(factor) => {
                // dy from A_c H (A_c' dy - rx_c) = ry ... bordered by free cols.
                let mut hv = vec![0.0; n];
                nt.apply_h(rx, &mut hv);
                for &f in &self.free_cols {
                    hv[f] = 0.0;
                }
                let mut top = vec![0.0; m];
                self.csr.matvec(&hv, &mut top);
                let mut brhs = vec![0.0; m + self.nf];
                for r in 0..m {
                    brhs[r] = ry[r] + top[r];
                }
                for (f, &j) in self.free_cols.iter().enumerate() {
                    brhs[m + f] = rx[j];
                }
                if !brhs.is_empty() {
                    factor.solve_in_place(&mut brhs);
                }
                let (dy, dxf) = brhs.split_at(m);
                let mut aty = vec![0.0; n];
                self.csr.matvec_t(dy, &mut aty);
                let mut tmp = vec![0.0; n];
                for i in 0..n {
                    tmp[i] = aty[i] - rx[i];
                }
                let mut dx = vec![0.0; n];
                nt.apply_h(&tmp, &mut dx);
                for (f, &j) in self.free_cols.iter().enumerate() {
                    dx[j] = dxf[f];
                }
                (dx, dy.to_vec())
            }
            KktFactor::Augmented(factor) => {
                let na = nc + m + self.nf;
                let mut rhs = vec![0.0; na];
                for (lj, &j) in self.conic_cols.iter().enumerate() {
                    rhs[lj] = rx[j];
                }
                for r in 0..m {
                    rhs[nc + r] = ry[r];
                }
                for (f, &j) in self.free_cols.iter().enumerate() {
                    rhs[nc + m + f] = rx[j];
                }
                if !rhs.is_empty() {
                    factor.solve_in_place(&mut rhs);
                }
                let mut dx = vec![0.0; n];
                for (lj, &j) in self.conic_cols.iter().enumerate() {
                    dx[j] = rhs[lj];
                }
                for (f, &j) in self.free_cols.iter().enumerate() {
                    dx[j] = rhs[nc + m + f];
                }
                let dy = rhs[nc..nc + m].to_vec();
                (dx, dy)
            }
        }
    }

    /// Dense `A A'` factorization, used to project computed `dx` back onto
    /// its primal equation; the projection operator does not depend on the
    /// barrier scaling, so its accuracy does not degrade as `mu -> 0`.
    fn factor_aat(&self, static_reg: f64) -> Option<ScaledLdl> {
        let m = self.m;
        if m == 0 {
            return None;
        }
        let mut aat = vec![0.0; m * m];
        for r in 0..m {
            for kr in self.csr.row_ptr[r]..self.csr.row_ptr[r + 1] {
                let j = self.csr.col_idx[kr];
                let vr = self.csr.vals[kr];
                for p in self.csc.col_ptr[j]..self.csc.col_ptr[j + 1] {
                    let r2 = self.csc.row_idx[p];
                    if r2 >= r {
                        aat[r * m + r2] += vr * self.csc.vals[p];
                    }
                }
            }
        }
        Some(ldl_factor_scaled(aat, m, &vec![1i8; m], static_reg))
    }

    /// Replaces `x` by its (approximate) projection onto `{x : A x = target}`.
    fn project_primal(&self, aat: &Option<ScaledLdl>, target: &[f64], x: &mut [f64]) {
        let Some(f) = aat else { return };
        let m = self.m;
        let mut defect = vec![0.0; m];
        for _ in 0..2 {
            self.csr.matvec(x, &mut defect);
            for r in 0..m {
                defect[r] = target[r] - defect[r];
            }
            f.solve_in_place(&mut defect);
            let mut corr = vec![0.0; self.n];
            self.csr.matvec_t(&defect, &mut corr);
            for i in 0..self.n {
                x[i] += corr[i];
            }
        }
    }

    /// Solves the `tau` column `K [x1; y1] = [c; b]`.
    fn tau_column(
        &self,
        nt: &NtScaling,
        kkt: &KktFactor,
        aat: &Option<ScaledLdl>,
    ) -> (Vec<f64>, Vec<f64>) {
        let (mut x1, y1) = self.solve_xy(nt, kkt, &self.c, &self.b);
        self.project_primal(aat, &self.b, &mut x1);
        (y1, x1)
    }

    /// Solves one Newton direction with refinement against the full Newton
    /// system; returns the direction and its final residual norm.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        nt: &NtScaling,
        kkt: &KktFactor,
        aat: &Option<ScaledLdl>,
        y1: &[f64],
        x1: &[f64],
        state: &State,
        rhs: &Rhs,
    ) -> (Direction, f64) {
        let mut dir = self.solve_newton(nt, kkt, aat, y1, x1, state, rhs);
        let scale = 1.0
            + norm2(rhs.dx).max(norm2(rhs.dy)).max(norm2(rhs.ds))
            + rhs.dtau.abs()
            + rhs.dkappa.abs();
        let (_, mut best_norm) = self.newton_defect(nt, state, rhs, &dir);
        for _ in 0..3 {
            if best_norm <= 1e-13 * scale {
                break;
            }
            let (def, _) = self.newton_defect(nt, state, rhs, &dir);
            let corr = self.solve_newton(
                nt,
                kkt,
                aat,
                y1,
                x1,
                state,
                &Rhs {
                    dx: &def.0,
                    dy: &def.1,
                    dtau: def.2,
                    ds: &def.3,
                    dkappa: def.4,
                },
            );
            let mut cand = dir.clone();
            for i in 0..self.n {
                cand.dx[i] += corr.dx[i];
                cand.ds[i] += corr.ds[i];
            }
            for r in 0..self.m {
                cand.dy[r] += corr.dy[r];
            }
            cand.dtau += corr.dtau;
            cand.dkappa += corr.dkappa;
            let (_, cand_norm) = self.newton_defect(nt, state, rhs, &cand);
            if cand_norm < best_norm {
                dir = cand;
                best_norm = cand_norm;
            } else {
                break;
            }
        }
        (dir, best_norm / scale)
    }

    /// Residuals of the full Newton system at a candidate direction.
    fn newton_defect(
        &self,
        nt: &NtScaling,
        state: &State,
        rhs: &Rhs,
        dir: &Direction,
    ) -> ((Vec<f64>, Vec<f64>, f64, Vec<f64>, f64), f64) {
        let n = self.n;
        let m = self.m;
        let mut e_dx = vec![0.0; n];
        self.csr.matvec_t(&dir.dy, &mut e_dx);
        for i in 0..n {
            e_dx[i] = rhs.dx[i] - (e_dx[i] + dir.ds[i] - self.c[i] * dir.dtau);
        }
        let mut e_dy = vec![0.0; m];
        self.csr.matvec(&dir.dx, &mut e_dy);
        for r in 0..m {
            e_dy[r] = rhs.dy[r] - (e_dy[r] - self.b[r] * dir.dtau);
        }
        let e_dtau = rhs.dtau - (dot(&self.c, &dir.dx) - dot(&self.b, &dir.dy) + dir.dkappa);
        let mut sx = vec![0.0; n];
        nt.scale_x(&dir.dx, &mut sx);
        let mut ss = vec![0.0; n];
        nt.scale_s(&dir.ds, &mut ss);
        for i in 0..n {
            sx[i] += ss[i];
        }
        let mut lam = vec![0.0; n];
        nt.lambda(&mut lam);
        let mut e_ds = vec![0.0; n];
        nt.jordan_prod(&lam, &sx, &mut e_ds);
        for i in 0..n {
            e_ds[i] = rhs.ds[i] - e_ds[i];
        }
        let e_dkappa = rhs.dkappa - (state.tau * dir.dkappa + state.kappa * dir.dtau);
        let norm = norm2(&e_dx)
            .max(norm2(&e_dy))
            .max(norm2(&e_ds))
            .max(e_dtau.abs())
            .max(e_dkappa.abs());
        ((e_dx, e_dy, e_dtau, e_ds, e_dkappa), norm)
    }

    /// One elimination pass through the KKT system.
    #[allow(clippy::too_many_arguments)]
    fn solve_newton(
        &self,
        nt: &NtScaling,
        kkt: &KktFactor,
        aat: &Option<ScaledLdl>,
        y1: &[f64],
        x1: &[f64],
        state: &State,
        rhs: &Rhs,
    ) -> Direction {
        let n = self.n;
        let m = self.m;
        // dts = lambda \ ds ; u = W^{-1} dts ; dhat_x = dx - u.
        let mut dts = vec![0.0; n];
        nt.jordan_div_lambda(rhs.ds, &mut dts);
        let mut u = vec![0.0; n];
        nt.unscale_s(&dts, &mut u);
        let mut dhat_x = vec![0.0; n];
        for i in 0..n {
            dhat_x[i] = rhs.dx[i] - u[i];
        }
        let (mut x2, y2) = self.solve_xy(nt, kkt, &dhat_x, rhs.dy);
        self.project_primal(aat, rhs.dy, &mut x2);
        // dtau from the gap row combined with the kappa complementarity row.
        let tau = state.tau;
        let kappa = state.kappa;
        let denom = dot(&self.c, x1) - dot(&self.b, y1) - kappa / tau;
        let numer = rhs.dtau - rhs.dkappa / tau - dot(&self.c, &x2) + dot(&self.b, &y2);
        let dtau = numer / denom;
        let mut dx = x2;
        for i in 0..n {
            dx[i] += dtau * x1[i];
        }
        let mut dy = y2;
        for r in 0..m {
            dy[r] += dtau * y1[r];
        }
        // ds from the dual feasibility row: exact dual-residual update even
        // with an ill-conditioned scaling.
        let mut ds = vec![0.0; n];
        self.csr.matvec_t(&dy, &mut ds);
        for i in 0..n {
            ds[i] = rhs.dx[i] + self.c[i] * dtau - ds[i];
        }
        for &j in &self.free_cols {
            ds[j] = 0.0;
        }
        // dkappa from the gap row, which is then satisfied exactly; the
        // tau-kappa complementarity row absorbs the remaining error.
        let dkappa = rhs.dtau - dot(&self.c, &dx) + dot(&self.b, &dy);
        Direction {
            dx,
            dy,
            ds,
            dtau,
            dkappa,
        }
    }
}

#[derive(Clone)]
struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

#[derive(Clone)]
struct State {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Clone)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap_rel: f64,
    pobj: f64,
    dobj: f64,
}

fn metrics(ws: &Workspace, st: &State) -> Metrics {
    let inv_tau = 1.0 / st.tau;
    let n = ws.n;
    let m = ws.m;
    let mut ax = vec![0.0; m];
    ws.csr.matvec(&st.x, &mut ax);
    let mut pres_vec = vec![0.0; m];
    for r in 0..m {
        pres_vec[r] = ax[r] * inv_tau - ws.b[r];
    }
    let mut aty = vec![0.0; n];
    ws.csr.matvec_t(&st.y, &mut aty);
    let mut dres_vec = vec![0.0; n];
    for i in 0..n {
        dres_vec[i] = ws.c[i] - (aty[i] + st.s[i]) * inv_tau;
    }
    let pobj = dot(&ws.c, &st.x) * inv_tau;
    let dobj = dot(&ws.b, &st.y) * inv_tau;
    Metrics {
        pres: norm2(&pres_vec) / (1.0 + norm2(&ws.b)),
        dres: norm2(&dres_vec) / (1.0 + norm2(&ws.c)),
        gap_rel: (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs())),
        pobj,
        dobj,
    }
}

/// Solves a conic program with the homogeneous self-dual interior-point
/// method. Returns `Optimal` only when the relative gap and both residual
/// norms are below the configured tolerances.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution, SolverError> {
    prog.validate()?;
    if !settings.is_valid() {
        return Err(SolverError::Settings);
    }
    let reduced = prog.presolved();
    let mut ws = Workspace::new(&reduced);
    let n = ws.n;
    let m = ws.m;
    let deg = ws.barrier_degree();
    let e = ws.cone_identity();
    let aat = ws.factor_aat(settings.static_reg);
    let mut use_augmented = ws.augmented_dim() <= AUGMENTED_SIZE_LIMIT;

    let mut st = State {
        x: e.clone(),
        y: vec![0.0; m],
        s: e.clone(),
        tau: 1.0,
        kappa: 1.0,
    };

    let mut best: Option<(f64, State, Metrics, usize)> = None;
    let mut history: Vec<f64> = Vec::new();
    let mut status = SolveStatus::IterationLimit;
    let mut iters_done = settings.max_iter;
    let log = std::env::var("REGMOMSOS_IPM_LOG").is_ok();

    for iter in 0..settings.max_iter {
        let met = metrics(&ws, &st);
        let score = met.pres.max(met.dres).max(met.gap_rel);
        if best.as_ref().map_or(true, |(s, ..)| score < *s) {
            best = Some((score, st.clone(), met.clone(), iter));
        }
        history.push(score);
        if log {
            eprintln!(
                "iter {:3} pres={:.3e} dres={:.3e} gap={:.3e} pobj={:+.6e} dobj={:+.6e} tau={:.3e} kappa={:.3e}{}",
                iter, met.pres, met.dres, met.gap_rel, met.pobj, met.dobj, st.tau, st.kappa,
                if use_augmented { " [aug]" } else { "" }
            );
        }

        if met.pres <= settings.feas_tol
            && met.dres <= settings.feas_tol
            && met.gap_rel <= settings.gap_tol
        {
            status = SolveStatus::Optimal;
            iters_done = iter;
            break;
        }

        // Infeasibility certificates from the homogeneous variables.
        let by = dot(&ws.b, &st.y);
        if by > 1e-12 {
            let mut aty = vec![0.0; n];
            ws.csr.matvec_t(&st.y, &mut aty);
            for i in 0..n {
                aty[i] = (aty[i] + st.s[i]) / by;
            }
            if norm2(&aty) <= settings.feas_tol {
                iters_done = iter;
                return Ok(extract_ray(
                    &ws,
                    &st,
                    SolveStatus::PrimalInfeasible,
                    1.0 / by,
                    iters_done,
                ));
            }
        }
        let cx = dot(&ws.c, &st.x);
        if cx < -1e-12 {
            let mut ax = vec![0.0; m];
            ws.csr.matvec(&st.x, &mut ax);
            let scale = -1.0 / cx;
            if norm2(&ax) * scale <= settings.feas_tol {
                iters_done = iter;
                return Ok(extract_ray(
                    &ws,
                    &st,
                    SolveStatus::DualInfeasible,
                    scale,
                    iters_done,
                ));
            }
        }

        // Slow progress: the best score did not improve by 1.5x over the
        // last ten iterations.
        if iter >= 12 {
            let recent_best = history[iter.saturating_sub(10)..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let older_best = history[..iter.saturating_sub(10)]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if recent_best * 1.5 > older_best {
                status = SolveStatus::SlowProgress;
                iters_done = iter;
                break;
            }
        }

        let mu = (dot(&st.x, &st.s) + st.tau * st.kappa) / (deg + 1) as f64;
        let nt = match NtScaling::compute(&reduced.cone, &st.x, &st.s) {
            Ok(nt) => nt,
            Err(_) => {
                status = SolveStatus::SlowProgress;
                iters_done = iter;
                break;
            }
        };
        let mut kkt = if use_augmented {
            ws.factor_augmented(&nt, settings.static_reg)
        } else {
            ws.factor_normal_eq(&nt, settings.static_reg)
        };
        if log {
            let bumps = match &kkt {
                KktFactor::NormalEq(f) | KktFactor::Augmented(f) => f.pivot_bumps(),
            };
            if bumps > 0 {
                eprintln!("    {} pivots bumped", bumps);
            }
        }
        let mut y1x1 = ws.tau_column(&nt, &kkt, &aat);

        // Residuals for the Newton right-hand sides.
        let mut rx = vec![0.0; n];
        ws.csr.matvec_t(&st.y, &mut rx);
        for i in 0..n {
            rx[i] += st.s[i] - ws.c[i] * st.tau;
        }
        let mut ry = vec![0.0; m];
        ws.csr.matvec(&st.x, &mut ry);
        for r in 0..m {
            ry[r] -= ws.b[r] * st.tau;
        }
        let rtau = dot(&ws.c, &st.x) - dot(&ws.b, &st.y) + st.kappa;

        let mut lam_sq = vec![0.0; n];
        nt.lambda_sq(&mut lam_sq);
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
        let dx_aff = neg(&rx);
        let dy_aff = neg(&ry);
        let ds_aff_rhs = neg(&lam_sq);
        let aff_rhs = Rhs {
            dx: &dx_aff,
            dy: &dy_aff,
            dtau: -rtau,
            ds: &ds_aff_rhs,
            dkappa: -st.tau * st.kappa,
        };
        let (mut aff, mut aff_defect) =
            ws.direction(&nt, &kkt, &aat, &y1x1.0, &y1x1.1, &st, &aff_rhs);
        if !use_augmented && aff_defect > DEFECT_SWITCH_TOL {
            // The normal equations have hit their accuracy floor; redo this
            // iteration on the augmented system and stay on it.
            use_augmented = true;
            if log {
                eprintln!("    switching to augmented KKT (defect {:.3e})", aff_defect);
            }
            kkt = ws.factor_augmented(&nt, settings.static_reg);
            y1x1 = ws.tau_column(&nt, &kkt, &aat);
            let redo = ws.direction(&nt, &kkt, &aat, &y1x1.0, &y1x1.1, &st, &aff_rhs);
            aff = redo.0;
            aff_defect = redo.1;
        }
        let _ = aff_defect;
        let (y1, x1) = &y1x1;

        let alpha_aff = step_length(&ws, &nt, &st, &aff, 1.0);
        let mu_aff = {
            let mut xs = 0.0;
            for i in 0..n {
                xs += (st.x[i] + alpha_aff * aff.dx[i]) * (st.s[i] + alpha_aff * aff.ds[i]);
            }
            let tk = (st.tau + alpha_aff * aff.dtau) * (st.kappa + alpha_aff * aff.dkappa);
            (xs + tk) / (deg + 1) as f64
        };
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector (combined) direction.
        let mut sx_aff = vec![0.0; n];
        nt.scale_x(&aff.dx, &mut sx_aff);
        let mut ss_aff = vec![0.0; n];
        nt.scale_s(&aff.ds, &mut ss_aff);
        let mut corr = vec![0.0; n];
        nt.jordan_prod(&sx_aff, &ss_aff, &mut corr);
        let mut ds_comb = vec![0.0; n];
        for i in 0..n {
            ds_comb[i] = -lam_sq[i] - corr[i] + sigma * mu * e[i];
        }
        let damp = 1.0 - sigma;
        let dx_comb: Vec<f64> = rx.iter().map(|v| -damp * v).collect();
        let dy_comb: Vec<f64> = ry.iter().map(|v| -damp * v).collect();
        let (dir, _) = ws.direction(
            &nt,
            &kkt,
            &aat,
            y1,
            x1,
            &st,
            &Rhs {
                dx: &dx_comb,
                dy: &dy_comb,
                dtau: -damp * rtau,
                ds: &ds_comb,
                dkappa: -st.tau * st.kappa - aff.dtau * aff.dkappa + sigma * mu,
            },
        );

        let alpha = step_length(&ws, &nt, &st, &dir, 0.99).min(1.0);
        if log {
            eprintln!(
                "    alpha_aff={:.3e} sigma={:.3e} alpha={:.3e} mu={:.3e}",
                alpha_aff, sigma, alpha, mu
            );
        }
        if alpha <= 1e-10 {
            status = SolveStatus::SlowProgress;
            iters_done = iter;
            break;
        }
        for i in 0..n {
            st.x[i] += alpha * dir.dx[i];
            st.s[i] += alpha * dir.ds[i];
        }
        for r in 0..m {
            st.y[r] += alpha * dir.dy[r];
        }
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;
        if !st.tau.is_finite() || st.tau <= 0.0 {
            status = SolveStatus::SlowProgress;
            iters_done = iter;
            break;
        }
    }

    let (_, bst, bmet, _) = best.expect("at least one iterate");
    let (st, met) = if status == SolveStatus::Optimal {
        let met = metrics(&ws, &st);
        (st, met)
    } else {
        (bst, bmet)
    };
    let inv_tau = 1.0 / st.tau;
    Ok(ConicSolution {
        status,
        x: st.x.iter().map(|v| v * inv_tau).collect(),
        y_dual: st.y.iter().map(|v| v * inv_tau).collect(),
        s: st.s.iter().map(|v| v * inv_tau).collect(),
        primal_obj: met.pobj,
        dual_obj: met.dobj,
        rel_gap: met.gap_rel,
        primal_res: met.pres,
        dual_res: met.dres,
        iterations: iters_done,
    })
}

fn extract_ray(
    ws: &Workspace,
    st: &State,
    status: SolveStatus,
    scale: f64,
    iterations: usize,
) -> ConicSolution {
    ConicSolution {
        status,
        x: st.x.iter().map(|v| v * scale).collect(),
        y_dual: st.y.iter().map(|v| v * scale).collect(),
        s: st.s.iter().map(|v| v * scale).collect(),
        primal_obj: dot(&ws.c, &st.x) * scale,
        dual_obj: dot(&ws.b, &st.y) * scale,
        rel_gap: f64::INFINITY,
        primal_res: f64::INFINITY,
        dual_res: f64::INFINITY,
        iterations,
    }
}

fn step_length(ws: &Workspace, nt: &NtScaling, st: &State, dir: &Direction, frac: f64) -> f64 {
    let n = ws.n;
    let mut sx = vec![0.0; n];
    nt.scale_x(&dir.dx, &mut sx);
    let mut ss = vec![0.0; n];
    nt.scale_s(&dir.ds, &mut ss);
    let mut alpha = nt.step_to_boundary(&sx).min(nt.step_to_boundary(&ss));
    if dir.dtau < 0.0 {
        alpha = alpha.min(st.tau / (-dir.dtau));
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(st.kappa / (-dir.dkappa));
    }
    (frac * alpha).min(1.0)
}
