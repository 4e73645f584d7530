//! Nesterov-Todd scalings and Jordan-algebra operations for the symmetric
//! cone blocks.
//!
//! For each block the scaling point satisfies `W^{-1} x = W s = lambda`.
//! PSD blocks use the factor form of Todd, Toh and Tutuncu: with Cholesky
//! factors `X = L1 L1'`, `S = L2 L2'` and the SVD `L2' L1 = U Sigma V'`, the
//! matrix `R = L1 V Sigma^{-1/2}` maps both `X` and `S` to the diagonal
//! `Sigma` in the scaled frame (`R^{-1} X R^{-T} = R' S R = Sigma`).

use nalgebra::DMatrix;

use crate::{smat, svec, svec_index, svec_len, ConeBlock, ConeSpec, SolverError};

pub enum ScalingBlock {
    Free {
        dim: usize,
    },
    NonNeg {
        w2: Vec<f64>,
        lambda: Vec<f64>,
    },
    Soc {
        eta: f64,
        /// J-unit scaling point; `H = W^2 = eta^2 (2 wbar wbar' - J)`.
        wbar: Vec<f64>,
        /// Jordan square root of `wbar`; `W = eta (2 v v' - J)`.
        v: Vec<f64>,
        lambda: Vec<f64>,
    },
    Psd {
        side: usize,
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        wm: DMatrix<f64>,
        sigma: Vec<f64>,
    },
}

pub struct NtScaling {
    pub blocks: Vec<(usize, ScalingBlock)>,
}

fn soc_jdot(u: &[f64], v: &[f64]) -> f64 {
    let mut d = u[0] * v[0];
    for i in 1..u.len() {
        d -= u[i] * v[i];
    }
    d
}

impl NtScaling {
    pub fn compute(cone: &ConeSpec, x: &[f64], s: &[f64]) -> Result<Self, SolverError> {
        let mut blocks = Vec::with_capacity(cone.blocks().len());
        let mut off = 0;
        for b in cone.blocks() {
            let len = b.veclen();
            let xb = &x[off..off + len];
            let sb = &s[off..off + len];
            let sc = match *b {
                ConeBlock::Free(dim) => ScalingBlock::Free { dim },
                ConeBlock::NonNeg(_) => {
                    let mut w2 = vec![0.0; len];
                    let mut lambda = vec![0.0; len];
                    for i in 0..len {
                        if xb[i] <= 0.0 || sb[i] <= 0.0 {
                            return Err(SolverError::Numerical("nonneg scaling off interior"));
                        }
                        w2[i] = xb[i] / sb[i];
                        lambda[i] = (xb[i] * sb[i]).sqrt();
                    }
                    ScalingBlock::NonNeg { w2, lambda }
                }
                ConeBlock::SecondOrder(_) => {
                    let rx = soc_jdot(xb, xb);
                    let rs = soc_jdot(sb, sb);
                    if rx <= 0.0 || rs <= 0.0 || xb[0] <= 0.0 || sb[0] <= 0.0 {
                        return Err(SolverError::Numerical("soc scaling off interior"));
                    }
                    let nx = rx.sqrt();
                    let ns = rs.sqrt();
                    let mut dotbar = 0.0;
                    for i in 0..len {
                        dotbar += (xb[i] / nx) * (sb[i] / ns);
                    }
                    let gamma = ((1.0 + dotbar) / 2.0).sqrt();
                    let mut wbar = vec![0.0; len];
                    wbar[0] = (xb[0] / nx + sb[0] / ns) / (2.0 * gamma);
                    for i in 1..len {
                        wbar[i] = (xb[i] / nx - sb[i] / ns) / (2.0 * gamma);
                    }
                    // Jordan square root of the J-unit point wbar.
                    let mut v = vec![0.0; len];
                    v[0] = ((wbar[0] + 1.0) / 2.0).sqrt();
                    for i in 1..len {
                        v[i] = wbar[i] / (2.0 * v[0]);
                    }
                    let eta = (rx / rs).powf(0.25);
                    let mut blk = ScalingBlock::Soc {
                        eta,
                        wbar,
                        v,
                        lambda: vec![0.0; len],
                    };
                    // lambda = W^{-1} x
                    let mut lam = vec![0.0; len];
                    blk.apply_winv_soc(xb, &mut lam);
                    if let ScalingBlock::Soc { lambda, .. } = &mut blk {
                        *lambda = lam;
                    }
                    blk
                }
                ConeBlock::Psd(side) => {
                    let xm = DMatrix::from_row_slice(side, side, &smat(xb, side));
                    let sm = DMatrix::from_row_slice(side, side, &smat(sb, side));
                    let l1 = cholesky_with_jitter(&xm, "psd x cholesky")?;
                    let l2 = cholesky_with_jitter(&sm, "psd s cholesky")?;
                    let m = l2.transpose() * &l1;
                    let svd = m
                        .svd_unordered(true, true);
                    let u = svd.u.as_ref().ok_or(SolverError::Numerical("psd svd"))?;
                    let vt = svd.v_t.as_ref().ok_or(SolverError::Numerical("psd svd"))?;
                    let sg = &svd.singular_values;
                    if sg.iter().any(|&v| v <= 0.0) {
                        return Err(SolverError::Numerical("psd svd singular"));
                    }
                    let mut v = vt.transpose();
                    for (j, mut col) in v.column_iter_mut().enumerate() {
                        col *= 1.0 / sg[j].sqrt();
                    }
                    let r = &l1 * v; // L1 V Sigma^{-1/2}
                    let mut ut = u.transpose();
                    for (i, mut row) in ut.row_iter_mut().enumerate() {
                        row *= 1.0 / sg[i].sqrt();
                    }
                    let rinv = ut * l2.transpose(); // Sigma^{-1/2} U' L2'
                    let wm = &r * r.transpose();
                    ScalingBlock::Psd {
                        side,
                        sigma: sg.iter().copied().collect(),
                        r,
                        rinv,
                        wm,
                    }
                }
            };
            blocks.push((off, sc));
            off += len;
        }
        Ok(Self { blocks })
    }

    /// Scaled point lambda (zero on free blocks).
    pub fn lambda(&self, out: &mut [f64]) {
        for (off, b) in &self.blocks {
            match b {
                ScalingBlock::Free { dim } => out[*off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { lambda, .. } | ScalingBlock::Soc { lambda, .. } => {
                    out[*off..off + lambda.len()].copy_from_slice(lambda)
                }
                ScalingBlock::Psd { side, sigma, .. } => {
                    let seg = &mut out[*off..off + svec_len(*side)];
                    seg.fill(0.0);
                    for i in 0..*side {
                        seg[svec_index(i, i, *side)] = sigma[i];
                    }
                }
            }
        }
    }

    /// lambda o lambda.
    pub fn lambda_sq(&self, out: &mut [f64]) {
        for (off, b) in &self.blocks {
            match b {
                ScalingBlock::Free { dim } => out[*off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { lambda, .. } => {
                    for (o, l) in out[*off..off + lambda.len()].iter_mut().zip(lambda) {
                        *o = l * l;
                    }
                }
                ScalingBlock::Soc { lambda, .. } => {
                    let seg = &mut out[*off..off + lambda.len()];
                    let sq: f64 = lambda.iter().map(|v| v * v).sum();
                    seg[0] = sq;
                    for i in 1..lambda.len() {
                        seg[i] = 2.0 * lambda[0] * lambda[i];
                    }
                }
                ScalingBlock::Psd { side, sigma, .. } => {
                    let seg = &mut out[*off..off + svec_len(*side)];
                    seg.fill(0.0);
                    for i in 0..*side {
                        seg[svec_index(i, i, *side)] = sigma[i] * sigma[i];
                    }
                }
            }
        }
    }

    /// Solves `lambda o u = d` blockwise (free blocks: zero).
    pub fn jordan_div_lambda(&self, d: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            match b {
                ScalingBlock::Free { dim } => out[*off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { lambda, .. } => {
                    for i in 0..lambda.len() {
                        out[off + i] = d[off + i] / lambda[i];
                    }
                }
                ScalingBlock::Soc { lambda, .. } => {
                    let n = lambda.len();
                    let db = &d[*off..off + n];
                    let mut lbar_d = 0.0;
                    let mut lbar_sq = 0.0;
                    for i in 1..n {
                        lbar_d += lambda[i] * db[i];
                        lbar_sq += lambda[i] * lambda[i];
                    }
                    let det = lambda[0] * lambda[0] - lbar_sq;
                    let u0 = (lambda[0] * db[0] - lbar_d) / det;
                    out[*off] = u0;
                    for i in 1..n {
                        out[off + i] = (db[i] - u0 * lambda[i]) / lambda[0];
                    }
                }
                ScalingBlock::Psd { side, sigma, .. } => {
                    for j in 0..*side {
                        for i in 0..=j {
                            let k = off + svec_index(i, j, *side);
                            out[k] = 2.0 * d[k] / (sigma[i] + sigma[j]);
                        }
                    }
                }
            }
        }
    }

    /// Jordan product `u o v` blockwise (free blocks: zero).
    pub fn jordan_prod(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            let off = *off;
            match b {
                ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { w2, .. } => {
                    for i in 0..w2.len() {
                        out[off + i] = u[off + i] * v[off + i];
                    }
                }
                ScalingBlock::Soc { lambda, .. } => {
                    let n = lambda.len();
                    let ub = &u[off..off + n];
                    let vb = &v[off..off + n];
                    let dot: f64 = ub.iter().zip(vb).map(|(a, b)| a * b).sum();
                    out[off] = dot;
                    for i in 1..n {
                        out[off + i] = ub[0] * vb[i] + vb[0] * ub[i];
                    }
                }
                ScalingBlock::Psd { side, .. } => {
                    let side = *side;
                    let um = smat(&u[off..off + svec_len(side)], side);
                    let vm = smat(&v[off..off + svec_len(side)], side);
                    let mut prod = vec![0.0; side * side];
                    for i in 0..side {
                        for j in 0..side {
                            let mut acc = 0.0;
                            for k in 0..side {
                                acc += um[i * side + k] * vm[k * side + j]
                                    + vm[i * side + k] * um[k * side + j];
                            }
                            prod[i * side + j] = 0.5 * acc;
                        }
                    }
                    // Symmetrize (UV + VU)/2 is already symmetric up to roundoff.
                    for i in 0..side {
                        for j in 0..i {
                            let m = 0.5 * (prod[i * side + j] + prod[j * side + i]);
                            prod[i * side + j] = m;
                            prod[j * side + i] = m;
                        }
                    }
                    let sv = svec(&prod, side);
                    out[off..off + sv.len()].copy_from_slice(&sv);
                }
            }
        }
    }

    /// x-side scaling `W^{-1} u` (PSD: `R^{-1} U R^{-T}`); zero on free blocks.
    pub fn scale_x(&self, u: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            b.scale_x_block(*off, u, out);
        }
    }

    /// s-side scaling `W u` (PSD: `R' U R`); zero on free blocks.
    pub fn scale_s(&self, u: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            b.scale_s_block(*off, u, out);
        }
    }

    /// Inverse of [`Self::scale_s`] (PSD: `R^{-T} U R^{-1}`); zero on free blocks.
    pub fn unscale_s(&self, u: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            b.unscale_s_block(*off, u, out);
        }
    }

    /// `H u = W (W u)` blockwise; zero on free blocks.
    pub fn apply_h(&self, u: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            let off = *off;
            match b {
                ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { w2, .. } => {
                    for i in 0..w2.len() {
                        out[off + i] = w2[i] * u[off + i];
                    }
                }
                ScalingBlock::Soc { eta, wbar, .. } => {
                    // H u = eta^2 (2 wbar (wbar'u) - J u).
                    let n = wbar.len();
                    let ub = &u[off..off + n];
                    let e2 = eta * eta;
                    let wu: f64 = wbar.iter().zip(ub).map(|(a, b)| a * b).sum();
                    out[off] = e2 * (2.0 * wbar[0] * wu - ub[0]);
                    for i in 1..n {
                        out[off + i] = e2 * (2.0 * wbar[i] * wu + ub[i]);
                    }
                }
                ScalingBlock::Psd { side, wm, .. } => {
                    let side = *side;
                    let um = DMatrix::from_row_slice(side, side, &smat(&u[off..off + svec_len(side)], side));
                    let prod = wm * um * wm;
                    let sv = svec(prod.transpose().as_slice(), side);
                    out[off..off + sv.len()].copy_from_slice(&sv);
                }
            }
        }
    }

    /// `H^{-1} u = W^{-1}(W^{-1} u)` blockwise; zero on free blocks.
    pub fn apply_hinv(&self, u: &[f64], out: &mut [f64]) {
        for (off, b) in &self.blocks {
            let off = *off;
            match b {
                ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
                ScalingBlock::NonNeg { w2, .. } => {
                    for i in 0..w2.len() {
                        out[off + i] = u[off + i] / w2[i];
                    }
                }
                ScalingBlock::Soc { eta, wbar, .. } => {
                    // H^{-1} u = eta^{-2} (2 J wbar (wbar' J u) - J u).
                    let n = wbar.len();
                    let ub = &u[off..off + n];
                    let inv_e2 = 1.0 / (eta * eta);
                    let mut wju = wbar[0] * ub[0];
                    for i in 1..n {
                        wju -= wbar[i] * ub[i];
                    }
                    out[off] = inv_e2 * (2.0 * wbar[0] * wju - ub[0]);
                    for i in 1..n {
                        out[off + i] = inv_e2 * (-2.0 * wbar[i] * wju + ub[i]);
                    }
                }
                ScalingBlock::Psd { side, rinv, .. } => {
                    let side = *side;
                    let wm_inv = rinv.transpose() * rinv;
                    let um = DMatrix::from_row_slice(
                        side,
                        side,
                        &smat(&u[off..off + svec_len(side)], side),
                    );
                    let prod = &wm_inv * um * &wm_inv;
                    let sv = svec(prod.transpose().as_slice(), side);
                    out[off..off + sv.len()].copy_from_slice(&sv);
                }
            }
        }
    }

    /// Dense `H^{-1}` matrix of a symmetric-cone block (row-major).
    pub fn dense_hinv(&self, block_idx: usize) -> Vec<f64> {
        let (_, b) = &self.blocks[block_idx];
        match b {
            ScalingBlock::Free { .. } | ScalingBlock::NonNeg { .. } => {
                panic!("dense_hinv only for soc/psd blocks")
            }
            ScalingBlock::Soc { eta, wbar, .. } => {
                let n = wbar.len();
                // H^{-1} = eta^{-2} (2 J wbar wbar' J - J).
                let inv_e2 = 1.0 / (eta * eta);
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    let ji = if i == 0 { wbar[0] } else { -wbar[i] };
                    for j in 0..n {
                        let jj = if j == 0 { wbar[0] } else { -wbar[j] };
                        h[i * n + j] = inv_e2 * 2.0 * ji * jj;
                    }
                    h[i * n + i] -= inv_e2 * if i == 0 { 1.0 } else { -1.0 };
                }
                h
            }
            ScalingBlock::Psd { side, rinv, .. } => {
                let wm_inv = rinv.transpose() * rinv;
                sym_kron(&wm_inv, *side)
            }
        }
    }

    /// Largest step `alpha` with `lambda + alpha v` in the cone, per block,
    /// where `v` is a direction already in the scaled frame.
    pub fn step_to_boundary(&self, v: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for (off, b) in &self.blocks {
            let off = *off;
            let a = match b {
                ScalingBlock::Free { .. } => f64::INFINITY,
                ScalingBlock::NonNeg { lambda, .. } => {
                    let mut a = f64::INFINITY;
                    for i in 0..lambda.len() {
                        if v[off + i] < 0.0 {
                            a = a.min(lambda[i] / (-v[off + i]));
                        }
                    }
                    a
                }
                ScalingBlock::Soc { lambda, .. } => {
                    let n = lambda.len();
                    let vb = &v[off..off + n];
                    let qa = soc_jdot(vb, vb);
                    let qb = 2.0 * {
                        let mut d = lambda[0] * vb[0];
                        for i in 1..n {
                            d -= lambda[i] * vb[i];
                        }
                        d
                    };
                    let qc = soc_jdot(lambda, lambda);
                    min_positive_root(qa, qb, qc).unwrap_or(f64::INFINITY)
                }
                ScalingBlock::Psd { side, sigma, .. } => {
                    let side = *side;
                    let vm = smat(&v[off..off + svec_len(side)], side);
                    let mut t = DMatrix::zeros(side, side);
                    for i in 0..side {
                        for j in 0..side {
                            t[(i, j)] = vm[i * side + j] / (sigma[i] * sigma[j]).sqrt();
                        }
                    }
                    let eig = t.symmetric_eigenvalues();
                    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
                    if min >= 0.0 {
                        f64::INFINITY
                    } else {
                        -1.0 / min
                    }
                }
            };
            alpha = alpha.min(a);
        }
        alpha
    }

    /// Dense `H` matrix of a symmetric-cone block (row-major, `len x len`).
    pub fn dense_h(&self, block_idx: usize) -> Vec<f64> {
        let (_, b) = &self.blocks[block_idx];
        match b {
            ScalingBlock::Free { .. } | ScalingBlock::NonNeg { .. } => {
                panic!("dense_h only for soc/psd blocks")
            }
            ScalingBlock::Soc { eta, wbar, .. } => {
                let n = wbar.len();
                // H = W^2 = eta^2 (2 wbar wbar' - J).
                let e2 = eta * eta;
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = e2 * 2.0 * wbar[i] * wbar[j];
                    }
                    h[i * n + i] -= e2 * if i == 0 { 1.0 } else { -1.0 };
                }
                h
            }
            ScalingBlock::Psd { side, wm, .. } => sym_kron(wm, *side),
        }
    }
}

impl ScalingBlock {
    fn len(&self) -> usize {
        match self {
            ScalingBlock::Free { dim } => *dim,
            ScalingBlock::NonNeg { w2, .. } => w2.len(),
            ScalingBlock::Soc { wbar, .. } => wbar.len(),
            ScalingBlock::Psd { side, .. } => svec_len(*side),
        }
    }

    fn apply_w_soc(&self, u: &[f64], out: &mut [f64]) {
        if let ScalingBlock::Soc { eta, v, .. } = self {
            let n = u.len();
            let vu: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            out[0] = eta * (2.0 * v[0] * vu - u[0]);
            for i in 1..n {
                out[i] = eta * (2.0 * v[i] * vu + u[i]);
            }
        }
    }

    fn apply_winv_soc(&self, u: &[f64], out: &mut [f64]) {
        if let ScalingBlock::Soc { eta, v, .. } = self {
            // W^{-1} = eta^{-1} (2 J v v' J - J)
            let n = u.len();
            let mut vju = v[0] * u[0];
            for i in 1..n {
                vju -= v[i] * u[i];
            }
            out[0] = (2.0 * v[0] * vju - u[0]) / eta;
            for i in 1..n {
                out[i] = (-2.0 * v[i] * vju + u[i]) / eta;
            }
        }
    }

    fn scale_x_block(&self, off: usize, u: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
            ScalingBlock::NonNeg { w2, .. } => {
                for i in 0..w2.len() {
                    out[off + i] = u[off + i] / w2[i].sqrt();
                }
            }
            ScalingBlock::Soc { .. } => {
                let n = self.len();
                let mut tmp = vec![0.0; n];
                self.apply_winv_soc(&u[off..off + n], &mut tmp);
                out[off..off + n].copy_from_slice(&tmp);
            }
            ScalingBlock::Psd { side, rinv, .. } => {
                let side = *side;
                let um = DMatrix::from_row_slice(side, side, &smat(&u[off..off + svec_len(side)], side));
                let prod = rinv * um * rinv.transpose();
                let sv = svec(prod.transpose().as_slice(), side);
                out[off..off + sv.len()].copy_from_slice(&sv);
            }
        }
    }

    fn scale_s_block(&self, off: usize, u: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
            ScalingBlock::NonNeg { w2, .. } => {
                for i in 0..w2.len() {
                    out[off + i] = u[off + i] * w2[i].sqrt();
                }
            }
            ScalingBlock::Soc { .. } => {
                let n = self.len();
                let mut tmp = vec![0.0; n];
                self.apply_w_soc(&u[off..off + n], &mut tmp);
                out[off..off + n].copy_from_slice(&tmp);
            }
            ScalingBlock::Psd { side, r, .. } => {
                let side = *side;
                let um = DMatrix::from_row_slice(side, side, &smat(&u[off..off + svec_len(side)], side));
                let prod = r.transpose() * um * r;
                let sv = svec(prod.transpose().as_slice(), side);
                out[off..off + sv.len()].copy_from_slice(&sv);
            }
        }
    }

    fn unscale_s_block(&self, off: usize, u: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Free { dim } => out[off..off + dim].fill(0.0),
            ScalingBlock::NonNeg { w2, .. } => {
                for i in 0..w2.len() {
                    out[off + i] = u[off + i] / w2[i].sqrt();
                }
            }
            ScalingBlock::Soc { .. } => {
                let n = self.len();
                let mut tmp = vec![0.0; n];
                self.apply_winv_soc(&u[off..off + n], &mut tmp);
                out[off..off + n].copy_from_slice(&tmp);
            }
            ScalingBlock::Psd { side, rinv, .. } => {
                let side = *side;
                let um = DMatrix::from_row_slice(side, side, &smat(&u[off..off + svec_len(side)], side));
                let prod = rinv.transpose() * um * rinv;
                let sv = svec(prod.transpose().as_slice(), side);
                out[off..off + sv.len()].copy_from_slice(&sv);
            }
        }
    }
}

/// Symmetric Kronecker product of `W` with itself as a dense matrix on svec
/// coordinates: the matrix of `U -> W U W`.
fn sym_kron(w: &DMatrix<f64>, side: usize) -> Vec<f64> {
    let n = svec_len(side);
    let rt2 = std::f64::consts::SQRT_2;
    let mut h = vec![0.0; n * n];
    for j in 0..side {
        for i in 0..=j {
            let row = svec_index(i, j, side);
            let fij = if i == j { 1.0 } else { rt2 };
            for l in 0..side {
                for k in 0..=l {
                    let col = svec_index(k, l, side);
                    let fkl = if k == l { 1.0 } else { rt2 };
                    let val = 0.5
                        * (w[(i, k)] * w[(j, l)]
                            + w[(i, l)] * w[(j, k)]);
                    h[row * n + col] = fij * fkl * val;
                }
            }
        }
    }
    h
}

/// Smallest positive root of `a t^2 + b t + c = 0`, if any.
fn min_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if a == 0.0 {
        if b < 0.0 && c > 0.0 {
            return Some(-c / b);
        }
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut best: Option<f64> = None;
    for r in [q / a, if q != 0.0 { c / q } else { f64::NAN }] {
        if r.is_finite() && r > 0.0 {
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
    }
    best
}

fn cholesky_with_jitter(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>, SolverError> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let tr: f64 = m.diagonal().iter().sum::<f64>().abs().max(1e-300);
    let side = m.nrows();
    let jit = DMatrix::identity(side, side) * (tr * 1e-14 / side as f64);
    (m + jit)
        .cholesky()
        .map(|ch| ch.l())
        .ok_or(SolverError::Numerical(what))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ConeBlock;

    fn spec(blocks: Vec<ConeBlock>) -> ConeSpec {
        let mut c = ConeSpec::new();
        for b in blocks {
            c.push(b);
        }
        c
    }

    fn pseudo_random(seed: u64, n: usize) -> Vec<f64> {
        let mut state = seed;
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
            })
            .collect()
    }

    /// Builds a strictly interior point of the given cone from a raw vector.
    fn interiorize(cone: &ConeSpec, raw: &[f64]) -> Vec<f64> {
        let mut v = raw.to_vec();
        let mut off = 0;
        for b in cone.blocks() {
            match *b {
                ConeBlock::Free(d) => off += d,
                ConeBlock::NonNeg(d) => {
                    for i in 0..d {
                        v[off + i] = v[off + i].abs() + 0.5;
                    }
                    off += d;
                }
                ConeBlock::SecondOrder(d) => {
                    let norm: f64 = v[off + 1..off + d].iter().map(|x| x * x).sum::<f64>().sqrt();
                    v[off] = norm + 0.5 + v[off].abs();
                    off += d;
                }
                ConeBlock::Psd(s) => {
                    let len = svec_len(s);
                    let m = smat(&v[off..off + len], s);
                    let mut mm = vec![0.0; s * s];
                    // M M' + I is strictly PD.
                    for i in 0..s {
                        for j in 0..s {
                            let mut acc = if i == j { 1.0 } else { 0.0 };
                            for k in 0..s {
                                acc += m[i * s + k] * m[j * s + k];
                            }
                            mm[i * s + j] = acc;
                        }
                    }
                    let sv = svec(&mm, s);
                    v[off..off + len].copy_from_slice(&sv);
                    off += len;
                }
            }
        }
        v
    }

    #[test]
    fn nt_identity_winv_x_equals_w_s() {
        let cone = spec(vec![
            ConeBlock::NonNeg(3),
            ConeBlock::SecondOrder(4),
            ConeBlock::Psd(3),
        ]);
        let n = cone.total_dim();
        let x = interiorize(&cone, &pseudo_random(7, n));
        let s = interiorize(&cone, &pseudo_random(13, n));
        let nt = NtScaling::compute(&cone, &x, &s).unwrap();
        let mut lx = vec![0.0; n];
        let mut ls = vec![0.0; n];
        nt.scale_x(&x, &mut lx);
        nt.scale_s(&s, &mut ls);
        let mut lam = vec![0.0; n];
        nt.lambda(&mut lam);
        for i in 0..n {
            assert!(
                (lx[i] - ls[i]).abs() < 1e-9 * (1.0 + lx[i].abs()),
                "i={i}: {} vs {}",
                lx[i],
                ls[i]
            );
            assert!((lx[i] - lam[i]).abs() < 1e-9 * (1.0 + lam[i].abs()));
        }
    }

    #[test]
    fn apply_h_matches_dense_h() {
        let cone = spec(vec![ConeBlock::SecondOrder(3), ConeBlock::Psd(3)]);
        let n = cone.total_dim();
        let x = interiorize(&cone, &pseudo_random(21, n));
        let s = interiorize(&cone, &pseudo_random(33, n));
        let nt = NtScaling::compute(&cone, &x, &s).unwrap();
        let u = pseudo_random(5, n);
        let mut hu = vec![0.0; n];
        nt.apply_h(&u, &mut hu);
        let offs = cone.offsets();
        for (bi, blk) in cone.blocks().iter().enumerate() {
            let len = blk.veclen();
            let h = nt.dense_h(bi);
            for i in 0..len {
                let mut acc = 0.0;
                for j in 0..len {
                    acc += h[i * len + j] * u[offs[bi] + j];
                }
                assert!(
                    (acc - hu[offs[bi] + i]).abs() < 1e-9 * (1.0 + acc.abs()),
                    "block {bi} entry {i}: {acc} vs {}",
                    hu[offs[bi] + i]
                );
            }
        }
    }

    #[test]
    fn apply_hinv_inverts_apply_h() {
        let cone = spec(vec![
            ConeBlock::NonNeg(2),
            ConeBlock::SecondOrder(4),
            ConeBlock::Psd(3),
        ]);
        let n = cone.total_dim();
        let x = interiorize(&cone, &pseudo_random(17, n));
        let s = interiorize(&cone, &pseudo_random(29, n));
        let nt = NtScaling::compute(&cone, &x, &s).unwrap();
        let u = pseudo_random(41, n);
        let mut hu = vec![0.0; n];
        nt.apply_h(&u, &mut hu);
        let mut back = vec![0.0; n];
        nt.apply_hinv(&hu, &mut back);
        for i in 0..n {
            assert!(
                (back[i] - u[i]).abs() < 1e-9 * (1.0 + u[i].abs()),
                "i={i}: {} vs {}",
                back[i],
                u[i]
            );
        }
        // dense_hinv agrees with the operator form.
        let offs = cone.offsets();
        for (bi, blk) in cone.blocks().iter().enumerate() {
            if matches!(blk, ConeBlock::NonNeg(_)) {
                continue;
            }
            let len = blk.veclen();
            let h = nt.dense_hinv(bi);
            let mut hinv_u = vec![0.0; n];
            nt.apply_hinv(&u, &mut hinv_u);
            for i in 0..len {
                let mut acc = 0.0;
                for j in 0..len {
                    acc += h[i * len + j] * u[offs[bi] + j];
                }
                assert!(
                    (acc - hinv_u[offs[bi] + i]).abs() < 1e-9 * (1.0 + acc.abs()),
                    "block {bi} entry {i}"
                );
            }
        }
    }

    #[test]
    fn jordan_div_inverts_product() {
        let cone = spec(vec![
            ConeBlock::NonNeg(2),
            ConeBlock::SecondOrder(3),
            ConeBlock::Psd(2),
        ]);
        let n = cone.total_dim();
        let x = interiorize(&cone, &pseudo_random(3, n));
        let s = interiorize(&cone, &pseudo_random(9, n));
        let nt = NtScaling::compute(&cone, &x, &s).unwrap();
        let d = pseudo_random(11, n);
        let mut u = vec![0.0; n];
        nt.jordan_div_lambda(&d, &mut u);
        let mut lam = vec![0.0; n];
        nt.lambda(&mut lam);
        let mut back = vec![0.0; n];
        nt.jordan_prod(&lam, &u, &mut back);
        for i in 0..n {
            assert!(
                (back[i] - d[i]).abs() < 1e-9 * (1.0 + d[i].abs()),
                "i={i}: {} vs {}",
                back[i],
                d[i]
            );
        }
    }
}
