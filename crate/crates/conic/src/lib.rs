//! Linear conic programming over products of free, nonnegative, second-order
//! and positive semidefinite cones.
//!
//! Problems are stated in the standard equality form
//!
//! ```text
//! minimize    c'x
//! subject to  A x = b,   x in K
//! ```
//!
//! where `K` is an ordered product of cone blocks. PSD blocks are handled in
//! scaled symmetric vectorization (`svec`), so the Euclidean inner product of
//! two vectorized matrices equals the trace inner product of the matrices.
//!
//! The solver ([`solve`]) is a homogeneous self-dual path-following method
//! with Nesterov-Todd scaling and a Mehrotra predictor-corrector step; see
//! [`ipm`] for details. Problems can be serialized to a line-oriented text
//! format ([`ConicProgram::dump`]) for cross-validation against external
//! solvers.

mod dump;
mod ipm;
mod linalg;
mod scaling;

pub use dump::ParseError;
pub use ipm::solve;

use thiserror::Error;

/// One cone block in a [`ConeSpec`].
///
/// A `Psd(s)` block occupies `s*(s+1)/2` consecutive entries of the variable
/// vector, holding the scaled upper triangle of an `s x s` symmetric matrix
/// (see [`svec`]). A `SecondOrder(d)` block has layout `(t, u)` with
/// `t >= ||u||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    Free(usize),
    NonNeg(usize),
    SecondOrder(usize),
    Psd(usize),
}

impl ConeBlock {
    /// Number of scalar variables the block occupies.
    pub fn veclen(&self) -> usize {
        match *self {
            ConeBlock::Free(d) | ConeBlock::NonNeg(d) | ConeBlock::SecondOrder(d) => d,
            ConeBlock::Psd(s) => svec_len(s),
        }
    }

    /// Barrier degree of the block (0 for free variables).
    pub fn barrier_degree(&self) -> usize {
        match *self {
            ConeBlock::Free(_) => 0,
            ConeBlock::NonNeg(d) => d,
            ConeBlock::SecondOrder(_) => 1,
            ConeBlock::Psd(s) => s,
        }
    }
}

/// Ordered list of cone blocks describing the cone `K`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConeSpec {
    blocks: Vec<ConeBlock>,
}

impl ConeSpec {
    pub fn new() -> Self {
        Self { blocks: Vec::new() }
    }

    pub fn push(&mut self, block: ConeBlock) {
        self.blocks.push(block);
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    /// Total number of scalar variables.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.veclen()).sum()
    }

    /// Offsets of each block into the variable vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.blocks.len());
        let mut o = 0;
        for b in &self.blocks {
            offs.push(o);
            o += b.veclen();
        }
        offs
    }

    pub fn is_valid(&self) -> bool {
        self.blocks.iter().all(|b| match *b {
            ConeBlock::Free(d) | ConeBlock::NonNeg(d) => d >= 1,
            ConeBlock::SecondOrder(d) => d >= 2,
            ConeBlock::Psd(s) => s >= 1,
        })
    }
}

/// Length of the scaled vectorization of an `s x s` symmetric matrix.
pub fn svec_len(s: usize) -> usize {
    s * (s + 1) / 2
}

/// Position of entry `(i, j)` (any order) of a side-`s` symmetric matrix in
/// its scaled vectorization. Entries are ordered column by column over the
/// upper triangle: `(0,0), (0,1), (1,1), (0,2), ...`.
pub fn svec_index(i: usize, j: usize, _side: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Scaled vectorization of a symmetric matrix given as a dense row-major
/// `side x side` slice. Off-diagonal entries are multiplied by sqrt(2) so the
/// map is an isometry for the trace inner product.
pub fn svec(mat: &[f64], side: usize) -> Vec<f64> {
    let mut v = vec![0.0; svec_len(side)];
    let rt2 = std::f64::consts::SQRT_2;
    for j in 0..side {
        for i in 0..=j {
            let m = mat[i * side + j];
            v[svec_index(i, j, side)] = if i == j { m } else { rt2 * m };
        }
    }
    v
}

/// Inverse of [`svec`]: reconstructs the dense row-major symmetric matrix.
pub fn smat(v: &[f64], side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    let inv_rt2 = 1.0 / std::f64::consts::SQRT_2;
    for j in 0..side {
        for i in 0..=j {
            let val = v[svec_index(i, j, side)];
            let val = if i == j { val } else { val * inv_rt2 };
            m[i * side + j] = val;
            m[j * side + i] = val;
        }
    }
    m
}

/// A linear conic program `min c'x  s.t.  A x = b, x in K`.
///
/// `A` is stored as sparse triplets; duplicate entries are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    /// Triplets `(row, col, value)` of the constraint matrix.
    pub a_triplets: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cone: ConeSpec,
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("cone specification is invalid (zero-dimensional or undersized block)")]
    InvalidCone,
    #[error("objective length {got} does not match cone dimension {want}")]
    ObjectiveDim { got: usize, want: usize },
    #[error("triplet ({row}, {col}) out of bounds for {rows} rows x {cols} cols")]
    TripletOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("non-finite value in problem data")]
    NonFinite,
}

impl ConicProgram {
    pub fn new(
        c: Vec<f64>,
        a_triplets: Vec<(usize, usize, f64)>,
        b: Vec<f64>,
        cone: ConeSpec,
    ) -> Result<Self, ProgramError> {
        let prog = Self {
            c,
            a_triplets,
            b,
            cone,
        };
        prog.validate()?;
        Ok(prog)
    }

    pub fn num_vars(&self) -> usize {
        self.cone.total_dim()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if !self.cone.is_valid() {
            return Err(ProgramError::InvalidCone);
        }
        let n = self.cone.total_dim();
        let m = self.b.len();
        if self.c.len() != n {
            return Err(ProgramError::ObjectiveDim {
                got: self.c.len(),
                want: n,
            });
        }
        for &(r, col, v) in &self.a_triplets {
            if r >= m || col >= n {
                return Err(ProgramError::TripletOutOfBounds {
                    row: r,
                    col,
                    rows: m,
                    cols: n,
                });
            }
            if !v.is_finite() {
                return Err(ProgramError::NonFinite);
            }
        }
        if self.c.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(ProgramError::NonFinite);
        }
        Ok(())
    }

    /// Removes structurally redundant rows: all-zero rows with zero right-hand
    /// side, and exact duplicates of an earlier row. Remaining near-dependence
    /// is absorbed by the solver's static regularization.
    pub fn presolved(&self) -> ConicProgram {
        let m = self.b.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for &(r, c, v) in &self.a_triplets {
            if v != 0.0 {
                rows[r].push((c, v));
            }
        }
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            *row = merged;
        }
        let mut keep = Vec::with_capacity(m);
        let mut seen: Vec<usize> = Vec::new();
        for r in 0..m {
            if rows[r].is_empty() && self.b[r] == 0.0 {
                continue;
            }
            let dup = seen.iter().any(|&p| {
                rows[p] == rows[r] && self.b[p].to_bits() == self.b[r].to_bits()
            });
            if !dup {
                seen.push(r);
                keep.push(r);
            }
        }
        let mut remap = vec![usize::MAX; m];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut triplets = Vec::new();
        for (old, row) in rows.iter().enumerate() {
            let new = remap[old];
            if new == usize::MAX {
                continue;
            }
            for &(c, v) in row {
                triplets.push((new, c, v));
            }
        }
        ConicProgram {
            c: self.c.clone(),
            a_triplets: triplets,
            b: keep.iter().map(|&r| self.b[r]).collect(),
            cone: self.cone.clone(),
        }
    }
}

/// Interior-point solver parameters.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    /// Primal/dual feasibility tolerance.
    pub feas_tol: f64,
    /// Iteration limit.
    pub max_iter: usize,
    /// Static regularization added to the KKT system.
    pub static_reg: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            static_reg: 1e-9,
        }
    }
}

impl SolverSettings {
    pub fn is_valid(&self) -> bool {
        self.gap_tol > 0.0 && self.feas_tol > 0.0 && self.max_iter > 0 && self.static_reg > 0.0
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    SlowProgress,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
            SolveStatus::SlowProgress => "slow_progress",
            SolveStatus::IterationLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

/// Primal-dual solution returned by [`solve`].
///
/// For `Optimal` the relative gap and residual norms are below the solver
/// tolerances and `x` lies in the cone interior up to tolerance. For the
/// infeasible statuses, `x` (resp. `y_dual`, `s`) carries the certificate ray.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y_dual: Vec<f64>,
    pub s: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub rel_gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid program: {0}")]
    Program(#[from] ProgramError),
    #[error("invalid solver settings (all tolerances must be positive)")]
    Settings,
    #[error("numerical breakdown in {0}")]
    Numerical(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_isometry_random() {
        // <svec(M), svec(N)> == trace(M N) for random symmetric matrices.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for side in 1..=20 {
            let mut m = vec![0.0; side * side];
            let mut n = vec![0.0; side * side];
            for j in 0..side {
                for i in 0..=j {
                    let a = next();
                    let b = next();
                    m[i * side + j] = a;
                    m[j * side + i] = a;
                    n[i * side + j] = b;
                    n[j * side + i] = b;
                }
            }
            let vm = svec(&m, side);
            let vn = svec(&n, side);
            let dot: f64 = vm.iter().zip(&vn).map(|(a, b)| a * b).sum();
            let mut tr = 0.0;
            for i in 0..side {
                for k in 0..side {
                    tr += m[i * side + k] * n[k * side + i];
                }
            }
            assert!(
                (dot - tr).abs() <= 1e-14 * (1.0 + tr.abs()),
                "side {side}: {dot} vs {tr}"
            );
        }
    }

    #[test]
    fn svec_smat_roundtrip() {
        let side = 5;
        let mut m = vec![0.0; side * side];
        for j in 0..side {
            for i in 0..=j {
                let v = (i * 7 + j * 3) as f64 / 11.0 - 1.0;
                m[i * side + j] = v;
                m[j * side + i] = v;
            }
        }
        let back = smat(&svec(&m, side), side);
        for (a, b) in m.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn presolve_removes_duplicate_and_zero_rows() {
        let mut cone = ConeSpec::new();
        cone.push(ConeBlock::NonNeg(2));
        let prog = ConicProgram::new(
            vec![1.0, 1.0],
            vec![(0, 0, 1.0), (1, 0, 1.0), (3, 1, 2.0), (3, 1, -2.0)],
            vec![1.0, 1.0, 0.0, 0.0],
            cone,
        )
        .unwrap();
        let p = prog.presolved();
        assert_eq!(p.b, vec![1.0]);
        assert_eq!(p.a_triplets, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn validate_rejects_bad_dims() {
        let mut cone = ConeSpec::new();
        cone.push(ConeBlock::NonNeg(2));
        assert!(ConicProgram::new(vec![1.0], vec![], vec![], cone.clone()).is_err());
        assert!(ConicProgram::new(
            vec![1.0, 2.0],
            vec![(0, 5, 1.0)],
            vec![0.0],
            cone
        )
        .is_err());
    }
}
