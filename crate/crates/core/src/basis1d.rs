//! One-dimensional orthonormal polynomial families for the supported
//! reference measures.
//!
//! Each family is a probability measure on the line together with its
//! orthonormal polynomials `b_0, b_1, ...` (so `b_0 = 1` and
//! `int b_i b_j dmu = delta_ij`):
//!
//! * `GaussianStd` - standard normal, normalized probabilists' Hermite;
//! * `ArcsineUnit` - `dx / (pi sqrt(1-x^2))` on `[-1, 1]`, Chebyshev with
//!   `b_0 = T_0`, `b_k = sqrt(2) T_k`;
//! * `UniformUnit` - uniform probability on `[-1, 1]`, normalized Legendre.
//!
//! All three satisfy a symmetric three-term recurrence
//! `x b_k = a_{k+1} b_{k+1} + a_k b_{k-1}` (no diagonal term). Gauss rules
//! come from the eigendecomposition of the Jacobi matrix and serve as the
//! independent integration oracle throughout the crate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use thiserror::Error;

/// Per-coordinate degrees beyond this are outside the supported range of the
/// double-precision recurrences.
pub const MAX_COORD_DEGREE: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureFamily {
    GaussianStd,
    ArcsineUnit,
    UniformUnit,
}

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("eigendecomposition of the {size}x{size} Jacobi matrix failed")]
    Eigen { size: usize },
    #[error("degree {got} exceeds the per-coordinate cap {cap}")]
    DegreeOverflow { got: usize, cap: usize },
}

impl MeasureFamily {
    pub const ALL: [MeasureFamily; 3] = [
        MeasureFamily::GaussianStd,
        MeasureFamily::ArcsineUnit,
        MeasureFamily::UniformUnit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MeasureFamily::GaussianStd => "gaussian",
            MeasureFamily::ArcsineUnit => "arcsine",
            MeasureFamily::UniformUnit => "uniform",
        }
    }

    /// Off-diagonal recurrence coefficient `a_k` (`k >= 1`) in
    /// `x b_k = a_{k+1} b_{k+1} + a_k b_{k-1}`.
    pub fn recurrence_offdiag(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self {
            MeasureFamily::GaussianStd => (k as f64).sqrt(),
            MeasureFamily::ArcsineUnit => {
                if k == 1 {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    0.5
                }
            }
            MeasureFamily::UniformUnit => {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            }
        }
    }

    /// Values `b_0(x) ... b_{k_max}(x)` by forward recurrence.
    pub fn eval_basis(&self, k_max: usize, x: f64) -> Vec<f64> {
        let mut vals = Vec::with_capacity(k_max + 1);
        vals.push(1.0);
        if k_max == 0 {
            return vals;
        }
        vals.push(x / self.recurrence_offdiag(1));
        for k in 1..k_max {
            let next = (x * vals[k] - self.recurrence_offdiag(k) * vals[k - 1])
                / self.recurrence_offdiag(k + 1);
            vals.push(next);
        }
        vals
    }

    /// Values and derivatives of `b_0 .. b_{k_max}` at `x`; the derivative
    /// recurrence follows by differentiating the three-term recurrence.
    fn eval_basis_with_derivs(&self, k_max: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let vals = self.eval_basis(k_max, x);
        let mut der = vec![0.0; k_max + 1];
        if k_max >= 1 {
            der[1] = 1.0 / self.recurrence_offdiag(1);
        }
        for k in 1..k_max {
            der[k + 1] = (x * der[k] + vals[k] - self.recurrence_offdiag(k) * der[k - 1])
                / self.recurrence_offdiag(k + 1);
        }
        (vals, der)
    }

    /// The `m`-node Gauss rule for the family, exact up to degree `2m - 1`.
    pub fn gauss_rule(&self, m: usize) -> Result<Quadrature, BasisError> {
        assert!(m >= 1);
        cached_rule(*self, m)
    }

    /// Coefficients `c_k` of `b_i b_j = sum_k c_k b_k` (dense over
    /// `k = 0..=i+j`). Chebyshev products use the exact closed form; the
    /// other families use a degree-exact Gauss rule, which avoids the
    /// factorial growth of the combinatorial Hermite formula. Coefficients
    /// below 1e-13 are clamped to zero.
    pub fn linearize_product(&self, i: usize, j: usize) -> Arc<Vec<f64>> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let key = (*self, i, j);
        let cache = linearization_cache();
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let coefs = Arc::new(self.linearize_uncached(i, j));
        cache.lock().unwrap().insert(key, coefs.clone());
        coefs
    }

    fn linearize_uncached(&self, i: usize, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; i + j + 1];
        match self {
            MeasureFamily::ArcsineUnit => {
                // 2 T_i T_j = T_{i+j} + T_{|i-j|} with b_0 = T_0,
                // b_k = sqrt(2) T_k.
                let rt2 = std::f64::consts::SQRT_2;
                if i == 0 {
                    c[j] = 1.0;
                } else if i == j {
                    c[0] = 1.0;
                    c[2 * i] = 1.0 / rt2;
                } else {
                    c[i + j] = 1.0 / rt2;
                    c[j - i] = 1.0 / rt2;
                }
            }
            _ => {
                let rule = self
                    .gauss_rule(i + j + 1)
                    .expect("Jacobi eigensolve within the degree cap");
                for (node_idx, &x) in rule.nodes.iter().enumerate() {
                    let b = self.eval_basis(i + j, x);
                    let w = rule.weights[node_idx] * b[i] * b[j];
                    for (k, ck) in c.iter_mut().enumerate() {
                        *ck += w * b[k];
                    }
                }
                for ck in c.iter_mut() {
                    if ck.abs() < 1e-13 {
                        *ck = 0.0;
                    }
                }
            }
        }
        c
    }

    /// Known even moments `int x^{2k} dmu`, used as quadrature oracles.
    pub fn even_moment(&self, k: usize) -> f64 {
        match self {
            // (2k-1)!!
            MeasureFamily::GaussianStd => {
                let mut p = 1.0;
                let mut f = 1.0;
                for _ in 0..k {
                    p *= f;
                    f += 2.0;
                }
                p
            }
            // binom(2k, k) / 4^k
            MeasureFamily::ArcsineUnit => {
                let mut p = 1.0;
                for i in 0..k {
                    p *= (2 * i + 1) as f64 / (2 * i + 2) as f64;
                }
                p
            }
            // 1 / (2k + 1)
            MeasureFamily::UniformUnit => 1.0 / (2 * k + 1) as f64,
        }
    }
}

/// Gauss quadrature rule for a reference measure.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Polynomials up to this degree are integrated exactly.
    pub exactness: usize,
}

impl Quadrature {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

type RuleCache = Mutex<HashMap<(MeasureFamily, usize), Arc<Quadrature>>>;
type LinCache = Mutex<HashMap<(MeasureFamily, usize, usize), Arc<Vec<f64>>>>;

fn rule_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn linearization_cache() -> &'static LinCache {
    static CACHE: OnceLock<LinCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached_rule(family: MeasureFamily, m: usize) -> Result<Quadrature, BasisError> {
    if let Some(hit) = rule_cache().lock().unwrap().get(&(family, m)) {
        return Ok((**hit).clone());
    }
    let rule = golub_welsch(family, m)?;
    rule_cache()
        .lock()
        .unwrap()
        .insert((family, m), Arc::new(rule.clone()));
    Ok(rule)
}

/// Nodes start as eigenvalues of the symmetric tridiagonal Jacobi matrix and
/// are polished to machine precision by Newton iteration on `b_m(x) = 0`;
/// weights are the Christoffel numbers `1 / sum_{k<m} b_k(x_i)^2` (the total
/// mass is 1 for probability measures).
fn golub_welsch(family: MeasureFamily, m: usize) -> Result<Quadrature, BasisError> {
    let mut jac = DMatrix::zeros(m, m);
    for k in 1..m {
        let a = family.recurrence_offdiag(k);
        jac[(k - 1, k)] = a;
        jac[(k, k - 1)] = a;
    }
    let eig = jac
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(BasisError::Eigen { size: m })?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (vals, der) = family.eval_basis_with_derivs(m, *x);
            if der[m] == 0.0 {
                break;
            }
            let step = vals[m] / der[m];
            *x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        let vals = family.eval_basis(m - 1, *x);
        let cd: f64 = vals.iter().map(|v| v * v).sum();
        weights.push(1.0 / cd);
    }
    Ok(Quadrature {
        nodes,
        weights,
        exactness: 2 * m - 1,
    })
}
