//! Christoffel-Darboux polynomials and Bernstein-Markov constants.
//!
//! A Bernstein-Markov constant `c_{2d}` bounds the sup norm of any
//! polynomial of degree at most `2d` on the certification domain by
//! `c_{2d}` times its `L^2(mu)` norm. Certified constants come from closed
//! forms (arcsine on the unit interval or square, point domains); other
//! compact domains only get a grid estimate, which is never used for
//! certification without an explicit override.

use crate::basis1d::MeasureFamily;
use crate::poly::multi_indices;

/// Domain on which bounds are certified.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// The tensor cube `[-1, 1]^n`.
    UnitBox,
    /// A finite, nonempty list of points.
    Point(Vec<Vec<f64>>),
    /// No Bernstein-Markov constant exists.
    Unbounded,
}

/// Result of a Bernstein-Markov constant query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BmConstant {
    /// Exact value, valid for certification.
    Exact(f64),
    /// Grid supremum: a lower estimate of the true constant, flagged and
    /// not used for certification unless explicitly overridden.
    GridEstimate(f64),
    /// The domain admits no finite constant.
    NoConstant,
}

impl BmConstant {
    pub fn certified(&self) -> Option<f64> {
        match self {
            BmConstant::Exact(v) => Some(*v),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            BmConstant::Exact(v) | BmConstant::GridEstimate(v) => Some(*v),
            BmConstant::NoConstant => None,
        }
    }
}

/// The degree-`2d` Christoffel-Darboux polynomial
/// `sum_{|alpha| <= 2d} b_alpha(x)^2`.
pub fn cd_polynomial(families: &[MeasureFamily], d: usize, x: &[f64]) -> f64 {
    assert_eq!(families.len(), x.len());
    let n = families.len();
    let two_d = 2 * d;
    let tables: Vec<Vec<f64>> = (0..n)
        .map(|i| families[i].eval_basis(two_d, x[i]))
        .collect();
    multi_indices(n, two_d)
        .iter()
        .map(|a| {
            let mut t = 1.0;
            for i in 0..n {
                t *= tables[i][a.0[i] as usize];
            }
            t * t
        })
        .sum()
}

/// Bernstein-Markov constant at degree `2d` for the given domain and tensor
/// basis.
pub fn bm_constant(domain: &DomainSpec, families: &[MeasureFamily], d: usize) -> BmConstant {
    let n = families.len();
    match domain {
        DomainSpec::Unbounded => BmConstant::NoConstant,
        DomainSpec::Point(points) => {
            assert!(!points.is_empty());
            let sup = points
                .iter()
                .map(|x| cd_polynomial(families, d, x))
                .fold(0.0f64, f64::max);
            BmConstant::Exact(sup.sqrt())
        }
        DomainSpec::UnitBox => {
            let all_arcsine = families
                .iter()
                .all(|f| *f == MeasureFamily::ArcsineUnit);
            if all_arcsine && n == 1 {
                // sup of the CD polynomial on [-1,1] is attained at the
                // endpoints: 1 + 2 * 2d.
                BmConstant::Exact(((4 * d + 1) as f64).sqrt())
            } else if all_arcsine && n == 2 {
                // Cauchy-Schwarz constant over sup norms of the Chebyshev
                // factors with the total-degree index set.
                BmConstant::Exact(((8 * d * d + 4 * d + 1) as f64).sqrt())
            } else {
                BmConstant::GridEstimate(grid_cd_sup(families, d).sqrt())
            }
        }
    }
}

/// Counting identity behind the two-variable arcsine box constant:
/// `sum_{i+j<=2d} alpha_i alpha_j` with `alpha_0 = 1`, `alpha_k = 2`.
pub fn arcsine_box_weight_sum(d: usize) -> usize {
    let two_d = 2 * d;
    let mut total = 0usize;
    for i in 0..=two_d {
        for j in 0..=(two_d - i) {
            let wi = if i == 0 { 1 } else { 2 };
            let wj = if j == 0 { 1 } else { 2 };
            total += wi * wj;
        }
    }
    total
}

/// Grid supremum of the CD polynomial over the unit box: 401 points per
/// axis plus one refinement pass around the argmax.
pub fn grid_cd_sup(families: &[MeasureFamily], d: usize) -> f64 {
    let n = families.len();
    let coarse = 401usize;
    let mut best = f64::NEG_INFINITY;
    let mut best_x = vec![0.0; n];
    let total = coarse.pow(n as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut x = vec![0.0; n];
        for xi in x.iter_mut().rev() {
            let k = idx % coarse;
            idx /= coarse;
            *xi = -1.0 + 2.0 * k as f64 / (coarse - 1) as f64;
        }
        let v = cd_polynomial(families, d, &x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // One refinement pass around the argmax at ten times the resolution.
    let h = 2.0 / (coarse - 1) as f64;
    let fine = 21usize;
    let total = fine.pow(n as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut x = vec![0.0; n];
        for (i, xi) in x.iter_mut().enumerate().rev() {
            let k = idx % fine;
            idx /= fine;
            *xi = (best_x[i] + h * (k as f64 / (fine - 1) as f64 - 0.5)).clamp(-1.0, 1.0);
        }
        let v = cd_polynomial(families, d, &x);
        if v > best {
            best = v;
        }
    }
    best
}

/// Closed-form point constant for the standard normal at the origin:
/// `sqrt(sum_{m<=d} binom(2m, m) / 4^m)`.
pub fn gaussian_origin_constant(d: usize) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for m in 0..=d {
        if m > 0 {
            term *= (2 * m - 1) as f64 / (2 * m) as f64;
        }
        sum += term;
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cd_values() {
        // Hermite at the origin, d = 1: 1 + 0 + 1/2.
        let v = cd_polynomial(&[MeasureFamily::GaussianStd], 1, &[0.0]);
        assert_abs_diff_eq!(v, 1.5, epsilon = 1e-13);
        // Arcsine at 1: 1 + 2 * 2d.
        for d in 0..=6 {
            let v = cd_polynomial(&[MeasureFamily::ArcsineUnit], d, &[1.0]);
            assert_abs_diff_eq!(v, (4 * d + 1) as f64, epsilon = 1e-10);
        }
        // d = 0 is identically 1.
        for fam in MeasureFamily::ALL {
            assert_abs_diff_eq!(cd_polynomial(&[fam], 0, &[0.37]), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bm_constant_examples() {
        let c = bm_constant(&DomainSpec::UnitBox, &[MeasureFamily::ArcsineUnit], 1);
        assert_eq!(c, BmConstant::Exact(5.0f64.sqrt()));
        let c = bm_constant(
            &DomainSpec::UnitBox,
            &[MeasureFamily::ArcsineUnit, MeasureFamily::ArcsineUnit],
            2,
        );
        assert_eq!(c, BmConstant::Exact(41.0f64.sqrt()));
        let c = bm_constant(
            &DomainSpec::Point(vec![vec![0.0]]),
            &[MeasureFamily::GaussianStd],
            2,
        );
        let expect = 1.875f64.sqrt();
        assert_abs_diff_eq!(c.certified().unwrap(), expect, epsilon = 1e-13);
        assert_abs_diff_eq!(gaussian_origin_constant(2), expect, epsilon = 1e-13);
        assert_eq!(
            bm_constant(&DomainSpec::Unbounded, &[MeasureFamily::GaussianStd], 3),
            BmConstant::NoConstant
        );
    }

    #[test]
    fn closed_forms_match_grid_evaluation() {
        // 1-D arcsine: closed form equals the direct CD supremum.
        for d in 1..=20usize {
            let closed = ((4 * d + 1) as f64).sqrt();
            let grid = grid_cd_sup(&[MeasureFamily::ArcsineUnit], d).sqrt();
            assert!(
                (closed - grid).abs() <= 1e-10 * closed,
                "d={d}: {closed} vs {grid}"
            );
        }
    }

    #[test]
    fn counting_identity() {
        for d in 0..=50usize {
            assert_eq!(arcsine_box_weight_sum(d), 8 * d * d + 4 * d + 1, "d={d}");
        }
    }

    #[test]
    fn constant_nondecreasing_in_degree() {
        let fams = [MeasureFamily::ArcsineUnit, MeasureFamily::ArcsineUnit];
        let mut last = 0.0;
        for d in 0..=20 {
            let c = bm_constant(&DomainSpec::UnitBox, &fams, d)
                .certified()
                .unwrap();
            assert!(c >= last);
            last = c;
        }
        let mut last = 0.0;
        for d in 0..=20 {
            let c = bm_constant(
                &DomainSpec::Point(vec![vec![0.0]]),
                &[MeasureFamily::GaussianStd],
                d,
            )
            .certified()
            .unwrap();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn bm_inequality_spot_check() {
        // |r(x)| <= c_{2d} ||r|| on a fine grid for random Chebyshev series.
        let fam = [MeasureFamily::ArcsineUnit];
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..100 {
            let d = 1 + trial % 5;
            let two_d = 2 * d;
            let coeffs: Vec<f64> = (0..=two_d).map(|_| rnd()).collect();
            let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            let c2d = bm_constant(&DomainSpec::UnitBox, &fam, d).certified().unwrap();
            let mut sup = 0.0f64;
            for k in 0..=2000 {
                let x = -1.0 + k as f64 / 1000.0;
                let b = MeasureFamily::ArcsineUnit.eval_basis(two_d, x);
                let v: f64 = coeffs.iter().zip(&b).map(|(c, bv)| c * bv).sum();
                sup = sup.max(v.abs());
            }
            assert!(
                sup <= c2d * norm + 1e-9,
                "trial {trial}: sup {sup} > {c2d} * {norm}"
            );
        }
    }
}
