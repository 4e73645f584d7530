//! Multivariate polynomials in monomial form and over tensor-product
//! orthonormal bases.
//!
//! An [`OrthoPoly`] stores coefficients over the tensor basis
//! `b_alpha(x) = prod_i b_{alpha_i}(x_i)` of a per-coordinate family of
//! reference measures. Because the basis is orthonormal for the product
//! measure, the `L^2(mu)` norm of a polynomial is the Euclidean norm of its
//! coefficient vector, and truncating coefficients beyond total degree `d`
//! is the orthogonal projection onto polynomials of degree at most `d`.
//!
//! Conversions between the monomial and orthonormal representations run
//! coordinate-wise through the three-term recurrence (synthesis rather than
//! explicit connection matrices), which stays well conditioned at the
//! degrees supported here.

use std::collections::BTreeMap;

use crate::basis1d::{BasisError, MeasureFamily, MAX_COORD_DEGREE};

/// Exponent vector of a monomial. The total order is graded lexicographic:
/// lower total degree first; within a degree, exponent vectors compare
/// lexicographically with the larger leading exponent first, so for `n = 2`,
/// degree 2 enumerates as `x1^2, x1 x2, x2^2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

/// All multi-indices with `n` variables and total degree at most `max_deg`,
/// in the graded-lexicographic order.
pub fn multi_indices(n: usize, max_deg: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(n_indices(n, max_deg));
    let mut cur = vec![0u32; n];
    for deg in 0..=max_deg {
        emit(n, 0, deg, &mut cur, &mut out);
    }
    out
}

fn emit(n: usize, pos: usize, remaining: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == n {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u32;
        emit(n, pos + 1, remaining - e, cur, out);
    }
}

/// `binom(n + d, n)`, the number of multi-indices of degree at most `d`.
pub fn n_indices(n: usize, d: usize) -> usize {
    let mut num = 1usize;
    for i in 1..=n {
        num = num * (d + i) / i;
    }
    num
}

/// Polynomial in monomial form: a sparse map from exponent vectors to
/// coefficients. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialPoly {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl MonomialPoly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex(vec![0; n]), c);
        p
    }

    /// The coordinate monomial `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut exp = vec![0u32; n];
        exp[i] = 1;
        let mut p = Self::zero(n);
        p.add_term(MultiIndex(exp), 1.0);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut p = Self::zero(n);
        for (exp, c) in terms {
            assert_eq!(exp.len(), n);
            p.add_term(MultiIndex(exp), c);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &MultiIndex) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v * c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut p = self.clone();
        for (e, v) in &other.terms {
            p.add_term(e.clone(), *v);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut p = Self::zero(self.n);
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                let exp: Vec<u32> = ea.0.iter().zip(&eb.0).map(|(a, b)| a + b).collect();
                p.add_term(MultiIndex(exp), va * vb);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = *c;
                for (i, &p) in e.0.iter().enumerate() {
                    t *= x[i].powi(p as i32);
                }
                t
            })
            .sum()
    }

    /// Drops all monomials of total degree greater than `d`. This is plain
    /// coefficient truncation in the monomial representation, not the
    /// `L^2(mu)` projection (see [`OrthoPoly::project`] for that).
    pub fn truncate_deg(&self, d: usize) -> Self {
        let mut p = Self::zero(self.n);
        for (e, v) in &self.terms {
            if e.degree() <= d {
                p.add_term(e.clone(), *v);
            }
        }
        p
    }

    /// Composes with the affine map `x_i -> a_i x_i + c_i`.
    pub fn pullback(&self, map: &AffineMap) -> Self {
        assert_eq!(map.dim(), self.n);
        let mut out = Self::zero(self.n);
        for (e, &coef) in &self.terms {
            // Expand prod_i (a_i x_i + c_i)^{e_i} by repeated multiplication.
            let mut acc = Self::constant(self.n, coef);
            for (i, &pow) in e.0.iter().enumerate() {
                let lin = {
                    let mut l = Self::constant(self.n, map.shift[i]);
                    l.add_term(
                        MultiIndex({
                            let mut v = vec![0u32; self.n];
                            v[i] = 1;
                            v
                        }),
                        map.scale[i],
                    );
                    l
                };
                for _ in 0..pow {
                    acc = acc.mul(&lin);
                }
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn max_coord_degree(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|e| e.0.iter())
            .map(|&v| v as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Invertible per-coordinate affine change of variables
/// `x_i -> a_i x_i + c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl AffineMap {
    pub fn new(scale: Vec<f64>, shift: Vec<f64>) -> Self {
        assert_eq!(scale.len(), shift.len());
        assert!(scale.iter().all(|&a| a != 0.0));
        Self { scale, shift }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            scale: vec![1.0; n],
            shift: vec![0.0; n],
        }
    }

    /// Map sending `[-1, 1]` onto `[lo_i, hi_i]` per coordinate.
    pub fn unit_box_to(bounds: &[(f64, f64)]) -> Self {
        let scale = bounds.iter().map(|&(lo, hi)| (hi - lo) / 2.0).collect();
        let shift = bounds.iter().map(|&(lo, hi)| (hi + lo) / 2.0).collect();
        Self::new(scale, shift)
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| self.scale[i] * v + self.shift[i])
            .collect()
    }

    pub fn inverse(&self) -> Self {
        let scale: Vec<f64> = self.scale.iter().map(|&a| 1.0 / a).collect();
        let shift = self
            .shift
            .iter()
            .zip(&self.scale)
            .map(|(&c, &a)| -c / a)
            .collect();
        Self { scale, shift }
    }
}

/// Polynomial stored as coefficients over the tensor orthonormal basis of a
/// per-coordinate product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPoly {
    n: usize,
    families: Vec<MeasureFamily>,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl OrthoPoly {
    pub fn zero(families: &[MeasureFamily]) -> Self {
        Self {
            n: families.len(),
            families: families.to_vec(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn basis_element(families: &[MeasureFamily], alpha: MultiIndex) -> Self {
        let mut p = Self::zero(families);
        p.coeffs.insert(alpha, 1.0);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn families(&self) -> &[MeasureFamily] {
        &self.families
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn add_coeff(&mut self, alpha: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(alpha) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.families, other.families);
        let mut p = self.clone();
        for (a, c) in &other.coeffs {
            p.add_coeff(a.clone(), *c);
        }
        p
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut p = Self::zero(&self.families);
        for (a, v) in &self.coeffs {
            p.add_coeff(a.clone(), v * c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// The `L^2(mu)` norm: the Euclidean norm of the coefficient vector.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Orthogonal projection onto polynomials of total degree at most `d`:
    /// coefficients with `|alpha| > d` are removed, the rest are unchanged.
    pub fn project(&self, d: usize) -> Self {
        let mut p = Self::zero(&self.families);
        for (a, c) in &self.coeffs {
            if a.degree() <= d {
                p.coeffs.insert(a.clone(), *c);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut maxdeg = vec![0usize; self.n];
        for a in self.coeffs.keys() {
            for i in 0..self.n {
                maxdeg[i] = maxdeg[i].max(a.0[i] as usize);
            }
        }
        let tables: Vec<Vec<f64>> = (0..self.n)
            .map(|i| self.families[i].eval_basis(maxdeg[i], x[i]))
            .collect();
        self.coeffs
            .iter()
            .map(|(a, c)| {
                let mut t = *c;
                for i in 0..self.n {
                    t *= tables[i][a.0[i] as usize];
                }
                t
            })
            .sum()
    }

    /// Exact product via per-coordinate linearization of basis products.
    pub fn multiply(&self, other: &Self) -> Result<Self, BasisError> {
        assert_eq!(self.families, other.families);
        let mut out = Self::zero(&self.families);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                for i in 0..self.n {
                    let deg = a.0[i] as usize + b.0[i] as usize;
                    if deg > MAX_COORD_DEGREE {
                        return Err(BasisError::DegreeOverflow {
                            got: deg,
                            cap: MAX_COORD_DEGREE,
                        });
                    }
                }
                let tables: Vec<_> = (0..self.n)
                    .map(|i| {
                        self.families[i].linearize_product(a.0[i] as usize, b.0[i] as usize)
                    })
                    .collect();
                let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), ca * cb)];
                for table in &tables {
                    let mut next = Vec::with_capacity(partial.len() * 2);
                    for (prefix, coef) in &partial {
                        for (k, &ck) in table.iter().enumerate() {
                            if ck == 0.0 {
                                continue;
                            }
                            let mut pre = prefix.clone();
                            pre.push(k as u32);
                            next.push((pre, coef * ck));
                        }
                    }
                    partial = next;
                }
                for (exp, coef) in partial {
                    out.add_coeff(MultiIndex(exp), coef);
                }
            }
        }
        Ok(out)
    }
}

/// Converts a monomial polynomial to the orthonormal representation by
/// coordinate-wise synthesis through the recurrence.
pub fn to_ortho(p: &MonomialPoly, families: &[MeasureFamily]) -> Result<OrthoPoly, BasisError> {
    assert_eq!(families.len(), p.n());
    let cap = p.max_coord_degree();
    if cap > MAX_COORD_DEGREE {
        return Err(BasisError::DegreeOverflow {
            got: cap,
            cap: MAX_COORD_DEGREE,
        });
    }
    let mut out = OrthoPoly::zero(families);
    for (exp, &coef) in p.terms() {
        // 1-D orthonormal coefficients of x^{e_i} per coordinate.
        let tables: Vec<Vec<f64>> = exp
            .0
            .iter()
            .enumerate()
            .map(|(i, &e)| power_coeffs(families[i], e as usize))
            .collect();
        let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), coef)];
        for table in &tables {
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (prefix, c) in &partial {
                for (k, &ck) in table.iter().enumerate() {
                    if ck == 0.0 {
                        continue;
                    }
                    let mut pre = prefix.clone();
                    pre.push(k as u32);
                    next.push((pre, c * ck));
                }
            }
            partial = next;
        }
        for (e, c) in partial {
            out.add_coeff(MultiIndex(e), c);
        }
    }
    Ok(out)
}

/// Expands an orthonormal-basis polynomial back to monomial form.
pub fn from_ortho(p: &OrthoPoly) -> MonomialPoly {
    let n = p.n();
    let mut maxdeg = vec![0usize; n];
    for a in p.coeffs.keys() {
        for i in 0..n {
            maxdeg[i] = maxdeg[i].max(a.0[i] as usize);
        }
    }
    let tables: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| basis_monomial_table(p.families[i], maxdeg[i]))
        .collect();
    let mut out = MonomialPoly::zero(n);
    for (alpha, &coef) in p.coeffs.iter() {
        let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), coef)];
        for i in 0..n {
            let mono = &tables[i][alpha.0[i] as usize];
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (prefix, c) in &partial {
                for (e, &ce) in mono.iter().enumerate() {
                    if ce == 0.0 {
                        continue;
                    }
                    let mut pre = prefix.clone();
                    pre.push(e as u32);
                    next.push((pre, c * ce));
                }
            }
            partial = next;
        }
        for (e, c) in partial {
            out.add_term(MultiIndex(e), c);
        }
    }
    out
}

/// Orthonormal coefficients of `x^k` for one coordinate, by applying the
/// multiply-by-x recurrence `k` times to `b_0`.
fn power_coeffs(family: MeasureFamily, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k + 1];
    v[0] = 1.0;
    let mut deg = 0usize;
    for _ in 0..k {
        let mut next = vec![0.0; k + 1];
        for (j, &c) in v.iter().enumerate().take(deg + 1) {
            if c == 0.0 {
                continue;
            }
            // x b_j = a_{j+1} b_{j+1} + a_j b_{j-1}
            next[j + 1] += c * family.recurrence_offdiag(j + 1);
            if j > 0 {
                next[j - 1] += c * family.recurrence_offdiag(j);
            }
        }
        v = next;
        deg += 1;
    }
    v
}

/// Monomial coefficient vectors of `b_0 .. b_kmax` for one coordinate.
fn basis_monomial_table(family: MeasureFamily, kmax: usize) -> Vec<Vec<f64>> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(kmax + 1);
    table.push(vec![1.0]);
    if kmax == 0 {
        return table;
    }
    table.push(vec![0.0, 1.0 / family.recurrence_offdiag(1)]);
    for k in 1..kmax {
        // b_{k+1} = (x b_k - a_k b_{k-1}) / a_{k+1}
        let ak = family.recurrence_offdiag(k);
        let ak1 = family.recurrence_offdiag(k + 1);
        let mut next = vec![0.0; k + 2];
        for (e, &c) in table[k].iter().enumerate() {
            next[e + 1] += c / ak1;
        }
        for (e, &c) in table[k - 1].iter().enumerate() {
            next[e] -= c * ak / ak1;
        }
        table.push(next);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gauss(n: usize) -> Vec<MeasureFamily> {
        vec![MeasureFamily::GaussianStd; n]
    }

    fn arcsine(n: usize) -> Vec<MeasureFamily> {
        vec![MeasureFamily::ArcsineUnit; n]
    }

    #[test]
    fn graded_lex_order() {
        let idx = multi_indices(2, 2);
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(idx.len(), n_indices(2, 2));
        for (a, e) in idx.iter().zip(expect) {
            assert_eq!(a.0, e);
        }
        // The enumeration matches the Ord instance.
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
    }

    #[test]
    fn to_ortho_examples() {
        // x in the Hermite basis is b_1.
        let x = MonomialPoly::var(1, 0);
        let o = to_ortho(&x, &gauss(1)).unwrap();
        assert_abs_diff_eq!(o.coeff(&MultiIndex(vec![1])), 1.0, epsilon = 1e-14);
        assert_eq!(o.coeffs().count(), 1);

        // x in the Chebyshev basis is b_1 / sqrt(2).
        let o = to_ortho(&x, &arcsine(1)).unwrap();
        assert_abs_diff_eq!(
            o.coeff(&MultiIndex(vec![1])),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(o.eval(&[0.3]), 0.3, epsilon = 1e-13);

        // 1 - x^2 over the arcsine family: coefficients (1/2, 0, -1/(2 sqrt 2)).
        let p = MonomialPoly::from_terms(1, [(vec![0], 1.0), (vec![2], -1.0)]);
        let o = to_ortho(&p, &arcsine(1)).unwrap();
        assert_abs_diff_eq!(o.coeff(&MultiIndex(vec![0])), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            o.coeff(&MultiIndex(vec![2])),
            -1.0 / (2.0 * std::f64::consts::SQRT_2),
            epsilon = 1e-14
        );
        for x in [0.2, -0.77] {
            assert_abs_diff_eq!(o.eval(&[x]), 1.0 - x * x, epsilon = 1e-13);
        }
    }

    #[test]
    fn legendre_projection_of_x4() {
        // Uniform measure on [-1,1]: the degree-2 projection of x^4 is
        // (6/7) x^2 - 3/35.
        let p = MonomialPoly::from_terms(1, [(vec![4], 1.0)]);
        let o = to_ortho(&p, &[MeasureFamily::UniformUnit]).unwrap();
        let proj = from_ortho(&o.project(2));
        assert_abs_diff_eq!(proj.coeff(&MultiIndex(vec![2])), 6.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            proj.coeff(&MultiIndex(vec![0])),
            -3.0 / 35.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(proj.coeff(&MultiIndex(vec![1])), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_fixes_low_degree() {
        let p = MonomialPoly::from_terms(2, [(vec![1, 1], 2.0), (vec![0, 1], -0.5)]);
        let o = to_ortho(&p, &gauss(2)).unwrap();
        assert_eq!(o.project(2), o);
        assert_eq!(o.project(2).project(2), o.project(2));
    }

    #[test]
    fn multiply_matches_pointwise_product() {
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0;
                [2.0 * t - 1.0, (3.0 * t - 1.5).sin() * 0.9]
            })
            .collect();
        for fam in [gauss(2), arcsine(2)] {
            let p = MonomialPoly::from_terms(
                2,
                [(vec![2, 1], 0.7), (vec![0, 3], -1.2), (vec![1, 0], 0.4)],
            );
            let q =
                MonomialPoly::from_terms(2, [(vec![1, 2], 1.5), (vec![0, 0], 2.0), (vec![4, 0], -0.3)]);
            let po = to_ortho(&p, &fam).unwrap();
            let qo = to_ortho(&q, &fam).unwrap();
            let prod = po.multiply(&qo).unwrap();
            for x in &pts {
                let direct = p.eval(x) * q.eval(x);
                let via = prod.eval(x);
                assert!(
                    (direct - via).abs() <= 1e-9 * (1.0 + direct.abs()),
                    "{fam:?} x={x:?}: {direct} vs {via}"
                );
            }
        }
    }

    #[test]
    fn multiply_by_one_is_identity() {
        let fam = gauss(2);
        let p = MonomialPoly::from_terms(2, [(vec![2, 2], 1.0), (vec![1, 0], -1.0)]);
        let po = to_ortho(&p, &fam).unwrap();
        let one = to_ortho(&MonomialPoly::constant(2, 1.0), &fam).unwrap();
        let prod = po.multiply(&one).unwrap();
        for (a, c) in po.coeffs() {
            assert_abs_diff_eq!(prod.coeff(a), *c, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_b1_squared() {
        let fam = gauss(1);
        let b1 = OrthoPoly::basis_element(&fam, MultiIndex(vec![1]));
        let sq = b1.multiply(&b1).unwrap();
        assert_abs_diff_eq!(sq.coeff(&MultiIndex(vec![0])), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            sq.coeff(&MultiIndex(vec![2])),
            std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn l2_norm_examples() {
        let one = to_ortho(&MonomialPoly::constant(1, 1.0), &gauss(1)).unwrap();
        assert_abs_diff_eq!(one.l2_norm(), 1.0, epsilon = 1e-14);
        let x = to_ortho(&MonomialPoly::var(1, 0), &gauss(1)).unwrap();
        assert_abs_diff_eq!(x.l2_norm(), 1.0, epsilon = 1e-14);
        let xa = to_ortho(&MonomialPoly::var(1, 0), &arcsine(1)).unwrap();
        assert_abs_diff_eq!(
            xa.l2_norm(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn pullback_examples() {
        let n = 2;
        let p =
            MonomialPoly::from_terms(n, [(vec![0, 0], 1.0), (vec![1, 1], -1.0)]);
        let map = AffineMap::new(vec![0.75, 0.75], vec![1.25, 1.25]);
        let pb = p.pullback(&map);
        // 1 - (0.75 x1 + 1.25)(0.75 x2 + 1.25)
        assert_abs_diff_eq!(pb.coeff(&MultiIndex(vec![1, 1])), -0.5625, epsilon = 1e-14);
        assert_abs_diff_eq!(pb.coeff(&MultiIndex(vec![1, 0])), -0.9375, epsilon = 1e-14);
        assert_abs_diff_eq!(pb.coeff(&MultiIndex(vec![0, 1])), -0.9375, epsilon = 1e-14);
        assert_abs_diff_eq!(pb.coeff(&MultiIndex(vec![0, 0])), -0.5625, epsilon = 1e-14);
        for x in [[1.0, 1.0], [0.5, -0.25]] {
            assert_abs_diff_eq!(pb.eval(&x), p.eval(&map.apply(&x)), epsilon = 1e-12);
        }
        // identity map leaves the polynomial unchanged
        let id = AffineMap::identity(n);
        assert_eq!(p.pullback(&id), p);
        // linear case
        let q = MonomialPoly::var(1, 0);
        let m1 = AffineMap::new(vec![0.75], vec![1.25]);
        let qb = q.pullback(&m1);
        assert_abs_diff_eq!(qb.coeff(&MultiIndex(vec![1])), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(qb.coeff(&MultiIndex(vec![0])), 1.25, epsilon = 1e-15);
    }

    #[test]
    fn affine_roundtrip() {
        let map = AffineMap::new(vec![0.75, -2.0], vec![1.25, 0.3]);
        let inv = map.inverse();
        let p = MonomialPoly::from_terms(
            2,
            [(vec![2, 1], 1.0), (vec![0, 2], -0.25), (vec![1, 0], 3.0)],
        );
        let round = p.pullback(&map).pullback(&inv);
        for (e, c) in p.terms() {
            assert!(
                (round.coeff(e) - c).abs() <= 1e-12 * (1.0 + c.abs()),
                "{e:?}"
            );
        }
    }
}
