//! Built-in benchmark instances.

use crate::basis1d::MeasureFamily;
use crate::bm::DomainSpec;
use crate::momentsos::POPInstance;
use crate::poly::{AffineMap, MonomialPoly};

pub const NAMES: [&str; 4] = ["motzkin", "origin", "stengle", "prestel"];

/// Returns a built-in benchmark by name.
pub fn benchmark(name: &str) -> Option<POPInstance> {
    match name {
        "motzkin" => Some(motzkin()),
        "origin" => Some(origin()),
        "stengle" => Some(stengle()),
        "prestel" => Some(prestel()),
        _ => None,
    }
}

/// Unconstrained minimization of the Motzkin polynomial
/// `1 - 3 x1^2 x2^2 + x1^4 x2^2 + x1^2 x2^4` (minimum 0 at `(+-1, +-1)`),
/// with the standard normal reference measure. No Bernstein-Markov constant
/// exists on the whole plane, so only regularized values are reported.
pub fn motzkin() -> POPInstance {
    let p = MonomialPoly::from_terms(
        2,
        [
            (vec![0, 0], 1.0),
            (vec![2, 2], -3.0),
            (vec![4, 2], 1.0),
            (vec![2, 4], 1.0),
        ],
    );
    POPInstance {
        name: "motzkin".into(),
        n: 2,
        objective: p,
        constraints: vec![],
        families: vec![MeasureFamily::GaussianStd; 2],
        domain_map: None,
        bm_domain: DomainSpec::Unbounded,
        oracle_box: Some(vec![(-2.0, 2.0), (-2.0, 2.0)]),
        known_minimum: Some(0.0),
    }
}

/// `min x` subject to `-x^2 >= 0`: the feasible set is the single point 0.
/// The Bernstein-Markov domain is that point, where the certificate is
/// exact at every level.
pub fn origin() -> POPInstance {
    POPInstance {
        name: "origin".into(),
        n: 1,
        objective: MonomialPoly::var(1, 0),
        constraints: vec![MonomialPoly::from_terms(1, [(vec![2], -1.0)])],
        families: vec![MeasureFamily::GaussianStd],
        domain_map: None,
        bm_domain: DomainSpec::Point(vec![vec![0.0]]),
        oracle_box: Some(vec![(-1.0, 1.0)]),
        known_minimum: Some(0.0),
    }
}

/// `min 1 - x^2` subject to `(1 - x^2)^3 >= 0` on `[-1, 1]` with the
/// arcsine reference measure. The objective is nonnegative on the feasible
/// set but lies outside the quadratic module, so the standard hierarchy
/// cannot close the gap at any finite level.
pub fn stengle() -> POPInstance {
    let g = {
        let base = MonomialPoly::from_terms(1, [(vec![0], 1.0), (vec![2], -1.0)]);
        base.mul(&base).mul(&base)
    };
    POPInstance {
        name: "stengle".into(),
        n: 1,
        objective: MonomialPoly::from_terms(1, [(vec![0], 1.0), (vec![2], -1.0)]),
        constraints: vec![g],
        families: vec![MeasureFamily::ArcsineUnit],
        domain_map: None,
        bm_domain: DomainSpec::UnitBox,
        oracle_box: Some(vec![(-1.0, 1.0)]),
        known_minimum: Some(0.0),
    }
}

/// `min 17/4 - x1^2 - x2^2` over `{x1 >= 1/2, x2 >= 1/2, x1 x2 <= 1}`,
/// whose quadratic module is not Archimedean. The affine map
/// `x_i -> (3/4) x_i + 5/4` sends `[-1, 1]^2` onto `[1/2, 2]^2`, which
/// contains the feasible set; the arcsine tensor measure and the box
/// Bernstein-Markov constant live in mapped coordinates. The minimum is 0,
/// attained at `(1/2, 2)` and `(2, 1/2)`.
pub fn prestel() -> POPInstance {
    let p = MonomialPoly::from_terms(
        2,
        [(vec![0, 0], 4.25), (vec![2, 0], -1.0), (vec![0, 2], -1.0)],
    );
    let g1 = MonomialPoly::from_terms(2, [(vec![1, 0], 1.0), (vec![0, 0], -0.5)]);
    let g2 = MonomialPoly::from_terms(2, [(vec![0, 1], 1.0), (vec![0, 0], -0.5)]);
    let g3 = MonomialPoly::from_terms(2, [(vec![0, 0], 1.0), (vec![1, 1], -1.0)]);
    POPInstance {
        name: "prestel".into(),
        n: 2,
        objective: p,
        constraints: vec![g1, g2, g3],
        families: vec![MeasureFamily::ArcsineUnit; 2],
        domain_map: Some(AffineMap::new(vec![0.75, 0.75], vec![1.25, 1.25])),
        bm_domain: DomainSpec::UnitBox,
        oracle_box: Some(vec![(0.4, 2.1), (0.4, 2.1)]),
        known_minimum: Some(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{grid_minimize, GridSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn catalog_is_exactly_the_four_names() {
        for name in NAMES {
            assert!(benchmark(name).is_some());
        }
        assert!(benchmark("unknownname").is_none());
    }

    #[test]
    fn prestel_grid_minimum_is_zero_at_corner() {
        let inst = prestel();
        let grid = GridSpec::uniform(inst.oracle_box.clone().unwrap(), 801);
        let (v, x) = grid_minimize(&inst.objective, &inst.constraints, &grid)
            .unwrap()
            .unwrap();
        // The corner minimizers are steep, so the 801-point grid resolves the
        // minimum only to a few hundredths.
        assert!((-1e-9..=0.05).contains(&v), "grid minimum {v}");
        let near = (x[0] - 0.5).abs() < 0.02 && (x[1] - 2.0).abs() < 0.1
            || (x[0] - 2.0).abs() < 0.1 && (x[1] - 0.5).abs() < 0.02;
        assert!(near, "argmin {x:?}");
    }

    #[test]
    fn prestel_map_sends_unit_box_to_half_two() {
        let map = prestel().domain_map.unwrap();
        assert_eq!(map.apply(&[-1.0, -1.0]), vec![0.5, 0.5]);
        assert_eq!(map.apply(&[1.0, 1.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn benchmark_minima_from_grid_oracle() {
        for name in ["motzkin", "origin", "stengle"] {
            let inst = benchmark(name).unwrap();
            let grid = GridSpec::uniform(inst.oracle_box.clone().unwrap(), 401);
            let (v, _) = grid_minimize(&inst.objective, &inst.constraints, &grid)
                .unwrap()
                .unwrap();
            assert_abs_diff_eq!(v, inst.known_minimum.unwrap(), epsilon = 2e-4);
        }
    }
}
