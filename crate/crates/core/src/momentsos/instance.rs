//! Polynomial optimization problem instances.

use crate::basis1d::MeasureFamily;
use crate::bm::{bm_constant, BmConstant, DomainSpec};
use crate::poly::{AffineMap, MonomialPoly};

/// A polynomial optimization problem `inf { p(x) : g_j(x) >= 0 }` together
/// with its reference measure, certification domain, and an optional affine
/// change of variables applied before assembly.
#[derive(Debug, Clone)]
pub struct POPInstance {
    pub name: String,
    pub n: usize,
    pub objective: MonomialPoly,
    pub constraints: Vec<MonomialPoly>,
    pub families: Vec<MeasureFamily>,
    /// Applied to the objective and every constraint before assembly; the
    /// reference measure and certification domain live in mapped
    /// coordinates.
    pub domain_map: Option<AffineMap>,
    pub bm_domain: DomainSpec,
    /// Box for the brute-force oracle, in original coordinates.
    pub oracle_box: Option<Vec<(f64, f64)>>,
    pub known_minimum: Option<f64>,
}

impl POPInstance {
    pub fn mapped_objective(&self) -> MonomialPoly {
        match &self.domain_map {
            Some(map) => self.objective.pullback(map),
            None => self.objective.clone(),
        }
    }

    pub fn mapped_constraints(&self) -> Vec<MonomialPoly> {
        self.constraints
            .iter()
            .map(|g| match &self.domain_map {
                Some(map) => g.pullback(map),
                None => g.clone(),
            })
            .collect()
    }

    /// Half-degrees `d_j = ceil(deg g_j / 2)` of the mapped constraints
    /// (`j = 1..m`; the implicit `g_0 = 1` has `d_0 = 0`).
    pub fn constraint_half_degrees(&self) -> Vec<usize> {
        self.mapped_constraints()
            .iter()
            .map(|g| g.degree().div_ceil(2))
            .collect()
    }

    /// Smallest admissible relaxation level: `d` must cover half the
    /// objective degree and every constraint half-degree.
    pub fn min_level(&self) -> usize {
        let obj = self.mapped_objective().degree().div_ceil(2);
        self.constraint_half_degrees()
            .into_iter()
            .fold(obj.max(1), usize::max)
    }

    pub fn bm_constant(&self, d: usize) -> BmConstant {
        bm_constant(&self.bm_domain, &self.families, d)
    }

    /// True when the feasible set has empty interior (a finite point set),
    /// so the primal Slater condition cannot hold.
    pub fn primal_slater_suspect(&self) -> bool {
        matches!(self.bm_domain, DomainSpec::Point(_))
    }
}
