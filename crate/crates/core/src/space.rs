//! Finite pointed metric measure spaces.
//!
//! A [`FiniteMMSpace`] is a finite point set with a metric, a distinguished
//! root point, and a nonnegative mass per point. The root is always treated
//! as part of the space even when it carries mass 0: support-level notions
//! (equivalence, Hausdorff sets) work on `supp(mass) ∪ {root}`.
//!
//! Restriction to a closed ball around the root keeps the point set and
//! zeroes masses outside the ball, so indices stay stable across radii.
//! Lower mass functions follow the open/closed ball convention:
//! the infimum ranges over support points *strictly* inside radius `r` of the
//! root, and each such point contributes the mass of its *closed* `delta`-ball.
//! The infimum of an empty set is `+inf`.

use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mat::SquareMatrix;

/// Absolute tolerance admitted for triangle-inequality checks at construction.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Brute-force bound for [`check_equivalence`].
pub const EQUIVALENCE_SUPPORT_LIMIT: usize = 10;

/// Finite pointed metric measure space.
///
/// Invariants enforced at construction:
/// - the distance table is square, symmetric, zero exactly on the diagonal,
///   strictly positive off it, and satisfies the triangle inequality within
///   [`TRIANGLE_TOL`];
/// - masses are finite and nonnegative;
/// - the root index is in range.
///
/// Violations are construction errors, never silently repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMMSpace {
    dist: Arc<SquareMatrix>,
    root: usize,
    mass: Vec<f64>,
}

impl FiniteMMSpace {
    pub fn new(dist_rows: Vec<Vec<f64>>, root: usize, mass: Vec<f64>) -> Result<Self> {
        let dist = SquareMatrix::from_rows(&dist_rows)
            .ok_or_else(|| Error::InvalidSpace("distance table is not square".into()))?;
        Self::from_matrix(dist, root, mass)
    }

    pub fn from_matrix(dist: SquareMatrix, root: usize, mass: Vec<f64>) -> Result<Self> {
        validate_metric(&dist)?;
        let space = Self::from_matrix_unchecked(dist, root, mass)?;
        Ok(space)
    }

    /// Constructor for algorithmic builders whose distance tables are metrics
    /// by construction (quotients of tree metrics, block union metrics).
    /// Shape, masses, diagonal, symmetry, and positivity are still checked;
    /// the O(n^3) triangle scan is the caller's guarantee.
    pub fn from_matrix_assume_triangle(
        dist: SquareMatrix,
        root: usize,
        mass: Vec<f64>,
    ) -> Result<Self> {
        validate_shape(&dist)?;
        Self::from_matrix_unchecked(dist, root, mass)
    }

    fn from_matrix_unchecked(dist: SquareMatrix, root: usize, mass: Vec<f64>) -> Result<Self> {
        let n = dist.n();
        if n == 0 {
            return Err(Error::InvalidSpace("space must have at least one point".into()));
        }
        if mass.len() != n {
            return Err(Error::InvalidSpace(format!(
                "mass vector has length {} for {} points",
                mass.len(),
                n
            )));
        }
        if root >= n {
            return Err(Error::InvalidSpace(format!(
                "root index {root} out of range for {n} points"
            )));
        }
        for (i, &m) in mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidSpace(format!("mass[{i}] = {m} is not finite nonnegative")));
            }
        }
        Ok(FiniteMMSpace {
            dist: Arc::new(dist),
            root,
            mass,
        })
    }

    /// Full validation of the stored state, including the triangle scan.
    /// Algorithmic constructors use this in tests to certify their outputs.
    pub fn validate(&self) -> Result<()> {
        validate_metric(&self.dist)?;
        for (i, &m) in self.mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidSpace(format!("mass[{i}] = {m} is not finite nonnegative")));
            }
        }
        if self.root >= self.len() {
            return Err(Error::InvalidSpace("root out of range".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dist.n()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // a valid space has at least one point
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.root
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.dist
    }

    pub fn shared_matrix(&self) -> Arc<SquareMatrix> {
        Arc::clone(&self.dist)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Indices with strictly positive mass, ascending.
    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    /// Support together with the root, ascending, deduplicated.
    pub fn support_with_root(&self) -> Vec<usize> {
        let mut s = self.support_indices();
        if !s.contains(&self.root) {
            s.push(self.root);
            s.sort_unstable();
        }
        s
    }

    /// Largest distance from the root to any point.
    pub fn max_root_distance(&self) -> f64 {
        (0..self.len())
            .map(|i| self.dist(self.root, i))
            .fold(0.0, f64::max)
    }

    /// Same points, distances multiplied by `alpha` and masses by `beta`;
    /// both factors must be strictly positive.
    pub fn rescale(&self, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain("rescale needs alpha > 0"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain("rescale needs beta > 0"));
        }
        let n = self.len();
        let mut d = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                d.set(i, j, alpha * self.dist(i, j));
            }
        }
        let mass = self.mass.iter().map(|&m| beta * m).collect();
        // alpha-scaling preserves the metric axioms up to the same relative
        // error, so the triangle scan is not repeated.
        Self::from_matrix_assume_triangle(d, self.root, mass)
    }

    /// Restriction to the closed ball of radius `r` around the root: masses
    /// outside the ball are zeroed, the point set and indices are unchanged.
    pub fn restrict(&self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain("restriction radius must be finite and >= 0"));
        }
        let mass = (0..self.len())
            .map(|i| if self.dist(self.root, i) <= r { self.mass[i] } else { 0.0 })
            .collect();
        Ok(FiniteMMSpace {
            dist: Arc::clone(&self.dist),
            root: self.root,
            mass,
        })
    }

    /// Mass of the closed ball of radius `delta` around point `center`.
    pub fn ball_mass(&self, center: usize, delta: f64) -> f64 {
        (0..self.len())
            .filter(|&j| self.dist(center, j) <= delta)
            .map(|j| self.mass[j])
            .sum()
    }

    /// Lower mass at scale `delta` over centers strictly inside radius `r`:
    /// the minimum over support points `x` with `dist(root, x) < r` of the
    /// closed `delta`-ball mass around `x`; `+inf` when no center qualifies.
    pub fn lower_mass(&self, delta: f64, r: f64) -> f64 {
        let mut best = f64::INFINITY;
        for x in 0..self.len() {
            if self.mass[x] > 0.0 && self.dist(self.root, x) < r {
                best = best.min(self.ball_mass(x, delta));
            }
        }
        best
    }

    /// Lower mass with the radius constraint exhausted: for a finite space
    /// every point lies strictly inside `max_root_distance() + 1`.
    pub fn global_lower_mass(&self, delta: f64) -> f64 {
        self.lower_mass(delta, self.max_root_distance() + 1.0)
    }

    /// The full step function `delta -> lower_mass(delta, r)`.
    ///
    /// Breakpoints are pairwise distances (plus 0); values are evaluated by
    /// [`Self::lower_mass`] at the breakpoints themselves, so the profile is
    /// exact: no epsilon comparisons are involved.
    pub fn lower_mass_profile(&self, r: f64) -> LowerMassProfile {
        let centers: Vec<usize> = self
            .support_indices()
            .into_iter()
            .filter(|&x| self.dist(self.root, x) < r)
            .collect();
        let mut breakpoints = vec![0.0];
        for &x in &centers {
            for j in 0..self.len() {
                if self.mass[j] > 0.0 {
                    breakpoints.push(self.dist(x, j));
                }
            }
        }
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        let values = breakpoints.iter().map(|&d| self.lower_mass(d, r)).collect();
        LowerMassProfile { breakpoints, values }
    }
}

/// Right-continuous nondecreasing step function of the ball radius `delta`.
///
/// `values[k]` holds on `[breakpoints[k], breakpoints[k+1])`; the first
/// breakpoint is always 0. Values may be `+inf` (empty center set).
#[derive(Debug, Clone, PartialEq)]
pub struct LowerMassProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl LowerMassProfile {
    pub fn value_at(&self, delta: f64) -> f64 {
        debug_assert!(delta >= 0.0);
        match self
            .breakpoints
            .partition_point(|&b| b <= delta)
        {
            0 => self.values[0],
            k => self.values[k - 1],
        }
    }
}

/// Root-preserving measure-and-metric equivalence of two spaces, decided by
/// brute force over bijections of `supp ∪ {root}`.
///
/// Two spaces are equivalent when some bijection maps root to root, matches
/// all pairwise distances within `tol`, and matches all point masses within
/// `tol`. Supports larger than [`EQUIVALENCE_SUPPORT_LIMIT`] are rejected.
pub fn check_equivalence(a: &FiniteMMSpace, b: &FiniteMMSpace, tol: f64) -> Result<bool> {
    let sa = a.support_with_root();
    let sb = b.support_with_root();
    for (s, space) in [(&sa, a), (&sb, b)] {
        let supp_len = s.len() - usize::from(space.mass(space.root()) == 0.0);
        if supp_len > EQUIVALENCE_SUPPORT_LIMIT {
            return Err(Error::SizeLimitExceeded {
                what: "support size",
                actual: supp_len,
                limit: EQUIVALENCE_SUPPORT_LIMIT,
            });
        }
    }
    if sa.len() != sb.len() {
        return Ok(false);
    }
    // Root goes first on both sides; backtracking assigns the rest.
    let order_a: Vec<usize> = std::iter::once(a.root())
        .chain(sa.iter().copied().filter(|&i| i != a.root()))
        .collect();
    let pool_b: Vec<usize> = sb.iter().copied().filter(|&j| j != b.root()).collect();
    let mut assigned: Vec<usize> = vec![b.root()];
    if (a.mass(a.root()) - b.mass(b.root())).abs() > tol {
        return Ok(false);
    }
    let mut used = vec![false; pool_b.len()];
    Ok(extend_bijection(a, b, &order_a, &pool_b, &mut assigned, &mut used, tol))
}

fn extend_bijection(
    a: &FiniteMMSpace,
    b: &FiniteMMSpace,
    order_a: &[usize],
    pool_b: &[usize],
    assigned: &mut Vec<usize>,
    used: &mut [bool],
    tol: f64,
) -> bool {
    let k = assigned.len();
    if k == order_a.len() {
        return true;
    }
    let x = order_a[k];
    'cand: for (c, &y) in pool_b.iter().enumerate() {
        if used[c] {
            continue;
        }
        if (a.mass(x) - b.mass(y)).abs() > tol {
            continue;
        }
        for t in 0..k {
            if (a.dist(x, order_a[t]) - b.dist(y, assigned[t])).abs() > tol {
                continue 'cand;
            }
        }
        used[c] = true;
        assigned.push(y);
        if extend_bijection(a, b, order_a, pool_b, assigned, used, tol) {
            return true;
        }
        assigned.pop();
        used[c] = false;
    }
    false
}

fn validate_shape(dist: &SquareMatrix) -> Result<()> {
    let n = dist.n();
    for i in 0..n {
        if dist.get(i, i) != 0.0 {
            return Err(Error::InvalidSpace(format!(
                "dist[{i}][{i}] = {} must be exactly 0",
                dist.get(i, i)
            )));
        }
        for j in 0..i {
            let dij = dist.get(i, j);
            if !dij.is_finite() {
                return Err(Error::InvalidSpace(format!("dist[{i}][{j}] = {dij} is not finite")));
            }
            if dij != dist.get(j, i) {
                return Err(Error::InvalidSpace(format!("dist[{i}][{j}] != dist[{j}][{i}]")));
            }
            if dij <= 0.0 {
                return Err(Error::InvalidSpace(format!(
                    "dist[{i}][{j}] = {dij} must be strictly positive for distinct points"
                )));
            }
        }
    }
    Ok(())
}

fn validate_metric(dist: &SquareMatrix) -> Result<()> {
    validate_shape(dist)?;
    let n = dist.n();
    for i in 0..n {
        for j in 0..n {
            let dij = dist.get(i, j);
            for k in 0..n {
                if dist.get(i, k) > dij + dist.get(j, k) + TRIANGLE_TOL {
                    return Err(Error::InvalidSpace(format!(
                        "triangle inequality fails at ({i},{j},{k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    points: usize,
    root: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dist: Option<Vec<Vec<f64>>>,
    /// Lower triangle, row-major: `d(1,0), d(2,0), d(2,1), d(3,0), ...`
    #[serde(skip_serializing_if = "Option::is_none")]
    tri: Option<Vec<f64>>,
    mass: Vec<f64>,
}

impl Serialize for FiniteMMSpace {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        SpaceJson {
            points: self.len(),
            root: self.root,
            dist: Some(self.dist.to_rows()),
            tri: None,
            mass: self.mass.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteMMSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let raw = SpaceJson::deserialize(deserializer)?;
        let n = raw.points;
        let rows = match (raw.dist, raw.tri) {
            (Some(rows), None) => rows,
            (None, Some(tri)) => {
                if tri.len() != n * (n.saturating_sub(1)) / 2 {
                    return Err(D::Error::custom(format!(
                        "tri length {} does not match {} points",
                        tri.len(),
                        n
                    )));
                }
                let mut rows = vec![vec![0.0; n]; n];
                let mut it = tri.into_iter();
                for i in 1..n {
                    for j in 0..i {
                        let v = it.next().unwrap();
                        rows[i][j] = v;
                        rows[j][i] = v;
                    }
                }
                rows
            }
            (Some(_), Some(_)) => {
                return Err(D::Error::custom("space JSON must not set both dist and tri"))
            }
            (None, None) => return Err(D::Error::custom("space JSON needs dist or tri")),
        };
        if rows.len() != n {
            return Err(D::Error::custom(format!(
                "dist has {} rows for {} points",
                rows.len(),
                n
            )));
        }
        FiniteMMSpace::new(rows, raw.root, raw.mass).map_err(D::Error::custom)
    }
}
