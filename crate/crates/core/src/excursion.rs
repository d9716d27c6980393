//! Piecewise-linear excursions, the tree pseudo-metric they induce, and the
//! glue map that discretizes the quotient tree into a finite pointed space.
//!
//! An excursion starts at height 0 and is either compactly supported (returns
//! to 0 and stays there) or eventually climbs a positive linear tail to
//! infinity. Bounded oscillating tails are unrepresentable by design: the
//! objects they would produce fall outside the finite-space data model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::SquareMatrix;
use crate::space::FiniteMMSpace;

/// Behaviour after the last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// Height 0 from the last breakpoint on.
    Compact,
    /// Straight climb at a positive slope from the last breakpoint on.
    #[serde(rename = "linear")]
    TransientLinear { slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcursionClass {
    CompactlySupported,
    Transient,
}

#[derive(Serialize, Deserialize)]
struct ExcursionJson {
    bp: Vec<(f64, f64)>,
    tail: Tail,
}

/// Piecewise-linear excursion: breakpoints (time, height) starting at (0,0),
/// linearly interpolated, continued by the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExcursionJson", into = "ExcursionJson")]
pub struct PLExcursion {
    breakpoints: Vec<(f64, f64)>,
    tail: Tail,
}

impl TryFrom<ExcursionJson> for PLExcursion {
    type Error = Error;
    fn try_from(raw: ExcursionJson) -> Result<Self> {
        PLExcursion::new(raw.bp, raw.tail)
    }
}

impl From<PLExcursion> for ExcursionJson {
    fn from(e: PLExcursion) -> Self {
        ExcursionJson {
            bp: e.breakpoints,
            tail: e.tail,
        }
    }
}

impl PLExcursion {
    pub fn new(breakpoints: Vec<(f64, f64)>, tail: Tail) -> Result<Self> {
        if breakpoints.first() != Some(&(0.0, 0.0)) {
            return Err(Error::InvalidExcursion(
                "breakpoints must start at (0, 0)".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidExcursion(
                    "breakpoint times must be strictly increasing".into(),
                ));
            }
        }
        for &(t, y) in &breakpoints {
            if !t.is_finite() || !(y >= 0.0 && y.is_finite()) {
                return Err(Error::InvalidExcursion(
                    "breakpoints must be finite with nonnegative heights".into(),
                ));
            }
        }
        match tail {
            Tail::Compact => {
                if breakpoints.last().unwrap().1 != 0.0 {
                    return Err(Error::InvalidExcursion(
                        "a compact excursion must end at height 0".into(),
                    ));
                }
                if breakpoints.iter().all(|&(_, y)| y == 0.0) {
                    return Err(Error::InvalidExcursion(
                        "excursion must not be identically zero".into(),
                    ));
                }
            }
            Tail::TransientLinear { slope } => {
                if !(slope > 0.0 && slope.is_finite()) {
                    return Err(Error::InvalidExcursion(
                        "transient tail slope must be positive and finite".into(),
                    ));
                }
            }
        }
        Ok(PLExcursion { breakpoints, tail })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn classify(&self) -> ExcursionClass {
        match self.tail {
            Tail::Compact => ExcursionClass::CompactlySupported,
            Tail::TransientLinear { .. } => ExcursionClass::Transient,
        }
    }

    /// Excursion length ζ for compact excursions: the last breakpoint time.
    pub fn compact_length(&self) -> Option<f64> {
        match self.tail {
            Tail::Compact => Some(self.breakpoints.last().unwrap().0),
            Tail::TransientLinear { .. } => None,
        }
    }

    /// Height at time t. Breakpoint times return their stored heights
    /// exactly; interpolation happens only strictly inside segments, so grid
    /// identities like merged-class detection never hinge on rounding.
    pub fn evaluate(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let t = t.max(0.0);
        let bp = &self.breakpoints;
        let idx = bp.partition_point(|&(bt, _)| bt <= t);
        if idx == bp.len() {
            let &(lt, ly) = bp.last().unwrap();
            return match self.tail {
                Tail::Compact => 0.0,
                Tail::TransientLinear { slope } => ly + slope * (t - lt),
            };
        }
        let (t0, y0) = bp[idx - 1];
        if t == t0 {
            return y0;
        }
        let (t1, y1) = bp[idx];
        y0 + (t - t0) * (y1 - y0) / (t1 - t0)
    }

    /// Minimum height on [s, t]: attained at an endpoint or at an interior
    /// breakpoint, so it is read off exactly rather than sampled.
    fn interval_min(&self, s: f64, t: f64) -> f64 {
        let mut m = self.evaluate(s).min(self.evaluate(t));
        let bp = &self.breakpoints;
        let lo = bp.partition_point(|&(bt, _)| bt <= s);
        for &(bt, y) in &bp[lo..] {
            if bt >= t {
                break;
            }
            m = m.min(y);
        }
        m
    }

    /// Tree pseudo-metric r′(s,t) = e(s) + e(t) − 2·min over [s,t], order of
    /// arguments immaterial.
    pub fn tree_distance(&self, s: f64, t: f64) -> f64 {
        debug_assert!(s >= 0.0 && t >= 0.0);
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let v = self.evaluate(s) + self.evaluate(t) - 2.0 * self.interval_min(s, t);
        v.max(0.0)
    }

    /// Last-exit time ξ(R) = sup{s : e(s) < R}, found by scanning segments
    /// from the tail backwards for the final sub-R stretch.
    pub fn last_exit(&self, r: f64) -> Result<f64> {
        let slope = match self.tail {
            Tail::Compact => return Err(Error::NotTransient),
            Tail::TransientLinear { slope } => slope,
        };
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain("last-exit level must be positive and finite"));
        }
        let bp = &self.breakpoints;
        let &(lt, ly) = bp.last().unwrap();
        if ly < r {
            return Ok(lt + (r - ly) / slope);
        }
        for w in bp.windows(2).rev() {
            let ((a, ya), (b, yb)) = (w[0], w[1]);
            if ya < r && yb < r {
                return Ok(b);
            }
            if ya < r && yb >= r {
                return Ok(a + (r - ya) / (yb - ya) * (b - a));
            }
            if ya >= r && yb < r {
                return Ok(b);
            }
        }
        // e(0) = 0 < r, so some segment always matches
        unreachable!("excursions start at height 0 below any positive level")
    }

    /// Maximum deviation of the end-ray isometry over radius pairs:
    /// max |r′(ξ(R₁), ξ(R₂)) − |R₁ − R₂||.
    pub fn end_ray_error(&self, radii: &[f64]) -> Result<f64> {
        if matches!(self.tail, Tail::Compact) {
            return Err(Error::NotTransient);
        }
        let xs: Vec<f64> = radii
            .iter()
            .map(|&r| self.last_exit(r))
            .collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                let dev = (self.tree_distance(xs[i], xs[j]) - (radii[i] - radii[j]).abs()).abs();
                worst = worst.max(dev);
            }
        }
        Ok(worst)
    }

    /// Discretizes the glued tree: grid times {0, h, 2h, …} up to ζ (compact)
    /// or ξ(R) (transient), each carrying mass h — a final cell cut short by
    /// the endpoint carries its true length instead — then quotients by
    /// r′ = 0 exactly (masses summed), and finally restricts to the closed
    /// R-ball around the root class.
    ///
    /// The Gromov-Prohorov distance to the true glued tree restricted at R is
    /// at most 4·ω(h) + h for ω the modulus of continuity of the excursion on
    /// the covered interval; that bound is documentation, not a checked
    /// invariant.
    pub fn glue_discretize(&self, h: f64, r: f64) -> Result<FiniteMMSpace> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain("grid pitch must be positive and finite"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain("restriction radius must be positive and finite"));
        }
        let t_end = match self.tail {
            Tail::Compact => self.compact_length().unwrap(),
            Tail::TransientLinear { .. } => self.last_exit(r)?,
        };

        let mut times = Vec::new();
        let mut k = 0usize;
        loop {
            let t = k as f64 * h;
            if t > t_end {
                break;
            }
            times.push(t);
            k += 1;
        }
        let mut masses = vec![h; times.len()];
        let last = *times.last().unwrap();
        if last < t_end {
            *masses.last_mut().unwrap() = t_end - last;
        }

        // Pair distances only ever need minima over whole grid cells, so the
        // per-cell breakpoint minima are collected once (a breakpoint lying
        // exactly on a grid time carries that grid height and is absorbed by
        // the endpoint terms either way). Walk paths have one breakpoint per
        // step, so anything per-pair-per-breakpoint would be quadratic×path.
        let k_grid = times.len();
        let ey: Vec<f64> = times.iter().map(|&t| self.evaluate(t)).collect();
        let mut cell_min = vec![f64::INFINITY; k_grid.saturating_sub(1)];
        {
            let mut cell = 0usize;
            for &(bt, y) in &self.breakpoints {
                while cell + 1 < k_grid && bt >= times[cell + 1] {
                    cell += 1;
                }
                if cell + 1 >= k_grid {
                    break;
                }
                if bt >= times[cell] {
                    cell_min[cell] = cell_min[cell].min(y);
                }
            }
        }
        let pair_dist = |i: usize, j: usize, span_min: f64| -> f64 {
            let m = ey[i].min(ey[j]).min(span_min);
            (ey[i] + ey[j] - 2.0 * m).max(0.0)
        };

        // quotient by exact pseudo-distance zero, first representative wins
        let mut rep_idx: Vec<usize> = Vec::new();
        let mut rep_mass: Vec<f64> = Vec::new();
        let mut run_min: Vec<f64> = Vec::new(); // per class: min over cells rep..i-1
        for i in 0..k_grid {
            if i > 0 {
                for m in run_min.iter_mut() {
                    *m = m.min(cell_min[i - 1]);
                }
            }
            let mut merged = false;
            for c in 0..rep_idx.len() {
                if pair_dist(rep_idx[c], i, run_min[c]) == 0.0 {
                    rep_mass[c] += masses[i];
                    merged = true;
                    break;
                }
            }
            if !merged {
                rep_idx.push(i);
                rep_mass.push(masses[i]);
                run_min.push(f64::INFINITY);
            }
        }

        let n = rep_idx.len();
        let mut dist = SquareMatrix::zeros(n);
        for a in 0..n {
            let mut m = f64::INFINITY;
            let mut cell = rep_idx[a];
            for b in (a + 1)..n {
                while cell < rep_idx[b] {
                    m = m.min(cell_min[cell]);
                    cell += 1;
                }
                let d = pair_dist(rep_idx[a], rep_idx[b], m);
                dist.set(a, b, d);
                dist.set(b, a, d);
            }
        }
        // r′ is a pseudo-metric on the quotient, so the triangle scan is skipped
        let space = FiniteMMSpace::from_matrix_assume_triangle(dist, 0, rep_mass)?;
        space.restrict(r)
    }

    /// Pushforward of the glue grid measure under distance to the root class,
    /// as unmerged (height, mass) atoms filtered to heights ≤ r: since
    /// excursions satisfy e(0) = 0 ≤ e, the glued tree's root distance of the
    /// class of time t is min-free, r′(0,t) = e(t), so the m = 1
    /// distance-matrix column of `glue_discretize(h, r)` can be read off the
    /// grid heights without building (or storing) the quadratic matrix. Grid
    /// and mass conventions are identical to `glue_discretize`.
    pub fn root_distance_atoms(&self, h: f64, r: f64) -> Result<Vec<(f64, f64)>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain("grid pitch must be positive and finite"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain("restriction radius must be positive and finite"));
        }
        let t_end = match self.tail {
            Tail::Compact => self.compact_length().unwrap(),
            Tail::TransientLinear { .. } => self.last_exit(r)?,
        };
        let mut atoms = Vec::new();
        let mut k = 0usize;
        loop {
            let t = k as f64 * h;
            if t > t_end {
                break;
            }
            atoms.push((self.evaluate(t), h));
            k += 1;
        }
        let last_t = (atoms.len() - 1) as f64 * h;
        if last_t < t_end {
            atoms.last_mut().unwrap().1 = t_end - last_t;
        }
        atoms.retain(|&(y, _)| y <= r);
        Ok(atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> PLExcursion {
        PLExcursion::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)], Tail::Compact).unwrap()
    }

    fn line() -> PLExcursion {
        PLExcursion::new(vec![(0.0, 0.0)], Tail::TransientLinear { slope: 1.0 }).unwrap()
    }

    fn tent_with_tail(slope: f64) -> PLExcursion {
        PLExcursion::new(
            vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)],
            Tail::TransientLinear { slope },
        )
        .unwrap()
    }

    #[test]
    fn rejects_malformed_inputs() {
        let bad = |bp: Vec<(f64, f64)>, tail: Tail| {
            assert!(matches!(
                PLExcursion::new(bp, tail),
                Err(Error::InvalidExcursion(_))
            ));
        };
        bad(vec![(0.0, 0.5)], Tail::Compact); // does not start at 0
        bad(vec![(0.5, 0.0)], Tail::Compact);
        bad(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0)], Tail::Compact); // stalled time
        bad(vec![(0.0, 0.0), (1.0, -0.5), (2.0, 0.0)], Tail::Compact); // dips below 0
        bad(vec![(0.0, 0.0), (1.0, 1.0)], Tail::Compact); // compact must end at 0
        bad(vec![(0.0, 0.0)], Tail::Compact); // identically zero
        bad(vec![(0.0, 0.0)], Tail::TransientLinear { slope: 0.0 });
        bad(vec![(0.0, 0.0)], Tail::TransientLinear { slope: -1.0 });
    }

    #[test]
    fn evaluate_interpolates_and_extends() {
        let e = tent();
        assert_eq!(e.evaluate(0.0), 0.0);
        assert_eq!(e.evaluate(0.5), 0.5);
        assert_eq!(e.evaluate(1.0), 1.0);
        assert_eq!(e.evaluate(1.5), 0.5);
        assert_eq!(e.evaluate(2.0), 0.0);
        assert_eq!(e.evaluate(7.0), 0.0);
        assert_eq!(tent_with_tail(1.0).evaluate(3.0), 1.0);
        assert_eq!(line().evaluate(4.25), 4.25);
    }

    #[test]
    fn classify_matches_tail() {
        assert_eq!(tent().classify(), ExcursionClass::CompactlySupported);
        assert_eq!(line().classify(), ExcursionClass::Transient);
        assert_eq!(tent_with_tail(0.5).classify(), ExcursionClass::Transient);
        assert_eq!(tent().compact_length(), Some(2.0));
        assert_eq!(line().compact_length(), None);
    }

    #[test]
    fn tree_distance_examples() {
        let e = tent();
        assert_eq!(e.tree_distance(0.7, 0.7), 0.0);
        // monotone stretch: distance is the height difference
        assert_eq!(line().tree_distance(1.25, 4.0), 2.75);
        // opposite slopes at equal heights around the apex collapse to 0
        assert_eq!(e.tree_distance(0.5, 1.5), 0.0);
        assert_eq!(e.tree_distance(1.5, 0.5), 0.0);
        assert_eq!(e.tree_distance(0.25, 1.0), 0.75);
    }

    #[test]
    fn tree_distance_is_symmetric_and_triangular() {
        let e = tent_with_tail(0.7);
        let ts = [0.0, 0.3, 0.9, 1.4, 2.0, 2.6, 3.3];
        for &s in &ts {
            for &t in &ts {
                assert_eq!(e.tree_distance(s, t), e.tree_distance(t, s));
                for &u in &ts {
                    assert!(
                        e.tree_distance(s, t) <= e.tree_distance(s, u) + e.tree_distance(u, t) + 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn last_exit_solves_the_final_crossing() {
        assert_eq!(line().last_exit(5.0).unwrap(), 5.0);
        assert_eq!(tent_with_tail(1.0).last_exit(0.5).unwrap(), 2.5);
        // level above every interior height: crossing happens on the tail
        assert_eq!(tent_with_tail(2.0).last_exit(3.0).unwrap(), 3.5);
        assert!(matches!(tent().last_exit(1.0), Err(Error::NotTransient)));
        assert!(matches!(
            line().last_exit(0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn last_exit_ignores_early_dips() {
        // up to 2, down to 0.1, up forever: the final sub-1 stretch ends on
        // the second climb, not the first
        let e = PLExcursion::new(
            vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.1)],
            Tail::TransientLinear { slope: 0.45 },
        )
        .unwrap();
        let xi = e.last_exit(1.0).unwrap();
        assert!((xi - 4.0).abs() <= 1e-12, "{xi}");
    }

    #[test]
    fn end_ray_deviation_vanishes() {
        assert_eq!(line().end_ray_error(&[0.5, 1.0, 2.0, 5.0]).unwrap(), 0.0);
        let e = tent_with_tail(0.8);
        let err = e.end_ray_error(&[0.25, 0.5, 1.5, 3.0, 6.0]).unwrap();
        assert!(err <= 1e-12, "{err}");
        assert_eq!(e.end_ray_error(&[2.0]).unwrap(), 0.0);
        assert!(matches!(tent().end_ray_error(&[1.0]), Err(Error::NotTransient)));
    }

    #[test]
    fn glue_tent_collapses_to_three_classes() {
        let sp = tent().glue_discretize(0.5, 2.0).unwrap();
        assert_eq!(sp.len(), 3);
        assert_eq!(sp.root(), 0);
        // class heights 0, 0.5, 1 on a line
        assert_eq!(sp.dist(0, 1), 0.5);
        assert_eq!(sp.dist(0, 2), 1.0);
        assert_eq!(sp.dist(1, 2), 0.5);
        // times 0 & 2 merge, 0.5 & 1.5 merge, apex stands alone
        assert_eq!(sp.masses(), &[1.0, 1.0, 0.5]);
    }

    #[test]
    fn glue_line_is_a_unit_path() {
        let sp = line().glue_discretize(1.0, 3.0).unwrap();
        assert_eq!(sp.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(sp.dist(i, j), (i as f64 - j as f64).abs());
            }
        }
        assert_eq!(sp.masses(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn glue_coarse_pitch_gives_single_root_atom() {
        let sp = tent().glue_discretize(3.0, 5.0).unwrap();
        assert_eq!(sp.len(), 1);
        assert_eq!(sp.total_mass(), 2.0);
    }

    #[test]
    fn glue_total_mass_is_covered_length() {
        // off-grid endpoint: dyadic pitch keeps the cell sum exact
        let e = PLExcursion::new(
            vec![(0.0, 0.0), (0.75, 1.5), (1.875, 0.0)],
            Tail::Compact,
        )
        .unwrap();
        let sp = e.glue_discretize(0.25, 10.0).unwrap();
        assert_eq!(sp.total_mass(), 1.875);
    }

    #[test]
    fn glue_restricts_at_the_radius() {
        // transient: grid runs to ξ(R) and interior peaks above R lose mass
        let e = tent_with_tail(1.0);
        let sp = e.glue_discretize(0.25, 0.5).unwrap();
        // every surviving atom sits within the closed 0.5-ball
        for &i in &sp.support_indices() {
            assert!(sp.dist(sp.root(), i) <= 0.5);
        }
        assert!(sp.total_mass() > 0.0);
    }

    #[test]
    fn root_distance_atoms_match_tent_glue() {
        let atoms = tent().root_distance_atoms(0.5, 2.0).unwrap();
        assert_eq!(
            atoms,
            vec![(0.0, 0.5), (0.5, 0.5), (1.0, 0.5), (0.5, 0.5), (0.0, 0.5)]
        );
        // pooled by height this is the glue space's root-distance column
        let sp = tent().glue_discretize(0.5, 2.0).unwrap();
        for (c, d) in [(0usize, 0.0), (1, 0.5), (2, 1.0)] {
            let pooled: f64 = atoms.iter().filter(|a| a.0 == d).map(|a| a.1).sum();
            assert_eq!(pooled, sp.mass(c));
        }
    }

    #[test]
    fn root_distance_atoms_match_glue_masses_transient() {
        let e = PLExcursion::new(
            vec![(0.0, 0.0), (0.7, 1.3), (1.1, 0.2), (1.6, 0.9)],
            Tail::TransientLinear { slope: 0.6 },
        )
        .unwrap();
        let (h, r) = (0.03, 1.0);
        let atoms = e.root_distance_atoms(h, r).unwrap();
        let sp = e.glue_discretize(h, r).unwrap();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        assert!((total - sp.total_mass()).abs() <= 1e-12);
        // per-height pooled masses agree with the space's m = 1 pushforward
        for &i in &sp.support_indices() {
            let d = sp.dist(sp.root(), i);
            let pooled: f64 = atoms.iter().filter(|a| a.0 == d).map(|a| a.1).sum();
            let class: f64 = sp
                .support_indices()
                .iter()
                .filter(|&&j| sp.dist(sp.root(), j) == d)
                .map(|&j| sp.mass(j))
                .sum();
            assert!((pooled - class).abs() <= 1e-12, "height {d}");
        }
        // off-grid last exit: the trimmed final cell keeps the totals exact
        assert!(atoms.iter().any(|a| a.1 != h));
    }

    #[test]
    fn json_round_trip_both_tails() {
        let e = tent_with_tail(0.5);
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains(r#""tail":{"kind":"linear","slope":0.5}"#), "{s}");
        let back: PLExcursion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);

        let c = serde_json::to_string(&tent()).unwrap();
        assert!(c.contains(r#""tail":{"kind":"compact"}"#), "{c}");
        let back: PLExcursion = serde_json::from_str(&c).unwrap();
        assert_eq!(back, tent());

        let bad = r#"{"bp": [[0.0, 0.0], [1.0, 1.0]], "tail": {"kind": "compact"}}"#;
        assert!(serde_json::from_str::<PLExcursion>(bad).is_err());
    }
}
