//! Seeded fixture generators: random mm-spaces, cube spaces with a heavy
//! root atom, random piecewise-linear excursions, and uniform-attachment
//! graph trees. Everything here is a pure function of its parameters and
//! seed, so fixtures are reproducible across test runs and worker counts.

use crate::excursion::{PLExcursion, Tail};
use crate::mat::SquareMatrix;
use crate::rng::stream_rng;
use crate::space::FiniteMMSpace;
use crate::treegen::GraphTree;
use crate::{Error, Result};
use rand::Rng;

/// Stream tags so the different generators never share raw RNG streams even
/// under equal seeds.
const SPACE_STREAM: u64 = 0x7379_7370; // "sysp"
const CUBE_STREAM: u64 = 0x7379_6375; // "sycu"
const EXC_STREAM: u64 = 0x7379_6578; // "syex"
const TREE_STREAM: u64 = 0x7379_7472; // "sytr"
const PERTURB_STREAM: u64 = 0x7379_7065; // "sype"
const MASS_STREAM: u64 = 0x7379_6d61; // "syma"

/// Chance that a generated point carries exactly zero mass, so supports are
/// proper subsets often enough to exercise restriction and support logic.
const ZERO_MASS_PROB: f64 = 0.2;

/// Random mm-space: 1..=n_max points uniform in a 4×4 square with Euclidean
/// distances (floating-point sqrt noise stays far below the triangle
/// tolerance), masses uniform in (0, mass_max] with occasional exact zeros,
/// root at index 0.
pub fn random_euclidean_space(seed: u64, n_max: usize, mass_max: f64) -> FiniteMMSpace {
    assert!(n_max >= 1 && mass_max > 0.0);
    let mut rng = stream_rng(seed, SPACE_STREAM);
    let n = rng.random_range(1..=n_max);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)))
        .collect();
    let mut dist = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    let mass = random_masses(&mut rng, n, mass_max);
    FiniteMMSpace::from_matrix(dist, 0, mass).expect("planar points form a metric")
}

/// Random nonnegative mass vector of length n on an existing space's index
/// set; shares the zero-mass convention of `random_euclidean_space`.
pub fn random_mass_vector(seed: u64, n: usize, mass_max: f64) -> Vec<f64> {
    random_masses(&mut stream_rng(seed, MASS_STREAM), n, mass_max)
}

fn random_masses<R: Rng>(rng: &mut R, n: usize, mass_max: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_range(0.0..1.0) < ZERO_MASS_PROB {
                0.0
            } else {
                rng.random_range(0.0..mass_max) + mass_max * 1e-6
            }
        })
        .collect()
}

/// The one-point rooted space carrying the given mass.
pub fn one_point_space(mass: f64) -> FiniteMMSpace {
    FiniteMMSpace::from_matrix(SquareMatrix::zeros(1), 0, vec![mass])
        .expect("one-point spaces are always valid")
}

/// Unit cube [0,1]^dim with Euclidean distances, rooted at the origin
/// corner: mass 1−eps sits on the root and eps is spread uniformly over
/// mc_points Monte Carlo samples of Lebesgue measure. The triangle scan is
/// skipped — Euclidean distances satisfy it by construction and the matrix
/// is quadratic in mc_points.
pub fn cube_space(dim: usize, eps: f64, mc_points: usize, seed: u64) -> Result<FiniteMMSpace> {
    if dim == 0 || mc_points == 0 {
        return Err(Error::InvalidConfig(
            "cube dimension and mc_points must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidConfig("cube eps must lie in [0, 1]".into()));
    }
    let mut rng = stream_rng(seed, CUBE_STREAM);
    let mut pts = vec![vec![0.0f64; dim]];
    for _ in 0..mc_points {
        pts.push((0..dim).map(|_| rng.random_range(0.0..1.0)).collect());
    }
    let n = pts.len();
    let mut dist = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    let mut mass = vec![eps / mc_points as f64; n];
    mass[0] = 1.0 - eps;
    FiniteMMSpace::from_matrix_assume_triangle(dist, 0, mass)
}

/// Exact Lebesgue mass eps·vol(B̄(corner, delta) ∩ [0,1]^dim) of a ball
/// around any cube corner, available in closed form for dims 1–3 (one
/// orthant of the Euclidean ball) and for delta ≤ 1. Calibrates the Monte
/// Carlo lower-mass estimates.
pub fn corner_ball_mass(dim: usize, delta: f64, eps: f64) -> Option<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return None;
    }
    let unit_ball = match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => return None,
    };
    Some(eps * unit_ball * delta.powi(dim as i32) / 2f64.powi(dim as i32))
}

/// Random compact excursion: 3..=12 breakpoints at irregular positive time
/// steps, interior heights in (0.2, 2.2), endpoints pinned to zero.
pub fn random_compact_excursion(seed: u64) -> PLExcursion {
    let mut rng = stream_rng(seed, EXC_STREAM);
    let bp = random_breakpoints(&mut rng);
    let mut bp = bp;
    bp.last_mut().unwrap().1 = 0.0;
    PLExcursion::new(bp, Tail::Compact).expect("generated breakpoints are valid")
}

/// Random transient excursion: like the compact one but the last height is
/// free and a linear tail with slope in (0.3, 2.3) carries it to infinity.
pub fn random_transient_excursion(seed: u64) -> PLExcursion {
    let mut rng = stream_rng(seed, EXC_STREAM ^ 1);
    let bp = random_breakpoints(&mut rng);
    let slope = rng.random_range(0.3..2.3);
    PLExcursion::new(bp, Tail::TransientLinear { slope }).expect("generated breakpoints are valid")
}

fn random_breakpoints<R: Rng>(rng: &mut R) -> Vec<(f64, f64)> {
    let k = rng.random_range(3..=12);
    let mut t = 0.0;
    let mut bp = vec![(0.0, 0.0)];
    for _ in 1..k {
        t += rng.random_range(0.1..1.0);
        bp.push((t, rng.random_range(0.2..2.2)));
    }
    bp
}

/// Sup-norm perturbation: every interior breakpoint height moves by at most
/// eta (clamped at zero), times and tail stay fixed, so
/// ‖e_η − e‖_∞ ≤ eta with the excursion still valid.
pub fn sup_perturb(e: &PLExcursion, eta: f64, seed: u64) -> PLExcursion {
    assert!(eta >= 0.0);
    let mut rng = stream_rng(seed, PERTURB_STREAM);
    let mut bp = e.breakpoints().to_vec();
    let last = bp.len() - 1;
    let compact = matches!(e.tail(), Tail::Compact);
    for (i, p) in bp.iter_mut().enumerate() {
        if i == 0 || (compact && i == last) {
            continue; // pinned so the perturbed function is still an excursion
        }
        p.1 = (p.1 + rng.random_range(-eta..=eta)).max(0.0);
    }
    PLExcursion::new(bp, e.tail()).expect("perturbation preserves validity")
}

/// Uniform-attachment random tree: node i attaches to a uniform earlier
/// node, 1..=max_nodes nodes, root 0.
pub fn random_graph_tree(seed: u64, max_nodes: usize) -> GraphTree {
    assert!(max_nodes >= 1);
    let mut rng = stream_rng(seed, TREE_STREAM);
    let n = rng.random_range(1..=max_nodes);
    let parent: Vec<usize> = (0..n)
        .map(|i| if i == 0 { 0 } else { rng.random_range(0..i) })
        .collect();
    GraphTree::new(parent, 0).expect("attachment construction is acyclic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_spaces_are_deterministic_and_valid() {
        let a = random_euclidean_space(7, 10, 3.0);
        let b = random_euclidean_space(7, 10, 3.0);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.validate().is_ok());
        let c = random_euclidean_space(8, 10, 3.0);
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn some_seeds_produce_zero_mass_points() {
        let found = (0..40)
            .map(|s| random_euclidean_space(s, 8, 3.0))
            .any(|sp| sp.masses().iter().any(|&m| m == 0.0));
        assert!(found);
    }

    #[test]
    fn cube_space_shape_and_masses() {
        let sp = cube_space(3, 0.1, 50, 11).unwrap();
        assert_eq!(sp.len(), 51);
        assert_eq!(sp.root(), 0);
        assert_eq!(sp.mass(0), 0.9);
        assert!((sp.total_mass() - 1.0).abs() <= 1e-12);
        // all points inside the cube: distances bounded by the diagonal
        let diag = 3f64.sqrt();
        for i in 0..sp.len() {
            assert!(sp.dist(0, i) <= diag + 1e-12);
        }
        // small instances pass the full metric validation too
        assert!(FiniteMMSpace::from_matrix(sp.matrix().clone(), 0, sp.masses().to_vec()).is_ok());
    }

    #[test]
    fn cube_space_rejects_bad_params() {
        assert!(matches!(cube_space(0, 0.1, 5, 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(cube_space(2, 1.5, 5, 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(cube_space(2, 0.1, 0, 1), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn corner_ball_mass_closed_forms() {
        assert_eq!(corner_ball_mass(1, 0.1, 0.1), Some(0.1 * 2.0 * 0.1 / 2.0));
        let d2 = corner_ball_mass(2, 0.1, 0.1).unwrap();
        assert!((d2 - 0.1 * std::f64::consts::PI * 0.01 / 4.0).abs() <= 1e-18);
        assert!(corner_ball_mass(4, 0.1, 0.1).is_none());
        assert!(corner_ball_mass(2, 1.5, 0.1).is_none());
    }

    #[test]
    fn one_point_space_has_given_mass() {
        let sp = one_point_space(0.9);
        assert_eq!((sp.len(), sp.total_mass()), (1, 0.9));
    }

    #[test]
    fn random_excursions_validate_and_vary() {
        for seed in 0..20 {
            let c = random_compact_excursion(seed);
            assert!(c.compact_length().is_some());
            let t = random_transient_excursion(seed);
            assert!(t.last_exit(1.0).unwrap() > 0.0);
        }
        let a = random_transient_excursion(3);
        let b = random_transient_excursion(4);
        assert_ne!(a.breakpoints(), b.breakpoints());
    }

    #[test]
    fn sup_perturb_stays_within_eta() {
        let e = random_transient_excursion(5);
        let eta = 0.05;
        let p = sup_perturb(&e, eta, 99);
        let horizon = e.breakpoints().last().unwrap().0 + 2.0;
        let mut worst = 0.0f64;
        let mut t = 0.0;
        while t <= horizon {
            worst = worst.max((e.evaluate(t) - p.evaluate(t)).abs());
            t += horizon / 997.0;
        }
        assert!(worst <= eta + 1e-12, "{worst}");
        assert!(worst > 0.0);
    }

    #[test]
    fn graph_trees_are_deterministic_and_bounded() {
        let t = random_graph_tree(21, 40);
        let u = random_graph_tree(21, 40);
        assert_eq!(t.len(), u.len());
        assert!(t.len() <= 40);
        assert_eq!(t.root(), 0);
        for i in 0..t.len() {
            assert_eq!(t.parent_of(i), u.parent_of(i));
        }
    }
}
