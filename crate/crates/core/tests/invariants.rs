//! Property tests over mechanically generated Euclidean configurations:
//! metric axioms for the mass-Prohorov distance and monotonicity of the
//! lower mass profile, checked on arbitrary point clouds rather than the
//! seeded families used elsewhere.

use mmspace::mat::SquareMatrix;
use mmspace::metrics::prohorov;
use mmspace::FiniteMMSpace;
use proptest::prelude::*;

fn euclidean_matrix(pts: &[(f64, f64)]) -> SquareMatrix {
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(x, y)| {
            pts.iter()
                .map(|&(u, v)| ((x - u).powi(2) + (y - v).powi(2)).sqrt())
                .collect()
        })
        .collect();
    SquareMatrix::from_rows(&rows).unwrap()
}

proptest! {
    /// Symmetry, identity, and the triangle inequality for the Prohorov
    /// distance between arbitrary nonnegative mass vectors on a shared
    /// finite metric space.
    #[test]
    fn prohorov_metric_axioms(
        cfg in prop::collection::vec(
            ((0.0..10.0f64, 0.0..10.0f64), 0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64),
            1..6,
        )
    ) {
        let pts: Vec<(f64, f64)> = cfg.iter().map(|c| c.0).collect();
        let mu: Vec<f64> = cfg.iter().map(|c| c.1).collect();
        let nu: Vec<f64> = cfg.iter().map(|c| c.2).collect();
        let rho: Vec<f64> = cfg.iter().map(|c| c.3).collect();
        let d = euclidean_matrix(&pts);

        let ab = prohorov(&mu, &nu, &d).unwrap();
        let ba = prohorov(&nu, &mu, &d).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12, "asymmetric: {ab} vs {ba}");
        prop_assert_eq!(prohorov(&mu, &mu, &d).unwrap(), 0.0);

        let ac = prohorov(&mu, &rho, &d).unwrap();
        let bc = prohorov(&nu, &rho, &d).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9, "triangle: {} > {} + {}", ac, ab, bc);
    }

    /// The lower mass bound is non-decreasing in the ball radius δ and
    /// non-increasing in the localization radius R, for any probe pair.
    #[test]
    fn lower_mass_monotone(
        cfg in prop::collection::vec(((0.0..10.0f64, 0.0..10.0f64), 0.0..3.0f64), 1..7),
        d1 in 0.0..15.0f64,
        d2 in 0.0..15.0f64,
        r1 in 0.01..15.0f64,
        r2 in 0.01..15.0f64,
    ) {
        let pts: Vec<(f64, f64)> = cfg.iter().map(|c| c.0).collect();
        let mut mass: Vec<f64> = cfg.iter().map(|c| c.1).collect();
        mass[0] += 0.1; // keep the space nonempty
        let sp = FiniteMMSpace::from_matrix(euclidean_matrix(&pts), 0, mass).unwrap();

        let (dlo, dhi) = (d1.min(d2), d1.max(d2));
        let (rlo, rhi) = (r1.min(r2), r1.max(r2));
        prop_assert!(sp.lower_mass(dlo, rlo) <= sp.lower_mass(dhi, rlo));
        prop_assert!(sp.lower_mass(dlo, rlo) >= sp.lower_mass(dlo, rhi));
        prop_assert!(sp.lower_mass(dhi, rhi) <= sp.lower_mass(dhi, rlo) || rlo == rhi);
    }
}
