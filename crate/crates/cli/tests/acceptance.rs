//! Canned verification suite: one test per acceptance criterion, each
//! printing a PASS line with its runtime on success (the harness line
//! itself is the pass/fail record). Tolerances and instance counts are
//! stated inline next to each check.

use mmspace::align::{ghp_ub, gromov_prohorov_ub, localized, LocalKind, SearchParams};
use mmspace::experiment::{
    annulus_mass, run_cube, run_kallenberg, swap_spaces, CubeConfig, KallenbergConfig,
};
use mmspace::metrics::{hausdorff, prohorov, prohorov_oracle};
use mmspace::rng::{child_seed, stream_rng};
use mmspace::sampling::{dmd_exact, EmpiricalDMD};
use mmspace::synth::{
    corner_ball_mass, random_compact_excursion, random_euclidean_space, random_graph_tree,
    random_mass_vector, random_transient_excursion, sup_perturb,
};
use mmspace::treegen::{bessel3_em, brownian_path, pitman_transform};
use rand::Rng;
use std::time::Instant;

const TOL: f64 = 1e-9;

fn pass(name: &str, start: Instant, detail: &str) {
    println!("{name}: PASS ({:.2}s) — {detail}", start.elapsed().as_secs_f64());
}

/// Deterministic nonzero mass vector for an n-point instance.
fn mass_vec(seed: u64, n: usize) -> Vec<f64> {
    for attempt in 0.. {
        let v = random_mass_vector(child_seed(seed, attempt), n, 3.0);
        if v.iter().sum::<f64>() > 0.0 {
            return v;
        }
    }
    unreachable!()
}

#[test]
fn criterion_01_prohorov_oracle_equivalence() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let sp = random_euclidean_space(child_seed(0x01, i), 10, 3.0);
        let nu = mass_vec(child_seed(0x0100, i), sp.len());
        let fast = prohorov(sp.masses(), &nu, sp.matrix()).unwrap();
        let slow = prohorov_oracle(sp.masses(), &nu, sp.matrix()).unwrap();
        assert!(
            (fast - slow).abs() <= TOL,
            "instance {i}: flow {fast} vs enumeration {slow}"
        );
        worst = worst.max((fast - slow).abs());
    }
    pass(
        "criterion 01 (prohorov oracle equivalence, 200 instances, tol 1e-9)",
        t,
        &format!("worst gap {worst:.3e}"),
    );
}

#[test]
fn criterion_02_metric_sanity() {
    let t = Instant::now();
    for i in 0..100u64 {
        let sp = random_euclidean_space(child_seed(0x02, i), 10, 3.0);
        let (mu, nu, rho) = (
            sp.masses().to_vec(),
            mass_vec(child_seed(0x0200, i), sp.len()),
            mass_vec(child_seed(0x0201, i), sp.len()),
        );
        let d = sp.matrix();
        let (ab, ba) = (prohorov(&mu, &nu, d).unwrap(), prohorov(&nu, &mu, d).unwrap());
        assert!((ab - ba).abs() <= TOL, "instance {i}: asymmetry {ab} vs {ba}");
        let (ac, bc) = (prohorov(&mu, &rho, d).unwrap(), prohorov(&nu, &rho, d).unwrap());
        assert!(ac <= ab + bc + TOL, "instance {i}: triangle {ac} > {ab} + {bc}");
    }
    let params = SearchParams::default();
    for i in 0..50u64 {
        let sp = random_euclidean_space(child_seed(0x0202, i), 8, 3.0);
        let gp = gromov_prohorov_ub(&sp, &sp, &params).unwrap().value;
        let ghp = ghp_ub(&sp, &sp, &params).unwrap().value;
        assert!(gp <= TOL && ghp <= TOL, "instance {i}: self distance {gp}/{ghp}");
        assert_eq!(localized(LocalKind::Gp, &sp, &sp, &params).unwrap(), 0.0);
        assert_eq!(localized(LocalKind::Sghp, &sp, &sp, &params).unwrap(), 0.0);
    }
    pass(
        "criterion 02 (prohorov symmetry + triangle on 100 triples; self distances on 50 spaces)",
        t,
        "all within 1e-9, localized self distances exactly 0",
    );
}

fn assert_dmd_exact_eq(a: &EmpiricalDMD, b: &EmpiricalDMD, ctx: &str) {
    assert_eq!(a.m, b.m, "{ctx}: m mismatch");
    assert_eq!(a.atoms.len(), b.atoms.len(), "{ctx}: atom count");
    for (x, y) in a.atoms.iter().zip(&b.atoms) {
        assert!(
            x.tri == y.tri && x.w == y.w,
            "{ctx}: atom {:?}/{} vs {:?}/{}",
            x.tri,
            x.w,
            y.tri,
            y.w
        );
    }
}

#[test]
fn criterion_03_dmd_restriction_consistency() {
    let t = Instant::now();
    let mut checks = 0usize;
    for i in 0..100u64 {
        let sp = random_euclidean_space(child_seed(0x03, i), 8, 3.0);
        let root = sp.root();
        let mut ds: Vec<f64> = (0..sp.len()).map(|j| sp.dist(root, j)).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.dedup();
        // midpoints between consecutive root distances, plus one past the max
        let mut radii: Vec<f64> =
            ds.windows(2).map(|w| (w[0] + w[1]) / 2.0).filter(|&r| r > 0.0).collect();
        radii.push(ds.last().unwrap() + 0.5);
        for r in radii {
            let restricted = sp.restrict(r).unwrap();
            for m in [1usize, 2] {
                let full = dmd_exact(&sp, m).unwrap();
                let projected = EmpiricalDMD {
                    m,
                    atoms: full
                        .atoms
                        .into_iter()
                        .filter(|a| a.tri[..m].iter().all(|&d| d <= r))
                        .collect(),
                };
                let direct = dmd_exact(&restricted, m).unwrap();
                assert_dmd_exact_eq(&direct, &projected, &format!("instance {i}, r={r}, m={m}"));
                checks += 1;
            }
        }
    }
    pass(
        "criterion 03 (restricted-space DMD equals root-row-filtered DMD, bitwise)",
        t,
        &format!("{checks} space/radius/m combinations, exact"),
    );
}

#[test]
fn criterion_04_lower_mass_characterizations() {
    let t = Instant::now();
    for i in 0..100u64 {
        let sp = random_euclidean_space(child_seed(0x04, i), 8, 3.0);
        let root = sp.root();
        let n = sp.len();
        // breakpoints: ball contents change at pairwise distances, the center
        // set changes at root distances; probe each value and each midpoint
        let mut deltas = vec![0.0];
        for a in 0..n {
            for b in 0..n {
                deltas.push(sp.dist(a, b));
            }
        }
        let mut rads: Vec<f64> = (0..n).map(|j| sp.dist(root, j)).collect();
        rads.push(sp.max_root_distance() + 1.0);
        for grid in [&mut deltas, &mut rads] {
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup();
            let mids: Vec<f64> = grid.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
            grid.extend(mids);
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let rad_probes: Vec<f64> = rads.iter().copied().filter(|&r| r > 0.0).collect();

        for &r in &rad_probes {
            let mut prev = f64::NEG_INFINITY;
            for &d in &deltas {
                let v = sp.lower_mass(d, r);
                assert!(v >= prev, "instance {i}: lower_mass(δ) drops at δ={d}, R={r}");
                prev = v;
            }
        }
        for &d in deltas.iter().step_by(3) {
            let mut prev = f64::INFINITY;
            for &r in &rad_probes {
                let v = sp.lower_mass(d, r);
                assert!(v <= prev, "instance {i}: lower_mass(R) rises at δ={d}, R={r}");
                prev = v;
            }
        }
        let big_r = sp.max_root_distance() + 1.0;
        let profile = sp.lower_mass_profile(big_r);
        let diam = deltas.last().copied().unwrap_or(0.0);
        for j in 0..100 {
            let d = j as f64 * (diam + 1.0) / 99.0;
            assert!(
                profile.value_at(d) == sp.lower_mass(d, big_r),
                "instance {i}: profile mismatch at δ={d}"
            );
        }
    }
    pass(
        "criterion 04 (lower-mass monotone in δ and R across all breakpoints; profile ≡ pointwise)",
        t,
        "100 spaces, exact",
    );
}

#[test]
fn criterion_05_glue_map_exactness() {
    let t = Instant::now();
    // tent: heights 0→1→0 over [0,2], pitch 1/2, classes {0, 1/2 ~ 3/2, 1}
    let tent = mmspace::excursion::PLExcursion::new(
        vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)],
        mmspace::excursion::Tail::Compact,
    )
    .unwrap();
    let glued = tent.glue_discretize(0.5, 10.0).unwrap();
    assert_eq!(glued.len(), 3);
    assert_eq!(glued.masses(), &[1.0, 1.0, 0.5]);
    assert_eq!(glued.root(), 0);
    assert_eq!(
        (glued.dist(0, 1), glued.dist(1, 2), glued.dist(0, 2)),
        (0.5, 0.5, 1.0)
    );

    let mut quadruples = 0usize;
    for i in 0..25u64 {
        let e = if i % 2 == 0 {
            random_compact_excursion(child_seed(0x05, i))
        } else {
            random_transient_excursion(child_seed(0x05, i))
        };
        let t_max = e.breakpoints().last().unwrap().0 + 2.0;
        let mut rng = stream_rng(child_seed(0x0500, i), 0x71);
        for _ in 0..400 {
            let pick: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * t_max).collect();
            let d = |a: usize, b: usize| e.tree_distance(pick[a], pick[b]);
            let (st_uv, su_tv, sv_tu) =
                (d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2));
            assert!(
                st_uv <= su_tv.max(sv_tu) + 1e-12,
                "excursion {i}: four-point fails at {pick:?}"
            );
            quadruples += 1;
        }
    }

    for i in 0..100u64 {
        let e = random_transient_excursion(child_seed(0x0501, i));
        let err = e.end_ray_error(&[0.25, 0.5, 1.0, 2.0]).unwrap();
        assert!(err <= 1e-12, "excursion {i}: end-ray deviation {err}");
    }
    pass(
        "criterion 05 (tent glue exact; four-point condition; end-ray isometry)",
        t,
        &format!("{quadruples} quadruples within 1e-12; 100 transient end rays within 1e-12"),
    );
}

#[test]
fn criterion_06_glue_continuity_in_sup_norm() {
    let t = Instant::now();
    let e = random_transient_excursion(child_seed(0x06, 11));
    let x = e.glue_discretize(0.01, 2.0).unwrap();
    let params = SearchParams::default();
    let mut values = Vec::new();
    for (k, eta) in [0.1, 0.01, 0.001].into_iter().enumerate() {
        let y = sup_perturb(&e, eta, child_seed(0x0600, k as u64)).glue_discretize(0.01, 2.0)
            .unwrap();
        values.push(localized(LocalKind::Gp, &x, &y, &params).unwrap());
    }
    assert!(
        values[0] > values[1] && values[1] > values[2],
        "localized GP not strictly decreasing in η: {values:?}"
    );
    pass(
        "criterion 06 (localized GP strictly decreasing under shrinking sup-perturbation)",
        t,
        &format!("η = 0.1/0.01/0.001 → {values:?}"),
    );
}

#[test]
fn criterion_07_tree_measure_replacement_bounds() {
    let t = Instant::now();
    let (alpha, h, radius) = (1.0, 0.25, 6.0);
    let (mut bounded, mut boundary) = (0usize, 0usize);
    for i in 0..100u64 {
        let tree = random_graph_tree(child_seed(0x07, i), 200);
        let sp = swap_spaces(&tree, alpha, h).unwrap();
        let nodes: Vec<usize> = (0..sp.n_nodes).collect();
        let grid: Vec<usize> = (0..sp.lam.len()).collect();
        let dh = hausdorff(&nodes, &grid, sp.lam.matrix()).unwrap();
        assert!(dh <= alpha, "tree {i}: hausdorff(nodes, grid) = {dh}");
        if sp.diameter < radius {
            bounded += 1;
            let pd = prohorov(sp.deg.masses(), sp.lam.masses(), sp.lam.matrix()).unwrap();
            let pn = prohorov(sp.nod.masses(), sp.lam.masses(), sp.lam.matrix()).unwrap();
            assert!(pd <= alpha / 2.0 + h, "tree {i}: deg {pd} > {}", alpha / 2.0 + h);
            assert!(pn <= alpha + h, "tree {i}: nod {pn} > {}", alpha + h);
        } else {
            boundary += 1;
            let lam_r = sp.lam.restrict(radius).unwrap();
            let deg_r = sp.deg.restrict(radius).unwrap();
            let nod_r = sp.nod.restrict(radius).unwrap();
            let pd = prohorov(deg_r.masses(), lam_r.masses(), sp.lam.matrix()).unwrap();
            let pn = prohorov(nod_r.masses(), lam_r.masses(), sp.lam.matrix()).unwrap();
            let bd = (alpha / 2.0).max(annulus_mass(&sp.lam, radius, alpha)) + h;
            let bn = alpha.max(annulus_mass(&sp.lam, radius, 2.0 * alpha)) + h;
            assert!(pd <= bd, "tree {i}: deg boundary {pd} > {bd}");
            assert!(pn <= bn, "tree {i}: nod boundary {pn} > {bn}");
        }
    }
    assert_eq!(bounded + boundary, 100);
    pass(
        "criterion 07 (measure replacement bounds on 100 random trees ≤ 200 nodes)",
        t,
        &format!("{bounded} bounded + {boundary} boundary-corrected cases, exact"),
    );
}

#[test]
fn criterion_08_cube_counterexample() {
    let t = Instant::now();
    let cfg = CubeConfig::default();
    assert_eq!((cfg.dims.as_slice(), cfg.eps, cfg.mc_points), ([1, 2, 3, 4, 5].as_slice(), 0.1, 2000));
    let rep = run_cube(&cfg, 1).unwrap();
    let dmd = rep.column("dmd_m1").unwrap();
    assert!(
        dmd.windows(2).all(|w| w[0] > w[1]),
        "m=1 discrepancy not strictly decreasing: {dmd:?}"
    );
    let low = rep.column("lowmass_d0.1").unwrap();
    assert!(
        low.windows(2).all(|w| w[0] >= w[1]) && low[4] < low[0],
        "global lower mass not decreasing: {low:?}"
    );
    let exact = rep.column("corner_exact_d0.1").unwrap();
    for dim in 0..3usize {
        let p = corner_ball_mass(dim + 1, 0.1, 1.0).unwrap(); // Lebesgue ball volume
        let se = cfg.eps * (p * (1.0 - p) / cfg.mc_points as f64).sqrt();
        assert!(
            (low[dim] - exact[dim]).abs() <= 3.0 * se,
            "dim {}: lower mass {} vs analytic {} (3·SE = {})",
            dim + 1,
            low[dim],
            exact[dim],
            3.0 * se
        );
    }
    let ghp = rep.column("ghp_ub").unwrap();
    assert!(ghp.iter().all(|&v| v >= 0.4), "ghp not bounded away from 0: {ghp:?}");
    assert!(rep.flags.gromov_weak_trend && !rep.flags.mass_bound_holds && !rep.flags.ghw_trend);
    pass(
        "criterion 08 (cube family: weak trend passes, mass bound fails, ghp stays ≥ 0.4)",
        t,
        &format!("dmd {dmd:?}; lower mass {low:?}"),
    );
}

#[test]
fn criterion_09_kallenberg_scaling_trend() {
    let t = Instant::now();
    let cfg = KallenbergConfig::default();
    assert_eq!(
        (cfg.n_list.as_slice(), cfg.trials, cfg.radius),
        ([16, 64, 128].as_slice(), 200, 1.0)
    );
    let rep = run_kallenberg(&cfg, 1).unwrap();
    let ks = rep.column("ks_m1").unwrap();
    assert!(
        ks.windows(2).all(|w| w[0] > w[1]),
        "ensemble KS not strictly decreasing across scales: {ks:?}"
    );

    // continuum generator cross-check: Pitman transform vs Bessel SDE at
    // horizon 1, 10⁴ end-point samples each, two-sample KS below the 1%
    // critical value 1.628·√(2/10⁴)
    let n = 10_000usize;
    let grid = 16384usize; // fine enough that discrete-infimum bias sits below sampling noise
    let mut a: Vec<f64> = (0..n)
        .map(|i| {
            *pitman_transform(&brownian_path(grid, 1.0, child_seed(0x0900, i as u64)))
                .values()
                .last()
                .unwrap()
        })
        .collect();
    let mut b: Vec<f64> = (0..n)
        .map(|i| *bessel3_em(grid, 1.0, child_seed(0x0901, i as u64)).values().last().unwrap())
        .collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut ia, mut ib, mut d) = (0usize, 0usize, 0.0f64);
    while ia < n || ib < n {
        let x = match (a.get(ia), b.get(ib)) {
            (Some(&xa), Some(&xb)) => xa.min(xb),
            (Some(&xa), None) => xa,
            (None, Some(&xb)) => xb,
            (None, None) => break,
        };
        while ia < n && a[ia] == x {
            ia += 1;
        }
        while ib < n && b[ib] == x {
            ib += 1;
        }
        d = d.max((ia as f64 / n as f64 - ib as f64 / n as f64).abs());
    }
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < critical, "generator KS {d} ≥ 1% critical value {critical}");
    pass(
        "criterion 09 (ensemble KS decreases across scales; Pitman vs Bessel generators agree)",
        t,
        &format!("KS chain {ks:?}; generator KS {d:.4} < {critical:.4}"),
    );
}

#[test]
fn criterion_10_run_determinism_across_workers() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_mmspace");
    let tmp = std::env::temp_dir();
    for sub in ["sequence", "swap", "kallenberg"] {
        let mut outputs = Vec::new();
        for workers in ["1", "8"] {
            let path = tmp.join(format!("acceptance_{sub}_w{workers}.csv"));
            let status = std::process::Command::new(bin)
                .args(["run", sub, "--workers", workers, "--out"])
                .arg(&path)
                .status()
                .unwrap();
            assert!(status.success(), "run {sub} --workers {workers} failed");
            outputs.push(std::fs::read(&path).unwrap());
            std::fs::remove_file(&path).ok();
        }
        assert!(
            outputs[0] == outputs[1],
            "run {sub}: CSV differs between 1 and 8 workers"
        );
    }
    pass(
        "criterion 10 (byte-identical CSV at worker counts 1 and 8)",
        t,
        "run sequence/swap/kallenberg",
    );
}
