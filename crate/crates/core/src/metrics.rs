//! Exact Prohorov and Hausdorff distances over a shared finite metric.
//!
//! Two independent Prohorov routes are kept on purpose: [`prohorov_oracle`]
//! enumerates subsets against the defining inequality and is the correctness
//! witness; [`prohorov`] decides feasibility by max-flow and scans the
//! candidate grid. They must agree (see the acceptance tests) and are never
//! merged.

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::mat::SquareMatrix;

/// Brute-force bound for [`prohorov_oracle`].
pub const ORACLE_POINT_LIMIT: usize = 12;

fn check_measure_inputs(mu: &[f64], nu: &[f64], dist: &SquareMatrix) -> Result<()> {
    if mu.len() != dist.n() {
        return Err(Error::DimensionMismatch(mu.len(), dist.n()));
    }
    if nu.len() != dist.n() {
        return Err(Error::DimensionMismatch(nu.len(), dist.n()));
    }
    for &m in mu.iter().chain(nu.iter()) {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::Domain("masses must be finite and nonnegative"));
        }
    }
    Ok(())
}

fn positive_atoms(mass: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let idx: Vec<usize> = (0..mass.len()).filter(|&i| mass[i] > 0.0).collect();
    let m = idx.iter().map(|&i| mass[i]).collect();
    (idx, m)
}

fn lex_gt(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Exact Prohorov distance between two finite measures on a common metric.
///
/// The condition "μ(A) ≤ ν(A^ε) + ε and ν(A) ≤ μ(A^ε) + ε for every A" is
/// equivalent to g(ε) ≤ ε, where g(ε) = max(μ(X), ν(X)) − maxflow(ε) and
/// maxflow(ε) is the value of the bipartite network with source arcs μ_i,
/// sink arcs ν_j, and unbounded arcs i→j exactly when dist[i][j] ≤ ε (the
/// defect form of Hall's condition gives max_A (μ(A) − ν(A^ε)) =
/// μ(X) − maxflow(ε), and the same network serves both directions).
///
/// g is a nonincreasing right-continuous step function, constant on the
/// intervals [d_k, d_{k+1}) of the sorted distinct cross-support distances
/// (d_0 = 0). The infimum is therefore max(d_k, g_k) at the first k with
/// g_k < d_{k+1}; that predicate is monotone in k, so binary search over the
/// grid needs only O(log) flow computations. The returned value is one of the
/// finitely many exact candidates — no ε-tolerance enters the search.
pub fn prohorov(mu: &[f64], nu: &[f64], dist: &SquareMatrix) -> Result<f64> {
    check_measure_inputs(mu, nu, dist)?;
    // canonical argument order makes prohorov(μ,ν) == prohorov(ν,μ) bit-exact
    let (mu, nu) = if lex_gt(mu, nu) { (nu, mu) } else { (mu, nu) };
    let (mi, mm) = positive_atoms(mu);
    let (ni, nm) = positive_atoms(nu);
    Ok(prohorov_scan(&mm, &nm, |i, j| dist.get(mi[i], ni[j])))
}

/// Core interval scan over strictly positive atom masses; `d(i, j)` is the
/// distance between the i-th μ-atom and the j-th ν-atom. Shared by the
/// public [`prohorov`] and the union-metric searches, which never need the
/// within-space blocks of their ambient metric.
pub(crate) fn prohorov_scan<F: Fn(usize, usize) -> f64>(mu: &[f64], nu: &[f64], d: F) -> f64 {
    let tot_mu: f64 = mu.iter().sum();
    let tot_nu: f64 = nu.iter().sum();
    let cap = tot_mu.max(tot_nu);
    let mut cands = Vec::with_capacity(mu.len() * nu.len() + 1);
    cands.push(0.0);
    for i in 0..mu.len() {
        for j in 0..nu.len() {
            cands.push(d(i, j));
        }
    }
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();

    let g_at = |eps: f64| -> f64 {
        let (nl, nr) = (mu.len(), nu.len());
        let s = nl + nr;
        let t = s + 1;
        let mut net = FlowNetwork::new(nl + nr + 2);
        for (i, &m) in mu.iter().enumerate() {
            net.add_edge(s, i, m);
        }
        for (j, &m) in nu.iter().enumerate() {
            net.add_edge(nl + j, t, m);
        }
        for i in 0..nl {
            for j in 0..nr {
                if d(i, j) <= eps {
                    net.add_edge(i, nl + j, f64::INFINITY);
                }
            }
        }
        (cap - net.max_flow(s, t)).max(0.0)
    };

    // first k with g_k < d_{k+1}; the sentinel d_len = ∞ makes the last
    // index satisfy it, so the search always lands on a valid interval
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if g_at(cands[mid]) < cands[mid + 1] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo].max(g_at(cands[lo]))
}

/// Brute-force Prohorov distance by direct subset enumeration; the
/// independent witness for [`prohorov`].
///
/// g(ε), the worst two-sided defect max_A max(μ(A) − ν(A^ε), ν(A) − μ(A^ε)),
/// is evaluated literally over all support subsets, and the result is the
/// smallest feasible element of the grid E = D ∪ g(D), where D holds the
/// cross-support distances and 0.
///
/// Why the minimum lies on E: g is nonincreasing and right-continuous with
/// jumps only at points of D, and the distance is π = inf{ε ≥ 0 : g(ε) ≤ ε}.
/// Right-continuity forces g(π) ≤ π (otherwise points just right of π would
/// be infeasible too). On the grid interval [d_k, d_{k+1}) containing π the
/// function is the constant g(d_k), so either π = g(d_k) ∈ g(D) or the
/// constraint ε ≥ d_k is active and π = d_k ∈ D. Every element of E is
/// tested directly against the definition, so nothing here depends on the
/// flow route's interval bookkeeping.
pub fn prohorov_oracle(mu: &[f64], nu: &[f64], dist: &SquareMatrix) -> Result<f64> {
    check_measure_inputs(mu, nu, dist)?;
    if dist.n() > ORACLE_POINT_LIMIT {
        return Err(Error::SizeLimitExceeded {
            what: "oracle point count",
            actual: dist.n(),
            limit: ORACLE_POINT_LIMIT,
        });
    }
    let (mi, mm) = positive_atoms(mu);
    let (ni, nm) = positive_atoms(nu);

    let g = |eps: f64| -> f64 {
        let forward = worst_defect(&mi, &mm, &ni, &nm, dist, eps);
        let backward = worst_defect(&ni, &nm, &mi, &mm, dist, eps);
        forward.max(backward)
    };

    let mut cands = vec![0.0];
    for &i in &mi {
        for &j in &ni {
            cands.push(dist.get(i, j));
        }
    }
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    let mut grid = cands.clone();
    for &c in &cands {
        grid.push(g(c));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    for &e in &grid {
        if g(e) <= e {
            return Ok(e);
        }
    }
    // the largest grid element max(d_max, g(d_max)) is always feasible
    unreachable!("feasible grid element exists");
}

/// max over A ⊆ from-support of from(A) − to(A^ε), by bitmask enumeration.
fn worst_defect(
    from_idx: &[usize],
    from_mass: &[f64],
    to_idx: &[usize],
    to_mass: &[f64],
    dist: &SquareMatrix,
    eps: f64,
) -> f64 {
    let nf = from_idx.len();
    debug_assert!(nf <= ORACLE_POINT_LIMIT);
    let masks: Vec<u32> = to_idx
        .iter()
        .map(|&j| {
            let mut m = 0u32;
            for (b, &i) in from_idx.iter().enumerate() {
                if dist.get(i, j) <= eps {
                    m |= 1 << b;
                }
            }
            m
        })
        .collect();
    let mut subset_mass = vec![0.0; 1usize << nf];
    let mut best = 0.0f64; // A = ∅ contributes 0
    for m in 1..(1usize << nf) {
        let low = m.trailing_zeros() as usize;
        subset_mass[m] = subset_mass[m & (m - 1)] + from_mass[low];
        let mut covered = 0.0;
        for (t, &msk) in masks.iter().enumerate() {
            if msk & (m as u32) != 0 {
                covered += to_mass[t];
            }
        }
        best = best.max(subset_mass[m] - covered);
    }
    best
}

/// Exact Hausdorff distance between two nonempty index sets.
pub fn hausdorff(a: &[usize], b: &[usize], dist: &SquareMatrix) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.iter().chain(b).any(|&i| i >= dist.n()) {
        return Err(Error::Domain("hausdorff index out of range"));
    }
    let directed = |from: &[usize], to: &[usize]| -> f64 {
        from.iter()
            .map(|&x| to.iter().map(|&y| dist.get(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}
