//! Distance-matrix distributions: the law of the (m+1)×(m+1) mutual-distance
//! matrix of the root plus m points drawn from μ, kept as a finitely
//! supported measure on matrix space.
//!
//! Distributions are deliberately *not* normalized: an exact distribution
//! carries total weight μ(X)^m, so discrepancies see total-mass drift as well
//! as shape drift. Atoms merge only on exact bit equality of their matrices —
//! entries come from the same stored reals, so no epsilon is ever involved.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::SquareMatrix;
use crate::metrics::prohorov;
use crate::rng::stream_rng;
use crate::space::{FiniteMMSpace, TRIANGLE_TOL};
use rand::Rng;

/// Enumeration bound for exact distributions: |supp|^m at most this.
pub const DMD_ENUMERATION_LIMIT: usize = 1_000_000;

/// Samples drawn per derived-seed batch; fixed so results never depend on
/// how batches are scheduled.
const SAMPLE_BATCH: usize = 1024;

/// One weighted matrix atom; `tri` holds the strict upper triangle of the
/// (m+1)×(m+1) distance matrix row-major: (0,1),(0,2),…,(0,m),(1,2),…
/// Row 0 is the root row, so the first m entries are root distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmdAtom {
    pub tri: Vec<f64>,
    pub w: f64,
}

/// Finitely supported measure on (m+1)-point distance matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDMD {
    pub m: usize,
    pub atoms: Vec<DmdAtom>,
}

impl EmpiricalDMD {
    /// Number of upper-triangle entries for this m: (m+1 choose 2).
    pub fn tri_len(&self) -> usize {
        tri_len(self.m)
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// Checks shape, nonnegativity, and that each atom is realizable as
    /// mutual distances (triangle inequality over the reconstructed matrix).
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Domain("m must be positive"));
        }
        let k = tri_len(self.m);
        for atom in &self.atoms {
            if atom.tri.len() != k {
                return Err(Error::DimensionMismatch(atom.tri.len(), k));
            }
            if !(atom.w >= 0.0 && atom.w.is_finite()) {
                return Err(Error::Domain("atom weight must be finite and nonnegative"));
            }
            if atom.tri.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
                return Err(Error::Domain("atom entries must be finite and nonnegative"));
            }
            let n = self.m + 1;
            let full = reconstruct(atom, n);
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        if full[i][l] > full[i][j] + full[j][l] + TRIANGLE_TOL {
                            return Err(Error::Domain("atom matrix violates the triangle inequality"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn tri_len(m: usize) -> usize {
    m * (m + 1) / 2
}

fn reconstruct(atom: &DmdAtom, n: usize) -> Vec<Vec<f64>> {
    let mut full = vec![vec![0.0; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            full[i][j] = atom.tri[k];
            full[j][i] = atom.tri[k];
            k += 1;
        }
    }
    full
}

/// Visits every length-m index tuple over 0..n in odometer order.
fn for_each_tuple(n: usize, m: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut idx = vec![0usize; m];
    loop {
        f(&idx);
        let mut p = m;
        while p > 0 {
            idx[p - 1] += 1;
            if idx[p - 1] < n {
                break;
            }
            idx[p - 1] = 0;
            p -= 1;
        }
        if p == 0 {
            break;
        }
    }
}

fn tuple_tri(space: &FiniteMMSpace, supp: &[usize], tuple: &[usize], out: &mut Vec<f64>) {
    // points are root, supp[tuple[0]], …, supp[tuple[m-1]]
    let m = tuple.len();
    out.clear();
    let pt = |i: usize| if i == 0 { space.root() } else { supp[tuple[i - 1]] };
    for i in 0..=m {
        for j in (i + 1)..=m {
            out.push(space.dist(pt(i), pt(j)));
        }
    }
}

fn bits_key(tri: &[f64]) -> Vec<u64> {
    tri.iter().map(|d| d.to_bits()).collect()
}

fn atoms_from_map(map: BTreeMap<Vec<u64>, f64>) -> Vec<DmdAtom> {
    // nonnegative floats sort identically as values and as bit patterns, so
    // the map order is lexicographic in the matrix entries
    map.into_iter()
        .map(|(bits, w)| DmdAtom {
            tri: bits.into_iter().map(f64::from_bits).collect(),
            w,
        })
        .collect()
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("m must be positive"));
    }
    Ok(())
}

fn check_enumeration(supp_len: usize, m: usize) -> Result<()> {
    let count = u32::try_from(m)
        .ok()
        .and_then(|e| supp_len.checked_pow(e))
        .unwrap_or(usize::MAX);
    if count > DMD_ENUMERATION_LIMIT {
        return Err(Error::SizeLimitExceeded {
            what: "distance matrix enumeration count",
            actual: count,
            limit: DMD_ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Exact m-point distance matrix distribution: one atom per supp^m tuple with
/// weight the product of the tuple's masses, merged on exact matrix equality.
pub fn dmd_exact(space: &FiniteMMSpace, m: usize) -> Result<EmpiricalDMD> {
    check_m(m)?;
    let supp = space.support_indices();
    check_enumeration(supp.len(), m)?;
    let mut map: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut tri = Vec::with_capacity(tri_len(m));
    for_each_tuple(supp.len(), m, |tuple| {
        let w: f64 = tuple.iter().map(|&t| space.mass(supp[t])).product();
        tuple_tri(space, &supp, tuple, &mut tri);
        *map.entry(bits_key(&tri)).or_insert(0.0) += w;
    });
    Ok(EmpiricalDMD {
        m,
        atoms: atoms_from_map(map),
    })
}

/// Monte Carlo estimate of the m-point distribution: `n_samples` i.i.d. draws
/// from the normalized measure, each carrying weight μ(X)^m / n_samples.
///
/// Draws are organized in fixed-size batches with per-batch seeds derived
/// from the master seed, so the result depends only on `(space, m,
/// n_samples, seed)` and never on scheduling.
pub fn dmd_sample(space: &FiniteMMSpace, m: usize, n_samples: usize, seed: u64) -> Result<EmpiricalDMD> {
    check_m(m)?;
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive"));
    }
    let supp = space.support_indices();
    if supp.is_empty() {
        return Err(Error::EmptySupport);
    }
    let total = space.total_mass();
    let mut cum = Vec::with_capacity(supp.len());
    let mut acc = 0.0;
    for &i in &supp {
        acc += space.mass(i);
        cum.push(acc);
    }

    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut tri = Vec::with_capacity(tri_len(m));
    let mut tuple = vec![0usize; m];
    let n_batches = n_samples.div_ceil(SAMPLE_BATCH);
    for batch in 0..n_batches {
        let mut rng = stream_rng(seed, batch as u64);
        let len = SAMPLE_BATCH.min(n_samples - batch * SAMPLE_BATCH);
        for _ in 0..len {
            for slot in tuple.iter_mut() {
                let u = rng.random::<f64>() * acc;
                *slot = cum.partition_point(|&c| c <= u).min(supp.len() - 1);
            }
            tuple_tri(space, &supp, &tuple, &mut tri);
            *counts.entry(bits_key(&tri)).or_insert(0) += 1;
        }
    }

    let unit = total.powi(m as i32) / n_samples as f64;
    let atoms = counts
        .into_iter()
        .map(|(bits, c)| DmdAtom {
            tri: bits.into_iter().map(f64::from_bits).collect(),
            w: c as f64 * unit,
        })
        .collect();
    Ok(EmpiricalDMD { m, atoms })
}

/// Prohorov distance between two matrix distributions of the same order,
/// with matrix space carrying the maximum absolute entry difference metric.
pub fn dmd_discrepancy(a: &EmpiricalDMD, b: &EmpiricalDMD) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::DimensionMismatch(a.m, b.m));
    }
    let k = tri_len(a.m);
    // union of atom locations, merged on exact equality
    let mut union: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
    for atom in &a.atoms {
        if atom.tri.len() != k {
            return Err(Error::DimensionMismatch(atom.tri.len(), k));
        }
        union.entry(bits_key(&atom.tri)).or_insert((0.0, 0.0)).0 += atom.w;
    }
    for atom in &b.atoms {
        if atom.tri.len() != k {
            return Err(Error::DimensionMismatch(atom.tri.len(), k));
        }
        union.entry(bits_key(&atom.tri)).or_insert((0.0, 0.0)).1 += atom.w;
    }
    let mut locs: Vec<Vec<f64>> = Vec::with_capacity(union.len());
    let mut mu = Vec::with_capacity(union.len());
    let mut nu = Vec::with_capacity(union.len());
    for (bits, (wa, wb)) in union {
        locs.push(bits.into_iter().map(f64::from_bits).collect());
        mu.push(wa);
        nu.push(wb);
    }
    let n = locs.len();
    let mut dist = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = locs[i]
                .iter()
                .zip(&locs[j])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    prohorov(&mu, &nu, &dist)
}

/// Exact ∫ Π_{i<j} exp(−λ_{ij} r_{ij}) dν_m by direct enumeration over
/// supp^m — an independent route from [`dmd_exact`], never via atom merging.
pub fn polynomial_eval(space: &FiniteMMSpace, m: usize, lambdas: &SquareMatrix) -> Result<f64> {
    check_m(m)?;
    if lambdas.n() != m + 1 {
        return Err(Error::DimensionMismatch(lambdas.n(), m + 1));
    }
    for i in 0..lambdas.n() {
        for j in 0..lambdas.n() {
            if !(lambdas.get(i, j) >= 0.0 && lambdas.get(i, j).is_finite()) {
                return Err(Error::Domain("lambdas must be finite and nonnegative"));
            }
        }
    }
    let supp = space.support_indices();
    check_enumeration(supp.len(), m)?;
    let mut sum = 0.0;
    for_each_tuple(supp.len(), m, |tuple| {
        let w: f64 = tuple.iter().map(|&t| space.mass(supp[t])).product();
        let pt = |i: usize| if i == 0 { space.root() } else { supp[tuple[i - 1]] };
        let mut phi = 1.0;
        for i in 0..=m {
            for j in (i + 1)..=m {
                phi *= (-lambdas.get(i, j) * space.dist(pt(i), pt(j))).exp();
            }
        }
        sum += w * phi;
    });
    Ok(sum)
}
