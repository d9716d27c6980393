//! Tree and path generators: graph-theoretic trees with their node, degree,
//! and grid-length measures; Galton-Watson sampling; and the reflected-walk /
//! Pitman-transform machinery that feeds the glue map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::{PLExcursion, Tail};
use crate::mat::SquareMatrix;
use crate::rng::stream_rng;
use crate::space::FiniteMMSpace;
use rand::Rng;
use rand_distr::{Distribution, Normal};

// stream tags separating the rng draws of unrelated generators
const GW_STREAM: u64 = 0x6777_7472;
const WALK_STREAM: u64 = 0x7761_6c6b;
const BROWNIAN_STREAM: u64 = 0x6272_6f77;
const BESSEL_STREAM: u64 = 0x6265_7333;

/// First-passage barrier multiple used to certify last-exit times on finite
/// simulation windows: the path must reach `TRUNC_FACTOR × R` before the
/// window ends, and the last exit below R prior to that passage is used.
/// Both the discrete and the continuum ensemble apply this same functional,
/// so windowing affects the two laws identically in comparisons.
pub const TRUNC_FACTOR: f64 = 3.0;

/// Numerical start height for the Bessel SDE generator; the recorded path
/// still begins at 0, the offset only seeds the 1/X drift away from the
/// singularity.
pub const BESSEL_EPS_START: f64 = 1e-3;

#[derive(Serialize, Deserialize)]
struct GraphTreeJson {
    parent: Vec<usize>,
    root: usize,
}

/// Rooted tree as a parent array with `parent[root] = root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphTreeJson", into = "GraphTreeJson")]
pub struct GraphTree {
    parent: Vec<usize>,
    root: usize,
}

impl TryFrom<GraphTreeJson> for GraphTree {
    type Error = Error;
    fn try_from(raw: GraphTreeJson) -> Result<Self> {
        GraphTree::new(raw.parent, raw.root)
    }
}

impl From<GraphTree> for GraphTreeJson {
    fn from(t: GraphTree) -> Self {
        GraphTreeJson {
            parent: t.parent,
            root: t.root,
        }
    }
}

impl GraphTree {
    pub fn new(parent: Vec<usize>, root: usize) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree must have at least one node".into()));
        }
        if root >= n || parent[root] != root {
            return Err(Error::InvalidTree("root must be its own parent".into()));
        }
        for (i, &p) in parent.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidTree(format!("parent of {i} out of range")));
            }
        }
        // every node must reach the root in at most n hops
        for start in 0..n {
            let mut cur = start;
            let mut hops = 0;
            while cur != root {
                cur = parent[cur];
                hops += 1;
                if hops > n {
                    return Err(Error::InvalidTree(format!("node {start} does not reach the root")));
                }
            }
        }
        Ok(GraphTree { parent, root })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated trees always contain the root
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent_of(&self, i: usize) -> usize {
        self.parent[i]
    }

    /// Graph degree: child count plus the parent edge (except at the root).
    pub fn degree(&self, i: usize) -> usize {
        let children = self.parent.iter().enumerate().filter(|&(c, &p)| p == i && c != i).count();
        children + usize::from(i != self.root)
    }

    /// (child, parent) pairs, one per edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter(move |&(c, _)| c != self.root)
            .map(|(c, &p)| (c, p))
    }

    /// All-pairs hop counts by BFS from every node.
    pub fn hop_matrix(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for (c, p) in self.edges() {
            adj[c].push(p);
            adj[p].push(c);
        }
        let mut hops = vec![vec![usize::MAX; n]; n];
        let mut queue = std::collections::VecDeque::new();
        for s in 0..n {
            hops[s][s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if hops[s][v] == usize::MAX {
                        hops[s][v] = hops[s][u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        hops
    }
}

/// Result of Galton-Watson sampling under a node budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GwOutcome {
    /// No node could be materialized (zero node budget).
    Extinct,
    Tree { tree: GraphTree, truncated: bool },
}

/// Breadth-first Galton-Watson tree with the given offspring law.
///
/// The root always materializes when the budget allows one node, so
/// `Extinct` only arises from `node_cap = 0`. Generation stops and flags
/// `truncated` the moment the budget is exhausted.
pub fn gw_tree(offspring: &[f64], seed: u64, node_cap: usize) -> Result<GwOutcome> {
    if offspring.is_empty() {
        return Err(Error::InvalidDistribution("offspring law must be nonempty".into()));
    }
    if offspring.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidDistribution(
            "offspring probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = offspring.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "offspring probabilities sum to {total}, not 1"
        )));
    }
    if node_cap == 0 {
        return Ok(GwOutcome::Extinct);
    }

    let mut cum = Vec::with_capacity(offspring.len());
    let mut acc = 0.0;
    for &p in offspring {
        acc += p;
        cum.push(acc);
    }

    let mut rng = stream_rng(seed, GW_STREAM);
    let mut parent = vec![0usize];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut truncated = false;
    'grow: while let Some(u) = queue.pop_front() {
        let draw = rng.random::<f64>() * acc;
        let count = cum.partition_point(|&c| c <= draw).min(offspring.len() - 1);
        for _ in 0..count {
            if parent.len() == node_cap {
                truncated = true;
                break 'grow;
            }
            parent.push(u);
            queue.push_back(parent.len() - 1);
        }
    }
    Ok(GwOutcome::Tree {
        tree: GraphTree::new(parent, 0)?,
        truncated,
    })
}

/// Geometric offspring law p_k = 2^{−(k+1)} truncated at `n_max` with the
/// dyadic remainder folded into the last entry, so the vector sums to 1
/// exactly in floating point.
pub fn geometric_offspring(n_max: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n_max).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
    let last = *p.last().expect("n_max must be at least 1");
    *p.last_mut().unwrap() = last * 2.0;
    p
}

/// Path with values at integer indices, linearly interpolated between them.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    values: Vec<f64>,
}

impl LatticePath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&0.0) {
            return Err(Error::Domain("path must start at 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path values must be finite"));
        }
        Ok(LatticePath { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Breakpoints ((i · time_scale, value · height_scale)) plus the tail,
    /// validated as an excursion.
    pub fn to_excursion(&self, time_scale: f64, height_scale: f64, tail: Tail) -> Result<PLExcursion> {
        let bp = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 * time_scale, v * height_scale))
            .collect();
        PLExcursion::new(bp, tail)
    }
}

/// W̃ = W − 2·inf over a simple ±1 random walk W, evaluated at integer times.
pub fn reflected_walk(n_steps: usize, seed: u64) -> LatticePath {
    let mut rng = stream_rng(seed, WALK_STREAM);
    let mut w = 0i64;
    let mut inf = 0i64;
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(0.0);
    for _ in 0..n_steps {
        w += if rng.random::<bool>() { 1 } else { -1 };
        inf = inf.min(w);
        values.push((w - 2 * inf) as f64);
    }
    LatticePath { values }
}

/// Pointwise transform B̃_t = B_t − 2·inf_{s≤t} B_s.
pub fn pitman_transform(path: &LatticePath) -> LatticePath {
    let mut inf = 0.0f64;
    let values = path
        .values
        .iter()
        .map(|&v| {
            inf = inf.min(v);
            v - 2.0 * inf
        })
        .collect();
    LatticePath { values }
}

/// Gaussian-increment path: n_grid i.i.d. N(0, dt) increments over the
/// horizon, dt = horizon / n_grid.
pub fn brownian_path(n_grid: usize, horizon: f64, seed: u64) -> LatticePath {
    assert!(n_grid >= 1, "n_grid must be at least 1");
    assert!(horizon > 0.0 && horizon.is_finite(), "horizon must be positive");
    let dt = horizon / n_grid as f64;
    let normal = Normal::new(0.0, dt.sqrt()).unwrap();
    let mut rng = stream_rng(seed, BROWNIAN_STREAM);
    let mut values = Vec::with_capacity(n_grid + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n_grid {
        x += normal.sample(&mut rng);
        values.push(x);
    }
    LatticePath { values }
}

/// Euler–Maruyama for dX = (1/X) dt + dB with reflection at 0, drift seeded
/// at [`BESSEL_EPS_START`]; cross-check generator only — the Pitman route is
/// exact in law and preferred.
pub fn bessel3_em(n_grid: usize, horizon: f64, seed: u64) -> LatticePath {
    assert!(n_grid >= 1, "n_grid must be at least 1");
    assert!(horizon > 0.0 && horizon.is_finite(), "horizon must be positive");
    let dt = horizon / n_grid as f64;
    let normal = Normal::new(0.0, dt.sqrt()).unwrap();
    let mut rng = stream_rng(seed, BESSEL_STREAM);
    let mut x = BESSEL_EPS_START;
    let mut values = Vec::with_capacity(n_grid + 1);
    values.push(0.0);
    for _ in 0..n_grid {
        x = (x + dt / x + normal.sample(&mut rng)).abs();
        values.push(x);
    }
    LatticePath { values }
}

/// Which measure a graph tree carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeMeasure {
    /// Unit mass per non-root node; the root carries 0.
    Node,
    /// deg(x)/2 per node, root included.
    Degree,
    /// Length measure at grid pitch h: each edge is subdivided into
    /// edge_len/h cells; interior grid points carry h, the two endpoint
    /// nodes carry h/2 from each incident cell boundary.
    LengthGrid(f64),
}

/// Metric space of a graph tree with the chosen measure; distances are graph
/// distance × edge_len, with subdivision points interleaved for the grid
/// measure. The tree metric is exact, so the triangle scan is skipped.
pub fn graph_to_mmspace(tree: &GraphTree, edge_len: f64, measure: TreeMeasure) -> Result<FiniteMMSpace> {
    if !(edge_len > 0.0 && edge_len.is_finite()) {
        return Err(Error::Domain("edge length must be positive and finite"));
    }
    let n = tree.len();
    let hops = tree.hop_matrix();

    let cells = match measure {
        TreeMeasure::LengthGrid(h) => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Domain("grid pitch must be positive and finite"));
            }
            let k = (edge_len / h).round();
            if k < 1.0 || k as usize as f64 != k || k * h != edge_len {
                return Err(Error::GridMismatch { pitch: h, edge_len });
            }
            k as usize
        }
        _ => 1,
    };

    // point p = (u, v, offset): `offset` along the edge u→v measured from u;
    // plain nodes are (x, x, 0)
    let mut points: Vec<(usize, usize, f64)> = (0..n).map(|x| (x, x, 0.0)).collect();
    let mut masses: Vec<f64> = match measure {
        TreeMeasure::Node => (0..n).map(|x| if x == tree.root() { 0.0 } else { 1.0 }).collect(),
        TreeMeasure::Degree => (0..n).map(|x| tree.degree(x) as f64 / 2.0).collect(),
        TreeMeasure::LengthGrid(h) => {
            // each edge contributes h/2 to both endpoint nodes
            let mut m = vec![0.0; n];
            for (c, p) in tree.edges() {
                m[c] += h / 2.0;
                m[p] += h / 2.0;
            }
            m
        }
    };
    if let TreeMeasure::LengthGrid(h) = measure {
        for (c, p) in tree.edges() {
            for j in 1..cells {
                points.push((p, c, j as f64 * h));
                masses.push(h);
            }
        }
    }

    let np = points.len();
    let mut dist = SquareMatrix::zeros(np);
    let point_dist = |p: (usize, usize, f64), q: (usize, usize, f64)| -> f64 {
        if (p.0, p.1) == (q.0, q.1) {
            return (p.2 - q.2).abs();
        }
        let through = |end_hops: usize, off: f64| off + edge_len * end_hops as f64;
        let pu = |x: usize| through(hops[p.0][x], p.2);
        let pv = |x: usize| through(hops[p.1][x], edge_len - p.2);
        f64::min(
            f64::min(pu(q.0) + q.2, pu(q.1) + (edge_len - q.2)),
            f64::min(pv(q.0) + q.2, pv(q.1) + (edge_len - q.2)),
        )
    };
    for i in 0..np {
        for j in (i + 1)..np {
            let d = point_dist(points[i], points[j]);
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    FiniteMMSpace::from_matrix_assume_triangle(dist, tree.root(), masses)
}

/// Index of the first value at or above the barrier.
fn first_passage(values: &[f64], barrier: f64) -> Option<usize> {
    values.iter().position(|&v| v >= barrier)
}

/// Rescaled reflected-walk excursion (heights × n⁻¹, times × n⁻²), cut at
/// the certified first passage above TRUNC_FACTOR·R and continued by a
/// linear tail at the rescaled lattice slope n.
pub fn kallenberg_excursion(n: usize, walk_steps: usize, seed: u64, r: f64) -> Result<PLExcursion> {
    if n == 0 {
        return Err(Error::Domain("scale n must be positive"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain("radius must be positive and finite"));
    }
    let barrier = TRUNC_FACTOR * r * n as f64;
    // lazy walk: stop as soon as the lattice path certifies the window
    let mut rng = stream_rng(seed, WALK_STREAM);
    let mut w = 0i64;
    let mut inf = 0i64;
    let mut values = vec![0.0f64];
    let mut hit = None;
    for step in 1..=walk_steps {
        w += if rng.random::<bool>() { 1 } else { -1 };
        inf = inf.min(w);
        let v = (w - 2 * inf) as f64;
        values.push(v);
        if v >= barrier {
            hit = Some(step);
            break;
        }
    }
    let ip = hit.ok_or(Error::InsufficientSteps {
        steps: walk_steps,
        level: TRUNC_FACTOR * r,
    })?;
    values.truncate(ip + 1);
    let scale = n as f64;
    LatticePath { values }.to_excursion(
        1.0 / (scale * scale),
        1.0 / scale,
        Tail::TransientLinear { slope: scale },
    )
}

/// Rescaled discrete Kallenberg tree: glue of the (n⁻¹, n⁻²)-rescaled
/// reflected walk at pitch n⁻², restricted at R.
pub fn kallenberg_discrete(n: usize, walk_steps: usize, seed: u64, r: f64) -> Result<FiniteMMSpace> {
    let e = kallenberg_excursion(n, walk_steps, seed, r)?;
    let scale = n as f64;
    e.glue_discretize(1.0 / (scale * scale), r)
}

/// Pitman transform of a Brownian path, cut at the certified first passage
/// above TRUNC_FACTOR·R — the continuum analogue of [`kallenberg_excursion`].
pub fn continuum_kallenberg_excursion(
    horizon: f64,
    n_grid: usize,
    seed: u64,
    r: f64,
) -> Result<PLExcursion> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain("radius must be positive and finite"));
    }
    let path = pitman_transform(&brownian_path(n_grid, horizon, seed));
    let barrier = TRUNC_FACTOR * r;
    let ip = first_passage(path.values(), barrier).ok_or(Error::HorizonTooShort {
        horizon,
        radius: barrier,
    })?;
    let dt = horizon / n_grid as f64;
    let values = path.values()[..=ip].to_vec();
    LatticePath { values }.to_excursion(dt, 1.0, Tail::TransientLinear { slope: 1.0 })
}

/// Sample of the continuum Kallenberg tree restricted at R, glued at pitch h.
pub fn continuum_kallenberg_sample(
    horizon: f64,
    n_grid: usize,
    seed: u64,
    r: f64,
    h: f64,
) -> Result<FiniteMMSpace> {
    let e = continuum_kallenberg_excursion(horizon, n_grid, seed, r)?;
    e.glue_discretize(h, r)
}
