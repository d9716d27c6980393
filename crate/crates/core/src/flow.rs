//! Dinic max-flow with `f64` capacities, sized for the small dense bipartite
//! networks that Prohorov feasibility checks produce.
//!
//! Termination with real capacities: each augmentation saturates its
//! bottleneck edge exactly (`c - c == 0.0`), so a blocking-flow phase makes at
//! most E augmentations, and the source-sink level strictly increases per
//! phase, bounding the phase count by the node count.

pub(crate) struct FlowNetwork {
    n: usize,
    // edges stored in pairs: edge 2k is forward, 2k+1 its reverse
    tail: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    // CSR adjacency, built once on the first max_flow call
    start: Vec<usize>,
    order: Vec<usize>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            n,
            tail: Vec::new(),
            to: Vec::new(),
            cap: Vec::new(),
            start: Vec::new(),
            order: Vec::new(),
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        debug_assert!(c >= 0.0);
        debug_assert!(self.start.is_empty(), "edges must precede max_flow");
        self.tail.push(u);
        self.to.push(v);
        self.cap.push(c);
        self.tail.push(v);
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn build_csr(&mut self) {
        self.start = vec![0; self.n + 1];
        for &u in &self.tail {
            self.start[u + 1] += 1;
        }
        for i in 0..self.n {
            self.start[i + 1] += self.start[i];
        }
        self.order = vec![0; self.tail.len()];
        let mut cursor = self.start.clone();
        for (e, &u) in self.tail.iter().enumerate() {
            self.order[cursor[u]] = e;
            cursor[u] += 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for k in self.start[u]..self.start[u + 1] {
                let e = self.order[k];
                let v = self.to[e];
                if self.cap[e] > 0.0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: f64) -> f64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.start[u + 1] - self.start[u] {
            let e = self.order[self.start[u] + self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0.0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.cap[e]));
                if d > 0.0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        if self.start.is_empty() {
            self.build_csr();
        }
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}
