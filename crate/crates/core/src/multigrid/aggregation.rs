use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::{SparseMatrix, TripletBuilder};

const UNASSIGNED: usize = usize::MAX;

/// Symmetric node-level strength graph in CSR form.
///
/// Node `J` is a strong neighbour of `I` when
/// `‖A_IJ‖ ≥ θ · max_{K≠I} ‖A_IK‖` in either direction, with `‖·‖` the
/// Frobenius norm of the `block × block` coupling.
pub(crate) struct StrengthGraph {
    pub offsets: Vec<usize>,
    pub neighbours: Vec<usize>,
    /// Coupling norm for each stored neighbour, used to break ties.
    pub weights: Vec<f64>,
}

impl StrengthGraph {
    pub fn new(a: &SparseMatrix, theta: f64, block: usize) -> Self {
        let n = a.n_rows() / block;
        let mut marker = vec![UNASSIGNED; n];
        let mut acc = vec![0.0; n];
        let mut cols = Vec::new();
        let mut directed: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n {
            cols.clear();
            for r in block * i..block * (i + 1) {
                for (j, v) in a.row(r) {
                    let jn = j / block;
                    if jn == i {
                        continue;
                    }
                    if marker[jn] != i {
                        marker[jn] = i;
                        acc[jn] = 0.0;
                        cols.push(jn);
                    }
                    if block == 1 {
                        acc[jn] += if v < 0.0 { -v } else { 0.0 };
                    } else {
                        acc[jn] += v * v;
                    }
                }
            }
            let max = cols.iter().fold(0.0f64, |m, &j| m.max(acc[j]));
            if max == 0.0 {
                continue;
            }
            // squared norms for blocks, plain magnitudes of negative couplings for scalars
            let cut = if block == 1 { theta * max } else { theta * theta * max };
            for &j in &cols {
                if acc[j] >= cut && acc[j] > 0.0 {
                    let w = if block == 1 { acc[j] } else { libm::sqrt(acc[j]) };
                    directed.push((i, j, w));
                    directed.push((j, i, w));
                }
            }
        }
        directed.sort_by_key(|a| (a.0, a.1));
        let mut offsets = vec![0usize; n + 1];
        let mut neighbours = Vec::with_capacity(directed.len());
        let mut weights: Vec<f64> = Vec::with_capacity(directed.len());
        let mut last = None;
        for (i, j, w) in directed {
            if last == Some((i, j)) {
                let lw = weights.last_mut().unwrap();
                *lw = lw.max(w);
                continue;
            }
            last = Some((i, j));
            neighbours.push(j);
            weights.push(w);
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self {
            offsets,
            neighbours,
            weights,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.neighbours[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }
}

/// Breadth-first visiting order of the graph, each component started from
/// its lowest-degree node. Greedy aggregation in this order does not depend
/// on how the input happens to be numbered.
fn breadth_first_order(graph: &StrengthGraph) -> Vec<usize> {
    let n = graph.n_nodes();
    let degree = |i: usize| graph.offsets[i + 1] - graph.offsets[i];
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&i| degree(i));
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let i = order[head];
            head += 1;
            for (j, _) in graph.neighbours(i) {
                if !seen[j] {
                    seen[j] = true;
                    order.push(j);
                }
            }
        }
    }
    order
}

/// Greedy three-pass aggregation. Returns the aggregate of every node and
/// the number of aggregates.
pub(crate) fn aggregate(graph: &StrengthGraph) -> (Vec<usize>, usize) {
    let n = graph.n_nodes();
    let order = breadth_first_order(graph);
    let mut agg = vec![UNASSIGNED; n];
    let mut count = 0;

    // 1: seed aggregates from nodes whose whole neighbourhood is free
    for &i in &order {
        if agg[i] != UNASSIGNED || graph.offsets[i] == graph.offsets[i + 1] {
            continue;
        }
        if graph.neighbours(i).all(|(j, _)| agg[j] == UNASSIGNED) {
            agg[i] = count;
            for (j, _) in graph.neighbours(i) {
                agg[j] = count;
            }
            count += 1;
        }
    }

    // 2: attach leftovers to the most strongly connected neighbouring aggregate
    let snapshot = agg.clone();
    for &i in &order {
        if agg[i] != UNASSIGNED {
            continue;
        }
        let mut best = (UNASSIGNED, -1.0);
        for (j, w) in graph.neighbours(i) {
            if snapshot[j] != UNASSIGNED && w > best.1 {
                best = (snapshot[j], w);
            }
        }
        agg[i] = best.0;
    }

    // 3: whatever remains forms aggregates with its free neighbours, or alone
    for &i in &order {
        if agg[i] != UNASSIGNED {
            continue;
        }
        agg[i] = count;
        for (j, _) in graph.neighbours(i) {
            if agg[j] == UNASSIGNED {
                agg[j] = count;
            }
        }
        count += 1;
    }
    (agg, count)
}

/// Piecewise-constant prolongator: every component of node `I` maps to the
/// same component of its aggregate.
pub(crate) fn tentative_prolongator(agg: &[usize], n_agg: usize, block: usize) -> SparseMatrix {
    let mut tb = TripletBuilder::with_capacity(agg.len() * block, n_agg * block, agg.len() * block);
    for (i, &a) in agg.iter().enumerate() {
        for c in 0..block {
            tb.push(block * i + c, block * a + c, 1.0);
        }
    }
    tb.build()
}
