//! Primal transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite supply/demand graph with
//! exactly `m + n - 1` cells (zero-flow basic cells are kept explicitly, so
//! degenerate problems need no perturbation). Pricing uses block search over
//! the cost matrix; after a run of degenerate pivots the solver switches to
//! Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 64;

pub(crate) struct Solution {
    /// Row-major `m × n` flows.
    pub flow: Vec<f64>,
}

struct Tree {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Cell index (row-major) -> slot in `cells`, or usize::MAX.
    slot_of: Vec<usize>,
}

impl Tree {
    fn north_west(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(0.0);
            let row_done = s[i] <= d[j];
            cells.push((i, j));
            flow.push(x);
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || row_done {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut slot_of = vec![usize::MAX; m * n];
        for (k, &(i, j)) in cells.iter().enumerate() {
            slot_of[i * n + j] = k;
        }
        Self {
            m,
            n,
            cells,
            flow,
            slot_of,
        }
    }

    /// Adjacency over nodes `0..m` (rows) and `m..m+n` (columns); entries
    /// are basis slots.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(k);
            adj[self.m + j].push(k);
        }
        adj
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let (i, j) = self.cells[slot];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    fn potentials(&self, adj: &[Vec<usize>], cost: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        let mut seen = vec![false; m + n];
        let mut stack = vec![0usize];
        pot[0] = 0.0;
        seen[0] = true;
        let mut visited = 1;
        while let Some(node) = stack.pop() {
            for &slot in &adj[node] {
                let next = self.other_end(slot, node);
                if seen[next] {
                    continue;
                }
                let (i, j) = self.cells[slot];
                let c = cost[i * n + j];
                // u_i + v_j = c_ij on basic cells.
                pot[next] = c - pot[node];
                seen[next] = true;
                visited += 1;
                stack.push(next);
            }
        }
        if visited != m + n {
            return Err(Error::Numerical("transport basis is not a spanning tree".into()));
        }
        let v = pot.split_off(m);
        Ok((pot, v))
    }

    /// Basis slots on the tree path from column node `m + j` to row node `i`,
    /// ordered starting at the column end.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut parent_slot = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let mut stack = vec![i];
        seen[i] = true;
        let target = self.m + j;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            for &slot in &adj[node] {
                let next = self.other_end(slot, node);
                if !seen[next] {
                    seen[next] = true;
                    parent_slot[next] = slot;
                    stack.push(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = target;
        while node != i {
            let slot = parent_slot[node];
            out.push(slot);
            node = self.other_end(slot, node);
        }
        out
    }
}

pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Solution> {
    let (m, n) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * n);
    let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let eps = 1e-12 * scale;

    let mut tree = Tree::north_west(supply, demand);
    let cells_total = m * n;
    let block = ((cells_total as f64).sqrt().ceil() as usize).max(16);
    let max_pivots = 100 * cells_total + 10_000;

    let mut cursor = 0usize;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    loop {
        let adj = tree.adjacency();
        let (u, v) = tree.potentials(&adj, cost)?;
        let reduced = |c: usize| cost[c] - u[c / n] - v[c % n];

        let bland = degenerate_run >= DEGENERATE_RUN;
        let entering = if bland {
            (0..cells_total).find(|&c| tree.slot_of[c] == usize::MAX && reduced(c) < -eps)
        } else {
            let mut best: Option<(usize, f64)> = None;
            let mut scanned = 0;
            while scanned < cells_total {
                let c = (cursor + scanned) % cells_total;
                scanned += 1;
                if tree.slot_of[c] != usize::MAX {
                    continue;
                }
                let r = reduced(c);
                if r < -eps && best.is_none_or(|(_, b)| r < b) {
                    best = Some((c, r));
                }
                if scanned % block == 0 && best.is_some() {
                    break;
                }
            }
            cursor = (cursor + scanned) % cells_total;
            best.map(|(c, _)| c)
        };

        let Some(cell) = entering else {
            break;
        };
        let (ei, ej) = (cell / n, cell % n);
        let path = tree.path(&adj, ei, ej);

        // Slots at even positions of the column-first path lose flow.
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &slot in path.iter().step_by(2) {
            let f = tree.flow[slot];
            let (li, lj) = tree.cells[slot];
            let better = f < theta - 1e-15
                || (f <= theta + 1e-15
                    && bland
                    && leave != usize::MAX
                    && li * n + lj < tree.cells[leave].0 * n + tree.cells[leave].1);
            if leave == usize::MAX || better {
                theta = f.min(theta);
                leave = slot;
            }
        }
        let theta = theta.max(0.0);

        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 {
                tree.flow[slot] = (tree.flow[slot] - theta).max(0.0);
            } else {
                tree.flow[slot] += theta;
            }
        }
        let (li, lj) = tree.cells[leave];
        tree.slot_of[li * n + lj] = usize::MAX;
        tree.cells[leave] = (ei, ej);
        tree.flow[leave] = theta;
        tree.slot_of[cell] = leave;

        degenerate_run = if theta <= 1e-15 { degenerate_run + 1 } else { 0 };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical(format!(
                "transport simplex exceeded {max_pivots} pivots"
            )));
        }
    }

    let mut flow = vec![0.0; cells_total];
    for (&(i, j), &f) in tree.cells.iter().zip(&tree.flow) {
        flow[i * n + j] = f;
    }
    Ok(Solution { flow })
}
