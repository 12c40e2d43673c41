//! Balanced transportation problem solved by the transportation simplex.
//!
//! The basis is a spanning tree over the `m` supply and `k` demand nodes.
//! Supplies are perturbed by `1e-12 * total` (and one demand by `m` times
//! that) so that every basic solution is non-degenerate; the reported plan is
//! recomputed on the optimal tree with the original masses.

use crate::{Error, Result};

const BALANCE_TOL: f64 = 1e-9;
const PERTURBATION: f64 = 1e-12;
/// Reduced costs above `-PRICING_TOL * max_cost` count as non-negative.
const PRICING_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    supplies: Vec<f64>,
    demands: Vec<f64>,
    /// Row-major `supplies.len() x demands.len()` cost matrix.
    costs: Vec<f64>,
}

impl TransportProblem {
    pub fn new(supplies: Vec<f64>, demands: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != supplies.len() * demands.len() {
            return Err(Error::Transport(format!(
                "cost matrix has {} entries, expected {}x{}",
                costs.len(),
                supplies.len(),
                demands.len()
            )));
        }
        if supplies.iter().chain(&demands).any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Transport("masses must be finite and non-negative".into()));
        }
        if let Some(c) = costs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::Transport(format!("cost {c} is negative or not finite")));
        }
        let s: f64 = supplies.iter().sum();
        let d: f64 = demands.iter().sum();
        if (s - d).abs() > BALANCE_TOL * s.max(d) {
            return Err(Error::MassMismatch(s, d));
        }
        Ok(Self {
            supplies,
            demands,
            costs,
        })
    }

    /// Builds the cost matrix from a function of (row, column).
    pub fn from_fn(
        supplies: Vec<f64>,
        demands: Vec<f64>,
        mut cost: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let k = demands.len();
        let costs = (0..supplies.len() * k).map(|c| cost(c / k, c % k)).collect();
        Self::new(supplies, demands, costs)
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.demands.len() + j]
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Non-zero flows as `(supply index, demand index, amount)`.
    pub flows: Vec<(usize, usize, f64)>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(i, _, f) in &self.flows {
            s[i] += f;
        }
        s
    }

    pub fn col_sums(&self, k: usize) -> Vec<f64> {
        let mut s = vec![0.0; k];
        for &(_, j, f) in &self.flows {
            s[j] += f;
        }
        s
    }
}

pub fn solve(p: &TransportProblem) -> Result<TransportPlan> {
    let (m, k) = (p.supplies.len(), p.demands.len());
    let total: f64 = p.supplies.iter().sum();
    if m == 0 || k == 0 || total == 0.0 {
        return Ok(TransportPlan {
            flows: Vec::new(),
            objective: 0.0,
        });
    }
    let mut tree = Tree::new(p);
    tree.optimize(p)?;
    let flows = tree.unperturbed_flows();
    let flows: Vec<(usize, usize, f64)> = tree
        .basis
        .iter()
        .zip(flows)
        .filter(|(_, f)| *f > 0.0)
        .map(|(&cell, f)| (cell / k, cell % k, f))
        .collect();
    let objective = flows.iter().map(|&(i, j, f)| f * p.cost(i, j)).sum();
    Ok(TransportPlan { flows, objective })
}

/// Spanning-tree basis. Nodes `0..m` are supplies, `m..m+k` demands.
struct Tree {
    m: usize,
    k: usize,
    /// Node balances with the perturbation applied (supplies positive).
    net: Vec<f64>,
    /// Node balances with the original masses.
    net_exact: Vec<f64>,
    /// Basic cells (`i * k + j`), exactly `m + k - 1` of them.
    basis: Vec<usize>,
    /// Basis slots incident to each node.
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_slot: Vec<usize>,
    depth: Vec<usize>,
    preorder: Vec<usize>,
    potential: Vec<f64>,
    flow: Vec<f64>,
}

impl Tree {
    fn new(p: &TransportProblem) -> Self {
        let (m, k) = (p.supplies.len(), p.demands.len());
        let total: f64 = p.supplies.iter().sum();
        let eps = PERTURBATION * total;

        // Rounding imbalance and the perturbation both go to the largest demand.
        let big = (0..k)
            .max_by(|&a, &b| p.demands[a].total_cmp(&p.demands[b]))
            .expect("k > 0");
        let imbalance = total - p.demands.iter().sum::<f64>();
        let mut demands = p.demands.clone();
        demands[big] += imbalance;
        let net_exact: Vec<f64> = p
            .supplies
            .iter()
            .copied()
            .chain(demands.iter().map(|d| -d))
            .collect();
        let supplies: Vec<f64> = p.supplies.iter().map(|s| s + eps).collect();
        demands[big] += m as f64 * eps;
        let net: Vec<f64> = supplies
            .iter()
            .copied()
            .chain(demands.iter().map(|d| -d))
            .collect();

        // Northwest-corner starting basis.
        let mut basis = Vec::with_capacity(m + k - 1);
        let (mut i, mut j) = (0, 0);
        let (mut rs, mut rd) = (supplies[0], demands[0]);
        loop {
            basis.push(i * k + j);
            if i == m - 1 && j == k - 1 {
                break;
            }
            if j == k - 1 || (i < m - 1 && rs < rd) {
                rd -= rs;
                i += 1;
                rs = supplies[i];
            } else {
                rs -= rd;
                j += 1;
                rd = demands[j];
            }
        }

        let nodes = m + k;
        let mut tree = Self {
            m,
            k,
            net,
            net_exact,
            adj: vec![Vec::new(); nodes],
            basis,
            parent: vec![usize::MAX; nodes],
            parent_slot: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            preorder: Vec::with_capacity(nodes),
            potential: vec![0.0; nodes],
            flow: vec![0.0; m + k - 1],
        };
        for (slot, &cell) in tree.basis.iter().enumerate() {
            tree.adj[cell / k].push(slot);
            tree.adj[m + cell % k].push(slot);
        }
        tree.rebuild(p);
        tree
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let cell = self.basis[slot];
        let (row, col) = (cell / self.k, self.m + cell % self.k);
        if node == row {
            col
        } else {
            row
        }
    }

    /// Recomputes parents, depths, potentials and perturbed flows from the basis.
    fn rebuild(&mut self, p: &TransportProblem) {
        self.preorder.clear();
        self.parent[0] = usize::MAX;
        self.parent_slot[0] = usize::MAX;
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(u) = stack.pop() {
            self.preorder.push(u);
            for idx in 0..self.adj[u].len() {
                let slot = self.adj[u][idx];
                if slot == self.parent_slot[u] {
                    continue;
                }
                let v = self.other_end(slot, u);
                self.parent[v] = u;
                self.parent_slot[v] = slot;
                self.depth[v] = self.depth[u] + 1;
                let cell = self.basis[slot];
                let c = p.costs[cell];
                // Basic cells satisfy u_i + v_j = c_ij.
                self.potential[v] = c - self.potential[u];
                stack.push(v);
            }
        }
        debug_assert_eq!(self.preorder.len(), self.m + self.k, "basis is not a spanning tree");
        self.flow = self.tree_flows(&self.net);
    }

    /// Flows on the basis that balance `net`, peeled leaf-first.
    fn tree_flows(&self, net: &[f64]) -> Vec<f64> {
        let mut sub = net.to_vec();
        let mut flow = vec![0.0; self.basis.len()];
        for &x in self.preorder.iter().rev().take(self.preorder.len() - 1) {
            let slot = self.parent_slot[x];
            flow[slot] = if x < self.m { sub[x] } else { -sub[x] };
            let par = self.parent[x];
            sub[par] += sub[x];
        }
        flow
    }

    fn unperturbed_flows(&self) -> Vec<f64> {
        self.tree_flows(&self.net_exact)
            .into_iter()
            .map(|f| f.max(0.0))
            .collect()
    }

    fn reduced_cost(&self, p: &TransportProblem, cell: usize) -> f64 {
        p.costs[cell] - self.potential[cell / self.k] - self.potential[self.m + cell % self.k]
    }

    fn optimize(&mut self, p: &TransportProblem) -> Result<()> {
        let cells = self.m * self.k;
        let max_cost = p.costs.iter().copied().fold(0.0, f64::max);
        let tol = PRICING_TOL * max_cost;
        let block = ((cells as f64).sqrt() as usize).max(16).min(cells);
        let mut cursor = 0usize;
        for _ in 0..MAX_PIVOTS {
            // Block search: scan at most `block` cells past the last hit, then
            // widen until a full sweep finds nothing.
            let mut best = None;
            let mut best_rc = -tol;
            let mut scanned = 0;
            while scanned < cells {
                let cell = cursor;
                cursor = if cursor + 1 == cells { 0 } else { cursor + 1 };
                scanned += 1;
                let rc = self.reduced_cost(p, cell);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(cell);
                }
                if scanned % block == 0 && best.is_some() {
                    break;
                }
            }
            match best {
                None => return Ok(()),
                Some(cell) => self.pivot(p, cell),
            }
        }
        Err(Error::Transport(format!(
            "no optimal basis after {MAX_PIVOTS} pivots"
        )))
    }

    fn pivot(&mut self, p: &TransportProblem, entering: usize) {
        let row = entering / self.k;
        let col = self.m + entering % self.k;
        // Tree path from the entering column back to the entering row.
        let (mut a, mut b) = (col, row);
        let mut from_col = Vec::new();
        let mut from_row = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                from_col.push(self.parent_slot[a]);
                a = self.parent[a];
            } else {
                from_row.push(self.parent_slot[b]);
                b = self.parent[b];
            }
        }
        // Edges at even positions lose flow when the entering cell gains it.
        let leaving = from_col
            .iter()
            .chain(from_row.iter().rev())
            .step_by(2)
            .copied()
            .min_by(|&x, &y| {
                self.flow[x]
                    .total_cmp(&self.flow[y])
                    .then(self.basis[x].cmp(&self.basis[y]))
            })
            .expect("cycle has at least one decreasing edge");

        let old = self.basis[leaving];
        let (old_row, old_col) = (old / self.k, self.m + old % self.k);
        self.adj[old_row].retain(|&s| s != leaving);
        self.adj[old_col].retain(|&s| s != leaving);
        self.basis[leaving] = entering;
        self.adj[row].push(leaving);
        self.adj[col].push(leaving);
        self.rebuild(p);
    }
}
