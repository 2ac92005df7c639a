//! Primal network simplex for the uncapacitated transportation problem.
//!
//! The spanning-tree bookkeeping (parent / thread / successor counts, block
//! search pricing, last-blocking-arc leaving rule) follows the classic
//! strongly feasible tree formulation. The arc set is sparse: it starts from
//! a north-west-corner tree plus nearest-neighbour arcs and is grown by dense
//! pricing of the full bipartite cost until no pair has negative reduced cost.

use crate::error::{Error, Result};
use crate::exec::Exec;

const NONE: usize = usize::MAX;
const UP: i8 = 1;
const DOWN: i8 = -1;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    /// Nearest-neighbour arcs seeded per node (in addition to the mass ratio).
    pub neighbors: usize,
    /// Arcs added per source row in one pricing round.
    pub add_per_row: usize,
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            neighbors: 4,
            add_per_row: 8,
            max_pivots: 50_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    /// `Σ flow · cost` in integer mass units.
    pub objective: f64,
    /// Positive flows `(source, destination, amount)`.
    pub flows: Vec<(usize, usize, i64)>,
    /// Dual potentials `α_i` (sources) and `β_j` (destinations) with
    /// `α_i + β_j ≤ c_ij`. Only read by the tests; the certificate carries
    /// the summary.
    #[cfg_attr(not(test), allow(dead_code))]
    pub alpha: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub beta: Vec<f64>,
    /// `max(0, max_ij (α_i + β_j − c_ij))`.
    pub dual_infeasibility: f64,
    /// `|primal − dual|` per unit mass.
    pub duality_gap: f64,
    pub pivots: usize,
    pub pricing_rounds: usize,
    pub arcs: usize,
}

struct Network {
    src: Vec<usize>,
    tgt: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<i64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<f64>,
    next_arc: usize,
    dirty: Vec<usize>,
    eps: f64,
    // current pivot
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

/// Solve `min Σ c_ij f_ij` subject to row sums `supply` and column sums
/// `demand` (equal totals). `src_order` / `dst_order` fix the sweep order of
/// the north-west-corner start; good orders (space-filling curves) make the
/// start nearly optimal.
pub(crate) fn solve<C>(
    supply: &[i64],
    demand: &[i64],
    cost: &C,
    src_order: &[usize],
    dst_order: &[usize],
    opts: SimplexOptions,
    exec: Exec,
) -> Result<SimplexSolution>
where
    C: Fn(usize, usize) -> f64 + Sync,
{
    let (n, m) = (supply.len(), demand.len());
    assert!(n > 0 && m > 0);
    assert_eq!(supply.iter().sum::<i64>(), demand.iter().sum::<i64>());
    let nodes = n + m;

    // North-west corner along the given orders. When a source and a
    // destination are exhausted together the zero arc goes to the next
    // destination, which keeps every zero-flow tree arc pointing away from
    // the root (source src_order[0]).
    let mut tree_arcs: Vec<(usize, usize, i64)> = Vec::with_capacity(nodes - 1);
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut p, mut q) = (0usize, 0usize);
        loop {
            let (i, j) = (src_order[p], dst_order[q]);
            let f = a[i].min(b[j]);
            tree_arcs.push((i, j, f));
            a[i] -= f;
            b[j] -= f;
            if p == n - 1 && q == m - 1 {
                break;
            }
            if a[i] == 0 && b[j] == 0 {
                if q + 1 < m {
                    q += 1;
                } else {
                    p += 1;
                }
            } else if a[i] == 0 {
                p += 1;
            } else {
                q += 1;
            }
        }
    }
    debug_assert_eq!(tree_arcs.len(), nodes - 1);

    let k_src = (opts.neighbors + m.div_ceil(n)).min(m);
    let k_dst = (opts.neighbors + n.div_ceil(m)).min(n);
    let mut arcs: Vec<(usize, usize)> = tree_arcs.iter().map(|&(i, j, _)| (i, j)).collect();
    let near_src = exec.map(n, |i| nearest(m, k_src, |j| cost(i, j)));
    let near_dst = exec.map(m, |j| nearest(n, k_dst, |i| cost(i, j)));
    for (i, js) in near_src.iter().enumerate() {
        arcs.extend(js.iter().map(|&j| (i, j)));
    }
    for (j, is) in near_dst.iter().enumerate() {
        arcs.extend(is.iter().map(|&i| (i, j)));
    }
    let tree_len = tree_arcs.len();
    {
        // keep the tree arcs first, dedupe the rest
        let mut seen = std::collections::HashSet::with_capacity(arcs.len());
        let mut kept = Vec::with_capacity(arcs.len());
        for (idx, a) in arcs.into_iter().enumerate() {
            if seen.insert(a) || idx < tree_len {
                kept.push(a);
            }
        }
        arcs = kept;
    }

    let mut net = Network {
        src: Vec::with_capacity(arcs.len()),
        tgt: Vec::with_capacity(arcs.len()),
        cost: Vec::with_capacity(arcs.len()),
        flow: Vec::with_capacity(arcs.len()),
        in_tree: Vec::with_capacity(arcs.len()),
        parent: vec![NONE; nodes],
        pred: vec![NONE; nodes],
        dir: vec![0; nodes],
        thread: vec![NONE; nodes],
        rev_thread: vec![NONE; nodes],
        succ_num: vec![0; nodes],
        last_succ: vec![NONE; nodes],
        pi: vec![0.0; nodes],
        next_arc: 0,
        dirty: Vec::new(),
        eps: 0.0,
        in_arc: NONE,
        join: NONE,
        u_in: NONE,
        v_in: NONE,
        u_out: NONE,
        delta: 0,
    };
    let mut max_cost = 0.0f64;
    for (idx, &(i, j)) in arcs.iter().enumerate() {
        let c = cost(i, j);
        max_cost = max_cost.max(c.abs());
        net.src.push(i);
        net.tgt.push(n + j);
        net.cost.push(c);
        if idx < tree_len {
            net.flow.push(tree_arcs[idx].2);
            net.in_tree.push(true);
        } else {
            net.flow.push(0);
            net.in_tree.push(false);
        }
    }
    net.eps = 1e-12 * (1.0 + max_cost);
    net.build_tree(src_order[0]);
    net.recompute_potentials(src_order[0]);

    let mut pivots = 0usize;
    let mut rounds = 0usize;
    let mut dual_infeasibility;
    loop {
        while let Some(e) = net.find_entering() {
            net.pivot(e)?;
            pivots += 1;
            if pivots > opts.max_pivots {
                return Err(Error::SimplexStalled(pivots));
            }
        }
        net.recompute_potentials(src_order[0]);
        rounds += 1;
        let pi = &net.pi;
        let eps = net.eps;
        let per_row = opts.add_per_row.max(1);
        let priced = exec.map(n, |i| {
            let pi_i = pi[i];
            let mut worst = 0.0f64;
            let mut neg: Vec<(f64, usize)> = Vec::new();
            for j in 0..m {
                let rc = cost(i, j) + pi_i - pi[n + j];
                if rc < worst {
                    worst = rc;
                }
                if rc < -eps {
                    neg.push((rc, j));
                }
            }
            if neg.len() > per_row {
                neg.select_nth_unstable_by(per_row - 1, |a, b| a.0.total_cmp(&b.0));
                neg.truncate(per_row);
            }
            (worst, neg)
        });
        dual_infeasibility = priced.iter().map(|(w, _)| -w).fold(0.0, f64::max) + 0.0; // `+ 0.0` maps -0.0 to 0.0
        let mut added = 0;
        for (i, (_, neg)) in priced.into_iter().enumerate() {
            for (_, j) in neg {
                let c = cost(i, j);
                net.src.push(i);
                net.tgt.push(n + j);
                net.cost.push(c);
                net.flow.push(0);
                net.in_tree.push(false);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }

    let mut objective = 0.0;
    let mut flows = Vec::new();
    for e in 0..net.src.len() {
        if net.flow[e] > 0 {
            objective += net.flow[e] as f64 * net.cost[e];
            flows.push((net.src[e], net.tgt[e] - n, net.flow[e]));
        }
    }
    flows.sort_unstable();
    let alpha: Vec<f64> = (0..n).map(|i| -net.pi[i]).collect();
    let beta: Vec<f64> = (0..m).map(|j| net.pi[n + j]).collect();
    let dual: f64 = supply.iter().zip(&alpha).map(|(s, a)| *s as f64 * a).sum::<f64>()
        + demand.iter().zip(&beta).map(|(d, b)| *d as f64 * b).sum::<f64>();
    let total = supply.iter().sum::<i64>() as f64;
    Ok(SimplexSolution {
        objective,
        flows,
        alpha,
        beta,
        dual_infeasibility,
        duality_gap: (objective - dual).abs() / total,
        pivots,
        pricing_rounds: rounds,
        arcs: net.src.len(),
    })
}

/// Indices of the `k` smallest values of `f` over `0..len`, ascending index order.
fn nearest(len: usize, k: usize, f: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut v: Vec<(f64, usize)> = (0..len).map(|j| (f(j), j)).collect();
    if k < len {
        v.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.truncate(k);
    }
    let mut idx: Vec<usize> = v.into_iter().map(|(_, j)| j).collect();
    idx.sort_unstable();
    idx
}

impl Network {
    fn build_tree(&mut self, root: usize) {
        let nodes = self.parent.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for e in 0..self.src.len() {
            if self.in_tree[e] {
                adj[self.src[e]].push(e);
                adj[self.tgt[e]].push(e);
            }
        }
        let mut order = Vec::with_capacity(nodes);
        let mut stack = vec![root];
        let mut seen = vec![false; nodes];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &e in adj[u].iter().rev() {
                let v = if self.src[e] == u { self.tgt[e] } else { self.src[e] };
                if !seen[v] {
                    seen[v] = true;
                    self.parent[v] = u;
                    self.pred[v] = e;
                    self.dir[v] = if self.src[e] == v { UP } else { DOWN };
                    stack.push(v);
                }
            }
        }
        assert_eq!(order.len(), nodes, "initial arcs do not span the network");
        let mut pos = vec![0; nodes];
        for (k, &u) in order.iter().enumerate() {
            pos[u] = k;
            self.thread[u] = order[(k + 1) % nodes];
            self.rev_thread[order[(k + 1) % nodes]] = u;
            self.succ_num[u] = 1;
        }
        for &u in order.iter().rev() {
            if self.parent[u] != NONE {
                let p = self.parent[u];
                self.succ_num[p] += self.succ_num[u];
            }
        }
        for &u in &order {
            self.last_succ[u] = order[pos[u] + self.succ_num[u] - 1];
        }
    }

    /// Potentials from scratch along the thread (parents precede children).
    fn recompute_potentials(&mut self, root: usize) {
        self.pi[root] = 0.0;
        let mut u = self.thread[root];
        while u != root {
            let e = self.pred[u];
            let p = self.parent[u];
            // reduced cost c + π_src − π_tgt vanishes on tree arcs
            self.pi[u] = if self.dir[u] == UP {
                self.pi[p] - self.cost[e]
            } else {
                self.pi[p] + self.cost[e]
            };
            u = self.thread[u];
        }
    }

    fn find_entering(&mut self) -> Option<usize> {
        let total = self.src.len();
        if total == 0 {
            return None;
        }
        let block = ((total as f64).sqrt() as usize).max(10);
        let mut min = -self.eps;
        let mut best = NONE;
        let mut cnt = block;
        let mut e = self.next_arc.min(total - 1);
        for _ in 0..total {
            if !self.in_tree[e] {
                let c = self.cost[e] + self.pi[self.src[e]] - self.pi[self.tgt[e]];
                if c < min {
                    min = c;
                    best = e;
                }
            }
            e += 1;
            if e == total {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if best != NONE {
                    self.next_arc = e;
                    return Some(best);
                }
                cnt = block;
            }
        }
        if best != NONE {
            self.next_arc = e;
            Some(best)
        } else {
            None
        }
    }

    fn pivot(&mut self, in_arc: usize) -> Result<()> {
        self.in_arc = in_arc;
        let first = self.src[in_arc];
        let second = self.tgt[in_arc];
        let (mut u, mut v) = (first, second);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;

        // Leaving arc: last blocking arc met when walking the cycle in the
        // direction of the flow change.
        let mut delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.dir[u] == UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.dir[u] == DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 0 {
            return Err(Error::invalid("unbounded transport cycle (negative cost cycle with infinite capacity)"));
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;

        // change flow
        if delta > 0 {
            self.flow[in_arc] += delta;
            let mut u = self.src[in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.dir[u] as i64 * delta;
                u = self.parent[u];
            }
            let mut u = self.tgt[in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.dir[u] as i64 * delta;
                u = self.parent[u];
            }
        }
        self.in_tree[in_arc] = true;
        let out_arc = self.pred[self.u_out];
        self.in_tree[out_arc] = false;

        self.update_tree();
        self.update_potential();
        Ok(())
    }

    fn update_tree(&mut self) {
        let (u_in, v_in, u_out, join, in_arc) = (self.u_in, self.v_in, self.u_out, self.join, self.in_arc);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.dir[u_in] = if u_in == self.src[in_arc] { UP } else { DOWN };
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            // Re-hang the stem u_in .. u_out below v_in.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty.clear();
            self.dirty.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty.len() {
                let u = self.dirty[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.dir[u] = -self.dir[p];
                // succ_num[u] - succ_num[p] is negative in the old tree
                tmp_sc = (tmp_sc + self.succ_num[u]).wrapping_sub(self.succ_num[p]);
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.dir[u_in] = if u_in == self.src[in_arc] { UP } else { DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let (u_in, v_in) = (self.u_in, self.v_in);
        let sigma = self.pi[v_in] - self.pi[u_in] - self.dir[u_in] as f64 * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    #[cfg(test)]
    fn check_tree(&self, root: usize) {
        let nodes = self.parent.len();
        // thread is a single cycle in preorder
        let mut order = vec![root];
        let mut u = self.thread[root];
        while u != root {
            order.push(u);
            assert!(order.len() <= nodes, "thread does not close");
            u = self.thread[u];
        }
        assert_eq!(order.len(), nodes);
        for &u in &order {
            assert_eq!(self.rev_thread[self.thread[u]], u);
        }
        let mut pos = vec![0; nodes];
        for (k, &u) in order.iter().enumerate() {
            pos[u] = k;
        }
        let mut succ = vec![1usize; nodes];
        for &u in order.iter().rev() {
            if u != root {
                assert!(pos[self.parent[u]] < pos[u]);
                succ[self.parent[u]] += succ[u];
                let e = self.pred[u];
                assert!(self.in_tree[e]);
                let (a, b) = (self.src[e], self.tgt[e]);
                assert!((a == u && b == self.parent[u] && self.dir[u] == UP) || (b == u && a == self.parent[u] && self.dir[u] == DOWN));
                let rc = self.cost[e] + self.pi[a] - self.pi[b];
                assert!(rc.abs() < 1e-9, "tree arc reduced cost {rc}");
            }
        }
        for &u in &order {
            assert_eq!(self.succ_num[u], succ[u], "succ_num at {u}");
            assert_eq!(self.last_succ[u], order[pos[u] + succ[u] - 1], "last_succ at {u}");
        }
        assert_eq!(self.in_tree.iter().filter(|t| **t).count(), nodes - 1);
    }
}
