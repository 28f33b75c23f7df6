//! Primal network simplex for uncapacitated transportation problems.
//!
//! Spanning-tree basis with an artificial root, stored as parent/pred arrays
//! plus a preorder thread list with subtree sizes, so pivots touch only the
//! moved subtree. Entering arcs come from block search. Flows, supplies and
//! costs are integers, so optimality is exact.
//!
//! Artificial arcs occupy the first `node_num` arc slots; real arcs follow and
//! may be appended between solves (column generation keeps the basis).

const STATE_LOWER: i8 = 1;
const STATE_TREE: i8 = 0;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const NONE: usize = usize::MAX;

pub(crate) struct NetworkSimplex {
    node_num: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<i64>,
    flow: Vec<i64>,
    state: Vec<i8>,
    pi: Vec<i64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    next_arc: usize,
    pivots: u64,
    // Per-pivot scratch.
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

#[derive(Debug, PartialEq, Eq)]
pub(crate) enum SolveStatus {
    Optimal,
    Infeasible,
}

impl NetworkSimplex {
    /// Nodes with the given supplies (positive = source); `max_cost` bounds
    /// every real arc cost that will ever be added.
    pub fn new(supply: &[i64], max_cost: i64) -> Self {
        let node_num = supply.len();
        let root = node_num;
        let all = node_num + 1;
        let art_cost = (max_cost.max(0) + 1).saturating_mul(node_num.max(1) as i64);
        let mut s = Self {
            node_num,
            source: vec![0; node_num],
            target: vec![0; node_num],
            cost: vec![0; node_num],
            flow: vec![0; node_num],
            state: vec![STATE_TREE; node_num],
            pi: vec![0; all],
            parent: vec![NONE; all],
            pred: vec![NONE; all],
            pred_dir: vec![DIR_UP; all],
            thread: vec![0; all],
            rev_thread: vec![0; all],
            succ_num: vec![1; all],
            last_succ: vec![0; all],
            dirty_revs: Vec::new(),
            next_arc: node_num,
            pivots: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = all;
        s.last_succ[root] = if node_num == 0 { root } else { root - 1 };
        for u in 0..node_num {
            let e = u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            if supply[u] >= 0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0;
                s.source[e] = u;
                s.target[e] = root;
                s.flow[e] = supply[u];
                s.cost[e] = 0;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.source[e] = root;
                s.target[e] = u;
                s.flow[e] = -supply[u];
                s.cost[e] = art_cost;
            }
        }
        s
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: i64) -> usize {
        debug_assert!(from < self.node_num && to < self.node_num);
        self.source.push(from);
        self.target.push(to);
        self.cost.push(cost);
        self.flow.push(0);
        self.state.push(STATE_LOWER);
        self.source.len() - 1
    }

    pub fn real_arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (self.node_num..self.source.len()).map(|e| (e, self.source[e], self.target[e]))
    }

    pub fn flow(&self, arc: usize) -> i64 {
        self.flow[arc]
    }

    pub fn pivots(&self) -> u64 {
        self.pivots
    }

    /// Reduced cost `c(u,v) + π(u) − π(v)`; nonnegative for every arc at optimality.
    pub fn reduced_cost(&self, from: usize, to: usize, cost: i64) -> i64 {
        cost + self.pi[from] - self.pi[to]
    }

    pub fn solve(&mut self) -> SolveStatus {
        while self.find_entering_arc() {
            self.find_join_node();
            let found = self.find_leaving_arc();
            assert!(found, "uncapacitated transportation problems are bounded");
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            self.pivots += 1;
        }
        if (0..self.node_num).any(|e| self.flow[e] != 0) {
            SolveStatus::Infeasible
        } else {
            SolveStatus::Optimal
        }
    }

    fn find_entering_arc(&mut self) -> bool {
        let first = self.node_num;
        let end = self.source.len();
        if end == first {
            return false;
        }
        let searched = end - first;
        let block = ((searched as f64).sqrt().ceil() as usize).max(10);
        if self.next_arc < first || self.next_arc >= end {
            self.next_arc = first;
        }
        let mut min = 0i64;
        let mut cnt = block;
        let start = self.next_arc;
        let mut e = start;
        loop {
            let c = self.state[e] as i64
                * (self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]]);
            if c < min {
                min = c;
                self.in_arc = e;
            }
            cnt -= 1;
            e += 1;
            if e == end {
                e = first;
            }
            if cnt == 0 {
                if min < 0 {
                    self.next_arc = e;
                    return true;
                }
                cnt = block;
            }
            if e == start {
                break;
            }
        }
        if min < 0 {
            self.next_arc = e;
            true
        } else {
            false
        }
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc];
        let mut v = self.target[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        // Entering arcs are always at their lower bound here.
        let first = self.source[self.in_arc];
        let second = self.target[self.in_arc];
        let mut delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        self.delta = delta;
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
            u = self.target[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        debug_assert_eq!(self.flow[out], 0);
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] {
                DIR_UP
            } else {
                DIR_DOWN
            };
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

            // Re-hang the stem from u_in up to u_out under v_in.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

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

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            // Reverse pred, pred_dir and subtree sizes along the stem.
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in {
            join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
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
        let u_in = self.u_in;
        let sigma = self.pi[self.v_in]
            - self.pi[u_in]
            - self.pred_dir[u_in] as i64 * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }
}
