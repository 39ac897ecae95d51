//! Primal network simplex for uncapacitated bipartite transportation problems
//! (spanning-tree structure with thread/successor lists and block search pivoting).

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const INVALID: usize = usize::MAX;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;

/// Dense cost matrix where `None` marks a forbidden (infinite-cost) arc.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<Option<S>>,
}

impl<S: Scalar> CostMatrix<S> {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Option<S>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Option<S> {
        self.data[i * self.cols + j]
    }
}

/// Optimal flow and node potentials with u_i + v_j ≤ c_ij on every arc.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution<S> {
    pub entries: Vec<(usize, usize, S)>,
    pub u: Vec<S>,
    pub v: Vec<S>,
    pub value: S,
}

/// Raised when the artificial arcs cannot be emptied.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasible;

struct Simplex<S> {
    arc_num: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<S>,
    flow: Vec<S>,
    state: Vec<i8>,
    pi: Vec<S>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    dirty_revs: Vec<usize>,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: S,
    block_size: usize,
    next_arc: usize,
    eps: S,
}

impl<S: Scalar> Simplex<S> {
    fn new(node_num: usize, arcs: Vec<(usize, usize, S)>, supply: &[S]) -> Self {
        let arc_num = arcs.len();
        let all = arc_num + node_num;
        let root = node_num;
        let mut s = Simplex {
            arc_num,
            source: vec![0; all],
            target: vec![0; all],
            cost: vec![S::zero(); all],
            flow: vec![S::zero(); all],
            state: vec![STATE_LOWER; all],
            pi: vec![S::zero(); node_num + 1],
            parent: vec![INVALID; node_num + 1],
            pred: vec![INVALID; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![0; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pred_dir: vec![0; node_num + 1],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: S::zero(),
            block_size: ((arc_num as f64).sqrt() as usize).max(10),
            next_arc: 0,
            eps: lit::<S>(64.0) * S::epsilon(),
        };
        let mut max_cost = S::zero();
        for (e, (u, v, c)) in arcs.into_iter().enumerate() {
            s.source[e] = u;
            s.target[e] = v;
            s.cost[e] = c;
            max_cost = max_cost.max(c.abs());
        }
        let art_cost = (max_cost + S::one()) * lit(node_num as f64 + 1.0);
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            let e = arc_num + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            if supply[u] >= S::zero() {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = S::zero();
                s.source[e] = u;
                s.target[e] = root;
                s.flow[e] = supply[u];
                s.cost[e] = S::zero();
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

    #[inline]
    fn reduced(&self, e: usize) -> (S, S) {
        let c = self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]];
        let scale = self.cost[e].abs() + self.pi[self.source[e]].abs() + self.pi[self.target[e]].abs();
        (lit::<S>(self.state[e] as f64) * c, self.eps * (S::one() + scale))
    }

    fn find_entering_arc(&mut self) -> bool {
        if self.arc_num == 0 {
            return false;
        }
        let mut min = S::zero();
        let mut cnt = self.block_size;
        let mut found = false;
        let mut e = self.next_arc;
        for _ in 0..self.arc_num {
            if self.state[e] != STATE_TREE {
                let (c, tol) = self.reduced(e);
                if c < -tol && c < min {
                    min = c;
                    self.in_arc = e;
                    found = true;
                }
            }
            e += 1;
            if e == self.arc_num {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        if found {
            self.next_arc = e;
        }
        found
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
        let (first, second) = (self.source[self.in_arc], self.target[self.in_arc]);
        let mut delta = S::infinity();
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
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > S::zero() {
            self.flow[self.in_arc] = self.flow[self.in_arc] + val;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] = self.flow[e] - lit::<S>(self.pred_dir[u] as f64) * val;
                u = self.parent[u];
            }
            u = self.target[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] = self.flow[e] + lit::<S>(self.pred_dir[u] as f64) * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.state[out] = STATE_LOWER;
        self.flow[out] = S::zero();
    }

    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        let v_out = self.parent[self.u_out];
        let (u_in, v_in, u_out, in_arc) = (self.u_in, self.v_in, self.u_out, self.in_arc);

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] { DIR_UP } else { DIR_DOWN };
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
            let thread_continue =
                if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };
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
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] { DIR_UP } else { DIR_DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[self.join] == v_in { self.join } else { INVALID };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != INVALID && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && v_in != old_rev_thread {
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
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in]
            - self.pi[self.u_in]
            - lit::<S>(self.pred_dir[self.u_in] as f64) * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] = self.pi[u] + sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_iter: usize) -> Result<()> {
        let mut it = 0usize;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Numerical("unbounded transportation problem".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            it += 1;
            if it > max_iter {
                return Err(Error::Numerical(format!("network simplex exceeded {max_iter} pivots")));
            }
        }
        Ok(())
    }
}

/// Solves min Σ c_ij γ_ij subject to row sums `a` and column sums `b`.
/// Returns `Ok(Err(Infeasible))` when forbidden arcs make the marginals incompatible.
pub fn network_simplex<S: Scalar>(
    costs: &CostMatrix<S>,
    a: &[S],
    b: &[S],
) -> Result<std::result::Result<TransportSolution<S>, Infeasible>> {
    let (n, m) = (costs.rows(), costs.cols());
    if a.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch { expected: n + m, got: a.len() + b.len() });
    }
    let mut supply: Vec<S> = a.iter().copied().chain(b.iter().map(|v| -*v)).collect();
    // absorb rounding imbalance into the heaviest sink
    let imbalance: S = supply.iter().copied().sum();
    if m > 0 {
        let heavy = (0..m).max_by(|&i, &j| b[i].partial_cmp(&b[j]).unwrap().then(j.cmp(&i))).unwrap();
        supply[n + heavy] = supply[n + heavy] - imbalance;
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if let Some(c) = costs.get(i, j) {
                arcs.push((i, n + j, c));
            }
        }
    }
    let node_num = n + m;
    let mut sx = Simplex::new(node_num, arcs, &supply);
    let max_iter = 50 * (sx.arc_num + node_num + 10) * 10;
    sx.run(max_iter)?;
    let total = a.iter().fold(S::zero(), |acc, v| acc + v.abs()).max(S::one());
    let art_tol = lit::<S>(1e-9) * total;
    for u in 0..node_num {
        if sx.flow[sx.arc_num + u] > art_tol {
            return Ok(Err(Infeasible));
        }
    }
    let mut entries = Vec::new();
    let mut value = S::zero();
    for e in 0..sx.arc_num {
        let f = sx.flow[e];
        if f > S::zero() {
            let (i, j) = (sx.source[e], sx.target[e] - n);
            entries.push((i, j, f));
            value = value + f * sx.cost[e];
        }
    }
    entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let u = (0..n).map(|i| -sx.pi[i]).collect();
    let v = (0..m).map(|j| sx.pi[n + j]).collect();
    Ok(Ok(TransportSolution { entries, u, v, value }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn matches_enumeration_on_small_assignment() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next() * 10.0 - 3.0).collect()).collect();
            let cm = CostMatrix::from_fn(n, n, |i, j| Some(c[i][j]));
            let w = vec![1.0 / n as f64; n];
            let sol = network_simplex(&cm, &w, &w).unwrap().unwrap();
            let best = permutations(n)
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| c[i][j]).sum::<f64>() / n as f64)
                .fold(f64::INFINITY, f64::min);
            assert!((sol.value - best).abs() < 1e-12, "n = {n}");
            for i in 0..n {
                for j in 0..n {
                    assert!(sol.u[i] + sol.v[j] <= c[i][j] + 1e-10);
                }
            }
        }
    }

    #[test]
    fn forbidden_arcs_and_infeasibility() {
        let cm = CostMatrix::from_fn(2, 2, |i, j| if i == j { None } else { Some(1.0) });
        let sol = network_simplex(&cm, &[0.5, 0.5], &[0.5, 0.5]).unwrap().unwrap();
        assert_eq!(sol.entries, vec![(0, 1, 0.5), (1, 0, 0.5)]);
        assert!(network_simplex(&cm, &[0.5, 0.5], &[0.6, 0.4]).unwrap().is_err());
    }

    #[test]
    fn single_precision_solve() {
        let cm = CostMatrix::<f32>::from_fn(2, 2, |i, j| Some(if i == j { 0.0 } else { 1.0 }));
        let sol = network_simplex(&cm, &[0.5, 0.5], &[0.5, 0.5]).unwrap().unwrap();
        assert_eq!(sol.value, 0.0);
    }
}
