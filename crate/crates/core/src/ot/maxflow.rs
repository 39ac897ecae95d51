//! Dinic max-flow on bipartite transport graphs, with a min-cut Hall witness.

use crate::scalar::{lit, Scalar};
use std::collections::VecDeque;

struct Edge<S> {
    to: usize,
    cap: S,
}

pub(crate) struct Dinic<S> {
    edges: Vec<Edge<S>>,
    adj: Vec<Vec<usize>>,
    level: Vec<i64>,
    iter: Vec<usize>,
    eps: S,
}

impl<S: Scalar> Dinic<S> {
    pub fn new(n: usize, eps: S) -> Self {
        Dinic { edges: Vec::new(), adj: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n], eps }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: S) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to: v, cap });
        self.adj[u].push(id);
        self.edges.push(Edge { to: u, cap: S::zero() });
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently carried by forward edge `id`.
    pub fn flow_on(&self, id: usize) -> S {
        self.edges[id + 1].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let to = self.edges[e].to;
                if self.edges[e].cap > self.eps && self.level[to] < 0 {
                    self.level[to] = self.level[u] + 1;
                    q.push_back(to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: S) -> S {
        if u == t {
            return f;
        }
        while self.iter[u] < self.adj[u].len() {
            let e = self.adj[u][self.iter[u]];
            let to = self.edges[e].to;
            if self.edges[e].cap > self.eps && self.level[u] < self.level[to] {
                let d = self.dfs(to, t, f.min(self.edges[e].cap));
                if d > S::zero() {
                    self.edges[e].cap = self.edges[e].cap - d;
                    self.edges[e ^ 1].cap = self.edges[e ^ 1].cap + d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        S::zero()
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> S {
        let mut flow = S::zero();
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, S::infinity());
                if f <= S::zero() {
                    break;
                }
                flow = flow + f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph (after `max_flow`).
    pub fn reachable(&mut self, s: usize) -> Vec<bool> {
        self.bfs(s);
        self.level.iter().map(|l| *l >= 0).collect()
    }
}

/// Result of a bipartite feasibility check.
pub(crate) struct BipartiteFlow<S> {
    pub flow: S,
    pub entries: Vec<(usize, usize, S)>,
    /// Sources reachable from the super-source in the residual graph.
    pub cut_sources: Vec<usize>,
    pub cut_targets: Vec<usize>,
}

/// Max-flow from weights `a` to weights `b` through the allowed arcs.
pub(crate) fn bipartite_flow<S: Scalar>(a: &[S], b: &[S], allowed: impl Fn(usize, usize) -> bool) -> BipartiteFlow<S> {
    let (n, m) = (a.len(), b.len());
    let (src, snk) = (n + m, n + m + 1);
    let mut g = Dinic::new(n + m + 2, lit::<S>(1e-15));
    let big = a.iter().fold(S::one(), |acc, v| acc + *v);
    for (i, w) in a.iter().enumerate() {
        g.add_edge(src, i, *w);
    }
    for (j, w) in b.iter().enumerate() {
        g.add_edge(n + j, snk, *w);
    }
    let mut mids = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if allowed(i, j) {
                mids.push((i, j, g.add_edge(i, n + j, big)));
            }
        }
    }
    let flow = g.max_flow(src, snk);
    let entries = mids
        .into_iter()
        .filter_map(|(i, j, id)| {
            let f = g.flow_on(id);
            (f > S::zero()).then_some((i, j, f))
        })
        .collect();
    let reach = g.reachable(src);
    BipartiteFlow {
        flow,
        entries,
        cut_sources: (0..n).filter(|&i| reach[i]).collect(),
        cut_targets: (0..m).filter(|&j| reach[n + j]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_through_forbidden_diagonal() {
        let r = bipartite_flow(&[0.5f64, 0.5], &[0.6, 0.4], |i, j| i != j);
        assert!((r.flow - 0.9).abs() < 1e-12);
        // source 1 can only reach target 0 (capacity 0.6) while source 0 only reaches target 1 (0.4)
        assert_eq!(r.cut_sources, vec![0]);
        assert_eq!(r.cut_targets, vec![1]);
    }
}
