//! Sufficient statistics, marginal likelihood and priors of the hierarchical
//! core-periphery model, and the mutable chain state that keeps them in
//! step with single-node moves.
//!
//! Every node pair `(u, v)` is governed by the edge probability of its
//! highest common group `h(u, v)`. With those probabilities integrated out
//! under uniform priors the likelihood depends on the graph only through
//! `t_r` (pairs whose highest common group is `r`) and `m_r` (the edges
//! among them):
//!
//! ```text
//! ln P(A | g, k) = sum_r [ ln m_r! + ln (t_r - m_r)! - ln (t_r + 1)! ]
//! ```

use smallvec::SmallVec;
use statrs::function::gamma::ln_gamma;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graph::{num_pairs, Graph};
use crate::membership::Membership;

const LN_FACTORIAL_TABLE: usize = 1 << 16;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..LN_FACTORIAL_TABLE)
            .map(|x| ln_gamma(x as f64 + 1.0))
            .collect()
    })
}

/// `ln x!`, tabulated for small arguments. The table holds the exact
/// values `ln_gamma` returns, so both paths agree bit for bit.
#[inline]
pub fn ln_factorial(x: u64) -> f64 {
    if x < 2 {
        return 0.0;
    }
    if (x as usize) < LN_FACTORIAL_TABLE {
        ln_factorial_table()[x as usize]
    } else {
        ln_gamma(x as f64 + 1.0)
    }
}

/// Per-group sufficient statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStats {
    /// Pairs whose highest common group is `r`.
    pub t: Vec<u64>,
    /// Edges among those pairs.
    pub m: Vec<u64>,
    /// Members of group `r`; `sizes[0] == n`.
    pub sizes: Vec<usize>,
}

impl GroupStats {
    pub fn num_groups(&self) -> usize {
        self.t.len()
    }
}

/// Contribution of one group to the log marginal likelihood. Exactly zero
/// for `t = 0`.
#[inline]
pub fn group_log_likelihood(t: u64, m: u64) -> f64 {
    debug_assert!(m <= t);
    ln_factorial(m) + ln_factorial(t - m) - ln_factorial(t + 1)
}

fn sum_in_order<I: Iterator<Item = f64>>(terms: I) -> f64 {
    terms.fold(0.0, |acc, x| acc + x)
}

/// Exact statistics by enumerating all `n(n-1)/2` pairs.
pub fn recompute_stats(graph: &Graph, mem: &Membership) -> GroupStats {
    let n = graph.num_nodes();
    let k = mem.num_groups();
    let mut t = vec![0u64; k];
    let mut m = vec![0u64; k];
    for u in 0..n {
        for v in (u + 1)..n {
            let r = mem.highest_common_group(u, v);
            t[r] += 1;
            if graph.has_edge(u, v) {
                m[r] += 1;
            }
        }
    }
    GroupStats {
        t,
        m,
        sizes: mem.sizes().to_vec(),
    }
}

/// `ln P(A | g, k)`; panics if some `m_r > t_r`.
pub fn log_likelihood(stats: &GroupStats) -> f64 {
    for (r, (&t, &m)) in stats.t.iter().zip(&stats.m).enumerate() {
        assert!(m <= t, "group {r}: m = {m} exceeds t = {t}");
    }
    sum_in_order(
        stats
            .t
            .iter()
            .zip(&stats.m)
            .map(|(&t, &m)| group_log_likelihood(t, m)),
    )
}

/// `ln P(g | k)`: each group `r >= 1` has a size drawn uniformly from
/// `0..=n` and then a uniformly chosen member set of that size.
pub fn log_prior_g(stats: &GroupStats, n: usize) -> f64 {
    log_prior_g_from_sizes(&stats.sizes, n)
}

pub fn log_prior_g_from_sizes(sizes: &[usize], n: usize) -> f64 {
    let n = n as u64;
    sum_in_order(sizes.iter().skip(1).map(|&nr| {
        let nr = nr as u64;
        ln_factorial(nr) + ln_factorial(n - nr) - ln_factorial(n + 1)
    }))
}

/// `ln P(k)` for a Poisson(1) prior on `k - 1`. Panics for `k = 0`.
pub fn log_prior_k(k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    -1.0 - ln_factorial(k as u64 - 1)
}

/// Posterior means `(m_r + 1) / (t_r + 2)` of the per-group edge
/// probabilities.
pub fn omega_estimates(stats: &GroupStats) -> Vec<f64> {
    stats
        .t
        .iter()
        .zip(&stats.m)
        .map(|(&t, &m)| (m as f64 + 1.0) / (t as f64 + 2.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeMove {
    Add,
    Remove,
}

/// A node move whose effect on the statistics has been evaluated but not
/// yet applied. Obtain from [`ModelState::prepare_add`] or
/// [`ModelState::prepare_remove`] and pass to [`ModelState::commit`].
#[derive(Debug, Clone)]
pub struct PendingMove {
    pub kind: NodeMove,
    pub node: usize,
    pub group: usize,
    /// Change in the cached log-likelihood if committed.
    pub delta: f64,
    new_log_lik: f64,
    changes: SmallVec<[(usize, i64, i64); 4]>,
}

/// Chain state: membership plus the statistics and log-likelihood it
/// implies, all kept consistent under every mutation.
#[derive(Debug, Clone)]
pub struct ModelState<'g> {
    graph: &'g Graph,
    membership: Membership,
    stats: GroupStats,
    terms: Vec<f64>,
    log_lik: f64,
    dt: Vec<i64>,
    dm: Vec<i64>,
}

impl<'g> ModelState<'g> {
    pub fn new(graph: &'g Graph, membership: Membership) -> Self {
        assert_eq!(graph.num_nodes(), membership.num_nodes());
        let stats = recompute_stats(graph, &membership);
        let terms: Vec<f64> = stats
            .t
            .iter()
            .zip(&stats.m)
            .map(|(&t, &m)| group_log_likelihood(t, m))
            .collect();
        let log_lik = sum_in_order(terms.iter().copied());
        let k = membership.num_groups();
        ModelState {
            graph,
            membership,
            stats,
            terms,
            log_lik,
            dt: vec![0; k],
            dm: vec![0; k],
        }
    }

    /// `k` groups with groups `1..k` empty.
    pub fn empty(graph: &'g Graph, k: usize) -> Self {
        Self::new(graph, Membership::new(graph.num_nodes(), k))
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    pub fn stats(&self) -> &GroupStats {
        &self.stats
    }

    pub fn num_groups(&self) -> usize {
        self.membership.num_groups()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_lik
    }

    pub fn log_prior_g(&self) -> f64 {
        log_prior_g(&self.stats, self.num_nodes())
    }

    /// Log of the unnormalized posterior `P(k) P(g | k) P(A | g, k)`.
    pub fn log_posterior(&self) -> f64 {
        log_prior_k(self.num_groups()) + self.log_prior_g() + self.log_lik
    }

    pub fn highest_common_group(&self, u: usize, v: usize) -> Result<usize> {
        let n = self.num_nodes();
        if u == v || u >= n || v >= n {
            return Err(Error::Contract(format!(
                "highest common group needs two distinct nodes below {n}, got ({u}, {v})"
            )));
        }
        Ok(self.membership.highest_common_group(u, v))
    }

    /// Group index of every edge, aligned with `graph.edges()`.
    pub fn edge_group_labels(&self) -> Vec<usize> {
        edge_group_labels(self.graph, &self.membership)
    }

    fn check_group(&self, s: usize) -> Result<()> {
        if s == 0 || s >= self.num_groups() {
            return Err(Error::Contract(format!(
                "group {s} is not a movable group (valid: 1..{})",
                self.num_groups()
            )));
        }
        Ok(())
    }

    /// Evaluates adding `u` to group `s`. Only pairs `(u, v)` with `v` in
    /// `s` can change class, from `h(u, v) < s` to `s`.
    pub fn prepare_add(&mut self, u: usize, s: usize) -> Result<PendingMove> {
        self.check_group(s)?;
        if self.membership.contains(u, s) {
            return Err(Error::Contract(format!("node {u} already in group {s}")));
        }
        let mem = &self.membership;
        for &v in mem.members(s) {
            let r = mem.highest_common_group(u, v as usize);
            if r < s {
                self.dt[r] -= 1;
                self.dt[s] += 1;
            }
        }
        for &v in self.graph.neighbors(u) {
            if mem.contains(v, s) {
                let r = mem.highest_common_group(u, v);
                if r < s {
                    self.dm[r] -= 1;
                    self.dm[s] += 1;
                }
            }
        }
        Ok(self.finish_prepare(NodeMove::Add, u, s))
    }

    /// Evaluates removing `u` from group `s`. Only pairs with `h(u, v) = s`
    /// change class, dropping to the highest common group without `s`.
    pub fn prepare_remove(&mut self, u: usize, s: usize) -> Result<PendingMove> {
        self.check_group(s)?;
        if !self.membership.contains(u, s) {
            return Err(Error::Contract(format!("node {u} not in group {s}")));
        }
        let mem = &self.membership;
        for &v in mem.members(s) {
            let v = v as usize;
            if v == u {
                continue;
            }
            if mem.highest_common_group(u, v) == s {
                let r = mem.highest_common_group_without(u, v, s);
                self.dt[s] -= 1;
                self.dt[r] += 1;
            }
        }
        for &v in self.graph.neighbors(u) {
            if mem.contains(v, s) && mem.highest_common_group(u, v) == s {
                let r = mem.highest_common_group_without(u, v, s);
                self.dm[s] -= 1;
                self.dm[r] += 1;
            }
        }
        Ok(self.finish_prepare(NodeMove::Remove, u, s))
    }

    fn finish_prepare(&mut self, kind: NodeMove, node: usize, group: usize) -> PendingMove {
        let mut changes = SmallVec::new();
        for r in 0..self.num_groups() {
            if self.dt[r] != 0 || self.dm[r] != 0 {
                changes.push((r, self.dt[r], self.dm[r]));
                self.dt[r] = 0;
                self.dm[r] = 0;
            }
        }
        let mut next = 0;
        let new_log_lik = sum_in_order((0..self.num_groups()).map(|r| match changes.get(next) {
            Some(&(cr, dt, dm)) if cr == r => {
                next += 1;
                let t = (self.stats.t[r] as i64 + dt) as u64;
                let m = (self.stats.m[r] as i64 + dm) as u64;
                group_log_likelihood(t, m)
            }
            _ => self.terms[r],
        }));
        PendingMove {
            kind,
            node,
            group,
            delta: new_log_lik - self.log_lik,
            new_log_lik,
            changes,
        }
    }

    /// Applies a move produced by `prepare_*` on this unchanged state.
    pub fn commit(&mut self, mv: PendingMove) {
        for &(r, dt, dm) in &mv.changes {
            self.stats.t[r] = (self.stats.t[r] as i64 + dt) as u64;
            self.stats.m[r] = (self.stats.m[r] as i64 + dm) as u64;
            self.terms[r] = group_log_likelihood(self.stats.t[r], self.stats.m[r]);
        }
        match mv.kind {
            NodeMove::Add => {
                self.membership.add(mv.node, mv.group);
                self.stats.sizes[mv.group] += 1;
            }
            NodeMove::Remove => {
                self.membership.remove(mv.node, mv.group);
                self.stats.sizes[mv.group] -= 1;
            }
        }
        self.log_lik = mv.new_log_lik;
    }

    /// Adds `u` to group `s` and returns the log-likelihood change.
    pub fn apply_add(&mut self, u: usize, s: usize) -> Result<f64> {
        let mv = self.prepare_add(u, s)?;
        let delta = mv.delta;
        self.commit(mv);
        Ok(delta)
    }

    /// Removes `u` from group `s` and returns the log-likelihood change.
    pub fn apply_remove(&mut self, u: usize, s: usize) -> Result<f64> {
        let mv = self.prepare_remove(u, s)?;
        let delta = mv.delta;
        self.commit(mv);
        Ok(delta)
    }

    /// Inserts an empty group at `s` (`1 <= s <= k`), shifting groups
    /// `>= s` up. The likelihood is unchanged.
    pub fn insert_group(&mut self, s: usize) -> Result<()> {
        if s == 0 || s > self.num_groups() {
            return Err(Error::Contract(format!(
                "cannot insert a group at {s} (valid: 1..={})",
                self.num_groups()
            )));
        }
        self.membership.insert_group(s);
        self.stats.t.insert(s, 0);
        self.stats.m.insert(s, 0);
        self.stats.sizes.insert(s, 0);
        self.terms.insert(s, 0.0);
        self.dt.push(0);
        self.dm.push(0);
        self.log_lik = sum_in_order(self.terms.iter().copied());
        Ok(())
    }

    /// Deletes empty group `s >= 1`, shifting groups above it down.
    pub fn delete_group(&mut self, s: usize) -> Result<()> {
        self.check_group(s)?;
        if self.stats.sizes[s] != 0 {
            return Err(Error::Contract(format!(
                "group {s} has {} members and cannot be deleted",
                self.stats.sizes[s]
            )));
        }
        debug_assert_eq!(self.stats.t[s], 0);
        self.membership.delete_group(s);
        self.stats.t.remove(s);
        self.stats.m.remove(s);
        self.stats.sizes.remove(s);
        self.terms.remove(s);
        self.dt.pop();
        self.dm.pop();
        self.log_lik = sum_in_order(self.terms.iter().copied());
        Ok(())
    }

    /// Compares the maintained statistics with a full recomputation.
    pub fn verify(&self) -> Result<()> {
        let fresh = recompute_stats(self.graph, &self.membership);
        if fresh != self.stats {
            return Err(Error::Contract(format!(
                "maintained statistics {:?} differ from recomputed {:?}",
                self.stats, fresh
            )));
        }
        let ll = log_likelihood(&fresh);
        if (ll - self.log_lik).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "cached log-likelihood {} differs from recomputed {}",
                self.log_lik, ll
            )));
        }
        Ok(())
    }
}

pub fn edge_group_labels(graph: &Graph, mem: &Membership) -> Vec<usize> {
    graph
        .edges()
        .iter()
        .map(|&(u, v)| mem.highest_common_group(u, v))
        .collect()
}

/// Sanity totals: `sum t = n(n-1)/2` and `sum m = |E|`.
pub fn totals_consistent(graph: &Graph, stats: &GroupStats) -> bool {
    stats.t.iter().sum::<u64>() == num_pairs(graph.num_nodes())
        && stats.m.iter().sum::<u64>() == graph.num_edges() as u64
        && stats.t.iter().zip(&stats.m).all(|(t, m)| m <= t)
}
