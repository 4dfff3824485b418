//! Forward sampling of networks from the hierarchical model.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::Membership;
use crate::sampler::ChainRng;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub membership: Membership,
    /// Edge probability for pairs whose highest common group is `r`.
    pub omega: Vec<f64>,
}

impl GeneratorParams {
    pub fn new(membership: Membership, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != membership.num_groups() {
            return Err(Error::InvalidParams(format!(
                "{} edge probabilities given for {} groups",
                omega.len(),
                membership.num_groups()
            )));
        }
        if let Some((r, w)) = omega
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::InvalidParams(format!(
                "omega[{r}] = {w} is not a probability"
            )));
        }
        Ok(GeneratorParams { membership, omega })
    }

    pub fn num_nodes(&self) -> usize {
        self.membership.num_nodes()
    }
}

/// Draws one independent Bernoulli per pair `u < v`, in lexicographic
/// order, with success probability `omega[h(u, v)]`.
pub fn generate(params: &GeneratorParams, seed: u64) -> Graph {
    let mut rng = ChainRng::seed_from_u64(seed);
    let n = params.num_nodes();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let r = params.membership.highest_common_group(u, v);
            if rng.random::<f64>() < params.omega[r] {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).0
}

/// Two-group network with nodes `0..core_size` in group 1. `omega1`
/// applies within that block, `omega0` everywhere else.
pub fn planted_core_periphery(
    n: usize,
    core_size: usize,
    omega0: f64,
    omega1: f64,
    seed: u64,
) -> Result<(Graph, Membership)> {
    if core_size > n {
        return Err(Error::InvalidParams(format!(
            "core size {core_size} exceeds n = {n}"
        )));
    }
    let membership = Membership::from_groups(n, &[(0..core_size).collect()]);
    let params = GeneratorParams::new(membership, vec![omega0, omega1])?;
    let graph = generate(&params, seed);
    Ok((graph, params.membership))
}

/// Erdős–Rényi `G(n, p)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let params = GeneratorParams::new(Membership::new(n, 1), vec![p])?;
    Ok(generate(&params, seed))
}
