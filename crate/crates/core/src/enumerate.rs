//! Brute-force posterior over every group assignment of a small graph,
//! used to check that the chains sample the right distribution.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::Membership;
use crate::model::{log_likelihood, log_prior_g, recompute_stats};

/// Largest state space (in bits, `n * (k - 1)`) we are willing to walk.
pub const MAX_STATE_BITS: usize = 24;

/// Normalized `P(g | A, k)` indexed by [`Membership::state_code`].
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    pub n: usize,
    pub k: usize,
    pub probabilities: Vec<f64>,
}

impl PosteriorTable {
    pub fn probability(&self, mem: &Membership) -> f64 {
        let code = mem.state_code().expect("membership fits the table");
        self.probabilities[code as usize]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Total-variation distance to an empirical histogram over the same
    /// state codes.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        assert_eq!(counts.len(), self.probabilities.len());
        let total: u64 = counts.iter().sum();
        0.5 * self
            .probabilities
            .iter()
            .zip(counts)
            .map(|(&p, &c)| (p - c as f64 / total as f64).abs())
            .sum::<f64>()
    }
}

/// Unnormalized log weights `ln P(A | g, k) + ln P(g | k)` of every
/// assignment, indexed by state code.
pub fn log_weights(graph: &Graph, k: usize) -> Result<Vec<f64>> {
    let n = graph.num_nodes();
    if k == 0 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let bits = n * (k - 1);
    if bits > MAX_STATE_BITS {
        return Err(Error::StateSpaceTooLarge {
            bits,
            limit: MAX_STATE_BITS,
        });
    }
    Ok((0..1u64 << bits)
        .map(|code| {
            let mem = Membership::from_state_code(n, k, code);
            let stats = recompute_stats(graph, &mem);
            log_likelihood(&stats) + log_prior_g(&stats, n)
        })
        .collect())
}

/// `ln sum exp(x)` without overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Exact `P(g | A, k)` over all `2^(n(k-1))` assignments.
pub fn exact_posterior_enumeration(graph: &Graph, k: usize) -> Result<PosteriorTable> {
    let weights = log_weights(graph, k)?;
    let norm = log_sum_exp(&weights);
    Ok(PosteriorTable {
        n: graph.num_nodes(),
        k,
        probabilities: weights.iter().map(|&w| (w - norm).exp()).collect(),
    })
}
