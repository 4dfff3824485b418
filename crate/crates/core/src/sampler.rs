//! Metropolis-Hastings chains over group assignments.
//!
//! Fixed-k moves pick a group `s` in `1..k`, then flip a coin between
//! adding a random non-member and removing a random member. Because the
//! proposal probabilities are inversely proportional to the number of
//! candidates, their ratio equals the ratio of group-assignment priors and
//! only the likelihood ratio enters the acceptance test.
//!
//! Variable-k chains additionally create empty groups (type-2 moves, with
//! probability `1 / (2k(n+1))`) and delete a group when a removal is
//! proposed on an empty one. Both leave the likelihood unchanged and are
//! always accepted.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::Membership;
use crate::model::{log_prior_g_from_sizes, log_prior_k, ModelState, NodeMove};

/// Seeded generator used by every chain and by the network generator.
pub type ChainRng = ChaCha8Rng;

/// Deterministic generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FixedK(usize),
    VaryK,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mode: Mode,
    pub steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    /// Store a full membership snapshot with every recorded sample.
    pub snapshots: bool,
}

impl SamplerConfig {
    /// Desk-scale defaults: 10^7 steps, a tenth of them burn-in, and one
    /// sample per `n * k` steps.
    pub fn with_defaults(mode: Mode, n: usize, seed: u64) -> Self {
        let steps = 10_000_000;
        let k = match mode {
            Mode::FixedK(k) => k,
            Mode::VaryK => 1,
        };
        SamplerConfig {
            mode,
            steps,
            burn_in: steps / 10,
            thin: (n * k).max(1) as u64,
            seed,
            snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.burn_in > self.steps {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} exceeds total steps {}",
                self.burn_in, self.steps
            )));
        }
        if self.mode == Mode::FixedK(0) {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoOpReason {
    /// Only group 0 exists, nothing can move.
    SingleGroup,
    /// Fixed-k removal proposed on an empty group.
    GroupEmpty,
    /// Addition proposed on a group holding every node.
    GroupFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    NoOp(NoOpReason),
    Add { node: usize, group: usize },
    Remove { node: usize, group: usize },
    CreateGroup { group: usize },
    DeleteGroup { group: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub proposal: Proposal,
    pub accepted: bool,
    /// Log-likelihood change applied (zero when rejected or a no-op).
    pub delta: f64,
}

impl MoveOutcome {
    fn noop(reason: NoOpReason) -> Self {
        MoveOutcome {
            proposal: Proposal::NoOp(reason),
            accepted: false,
            delta: 0.0,
        }
    }
}

/// Probability that a variable-k step proposes a type-2 (group creation)
/// move: `1 / (2k(n+1))`.
pub fn type2_probability(n: usize, k: usize) -> Ratio<u128> {
    Ratio::new(1, 2 * k as u128 * (n as u128 + 1))
}

/// Proposal probability of adding one particular non-member to group `s`
/// of size `n_s` in a fixed-k chain.
pub fn fixed_add_proposal(n: usize, k: usize, n_s: usize) -> Ratio<u128> {
    assert!(k >= 2 && n_s < n);
    Ratio::new(1, 2 * (k as u128 - 1) * (n - n_s) as u128)
}

/// Proposal probability of removing one particular member from group `s`
/// of size `n_s` in a fixed-k chain.
pub fn fixed_remove_proposal(_n: usize, k: usize, n_s: usize) -> Ratio<u128> {
    assert!(k >= 2 && n_s >= 1);
    Ratio::new(1, 2 * (k as u128 - 1) * n_s as u128)
}

fn type1_probability(n: usize, k: usize) -> Ratio<u128> {
    Ratio::from_integer(1) - type2_probability(n, k)
}

/// Variable-k analogue of [`fixed_add_proposal`].
pub fn vary_add_proposal(n: usize, k: usize, n_s: usize) -> Ratio<u128> {
    type1_probability(n, k) * fixed_add_proposal(n, k, n_s)
}

/// Variable-k analogue of [`fixed_remove_proposal`].
pub fn vary_remove_proposal(n: usize, k: usize, n_s: usize) -> Ratio<u128> {
    type1_probability(n, k) * fixed_remove_proposal(n, k, n_s)
}

/// Probability of creating an empty group at one particular label when
/// the chain has `k` groups.
pub fn vary_create_proposal(n: usize, k: usize) -> Ratio<u128> {
    type2_probability(n, k) * Ratio::new(1, k as u128)
}

/// Probability of deleting one particular empty group when the chain has
/// `k >= 2` groups (the reverse of a creation from `k - 1`).
pub fn vary_delete_proposal(n: usize, k: usize) -> Ratio<u128> {
    assert!(k >= 2);
    type1_probability(n, k) * Ratio::new(1, 2 * (k as u128 - 1))
}

pub fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[inline]
fn accept<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> bool {
    delta >= 0.0 || rng.random::<f64>().ln() < delta
}

fn node_move<R: Rng + ?Sized>(
    state: &mut ModelState<'_>,
    s: usize,
    add: bool,
    rng: &mut R,
) -> Option<MoveOutcome> {
    let n = state.num_nodes();
    let n_s = state.membership().size(s);
    let pending = if add {
        if n_s == n {
            return Some(MoveOutcome::noop(NoOpReason::GroupFull));
        }
        let idx = rng.random_range(0..n - n_s);
        let u = state.membership().non_members(s)[idx] as usize;
        state
            .prepare_add(u, s)
            .expect("candidate drawn from non-members")
    } else {
        if n_s == 0 {
            return None;
        }
        let idx = rng.random_range(0..n_s);
        let u = state.membership().members(s)[idx] as usize;
        state
            .prepare_remove(u, s)
            .expect("candidate drawn from members")
    };
    let proposal = match pending.kind {
        NodeMove::Add => Proposal::Add {
            node: pending.node,
            group: s,
        },
        NodeMove::Remove => Proposal::Remove {
            node: pending.node,
            group: s,
        },
    };
    let delta = pending.delta;
    if accept(delta, rng) {
        state.commit(pending);
        Some(MoveOutcome {
            proposal,
            accepted: true,
            delta,
        })
    } else {
        Some(MoveOutcome {
            proposal,
            accepted: false,
            delta: 0.0,
        })
    }
}

/// One fixed-k Metropolis-Hastings step.
pub fn step_fixed_k<R: Rng + ?Sized>(state: &mut ModelState<'_>, rng: &mut R) -> MoveOutcome {
    let k = state.num_groups();
    if k < 2 {
        return MoveOutcome::noop(NoOpReason::SingleGroup);
    }
    let s = rng.random_range(1..k);
    let add = rng.random::<bool>();
    node_move(state, s, add, rng).unwrap_or(MoveOutcome::noop(NoOpReason::GroupEmpty))
}

/// One variable-k step: a type-2 group creation with probability
/// `1/(2k(n+1))`, otherwise a type-1 node move (or group deletion).
pub fn step_vary_k<R: Rng + ?Sized>(state: &mut ModelState<'_>, rng: &mut R) -> MoveOutcome {
    let k = state.num_groups();
    let n = state.num_nodes();
    let p2 = ratio_to_f64(type2_probability(n, k));
    if rng.random::<f64>() < p2 {
        let s = rng.random_range(1..=k);
        state.insert_group(s).expect("1 <= s <= k");
        return MoveOutcome {
            proposal: Proposal::CreateGroup { group: s },
            accepted: true,
            delta: 0.0,
        };
    }
    if k == 1 {
        return MoveOutcome::noop(NoOpReason::SingleGroup);
    }
    let s = rng.random_range(1..k);
    let add = rng.random::<bool>();
    if let Some(outcome) = node_move(state, s, add, rng) {
        return outcome;
    }
    state.delete_group(s).expect("group is empty");
    MoveOutcome {
        proposal: Proposal::DeleteGroup { group: s },
        accepted: true,
        delta: 0.0,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounter {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub add: MoveCounter,
    pub remove: MoveCounter,
    pub create_group: MoveCounter,
    pub delete_group: MoveCounter,
    pub noop: u64,
}

impl AcceptanceStats {
    pub fn record(&mut self, outcome: &MoveOutcome) {
        let counter = match outcome.proposal {
            Proposal::NoOp(_) => {
                self.noop += 1;
                return;
            }
            Proposal::Add { .. } => &mut self.add,
            Proposal::Remove { .. } => &mut self.remove,
            Proposal::CreateGroup { .. } => &mut self.create_group,
            Proposal::DeleteGroup { .. } => &mut self.delete_group,
        };
        counter.proposed += 1;
        counter.accepted += outcome.accepted as u64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub step: u64,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub log_posterior: f64,
    /// Sorted member lists of groups `1..k`, when snapshots are enabled.
    pub snapshot: Option<Vec<Vec<usize>>>,
}

/// Highest-posterior state seen during a run, burn-in included.
#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    pub membership: Membership,
    pub log_posterior: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: SamplerConfig,
    pub records: Vec<SampleRecord>,
    pub map: MapState,
    pub acceptance: AcceptanceStats,
}

impl Trace {
    pub fn k_histogram(&self) -> Vec<(usize, u64)> {
        let mut hist = std::collections::BTreeMap::new();
        for rec in &self.records {
            *hist.entry(rec.k).or_insert(0u64) += 1;
        }
        hist.into_iter().collect()
    }
}

const VERIFY_INTERVAL: u64 = 100_000;

fn initial_state(graph: &Graph, mode: Mode) -> ModelState<'_> {
    match mode {
        Mode::FixedK(k) => ModelState::empty(graph, k),
        Mode::VaryK => ModelState::empty(graph, 1),
    }
}

/// Runs one chain from the empty initial state.
///
/// MAP ranking uses the full log-posterior; for fixed `k` the `P(k)` term
/// is constant so this is the same ordering as `P(g | A, k)`.
pub fn run(graph: &Graph, config: &SamplerConfig) -> Result<Trace> {
    run_chain(graph, config, 0)
}

/// Runs chain number `chain` of a (possibly multi-chain) run.
pub fn run_chain(graph: &Graph, config: &SamplerConfig, chain: u64) -> Result<Trace> {
    config.validate()?;
    let mut rng = chain_rng(config.seed, chain);
    let mut state = initial_state(graph, config.mode);
    let n = graph.num_nodes();
    let mut acceptance = AcceptanceStats::default();
    let mut current = state.log_posterior();
    let mut map = MapState {
        membership: state.membership().clone(),
        log_posterior: current,
        step: 0,
    };
    let mut records = Vec::new();

    for step in 1..=config.steps {
        let outcome = match config.mode {
            Mode::FixedK(_) => step_fixed_k(&mut state, &mut rng),
            Mode::VaryK => step_vary_k(&mut state, &mut rng),
        };
        acceptance.record(&outcome);
        if outcome.accepted {
            current = log_prior_k(state.num_groups())
                + log_prior_g_from_sizes(state.membership().sizes(), n)
                + state.log_likelihood();
            if current > map.log_posterior {
                map.membership = state.membership().clone();
                map.log_posterior = current;
                map.step = step;
            }
        }
        if cfg!(debug_assertions) && step % VERIFY_INTERVAL == 0 {
            state.verify().expect("incremental statistics drifted");
        }
        if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.thin) {
            records.push(SampleRecord {
                step,
                k: state.num_groups(),
                sizes: state.membership().sizes().to_vec(),
                log_posterior: current,
                snapshot: config.snapshots.then(|| state.membership().group_lists()),
            });
        }
    }

    Ok(Trace {
        config: config.clone(),
        records,
        map,
        acceptance,
    })
}

/// Runs `chains` independent chains concurrently, chain `i` on stream `i`
/// of the configured seed. Traces come back in chain order.
pub fn run_chains(graph: &Graph, config: &SamplerConfig, chains: usize) -> Result<Vec<Trace>> {
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|i| scope.spawn(move || run_chain(graph, config, i as u64)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// Index of the trace with the highest MAP log-posterior; ties go to the
/// lowest chain index.
pub fn best_chain(traces: &[Trace]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in traces.iter().enumerate() {
        match best {
            Some(b) if traces[b].map.log_posterior >= t.map.log_posterior => {}
            _ => best = Some(i),
        }
    }
    best
}
