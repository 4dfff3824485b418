//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails. Run with `--nocapture` to see the
//! report.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hiercp_cli::commands::{fit_document, FitArgs, Snapshots};
use hiercp_core::enumerate::{exact_posterior_enumeration, log_sum_exp, log_weights};
use hiercp_core::generator::{erdos_renyi, generate, planted_core_periphery, GeneratorParams};
use hiercp_core::model::{log_likelihood, recompute_stats};
use hiercp_core::sampler::{
    best_chain, chain_rng, fixed_add_proposal, fixed_remove_proposal, ratio_to_f64, run_chain,
    run_chains, step_fixed_k, vary_add_proposal, vary_create_proposal, vary_delete_proposal,
    vary_remove_proposal, ChainRng, Mode, SamplerConfig,
};
use hiercp_core::{Graph, Membership, ModelState};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed <= budget, || {
        format!("took {elapsed:.1?}, budget {budget:.0?}")
    })?;
    Ok(elapsed)
}

fn config(mode: Mode, steps: u64, burn_in: u64, thin: u64, seed: u64) -> SamplerConfig {
    SamplerConfig {
        mode,
        steps,
        burn_in,
        thin,
        seed,
        snapshots: false,
    }
}

/// Fixed-k chain visits the 32 membership states of a 5-node graph with the
/// frequencies of the brute-force posterior.
fn stationarity() -> Outcome {
    let start = Instant::now();
    let (graph, _) = Graph::from_edges(5, vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]);
    let table = exact_posterior_enumeration(&graph, 2).map_err(|e| e.to_string())?;
    ensure(table.len() == 32, || format!("{} states", table.len()))?;
    let mut counts = vec![0u64; table.len()];
    let mut state = ModelState::empty(&graph, 2);
    let mut rng = chain_rng(2718, 0);
    for _ in 0..10_000_000u64 {
        step_fixed_k(&mut state, &mut rng);
        counts[state.membership().state_code().unwrap() as usize] += 1;
    }
    let tv = table.total_variation(&counts);
    ensure(tv <= 0.01, || format!("total variation {tv:.5} > 0.01"))?;
    let elapsed = within_budget(start, Duration::from_secs(60))?;
    Ok(format!("TV = {tv:.5} over 10^7 steps ({elapsed:.1?})"))
}

#[derive(Clone, Copy)]
enum Op {
    Add(usize, usize),
    Remove(usize, usize),
    Insert(usize),
    Delete(usize),
}

fn random_op(state: &ModelState<'_>, rng: &mut ChainRng) -> Option<Op> {
    let k = state.num_groups();
    let n = state.num_nodes();
    match rng.random_range(0..12) {
        0 if k < 12 => Some(Op::Insert(rng.random_range(1..=k))),
        1 if k > 1 => {
            let s = rng.random_range(1..k);
            (state.membership().size(s) == 0).then_some(Op::Delete(s))
        }
        2..=6 if k > 1 => {
            let s = rng.random_range(1..k);
            let u = rng.random_range(0..n);
            (!state.membership().contains(u, s)).then_some(Op::Add(u, s))
        }
        7..=11 if k > 1 => {
            let s = rng.random_range(1..k);
            let members = state.membership().members(s);
            (!members.is_empty())
                .then(|| Op::Remove(members[rng.random_range(0..members.len())] as usize, s))
        }
        _ => None,
    }
}

/// Maintained statistics equal a from-scratch recomputation after every
/// one of 10^5 mixed moves spread over 20 random graphs.
fn incremental_exactness() -> Outcome {
    let start = Instant::now();
    const GRAPHS: u64 = 20;
    const MOVES_PER_GRAPH: u64 = 5_000;
    let mut rng = chain_rng(31, 0);
    let mut worst = 0.0f64;
    for g in 0..GRAPHS {
        let n = rng.random_range(2..=100);
        let p = rng.random_range(0.02..0.5);
        let graph = erdos_renyi(n, p, 1000 + g).map_err(|e| e.to_string())?;
        let mut state = ModelState::empty(&graph, rng.random_range(1..=4));
        let mut applied = 0;
        while applied < MOVES_PER_GRAPH {
            let Some(op) = random_op(&state, &mut rng) else {
                continue;
            };
            let result = match op {
                Op::Add(u, s) => state.apply_add(u, s).map(drop),
                Op::Remove(u, s) => state.apply_remove(u, s).map(drop),
                Op::Insert(s) => state.insert_group(s),
                Op::Delete(s) => state.delete_group(s),
            };
            result.map_err(|e| format!("graph {g}: {e}"))?;
            applied += 1;
            let fresh = recompute_stats(&graph, state.membership());
            ensure(&fresh == state.stats(), || {
                format!("graph {g}, move {applied}: statistics diverged")
            })?;
            let diff = (log_likelihood(&fresh) - state.log_likelihood()).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-9, || {
                format!("graph {g}, move {applied}: log-likelihood off by {diff:e}")
            })?;
        }
    }
    let elapsed = within_budget(start, Duration::from_secs(30))?;
    Ok(format!(
        "{} moves, exact counts, max |dlogL| = {worst:e} ({elapsed:.1?})",
        GRAPHS * MOVES_PER_GRAPH
    ))
}

/// Node-move proposal ratios equal the prior ratio exactly; the group
/// creation/deletion ratio is within 2/n^2 of its idealised value.
fn proposal_ratios() -> Outcome {
    let mut rng = chain_rng(577, 0);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let n = rng.random_range(2..=1000usize);
        let k = rng.random_range(2..=20usize);
        let n_s = rng.random_range(0..n);
        let target = Ratio::new(n_s as u128 + 1, (n - n_s) as u128);
        let fixed = fixed_add_proposal(n, k, n_s) / fixed_remove_proposal(n, k, n_s + 1);
        ensure(fixed == target, || {
            format!("fixed-k n={n} k={k} n_s={n_s}: {fixed} != {target}")
        })?;
        let vary = vary_add_proposal(n, k, n_s) / vary_remove_proposal(n, k, n_s + 1);
        ensure(vary == target, || {
            format!("variable-k n={n} k={k} n_s={n_s}: {vary} != {target}")
        })?;

        let k_from = k - 1;
        let ratio =
            ratio_to_f64(vary_create_proposal(n, k_from) / vary_delete_proposal(n, k_from + 1));
        let ideal = 1.0 / (k_from as f64 * (n as f64 + 1.0));
        let gap = (ratio - ideal).abs();
        worst = worst.max(gap * (n * n) as f64);
        ensure(gap <= 2.0 / (n * n) as f64, || {
            format!("type-2 n={n} k={k_from}: |{ratio} - {ideal}| > 2/n^2")
        })?;
    }
    Ok(format!(
        "1000 configurations exact; max type-2 gap = {worst:.3}/n^2"
    ))
}

fn agreement(found: &Membership, truth: &Membership) -> f64 {
    let n = truth.num_nodes();
    let same = (0..n)
        .filter(|&u| found.contains(u, 1) == truth.contains(u, 1))
        .count();
    same as f64 / n as f64
}

fn recover(core: usize, omega0: f64, omega1: f64, seed: u64) -> Result<f64, String> {
    let (graph, truth) =
        planted_core_periphery(200, core, omega0, omega1, seed).map_err(|e| e.to_string())?;
    let cfg = config(Mode::FixedK(2), 1_000_000, 100_000, 400, seed);
    let traces = run_chains(&graph, &cfg, 4).map_err(|e| e.to_string())?;
    let best = best_chain(&traces).ok_or("no chains")?;
    Ok(agreement(&traces[best].map.membership, &truth))
}

/// Best MAP over four fixed-k chains recovers a planted two-group
/// structure, in both the dense-core and the inside-out arrangement.
fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let traditional = recover(50, 0.1, 0.9, 4)?;
    // Inside-out: group 1 is a large sparse patch (0.05 within), while the
    // 50 nodes outside it connect to everything with probability 0.6.
    let inside_out = recover(150, 0.6, 0.05, 5)?;
    ensure(traditional >= 0.95, || {
        format!("traditional agreement {traditional:.3}")
    })?;
    ensure(inside_out >= 0.95, || {
        format!("inside-out agreement {inside_out:.3}")
    })?;
    let elapsed = within_budget(start, Duration::from_secs(120))?;
    Ok(format!(
        "agreement traditional {traditional:.3}, inside-out {inside_out:.3} ({elapsed:.1?})"
    ))
}

fn k_counts(graph: &Graph, steps: u64, seed: u64) -> Result<Vec<(usize, u64)>, String> {
    let cfg = config(
        Mode::VaryK,
        steps,
        steps / 10,
        graph.num_nodes() as u64,
        seed,
    );
    let trace = run_chain(graph, &cfg, 0).map_err(|e| e.to_string())?;
    Ok(trace.k_histogram())
}

/// Variable-k chain prefers k = 1 on structureless random graphs and k = 2
/// on the planted core-periphery graph.
///
/// The k = 1 share is a property of each random realization (some draws
/// carry visible structure by chance), so it is measured over the pooled
/// post-burn-in samples of ten independent random graphs.
fn model_selection() -> Outcome {
    let budget = Duration::from_secs(120);
    let start = Instant::now();
    let (mut at_one, mut total) = (0u64, 0u64);
    let mut per_graph = Vec::new();
    for seed in 0..10 {
        let graph = erdos_renyi(100, 0.1, 2000 + seed).map_err(|e| e.to_string())?;
        let hist = k_counts(&graph, 2_000_000, 3000 + seed)?;
        let ones = hist.iter().find(|(k, _)| *k == 1).map_or(0, |h| h.1);
        let all: u64 = hist.iter().map(|h| h.1).sum();
        per_graph.push(format!("{:.2}", ones as f64 / all as f64));
        at_one += ones;
        total += all;
    }
    let share = at_one as f64 / total as f64;
    ensure(share >= 0.70, || {
        format!(
            "only {share:.3} of pooled samples at k = 1 (per graph [{}])",
            per_graph.join(", ")
        )
    })?;
    within_budget(start, budget)?;

    let start = Instant::now();
    let (graph, _) = planted_core_periphery(200, 50, 0.1, 0.9, 4).map_err(|e| e.to_string())?;
    let hist = k_counts(&graph, 2_000_000, 80)?;
    let all: u64 = hist.iter().map(|h| h.1).sum();
    let &(mode, count) = hist.iter().max_by_key(|h| h.1).ok_or("no samples")?;
    let planted_share = count as f64 / all as f64;
    ensure(mode == 2, || {
        format!("planted graph modal k = {mode} ({planted_share:.3})")
    })?;
    within_budget(start, budget)?;
    Ok(format!(
        "k = 1 share on random graphs {share:.3} (per graph [{}]); planted modal k = 2 ({planted_share:.3})",
        per_graph.join(", ")
    ))
}

/// Pearson chi-square p-value of integer observations against a binomial,
/// pooling adjacent values so every bin expects at least five hits.
fn binomial_gof(observed: &[u64], trials: u64, p: f64) -> Result<f64, String> {
    let samples = observed.len() as f64;
    let dist = Binomial::new(p, trials).map_err(|e| e.to_string())?;
    let mut counts = vec![0u64; trials as usize + 1];
    for &x in observed {
        counts[x as usize] += 1;
    }
    let mut bins: Vec<(f64, u64)> = Vec::new();
    let (mut expected, mut seen, mut remaining) = (0.0, 0u64, 1.0);
    for x in 0..=trials {
        let px = dist.pmf(x);
        expected += px * samples;
        seen += counts[x as usize];
        remaining -= px;
        if expected >= 5.0 && remaining * samples >= 5.0 {
            bins.push((expected, seen));
            expected = 0.0;
            seen = 0;
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += expected;
            last.1 += seen;
        }
        None => return Err("fewer than two bins".into()),
    }
    if bins.len() < 2 {
        return Err("fewer than two bins".into());
    }
    let stat: f64 = bins.iter().map(|&(e, o)| (o as f64 - e).powi(2) / e).sum();
    let chi = ChiSquared::new((bins.len() - 1) as f64).map_err(|e| e.to_string())?;
    Ok(chi.sf(stat))
}

/// Edge counts per group over 200 generator seeds follow Binomial(t_r, w_r).
fn generator_statistics() -> Outcome {
    let setups = [
        (
            Membership::from_groups(100, &[(0..30).collect()]),
            vec![0.1, 0.6],
        ),
        (
            Membership::from_groups(80, &[(0..40).collect(), (0..15).collect()]),
            vec![0.05, 0.3, 0.8],
        ),
    ];
    let mut report = Vec::new();
    for (i, (membership, omega)) in setups.into_iter().enumerate() {
        let params =
            GeneratorParams::new(membership.clone(), omega.clone()).map_err(|e| e.to_string())?;
        let k = omega.len();
        let mut per_group = vec![Vec::new(); k];
        let mut t = Vec::new();
        for seed in 0..200 {
            let stats = recompute_stats(&generate(&params, 9000 + seed), &membership);
            for (samples, &m) in per_group.iter_mut().zip(&stats.m) {
                samples.push(m);
            }
            t = stats.t;
        }
        for r in 0..k {
            let p = binomial_gof(&per_group[r], t[r], omega[r])?;
            ensure(p >= 0.01, || format!("setup {i} group {r}: p = {p:.4}"))?;
            report.push(format!("{p:.2}"));
        }
    }
    Ok(format!("per-group p-values [{}]", report.join(", ")))
}

/// Two identical fit invocations produce the same document once the
/// creation timestamp is blanked.
fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let (graph, _) = planted_core_periphery(60, 15, 0.1, 0.8, 3).map_err(|e| e.to_string())?;
    let path = dir.path().join("planted.txt");
    fs::write(
        &path,
        graph.to_edge_list(&hiercp_core::LabelMap::identity(60)),
    )
    .map_err(|e| e.to_string())?;
    let mut args = FitArgs::new(&path);
    args.vary_k = true;
    args.steps = 200_000;
    args.chains = 3;
    args.seed = 99;
    args.snapshots = Snapshots::Thin;
    let mut docs = Vec::new();
    for _ in 0..2 {
        let mut doc = fit_document(&args).map_err(|e| e.to_string())?;
        doc.metadata.created_at.clear();
        docs.push(doc);
    }
    ensure(docs[0] == docs[1], || "documents differ".into())?;
    ensure(docs[0].to_json() == docs[1].to_json(), || {
        "serialized documents differ".into()
    })?;
    Ok(format!(
        "identical documents ({} bytes)",
        docs[0].to_json().len()
    ))
}

fn all_graphs(n: usize) -> impl Iterator<Item = Graph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    (0..1u64 << pairs.len()).map(move |mask| {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e);
        Graph::from_edges(n, edges).0
    })
}

fn relabeled(graph: &Graph, perm: &[usize]) -> Graph {
    let edges = graph.edges().iter().map(|&(u, v)| (perm[u], perm[v]));
    Graph::from_edges(graph.num_nodes(), edges).0
}

fn log_evidence(graph: &Graph) -> Result<f64, String> {
    Ok(log_sum_exp(
        &log_weights(graph, 2).map_err(|e| e.to_string())?,
    ))
}

/// The k = 2 evidence summed over all memberships is finite, positive and
/// unchanged by relabeling the nodes.
fn enumeration_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = chain_rng(8, 0);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let mut check = |graph: Graph, rng: &mut ChainRng| -> Result<(), String> {
        let base = log_evidence(&graph)?;
        let z = base.exp();
        ensure(z.is_finite() && z > 0.0, || {
            format!("n={}: evidence {z}", graph.num_nodes())
        })?;
        let mut perm: Vec<usize> = (0..graph.num_nodes()).collect();
        for _ in 0..50 {
            perm.shuffle(rng);
            let other = log_evidence(&relabeled(&graph, &perm))?;
            let rel = (other - base).exp_m1().abs();
            worst = worst.max(rel);
            ensure(rel <= 1e-12, || {
                format!(
                    "n={}: relabeling changed evidence by {rel:e}",
                    graph.num_nodes()
                )
            })?;
        }
        checked += 1;
        Ok(())
    };
    // Every graph up to five nodes; random graphs of every density for 6-8.
    for n in 1..=5 {
        for graph in all_graphs(n) {
            check(graph, &mut rng)?;
        }
    }
    for n in 6..=8 {
        for i in 0..30 {
            let p = rng.random_range(0.0..=1.0);
            check(
                erdos_renyi(n, p, 500 + i).map_err(|e| e.to_string())?,
                &mut rng,
            )?;
        }
    }
    let elapsed = start.elapsed();
    Ok(format!(
        "{checked} graphs x 50 relabelings, max relative change {worst:e} ({elapsed:.1?})"
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 exact-posterior stationarity", stationarity),
        ("2 incremental statistics exactness", incremental_exactness),
        ("3 proposal-ratio identities", proposal_ratios),
        ("4 planted recovery", planted_recovery),
        ("5 model selection over k", model_selection),
        ("6 generator edge-count distribution", generator_statistics),
        ("7 determinism", determinism),
        ("8 enumeration consistency", enumeration_consistency),
    ];
    let mut failed = Vec::new();
    for (name, criterion) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(criterion))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL  criterion {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
