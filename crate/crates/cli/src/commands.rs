use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use hiercp_core::generator::{generate, planted_core_periphery, GeneratorParams};
use hiercp_core::model::{omega_estimates, recompute_stats};
use hiercp_core::sampler::{best_chain, run_chains, Mode, SamplerConfig, Trace};
use hiercp_core::{load_edge_list, load_gml, Graph, LabelMap, LoadReport, Membership};

use crate::document::{
    membership_to_nodes, nodes_to_membership, ChainSummary, EdgeLabel, GroundTruth, KCount,
    MapStructure, Metadata, ResultDocument, Sample, TraceSummary, SCHEMA_VERSION,
};
use crate::dot;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "hiercp",
    version,
    about = "Fit hierarchical core-periphery models to networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample group assignments for a network and write the MAP structure.
    Fit(FitArgs),
    /// Sample a synthetic network from the model.
    Generate(GenerateArgs),
    /// Render a fitted result as a Graphviz DOT file.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Edgelist,
    Gml,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Edgelist => "edgelist",
            Format::Gml => "gml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Snapshots {
    None,
    Thin,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    pub format: Format,
    /// Fixed number of groups including group 0 (default 2).
    #[arg(long, conflicts_with = "vary_k")]
    pub k: Option<usize>,
    /// Let the number of groups vary.
    #[arg(long)]
    pub vary_k: bool,
    #[arg(long, default_value_t = 10_000_000)]
    pub steps: u64,
    /// Defaults to a tenth of the steps.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Defaults to n * k.
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, value_enum, default_value_t = Snapshots::None)]
    pub snapshots: Snapshots,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FitArgs {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        FitArgs {
            input: input.into(),
            format: Format::Edgelist,
            k: None,
            vary_k: false,
            steps: 10_000_000,
            burn_in: None,
            thin: None,
            seed: 1,
            chains: 1,
            snapshots: Snapshots::None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, conflicts_with = "planted")]
    pub n: Option<usize>,
    /// Number of groups; inferred from --omega when omitted.
    #[arg(long, conflicts_with = "planted")]
    pub k: Option<usize>,
    /// Comma-separated edge probabilities, one per group.
    #[arg(long, conflicts_with = "planted")]
    pub omega: Option<String>,
    /// Ground-truth JSON giving the group memberships (required for k > 1).
    #[arg(long, conflicts_with = "planted")]
    pub membership: Option<PathBuf>,
    /// Two-group shorthand `N,CORE,OMEGA0,OMEGA1`; nodes 0..CORE form group 1.
    #[arg(long)]
    pub planted: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    pub format: Format,
    /// Network output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth JSON output path.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportDotArgs {
    pub result: PathBuf,
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_graph(path: &Path, format: Format) -> Result<(Graph, LabelMap, LoadReport)> {
    let text = read(path)?;
    let loaded = match format {
        Format::Edgelist => load_edge_list(&text),
        Format::Gml => load_gml(&text),
    };
    loaded.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn summarize_chain(chain: usize, trace: &Trace, labels: &LabelMap) -> ChainSummary {
    let samples = trace.config.snapshots.then(|| {
        trace
            .records
            .iter()
            .map(|rec| Sample {
                step: rec.step,
                k: rec.k,
                groups: rec
                    .snapshot
                    .as_ref()
                    .map(|groups| {
                        groups
                            .iter()
                            .map(|g| g.iter().map(|&u| labels.label(u).to_string()).collect())
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect()
    });
    ChainSummary {
        chain,
        map_log_posterior: trace.map.log_posterior,
        map_k: trace.map.membership.num_groups(),
        k_histogram: trace
            .k_histogram()
            .into_iter()
            .map(|(k, count)| KCount { k, count })
            .collect(),
        steps: trace.records.iter().map(|r| r.step).collect(),
        k_series: trace.records.iter().map(|r| r.k).collect(),
        log_posterior: trace.records.iter().map(|r| r.log_posterior).collect(),
        acceptance: trace.acceptance.clone(),
        acceptance_rates: (&trace.acceptance).into(),
        samples,
    }
}

/// Runs the sampler per `args` and assembles the result document without
/// writing it anywhere.
pub fn fit_document(args: &FitArgs) -> Result<ResultDocument> {
    if args.chains == 0 {
        return Err(CliError::Usage("--chains must be at least 1".into()));
    }
    let (graph, labels, report) = load_graph(&args.input, args.format)?;
    let n = graph.num_nodes();
    let mode = match (args.vary_k, args.k) {
        (true, Some(_)) => {
            return Err(CliError::Usage(
                "--k and --vary-k are mutually exclusive".into(),
            ))
        }
        (true, None) => Mode::VaryK,
        (false, Some(0)) => return Err(CliError::Usage("--k must be at least 1".into())),
        (false, k) => Mode::FixedK(k.unwrap_or(2)),
    };
    let mut warnings = Vec::new();
    if mode == Mode::FixedK(1) {
        warnings.push("k = 1 has no movable groups; the result is the null model".to_string());
    }
    if report.duplicate_edges > 0 || report.self_loops > 0 {
        warnings.push(format!(
            "dropped {} duplicate edges and {} self-loops",
            report.duplicate_edges, report.self_loops
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let defaults = SamplerConfig::with_defaults(mode, n, args.seed);
    let config = SamplerConfig {
        steps: args.steps,
        burn_in: args.burn_in.unwrap_or(args.steps / 10),
        thin: args.thin.unwrap_or(defaults.thin),
        snapshots: args.snapshots == Snapshots::Thin,
        ..defaults
    };
    config.validate()?;
    let traces = run_chains(&graph, &config, args.chains)?;
    let best = best_chain(&traces).expect("at least one chain");
    let map = &traces[best].map;
    for trace in &traces {
        if trace.map.membership.num_nodes() != n {
            return Err(CliError::Internal(
                "MAP membership has wrong node count".into(),
            ));
        }
    }
    let chains_disagree = traces.iter().any(|t| t.map.membership != map.membership);

    let stats = recompute_stats(&graph, &map.membership);
    let omega = omega_estimates(&stats);
    let structure_type = (map.membership.num_groups() == 2).then(|| {
        if omega[1] > omega[0] {
            "traditional".to_string()
        } else {
            "inside_out".to_string()
        }
    });
    let edge_labels = graph
        .edges()
        .iter()
        .map(|&(u, v)| EdgeLabel {
            source: labels.label(u).to_string(),
            target: labels.label(v).to_string(),
            group: map.membership.highest_common_group(u, v),
        })
        .collect();

    Ok(ResultDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        metadata: Metadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input: args.input.display().to_string(),
            format: args.format.name().to_string(),
            created_at: chrono::Utc::now().to_rfc3339(),
            seed: args.seed,
            chains: args.chains,
            config,
            nodes: n,
            edges: graph.num_edges(),
            duplicate_edges_dropped: report.duplicate_edges,
            self_loops_dropped: report.self_loops,
            warnings,
        },
        map_structure: MapStructure {
            k: map.membership.num_groups(),
            log_posterior: map.log_posterior,
            chain: best,
            step: map.step,
            group_sizes: stats.sizes.clone(),
            pair_counts: stats.t.clone(),
            edge_counts: stats.m.clone(),
            omega_estimates: omega,
            structure_type,
            nodes: membership_to_nodes(&map.membership, &labels),
        },
        trace: TraceSummary {
            chains_disagree,
            chains: traces
                .iter()
                .enumerate()
                .map(|(i, t)| summarize_chain(i, t, &labels))
                .collect(),
        },
        edge_labels,
    })
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let doc = fit_document(args)?;
    write_output(args.out.as_deref(), &(doc.to_json() + "\n"))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid {what} value '{s}'")))
        })
        .collect()
}

/// Generated network, its labels (node indices as strings) and the
/// ground-truth document.
pub fn generate_network(args: &GenerateArgs) -> Result<(Graph, LabelMap, GroundTruth)> {
    let (graph, membership, omega) = if let Some(planted) = &args.planted {
        let parts: Vec<f64> = parse_list(planted, "--planted")?;
        let [n, core, omega0, omega1] = parts[..] else {
            return Err(CliError::Usage(
                "--planted expects N,CORE,OMEGA0,OMEGA1".into(),
            ));
        };
        if n < 0.0 || core < 0.0 || n.fract() != 0.0 || core.fract() != 0.0 {
            return Err(CliError::Usage(
                "--planted sizes must be non-negative integers".into(),
            ));
        }
        let (graph, membership) =
            planted_core_periphery(n as usize, core as usize, omega0, omega1, args.seed)?;
        (graph, membership, vec![omega0, omega1])
    } else {
        let n = args
            .n
            .ok_or_else(|| CliError::Usage("--n is required without --planted".into()))?;
        let omega: Vec<f64> = parse_list(
            args.omega
                .as_deref()
                .ok_or_else(|| CliError::Usage("--omega is required without --planted".into()))?,
            "--omega",
        )?;
        let k = args.k.unwrap_or(omega.len());
        if k != omega.len() {
            return Err(CliError::Usage(format!(
                "--k {k} but {} omega values given",
                omega.len()
            )));
        }
        let membership = match &args.membership {
            Some(path) => {
                let truth = GroundTruth::from_json(&read(path)?)?;
                if truth.n != n {
                    return Err(CliError::Usage(format!(
                        "membership file has n = {} but --n is {n}",
                        truth.n
                    )));
                }
                nodes_to_membership(&truth.nodes, k, &LabelMap::identity(n))?
            }
            None if k == 1 => Membership::new(n, 1),
            None => {
                return Err(CliError::Usage(
                    "--membership is required when k > 1".into(),
                ))
            }
        };
        let params = GeneratorParams::new(membership, omega.clone())?;
        let graph = generate(&params, args.seed);
        (graph, params.membership, omega)
    };
    let labels = LabelMap::identity(graph.num_nodes());
    let truth = GroundTruth {
        schema_version: SCHEMA_VERSION.to_string(),
        seed: args.seed,
        n: graph.num_nodes(),
        k: membership.num_groups(),
        omega,
        edges: graph.num_edges(),
        nodes: membership_to_nodes(&membership, &labels),
    };
    Ok((graph, labels, truth))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let (graph, labels, truth) = generate_network(args)?;
    let text = match args.format {
        Format::Edgelist => graph.to_edge_list(&labels),
        Format::Gml => graph.to_gml(&labels),
    };
    write_output(args.out.as_deref(), &text)?;
    if let Some(path) = &args.truth {
        let json = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
        fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn export_dot(args: &ExportDotArgs) -> Result<String> {
    let doc = ResultDocument::from_json(&read(&args.result)?)?;
    let (graph, labels, _) = load_graph(&args.graph, args.format)?;
    let membership = doc.map_membership(&labels)?;
    Ok(dot::render(&graph, &labels, &membership))
}

pub fn cmd_export_dot(args: &ExportDotArgs) -> Result<()> {
    let text = export_dot(args)?;
    write_output(args.out.as_deref(), &text)
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Generate(args) => cmd_generate(args),
        Command::ExportDot(args) => cmd_export_dot(args),
    }
}
