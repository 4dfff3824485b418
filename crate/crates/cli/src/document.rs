//! JSON documents written by `fit` and `generate`.

use serde::{Deserialize, Serialize};

use hiercp_core::sampler::{AcceptanceStats, SamplerConfig};
use hiercp_core::{LabelMap, Membership};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: String,
    pub metadata: Metadata,
    pub map_structure: MapStructure,
    pub trace: TraceSummary,
    pub edge_labels: Vec<EdgeLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub input: String,
    pub format: String,
    /// Wall-clock creation time; the only field that differs between
    /// otherwise identical runs.
    pub created_at: String,
    pub seed: u64,
    pub chains: usize,
    pub config: SamplerConfig,
    pub nodes: usize,
    pub edges: usize,
    pub duplicate_edges_dropped: usize,
    pub self_loops_dropped: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGroups {
    pub label: String,
    pub groups: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapStructure {
    pub k: usize,
    pub log_posterior: f64,
    pub chain: usize,
    pub step: u64,
    pub group_sizes: Vec<usize>,
    pub pair_counts: Vec<u64>,
    pub edge_counts: Vec<u64>,
    pub omega_estimates: Vec<f64>,
    /// For k = 2: `traditional` when group 1 is denser than group 0,
    /// `inside_out` otherwise.
    pub structure_type: Option<String>,
    pub nodes: Vec<NodeGroups>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCount {
    pub k: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: u64,
    pub k: usize,
    /// Member labels of groups `1..k`.
    pub groups: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub map_log_posterior: f64,
    pub map_k: usize,
    pub k_histogram: Vec<KCount>,
    pub steps: Vec<u64>,
    pub k_series: Vec<usize>,
    pub log_posterior: Vec<f64>,
    pub acceptance: AcceptanceStats,
    pub acceptance_rates: AcceptanceRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Sample>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub add: f64,
    pub remove: f64,
    pub create_group: f64,
    pub delete_group: f64,
}

impl From<&AcceptanceStats> for AcceptanceRates {
    fn from(a: &AcceptanceStats) -> Self {
        AcceptanceRates {
            add: a.add.rate(),
            remove: a.remove.rate(),
            create_group: a.create_group.rate(),
            delete_group: a.delete_group.rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    /// True when the chains ended with different MAP memberships.
    pub chains_disagree: bool,
    pub chains: Vec<ChainSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub source: String,
    pub target: String,
    pub group: usize,
}

impl ResultDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("result document: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// MAP membership rebuilt over the given label order. Errors when the
    /// node label sets differ, listing the offending labels.
    pub fn map_membership(&self, labels: &LabelMap) -> Result<Membership> {
        nodes_to_membership(&self.map_structure.nodes, self.map_structure.k, labels)
    }
}

/// Generator ground truth: the planted membership and edge probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: String,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub omega: Vec<f64>,
    pub edges: usize,
    pub nodes: Vec<NodeGroups>,
}

impl GroundTruth {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("ground truth: {e}")))
    }
}

pub fn membership_to_nodes(mem: &Membership, labels: &LabelMap) -> Vec<NodeGroups> {
    (0..mem.num_nodes())
        .map(|u| NodeGroups {
            label: labels.label(u).to_string(),
            groups: mem.groups_of(u),
        })
        .collect()
}

pub fn nodes_to_membership(
    nodes: &[NodeGroups],
    k: usize,
    labels: &LabelMap,
) -> Result<Membership> {
    let mut missing: Vec<&str> = Vec::new();
    let mut seen = vec![false; labels.len()];
    let mut groups = vec![Vec::new(); k.saturating_sub(1)];
    for node in nodes {
        match labels.index_of(&node.label) {
            Some(u) => {
                seen[u] = true;
                for &r in &node.groups {
                    if r >= k {
                        return Err(CliError::Parse(format!(
                            "node {} lists group {r} but k = {k}",
                            node.label
                        )));
                    }
                    if r > 0 {
                        groups[r - 1].push(u);
                    }
                }
            }
            None => missing.push(&node.label),
        }
    }
    let unlisted: Vec<&str> = seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| !s)
        .map(|(u, _)| labels.label(u))
        .collect();
    if !missing.is_empty() || !unlisted.is_empty() {
        let mut msg = String::from("node labels do not match the graph");
        if !missing.is_empty() {
            msg.push_str(&format!("; not in graph: {}", missing.join(", ")));
        }
        if !unlisted.is_empty() {
            msg.push_str(&format!("; missing from document: {}", unlisted.join(", ")));
        }
        return Err(CliError::Parse(msg));
    }
    Ok(Membership::from_groups(labels.len(), &groups))
}
