//! Graphviz output: edges coloured by the group they belong to (the
//! highest group shared by both endpoints), nodes shaded by their highest
//! group.

use std::fmt::Write as _;

use hiercp_core::model::edge_group_labels;
use hiercp_core::{Graph, LabelMap, Membership};

/// Group 0 yellow, group 1 blue, then a fixed cycle.
pub const PALETTE: [&str; 12] = [
    "#f2c12e", "#1f5fbf", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#7f7f7f", "#bcbd22", "#ff7f0e", "#393b79",
];

pub fn group_color(r: usize) -> &'static str {
    PALETTE[r % PALETTE.len()]
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn render(graph: &Graph, labels: &LabelMap, membership: &Membership) -> String {
    let mut out = String::from("graph hiercp {\n  node [style=filled, shape=circle];\n");
    for u in 0..graph.num_nodes() {
        let top = membership.top_group(u);
        let _ = writeln!(
            out,
            "  {} [fillcolor={}, group={}];",
            quote(labels.label(u)),
            quote(group_color(top)),
            top
        );
    }
    for (&(u, v), r) in graph
        .edges()
        .iter()
        .zip(edge_group_labels(graph, membership))
    {
        let _ = writeln!(
            out,
            "  {} -- {} [color={}, group={}];",
            quote(labels.label(u)),
            quote(labels.label(v)),
            quote(group_color(r)),
            r
        );
    }
    out.push_str("}\n");
    out
}
