//! Simple undirected graphs with dense node indices, plus loaders for
//! whitespace edge lists and a GML subset.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Immutable simple undirected graph over nodes `0..n`.
///
/// Edges are stored canonically as `(u, v)` with `u < v`, sorted
/// lexicographically. Adjacency lists are sorted and symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Counts of input records discarded while canonicalizing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

/// Bijection between external string labels and node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    forward: HashMap<String, usize>,
    backward: Vec<String>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index for `label`, allocating the next free index if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&idx) = self.forward.get(label) {
            return idx;
        }
        let idx = self.backward.len();
        self.forward.insert(label.to_string(), idx);
        self.backward.push(label.to_string());
        idx
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.forward.get(label).copied()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.backward[idx]
    }

    pub fn labels(&self) -> &[String] {
        &self.backward
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }

    /// Identity labelling `"0".."n-1"`.
    pub fn identity(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }
}

impl Graph {
    /// Builds a graph over `n` nodes, dropping self-loops and collapsing
    /// duplicate edges. Panics if an endpoint is `>= n`.
    pub fn from_edges<I>(n: usize, edges: I) -> (Graph, LoadReport)
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut report = LoadReport::default();
        let mut canon = Vec::new();
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for n = {n}");
            if a == b {
                report.self_loops += 1;
                continue;
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        let before = canon.len();
        canon.dedup();
        report.duplicate_edges = before - canon.len();

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        (
            Graph {
                n,
                edges: canon,
                adjacency,
            },
            report,
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of unordered node pairs, `n(n-1)/2`.
    pub fn num_pairs(&self) -> u64 {
        num_pairs(self.n)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edge list text, one `LABEL LABEL` line per edge.
    pub fn to_edge_list(&self, labels: &LabelMap) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", labels.label(u), labels.label(v));
        }
        out
    }

    /// GML text. Unlike the edge list this preserves isolated nodes.
    pub fn to_gml(&self, labels: &LabelMap) -> String {
        let mut out = String::from("graph [\n  directed 0\n");
        for u in 0..self.n {
            let _ = writeln!(
                out,
                "  node [\n    id {}\n    label \"{}\"\n  ]",
                u,
                labels.label(u).replace('"', "'")
            );
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "  edge [\n    source {u}\n    target {v}\n  ]");
        }
        out.push_str("]\n");
        out
    }
}

pub fn num_pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Parses a whitespace-separated edge list. Blank lines and lines starting
/// with `#` are ignored.
pub fn load_edge_list(text: &str) -> Result<(Graph, LabelMap, LoadReport)> {
    let mut labels = LabelMap::new();
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 2 labels, found {}", tokens.len()),
            });
        }
        let a = labels.intern(tokens[0]);
        let b = labels.intern(tokens[1]);
        raw.push((a, b));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (graph, report) = Graph::from_edges(labels.len(), raw);
    Ok((graph, labels, report))
}

#[derive(Debug, Clone, PartialEq)]
enum GmlToken {
    Key(String),
    Value(String),
    Open,
    Close,
}

fn tokenize_gml(text: &str) -> Result<Vec<(GmlToken, usize)>> {
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '#' {
                break;
            } else if c == '[' {
                chars.next();
                tokens.push((GmlToken::Open, line_no));
            } else if c == ']' {
                chars.next();
                tokens.push((GmlToken::Close, line_no));
            } else if c == '"' {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                for (_, ch) in chars.by_ref() {
                    if ch == '"' {
                        closed = true;
                        break;
                    }
                    s.push(ch);
                }
                if !closed {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "unterminated string".into(),
                    });
                }
                tokens.push((GmlToken::Value(s), line_no));
            } else {
                let mut end = line.len();
                while let Some(&(i, ch)) = chars.peek() {
                    if ch.is_whitespace() || ch == '[' || ch == ']' {
                        end = i;
                        break;
                    }
                    chars.next();
                }
                let word = &line[start..end];
                let is_key = word
                    .chars()
                    .next()
                    .map(|ch| ch.is_ascii_alphabetic() || ch == '_')
                    .unwrap_or(false);
                if is_key {
                    tokens.push((GmlToken::Key(word.to_string()), line_no));
                } else {
                    tokens.push((GmlToken::Value(word.to_string()), line_no));
                }
            }
        }
    }
    Ok(tokens)
}

#[derive(Debug, Clone)]
enum GmlValue {
    Scalar(String),
    List(Vec<(String, GmlValue)>),
}

struct GmlParser {
    tokens: Vec<(GmlToken, usize)>,
    pos: usize,
}

impl GmlParser {
    fn last_line(&self) -> usize {
        self.tokens.last().map(|t| t.1).unwrap_or(1)
    }

    /// Parses `key value` pairs until a `]` (when nested) or end of input.
    fn parse_list(&mut self, nested: bool, open_line: usize) -> Result<Vec<(String, GmlValue)>> {
        let mut items = Vec::new();
        loop {
            let Some((tok, line)) = self.tokens.get(self.pos).cloned() else {
                if nested {
                    return Err(Error::Parse {
                        line: open_line,
                        message: "unbalanced brackets: '[' never closed".into(),
                    });
                }
                return Ok(items);
            };
            self.pos += 1;
            match tok {
                GmlToken::Close => {
                    if nested {
                        return Ok(items);
                    }
                    return Err(Error::Parse {
                        line,
                        message: "unbalanced brackets: unexpected ']'".into(),
                    });
                }
                GmlToken::Key(key) => {
                    let Some((next, next_line)) = self.tokens.get(self.pos).cloned() else {
                        return Err(Error::Parse {
                            line: self.last_line(),
                            message: format!("key '{key}' has no value"),
                        });
                    };
                    self.pos += 1;
                    let value = match next {
                        GmlToken::Open => GmlValue::List(self.parse_list(true, next_line)?),
                        GmlToken::Value(v) | GmlToken::Key(v) => GmlValue::Scalar(v),
                        GmlToken::Close => {
                            return Err(Error::Parse {
                                line: next_line,
                                message: format!("key '{key}' has no value"),
                            })
                        }
                    };
                    items.push((key, value));
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected a key, found {other:?}"),
                    })
                }
            }
        }
    }
}

fn scalar<'a>(items: &'a [(String, GmlValue)], key: &str) -> Option<&'a str> {
    items.iter().find_map(|(k, v)| match v {
        GmlValue::Scalar(s) if k == key => Some(s.as_str()),
        _ => None,
    })
}

/// Parses the `graph [ node [...] edge [...] ]` subset of GML. Node labels
/// fall back to the id when absent; isolated nodes are kept.
pub fn load_gml(text: &str) -> Result<(Graph, LabelMap, LoadReport)> {
    let tokens = tokenize_gml(text)?;
    let mut parser = GmlParser { tokens, pos: 0 };
    let top = parser.parse_list(false, 1)?;
    let body = top
        .iter()
        .find_map(|(k, v)| match v {
            GmlValue::List(items) if k == "graph" => Some(items),
            _ => None,
        })
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "no 'graph [ ... ]' block".into(),
        })?;

    let mut labels = LabelMap::new();
    let mut id_to_index: HashMap<String, usize> = HashMap::new();
    for (key, value) in body {
        if key != "node" {
            continue;
        }
        let GmlValue::List(items) = value else {
            continue;
        };
        let id =
            scalar(items, "id").ok_or_else(|| Error::Malformed("node block without id".into()))?;
        let label = scalar(items, "label").unwrap_or(id);
        if id_to_index.contains_key(id) {
            return Err(Error::Malformed(format!("duplicate node id {id}")));
        }
        let before = labels.len();
        let idx = labels.intern(label);
        if labels.len() == before {
            // Repeated label on a distinct id: disambiguate with the id.
            let idx = labels.intern(&format!("{label}#{id}"));
            id_to_index.insert(id.to_string(), idx);
        } else {
            id_to_index.insert(id.to_string(), idx);
        }
    }

    let mut raw = Vec::new();
    for (key, value) in body {
        if key != "edge" {
            continue;
        }
        let GmlValue::List(items) = value else {
            continue;
        };
        let (Some(src), Some(dst)) = (scalar(items, "source"), scalar(items, "target")) else {
            return Err(Error::Malformed(
                "edge block missing source or target".into(),
            ));
        };
        let a = *id_to_index
            .get(src)
            .ok_or_else(|| Error::UnknownNode(src.to_string()))?;
        let b = *id_to_index
            .get(dst)
            .ok_or_else(|| Error::UnknownNode(dst.to_string()))?;
        raw.push((a, b));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (graph, report) = Graph::from_edges(labels.len(), raw);
    Ok((graph, labels, report))
}
