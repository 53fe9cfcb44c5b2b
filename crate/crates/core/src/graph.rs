//! Labeled simple graphs and their line-oriented text format.
//!
//! A network file is UTF-8 text with one record per line:
//!
//! ```text
//! # comment
//! v <id> <label> [s=<sensitive>]
//! e <id1> <id2>
//! ```
//!
//! Ids are non-negative integers, labels and sensitive values are
//! whitespace-free tokens. Vertex order in the file does not matter, but an
//! edge may only reference vertices declared anywhere in the file.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a vertex within one network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for VertexId {
    fn from(v: u32) -> Self {
        VertexId(v)
    }
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<u32>()
            .map(VertexId)
            .map_err(|_| Error::InvalidToken(s.to_string()))
    }
}

fn check_token(s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(s.to_string()));
    }
    Ok(())
}

/// A vertex label (an element of the label set L).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(Arc<str>);

impl Label {
    pub const ROOT: &'static str = "*";

    pub fn new(s: &str) -> Result<Self> {
        check_token(s)?;
        Ok(Label(Arc::from(s)))
    }

    /// The most general label, `*`.
    pub fn root() -> Self {
        Label(Arc::from(Self::ROOT))
    }

    pub fn is_root(&self) -> bool {
        &*self.0 == Self::ROOT
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::new(s)
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Label::new(&s)
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.0.to_string()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Value of the sensitive attribute of a vertex. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SensitiveValue(Arc<str>);

impl SensitiveValue {
    pub fn new(s: &str) -> Result<Self> {
        check_token(s)?;
        Ok(SensitiveValue(Arc::from(s)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for SensitiveValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SensitiveValue::new(s)
    }
}

impl TryFrom<String> for SensitiveValue {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        SensitiveValue::new(&s)
    }
}

impl From<SensitiveValue> for String {
    fn from(l: SensitiveValue) -> String {
        l.0.to_string()
    }
}

impl fmt::Display for SensitiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VertexData {
    label: Label,
    sensitive: Option<SensitiveValue>,
    adj: BTreeSet<VertexId>,
}

/// An undirected, simple, vertex-labeled graph with an optional sensitive
/// value per vertex.
///
/// Every vertex carries exactly one label, so the labeling function is total
/// by construction. Distinct vertices may share a label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialNetwork {
    vertices: BTreeMap<VertexId, VertexData>,
    edge_count: usize,
}

impl SocialNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(
        &mut self,
        id: VertexId,
        label: Label,
        sensitive: Option<SensitiveValue>,
    ) -> Result<()> {
        if self.vertices.contains_key(&id) {
            return Err(Error::DuplicateVertex(id));
        }
        self.vertices.insert(
            id,
            VertexData {
                label,
                sensitive,
                adj: BTreeSet::new(),
            },
        );
        Ok(())
    }

    /// Adds the edge `{u, v}`; fails if it already exists.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        if !self.insert_edge(u, v)? {
            return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
        }
        Ok(())
    }

    /// Adds the edge `{u, v}` if absent. Returns whether it was added.
    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let added = self.vertices.get_mut(&u).unwrap().adj.insert(v);
        if added {
            self.vertices.get_mut(&v).unwrap().adj.insert(u);
            self.edge_count += 1;
        }
        Ok(added)
    }

    pub fn set_label(&mut self, v: VertexId, label: Label) -> Result<()> {
        self.vertices
            .get_mut(&v)
            .ok_or(Error::UnknownVertex(v))?
            .label = label;
        Ok(())
    }

    pub fn set_sensitive(&mut self, v: VertexId, value: Option<SensitiveValue>) -> Result<()> {
        self.vertices
            .get_mut(&v)
            .ok_or(Error::UnknownVertex(v))?
            .sensitive = value;
        Ok(())
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.vertices.contains_key(&v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex ids in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices.iter().flat_map(|(&u, d)| {
            d.adj
                .range((std::ops::Bound::Excluded(u), std::ops::Bound::Unbounded))
                .map(move |&v| (u, v))
        })
    }

    /// Label of `v`. Panics if `v` is not a vertex.
    pub fn label(&self, v: VertexId) -> &Label {
        &self.vertices[&v].label
    }

    pub fn sensitive(&self, v: VertexId) -> Option<&SensitiveValue> {
        self.vertices.get(&v).and_then(|d| d.sensitive.as_ref())
    }

    /// Neighbors of `v`. Panics if `v` is not a vertex.
    pub fn neighbors(&self, v: VertexId) -> &BTreeSet<VertexId> {
        &self.vertices[&v].adj
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.vertices[&v].adj.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.vertices.get(&u).is_some_and(|d| d.adj.contains(&v))
    }

    /// The set L of labels in use.
    pub fn label_universe(&self) -> BTreeSet<Label> {
        self.vertices.values().map(|d| d.label.clone()).collect()
    }

    pub fn sensitive_values(&self) -> BTreeSet<SensitiveValue> {
        self.vertices
            .values()
            .filter_map(|d| d.sensitive.clone())
            .collect()
    }

    /// Smallest id strictly greater than every existing id.
    pub fn next_free_id(&self) -> VertexId {
        self.vertices
            .keys()
            .next_back()
            .map_or(VertexId(0), |v| VertexId(v.0 + 1))
    }

    /// Induced subgraph on `keep`, retaining ids, labels and sensitive values.
    pub fn induced_subgraph(&self, keep: &BTreeSet<VertexId>) -> SocialNetwork {
        let mut out = SocialNetwork::new();
        let mut twice = 0;
        for &v in keep {
            let Some(d) = self.vertices.get(&v) else {
                continue;
            };
            let adj: BTreeSet<VertexId> = d.adj.intersection(keep).copied().collect();
            twice += adj.len();
            out.vertices.insert(
                v,
                VertexData {
                    label: d.label.clone(),
                    sensitive: d.sensitive.clone(),
                    adj,
                },
            );
        }
        out.edge_count = twice / 2;
        out
    }

    /// Vertex sets of the connected components, ordered by smallest member.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.vertices() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if seen.insert(w) {
                        comp.insert(w);
                        queue.push_back(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Hop distances from `source` to every vertex within `max_hops`.
    pub fn distances_from(&self, source: VertexId, max_hops: usize) -> BTreeMap<VertexId, usize> {
        let mut dist = BTreeMap::from([(source, 0)]);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == max_hops {
                continue;
            }
            for &w in self.neighbors(u) {
                if let Entry::Vacant(e) = dist.entry(w) {
                    e.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Degree multiset as a sorted vector.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut seq: Vec<usize> = self.vertices.values().map(|d| d.adj.len()).collect();
        seq.sort_unstable();
        seq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Record {
    Vertex {
        id: VertexId,
        label: Label,
        sensitive: Option<SensitiveValue>,
    },
    Edge(VertexId, VertexId),
    Attribute {
        id: VertexId,
        key: String,
        value: String,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits network text into records, tagged with their 1-based line number.
pub(crate) fn parse_records(text: &str) -> Result<Vec<(usize, Record)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let id = |tok: &str| -> Result<VertexId> {
            tok.parse::<u32>()
                .map(VertexId)
                .map_err(|_| parse_err(line, format!("invalid vertex id {tok:?}")))
        };
        let record = match tokens.as_slice() {
            ["v", v, label] => Record::Vertex {
                id: id(v)?,
                label: Label::new(label).map_err(|e| parse_err(line, e.to_string()))?,
                sensitive: None,
            },
            ["v", v, label, extra] => {
                let value = extra
                    .strip_prefix("s=")
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| parse_err(line, format!("expected s=<value>, got {extra:?}")))?;
                Record::Vertex {
                    id: id(v)?,
                    label: Label::new(label).map_err(|e| parse_err(line, e.to_string()))?,
                    sensitive: Some(
                        SensitiveValue::new(value).map_err(|e| parse_err(line, e.to_string()))?,
                    ),
                }
            }
            ["e", a, b] => Record::Edge(id(a)?, id(b)?),
            ["a", v, kv] => {
                let (key, value) = kv
                    .split_once('=')
                    .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                    .ok_or_else(|| {
                        parse_err(line, format!("expected <key>=<value>, got {kv:?}"))
                    })?;
                Record::Attribute {
                    id: id(v)?,
                    key: key.to_string(),
                    value: value.to_string(),
                }
            }
            _ => return Err(parse_err(line, format!("malformed line {trimmed:?}"))),
        };
        out.push((line, record));
    }
    Ok(out)
}

/// Builds a network from vertex and edge records, reporting errors with the
/// offending line. Attribute records are handed back to the caller.
pub(crate) fn build_network(
    records: Vec<(usize, Record)>,
) -> Result<(SocialNetwork, Vec<(usize, Record)>)> {
    let mut g = SocialNetwork::new();
    let mut edges = Vec::new();
    let mut rest = Vec::new();
    for (line, rec) in records {
        match rec {
            Record::Vertex {
                id,
                label,
                sensitive,
            } => g
                .add_vertex(id, label, sensitive)
                .map_err(|e| parse_err(line, e.to_string()))?,
            Record::Edge(a, b) => edges.push((line, a, b)),
            other => rest.push((line, other)),
        }
    }
    for (line, a, b) in edges {
        g.add_edge(a, b)
            .map_err(|e| parse_err(line, e.to_string()))?;
    }
    Ok((g, rest))
}

/// Parses the network text format.
pub fn parse_network(text: &str) -> Result<SocialNetwork> {
    let (g, rest) = build_network(parse_records(text)?)?;
    if let Some((line, _)) = rest.first() {
        return Err(parse_err(
            *line,
            "attribute lines are only valid in contributions",
        ));
    }
    Ok(g)
}

pub const NETWORK_HEADER: &str = "# socanon network";

/// Renders a network deterministically: a header comment, then vertices
/// and edges in ascending id order.
pub fn serialize_network(g: &SocialNetwork) -> String {
    let mut out = String::from(NETWORK_HEADER);
    out.push('\n');
    for v in g.vertices() {
        out.push_str(&format!("v {} {}", v, g.label(v)));
        if let Some(s) = g.sensitive(v) {
            out.push_str(&format!(" s={s}"));
        }
        out.push('\n');
    }
    for (u, v) in g.edges() {
        out.push_str(&format!("e {u} {v}\n"));
    }
    out
}
