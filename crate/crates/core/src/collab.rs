//! Collaborative network built from party contributions, with per-attribute
//! and per-edge provenance, revocation, and anonymized querying.
//!
//! A node is identified by the values of the configured identifying
//! attributes; two contributions describing the same identifying values
//! describe the same node. Every attribute value and every edge remembers
//! the set of parties that supplied it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    build_network, parse_records, Label, Record, SensitiveValue, SocialNetwork, VertexId,
};
use crate::hierarchy::LabelHierarchy;
use crate::kanon::KAnonConfig;
use crate::ldiv::{enforce_k_and_l, LDivConfig};

/// Attribute key the contribution format uses for the vertex label.
pub const LABEL_KEY: &str = "label";
/// Attribute key the contribution format uses for the sensitive value.
pub const SENSITIVE_KEY: &str = "sensitive";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyId(String);

impl PartyId {
    pub fn new(s: &str) -> Result<Self> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken(s.to_string()));
        }
        Ok(PartyId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Sources = BTreeSet<PartyId>;

/// A network offered by one party, or withdrawn by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyNetwork {
    pub party: PartyId,
    pub network: SocialNetwork,
    /// Attributes per vertex, including the label and, when present, the
    /// sensitive value under [`LABEL_KEY`] and [`SENSITIVE_KEY`].
    pub attributes: BTreeMap<VertexId, BTreeMap<String, String>>,
}

impl PartyNetwork {
    /// Wraps a plain network; its labels and sensitive values become the
    /// only attributes.
    pub fn from_network(party: PartyId, network: SocialNetwork) -> Self {
        let attributes = network
            .vertices()
            .map(|v| (v, base_attributes(&network, v)))
            .collect();
        PartyNetwork {
            party,
            network,
            attributes,
        }
    }

    /// Parses the contribution format: the network format plus
    /// `a <vertex-id> <key>=<value>` lines.
    pub fn parse(party: PartyId, text: &str) -> Result<Self> {
        let (network, rest) = build_network(parse_records(text)?)?;
        let mut attributes: BTreeMap<VertexId, BTreeMap<String, String>> = network
            .vertices()
            .map(|v| (v, base_attributes(&network, v)))
            .collect();
        for (line, rec) in rest {
            let Record::Attribute { id, key, value } = rec else {
                continue;
            };
            let attrs = attributes.get_mut(&id).ok_or_else(|| Error::Parse {
                line,
                message: format!("attribute for undeclared vertex {id}"),
            })?;
            if attrs.insert(key.clone(), value).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("vertex {id} sets attribute {key} twice"),
                });
            }
        }
        Ok(PartyNetwork {
            party,
            network,
            attributes,
        })
    }

    /// Renders the contribution format; parsing the result gives `self`.
    pub fn to_text(&self) -> String {
        let mut out = crate::graph::serialize_network(&self.network);
        for (v, attrs) in &self.attributes {
            for (k, val) in attrs {
                if k != LABEL_KEY && k != SENSITIVE_KEY {
                    out.push_str(&format!("a {v} {k}={val}\n"));
                }
            }
        }
        out
    }
}

fn base_attributes(g: &SocialNetwork, v: VertexId) -> BTreeMap<String, String> {
    let mut m = BTreeMap::from([(LABEL_KEY.to_string(), g.label(v).to_string())]);
    if let Some(s) = g.sensitive(v) {
        m.insert(SENSITIVE_KEY.to_string(), s.to_string());
    }
    m
}

/// Values of the identifying attributes, in configured key order.
pub type NodeKey = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProvenancedNode {
    /// key -> value -> parties. Several values under one key are kept side
    /// by side when parties disagree.
    pub attributes: BTreeMap<String, BTreeMap<String, Sources>>,
}

impl ProvenancedNode {
    /// The single value of `key`, if exactly one party-agreed value exists.
    pub fn value(&self, key: &str) -> Option<std::result::Result<&str, usize>> {
        let values = self.attributes.get(key)?;
        match values.len() {
            1 => values.keys().next().map(|v| Ok(v.as_str())),
            n => Some(Err(n)),
        }
    }

    pub fn has_value(&self, key: &str, value: &str) -> bool {
        self.attributes
            .get(key)
            .is_some_and(|vals| vals.contains_key(value))
    }
}

/// How flattening picks vertex labels and sensitive values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenConfig {
    pub label_key: String,
    pub sensitive_key: String,
}

impl Default for FlattenConfig {
    fn default() -> Self {
        FlattenConfig {
            label_key: LABEL_KEY.into(),
            sensitive_key: SENSITIVE_KEY.into(),
        }
    }
}

/// The merged network with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollabNetwork {
    identifying: Vec<String>,
    nodes: BTreeMap<NodeKey, ProvenancedNode>,
    /// Endpoint keys in ascending order.
    edges: BTreeMap<(NodeKey, NodeKey), Sources>,
    parties: BTreeSet<PartyId>,
}

impl CollabNetwork {
    /// An empty network matching nodes on the given attribute keys.
    pub fn new<I, S>(identifying: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let identifying: Vec<String> = identifying.into_iter().map(Into::into).collect();
        if identifying.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one identifying attribute is required".into(),
            ));
        }
        Ok(CollabNetwork {
            identifying,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            parties: BTreeSet::new(),
        })
    }

    pub fn identifying(&self) -> &[String] {
        &self.identifying
    }

    pub fn nodes(&self) -> &BTreeMap<NodeKey, ProvenancedNode> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(NodeKey, NodeKey), Sources> {
        &self.edges
    }

    pub fn parties(&self) -> &BTreeSet<PartyId> {
        &self.parties
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn keys_of(&self, n: &PartyNetwork) -> Result<BTreeMap<VertexId, NodeKey>> {
        let mut seen = BTreeSet::new();
        let mut out = BTreeMap::new();
        for v in n.network.vertices() {
            let attrs = n.attributes.get(&v);
            let key: NodeKey = self
                .identifying
                .iter()
                .map(|k| {
                    attrs.and_then(|a| a.get(k)).cloned().ok_or_else(|| {
                        Error::MalformedContribution(format!(
                            "vertex {v} lacks identifying attribute {k}"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if !seen.insert(key.clone()) {
                return Err(Error::MalformedContribution(format!(
                    "two vertices share identifying values {key:?}"
                )));
            }
            out.insert(v, key);
        }
        if let Some(v) = n.attributes.keys().find(|v| !n.network.contains(**v)) {
            return Err(Error::MalformedContribution(format!(
                "attributes given for missing vertex {v}"
            )));
        }
        Ok(out)
    }

    /// Adds a contribution. Matching nodes and edges gain the party as a
    /// source; everything else is added with the party as sole source.
    pub fn merge(&self, n: &PartyNetwork) -> Result<CollabNetwork> {
        let keys = self.keys_of(n)?;
        let mut s = self.clone();
        for (v, key) in &keys {
            let node = s.nodes.entry(key.clone()).or_default();
            for (k, val) in n.attributes.get(v).into_iter().flatten() {
                node.attributes
                    .entry(k.clone())
                    .or_default()
                    .entry(val.clone())
                    .or_default()
                    .insert(n.party.clone());
            }
        }
        for (a, b) in n.network.edges() {
            s.edges
                .entry(edge_key(&keys[&a], &keys[&b]))
                .or_default()
                .insert(n.party.clone());
        }
        s.parties.insert(n.party.clone());
        Ok(s)
    }

    /// Withdraws what `r.party` contributed among the items listed in `r`.
    /// Items left without sources disappear, and so do nodes left without
    /// attributes, together with their edges.
    pub fn revoke(&self, r: &PartyNetwork) -> Result<CollabNetwork> {
        if !self.parties.contains(&r.party) {
            return Err(Error::UnknownParty(r.party.to_string()));
        }
        let keys = self.keys_of(r)?;
        let mut s = self.clone();
        for (a, b) in r.network.edges() {
            let e = edge_key(&keys[&a], &keys[&b]);
            if let Some(src) = s.edges.get_mut(&e) {
                src.remove(&r.party);
                if src.is_empty() {
                    s.edges.remove(&e);
                }
            }
        }
        for (v, key) in &keys {
            let Some(node) = s.nodes.get_mut(key) else {
                continue;
            };
            for (k, val) in r.attributes.get(v).into_iter().flatten() {
                let Some(values) = node.attributes.get_mut(k) else {
                    continue;
                };
                if let Some(src) = values.get_mut(val) {
                    src.remove(&r.party);
                    if src.is_empty() {
                        values.remove(val);
                    }
                }
                if values.is_empty() {
                    node.attributes.remove(k);
                }
            }
            if node.attributes.is_empty() {
                s.nodes.remove(key);
                s.edges.retain(|(a, b), _| a != key && b != key);
            }
        }
        let still_present = s
            .nodes
            .values()
            .flat_map(|n| n.attributes.values().flat_map(|vals| vals.values()))
            .chain(s.edges.values())
            .any(|src| src.contains(&r.party));
        if !still_present {
            s.parties.remove(&r.party);
        }
        Ok(s)
    }

    /// Plain network view: nodes get ids `0..n` in identifying-key order,
    /// labels and sensitive values come from the configured attributes,
    /// and provenance is dropped.
    pub fn flatten(&self, cfg: &FlattenConfig) -> Result<SocialNetwork> {
        Ok(self.flatten_with_keys(cfg)?.0)
    }

    fn flatten_with_keys(
        &self,
        cfg: &FlattenConfig,
    ) -> Result<(SocialNetwork, BTreeMap<NodeKey, VertexId>)> {
        let mut g = SocialNetwork::new();
        let mut ids = BTreeMap::new();
        for (i, (key, node)) in self.nodes.iter().enumerate() {
            let id = VertexId(i as u32);
            let label = match node.value(&cfg.label_key) {
                None => {
                    return Err(Error::MissingAttribute {
                        node: id,
                        key: cfg.label_key.clone(),
                    })
                }
                Some(Err(_)) => {
                    return Err(Error::ConflictingAttribute {
                        node: id,
                        key: cfg.label_key.clone(),
                    })
                }
                Some(Ok(l)) => Label::new(l)?,
            };
            let sensitive = match node.value(&cfg.sensitive_key) {
                None => None,
                Some(Err(_)) => {
                    return Err(Error::ConflictingAttribute {
                        node: id,
                        key: cfg.sensitive_key.clone(),
                    })
                }
                Some(Ok(s)) => Some(SensitiveValue::new(s)?),
            };
            g.add_vertex(id, label, sensitive)?;
            ids.insert(key.clone(), id);
        }
        for (a, b) in self.edges.keys() {
            g.add_edge(ids[a], ids[b])?;
        }
        Ok((g, ids))
    }
}

fn edge_key(a: &NodeKey, b: &NodeKey) -> (NodeKey, NodeKey) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Attribute equality test; a node matches when it holds `value` under
/// `key` from any party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub key: String,
    pub value: String,
}

impl std::str::FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, value) = s
            .split_once('=')
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or_else(|| Error::InvalidConfig(format!("predicate {s:?} is not key=value")))?;
        Ok(Predicate {
            key: key.into(),
            value: value.into(),
        })
    }
}

/// Conjunction of predicates on behalf of a requester.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserQuery {
    pub requester: String,
    predicates: Vec<Predicate>,
}

impl UserQuery {
    pub fn new(requester: &str, predicates: Vec<Predicate>) -> Result<Self> {
        if predicates.is_empty() {
            return Err(Error::InvalidConfig(
                "a query needs at least one predicate".into(),
            ));
        }
        Ok(UserQuery {
            requester: requester.into(),
            predicates,
        })
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn matches(&self, node: &ProvenancedNode) -> bool {
        self.predicates
            .iter()
            .all(|p| node.has_value(&p.key, &p.value))
    }
}

/// Privacy levels a snapshot satisfies: neighborhood k-anonymity and
/// distinct l-diversity over stable refinement classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Privacy {
    pub k: KAnonConfig,
    pub l: LDivConfig,
}

impl Privacy {
    /// Whether data protected at `self` may be released to a request for
    /// `wanted`.
    pub fn covers(&self, wanted: &Privacy) -> bool {
        self.k.k >= wanted.k.k && self.l.l >= wanted.l.l && self.k.radius >= wanted.k.radius
    }
}

/// Anonymized view of the store at some point of its history.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub privacy: Privacy,
    pub graph: SocialNetwork,
    ids: BTreeMap<NodeKey, VertexId>,
}

/// One entry of the append-only store log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogRecord {
    Init {
        identifying: Vec<String>,
        flatten: FlattenConfig,
        privacy: Option<Privacy>,
        seed: u64,
    },
    Merge {
        party: PartyId,
        contribution: String,
    },
    Revoke {
        party: PartyId,
        contribution: String,
    },
}

/// A collaborative network kept together with its history and, when a
/// privacy level is configured, an anonymized snapshot refreshed after
/// every change.
///
/// Changes take `&mut self`; readers share the latest snapshot through an
/// `Arc`, so a reader never observes a half-applied merge.
#[derive(Debug, Clone)]
pub struct CollabStore {
    network: CollabNetwork,
    flatten: FlattenConfig,
    privacy: Option<Privacy>,
    seed: u64,
    log: Vec<LogRecord>,
    snapshot: Option<Arc<Snapshot>>,
}

impl CollabStore {
    pub fn new(
        identifying: Vec<String>,
        flatten: FlattenConfig,
        privacy: Option<Privacy>,
        seed: u64,
    ) -> Result<Self> {
        let network = CollabNetwork::new(identifying.clone())?;
        let mut store = CollabStore {
            network,
            flatten: flatten.clone(),
            privacy: privacy.clone(),
            seed,
            log: vec![LogRecord::Init {
                identifying,
                flatten,
                privacy,
                seed,
            }],
            snapshot: None,
        };
        store.refresh()?;
        Ok(store)
    }

    pub fn network(&self) -> &CollabNetwork {
        &self.network
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn privacy(&self) -> Option<&Privacy> {
        self.privacy.as_ref()
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.clone()
    }

    /// Sets or clears the privacy level and re-anonymizes. Recorded in the
    /// log as a fresh header so that replay reproduces it.
    pub fn set_privacy(&mut self, privacy: Option<Privacy>) -> Result<()> {
        self.privacy = privacy.clone();
        if let Some(LogRecord::Init { privacy: p, .. }) = self.log.first_mut() {
            *p = privacy;
        }
        self.refresh()
    }

    pub fn merge(&mut self, n: &PartyNetwork) -> Result<()> {
        let next = self.network.merge(n)?;
        self.commit(
            next,
            LogRecord::Merge {
                party: n.party.clone(),
                contribution: n.to_text(),
            },
        )
    }

    pub fn revoke(&mut self, r: &PartyNetwork) -> Result<()> {
        let next = self.network.revoke(r)?;
        self.commit(
            next,
            LogRecord::Revoke {
                party: r.party.clone(),
                contribution: r.to_text(),
            },
        )
    }

    // Anonymizes before publishing either the network or the record, so a
    // failed anonymization leaves the store as it was.
    fn commit(&mut self, next: CollabNetwork, record: LogRecord) -> Result<()> {
        let snapshot = self.anonymize(&next)?;
        self.network = next;
        self.snapshot = snapshot;
        self.log.push(record);
        Ok(())
    }

    fn refresh(&mut self) -> Result<()> {
        self.snapshot = self.anonymize(&self.network)?;
        Ok(())
    }

    fn anonymize(&self, network: &CollabNetwork) -> Result<Option<Arc<Snapshot>>> {
        let Some(privacy) = &self.privacy else {
            return Ok(None);
        };
        let (flat, ids) = network.flatten_with_keys(&self.flatten)?;
        let graph = if flat.vertex_count() < privacy.k.k {
            // Too small to hide anyone yet; nothing is released.
            SocialNetwork::new()
        } else {
            let mut h = LabelHierarchy::flat_over(&flat);
            h.extend_flat(&flat);
            enforce_k_and_l(&flat, &privacy.l, &privacy.k, &h, self.seed)?.0
        };
        let ids = if graph.is_empty() {
            BTreeMap::new()
        } else {
            ids
        };
        Ok(Some(Arc::new(Snapshot {
            privacy: privacy.clone(),
            graph,
            ids,
        })))
    }

    /// The anonymized subnetwork induced by the nodes matching `q`.
    /// Refused unless the current snapshot was produced at or above
    /// `wanted`.
    pub fn query(&self, q: &UserQuery, wanted: &Privacy) -> Result<SocialNetwork> {
        let snap = self.snapshot.as_ref().ok_or_else(|| {
            Error::QueryRefused("the collaborative network has not been anonymized".into())
        })?;
        if !snap.privacy.covers(wanted) {
            return Err(Error::QueryRefused(format!(
                "snapshot is anonymized at k={} l={}, below the requested k={} l={}",
                snap.privacy.k.k, snap.privacy.l.l, wanted.k.k, wanted.l.l
            )));
        }
        let keep: BTreeSet<VertexId> = self
            .network
            .nodes
            .iter()
            .filter(|(_, node)| q.matches(node))
            .filter_map(|(key, _)| snap.ids.get(key).copied())
            .collect();
        Ok(snap.graph.induced_subgraph(&keep))
    }

    /// Serializes the log as JSON lines.
    pub fn to_log_text(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.log {
            out.push_str(
                &serde_json::to_string(rec).map_err(|e| Error::Serialization(e.to_string()))?,
            );
            out.push('\n');
        }
        Ok(out)
    }

    /// Rebuilds a store by replaying a JSON-lines log.
    pub fn replay(text: &str) -> Result<Self> {
        let mut records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<LogRecord>(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            });
        let Some(first) = records.next().transpose()? else {
            return Err(Error::Serialization("empty store log".into()));
        };
        let LogRecord::Init {
            identifying,
            flatten,
            privacy,
            seed,
        } = first
        else {
            return Err(Error::Serialization(
                "store log must start with init".into(),
            ));
        };
        let mut store = CollabStore::new(identifying, flatten, privacy, seed)?;
        for rec in records {
            match rec? {
                LogRecord::Merge {
                    party,
                    contribution,
                } => store.merge(&PartyNetwork::parse(party, &contribution)?)?,
                LogRecord::Revoke {
                    party,
                    contribution,
                } => store.revoke(&PartyNetwork::parse(party, &contribution)?)?,
                LogRecord::Init { .. } => {
                    return Err(Error::Serialization("init record after the start".into()))
                }
            }
        }
        Ok(store)
    }
}
