//! Naive anonymization: publish the exact structure under random pseudonyms.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Label, SocialNetwork, VertexId};

/// Published identifier replacing an original vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pseudonym(pub u32);

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Bijection between original vertex ids and pseudonyms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnonymizationMapping {
    forward: BTreeMap<VertexId, Pseudonym>,
    inverse: BTreeMap<Pseudonym, VertexId>,
}

impl AnonymizationMapping {
    pub fn from_pairs<I: IntoIterator<Item = (VertexId, Pseudonym)>>(pairs: I) -> Result<Self> {
        let mut m = AnonymizationMapping::default();
        for (v, p) in pairs {
            if m.forward.insert(v, p).is_some() {
                return Err(Error::InvalidMapping(format!("vertex {v} mapped twice")));
            }
            if m.inverse.insert(p, v).is_some() {
                return Err(Error::InvalidMapping(format!("pseudonym {p} used twice")));
            }
        }
        Ok(m)
    }

    /// Seeded shuffle of `1..=n` over the vertices of `g`.
    pub fn random(g: &SocialNetwork, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pseudonyms: Vec<u32> = (1..=g.vertex_count() as u32).collect();
        pseudonyms.shuffle(&mut rng);
        Self::from_pairs(g.vertices().zip(pseudonyms.into_iter().map(Pseudonym)))
            .expect("shuffle of distinct values is a bijection")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self, v: VertexId) -> Option<Pseudonym> {
        self.forward.get(&v).copied()
    }

    pub fn inverse(&self, p: Pseudonym) -> Option<VertexId> {
        self.inverse.get(&p).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Pseudonym)> + '_ {
        self.forward.iter().map(|(&v, &p)| (v, p))
    }

    /// Mapping file body: one `<original-id> <pseudonym>` line per vertex.
    pub fn to_text(&self) -> String {
        self.iter().map(|(v, p)| format!("{v} {p}\n")).collect()
    }

    /// Same as [`to_text`](Self::to_text) but keyed by the original labels,
    /// as in a published anonymization table.
    pub fn to_label_text(&self, g: &SocialNetwork) -> String {
        self.iter()
            .map(|(v, p)| format!("{} {p}\n", g.label(v)))
            .collect()
    }

    /// Reads `<key> <pseudonym>` lines where the key is either a vertex id of
    /// `g` or a label carried by exactly one vertex of `g`.
    pub fn parse_for(g: &SocialNetwork, text: &str) -> Result<Self> {
        let mut by_label: BTreeMap<&str, Vec<VertexId>> = BTreeMap::new();
        for v in g.vertices() {
            by_label.entry(g.label(v).as_str()).or_default().push(v);
        }
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (key, pseudo) = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                [k, p] => (*k, *p),
                _ => return Err(err(format!("expected <key> <pseudonym>, got {line:?}"))),
            };
            let p = pseudo
                .parse::<u32>()
                .map(Pseudonym)
                .map_err(|_| err(format!("invalid pseudonym {pseudo:?}")))?;
            let v = match key.parse::<u32>().map(VertexId) {
                Ok(v) if g.contains(v) => v,
                _ => match by_label.get(key).map(Vec::as_slice) {
                    Some([v]) => *v,
                    Some(_) => return Err(err(format!("label {key:?} is not unique"))),
                    None => return Err(err(format!("no vertex or label {key:?}"))),
                },
            };
            pairs.push((v, p));
        }
        let m = Self::from_pairs(pairs)?;
        if let Some(v) = g.vertices().find(|v| m.forward(*v).is_none()) {
            return Err(Error::InvalidMapping(format!(
                "vertex {v} has no pseudonym"
            )));
        }
        Ok(m)
    }
}

/// Publishes `g` under `mapping`: vertex `x` becomes vertex `f(x)` labeled
/// with its pseudonym, and each edge `(x, y)` becomes `(f(x), f(y))`.
/// Sensitive values are kept.
pub fn apply_mapping(g: &SocialNetwork, mapping: &AnonymizationMapping) -> Result<SocialNetwork> {
    let f = |v: VertexId| {
        mapping
            .forward(v)
            .ok_or_else(|| Error::InvalidMapping(format!("vertex {v} has no pseudonym")))
    };
    let mut out = SocialNetwork::new();
    for v in g.vertices() {
        let p = f(v)?;
        let label = Label::new(&p.to_string())?;
        out.add_vertex(VertexId(p.0), label, g.sensitive(v).cloned())?;
    }
    for (a, b) in g.edges() {
        out.add_edge(VertexId(f(a)?.0), VertexId(f(b)?.0))?;
    }
    Ok(out)
}

/// Naive anonymization under a seeded random bijection.
pub fn naive_anonymize(g: &SocialNetwork, seed: u64) -> (SocialNetwork, AnonymizationMapping) {
    let mapping = AnonymizationMapping::random(g, seed);
    let out = apply_mapping(g, &mapping).expect("random mapping covers every vertex");
    (out, mapping)
}
