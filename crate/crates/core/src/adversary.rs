//! Re-identification and inference attacks on a published network, and
//! utility loss between an original network and its published form.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SensitiveValue, SocialNetwork, VertexId};
use crate::hierarchy::LabelHierarchy;
use crate::neighborhood::{
    code_of_subgraph, extract_neighborhood, neighborhood_classes, vertex_code, Radius,
    NEIGHBORHOOD_COMPONENT_CAP,
};
use crate::partition::{refinement_signature, EquivalencePartition, RefinementSignature};

/// What the adversary knows about the target.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryKnowledge {
    /// The target's neighborhood, center excluded.
    Neighborhood {
        radius: Radius,
        subgraph: SocialNetwork,
    },
    /// The answer to the refinement query `H_level` on the target.
    Refinement(RefinementSignature),
    /// The published vertex of the target, e.g. after an earlier attack.
    Member(VertexId),
    /// Values the target is known not to have, plus how to find its class.
    Background {
        locator: Box<AdversaryKnowledge>,
        excluded: BTreeSet<SensitiveValue>,
    },
}

impl AdversaryKnowledge {
    /// The radius-`radius` neighborhood of `v` in `g`.
    pub fn neighborhood_of(g: &SocialNetwork, v: VertexId, radius: Radius) -> Result<Self> {
        Ok(AdversaryKnowledge::Neighborhood {
            radius,
            subgraph: extract_neighborhood(g, v, radius)?.subgraph,
        })
    }

    pub fn refinement_of(g: &SocialNetwork, v: VertexId, level: usize) -> Result<Self> {
        Ok(AdversaryKnowledge::Refinement(refinement_signature(
            g, v, level,
        )?))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AdversaryKnowledge::Neighborhood { .. } => "neighborhood",
            AdversaryKnowledge::Refinement(_) => "refinement",
            AdversaryKnowledge::Member(_) => "member",
            AdversaryKnowledge::Background { .. } => "sensitive-background",
        }
    }

    // Published vertices consistent with locating knowledge.
    fn candidates(&self, published: &SocialNetwork) -> Result<Vec<VertexId>> {
        match self {
            AdversaryKnowledge::Neighborhood { radius, subgraph } => {
                let want = code_of_subgraph(subgraph, NEIGHBORHOOD_COMPONENT_CAP)?;
                let mut out = Vec::new();
                for v in published.vertices() {
                    if vertex_code(published, v, *radius, NEIGHBORHOOD_COMPONENT_CAP)? == want {
                        out.push(v);
                    }
                }
                Ok(out)
            }
            AdversaryKnowledge::Refinement(sig) => published
                .vertices()
                .filter_map(|v| match refinement_signature(published, v, sig.level) {
                    Ok(s) if s == *sig => Some(Ok(v)),
                    Ok(_) => None,
                    Err(e) => Some(Err(e)),
                })
                .collect(),
            AdversaryKnowledge::Member(v) => {
                Ok(published.contains(*v).then_some(*v).into_iter().collect())
            }
            AdversaryKnowledge::Background { .. } => Err(Error::WrongKnowledgeKind {
                expected: "a locating kind (neighborhood, refinement or member)",
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub candidates: Vec<VertexId>,
    /// `1 / |candidates|`, or 0 when nothing matches.
    pub confidence: f64,
    /// Share of each sensitive value among valued candidates.
    pub inference: BTreeMap<SensitiveValue, f64>,
}

impl AttackResult {
    fn new(
        published: &SocialNetwork,
        candidates: Vec<VertexId>,
        excluded: &BTreeSet<SensitiveValue>,
    ) -> Self {
        let mut counts: BTreeMap<SensitiveValue, usize> = BTreeMap::new();
        for &v in &candidates {
            if let Some(s) = published.sensitive(v) {
                if !excluded.contains(s) {
                    *counts.entry(s.clone()).or_default() += 1;
                }
            }
        }
        let total: usize = counts.values().sum();
        let inference = counts
            .into_iter()
            .map(|(s, c)| (s, c as f64 / total as f64))
            .collect();
        let confidence = if candidates.is_empty() {
            0.0
        } else {
            1.0 / candidates.len() as f64
        };
        AttackResult {
            candidates,
            confidence,
            inference,
        }
    }

    /// The value the adversary learns with certainty, if any.
    pub fn certain_inference(&self) -> Option<&SensitiveValue> {
        match self.inference.len() {
            1 => self.inference.keys().next(),
            _ => None,
        }
    }
}

/// Candidates are the published vertices whose neighborhood code equals
/// that of the known neighborhood.
pub fn neighborhood_attack(
    published: &SocialNetwork,
    know: &AdversaryKnowledge,
) -> Result<AttackResult> {
    if !matches!(know, AdversaryKnowledge::Neighborhood { .. }) {
        return Err(Error::WrongKnowledgeKind {
            expected: "neighborhood",
        });
    }
    let candidates = know.candidates(published)?;
    Ok(AttackResult::new(published, candidates, &BTreeSet::new()))
}

// Members of every class of `p` holding a vertex the knowledge points at.
fn locate_classes(
    published: &SocialNetwork,
    p: &EquivalencePartition,
    locator: &AdversaryKnowledge,
) -> Result<Vec<VertexId>> {
    let hits = locator.candidates(published)?;
    let classes: BTreeSet<usize> = hits.iter().filter_map(|&v| p.class_of(v)).collect();
    if classes.is_empty() {
        return Err(Error::ClassNotFound);
    }
    let mut members: Vec<VertexId> = classes
        .into_iter()
        .flat_map(|c| p.classes()[c].iter().copied())
        .collect();
    members.sort();
    Ok(members)
}

/// Value distribution in the target's class. The attack succeeds when a
/// single value remains, however large the class.
pub fn homogeneity_attack(
    published: &SocialNetwork,
    p: &EquivalencePartition,
    know: &AdversaryKnowledge,
) -> Result<AttackResult> {
    let locator = match know {
        AdversaryKnowledge::Background { locator, .. } => locator.as_ref(),
        other => other,
    };
    let members = locate_classes(published, p, locator)?;
    Ok(AttackResult::new(published, members, &BTreeSet::new()))
}

/// Like [`homogeneity_attack`] after striking the values the adversary
/// knows the target lacks.
pub fn background_attack(
    published: &SocialNetwork,
    p: &EquivalencePartition,
    know: &AdversaryKnowledge,
) -> Result<AttackResult> {
    let AdversaryKnowledge::Background { locator, excluded } = know else {
        return Err(Error::WrongKnowledgeKind {
            expected: "sensitive-background",
        });
    };
    let members = locate_classes(published, p, locator)?;
    Ok(AttackResult::new(published, members, excluded))
}

/// One line of an attack sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target: VertexId,
    pub knowledge: String,
    pub candidates: usize,
    pub confidence: f64,
    pub certain_inference: Option<SensitiveValue>,
}

impl SweepRow {
    fn new(target: VertexId, knowledge: String, r: &AttackResult) -> Self {
        SweepRow {
            target,
            knowledge,
            candidates: r.candidates.len(),
            confidence: r.confidence,
            certain_inference: r.certain_inference().cloned(),
        }
    }
}

/// Neighborhood attack on every vertex of `original`, with the target's
/// original neighborhood as knowledge.
pub fn neighborhood_sweep(
    original: &SocialNetwork,
    published: &SocialNetwork,
    radius: Radius,
) -> Result<Vec<SweepRow>> {
    let classes = neighborhood_classes(published, radius, NEIGHBORHOOD_COMPONENT_CAP)?;
    original
        .vertices()
        .map(|v| {
            let code = vertex_code(original, v, radius, NEIGHBORHOOD_COMPONENT_CAP)?;
            let candidates = classes.get(&code).cloned().unwrap_or_default();
            let r = AttackResult::new(published, candidates, &BTreeSet::new());
            Ok(SweepRow::new(
                v,
                format!("neighborhood-r{}", radius.hops()),
                &r,
            ))
        })
        .collect()
}

/// Homogeneity attack on every published vertex, located by membership.
pub fn homogeneity_sweep(
    published: &SocialNetwork,
    p: &EquivalencePartition,
) -> Result<Vec<SweepRow>> {
    published
        .vertices()
        .map(|v| {
            let r = homogeneity_attack(published, p, &AdversaryKnowledge::Member(v))?;
            Ok(SweepRow::new(v, "homogeneity".into(), &r))
        })
        .collect()
}

/// Share of rows with a certain inference; 0 for an empty sweep.
pub fn certain_inference_rate(rows: &[SweepRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter()
        .filter(|r| r.certain_inference.is_some())
        .count() as f64
        / rows.len() as f64
}

/// How far a published network drifted from the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityMetrics {
    /// L1 distance between the normalized degree distributions.
    pub degree_l1: f64,
    /// Published edge count over original edge count; 1 when both are 0.
    pub edge_inflation: f64,
    pub edges_added: usize,
    pub vertices_added: usize,
    /// Number of original vertices whose label moved up by `h >= 1`
    /// hierarchy steps, keyed by `h`.
    pub label_heights: BTreeMap<usize, usize>,
    /// Original vertices whose published label is not an ancestor of the
    /// original one, or which are missing.
    pub labels_not_generalized: usize,
    /// Average shortest path length on the largest component, published
    /// minus original.
    pub average_path_delta: f64,
}

impl UtilityMetrics {
    /// True when nothing changed: every delta is zero and inflation is 1.
    pub fn is_unchanged(&self) -> bool {
        self.degree_l1 == 0.0
            && self.edge_inflation == 1.0
            && self.edges_added == 0
            && self.vertices_added == 0
            && self.label_heights.is_empty()
            && self.labels_not_generalized == 0
            && self.average_path_delta == 0.0
    }
}

fn degree_distribution(g: &SocialNetwork) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for v in g.vertices() {
        *out.entry(g.degree(v)).or_insert(0.0) += 1.0;
    }
    let n = g.vertex_count() as f64;
    out.values_mut().for_each(|c| *c /= n);
    out
}

fn average_path_length(g: &SocialNetwork) -> f64 {
    let Some(largest) = g.components().into_iter().max_by_key(|c| c.len()) else {
        return 0.0;
    };
    if largest.len() < 2 {
        return 0.0;
    }
    let mut total = 0usize;
    for &s in &largest {
        let mut dist: BTreeMap<VertexId, usize> = BTreeMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let d = dist[&x];
            for &y in g.neighbors(x) {
                if let Entry::Vacant(e) = dist.entry(y) {
                    e.insert(d + 1);
                    queue.push_back(y);
                }
            }
        }
        total += dist.values().sum::<usize>();
    }
    let n = largest.len();
    total as f64 / (n * (n - 1)) as f64
}

/// Utility loss with labels compared under a hierarchy that places every
/// label directly below the root.
pub fn utility_report(original: &SocialNetwork, published: &SocialNetwork) -> UtilityMetrics {
    let mut h = LabelHierarchy::flat_over(original);
    h.extend_flat(published);
    utility_report_with(original, published, &h)
}

/// Utility loss, measuring label generalization in `h`.
pub fn utility_report_with(
    original: &SocialNetwork,
    published: &SocialNetwork,
    h: &LabelHierarchy,
) -> UtilityMetrics {
    let (d0, d1) = (
        degree_distribution(original),
        degree_distribution(published),
    );
    let degrees: BTreeSet<usize> = d0.keys().chain(d1.keys()).copied().collect();
    let degree_l1 = degrees
        .iter()
        .map(|d| (d0.get(d).unwrap_or(&0.0) - d1.get(d).unwrap_or(&0.0)).abs())
        .sum();
    let (e0, e1) = (original.edge_count(), published.edge_count());
    let edge_inflation = match (e0, e1) {
        (0, 0) => 1.0,
        (0, _) => f64::INFINITY,
        _ => e1 as f64 / e0 as f64,
    };
    let mut label_heights = BTreeMap::new();
    let mut labels_not_generalized = 0;
    for v in original.vertices() {
        if !published.contains(v) {
            labels_not_generalized += 1;
            continue;
        }
        match h.steps_up(original.label(v), published.label(v)) {
            Ok(Some(0)) => {}
            Ok(Some(steps)) => *label_heights.entry(steps).or_insert(0) += 1,
            _ => labels_not_generalized += 1,
        }
    }
    UtilityMetrics {
        degree_l1,
        edge_inflation,
        edges_added: published
            .edges()
            .filter(|&(a, b)| {
                !original.contains(a) || !original.contains(b) || !original.has_edge(a, b)
            })
            .count(),
        vertices_added: published
            .vertices()
            .filter(|v| !original.contains(*v))
            .count(),
        label_heights,
        labels_not_generalized,
        average_path_delta: average_path_length(published) - average_path_length(original),
    }
}
