//! Distinct l-diversity over vertex equivalence classes.
//!
//! Enforcement keeps a partition of the vertices into blocks of structural
//! twins: every member of a block has the same label and the same
//! neighbors outside the block, and a block is either a clique or
//! independent. Twins are swapped by an automorphism, so a block always
//! lies inside one refinement class. Failing classes are merged block-wise
//! with a nearby class that brings a new sensitive value until every class
//! passes; the number of blocks drops on each merge, so this terminates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SensitiveValue, SocialNetwork, VertexId};
use crate::hierarchy::LabelHierarchy;
use crate::kanon::{anonymization_cost, KAnonConfig};
use crate::neighborhood::neighborhood_classes;
use crate::partition::{stable_refinement, EquivalencePartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DiversityVariant {
    /// At least `l` distinct sensitive values per class.
    #[default]
    Distinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LDivConfig {
    pub l: usize,
    pub variant: DiversityVariant,
}

impl LDivConfig {
    pub fn new(l: usize) -> Self {
        LDivConfig {
            l,
            variant: DiversityVariant::Distinct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidConfig("l must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDiversity {
    /// Index of the class in the checked partition.
    pub class: usize,
    pub size: usize,
    pub distinct: usize,
    pub pass: bool,
    /// Members without a sensitive value; they never count toward `l`.
    pub unvalued: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub l: usize,
    pub classes: Vec<ClassDiversity>,
    pub overall: bool,
    pub offending: Vec<usize>,
}

impl DiversityReport {
    /// Aligned table for people; [`fmt::Display`] gives one record per line.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:>6} {:>6} {:>9} {:>5} unvalued\n",
            "class", "size", "distinct", "pass"
        );
        for c in &self.classes {
            let unvalued: Vec<String> = c.unvalued.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{:>6} {:>6} {:>9} {:>5} {}\n",
                c.class,
                c.size,
                c.distinct,
                if c.pass { "yes" } else { "no" },
                unvalued.join(",")
            ));
        }
        out.push_str(&format!(
            "{}-diverse: {}\n",
            self.l,
            if self.overall { "yes" } else { "no" }
        ));
        out
    }
}

impl fmt::Display for DiversityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            writeln!(
                f,
                "class {} size={} distinct={} pass={}",
                c.class, c.size, c.distinct, c.pass
            )?;
        }
        Ok(())
    }
}

fn class_values<'g>(g: &'g SocialNetwork, class: &[VertexId]) -> BTreeSet<&'g SensitiveValue> {
    class.iter().filter_map(|&v| g.sensitive(v)).collect()
}

/// Checks each class of `p` for at least `cfg.l` distinct sensitive
/// values. A class without any valued member discloses nothing and passes.
/// Every vertex carrying a sensitive value must be covered by `p`.
pub fn check_l_diversity(
    g: &SocialNetwork,
    p: &EquivalencePartition,
    cfg: &LDivConfig,
) -> Result<DiversityReport> {
    cfg.validate()?;
    let covered: BTreeSet<VertexId> = p.classes().iter().flatten().copied().collect();
    if let Some(v) = g
        .vertices()
        .find(|v| g.sensitive(*v).is_some() && !covered.contains(v))
    {
        return Err(Error::PartitionDoesNotCover(v));
    }
    if let Some(v) = covered.iter().find(|v| !g.contains(**v)) {
        return Err(Error::UnknownVertex(*v));
    }
    let classes: Vec<ClassDiversity> = p
        .classes()
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let distinct = class_values(g, class).len();
            ClassDiversity {
                class: i,
                size: class.len(),
                distinct,
                pass: distinct >= cfg.l || distinct == 0,
                unvalued: class
                    .iter()
                    .copied()
                    .filter(|&v| g.sensitive(v).is_none())
                    .collect(),
            }
        })
        .collect();
    let offending: Vec<usize> = classes
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.class)
        .collect();
    Ok(DiversityReport {
        l: cfg.l,
        overall: offending.is_empty(),
        classes,
        offending,
    })
}

/// Edits `g` until every class of its stable vertex refinement holds at
/// least `cfg.l` distinct sensitive values. Classes are merged by making
/// their members structural twins: edges are added and labels generalized
/// to their common ancestor, never removed or specialized.
///
/// A failing class joins the class, among those adding a value it lacks,
/// whose smallest member is cheapest to anonymize against the failing
/// class's smallest member; `seed` breaks cost ties.
pub fn enforce_l_diversity(
    g: &SocialNetwork,
    cfg: &LDivConfig,
    kcfg: &KAnonConfig,
    h: &LabelHierarchy,
    seed: u64,
) -> Result<(SocialNetwork, DiversityReport)> {
    enforce(g, cfg, kcfg, h, seed, false)
}

/// Like [`enforce_l_diversity`], and afterwards keeps merging twin blocks
/// until the output is also k-anonymous at `kcfg.radius`. A block of `k`
/// twins is always k-anonymous, so this ends at the latest with one block.
pub fn enforce_k_and_l(
    g: &SocialNetwork,
    cfg: &LDivConfig,
    kcfg: &KAnonConfig,
    h: &LabelHierarchy,
    seed: u64,
) -> Result<(SocialNetwork, DiversityReport)> {
    if g.vertex_count() < kcfg.k {
        return Err(Error::GraphSmallerThanK {
            vertices: g.vertex_count(),
            k: kcfg.k,
        });
    }
    enforce(g, cfg, kcfg, h, seed, true)
}

fn enforce(
    g: &SocialNetwork,
    cfg: &LDivConfig,
    kcfg: &KAnonConfig,
    h: &LabelHierarchy,
    seed: u64,
    with_k: bool,
) -> Result<(SocialNetwork, DiversityReport)> {
    cfg.validate()?;
    kcfg.validate()?;
    h.check_covers(g)?;
    let available = g.sensitive_values().len();
    if available < cfg.l && cfg.l > 1 {
        return Err(Error::Unsatisfiable {
            required: cfg.l,
            available,
        });
    }

    let mut graph = g.clone();
    let mut block_of: BTreeMap<VertexId, usize> =
        graph.vertices().enumerate().map(|(i, v)| (v, i)).collect();
    loop {
        let (_, p) = stable_refinement(&graph);
        let report = check_l_diversity(&graph, &p, cfg)?;
        let classes = p.classes();
        // The failing member and the groups it may join, as vertex lists
        // whose first entry represents them.
        let (rep, own, partners): (VertexId, Vec<VertexId>, Vec<Vec<VertexId>>) =
            if let Some(&bad) = report.offending.first() {
                let have = class_values(&graph, &classes[bad]);
                let partners = classes
                    .iter()
                    .enumerate()
                    .filter(|&(i, c)| i != bad && !class_values(&graph, c).is_subset(&have))
                    .map(|(_, c)| c.clone())
                    .collect();
                (classes[bad][0], classes[bad].clone(), partners)
            } else if with_k {
                let small = neighborhood_classes(&graph, kcfg.radius, kcfg.component_cap)?
                    .into_values()
                    .filter(|c| c.len() < kcfg.k)
                    .min();
                let Some(small) = small else {
                    return Ok((graph, report));
                };
                let v = small[0];
                let mut blocks: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
                for (&x, &b) in &block_of {
                    blocks.entry(b).or_default().push(x);
                }
                let own = blocks.remove(&block_of[&v]).expect("v has a block");
                (v, own, blocks.into_values().collect())
            } else {
                return Ok((graph, report));
            };
        let mut best: Option<((f64, u64), usize)> = None;
        for (i, other) in partners.iter().enumerate() {
            // Cost only ranks candidates; a neighborhood too large to code
            // ranks last rather than aborting the merge.
            let cost = anonymization_cost(&graph, rep, other[0], kcfg, h).unwrap_or(f64::INFINITY);
            let key = (cost, tie(seed, other[0]));
            if best.is_none_or(|(b, _)| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                best = Some((key, i));
            }
        }
        let (_, partner) = best.ok_or_else(|| {
            Error::Internal("a failing class has no partner to merge with".into())
        })?;
        let merged: BTreeSet<usize> = own
            .iter()
            .chain(&partners[partner])
            .map(|v| block_of[v])
            .collect();
        let target = *merged.iter().next().expect("two groups merged");
        for b in block_of.values_mut() {
            if merged.contains(b) {
                *b = target;
            }
        }
        make_twins(&mut graph, &block_of, target, h)?;
    }
}

fn tie(seed: u64, v: VertexId) -> u64 {
    let mut x = seed ^ u64::from(v.0).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

// Restores the block invariant for block `target` after a merge.
fn make_twins(
    g: &mut SocialNetwork,
    block_of: &BTreeMap<VertexId, usize>,
    target: usize,
    h: &LabelHierarchy,
) -> Result<()> {
    let members: Vec<VertexId> = block_of
        .iter()
        .filter(|(_, &b)| b == target)
        .map(|(&v, _)| v)
        .collect();
    let mut label = g.label(members[0]).clone();
    for &v in &members[1..] {
        label = h.lca(&label, g.label(v))?;
    }
    let mut outside = BTreeSet::new();
    let mut inside = false;
    for &v in &members {
        for z in g.neighbors(v) {
            if block_of[z] == target {
                inside = true;
            } else {
                outside.insert(block_of[z]);
            }
        }
    }
    let linked: Vec<VertexId> = block_of
        .iter()
        .filter(|(_, b)| outside.contains(b))
        .map(|(&v, _)| v)
        .collect();
    for &v in &members {
        g.set_label(v, label.clone())?;
        for &z in &linked {
            g.insert_edge(v, z)?;
        }
    }
    if inside {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                g.insert_edge(a, b)?;
            }
        }
    }
    Ok(())
}
