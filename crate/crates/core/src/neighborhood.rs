//! Vertex neighborhoods and their canonical codes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dfs_code::{min_dfs_code_capped, DfsCode, MAX_VERTICES};
use crate::error::{Error, Result};
use crate::graph::{SocialNetwork, VertexId};

/// Component size limit used for neighborhood codes. Anonymized
/// neighborhoods routinely outgrow the bare code search default, so the
/// search's state budget is the effective guard here.
pub const NEIGHBORHOOD_COMPONENT_CAP: usize = MAX_VERTICES;

/// Hop radius of a neighborhood.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub enum Radius {
    #[default]
    One,
    Two,
}

impl Radius {
    pub fn hops(self) -> usize {
        match self {
            Radius::One => 1,
            Radius::Two => 2,
        }
    }

    pub fn from_hops(hops: usize) -> Result<Self> {
        match hops {
            1 => Ok(Radius::One),
            2 => Ok(Radius::Two),
            _ => Err(Error::InvalidConfig(format!(
                "radius must be 1 or 2, got {hops}"
            ))),
        }
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.hops().fmt(f)
    }
}

/// Subgraph induced on the vertices within `radius` hops of `center`,
/// excluding the center itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: VertexId,
    pub radius: Radius,
    pub subgraph: SocialNetwork,
    /// Hop distance from the center of every subgraph vertex.
    pub distance: BTreeMap<VertexId, usize>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.subgraph.vertex_count()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraph.is_empty()
    }

    pub fn components(&self) -> Vec<SocialNetwork> {
        self.subgraph
            .components()
            .iter()
            .map(|c| self.subgraph.induced_subgraph(c))
            .collect()
    }
}

pub fn extract_neighborhood(
    g: &SocialNetwork,
    v: VertexId,
    radius: Radius,
) -> Result<Neighborhood> {
    g.check_vertex(v)?;
    let mut distance = g.distances_from(v, radius.hops());
    distance.remove(&v);
    let keep: BTreeSet<VertexId> = distance.keys().copied().collect();
    Ok(Neighborhood {
        center: v,
        radius,
        subgraph: g.induced_subgraph(&keep),
        distance,
    })
}

/// Minimum DFS codes of the components of a neighborhood, sorted by vertex
/// count, then edge count, then code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NeighborhoodCode(Vec<DfsCode>);

impl NeighborhoodCode {
    pub fn components(&self) -> &[DfsCode] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.0.iter().map(DfsCode::vertex_count).sum()
    }
}

impl fmt::Display for NeighborhoodCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

pub fn neighborhood_code(n: &Neighborhood) -> Result<NeighborhoodCode> {
    code_of_subgraph(&n.subgraph, NEIGHBORHOOD_COMPONENT_CAP)
}

/// Canonical code of an arbitrary (possibly disconnected) graph, treated
/// as a neighborhood.
pub fn code_of_subgraph(subgraph: &SocialNetwork, cap: usize) -> Result<NeighborhoodCode> {
    let mut codes = subgraph
        .components()
        .iter()
        .map(|c| min_dfs_code_capped(&subgraph.induced_subgraph(c), cap))
        .collect::<Result<Vec<_>>>()?;
    codes.sort();
    Ok(NeighborhoodCode(codes))
}

pub fn vertex_code(
    g: &SocialNetwork,
    v: VertexId,
    radius: Radius,
    cap: usize,
) -> Result<NeighborhoodCode> {
    code_of_subgraph(&extract_neighborhood(g, v, radius)?.subgraph, cap)
}

/// Groups the vertices of `g` by neighborhood code.
pub fn neighborhood_classes(
    g: &SocialNetwork,
    radius: Radius,
    cap: usize,
) -> Result<BTreeMap<NeighborhoodCode, Vec<VertexId>>> {
    let mut out: BTreeMap<NeighborhoodCode, Vec<VertexId>> = BTreeMap::new();
    for v in g.vertices() {
        out.entry(vertex_code(g, v, radius, cap)?)
            .or_default()
            .push(v);
    }
    Ok(out)
}
