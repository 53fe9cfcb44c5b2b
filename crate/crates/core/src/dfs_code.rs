//! Minimum DFS codes for connected labeled graphs.
//!
//! A DFS code lists the edges of a graph in the order a depth-first
//! traversal visits them, each edge written as `(i, j, l_i, l_j)` where `i`
//! and `j` are discovery indices. Codes are compared with the gSpan edge
//! order: at every position backward edges out of the rightmost vertex come
//! first (smaller target index first), then forward edges, deepest source
//! first, then by labels. The minimum over all traversals is a canonical
//! form, so two graphs are label-preserving isomorphic exactly when their
//! minimum codes are equal.
//!
//! The minimum is built one edge at a time, keeping every partial traversal
//! that produces the smallest prefix so far. Partial traversals with the
//! same visited set, rightmost path and pending backward edges have
//! identical futures and are merged. Twins (same label, same neighbors
//! apart from each other) are interchangeable by an automorphism, so among
//! unvisited twins only the smallest is ever discovered next.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Label, SocialNetwork, VertexId};

/// Default cap on the number of vertices of a component.
pub const DEFAULT_COMPONENT_CAP: usize = 12;

/// Hard limit on the number of partial traversals kept at one step.
pub const STATE_BUDGET: usize = 1 << 20;

pub const MAX_VERTICES: usize = 64;

/// One edge of a DFS code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DfsEdge {
    pub from: usize,
    pub to: usize,
    pub from_label: Label,
    pub to_label: Label,
}

impl DfsEdge {
    pub fn is_forward(&self) -> bool {
        self.from < self.to
    }

    // Position of the edge in any traversal: backward edges out of vertex
    // `from` precede the forward edge that discovers `from + 1`.
    fn structure_key(&self) -> (usize, u8, usize) {
        if self.is_forward() {
            (self.to - 1, 1, usize::MAX - self.from)
        } else {
            (self.from, 0, self.to)
        }
    }
}

impl Ord for DfsEdge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.structure_key()
            .cmp(&other.structure_key())
            .then_with(|| self.from_label.cmp(&other.from_label))
            .then_with(|| self.to_label.cmp(&other.to_label))
    }
}

impl PartialOrd for DfsEdge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum DFS code of a connected component.
///
/// Only produced by [`min_dfs_code`], so every value is the minimum for its
/// graph. A single vertex has no edges and is represented by its label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DfsCode {
    vertex_count: usize,
    lone: Option<Label>,
    edges: Vec<DfsEdge>,
}

impl DfsCode {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[DfsEdge] {
        &self.edges
    }

    /// Rebuilds the graph the code describes, with discovery indices as ids.
    pub fn to_graph(&self) -> SocialNetwork {
        let mut g = SocialNetwork::new();
        if let Some(l) = &self.lone {
            g.add_vertex(VertexId(0), l.clone(), None).unwrap();
            return g;
        }
        for e in &self.edges {
            for (i, l) in [(e.from, &e.from_label), (e.to, &e.to_label)] {
                if !g.contains(VertexId(i as u32)) {
                    g.add_vertex(VertexId(i as u32), l.clone(), None).unwrap();
                }
            }
            g.add_edge(VertexId(e.from as u32), VertexId(e.to as u32))
                .unwrap();
        }
        g
    }
}

// Components sort by size first, which is also the neighborhood component
// code order.
impl Ord for DfsCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vertex_count
            .cmp(&other.vertex_count)
            .then_with(|| self.edges.len().cmp(&other.edges.len()))
            .then_with(|| self.lone.cmp(&other.lone))
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

impl PartialOrd for DfsCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DfsCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.lone {
            return write!(f, "({l})");
        }
        for (n, e) in self.edges.iter().enumerate() {
            if n > 0 {
                f.write_str(";")?;
            }
            write!(f, "({},{},{},{})", e.from, e.to, e.from_label, e.to_label)?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Traversal {
    visited: u64,
    // Local vertices on the rightmost path, root first.
    path: Vec<u8>,
    // Path vertices already joined to the rightmost vertex in the code.
    joined: u64,
    // Discovery index of each local vertex.
    index: Vec<u8>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    Backward { to: usize },
    Forward { from: Reverse<usize>, label: u32 },
}

/// Minimum DFS code with the default component cap.
pub fn min_dfs_code(component: &SocialNetwork) -> Result<DfsCode> {
    min_dfs_code_capped(component, DEFAULT_COMPONENT_CAP)
}

/// Minimum DFS code of a connected, non-empty component with at most `cap`
/// vertices.
pub fn min_dfs_code_capped(component: &SocialNetwork, cap: usize) -> Result<DfsCode> {
    let n = component.vertex_count();
    if n == 0 {
        return Err(Error::EmptyComponent);
    }
    if n > cap.min(MAX_VERTICES) {
        return Err(Error::ComponentTooLarge {
            vertices: n,
            cap: cap.min(MAX_VERTICES),
        });
    }
    if !component.is_connected() {
        return Err(Error::Disconnected);
    }
    let ids: Vec<VertexId> = component.vertices().collect();
    if n == 1 {
        return Ok(DfsCode {
            vertex_count: 1,
            lone: Some(component.label(ids[0]).clone()),
            edges: Vec::new(),
        });
    }

    let local: BTreeMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut label_set: Vec<&Label> = ids.iter().map(|&v| component.label(v)).collect();
    label_set.sort();
    label_set.dedup();
    let rank: Vec<u32> = ids
        .iter()
        .map(|&v| label_set.binary_search(&component.label(v)).unwrap() as u32)
        .collect();
    let adj: Vec<u64> = ids
        .iter()
        .map(|&v| {
            component
                .neighbors(v)
                .iter()
                .fold(0u64, |m, w| m | (1 << local[w]))
        })
        .collect();

    let ctx = Context {
        smaller_twins: (0..n)
            .map(|a| {
                (0..a)
                    .filter(|&b| rank[a] == rank[b] && adj[a] & !(1 << b) == adj[b] & !(1 << a))
                    .fold(0u64, |m, b| m | (1 << b))
            })
            .collect(),
        adj,
        rank,
    };
    let (adj, rank) = (&ctx.adj, &ctx.rank);

    // Edge list of the code as (from index, to index, from rank, to rank).
    let mut code: Vec<(usize, usize, u32, u32)> = Vec::with_capacity(component.edge_count());

    let first = (0..n)
        .flat_map(|a| bits(adj[a]).map(move |b| (a, b)))
        .map(|(a, b)| (rank[a], rank[b]))
        .min()
        .expect("connected component with two vertices has an edge");
    let mut states: Vec<Traversal> = Vec::new();
    for a in (0..n).filter(|&a| ctx.smaller_twins[a] == 0) {
        for b in bits(adj[a]) {
            if (rank[a], rank[b]) == first && ctx.smaller_twins[b] & !(1 << a) == 0 {
                let mut index = vec![u8::MAX; n];
                index[a] = 0;
                index[b] = 1;
                states.push(Traversal {
                    visited: (1 << a) | (1 << b),
                    path: vec![a as u8, b as u8],
                    joined: 1 << a,
                    index,
                });
            }
        }
    }
    code.push((0, 1, first.0, first.1));

    for _ in 1..component.edge_count() {
        let next_index = states[0].visited.count_ones() as usize;
        let best = states
            .iter()
            .filter_map(|s| best_step(s, adj, rank))
            .min()
            .expect("uncovered edges remain");

        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for s in &states {
            for t in extend(s, best, &ctx) {
                if seen.insert((t.visited, t.path.clone(), t.joined)) {
                    next.push(t);
                }
            }
        }
        if next.len() > STATE_BUDGET {
            return Err(Error::SearchBudgetExceeded(STATE_BUDGET));
        }
        let s0 = &states[0];
        let at = |depth: usize| {
            let v = s0.path[depth] as usize;
            (s0.index[v] as usize, rank[v])
        };
        let (rightmost, rightmost_rank) = at(s0.path.len() - 1);
        match best {
            Step::Backward { to } => {
                let (to_index, to_rank) = at(to);
                code.push((rightmost, to_index, rightmost_rank, to_rank));
            }
            Step::Forward {
                from: Reverse(depth),
                label,
            } => {
                let (from_index, from_rank) = at(depth);
                code.push((from_index, next_index, from_rank, label));
            }
        }
        states = next;
    }

    let edges = code
        .into_iter()
        .map(|(from, to, fl, tl)| DfsEdge {
            from,
            to,
            from_label: label_set[fl as usize].clone(),
            to_label: label_set[tl as usize].clone(),
        })
        .collect();
    Ok(DfsCode {
        vertex_count: n,
        lone: None,
        edges,
    })
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

// Backward steps are keyed by the position of the target on the rightmost
// path. Path position and discovery index order agree along the path.
fn best_step(s: &Traversal, adj: &[u64], rank: &[u32]) -> Option<Step> {
    let r = *s.path.last().unwrap() as usize;
    let pending = adj[r] & s.visited & !s.joined;
    if pending != 0 {
        let to = s
            .path
            .iter()
            .position(|&p| pending & (1 << p) != 0)
            .expect("visited neighbors of the rightmost vertex lie on the path");
        return Some(Step::Backward { to });
    }
    for depth in (0..s.path.len()).rev() {
        let open = adj[s.path[depth] as usize] & !s.visited;
        if open != 0 {
            let label = bits(open).map(|w| rank[w]).min().unwrap();
            return Some(Step::Forward {
                from: Reverse(depth),
                label,
            });
        }
    }
    None
}

struct Context {
    adj: Vec<u64>,
    rank: Vec<u32>,
    smaller_twins: Vec<u64>,
}

fn extend(s: &Traversal, step: Step, ctx: &Context) -> Vec<Traversal> {
    let (adj, rank) = (&ctx.adj, &ctx.rank);
    if best_step(s, adj, rank) != Some(step) {
        return Vec::new();
    }
    match step {
        Step::Backward { to } => {
            let mut t = s.clone();
            t.joined |= 1 << s.path[to];
            vec![t]
        }
        Step::Forward {
            from: Reverse(depth),
            label,
        } => {
            let parent = s.path[depth] as usize;
            let next_index = s.visited.count_ones() as u8;
            bits(adj[parent] & !s.visited)
                .filter(|&w| rank[w] == label && ctx.smaller_twins[w] & !s.visited == 0)
                .map(|w| {
                    let mut t = s.clone();
                    t.visited |= 1 << w;
                    t.path.truncate(depth + 1);
                    t.path.push(w as u8);
                    t.joined = 1 << parent;
                    t.index[w] = next_index;
                    t
                })
                .collect()
        }
    }
}

/// Whether two connected components are label-preserving isomorphic,
/// decided by comparing minimum DFS codes.
pub fn codes_equal_iso(c1: &SocialNetwork, c2: &SocialNetwork) -> Result<bool> {
    Ok(min_dfs_code(c1)? == min_dfs_code(c2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_network;

    #[test]
    fn single_edge_orders_labels() {
        let g = parse_network("v 1 B\nv 2 A\ne 1 2").unwrap();
        let c = min_dfs_code(&g).unwrap();
        assert_eq!(c.to_string(), "(0,1,A,B)");
        assert_eq!(c.edge_count(), 1);
    }

    #[test]
    fn triangle_has_one_backward_edge() {
        let g = parse_network("v 1 X\nv 2 X\nv 3 X\ne 1 2\ne 2 3\ne 1 3").unwrap();
        let c = min_dfs_code(&g).unwrap();
        assert_eq!(c.to_string(), "(0,1,X,X);(1,2,X,X);(2,0,X,X)");
        assert_eq!(c.edges().iter().filter(|e| !e.is_forward()).count(), 1);
    }

    #[test]
    fn lone_vertex_code_keeps_label() {
        let a = min_dfs_code(&parse_network("v 4 A").unwrap()).unwrap();
        let b = min_dfs_code(&parse_network("v 4 B").unwrap()).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.to_string(), "(A)");
    }

    #[test]
    fn rejects_bad_components() {
        assert_eq!(
            min_dfs_code(&SocialNetwork::new()).unwrap_err(),
            Error::EmptyComponent
        );
        assert_eq!(
            min_dfs_code(&parse_network("v 1 A\nv 2 A").unwrap()).unwrap_err(),
            Error::Disconnected
        );
        let mut text = String::new();
        for i in 0..13 {
            text.push_str(&format!("v {i} A\n"));
            if i > 0 {
                text.push_str(&format!("e 0 {i}\n"));
            }
        }
        assert!(matches!(
            min_dfs_code(&parse_network(&text).unwrap()).unwrap_err(),
            Error::ComponentTooLarge {
                vertices: 13,
                cap: 12
            }
        ));
        assert!(min_dfs_code_capped(&parse_network(&text).unwrap(), 20).is_ok());
    }

    #[test]
    fn path_versus_triangle() {
        let p3 = parse_network("v 1 X\nv 2 X\nv 3 X\ne 1 2\ne 2 3").unwrap();
        let k3 = parse_network("v 1 X\nv 2 X\nv 3 X\ne 1 2\ne 2 3\ne 1 3").unwrap();
        assert!(!codes_equal_iso(&p3, &k3).unwrap());
        assert!(codes_equal_iso(&p3, &p3).unwrap());
    }

    #[test]
    fn code_rebuilds_the_graph() {
        let g = parse_network(
            "v 1 A\nv 2 B\nv 3 A\nv 4 C\nv 5 B\ne 1 2\ne 2 3\ne 3 4\ne 4 1\ne 4 5\ne 2 5",
        )
        .unwrap();
        let c = min_dfs_code(&g).unwrap();
        assert_eq!(c.edge_count(), g.edge_count());
        assert_eq!(min_dfs_code(&c.to_graph()).unwrap(), c);
    }

    #[test]
    fn dense_symmetric_component_is_tractable() {
        let mut text = String::new();
        for i in 0..12 {
            text.push_str(&format!("v {i} A\n"));
            for j in 0..i {
                text.push_str(&format!("e {j} {i}\n"));
            }
        }
        let c = min_dfs_code(&parse_network(&text).unwrap()).unwrap();
        assert_eq!(c.edge_count(), 66);
    }
}
