//! Vertex equivalences: refinement signatures, structural and automorphic
//! equivalence, and the reduction network of a structural partition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, SocialNetwork, VertexId};

/// Largest graph the exact automorphism search accepts by default.
pub const DEFAULT_AUTOMORPHISM_CAP: usize = 10;

/// The knowledge `H_i(x)`: the vertex label together with the multiset of
/// level `i - 1` signatures of its neighbors. Level 0 is the label alone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefinementSignature {
    pub level: usize,
    pub label: Label,
    /// Sorted; empty at level 0.
    pub neighbors: Vec<RefinementSignature>,
}

/// Builds the nested signature of `v` directly. Its size grows like
/// `degree^level`, so this is meant for small levels and for display;
/// [`vertex_refinement`] compares signatures without materializing them.
pub fn refinement_signature(
    g: &SocialNetwork,
    v: VertexId,
    level: usize,
) -> Result<RefinementSignature> {
    g.check_vertex(v)?;
    let mut neighbors = Vec::new();
    if level > 0 {
        for &z in g.neighbors(v) {
            neighbors.push(refinement_signature(g, z, level - 1)?);
        }
        neighbors.sort();
    }
    Ok(RefinementSignature {
        level,
        label: g.label(v).clone(),
        neighbors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    Refinement(usize),
    Structural,
    Automorphic,
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionKind::Refinement(i) => write!(f, "refinement({i})"),
            PartitionKind::Structural => write!(f, "structural"),
            PartitionKind::Automorphic => write!(f, "automorphic"),
        }
    }
}

/// Disjoint, non-empty classes covering a vertex set. Classes are kept
/// sorted internally and ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalencePartition {
    kind: PartitionKind,
    classes: Vec<Vec<VertexId>>,
}

impl EquivalencePartition {
    /// Checks that `classes` are non-empty and pairwise disjoint, then
    /// normalizes their order.
    pub fn new(kind: PartitionKind, classes: Vec<Vec<VertexId>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut classes: Vec<Vec<VertexId>> = classes
            .into_iter()
            .map(|mut c| {
                if c.is_empty() {
                    return Err(Error::InvalidPartition("empty class".into()));
                }
                c.sort();
                for &v in &c {
                    if !seen.insert(v) {
                        return Err(Error::InvalidPartition(format!(
                            "vertex {v} appears in two classes"
                        )));
                    }
                }
                Ok(c)
            })
            .collect::<Result<_>>()?;
        classes.sort();
        Ok(EquivalencePartition { kind, classes })
    }

    fn from_keys<K: Ord>(kind: PartitionKind, keys: BTreeMap<VertexId, K>) -> Self {
        let mut by_key: BTreeMap<K, Vec<VertexId>> = BTreeMap::new();
        for (v, key) in keys {
            by_key.entry(key).or_default().push(v);
        }
        let mut classes: Vec<Vec<VertexId>> = by_key.into_values().collect();
        classes.sort();
        EquivalencePartition { kind, classes }
    }

    /// The partition of the vertices of `g` into singletons.
    pub fn discrete(kind: PartitionKind, g: &SocialNetwork) -> Self {
        EquivalencePartition {
            kind,
            classes: g.vertices().map(|v| vec![v]).collect(),
        }
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn classes(&self) -> &[Vec<VertexId>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Index of the class containing `v`.
    pub fn class_of(&self, v: VertexId) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.binary_search(&v).is_ok())
    }

    /// Errors unless the classes cover exactly the vertices of `g`.
    pub fn check_covers(&self, g: &SocialNetwork) -> Result<()> {
        let members: BTreeSet<VertexId> = self.classes.iter().flatten().copied().collect();
        if let Some(v) = g.vertices().find(|v| !members.contains(v)) {
            return Err(Error::PartitionDoesNotCover(v));
        }
        if let Some(v) = members.iter().find(|v| !g.contains(**v)) {
            return Err(Error::InvalidPartition(format!(
                "vertex {v} is not in the graph"
            )));
        }
        Ok(())
    }

    /// Whether every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &EquivalencePartition) -> bool {
        self.classes.iter().all(|c| {
            let home = coarser.class_of(c[0]);
            home.is_some() && c.iter().all(|&v| coarser.class_of(v) == home)
        })
    }

    /// Same classes, ignoring the kind tag.
    pub fn same_classes(&self, other: &EquivalencePartition) -> bool {
        self.classes == other.classes
    }
}

impl fmt::Display for EquivalencePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, class) in self.classes.iter().enumerate() {
            write!(f, "class {i}:")?;
            for v in class {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Colors per level, renumbered densely at each step. Two vertices share a
/// color at level `i` exactly when their `H_i` signatures are equal.
fn refinement_colors(g: &SocialNetwork, levels: usize) -> Vec<BTreeMap<VertexId, usize>> {
    let labels: BTreeSet<&Label> = g.vertices().map(|v| g.label(v)).collect();
    let label_color: BTreeMap<&Label, usize> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let mut out = vec![g
        .vertices()
        .map(|v| (v, label_color[g.label(v)]))
        .collect::<BTreeMap<_, _>>()];
    for _ in 0..levels {
        let prev = out.last().expect("level 0 exists");
        let sigs: BTreeMap<VertexId, (usize, Vec<usize>)> = g
            .vertices()
            .map(|v| {
                let mut nb: Vec<usize> = g.neighbors(v).iter().map(|z| prev[z]).collect();
                nb.sort_unstable();
                (v, (label_color[g.label(v)], nb))
            })
            .collect();
        let distinct: BTreeSet<&(usize, Vec<usize>)> = sigs.values().collect();
        let index: BTreeMap<&(usize, Vec<usize>), usize> = distinct
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let next = sigs.iter().map(|(&v, s)| (v, index[s])).collect();
        out.push(next);
    }
    out
}

/// Partition by `H_level`: vertices share a class exactly when their
/// signatures at that level are equal.
pub fn vertex_refinement(g: &SocialNetwork, level: usize) -> EquivalencePartition {
    let colors = refinement_colors(g, level);
    EquivalencePartition::from_keys(
        PartitionKind::Refinement(level),
        colors.into_iter().last().expect("level 0 exists"),
    )
}

/// The first level `i` at which `H_{i+1}` induces the same partition as
/// `H_i`, together with that partition. Always at most `|V|`.
pub fn stable_refinement(g: &SocialNetwork) -> (usize, EquivalencePartition) {
    let n = g.vertex_count();
    let colors = refinement_colors(g, n + 1);
    let count = |c: &BTreeMap<VertexId, usize>| c.values().collect::<BTreeSet<_>>().len();
    let stable = (0..=n)
        .find(|&i| count(&colors[i]) == count(&colors[i + 1]))
        .expect("class counts cannot grow beyond |V|");
    let partition =
        EquivalencePartition::from_keys(PartitionKind::Refinement(stable), colors[stable].clone());
    (stable, partition)
}

// Adjacency-based twin test, with x and y themselves removed.
fn structural_twins(g: &SocialNetwork, x: VertexId, y: VertexId) -> bool {
    if g.label(x) != g.label(y) {
        return false;
    }
    let nx = g.neighbors(x).iter().filter(|&&z| z != y);
    let ny = g.neighbors(y).iter().filter(|&&z| z != x);
    nx.eq(ny)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn classes_from_union(
    kind: PartitionKind,
    vs: &[VertexId],
    uf: &mut UnionFind,
) -> EquivalencePartition {
    let keys = (0..vs.len()).map(|i| (vs[i], uf.find(i))).collect();
    EquivalencePartition::from_keys(kind, keys)
}

/// Vertices with the same label and the same neighbors apart from each
/// other. An adjacent pair counts when the rest of their neighborhoods
/// agree, since edges are symmetric.
pub fn structural_equivalence(g: &SocialNetwork) -> EquivalencePartition {
    let vs: Vec<VertexId> = g.vertices().collect();
    let mut uf = UnionFind::new(vs.len());
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            if structural_twins(g, vs[i], vs[j]) {
                uf.union(i, j);
            }
        }
    }
    classes_from_union(PartitionKind::Structural, &vs, &mut uf)
}

/// Searches for a label-preserving automorphism extending `map`, in which
/// the first `map.len()` vertices of `order` already have images.
fn extend_automorphism(
    adj: &[Vec<bool>],
    color: &[usize],
    order: &[usize],
    map: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    let depth = map.len();
    if depth == order.len() {
        return true;
    }
    let x = order[depth];
    for y in 0..adj.len() {
        if used[y] || color[y] != color[x] {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .zip(map.iter())
            .all(|(&a, &b)| adj[x][a] == adj[y][b]);
        if !consistent {
            continue;
        }
        used[y] = true;
        map.push(y);
        if extend_automorphism(adj, color, order, map, used) {
            return true;
        }
        map.pop();
        used[y] = false;
    }
    false
}

/// Orbits of the label-preserving automorphism group, found by exhaustive
/// search. Candidate images are restricted to the same stable refinement
/// color, which every automorphism preserves.
pub fn automorphic_equivalence(g: &SocialNetwork) -> Result<EquivalencePartition> {
    automorphic_equivalence_capped(g, DEFAULT_AUTOMORPHISM_CAP)
}

pub fn automorphic_equivalence_capped(
    g: &SocialNetwork,
    cap: usize,
) -> Result<EquivalencePartition> {
    let n = g.vertex_count();
    if n > cap {
        return Err(Error::GraphTooLarge { vertices: n, cap });
    }
    let vs: Vec<VertexId> = g.vertices().collect();
    let pos: BTreeMap<VertexId, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![vec![false; n]; n];
    for (a, b) in g.edges() {
        adj[pos[&a]][pos[&b]] = true;
        adj[pos[&b]][pos[&a]] = true;
    }
    let (_, stable) = stable_refinement(g);
    let color: Vec<usize> = vs
        .iter()
        .map(|&v| stable.class_of(v).expect("stable partition covers g"))
        .collect();

    let mut uf = UnionFind::new(n);
    for x in 0..n {
        for y in x + 1..n {
            if color[x] != color[y] || uf.find(x) == uf.find(y) {
                continue;
            }
            // Map x to y first, then the rest breadth-first from x so that
            // adjacency constraints bite early.
            let mut order = vec![x];
            let mut seen = vec![false; n];
            seen[x] = true;
            let mut head = 0;
            while order.len() < n {
                if head == order.len() {
                    let next = (0..n).find(|&i| !seen[i]).expect("unseen vertex");
                    seen[next] = true;
                    order.push(next);
                }
                let cur = order[head];
                head += 1;
                for z in 0..n {
                    if adj[cur][z] && !seen[z] {
                        seen[z] = true;
                        order.push(z);
                    }
                }
            }
            let mut used = vec![false; n];
            used[y] = true;
            let mut map = vec![y];
            if extend_automorphism(&adj, &color, &order, &mut map, &mut used) {
                uf.union(x, y);
            }
        }
    }
    Ok(classes_from_union(PartitionKind::Automorphic, &vs, &mut uf))
}

/// The quotient of a graph by a structural partition: one node per class
/// and an edge wherever the members of two classes are related.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionNetwork {
    /// The classes, in partition order; node `i` stands for `nodes[i]`.
    pub nodes: Vec<Vec<VertexId>>,
    /// Pairs `(i, j)` with `i < j`.
    pub edges: BTreeSet<(usize, usize)>,
    /// Classes whose members are related to each other.
    pub self_relations: BTreeSet<usize>,
}

impl fmt::Display for ReductionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, class) in self.nodes.iter().enumerate() {
            write!(f, "node {i}:")?;
            for v in class {
                write!(f, " {v}")?;
            }
            if self.self_relations.contains(&i) {
                write!(f, " (self)")?;
            }
            writeln!(f)?;
        }
        for (i, j) in &self.edges {
            writeln!(f, "edge {i} {j}")?;
        }
        Ok(())
    }
}

/// Builds the reduction network of a structural partition, checking that
/// every cross pair of two classes agrees on adjacency. Inside a class,
/// distinct members must agree as well.
pub fn reduction_network(g: &SocialNetwork, p: &EquivalencePartition) -> Result<ReductionNetwork> {
    if p.kind() != PartitionKind::Structural {
        return Err(Error::PartitionKindMismatch {
            expected: PartitionKind::Structural.to_string(),
            found: p.kind().to_string(),
        });
    }
    p.check_covers(g)?;
    let classes = p.classes();
    let mut edges = BTreeSet::new();
    let mut self_relations = BTreeSet::new();
    for (i, ci) in classes.iter().enumerate() {
        for (j, cj) in classes.iter().enumerate().skip(i) {
            let mut related = None;
            for &a in ci {
                for &b in cj {
                    if a == b {
                        continue;
                    }
                    let e = g.has_edge(a, b);
                    match related {
                        None => related = Some(e),
                        Some(r) if r != e => return Err(Error::InconsistentReduction(i, j)),
                        _ => {}
                    }
                }
            }
            if related == Some(true) {
                if i == j {
                    self_relations.insert(i);
                } else {
                    edges.insert((i, j));
                }
            }
        }
    }
    Ok(ReductionNetwork {
        nodes: classes.to_vec(),
        edges,
        self_relations,
    })
}
