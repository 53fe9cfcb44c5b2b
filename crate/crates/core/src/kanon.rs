//! Greedy neighborhood k-anonymization.
//!
//! Vertices are visited in descending neighborhood size. Each unanonymized
//! seed gathers the `k - 1` remaining vertices that are cheapest to make
//! look like it, or every remaining vertex once fewer than `2k - 1` are
//! left, and the group's neighborhoods are then made isomorphic. Edits only
//! add edges and vertices and generalize labels, so nothing a publisher
//! knew about the original graph is contradicted by the output.
//!
//! At radius 1 an edit between original vertices can change the
//! neighborhood of a vertex whose group is already finished, and chasing
//! those changes does not settle on sparse random graphs. So a group is
//! first edited in place on a scratch copy, which is kept only if no
//! finished group changed; otherwise each member receives fresh copies of
//! the neighborhood components it lacks, attached to it alone.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dfs_code::{min_dfs_code_capped, DfsCode};
use crate::error::{Error, Result};
use crate::graph::{Label, SocialNetwork, VertexId};
use crate::hierarchy::LabelHierarchy;
use crate::neighborhood::{
    code_of_subgraph, extract_neighborhood, neighborhood_classes, Neighborhood, NeighborhoodCode,
    Radius, NEIGHBORHOOD_COMPONENT_CAP,
};

/// Parameters of the greedy anonymizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAnonConfig {
    pub k: usize,
    /// Weight of one label generalization.
    pub alpha: f64,
    /// Weight of one edge addition.
    pub beta: f64,
    /// Weight of one vertex added to a neighborhood.
    pub gamma: f64,
    pub radius: Radius,
    /// Largest neighborhood component the canonical code search accepts.
    pub component_cap: usize,
}

impl KAnonConfig {
    pub fn new(k: usize) -> Self {
        KAnonConfig {
            k,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            radius: Radius::One,
            component_cap: NEIGHBORHOOD_COMPONENT_CAP,
        }
    }

    pub fn with_radius(mut self, radius: Radius) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_weights(mut self, alpha: f64, beta: f64, gamma: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let weights = [self.alpha, self.beta, self.gamma];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "cost weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidConfig(
                "at least one cost weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Counts of the three edit kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub edges_added: usize,
    pub labels_generalized: usize,
    /// Vertices that entered some neighborhood through an added edge.
    pub vertices_added: usize,
}

impl EditCounts {
    pub fn is_zero(&self) -> bool {
        *self == EditCounts::default()
    }

    pub fn cost(&self, cfg: &KAnonConfig) -> f64 {
        cfg.alpha * self.labels_generalized as f64
            + cfg.beta * self.edges_added as f64
            + cfg.gamma * self.vertices_added as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizationReport {
    pub edges_added: usize,
    pub labels_generalized: usize,
    /// Vertices brought into a neighborhood: existing vertices joined by an
    /// edge plus freshly created ones.
    pub vertices_added: usize,
    pub total_cost: f64,
    /// Groups formed by the greedy pass; they partition the vertex set.
    pub groups: Vec<Vec<VertexId>>,
    /// Vertices created by the anonymizer, in creation order. They carry
    /// no sensitive value and belong to no group.
    pub synthetic: Vec<VertexId>,
    /// Repair sweeps run after the greedy pass.
    pub repair_rounds: usize,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

// Role of a vertex of `n` relative to the partner neighborhood `other`:
// the partner center comes first, then vertices both neighborhoods hold at
// the same distance (in id order, so they pair with themselves), then the
// rest. Pairing along roles keeps edits on one side from spilling into the
// other.
fn role(n: &Neighborhood, other: &Neighborhood, x: VertexId) -> (u8, usize, u32) {
    let d = n.distance[&x];
    if x == other.center {
        (0, d, 0)
    } else if other.distance.get(&x) == Some(&d) {
        (1, d, x.0)
    } else {
        (2, d, 0)
    }
}

/// Positional order used to match two neighborhoods: role, distance from
/// the center, then degree (descending), then label, then finer structure.
fn matching_order(n: &Neighborhood, other: &Neighborhood) -> Vec<VertexId> {
    let sub = &n.subgraph;
    let comp_size: BTreeMap<VertexId, usize> = sub
        .components()
        .into_iter()
        .flat_map(|c| {
            let len = c.len();
            c.into_iter().map(move |v| (v, len))
        })
        .collect();
    let mut keyed: Vec<_> = sub
        .vertices()
        .map(|v| {
            let mut profile: Vec<usize> = sub.neighbors(v).iter().map(|&w| sub.degree(w)).collect();
            profile.sort_unstable_by(|a, b| b.cmp(a));
            (
                (
                    role(n, other, v),
                    Reverse(sub.degree(v)),
                    sub.label(v).clone(),
                    Reverse(comp_size[&v]),
                    Reverse(profile),
                ),
                v,
            )
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, v)| v).collect()
}

/// A vertex matching between two neighborhoods. Every vertex of the
/// smaller side `a` is paired with the vertex at the same position of `b`;
/// the tail of `b` is unmatched.
struct Matching {
    a: Vec<VertexId>,
    b: Vec<VertexId>,
    /// Whether `a` is the first of the two neighborhoods passed in.
    a_is_first: bool,
    labels: usize,
    edges: usize,
    /// Edit count under the matching's prices.
    weighted: f64,
}

impl Matching {
    fn added(&self) -> usize {
        self.b.len() - self.a.len()
    }

    fn cost(&self, alpha: f64, beta: f64, gamma: f64) -> f64 {
        let added = self.added();
        alpha * self.labels as f64 + beta * (self.edges + added) as f64 + gamma * added as f64
    }
}

fn adjacency(sub: &SocialNetwork, order: &[VertexId], size: usize) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; size]; size];
    for (p, &x) in order.iter().enumerate() {
        for (q, &y) in order.iter().enumerate() {
            m[p][q] = sub.has_edge(x, y);
        }
    }
    m
}

/// Prices of the edits a matching implies. Each side has a base price and
/// every vertex an extra penalty for being touched, so matchings prefer
/// edits on the cheaper side and away from protected vertices.
struct Prices<'p> {
    alpha: f64,
    beta: f64,
    first: f64,
    second: f64,
    penalty: &'p dyn Fn(VertexId) -> f64,
}

// Starts from the positional order and improves it by swapping positions
// of `b` within a role and distance layer while the priced edit count
// drops.
fn improve_matching(
    na: &Neighborhood,
    nb: &Neighborhood,
    h: &LabelHierarchy,
    p: &Prices,
    (wa, wb): (f64, f64),
) -> Result<(Vec<VertexId>, Vec<VertexId>, usize, usize, f64)> {
    let a = matching_order(na, nb);
    let mut b = matching_order(nb, na);
    let layer = |x: VertexId| {
        let (r, d, _) = role(nb, na, x);
        (r, d)
    };
    let (m, n) = (a.len(), b.len());
    let am = adjacency(&na.subgraph, &a, n);
    let mut bm = adjacency(&nb.subgraph, &b, n);
    let pa: Vec<f64> = (0..n)
        .map(|i| if i < m { wa + (p.penalty)(a[i]) } else { wa })
        .collect();
    // Per original b-position; `ident` tracks where each one moved.
    let pb: Vec<f64> = b.iter().map(|&y| wb + (p.penalty)(y)).collect();
    // Label edits for pairing a-position i with the b-vertex originally at
    // position j, as (count, priced).
    let mut lc = vec![vec![(0usize, 0.0f64); n]; m];
    for i in 0..m {
        for (j, &y) in b.iter().enumerate() {
            let (la, lb) = (na.subgraph.label(a[i]), nb.subgraph.label(y));
            if la != lb {
                let top = h.lca(la, lb)?;
                let (ca, cb) = (usize::from(*la != top), usize::from(*lb != top));
                lc[i][j] = (ca + cb, ca as f64 * pa[i] + cb as f64 * pb[j]);
            }
        }
    }
    // ident[q] = original b-position of the vertex now at position q.
    let mut ident: Vec<usize> = (0..n).collect();
    let edge_cost =
        |i: usize, q: usize, bm: &Vec<Vec<bool>>, ident: &Vec<usize>| match (am[i][q], bm[i][q]) {
            (true, false) => pb[ident[i]] + pb[ident[q]],
            (false, true) => pa[i] + pa[q],
            _ => 0.0,
        };
    let row_cost = |i: usize, bm: &Vec<Vec<bool>>, ident: &Vec<usize>| {
        let labels = if i < m {
            p.alpha * lc[i][ident[i]].1
        } else {
            0.0
        };
        labels
            + p.beta
                * (0..n)
                    .filter(|&q| q != i)
                    .map(|q| edge_cost(i, q, bm, ident))
                    .sum::<f64>()
    };
    let swap = |i: usize,
                j: usize,
                b: &mut Vec<VertexId>,
                bm: &mut Vec<Vec<bool>>,
                ident: &mut Vec<usize>| {
        b.swap(i, j);
        ident.swap(i, j);
        bm.swap(i, j);
        for row in bm.iter_mut() {
            row.swap(i, j);
        }
    };
    for _ in 0..8 {
        let mut improved = false;
        for i in 0..m.min(n) {
            for j in i + 1..n {
                if layer(b[i]) != layer(b[j]) {
                    continue;
                }
                let before = row_cost(i, &bm, &ident) + row_cost(j, &bm, &ident);
                swap(i, j, &mut b, &mut bm, &mut ident);
                let after = row_cost(i, &bm, &ident) + row_cost(j, &bm, &ident);
                if after < before - 1e-9 {
                    improved = true;
                } else {
                    swap(i, j, &mut b, &mut bm, &mut ident);
                }
            }
        }
        if !improved {
            break;
        }
    }
    let labels = (0..m).map(|i| lc[i][ident[i]].0).sum();
    let mut priced = p.alpha * (0..m).map(|i| lc[i][ident[i]].1).sum::<f64>();
    let mut edges = 0;
    for i in 0..n {
        for q in i + 1..n {
            edges += usize::from(am[i][q] != bm[i][q]);
            priced += p.beta * edge_cost(i, q, &bm, &ident);
        }
    }
    Ok((a, b, labels, edges, priced))
}

fn match_neighborhoods(
    nu: &Neighborhood,
    nv: &Neighborhood,
    h: &LabelHierarchy,
    p: &Prices,
) -> Result<Matching> {
    let build = |na, nb, a_is_first| -> Result<Matching> {
        let sides = if a_is_first {
            (p.first, p.second)
        } else {
            (p.second, p.first)
        };
        let (a, b, labels, edges, weighted) = improve_matching(na, nb, h, p, sides)?;
        Ok(Matching {
            a,
            b,
            a_is_first,
            labels,
            edges,
            weighted,
        })
    };
    if nu.len() < nv.len() {
        return build(nu, nv, true);
    }
    if nu.len() > nv.len() {
        return build(nv, nu, false);
    }
    // Equal sizes: search from both sides so the result does not depend on
    // argument order.
    let fwd = build(nu, nv, true)?;
    let bwd = build(nv, nu, false)?;
    Ok(if bwd.weighted < fwd.weighted {
        bwd
    } else {
        fwd
    })
}

fn estimate(
    nu: &Neighborhood,
    nv: &Neighborhood,
    cfg: &KAnonConfig,
    h: &LabelHierarchy,
) -> Result<f64> {
    let prices = Prices {
        alpha: cfg.alpha,
        beta: cfg.beta,
        first: 1.0,
        second: 1.0,
        penalty: &|_| 0.0,
    };
    let m = match_neighborhoods(nu, nv, h, &prices)?;
    Ok(m.cost(cfg.alpha, cfg.beta, cfg.gamma))
}

/// Weighted cost of making the neighborhoods of `u` and `v` isomorphic:
/// label generalizations, edge additions and neighborhood vertex additions
/// under a degree-then-label matching refined by local search. Symmetric
/// in `u`, `v`.
pub fn anonymization_cost(
    g: &SocialNetwork,
    u: VertexId,
    v: VertexId,
    cfg: &KAnonConfig,
    h: &LabelHierarchy,
) -> Result<f64> {
    let nu = extract_neighborhood(g, u, cfg.radius)?;
    let nv = extract_neighborhood(g, v, cfg.radius)?;
    estimate(&nu, &nv, cfg, h)
}

// Edits on the template side of a pair disturb vertices already matched to
// it, so they are priced higher.
const TEMPLATE_PRICE: f64 = 3.0;
const GROUP_PENALTY: f64 = 8.0;
const DONE_PENALTY: f64 = 1.0;

/// Working copy of a graph plus edit bookkeeping.
#[derive(Clone)]
pub(crate) struct Editor<'h> {
    pub(crate) graph: SocialNetwork,
    h: &'h LabelHierarchy,
    radius: Radius,
    cap: usize,
    seed: u64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    /// Vertices whose group is already anonymized; growth avoids
    /// disturbing them.
    pub(crate) done: BTreeSet<VertexId>,
    /// Members of the group being anonymized.
    group: BTreeSet<VertexId>,
    /// Padding vertices; growth never picks them.
    frozen: BTreeSet<VertexId>,
    /// Vertices whose radius-1 neighborhood an edit may have changed.
    touched: BTreeSet<VertexId>,
    /// Weighted edit total above which pair anonymization gives up.
    limit: Option<f64>,
    pub(crate) counts: EditCounts,
}

impl<'h> Editor<'h> {
    pub(crate) fn new(
        graph: SocialNetwork,
        h: &'h LabelHierarchy,
        radius: Radius,
        cap: usize,
        seed: u64,
    ) -> Self {
        Editor {
            graph,
            h,
            radius,
            cap,
            seed,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            done: BTreeSet::new(),
            group: BTreeSet::new(),
            frozen: BTreeSet::new(),
            touched: BTreeSet::new(),
            limit: None,
            counts: EditCounts::default(),
        }
    }

    pub(crate) fn with_weights(mut self, alpha: f64, beta: f64, gamma: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.gamma = gamma;
        self
    }

    fn weighted_total(&self) -> f64 {
        self.alpha * self.counts.labels_generalized as f64
            + self.beta * self.counts.edges_added as f64
            + self.gamma * self.counts.vertices_added as f64
    }

    // Extra price of touching `x`: its neighborhood would change under a
    // group that is finished or being built.
    fn penalty(&self, x: VertexId) -> f64 {
        if self.group.contains(&x) {
            GROUP_PENALTY
        } else if self.done.contains(&x) {
            DONE_PENALTY
        } else {
            0.0
        }
    }

    fn tie(&self, v: VertexId) -> u64 {
        splitmix(self.seed ^ splitmix(u64::from(v.0)))
    }

    fn neighborhood(&self, v: VertexId) -> Result<Neighborhood> {
        extract_neighborhood(&self.graph, v, self.radius)
    }

    pub(crate) fn code(&self, v: VertexId) -> Result<NeighborhoodCode> {
        code_of_subgraph(&self.neighborhood(v)?.subgraph, self.cap)
    }

    pub(crate) fn add_edge(&mut self, a: VertexId, b: VertexId) -> Result<bool> {
        let added = self.graph.insert_edge(a, b)?;
        if added {
            self.counts.edges_added += 1;
            let common: Vec<VertexId> = self
                .graph
                .neighbors(a)
                .intersection(self.graph.neighbors(b))
                .copied()
                .collect();
            self.touched.extend(common);
            self.touched.extend([a, b]);
        }
        Ok(added)
    }

    pub(crate) fn generalize(&mut self, v: VertexId, to: &Label) -> Result<bool> {
        let current = self.graph.label(v);
        if current == to {
            return Ok(false);
        }
        let top = self.h.lca(current, to)?;
        if top == *current {
            return Ok(false);
        }
        self.graph.set_label(v, top)?;
        self.counts.labels_generalized += 1;
        let around: Vec<VertexId> = self.graph.neighbors(v).iter().copied().collect();
        self.touched.extend(around);
        self.touched.insert(v);
        Ok(true)
    }

    fn edit_total(&self) -> usize {
        self.counts.edges_added + self.counts.labels_generalized
    }

    /// Edits until the neighborhoods of `u` and `v` have equal codes,
    /// preferring edits around `v`. Returns whether anything changed.
    pub(crate) fn anonymize_pair(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        let mut changed = false;
        loop {
            let nu = self.neighborhood(u)?;
            let nv = self.neighborhood(v)?;
            if code_of_subgraph(&nu.subgraph, self.cap)?
                == code_of_subgraph(&nv.subgraph, self.cap)?
            {
                return Ok(changed);
            }
            changed = true;
            let before = self.edit_total();
            let penalty = |x: VertexId| self.penalty(x);
            let prices = Prices {
                alpha: self.alpha,
                beta: self.beta,
                first: TEMPLATE_PRICE,
                second: 1.0,
                penalty: &penalty,
            };
            let m = match_neighborhoods(&nu, &nv, self.h, &prices)?;
            if nu.len() != nv.len() {
                let (small, big) = if m.a_is_first { (&nu, &nv) } else { (&nv, &nu) };
                self.grow(small, big, &m)?;
            } else {
                self.align(&m)?;
            }
            if self.edit_total() == before {
                return Err(Error::Internal(format!(
                    "no edit brought the neighborhoods of {u} and {v} closer"
                )));
            }
            if self.limit.is_some_and(|l| self.weighted_total() > l) {
                return Err(Error::Internal("edit limit exceeded".into()));
            }
        }
    }

    // Equal sizes: generalize mismatched labels and copy missing edges in
    // both directions under the matching.
    fn align(&mut self, m: &Matching) -> Result<()> {
        for (&x, &y) in m.a.iter().zip(&m.b) {
            let (lx, ly) = (self.graph.label(x).clone(), self.graph.label(y).clone());
            if lx != ly {
                let top = self.h.lca(&lx, &ly)?;
                self.generalize(x, &top)?;
                self.generalize(y, &top)?;
            }
        }
        let n = m.a.len();
        for p in 0..n {
            for q in p + 1..n {
                let (ea, eb) = (
                    self.graph.has_edge(m.a[p], m.a[q]),
                    self.graph.has_edge(m.b[p], m.b[q]),
                );
                if ea && !eb {
                    self.add_edge(m.b[p], m.b[q])?;
                } else if eb && !ea {
                    self.add_edge(m.a[p], m.a[q])?;
                }
            }
        }
        Ok(())
    }

    // Brings one more vertex into the smaller neighborhood, aiming at the
    // closest unmatched vertex of the larger one. Existing vertices are
    // used, which is always possible: the smaller neighborhood misses at
    // least one vertex of the graph.
    fn grow(&mut self, small: &Neighborhood, big: &Neighborhood, m: &Matching) -> Result<()> {
        let s = small.center;
        let (a, b) = (&m.a, &m.b);
        let target = b[a.len()..]
            .iter()
            .copied()
            .min_by_key(|t| big.distance[t])
            .expect("larger side has an unmatched vertex");
        let want = self.graph.label(target).clone();
        let want_dist = big.distance[&target];
        let ball: BTreeSet<VertexId> = small.subgraph.vertices().chain([s]).collect();
        let pos: BTreeMap<VertexId, usize> = b.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let anchor = if self.radius == Radius::Two && want_dist == 2 {
            let matched = big
                .subgraph
                .neighbors(target)
                .iter()
                .filter(|w| big.distance[w] == 1)
                .filter_map(|w| pos.get(w).and_then(|&i| a.get(i)))
                .find(|x| small.distance[x] == 1)
                .copied();
            matched.or_else(|| a.iter().copied().find(|x| small.distance[x] == 1))
        } else {
            None
        };
        let attach = anchor.unwrap_or(s);
        // Neighbors the newcomer should have inside the neighborhood, as
        // positions of the matched side.
        let wanted: BTreeSet<VertexId> = big
            .subgraph
            .neighbors(target)
            .iter()
            .filter_map(|w| pos.get(w).and_then(|&i| a.get(i)))
            .copied()
            .collect();

        let best = self
            .graph
            .vertices()
            .filter(|w| !ball.contains(w) && !self.frozen.contains(w))
            .map(|w| {
                let nbrs = self.graph.neighbors(w);
                let overshoot = if self.radius == Radius::Two && anchor.is_none() {
                    nbrs.iter().filter(|x| !ball.contains(x)).count()
                } else {
                    0
                };
                let inside: BTreeSet<VertexId> = nbrs
                    .iter()
                    .filter(|x| ball.contains(x) && **x != s)
                    .copied()
                    .collect();
                let edge_edits = inside.symmetric_difference(&wanted).count();
                let mismatch = usize::from(*self.graph.label(w) != want);
                let disturbed = self.penalty(w)
                    + self
                        .graph
                        .neighbors(attach)
                        .intersection(nbrs)
                        .map(|&x| self.penalty(x))
                        .sum::<f64>();
                let disturbed = (disturbed * 16.0) as u64;
                (
                    (
                        overshoot,
                        disturbed,
                        mismatch,
                        edge_edits,
                        self.graph.degree(w),
                        self.tie(w),
                    ),
                    w,
                    overshoot,
                )
            })
            .min();
        let Some((_, w, overshoot)) = best else {
            return Err(Error::Internal(format!(
                "no vertex left to join the neighborhood of {s}"
            )));
        };
        self.add_edge(attach, w)?;
        self.counts.vertices_added += 1 + overshoot;
        Ok(())
    }

    /// Edits until every member's neighborhood code equals the first
    /// member's.
    pub(crate) fn anonymize_group(&mut self, group: &[VertexId]) -> Result<()> {
        let Some((&seed, rest)) = group.split_first() else {
            return Ok(());
        };
        self.group = group.iter().copied().collect();
        let result = (|| loop {
            let mut changed = false;
            for &m in rest {
                changed |= self.anonymize_pair(seed, m)?;
            }
            if !changed {
                return Ok(());
            }
        })();
        self.group.clear();
        result
    }

    fn group_is_uniform(&self, group: &[VertexId]) -> Result<bool> {
        let Some((&seed, rest)) = group.split_first() else {
            return Ok(true);
        };
        let code = self.code(seed)?;
        for &m in rest {
            if self.code(m)? != code {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Synthetic components hung off group members at radius 1.
///
/// A padding vertex is adjacent only to its center and to the rest of its
/// copy, so the neighborhood of every other original vertex is untouched.
struct Padding {
    next: u32,
    synthetic: Vec<VertexId>,
    /// Copies of each component hung off centers with a given label.
    hung: BTreeMap<(Label, DfsCode), usize>,
}

impl Padding {
    fn new(g: &SocialNetwork) -> Self {
        Padding {
            next: g.next_free_id().0,
            synthetic: Vec::new(),
            hung: BTreeMap::new(),
        }
    }

    fn fresh(&mut self, ed: &mut Editor<'_>, label: Label) -> Result<VertexId> {
        let id = VertexId(self.next);
        self.next = self
            .next
            .checked_add(1)
            .ok_or_else(|| Error::Internal("vertex ids exhausted".into()))?;
        ed.graph.add_vertex(id, label, None)?;
        ed.frozen.insert(id);
        ed.counts.vertices_added += 1;
        self.synthetic.push(id);
        Ok(id)
    }

    fn hang(&mut self, ed: &mut Editor<'_>, center: VertexId, component: &DfsCode) -> Result<()> {
        let shape = component.to_graph();
        let mut ids = BTreeMap::new();
        for x in shape.vertices() {
            let id = self.fresh(ed, shape.label(x).clone())?;
            ed.add_edge(center, id)?;
            ids.insert(x, id);
        }
        for (a, b) in shape.edges() {
            ed.add_edge(ids[&a], ids[&b])?;
        }
        Ok(())
    }

    fn component_counts(ed: &Editor<'_>, v: VertexId) -> Result<BTreeMap<DfsCode, usize>> {
        let mut counts = BTreeMap::new();
        for c in ed.neighborhood(v)?.components() {
            *counts.entry(min_dfs_code_capped(&c, ed.cap)?).or_default() += 1;
        }
        Ok(counts)
    }

    /// Per member, the components it lacks against the group-wide maximum
    /// multiplicity, with the weighted cost of hanging all of them.
    fn plan(ed: &Editor<'_>, group: &[VertexId]) -> Result<(Vec<Vec<(DfsCode, usize)>>, f64)> {
        let counts = group
            .iter()
            .map(|&v| Self::component_counts(ed, v))
            .collect::<Result<Vec<_>>>()?;
        let mut target: BTreeMap<&DfsCode, usize> = BTreeMap::new();
        for c in &counts {
            for (code, &n) in c {
                let t = target.entry(code).or_default();
                *t = (*t).max(n);
            }
        }
        let mut cost = 0.0;
        let plan = counts
            .iter()
            .map(|c| {
                target
                    .iter()
                    .filter_map(|(&code, &t)| {
                        let missing = t - c.get(code).copied().unwrap_or(0);
                        (missing > 0).then(|| {
                            let (n, m) = (code.vertex_count(), code.edge_count());
                            cost +=
                                missing as f64 * (ed.gamma * n as f64 + ed.beta * (n + m) as f64);
                            (code.clone(), missing)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok((plan, cost))
    }

    fn apply(
        &mut self,
        ed: &mut Editor<'_>,
        group: &[VertexId],
        plan: Vec<Vec<(DfsCode, usize)>>,
    ) -> Result<()> {
        for (&v, missing) in group.iter().zip(plan) {
            let label = ed.graph.label(v).clone();
            for (code, n) in missing {
                for _ in 0..n {
                    self.hang(ed, v, &code)?;
                }
                *self.hung.entry((label.clone(), code)).or_default() += n;
            }
        }
        Ok(())
    }

    /// A padding vertex's neighborhood is fixed by its center's label, the
    /// component it sits in and its place there. Shapes hung fewer than `k`
    /// times get `k` more copies, all on `k` fresh centers carrying the
    /// same label, which are then alike as well.
    fn finish(&mut self, ed: &mut Editor<'_>, k: usize) -> Result<()> {
        let mut short: BTreeMap<Label, Vec<DfsCode>> = BTreeMap::new();
        for ((label, code), &n) in &self.hung {
            if n < k {
                short.entry(label.clone()).or_default().push(code.clone());
            }
        }
        for (label, codes) in short {
            for _ in 0..k {
                let center = self.fresh(ed, label.clone())?;
                for code in &codes {
                    self.hang(ed, center, code)?;
                }
            }
        }
        Ok(())
    }
}

// Edits on original vertices rarely pay off beyond a few per member, and
// long attempts grow neighborhoods whose codes are expensive.
const TRIAL_EDITS_PER_MEMBER: f64 = 4.0;

// Radius 1: edit original vertices when that is no dearer than padding and
// leaves every finished group intact and padding untouched; pad otherwise.
fn realize_radius_one(
    ed: &mut Editor<'_>,
    pad: &mut Padding,
    groups: &[Vec<VertexId>],
    current: usize,
) -> Result<()> {
    let group = &groups[current];
    let (plan, pad_cost) = Padding::plan(ed, group)?;
    if pad_cost == 0.0 {
        return Ok(());
    }
    let mut trial = ed.clone();
    trial.touched.clear();
    let cap = TRIAL_EDITS_PER_MEMBER * group.len() as f64 * ed.beta.max(ed.alpha).max(ed.gamma);
    trial.limit = Some(ed.weighted_total() + pad_cost.min(cap));
    let accepted = trial.anonymize_group(group).is_ok()
        && trial.touched.is_disjoint(&trial.frozen)
        && groups.iter().enumerate().all(|(i, other)| {
            i == current
                || !other.iter().any(|v| trial.touched.contains(v))
                || trial.group_is_uniform(other).unwrap_or(false)
        });
    if accepted {
        trial.limit = None;
        trial.touched.clear();
        *ed = trial;
        return Ok(());
    }
    pad.apply(ed, group, plan)
}

/// Greedy k-anonymization of `g` against neighborhood attacks of radius
/// `cfg.radius`.
///
/// At radius 1 a group whose neighborhoods cannot be aligned by cheap
/// edits among original vertices is padded with fresh vertices instead,
/// so the pass never disturbs a finished group. At radius 2 finished
/// groups can be disturbed and are repaired until all are uniform again.
///
/// `seed` only breaks ties between equally good vertices when a
/// neighborhood has to grow.
pub fn k_anonymize(
    g: &SocialNetwork,
    cfg: &KAnonConfig,
    h: &LabelHierarchy,
    seed: u64,
) -> Result<(SocialNetwork, AnonymizationReport)> {
    cfg.validate()?;
    h.check_covers(g)?;
    let k = cfg.k;
    if g.vertex_count() < k {
        return Err(Error::GraphSmallerThanK {
            vertices: g.vertex_count(),
            k,
        });
    }
    let mut ed = Editor::new(g.clone(), h, cfg.radius, cfg.component_cap, seed)
        .with_weights(cfg.alpha, cfg.beta, cfg.gamma);
    let mut pad = Padding::new(g);

    let mut list: Vec<(Reverse<usize>, VertexId)> = g
        .vertices()
        .map(|v| Ok((Reverse(extract_neighborhood(g, v, cfg.radius)?.len()), v)))
        .collect::<Result<_>>()?;
    list.sort();
    let mut list: Vec<VertexId> = list.into_iter().map(|(_, v)| v).collect();

    let mut groups: Vec<Vec<VertexId>> = Vec::new();
    while !list.is_empty() {
        let seed_vertex = list.remove(0);
        let candidates: Vec<VertexId> = if list.len() >= 2 * k - 1 {
            let nu = ed.neighborhood(seed_vertex)?;
            let mut costs = list
                .iter()
                .map(|&v| Ok((estimate(&nu, &ed.neighborhood(v)?, cfg, h)?, v)))
                .collect::<Result<Vec<_>>>()?;
            costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            costs.into_iter().take(k - 1).map(|(_, v)| v).collect()
        } else {
            list.clone()
        };
        list.retain(|v| !candidates.contains(v));
        let mut group = vec![seed_vertex];
        group.extend(candidates);
        match groups.last_mut() {
            Some(last) if group.len() < k => last.extend(group),
            _ => groups.push(group),
        }
        let current = groups.len() - 1;
        if cfg.radius == Radius::One {
            realize_radius_one(&mut ed, &mut pad, &groups, current)?;
        } else {
            ed.anonymize_group(&groups[current])?;
        }
        ed.done.extend(groups[current].iter().copied());
    }

    let mut repair_rounds = 0;
    if cfg.radius == Radius::One {
        pad.finish(&mut ed, k)?;
    } else {
        loop {
            let mut broken = Vec::new();
            for (i, group) in groups.iter().enumerate() {
                if !ed.group_is_uniform(group)? {
                    broken.push(i);
                }
            }
            if broken.is_empty() {
                break;
            }
            repair_rounds += 1;
            for i in broken {
                ed.anonymize_group(&groups[i])?;
            }
        }
    }

    let counts = ed.counts;
    let report = AnonymizationReport {
        edges_added: counts.edges_added,
        labels_generalized: counts.labels_generalized,
        vertices_added: counts.vertices_added,
        total_cost: counts.cost(cfg),
        groups,
        synthetic: pad.synthetic,
        repair_rounds,
    };
    Ok((ed.graph, report))
}

/// True when every class of vertices with equal neighborhood codes has at
/// least `k` members. Vacuously true for the empty graph.
pub fn verify_k_anonymity(g: &SocialNetwork, k: usize, radius: Radius) -> Result<bool> {
    verify_k_anonymity_capped(g, k, radius, NEIGHBORHOOD_COMPONENT_CAP)
}

pub fn verify_k_anonymity_capped(
    g: &SocialNetwork,
    k: usize,
    radius: Radius,
    cap: usize,
) -> Result<bool> {
    Ok(neighborhood_classes(g, radius, cap)?
        .values()
        .all(|class| class.len() >= k))
}

/// Edits `g` so that the radius-2 neighborhoods of `u` and `v` become
/// isomorphic, with matched labels generalized to a common ancestor.
pub fn anonymize_pair_2hop(
    g: &SocialNetwork,
    u: VertexId,
    v: VertexId,
    h: &LabelHierarchy,
) -> Result<SocialNetwork> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    if u == v {
        return Err(Error::InvalidConfig(
            "pair anonymization needs two distinct vertices".into(),
        ));
    }
    h.check_covers(g)?;
    let mut ed = Editor::new(g.clone(), h, Radius::Two, NEIGHBORHOOD_COMPONENT_CAP, 0);
    ed.anonymize_pair(u, v)?;
    Ok(ed.graph)
}
