//! Brute-force oracles shared by the integration tests. Everything here is
//! written from the definitions and deliberately avoids the library's own
//! canonical codes and refinement machinery.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socanon::{Label, SocialNetwork, VertexId};

pub fn label(s: &str) -> Label {
    Label::new(s).unwrap()
}

pub fn network(labels: &[&str], edges: &[(u32, u32)]) -> SocialNetwork {
    let mut g = SocialNetwork::new();
    for (i, l) in labels.iter().enumerate() {
        g.add_vertex(VertexId(i as u32), label(l), None).unwrap();
    }
    for &(a, b) in edges {
        g.add_edge(VertexId(a), VertexId(b)).unwrap();
    }
    g
}

pub fn uniform(n: u32, edges: &[(u32, u32)]) -> SocialNetwork {
    network(&vec!["x"; n as usize], edges)
}

/// Calls `f` on every permutation of `0..n`.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    fn go(k: usize, p: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            go(k + 1, p, f);
            p.swap(k, i);
        }
    }
    let mut p: Vec<usize> = (0..n).collect();
    go(0, &mut p, &mut f);
}

/// Labels in position order plus the sorted position pairs of the edges.
pub type Canon = (Vec<String>, Vec<(usize, usize)>);

/// Lexicographically smallest encoding over all vertex orderings.
pub fn brute_canon(g: &SocialNetwork) -> Canon {
    let vs: Vec<VertexId> = g.vertices().collect();
    let mut best: Option<Canon> = None;
    for_each_permutation(vs.len(), |p| {
        // p[i] is the position of vs[i]
        let mut labels = vec![String::new(); vs.len()];
        for (i, &v) in vs.iter().enumerate() {
            labels[p[i]] = g.label(v).to_string();
        }
        let index: BTreeMap<VertexId, usize> =
            vs.iter().enumerate().map(|(i, &v)| (v, p[i])).collect();
        let mut edges: Vec<(usize, usize)> = g
            .edges()
            .map(|(a, b)| {
                let (x, y) = (index[&a], index[&b]);
                (x.min(y), x.max(y))
            })
            .collect();
        edges.sort();
        let c = (labels, edges);
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    });
    best.unwrap_or_default()
}

pub fn brute_isomorphic(a: &SocialNetwork, b: &SocialNetwork) -> bool {
    a.vertex_count() == b.vertex_count()
        && a.edge_count() == b.edge_count()
        && brute_canon(a) == brute_canon(b)
}

/// All label- and edge-preserving vertex permutations.
pub fn automorphisms(g: &SocialNetwork) -> Vec<BTreeMap<VertexId, VertexId>> {
    let vs: Vec<VertexId> = g.vertices().collect();
    let mut out = Vec::new();
    for_each_permutation(vs.len(), |p| {
        let m: BTreeMap<VertexId, VertexId> =
            vs.iter().enumerate().map(|(i, &v)| (v, vs[p[i]])).collect();
        let ok = vs.iter().all(|v| g.label(*v) == g.label(m[v]))
            && g.edges().all(|(a, b)| g.has_edge(m[&a], m[&b]));
        if ok {
            out.push(m);
        }
    });
    out
}

/// Orbits of the automorphism group, as sorted vertex sets.
pub fn brute_orbits(g: &SocialNetwork) -> BTreeSet<BTreeSet<VertexId>> {
    let autos = automorphisms(g);
    g.vertices()
        .map(|v| autos.iter().map(|m| m[&v]).collect())
        .collect()
}

/// Classes of the `~` relation given as a predicate, which must be an
/// equivalence.
pub fn classes_of(
    g: &SocialNetwork,
    same: impl Fn(VertexId, VertexId) -> bool,
) -> BTreeSet<BTreeSet<VertexId>> {
    g.vertices()
        .map(|v| g.vertices().filter(|&w| same(v, w)).collect())
        .collect()
}

pub fn as_sets(classes: &[Vec<VertexId>]) -> BTreeSet<BTreeSet<VertexId>> {
    classes
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

/// Radius-1 neighborhood, center excluded, by direct edge filtering.
pub fn brute_neighborhood(g: &SocialNetwork, v: VertexId) -> SocialNetwork {
    let mut n = SocialNetwork::new();
    for &w in g.neighbors(v) {
        n.add_vertex(w, g.label(w).clone(), None).unwrap();
    }
    for (a, b) in g.edges() {
        if n.contains(a) && n.contains(b) {
            n.add_edge(a, b).unwrap();
        }
    }
    n
}

/// Neighborhood k-anonymity at radius 1 via the permutation oracle.
pub fn brute_k_anonymous(g: &SocialNetwork, k: usize) -> bool {
    let mut counts: BTreeMap<Canon, usize> = BTreeMap::new();
    for v in g.vertices() {
        *counts
            .entry(brute_canon(&brute_neighborhood(g, v)))
            .or_default() += 1;
    }
    counts.values().all(|&c| c >= k)
}

/// Fewest added edges (at most `limit`) making `g` k-anonymous at
/// radius 1, searching every subset of non-edges.
pub fn brute_min_edges(g: &SocialNetwork, k: usize, limit: usize) -> Option<usize> {
    let vs: Vec<VertexId> = g.vertices().collect();
    let mut missing = Vec::new();
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            if !g.has_edge(a, b) {
                missing.push((a, b));
            }
        }
    }
    fn search(
        g: &SocialNetwork,
        missing: &[(VertexId, VertexId)],
        from: usize,
        left: usize,
        k: usize,
    ) -> bool {
        if brute_k_anonymous(g, k) {
            return true;
        }
        if left == 0 {
            return false;
        }
        (from..missing.len()).any(|i| {
            let mut h = g.clone();
            h.add_edge(missing[i].0, missing[i].1).unwrap();
            search(&h, missing, i + 1, left - 1, k)
        })
    }
    (0..=limit).find(|&m| search(g, &missing, 0, m, k))
}

/// Every connected graph on `n` vertices with labels from `labels`.
pub fn connected_graphs(n: usize, labels: &[&str]) -> Vec<SocialNetwork> {
    let pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(u32, u32)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        let shape = uniform(n as u32, &edges);
        if !shape.is_connected() {
            continue;
        }
        for assign in 0..labels.len().pow(n as u32) {
            let mut g = shape.clone();
            let mut a = assign;
            for v in 0..n as u32 {
                g.set_label(VertexId(v), label(labels[a % labels.len()]))
                    .unwrap();
                a /= labels.len();
            }
            out.push(g);
        }
    }
    out
}

/// `g` with its vertex ids shuffled.
pub fn relabel_ids(g: &SocialNetwork, seed: u64) -> SocialNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<VertexId> = g.vertices().collect();
    let mut ids: Vec<u32> = (0..vs.len() as u32).map(|i| i * 3 + 7).collect();
    ids.shuffle(&mut rng);
    let m: BTreeMap<VertexId, VertexId> =
        vs.iter().zip(ids).map(|(&v, i)| (v, VertexId(i))).collect();
    let mut out = SocialNetwork::new();
    let mut order = vs.clone();
    order.shuffle(&mut rng);
    for v in order {
        out.add_vertex(m[&v], g.label(v).clone(), g.sensitive(v).cloned())
            .unwrap();
    }
    for (a, b) in g.edges() {
        out.add_edge(m[&a], m[&b]).unwrap();
    }
    out
}

/// Random graph on `n` vertices; edges and labels chosen independently.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, labels: &[&str]) -> SocialNetwork {
    let mut g = SocialNetwork::new();
    for v in 0..n as u32 {
        let l = labels[rng.gen_range(0..labels.len())];
        g.add_vertex(VertexId(v), label(l), None).unwrap();
    }
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen_bool(p) {
                g.add_edge(VertexId(a), VertexId(b)).unwrap();
            }
        }
    }
    g
}
