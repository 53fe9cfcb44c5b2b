mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use socanon::partition::{
    automorphic_equivalence, reduction_network, stable_refinement, structural_equivalence,
    vertex_refinement,
};
use socanon::{SocialNetwork, VertexId};

// Exact color refinement written independently: at each level a vertex's
// color is its label with the sorted colors of its neighbors, spelled out
// as a string and renumbered.
fn oracle_refinement(g: &SocialNetwork, level: usize) -> BTreeSet<BTreeSet<VertexId>> {
    let mut color: BTreeMap<VertexId, String> =
        g.vertices().map(|v| (v, g.label(v).to_string())).collect();
    for _ in 0..level {
        let raw: BTreeMap<VertexId, String> = g
            .vertices()
            .map(|v| {
                let mut ns: Vec<&str> = g.neighbors(v).iter().map(|w| color[w].as_str()).collect();
                ns.sort();
                (v, format!("{}[{}]", g.label(v), ns.join(",")))
            })
            .collect();
        let ids: BTreeMap<&String, usize> = raw
            .values()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        color = raw.iter().map(|(v, s)| (*v, ids[s].to_string())).collect();
    }
    classes_of(g, |a, b| color[&a] == color[&b])
}

fn twins(g: &SocialNetwork, x: VertexId, y: VertexId) -> bool {
    let strip = |v: VertexId, other: VertexId| -> BTreeSet<VertexId> {
        g.neighbors(v)
            .iter()
            .copied()
            .filter(|&w| w != other)
            .collect()
    };
    g.label(x) == g.label(y) && strip(x, y) == strip(y, x)
}

#[test]
fn path_of_four_at_level_two() {
    let p4 = uniform(4, &[(0, 1), (1, 2), (2, 3)]);
    let p = vertex_refinement(&p4, 2);
    let expected: BTreeSet<BTreeSet<VertexId>> = [
        [VertexId(0), VertexId(3)].into(),
        [VertexId(1), VertexId(2)].into(),
    ]
    .into();
    assert_eq!(as_sets(p.classes()), expected);
    assert_eq!(oracle_refinement(&p4, 2), expected);
}

#[test]
fn complete_bipartite_two_three() {
    let k23 = uniform(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]);
    let p = structural_equivalence(&k23);
    let mut sizes: Vec<usize> = p.classes().iter().map(Vec::len).collect();
    sizes.sort();
    assert_eq!(sizes, vec![2, 3]);
    assert_eq!(
        as_sets(p.classes()),
        classes_of(&k23, |a, b| a == b || twins(&k23, a, b))
    );

    let r = reduction_network(&k23, &p).unwrap();
    assert_eq!(r.nodes.len(), 2);
    assert_eq!(r.edges.len(), 1);
    assert!(r.self_relations.is_empty());
}

#[test]
fn triangle_with_pendant_orbits() {
    let g = uniform(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (4, 5)]);
    let p = automorphic_equivalence(&g).unwrap();
    assert_eq!(as_sets(p.classes()), brute_orbits(&g));
}

fn small_graph() -> impl Strategy<Value = SocialNetwork> {
    (1usize..=7, 0.1f64..0.7, 1usize..=2, any::<u64>()).prop_map(|(n, p, l, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_graph(&mut rng, n, p, &["A", "B"][..l])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_matches_oracle(g in small_graph(), level in 0usize..5) {
        prop_assert_eq!(as_sets(vertex_refinement(&g, level).classes()), oracle_refinement(&g, level));
    }

    #[test]
    fn orbits_match_oracle(g in small_graph()) {
        let p = automorphic_equivalence(&g).unwrap();
        prop_assert_eq!(as_sets(p.classes()), brute_orbits(&g));
    }

    #[test]
    fn structural_classes_are_twin_classes(g in small_graph()) {
        let p = structural_equivalence(&g);
        for c in p.classes() {
            for &a in c {
                for &b in c {
                    prop_assert!(a == b || twins(&g, a, b));
                }
            }
        }
        for a in g.vertices() {
            for b in g.vertices() {
                if twins(&g, a, b) {
                    prop_assert_eq!(p.class_of(a), p.class_of(b));
                }
            }
        }
        prop_assert!(reduction_network(&g, &p).is_ok());
    }

    #[test]
    fn partitions_nest(g in small_graph()) {
        let s = structural_equivalence(&g);
        let a = automorphic_equivalence(&g).unwrap();
        prop_assert!(s.refines(&a));
        let (stable, p) = stable_refinement(&g);
        prop_assert!(stable <= g.vertex_count());
        prop_assert!(p.same_classes(&vertex_refinement(&g, stable)));
        prop_assert!(vertex_refinement(&g, stable + 1).same_classes(&p));
        for i in 0..=stable + 1 {
            let hi = vertex_refinement(&g, i);
            prop_assert!(a.refines(&hi));
            prop_assert!(vertex_refinement(&g, i + 1).refines(&hi));
        }
    }
}
