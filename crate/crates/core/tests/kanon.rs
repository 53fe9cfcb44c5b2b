mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use socanon::generate::RandomNetwork;
use socanon::kanon::{anonymization_cost, anonymize_pair_2hop, k_anonymize, verify_k_anonymity};
use socanon::neighborhood::vertex_code;
use socanon::{KAnonConfig, LabelHierarchy, Radius, SocialNetwork, VertexId};

#[test]
fn star_edit_count_is_minimal() {
    let star = uniform(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
    let best = brute_min_edges(&star, 2, 3).expect("three edges suffice");
    let h = LabelHierarchy::flat_over(&star);
    let (out, report) = k_anonymize(&star, &KAnonConfig::new(2), &h, 0).unwrap();
    assert!(verify_k_anonymity(&out, 2, Radius::One).unwrap());
    assert!(brute_k_anonymous(&out, 2));
    assert!(report.synthetic.is_empty());
    assert_eq!(report.edges_added, best);
}

#[test]
fn path_of_three_is_not_two_anonymous() {
    let p3 = uniform(3, &[(0, 1), (1, 2)]);
    assert!(!verify_k_anonymity(&p3, 2, Radius::One).unwrap());
    assert!(!brute_k_anonymous(&p3, 2));
}

#[test]
fn cost_example_one_missing_neighbor() {
    // u has two non-adjacent neighbors, v has one
    let g = uniform(5, &[(0, 1), (0, 2), (3, 4)]);
    let h = LabelHierarchy::flat_over(&g);
    let cost = anonymization_cost(&g, VertexId(0), VertexId(3), &KAnonConfig::new(2), &h).unwrap();
    assert_eq!(cost, 2.0);
}

#[test]
fn cost_is_symmetric_on_random_graphs() {
    let cfg = KAnonConfig::new(2);
    for seed in 0..20 {
        let g = RandomNetwork::new(10, 0.3).labels(2).generate(seed);
        let h = LabelHierarchy::flat_over(&g);
        for u in g.vertices() {
            for v in g.vertices() {
                let a = anonymization_cost(&g, u, v, &cfg, &h).unwrap();
                let b = anonymization_cost(&g, v, u, &cfg, &h).unwrap();
                assert_eq!(a, b, "seed {seed}, {u} vs {v}");
            }
        }
    }
}

#[test]
fn two_hop_pairs_end_with_equal_codes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let g = random_graph(&mut rng, 8, 0.25, &["A", "B"]);
        let h = LabelHierarchy::flat_over(&g);
        let out = anonymize_pair_2hop(&g, VertexId(0), VertexId(1), &h).unwrap();
        assert_eq!(
            vertex_code(&out, VertexId(0), Radius::Two, 64).unwrap(),
            vertex_code(&out, VertexId(1), Radius::Two, 64).unwrap()
        );
        assert!(g.edges().all(|(a, b)| out.has_edge(a, b)));
    }
}

// Published labels are the original label or an ancestor of it.
fn generalizes(h: &LabelHierarchy, g: &SocialNetwork, out: &SocialNetwork) -> bool {
    g.vertices().all(|v| {
        h.steps_up(g.label(v), out.label(v))
            .is_ok_and(|s| s.is_some())
    })
}

fn case() -> impl Strategy<Value = (SocialNetwork, usize)> {
    (
        3usize..=8,
        0.1f64..0.6,
        1usize..=2,
        2usize..=3,
        any::<u64>(),
    )
        .prop_map(|(n, p, labels, k, seed)| {
            let g = RandomNetwork::new(n, p).labels(labels).generate(seed);
            (g, k)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_is_k_anonymous_by_the_oracle((g, k) in case(), seed in 0u64..4) {
        let h = LabelHierarchy::flat_over(&g);
        let (out, report) = k_anonymize(&g, &KAnonConfig::new(k), &h, seed).unwrap();
        prop_assert!(verify_k_anonymity(&out, k, Radius::One).unwrap());
        if out.vertex_count() <= 9 && out.vertices().all(|v| out.degree(v) <= 6) {
            prop_assert!(brute_k_anonymous(&out, k));
        }
        // edits only add
        prop_assert!(g.edges().all(|(a, b)| out.has_edge(a, b)));
        prop_assert!(generalizes(&h, &g, &out));
        // groups partition the original vertices; synthetic ones are new
        let grouped: Vec<VertexId> = report.groups.iter().flatten().copied().collect();
        let set: BTreeSet<VertexId> = grouped.iter().copied().collect();
        prop_assert_eq!(grouped.len(), set.len());
        prop_assert_eq!(set, g.vertices().collect::<BTreeSet<_>>());
        prop_assert!(report.groups.iter().all(|grp| grp.len() >= k));
        prop_assert!(report.synthetic.iter().all(|v| !g.contains(*v) && out.contains(*v)));
        prop_assert_eq!(out.vertex_count(), g.vertex_count() + report.synthetic.len());
        prop_assert_eq!(report.edges_added, out.edge_count() - g.edge_count());
    }

    #[test]
    fn anonymization_is_deterministic((g, k) in case(), seed in any::<u64>()) {
        let h = LabelHierarchy::flat_over(&g);
        let cfg = KAnonConfig::new(k);
        let a = k_anonymize(&g, &cfg, &h, seed).unwrap();
        let b = k_anonymize(&g, &cfg, &h, seed).unwrap();
        prop_assert_eq!(a.0, b.0);
        prop_assert_eq!(a.1, b.1);
    }
}
