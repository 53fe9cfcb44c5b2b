use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socanon::collab::{CollabNetwork, FlattenConfig, PartyId, PartyNetwork, Predicate};
use socanon::neighborhood::code_of_subgraph;
use socanon::{CollabStore, KAnonConfig, LDivConfig, Privacy, UserQuery};

const NAMES: [&str; 10] = [
    "alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy",
];

fn party(name: &str, text: &str) -> PartyNetwork {
    PartyNetwork::parse(PartyId::new(name).unwrap(), text).unwrap()
}

/// A contribution over the people in `pool`. Labels, cities and sensitive
/// values are fixed per person so parties never disagree.
fn contribution(rng: &mut ChaCha8Rng, who: &str, pool: &[usize]) -> PartyNetwork {
    let people: Vec<usize> = pool.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
    let mut text = String::new();
    for (i, &p) in people.iter().enumerate() {
        text.push_str(&format!("v {i} L{} s=s{}\n", p % 3, p % 4));
        text.push_str(&format!("a {i} name={}\n", NAMES[p]));
        if rng.gen_bool(0.5) {
            text.push_str(&format!("a {i} city=c{}\n", p % 2));
        }
    }
    for i in 0..people.len() {
        for j in i + 1..people.len() {
            if rng.gen_bool(0.3) {
                text.push_str(&format!("e {i} {j}\n"));
            }
        }
    }
    party(who, &text)
}

fn empty() -> CollabNetwork {
    CollabNetwork::new(["name"]).unwrap()
}

#[test]
fn merge_records_sources_per_attribute() {
    let p1 = party("P1", "v 0 person\na 0 name=alice\na 0 city=Paris\n");
    let p2 = party(
        "P2",
        "v 0 person\na 0 name=alice\na 0 city=Paris\na 0 job=chef\n",
    );
    let s = empty().merge(&p1).unwrap().merge(&p2).unwrap();
    let node = &s.nodes()[&vec!["alice".to_string()]];
    let srcs = |k: &str, v: &str| -> BTreeSet<String> {
        node.attributes[k][v]
            .iter()
            .map(|p| p.to_string())
            .collect()
    };
    assert_eq!(srcs("city", "Paris"), ["P1".into(), "P2".into()].into());
    assert_eq!(srcs("job", "chef"), ["P2".into()].into());

    let without = s.revoke(&p2).unwrap();
    let node = &without.nodes()[&vec!["alice".to_string()]];
    assert_eq!(node.attributes["city"]["Paris"].len(), 1);
    assert!(!node.attributes.contains_key("job"));
}

#[test]
fn flatten_of_single_merge_matches_contribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = contribution(&mut rng, "P1", &(0..10).collect::<Vec<_>>());
    let flat = empty()
        .merge(&n)
        .unwrap()
        .flatten(&FlattenConfig::default())
        .unwrap();
    assert_eq!(
        code_of_subgraph(&flat, 64).unwrap(),
        code_of_subgraph(&n.network, 64).unwrap()
    );
}

#[test]
fn label_query_on_six_nodes() {
    let text = "v 0 doctor s=flu\nv 1 doctor s=cold\nv 2 nurse s=flu\n\
                v 3 nurse s=cold\nv 4 doctor s=hiv\nv 5 nurse s=hiv\n\
                e 0 1\ne 1 4\ne 2 3\ne 3 5\ne 0 2\n";
    let mut body = text.to_string();
    for (i, name) in NAMES.iter().take(6).enumerate() {
        body.push_str(&format!("a {i} name={name}\n"));
    }
    let privacy = Privacy {
        k: KAnonConfig::new(1),
        l: LDivConfig::new(1),
    };
    let mut store = CollabStore::new(
        vec!["name".into()],
        FlattenConfig::default(),
        Some(privacy.clone()),
        0,
    )
    .unwrap();
    store.merge(&party("P1", &body)).unwrap();
    let q = UserQuery::new(
        "analyst",
        vec!["label=doctor".parse::<Predicate>().unwrap()],
    )
    .unwrap();
    let out = store.query(&q, &privacy).unwrap();
    // alice, bob and erin are doctors; bob links to both others
    assert_eq!(out.vertex_count(), 3);
    assert_eq!(out.edge_count(), 2);
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn merge_is_idempotent(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<usize> = (0..10).collect();
        let base = empty().merge(&contribution(&mut rng, "P1", &all)).unwrap();
        let n = contribution(&mut rng, "P2", &all);
        let once = base.merge(&n).unwrap();
        prop_assert_eq!(once.merge(&n).unwrap(), once);
    }

    #[test]
    fn disjoint_merges_commute(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = contribution(&mut rng, "P1", &[0, 1, 2, 3, 4]);
        let b = contribution(&mut rng, "P2", &[5, 6, 7, 8, 9]);
        let ab = empty().merge(&a).unwrap().merge(&b).unwrap();
        let ba = empty().merge(&b).unwrap().merge(&a).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn sole_source_revocation_inverts_merge(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<usize> = (0..10).collect();
        let base = empty().merge(&contribution(&mut rng, "P1", &all)).unwrap();
        let n = contribution(&mut rng, "P2", &all);
        prop_assert_eq!(base.merge(&n).unwrap().revoke(&n).unwrap(), base);
    }

    #[test]
    fn store_log_replays(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<usize> = (0..10).collect();
        let privacy = Privacy { k: KAnonConfig::new(2), l: LDivConfig::new(2) };
        let mut store = CollabStore::new(
            vec!["name".into()], FlattenConfig::default(), Some(privacy), seed,
        ).unwrap();
        let a = contribution(&mut rng, "P1", &all);
        let b = contribution(&mut rng, "P2", &all);
        store.merge(&a).unwrap();
        store.merge(&b).unwrap();
        store.revoke(&a).unwrap();
        let again = CollabStore::replay(&store.to_log_text().unwrap()).unwrap();
        prop_assert_eq!(again.network(), store.network());
        prop_assert_eq!(again.snapshot(), store.snapshot());
    }
}
