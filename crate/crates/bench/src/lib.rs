//! Fixture networks shared by the benchmarks.

use socanon::generate::RandomNetwork;
use socanon::neighborhood::extract_neighborhood;
use socanon::{LabelHierarchy, Radius, SocialNetwork};

/// A random network with `n` vertices and about `degree` neighbors each.
pub fn network(n: usize, degree: f64, seed: u64) -> SocialNetwork {
    let p = (degree / (n.max(2) - 1) as f64).min(1.0);
    RandomNetwork::new(n, p)
        .labels(3)
        .sensitive_values(4)
        .generate(seed)
}

pub fn hierarchy(g: &SocialNetwork) -> LabelHierarchy {
    LabelHierarchy::flat_over(g)
}

/// The largest connected component among the radius-1 neighborhoods of `g`.
pub fn largest_component(g: &SocialNetwork) -> SocialNetwork {
    g.vertices()
        .flat_map(|v| {
            extract_neighborhood(g, v, Radius::One)
                .unwrap()
                .components()
        })
        .max_by_key(|c| (c.vertex_count(), c.edge_count()))
        .unwrap_or_default()
}
