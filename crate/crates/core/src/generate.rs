//! Seeded Erdős–Rényi style networks for tests, benches and demos.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Label, SensitiveValue, SocialNetwork, VertexId};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetwork {
    pub vertices: usize,
    /// Independent probability of each vertex pair being an edge.
    pub edge_probability: f64,
    /// Labels are drawn uniformly from `L0..L{labels-1}`.
    pub labels: usize,
    /// Sensitive values are drawn uniformly from `s0..s{n-1}`; zero means none.
    pub sensitive_values: usize,
}

impl RandomNetwork {
    pub fn new(vertices: usize, edge_probability: f64) -> Self {
        RandomNetwork {
            vertices,
            edge_probability,
            labels: 1,
            sensitive_values: 0,
        }
    }

    pub fn labels(mut self, labels: usize) -> Self {
        self.labels = labels.max(1);
        self
    }

    pub fn sensitive_values(mut self, values: usize) -> Self {
        self.sensitive_values = values;
        self
    }

    pub fn generate(&self, seed: u64) -> SocialNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<Label> = (0..self.labels)
            .map(|i| Label::new(&format!("L{i}")).expect("valid token"))
            .collect();
        let values: Vec<SensitiveValue> = (0..self.sensitive_values)
            .map(|i| SensitiveValue::new(&format!("s{i}")).expect("valid token"))
            .collect();
        let mut g = SocialNetwork::new();
        for i in 0..self.vertices {
            let label = labels[rng.gen_range(0..labels.len())].clone();
            let sensitive =
                (!values.is_empty()).then(|| values[rng.gen_range(0..values.len())].clone());
            g.add_vertex(VertexId(i as u32), label, sensitive)
                .expect("fresh id");
        }
        for i in 0..self.vertices {
            for j in i + 1..self.vertices {
                if rng.gen_bool(self.edge_probability.clamp(0.0, 1.0)) {
                    g.add_edge(VertexId(i as u32), VertexId(j as u32))
                        .expect("fresh edge");
                }
            }
        }
        g
    }
}
