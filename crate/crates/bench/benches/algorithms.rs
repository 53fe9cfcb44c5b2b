use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;

use socanon::addr::{Permutation, PrefixPreserving};
use socanon::dfs_code::min_dfs_code_capped;
use socanon::kanon::k_anonymize;
use socanon::ldiv::enforce_l_diversity;
use socanon::partition::stable_refinement;
use socanon::{Ipv4Address, KAnonConfig, LDivConfig};
use socanon_bench::{hierarchy, largest_component, network};

fn canonical_code(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_dfs_code");
    // neighborhood components of growing density
    for degree in [4.0, 6.0, 8.0] {
        let comp = largest_component(&network(60, degree, 1));
        let id = format!("{}v{}e", comp.vertex_count(), comp.edge_count());
        group.bench_with_input(BenchmarkId::from_parameter(id), &comp, |b, g| {
            b.iter(|| min_dfs_code_capped(black_box(g), 64).unwrap())
        });
    }
    group.finish();
}

fn anonymize(c: &mut Criterion) {
    let mut group = c.benchmark_group("k_anonymize");
    group.sample_size(10);
    for k in [2, 3, 5] {
        let g = network(30, 2.5, 7);
        let h = hierarchy(&g);
        let cfg = KAnonConfig::new(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| k_anonymize(black_box(&g), &cfg, &h, 0).unwrap())
        });
    }
    group.finish();
}

fn refinement(c: &mut Criterion) {
    let mut group = c.benchmark_group("stable_refinement");
    for n in [100, 1000] {
        let g = network(n, 5.0, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| stable_refinement(black_box(g)))
        });
    }
    group.finish();
}

fn diversity(c: &mut Criterion) {
    let g = network(30, 2.5, 11);
    let h = hierarchy(&g);
    let (l, k) = (LDivConfig::new(2), KAnonConfig::new(1));
    c.bench_function("enforce_l_diversity/30", |b| {
        b.iter(|| enforce_l_diversity(black_box(&g), &l, &k, &h, 0).unwrap())
    });
}

fn addresses(c: &mut Criterion) {
    let pp = PrefixPreserving::from_passphrase("bench").unwrap();
    let perm = Permutation::new(5);
    let addrs: Vec<Ipv4Address> = (0..1024u32)
        .map(|i| Ipv4Address(i.wrapping_mul(2654435761)))
        .collect();
    c.bench_function("prefix_preserving/1024", |b| {
        b.iter(|| {
            addrs
                .iter()
                .map(|&a| pp.apply(a).0)
                .fold(0, u32::wrapping_add)
        })
    });
    c.bench_function("permutation/1024", |b| {
        b.iter_batched(
            || addrs.clone(),
            |v| {
                v.into_iter()
                    .map(|a| perm.apply(a).0)
                    .fold(0, u32::wrapping_add)
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    canonical_code,
    anonymize,
    refinement,
    diversity,
    addresses
);
criterion_main!(benches);
