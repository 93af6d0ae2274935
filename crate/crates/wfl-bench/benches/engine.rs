use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use wfl_core::class::{graph, triad};
use wfl_core::{
    amalgamate, build_limit, canonical_form, enumerate_embeddings, Embedding, FiniteStructure,
    SearchBudget, Span, StructureClass,
};

fn petersen() -> Arc<FiniteStructure> {
    Arc::new(graph(
        10,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (5, 7),
            (7, 9),
            (9, 6),
            (6, 8),
            (8, 5),
            (0, 5),
            (1, 6),
            (2, 7),
            (3, 8),
            (4, 9),
        ],
    ))
}

fn bench_canonical_form(c: &mut Criterion) {
    let g = petersen();
    c.bench_function("canonical_form/petersen", |b| {
        b.iter(|| canonical_form(&g));
    });
}

fn bench_enumerate_embeddings(c: &mut Criterion) {
    let class = StructureClass::builtin("graphs").unwrap();
    let empty = Arc::new(FiniteStructure::empty(class.signature().clone()));
    let budget = SearchBudget::new(3, 8, 200, 1).unwrap();
    let chain = build_limit(&class, &empty, &budget).unwrap();
    let stage = chain.last_stage().clone();
    let k3 = Arc::new(graph(3, &[(0, 1), (1, 2), (0, 2)]));
    c.bench_function("enumerate_embeddings/k3_into_stage", |b| {
        b.iter(|| enumerate_embeddings(&k3, &stage).unwrap().len());
    });
}

fn bench_amalgamate(c: &mut Criterion) {
    let class = StructureClass::builtin("triad").unwrap();
    let a = Arc::new(triad(2, &[(0, 1)], &[], &[]));
    let left = Arc::new(triad(3, &[(0, 1), (0, 2), (1, 2)], &[2], &[]));
    let right = Arc::new(triad(3, &[(0, 1), (0, 2), (1, 2)], &[], &[2]));
    let id = Embedding::identity(&a);
    let f = Embedding::new(a.clone(), left, vec![0, 1]).unwrap();
    let g = Embedding::new(a.clone(), right, vec![0, 1]).unwrap();
    let span = Span::new(id, f, g).unwrap();
    let budget = SearchBudget::new(4, 6, 0, 0).unwrap();
    c.bench_function("amalgamate/triad_refuted_span", |b| {
        b.iter(|| amalgamate(&class, &span, &budget).is_err());
    });
}

fn bench_build_limit(c: &mut Criterion) {
    let class = StructureClass::builtin("graphs").unwrap();
    let empty = Arc::new(FiniteStructure::empty(class.signature().clone()));
    let budget = SearchBudget::new(3, 8, 100, 1).unwrap();
    c.bench_function("build_limit/graphs_100_steps", |b| {
        b.iter(|| build_limit(&class, &empty, &budget).unwrap().len());
    });
}

criterion_group!(
    name = engine;
    config = Criterion::default().sample_size(20);
    targets = bench_canonical_form,
        bench_enumerate_embeddings,
        bench_amalgamate,
        bench_build_limit
);
criterion_main!(engine);
