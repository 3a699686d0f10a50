use criterion::{criterion_group, criterion_main, Criterion};
use dialogic::entail::{decide, load_suite_file};
use dialogic::gkk::{prove, SearchLimits, Sequent};
use dialogic::parse::parse_formula;
use dialogic::par;

const SCHEMATA: [&str; 8] = [
    "forall x. a(x) | exists x. ~a(x)",
    "exists x. (a(x) -> forall y. a(y))",
    "forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)",
    "exists x. (a(x) | b(x)) -> exists x. a(x) | exists x. b(x)",
    "forall x. (a(x) -> b(x)) -> exists x. a(x) -> exists x. b(x)",
    "~exists x. a(x) -> forall x. ~a(x)",
    "((a -> b) -> a) -> a",
    "(a -> b) | (b -> c) | (c -> a)",
];

fn batch(c: &mut Criterion) {
    let limits = SearchLimits::default();
    let goals: Vec<Sequent> = SCHEMATA
        .iter()
        .cycle()
        .take(64)
        .map(|t| Sequent::goal(parse_formula(t).unwrap()))
        .collect();
    let run = |s: &Sequent| prove(s, &limits).unwrap().is_some();

    let mut group = c.benchmark_group("prove-64");
    group.bench_function("parallel", |b| b.iter(|| par::map(&goals, run)));
    group.bench_function("sequential", |b| b.iter(|| par::map_sequential(&goals, run)));
    group.finish();

    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fracas_subset.json");
    let problems = load_suite_file(&path).unwrap();
    let mut group = c.benchmark_group("suite");
    group.bench_function("parallel", |b| b.iter(|| par::map(&problems, |p| decide(p, &limits).is_ok())));
    group.bench_function("sequential", |b| b.iter(|| par::map_sequential(&problems, |p| decide(p, &limits).is_ok())));
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
