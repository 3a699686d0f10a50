#![allow(dead_code)]

use std::collections::BTreeMap;

use dialogic::formula::{Formula, Term};
use dialogic::gkk::{Active, Derivation, Rule, Sequent};
use dialogic::parse::{parse_formula, parse_sequent};
use rand::Rng;

pub const FIGURE: [&str; 3] = [
    "forall x. a(x) | exists x. ~a(x)",
    "exists x. (a(x) -> forall y. a(y))",
    "forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)",
];

pub fn f(text: &str) -> Formula {
    parse_formula(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn corpus_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fracas_subset.json")
}

fn eval(f: &Formula, v: &BTreeMap<String, bool>) -> bool {
    match f {
        Formula::Atom(..) | Formula::Bottom => v[f.predicate().unwrap()],
        Formula::And(a, b) => eval(a, v) && eval(b, v),
        Formula::Or(a, b) => eval(a, v) || eval(b, v),
        Formula::Implies(a, b) => !eval(a, v) || eval(b, v),
        Formula::Forall(..) | Formula::Exists(..) => panic!("truth tables are propositional"),
    }
}

/// Truth-table validity, with falsum an ordinary letter like the atoms.
pub fn tautology(f: &Formula) -> bool {
    let mut letters = BTreeMap::new();
    f.predicates(&mut letters);
    let names: Vec<String> = letters.into_keys().collect();
    (0u32..1 << names.len()).all(|bits| {
        let v = names.iter().enumerate().map(|(i, n)| (n.clone(), bits >> i & 1 == 1)).collect();
        eval(f, &v)
    })
}

/// Random propositional formula over `atoms` of depth at most `depth`.
pub fn random_formula(rng: &mut impl Rng, depth: usize, atoms: &[&str]) -> Formula {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return Formula::atom(atoms[rng.gen_range(0..atoms.len())], vec![]);
    }
    let sub = |rng: &mut _| random_formula(rng, depth - 1, atoms);
    match rng.gen_range(0..4) {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::not(sub(rng)),
    }
}

/// Every formula over a, b, c built with the binary connectives, up to `depth`.
pub fn all_formulas(depth: usize) -> Vec<Formula> {
    let atoms: Vec<Formula> = ["a", "b", "c"].iter().map(|a| Formula::atom(*a, vec![])).collect();
    if depth == 0 {
        return atoms;
    }
    let smaller = all_formulas(depth - 1);
    let mut out = atoms;
    for x in &smaller {
        for y in &smaller {
            out.push(Formula::and(x.clone(), y.clone()));
            out.push(Formula::or(x.clone(), y.clone()));
            out.push(Formula::implies(x.clone(), y.clone()));
        }
    }
    out
}

/// A random propositional body in the variable `x` over p(x), q(x) and r.
fn body(rng: &mut impl Rng, depth: usize, x: &str) -> Formula {
    if depth == 0 || rng.gen_ratio(1, 3) {
        return match rng.gen_range(0..3) {
            0 => Formula::atom("p", vec![Term::var(x)]),
            1 => Formula::atom("q", vec![Term::var(x)]),
            _ => Formula::atom("r", vec![]),
        };
    }
    let a = body(rng, depth - 1, x);
    match rng.gen_range(0..4) {
        0 => Formula::and(a, body(rng, depth - 1, x)),
        1 => Formula::or(a, body(rng, depth - 1, x)),
        2 => Formula::implies(a, body(rng, depth - 1, x)),
        _ => Formula::not(a),
    }
}

/// A random instance of a valid first-order schema.
pub fn schema_instance(rng: &mut impl Rng) -> Formula {
    let a = body(rng, 2, "x");
    let b = body(rng, 2, "x");
    let ay = a.substitute("x", &Term::var("y"));
    let all = |g: &Formula| Formula::forall("x", g.clone());
    let ex = |g: &Formula| Formula::exists("x", g.clone());
    match rng.gen_range(0..10) {
        0 => Formula::implies(all(&a), ex(&a)),
        1 => Formula::implies(all(&Formula::and(a.clone(), b.clone())), Formula::and(all(&a), all(&b))),
        2 => Formula::implies(ex(&Formula::or(a.clone(), b.clone())), Formula::or(ex(&a), ex(&b))),
        3 => ex(&Formula::implies(a.clone(), Formula::forall("y", ay))),
        4 => Formula::implies(all(&Formula::implies(a.clone(), b.clone())), Formula::implies(all(&a), all(&b))),
        5 => Formula::implies(all(&Formula::implies(a.clone(), b.clone())), Formula::implies(ex(&a), ex(&b))),
        6 => Formula::implies(Formula::not(ex(&a)), all(&Formula::not(a.clone()))),
        7 => Formula::or(all(&a), ex(&Formula::not(a.clone()))),
        8 => Formula::implies(Formula::or(all(&a), all(&b)), all(&Formula::or(a.clone(), b.clone()))),
        _ => Formula::implies(ex(&Formula::and(a.clone(), b.clone())), Formula::and(ex(&a), ex(&b))),
    }
}

fn node(seq: &str, rule: Rule, active: Active, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(parse_sequent(seq).unwrap(), rule, active, premises)
}

/// `forall x. c(x) |- exists x. c(x)` with the instance introduced before
/// it is used.
pub fn exists_counterexample() -> Derivation {
    let x = Term::var("x");
    node(
        "forall x. c(x) |- exists x. c(x)",
        Rule::ExR(x.clone()),
        Active::right(0),
        vec![node(
            "forall x. c(x) |- exists x. c(x), c(x)",
            Rule::AllL(x),
            Active::left(0),
            vec![node("forall x. c(x), c(x) |- exists x. c(x), c(x)", Rule::Id, Active::right(1), vec![])],
        )],
    )
}

/// `|- (a -> b) -> (a -> b)` where the left premise of the implication
/// rule decomposes another formula first.
pub fn implication_counterexample() -> Derivation {
    node(
        "|- (a -> b) -> (a -> b)",
        Rule::ImpR,
        Active::right(0),
        vec![node(
            "a -> b |- a -> b",
            Rule::ImpL,
            Active::left(0),
            vec![
                node(
                    "a -> b |- a -> b, a",
                    Rule::ImpR,
                    Active::right(0),
                    vec![node("a -> b, a |- a, b", Rule::Id, Active::right(0), vec![])],
                ),
                node(
                    "a -> b, b |- a -> b",
                    Rule::ImpR,
                    Active::right(0),
                    vec![node("a -> b, b, a |- b", Rule::Id, Active::right(0), vec![])],
                ),
            ],
        )],
    )
}

pub fn goal(f: &Formula) -> Sequent {
    Sequent::goal(f.clone())
}
