//! The GKK sequent calculus: two-sided multiset sequents, rule applications
//! with retained principal formulas, a derivation checker, the strategic
//! restriction and bounded proof search.

mod search;

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{first_fresh, Formula, Term};

pub use search::{prove, prove_with, term_universe, ProveOptions, SearchError, SearchLimits};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sequent {
    pub left: Vec<Formula>,
    pub right: Vec<Formula>,
}

impl Sequent {
    pub fn new(left: Vec<Formula>, right: Vec<Formula>) -> Sequent {
        Sequent { left, right }
    }

    pub fn goal(f: Formula) -> Sequent {
        Sequent::new(Vec::new(), vec![f])
    }

    pub fn side(&self, side: Side) -> &[Formula] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.left.iter().chain(&self.right) {
            out.extend(f.free_variables());
        }
        out
    }

    /// Every variable name mentioned anywhere, bound names included.
    pub fn all_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.left.iter().chain(&self.right) {
            f.all_variables(&mut out);
        }
        out
    }

    /// Equality as a pair of multisets, formulas compared up to alpha-equivalence.
    pub fn multiset_eq(&self, other: &Sequent) -> bool {
        fn keys(fs: &[Formula]) -> Vec<String> {
            let mut k: Vec<String> = fs.iter().map(Formula::key).collect();
            k.sort();
            k
        }
        keys(&self.left) == keys(&other.left) && keys(&self.right) == keys(&other.right)
    }

    pub fn rename_free(&self, from: &str, to: &Term) -> Sequent {
        Sequent {
            left: self.left.iter().map(|f| f.substitute(from, to)).collect(),
            right: self.right.iter().map(|f| f.substitute(from, to)).collect(),
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |fs: &[Formula]| fs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let l = join(&self.left);
        let r = join(&self.right);
        match (l.is_empty(), r.is_empty()) {
            (true, true) => f.write_str("|-"),
            (true, false) => write!(f, "|- {r}"),
            (false, true) => write!(f, "{l} |-"),
            (false, false) => write!(f, "{l} |- {r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Position of the active formula in a conclusion sequent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Active {
    pub side: Side,
    pub index: usize,
}

impl Active {
    pub fn left(index: usize) -> Active {
        Active { side: Side::Left, index }
    }

    pub fn right(index: usize) -> Active {
        Active { side: Side::Right, index }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Id,
    ImpR,
    ImpL,
    AndR,
    AndL1,
    AndL2,
    OrR,
    OrL,
    ExR(Term),
    ExL(String),
    AllR(String),
    AllL(Term),
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Id => "Id",
            Rule::ImpR => "ImpR",
            Rule::ImpL => "ImpL",
            Rule::AndR => "AndR",
            Rule::AndL1 => "AndL1",
            Rule::AndL2 => "AndL2",
            Rule::OrR => "OrR",
            Rule::OrL => "OrL",
            Rule::ExR(_) => "ExR",
            Rule::ExL(_) => "ExL",
            Rule::AllR(_) => "AllR",
            Rule::AllL(_) => "AllL",
        }
    }

    pub fn side(&self) -> Side {
        match self {
            Rule::Id | Rule::ImpR | Rule::AndR | Rule::OrR | Rule::ExR(_) | Rule::AllR(_) => Side::Right,
            _ => Side::Left,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Rule::Id => 0,
            Rule::ImpL | Rule::AndR | Rule::OrL => 2,
            _ => 1,
        }
    }

    pub fn eigen(&self) -> Option<&str> {
        match self {
            Rule::ExL(y) | Rule::AllR(y) => Some(y),
            _ => None,
        }
    }

    pub fn term(&self) -> Option<&Term> {
        match self {
            Rule::ExR(t) | Rule::AllL(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("active index {index} out of range on the {side:?} side")]
    OutOfRange { side: Side, index: usize },
    #[error("rule {rule} must act on the {expected:?} side")]
    WrongSide { rule: &'static str, expected: Side },
    #[error("rule {rule} does not apply to `{formula}`")]
    Shape { rule: &'static str, formula: String },
    #[error("axiom formula `{0}` is not atomic")]
    NotAtomic(String),
    #[error("axiom formula `{0}` has no copy on the left")]
    NoAxiomPartner(String),
    #[error("eigenvariable `{0}` occurs free in the conclusion")]
    EigenNotFresh(String),
}

fn without(fs: &[Formula], index: usize) -> Vec<Formula> {
    let mut out = fs.to_vec();
    out.remove(index);
    out
}

fn with(fs: &[Formula], extra: impl IntoIterator<Item = Formula>) -> Vec<Formula> {
    let mut out = fs.to_vec();
    out.extend(extra);
    out
}

/// Premises of `rule` applied to `active` in `conclusion`, in canonical slot
/// order: consumed right formulas are removed, new formulas are appended.
pub fn apply_rule(conclusion: &Sequent, rule: &Rule, active: Active) -> Result<Vec<Sequent>, RuleError> {
    if rule.side() != active.side {
        return Err(RuleError::WrongSide {
            rule: rule.name(),
            expected: rule.side(),
        });
    }
    let fs = conclusion.side(active.side);
    let f = fs.get(active.index).ok_or(RuleError::OutOfRange {
        side: active.side,
        index: active.index,
    })?;
    let shape = || RuleError::Shape {
        rule: rule.name(),
        formula: f.to_string(),
    };
    let (l, r, i) = (&conclusion.left, &conclusion.right, active.index);
    let premises = match (rule, f) {
        (Rule::Id, _) => {
            if !f.is_atomic() {
                return Err(RuleError::NotAtomic(f.to_string()));
            }
            if !l.iter().any(|g| g.alpha_eq(f)) {
                return Err(RuleError::NoAxiomPartner(f.to_string()));
            }
            vec![]
        }
        (Rule::ImpR, Formula::Implies(a, b)) => {
            vec![Sequent::new(with(l, [(**a).clone()]), with(&without(r, i), [(**b).clone()]))]
        }
        (Rule::ImpL, Formula::Implies(a, b)) => vec![
            Sequent::new(l.clone(), with(r, [(**a).clone()])),
            Sequent::new(with(l, [(**b).clone()]), r.clone()),
        ],
        (Rule::AndR, Formula::And(a, b)) => {
            let rest = without(r, i);
            vec![
                Sequent::new(l.clone(), with(&rest, [(**a).clone()])),
                Sequent::new(l.clone(), with(&rest, [(**b).clone()])),
            ]
        }
        (Rule::AndL1, Formula::And(a, _)) => vec![Sequent::new(with(l, [(**a).clone()]), r.clone())],
        (Rule::AndL2, Formula::And(_, b)) => vec![Sequent::new(with(l, [(**b).clone()]), r.clone())],
        (Rule::OrR, Formula::Or(a, b)) => {
            vec![Sequent::new(l.clone(), with(&without(r, i), [(**a).clone(), (**b).clone()]))]
        }
        (Rule::OrL, Formula::Or(a, b)) => vec![
            Sequent::new(with(l, [(**a).clone()]), r.clone()),
            Sequent::new(with(l, [(**b).clone()]), r.clone()),
        ],
        (Rule::ExR(t), Formula::Exists(x, a)) => vec![Sequent::new(l.clone(), with(r, [a.substitute(x, t)]))],
        (Rule::AllL(t), Formula::Forall(x, a)) => vec![Sequent::new(with(l, [a.substitute(x, t)]), r.clone())],
        (Rule::ExL(y), Formula::Exists(x, a)) | (Rule::AllR(y), Formula::Forall(x, a)) => {
            if conclusion.free_variables().contains(y) {
                return Err(RuleError::EigenNotFresh(y.clone()));
            }
            let inst = a.substitute(x, &Term::Var(y.clone()));
            if matches!(rule, Rule::ExL(_)) {
                vec![Sequent::new(with(l, [inst]), r.clone())]
            } else {
                vec![Sequent::new(l.clone(), with(&without(r, i), [inst]))]
            }
        }
        _ => return Err(shape()),
    };
    Ok(premises)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Sequent,
    pub rule: Rule,
    pub active: Active,
    pub premises: Vec<Derivation>,
}

/// A failed check, located by the premise indices leading from the root.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("at node {path:?}: {reason}")]
pub struct Violation {
    pub path: Vec<usize>,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategicFault {
    /// The left premise of an ImpL does not make the antecedent active.
    ImpLLeftPremise,
    /// The premise of an ExR does not make the chosen instance active.
    ExRPremise,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategicViolation {
    pub path: Vec<usize>,
    pub fault: StrategicFault,
}

impl Derivation {
    pub fn new(conclusion: Sequent, rule: Rule, active: Active, premises: Vec<Derivation>) -> Derivation {
        Derivation {
            conclusion,
            rule,
            active,
            premises,
        }
    }

    pub fn active_formula(&self) -> Option<&Formula> {
        self.conclusion.side(self.active.side).get(self.active.index)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Derivation::height).max().unwrap_or(0)
    }

    pub fn node(&self, path: &[usize]) -> Option<&Derivation> {
        let mut d = self;
        for &i in path {
            d = d.premises.get(i)?;
        }
        Some(d)
    }

    /// Checks every node against its rule schema; leaves must be axioms.
    pub fn validate(&self) -> Result<(), Violation> {
        self.validate_at(&mut Vec::new())
    }

    fn validate_at(&self, path: &mut Vec<usize>) -> Result<(), Violation> {
        let fail = |path: &Vec<usize>, reason: String| Violation {
            path: path.clone(),
            reason,
        };
        let expected = apply_rule(&self.conclusion, &self.rule, self.active).map_err(|e| fail(path, e.to_string()))?;
        if expected.len() != self.premises.len() {
            return Err(fail(
                path,
                format!(
                    "{} expects {} premises, found {}",
                    self.rule.name(),
                    expected.len(),
                    self.premises.len()
                ),
            ));
        }
        for (i, (want, got)) in expected.iter().zip(&self.premises).enumerate() {
            if !want.multiset_eq(&got.conclusion) {
                return Err(fail(
                    path,
                    format!("premise {i} is `{}`, the rule yields `{want}`", got.conclusion),
                ));
            }
        }
        for (i, p) in self.premises.iter().enumerate() {
            path.push(i);
            p.validate_at(path)?;
            path.pop();
        }
        Ok(())
    }

    /// First node breaking the strategic restriction, if any.
    pub fn strategic_violation(&self) -> Option<StrategicViolation> {
        fn walk(d: &Derivation, path: &mut Vec<usize>) -> Option<StrategicViolation> {
            let f = d.active_formula();
            let fault = match (&d.rule, f) {
                (Rule::ImpL, Some(Formula::Implies(a, _))) => {
                    let ok = d
                        .premises
                        .first()
                        .is_some_and(|p| p.active.side == Side::Right && p.active_formula().is_some_and(|g| g.alpha_eq(a)));
                    (!ok).then_some(StrategicFault::ImpLLeftPremise)
                }
                (Rule::ExR(t), Some(Formula::Exists(x, a))) => {
                    let inst = a.substitute(x, t);
                    let ok = d
                        .premises
                        .first()
                        .is_some_and(|p| p.active.side == Side::Right && p.active_formula().is_some_and(|g| g.alpha_eq(&inst)));
                    (!ok).then_some(StrategicFault::ExRPremise)
                }
                _ => None,
            };
            if let Some(fault) = fault {
                return Some(StrategicViolation {
                    path: path.clone(),
                    fault,
                });
            }
            for (i, p) in d.premises.iter().enumerate() {
                path.push(i);
                if let Some(v) = walk(p, path) {
                    return Some(v);
                }
                path.pop();
            }
            None
        }
        walk(self, &mut Vec::new())
    }

    pub fn is_strategic(&self) -> bool {
        self.strategic_violation().is_none()
    }

    /// Renames the free variable `from` to `to` throughout, including rule
    /// terms and eigenvariables. `to` must be fresh for the whole tree.
    pub fn rename_var(&self, from: &str, to: &str) -> Derivation {
        let t = Term::Var(to.to_string());
        let rule = match &self.rule {
            Rule::ExR(u) => Rule::ExR(u.substitute(from, &t)),
            Rule::AllL(u) => Rule::AllL(u.substitute(from, &t)),
            Rule::ExL(y) if y == from => Rule::ExL(to.to_string()),
            Rule::AllR(y) if y == from => Rule::AllR(to.to_string()),
            r => r.clone(),
        };
        Derivation {
            conclusion: self.conclusion.rename_free(from, &t),
            rule,
            active: self.active,
            premises: self.premises.iter().map(|p| p.rename_var(from, to)).collect(),
        }
    }

    /// Every variable name occurring anywhere in the tree.
    pub fn all_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        out.extend(self.conclusion.all_variables());
        match &self.rule {
            Rule::ExR(t) | Rule::AllL(t) => t.variables(out),
            Rule::ExL(y) | Rule::AllR(y) => {
                out.insert(y.clone());
            }
            _ => {}
        }
        self.premises.iter().for_each(|p| p.collect_variables(out));
    }

    /// Instantiation terms used by ExR and AllL nodes, first use first.
    pub fn instantiation_terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        fn walk(d: &Derivation, out: &mut Vec<Term>) {
            if let Some(t) = d.rule.term() {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
            d.premises.iter().for_each(|p| walk(p, out));
        }
        walk(self, &mut out);
        out
    }

    /// Rebuilds the tree so that every premise uses the canonical slot
    /// order of [`apply_rule`]. The input must validate.
    pub fn canonicalize(&self) -> Result<Derivation, Violation> {
        self.validate()?;
        Ok(canonical_from(self, self.conclusion.clone()))
    }
}

/// Index in `target` of the occurrence matching `fs[index]`, preserving the
/// rank among alpha-equivalent copies.
fn corresponding_slot(fs: &[Formula], index: usize, target: &[Formula]) -> usize {
    let key = fs[index].key();
    let rank = fs[..index].iter().filter(|g| g.key() == key).count();
    target
        .iter()
        .enumerate()
        .filter(|(_, g)| g.key() == key)
        .nth(rank)
        .map(|(i, _)| i)
        .expect("multisets agree")
}

fn canonical_from(d: &Derivation, conclusion: Sequent) -> Derivation {
    let side = d.active.side;
    let index = corresponding_slot(d.conclusion.side(side), d.active.index, conclusion.side(side));
    let active = Active { side, index };
    let premises = apply_rule(&conclusion, &d.rule, active).expect("validated");
    let children = premises
        .into_iter()
        .zip(&d.premises)
        .map(|(s, p)| canonical_from(p, s))
        .collect();
    Derivation::new(conclusion, d.rule.clone(), active, children)
}

/// First variable of the enumeration absent from every name in `used`.
pub fn fresh_variable(used: &BTreeSet<String>) -> String {
    first_fresh(used)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_sequent};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    fn node(s: &str, rule: Rule, active: Active, premises: Vec<Derivation>) -> Derivation {
        Derivation::new(seq(s), rule, active, premises)
    }

    /// The non-strategic derivation of `forall x. c(x) |- exists x. c(x)`.
    pub(crate) fn exists_counterexample() -> Derivation {
        let x = Term::var("x");
        node(
            "forall x. c(x) |- exists x. c(x)",
            Rule::ExR(x.clone()),
            Active::right(0),
            vec![node(
                "forall x. c(x) |- exists x. c(x), c(x)",
                Rule::AllL(x),
                Active::left(0),
                vec![node(
                    "forall x. c(x), c(x) |- exists x. c(x), c(x)",
                    Rule::Id,
                    Active::right(1),
                    vec![],
                )],
            )],
        )
    }

    #[test]
    fn axiom_validates() {
        let d = node("a, b |- c, a", Rule::Id, Active::right(1), vec![]);
        assert!(d.validate().is_ok());
        let bad = node("a, b |- c, a", Rule::Id, Active::right(0), vec![]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quantifier_counterexample_validates_but_is_not_strategic() {
        let d = exists_counterexample();
        assert!(d.validate().is_ok());
        let v = d.strategic_violation().unwrap();
        assert_eq!(v.path, Vec::<usize>::new());
        assert_eq!(v.fault, StrategicFault::ExRPremise);
    }

    #[test]
    fn eigenvariable_must_be_fresh() {
        let d = node(
            "a(y) |- forall x. a(x)",
            Rule::AllR("y".into()),
            Active::right(0),
            vec![node("a(y) |- a(y)", Rule::Id, Active::right(0), vec![])],
        );
        let err = d.validate().unwrap_err();
        assert!(err.reason.contains("eigenvariable"), "{err}");
        let ok = node(
            "forall x. a(x) |- forall x. a(x)",
            Rule::AllR("y".into()),
            Active::right(0),
            vec![node(
                "forall x. a(x) |- a(y)",
                Rule::AllL(Term::var("y")),
                Active::left(0),
                vec![node("forall x. a(x), a(y) |- a(y)", Rule::Id, Active::right(0), vec![])],
            )],
        );
        assert!(ok.validate().is_ok());
        assert!(ok.is_strategic());
    }

    #[test]
    fn premises_compare_as_multisets() {
        let d = node(
            "a & b |- b",
            Rule::AndL2,
            Active::left(0),
            vec![node("b, a & b |- b", Rule::Id, Active::right(0), vec![])],
        );
        assert!(d.validate().is_ok());
        let c = d.canonicalize().unwrap();
        assert_eq!(c.premises[0].conclusion, seq("a & b, b |- b"));
    }

    #[test]
    fn wrong_premise_is_reported_with_path() {
        let d = node(
            "|- a -> a",
            Rule::ImpR,
            Active::right(0),
            vec![node("a |- a, a", Rule::Id, Active::right(0), vec![])],
        );
        let err = d.validate().unwrap_err();
        assert_eq!(err.path, Vec::<usize>::new());
        assert!(f("a").is_atomic());
    }

    #[test]
    fn rename_keeps_validity() {
        let d = exists_counterexample().rename_var("x", "v0");
        assert!(d.validate().is_ok());
    }
}
