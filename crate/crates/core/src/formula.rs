//! First-order syntax: terms, formulas, capture-avoiding substitution,
//! alpha-equivalence and predicate-level polarity.
//!
//! Negation is not a primitive: `~F` is `F -> _|_`, and `_|_` is an ordinary
//! nullary atom with no rules of its own.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Name under which `_|_` appears in predicate tables.
pub const BOTTOM_NAME: &str = "_|_";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// Function application; constants are nullary applications.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    pub fn occurs(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.occurs(name)),
        }
    }

    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.variables(out)),
        }
    }

    pub fn substitute(&self, var: &str, t: &Term) -> Term {
        match self {
            Term::Var(v) if v == var => t.clone(),
            Term::Var(_) => self.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(var, t)).collect())
            }
        }
    }

    /// Every subterm, outermost first.
    pub fn subterms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        if let Term::App(_, args) = self {
            args.iter().for_each(|a| a.subterms(out));
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String, Vec<Term>),
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

/// One step from a formula node to one of its immediate subformulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Left,
    Right,
    Body,
}

/// Path from the root of a formula to a subformula occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccurrencePath(pub Vec<Step>);

impl OccurrencePath {
    pub fn child(&self, step: Step) -> OccurrencePath {
        let mut steps = self.0.clone();
        steps.push(step);
        OccurrencePath(steps)
    }

    /// Polarity of the occurrence inside `host`: `true` for positive.
    /// Returns `None` when the path does not resolve.
    pub fn polarity_in(&self, host: &Formula) -> Option<bool> {
        let mut positive = true;
        let mut node = host;
        for step in &self.0 {
            node = match (node, step) {
                (Formula::Implies(a, _), Step::Left) => {
                    positive = !positive;
                    a
                }
                (Formula::Implies(_, b), Step::Right) => b,
                (Formula::And(a, _) | Formula::Or(a, _), Step::Left) => a,
                (Formula::And(_, b) | Formula::Or(_, b), Step::Right) => b,
                (Formula::Forall(_, body) | Formula::Exists(_, body), Step::Body) => body,
                _ => return None,
            };
        }
        Some(positive)
    }

    pub fn resolve<'a>(&self, host: &'a Formula) -> Option<&'a Formula> {
        let mut node = host;
        for step in &self.0 {
            node = match (node, step) {
                (Formula::Implies(a, _) | Formula::And(a, _) | Formula::Or(a, _), Step::Left) => a,
                (Formula::Implies(_, b) | Formula::And(_, b) | Formula::Or(_, b), Step::Right) => b,
                (Formula::Forall(_, body) | Formula::Exists(_, body), Step::Body) => body,
                _ => return None,
            };
        }
        Some(node)
    }
}

impl Formula {
    pub fn atom(name: impl Into<String>, args: Vec<Term>) -> Formula {
        Formula::Atom(name.into(), args)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::implies(a, Formula::Bottom)
    }

    pub fn forall(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(body))
    }

    pub fn exists(x: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(body))
    }

    /// Atoms and `_|_`.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(..) | Formula::Bottom)
    }

    /// Predicate symbol of an atomic formula.
    pub fn predicate(&self) -> Option<&str> {
        match self {
            Formula::Atom(p, _) => Some(p),
            Formula::Bottom => Some(BOTTOM_NAME),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(..) | Formula::Bottom => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Forall(_, a) | Formula::Exists(_, a) => 1 + a.depth(),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(_, args) => {
                let mut vars = BTreeSet::new();
                args.iter().for_each(|a| a.variables(&mut vars));
                out.extend(vars.into_iter().filter(|v| !bound.contains(v)));
            }
            Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(x, a) | Formula::Exists(x, a) => {
                bound.push(x.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_free(&self, name: &str) -> bool {
        match self {
            Formula::Atom(_, args) => args.iter().any(|a| a.occurs(name)),
            Formula::Bottom => false,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.has_free(name) || b.has_free(name)
            }
            Formula::Forall(x, a) | Formula::Exists(x, a) => x != name && a.has_free(name),
        }
    }

    /// Every variable name mentioned, free or bound.
    pub fn all_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(_, args) => args.iter().for_each(|a| a.variables(out)),
            Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.all_variables(out);
                b.all_variables(out);
            }
            Formula::Forall(x, a) | Formula::Exists(x, a) => {
                out.insert(x.clone());
                a.all_variables(out);
            }
        }
    }

    /// Capture-avoiding substitution of `t` for the free occurrences of `var`.
    /// Binders that would capture a variable of `t` are renamed by priming.
    pub fn substitute(&self, var: &str, t: &Term) -> Formula {
        match self {
            Formula::Atom(p, args) => {
                Formula::Atom(p.clone(), args.iter().map(|a| a.substitute(var, t)).collect())
            }
            Formula::Bottom => Formula::Bottom,
            Formula::And(a, b) => Formula::and(a.substitute(var, t), b.substitute(var, t)),
            Formula::Or(a, b) => Formula::or(a.substitute(var, t), b.substitute(var, t)),
            Formula::Implies(a, b) => {
                Formula::implies(a.substitute(var, t), b.substitute(var, t))
            }
            Formula::Forall(x, body) | Formula::Exists(x, body) => {
                let rebuild = |x: String, body: Formula| match self {
                    Formula::Forall(..) => Formula::forall(x, body),
                    _ => Formula::exists(x, body),
                };
                if x == var || !body.has_free(var) {
                    return self.clone();
                }
                if t.occurs(x) {
                    let mut avoid = BTreeSet::new();
                    t.variables(&mut avoid);
                    body.all_variables(&mut avoid);
                    avoid.insert(var.to_string());
                    let mut fresh = format!("{x}'");
                    while avoid.contains(&fresh) {
                        fresh.push('\'');
                    }
                    let renamed = body.substitute(x, &Term::Var(fresh.clone()));
                    rebuild(fresh, renamed.substitute(var, t))
                } else {
                    rebuild(x.clone(), body.substitute(var, t))
                }
            }
        }
    }

    /// Structural equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        alpha_formula(self, other, &mut Vec::new())
    }

    /// A rendering with bound variables renumbered in traversal order;
    /// two formulas share a key exactly when they are alpha-equivalent.
    pub fn key(&self) -> String {
        let mut out = String::new();
        let mut counter = 0usize;
        key_formula(self, &mut Vec::new(), &mut counter, &mut out);
        out
    }

    /// Bound variables renamed `b0, b1, ...` in traversal order (names that
    /// clash with free variables are skipped).
    pub fn canonical(&self) -> Formula {
        let free = self.free_variables();
        let mut counter = 0usize;
        canonical_formula(self, &free, &mut Vec::new(), &mut counter)
    }

    /// If `target` is `self` with the free occurrences of `var` replaced by a
    /// single term, returns that term (`Some(None)` when `var` does not occur).
    pub fn match_instance(&self, var: &str, target: &Formula) -> Option<Option<Term>> {
        let mut binding = None;
        if match_formula(self, target, var, &mut Vec::new(), &mut binding) {
            Some(binding)
        } else {
            None
        }
    }

    /// Closed subterms (no variable bound at the occurrence), outermost first.
    pub fn closed_subterms(&self, out: &mut Vec<Term>) {
        self.collect_terms(&mut Vec::new(), out);
    }

    fn collect_terms(&self, bound: &mut Vec<String>, out: &mut Vec<Term>) {
        match self {
            Formula::Atom(_, args) => {
                for a in args {
                    let mut subs = Vec::new();
                    a.subterms(&mut subs);
                    for s in subs {
                        if !bound.iter().any(|b| s.occurs(b)) && !out.contains(s) {
                            out.push(s.clone());
                        }
                    }
                }
            }
            Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_terms(bound, out);
                b.collect_terms(bound, out);
            }
            Formula::Forall(x, a) | Formula::Exists(x, a) => {
                bound.push(x.clone());
                a.collect_terms(bound, out);
                bound.pop();
            }
        }
    }

    /// Predicate symbols with their arities, `_|_` included when present.
    pub fn predicates(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Formula::Atom(p, args) => {
                out.insert(p.clone(), args.len());
            }
            Formula::Bottom => {
                out.insert(BOTTOM_NAME.to_string(), 0);
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.predicates(out);
                b.predicates(out);
            }
            Formula::Forall(_, a) | Formula::Exists(_, a) => a.predicates(out),
        }
    }

    /// Structural subformula occurrences with their paths, preorder.
    pub fn occurrences(&self) -> Vec<(OccurrencePath, &Formula)> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, path: OccurrencePath, out: &mut Vec<(OccurrencePath, &'a Formula)>) {
            out.push((path.clone(), f));
            match f {
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    walk(a, path.child(Step::Left), out);
                    walk(b, path.child(Step::Right), out);
                }
                Formula::Forall(_, a) | Formula::Exists(_, a) => walk(a, path.child(Step::Body), out),
                _ => {}
            }
        }
        walk(self, OccurrencePath::default(), &mut out);
        out
    }

    /// Whether `self` is a Gentzen subformula of `host`: an instance of some
    /// structural subformula, with terms substituted for the variables that
    /// are bound above it.
    pub fn is_gentzen_subformula_of(&self, host: &Formula) -> bool {
        fn walk(target: &Formula, node: &Formula, bound: &mut Vec<String>) -> bool {
            if instance_of(node, bound, target) {
                return true;
            }
            match node {
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    walk(target, a, bound) || walk(target, b, bound)
                }
                Formula::Forall(x, a) | Formula::Exists(x, a) => {
                    bound.push(x.clone());
                    let found = walk(target, a, bound);
                    bound.pop();
                    found
                }
                _ => false,
            }
        }
        walk(self, host, &mut Vec::new())
    }
}

/// `target` equals `pattern` after substituting terms for the variables in
/// `holes` (innermost binder wins when names repeat).
fn instance_of(pattern: &Formula, holes: &[String], target: &Formula) -> bool {
    let mut distinct: Vec<String> = Vec::new();
    for h in holes.iter().rev() {
        if !distinct.contains(h) {
            distinct.push(h.clone());
        }
    }
    let mut bindings: BTreeMap<String, Term> = BTreeMap::new();
    multi_match_formula(pattern, target, &distinct, &mut Vec::new(), &mut bindings)
}

fn multi_match_formula(
    p: &Formula,
    t: &Formula,
    holes: &[String],
    env: &mut Vec<(String, String)>,
    bindings: &mut BTreeMap<String, Term>,
) -> bool {
    match (p, t) {
        (Formula::Atom(a, xs), Formula::Atom(b, ys)) => {
            a == b
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| multi_match_term(x, y, holes, env, bindings))
        }
        (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(a1, b1), Formula::And(a2, b2))
        | (Formula::Or(a1, b1), Formula::Or(a2, b2))
        | (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            multi_match_formula(a1, a2, holes, env, bindings)
                && multi_match_formula(b1, b2, holes, env, bindings)
        }
        (Formula::Forall(x, a), Formula::Forall(y, b)) | (Formula::Exists(x, a), Formula::Exists(y, b)) => {
            env.push((x.clone(), y.clone()));
            let ok = multi_match_formula(a, b, holes, env, bindings);
            env.pop();
            ok
        }
        _ => false,
    }
}

fn multi_match_term(
    p: &Term,
    t: &Term,
    holes: &[String],
    env: &[(String, String)],
    bindings: &mut BTreeMap<String, Term>,
) -> bool {
    match p {
        Term::Var(v) => {
            if let Some(pos) = env.iter().rposition(|(pv, _)| pv == v) {
                return matches!(t, Term::Var(w) if env.iter().rposition(|(_, tv)| tv == w) == Some(pos));
            }
            if holes.contains(v) {
                if env.iter().any(|(_, tv)| t.occurs(tv)) {
                    return false;
                }
                return match bindings.get(v) {
                    Some(existing) => existing == t,
                    None => {
                        bindings.insert(v.clone(), t.clone());
                        true
                    }
                };
            }
            matches!(t, Term::Var(w) if w == v && !env.iter().any(|(_, tv)| tv == w))
        }
        Term::App(f, xs) => match t {
            Term::App(g, ys) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| multi_match_term(x, y, holes, env, bindings))
            }
            Term::Var(_) => false,
        },
    }
}

fn alpha_term(a: &Term, b: &Term, env: &[(String, String)]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            let ix = env.iter().rposition(|(l, _)| l == x);
            let iy = env.iter().rposition(|(_, r)| r == y);
            match (ix, iy) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_term(x, y, env))
        }
        _ => false,
    }
}

fn alpha_formula(a: &Formula, b: &Formula, env: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (Formula::Atom(p, xs), Formula::Atom(q, ys)) => {
            p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_term(x, y, env))
        }
        (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(a1, b1), Formula::And(a2, b2))
        | (Formula::Or(a1, b1), Formula::Or(a2, b2))
        | (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            alpha_formula(a1, a2, env) && alpha_formula(b1, b2, env)
        }
        (Formula::Forall(x, a), Formula::Forall(y, b)) | (Formula::Exists(x, a), Formula::Exists(y, b)) => {
            env.push((x.clone(), y.clone()));
            let ok = alpha_formula(a, b, env);
            env.pop();
            ok
        }
        _ => false,
    }
}

fn key_term(t: &Term, env: &[(String, usize)], out: &mut String) {
    match t {
        Term::Var(v) => match env.iter().rev().find(|(n, _)| n == v) {
            Some((_, i)) => {
                out.push('#');
                out.push_str(&i.to_string());
            }
            None => out.push_str(v),
        },
        Term::App(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                key_term(a, env, out);
            }
            out.push(')');
        }
    }
}

fn key_formula(f: &Formula, env: &mut Vec<(String, usize)>, counter: &mut usize, out: &mut String) {
    match f {
        Formula::Atom(p, args) => {
            out.push_str(p);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    key_term(a, env, out);
                }
                out.push(')');
            }
        }
        Formula::Bottom => out.push('⊥'),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            out.push(match f {
                Formula::And(..) => '&',
                Formula::Or(..) => '|',
                _ => '>',
            });
            out.push('[');
            key_formula(a, env, counter, out);
            out.push(';');
            key_formula(b, env, counter, out);
            out.push(']');
        }
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            out.push(if matches!(f, Formula::Forall(..)) { 'A' } else { 'E' });
            out.push('[');
            env.push((x.clone(), *counter));
            *counter += 1;
            key_formula(a, env, counter, out);
            env.pop();
            out.push(']');
        }
    }
}

fn canonical_formula(
    f: &Formula,
    free: &BTreeSet<String>,
    env: &mut Vec<(String, String)>,
    counter: &mut usize,
) -> Formula {
    let rename_term = |t: &Term, env: &Vec<(String, String)>| -> Term {
        fn go(t: &Term, env: &[(String, String)]) -> Term {
            match t {
                Term::Var(v) => match env.iter().rev().find(|(n, _)| n == v) {
                    Some((_, c)) => Term::Var(c.clone()),
                    None => t.clone(),
                },
                Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| go(a, env)).collect()),
            }
        }
        go(t, env)
    };
    match f {
        Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(|a| rename_term(a, env)).collect()),
        Formula::Bottom => Formula::Bottom,
        Formula::And(a, b) => Formula::and(
            canonical_formula(a, free, env, counter),
            canonical_formula(b, free, env, counter),
        ),
        Formula::Or(a, b) => Formula::or(
            canonical_formula(a, free, env, counter),
            canonical_formula(b, free, env, counter),
        ),
        Formula::Implies(a, b) => Formula::implies(
            canonical_formula(a, free, env, counter),
            canonical_formula(b, free, env, counter),
        ),
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            let mut name = format!("b{counter}");
            while free.contains(&name) {
                *counter += 1;
                name = format!("b{counter}");
            }
            *counter += 1;
            env.push((x.clone(), name.clone()));
            let body = canonical_formula(a, free, env, counter);
            env.pop();
            if matches!(f, Formula::Forall(..)) {
                Formula::forall(name, body)
            } else {
                Formula::exists(name, body)
            }
        }
    }
}

fn match_term(
    p: &Term,
    t: &Term,
    var: &str,
    env: &[(String, String)],
    binding: &mut Option<Term>,
) -> bool {
    match p {
        Term::Var(v) => {
            if let Some(pos) = env.iter().rposition(|(pv, _)| pv == v) {
                return matches!(t, Term::Var(w) if env.iter().rposition(|(_, tv)| tv == w) == Some(pos));
            }
            if v == var {
                // the substituted term must not be captured by a binder of the target
                if env.iter().any(|(_, tv)| t.occurs(tv)) {
                    return false;
                }
                return match binding {
                    Some(existing) => existing == t,
                    None => {
                        *binding = Some(t.clone());
                        true
                    }
                };
            }
            matches!(t, Term::Var(w) if w == v && !env.iter().any(|(_, tv)| tv == w))
        }
        Term::App(f, xs) => match t {
            Term::App(g, ys) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, var, env, binding))
            }
            Term::Var(_) => false,
        },
    }
}

fn match_formula(
    p: &Formula,
    t: &Formula,
    var: &str,
    env: &mut Vec<(String, String)>,
    binding: &mut Option<Term>,
) -> bool {
    match (p, t) {
        (Formula::Atom(a, xs), Formula::Atom(b, ys)) => {
            a == b && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, var, env, binding))
        }
        (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(a1, b1), Formula::And(a2, b2))
        | (Formula::Or(a1, b1), Formula::Or(a2, b2))
        | (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            match_formula(a1, a2, var, env, binding) && match_formula(b1, b2, var, env, binding)
        }
        (Formula::Forall(x, a), Formula::Forall(y, b)) | (Formula::Exists(x, a), Formula::Exists(y, b)) => {
            env.push((x.clone(), y.clone()));
            let ok = match_formula(a, b, var, env, binding);
            env.pop();
            ok
        }
        _ => false,
    }
}

/// Polarity summary of one predicate symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Polarity {
    pub occurs_positive: bool,
    pub occurs_negative: bool,
}

impl Polarity {
    pub fn both(&self) -> bool {
        self.occurs_positive && self.occurs_negative
    }
}

/// Predicate-level abstraction of positive/negative Gentzen-subformula
/// occurrence. Instantiating a quantifier never changes the polarity of a
/// predicate, so bodies are traversed once.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct PolarityTable {
    pub entries: BTreeMap<String, Polarity>,
}

impl PolarityTable {
    pub fn of(f: &Formula) -> PolarityTable {
        let mut entries = BTreeMap::new();
        entries.insert(BOTTOM_NAME.to_string(), Polarity::default());
        fn walk(f: &Formula, positive: bool, entries: &mut BTreeMap<String, Polarity>) {
            match f {
                Formula::Atom(..) | Formula::Bottom => {
                    let e = entries.entry(f.predicate().unwrap().to_string()).or_default();
                    if positive {
                        e.occurs_positive = true;
                    } else {
                        e.occurs_negative = true;
                    }
                }
                Formula::And(a, b) | Formula::Or(a, b) => {
                    walk(a, positive, entries);
                    walk(b, positive, entries);
                }
                Formula::Implies(a, b) => {
                    walk(a, !positive, entries);
                    walk(b, positive, entries);
                }
                Formula::Forall(_, a) | Formula::Exists(_, a) => walk(a, positive, entries),
            }
        }
        walk(f, true, &mut entries);
        PolarityTable { entries }
    }

    pub fn get(&self, predicate: &str) -> Polarity {
        self.entries.get(predicate).copied().unwrap_or_default()
    }

    /// Predicates that occur with both polarities.
    pub fn both_polar(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(|(_, p)| p.both()).map(|(k, _)| k.as_str())
    }
}

/// Predicate-level polarity table of `f`.
pub fn polarity_table(f: &Formula) -> PolarityTable {
    PolarityTable::of(f)
}

/// The canonical variable enumeration `v0, v1, v2, ...`.
pub fn enumeration_var(i: usize) -> String {
    format!("v{i}")
}

/// First variable of the enumeration not in `used`.
pub fn first_fresh(used: &BTreeSet<String>) -> String {
    (0..)
        .map(enumeration_var)
        .find(|v| !used.contains(v))
        .expect("enumeration is infinite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn substitution_replaces_free_occurrences() {
        let c = Term::var("c");
        assert_eq!(f("a(x)").substitute("x", &c), f("a(c)"));
        assert_eq!(f("forall x. a(x)").substitute("x", &c), f("forall x. a(x)"));
    }

    #[test]
    fn substitution_renames_capturing_binder() {
        let t = Term::app("f", vec![Term::var("y")]);
        let out = f("exists y. r(x, y)").substitute("x", &t);
        assert_eq!(out, f("exists y'. r(f(y), y')"));
    }

    #[test]
    fn free_variable_examples() {
        assert!(f("forall x. a(x)").free_variables().is_empty());
        let fv = f("a(x, y)").free_variables();
        assert_eq!(fv.into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
        let fv = f("(forall x. r(x, y)) -> r(x, x)").free_variables();
        assert_eq!(fv.into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
    }

    #[test]
    fn alpha_equivalence_ignores_bound_names() {
        assert!(f("forall x. a(x)").alpha_eq(&f("forall y. a(y)")));
        assert!(!f("forall x. a(x, z)").alpha_eq(&f("forall z. a(z, z)")));
        assert_eq!(f("exists x. forall y. r(x, y)").key(), f("exists u. forall w. r(u, w)").key());
        assert_ne!(f("forall x. r(x, y)").key(), f("forall y. r(y, y)").key());
    }

    #[test]
    fn instance_matching_recovers_the_term() {
        let body = f("a(x) -> forall y. a(y)");
        let inst = f("a(c) -> forall z. a(z)");
        assert_eq!(body.match_instance("x", &inst), Some(Some(Term::var("c"))));
        assert_eq!(body.match_instance("x", &f("a(c) -> forall y. a(c)")), None);
        assert_eq!(f("b").match_instance("x", &f("b")), Some(None));
        // no capture: forall y. r(x, y) instantiated with y is not forall y. r(y, y)
        assert_eq!(f("forall y. r(x, y)").match_instance("x", &f("forall y. r(y, y)")), None);
    }

    #[test]
    fn polarity_flips_on_antecedents_only() {
        let t = polarity_table(&f("a -> b"));
        assert_eq!(t.get("a"), Polarity { occurs_positive: false, occurs_negative: true });
        assert_eq!(t.get("b"), Polarity { occurs_positive: true, occurs_negative: false });
        let t = polarity_table(&f("exists x. (a(x) -> forall y. a(y))"));
        assert!(t.get("a").both());
        assert!(t.entries.contains_key(BOTTOM_NAME));
    }

    #[test]
    fn gentzen_subformulas_include_instances() {
        let host = f("forall x. (a(x) & b(x))");
        assert!(f("a(c) & b(c)").is_gentzen_subformula_of(&host));
        assert!(f("b(f(c))").is_gentzen_subformula_of(&host));
        assert!(!f("a(c) & b(d)").is_gentzen_subformula_of(&host));
        assert!(!f("c(c)").is_gentzen_subformula_of(&host));
    }

    #[test]
    fn closed_subterms_skip_bound_positions() {
        let mut out = Vec::new();
        f("forall x. r(x, f(c))").closed_subterms(&mut out);
        assert_eq!(out, vec![Term::app("f", vec![Term::var("c")]), Term::var("c")]);
    }
}
