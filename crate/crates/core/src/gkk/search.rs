//! Bounded backward search for strategic GKK derivations.
//!
//! Every GKK rule is invertible once principal formulas are retained, so the
//! propositional rules are applied deterministically (each at most once per
//! branch in a way that adds information). Only quantifier instantiations
//! are real choice points; their number along a branch is bounded and raised
//! by iterative deepening. The strategic restriction is built in: the left
//! premise of ImpL and the premise of ExR carry an obligation to decompose
//! the new formula first.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use super::{apply_rule, Active, Derivation, Rule, Sequent};
use crate::formula::{first_fresh, Formula, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SearchLimits {
    pub max_depth: usize,
    pub max_fresh_vars: usize,
    pub max_instantiations_per_formula: usize,
    pub time_budget_ms: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_depth: 40,
            max_fresh_vars: 3,
            max_instantiations_per_formula: 3,
            time_budget_ms: 5000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProveOptions {
    /// Extra instantiation terms offered alongside the sequent's own subterms.
    pub seeds: Vec<Term>,
    /// `(exists-formula, instance)` pairs that must not be chosen again.
    pub blocked_instances: Vec<(Formula, Formula)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("time budget of {0} ms exceeded")]
    TimeBudgetExceeded(u64),
}

/// Subterms of `s` (deduplicated, outermost first) followed by
/// `fresh_budget` fresh variables; a term-free sequent gets at least one.
pub fn term_universe(s: &Sequent, fresh_budget: usize) -> Vec<Term> {
    let mut out = Vec::new();
    for f in s.left.iter().chain(&s.right) {
        f.closed_subterms(&mut out);
    }
    let mut used = s.all_variables();
    let wanted = if out.is_empty() { fresh_budget.max(1) } else { fresh_budget };
    for _ in 0..wanted {
        let v = first_fresh(&used);
        used.insert(v.clone());
        out.push(Term::Var(v));
    }
    out
}

pub fn prove(s: &Sequent, limits: &SearchLimits) -> Result<Option<Derivation>, SearchError> {
    prove_with(s, limits, &ProveOptions::default())
}

pub fn prove_with(s: &Sequent, limits: &SearchLimits, options: &ProveOptions) -> Result<Option<Derivation>, SearchError> {
    let mut searcher = Searcher {
        limits: *limits,
        seeds: options.seeds.clone(),
        start: Instant::now(),
        budget: Duration::from_millis(limits.time_budget_ms),
        ticks: 0,
        cut: false,
    };
    let mut root = State {
        left_keys: s.left.iter().map(Formula::key).collect(),
        seq: s.clone(),
        expanded: BTreeSet::new(),
        inst: BTreeMap::new(),
        used: BTreeSet::new(),
        fresh_used: 0,
        depth: 0,
        choices: 0,
    };
    for (ex, inst) in &options.blocked_instances {
        root.used.insert((ex.key(), inst.key()));
    }
    let max_choices = limits.max_depth;
    for k in 0..=max_choices {
        searcher.cut = false;
        let mut st = root.clone();
        st.choices = k;
        if let Some(d) = searcher.solve(st)? {
            return Ok(Some(d));
        }
        if !searcher.cut {
            return Ok(None);
        }
    }
    Ok(None)
}

#[derive(Clone)]
struct State {
    seq: Sequent,
    left_keys: BTreeSet<String>,
    /// Formulas already given their one useful application on this branch.
    expanded: BTreeSet<String>,
    /// Instantiations per quantified formula.
    inst: BTreeMap<String, usize>,
    /// `(exists key, instance key)` pairs already asserted.
    used: BTreeSet<(String, String)>,
    fresh_used: usize,
    depth: usize,
    /// Remaining instantiation choices on this branch.
    choices: usize,
}

impl State {
    fn child(&self, seq: Sequent) -> State {
        let mut next = self.clone();
        for f in &seq.left[self.seq.left.len().min(seq.left.len())..] {
            next.left_keys.insert(f.key());
        }
        next.seq = seq;
        next.depth += 1;
        next
    }

    fn has_left(&self, f: &Formula) -> bool {
        self.left_keys.contains(&f.key())
    }
}

struct Searcher {
    limits: SearchLimits,
    seeds: Vec<Term>,
    start: Instant,
    budget: Duration,
    ticks: u64,
    /// Set whenever a bound prevented some branch from being explored.
    cut: bool,
}

type Found = Result<Option<Derivation>, SearchError>;

enum Choice {
    AllL(usize, Term),
    ExR(usize, Term),
    ImpL(usize),
}

impl Searcher {
    fn tick(&mut self) -> Result<(), SearchError> {
        self.ticks += 1;
        if self.ticks.is_multiple_of(256) && self.start.elapsed() > self.budget {
            return Err(SearchError::TimeBudgetExceeded(self.limits.time_budget_ms));
        }
        Ok(())
    }

    fn eigen(&self, st: &State) -> String {
        let mut used = st.seq.all_variables();
        for t in &self.seeds {
            t.variables(&mut used);
        }
        first_fresh(&used)
    }

    /// Instantiation terms available in `st`, and whether the list is a
    /// fresh witness (which then counts against the fresh budget).
    fn universe(&mut self, st: &State) -> (Vec<Term>, bool) {
        let mut out = Vec::new();
        for f in st.seq.left.iter().chain(&st.seq.right) {
            f.closed_subterms(&mut out);
        }
        for t in &self.seeds {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        if !out.is_empty() {
            return (out, false);
        }
        if st.fresh_used >= self.limits.max_fresh_vars {
            self.cut = true;
            return (out, false);
        }
        (vec![Term::Var(self.eigen(st))], true)
    }

    fn leaf(st: &State, slot: usize) -> Derivation {
        Derivation::new(st.seq.clone(), Rule::Id, Active::right(slot), vec![])
    }

    /// Applies a committed rule and solves every premise freely.
    fn commit(&mut self, st: State, rule: Rule, active: Active) -> Found {
        let premises = apply_rule(&st.seq, &rule, active).expect("rule applies");
        let mut done = Vec::with_capacity(premises.len());
        for p in premises {
            match self.solve(st.child(p))? {
                Some(d) => done.push(d),
                None => return Ok(None),
            }
        }
        Ok(Some(Derivation::new(st.seq, rule, active, done)))
    }

    fn expand_right(&mut self, st: State, slot: usize) -> Found {
        let rule = match &st.seq.right[slot] {
            Formula::Implies(..) => Rule::ImpR,
            Formula::And(..) => Rule::AndR,
            Formula::Or(..) => Rule::OrR,
            Formula::Forall(..) => Rule::AllR(self.eigen(&st)),
            _ => unreachable!("not an invertible right formula"),
        };
        self.commit(st, rule, Active::right(slot))
    }

    /// ImpL whose left premise must decompose the antecedent at once.
    fn imp_left(&mut self, st: State, slot: usize) -> Found {
        let rule = Rule::ImpL;
        let active = Active::left(slot);
        let premises = apply_rule(&st.seq, &rule, active).expect("rule applies");
        let mut it = premises.into_iter();
        let (p1, p2) = (it.next().unwrap(), it.next().unwrap());
        let obligation = p1.right.len() - 1;
        let Some(d1) = self.obliged(st.child(p1), obligation)? else {
            return Ok(None);
        };
        let Some(d2) = self.solve(st.child(p2))? else {
            return Ok(None);
        };
        Ok(Some(Derivation::new(st.seq, rule, active, vec![d1, d2])))
    }

    /// ExR with term `t` on `slot`; the premise must decompose the instance.
    fn ex_right(&mut self, st: &State, slot: usize, t: &Term, fresh: bool) -> Found {
        let Formula::Exists(x, a) = &st.seq.right[slot] else {
            unreachable!()
        };
        let ex_key = st.seq.right[slot].key();
        let inst = a.substitute(x, t);
        let inst_key = inst.key();
        if st.used.contains(&(ex_key.clone(), inst_key.clone())) {
            return Ok(None);
        }
        if inst.is_atomic() && !st.has_left(&inst) {
            return Ok(None);
        }
        let count = st.inst.get(&ex_key).copied().unwrap_or(0);
        if count >= self.limits.max_instantiations_per_formula {
            self.cut = true;
            return Ok(None);
        }
        let rule = Rule::ExR(t.clone());
        let active = Active::right(slot);
        let premise = apply_rule(&st.seq, &rule, active).expect("rule applies").remove(0);
        let obligation = premise.right.len() - 1;
        let mut next = st.child(premise);
        next.used.insert((ex_key.clone(), inst_key));
        next.inst.insert(ex_key, count + 1);
        if fresh {
            next.fresh_used += 1;
        }
        Ok(self
            .obliged(next, obligation)?
            .map(|d| Derivation::new(st.seq.clone(), rule, active, vec![d])))
    }

    /// Solves `st` where the right formula at `slot` must be active.
    fn obliged(&mut self, st: State, slot: usize) -> Found {
        self.tick()?;
        if st.depth >= self.limits.max_depth {
            self.cut = true;
            return Ok(None);
        }
        let f = &st.seq.right[slot];
        if f.is_atomic() {
            return Ok(st.has_left(f).then(|| Self::leaf(&st, slot)));
        }
        if !matches!(f, Formula::Exists(..)) {
            return self.expand_right(st, slot);
        }
        let (terms, fresh) = self.universe(&st);
        for t in &terms {
            if let Some(d) = self.ex_right(&st, slot, t, fresh)? {
                return Ok(Some(d));
            }
        }
        Ok(None)
    }

    fn solve(&mut self, mut st: State) -> Found {
        self.tick()?;
        if st.depth >= self.limits.max_depth {
            self.cut = true;
            return Ok(None);
        }
        let seq = &st.seq;
        if let Some(slot) = seq.right.iter().position(|f| f.is_atomic() && st.has_left(f)) {
            return Ok(Some(Self::leaf(&st, slot)));
        }
        if let Some(slot) = seq
            .right
            .iter()
            .position(|f| matches!(f, Formula::Implies(..) | Formula::And(..) | Formula::Or(..) | Formula::Forall(..)))
        {
            return self.expand_right(st, slot);
        }
        // an existential whose instance is already assumed closes at once
        for (slot, f) in seq.right.iter().enumerate() {
            if let Formula::Exists(x, a) = f {
                let (terms, _) = self.universe(&st);
                for t in terms {
                    let inst = a.substitute(x, &t);
                    if inst.is_atomic() && st.has_left(&inst) {
                        if let Some(d) = self.ex_right(&st, slot, &t, false)? {
                            return Ok(Some(d));
                        }
                    }
                }
            }
        }
        for (slot, f) in seq.left.iter().enumerate() {
            match f {
                Formula::And(a, b) => {
                    if !st.has_left(a) {
                        return self.commit(st, Rule::AndL1, Active::left(slot));
                    }
                    if !st.has_left(b) {
                        return self.commit(st, Rule::AndL2, Active::left(slot));
                    }
                }
                Formula::Or(a, b) => {
                    if !st.has_left(a) && !st.has_left(b) {
                        return self.commit(st, Rule::OrL, Active::left(slot));
                    }
                }
                Formula::Exists(..) => {
                    let key = format!("E{}", f.key());
                    if !st.expanded.contains(&key) {
                        st.expanded.insert(key);
                        let y = self.eigen(&st);
                        return self.commit(st, Rule::ExL(y), Active::left(slot));
                    }
                }
                Formula::Implies(a, b) => {
                    if st.has_left(b) {
                        continue;
                    }
                    if a.is_atomic() {
                        if st.has_left(a) {
                            return self.imp_left(st, slot);
                        }
                        continue;
                    }
                    if matches!(**a, Formula::Exists(..)) {
                        continue;
                    }
                    let key = format!("I{}", f.key());
                    if !st.expanded.contains(&key) {
                        st.expanded.insert(key);
                        return self.imp_left(st, slot);
                    }
                }
                _ => {}
            }
        }
        self.choose(st)
    }

    fn choose(&mut self, st: State) -> Found {
        let (terms, fresh) = self.universe(&st);
        let mut options = Vec::new();
        for (slot, f) in st.seq.left.iter().enumerate() {
            if let Formula::Forall(x, a) = f {
                let count = st.inst.get(&f.key()).copied().unwrap_or(0);
                if count >= self.limits.max_instantiations_per_formula {
                    self.cut = true;
                    continue;
                }
                for t in &terms {
                    if !st.has_left(&a.substitute(x, t)) {
                        options.push(Choice::AllL(slot, t.clone()));
                    }
                }
            }
        }
        for (slot, f) in st.seq.right.iter().enumerate() {
            if let Formula::Exists(x, a) = f {
                for t in &terms {
                    let inst = a.substitute(x, t);
                    if !inst.is_atomic() && !st.used.contains(&(f.key(), inst.key())) {
                        options.push(Choice::ExR(slot, t.clone()));
                    }
                }
            }
        }
        for (slot, f) in st.seq.left.iter().enumerate() {
            if let Formula::Implies(a, b) = f {
                if matches!(**a, Formula::Exists(..)) && !st.has_left(b) && !st.expanded.contains(&format!("I{}", f.key())) {
                    options.push(Choice::ImpL(slot));
                }
            }
        }
        if options.is_empty() {
            return Ok(None);
        }
        if st.choices == 0 {
            self.cut = true;
            return Ok(None);
        }
        for choice in options {
            let mut next = st.clone();
            next.choices -= 1;
            let found = match choice {
                Choice::AllL(slot, t) => {
                    let key = next.seq.left[slot].key();
                    *next.inst.entry(key).or_insert(0) += 1;
                    if fresh {
                        next.fresh_used += 1;
                    }
                    self.commit(next, Rule::AllL(t), Active::left(slot))?
                }
                Choice::ExR(slot, t) => self.ex_right(&next, slot, &t, fresh)?,
                Choice::ImpL(slot) => {
                    let key = format!("I{}", next.seq.left[slot].key());
                    next.expanded.insert(key);
                    self.imp_left(next, slot)?
                }
            };
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}
