//! Moves, justified sequences and games.
//!
//! Index 0 is the proponent's assertion of the root formula. Even indices
//! are proponent (P) moves, odd indices opponent (O) moves. Every O move
//! answers the move right before it; P may answer any earlier O move.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{first_fresh, polarity_table, Formula, OccurrencePath, Step, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttackSymbol {
    AndLeft,
    AndRight,
    OrQuery,
    ForallAt(Term),
    ExistsQuery,
    /// Attack on an implication by asserting its antecedent.
    FormulaAttack(Formula),
}

impl fmt::Display for AttackSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackSymbol::AndLeft => f.write_str("?&1"),
            AttackSymbol::AndRight => f.write_str("?&2"),
            AttackSymbol::OrQuery => f.write_str("?|"),
            AttackSymbol::ForallAt(t) => write!(f, "?forall[{t}]"),
            AttackSymbol::ExistsQuery => f.write_str("?exists"),
            AttackSymbol::FormulaAttack(g) => write!(f, "?{g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MoveContent {
    Attack(AttackSymbol),
    Defence(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub content: MoveContent,
    pub enabler: Option<usize>,
}

impl Move {
    pub fn attack(symbol: AttackSymbol, enabler: usize) -> Move {
        Move {
            content: MoveContent::Attack(symbol),
            enabler: Some(enabler),
        }
    }

    pub fn defence(f: Formula, enabler: usize) -> Move {
        Move {
            content: MoveContent::Defence(f),
            enabler: Some(enabler),
        }
    }

    /// The formula this move asserts, if it is an assertion.
    pub fn asserted(&self) -> Option<&Formula> {
        match &self.content {
            MoveContent::Defence(f) | MoveContent::Attack(AttackSymbol::FormulaAttack(f)) => Some(f),
            _ => None,
        }
    }

    pub fn is_attack(&self) -> bool {
        matches!(self.content, MoveContent::Attack(_))
    }

    pub fn symbol(&self) -> Option<&AttackSymbol> {
        match &self.content {
            MoveContent::Attack(s) => Some(s),
            MoveContent::Defence(_) => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.content {
            MoveContent::Attack(AttackSymbol::FormulaAttack(g)) => write!(f, "?, {g}"),
            MoveContent::Attack(s) => write!(f, "{s}"),
            MoveContent::Defence(g) => write!(f, "!, {g}"),
        }?;
        if let Some(e) = self.enabler {
            write!(f, "  <- {e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Player {
    Proponent,
    Opponent,
}

impl Player {
    pub fn of_index(i: usize) -> Player {
        if i.is_multiple_of(2) {
            Player::Proponent
        } else {
            Player::Opponent
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Winner {
    P,
    O,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IllegalReason {
    Parity,
    Enabler,
    Justification,
    AtomNotReprise,
    DuplicateDefence,
}

impl fmt::Display for IllegalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IllegalReason::Parity => "parity",
            IllegalReason::Enabler => "enabler",
            IllegalReason::Justification => "justification",
            IllegalReason::AtomNotReprise => "atom-not-reprise",
            IllegalReason::DuplicateDefence => "duplicate-defence",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("illegal move ({reason}): {detail}")]
pub struct IllegalMove {
    pub reason: IllegalReason,
    pub detail: String,
}

fn illegal(reason: IllegalReason, detail: impl Into<String>) -> IllegalMove {
    IllegalMove {
        reason,
        detail: detail.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OptionError {
    #[error("atomic formula `{0}` cannot be attacked")]
    AtomNotAttackable(String),
    #[error("`{attack}` is not an attack on `{formula}`")]
    MismatchedAttack { attack: String, formula: String },
}

/// Position of an asserted formula inside the root: a structural path plus
/// the terms chosen at each quantifier on the way (`None` when the bound
/// variable does not occur).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Occurrence {
    pub path: OccurrencePath,
    pub instances: Vec<Option<Term>>,
}

impl Occurrence {
    fn step(&self, step: Step, inst: Option<Option<Term>>) -> Occurrence {
        let mut instances = self.instances.clone();
        if let Some(i) = inst {
            instances.push(i);
        }
        Occurrence {
            path: self.path.child(step),
            instances,
        }
    }
}

pub fn attack_options(f: &Formula, term_universe: &[Term]) -> Result<Vec<AttackSymbol>, OptionError> {
    Ok(match f {
        Formula::Atom(..) | Formula::Bottom => return Err(OptionError::AtomNotAttackable(f.to_string())),
        Formula::Implies(a, _) => vec![AttackSymbol::FormulaAttack((**a).clone())],
        Formula::And(..) => vec![AttackSymbol::AndLeft, AttackSymbol::AndRight],
        Formula::Or(..) => vec![AttackSymbol::OrQuery],
        Formula::Exists(..) => vec![AttackSymbol::ExistsQuery],
        Formula::Forall(..) => term_universe.iter().cloned().map(AttackSymbol::ForallAt).collect(),
    })
}

pub fn is_attack_on(symbol: &AttackSymbol, f: &Formula) -> bool {
    match (f, symbol) {
        (Formula::Implies(a, _), AttackSymbol::FormulaAttack(g)) => a.alpha_eq(g),
        (Formula::And(..), AttackSymbol::AndLeft | AttackSymbol::AndRight) => true,
        (Formula::Or(..), AttackSymbol::OrQuery) => true,
        (Formula::Forall(..), AttackSymbol::ForallAt(_)) => true,
        (Formula::Exists(..), AttackSymbol::ExistsQuery) => true,
        _ => false,
    }
}

pub fn defence_options(asserted: &Formula, attack: &AttackSymbol, term_universe: &[Term]) -> Result<Vec<Formula>, OptionError> {
    if !is_attack_on(attack, asserted) {
        return Err(OptionError::MismatchedAttack {
            attack: attack.to_string(),
            formula: asserted.to_string(),
        });
    }
    Ok(match (asserted, attack) {
        (Formula::Implies(_, b), _) => vec![(**b).clone()],
        (Formula::And(a, _), AttackSymbol::AndLeft) => vec![(**a).clone()],
        (Formula::And(_, b), _) => vec![(**b).clone()],
        (Formula::Or(a, b), _) => vec![(**a).clone(), (**b).clone()],
        (Formula::Forall(x, a), AttackSymbol::ForallAt(t)) => vec![a.substitute(x, t)],
        (Formula::Exists(x, a), _) => {
            let mut out: Vec<Formula> = Vec::new();
            for t in term_universe {
                let inst = a.substitute(x, t);
                if !out.contains(&inst) {
                    out.push(inst);
                }
            }
            out
        }
        _ => unreachable!("checked by is_attack_on"),
    })
}

/// A candidate move; quantifier choices may be left open for a human to fill.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MoveDescriptor {
    Concrete(Move),
    /// Universal attack on the assertion at `enabler`, term to be chosen.
    ForallAttack { enabler: usize },
    /// Defence against the existential attack at `enabler`, witness to be chosen.
    ExistsDefence { enabler: usize },
}

impl MoveDescriptor {
    pub fn enabler(&self) -> usize {
        match self {
            MoveDescriptor::Concrete(m) => m.enabler.unwrap_or(0),
            MoveDescriptor::ForallAttack { enabler } | MoveDescriptor::ExistsDefence { enabler } => *enabler,
        }
    }

    /// The concrete move; open slots are filled with `term`.
    pub fn instantiate(&self, g: &Game, term: Option<&Term>) -> Option<Move> {
        match self {
            MoveDescriptor::Concrete(m) => Some(m.clone()),
            MoveDescriptor::ForallAttack { enabler } => Some(Move::attack(AttackSymbol::ForallAt(term?.clone()), *enabler)),
            MoveDescriptor::ExistsDefence { enabler } => {
                let attacked = g.moves[*enabler].enabler?;
                match g.moves[attacked].asserted()? {
                    Formula::Exists(x, a) => Some(Move::defence(a.substitute(x, term?), *enabler)),
                    _ => None,
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game {
    root: Formula,
    moves: Vec<Move>,
    occurrences: Vec<Option<Occurrence>>,
}

impl Game {
    pub fn new(root: Formula) -> Game {
        Game {
            moves: vec![Move {
                content: MoveContent::Defence(root.clone()),
                enabler: None,
            }],
            occurrences: vec![Some(Occurrence {
                path: OccurrencePath::default(),
                instances: Vec::new(),
            })],
            root,
        }
    }

    /// Validates a whole move list; the error carries the offending index.
    pub fn from_moves(root: Formula, moves: &[Move]) -> Result<Game, (usize, IllegalMove)> {
        let mut g = Game::new(root);
        match moves.first() {
            None => return Err((0, illegal(IllegalReason::Justification, "empty game"))),
            Some(m0) if m0.enabler.is_some() || m0.asserted() != Some(&g.root) || m0.is_attack() => {
                return Err((0, illegal(IllegalReason::Justification, "the first move must assert the root formula")))
            }
            _ => {}
        }
        for (i, m) in moves.iter().enumerate().skip(1) {
            g = g.extend(m.clone()).map_err(|e| (i, e))?;
        }
        Ok(g)
    }

    pub fn root(&self) -> &Formula {
        &self.root
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn last(&self) -> &Move {
        self.moves.last().expect("games are never empty")
    }

    pub fn next_player(&self) -> Player {
        Player::of_index(self.moves.len())
    }

    pub fn occurrence(&self, i: usize) -> Option<&Occurrence> {
        self.occurrences.get(i)?.as_ref()
    }

    /// Variables that appear in the game: every name in an asserted formula
    /// (bound ones included) and every variable of a universal-attack term.
    pub fn appearing_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in &self.moves {
            if let Some(f) = m.asserted() {
                f.all_variables(&mut out);
            }
            if let Some(AttackSymbol::ForallAt(t)) = m.symbol() {
                t.variables(&mut out);
            }
        }
        out
    }

    /// First variable of the enumeration not appearing in the game.
    pub fn fresh_variable(&self) -> String {
        first_fresh(&self.appearing_variables())
    }

    /// Closed subterms of the asserted formulas and universal-attack terms.
    pub fn term_universe(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for m in &self.moves {
            if let Some(f) = m.asserted() {
                f.closed_subterms(&mut out);
            }
            if let Some(AttackSymbol::ForallAt(t)) = m.symbol() {
                let mut subs = Vec::new();
                t.subterms(&mut subs);
                for s in subs {
                    if !out.contains(s) {
                        out.push(s.clone());
                    }
                }
            }
        }
        out
    }

    fn with_fresh(&self, universe: &[Term]) -> Vec<Term> {
        let mut out = universe.to_vec();
        let v = Term::Var(self.fresh_variable());
        if !out.contains(&v) {
            out.push(v);
        }
        out
    }

    /// Whether some earlier move of the other player asserts `f`.
    fn is_reprise_for(&self, player: Player, f: &Formula) -> bool {
        self.moves
            .iter()
            .enumerate()
            .any(|(j, m)| Player::of_index(j) != player && m.asserted().is_some_and(|g| g.alpha_eq(f)))
    }

    fn occurrence_of(&self, n: usize, mv: &Move) -> Option<Occurrence> {
        let e = mv.enabler?;
        match &mv.content {
            MoveContent::Attack(AttackSymbol::FormulaAttack(_)) => Some(self.occurrence(e)?.step(Step::Left, None)),
            MoveContent::Attack(_) => None,
            MoveContent::Defence(f) => {
                let attack = self.moves[e].symbol()?;
                let a = self.moves[e].enabler?;
                let base = self.occurrence(a)?;
                let asserted = self.moves[a].asserted()?;
                Some(match (asserted, attack) {
                    (Formula::Implies(..), _) => base.step(Step::Right, None),
                    (Formula::And(..), AttackSymbol::AndLeft) => base.step(Step::Left, None),
                    (Formula::And(..), _) => base.step(Step::Right, None),
                    (Formula::Or(l, r), _) => {
                        let left = base.step(Step::Left, None);
                        if l.alpha_eq(f) && r.alpha_eq(f) {
                            let taken = (0..n).any(|m| {
                                m % 2 == n % 2
                                    && self.moves[m].enabler == Some(e)
                                    && !self.moves[m].is_attack()
                                    && self.occurrence(m) == Some(&left)
                            });
                            if taken {
                                base.step(Step::Right, None)
                            } else {
                                left
                            }
                        } else if l.alpha_eq(f) {
                            left
                        } else {
                            base.step(Step::Right, None)
                        }
                    }
                    (Formula::Forall(x, body), AttackSymbol::ForallAt(t)) => {
                        let inst = body.has_free(x).then(|| t.clone());
                        base.step(Step::Body, Some(inst))
                    }
                    (Formula::Exists(x, body), _) => {
                        let inst = body.match_instance(x, f)?;
                        base.step(Step::Body, Some(inst))
                    }
                    _ => return None,
                })
            }
        }
    }

    /// Checks `mv` as the next move; returns its occurrence when it asserts.
    fn check(&self, mv: &Move) -> Result<Option<Occurrence>, IllegalMove> {
        let n = self.moves.len();
        let player = Player::of_index(n);
        let e = mv
            .enabler
            .ok_or_else(|| illegal(IllegalReason::Enabler, "every move after the first needs an enabler"))?;
        if e >= n {
            return Err(illegal(IllegalReason::Enabler, format!("enabler {e} is not an earlier move")));
        }
        if e % 2 == n % 2 {
            return Err(illegal(IllegalReason::Parity, format!("move {n} cannot answer move {e} of the same player")));
        }
        if player == Player::Opponent && e != n - 1 {
            return Err(illegal(IllegalReason::Enabler, "an opponent move must answer the move just before it"));
        }
        let enabler = &self.moves[e];
        match &mv.content {
            MoveContent::Attack(s) => {
                let target = enabler
                    .asserted()
                    .ok_or_else(|| illegal(IllegalReason::Justification, format!("move {e} asserts nothing")))?;
                if !is_attack_on(s, target) {
                    return Err(illegal(IllegalReason::Justification, format!("`{s}` does not attack `{target}`")));
                }
            }
            MoveContent::Defence(f) => {
                let s = enabler
                    .symbol()
                    .ok_or_else(|| illegal(IllegalReason::Justification, format!("move {e} is not an attack")))?;
                let a = enabler.enabler.expect("attacks have enablers");
                let target = self.moves[a].asserted().expect("justified attacks target assertions");
                let ok = match (target, s) {
                    (Formula::Exists(x, body), AttackSymbol::ExistsQuery) => body.match_instance(x, f).is_some(),
                    _ => defence_options(target, s, &[]).is_ok_and(|opts| opts.iter().any(|g| g.alpha_eq(f))),
                };
                if !ok {
                    return Err(illegal(IllegalReason::Justification, format!("`{f}` does not defend `{target}` against `{s}`")));
                }
            }
        }
        if player == Player::Proponent {
            if let Some(f) = mv.asserted() {
                if f.is_atomic() && !self.is_reprise_for(player, f) {
                    return Err(illegal(
                        IllegalReason::AtomNotReprise,
                        format!("`{f}` has not been asserted by the opponent"),
                    ));
                }
            }
        }
        let occ = self.occurrence_of(n, mv);
        if player == Player::Proponent && !mv.is_attack() {
            let duplicate = (1..n).any(|m| {
                m % 2 == 0 && !self.moves[m].is_attack() && self.moves[m].enabler == Some(e) && self.occurrence(m) == occ.as_ref()
            });
            if duplicate {
                return Err(illegal(
                    IllegalReason::DuplicateDefence,
                    format!("move {e} has already been answered with this occurrence"),
                ));
            }
        }
        Ok(occ)
    }

    /// The game extended by `mv`, if the result is a game.
    pub fn extend(&self, mv: Move) -> Result<Game, IllegalMove> {
        let occ = self.check(&mv)?;
        let mut g = self.clone();
        g.moves.push(mv);
        g.occurrences.push(occ);
        Ok(g)
    }

    pub fn is_legal(&self, mv: &Move) -> bool {
        self.check(mv).is_ok()
    }

    fn candidates(&self, terms: &[Term]) -> Vec<Move> {
        let n = self.moves.len();
        let enablers: Vec<usize> = if n % 2 == 1 {
            vec![n - 1]
        } else {
            (1..n).step_by(2).collect()
        };
        let mut out: Vec<Move> = Vec::new();
        for j in enablers {
            let m = &self.moves[j];
            if let Some(f) = m.asserted() {
                if let Ok(opts) = attack_options(f, terms) {
                    out.extend(opts.into_iter().map(|s| Move::attack(s, j)));
                }
            }
            if let Some(s) = m.symbol() {
                let a = m.enabler.expect("attacks have enablers");
                let target = self.moves[a].asserted().expect("justified");
                if let Ok(opts) = defence_options(target, s, terms) {
                    out.extend(opts.into_iter().map(|f| Move::defence(f, j)));
                }
            }
        }
        let mut seen = BTreeSet::new();
        out.retain(|m| seen.insert(format!("{m:?}")));
        out
    }

    /// All legal next moves, with term choices drawn from `term_universe`
    /// plus the first fresh variable.
    pub fn legal_moves(&self, term_universe: &[Term]) -> Vec<MoveDescriptor> {
        let terms = self.with_fresh(term_universe);
        self.candidates(&terms)
            .into_iter()
            .filter(|m| self.is_legal(m))
            .map(MoveDescriptor::Concrete)
            .collect()
    }

    /// The opponent moves a strategy must cover: universal attacks and
    /// existential defences use the first fresh variable only.
    pub fn canonical_opponent_moves(&self) -> Vec<Move> {
        if self.next_player() != Player::Opponent {
            return Vec::new();
        }
        let terms = vec![Term::Var(self.fresh_variable())];
        self.candidates(&terms).into_iter().filter(|m| self.is_legal(m)).collect()
    }

    /// Legal next moves with quantifier choices left open.
    pub fn open_moves(&self, term_universe: &[Term]) -> Vec<MoveDescriptor> {
        let mut out = Vec::new();
        let mut open = BTreeSet::new();
        for d in self.legal_moves(term_universe) {
            let MoveDescriptor::Concrete(m) = &d else { continue };
            let e = m.enabler.unwrap_or(0);
            match &m.content {
                MoveContent::Attack(AttackSymbol::ForallAt(_)) => {
                    if open.insert(("A", e)) {
                        out.push(MoveDescriptor::ForallAttack { enabler: e });
                    }
                }
                MoveContent::Defence(_) if self.moves[e].symbol() == Some(&AttackSymbol::ExistsQuery) => {
                    if open.insert(("E", e)) {
                        out.push(MoveDescriptor::ExistsDefence { enabler: e });
                    }
                }
                _ => out.push(d),
            }
        }
        out
    }

    pub fn winner(&self, term_universe: &[Term]) -> Winner {
        let last_even = (self.moves.len() - 1).is_multiple_of(2);
        let stuck = self.legal_moves(term_universe).is_empty();
        match (last_even, stuck) {
            (true, true) => Winner::P,
            (false, true) => Winner::O,
            _ => Winner::Open,
        }
    }

    /// Checks Propositions 1-3 on this game.
    pub fn check_propositions(&self) -> PropositionReport {
        let mut report = PropositionReport::default();
        let table = polarity_table(&self.root);
        if self.winner(&self.term_universe()) == Winner::P && !self.last().asserted().is_some_and(Formula::is_atomic) {
            report.violations.push("won by P but the last move does not assert an atom".into());
            report.atomic_last = false;
        }
        for (i, m) in self.moves.iter().enumerate() {
            let Some(f) = m.asserted() else { continue };
            let positive = i % 2 == 0;
            let path_ok = self
                .occurrence(i)
                .and_then(|o| o.path.polarity_in(&self.root))
                .is_some_and(|p| p == positive);
            let pred_ok = f.predicate().is_none_or(|p| {
                let pol = table.get(p);
                if positive {
                    pol.occurs_positive
                } else {
                    pol.occurs_negative
                }
            });
            if !path_ok || !pred_ok {
                report.polarity = false;
                report.violations.push(format!("move {i} asserts `{f}` with the wrong polarity"));
            }
            if positive && i > 0 && f.is_atomic() && !table.get(f.predicate().unwrap()).both() {
                report.both_polar = false;
                report.violations.push(format!("move {i} asserts `{f}` whose predicate is not both-polar"));
            }
        }
        report
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropositionReport {
    /// A P-won game ends with an atomic assertion.
    pub atomic_last: bool,
    /// P asserts positive, O negative subformula occurrences.
    pub polarity: bool,
    /// P's atomic assertions have both-polar predicates.
    pub both_polar: bool,
    pub violations: Vec<String>,
}

impl Default for PropositionReport {
    fn default() -> Self {
        PropositionReport {
            atomic_last: true,
            polarity: true,
            both_polar: true,
            violations: Vec::new(),
        }
    }
}

impl PropositionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}
