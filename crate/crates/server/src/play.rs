//! Machine play for Proponent: replay a stored strategy with the human's
//! terms substituted in, fall back to search when the replay breaks.

use std::collections::{BTreeMap, BTreeSet};

use dialogic::dialogue::{AttackSymbol, Game, Move, MoveContent, MoveDescriptor, Player, Winner};
use dialogic::formula::{first_fresh, Formula, Term};
use dialogic::gkk::SearchLimits;
use dialogic::translate::continuation;
use dialogic::{Strategy, StrategyNode};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    AwaitingHuman,
    AwaitingMachine,
    FinishedPWin,
    FinishedOWin,
}

/// How the machine chose its last move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Strategy,
    Search,
    FirstLegal,
}

/// Position inside a strategy tree, with the strategy's variables mapped to
/// the terms actually played.
#[derive(Clone, Debug)]
struct Cursor {
    node: StrategyNode,
    subst: BTreeMap<String, Term>,
}

#[derive(Clone, Debug)]
pub struct Match {
    pub game: Game,
    pub strategy: Option<Strategy>,
    pub status: Status,
    pub last_mode: Option<Mode>,
    limits: SearchLimits,
    cursor: Option<Cursor>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlayError {
    #[error("it is not the human's turn")]
    WrongTurn,
    #[error("no legal move #{0}")]
    NoSuchChoice(usize),
    #[error("this move needs a term")]
    MissingTerm,
    #[error(transparent)]
    Illegal(#[from] dialogic::IllegalMove),
}

impl Match {
    /// `strategy` must already be checked as winning for `root`.
    pub fn new(root: Formula, strategy: Option<Strategy>, limits: SearchLimits) -> Match {
        let game = Game::new(root);
        let cursor = strategy.as_ref().map(|s| Cursor {
            node: s.root.clone(),
            subst: identity(&game),
        });
        let mut m = Match {
            game,
            strategy,
            status: Status::AwaitingHuman,
            last_mode: None,
            limits,
            cursor,
        };
        m.settle();
        m
    }

    pub fn legal_moves(&self) -> Result<Vec<MoveDescriptor>, PlayError> {
        if self.status != Status::AwaitingHuman {
            return Err(PlayError::WrongTurn);
        }
        Ok(self.game.open_moves(&self.game.term_universe()))
    }

    /// Plays the human's choice from [`Match::legal_moves`], then lets the
    /// machine answer.
    pub fn play_choice(&mut self, choice: usize, term: Option<&Term>) -> Result<(), PlayError> {
        let options = self.legal_moves()?;
        let d = options.get(choice).ok_or(PlayError::NoSuchChoice(choice))?;
        let mv = d.instantiate(&self.game, term).ok_or(PlayError::MissingTerm)?;
        self.play(mv)
    }

    pub fn play(&mut self, mv: Move) -> Result<(), PlayError> {
        if self.status != Status::AwaitingHuman {
            return Err(PlayError::WrongTurn);
        }
        self.game = self.game.extend(mv.clone())?;
        self.cursor = self.cursor.take().and_then(|c| follow(c, &mv));
        self.settle();
        if self.status == Status::AwaitingMachine {
            self.machine_move();
            self.settle();
        }
        Ok(())
    }

    fn settle(&mut self) {
        self.status = match self.game.winner(&self.game.term_universe()) {
            Winner::P => Status::FinishedPWin,
            Winner::O => Status::FinishedOWin,
            Winner::Open if self.game.next_player() == Player::Opponent => Status::AwaitingHuman,
            Winner::Open => Status::AwaitingMachine,
        };
    }

    fn machine_move(&mut self) {
        if let Some(c) = self.cursor.take() {
            if let Some((mv, next)) = replay(c, &self.game) {
                if let Ok(g) = self.game.extend(mv) {
                    self.game = g;
                    self.cursor = Some(next);
                    self.last_mode = Some(Mode::Strategy);
                    return;
                }
            }
        }
        if let Ok(Some(node)) = continuation(&self.game, &self.limits) {
            if let Ok(g) = self.game.extend(node.mv.clone()) {
                self.cursor = Some(Cursor {
                    subst: identity(&g),
                    node,
                });
                self.game = g;
                self.last_mode = Some(Mode::Search);
                return;
            }
        }
        let universe = self.game.term_universe();
        let first = self
            .game
            .legal_moves(&universe)
            .into_iter()
            .find_map(|d| d.instantiate(&self.game, universe.first()));
        if let Some(mv) = first {
            if let Ok(g) = self.game.extend(mv) {
                self.game = g;
                self.last_mode = Some(Mode::FirstLegal);
            }
        }
    }
}

fn identity(g: &Game) -> BTreeMap<String, Term> {
    g.appearing_variables().into_iter().map(|v| (v.clone(), Term::Var(v))).collect()
}

/// Moves the cursor to the strategy child that the human's move instantiates.
fn follow(c: Cursor, played: &Move) -> Option<Cursor> {
    c.node.children.into_iter().find_map(|child| {
        let mut subst = c.subst.clone();
        match_move(&child.mv, played, &mut subst).then_some(Cursor { node: child, subst })
    })
}

/// The strategy's answer at the cursor, translated into the actual game.
fn replay(c: Cursor, g: &Game) -> Option<(Move, Cursor)> {
    let next = c.node.children.into_iter().next()?;
    let mut subst = c.subst;
    let mut taken: BTreeSet<String> = g.appearing_variables();
    for t in subst.values() {
        t.variables(&mut taken);
    }
    for v in move_variables(&next.mv) {
        if subst.contains_key(&v) {
            continue;
        }
        let target = if taken.contains(&v) { first_fresh(&taken) } else { v.clone() };
        taken.insert(target.clone());
        subst.insert(v, Term::Var(target));
    }
    let mv = apply_move(&next.mv, &subst);
    Some((mv, Cursor { node: next, subst }))
}

fn move_variables(m: &Move) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match &m.content {
        MoveContent::Defence(f) | MoveContent::Attack(AttackSymbol::FormulaAttack(f)) => f.all_variables(&mut out),
        MoveContent::Attack(AttackSymbol::ForallAt(t)) => t.variables(&mut out),
        MoveContent::Attack(_) => {}
    }
    out
}

/// Simultaneous substitution, through placeholder names no parsed or
/// generated variable can take.
fn subst_formula(f: &Formula, subst: &BTreeMap<String, Term>) -> Formula {
    let keys: Vec<&String> = subst.keys().collect();
    let mut out = f.clone();
    for (i, k) in keys.iter().enumerate() {
        out = out.substitute(k, &Term::Var(format!("#{i}")));
    }
    for (i, k) in keys.iter().enumerate() {
        out = out.substitute(&format!("#{i}"), &subst[*k]);
    }
    out
}

fn subst_term(t: &Term, subst: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| subst_term(a, subst)).collect()),
    }
}

fn apply_move(m: &Move, subst: &BTreeMap<String, Term>) -> Move {
    let content = match &m.content {
        MoveContent::Defence(f) => MoveContent::Defence(subst_formula(f, subst)),
        MoveContent::Attack(AttackSymbol::FormulaAttack(f)) => {
            MoveContent::Attack(AttackSymbol::FormulaAttack(subst_formula(f, subst)))
        }
        MoveContent::Attack(AttackSymbol::ForallAt(t)) => MoveContent::Attack(AttackSymbol::ForallAt(subst_term(t, subst))),
        MoveContent::Attack(s) => MoveContent::Attack(s.clone()),
    };
    Move {
        content,
        enabler: m.enabler,
    }
}

/// Matches a strategy move against a played one, extending `subst` with
/// the strategy variables seen for the first time.
fn match_move(pattern: &Move, actual: &Move, subst: &mut BTreeMap<String, Term>) -> bool {
    if pattern.enabler != actual.enabler {
        return false;
    }
    match (&pattern.content, &actual.content) {
        (MoveContent::Defence(p), MoveContent::Defence(a))
        | (MoveContent::Attack(AttackSymbol::FormulaAttack(p)), MoveContent::Attack(AttackSymbol::FormulaAttack(a))) => {
            match_formula(p, a, &mut Vec::new(), subst)
        }
        (MoveContent::Attack(AttackSymbol::ForallAt(p)), MoveContent::Attack(AttackSymbol::ForallAt(a))) => {
            match_term(p, a, &[], subst)
        }
        (MoveContent::Attack(p), MoveContent::Attack(a)) => p == a,
        _ => false,
    }
}

fn match_term(p: &Term, a: &Term, bound: &[(String, String)], subst: &mut BTreeMap<String, Term>) -> bool {
    match (p, a) {
        (Term::Var(x), _) => {
            if let Some((_, y)) = bound.iter().rev().find(|(bx, _)| bx == x) {
                return matches!(a, Term::Var(v) if v == y);
            }
            let mut vars = BTreeSet::new();
            a.variables(&mut vars);
            if bound.iter().any(|(_, y)| vars.contains(y)) {
                return false;
            }
            match subst.get(x) {
                Some(t) => t == a,
                None => {
                    subst.insert(x.clone(), a.clone());
                    true
                }
            }
        }
        (Term::App(f, ps), Term::App(g, as_)) => {
            f == g && ps.len() == as_.len() && ps.iter().zip(as_).all(|(p, a)| match_term(p, a, bound, subst))
        }
        _ => false,
    }
}

fn match_formula(p: &Formula, a: &Formula, bound: &mut Vec<(String, String)>, subst: &mut BTreeMap<String, Term>) -> bool {
    match (p, a) {
        (Formula::Atom(q, ps), Formula::Atom(r, as_)) => {
            q == r && ps.len() == as_.len() && ps.iter().zip(as_).all(|(p, a)| match_term(p, a, bound, subst))
        }
        (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(p1, p2), Formula::And(a1, a2))
        | (Formula::Or(p1, p2), Formula::Or(a1, a2))
        | (Formula::Implies(p1, p2), Formula::Implies(a1, a2)) => {
            match_formula(p1, a1, bound, subst) && match_formula(p2, a2, bound, subst)
        }
        (Formula::Forall(x, pb), Formula::Forall(y, ab)) | (Formula::Exists(x, pb), Formula::Exists(y, ab)) => {
            bound.push((x.clone(), y.clone()));
            let ok = match_formula(pb, ab, bound, subst);
            bound.pop();
            ok
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dialogic::parse::{parse_formula, parse_term};
    use dialogic::translate::find_winning_strategy;

    fn start(text: &str) -> Match {
        let f = parse_formula(text).unwrap();
        let s = find_winning_strategy(&f, &SearchLimits::default()).unwrap();
        Match::new(f, s, SearchLimits::default())
    }

    #[test]
    fn simultaneous_substitution_swaps() {
        let mut s = BTreeMap::new();
        s.insert("v0".to_string(), Term::var("v1"));
        s.insert("v1".to_string(), Term::var("v0"));
        let f = parse_formula("a(v0, v1)").unwrap();
        assert_eq!(subst_formula(&f, &s), parse_formula("a(v1, v0)").unwrap());
    }

    #[test]
    fn matching_binds_new_variables_once() {
        let p = Move::defence(parse_formula("a(v0) & b(v0)").unwrap(), 3);
        let a = Move::defence(parse_formula("a(f(c())) & b(f(c()))").unwrap(), 3);
        let mut s = BTreeMap::new();
        assert!(match_move(&p, &a, &mut s));
        assert_eq!(s["v0"], parse_term("f(c())").unwrap());
        let bad = Move::defence(parse_formula("a(f(c())) & b(c())").unwrap(), 3);
        assert!(!match_move(&p, &bad, &mut BTreeMap::new()));
    }

    #[test]
    fn bound_variables_do_not_escape() {
        let p = Move::defence(parse_formula("forall y. a(v0, y)").unwrap(), 1);
        let a = Move::defence(parse_formula("forall z. a(z, z)").unwrap(), 1);
        assert!(!match_move(&p, &a, &mut BTreeMap::new()));
    }

    #[test]
    fn exotic_universal_term_still_loses_for_the_human() {
        let mut m = start("forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)");
        let exotic = parse_term("f(g(c(), c()))").unwrap();
        while m.status == Status::AwaitingHuman {
            m.play_choice(0, Some(&exotic)).unwrap();
        }
        assert_eq!(m.status, Status::FinishedPWin);
        assert_eq!(m.last_mode, Some(Mode::Strategy));
    }

    #[test]
    fn without_strategy_the_machine_still_moves() {
        let f = parse_formula("a -> b").unwrap();
        let mut m = Match::new(f, None, SearchLimits::default());
        assert_eq!(m.legal_moves().unwrap().len(), 1);
        m.play_choice(0, None).unwrap();
        assert_eq!(m.status, Status::FinishedOWin);
        assert!(m.legal_moves().is_err());
    }
}
