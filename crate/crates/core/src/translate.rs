//! Translations between strategic GKK derivations and winning strategies.
//!
//! A sequent `Γ ⊢ Δ` stands for a position where P is to move: `Γ` are the
//! opponent's assertions P may attack, `Δ` the formulas P may still assert.
//! Each right slot remembers why P may assert it.

use std::collections::BTreeSet;

use crate::dialogue::{AttackSymbol, Game, IllegalMove, Move, MoveContent};
use crate::formula::{first_fresh, Formula, Term};
use crate::gkk::{
    apply_rule, prove, prove_with, Active, Derivation, ProveOptions, Rule, SearchError, SearchLimits, Sequent, Side,
    StrategicFault, Violation,
};
use crate::strategy::{Strategy, StrategyNode, StrategyViolation};

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("the derivation does not prove a single goal formula")]
    NotGoal,
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("the derivation is not strategic: {0}")]
    NotStrategic(String),
    #[error("the strategy is not winning: {0}")]
    NotWinning(String),
    #[error(transparent)]
    Strategy(#[from] StrategyViolation),
    #[error("translation produced an illegal move: {0}")]
    Illegal(#[from] IllegalMove),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no strategic derivation found within the search limits")]
    NotFound,
}

type Result<T> = std::result::Result<T, TranslateError>;

/// Why P may assert a right formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    /// As a defence against the opponent attack at this index.
    Defence(usize),
    /// A retained existential: a fresh defence against this attack.
    Retained(usize),
    /// Just asserted by the proponent's latest move.
    Asserted,
}

fn without<T: Clone>(xs: &[T], i: usize) -> Vec<T> {
    let mut out = xs.to_vec();
    out.remove(i);
    out
}

fn with<T: Clone>(xs: &[T], extra: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut out = xs.to_vec();
    out.extend(extra);
    out
}

fn not_strategic(d: &Derivation, what: &str) -> TranslateError {
    TranslateError::NotStrategic(format!("{what} at `{}` ({})", d.conclusion, d.rule.name()))
}

/// Renames the eigenvariable `y` of a subtree to `w`, moving any existing
/// `w` out of the way first.
fn rename_eigen(d: &Derivation, y: &str, w: &str, g: &Game) -> Derivation {
    if y == w {
        return d.clone();
    }
    let vars = d.all_variables();
    let moved = if vars.contains(w) {
        let mut used = vars;
        used.extend(g.appearing_variables());
        used.insert(y.to_string());
        let z = first_fresh(&used);
        d.rename_var(w, &z)
    } else {
        d.clone()
    };
    moved.rename_var(y, w)
}

/// P's move at a position described by `d`, with its subtree.
fn p_move(d: &Derivation, g: &Game, left: &[usize], right: &[Origin]) -> Result<StrategyNode> {
    let m = g.len();
    let i = d.active.index;
    match d.active.side {
        Side::Right => {
            let x = &d.conclusion.right[i];
            match right[i] {
                Origin::Defence(e) => {
                    let mv = Move::defence(x.clone(), e);
                    let g2 = g.extend(mv.clone())?;
                    Ok(StrategyNode::new(mv, o_after_assert(d, &g2, left, right, i)?))
                }
                Origin::Retained(e) => {
                    let (Rule::ExR(t), Formula::Exists(v, a)) = (&d.rule, x) else {
                        return Err(not_strategic(d, "retained existential used by a rule other than ExR"));
                    };
                    let mv = Move::defence(a.substitute(v, t), e);
                    let g2 = g.extend(mv.clone())?;
                    let p = &d.premises[0];
                    let r2 = with(right, [Origin::Asserted]);
                    let slot = r2.len() - 1;
                    Ok(StrategyNode::new(mv, o_after_assert(p, &g2, left, &r2, slot)?))
                }
                Origin::Asserted => Err(not_strategic(d, "asserted formula left pending")),
            }
        }
        Side::Left => {
            let a = left[i];
            let f = &d.conclusion.left[i];
            let attack = |sym: AttackSymbol| Move::attack(sym, a);
            let answer = |g2: &Game, comp: Formula, prem: &Derivation| -> Result<StrategyNode> {
                let omv = Move::defence(comp, m);
                let g3 = g2.extend(omv.clone())?;
                let child = p_move(prem, &g3, &with(left, [m + 1]), right)?;
                Ok(StrategyNode::new(omv, vec![child]))
            };
            match (&d.rule, f) {
                (Rule::AndL1 | Rule::AndL2, Formula::And(l, r)) => {
                    let (sym, comp) = if d.rule == Rule::AndL1 {
                        (AttackSymbol::AndLeft, l)
                    } else {
                        (AttackSymbol::AndRight, r)
                    };
                    let mv = attack(sym);
                    let g2 = g.extend(mv.clone())?;
                    let o = answer(&g2, (**comp).clone(), &d.premises[0])?;
                    Ok(StrategyNode::new(mv, vec![o]))
                }
                (Rule::OrL, Formula::Or(l, r)) => {
                    let mv = attack(AttackSymbol::OrQuery);
                    let g2 = g.extend(mv.clone())?;
                    let mut children = vec![answer(&g2, (**l).clone(), &d.premises[0])?];
                    if l != r {
                        children.push(answer(&g2, (**r).clone(), &d.premises[1])?);
                    }
                    Ok(StrategyNode::new(mv, children))
                }
                (Rule::AllL(t), Formula::Forall(v, body)) => {
                    let mv = attack(AttackSymbol::ForallAt(t.clone()));
                    let g2 = g.extend(mv.clone())?;
                    let o = answer(&g2, body.substitute(v, t), &d.premises[0])?;
                    Ok(StrategyNode::new(mv, vec![o]))
                }
                (Rule::ExL(y), Formula::Exists(v, body)) => {
                    let mv = attack(AttackSymbol::ExistsQuery);
                    let g2 = g.extend(mv.clone())?;
                    let w = g2.fresh_variable();
                    let prem = rename_eigen(&d.premises[0], y, &w, &g2);
                    let o = answer(&g2, body.substitute(v, &Term::Var(w)), &prem)?;
                    Ok(StrategyNode::new(mv, vec![o]))
                }
                (Rule::ImpL, Formula::Implies(ant, cons)) => {
                    let mv = attack(AttackSymbol::FormulaAttack((**ant).clone()));
                    let g2 = g.extend(mv.clone())?;
                    let p1 = &d.premises[0];
                    let r1 = with(right, [Origin::Asserted]);
                    let mut children = o_after_assert(p1, &g2, left, &r1, r1.len() - 1)?;
                    children.push(answer(&g2, (**cons).clone(), &d.premises[1])?);
                    Ok(StrategyNode::new(mv, children))
                }
                _ => Err(not_strategic(d, "unexpected left rule")),
            }
        }
    }
}

/// Opponent replies after P asserted the right formula at `slot`; the game
/// `g` ends with that assertion.
fn o_after_assert(d: &Derivation, g: &Game, left: &[usize], right: &[Origin], slot: usize) -> Result<Vec<StrategyNode>> {
    let m = g.len() - 1;
    let mut right = right.to_vec();
    let mut slot = slot;
    if d.active.side != Side::Right {
        return Err(not_strategic(d, "asserted formula is not active"));
    }
    if d.active.index != slot {
        // an alpha-equal copy is active; let the copies trade places
        let k = d.active.index;
        if !d.conclusion.right[k].alpha_eq(&d.conclusion.right[slot]) {
            return Err(not_strategic(d, "asserted formula is not active"));
        }
        right.swap(k, slot);
        slot = k;
    }
    let x = &d.conclusion.right[slot];
    let rest = without(&right, slot);
    let o_attack = |sym: AttackSymbol, prem: &Derivation, new_right: Vec<Origin>| -> Result<StrategyNode> {
        let omv = Move::attack(sym, m);
        let g2 = g.extend(omv.clone())?;
        let new_left = match &omv.content {
            MoveContent::Attack(AttackSymbol::FormulaAttack(_)) => with(left, [m + 1]),
            _ => left.to_vec(),
        };
        let reply = p_move(prem, &g2, &new_left, &new_right)?;
        Ok(StrategyNode::new(omv, vec![reply]))
    };
    match (&d.rule, x) {
        (Rule::Id, _) => Ok(Vec::new()),
        (Rule::ImpR, Formula::Implies(a, _)) => Ok(vec![o_attack(
            AttackSymbol::FormulaAttack((**a).clone()),
            &d.premises[0],
            with(&rest, [Origin::Defence(m + 1)]),
        )?]),
        (Rule::AndR, Formula::And(..)) => Ok(vec![
            o_attack(AttackSymbol::AndLeft, &d.premises[0], with(&rest, [Origin::Defence(m + 1)]))?,
            o_attack(AttackSymbol::AndRight, &d.premises[1], with(&rest, [Origin::Defence(m + 1)]))?,
        ]),
        (Rule::OrR, Formula::Or(..)) => Ok(vec![o_attack(
            AttackSymbol::OrQuery,
            &d.premises[0],
            with(&rest, [Origin::Defence(m + 1), Origin::Defence(m + 1)]),
        )?]),
        (Rule::AllR(y), Formula::Forall(..)) => {
            let w = g.fresh_variable();
            let prem = rename_eigen(&d.premises[0], y, &w, g);
            Ok(vec![o_attack(
                AttackSymbol::ForallAt(Term::Var(w)),
                &prem,
                with(&rest, [Origin::Defence(m + 1)]),
            )?])
        }
        (Rule::ExR(t), Formula::Exists(v, a)) => {
            let omv = Move::attack(AttackSymbol::ExistsQuery, m);
            let g2 = g.extend(omv.clone())?;
            let pmv = Move::defence(a.substitute(v, t), m + 1);
            let g3 = g2.extend(pmv.clone())?;
            let mut r2 = right.clone();
            r2[slot] = Origin::Retained(m + 1);
            r2.push(Origin::Asserted);
            let slot2 = r2.len() - 1;
            let replies = o_after_assert(&d.premises[0], &g3, left, &r2, slot2)?;
            Ok(vec![StrategyNode::new(omv, vec![StrategyNode::new(pmv, replies)])])
        }
        _ => Err(not_strategic(d, "asserted formula is not decomposed by its right rule")),
    }
}

/// The winning strategy of a strategic derivation of `⊢ F`.
pub fn derivation_to_strategy(d: &Derivation) -> Result<Strategy> {
    if !d.conclusion.left.is_empty() || d.conclusion.right.len() != 1 {
        return Err(TranslateError::NotGoal);
    }
    let d = d.canonicalize()?;
    if let Some(v) = d.strategic_violation() {
        return Err(TranslateError::NotStrategic(format!("{:?} at node {:?}", v.fault, v.path)));
    }
    let root = d.conclusion.right[0].clone();
    let g = Game::new(root.clone());
    let children = o_after_assert(&d, &g, &[], &[Origin::Asserted], 0)?;
    Ok(Strategy::new(root, children))
}

/// Sequent labels collected at opponent nodes while reading a strategy.
#[derive(Default)]
struct Reader {
    labels: Vec<(Vec<usize>, Sequent)>,
}

fn missing(path: &[usize], what: &str) -> TranslateError {
    TranslateError::NotWinning(format!("{what} at node {path:?}"))
}

impl Reader {
    /// `node` is P's move at `path`; `g` is the game before it.
    fn from_p_turn(
        &mut self,
        node: &StrategyNode,
        path: &[usize],
        g: &Game,
        seq: &Sequent,
        left: &[usize],
        right: &[Origin],
    ) -> Result<Derivation> {
        self.labels.push((path[..path.len() - 1].to_vec(), seq.clone()));
        let m = g.len();
        let g2 = g.extend(node.mv.clone())?;
        let node_err = |what: &str| missing(path, what);
        let e = node.mv.enabler.ok_or_else(|| node_err("move without enabler"))?;
        match &node.mv.content {
            MoveContent::Attack(sym) => {
                let i = left.iter().position(|&a| a == e).ok_or_else(|| node_err("attack on an unknown assertion"))?;
                let f = &seq.left[i];
                let o_defence = |c: &StrategyNode| matches!(c.mv.content, MoveContent::Defence(_));
                let (rule, premises) = match (sym, f) {
                    (AttackSymbol::AndLeft, _) => (Rule::AndL1, None),
                    (AttackSymbol::AndRight, _) => (Rule::AndL2, None),
                    (AttackSymbol::OrQuery, _) => (Rule::OrL, None),
                    (AttackSymbol::ForallAt(t), _) => (Rule::AllL(t.clone()), None),
                    (AttackSymbol::ExistsQuery, Formula::Exists(v, body)) => {
                        let c = node.children.iter().find(|c| o_defence(c)).ok_or_else(|| node_err("no defence"))?;
                        let def = c.mv.asserted().expect("defence");
                        let eigen = match body.match_instance(v, def) {
                            Some(Some(Term::Var(w))) => w,
                            Some(None) => {
                                let mut used = g2.appearing_variables();
                                used.extend(seq.all_variables());
                                first_fresh(&used)
                            }
                            _ => return Err(node_err("existential defence is not a fresh variable")),
                        };
                        (Rule::ExL(eigen), None)
                    }
                    (AttackSymbol::FormulaAttack(_), Formula::Implies(..)) => {
                        let prem = apply_rule(seq, &Rule::ImpL, Active::left(i)).map_err(|e| node_err(&e.to_string()))?;
                        let c = node.children.iter().enumerate().find(|(_, c)| o_defence(c));
                        let (k, c) = c.ok_or_else(|| node_err("no defence of the implication"))?;
                        let attacks: Vec<(usize, &StrategyNode)> =
                            node.children.iter().enumerate().filter(|(_, c)| c.mv.is_attack()).collect();
                        let r1 = with(right, [Origin::Asserted]);
                        let d1 = self.from_p_assert(&attacks, path, &g2, &prem[0], left, &r1, r1.len() - 1)?;
                        let d2 = self.o_reply(c, &with(path, [k]), &g2, &prem[1], &with(left, [m + 1]), right)?;
                        (Rule::ImpL, Some(vec![d1, d2]))
                    }
                    _ => return Err(node_err("attack does not fit the attacked formula")),
                };
                if let Some(ps) = premises {
                    return Ok(Derivation::new(seq.clone(), rule, Active::left(i), ps));
                }
                let prems = apply_rule(seq, &rule, Active::left(i)).map_err(|e| node_err(&e.to_string()))?;
                let mut ds = Vec::new();
                for p in &prems {
                    let added = p.left.last().expect("left rules add a formula");
                    let (k, c) = node
                        .children
                        .iter()
                        .enumerate()
                        .find(|(_, c)| c.mv.asserted().is_some_and(|f| f.alpha_eq(added)))
                        .ok_or_else(|| node_err("opponent defence not covered"))?;
                    ds.push(self.o_reply(c, &with(path, [k]), &g2, p, &with(left, [m + 1]), right)?);
                }
                Ok(Derivation::new(seq.clone(), rule, Active::left(i), ds))
            }
            MoveContent::Defence(x) => {
                let children: Vec<(usize, &StrategyNode)> = node.children.iter().enumerate().collect();
                if let Some(j) = (0..right.len()).find(|&j| right[j] == Origin::Defence(e) && seq.right[j].alpha_eq(x)) {
                    return self.from_p_assert(&children, path, &g2, seq, left, right, j);
                }
                for j in 0..right.len() {
                    if right[j] != Origin::Retained(e) {
                        continue;
                    }
                    let Formula::Exists(v, body) = &seq.right[j] else { continue };
                    let Some(t) = body.match_instance(v, x) else { continue };
                    let t = t.unwrap_or_else(|| Term::Var(v.clone()));
                    let rule = Rule::ExR(t);
                    let prem = apply_rule(seq, &rule, Active::right(j)).map_err(|e| node_err(&e.to_string()))?;
                    let r2 = with(right, [Origin::Asserted]);
                    let d1 = self.from_p_assert(&children, path, &g2, &prem[0], left, &r2, r2.len() - 1)?;
                    return Ok(Derivation::new(seq.clone(), rule, Active::right(j), vec![d1]));
                }
                Err(node_err("defence of a formula that is not pending"))
            }
        }
    }

    /// The opponent move `o` at `path` and P's reply below it.
    fn o_reply(
        &mut self,
        o: &StrategyNode,
        path: &[usize],
        g: &Game,
        seq: &Sequent,
        left: &[usize],
        right: &[Origin],
    ) -> Result<Derivation> {
        let g2 = g.extend(o.mv.clone())?;
        let reply = o.children.first().ok_or_else(|| missing(path, "opponent move left unanswered"))?;
        self.from_p_turn(reply, &with(path, [0]), &g2, seq, left, right)
    }

    /// P has just asserted `seq.right[slot]` (the last move of `g`); `children`
    /// are the opponent replies to it, with their indices under `path`.
    #[allow(clippy::too_many_arguments)]
    fn from_p_assert(
        &mut self,
        children: &[(usize, &StrategyNode)],
        path: &[usize],
        g: &Game,
        seq: &Sequent,
        left: &[usize],
        right: &[Origin],
        slot: usize,
    ) -> Result<Derivation> {
        let m = g.len() - 1;
        let x = &seq.right[slot];
        let node_err = |what: &str| missing(path, what);
        let rest = without(right, slot);
        let find = |pred: &dyn Fn(&AttackSymbol) -> bool| {
            children
                .iter()
                .find(|(_, c)| c.mv.enabler == Some(m) && c.mv.symbol().is_some_and(pred))
                .copied()
                .ok_or_else(|| node_err("opponent attack not covered"))
        };
        let mk = |rule: Rule, ds: Vec<Derivation>| Derivation::new(seq.clone(), rule, Active::right(slot), ds);
        let prems = |rule: &Rule| apply_rule(seq, rule, Active::right(slot)).map_err(|e| node_err(&e.to_string()));
        match x {
            _ if x.is_atomic() => {
                prems(&Rule::Id)?;
                Ok(mk(Rule::Id, Vec::new()))
            }
            Formula::Implies(..) => {
                let (k, c) = find(&|s| matches!(s, AttackSymbol::FormulaAttack(_)))?;
                let p = prems(&Rule::ImpR)?;
                let d = self.o_reply(c, &with(path, [k]), g, &p[0], &with(left, [m + 1]), &with(&rest, [Origin::Defence(m + 1)]))?;
                Ok(mk(Rule::ImpR, vec![d]))
            }
            Formula::And(..) => {
                let p = prems(&Rule::AndR)?;
                let mut ds = Vec::new();
                for (sym, prem) in [AttackSymbol::AndLeft, AttackSymbol::AndRight].iter().zip(&p) {
                    let (k, c) = find(&|s| s == sym)?;
                    ds.push(self.o_reply(c, &with(path, [k]), g, prem, left, &with(&rest, [Origin::Defence(m + 1)]))?);
                }
                Ok(mk(Rule::AndR, ds))
            }
            Formula::Or(..) => {
                let (k, c) = find(&|s| *s == AttackSymbol::OrQuery)?;
                let p = prems(&Rule::OrR)?;
                let r2 = with(&rest, [Origin::Defence(m + 1), Origin::Defence(m + 1)]);
                let d = self.o_reply(c, &with(path, [k]), g, &p[0], left, &r2)?;
                Ok(mk(Rule::OrR, vec![d]))
            }
            Formula::Forall(..) => {
                let (k, c) = find(&|s| matches!(s, AttackSymbol::ForallAt(_)))?;
                let Some(AttackSymbol::ForallAt(Term::Var(w))) = c.mv.symbol() else {
                    return Err(node_err("universal attack is not a variable"));
                };
                let rule = Rule::AllR(w.clone());
                let p = prems(&rule)?;
                let d = self.o_reply(c, &with(path, [k]), g, &p[0], left, &with(&rest, [Origin::Defence(m + 1)]))?;
                Ok(mk(rule, vec![d]))
            }
            Formula::Exists(v, body) => {
                let (k, c) = find(&|s| *s == AttackSymbol::ExistsQuery)?;
                let opath = with(path, [k]);
                self.labels.push((opath.clone(), seq.clone()));
                let g2 = g.extend(c.mv.clone())?;
                let reply = c.children.first().ok_or_else(|| missing(&opath, "opponent move left unanswered"))?;
                let def = match &reply.mv.content {
                    MoveContent::Defence(f) if reply.mv.enabler == Some(m + 1) => f,
                    _ => return Err(missing(&opath, "existential attack not answered by a defence")),
                };
                let t = body
                    .match_instance(v, def)
                    .ok_or_else(|| missing(&opath, "defence is not an instance"))?
                    .unwrap_or_else(|| Term::Var(v.clone()));
                let rule = Rule::ExR(t);
                let p = prems(&rule)?;
                let g3 = g2.extend(reply.mv.clone())?;
                let mut r2 = right.to_vec();
                r2[slot] = Origin::Retained(m + 1);
                r2.push(Origin::Asserted);
                let grand: Vec<(usize, &StrategyNode)> = reply.children.iter().enumerate().collect();
                let d = self.from_p_assert(&grand, &with(&opath, [0]), &g3, &p[0], left, &r2, r2.len() - 1)?;
                Ok(mk(rule, vec![d]))
            }
            _ => unreachable!("atoms handled above"),
        }
    }
}

fn read_strategy(s: &Strategy) -> Result<(Derivation, Vec<(Vec<usize>, Sequent)>)> {
    s.validate()?;
    if let Some(p) = s.losing_leaf() {
        return Err(missing(&p, "branch not won by the proponent"));
    }
    let mut reader = Reader::default();
    let seq = Sequent::goal(s.root_formula.clone());
    reader.labels.push((Vec::new(), seq.clone()));
    let g = Game::new(s.root_formula.clone());
    let children: Vec<(usize, &StrategyNode)> = s.root.children.iter().enumerate().collect();
    let d = reader.from_p_assert(&children, &[], &g, &seq, &[], &[Origin::Asserted], 0)?;
    Ok((d, reader.labels))
}

/// The strategic derivation read off a winning strategy.
pub fn strategy_to_derivation(s: &Strategy) -> Result<Derivation> {
    let (d, _) = read_strategy(s)?;
    d.validate()?;
    Ok(d)
}

/// A strategy's opponent nodes labelled by the sequent P faces there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OProjection {
    /// Path of the opponent node in the strategy (empty for the root).
    pub path: Vec<usize>,
    pub mv: Option<Move>,
    pub sequent: Sequent,
    pub children: Vec<OProjection>,
}

impl OProjection {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(OProjection::size).sum::<usize>()
    }

    fn nodes(&self) -> Vec<&OProjection> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }
}

pub fn label_sequents(s: &Strategy) -> Result<OProjection> {
    let (_, mut labels) = read_strategy(s)?;
    labels.sort_by(|a, b| a.0.cmp(&b.0));
    labels.dedup_by(|a, b| a.0 == b.0);
    fn build(s: &Strategy, labels: &[(Vec<usize>, Sequent)], at: usize) -> OProjection {
        let (path, seq) = &labels[at];
        let mut children = Vec::new();
        for (j, (p, _)) in labels.iter().enumerate() {
            if j == at || !p.starts_with(path) || p.len() <= path.len() {
                continue;
            }
            let nearest = labels
                .iter()
                .filter(|(q, _)| q.len() < p.len() && p.starts_with(q))
                .map(|(q, _)| q.len())
                .max();
            if nearest == Some(path.len()) {
                children.push(build(s, labels, j));
            }
        }
        OProjection {
            path: path.clone(),
            mv: (!path.is_empty()).then(|| s.node(path).expect("labelled path").mv.clone()),
            sequent: seq.clone(),
            children,
        }
    }
    Ok(build(s, &labels, 0))
}

/// Opponent quantifier moves whose variable is free in the parent label.
pub fn fresh_variable_violations(s: &Strategy) -> Result<Vec<String>> {
    let proj = label_sequents(s)?;
    let mut out = Vec::new();
    for parent in proj.nodes() {
        let free = parent.sequent.free_variables();
        for c in &parent.children {
            let g = s.game_at(&c.path).expect("labelled path");
            let before = s.game_at(&c.path[..c.path.len() - 1]).expect("prefix");
            let Some(mv) = &c.mv else { continue };
            let introduced: BTreeSet<String> = match &mv.content {
                MoveContent::Attack(AttackSymbol::ForallAt(t)) => {
                    let mut vs = BTreeSet::new();
                    t.variables(&mut vs);
                    vs
                }
                MoveContent::Defence(_) => {
                    let all = g.appearing_variables();
                    all.difference(&before.appearing_variables()).cloned().collect()
                }
                _ => BTreeSet::new(),
            };
            for w in introduced.intersection(&free) {
                out.push(format!("`{w}` at node {:?} is free in `{}`", c.path, parent.sequent));
            }
        }
    }
    Ok(out)
}

/// Child-label formulas that are not Gentzen subformulas of the parent label.
pub fn subformula_violations(s: &Strategy) -> Result<Vec<String>> {
    let proj = label_sequents(s)?;
    let mut out = Vec::new();
    for parent in proj.nodes() {
        let hosts: Vec<&Formula> = parent.sequent.left.iter().chain(&parent.sequent.right).collect();
        for c in &parent.children {
            for f in c.sequent.left.iter().chain(&c.sequent.right) {
                if !hosts.iter().any(|h| f.is_gentzen_subformula_of(h)) {
                    out.push(format!("`{f}` at node {:?}", c.path));
                }
            }
        }
    }
    Ok(out)
}

/// Finds a winning strategy for `f` by strategic proof search.
pub fn find_winning_strategy(f: &Formula, limits: &SearchLimits) -> Result<Option<Strategy>> {
    let Some(d) = prove(&Sequent::goal(f.clone()), limits)? else {
        return Ok(None);
    };
    let s = derivation_to_strategy(&d)?;
    s.validate()?;
    Ok(Some(s))
}

/// Right slot index after `d`'s rule, for a slot not consumed by it.
fn slot_in_premise(d: &Derivation, slot: usize) -> usize {
    let consumes = matches!(d.rule, Rule::ImpR | Rule::AndR | Rule::OrR | Rule::AllR(_)) && d.active.side == Side::Right;
    if consumes && slot > d.active.index {
        slot - 1
    } else {
        slot
    }
}

/// `d` (canonical) with right slot `slot` removed, re-introducing it by
/// ExR(t) on the existential at `ex` exactly where it becomes active.
fn lift_exr(d: &Derivation, slot: usize, ex: usize, t: &Term) -> Derivation {
    let seq = Sequent::new(d.conclusion.left.clone(), without(&d.conclusion.right, slot));
    let ex_here = if ex > slot { ex - 1 } else { ex };
    if d.active.side == Side::Right && d.active.index == slot {
        let node = d.clone();
        return Derivation::new(seq, Rule::ExR(t.clone()), Active::right(ex_here), vec![node]);
    }
    let active = if d.active.side == Side::Right && d.active.index > slot {
        Active::right(d.active.index - 1)
    } else {
        d.active
    };
    let premises = d
        .premises
        .iter()
        .map(|p| {
            let s2 = slot_in_premise(d, slot);
            let e2 = slot_in_premise(d, ex);
            lift_exr(p, s2, e2, t)
        })
        .collect();
    Derivation::new(seq, d.rule.clone(), active, premises)
}

/// Whether right slot `slot` is ever active in `d`.
fn slot_used(d: &Derivation, slot: usize) -> bool {
    if d.active.side == Side::Right && d.active.index == slot {
        return true;
    }
    d.premises.iter().any(|p| slot_used(p, slot_in_premise(d, slot)))
}

/// `d` (canonical) with an unused right slot removed.
fn drop_slot(d: &Derivation, slot: usize) -> Derivation {
    let seq = Sequent::new(d.conclusion.left.clone(), without(&d.conclusion.right, slot));
    let active = if d.active.side == Side::Right && d.active.index > slot {
        Active::right(d.active.index - 1)
    } else {
        d.active
    };
    let premises = d.premises.iter().map(|p| drop_slot(p, slot_in_premise(d, slot))).collect();
    Derivation::new(seq, d.rule.clone(), active, premises)
}

fn replace_at(d: &Derivation, path: &[usize], new: Derivation) -> Derivation {
    match path.split_first() {
        None => new,
        Some((&i, rest)) => {
            let mut out = d.clone();
            out.premises[i] = replace_at(&d.premises[i], rest, new);
            out
        }
    }
}

/// Turns a valid derivation into a strategic one of the same sequent:
/// misplaced existential instances are moved up to where they are used,
/// unused implication antecedents are dropped, and anything else is left
/// to proof search seeded with the derivation's instantiation terms.
pub fn strategize(d: &Derivation, limits: &SearchLimits) -> Result<Derivation> {
    let mut cur = d.canonicalize()?;
    for _ in 0..=cur.size() * 4 {
        let Some(v) = cur.strategic_violation() else {
            return Ok(cur);
        };
        let node = cur.node(&v.path).expect("violation path");
        let fixed = match v.fault {
            StrategicFault::ExRPremise => {
                let Rule::ExR(t) = &node.rule else { unreachable!() };
                let p = &node.premises[0];
                let slot = p.conclusion.right.len() - 1;
                lift_exr(p, slot, node.active.index, t)
            }
            StrategicFault::ImpLLeftPremise => {
                let p = &node.premises[0];
                let slot = p.conclusion.right.len() - 1;
                if slot_used(p, slot) {
                    break;
                }
                drop_slot(p, slot)
            }
        };
        cur = replace_at(&cur, &v.path, fixed).canonicalize()?;
    }
    if cur.is_strategic() {
        return Ok(cur);
    }
    let options = ProveOptions {
        seeds: d.instantiation_terms(),
        ..ProveOptions::default()
    };
    prove_with(&d.conclusion, limits, &options)?.ok_or(TranslateError::NotFound)
}

/// The sequent P faces in `g` (P to move), with the slot bookkeeping needed
/// to continue as a strategy.
fn position(g: &Game) -> (Sequent, Vec<usize>, Vec<Origin>) {
    let mut seq = Sequent::default();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, m) in g.moves().iter().enumerate() {
        if i % 2 == 1 {
            if let Some(f) = m.asserted() {
                seq.left.push(f.clone());
                left.push(i);
            }
            let Some(sym) = m.symbol() else { continue };
            let a = m.enabler.expect("attacks have enablers");
            let target = g.moves()[a].asserted().expect("justified");
            let pending: Vec<Formula> = match (target, sym) {
                (Formula::Exists(..), _) => {
                    seq.right.push(target.clone());
                    right.push(Origin::Retained(i));
                    continue;
                }
                (Formula::Implies(_, b), _) => vec![(**b).clone()],
                (Formula::And(l, _), AttackSymbol::AndLeft) => vec![(**l).clone()],
                (Formula::And(_, r), _) => vec![(**r).clone()],
                (Formula::Or(l, r), _) => vec![(**l).clone(), (**r).clone()],
                (Formula::Forall(v, body), AttackSymbol::ForallAt(t)) => vec![body.substitute(v, t)],
                _ => Vec::new(),
            };
            for f in pending {
                if g.is_legal(&Move::defence(f.clone(), i)) {
                    seq.right.push(f);
                    right.push(Origin::Defence(i));
                }
            }
        }
    }
    (seq, left, right)
}

/// The sequent P faces at a position where P is to move.
pub fn position_sequent(g: &Game) -> Sequent {
    position(g).0
}

/// A winning continuation for P from `g` (P to move), found by proof search
/// on the position sequent.
pub fn continuation(g: &Game, limits: &SearchLimits) -> Result<Option<StrategyNode>> {
    let (seq, left, right) = position(g);
    let Some(d) = prove(&seq, limits)? else {
        return Ok(None);
    };
    let d = d.canonicalize()?;
    // canonical order keeps the slot order of the conclusion, so the
    // bookkeeping above lines up with the derivation
    match p_move(&d, g, &left, &right) {
        Ok(n) => Ok(Some(n)),
        Err(TranslateError::Illegal(_)) | Err(TranslateError::NotStrategic(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkk::tests::exists_counterexample;
    use crate::parse::{parse_formula, parse_sequent};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn limits() -> SearchLimits {
        SearchLimits::default()
    }

    const FIGURE: [&str; 3] = [
        "forall x. a(x) | exists x. ~a(x)",
        "exists x. (a(x) -> forall y. a(y))",
        "forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)",
    ];

    #[test]
    fn figure_formulas_have_winning_strategies() {
        for text in FIGURE {
            let s = find_winning_strategy(&f(text), &limits()).unwrap().unwrap();
            assert_eq!(s.validate(), Ok(()), "{text}");
            assert!(s.is_winning(), "{text}");
            assert!(fresh_variable_violations(&s).unwrap().is_empty(), "{text}");
            assert!(subformula_violations(&s).unwrap().is_empty(), "{text}");
        }
    }

    #[test]
    fn left_figure_strategy_is_the_linear_game() {
        let s = find_winning_strategy(&f(FIGURE[0]), &limits()).unwrap().unwrap();
        let branches = s.branches();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].len(), 9);
    }

    #[test]
    fn round_trip_preserves_strategies() {
        for text in FIGURE.iter().copied().chain(["a & b -> b & a", "((a -> b) -> a) -> a", "a | ~a"]) {
            let s = find_winning_strategy(&f(text), &limits()).unwrap().unwrap();
            let d = strategy_to_derivation(&s).unwrap();
            assert!(d.is_strategic(), "{text}");
            let s2 = derivation_to_strategy(&d).unwrap();
            assert!(s.isomorphic(&s2), "{text}");
        }
    }

    #[test]
    fn labels_start_at_the_goal() {
        let s = find_winning_strategy(&f("a -> a"), &limits()).unwrap().unwrap();
        let p = label_sequents(&s).unwrap();
        assert_eq!(p.sequent, parse_sequent("|- a -> a").unwrap());
        assert_eq!(p.children.len(), 1);
        assert_eq!(p.children[0].sequent, parse_sequent("a |- a").unwrap());
    }

    #[test]
    fn existential_counterexample_is_rejected_then_repaired() {
        let d = exists_counterexample();
        let goal = Derivation::new(
            Sequent::goal(f("forall x. c(x) -> exists x. c(x)")),
            Rule::ImpR,
            Active::right(0),
            vec![d.clone()],
        );
        assert!(matches!(derivation_to_strategy(&goal), Err(TranslateError::NotStrategic(_))));
        let fixed = strategize(&d, &limits()).unwrap();
        assert!(fixed.is_strategic());
        assert!(fixed.validate().is_ok());
        assert_eq!(fixed.rule, Rule::AllL(Term::var("x")));
    }

    #[test]
    fn continuation_from_a_position() {
        let g = Game::new(f("a & b -> b & a"))
            .extend(Move::attack(AttackSymbol::FormulaAttack(f("a & b")), 0))
            .unwrap();
        let n = continuation(&g, &limits()).unwrap().unwrap();
        assert!(g.is_legal(&n.mv));
    }
}
