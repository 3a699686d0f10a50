//! Proponent strategies as trees of moves, their validation and comparison.

use std::collections::BTreeMap;

use crate::dialogue::{AttackSymbol, Game, Move, MoveContent, Player, Winner};
use crate::formula::{Formula, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyNode {
    pub mv: Move,
    pub children: Vec<StrategyNode>,
}

impl StrategyNode {
    pub fn new(mv: Move, children: Vec<StrategyNode>) -> StrategyNode {
        StrategyNode { mv, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(StrategyNode::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(StrategyNode::height).max().unwrap_or(0)
    }
}

/// A strategy for P on `root_formula`; `root` is the opening move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub root_formula: Formula,
    pub root: StrategyNode,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("at strategy node {path:?}: {reason}")]
pub struct StrategyViolation {
    pub path: Vec<usize>,
    pub reason: String,
}

/// Move equality with formulas compared up to bound-variable renaming.
pub fn same_move(a: &Move, b: &Move) -> bool {
    a.enabler == b.enabler
        && match (&a.content, &b.content) {
            (MoveContent::Defence(f), MoveContent::Defence(g)) => f.alpha_eq(g),
            (MoveContent::Attack(AttackSymbol::FormulaAttack(f)), MoveContent::Attack(AttackSymbol::FormulaAttack(g))) => {
                f.alpha_eq(g)
            }
            (MoveContent::Attack(s), MoveContent::Attack(t)) => s == t,
            _ => false,
        }
}

impl Strategy {
    pub fn new(root_formula: Formula, children: Vec<StrategyNode>) -> Strategy {
        Strategy {
            root: StrategyNode::new(Game::new(root_formula.clone()).moves()[0].clone(), children),
            root_formula,
        }
    }

    pub fn node(&self, path: &[usize]) -> Option<&StrategyNode> {
        let mut n = &self.root;
        for &i in path {
            n = n.children.get(i)?;
        }
        Some(n)
    }

    /// The game played along `path` (inclusive of the node at its end).
    pub fn game_at(&self, path: &[usize]) -> Option<Game> {
        let mut g = Game::new(self.root_formula.clone());
        let mut n = &self.root;
        for &i in path {
            n = n.children.get(i)?;
            g = g.extend(n.mv.clone()).ok()?;
        }
        Some(g)
    }

    /// Checks that every branch is a game, that P nodes are answered by all
    /// opponent moves (canonical fresh variable for quantifier choices), and
    /// that O nodes have at most one reply.
    pub fn validate(&self) -> Result<(), StrategyViolation> {
        let g = Game::new(self.root_formula.clone());
        if !same_move(&self.root.mv, &g.moves()[0]) {
            return Err(StrategyViolation {
                path: vec![],
                reason: "the root must assert the formula".into(),
            });
        }
        validate_node(&self.root, &g, &mut Vec::new())
    }

    /// Valid, and every maximal branch is won by P.
    pub fn is_winning(&self) -> bool {
        self.validate().is_ok() && self.losing_leaf().is_none()
    }

    /// Path to some leaf whose game P does not win.
    pub fn losing_leaf(&self) -> Option<Vec<usize>> {
        fn walk(n: &StrategyNode, g: &Game, path: &mut Vec<usize>) -> Option<Vec<usize>> {
            if n.children.is_empty() {
                return (g.winner(&g.term_universe()) != Winner::P).then(|| path.clone());
            }
            for (i, c) in n.children.iter().enumerate() {
                let Ok(g2) = g.extend(c.mv.clone()) else {
                    return Some(path.clone());
                };
                path.push(i);
                if let Some(p) = walk(c, &g2, path) {
                    return Some(p);
                }
                path.pop();
            }
            None
        }
        walk(&self.root, &Game::new(self.root_formula.clone()), &mut Vec::new())
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Every maximal branch as a game.
    pub fn branches(&self) -> Vec<Game> {
        fn walk(n: &StrategyNode, g: Game, out: &mut Vec<Game>) {
            if n.children.is_empty() {
                out.push(g);
                return;
            }
            for c in &n.children {
                if let Ok(g2) = g.extend(c.mv.clone()) {
                    walk(c, g2, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, Game::new(self.root_formula.clone()), &mut out);
        out
    }

    /// Same tree up to child order and a consistent renaming of the
    /// variables introduced along each branch.
    pub fn isomorphic(&self, other: &Strategy) -> bool {
        self.root_formula.alpha_eq(&other.root_formula)
            && iso(&self.root, &other.root, &Renaming::default())
    }
}

fn validate_node(n: &StrategyNode, g: &Game, path: &mut Vec<usize>) -> Result<(), StrategyViolation> {
    let fail = |path: &Vec<usize>, reason: String| StrategyViolation {
        path: path.clone(),
        reason,
    };
    let index = g.len() - 1;
    let mut games = Vec::with_capacity(n.children.len());
    for (i, c) in n.children.iter().enumerate() {
        path.push(i);
        let g2 = g.extend(c.mv.clone()).map_err(|e| fail(path, e.to_string()))?;
        path.pop();
        games.push(g2);
    }
    match Player::of_index(index) {
        Player::Proponent => {
            let canonical = g.canonical_opponent_moves();
            for (i, c) in n.children.iter().enumerate() {
                if !canonical.iter().any(|m| same_move(&c.mv, m)) {
                    let fresh = g.fresh_variable();
                    let reason = if g.is_legal(&c.mv) {
                        format!("child {i} `{}` must use the first fresh variable `{fresh}`", c.mv)
                    } else {
                        format!("child {i} `{}` is not a legal opponent move", c.mv)
                    };
                    return Err(fail(path, reason));
                }
                if n.children[..i].iter().any(|d| same_move(&c.mv, &d.mv)) {
                    return Err(fail(path, format!("child {i} `{}` is repeated", c.mv)));
                }
            }
            for m in &canonical {
                if !n.children.iter().any(|c| same_move(&c.mv, m)) {
                    return Err(fail(path, format!("opponent move `{m}` is not covered")));
                }
            }
        }
        Player::Opponent => {
            if n.children.len() > 1 {
                return Err(fail(path, "an opponent move has more than one reply".into()));
            }
            if n.mv.symbol() == Some(&AttackSymbol::ExistsQuery) {
                if let Some(c) = n.children.first() {
                    if c.mv.is_attack() || c.mv.enabler != Some(index) {
                        return Err(fail(path, "an existential attack must be answered by its defence".into()));
                    }
                }
            }
        }
    }
    for (i, (c, g2)) in n.children.iter().zip(&games).enumerate() {
        path.push(i);
        validate_node(c, g2, path)?;
        path.pop();
    }
    Ok(())
}

/// Partial bijection between the variables of two strategies.
#[derive(Clone, Debug, Default)]
struct Renaming {
    map: BTreeMap<String, String>,
    back: BTreeMap<String, String>,
}

impl Renaming {
    fn bind(&mut self, a: &str, b: &str) -> bool {
        match (self.map.get(a), self.back.get(b)) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => {
                self.map.insert(a.to_string(), b.to_string());
                self.back.insert(b.to_string(), a.to_string());
                true
            }
            _ => false,
        }
    }
}

fn iso_term(a: &Term, b: &Term, r: &mut Renaming) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => r.bind(x, y),
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| iso_term(x, y, r))
        }
        _ => false,
    }
}

fn iso_formula(a: &Formula, b: &Formula, bound: &mut Vec<(String, String)>, r: &mut Renaming) -> bool {
    fn term(a: &Term, b: &Term, bound: &[(String, String)], r: &mut Renaming) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let bx = bound.iter().rev().find(|(p, _)| p == x);
                let by = bound.iter().rev().find(|(_, q)| q == y);
                match (bx, by) {
                    (Some(p), Some(q)) => std::ptr::eq(p, q),
                    (None, None) => r.bind(x, y),
                    _ => false,
                }
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term(x, y, bound, r))
            }
            _ => false,
        }
    }
    match (a, b) {
        (Formula::Atom(p, xs), Formula::Atom(q, ys)) => {
            p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term(x, y, bound, r))
        }
        (Formula::Bottom, Formula::Bottom) => true,
        (Formula::And(a1, a2), Formula::And(b1, b2))
        | (Formula::Or(a1, a2), Formula::Or(b1, b2))
        | (Formula::Implies(a1, a2), Formula::Implies(b1, b2)) => {
            iso_formula(a1, b1, bound, r) && iso_formula(a2, b2, bound, r)
        }
        (Formula::Forall(x, a1), Formula::Forall(y, b1)) | (Formula::Exists(x, a1), Formula::Exists(y, b1)) => {
            bound.push((x.clone(), y.clone()));
            let ok = iso_formula(a1, b1, bound, r);
            bound.pop();
            ok
        }
        _ => false,
    }
}

fn iso_move(a: &Move, b: &Move, r: &mut Renaming) -> bool {
    if a.enabler != b.enabler {
        return false;
    }
    match (&a.content, &b.content) {
        (MoveContent::Defence(f), MoveContent::Defence(g))
        | (MoveContent::Attack(AttackSymbol::FormulaAttack(f)), MoveContent::Attack(AttackSymbol::FormulaAttack(g))) => {
            iso_formula(f, g, &mut Vec::new(), r)
        }
        (MoveContent::Attack(AttackSymbol::ForallAt(s)), MoveContent::Attack(AttackSymbol::ForallAt(t))) => iso_term(s, t, r),
        (MoveContent::Attack(s), MoveContent::Attack(t)) => s == t,
        _ => false,
    }
}

fn iso(a: &StrategyNode, b: &StrategyNode, parent: &Renaming) -> bool {
    let mut r = parent.clone();
    if !iso_move(&a.mv, &b.mv, &mut r) || a.children.len() != b.children.len() {
        return false;
    }
    match_children(&a.children, &b.children, &mut vec![false; b.children.len()], &r)
}

fn match_children(xs: &[StrategyNode], ys: &[StrategyNode], used: &mut Vec<bool>, r: &Renaming) -> bool {
    let Some((x, rest)) = xs.split_first() else {
        return true;
    };
    for (j, y) in ys.iter().enumerate() {
        if used[j] || !iso(x, y, r) {
            continue;
        }
        used[j] = true;
        if match_children(rest, ys, used, r) {
            return true;
        }
        used[j] = false;
    }
    false
}
