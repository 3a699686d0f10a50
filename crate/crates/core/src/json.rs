//! JSON wire formats for games, strategies and derivations.
//!
//! Formulas and terms travel as strings in the concrete syntax of
//! [`crate::parse`].

use serde::{Deserialize, Serialize};

use crate::dialogue::{AttackSymbol, Game, IllegalMove, Move, MoveContent};
use crate::formula::{Formula, Term};
use crate::gkk::{Active, Derivation, Rule, Sequent, Side};
use crate::parse::{parse_formula, parse_term, ParseError};
use crate::strategy::{Strategy, StrategyNode};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in {context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Schema(String),
    #[error("move {index}: {source}")]
    Illegal {
        index: usize,
        #[source]
        source: IllegalMove,
    },
}

fn formula(text: &str, context: &str) -> Result<Formula, FormatError> {
    parse_formula(text).map_err(|source| FormatError::Parse {
        context: format!("{context} `{text}`"),
        source,
    })
}

fn term(text: &str, context: &str) -> Result<Term, FormatError> {
    parse_term(text).map_err(|source| FormatError::Parse {
        context: format!("{context} `{text}`"),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContentJson {
    Formula(String),
    Attack(AttackJson),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveJson {
    pub polarity: String,
    pub content: ContentJson,
    pub enabler: Option<usize>,
}

impl From<&AttackSymbol> for AttackJson {
    fn from(s: &AttackSymbol) -> AttackJson {
        let (kind, term, formula) = match s {
            AttackSymbol::AndLeft => ("and1", None, None),
            AttackSymbol::AndRight => ("and2", None, None),
            AttackSymbol::OrQuery => ("or", None, None),
            AttackSymbol::ForallAt(t) => ("forall", Some(t.to_string()), None),
            AttackSymbol::ExistsQuery => ("exists", None, None),
            AttackSymbol::FormulaAttack(f) => ("formula", None, Some(f.to_string())),
        };
        AttackJson {
            kind: kind.into(),
            term,
            formula,
        }
    }
}

impl AttackJson {
    pub fn to_symbol(&self) -> Result<AttackSymbol, FormatError> {
        let need = |x: &Option<String>, what: &str| {
            x.clone()
                .ok_or_else(|| FormatError::Schema(format!("attack kind `{}` needs a `{what}` field", self.kind)))
        };
        Ok(match self.kind.as_str() {
            "and1" => AttackSymbol::AndLeft,
            "and2" => AttackSymbol::AndRight,
            "or" => AttackSymbol::OrQuery,
            "exists" => AttackSymbol::ExistsQuery,
            "forall" => AttackSymbol::ForallAt(term(&need(&self.term, "term")?, "attack term")?),
            "formula" => AttackSymbol::FormulaAttack(formula(&need(&self.formula, "formula")?, "attack formula")?),
            other => return Err(FormatError::Schema(format!("unknown attack kind `{other}`"))),
        })
    }
}

impl From<&Move> for MoveJson {
    fn from(m: &Move) -> MoveJson {
        let (polarity, content) = match &m.content {
            MoveContent::Attack(s) => ("?", ContentJson::Attack(s.into())),
            MoveContent::Defence(f) => ("!", ContentJson::Formula(f.to_string())),
        };
        MoveJson {
            polarity: polarity.into(),
            content,
            enabler: m.enabler,
        }
    }
}

impl MoveJson {
    pub fn to_move(&self) -> Result<Move, FormatError> {
        let content = match (self.polarity.as_str(), &self.content) {
            ("!", ContentJson::Formula(f)) => MoveContent::Defence(formula(f, "defence")?),
            ("?", ContentJson::Attack(a)) => MoveContent::Attack(a.to_symbol()?),
            ("?" | "!", _) => {
                return Err(FormatError::Schema(
                    "attacks carry an attack object, defences a formula string".into(),
                ))
            }
            (p, _) => return Err(FormatError::Schema(format!("unknown polarity `{p}`"))),
        };
        Ok(Move {
            content,
            enabler: self.enabler,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameJson {
    pub formula: String,
    pub moves: Vec<MoveJson>,
}

impl From<&Game> for GameJson {
    fn from(g: &Game) -> GameJson {
        GameJson {
            formula: g.root().to_string(),
            moves: g.moves().iter().map(MoveJson::from).collect(),
        }
    }
}

impl GameJson {
    /// Parses and validates the move list.
    pub fn to_game(&self) -> Result<Game, FormatError> {
        let root = formula(&self.formula, "game formula")?;
        let moves = self
            .moves
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_move().map_err(|e| FormatError::Schema(format!("move {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Game::from_moves(root, &moves).map_err(|(index, source)| FormatError::Illegal { index, source })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyNodeJson {
    #[serde(rename = "move")]
    pub mv: MoveJson,
    #[serde(default)]
    pub children: Vec<StrategyNodeJson>,
}

/// The root move is implicit; when present it must be the opening assertion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyJson {
    pub formula: String,
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub mv: Option<MoveJson>,
    pub children: Vec<StrategyNodeJson>,
}

impl From<&StrategyNode> for StrategyNodeJson {
    fn from(n: &StrategyNode) -> StrategyNodeJson {
        StrategyNodeJson {
            mv: (&n.mv).into(),
            children: n.children.iter().map(StrategyNodeJson::from).collect(),
        }
    }
}

impl StrategyNodeJson {
    fn to_node(&self) -> Result<StrategyNode, FormatError> {
        Ok(StrategyNode::new(
            self.mv.to_move()?,
            self.children.iter().map(StrategyNodeJson::to_node).collect::<Result<_, _>>()?,
        ))
    }
}

impl From<&Strategy> for StrategyJson {
    fn from(s: &Strategy) -> StrategyJson {
        StrategyJson {
            formula: s.root_formula.to_string(),
            mv: None,
            children: s.root.children.iter().map(StrategyNodeJson::from).collect(),
        }
    }
}

impl StrategyJson {
    /// Parses the tree; does not check that it is a strategy.
    pub fn to_strategy(&self) -> Result<Strategy, FormatError> {
        let root = formula(&self.formula, "strategy formula")?;
        let children = self.children.iter().map(StrategyNodeJson::to_node).collect::<Result<_, _>>()?;
        let s = Strategy::new(root, children);
        if let Some(m) = &self.mv {
            if m.to_move()? != s.root.mv {
                return Err(FormatError::Schema("the root move must assert the strategy formula".into()));
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentJson {
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveJson {
    pub side: String,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationJson {
    pub sequent: SequentJson,
    pub rule: String,
    pub active: ActiveJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<String>,
    #[serde(default)]
    pub premises: Vec<DerivationJson>,
}

impl From<&Sequent> for SequentJson {
    fn from(s: &Sequent) -> SequentJson {
        SequentJson {
            left: s.left.iter().map(|f| f.to_string()).collect(),
            right: s.right.iter().map(|f| f.to_string()).collect(),
        }
    }
}

impl SequentJson {
    pub fn to_sequent(&self) -> Result<Sequent, FormatError> {
        let parse_all = |fs: &[String]| fs.iter().map(|f| formula(f, "sequent formula")).collect::<Result<Vec<_>, _>>();
        Ok(Sequent::new(parse_all(&self.left)?, parse_all(&self.right)?))
    }
}

impl From<&Derivation> for DerivationJson {
    fn from(d: &Derivation) -> DerivationJson {
        DerivationJson {
            sequent: (&d.conclusion).into(),
            rule: d.rule.name().into(),
            active: ActiveJson {
                side: match d.active.side {
                    Side::Left => "L".into(),
                    Side::Right => "R".into(),
                },
                index: d.active.index,
            },
            term: d.rule.term().map(|t| t.to_string()),
            eigen: d.rule.eigen().map(str::to_string),
            premises: d.premises.iter().map(DerivationJson::from).collect(),
        }
    }
}

impl DerivationJson {
    /// Parses the tree; does not check the rules.
    pub fn to_derivation(&self) -> Result<Derivation, FormatError> {
        let need_term = || {
            self.term
                .as_deref()
                .ok_or_else(|| FormatError::Schema(format!("rule {} needs a `term`", self.rule)))
                .and_then(|t| term(t, "rule term"))
        };
        let need_eigen = || {
            self.eigen
                .clone()
                .ok_or_else(|| FormatError::Schema(format!("rule {} needs an `eigen`", self.rule)))
        };
        let rule = match self.rule.as_str() {
            "Id" => Rule::Id,
            "ImpR" => Rule::ImpR,
            "ImpL" => Rule::ImpL,
            "AndR" => Rule::AndR,
            "AndL1" => Rule::AndL1,
            "AndL2" => Rule::AndL2,
            "OrR" => Rule::OrR,
            "OrL" => Rule::OrL,
            "ExR" => Rule::ExR(need_term()?),
            "AllL" => Rule::AllL(need_term()?),
            "ExL" => Rule::ExL(need_eigen()?),
            "AllR" => Rule::AllR(need_eigen()?),
            other => return Err(FormatError::Schema(format!("unknown rule `{other}`"))),
        };
        let side = match self.active.side.as_str() {
            "L" => Side::Left,
            "R" => Side::Right,
            other => return Err(FormatError::Schema(format!("unknown side `{other}`"))),
        };
        Ok(Derivation::new(
            self.sequent.to_sequent()?,
            rule,
            Active {
                side,
                index: self.active.index,
            },
            self.premises.iter().map(DerivationJson::to_derivation).collect::<Result<_, _>>()?,
        ))
    }
}

/// A parsed JSON artifact of any of the three kinds.
#[derive(Clone, Debug)]
pub enum Artifact {
    Game(Game),
    Strategy(Strategy),
    Derivation(Derivation),
}

/// Detects the artifact kind by its keys: `sequent` for derivations,
/// `moves` for games, `children` for strategies. Games are validated while
/// parsing; the other kinds are only parsed.
pub fn parse_artifact(text: &str) -> Result<Artifact, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let has = |k: &str| value.get(k).is_some();
    if has("sequent") {
        Ok(Artifact::Derivation(serde_json::from_value::<DerivationJson>(value)?.to_derivation()?))
    } else if has("moves") {
        Ok(Artifact::Game(serde_json::from_value::<GameJson>(value)?.to_game()?))
    } else if has("children") {
        Ok(Artifact::Strategy(serde_json::from_value::<StrategyJson>(value)?.to_strategy()?))
    } else {
        Err(FormatError::Schema(
            "expected a derivation (`sequent`), a game (`moves`) or a strategy (`children`)".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::tests::figure_left_game;
    use crate::gkk::{prove, SearchLimits};
    use crate::translate::find_winning_strategy;

    #[test]
    fn game_round_trip() {
        let g = figure_left_game();
        let text = serde_json::to_string(&GameJson::from(&g)).unwrap();
        let Artifact::Game(back) = parse_artifact(&text).unwrap() else { panic!() };
        assert_eq!(back, g);
    }

    #[test]
    fn move_encoding() {
        let m = Move::attack(AttackSymbol::ForallAt(Term::var("w")), 2);
        let v = serde_json::to_value(MoveJson::from(&m)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"polarity": "?", "content": {"kind": "forall", "term": "w"}, "enabler": 2})
        );
        let d = Move::defence(parse_formula("~a(w)").unwrap(), 5);
        let v = serde_json::to_value(MoveJson::from(&d)).unwrap();
        assert_eq!(v, serde_json::json!({"polarity": "!", "content": "~a(w)", "enabler": 5}));
    }

    #[test]
    fn strategy_and_derivation_round_trip() {
        let f = parse_formula("exists x. (a(x) -> forall y. a(y))").unwrap();
        let s = find_winning_strategy(&f, &SearchLimits::default()).unwrap().unwrap();
        let text = serde_json::to_string(&StrategyJson::from(&s)).unwrap();
        let Artifact::Strategy(back) = parse_artifact(&text).unwrap() else { panic!() };
        assert_eq!(back, s);

        let d = prove(&Sequent::goal(f), &SearchLimits::default()).unwrap().unwrap();
        let text = serde_json::to_string(&DerivationJson::from(&d)).unwrap();
        let Artifact::Derivation(back) = parse_artifact(&text).unwrap() else { panic!() };
        assert_eq!(back, d);
    }

    #[test]
    fn illegal_game_reports_index() {
        let text = r#"{"formula": "a -> a", "moves": [
            {"polarity": "!", "content": "a -> a", "enabler": null},
            {"polarity": "!", "content": "a", "enabler": 0}]}"#;
        match parse_artifact(text) {
            Err(FormatError::Illegal { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_shapes_are_rejected() {
        assert!(matches!(parse_artifact("{}"), Err(FormatError::Schema(_))));
        assert!(matches!(parse_artifact("{"), Err(FormatError::Json(_))));
        let bad_kind = r#"{"formula": "a", "children": [{"move": {"polarity": "?", "content": {"kind": "nope"}, "enabler": 0}}]}"#;
        assert!(matches!(parse_artifact(bad_kind), Err(FormatError::Schema(_))));
    }
}
