//! JSON bodies of the session API.

use dialogic::dialogue::MoveDescriptor;
use dialogic::gkk::SearchLimits;
use dialogic::json::{GameJson, MoveJson};
use serde::{Deserialize, Serialize};

use crate::play::{Match, Mode, Status};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateRequest {
    pub formula: String,
    #[serde(default)]
    pub limits: Option<SearchLimits>,
}

/// Either an index into the listed legal moves (plus a term for open
/// quantifier slots) or an explicit move.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MoveRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(default, rename = "move", skip_serializing_if = "Option::is_none")]
    pub mv: Option<MoveJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub choice: usize,
    /// `concrete`, `forall-attack` or `exists-defence`.
    pub kind: String,
    pub enabler: usize,
    #[serde(rename = "move", skip_serializing_if = "Option::is_none")]
    pub mv: Option<MoveJson>,
    pub needs_term: bool,
}

impl DescriptorJson {
    pub fn new(choice: usize, d: &MoveDescriptor) -> DescriptorJson {
        let (kind, mv) = match d {
            MoveDescriptor::Concrete(m) => ("concrete", Some(MoveJson::from(m))),
            MoveDescriptor::ForallAttack { .. } => ("forall-attack", None),
            MoveDescriptor::ExistsDefence { .. } => ("exists-defence", None),
        };
        DescriptorJson {
            choice,
            kind: kind.into(),
            enabler: d.enabler(),
            needs_term: mv.is_none(),
            mv,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionJson {
    pub id: String,
    pub formula: String,
    pub status: String,
    pub machine_strategy: bool,
    /// The machine plays by search because no winning strategy was found.
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_machine_mode: Option<String>,
    pub game: GameJson,
}

fn name<T: Serialize>(x: T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

impl SessionJson {
    pub fn new(id: &str, formula: &str, m: &Match) -> SessionJson {
        SessionJson {
            id: id.into(),
            formula: formula.into(),
            status: name::<Status>(m.status),
            machine_strategy: m.strategy.is_some(),
            fallback: m.strategy.is_none(),
            last_machine_mode: m.last_mode.map(name::<Mode>),
            game: GameJson::from(&m.game),
        }
    }
}
