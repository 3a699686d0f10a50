//! Entailment verdicts: does the conjunction of the hypotheses entail the
//! conclusion, its negation, or neither (as far as bounded search can tell)?

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::gkk::{SearchError, SearchLimits};
use crate::par;
use crate::parse::{parse_formula, ParseError};
use crate::strategy::Strategy;
use crate::translate::{find_winning_strategy, TranslateError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub hypotheses: Vec<Formula>,
    pub conclusion: Formula,
    pub expected: Option<Answer>,
    pub description: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum EntailError {
    #[error("cannot read suite: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed suite: {0}")]
    Json(#[from] serde_json::Error),
    #[error("problem `{id}`, {field}: {source}")]
    Parse {
        id: String,
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("problem `{id}`: formula `{formula}` has free variables")]
    OpenFormula { id: String, formula: String },
    #[error("problem `{0}` has no hypotheses")]
    NoHypotheses(String),
    #[error("problem `{id}`: {source}")]
    Translate {
        id: String,
        #[source]
        source: TranslateError,
    },
    #[error("problem `{0}`: both the conclusion and its negation were proved")]
    Inconsistent(String),
}

impl Problem {
    /// Builds a problem from formula strings, rejecting open formulas.
    pub fn from_text(id: &str, hypotheses: &[&str], conclusion: &str) -> Result<Problem, EntailError> {
        let spec = ProblemSpec {
            id: id.into(),
            hypotheses: hypotheses.iter().map(|s| s.to_string()).collect(),
            conclusion: conclusion.into(),
            expected: None,
            description: None,
        };
        spec.to_problem()
    }
}

/// One entry of a suite file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub hypotheses: Vec<String>,
    pub conclusion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ProblemSpec {
    pub fn to_problem(&self) -> Result<Problem, EntailError> {
        let parse = |text: &str, field: String| -> Result<Formula, EntailError> {
            let f = parse_formula(text).map_err(|source| EntailError::Parse {
                id: self.id.clone(),
                field: field.clone(),
                source,
            })?;
            if !f.free_variables().is_empty() {
                return Err(EntailError::OpenFormula {
                    id: self.id.clone(),
                    formula: text.into(),
                });
            }
            Ok(f)
        };
        if self.hypotheses.is_empty() {
            return Err(EntailError::NoHypotheses(self.id.clone()));
        }
        let hypotheses = self
            .hypotheses
            .iter()
            .enumerate()
            .map(|(i, h)| parse(h, format!("hypothesis {}", i + 1)))
            .collect::<Result<_, _>>()?;
        Ok(Problem {
            id: self.id.clone(),
            hypotheses,
            conclusion: parse(&self.conclusion, "conclusion".into())?,
            expected: self.expected,
            description: self.description.clone(),
        })
    }
}

pub fn load_suite(text: &str) -> Result<Vec<Problem>, EntailError> {
    let specs: Vec<ProblemSpec> = serde_json::from_str(text)?;
    specs.iter().map(ProblemSpec::to_problem).collect()
}

pub fn load_suite_file(path: &Path) -> Result<Vec<Problem>, EntailError> {
    load_suite(&std::fs::read_to_string(path)?)
}

/// `(H1 & (H2 & ...)) -> C`, or `-> ~C` for the negative direction.
pub fn build_formula(p: &Problem, direction: Direction) -> Formula {
    let mut hs = p.hypotheses.iter().rev().cloned();
    let last = hs.next().expect("problems have hypotheses");
    let h = hs.fold(last, |acc, h| Formula::and(h, acc));
    let c = match direction {
        Direction::Positive => p.conclusion.clone(),
        Direction::Negative => Formula::not(p.conclusion.clone()),
    };
    Formula::implies(h, c)
}

/// Evidence that a formula has no winning strategy: after repeatedly
/// replacing positive-only predicates by falsity and negative-only ones by
/// truth, the formula collapses to falsity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolarityCertificate {
    /// Predicates with positive occurrences only, in the original formula.
    pub positive_only: Vec<String>,
    /// Predicates with negative occurrences only, in the original formula.
    pub negative_only: Vec<String>,
    /// Neutralisation rounds until the formula became constant.
    pub rounds: usize,
}

impl PolarityCertificate {
    pub fn names(&self, predicate: &str) -> bool {
        self.positive_only.iter().chain(&self.negative_only).any(|p| p == predicate)
    }
}

/// Propositional skeleton with truth constants; quantifiers are kept only
/// as opaque wrappers since they do not affect predicate polarity.
#[derive(Clone, Debug, PartialEq)]
enum Skel {
    Const(bool),
    Atom(String),
    And(Box<Skel>, Box<Skel>),
    Or(Box<Skel>, Box<Skel>),
    Imp(Box<Skel>, Box<Skel>),
    Quant(Box<Skel>),
}

impl Skel {
    fn of(f: &Formula) -> Skel {
        match f {
            Formula::Atom(..) | Formula::Bottom => Skel::Atom(f.predicate().expect("atomic").to_string()),
            Formula::And(a, b) => Skel::And(Box::new(Skel::of(a)), Box::new(Skel::of(b))),
            Formula::Or(a, b) => Skel::Or(Box::new(Skel::of(a)), Box::new(Skel::of(b))),
            Formula::Implies(a, b) => Skel::Imp(Box::new(Skel::of(a)), Box::new(Skel::of(b))),
            Formula::Forall(_, a) | Formula::Exists(_, a) => Skel::Quant(Box::new(Skel::of(a))),
        }
    }

    fn polarities(&self, positive: bool, out: &mut BTreeMap<String, (bool, bool)>) {
        match self {
            Skel::Const(_) => {}
            Skel::Atom(p) => {
                let e = out.entry(p.clone()).or_default();
                if positive {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
            Skel::And(a, b) | Skel::Or(a, b) => {
                a.polarities(positive, out);
                b.polarities(positive, out);
            }
            Skel::Imp(a, b) => {
                a.polarities(!positive, out);
                b.polarities(positive, out);
            }
            Skel::Quant(a) => a.polarities(positive, out),
        }
    }

    fn neutralise(&self, value: &BTreeMap<String, bool>) -> Skel {
        use Skel::*;
        match self {
            Const(_) => self.clone(),
            Atom(p) => value.get(p).map_or_else(|| self.clone(), |&v| Const(v)),
            And(a, b) => match (a.neutralise(value), b.neutralise(value)) {
                (Const(false), _) | (_, Const(false)) => Const(false),
                (Const(true), x) | (x, Const(true)) => x,
                (x, y) => And(Box::new(x), Box::new(y)),
            },
            Or(a, b) => match (a.neutralise(value), b.neutralise(value)) {
                (Const(true), _) | (_, Const(true)) => Const(true),
                (Const(false), x) | (x, Const(false)) => x,
                (x, y) => Or(Box::new(x), Box::new(y)),
            },
            Imp(a, b) => match (a.neutralise(value), b.neutralise(value)) {
                (Const(false), _) | (_, Const(true)) => Const(true),
                (Const(true), x) => x,
                (x, y) => Imp(Box::new(x), Box::new(y)),
            },
            Quant(a) => match a.neutralise(value) {
                Const(v) => Const(v),
                x => Quant(Box::new(x)),
            },
        }
    }
}

/// Certifies that `f` has no winning strategy when its predicate polarities
/// alone force it: P can only win by repeating an atom O asserted, and a
/// predicate occurring with one polarity only can be replaced by a constant
/// without making an invalid formula valid.
pub fn polarity_precheck(f: &Formula) -> Option<PolarityCertificate> {
    let mut skel = Skel::of(f);
    let mut first: Option<(Vec<String>, Vec<String>)> = None;
    let mut rounds = 0;
    loop {
        if skel == Skel::Const(false) {
            let (positive_only, negative_only) = first.unwrap_or_default();
            return Some(PolarityCertificate {
                positive_only,
                negative_only,
                rounds,
            });
        }
        let mut pol = BTreeMap::new();
        skel.polarities(true, &mut pol);
        let value: BTreeMap<String, bool> = pol
            .iter()
            .filter(|(_, (pos, neg))| pos != neg)
            .map(|(p, (pos, _))| (p.clone(), !pos))
            .collect();
        if value.is_empty() {
            return None;
        }
        if first.is_none() {
            let pick = |want: bool| value.iter().filter(|(_, &v)| v == want).map(|(p, _)| p.clone()).collect();
            first = Some((pick(false), pick(true)));
        }
        skel = skel.neutralise(&value);
        rounds += 1;
    }
}

/// Why one direction produced no strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obstacle {
    Polarity(PolarityCertificate),
    BoundsExhausted { timed_out: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Winning strategy for the positive formula.
    Yes(Strategy),
    /// Winning strategy for the negative formula.
    No(Strategy),
    Unknown { positive: Obstacle, negative: Obstacle },
}

impl Verdict {
    pub fn answer(&self) -> Answer {
        match self {
            Verdict::Yes(_) => Answer::Yes,
            Verdict::No(_) => Answer::No,
            Verdict::Unknown { .. } => Answer::Unknown,
        }
    }

    pub fn strategy(&self) -> Option<&Strategy> {
        match self {
            Verdict::Yes(s) | Verdict::No(s) => Some(s),
            Verdict::Unknown { .. } => None,
        }
    }
}

/// Precheck, then strategy search, for one direction.
pub fn attempt(f: &Formula, limits: &SearchLimits) -> Result<Result<Strategy, Obstacle>, TranslateError> {
    if let Some(c) = polarity_precheck(f) {
        return Ok(Err(Obstacle::Polarity(c)));
    }
    match find_winning_strategy(f, limits) {
        Ok(Some(s)) => {
            if s.is_winning() {
                Ok(Ok(s))
            } else {
                Ok(Err(Obstacle::BoundsExhausted { timed_out: false }))
            }
        }
        Ok(None) => Ok(Err(Obstacle::BoundsExhausted { timed_out: false })),
        Err(TranslateError::Search(SearchError::TimeBudgetExceeded(_))) => Ok(Err(Obstacle::BoundsExhausted { timed_out: true })),
        Err(e) => Err(e),
    }
}

/// Tries both directions concurrently.
pub fn decide(p: &Problem, limits: &SearchLimits) -> Result<Verdict, EntailError> {
    let pos = build_formula(p, Direction::Positive);
    let neg = build_formula(p, Direction::Negative);
    let (a, b) = par::join(|| attempt(&pos, limits), || attempt(&neg, limits));
    let wrap = |source| EntailError::Translate { id: p.id.clone(), source };
    match (a.map_err(wrap)?, b.map_err(wrap)?) {
        (Ok(_), Ok(_)) => Err(EntailError::Inconsistent(p.id.clone())),
        (Ok(s), Err(_)) => Ok(Verdict::Yes(s)),
        (Err(_), Ok(s)) => Ok(Verdict::No(s)),
        (Err(positive), Err(negative)) => Ok(Verdict::Unknown { positive, negative }),
    }
}

#[derive(Debug)]
pub struct ProblemReport {
    pub id: String,
    pub expected: Option<Answer>,
    pub verdict: Result<Verdict, EntailError>,
    pub elapsed_ms: u128,
}

impl ProblemReport {
    pub fn answer(&self) -> Option<Answer> {
        self.verdict.as_ref().ok().map(Verdict::answer)
    }

    /// A problem without an expectation always matches unless it errored.
    pub fn matches(&self) -> bool {
        match (&self.verdict, self.expected) {
            (Err(_), _) => false,
            (Ok(_), None) => true,
            (Ok(v), Some(e)) => v.answer() == e,
        }
    }
}

#[derive(Debug, Default)]
pub struct SuiteReport {
    pub problems: Vec<ProblemReport>,
    pub elapsed_ms: u128,
}

impl SuiteReport {
    pub fn matched(&self) -> usize {
        self.problems.iter().filter(|p| p.matches()).count()
    }

    pub fn all_match(&self) -> bool {
        self.matched() == self.problems.len()
    }
}

/// Decides every problem (in parallel when enabled); reports keep input order.
pub fn run_problems(problems: &[Problem], limits: &SearchLimits) -> SuiteReport {
    let start = Instant::now();
    let problems = par::map(problems, |p| {
        let t = Instant::now();
        let verdict = decide(p, limits);
        ProblemReport {
            id: p.id.clone(),
            expected: p.expected,
            verdict,
            elapsed_ms: t.elapsed().as_millis(),
        }
    });
    SuiteReport {
        problems,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

pub fn run_suite(path: &Path, limits: &SearchLimits) -> Result<SuiteReport, EntailError> {
    Ok(run_problems(&load_suite_file(path)?, limits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn build_nests_conjunctions_to_the_right() {
        let p = Problem::from_text("t", &["a", "b", "c"], "d").unwrap();
        assert_eq!(build_formula(&p, Direction::Positive), f("a & (b & c) -> d"));
        assert_eq!(build_formula(&p, Direction::Negative), f("a & (b & c) -> ~d"));
        let single = Problem::from_text("s", &["h"], "c").unwrap();
        assert_eq!(build_formula(&single, Direction::Positive), f("h -> c"));
    }

    #[test]
    fn open_formulas_are_rejected() {
        assert!(matches!(
            Problem::from_text("o", &["a(x)"], "b"),
            Err(EntailError::OpenFormula { .. })
        ));
        assert!(matches!(Problem::from_text("e", &[], "b"), Err(EntailError::NoHypotheses(_))));
    }

    #[test]
    fn precheck_examples() {
        assert_eq!(polarity_precheck(&f("a -> a")), None);
        let c = polarity_precheck(&f("a -> b")).unwrap();
        assert_eq!(c.positive_only, vec!["b"]);
        assert_eq!(c.negative_only, vec!["a"]);
        // a is both-polar here; the search has to rule this one out
        assert_eq!(polarity_precheck(&f("a & ~a")), None);
        assert!(find_winning_strategy(&f("a & ~a"), &SearchLimits::default()).unwrap().is_none());
        assert_eq!(polarity_precheck(&f("forall x. a(x) | exists x. ~a(x)")), None);
    }

    #[test]
    fn precheck_needs_more_than_one_round_sometimes() {
        // g is both-polar until s and k are neutralised
        let c = polarity_precheck(&f("(k & g) & (s -> k) -> s & g")).unwrap();
        assert_eq!(c.positive_only, vec!["s"]);
        assert_eq!(c.negative_only, vec!["k"]);
        assert_eq!(c.rounds, 2);
        assert_eq!(polarity_precheck(&f("(b -> b) & c -> d")), None);
    }

    #[test]
    fn simple_verdicts() {
        let l = SearchLimits::default();
        let yes = Problem::from_text("y", &["a", "a -> b"], "b").unwrap();
        assert_eq!(decide(&yes, &l).unwrap().answer(), Answer::Yes);
        let no = Problem::from_text("n", &["a", "a -> ~b"], "b").unwrap();
        assert_eq!(decide(&no, &l).unwrap().answer(), Answer::No);
        let unknown = Problem::from_text("u", &["a"], "b").unwrap();
        assert_eq!(decide(&unknown, &l).unwrap().answer(), Answer::Unknown);
    }

    #[test]
    fn empty_and_mismatching_suites() {
        let empty = run_problems(&load_suite("[]").unwrap(), &SearchLimits::default());
        assert!(empty.problems.is_empty() && empty.all_match());
        let text = r#"[{"id": "m", "hypotheses": ["a"], "conclusion": "b", "expected": "yes"}]"#;
        let r = run_problems(&load_suite(text).unwrap(), &SearchLimits::default());
        assert_eq!(r.problems[0].answer(), Some(Answer::Unknown));
        assert!(!r.all_match());
    }

    #[test]
    fn suite_parse_errors_carry_positions() {
        let err = load_suite("[\n{\"id\": 3}\n]").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = load_suite(r#"[{"id": "p", "hypotheses": ["a &"], "conclusion": "b"}]"#).unwrap_err();
        assert!(matches!(err, EntailError::Parse { .. }), "{err}");
    }
}
