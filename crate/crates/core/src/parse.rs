//! Concrete syntax: a recursive-descent parser and the matching printer.
//!
//! Precedence, loosest first: `->` (right associative), `|`, `&`, then the
//! prefix forms `~F`, `forall x. F`, `exists x. F`. Quantifiers bind like
//! negation, so `forall x. a(x) | b` is a disjunction; write
//! `forall x. (a(x) | b)` for the wider scope.

use std::collections::BTreeMap;
use std::fmt;

use crate::formula::{Formula, Term};
use crate::gkk::Sequent;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("arity mismatch for `{symbol}`: used with {first} and {second} arguments")]
    Arity {
        symbol: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Forall,
    Exists,
    Bottom,
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Arrow,
    Turnstile,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Forall => f.write_str("`forall`"),
            Tok::Exists => f.write_str("`exists`"),
            Tok::Bottom => f.write_str("`_|_`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Not => f.write_str("`~`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Turnstile => f.write_str("`|-`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let rest = &text[i..];
        let (tok, len) = if rest.starts_with("_|_") {
            (Tok::Bottom, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with("|-") {
            (Tok::Turnstile, 2)
        } else {
            match c {
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b',' => (Tok::Comma, 1),
                b'.' => (Tok::Dot, 1),
                b'~' => (Tok::Not, 1),
                b'&' => (Tok::And, 1),
                b'|' => (Tok::Or, 1),
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let len = rest
                        .bytes()
                        .position(|b| !(b.is_ascii_alphanumeric() || b == b'_' || b == b'\''))
                        .unwrap_or(rest.len());
                    let word = &rest[..len];
                    let tok = match word {
                        "forall" => Tok::Forall,
                        "exists" => Tok::Exists,
                        "false" => Tok::Bottom,
                        _ => Tok::Ident(word.to_string()),
                    };
                    (tok, len)
                }
                _ => {
                    let ch = rest.chars().next().unwrap();
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            }
        };
        out.push((i, tok));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    predicates: BTreeMap<String, usize>,
    functions: BTreeMap<String, usize>,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
            predicates: BTreeMap::new(),
            functions: BTreeMap::new(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let message = match self.peek() {
            Some(t) => format!("expected {expected}, found {t}"),
            None => format!("expected {expected}, found end of input"),
        };
        Err(ParseError::Syntax {
            pos: self.offset(),
            message,
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(&tok.to_string())
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("an identifier"),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while self.eat(&Tok::Or) {
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::And) {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Forall) | Some(Tok::Exists) => {
                let universal = self.peek() == Some(&Tok::Forall);
                self.pos += 1;
                let var = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.unary()?;
                Ok(if universal {
                    Formula::forall(var, body)
                } else {
                    Formula::exists(var, body)
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Bottom) => {
                self.pos += 1;
                Ok(Formula::Bottom)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                let args = if self.eat(&Tok::LParen) {
                    self.arguments()?
                } else {
                    Vec::new()
                };
                record_arity(&mut self.predicates, &name, args.len())?;
                Ok(Formula::Atom(name, args))
            }
            _ => self.error("a formula"),
        }
    }

    /// Comma-separated terms after an opening parenthesis, through `)`.
    fn arguments(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let name = self.ident()?;
        if self.eat(&Tok::LParen) {
            let args = self.arguments()?;
            record_arity(&mut self.functions, &name, args.len())?;
            Ok(Term::App(name, args))
        } else {
            Ok(Term::Var(name))
        }
    }

    fn formula_list(&mut self) -> Result<Vec<Formula>, ParseError> {
        let mut out = Vec::new();
        if matches!(self.peek(), None | Some(Tok::Turnstile)) {
            return Ok(out);
        }
        loop {
            out.push(self.formula()?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            return self.error("end of input");
        }
        Ok(())
    }
}

fn record_arity(table: &mut BTreeMap<String, usize>, name: &str, arity: usize) -> Result<(), ParseError> {
    match table.get(name) {
        Some(&known) if known != arity => Err(ParseError::Arity {
            symbol: name.to_string(),
            first: known,
            second: arity,
        }),
        Some(_) => Ok(()),
        None => {
            table.insert(name.to_string(), arity);
            Ok(())
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// `F1, F2 |- G1, G2`; either side may be empty. Text without `|-` is read
/// as a single formula on the right.
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text)?;
    if !p.toks.iter().any(|(_, t)| *t == Tok::Turnstile) {
        let f = p.formula()?;
        p.finish()?;
        return Ok(Sequent::new(Vec::new(), vec![f]));
    }
    let left = p.formula_list()?;
    p.expect(Tok::Turnstile)?;
    let right = p.formula_list()?;
    p.finish()?;
    Ok(Sequent::new(left, right))
}

/// Binding strength of the outermost construct, used for parenthesisation.
fn level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(_, b) if **b == Formula::Bottom => 4,
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        _ => 4,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut String) {
    if level(f) < min {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(p, args) => {
            out.push_str(p);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&a.to_string());
                }
                out.push(')');
            }
        }
        Formula::Bottom => out.push_str("_|_"),
        Formula::Implies(a, b) if **b == Formula::Bottom => {
            out.push('~');
            write_at(a, 4, out);
        }
        Formula::Implies(a, b) => {
            write_at(a, 2, out);
            out.push_str(" -> ");
            write_at(b, 1, out);
        }
        Formula::Or(a, b) => {
            write_at(a, 2, out);
            out.push_str(" | ");
            write_at(b, 3, out);
        }
        Formula::And(a, b) => {
            write_at(a, 3, out);
            out.push_str(" & ");
            write_at(b, 4, out);
        }
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            out.push_str(if matches!(f, Formula::Forall(..)) { "forall " } else { "exists " });
            out.push_str(x);
            out.push_str(". ");
            write_at(a, 4, out);
        }
    }
}

pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str) -> Formula {
        Formula::atom(p, vec![])
    }

    #[test]
    fn precedence_of_binary_connectives() {
        assert_eq!(
            parse_formula("a & b -> c").unwrap(),
            Formula::implies(Formula::and(atom("a"), atom("b")), atom("c"))
        );
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(atom("a"), Formula::implies(atom("b"), atom("c")))
        );
        assert_eq!(
            parse_formula("a | b & c | d").unwrap(),
            Formula::or(Formula::or(atom("a"), Formula::and(atom("b"), atom("c"))), atom("d"))
        );
    }

    #[test]
    fn negation_is_implication_into_bottom() {
        let x = Term::var("x");
        assert_eq!(
            parse_formula("~a(x)").unwrap(),
            Formula::implies(Formula::atom("a", vec![x]), Formula::Bottom)
        );
        assert_eq!(parse_formula("false").unwrap(), Formula::Bottom);
        assert_eq!(render_formula(&Formula::not(atom("a"))), "~a");
    }

    #[test]
    fn quantifiers_bind_like_negation() {
        let x = || Term::var("x");
        let expected = Formula::or(
            Formula::forall("x", Formula::atom("a", vec![x()])),
            Formula::exists("x", Formula::not(Formula::atom("a", vec![x()]))),
        );
        assert_eq!(parse_formula("forall x. a(x) | exists x. ~a(x)").unwrap(), expected);
        assert_eq!(render_formula(&expected), "forall x. a(x) | exists x. ~a(x)");
    }

    #[test]
    fn terms_and_arities() {
        let f = parse_formula("r(f(c), g(), y')").unwrap();
        assert_eq!(render_formula(&f), "r(f(c), g(), y')");
        assert!(matches!(parse_formula("a(x) & a(x, y)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_formula("p(f(x)) & p(f(x, x))"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_formula("a & (b | )") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("forall . a").is_err());
        assert!(parse_formula("a b").is_err());
        assert!(parse_formula("a $ b").is_err());
    }

    #[test]
    fn sequents() {
        let s = parse_sequent("forall x. c(x) |- exists x. c(x)").unwrap();
        assert_eq!(s.left.len(), 1);
        assert_eq!(s.right.len(), 1);
        let s = parse_sequent("a, a -> b |-").unwrap();
        assert_eq!((s.left.len(), s.right.len()), (2, 0));
        let s = parse_sequent("a -> a").unwrap();
        assert!(s.left.is_empty());
    }

    #[test]
    fn rendering_parenthesises_where_needed() {
        for text in [
            "(a -> b) -> c",
            "a -> b -> c",
            "~(a & b)",
            "~~a",
            "forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)",
            "exists x. (a(x) -> forall y. a(y))",
            "a & (b & c)",
            "(a | b) & c",
            "~forall x. a(x)",
            "(a -> _|_) -> _|_",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(parse_formula(&render_formula(&f)).unwrap(), f, "{text}");
        }
        assert_eq!(render_formula(&parse_formula("(a -> _|_) -> _|_").unwrap()), "~~a");
    }
}
