//! Propositional stipulations over world states.
//!
//! An atom names a world vertex and holds on an estimate iff that vertex is
//! in the estimate. A stipulation is satisfied when it holds on every
//! estimate the observer can form.
//!
//! Grammar, loosest first:
//!
//! ```text
//! or   := and (('|' | '∨') and)*
//! and  := not (('&' | '∧') not)*
//! not  := ('!' | '¬') not | atom | '(' or ')'
//! atom := [A-Za-z0-9_.:'-]+
//! ```
//!
//! Binary connectives associate to the left.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{PGraph, VertexId};
use crate::labelmap::LabelMap;
use crate::observer::{Estimate, Estimator, Mode, Observer, ObserverError, Reach};
use crate::planning::PlanningProblem;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("atom `{0}` does not name a world state")]
    UnknownAtom(String),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a);
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Checks that every atom names a vertex of `world`.
    pub fn bind(&self, world: &PGraph) -> Result<(), FormulaError> {
        match self.atoms().into_iter().find(|a| !world.contains(a)) {
            Some(a) => Err(FormulaError::UnknownAtom(a.to_owned())),
            None => Ok(()),
        }
    }

    pub fn eval(&self, states: &BTreeSet<VertexId>) -> bool {
        match self {
            Formula::Atom(a) => states.contains(a.as_str()),
            Formula::Not(f) => !f.eval(states),
            Formula::And(a, b) => a.eval(states) && b.eval(states),
            Formula::Or(a, b) => a.eval(states) || b.eval(states),
        }
    }
}

pub fn eval_formula(f: &Formula, e: &Estimate) -> bool {
    f.eval(&e.world_states)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrapped(f: &mut fmt::Formatter<'_>, inner: &Formula, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({inner})")
            } else {
                write!(f, "{inner}")
            }
        }
        match self {
            Formula::Atom(a) => f.write_str(a),
            Formula::Not(inner) => {
                f.write_str("!")?;
                wrapped(
                    f,
                    inner,
                    matches!(**inner, Formula::And(..) | Formula::Or(..)),
                )
            }
            Formula::And(a, b) => {
                wrapped(f, a, matches!(**a, Formula::Or(..)))?;
                f.write_str(" & ")?;
                wrapped(f, b, matches!(**b, Formula::And(..) | Formula::Or(..)))
            }
            Formula::Or(a, b) => {
                wrapped(f, a, false)?;
                f.write_str(" | ")?;
                wrapped(f, b, matches!(**b, Formula::Or(..)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Atom(String),
    Not,
    And,
    Or,
    Open,
    Close,
}

fn is_atom_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '\'' | '-')
}

/// Tokens with their char offsets; the final entry marks end of input.
fn tokenize(text: &str) -> Result<Vec<(usize, Option<Token>)>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let token = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' | '¬' => Token::Not,
            '&' | '∧' => Token::And,
            '|' | '∨' => Token::Or,
            '(' => Token::Open,
            ')' => Token::Close,
            c if is_atom_char(c) => {
                let start = i;
                while i < chars.len() && is_atom_char(chars[i]) {
                    i += 1;
                }
                tokens.push((start, Some(Token::Atom(chars[start..i].iter().collect()))));
                continue;
            }
            other => {
                return Err(FormulaError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push((i, Some(token)));
        i += 1;
    }
    tokens.push((chars.len(), None));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Option<Token>)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Option<Token> {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn error(&self, message: &str) -> FormulaError {
        FormulaError::Syntax {
            offset: self.offset(),
            message: message.to_owned(),
        }
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.and()?;
        while self.peek() == &Some(Token::Or) {
            self.pos += 1;
            left = Formula::or(left, self.and()?);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.not()?;
        while self.peek() == &Some(Token::And) {
            self.pos += 1;
            left = Formula::and(left, self.not()?);
        }
        Ok(left)
    }

    fn not(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.not()?))
            }
            Some(Token::Atom(name)) => {
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != &Some(Token::Close) {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected an atom, `!` or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let f = parser.or()?;
    if parser.peek().is_some() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(f)
}

/// An estimate on which the stipulation evaluates to false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub estimate: Estimate,
    /// Truth value of every atom of the formula on the estimate.
    pub atoms: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub satisfied: bool,
    pub estimates_checked: usize,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    pub mode: Mode,
    pub reach: Reach,
    /// Also evaluate filter sets no consistent execution reaches, with every
    /// atom false.
    pub include_vacuous: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

/// Evaluates `f` on every estimate.
pub fn evaluate_estimates(f: &Formula, estimates: Vec<Estimate>) -> Verdict {
    let estimates_checked = estimates.len();
    let violations: Vec<Violation> = estimates
        .into_iter()
        .filter(|e| !eval_formula(f, e))
        .map(|estimate| Violation {
            atoms: f
                .atoms()
                .into_iter()
                .map(|a| (a.to_owned(), estimate.world_states.contains(a)))
                .collect(),
            estimate,
        })
        .collect();
    Verdict {
        satisfied: violations.is_empty(),
        estimates_checked,
        violations,
    }
}

pub fn check_stipulation(
    problem: &PlanningProblem,
    h: &LabelMap,
    observer: &Observer,
    f: &Formula,
    options: CheckOptions,
) -> Result<Verdict, CheckError> {
    f.bind(problem.world())?;
    h.ensure_total_on(problem.world())
        .map_err(ObserverError::from)?;
    h.ensure_total_on(&observer.divulged)
        .map_err(ObserverError::from)?;
    let estimator = Estimator::new(problem.world(), h, observer, options.reach)?;
    let estimates = estimator.all(options.mode, options.include_vacuous);
    Ok(evaluate_estimates(f, estimates))
}
