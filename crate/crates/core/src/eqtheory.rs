//! Terms over Boolean algebras with two operators, and their translation to
//! modal formulas where the first operator is the universal box and the
//! second the ordinary one.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{Formula, Modality, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("{0} has no counterpart in the term language")]
    LanguageMismatch(&'static str),
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
}

/// Which of the two operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    /// Translates to `[u]`.
    First,
    /// Translates to `[]`.
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// `x<k>`, k ≥ 1.
    IndVar(u32),
    One,
    Meet(Box<Term>, Box<Term>),
    Complement(Box<Term>),
    BoxOp(Op, Box<Term>),
}

impl Term {
    pub fn var(k: u32) -> Term {
        assert!(k >= 1, "individual variables are numbered from 1");
        Term::IndVar(k)
    }

    pub fn meet(a: Term, b: Term) -> Term {
        Term::Meet(Box::new(a), Box::new(b))
    }

    pub fn complement(a: Term) -> Term {
        Term::Complement(Box::new(a))
    }

    pub fn boxed(op: Op, a: Term) -> Term {
        Term::BoxOp(op, Box::new(a))
    }

    pub fn size(&self) -> usize {
        match self {
            Term::IndVar(_) | Term::One => 1,
            Term::Complement(a) | Term::BoxOp(_, a) => 1 + a.size(),
            Term::Meet(a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Equation {
        Equation { lhs, rhs }
    }
}

pub fn term_to_formula(t: &Term) -> Formula {
    match t {
        Term::IndVar(i) => Formula::var(*i),
        Term::One => Formula::top(),
        Term::Meet(a, b) => Formula::and(term_to_formula(a), term_to_formula(b)),
        Term::Complement(a) => Formula::not(term_to_formula(a)),
        Term::BoxOp(Op::First, a) => Formula::boxed(Modality::Univ, term_to_formula(a)),
        Term::BoxOp(Op::Second, a) => Formula::boxed(Modality::Rel, term_to_formula(a)),
    }
}

/// Inverse of [`term_to_formula`]. Other connectives are desugared first and
/// `false` becomes `~1`.
pub fn formula_to_term(phi: &Formula) -> Result<Term, TermError> {
    if phi.has_nominals() {
        return Err(TermError::LanguageMismatch("a nominal"));
    }
    if phi.has_modality(Modality::Hyb) {
        return Err(TermError::LanguageMismatch("the second relation"));
    }
    Ok(convert(&phi.desugar()))
}

fn convert(phi: &Formula) -> Term {
    match phi.node() {
        Node::Var(i) => Term::IndVar(*i),
        Node::Top => Term::One,
        Node::Bot => Term::complement(Term::One),
        Node::Not(a) => Term::complement(convert(a)),
        Node::And(a, b) => Term::meet(convert(a), convert(b)),
        Node::Box(Modality::Univ, a) => Term::boxed(Op::First, convert(a)),
        Node::Box(Modality::Rel, a) => Term::boxed(Op::Second, convert(a)),
        _ => unreachable!("desugared formula without nominals or the second relation"),
    }
}

/// `lhs ↔ rhs` under the translation; the equation is unifiable modulo the
/// theory exactly when this formula is unifiable in Ku.
pub fn unification_instance(e: &Equation) -> Formula {
    Formula::iff(term_to_formula(&e.lhs), term_to_formula(&e.rhs))
}

/// The inequalities making the first operator the universal box over the
/// second, as implications: `[1]x ≤ [2]x`, `[1]x ≤ x`, `[1]x ≤ [1][1]x` and
/// `x ≤ [1]~[1]~x`.
pub fn theory_inequalities() -> Vec<(Term, Term)> {
    let x = Term::var(1);
    let b1 = |t: Term| Term::boxed(Op::First, t);
    vec![
        (b1(x.clone()), Term::boxed(Op::Second, x.clone())),
        (b1(x.clone()), x.clone()),
        (b1(x.clone()), b1(b1(x.clone()))),
        (x.clone(), b1(Term::complement(b1(Term::complement(x))))),
    ]
}

pub fn inequality_formula(lhs: &Term, rhs: &Term) -> Formula {
    Formula::implies(term_to_formula(lhs), term_to_formula(rhs))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::IndVar(i) => write!(f, "x{i}"),
            Term::One => f.write_str("1"),
            Term::Meet(a, b) => {
                write_operand(f, a)?;
                f.write_str(" & ")?;
                write_operand(f, b)
            }
            Term::Complement(a) => {
                f.write_str("~")?;
                write_operand(f, a)
            }
            Term::BoxOp(op, a) => {
                f.write_str(match op {
                    Op::First => "[1]",
                    Op::Second => "[2]",
                })?;
                write_operand(f, a)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    if matches!(t, Term::Meet(..)) {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl FromStr for Term {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Term, TermError> {
        let mut p = Parser { src: s, pos: 0 };
        let t = p.meet()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.expected("end of input"));
        }
        Ok(t)
    }
}

impl FromStr for Equation {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Equation, TermError> {
        let Some(eq) = s.find('=') else {
            return Err(TermError::Syntax {
                position: s.len(),
                expected: "'='".into(),
            });
        };
        let shift = |e: TermError| match e {
            TermError::Syntax { position, expected } => TermError::Syntax {
                position: position + eq + 1,
                expected,
            },
            other => other,
        };
        Ok(Equation {
            lhs: s[..eq].parse()?,
            rhs: s[eq + 1..].parse().map_err(shift)?,
        })
    }
}

/// Meets associate to the right; prefix operators bind tighter.
struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn expected(&self, what: &str) -> TermError {
        TermError::Syntax {
            position: self.pos,
            expected: what.to_string(),
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn meet(&mut self) -> Result<Term, TermError> {
        let left = self.unary()?;
        if self.eat("&") {
            Ok(Term::meet(left, self.meet()?))
        } else {
            Ok(left)
        }
    }

    fn unary(&mut self) -> Result<Term, TermError> {
        if self.eat("~") {
            return Ok(Term::complement(self.unary()?));
        }
        if self.eat("[1]") {
            return Ok(Term::boxed(Op::First, self.unary()?));
        }
        if self.eat("[2]") {
            return Ok(Term::boxed(Op::Second, self.unary()?));
        }
        if self.eat("(") {
            let t = self.meet()?;
            if !self.eat(")") {
                return Err(self.expected("')'"));
            }
            return Ok(t);
        }
        if self.eat("1") {
            return Ok(Term::One);
        }
        if self.eat("x") {
            let rest = &self.src[self.pos..];
            let len = rest
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(rest.len());
            return match rest[..len].parse::<u32>() {
                Ok(k) if k >= 1 => {
                    self.pos += len;
                    Ok(Term::IndVar(k))
                }
                _ => Err(self.expected("a variable index of at least 1")),
            };
        }
        Err(self.expected("a term"))
    }
}
