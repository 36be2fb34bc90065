use std::fmt;

use super::{Formula, Modality, Node};

// Binding strength, tightest last.
const IFF: u8 = 1;
const IMP: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const UNARY: u8 = 5;

fn prec(f: &Formula) -> u8 {
    match f.node() {
        Node::Iff(..) => IFF,
        Node::Implies(..) => IMP,
        Node::Or(..) => OR,
        Node::And(..) => AND,
        _ => UNARY,
    }
}

fn box_token(m: Modality) -> &'static str {
    match m {
        Modality::Rel => "[]",
        Modality::Univ => "[u]",
        Modality::Hyb => "[h]",
    }
}

fn diamond_token(m: Modality) -> &'static str {
    match m {
        Modality::Rel => "<>",
        Modality::Univ => "<u>",
        Modality::Hyb => "<h>",
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, x: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |f: &mut fmt::Formatter<'_>,
                      a: &Formula,
                      op: &str,
                      b: &Formula,
                      p: u8,
                      right_assoc: bool| {
            let (pa, pb) = (prec(a), prec(b));
            let (left_parens, right_parens) = if right_assoc {
                (pa <= p, pb < p)
            } else {
                (pa < p, pb <= p)
            };
            write_operand(f, a, left_parens)?;
            write!(f, " {op} ")?;
            write_operand(f, b, right_parens)
        };
        match self.node() {
            Node::Var(i) => write!(f, "p{i}"),
            Node::Nominal(i) => write!(f, "n{i}"),
            Node::Top => f.write_str("true"),
            Node::Bot => f.write_str("false"),
            Node::Not(a) => {
                f.write_str("~")?;
                write_operand(f, a, prec(a) < UNARY)
            }
            Node::Box(m, a) => {
                f.write_str(box_token(*m))?;
                write_operand(f, a, prec(a) < UNARY)
            }
            Node::Diamond(m, a) => {
                f.write_str(diamond_token(*m))?;
                write_operand(f, a, prec(a) < UNARY)
            }
            Node::And(a, b) => binary(f, a, "&", b, AND, false),
            Node::Or(a, b) => binary(f, a, "|", b, OR, false),
            Node::Implies(a, b) => binary(f, a, "->", b, IMP, true),
            Node::Iff(a, b) => binary(f, a, "<->", b, IFF, true),
        }
    }
}
