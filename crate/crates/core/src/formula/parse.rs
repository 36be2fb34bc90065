use super::{Formula, FormulaError, Language, Modality};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok {
    Not,
    And,
    Or,
    Imp,
    Iff,
    BoxOp(Modality),
    DiaOp(Modality),
    True,
    False,
    Var(u32),
    Nom(u32),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn syntax(position: usize, expected: &str) -> FormulaError {
    FormulaError::Syntax {
        position,
        expected: expected.to_string(),
    }
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), FormulaError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        const FIXED: &[(&str, Tok)] = &[
            ("<->", Tok::Iff),
            ("->", Tok::Imp),
            ("[]", Tok::BoxOp(Modality::Rel)),
            ("<>", Tok::DiaOp(Modality::Rel)),
            ("[u]", Tok::BoxOp(Modality::Univ)),
            ("<u>", Tok::DiaOp(Modality::Univ)),
            ("[h]", Tok::BoxOp(Modality::Hyb)),
            ("<h>", Tok::DiaOp(Modality::Hyb)),
            ("~", Tok::Not),
            ("&", Tok::And),
            ("|", Tok::Or),
            ("(", Tok::LParen),
            (")", Tok::RParen),
        ];
        if rest.is_empty() {
            return Ok((Tok::End, start));
        }
        for (text, tok) in FIXED {
            if rest.starts_with(text) {
                self.pos += text.len();
                return Ok((*tok, start));
            }
        }
        let word_len = rest
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(rest.len());
        let word = &rest[..word_len];
        let tok = match word {
            "true" => Tok::True,
            "false" => Tok::False,
            _ if word.len() > 1 && (word.starts_with('p') || word.starts_with('n')) => {
                let index: u32 = word[1..]
                    .parse()
                    .ok()
                    .filter(|&i: &u32| i >= 1 && !word[1..].starts_with('0'))
                    .ok_or_else(|| syntax(start + 1, "positive index"))?;
                if word.starts_with('p') {
                    Tok::Var(index)
                } else {
                    Tok::Nom(index)
                }
            }
            _ => return Err(syntax(start, "formula")),
        };
        self.pos += word_len;
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (Tok, usize),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, FormulaError> {
        let mut lexer = Lexer { src, pos: 0 };
        let peeked = lexer.next()?;
        Ok(Parser { lexer, peeked })
    }

    fn advance(&mut self) -> Result<(Tok, usize), FormulaError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.imp()?;
        if self.peeked.0 == Tok::Iff {
            self.advance()?;
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if self.peeked.0 == Tok::Imp {
            self.advance()?;
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.and()?;
        while self.peeked.0 == Tok::Or {
            self.advance()?;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peeked.0 == Tok::And {
            self.advance()?;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let (tok, pos) = self.advance()?;
        Ok(match tok {
            Tok::Not => Formula::not(self.unary()?),
            Tok::BoxOp(m) => Formula::boxed(m, self.unary()?),
            Tok::DiaOp(m) => Formula::diamond(m, self.unary()?),
            Tok::True => Formula::top(),
            Tok::False => Formula::bot(),
            Tok::Var(i) => Formula::var(i),
            Tok::Nom(i) => Formula::nominal(i),
            Tok::LParen => {
                let inner = self.iff()?;
                let (close, pos) = self.advance()?;
                if close != Tok::RParen {
                    return Err(syntax(pos, "')'"));
                }
                inner
            }
            _ => return Err(syntax(pos, "formula")),
        })
    }
}

/// Parses the ASCII concrete syntax and checks membership in `language`.
pub fn parse(text: &str, language: Language) -> Result<Formula, FormulaError> {
    let mut parser = Parser::new(text)?;
    let f = parser.iff()?;
    let (tok, pos) = parser.peeked;
    if tok != Tok::End {
        return Err(syntax(pos, "end of input"));
    }
    f.check_language(language)?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    fn l(s: &str) -> Formula {
        parse(s, Language::L).unwrap()
    }

    #[test]
    fn parses_alpha() {
        let top = Formula::top();
        let expected = Formula::and(
            Formula::dia(top.clone()),
            Formula::boxed(Modality::Rel, Formula::dia(top)),
        );
        assert_eq!(l("<>true & []<>true"), expected);
    }

    #[test]
    fn atoms() {
        assert_eq!(l("p1"), Formula::var(1));
        assert_eq!(l("p12"), Formula::var(12));
        assert_eq!(parse("n3", Language::H2).unwrap(), Formula::nominal(3));
    }

    #[test]
    fn rejects_nominal_in_l() {
        assert!(matches!(
            parse("n1 & <h>p2", Language::L),
            Err(FormulaError::Language { .. })
        ));
        assert!(matches!(
            parse("[u]p1", Language::H2),
            Err(FormulaError::Language { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let f = l("p1 | p2 & p3 -> p4 -> p5 <-> p6");
        let Node::Iff(lhs, rhs) = f.node() else {
            panic!("expected iff at top")
        };
        assert_eq!(*rhs, Formula::var(6));
        let Node::Implies(a, b) = lhs.node() else {
            panic!("expected implication")
        };
        assert_eq!(*a, l("p1 | (p2 & p3)"));
        assert_eq!(*b, l("p4 -> p5"));
        assert_eq!(l("p1 & p2 & p3"), l("(p1 & p2) & p3"));
        assert_eq!(l("~[]p1 & p2"), l("(~([]p1)) & p2"));
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse("p1 & & p2", Language::L) {
            Err(FormulaError::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("p0", Language::L).is_err());
        assert!(parse("(p1", Language::L).is_err());
        assert!(parse("p1 p2", Language::L).is_err());
        assert!(parse("", Language::L).is_err());
        assert!(parse("q1", Language::L).is_err());
    }
}
