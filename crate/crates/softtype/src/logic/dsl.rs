//! Textual constraint DSL, the interchange format between the frontend, the
//! CLI and the numeric core.
//!
//! Grammar (one file may hold several formulas; the pipeline conjoins them):
//!
//! ```text
//! file    := formula*
//! formula := term ("or" term)*
//! term    := factor ("and" factor)*
//! factor  := "not" factor | "(" formula ")" | IDENT "is" IDENT
//! ```
//!
//! `and` binds tighter than `or`, `not` tightest. `#` starts a line comment.
//! Names are resolved against the identifier set and type universe supplied
//! by the caller (in file exchanges, a JSON sidecar carries both).

use super::{Constraint, IdentifierSet, TypeUniverse};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Not,
    And,
    Or,
    Is,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Token, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, DslError> {
        let mut out = Vec::new();
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.bump(c);
                continue;
            }
            if c == '#' {
                while let Some(c) = self.src[self.pos..].chars().next() {
                    self.bump(c);
                    if c == '\n' {
                        break;
                    }
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            match c {
                '(' => {
                    self.bump(c);
                    out.push((Token::LParen, line, col));
                }
                ')' => {
                    self.bump(c);
                    out.push((Token::RParen, line, col));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = self.pos;
                    while let Some(c) = self.src[self.pos..].chars().next() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            self.bump(c);
                        } else {
                            break;
                        }
                    }
                    let word = &self.src[start..self.pos];
                    let token = match word {
                        "not" => Token::Not,
                        "and" => Token::And,
                        "or" => Token::Or,
                        "is" => Token::Is,
                        _ => Token::Ident(word.to_string()),
                    };
                    out.push((token, line, col));
                }
                other => {
                    return Err(self.error(format!("unexpected character `{other}`")));
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    idents: &'a IdentifierSet,
    universe: &'a TypeUniverse,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn location(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|&(_, line, col)| (line, col))
            .unwrap_or((1, 1))
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        let (line, col) = self.location();
        DslError {
            line,
            col,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), DslError> {
        match self.next() {
            Some(t) if t == token => Ok(()),
            Some(t) => Err(DslError {
                line: self.tokens[self.pos - 1].1,
                col: self.tokens[self.pos - 1].2,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn formula(&mut self) -> Result<Constraint, DslError> {
        let mut lhs = self.term()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Constraint::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Constraint, DslError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Constraint::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Constraint, DslError> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Constraint::not(self.factor()?))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token::Ident(_)) => self.atom(),
            Some(t) => Err(self.error(format!("expected a formula, found {t:?}"))),
            None => Err(self.error("expected a formula, found end of input")),
        }
    }

    fn atom(&mut self) -> Result<Constraint, DslError> {
        let (line, col) = self.location();
        let ident_name = match self.next() {
            Some(Token::Ident(name)) => name,
            _ => unreachable!("atom called on non-identifier"),
        };
        let ident = self.idents.index_of(&ident_name).ok_or_else(|| DslError {
            line,
            col,
            message: format!("unknown identifier `{ident_name}`"),
        })?;
        self.expect(Token::Is, "`is`")?;
        let (line, col) = self.location();
        let ty_name = match self.next() {
            Some(Token::Ident(name)) => name,
            Some(t) => {
                return Err(DslError {
                    line,
                    col,
                    message: format!("expected a type name, found {t:?}"),
                })
            }
            None => {
                return Err(DslError {
                    line,
                    col,
                    message: "expected a type name, found end of input".to_string(),
                })
            }
        };
        let ty = self.universe.index_of(&ty_name).ok_or_else(|| DslError {
            line,
            col,
            message: format!("unknown type `{ty_name}`"),
        })?;
        Ok(Constraint::is(ident, ty))
    }
}

/// Parses every formula in `src`. A formula ends where the next token can
/// only start a new one, so several formulas may share a file (and a single
/// formula may span lines).
pub fn parse_constraints(
    src: &str,
    idents: &IdentifierSet,
    universe: &TypeUniverse,
) -> Result<Vec<Constraint>, DslError> {
    let tokens = Lexer::new(src).tokens()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        idents,
        universe,
    };
    let mut formulas = Vec::new();
    while parser.peek().is_some() {
        formulas.push(parser.formula()?);
    }
    Ok(formulas)
}

/// Renders a constraint in DSL syntax with minimal parentheses. The output
/// parses back to the identical AST.
pub fn constraint_to_dsl(
    constraint: &Constraint,
    idents: &IdentifierSet,
    universe: &TypeUniverse,
) -> String {
    let mut out = String::new();
    write_prec(constraint, idents, universe, 0, &mut out);
    out
}

// Precedence: or = 0, and = 1, not = 2, atom = 3. Right operands of the
// left-associative binary operators require strictly higher precedence so
// the printed text re-parses to the same tree shape.
fn precedence(c: &Constraint) -> u8 {
    match c {
        Constraint::Or(..) => 0,
        Constraint::And(..) => 1,
        Constraint::Not(..) => 2,
        Constraint::Is { .. } => 3,
    }
}

fn write_prec(
    c: &Constraint,
    idents: &IdentifierSet,
    universe: &TypeUniverse,
    min_prec: u8,
    out: &mut String,
) {
    let prec = precedence(c);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match c {
        Constraint::Is { ident, ty } => {
            out.push_str(idents.name(*ident));
            out.push_str(" is ");
            out.push_str(universe.name(*ty));
        }
        Constraint::Not(inner) => {
            out.push_str("not ");
            write_prec(inner, idents, universe, 2, out);
        }
        Constraint::And(lhs, rhs) => {
            write_prec(lhs, idents, universe, 1, out);
            out.push_str(" and ");
            write_prec(rhs, idents, universe, 2, out);
        }
        Constraint::Or(lhs, rhs) => {
            write_prec(lhs, idents, universe, 0, out);
            out.push_str(" or ");
            write_prec(rhs, idents, universe, 1, out);
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::gen;

    fn fixture() -> (IdentifierSet, TypeUniverse) {
        (
            IdentifierSet::new(["start", "end", "addNum"]).unwrap(),
            TypeUniverse::new(["number", "string", "any"]).unwrap(),
        )
    }

    #[test]
    fn parses_equal_operand_disjunction() {
        let (ids, uni) = fixture();
        let src = "(start is number and end is number) or (start is string and end is string)";
        let parsed = parse_constraints(src, &ids, &uni).unwrap();
        assert_eq!(parsed.len(), 1);
        let expected = Constraint::or(
            Constraint::and(Constraint::is(0, 0), Constraint::is(1, 0)),
            Constraint::and(Constraint::is(0, 1), Constraint::is(1, 1)),
        );
        assert_eq!(parsed[0], expected);
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let (ids, uni) = fixture();
        let parsed = parse_constraints(
            "start is number or end is number and addNum is number",
            &ids,
            &uni,
        )
        .unwrap();
        let expected = Constraint::or(
            Constraint::is(0, 0),
            Constraint::and(Constraint::is(1, 0), Constraint::is(2, 0)),
        );
        assert_eq!(parsed[0], expected);
    }

    #[test]
    fn not_binds_tightest() {
        let (ids, uni) = fixture();
        let parsed =
            parse_constraints("not start is number and end is string", &ids, &uni).unwrap();
        let expected = Constraint::and(Constraint::not(Constraint::is(0, 0)), Constraint::is(1, 1));
        assert_eq!(parsed[0], expected);
    }

    #[test]
    fn comments_and_multiple_formulas() {
        let (ids, uni) = fixture();
        let src = "# per-function constraints\nstart is number\n# second formula\nend is string";
        let parsed = parse_constraints(src, &ids, &uni).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], Constraint::is(0, 0));
        assert_eq!(parsed[1], Constraint::is(1, 1));
    }

    #[test]
    fn reports_unknown_names_with_location() {
        let (ids, uni) = fixture();
        let err = parse_constraints("start is Date", &ids, &uni).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("Date"));
        let err = parse_constraints("\n  bogus is number", &ids, &uni).unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }

    #[test]
    fn rejects_dangling_operator() {
        let (ids, uni) = fixture();
        assert!(parse_constraints("start is number and", &ids, &uni).is_err());
        assert!(parse_constraints("(start is number", &ids, &uni).is_err());
    }

    #[test]
    fn round_trips_random_constraints() {
        let (ids, uni) = fixture();
        let mut rng = gen::seeded_rng(23);
        for _ in 0..300 {
            let c = gen::random_constraint(&mut rng, ids.len(), uni.len(), 5);
            let text = constraint_to_dsl(&c, &ids, &uni);
            let reparsed = parse_constraints(&text, &ids, &uni).unwrap();
            assert_eq!(reparsed.len(), 1, "text: {text}");
            assert_eq!(reparsed[0], c, "text: {text}");
        }
    }
}
