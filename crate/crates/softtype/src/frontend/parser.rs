//! Hand-rolled lexer and recursive-descent parser for `.tl` source.
//!
//! ```text
//! program  := function*
//! function := "function" IDENT "(" (param ("," param)*)? ")" (":" IDENT)? block
//! param    := IDENT (":" IDENT)?
//! block    := "{" stmt* "}"
//! stmt     := "let" IDENT (":" IDENT)? "=" expr ";"
//!           | IDENT "=" expr ";"
//!           | "return" expr ";"
//!           | expr ";"
//! expr     := additive (cmpop additive)*        cmpop: < <= > >= == !=
//! additive := mult (("+" | "-" | "++") mult)*
//! mult     := primary (("*" | "/") primary)*
//! primary  := NUMBER | STRING | "true" | "false"
//!           | IDENT | IDENT "(" (expr ("," expr)*)? ")" | "(" expr ")"
//! ```
//!
//! `//` starts a line comment. Spans are byte offsets into the source so
//! annotations can be stripped and inserted textually.

use super::{BinOp, Expr, FrontendError, FunctionDecl, Param, Program, Span, Stmt, TypeAnnotation};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Function,
    Let,
    Return,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Concat,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Number(_) => "number literal".to_string(),
            Tok::Str(_) => "string literal".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Function => "function",
            Tok::Let => "let",
            Tok::Return => "return",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Concat => "++",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            _ => "",
        }
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn syntax_error(src: &str, offset: usize, message: impl Into<String>) -> FrontendError {
    let (line, col) = line_col(src, offset);
    FrontendError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, FrontendError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '+' => {
                if bytes.get(i + 1) == Some(&b'+') {
                    i += 2;
                    Tok::Concat
                } else {
                    i += 1;
                    Tok::Plus
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Le
                } else {
                    i += 1;
                    Tok::Lt
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Ge
                } else {
                    i += 1;
                    Tok::Gt
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::EqEq
                } else {
                    i += 1;
                    Tok::Assign
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Ne
                } else {
                    return Err(syntax_error(src, i, "unexpected character `!`"));
                }
            }
            '"' => {
                i += 1;
                let mut value = String::new();
                loop {
                    match bytes.get(i) {
                        None => return Err(syntax_error(src, start, "unterminated string")),
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => {
                            let escaped = match bytes.get(i + 1) {
                                Some(b'"') => '"',
                                Some(b'\\') => '\\',
                                Some(b'n') => '\n',
                                Some(b't') => '\t',
                                _ => return Err(syntax_error(src, i, "unknown escape sequence")),
                            };
                            value.push(escaped);
                            i += 2;
                        }
                        Some(&b) => {
                            // Multi-byte UTF-8 passes through untouched.
                            let ch_len = src[i..].chars().next().map_or(1, char::len_utf8);
                            if b < 0x80 {
                                value.push(b as char);
                            } else {
                                value.push_str(&src[i..i + ch_len]);
                            }
                            i += ch_len;
                        }
                    }
                }
                Tok::Str(value)
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                if bytes.get(i) == Some(&b'.')
                    && bytes
                        .get(i + 1)
                        .is_some_and(|b| (*b as char).is_ascii_digit())
                {
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                let value: f64 = src[start..i]
                    .parse()
                    .map_err(|_| syntax_error(src, start, "malformed number literal"))?;
                Tok::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                match &src[start..i] {
                    "function" => Tok::Function,
                    "let" => Tok::Let,
                    "return" => Tok::Return,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    word => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(syntax_error(
                    src,
                    i,
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        tokens.push((tok, Span { start, end: i }));
    }
    Ok(tokens)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(Tok, Span)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_second(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|(t, _)| t)
    }

    fn current_offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, s)| s.start)
            .unwrap_or(self.src.len())
    }

    fn error_here(&self, message: impl Into<String>) -> FrontendError {
        syntax_error(self.src, self.current_offset(), message)
    }

    fn advance(&mut self) -> Option<(Tok, Span)> {
        let item = self.tokens.get(self.pos).cloned();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn expect(&mut self, expected: &Tok) -> Result<Span, FrontendError> {
        match self.peek() {
            Some(t) if t == expected => Ok(self.advance().expect("peeked").1),
            Some(t) => Err(self.error_here(format!(
                "expected `{}`, found {}",
                expected.text(),
                t.describe()
            ))),
            None => Err(self.error_here(format!(
                "expected `{}`, found end of input",
                expected.text()
            ))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), FrontendError> {
        match self.advance() {
            Some((Tok::Ident(name), span)) => Ok((name, span)),
            Some((t, span)) => Err(syntax_error(
                self.src,
                span.start,
                format!("expected {what}, found {}", t.describe()),
            )),
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn optional_annotation(&mut self) -> Result<Option<TypeAnnotation>, FrontendError> {
        if self.peek() != Some(&Tok::Colon) {
            return Ok(None);
        }
        let colon = self.expect(&Tok::Colon)?;
        let (name, span) = self.expect_ident("a type name")?;
        Ok(Some(TypeAnnotation {
            name,
            span: Span {
                start: colon.start,
                end: span.end,
            },
        }))
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut functions = Vec::new();
        while self.peek().is_some() {
            self.expect(&Tok::Function)?;
            functions.push(self.function()?);
        }
        Ok(Program { functions })
    }

    fn function(&mut self) -> Result<FunctionDecl, FrontendError> {
        let (name, name_span) = self.expect_ident("a function name")?;
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let (pname, pspan) = self.expect_ident("a parameter name")?;
                let annotation = self.optional_annotation()?;
                params.push(Param {
                    name: pname,
                    name_span: pspan,
                    annotation,
                });
                if self.peek() == Some(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        let rparen = self.expect(&Tok::RParen)?;
        let return_annotation = self.optional_annotation()?;
        self.expect(&Tok::LBrace)?;
        let mut body = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err(self.error_here("expected `}`, found end of input"));
            }
            body.push(self.statement()?);
        }
        self.expect(&Tok::RBrace)?;
        Ok(FunctionDecl {
            name,
            name_span,
            params,
            return_annotation,
            return_insert_offset: rparen.end,
            body,
        })
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        match self.peek() {
            Some(Tok::Let) => {
                self.advance();
                let (name, name_span) = self.expect_ident("a variable name")?;
                let annotation = self.optional_annotation()?;
                self.expect(&Tok::Assign)?;
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Let {
                    name,
                    name_span,
                    annotation,
                    value,
                })
            }
            Some(Tok::Return) => {
                self.advance();
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Return { value })
            }
            Some(Tok::Ident(_)) if self.peek_second() == Some(&Tok::Assign) => {
                let (name, name_span) = self.expect_ident("a variable name")?;
                self.expect(&Tok::Assign)?;
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Assign {
                    name,
                    name_span,
                    value,
                })
            }
            _ => {
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Expr(value))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Lt) => BinOp::Lt,
                Some(Tok::Le) => BinOp::Le,
                Some(Tok::Gt) => BinOp::Gt,
                Some(Tok::Ge) => BinOp::Ge,
                Some(Tok::EqEq) => BinOp::Eq,
                Some(Tok::Ne) => BinOp::Ne,
                _ => break,
            };
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                Some(Tok::Concat) => BinOp::Concat,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.primary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.advance() {
            Some((Tok::Number(value), span)) => Ok(Expr::NumberLit(value, span)),
            Some((Tok::Str(value), span)) => Ok(Expr::StringLit(value, span)),
            Some((Tok::True, span)) => Ok(Expr::BoolLit(true, span)),
            Some((Tok::False, span)) => Ok(Expr::BoolLit(false, span)),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Some((Tok::Ident(name), span)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::Call {
                        callee: name,
                        callee_span: span,
                        args,
                    })
                } else {
                    Ok(Expr::Var(name, span))
                }
            }
            Some((t, span)) => Err(syntax_error(
                self.src,
                span.start,
                format!("expected an expression, found {}", t.describe()),
            )),
            None => Err(self.error_here("expected an expression, found end of input")),
        }
    }
}

/// Parses a `.tl` source file. An empty file is an empty program.
pub fn parse_program(src: &str) -> Result<Program, FrontendError> {
    let tokens = lex(src)?;
    let mut parser = Parser {
        src,
        tokens,
        pos: 0,
    };
    parser.program()
}
