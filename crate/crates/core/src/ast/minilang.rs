//! MiniLang: a small C-style language used for fixtures and tests.
//!
//! ```text
//! program   := item*
//! item      := function | statement
//! function  := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" block
//! block     := "{" item* "}"
//! statement := "if" "(" expr ")" block ["else" (block | if)]
//!            | "while" "(" expr ")" block
//!            | "for" "(" [simple] ";" [expr] ";" [simple] ")" block
//!            | "return" [expr] ";" | "break" ";" | "continue" ";"
//!            | simple ";"
//! simple    := IDENT "=" expr | expr
//! ```
//!
//! `//` and `/* */` comments become `LineComment` / `BlockComment` leaves in
//! the enclosing statement list, after the statement they appear in.

use super::{AstNode, LanguageAdapter, LineSpan, FUNCTION, MINILANG, PROGRAM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct MiniLang;

impl LanguageAdapter for MiniLang {
    fn tag(&self) -> &str {
        MINILANG
    }

    fn extensions(&self) -> &[&str] {
        &["mini"]
    }

    fn parse(&self, source: &str) -> Result<AstNode> {
        let tokens = lex(source)?;
        let total_lines = source.lines().count().max(1);
        let mut p = Parser {
            tokens,
            pos: 0,
            pending: Vec::new(),
        };
        let items = p.items(None)?;
        Ok(AstNode::new(
            PROGRAM,
            None,
            LineSpan::new(1, total_lines),
            items,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Keyword(&'static str),
    Punct(&'static str),
    LineComment(String),
    BlockComment(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    end_line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &[
    "fn", "if", "else", "while", "for", "return", "break", "continue", "true", "false",
];

// longest first
const PUNCTS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "=", "!", "(", ")",
    "{", "}", ",", ";",
];

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| Error::ParseFailed {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let mut j = i + 2;
            while j < chars.len() && chars[j] != '\n' {
                j += 1;
            }
            let text: String = chars[i + 2..j].iter().collect();
            col += j - i;
            i = j;
            out.push(Token {
                tok: Tok::LineComment(text.trim().to_owned()),
                line: start_line,
                end_line: start_line,
                column: start_col,
            });
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut j = i + 2;
            while j + 1 < chars.len() && !(chars[j] == '*' && chars[j + 1] == '/') {
                j += 1;
            }
            if j + 1 >= chars.len() {
                return Err(err(start_line, start_col, "unterminated block comment".into()));
            }
            let text: String = chars[i + 2..j].iter().collect();
            for &ch in &chars[i..j + 2] {
                if ch == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            i = j + 2;
            out.push(Token {
                tok: Tok::BlockComment(text.trim().to_owned()),
                line: start_line,
                end_line: line,
                column: start_col,
            });
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            let mut text = String::new();
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        return Err(err(start_line, start_col, "unterminated string".into()))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        if let Some(&n) = chars.get(j + 1) {
                            text.push('\\');
                            text.push(n);
                        }
                        j += 2;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        j += 1;
                    }
                }
            }
            col += j + 1 - i;
            i = j + 1;
            out.push(Token {
                tok: Tok::Str(text),
                line: start_line,
                end_line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            out.push(Token {
                tok: Tok::Number(text),
                line: start_line,
                end_line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(text),
            };
            out.push(Token {
                tok,
                line: start_line,
                end_line: start_line,
                column: start_col,
            });
            continue;
        }
        let punct = PUNCTS.iter().find(|p| {
            p.chars()
                .enumerate()
                .all(|(k, pc)| chars.get(i + k) == Some(&pc))
        });
        match punct {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: start_line,
                    end_line: start_line,
                    column: start_col,
                });
            }
            None => {
                return Err(err(start_line, start_col, format!("unexpected character `{c}`")))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    pending: Vec<AstNode>,
}

impl Parser {
    /// Next significant token; comments passed over are queued.
    fn peek(&mut self) -> Option<&Token> {
        while let Some(t) = self.tokens.get(self.pos) {
            let node = match &t.tok {
                Tok::LineComment(s) => AstNode::leaf("LineComment", s.clone(), t.line),
                Tok::BlockComment(s) => AstNode::new(
                    "BlockComment",
                    Some(s.clone()),
                    LineSpan::new(t.line, t.end_line),
                    Vec::new(),
                ),
                _ => break,
            };
            self.pending.push(node);
            self.pos += 1;
        }
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        self.peek()?;
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        Some(t)
    }

    fn last_line(&self) -> usize {
        self.tokens
            .iter()
            .rev()
            .find(|t| !matches!(t.tok, Tok::LineComment(_) | Tok::BlockComment(_)))
            .map_or(1, |t| t.end_line)
    }

    fn error_at(&self, tok: Option<&Token>, message: impl Into<String>) -> Error {
        let (line, column) = match tok {
            Some(t) => (t.line, t.column),
            None => (self.last_line(), 1),
        };
        Error::ParseFailed {
            line,
            column,
            message: message.into(),
        }
    }

    fn is_punct(&mut self, p: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Punct(q), .. }) if *q == p)
    }

    fn is_keyword(&mut self, k: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Keyword(q), .. }) if *q == k)
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token> {
        if self.is_punct(p) {
            Ok(self.next().unwrap())
        } else {
            let t = self.peek().cloned();
            Err(self.error_at(t.as_ref(), format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize)> {
        match self.next() {
            Some(Token {
                tok: Tok::Ident(name),
                line,
                ..
            }) => Ok((name, line)),
            other => Err(self.error_at(other.as_ref(), "expected identifier")),
        }
    }

    fn flush_comments(&mut self, into: &mut Vec<AstNode>) {
        into.append(&mut self.pending);
    }

    /// Statement list up to `}` (when `open` names the brace token) or EOF.
    fn items(&mut self, open: Option<&Token>) -> Result<Vec<AstNode>> {
        let mut items = Vec::new();
        loop {
            let next = self.peek().cloned();
            self.flush_comments(&mut items);
            match next {
                None => {
                    return match open {
                        Some(o) => Err(self.error_at(Some(o), "unclosed `{`")),
                        None => Ok(items),
                    }
                }
                Some(Token {
                    tok: Tok::Punct("}"),
                    ..
                }) => {
                    return match open {
                        Some(_) => Ok(items),
                        None => Err(self.error_at(next.as_ref(), "unmatched `}`")),
                    }
                }
                Some(_) => {
                    let item = if self.is_keyword("fn") {
                        self.function()?
                    } else {
                        self.statement()?
                    };
                    items.push(item);
                    self.flush_comments(&mut items);
                }
            }
        }
    }

    fn function(&mut self) -> Result<AstNode> {
        let start = self.next().unwrap().line;
        let (name, _) = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut children = Vec::new();
        if !self.is_punct(")") {
            loop {
                let (p, line) = self.expect_ident()?;
                children.push(AstNode::leaf("Param", p, line));
                if self.is_punct(",") {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        let end = body.line_span.end;
        children.push(body);
        Ok(AstNode::new(
            FUNCTION,
            Some(name),
            LineSpan::new(start, end),
            children,
        ))
    }

    fn block(&mut self) -> Result<AstNode> {
        let open = self.expect_punct("{")?;
        let items = self.items(Some(&open))?;
        let close = self.expect_punct("}")?;
        Ok(AstNode::new(
            "Block",
            None,
            LineSpan::new(open.line, close.line),
            items,
        ))
    }

    fn statement(&mut self) -> Result<AstNode> {
        let t = self.peek().cloned().unwrap();
        let start = t.line;
        match t.tok {
            Tok::Keyword("if") => self.if_statement(),
            Tok::Keyword("while") => {
                self.next();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = self.block()?;
                let end = body.line_span.end;
                Ok(AstNode::new(
                    "While",
                    None,
                    LineSpan::new(start, end),
                    vec![cond, body],
                ))
            }
            Tok::Keyword("for") => {
                self.next();
                self.expect_punct("(")?;
                let mut children = Vec::new();
                if !self.is_punct(";") {
                    children.push(self.simple()?);
                }
                self.expect_punct(";")?;
                if !self.is_punct(";") {
                    children.push(self.expr()?);
                }
                self.expect_punct(";")?;
                if !self.is_punct(")") {
                    children.push(self.simple()?);
                }
                self.expect_punct(")")?;
                let body = self.block()?;
                let end = body.line_span.end;
                children.push(body);
                Ok(AstNode::new("For", None, LineSpan::new(start, end), children))
            }
            Tok::Keyword("return") => {
                self.next();
                let mut children = Vec::new();
                if !self.is_punct(";") {
                    children.push(self.expr()?);
                }
                let end = self.expect_punct(";")?.line;
                Ok(AstNode::new(
                    "Return",
                    None,
                    LineSpan::new(start, end),
                    children,
                ))
            }
            Tok::Keyword(k @ ("break" | "continue")) => {
                self.next();
                let end = self.expect_punct(";")?.line;
                let kind = if k == "break" { "Break" } else { "Continue" };
                Ok(AstNode::new(kind, None, LineSpan::new(start, end), Vec::new()))
            }
            Tok::Keyword("else") => Err(self.error_at(Some(&t), "`else` without `if`")),
            _ => {
                let node = self.simple()?;
                let end = self.expect_punct(";")?.line;
                let span = LineSpan::new(start, end);
                Ok(if node.kind == "Assign" {
                    AstNode { line_span: span, ..node }
                } else {
                    AstNode::new("ExprStmt", None, span, vec![node])
                })
            }
        }
    }

    fn if_statement(&mut self) -> Result<AstNode> {
        let start = self.next().unwrap().line;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then = self.block()?;
        let mut end = then.line_span.end;
        let mut children = vec![cond, then];
        if self.is_keyword("else") {
            self.next();
            let alt = if self.is_keyword("if") {
                self.if_statement()?
            } else {
                self.block()?
            };
            end = alt.line_span.end;
            children.push(alt);
        }
        Ok(AstNode::new("If", None, LineSpan::new(start, end), children))
    }

    /// Assignment or bare expression, without the terminating `;`.
    fn simple(&mut self) -> Result<AstNode> {
        let is_assign = matches!(
            (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)),
            (Some(Token { tok: Tok::Ident(_), .. }), Some(Token { tok: Tok::Punct("="), .. }))
        ) && self.peek().is_some();
        if is_assign {
            let (name, line) = self.expect_ident()?;
            self.next();
            let value = self.expr()?;
            let end = value.line_span.end;
            return Ok(AstNode::new(
                "Assign",
                Some(name),
                LineSpan::new(line, end),
                vec![value],
            ));
        }
        self.expr()
    }

    fn expr(&mut self) -> Result<AstNode> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<AstNode> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["==", "!="],
            &["<", "<=", ">", ">="],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(Token {
                    tok: Tok::Punct(p), ..
                }) if LEVELS[level].contains(p) => *p,
                _ => break,
            };
            self.next();
            let rhs = self.binary(level + 1)?;
            let span = LineSpan::new(lhs.line_span.start, rhs.line_span.end);
            lhs = AstNode::new("BinaryOp", Some(op.to_owned()), span, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<AstNode> {
        if self.is_punct("-") || self.is_punct("!") {
            let t = self.next().unwrap();
            let op = match t.tok {
                Tok::Punct(p) => p,
                _ => unreachable!(),
            };
            let operand = self.unary()?;
            let span = LineSpan::new(t.line, operand.line_span.end);
            return Ok(AstNode::new("UnaryOp", Some(op.to_owned()), span, vec![operand]));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<AstNode> {
        let t = self.next();
        let Some(t) = t else {
            return Err(self.error_at(None, "unexpected end of input"));
        };
        match t.tok {
            Tok::Number(n) => Ok(AstNode::leaf("NumberLit", n, t.line)),
            Tok::Str(s) => Ok(AstNode::leaf("StringLit", s, t.line)),
            Tok::Keyword(b @ ("true" | "false")) => Ok(AstNode::leaf("BoolLit", b, t.line)),
            Tok::Ident(name) => {
                if !self.is_punct("(") {
                    return Ok(AstNode::leaf("Identifier", name, t.line));
                }
                self.next();
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.is_punct(",") {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                let end = self.expect_punct(")")?.line;
                Ok(AstNode::new("Call", Some(name), LineSpan::new(t.line, end), args))
            }
            Tok::Punct("(") => {
                let inner = self.expr()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            _ => Err(self.error_at(Some(&t), "expected expression")),
        }
    }
}
