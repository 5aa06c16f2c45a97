//! Setup-expression language.
//!
//! ```text
//! expr    := term { "|" term } ;
//! term    := atom { "*" atom } ;
//! atom    := setup | "(" expr ")" ;
//! setup   := "[" event { "," filter } "," event "]" ;
//! event   := "(" int "," int ")" ;               (site, time)
//! filter  := "{" "t" "=" int ":" int { "," int } "}" ;
//! ```
//!
//! Setups are written later event first, `[x_f, s_N, ..., s_1, x_i]`. In
//! `a * b` the left operand is the later setup. `*` binds tighter than `|`;
//! both associate to the left.

use std::fmt;

use ampcalc_core::{and_compose, or_join, AlgebraError, Event, Filter, Setup, SetupError};
use thiserror::Error;

/// 1-based line and column of a source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalErrorKind {
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} (in expression at {})", .span.start)]
pub struct EvalError {
    pub span: Span,
    pub kind: EvalErrorKind,
}

/// A filter as written: time and holes in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterLiteral {
    pub time: i64,
    pub sites: Vec<usize>,
}

/// A setup as written, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupLiteral {
    pub later: Event,
    pub filters: Vec<FilterLiteral>,
    pub earlier: Event,
}

impl SetupLiteral {
    pub fn to_setup(&self) -> Result<Setup, SetupError> {
        let filters = self
            .filters
            .iter()
            .map(|f| Filter::new(f.time, f.sites.iter().copied()))
            .collect::<Result<Vec<_>, _>>()?;
        Setup::new(self.earlier, filters, self.later)
    }
}

impl From<&Setup> for SetupLiteral {
    fn from(s: &Setup) -> Self {
        SetupLiteral {
            later: s.sink(),
            filters: s
                .filters()
                .iter()
                .rev()
                .map(|f| FilterLiteral {
                    time: f.time(),
                    sites: f.open_sites().to_vec(),
                })
                .collect(),
            earlier: s.source(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Leaf(SetupLiteral),
    /// `later * earlier`
    And(Box<SetupExpr>, Box<SetupExpr>),
    Or(Box<SetupExpr>, Box<SetupExpr>),
}

/// Expression node with its source span. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct SetupExpr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for SetupExpr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Equals,
    Pipe,
    Star,
    T,
    Int(i64),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::Comma => write!(f, "','"),
            Tok::Colon => write!(f, "':'"),
            Tok::Equals => write!(f, "'='"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Star => write!(f, "'*'"),
            Tok::T => write!(f, "'t'"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Token {
    tok: Tok,
    start: Pos,
    end: Pos,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |pos: &mut Pos, c: char| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(&mut pos, c);
            continue;
        }
        let simple = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Equals),
            '|' => Some(Tok::Pipe),
            '*' => Some(Tok::Star),
            't' => Some(Tok::T),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            advance(&mut pos, c);
            out.push(Token { tok, start, end: pos });
            continue;
        }
        if c == '-' || c.is_ascii_digit() {
            let mut digits = String::new();
            digits.push(c);
            chars.next();
            advance(&mut pos, c);
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(d);
                chars.next();
                advance(&mut pos, d);
            }
            let value = digits.parse::<i64>().map_err(|_| ParseError {
                pos: start,
                message: format!("invalid integer '{digits}'"),
            })?;
            out.push(Token {
                tok: Tok::Int(value),
                start,
                end: pos,
            });
            continue;
        }
        return Err(ParseError {
            pos: start,
            message: format!("unexpected character '{c}'"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        start: pos,
        end: pos,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.at];
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            pos: t.start,
            message: format!("expected {expected} but found {}", t.tok),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().end)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn int(&mut self, what: &str) -> Result<i64, ParseError> {
        match self.peek().tok {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn site(&mut self) -> Result<usize, ParseError> {
        let pos = self.peek().start;
        let n = self.int("a site index")?;
        usize::try_from(n).map_err(|_| ParseError {
            pos,
            message: format!("site index {n} is negative"),
        })
    }

    fn expr(&mut self) -> Result<SetupExpr, ParseError> {
        let mut left = self.term()?;
        while self.peek().tok == Tok::Pipe {
            self.bump();
            let right = self.term()?;
            let span = Span {
                start: left.span.start,
                end: right.span.end,
            };
            left = SetupExpr {
                kind: ExprKind::Or(Box::new(left), Box::new(right)),
                span,
            };
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<SetupExpr, ParseError> {
        let mut left = self.atom()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            let right = self.atom()?;
            let span = Span {
                start: left.span.start,
                end: right.span.end,
            };
            left = SetupExpr {
                kind: ExprKind::And(Box::new(left), Box::new(right)),
                span,
            };
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<SetupExpr, ParseError> {
        match self.peek().tok {
            Tok::LBracket => self.setup(),
            Tok::LParen => {
                let start = self.bump().start;
                let mut inner = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                inner.span = Span { start, end };
                Ok(inner)
            }
            _ => Err(self.unexpected("'[' or '('")),
        }
    }

    fn setup(&mut self) -> Result<SetupExpr, ParseError> {
        let start = self.bump().start;
        let later = self.event()?;
        let mut filters = Vec::new();
        loop {
            self.expect(Tok::Comma)?;
            match self.peek().tok {
                Tok::LBrace => filters.push(self.filter()?),
                Tok::LParen => break,
                _ => return Err(self.unexpected("'{' or '('")),
            }
        }
        let earlier = self.event()?;
        let end = self.expect(Tok::RBracket)?;
        Ok(SetupExpr {
            kind: ExprKind::Leaf(SetupLiteral {
                later,
                filters,
                earlier,
            }),
            span: Span { start, end },
        })
    }

    fn event(&mut self) -> Result<Event, ParseError> {
        self.expect(Tok::LParen)?;
        let site = self.site()?;
        self.expect(Tok::Comma)?;
        let time = self.int("a time")?;
        self.expect(Tok::RParen)?;
        Ok(Event::new(site, time))
    }

    fn filter(&mut self) -> Result<FilterLiteral, ParseError> {
        self.expect(Tok::LBrace)?;
        self.expect(Tok::T)?;
        self.expect(Tok::Equals)?;
        let time = self.int("a time")?;
        self.expect(Tok::Colon)?;
        let mut sites = vec![self.site()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            sites.push(self.site()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(FilterLiteral { time, sites })
    }
}

pub fn parse_setup_expr(text: &str) -> Result<SetupExpr, ParseError> {
    let mut p = Parser {
        tokens: lex(text)?,
        at: 0,
    };
    let expr = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.unexpected("'|', '*' or end of input"));
    }
    Ok(expr)
}

/// Applies `and_compose` / `or_join` bottom-up.
pub fn eval_setup_expr(expr: &SetupExpr) -> Result<Setup, EvalError> {
    let located = |kind: EvalErrorKind| EvalError {
        span: expr.span,
        kind,
    };
    match &expr.kind {
        ExprKind::Leaf(lit) => lit.to_setup().map_err(|e| located(e.into())),
        ExprKind::And(later, earlier) => {
            let (l, e) = (eval_setup_expr(later)?, eval_setup_expr(earlier)?);
            and_compose(&l, &e).map_err(|e| located(e.into()))
        }
        ExprKind::Or(a, b) => {
            let (a, b) = (eval_setup_expr(a)?, eval_setup_expr(b)?);
            or_join(&a, &b)
                .map(|(s, _)| s)
                .map_err(|e| located(e.into()))
        }
    }
}

impl fmt::Display for SetupLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.later)?;
        for filter in &self.filters {
            write!(f, ",{{t={}:", filter.time)?;
            for (k, s) in filter.sites.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, ",{}]", self.earlier)
    }
}

/// Prints with the minimum parentheses needed to re-parse to the same tree.
impl fmt::Display for SetupExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Leaf(lit) => write!(f, "{lit}"),
            ExprKind::Or(a, b) => {
                write!(f, "{a} | ")?;
                match b.kind {
                    ExprKind::Or(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
            ExprKind::And(a, b) => {
                match a.kind {
                    ExprKind::Or(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, " * ")?;
                match b.kind {
                    ExprKind::Leaf(_) => write!(f, "{b}"),
                    _ => write!(f, "({b})"),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary() {
        let e = parse_setup_expr("[(0,2),(0,0)]").unwrap();
        let s = eval_setup_expr(&e).unwrap();
        assert_eq!(s, Setup::elementary(Event::new(0, 0), Event::new(0, 2)).unwrap());
    }

    #[test]
    fn or_of_one_hole_setups() {
        let e = parse_setup_expr("[(0,2),{t=1:0},(0,0)] | [(0,2),{t=1:1},(0,0)]").unwrap();
        assert!(matches!(e.kind, ExprKind::Or(..)));
        let s = eval_setup_expr(&e).unwrap();
        assert_eq!(s.filter_at(1).unwrap().open_sites(), &[0, 1]);
    }

    #[test]
    fn unclosed_bracket() {
        let err = parse_setup_expr("[(0,2),(0,0)").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 13 });
        assert!(err.message.contains("']'"), "{}", err.message);
        assert!(err.message.contains("end of input"), "{}", err.message);
    }

    #[test]
    fn error_positions() {
        let err = parse_setup_expr("[(0,2),\n {t=1:x},(0,0)]").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, column: 7 });
        assert!(err.message.contains("'x'"));
        let err = parse_setup_expr("[(0,2),{t=1:-1},(0,0)]").unwrap_err();
        assert!(err.message.contains("negative"));
        let err = parse_setup_expr("[(0,2),(0,0)] [(0,2),(0,0)]").unwrap_err();
        assert_eq!(err.pos.column, 15);
        let err = parse_setup_expr("[(0,2),{s=1:0},(0,0)]").unwrap_err();
        assert!(err.message.contains("unexpected character 's'"));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_setup_expr("[(0,2),(0,1)] * [(0,1),(0,0)] | [(0,2),{t=1:1},(0,0)]").unwrap();
        match &e.kind {
            ExprKind::Or(l, _) => assert!(matches!(l.kind, ExprKind::And(..))),
            other => panic!("{other:?}"),
        }
        let e = parse_setup_expr("[(0,3),(0,0)] | [(0,3),(0,0)] | [(0,3),(0,0)]").unwrap();
        match &e.kind {
            ExprKind::Or(l, _) => assert!(matches!(l.kind, ExprKind::Or(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_junction_is_located() {
        let text = "[(0,2),(0,0)] | ([(0,3),(1,1)] * [(0,1),(0,0)])";
        let err = eval_setup_expr(&parse_setup_expr(text).unwrap()).unwrap_err();
        assert!(matches!(
            err.kind,
            EvalErrorKind::Algebra(AlgebraError::JunctionMismatch { .. })
        ));
        assert_eq!(err.span.start, Pos { line: 1, column: 17 });
    }

    #[test]
    fn invalid_leaf_is_located() {
        let err = eval_setup_expr(&parse_setup_expr("  [(0,2),{t=5:0},(0,0)]").unwrap()).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Setup(SetupError::InvalidTimeOrder(_))));
        assert_eq!(err.span.start.column, 3);
    }

    #[test]
    fn distributivity_through_the_language() {
        let a = "[(1,4),{t=3:0,2},(0,2)]";
        let b = "[(1,4),{t=3:1},(0,2)]";
        let c = "[(0,2),{t=1:1},(2,0)]";
        let lhs = eval_setup_expr(&parse_setup_expr(&format!("({a}|{b})*{c}")).unwrap()).unwrap();
        let rhs = eval_setup_expr(&parse_setup_expr(&format!("{a}*{c} | {b}*{c}")).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn printing() {
        let text = "([(0,2),{t=1:0},(0,0)] | [(0,2),{t=1:1},(0,0)]) * ([(0,0),(0,-1)] * [(0,-1),(1,-3)])";
        let e = parse_setup_expr(text).unwrap();
        assert_eq!(e.to_string(), text);
        assert_eq!(parse_setup_expr(&e.to_string()).unwrap(), e);
    }
}
