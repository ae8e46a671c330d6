//! Arithmetic expression evaluator exposed to both agents as a tool.
//!
//! Precedence, highest first: parentheses, `**`/`^` (right-associative),
//! unary `-`/`+`, `* / // %` (left), `+ -` (left).

use std::fmt;

use num_bigint::BigInt;

use crate::numeric::{Number, NumericError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Plus,
    Minus,
    Star,
    Slash,
    DoubleSlash,
    Percent,
    Power,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Number => "number",
            TokenKind::Plus => "'+'",
            TokenKind::Minus => "'-'",
            TokenKind::Star => "'*'",
            TokenKind::Slash => "'/'",
            TokenKind::DoubleSlash => "'//'",
            TokenKind::Percent => "'%'",
            TokenKind::Power => "'**'",
            TokenKind::LParen => "'('",
            TokenKind::RParen => "')'",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 0-based character offset.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("unexpected character {found:?} at offset {position}")]
    UnexpectedCharacter { position: usize, found: char },
    #[error("parse error at offset {position}: expected {expected}")]
    ParseError { position: usize, expected: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("numeric result out of range")]
    Overflow,
    #[error("result is not a real number")]
    NotReal,
}

impl ArithError {
    /// Stable error name used in tool results.
    pub fn kind(&self) -> &'static str {
        match self {
            ArithError::UnexpectedCharacter { .. } => "UnexpectedCharacter",
            ArithError::ParseError { .. } => "ParseError",
            ArithError::DivisionByZero => "DivisionByZero",
            ArithError::Overflow => "Overflow",
            ArithError::NotReal => "NotReal",
        }
    }
}

impl From<NumericError> for ArithError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::DivisionByZero => ArithError::DivisionByZero,
            NumericError::Overflow => ArithError::Overflow,
            NumericError::NotReal => ArithError::NotReal,
        }
    }
}

pub fn tokenize(expr: &str) -> Result<Vec<Token>, ArithError> {
    let chars: Vec<char> = expr.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let (kind, len) = match c {
            '0'..='9' | '.' => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                // A lone '.' is not a literal.
                if j - i == 1 && c == '.' {
                    return Err(ArithError::UnexpectedCharacter { position: i, found: c });
                }
                (TokenKind::Number, j - i)
            }
            '+' => (TokenKind::Plus, 1),
            '-' => (TokenKind::Minus, 1),
            '*' if two('*') => (TokenKind::Power, 2),
            '*' => (TokenKind::Star, 1),
            '/' if two('/') => (TokenKind::DoubleSlash, 2),
            '/' => (TokenKind::Slash, 1),
            '%' => (TokenKind::Percent, 1),
            '^' => (TokenKind::Power, 1),
            '(' => (TokenKind::LParen, 1),
            ')' => (TokenKind::RParen, 1),
            other => {
                return Err(ArithError::UnexpectedCharacter { position: i, found: other });
            }
        };
        tokens.push(Token {
            kind,
            lexeme: chars[start..start + len].iter().collect(),
            position: start,
        });
        i += len;
    }
    Ok(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Number),
    Neg(Box<Expr>),
    Pos(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<TokenKind> {
        self.tokens.get(self.pos).map(|t| t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.position)
    }

    fn error(&self, expected: &str) -> ArithError {
        ArithError::ParseError {
            position: self.offset(),
            expected: expected.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ArithError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ArithError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                Some(TokenKind::DoubleSlash) => BinaryOp::FloorDiv,
                Some(TokenKind::Percent) => BinaryOp::Mod,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ArithError> {
        match self.peek() {
            Some(TokenKind::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(TokenKind::Plus) => {
                self.pos += 1;
                Ok(Expr::Pos(Box::new(self.unary()?)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ArithError> {
        let base = self.atom()?;
        if self.peek() == Some(TokenKind::Power) {
            self.pos += 1;
            // The exponent may itself carry a sign: 2 ** -1.
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ArithError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.kind == TokenKind::Number => {
                self.pos += 1;
                Ok(Expr::Literal(parse_literal(&t.lexeme)))
            }
            Some(t) if t.kind == TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(TokenKind::RParen) {
                    return Err(self.error("')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.error("number or '('")),
        }
    }
}

fn parse_literal(lexeme: &str) -> Number {
    if lexeme.contains('.') {
        Number::Real(lexeme.parse().expect("lexer only admits decimal literals"))
    } else {
        Number::Int(lexeme.parse::<BigInt>().expect("lexer only admits digits"))
    }
}

pub fn parse_expression(expr: &str) -> Result<Expr, ArithError> {
    let tokens = tokenize(expr)?;
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end: expr.chars().count(),
    };
    let tree = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(parser.error("operator or end of input"));
    }
    Ok(tree)
}

impl Expr {
    pub fn eval(&self) -> Result<Number, ArithError> {
        Ok(match self {
            Expr::Literal(n) => n.clone(),
            Expr::Neg(e) => e.eval()?.neg(),
            Expr::Pos(e) => e.eval()?,
            Expr::Binary(op, l, r) => {
                let (a, b) = (l.eval()?, r.eval()?);
                match op {
                    BinaryOp::Add => a.add(&b)?,
                    BinaryOp::Sub => a.sub(&b)?,
                    BinaryOp::Mul => a.mul(&b)?,
                    BinaryOp::Div => a.true_div(&b)?,
                    BinaryOp::FloorDiv => a.floor_div(&b)?,
                    BinaryOp::Mod => a.modulo(&b)?,
                    BinaryOp::Pow => a.pow(&b)?,
                }
            }
        })
    }
}

pub fn evaluate_expression(expr: &str) -> Result<Number, ArithError> {
    parse_expression(expr)?.eval()
}
