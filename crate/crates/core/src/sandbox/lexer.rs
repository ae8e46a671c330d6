use num_bigint::BigInt;
use num_traits::Num;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(BigInt),
    Float(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

// Longest first.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "->", ":=", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "(",
    ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~",
];

struct Lexer<'a> {
    src: &'a [char],
    pos: usize,
    line: usize,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut lx = Lexer {
        src: &chars,
        pos: 0,
        line: 1,
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer<'_> {
    fn peek(&self, off: usize) -> Option<char> {
        self.src.get(self.pos + off).copied()
    }

    fn push(&mut self, tok: Tok, line: usize) {
        self.tokens.push(Token { tok, line });
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, message: msg.into() }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut at_line_start = true;
        while self.pos < self.src.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = self.src[self.pos];
            match c {
                '\n' => {
                    self.pos += 1;
                    if self.depth == 0 {
                        self.push(Tok::Newline, self.line);
                        at_line_start = true;
                    }
                    self.line += 1;
                }
                ' ' | '\t' | '\r' | '\x0c' => self.pos += 1,
                '#' => {
                    while self.pos < self.src.len() && self.src[self.pos] != '\n' {
                        self.pos += 1;
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.pos += 2;
                    self.line += 1;
                }
                '0'..='9' => self.number()?,
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                '"' | '\'' => self.string(false)?,
                c if c.is_alphabetic() || c == '_' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_alphanumeric() || self.src[self.pos] == '_')
                    {
                        self.pos += 1;
                    }
                    let word: String = self.src[start..self.pos].iter().collect();
                    if matches!(self.peek(0), Some('"') | Some('\'')) {
                        match word.to_ascii_lowercase().as_str() {
                            "r" => {
                                self.string(true)?;
                                continue;
                            }
                            "u" => {
                                self.string(false)?;
                                continue;
                            }
                            "f" | "rf" | "fr" => {
                                return Err(ParseError::Unsupported {
                                    line: self.line,
                                    construct: "f-string".into(),
                                })
                            }
                            "b" | "rb" | "br" => {
                                return Err(ParseError::Unsupported {
                                    line: self.line,
                                    construct: "bytes literal".into(),
                                })
                            }
                            _ => {}
                        }
                    }
                    self.push(Tok::Name(word), self.line);
                }
                _ => self.operator()?,
            }
        }
        if !matches!(self.tokens.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
            self.push(Tok::Newline, self.line);
        }
        if self.depth > 0 {
            return Err(self.syntax("unexpected EOF while parsing"));
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.line);
        }
        self.push(Tok::Eof, self.line);
        Ok(())
    }

    /// Measures leading whitespace. Returns true when the line was blank or
    /// comment-only and has been consumed.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let mut col = 0;
        let mut p = self.pos;
        while let Some(&c) = self.src.get(p) {
            match c {
                ' ' => col += 1,
                '\t' => col = (col / 8 + 1) * 8,
                '\x0c' => col = 0,
                _ => break,
            }
            p += 1;
        }
        match self.src.get(p) {
            None => {
                self.pos = p;
                return Ok(true);
            }
            Some('\n') => {
                self.pos = p + 1;
                self.line += 1;
                return Ok(true);
            }
            Some('\r') if self.src.get(p + 1) == Some(&'\n') => {
                self.pos = p + 2;
                self.line += 1;
                return Ok(true);
            }
            Some('#') => {
                while p < self.src.len() && self.src[p] != '\n' {
                    p += 1;
                }
                self.pos = (p + 1).min(self.src.len());
                if p < self.src.len() {
                    self.line += 1;
                }
                return Ok(true);
            }
            _ => {}
        }
        self.pos = p;
        let current = *self.indents.last().expect("indent stack is never empty");
        if col > current {
            if self.tokens.is_empty() {
                return Err(self.syntax("unexpected indent"));
            }
            self.indents.push(col);
            self.push(Tok::Indent, self.line);
        } else if col < current {
            while *self.indents.last().expect("non-empty") > col {
                self.indents.pop();
                self.push(Tok::Dedent, self.line);
            }
            if *self.indents.last().expect("non-empty") != col {
                return Err(self.syntax("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let line = self.line;
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
            let radix = match self.peek(1).map(|c| c.to_ascii_lowercase()) {
                Some('x') => 16,
                Some('o') => 8,
                _ => 2,
            };
            self.pos += 2;
            let ds = self.pos;
            while self.peek(0).is_some_and(|c| c.is_digit(radix) || c == '_') {
                self.pos += 1;
            }
            let digits: String = self.src[ds..self.pos].iter().filter(|c| **c != '_').collect();
            let v = BigInt::from_str_radix(&digits, radix).map_err(|_| self.syntax("invalid number literal"))?;
            self.push(Tok::Int(v), line);
            return Ok(());
        }
        let mut is_float = false;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
            self.pos += 1;
        }
        if self.peek(0) == Some('.') {
            is_float = true;
            self.pos += 1;
            while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
                self.pos += 1;
            }
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = usize::from(matches!(self.peek(1), Some('+' | '-')));
            if self.peek(1 + sign).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                self.pos += 1 + sign;
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        if matches!(self.peek(0), Some('j' | 'J')) {
            return Err(ParseError::Unsupported { line, construct: "complex literal".into() });
        }
        if self.peek(0).is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(self.syntax("invalid decimal literal"));
        }
        let text: String = self.src[start..self.pos].iter().filter(|c| **c != '_').collect();
        if is_float {
            let v: f64 = text.parse().map_err(|_| self.syntax("invalid float literal"))?;
            self.push(Tok::Float(v), line);
        } else {
            if text.len() > 1 && text.starts_with('0') && text.chars().any(|c| c != '0') {
                return Err(self.syntax(
                    "leading zeros in decimal integer literals are not permitted",
                ));
            }
            let v: BigInt = text.parse().map_err(|_| self.syntax("invalid integer literal"))?;
            self.push(Tok::Int(v), line);
        }
        Ok(())
    }

    fn string(&mut self, raw: bool) -> Result<(), ParseError> {
        let line = self.line;
        let quote = self.src[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(ParseError::Syntax {
                    line,
                    message: "unterminated string literal".into(),
                });
            };
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.pos += 3;
                    break;
                }
            }
            if c == '\n' {
                if !triple {
                    return Err(ParseError::Syntax {
                        line,
                        message: "unterminated string literal".into(),
                    });
                }
                self.line += 1;
            }
            if c == '\\' {
                let next = self.peek(1);
                if raw {
                    out.push('\\');
                    if let Some(n) = next {
                        out.push(n);
                        if n == '\n' {
                            self.line += 1;
                        }
                        self.pos += 2;
                    } else {
                        self.pos += 1;
                    }
                    continue;
                }
                self.pos += 2;
                match next {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('0') => out.push('\0'),
                    Some('\\') => out.push('\\'),
                    Some('\'') => out.push('\''),
                    Some('"') => out.push('"'),
                    Some('a') => out.push('\x07'),
                    Some('b') => out.push('\x08'),
                    Some('f') => out.push('\x0c'),
                    Some('v') => out.push('\x0b'),
                    Some('\n') => self.line += 1,
                    Some('x') => out.push(self.hex_escape(2)?),
                    Some('u') => out.push(self.hex_escape(4)?),
                    Some('U') => out.push(self.hex_escape(8)?),
                    Some(other) => {
                        out.push('\\');
                        out.push(other);
                    }
                    None => {
                        return Err(ParseError::Syntax {
                            line,
                            message: "unterminated string literal".into(),
                        })
                    }
                }
                continue;
            }
            out.push(c);
            self.pos += 1;
        }
        self.push(Tok::Str(out), line);
        Ok(())
    }

    fn hex_escape(&mut self, n: usize) -> Result<char, ParseError> {
        let digits: String = (0..n).filter_map(|i| self.peek(i)).collect();
        if digits.len() != n || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(self.syntax("truncated escape sequence"));
        }
        self.pos += n;
        u32::from_str_radix(&digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.syntax("invalid escape sequence"))
    }

    fn operator(&mut self) -> Result<(), ParseError> {
        for op in OPERATORS {
            let len = op.chars().count();
            if self.src.len() - self.pos >= len
                && op.chars().zip(&self.src[self.pos..]).all(|(a, b)| a == *b)
            {
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(self.syntax(format!("unmatched '{op}'")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.pos += len;
                self.push(Tok::Op(op), self.line);
                return Ok(());
            }
        }
        Err(self.syntax(format!("invalid character '{}'", self.src[self.pos])))
    }
}
