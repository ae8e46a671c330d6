use std::collections::BTreeSet;
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub const LIST_METHODS: &[&str] = &[
    "append", "pop", "remove", "insert", "index", "count", "sort", "reverse", "extend",
];
pub const STR_METHODS: &[&str] = &[
    "upper", "lower", "split", "join", "replace", "strip", "find", "count", "index",
];
pub const DICT_METHODS: &[&str] = &["get", "keys", "values", "items", "pop"];

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
];

/// Builtins whose mere mention is rejected: they reach outside the sandbox.
const FORBIDDEN_BUILTINS: &[&str] = &[
    "open", "exec", "eval", "compile", "input", "__import__", "globals", "locals", "getattr",
    "setattr", "delattr", "vars", "dir", "breakpoint", "exit", "quit",
];

const MAX_NESTING: usize = 64;

pub fn parse(source: &str) -> Result<Vec<Stmt>, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0, loop_depth: 0, in_function: false, nesting: 0 };
    let mut body = Vec::new();
    while !p.at(&Tok::Eof) {
        if p.eat(&Tok::Newline) {
            continue;
        }
        if p.at(&Tok::Indent) {
            return Err(p.syntax("unexpected indent"));
        }
        body.extend(p.statement()?);
    }
    Ok(body)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    loop_depth: usize,
    in_function: bool,
    nesting: usize,
}

fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

impl Parser {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn line(&self) -> usize {
        self.tokens[self.pos].line
    }

    fn at(&self, t: &Tok) -> bool {
        self.tok() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line(), message: message.into() }
    }

    fn unsupported(&self, construct: impl Into<String>) -> ParseError {
        ParseError::Unsupported { line: self.line(), construct: construct.into() }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{op}'")))
        }
    }

    fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.tok().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.syntax("expected a name")),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.syntax("too many nested parentheses or blocks"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let line = self.line();
        if let Tok::Name(kw) = self.tok().clone() {
            match kw.as_str() {
                "if" => return Ok(vec![self.if_stmt()?]),
                "while" => return Ok(vec![self.while_stmt()?]),
                "for" => return Ok(vec![self.for_stmt()?]),
                "def" => return Ok(vec![self.def_stmt()?]),
                "class" => return Err(self.unsupported("class")),
                "try" | "except" | "finally" => return Err(self.unsupported("try")),
                "with" => return Err(self.unsupported("with")),
                "async" | "await" => return Err(self.unsupported("async")),
                "elif" | "else" => return Err(self.syntax("invalid syntax")),
                _ => {}
            }
        }
        if self.at_op("@") {
            return Err(self.unsupported("decorator"));
        }
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) {
                break;
            }
            out.push(self.small_statement()?);
        }
        if !self.eat(&Tok::Newline) {
            return Err(ParseError::Syntax { line, message: "invalid syntax".into() });
        }
        Ok(out)
    }

    fn small_statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        if let Tok::Name(kw) = self.tok().clone() {
            let kind = match kw.as_str() {
                "pass" => Some(StmtKind::Pass),
                "break" | "continue" => {
                    if self.loop_depth == 0 {
                        return Err(self.syntax(format!("'{kw}' outside loop")));
                    }
                    Some(if kw == "break" { StmtKind::Break } else { StmtKind::Continue })
                }
                "return" => {
                    if !self.in_function {
                        return Err(self.syntax("'return' outside function"));
                    }
                    self.advance();
                    let value = if self.at(&Tok::Newline) || self.at_op(";") {
                        None
                    } else {
                        Some(self.testlist()?)
                    };
                    return Ok(Stmt { kind: StmtKind::Return(value), line });
                }
                "import" | "from" => return Err(self.unsupported("import")),
                "global" | "nonlocal" => return Err(self.unsupported(kw.as_str())),
                "del" => return Err(self.unsupported("del")),
                "assert" => return Err(self.unsupported("assert")),
                "raise" => return Err(self.unsupported("raise")),
                "yield" => return Err(self.unsupported("yield")),
                _ => None,
            };
            if let Some(kind) = kind {
                self.advance();
                return Ok(Stmt { kind, line });
            }
        }
        let first = self.testlist()?;
        if let Tok::Op(op) = self.tok().clone() {
            let aug = match op {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                "&=" | "|=" | "^=" | "<<=" | ">>=" => {
                    return Err(self.unsupported("bitwise operator"));
                }
                _ => None,
            };
            if let Some(op) = aug {
                self.advance();
                let target = self.to_target(first, false)?;
                let value = self.testlist()?;
                return Ok(Stmt { kind: StmtKind::AugAssign { target, op, value }, line });
            }
            if op == "=" {
                let mut exprs = vec![first];
                while self.eat_op("=") {
                    exprs.push(self.testlist()?);
                }
                let value = exprs.pop().expect("at least two expressions");
                let targets = exprs
                    .into_iter()
                    .map(|e| self.to_target(e, true))
                    .collect::<Result<_, _>>()?;
                return Ok(Stmt { kind: StmtKind::Assign { targets, value }, line });
            }
            if op == ":" {
                return Err(self.unsupported("annotation"));
            }
            if op == ":=" {
                return Err(self.unsupported("assignment expression"));
            }
        }
        Ok(Stmt { kind: StmtKind::Expr(first), line })
    }

    fn to_target(&self, e: Expr, allow_tuple: bool) -> Result<Target, ParseError> {
        let line = e.line;
        match e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n)),
            ExprKind::Subscript(obj, idx) => Ok(Target::Subscript(*obj, *idx)),
            ExprKind::Tuple(items) | ExprKind::List(items) if allow_tuple => Ok(Target::Tuple(
                items
                    .into_iter()
                    .map(|i| self.to_target(i, true))
                    .collect::<Result<_, _>>()?,
            )),
            ExprKind::Slice { .. } => Err(ParseError::Unsupported {
                line,
                construct: "slice assignment".into(),
            }),
            _ => Err(ParseError::Syntax {
                line,
                message: "cannot assign to expression".into(),
            }),
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_op(":")?;
        self.enter()?;
        let body = if self.eat(&Tok::Newline) {
            if !self.eat(&Tok::Indent) {
                return Err(self.syntax("expected an indented block"));
            }
            let mut body = Vec::new();
            while !self.eat(&Tok::Dedent) {
                if self.at(&Tok::Eof) {
                    break;
                }
                if self.eat(&Tok::Newline) {
                    continue;
                }
                if self.at(&Tok::Indent) {
                    return Err(self.syntax("unexpected indent"));
                }
                body.extend(self.statement()?);
            }
            body
        } else {
            self.statement()?
        };
        self.leave();
        Ok(body)
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.advance();
        let mut branches = vec![(self.test()?, self.block()?)];
        let mut orelse = None;
        loop {
            if self.eat_kw("elif") {
                branches.push((self.test()?, self.block()?));
            } else if self.eat_kw("else") {
                orelse = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt { kind: StmtKind::If { branches, orelse }, line })
    }

    fn loop_body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.loop_depth += 1;
        let body = self.block();
        self.loop_depth -= 1;
        let body = body?;
        if self.at_kw("else") {
            return Err(self.unsupported("loop else clause"));
        }
        Ok(body)
    }

    fn while_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.advance();
        let cond = self.test()?;
        let body = self.loop_body()?;
        Ok(Stmt { kind: StmtKind::While { cond, body }, line })
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        self.advance();
        let mut targets = vec![self.expr()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.at_kw("in") {
                break;
            }
            targets.push(self.expr()?);
        }
        let target_expr = if tuple {
            Expr { kind: ExprKind::Tuple(targets), line }
        } else {
            targets.pop().expect("one target")
        };
        let target = self.to_target(target_expr, true)?;
        if !self.eat_kw("in") {
            return Err(self.syntax("expected 'in'"));
        }
        let iter = self.testlist()?;
        let body = self.loop_body()?;
        Ok(Stmt { kind: StmtKind::For { target, iter, body }, line })
    }

    fn def_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.line();
        if self.in_function {
            return Err(self.unsupported("nested function"));
        }
        self.advance();
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") || self.at_op("/") {
                return Err(self.unsupported("variadic parameter"));
            }
            let p = self.expect_name()?;
            if self.at_op("=") {
                return Err(self.unsupported("default parameter"));
            }
            if self.at_op(":") {
                return Err(self.unsupported("annotation"));
            }
            if params.contains(&p) {
                return Err(self.syntax(format!("duplicate argument '{p}' in function definition")));
            }
            params.push(p);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.at_op("->") {
            return Err(self.unsupported("annotation"));
        }
        let saved_loop = std::mem::replace(&mut self.loop_depth, 0);
        self.in_function = true;
        let body = self.block();
        self.in_function = false;
        self.loop_depth = saved_loop;
        let body = body?;
        let mut locals: BTreeSet<String> = params.iter().cloned().collect();
        assigned_names(&body, &mut locals);
        Ok(Stmt {
            kind: StmtKind::FunctionDef(Arc::new(FunctionDef { name, params, body, locals })),
            line,
        })
    }

    // ---- expressions ----

    /// Comma-separated tests; more than one (or a trailing comma) is a tuple.
    fn testlist(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_testlist() {
                break;
            }
            items.push(self.test()?);
        }
        Ok(Expr { kind: ExprKind::Tuple(items), line })
    }

    fn ends_testlist(&self) -> bool {
        matches!(self.tok(), Tok::Newline | Tok::Eof)
            || ["=", ")", ";", ":", "]", "}"].iter().any(|op| self.at_op(op))
            || matches!(self.tok(), Tok::Op(o) if o.ends_with('=') && *o != "==")
    }

    fn test(&mut self) -> Result<Expr, ParseError> {
        if self.at_kw("lambda") {
            return Err(self.unsupported("lambda"));
        }
        self.enter()?;
        let e = self.or_test();
        self.leave();
        let e = e?;
        if self.at_kw("if") {
            return Err(self.unsupported("conditional expression"));
        }
        if self.at_op(":=") {
            return Err(self.unsupported("assignment expression"));
        }
        Ok(e)
    }

    fn or_test(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_test()?;
        while self.at_kw("or") {
            let line = self.line();
            self.advance();
            let rhs = self.and_test()?;
            lhs = Expr { kind: ExprKind::Or(Box::new(lhs), Box::new(rhs)), line };
        }
        Ok(lhs)
    }

    fn and_test(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_test()?;
        while self.at_kw("and") {
            let line = self.line();
            self.advance();
            let rhs = self.not_test()?;
            lhs = Expr { kind: ExprKind::And(Box::new(lhs), Box::new(rhs)), line };
        }
        Ok(lhs)
    }

    fn not_test(&mut self) -> Result<Expr, ParseError> {
        if self.at_kw("not") {
            let line = self.line();
            self.advance();
            self.enter()?;
            let inner = self.not_test();
            self.leave();
            return Ok(Expr { kind: ExprKind::Unary(UnaryOp::Not, Box::new(inner?)), line });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.tok() {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "is" => {
                self.advance();
                if self.eat_kw("not") {
                    return Some(CmpOp::IsNot);
                }
                return Some(CmpOp::Is);
            }
            Tok::Name(n) if n == "not" => {
                if matches!(&self.tokens[self.pos + 1].tok, Tok::Name(m) if m == "in") {
                    self.advance();
                    self.advance();
                    return Some(CmpOp::NotIn);
                }
                return None;
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.expr()?;
        let mut rest = Vec::new();
        while let Some(op) = self.comp_op() {
            rest.push((op, self.expr()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr { kind: ExprKind::Compare(Box::new(first), rest), line })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let e = self.arith()?;
        if ["|", "&", "^", "<<", ">>"].iter().any(|op| self.at_op(op)) {
            return Err(self.unsupported("bitwise operator"));
        }
        Ok(e)
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let line = self.line();
            self.advance();
            let rhs = self.term()?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), line };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                Tok::Op("@") => return Err(self.unsupported("matrix multiplication")),
                _ => return Ok(lhs),
            };
            let line = self.line();
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), line };
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let op = match self.tok() {
            Tok::Op("-") => UnaryOp::Neg,
            Tok::Op("+") => UnaryOp::Pos,
            Tok::Op("~") => return Err(self.unsupported("bitwise operator")),
            _ => return self.power(),
        };
        self.advance();
        self.enter()?;
        let inner = self.factor();
        self.leave();
        Ok(Expr { kind: ExprKind::Unary(op, Box::new(inner?)), line })
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom_expr()?;
        if self.at_op("**") {
            let line = self.line();
            self.advance();
            self.enter()?;
            let exp = self.factor();
            self.leave();
            return Ok(Expr {
                kind: ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exp?)),
                line,
            });
        }
        Ok(base)
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>), ParseError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") {
                return Err(self.unsupported("argument unpacking"));
            }
            let is_kw = matches!(self.tok(), Tok::Name(n) if !is_keyword(n))
                && matches!(self.tokens[self.pos + 1].tok, Tok::Op("="));
            if is_kw {
                let name = self.expect_name()?;
                self.advance();
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return Err(self.syntax(format!("keyword argument repeated: {name}")));
                }
                kwargs.push((name, self.test()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.syntax("positional argument follows keyword argument"));
                }
                args.push(self.test()?);
                if self.at_kw("for") {
                    return Err(self.unsupported("comprehension"));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn atom_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            let line = self.line();
            if self.at_op("(") {
                let ExprKind::Name(func) = &e.kind else {
                    return Err(self.unsupported("call of a computed value"));
                };
                let func = func.clone();
                self.advance();
                let (args, kwargs) = self.call_args()?;
                e = Expr { kind: ExprKind::Call { func, args, kwargs }, line };
            } else if self.eat_op(".") {
                let method = self.expect_name()?;
                if !self.at_op("(") {
                    return Err(self.unsupported(format!("attribute access .{method}")));
                }
                let known = LIST_METHODS.contains(&method.as_str())
                    || STR_METHODS.contains(&method.as_str())
                    || DICT_METHODS.contains(&method.as_str());
                if !known {
                    return Err(self.unsupported(format!("method .{method}()")));
                }
                self.advance();
                let (args, kwargs) = self.call_args()?;
                e = Expr {
                    kind: ExprKind::MethodCall { receiver: Box::new(e), method, args, kwargs },
                    line,
                };
            } else if self.eat_op("[") {
                e = self.subscript(e, line)?;
            } else {
                return Ok(e);
            }
        }
    }

    fn subscript(&mut self, target: Expr, line: usize) -> Result<Expr, ParseError> {
        let bound = |p: &mut Parser| -> Result<Option<Box<Expr>>, ParseError> {
            if p.at_op(":") || p.at_op("]") {
                Ok(None)
            } else {
                Ok(Some(Box::new(p.test()?)))
            }
        };
        let lower = bound(self)?;
        if !self.eat_op(":") {
            let Some(index) = lower else {
                return Err(self.syntax("invalid syntax"));
            };
            if self.at_op(",") {
                return Err(self.unsupported("multi-dimensional subscript"));
            }
            self.expect_op("]")?;
            return Ok(Expr { kind: ExprKind::Subscript(Box::new(target), index), line });
        }
        let upper = bound(self)?;
        let step = if self.eat_op(":") { bound(self)? } else { None };
        self.expect_op("]")?;
        Ok(Expr { kind: ExprKind::Slice { target: Box::new(target), lower, upper, step }, line })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let tok = self.tok().clone();
        let kind = match tok {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.advance();
                ExprKind::Float(v)
            }
            Tok::Str(s) => {
                self.advance();
                let mut s = s;
                while let Tok::Str(more) = self.tok().clone() {
                    s.push_str(&more);
                    self.advance();
                }
                ExprKind::Str(s.into())
            }
            Tok::Name(n) => {
                self.advance();
                match n.as_str() {
                    "True" => ExprKind::Bool(true),
                    "False" => ExprKind::Bool(false),
                    "None" => ExprKind::None,
                    "lambda" => return Err(self.unsupported("lambda")),
                    "yield" => return Err(self.unsupported("yield")),
                    "await" => return Err(self.unsupported("async")),
                    _ if FORBIDDEN_BUILTINS.contains(&n.as_str()) => {
                        return Err(ParseError::Unsupported { line, construct: format!("builtin {n}") });
                    }
                    _ if n.starts_with("__") => {
                        return Err(ParseError::Unsupported { line, construct: format!("dunder name {n}") });
                    }
                    _ if is_keyword(&n) => {
                        return Err(ParseError::Syntax { line, message: "invalid syntax".into() });
                    }
                    _ => ExprKind::Name(n),
                }
            }
            Tok::Op("(") => {
                self.advance();
                self.enter()?;
                let r = self.paren_body(line);
                self.leave();
                return r;
            }
            Tok::Op("[") => {
                self.advance();
                self.enter()?;
                let r = self.sequence_items("]");
                self.leave();
                let (items, _) = r?;
                ExprKind::List(items)
            }
            Tok::Op("{") => {
                self.advance();
                self.enter()?;
                let r = self.dict_body();
                self.leave();
                r?
            }
            Tok::Op("...") => return Err(self.unsupported("ellipsis")),
            Tok::Op("*") => return Err(self.unsupported("starred expression")),
            Tok::Newline | Tok::Eof => return Err(self.syntax("invalid syntax")),
            Tok::Indent => return Err(self.syntax("unexpected indent")),
            _ => return Err(self.syntax("invalid syntax")),
        };
        Ok(Expr { kind, line })
    }

    fn sequence_items(&mut self, close: &str) -> Result<(Vec<Expr>, bool), ParseError> {
        let mut items = Vec::new();
        let mut trailing_comma = false;
        while !self.at_op(close) {
            if self.at_op("*") {
                return Err(self.unsupported("starred expression"));
            }
            items.push(self.test()?);
            if self.at_kw("for") {
                return Err(self.unsupported("comprehension"));
            }
            trailing_comma = self.eat_op(",");
            if !trailing_comma {
                break;
            }
        }
        self.expect_op(close)?;
        Ok((items, trailing_comma))
    }

    fn paren_body(&mut self, line: usize) -> Result<Expr, ParseError> {
        if self.at_kw("yield") {
            return Err(self.unsupported("yield"));
        }
        let (mut items, trailing_comma) = self.sequence_items(")")?;
        if items.len() == 1 && !trailing_comma {
            let mut inner = items.pop().expect("one item");
            inner.line = inner.line.min(line);
            return Ok(inner);
        }
        Ok(Expr { kind: ExprKind::Tuple(items), line })
    }

    fn dict_body(&mut self) -> Result<ExprKind, ParseError> {
        let mut pairs = Vec::new();
        while !self.at_op("}") {
            if self.at_op("**") {
                return Err(self.unsupported("dict unpacking"));
            }
            let key = self.test()?;
            if !self.at_op(":") {
                return Err(self.unsupported("set literal"));
            }
            self.advance();
            let value = self.test()?;
            if self.at_kw("for") {
                return Err(self.unsupported("comprehension"));
            }
            pairs.push((key, value));
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(ExprKind::Dict(pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unsupported(src: &str) -> String {
        match parse(src) {
            Err(ParseError::Unsupported { construct, .. }) => construct,
            other => panic!("expected unsupported for {src:?}, got {other:?}"),
        }
    }

    #[test]
    fn assignment() {
        let body = parse("x = 1").unwrap();
        assert_eq!(body.len(), 1);
        assert!(matches!(&body[0].kind, StmtKind::Assign { targets, .. } if targets == &vec![Target::Name("x".into())]));
    }

    #[test]
    fn while_with_two_statements() {
        let body = parse("while i < 3:\n    print(i)\n    i += 1").unwrap();
        assert_eq!(body.len(), 1);
        let StmtKind::While { body: inner, .. } = &body[0].kind else { panic!("not a while") };
        assert_eq!(inner.len(), 2);
        assert!(matches!(inner[0].kind, StmtKind::Expr(_)));
        assert!(matches!(inner[1].kind, StmtKind::AugAssign { op: BinOp::Add, .. }));
        assert_eq!(inner[1].line, 3);
    }

    #[test]
    fn rejects_outside_constructs() {
        assert!(matches!(parse("import os"), Err(ParseError::Unsupported { line: 1, ref construct }) if construct == "import"));
        assert_eq!(unsupported("from os import path"), "import");
        assert_eq!(unsupported("class A:\n    pass"), "class");
        assert_eq!(unsupported("y = [i for i in range(3)]"), "comprehension");
        assert_eq!(unsupported("x = 1\nx.real"), "attribute access .real");
        assert_eq!(unsupported("s = 'a'\ns.startswith('a')"), "method .startswith()");
        assert_eq!(unsupported("open('f')"), "builtin open");
        assert_eq!(unsupported("f = lambda x: x"), "lambda");
        assert_eq!(unsupported("x = 1 if True else 2"), "conditional expression");
        assert_eq!(unsupported("def f(a=1):\n    return a"), "default parameter");
        assert_eq!(unsupported("def f():\n    def g():\n        pass"), "nested function");
        assert_eq!(unsupported("while True:\n    break\nelse:\n    pass"), "loop else clause");
        assert_eq!(unsupported("x = 1 << 2"), "bitwise operator");
        assert_eq!(unsupported("try:\n    pass\nexcept:\n    pass"), "try");
        assert_eq!(unsupported("a = [1]\na[0:1] = [2]"), "slice assignment");
        assert_eq!(unsupported("x = {1, 2}"), "set literal");
        assert_eq!(unsupported("x = __builtins__"), "dunder name __builtins__");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert!(matches!(parse("x = 1\nif x\n    y = 2"), Err(ParseError::Syntax { line: 2, .. })));
        assert!(matches!(parse("break"), Err(ParseError::Syntax { line: 1, .. })));
        assert!(matches!(parse("return 1"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x = (1, 2"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1 = x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("if x:\ny = 1"), Err(ParseError::Syntax { line: 2, .. })));
    }

    #[test]
    fn precedence_shapes() {
        let body = parse("x = -2 ** 2").unwrap();
        let StmtKind::Assign { value, .. } = &body[0].kind else { panic!() };
        assert!(matches!(value.kind, ExprKind::Unary(UnaryOp::Neg, _)));
        let body = parse("x = not a in b").unwrap();
        let StmtKind::Assign { value, .. } = &body[0].kind else { panic!() };
        assert!(matches!(value.kind, ExprKind::Unary(UnaryOp::Not, _)));
    }

    #[test]
    fn tuples_slices_and_calls() {
        let body = parse("a, b = b, a\nx = s[1:-1]\ny = s[::2]\nprint(x, end='')\nz = (1,)").unwrap();
        assert_eq!(body.len(), 5);
        assert!(matches!(&body[0].kind, StmtKind::Assign { targets, .. } if matches!(targets[0], Target::Tuple(_))));
        let StmtKind::Expr(call) = &body[3].kind else { panic!() };
        assert!(matches!(&call.kind, ExprKind::Call { kwargs, .. } if kwargs.len() == 1));
        let StmtKind::Assign { value, .. } = &body[4].kind else { panic!() };
        assert!(matches!(&value.kind, ExprKind::Tuple(items) if items.len() == 1));
    }

    #[test]
    fn function_locals_are_collected() {
        let body = parse("def f(a):\n    b = a\n    for c in a:\n        d = c\n    return b").unwrap();
        let StmtKind::FunctionDef(f) = &body[0].kind else { panic!() };
        let names: Vec<_> = f.locals.iter().cloned().collect();
        assert_eq!(names, ["a", "b", "c", "d"]);
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let src = format!("x = {}1{}", "(".repeat(500), ")".repeat(500));
        assert!(matches!(parse(&src), Err(ParseError::Syntax { .. })));
    }
}
