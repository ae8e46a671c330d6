use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::ast::*;
use super::builtins;
use super::value::*;
use super::{ExecutionError, ExecutionResult, ExecutionStatus, ResourceLimits};
use crate::numeric::{Number, NumericError};

/// Builtin names reachable from programs.
pub const BUILTINS: &[&str] = &[
    "print", "len", "range", "int", "float", "str", "bool", "list", "abs", "min", "max", "sum",
    "sorted", "enumerate",
];

/// Builtins of the reference runtime that exist there but not here; using
/// one is reported as unsupported rather than as an undefined name.
const UNAVAILABLE_BUILTINS: &[&str] = &[
    "round", "reversed", "tuple", "dict", "set", "frozenset", "type", "isinstance", "zip", "map",
    "filter", "any", "all", "chr", "ord", "repr", "divmod", "pow", "hex", "bin", "oct", "hash",
    "id", "iter", "next", "format", "bytes", "object", "super", "callable", "slice", "issubclass",
    "hasattr", "print_function", "memoryview", "bytearray", "complex", "classmethod",
    "staticmethod", "property", "help",
];

pub const MAX_CALL_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultClass {
    Runtime,
    Limit,
}

#[derive(Debug, Clone)]
pub struct Fault {
    pub class: FaultClass,
    pub kind: String,
    pub message: String,
    pub line: usize,
}

pub type R<T> = Result<T, Fault>;

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

struct Frame {
    func: Arc<FunctionDef>,
    locals: HashMap<String, Value>,
}

pub struct Interp {
    pub limits: ResourceLimits,
    steps: u64,
    pub stdout: String,
    globals: HashMap<String, Value>,
    frames: Vec<Frame>,
    pub line: usize,
}

impl Interp {
    pub fn new(limits: ResourceLimits) -> Self {
        Self {
            limits,
            steps: 0,
            stdout: String::new(),
            globals: HashMap::new(),
            frames: Vec::new(),
            line: 0,
        }
    }

    pub fn run(mut self, body: &[Stmt]) -> ExecutionResult {
        let outcome = self.exec_block(body);
        let (status, error) = match outcome {
            Ok(_) => (ExecutionStatus::Ok, None),
            Err(f) => (
                match f.class {
                    FaultClass::Runtime => ExecutionStatus::RuntimeError,
                    FaultClass::Limit => ExecutionStatus::LimitExceeded,
                },
                Some(ExecutionError { kind: f.kind, message: f.message, line: f.line }),
            ),
        };
        let bindings: BTreeMap<String, String> = self
            .globals
            .iter()
            .filter(|(_, v)| !matches!(v, Value::Function(_) | Value::Builtin(_)))
            .map(|(k, v)| (k.clone(), v.repr()))
            .collect();
        ExecutionResult { status, stdout: self.stdout, bindings, error }
    }

    // ---- faults ----

    pub fn fault(&self, kind: &str, message: impl Into<String>) -> Fault {
        Fault {
            class: FaultClass::Runtime,
            kind: kind.to_string(),
            message: message.into(),
            line: self.line,
        }
    }

    pub fn limit(&self, kind: &str, message: impl Into<String>) -> Fault {
        Fault {
            class: FaultClass::Limit,
            kind: kind.to_string(),
            message: message.into(),
            line: self.line,
        }
    }

    pub fn type_error(&self, message: impl Into<String>) -> Fault {
        self.fault("TypeError", message)
    }

    fn step(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(self.limit(
                "StepLimitExceeded",
                format!("exceeded {} evaluation steps", self.limits.max_steps),
            ));
        }
        Ok(())
    }

    pub fn check_len(&self, len: usize) -> R<()> {
        if len > self.limits.max_collection_len {
            return Err(self.limit(
                "CollectionLimitExceeded",
                format!("collection longer than {} items", self.limits.max_collection_len),
            ));
        }
        Ok(())
    }

    pub fn check_str(&self, len: usize) -> R<()> {
        let cap = self.limits.max_string_len();
        if len > cap {
            return Err(self.limit(
                "CollectionLimitExceeded",
                format!("string longer than {cap} bytes"),
            ));
        }
        Ok(())
    }

    pub fn write_out(&mut self, s: &str) -> R<()> {
        let room = self.limits.max_output_bytes.saturating_sub(self.stdout.len());
        if s.len() <= room {
            self.stdout.push_str(s);
            return Ok(());
        }
        let mut cut = room;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        self.stdout.push_str(&s[..cut]);
        Err(self.limit(
            "OutputLimitExceeded",
            format!("output exceeded {} bytes", self.limits.max_output_bytes),
        ))
    }

    // ---- names ----

    fn lookup(&self, name: &str) -> R<Value> {
        if let Some(frame) = self.frames.last() {
            if frame.func.locals.contains(name) {
                return frame.locals.get(name).cloned().ok_or_else(|| {
                    self.fault(
                        "UnboundLocalError",
                        format!("local variable '{name}' referenced before assignment"),
                    )
                });
            }
        }
        if let Some(v) = self.globals.get(name) {
            return Ok(v.clone());
        }
        if let Some(b) = BUILTINS.iter().find(|b| **b == name) {
            return Ok(Value::Builtin(b));
        }
        if UNAVAILABLE_BUILTINS.contains(&name) {
            return Err(self.fault(
                "UnsupportedConstruct",
                format!("builtin {name}() is not available in the sandbox"),
            ));
        }
        Err(self.fault("NameError", format!("name '{name}' is not defined")))
    }

    fn bind(&mut self, name: &str, value: Value) {
        if let Some(frame) = self.frames.last_mut() {
            if frame.func.locals.contains(name) {
                frame.locals.insert(name.to_string(), value);
                return;
            }
        }
        self.globals.insert(name.to_string(), value);
    }

    // ---- statements ----

    fn exec_block(&mut self, body: &[Stmt]) -> R<Flow> {
        for stmt in body {
            match self.exec(stmt)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, stmt: &Stmt) -> R<Flow> {
        self.line = stmt.line;
        self.step()?;
        match &stmt.kind {
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::Assign { targets, value } => {
                let v = self.eval(value)?;
                self.line = stmt.line;
                for t in targets {
                    self.assign(t, v.clone())?;
                }
            }
            StmtKind::AugAssign { target, op, value } => self.aug_assign(target, *op, value)?,
            StmtKind::If { branches, orelse } => {
                for (cond, body) in branches {
                    if self.eval(cond)?.truthy() {
                        return self.exec_block(body);
                    }
                }
                if let Some(body) = orelse {
                    return self.exec_block(body);
                }
            }
            StmtKind::While { cond, body } => loop {
                self.line = stmt.line;
                if !self.eval(cond)?.truthy() {
                    break;
                }
                match self.exec_block(body)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::For { target, iter, body } => {
                let source = self.eval(iter)?;
                self.line = stmt.line;
                let mut cursor = Cursor::new(self, source)?;
                while let Some(item) = cursor.next() {
                    self.line = stmt.line;
                    self.step()?;
                    self.assign(target, item)?;
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Pass => {}
            StmtKind::FunctionDef(f) => {
                self.bind(&f.name, Value::Function(Arc::clone(f)));
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, target: &Target, value: Value) -> R<()> {
        match target {
            Target::Name(n) => {
                self.bind(n, value);
                Ok(())
            }
            Target::Subscript(obj, idx) => {
                let container = self.eval(obj)?;
                let index = self.eval(idx)?;
                self.set_item(&container, index, value)
            }
            Target::Tuple(targets) => {
                if !is_iterable(&value) {
                    return Err(self.type_error(format!(
                        "cannot unpack non-iterable {} object",
                        value.type_name()
                    )));
                }
                let items = self.iterate(&value)?;
                if items.len() > targets.len() {
                    return Err(self.fault(
                        "ValueError",
                        format!("too many values to unpack (expected {})", targets.len()),
                    ));
                }
                if items.len() < targets.len() {
                    return Err(self.fault(
                        "ValueError",
                        format!(
                            "not enough values to unpack (expected {}, got {})",
                            targets.len(),
                            items.len()
                        ),
                    ));
                }
                for (t, v) in targets.iter().zip(items) {
                    self.assign(t, v)?;
                }
                Ok(())
            }
        }
    }

    fn aug_assign(&mut self, target: &Target, op: BinOp, value: &Expr) -> R<()> {
        match target {
            Target::Name(n) => {
                let current = self.lookup(n)?;
                let rhs = self.eval(value)?;
                let result = self.inplace(op, current, rhs)?;
                self.bind(n, result);
                Ok(())
            }
            Target::Subscript(obj, idx) => {
                let container = self.eval(obj)?;
                let index = self.eval(idx)?;
                let current = self.get_item(&container, &index)?;
                let rhs = self.eval(value)?;
                let result = self.inplace(op, current, rhs)?;
                self.set_item(&container, index, result)
            }
            Target::Tuple(_) => Err(self.fault(
                "SyntaxError",
                "illegal expression for augmented assignment",
            )),
        }
    }

    fn inplace(&mut self, op: BinOp, current: Value, rhs: Value) -> R<Value> {
        if let (BinOp::Add, Value::List(l)) = (op, &current) {
            let extra = self.iterate(&rhs)?;
            let new_len = l.borrow().len() + extra.len();
            self.check_len(new_len)?;
            l.borrow_mut().extend(extra);
            return Ok(current);
        }
        self.binary(op, &current, &rhs)
    }

    // ---- expressions ----

    pub fn eval(&mut self, e: &Expr) -> R<Value> {
        self.step()?;
        Ok(match &e.kind {
            ExprKind::Int(i) => Value::Int(i.clone()),
            ExprKind::Float(f) => Value::Float(*f),
            ExprKind::Str(s) => {
                self.check_str(s.len())?;
                Value::str(s)
            }
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::None => Value::None,
            ExprKind::Name(n) => {
                self.line = self.line.max(e.line);
                self.lookup(n)?
            }
            ExprKind::List(items) => {
                let vals = self.eval_all(items)?;
                self.check_len(vals.len())?;
                Value::list(vals)
            }
            ExprKind::Tuple(items) => Value::tuple(self.eval_all(items)?),
            ExprKind::Dict(pairs) => {
                let d = Value::Dict(Default::default());
                for (k, v) in pairs {
                    let key = self.eval(k)?;
                    let val = self.eval(v)?;
                    self.set_item(&d, key, val)?;
                }
                d
            }
            ExprKind::Unary(op, inner) => {
                let v = self.eval(inner)?;
                self.unary(*op, &v)?
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                self.binary(*op, &a, &b)?
            }
            ExprKind::Compare(first, rest) => {
                let mut left = self.eval(first)?;
                for (op, rhs) in rest {
                    let right = self.eval(rhs)?;
                    if !self.compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Value::Bool(true)
            }
            ExprKind::And(l, r) => {
                let a = self.eval(l)?;
                if !a.truthy() {
                    a
                } else {
                    self.eval(r)?
                }
            }
            ExprKind::Or(l, r) => {
                let a = self.eval(l)?;
                if a.truthy() {
                    a
                } else {
                    self.eval(r)?
                }
            }
            ExprKind::Call { func, args, kwargs } => {
                let callee = self.lookup(func)?;
                let args = self.eval_all(args)?;
                let kwargs = self.eval_kwargs(kwargs)?;
                self.call_value(&callee, args, kwargs)?
            }
            ExprKind::MethodCall { receiver, method, args, kwargs } => {
                let recv = self.eval(receiver)?;
                let args = self.eval_all(args)?;
                let kwargs = self.eval_kwargs(kwargs)?;
                builtins::call_method(self, recv, method, args, kwargs)?
            }
            ExprKind::Subscript(obj, idx) => {
                let container = self.eval(obj)?;
                let index = self.eval(idx)?;
                self.get_item(&container, &index)?
            }
            ExprKind::Slice { target, lower, upper, step } => {
                let container = self.eval(target)?;
                let mut bound = |b: &Option<Box<Expr>>| -> R<Option<Value>> {
                    match b {
                        Some(e) => Ok(Some(self.eval(e)?)),
                        None => Ok(None),
                    }
                };
                let (lo, hi, st) = (bound(lower)?, bound(upper)?, bound(step)?);
                self.slice(&container, lo, hi, st)?
            }
        })
    }

    fn eval_all(&mut self, items: &[Expr]) -> R<Vec<Value>> {
        items.iter().map(|e| self.eval(e)).collect()
    }

    fn eval_kwargs(&mut self, kwargs: &[(String, Expr)]) -> R<Vec<(String, Value)>> {
        kwargs
            .iter()
            .map(|(k, e)| Ok((k.clone(), self.eval(e)?)))
            .collect()
    }

    pub fn call_value(
        &mut self,
        callee: &Value,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
    ) -> R<Value> {
        match callee {
            Value::Builtin(name) => builtins::call_builtin(self, name, args, kwargs),
            Value::Function(f) => self.call_function(Arc::clone(f), args, kwargs),
            other => Err(self.type_error(format!("'{}' object is not callable", other.type_name()))),
        }
    }

    fn call_function(
        &mut self,
        func: Arc<FunctionDef>,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
    ) -> R<Value> {
        let name = &func.name;
        let n = func.params.len();
        if args.len() > n {
            return Err(self.type_error(format!(
                "{name}() takes {n} positional argument{} but {} {} given",
                if n == 1 { "" } else { "s" },
                args.len(),
                if args.len() == 1 { "was" } else { "were" }
            )));
        }
        let mut slots: Vec<Option<Value>> = args.into_iter().map(Some).collect();
        slots.resize(n, None);
        for (k, v) in kwargs {
            let Some(i) = func.params.iter().position(|p| *p == k) else {
                return Err(self.type_error(format!("{name}() got an unexpected keyword argument '{k}'")));
            };
            if slots[i].is_some() {
                return Err(self.type_error(format!("{name}() got multiple values for argument '{k}'")));
            }
            slots[i] = Some(v);
        }
        let missing: Vec<String> = func
            .params
            .iter()
            .zip(&slots)
            .filter(|(_, s)| s.is_none())
            .map(|(p, _)| format!("'{p}'"))
            .collect();
        if !missing.is_empty() {
            let list = match missing.len() {
                1 => missing[0].clone(),
                2 => format!("{} and {}", missing[0], missing[1]),
                _ => format!(
                    "{}, and {}",
                    missing[..missing.len() - 1].join(", "),
                    missing[missing.len() - 1]
                ),
            };
            return Err(self.type_error(format!(
                "{name}() missing {} required positional argument{}: {list}",
                missing.len(),
                if missing.len() == 1 { "" } else { "s" }
            )));
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(self.limit("RecursionLimitExceeded", "maximum recursion depth exceeded"));
        }
        let locals = func
            .params
            .iter()
            .cloned()
            .zip(slots.into_iter().map(|s| s.expect("all slots filled")))
            .collect();
        let caller_line = self.line;
        self.frames.push(Frame { func: Arc::clone(&func), locals });
        let outcome = self.exec_block(&func.body);
        self.frames.pop();
        let result = match outcome? {
            Flow::Return(v) => v,
            _ => Value::None,
        };
        self.line = caller_line;
        Ok(result)
    }

    // ---- operators ----

    fn unary(&self, op: UnaryOp, v: &Value) -> R<Value> {
        match op {
            UnaryOp::Not => Ok(Value::Bool(!v.truthy())),
            UnaryOp::Neg | UnaryOp::Pos => {
                let Some(n) = v.as_number() else {
                    let sym = if op == UnaryOp::Neg { "-" } else { "+" };
                    return Err(self.type_error(format!(
                        "bad operand type for unary {sym}: '{}'",
                        v.type_name()
                    )));
                };
                Ok(Value::from_number(if op == UnaryOp::Neg { n.neg() } else { n }))
            }
        }
    }

    pub fn numeric_fault(&self, e: NumericError, op: BinOp, a: &Number, b: &Number) -> Fault {
        let both_int = a.is_exact() && b.is_exact();
        match e {
            NumericError::DivisionByZero => {
                let msg = match (op, both_int) {
                    (BinOp::Pow, _) => "0.0 cannot be raised to a negative power",
                    (BinOp::Div, true) => "division by zero",
                    (BinOp::Div, false) => "float division by zero",
                    (BinOp::FloorDiv, true) | (BinOp::Mod, true) => "integer division or modulo by zero",
                    (BinOp::FloorDiv, false) => "float floor division by zero",
                    _ => "float modulo",
                };
                self.fault("ZeroDivisionError", msg)
            }
            NumericError::Overflow if both_int && op != BinOp::Div => self.limit(
                "IntegerLimitExceeded",
                "integer result exceeds the sandbox size limit",
            ),
            NumericError::Overflow => self.fault("OverflowError", "numerical result out of range"),
            NumericError::NotReal => {
                self.fault("UnsupportedConstruct", "complex numbers are not supported")
            }
        }
    }

    pub fn binary(&mut self, op: BinOp, a: &Value, b: &Value) -> R<Value> {
        if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
            let r = match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => x.true_div(&y),
                BinOp::FloorDiv => x.floor_div(&y),
                BinOp::Mod => x.modulo(&y),
                BinOp::Pow => x.pow(&y),
            };
            return r.map(Value::from_number).map_err(|e| self.numeric_fault(e, op, &x, &y));
        }
        match (op, a, b) {
            (BinOp::Add, Value::Str(x), Value::Str(y)) => {
                self.check_str(x.len() + y.len())?;
                Ok(Value::str(&format!("{x}{y}")))
            }
            (BinOp::Add, Value::List(x), Value::List(y)) => {
                let mut items = x.borrow().clone();
                items.extend(y.borrow().iter().cloned());
                self.check_len(items.len())?;
                Ok(Value::list(items))
            }
            (BinOp::Add, Value::Tuple(x), Value::Tuple(y)) => {
                let mut items = x.to_vec();
                items.extend(y.iter().cloned());
                self.check_len(items.len())?;
                Ok(Value::tuple(items))
            }
            (BinOp::Add, Value::Str(_) | Value::List(_) | Value::Tuple(_), other) => {
                Err(self.type_error(format!(
                    "can only concatenate {} (not \"{}\") to {}",
                    a.type_name(),
                    other.type_name(),
                    a.type_name()
                )))
            }
            (BinOp::Mul, seq @ (Value::Str(_) | Value::List(_) | Value::Tuple(_)), n)
            | (BinOp::Mul, n, seq @ (Value::Str(_) | Value::List(_) | Value::Tuple(_))) => {
                let Some(count) = n.as_bigint() else {
                    return Err(self.type_error(format!(
                        "can't multiply sequence by non-int of type '{}'",
                        n.type_name()
                    )));
                };
                self.repeat(seq, &count)
            }
            (BinOp::Mod, Value::Str(_), _) => Err(self.fault(
                "UnsupportedConstruct",
                "printf-style string formatting is not supported",
            )),
            _ => {
                let sym = if op == BinOp::Pow { "** or pow()" } else { op.symbol() };
                Err(self.type_error(format!(
                    "unsupported operand type(s) for {sym}: '{}' and '{}'",
                    a.type_name(),
                    b.type_name()
                )))
            }
        }
    }

    fn repeat(&self, seq: &Value, count: &BigInt) -> R<Value> {
        let n = if count.is_negative() { 0 } else { count.to_usize().unwrap_or(usize::MAX) };
        match seq {
            Value::Str(s) => {
                if n > 0 {
                    self.check_str(s.len().saturating_mul(n))?;
                }
                Ok(Value::str(&s.repeat(n)))
            }
            Value::List(l) => {
                let items = l.borrow();
                if !items.is_empty() {
                    self.check_len(items.len().saturating_mul(n))?;
                }
                Ok(Value::list(repeat_items(&items, n)))
            }
            Value::Tuple(t) => {
                if !t.is_empty() {
                    self.check_len(t.len().saturating_mul(n))?;
                }
                Ok(Value::tuple(repeat_items(t, n)))
            }
            _ => unreachable!("repeat is only called with sequences"),
        }
    }

    fn compare(&self, op: CmpOp, a: &Value, b: &Value) -> R<bool> {
        Ok(match op {
            CmpOp::Eq => values_equal(a, b),
            CmpOp::Ne => !values_equal(a, b),
            CmpOp::Is => values_identical(a, b),
            CmpOp::IsNot => !values_identical(a, b),
            CmpOp::In => self.contains(b, a)?,
            CmpOp::NotIn => !self.contains(b, a)?,
            CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
                let Some(ord) = values_order(a, b) else {
                    return Err(self.type_error(format!(
                        "'{}' not supported between instances of '{}' and '{}'",
                        op.symbol(),
                        a.type_name(),
                        b.type_name()
                    )));
                };
                let Some(ord) = ord else { return Ok(false) };
                match op {
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }
            }
        })
    }

    pub fn less_than(&self, a: &Value, b: &Value) -> R<bool> {
        self.compare(CmpOp::Lt, a, b)
    }

    pub fn contains(&self, container: &Value, item: &Value) -> R<bool> {
        match container {
            Value::Str(s) => match item {
                Value::Str(sub) => Ok(s.contains(&**sub)),
                other => Err(self.type_error(format!(
                    "'in <string>' requires string as left operand, not {}",
                    other.type_name()
                ))),
            },
            Value::List(l) => Ok(l.borrow().iter().any(|v| values_equal(v, item))),
            Value::Tuple(t) | Value::View(_, t) => Ok(t.iter().any(|v| values_equal(v, item))),
            Value::Dict(d) => {
                self.require_hashable(item)?;
                Ok(d.borrow().iter().any(|(k, _)| values_equal(k, item)))
            }
            Value::Range { .. } => {
                let Some(n) = item.as_number() else { return Ok(false) };
                let len = range_len(container);
                Ok((0..len).any(|i| {
                    Number::int(range_item(container, i)).compare(&n) == Some(std::cmp::Ordering::Equal)
                }))
            }
            other => Err(self.type_error(format!(
                "argument of type '{}' is not iterable",
                other.type_name()
            ))),
        }
    }

    pub fn require_hashable(&self, v: &Value) -> R<()> {
        if v.is_hashable() {
            Ok(())
        } else {
            Err(self.type_error(format!("unhashable type: '{}'", v.type_name())))
        }
    }

    // ---- subscripts ----

    fn seq_index(&self, len: usize, index: &Value, what: &str) -> R<usize> {
        let Some(i) = index.as_bigint() else {
            let msg = match what {
                "string" => "string indices must be integers".to_string(),
                "range object" => format!(
                    "range indices must be integers or slices, not {}",
                    index.type_name()
                ),
                _ => format!(
                    "{what} indices must be integers or slices, not {}",
                    index.type_name()
                ),
            };
            return Err(self.type_error(msg));
        };
        let len_big = BigInt::from(len);
        let adj = if i.is_negative() { i + &len_big } else { i };
        if adj.is_negative() || adj >= len_big {
            return Err(self.fault("IndexError", format!("{what} index out of range")));
        }
        Ok(adj.to_usize().expect("index below len"))
    }

    pub fn get_item(&self, container: &Value, index: &Value) -> R<Value> {
        match container {
            Value::List(l) => {
                let items = l.borrow();
                let i = self.seq_index(items.len(), index, "list")?;
                Ok(items[i].clone())
            }
            Value::Tuple(t) => {
                let i = self.seq_index(t.len(), index, "tuple")?;
                Ok(t[i].clone())
            }
            Value::Str(s) => {
                let n = s.chars().count();
                let i = self.seq_index(n, index, "string")?;
                Ok(Value::str(&s.chars().nth(i).expect("in range").to_string()))
            }
            Value::Range { .. } => {
                let i = self.seq_index(range_len(container) as usize, index, "range object")?;
                Ok(Value::int(range_item(container, i as i64)))
            }
            Value::Dict(d) => {
                self.require_hashable(index)?;
                d.borrow()
                    .iter()
                    .find(|(k, _)| values_equal(k, index))
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| self.fault("KeyError", index.repr()))
            }
            other => Err(self.type_error(format!(
                "'{}' object is not subscriptable",
                other.type_name()
            ))),
        }
    }

    pub fn set_item(&self, container: &Value, index: Value, value: Value) -> R<()> {
        match container {
            Value::List(l) => {
                let len = l.borrow().len();
                let Some(_) = index.as_bigint() else {
                    return Err(self.type_error(format!(
                        "list indices must be integers or slices, not {}",
                        index.type_name()
                    )));
                };
                let i = self
                    .seq_index(len, &index, "list")
                    .map_err(|_| self.fault("IndexError", "list assignment index out of range"))?;
                l.borrow_mut()[i] = value;
                Ok(())
            }
            Value::Dict(d) => {
                self.require_hashable(&index)?;
                let mut d = d.borrow_mut();
                if let Some(slot) = d.iter_mut().find(|(k, _)| values_equal(k, &index)) {
                    slot.1 = value;
                } else {
                    self.check_len(d.len() + 1)?;
                    d.push((index, value));
                }
                Ok(())
            }
            other => Err(self.type_error(format!(
                "'{}' object does not support item assignment",
                other.type_name()
            ))),
        }
    }

    fn slice_bound(&self, v: Option<Value>) -> R<Option<BigInt>> {
        match v {
            None | Some(Value::None) => Ok(None),
            Some(v) => v.as_bigint().map(Some).ok_or_else(|| {
                self.type_error(
                    "slice indices must be integers or None or have an __index__ method",
                )
            }),
        }
    }

    fn slice(
        &self,
        container: &Value,
        lower: Option<Value>,
        upper: Option<Value>,
        step: Option<Value>,
    ) -> R<Value> {
        let step = self.slice_bound(step)?.unwrap_or_else(|| BigInt::from(1));
        if step == BigInt::from(0) {
            return Err(self.fault("ValueError", "slice step cannot be zero"));
        }
        let lower = self.slice_bound(lower)?;
        let upper = self.slice_bound(upper)?;
        let len = match container {
            Value::List(l) => l.borrow().len(),
            Value::Tuple(t) => t.len(),
            Value::Str(s) => s.chars().count(),
            Value::Range { .. } => {
                return Err(self.fault("UnsupportedConstruct", "range slicing is not supported"))
            }
            other => {
                return Err(self.type_error(format!(
                    "'{}' object is not subscriptable",
                    other.type_name()
                )))
            }
        };
        let indices = slice_indices(len as i64, lower, upper, &step);
        Ok(match container {
            Value::List(l) => {
                let items = l.borrow();
                Value::list(indices.iter().map(|&i| items[i].clone()).collect())
            }
            Value::Tuple(t) => Value::tuple(indices.iter().map(|&i| t[i].clone()).collect()),
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                Value::str(&indices.iter().map(|&i| chars[i]).collect::<String>())
            }
            _ => unreachable!(),
        })
    }

    // ---- iteration ----

    /// Materializes an iterable. Ranges are bounded by the collection limit.
    pub fn iterate(&self, v: &Value) -> R<Vec<Value>> {
        match v {
            Value::List(l) => Ok(l.borrow().clone()),
            Value::Tuple(t) | Value::View(_, t) => Ok(t.to_vec()),
            Value::Str(s) => Ok(s.chars().map(|c| Value::str(&c.to_string())).collect()),
            Value::Dict(d) => Ok(d.borrow().iter().map(|(k, _)| k.clone()).collect()),
            Value::Range { .. } => {
                let n = range_len(v);
                self.check_len(n as usize)?;
                Ok((0..n).map(|i| Value::int(range_item(v, i))).collect())
            }
            other => Err(self.type_error(format!(
                "'{}' object is not iterable",
                other.type_name()
            ))),
        }
    }
}

fn repeat_items(items: &[Value], n: usize) -> Vec<Value> {
    let mut out = Vec::with_capacity(items.len() * n);
    for _ in 0..n {
        out.extend(items.iter().cloned());
    }
    out
}

pub fn is_iterable(v: &Value) -> bool {
    matches!(
        v,
        Value::List(_) | Value::Tuple(_) | Value::View(..) | Value::Str(_) | Value::Dict(_) | Value::Range { .. }
    )
}

/// Index sequence selected by a slice over a sequence of `len` items.
pub fn slice_indices(len: i64, lower: Option<BigInt>, upper: Option<BigInt>, step: &BigInt) -> Vec<usize> {
    let clamp = |v: BigInt, lo: i64, hi: i64| -> i64 {
        v.to_i64().unwrap_or(if v.is_negative() { i64::MIN } else { i64::MAX }).clamp(lo, hi)
    };
    let step_i = step.to_i64().unwrap_or(if step.is_negative() { -len - 1 } else { len + 1 });
    let step_i = if step_i == 0 { 1 } else { step_i };
    let adjust = |v: Option<BigInt>, default: i64, lo: i64, hi: i64| -> i64 {
        match v {
            None => default,
            Some(b) => {
                let b = if b.is_negative() { b + BigInt::from(len) } else { b };
                clamp(b, lo, hi)
            }
        }
    };
    let (start, stop) = if step_i > 0 {
        (adjust(lower, 0, 0, len), adjust(upper, len, 0, len))
    } else {
        (adjust(lower, len - 1, -1, len - 1), adjust(upper, -1, -1, len - 1))
    };
    let mut out = Vec::new();
    let mut i = start;
    while (step_i > 0 && i < stop) || (step_i < 0 && i > stop) {
        out.push(i as usize);
        i += step_i;
    }
    out
}

/// Live iteration: lists are read by position each step, so appends made
/// by the loop body are observed.
struct Cursor {
    source: Value,
    snapshot: Option<Vec<Value>>,
    pos: usize,
}

impl Cursor {
    fn new(interp: &Interp, source: Value) -> R<Self> {
        let snapshot = match &source {
            Value::List(_) | Value::Range { .. } => None,
            other => Some(interp.iterate(other)?),
        };
        Ok(Self { source, snapshot, pos: 0 })
    }

    fn next(&mut self) -> Option<Value> {
        let item = match (&self.snapshot, &self.source) {
            (Some(items), _) => items.get(self.pos).cloned(),
            (None, Value::List(l)) => l.borrow().get(self.pos).cloned(),
            (None, r @ Value::Range { .. }) => {
                ((self.pos as i64) < range_len(r)).then(|| Value::int(range_item(r, self.pos as i64)))
            }
            _ => None,
        };
        self.pos += 1;
        item
    }
}
