use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::ast::FunctionDef;
use crate::numeric::{format_real, Number};

pub type ListRef = Rc<RefCell<Vec<Value>>>;
pub type DictRef = Rc<RefCell<Vec<(Value, Value)>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewKind {
    Keys,
    Values,
    Items,
}

#[derive(Debug, Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(Rc<str>),
    List(ListRef),
    Tuple(Rc<[Value]>),
    Dict(DictRef),
    /// Snapshot of a dict's keys, values or items.
    View(ViewKind, Rc<[Value]>),
    Range { start: i64, stop: i64, step: i64 },
    Function(Arc<FunctionDef>),
    Builtin(&'static str),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Rc::from(items))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Dict(_) => "dict",
            Value::View(ViewKind::Keys, _) => "dict_keys",
            Value::View(ViewKind::Values, _) => "dict_values",
            Value::View(ViewKind::Items, _) => "dict_items",
            Value::Range { .. } => "range",
            Value::Function(_) => "function",
            Value::Builtin(_) => "builtin_function_or_method",
        }
    }

    /// Numeric view; bools count as integers.
    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Bool(b) => Some(Number::int(i64::from(*b))),
            Value::Int(i) => Some(Number::Int(i.clone())),
            Value::Float(f) => Some(Number::Real(*f)),
            _ => None,
        }
    }

    pub fn from_number(n: Number) -> Value {
        match n {
            Number::Int(i) => Value::Int(i),
            Number::Real(r) => Value::Float(r),
        }
    }

    /// Integer view used for indices and counts; bools count as integers.
    pub fn as_bigint(&self) -> Option<BigInt> {
        match self {
            Value::Bool(b) => Some(BigInt::from(u8::from(*b))),
            Value::Int(i) => Some(i.clone()),
            _ => None,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => !i.is_zero(),
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) => !l.borrow().is_empty(),
            Value::Tuple(t) => !t.is_empty(),
            Value::Dict(d) => !d.borrow().is_empty(),
            Value::View(_, items) => !items.is_empty(),
            Value::Range { .. } => range_len(self) > 0,
            Value::Function(_) | Value::Builtin(_) => true,
        }
    }

    pub fn is_hashable(&self) -> bool {
        match self {
            Value::List(_) | Value::Dict(_) | Value::View(..) => false,
            Value::Tuple(items) => items.iter().all(Value::is_hashable),
            _ => true,
        }
    }

    /// `str()` rendering.
    pub fn to_str(&self) -> String {
        match self {
            Value::Str(s) => s.to_string(),
            other => other.repr(),
        }
    }

    /// `repr()` rendering.
    pub fn repr(&self) -> String {
        let mut out = String::new();
        self.write_repr(&mut out, &mut Vec::new());
        out
    }

    fn write_repr(&self, out: &mut String, active: &mut Vec<usize>) {
        match self {
            Value::None => out.push_str("None"),
            Value::Bool(true) => out.push_str("True"),
            Value::Bool(false) => out.push_str("False"),
            Value::Int(i) => out.push_str(&i.to_string()),
            Value::Float(f) => out.push_str(&format_real(*f)),
            Value::Str(s) => out.push_str(&quote_str(s)),
            Value::List(l) => {
                let id = Rc::as_ptr(l) as usize;
                if active.contains(&id) {
                    out.push_str("[...]");
                    return;
                }
                active.push(id);
                out.push('[');
                write_items(&l.borrow(), out, active);
                out.push(']');
                active.pop();
            }
            Value::Tuple(t) => {
                out.push('(');
                write_items(t, out, active);
                if t.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            Value::Dict(d) => {
                let id = Rc::as_ptr(d) as usize;
                if active.contains(&id) {
                    out.push_str("{...}");
                    return;
                }
                active.push(id);
                out.push('{');
                for (i, (k, v)) in d.borrow().iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.write_repr(out, active);
                    out.push_str(": ");
                    v.write_repr(out, active);
                }
                out.push('}');
                active.pop();
            }
            Value::View(_, items) => {
                out.push_str(self.type_name());
                out.push_str("([");
                write_items(items, out, active);
                out.push_str("])");
            }
            Value::Range { start, stop, step } => {
                if *step == 1 {
                    out.push_str(&format!("range({start}, {stop})"));
                } else {
                    out.push_str(&format!("range({start}, {stop}, {step})"));
                }
            }
            Value::Function(f) => out.push_str(&format!("<function {}>", f.name)),
            Value::Builtin(name) => out.push_str(&format!("<built-in function {name}>")),
        }
    }
}

fn write_items(items: &[Value], out: &mut String, active: &mut Vec<usize>) {
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        v.write_repr(out, active);
    }
}

/// Quotes a string the way the reference runtime's `repr` does.
pub fn quote_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

pub fn range_len(v: &Value) -> i64 {
    let Value::Range { start, stop, step } = *v else { return 0 };
    let (start, stop, step) = (i128::from(start), i128::from(stop), i128::from(step));
    let n = if step > 0 && start < stop {
        (stop - start - 1) / step + 1
    } else if step < 0 && start > stop {
        (start - stop - 1) / (-step) + 1
    } else {
        0
    };
    n as i64
}

pub fn range_item(v: &Value, i: i64) -> i64 {
    let Value::Range { start, step, .. } = *v else { return 0 };
    start + step * i
}

/// Equality with the reference runtime's cross-type numeric rules.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
        return x.compare(&y) == Some(Ordering::Equal);
    }
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => {
            Rc::ptr_eq(x, y) || seq_equal(&x.borrow(), &y.borrow())
        }
        (Value::Tuple(x), Value::Tuple(y)) => seq_equal(x, y),
        (Value::Dict(x), Value::Dict(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len()
                && x.iter().all(|(k, v)| {
                    y.iter().any(|(k2, v2)| values_equal(k, k2) && values_equal(v, v2))
                })
        }
        (Value::View(ka, x), Value::View(kb, y)) => ka == kb && seq_equal(x, y),
        (Value::Range { .. }, Value::Range { .. }) => {
            let (la, lb) = (range_len(a), range_len(b));
            la == lb
                && (la == 0
                    || (range_item(a, 0) == range_item(b, 0)
                        && (la == 1 || range_item(a, 1) == range_item(b, 1))))
        }
        (Value::Function(x), Value::Function(y)) => Arc::ptr_eq(x, y),
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        _ => false,
    }
}

fn seq_equal(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_equal(x, y))
}

/// Identity as observable for the supported types.
pub fn values_identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::List(x), Value::List(y)) => Rc::ptr_eq(x, y),
        (Value::Dict(x), Value::Dict(y)) => Rc::ptr_eq(x, y),
        (Value::Tuple(x), Value::Tuple(y)) => Rc::ptr_eq(x, y) || (x.is_empty() && y.is_empty()),
        (Value::Int(x), Value::Int(y)) => {
            // Small integers are shared by the reference runtime.
            x == y && x.to_i64().is_some_and(|v| (-5..=256).contains(&v))
        }
        (Value::Str(x), Value::Str(y)) => Rc::ptr_eq(x, y) || (x == y && x.len() <= 1),
        (Value::Function(x), Value::Function(y)) => Arc::ptr_eq(x, y),
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        _ => false,
    }
}

/// Ordering for `<`-family operators. `None` means the types are not
/// orderable against each other.
pub fn values_order(a: &Value, b: &Value) -> Option<Option<Ordering>> {
    if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
        return Some(x.compare(&y));
    }
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => Some(Some(x.cmp(y))),
        (Value::List(x), Value::List(y)) => seq_order(&x.borrow().clone(), &y.borrow().clone()),
        (Value::Tuple(x), Value::Tuple(y)) => seq_order(x, y),
        _ => None,
    }
}

fn seq_order(a: &[Value], b: &[Value]) -> Option<Option<Ordering>> {
    for (x, y) in a.iter().zip(b) {
        if !values_equal(x, y) {
            return values_order(x, y);
        }
    }
    Some(Some(a.len().cmp(&b.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reprs() {
        let l = Value::list(vec![Value::int(1), Value::str("a"), Value::Float(2.5), Value::None]);
        assert_eq!(l.repr(), "[1, 'a', 2.5, None]");
        assert_eq!(l.to_str(), "[1, 'a', 2.5, None]");
        assert_eq!(Value::str("hi").to_str(), "hi");
        assert_eq!(Value::str("it's").repr(), "\"it's\"");
        assert_eq!(Value::str("a\nb").repr(), "'a\\nb'");
        assert_eq!(Value::tuple(vec![Value::int(1)]).repr(), "(1,)");
        assert_eq!(Value::tuple(vec![]).repr(), "()");
        assert_eq!(Value::Range { start: 0, stop: 3, step: 1 }.repr(), "range(0, 3)");
        assert_eq!(Value::Bool(true).repr(), "True");
    }

    #[test]
    fn self_referential_list_renders() {
        let l = Value::list(vec![Value::int(1)]);
        if let Value::List(r) = &l {
            r.borrow_mut().push(l.clone());
        }
        assert_eq!(l.repr(), "[1, [...]]");
    }

    #[test]
    fn equality_crosses_numeric_types() {
        assert!(values_equal(&Value::int(1), &Value::Float(1.0)));
        assert!(values_equal(&Value::Bool(true), &Value::int(1)));
        assert!(!values_equal(&Value::int(1), &Value::str("1")));
        assert!(values_equal(
            &Value::list(vec![Value::int(1)]),
            &Value::list(vec![Value::Float(1.0)])
        ));
    }

    #[test]
    fn ordering() {
        assert_eq!(values_order(&Value::str("a"), &Value::str("b")), Some(Some(Ordering::Less)));
        assert_eq!(values_order(&Value::int(1), &Value::str("b")), None);
        assert_eq!(
            values_order(
                &Value::list(vec![Value::int(1), Value::int(2)]),
                &Value::list(vec![Value::int(1)])
            ),
            Some(Some(Ordering::Greater))
        );
    }

    #[test]
    fn range_lengths() {
        assert_eq!(range_len(&Value::Range { start: 0, stop: 10, step: 3 }), 4);
        assert_eq!(range_len(&Value::Range { start: 10, stop: 0, step: -2 }), 5);
        assert_eq!(range_len(&Value::Range { start: 0, stop: 0, step: 1 }), 0);
    }
}
