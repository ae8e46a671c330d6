use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::interp::{Interp, R};
use super::value::*;
use crate::numeric::{float_to_bigint, Number};

type Kwargs = Vec<(String, Value)>;

fn take_kwarg(kwargs: &mut Kwargs, name: &str) -> Option<Value> {
    let pos = kwargs.iter().position(|(k, _)| k == name)?;
    Some(kwargs.remove(pos).1)
}

fn reject_kwargs(it: &Interp, func: &str, kwargs: &Kwargs) -> R<()> {
    match kwargs.first() {
        None => Ok(()),
        Some((k, _)) => Err(it.type_error(format!(
            "{func}() got an unexpected keyword argument '{k}'"
        ))),
    }
}

fn arity(it: &Interp, func: &str, args: &[Value], min: usize, max: usize) -> R<()> {
    if args.len() >= min && args.len() <= max {
        return Ok(());
    }
    let msg = if min == max {
        match min {
            0 => format!("{func}() takes no arguments ({} given)", args.len()),
            1 => format!("{func}() takes exactly one argument ({} given)", args.len()),
            n => format!("{func}() takes exactly {n} arguments ({} given)", args.len()),
        }
    } else if args.len() < min {
        format!("{func}() takes at least {min} argument{} ({} given)", if min == 1 { "" } else { "s" }, args.len())
    } else {
        format!("{func}() takes at most {max} argument{} ({} given)", if max == 1 { "" } else { "s" }, args.len())
    };
    Err(it.type_error(msg))
}

fn as_index(it: &Interp, v: &Value) -> R<BigInt> {
    v.as_bigint().ok_or_else(|| {
        it.type_error(format!(
            "'{}' object cannot be interpreted as an integer",
            v.type_name()
        ))
    })
}

fn as_i64(it: &Interp, v: &Value) -> R<i64> {
    as_index(it, v)?
        .to_i64()
        .ok_or_else(|| it.fault("OverflowError", "Python int too large to convert to C ssize_t"))
}

fn opt_str(it: &Interp, func: &str, v: Option<Value>, default: &str) -> R<String> {
    match v {
        None | Some(Value::None) => Ok(default.to_string()),
        Some(Value::Str(s)) => Ok(s.to_string()),
        Some(other) => Err(it.type_error(format!(
            "{func} must be None or a string, not {}",
            other.type_name()
        ))),
    }
}

pub fn call_builtin(it: &mut Interp, name: &str, args: Vec<Value>, mut kwargs: Kwargs) -> R<Value> {
    match name {
        "print" => {
            let sep = take_kwarg(&mut kwargs, "sep");
            let end = take_kwarg(&mut kwargs, "end");
            reject_kwargs(it, "print", &kwargs)?;
            let sep = opt_str(it, "sep", sep, " ")?;
            let end = opt_str(it, "end", end, "\n")?;
            let mut line = args.iter().map(Value::to_str).collect::<Vec<_>>().join(&sep);
            line.push_str(&end);
            it.write_out(&line)?;
            Ok(Value::None)
        }
        "len" => {
            reject_kwargs(it, "len", &kwargs)?;
            arity(it, "len", &args, 1, 1)?;
            let n = match &args[0] {
                Value::Str(s) => s.chars().count(),
                Value::List(l) => l.borrow().len(),
                Value::Tuple(t) | Value::View(_, t) => t.len(),
                Value::Dict(d) => d.borrow().len(),
                r @ Value::Range { .. } => range_len(r) as usize,
                other => {
                    return Err(it.type_error(format!(
                        "object of type '{}' has no len()",
                        other.type_name()
                    )))
                }
            };
            Ok(Value::int(n as i64))
        }
        "range" => {
            reject_kwargs(it, "range", &kwargs)?;
            if args.is_empty() {
                return Err(it.type_error("range expected at least 1 argument, got 0"));
            }
            if args.len() > 3 {
                return Err(it.type_error(format!("range expected at most 3 arguments, got {}", args.len())));
            }
            let nums = args.iter().map(|a| as_i64(it, a)).collect::<R<Vec<_>>>()?;
            let (start, stop, step) = match nums.as_slice() {
                [stop] => (0, *stop, 1),
                [start, stop] => (*start, *stop, 1),
                [start, stop, step] => (*start, *stop, *step),
                _ => unreachable!(),
            };
            if step == 0 {
                return Err(it.fault("ValueError", "range() arg 3 must not be zero"));
            }
            Ok(Value::Range { start, stop, step })
        }
        "int" => {
            reject_kwargs(it, "int", &kwargs)?;
            arity(it, "int", &args, 0, 2)?;
            if args.len() == 2 {
                let base = as_i64(it, &args[1])?;
                let Value::Str(s) = &args[0] else {
                    return Err(it.type_error("int() can't convert non-string with explicit base"));
                };
                if !(2..=36).contains(&base) {
                    return Err(it.fault("ValueError", "int() base must be >= 2 and <= 36, or 0"));
                }
                return parse_int(it, s, base as u32);
            }
            match args.first() {
                None => Ok(Value::int(0)),
                Some(Value::Float(f)) => {
                    if f.is_nan() {
                        Err(it.fault("ValueError", "cannot convert float NaN to integer"))
                    } else if f.is_infinite() {
                        Err(it.fault("OverflowError", "cannot convert float infinity to integer"))
                    } else {
                        Ok(Value::Int(float_to_bigint(f.trunc())))
                    }
                }
                Some(Value::Str(s)) => parse_int(it, s, 10),
                Some(v) => match v.as_bigint() {
                    Some(i) => Ok(Value::Int(i)),
                    None => Err(it.type_error(format!(
                        "int() argument must be a string, a bytes-like object or a number, not '{}'",
                        v.type_name()
                    ))),
                },
            }
        }
        "float" => {
            reject_kwargs(it, "float", &kwargs)?;
            arity(it, "float", &args, 0, 1)?;
            match args.first() {
                None => Ok(Value::Float(0.0)),
                Some(Value::Str(s)) => parse_float(s)
                    .map(Value::Float)
                    .ok_or_else(|| it.fault("ValueError", format!("could not convert string to float: {}", quote_str(s)))),
                Some(v) => match v.as_number() {
                    Some(n) => n.to_f64().map(Value::Float).map_err(|_| {
                        it.fault("OverflowError", "int too large to convert to float")
                    }),
                    None => Err(it.type_error(format!(
                        "float() argument must be a string or a number, not '{}'",
                        v.type_name()
                    ))),
                },
            }
        }
        "str" => {
            reject_kwargs(it, "str", &kwargs)?;
            arity(it, "str", &args, 0, 1)?;
            let s = args.first().map(Value::to_str).unwrap_or_default();
            it.check_str(s.len())?;
            Ok(Value::str(&s))
        }
        "bool" => {
            reject_kwargs(it, "bool", &kwargs)?;
            arity(it, "bool", &args, 0, 1)?;
            Ok(Value::Bool(args.first().is_some_and(Value::truthy)))
        }
        "list" => {
            reject_kwargs(it, "list", &kwargs)?;
            arity(it, "list", &args, 0, 1)?;
            match args.first() {
                None => Ok(Value::list(Vec::new())),
                Some(v) => {
                    let items = it.iterate(v)?;
                    it.check_len(items.len())?;
                    Ok(Value::list(items))
                }
            }
        }
        "abs" => {
            reject_kwargs(it, "abs", &kwargs)?;
            arity(it, "abs", &args, 1, 1)?;
            match args[0].as_number() {
                Some(Number::Int(i)) => Ok(Value::Int(i.abs())),
                Some(Number::Real(f)) => Ok(Value::Float(f.abs())),
                None => Err(it.type_error(format!(
                    "bad operand type for abs(): '{}'",
                    args[0].type_name()
                ))),
            }
        }
        "min" | "max" => extremum(it, name, args, kwargs),
        "sum" => {
            reject_kwargs(it, "sum", &kwargs)?;
            if args.is_empty() {
                return Err(it.type_error("sum() takes at least 1 positional argument (0 given)"));
            }
            if args.len() > 2 {
                return Err(it.type_error(format!("sum() takes at most 2 arguments ({} given)", args.len())));
            }
            let mut total = args.get(1).cloned().unwrap_or_else(|| Value::int(0));
            if matches!(total, Value::Str(_)) {
                return Err(it.type_error("sum() can't sum strings [use ''.join(seq) instead]"));
            }
            for item in it.iterate(&args[0])? {
                total = it.binary(super::ast::BinOp::Add, &total, &item)?;
            }
            Ok(total)
        }
        "sorted" => {
            let key = take_kwarg(&mut kwargs, "key");
            let reverse = take_kwarg(&mut kwargs, "reverse");
            reject_kwargs(it, "sorted", &kwargs)?;
            if args.len() != 1 {
                return Err(it.type_error(format!("sorted expected 1 argument, got {}", args.len())));
            }
            let items = it.iterate(&args[0])?;
            let sorted = sort_values(it, items, key, reverse)?;
            Ok(Value::list(sorted))
        }
        "enumerate" => {
            let start = take_kwarg(&mut kwargs, "start");
            reject_kwargs(it, "enumerate", &kwargs)?;
            arity(it, "enumerate", &args, 1, 2)?;
            let start = match args.get(1).or(start.as_ref()) {
                Some(v) => as_index(it, v)?,
                None => BigInt::zero(),
            };
            let items = it.iterate(&args[0])?;
            Ok(Value::list(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| Value::tuple(vec![Value::Int(&start + i), v]))
                    .collect(),
            ))
        }
        other => Err(it.fault("NameError", format!("name '{other}' is not defined"))),
    }
}

fn parse_int(it: &Interp, s: &str, base: u32) -> R<Value> {
    let invalid = || {
        it.fault(
            "ValueError",
            format!("invalid literal for int() with base {base}: {}", quote_str(s)),
        )
    };
    let t = s.trim();
    let (neg, digits) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    if digits.is_empty()
        || digits.starts_with('_')
        || digits.ends_with('_')
        || digits.contains("__")
    {
        return Err(invalid());
    }
    let clean: String = digits.chars().filter(|c| *c != '_').collect();
    let v = BigInt::parse_bytes(clean.as_bytes(), base).ok_or_else(invalid)?;
    Ok(Value::Int(if neg { -v } else { v }))
}

fn parse_float(s: &str) -> Option<f64> {
    let t = s.trim();
    let body = t.trim_start_matches(['+', '-']);
    if t.len() - body.len() > 1 {
        return None;
    }
    let lower = body.to_ascii_lowercase();
    if matches!(lower.as_str(), "inf" | "infinity" | "nan") {
        return t.parse().ok();
    }
    if !body.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')) {
        return None;
    }
    t.parse().ok()
}

fn extremum(it: &mut Interp, name: &str, args: Vec<Value>, mut kwargs: Kwargs) -> R<Value> {
    let key = take_kwarg(&mut kwargs, "key");
    let default = take_kwarg(&mut kwargs, "default");
    reject_kwargs(it, name, &kwargs)?;
    let items = match args.len() {
        0 => {
            return Err(it.type_error(format!("{name} expected at least 1 argument, got 0")));
        }
        1 => it.iterate(&args[0])?,
        _ => {
            if default.is_some() {
                return Err(it.type_error(format!(
                    "Cannot specify a default for {name}() with multiple positional arguments"
                )));
            }
            args
        }
    };
    let mut best: Option<(Value, Value)> = None;
    for item in items {
        let k = match &key {
            Some(f) if !matches!(f, Value::None) => it.call_value(f, vec![item.clone()], Vec::new())?,
            _ => item.clone(),
        };
        best = Some(match best {
            None => (k, item),
            Some((bk, bv)) => {
                let better = if name == "min" { it.less_than(&k, &bk)? } else { it.less_than(&bk, &k)? };
                if better { (k, item) } else { (bk, bv) }
            }
        });
    }
    match (best, default) {
        (Some((_, v)), _) => Ok(v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(it.fault("ValueError", format!("{name}() arg is an empty sequence"))),
    }
}

/// Stable merge sort whose comparator may fail.
pub fn sort_values(
    it: &mut Interp,
    items: Vec<Value>,
    key: Option<Value>,
    reverse: Option<Value>,
) -> R<Vec<Value>> {
    let reverse = reverse.is_some_and(|r| r.truthy());
    let mut keyed = Vec::with_capacity(items.len());
    for item in items {
        let k = match &key {
            Some(f) if !matches!(f, Value::None) => it.call_value(f, vec![item.clone()], Vec::new())?,
            _ => item.clone(),
        };
        keyed.push((k, item));
    }
    if reverse {
        keyed.reverse();
    }
    let mut sorted = merge_sort(it, keyed)?;
    if reverse {
        sorted.reverse();
    }
    Ok(sorted.into_iter().map(|(_, v)| v).collect())
}

fn merge_sort(it: &Interp, mut v: Vec<(Value, Value)>) -> R<Vec<(Value, Value)>> {
    if v.len() <= 1 {
        return Ok(v);
    }
    let right = v.split_off(v.len() / 2);
    let left = merge_sort(it, v)?;
    let right = merge_sort(it, right)?;
    let mut out = Vec::with_capacity(left.len() + right.len());
    let mut l = left.into_iter().peekable();
    let mut r = right.into_iter().peekable();
    while let (Some(a), Some(b)) = (l.peek(), r.peek()) {
        if it.less_than(&b.0, &a.0)? {
            out.push(r.next().expect("peeked"));
        } else {
            out.push(l.next().expect("peeked"));
        }
    }
    out.extend(l);
    out.extend(r);
    Ok(out)
}

pub fn call_method(
    it: &mut Interp,
    recv: Value,
    method: &str,
    args: Vec<Value>,
    kwargs: Kwargs,
) -> R<Value> {
    match &recv {
        Value::List(_) => list_method(it, &recv, method, args, kwargs),
        Value::Str(s) => {
            let s = s.clone();
            reject_kwargs(it, &format!("str.{method}"), &kwargs)?;
            str_method(it, &s, method, args)
        }
        Value::Dict(_) => {
            reject_kwargs(it, &format!("dict.{method}"), &kwargs)?;
            dict_method(it, &recv, method, args)
        }
        other => Err(no_attribute(it, other, method)),
    }
}

fn no_attribute(it: &Interp, v: &Value, method: &str) -> super::interp::Fault {
    it.fault(
        "AttributeError",
        format!("'{}' object has no attribute '{method}'", v.type_name()),
    )
}

fn list_method(it: &mut Interp, recv: &Value, method: &str, args: Vec<Value>, mut kwargs: Kwargs) -> R<Value> {
    let Value::List(l) = recv else { unreachable!() };
    let qual = format!("list.{method}");
    if method != "sort" {
        reject_kwargs(it, &qual, &kwargs)?;
    }
    match method {
        "append" => {
            arity(it, &qual, &args, 1, 1)?;
            it.check_len(l.borrow().len() + 1)?;
            l.borrow_mut().push(args.into_iter().next().expect("arity"));
            Ok(Value::None)
        }
        "extend" => {
            arity(it, &qual, &args, 1, 1)?;
            let extra = it.iterate(&args[0])?;
            it.check_len(l.borrow().len() + extra.len())?;
            l.borrow_mut().extend(extra);
            Ok(Value::None)
        }
        "insert" => {
            arity(it, &qual, &args, 2, 2)?;
            let len = l.borrow().len() as i64;
            it.check_len(len as usize + 1)?;
            let i = as_index(it, &args[0])?;
            let i = i.to_i64().unwrap_or(if i.is_negative() { i64::MIN } else { i64::MAX });
            let i = if i < 0 { (i + len).max(0) } else { i.min(len) };
            l.borrow_mut().insert(i as usize, args[1].clone());
            Ok(Value::None)
        }
        "pop" => {
            arity(it, &qual, &args, 0, 1)?;
            let len = l.borrow().len();
            if len == 0 {
                return Err(it.fault("IndexError", "pop from empty list"));
            }
            let i = match args.first() {
                None => BigInt::from(-1),
                Some(v) => as_index(it, v)?,
            };
            let adj = if i.is_negative() { i + BigInt::from(len) } else { i };
            match adj.to_usize().filter(|&i| i < len) {
                Some(i) => Ok(l.borrow_mut().remove(i)),
                None => Err(it.fault("IndexError", "pop index out of range")),
            }
        }
        "remove" => {
            arity(it, &qual, &args, 1, 1)?;
            let pos = l.borrow().iter().position(|v| values_equal(v, &args[0]));
            match pos {
                Some(i) => {
                    l.borrow_mut().remove(i);
                    Ok(Value::None)
                }
                None => Err(it.fault("ValueError", "list.remove(x): x not in list")),
            }
        }
        "index" => {
            arity(it, &qual, &args, 1, 1)?;
            let pos = l.borrow().iter().position(|v| values_equal(v, &args[0]));
            pos.map(|i| Value::int(i as i64))
                .ok_or_else(|| it.fault("ValueError", format!("{} is not in list", args[0].repr())))
        }
        "count" => {
            arity(it, &qual, &args, 1, 1)?;
            let n = l.borrow().iter().filter(|v| values_equal(v, &args[0])).count();
            Ok(Value::int(n as i64))
        }
        "reverse" => {
            arity(it, &qual, &args, 0, 0)?;
            l.borrow_mut().reverse();
            Ok(Value::None)
        }
        "sort" => {
            if !args.is_empty() {
                return Err(it.type_error("sort() takes no positional arguments"));
            }
            let key = take_kwarg(&mut kwargs, "key");
            let reverse = take_kwarg(&mut kwargs, "reverse");
            reject_kwargs(it, "sort", &kwargs)?;
            let items = std::mem::take(&mut *l.borrow_mut());
            let snapshot = items.clone();
            match sort_values(it, items, key, reverse) {
                Ok(sorted) => {
                    *l.borrow_mut() = sorted;
                    Ok(Value::None)
                }
                Err(e) => {
                    *l.borrow_mut() = snapshot;
                    Err(e)
                }
            }
        }
        _ => Err(no_attribute(it, recv, method)),
    }
}

fn char_to_byte(s: &str, char_idx: usize) -> usize {
    s.char_indices().nth(char_idx).map(|(b, _)| b).unwrap_or(s.len())
}

fn str_method(it: &mut Interp, s: &str, method: &str, args: Vec<Value>) -> R<Value> {
    let qual = format!("str.{method}");
    let want_str = |it: &Interp, v: &Value, what: &str| -> R<String> {
        match v {
            Value::Str(x) => Ok(x.to_string()),
            other => Err(it.type_error(format!(
                "{what} must be str, not {}",
                other.type_name()
            ))),
        }
    };
    match method {
        "upper" => {
            arity(it, &qual, &args, 0, 0)?;
            Ok(Value::str(&s.to_uppercase()))
        }
        "lower" => {
            arity(it, &qual, &args, 0, 0)?;
            Ok(Value::str(&s.to_lowercase()))
        }
        "strip" => {
            arity(it, &qual, &args, 0, 1)?;
            match args.first() {
                None | Some(Value::None) => Ok(Value::str(s.trim())),
                Some(Value::Str(chars)) => {
                    Ok(Value::str(s.trim_matches(|c| chars.contains(c))))
                }
                Some(other) => Err(it.type_error(format!(
                    "strip arg must be None or str, not {}",
                    other.type_name()
                ))),
            }
        }
        "split" => {
            arity(it, &qual, &args, 0, 2)?;
            let maxsplit = match args.get(1) {
                Some(v) => as_i64(it, v)?,
                None => -1,
            };
            let parts: Vec<String> = match args.first() {
                None | Some(Value::None) => split_whitespace(s, maxsplit),
                Some(Value::Str(sep)) => {
                    if sep.is_empty() {
                        return Err(it.fault("ValueError", "empty separator"));
                    }
                    if maxsplit < 0 {
                        s.split(&**sep).map(str::to_string).collect()
                    } else {
                        s.splitn(maxsplit as usize + 1, &**sep).map(str::to_string).collect()
                    }
                }
                Some(other) => {
                    return Err(it.type_error(format!(
                        "must be str or None, not {}",
                        other.type_name()
                    )))
                }
            };
            it.check_len(parts.len())?;
            Ok(Value::list(parts.iter().map(|p| Value::str(p)).collect()))
        }
        "join" => {
            arity(it, &qual, &args, 1, 1)?;
            let items = it.iterate(&args[0])?;
            let mut pieces = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Str(p) => pieces.push(p.to_string()),
                    other => {
                        return Err(it.type_error(format!(
                            "sequence item {i}: expected str instance, {} found",
                            other.type_name()
                        )))
                    }
                }
            }
            let out = pieces.join(s);
            it.check_str(out.len())?;
            Ok(Value::str(&out))
        }
        "replace" => {
            arity(it, &qual, &args, 2, 3)?;
            let old = want_str(it, &args[0], "replace() argument 1")?;
            let new = want_str(it, &args[1], "replace() argument 2")?;
            let count = match args.get(2) {
                Some(v) => as_i64(it, v)?,
                None => -1,
            };
            let out = if count < 0 {
                s.replace(&old, &new)
            } else if old.is_empty() {
                let mut out = String::new();
                let mut n = 0;
                for c in s.chars() {
                    if n < count {
                        out.push_str(&new);
                        n += 1;
                    }
                    out.push(c);
                }
                if n < count {
                    out.push_str(&new);
                }
                out
            } else {
                s.replacen(&old, &new, count as usize)
            };
            it.check_str(out.len())?;
            Ok(Value::str(&out))
        }
        "find" | "index" => {
            arity(it, &qual, &args, 1, 2)?;
            let sub = want_str(it, &args[0], "must be str, not")
                .map_err(|_| it.type_error(format!("must be str, not {}", args[0].type_name())))?;
            let n = s.chars().count() as i64;
            let start = match args.get(1) {
                Some(v) => {
                    let i = as_i64(it, v)?;
                    if i < 0 { (i + n).max(0) } else { i }
                }
                None => 0,
            };
            let found = if start > n {
                None
            } else {
                let from = char_to_byte(s, start as usize);
                s[from..].find(&sub).map(|b| start + s[from..from + b].chars().count() as i64)
            };
            match (found, method) {
                (Some(i), _) => Ok(Value::int(i)),
                (None, "find") => Ok(Value::int(-1)),
                (None, _) => Err(it.fault("ValueError", "substring not found")),
            }
        }
        "count" => {
            arity(it, &qual, &args, 1, 1)?;
            let sub = match &args[0] {
                Value::Str(x) => x.to_string(),
                other => {
                    return Err(it.type_error(format!("must be str, not {}", other.type_name())))
                }
            };
            let n = if sub.is_empty() { s.chars().count() + 1 } else { s.matches(&sub).count() };
            Ok(Value::int(n as i64))
        }
        _ => Err(it.fault(
            "AttributeError",
            format!("'str' object has no attribute '{method}'"),
        )),
    }
}

fn split_whitespace(s: &str, maxsplit: i64) -> Vec<String> {
    if maxsplit < 0 {
        return s.split_whitespace().map(str::to_string).collect();
    }
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        if out.len() as i64 == maxsplit {
            out.push(rest.to_string());
            break;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        out.push(rest[..end].to_string());
        rest = rest[end..].trim_start();
    }
    out
}

fn dict_method(it: &mut Interp, recv: &Value, method: &str, args: Vec<Value>) -> R<Value> {
    let Value::Dict(d) = recv else { unreachable!() };
    let qual = format!("dict.{method}");
    let view = |kind: ViewKind| {
        let items: Vec<Value> = d
            .borrow()
            .iter()
            .map(|(k, v)| match kind {
                ViewKind::Keys => k.clone(),
                ViewKind::Values => v.clone(),
                ViewKind::Items => Value::tuple(vec![k.clone(), v.clone()]),
            })
            .collect();
        Value::View(kind, items.into())
    };
    match method {
        "keys" => {
            arity(it, &qual, &args, 0, 0)?;
            Ok(view(ViewKind::Keys))
        }
        "values" => {
            arity(it, &qual, &args, 0, 0)?;
            Ok(view(ViewKind::Values))
        }
        "items" => {
            arity(it, &qual, &args, 0, 0)?;
            Ok(view(ViewKind::Items))
        }
        "get" => {
            if args.is_empty() || args.len() > 2 {
                return Err(it.type_error(format!("get expected at least 1 argument, got {}", args.len())));
            }
            it.require_hashable(&args[0])?;
            let found = d
                .borrow()
                .iter()
                .find(|(k, _)| values_equal(k, &args[0]))
                .map(|(_, v)| v.clone());
            Ok(found.unwrap_or_else(|| args.get(1).cloned().unwrap_or(Value::None)))
        }
        "pop" => {
            if args.is_empty() || args.len() > 2 {
                return Err(it.type_error(format!("pop expected at least 1 argument, got {}", args.len())));
            }
            it.require_hashable(&args[0])?;
            let pos = d.borrow().iter().position(|(k, _)| values_equal(k, &args[0]));
            match (pos, args.get(1)) {
                (Some(i), _) => Ok(d.borrow_mut().remove(i).1),
                (None, Some(default)) => Ok(default.clone()),
                (None, None) => Err(it.fault("KeyError", args[0].repr())),
            }
        }
        _ => Err(no_attribute(it, recv, method)),
    }
}
