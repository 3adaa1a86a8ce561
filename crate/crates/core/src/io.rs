//! JSON tensor files.
//!
//! Canonical form: `{"order": m, "dim": n, "format": "coo", "entries": [[[i1, .., im], value], ..]}`
//! with 0-based indices and unspecified entries zero. The alternate `"dense"`
//! format stores `entries` as nested arrays of depth `m`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tensor::{advance, Tensor};

#[derive(Debug, Serialize, Deserialize)]
struct CooFile {
    order: usize,
    dim: usize,
    format: String,
    entries: Vec<(Vec<usize>, f64)>,
}

/// Serialize as canonical COO, nonzeros in lexicographic index order.
pub fn to_json(t: &Tensor) -> String {
    let mut entries = Vec::new();
    let mut idx = vec![0usize; t.order()];
    for &v in t.entries() {
        if v != 0.0 {
            entries.push((idx.clone(), v));
        }
        advance(&mut idx, t.dim());
    }
    let file = CooFile {
        order: t.order(),
        dim: t.dim(),
        format: "coo".into(),
        entries,
    };
    serde_json::to_string_pretty(&file).expect("tensor file serializes")
}

pub fn to_value(t: &Tensor) -> Value {
    serde_json::from_str(&to_json(t)).expect("tensor file reparses")
}

/// Parse either tensor format. Non-finite literals are reported with their index.
pub fn from_json(text: &str) -> Result<Tensor> {
    let v: Value = serde_json::from_str(&quote_nonfinite(text))?;
    from_value(&v)
}

/// Also accepts a fixture file, reading its `tensor` field.
pub fn from_value(v: &Value) -> Result<Tensor> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Format("top level must be an object".into()))?;
    if let (Some(inner), None) = (obj.get("tensor"), obj.get("entries")) {
        return from_value(inner);
    }
    let order = get_usize(obj, "order")?;
    let dim = get_usize(obj, "dim")?;
    if order < 2 {
        return Err(Error::OrderTooSmall(order));
    }
    let format = match obj.get("format") {
        None => "coo",
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(Error::Format("\"format\" must be a string".into())),
    };
    let entries = obj
        .get("entries")
        .ok_or_else(|| Error::Format("missing \"entries\"".into()))?;
    match format {
        "coo" => parse_coo(order, dim, entries),
        "dense" => parse_dense(order, dim, entries),
        other => Err(Error::Format(format!("unknown format {other:?}"))),
    }
}

fn get_usize(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Format(format!("\"{key}\" must be a nonnegative integer")))
}

fn number(v: &Value, index: &[usize]) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::NonFinite {
                index: index.to_vec(),
            }),
        Value::String(s) if NONFINITE.contains(&s.as_str()) => Err(Error::NonFinite {
            index: index.to_vec(),
        }),
        _ => Err(Error::Format(format!("entry at {index:?} is not a number"))),
    }
}

fn parse_coo(order: usize, dim: usize, entries: &Value) -> Result<Tensor> {
    let list = entries
        .as_array()
        .ok_or_else(|| Error::Format("coo entries must be an array".into()))?;
    let mut coo = Vec::with_capacity(list.len());
    for item in list {
        let pair = item
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| Error::Format("coo entry must be [[indices], value]".into()))?;
        let idx: Vec<usize> = pair[0]
            .as_array()
            .ok_or_else(|| Error::Format("coo index must be an array".into()))?
            .iter()
            .map(|i| {
                i.as_u64()
                    .map(|i| i as usize)
                    .ok_or_else(|| Error::Format("coo index must hold nonnegative integers".into()))
            })
            .collect::<Result<_>>()?;
        if idx.len() != order {
            return Err(Error::DimensionMismatch {
                expected: order,
                found: idx.len(),
            });
        }
        let value = number(&pair[1], &idx)?;
        coo.push((idx, value));
    }
    Tensor::from_coo(order, dim, &coo)
}

fn parse_dense(order: usize, dim: usize, entries: &Value) -> Result<Tensor> {
    let mut flat = Vec::new();
    let mut idx = Vec::with_capacity(order);
    walk_dense(entries, order, dim, &mut idx, &mut flat)?;
    Tensor::new(order, dim, flat)
}

fn walk_dense(
    v: &Value,
    depth: usize,
    dim: usize,
    idx: &mut Vec<usize>,
    out: &mut Vec<f64>,
) -> Result<()> {
    if depth == 0 {
        out.push(number(v, idx)?);
        return Ok(());
    }
    let list = v
        .as_array()
        .ok_or_else(|| Error::Format(format!("dense entries at {idx:?} must be an array")))?;
    if list.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: list.len(),
        });
    }
    for (i, item) in list.iter().enumerate() {
        idx.push(i);
        walk_dense(item, depth - 1, dim, idx, out)?;
        idx.pop();
    }
    Ok(())
}

const NONFINITE: [&str; 5] = ["NaN", "Infinity", "-Infinity", "inf", "-inf"];

/// Turn bare `NaN` / `Infinity` tokens into strings so the document parses and
/// the validator can name the offending index.
fn quote_nonfinite(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len() + 8);
    let mut i = 0;
    let mut in_string = false;
    while i < bytes.len() {
        let c = bytes[i];
        if in_string {
            out.push(c as char);
            if c == b'\\' && i + 1 < bytes.len() {
                out.push(bytes[i + 1] as char);
                i += 2;
                continue;
            }
            if c == b'"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        if c == b'"' {
            in_string = true;
            out.push('"');
            i += 1;
            continue;
        }
        let rest = &text[i..];
        if let Some(tok) = NONFINITE
            .iter()
            .filter(|t| rest.starts_with(**t))
            .max_by_key(|t| t.len())
        {
            out.push('"');
            out.push_str(tok);
            out.push('"');
            i += tok.len();
            continue;
        }
        // Copy a full UTF-8 character.
        let ch = rest.chars().next().unwrap_or_default();
        out.push(ch);
        i += ch.len_utf8().max(1);
    }
    out
}
