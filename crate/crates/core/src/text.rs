//! One-line text forms shared by the CLI, the service and the C ABI:
//! queries (`Year=2011,2012;Supplier=*`), factor assignments
//! (`Volume=2`) and number rendering.

use crate::error::{Error, Result};
use crate::query::{Query, Selection};
use crate::scenario::ScenarioStore;

fn parse_error(position: usize, message: impl Into<String>) -> Error {
    Error::QueryParse {
        position,
        message: message.into(),
    }
}

/// Parses `Dim=v1,v2;Dim2=*`. Unlisted dimensions default to STAR; names
/// resolve against real values and live scenarios.
pub fn parse_query(text: &str, store: &ScenarioStore) -> Result<Query> {
    let schema = store.schema();
    let mut query = Query::star(schema.dimension_count());
    let mut seen = vec![false; schema.dimension_count()];
    if text.trim().is_empty() {
        return Ok(query);
    }

    let mut offset = 0;
    for clause in text.split(';') {
        let start = offset + 1;
        offset += clause.len() + 1;
        if clause.trim().is_empty() {
            return Err(parse_error(start, "empty clause"));
        }
        let Some((dim_text, values_text)) = clause.split_once('=') else {
            return Err(parse_error(
                start,
                format!("expected `Dimension=values`, found `{}`", clause.trim()),
            ));
        };
        let dim_name = dim_text.trim();
        let dim = schema
            .dimension_index(dim_name)
            .ok_or_else(|| parse_error(start, format!("unknown dimension `{dim_name}`")))?;
        if std::mem::replace(&mut seen[dim], true) {
            return Err(parse_error(start, format!("dimension `{dim_name}` listed twice")));
        }
        let values_start = start + dim_text.len() + 1;
        if values_text.trim().is_empty() {
            return Err(parse_error(values_start, format!("no values for `{dim_name}`")));
        }
        if values_text.trim() == "*" {
            continue;
        }
        let mut ids = Vec::new();
        let mut pos = values_start;
        for raw in values_text.split(',') {
            let name = raw.trim();
            if name.is_empty() {
                return Err(parse_error(pos, "empty value"));
            }
            if name == "*" {
                return Err(parse_error(pos, "`*` cannot be combined with values"));
            }
            let id = store
                .resolve_value(name)
                .ok_or_else(|| Error::UnknownValue(name.to_string()))?;
            if store.value_dimension(id) != dim {
                return Err(Error::WrongDimension {
                    value: name.to_string(),
                    listed: dim_name.to_string(),
                    actual: schema.dimensions()[store.value_dimension(id)].name().to_string(),
                });
            }
            ids.push(id);
            pos += raw.len() + 1;
        }
        query.set(dim, Selection::values(ids));
    }
    Ok(query)
}

/// Parses one `Measure=number` assignment.
pub fn parse_factor(text: &str) -> Result<(String, f64)> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| parse_error(1, format!("expected `Measure=number`, found `{text}`")))?;
    let name = name.trim();
    let value_start = text.find('=').unwrap_or(0) + 2;
    let f: f64 = value
        .trim()
        .parse()
        .map_err(|_| parse_error(value_start, format!("`{}` is not a number", value.trim())))?;
    if !f.is_finite() {
        return Err(Error::NonFiniteFactor(name.to_string()));
    }
    Ok((name.to_string(), f))
}

/// Fixed notation with at most nine fractional digits, trailing zeros
/// trimmed. Negative zero prints as `0`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let mut s = format!("{x:.9}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
