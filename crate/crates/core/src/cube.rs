//! The immutable data cube and the row-level primitives: plain selection,
//! select-modify and multiset union.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::query::Query;
use crate::schema::{Schema, ValueId};

/// One multiplicative factor per schema measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors(Vec<f64>);

impl Factors {
    pub fn ones(measures: usize) -> Self {
        Factors(vec![1.0; measures])
    }

    /// Positional factors; every entry must be finite.
    pub fn new(values: Vec<f64>, schema: &Schema) -> Result<Self> {
        if values.len() != schema.measure_count() {
            return Err(Error::SchemaMismatch(format!(
                "{} factors for {} measures",
                values.len(),
                schema.measure_count()
            )));
        }
        if let Some(i) = values.iter().position(|f| !f.is_finite()) {
            return Err(Error::NonFiniteFactor(schema.measures()[i].clone()));
        }
        Ok(Factors(values))
    }

    /// Named factors; unmentioned measures default to 1.
    pub fn from_named<'a, I>(pairs: I, schema: &Schema) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut out = Factors::ones(schema.measure_count());
        for (name, f) in pairs {
            let i = schema
                .measure_index(name)
                .ok_or_else(|| Error::UnknownMeasure(name.to_string()))?;
            if !f.is_finite() {
                return Err(Error::NonFiniteFactor(name.to_string()));
            }
            out.0[i] = f;
        }
        Ok(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, measure: usize) -> f64 {
        self.0[measure]
    }

    pub(crate) fn set(&mut self, measure: usize, f: f64) {
        self.0[measure] = f;
    }

    /// Per-measure product.
    pub fn compose(&self, other: &Factors) -> Factors {
        debug_assert_eq!(self.0.len(), other.0.len());
        Factors(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn apply(&self, measures: &[f64]) -> Vec<f64> {
        measures.iter().zip(&self.0).map(|(m, f)| m * f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coords: Vec<ValueId>,
    pub measures: Vec<f64>,
}

impl Row {
    pub fn new(coords: Vec<ValueId>, measures: Vec<f64>) -> Self {
        Row { coords, measures }
    }
}

/// Read-only cube of real rows. Duplicate rows are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    schema: Arc<Schema>,
    rows: Vec<Row>,
}

impl DataCube {
    pub fn new(schema: Arc<Schema>, rows: Vec<Row>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.coords.len() != schema.dimension_count() || row.measures.len() != schema.measure_count() {
                return Err(Error::SchemaMismatch(format!("row {i} has the wrong arity")));
            }
            for (d, &c) in row.coords.iter().enumerate() {
                if !schema.contains_real(c) || schema.real_dimension(c) != d {
                    return Err(Error::SchemaMismatch(format!(
                        "row {i} carries a foreign value on dimension `{}`",
                        schema.dimensions()[d].name()
                    )));
                }
            }
            if let Some(m) = row.measures.iter().position(|x| !x.is_finite()) {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has a non-finite `{}`",
                    schema.measures()[m]
                )));
            }
        }
        Ok(DataCube { schema, rows })
    }

    pub fn empty(schema: Arc<Schema>) -> Self {
        DataCube {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// True iff for every dimension `q` is STAR or lists the row's value.
pub fn row_matches(row: &Row, q: &Query) -> Result<bool> {
    if row.coords.len() != q.dimension_count() {
        return Err(Error::SchemaMismatch(format!(
            "row has {} dimensions, query has {}",
            row.coords.len(),
            q.dimension_count()
        )));
    }
    Ok(row.coords.iter().zip(q.selections()).all(|(&c, sel)| sel.contains(c)))
}

/// Rows of `cube` matching a real-only query, in cube order.
pub fn select(cube: &DataCube, q: &Query) -> Result<Vec<Row>> {
    if q.dimension_count() != cube.schema.dimension_count() {
        return Err(Error::SchemaMismatch(format!(
            "query has {} dimensions, cube has {}",
            q.dimension_count(),
            cube.schema.dimension_count()
        )));
    }
    if let Some(w) = q.named_values().find(|v| v.is_scenario()) {
        return Err(Error::ScenarioInRealQuery(format!("{w:?}")));
    }
    Ok(cube.rows.iter().filter(|r| q.matches(&r.coords)).cloned().collect())
}

/// Multiplies measures by `factors` and overwrites the mapped dimensions.
/// An empty factor list leaves measures alone; the input is not modified.
pub fn select_modify(rows: &[Row], factors: &[f64], mapping: &[(usize, ValueId)]) -> Result<Vec<Row>> {
    if let Some(i) = factors.iter().position(|f| !f.is_finite()) {
        return Err(Error::NonFiniteFactor(format!("#{i}")));
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut row = row.clone();
        if !factors.is_empty() {
            if factors.len() != row.measures.len() {
                return Err(Error::SchemaMismatch(format!(
                    "{} factors for {} measures",
                    factors.len(),
                    row.measures.len()
                )));
            }
            for (m, f) in row.measures.iter_mut().zip(factors) {
                *m *= f;
            }
        }
        for &(dim, value) in mapping {
            let slot = row
                .coords
                .get_mut(dim)
                .ok_or_else(|| Error::SchemaMismatch(format!("mapping names dimension #{dim}")))?;
            *slot = value;
        }
        out.push(row);
    }
    Ok(out)
}

/// Multiset concatenation; duplicates are preserved.
pub fn cube_union(a: &[Row], b: &[Row]) -> Result<Vec<Row>> {
    let shape = |r: &Row| (r.coords.len(), r.measures.len());
    if let Some(first) = a.first().or(b.first()).map(shape) {
        if let Some(bad) = a.iter().chain(b).find(|r| shape(r) != first) {
            return Err(Error::SchemaMismatch(format!(
                "row shape {:?} differs from {:?}",
                shape(bad),
                first
            )));
        }
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    Ok(out)
}
