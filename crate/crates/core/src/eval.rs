//! Query evaluation over the virtual cube: real rows plus scenario rows
//! simulated on the fly from stored factored queries.
//!
//! [`materialize`] produces the selected rows; [`evaluate`] feeds the same
//! rows to accumulators in one scan without building them. Both work from
//! one plan: for each scenario named by the query, the keys that can emit
//! rows the query selects, with the real-value guard each source row must
//! pass and the substitutions applied to it.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{extract_scenarios, FactoredQuery};
use crate::cube::{DataCube, Row};
use crate::error::{Error, Result};
use crate::query::Query;
use crate::scenario::{KeyMatch, ScenarioStore};
use crate::schema::{Schema, ValueId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Sum,
    Count,
    Avg,
    Min,
    Max,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Count => "count",
            AggFn::Avg => "avg",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }
}

impl std::str::FromStr for AggFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "sum" => AggFn::Sum,
            "count" => AggFn::Count,
            "avg" | "mean" => AggFn::Avg,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            other => {
                return Err(Error::QueryParse {
                    position: 1,
                    message: format!("unknown aggregate `{other}`"),
                })
            }
        })
    }
}

/// An aggregate over a row expression: one measure, or the product of
/// several measures evaluated per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationSpec {
    pub function: AggFn,
    /// Measure indices multiplied together; never empty.
    pub measures: Vec<usize>,
}

impl AggregationSpec {
    pub fn new(function: AggFn, measures: Vec<usize>, schema: &Schema) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::UnknownMeasure(String::new()));
        }
        if let Some(&bad) = measures.iter().find(|&&m| m >= schema.measure_count()) {
            return Err(Error::UnknownMeasure(format!("#{bad}")));
        }
        Ok(AggregationSpec { function, measures })
    }

    /// Parses `fn:expr` where `expr` is `Measure` or `M1*M2*...`.
    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        let (func, expr) = text.split_once(':').ok_or_else(|| Error::QueryParse {
            position: 1,
            message: format!("expected `fn:expr`, found `{text}`"),
        })?;
        let function: AggFn = func.parse()?;
        let mut measures = Vec::new();
        for name in expr.split('*') {
            let name = name.trim();
            let m = schema
                .measure_index(name)
                .ok_or_else(|| Error::UnknownMeasure(name.to_string()))?;
            measures.push(m);
        }
        AggregationSpec::new(function, measures, schema)
    }

    pub fn display(&self, schema: &Schema) -> String {
        let expr: Vec<&str> = self.measures.iter().map(|&m| schema.measures()[m].as_str()).collect();
        format!("{}:{}", self.function.name(), expr.join("*"))
    }

    #[inline]
    fn row_value(&self, measures: &[f64]) -> f64 {
        self.measures.iter().map(|&m| measures[m]).product()
    }
}

/// Mergeable aggregation state. Partial accumulators over disjoint row
/// ranges combine with [`Accumulator::merge`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulator {
    count: u64,
    sum: f64,
    min: f64,
    max: f64,
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator {
            count: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Final value; `None` for avg/min/max over no rows.
    pub fn finish(&self, function: AggFn) -> Option<f64> {
        match function {
            AggFn::Sum => Some(self.sum),
            AggFn::Count => Some(self.count as f64),
            _ if self.count == 0 => None,
            AggFn::Avg => Some(self.sum / self.count as f64),
            AggFn::Min => Some(self.min),
            AggFn::Max => Some(self.max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// One value per requested spec, `None` where the aggregate is undefined
    /// over an empty selection.
    pub values: Vec<Option<f64>>,
    /// Rows fed to the accumulators, real and simulated.
    pub row_count: u64,
}

/// Where a simulated row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: ValueId,
    pub key_index: usize,
    pub value_index: usize,
    pub source_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRow {
    pub coords: Vec<ValueId>,
    pub measures: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterializedRow<'c> {
    Real { index: usize, row: &'c Row },
    Simulated(SimulatedRow),
}

impl MaterializedRow<'_> {
    pub fn coords(&self) -> &[ValueId] {
        match self {
            MaterializedRow::Real { row, .. } => &row.coords,
            MaterializedRow::Simulated(s) => &s.coords,
        }
    }

    pub fn measures(&self) -> &[f64] {
        match self {
            MaterializedRow::Real { row, .. } => &row.measures,
            MaterializedRow::Simulated(s) => &s.measures,
        }
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        match self {
            MaterializedRow::Real { .. } => None,
            MaterializedRow::Simulated(s) => Some(&s.provenance),
        }
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self, MaterializedRow::Simulated(_))
    }
}

struct PlannedKey<'s> {
    scenario: ValueId,
    key_index: usize,
    matched: KeyMatch,
    values: &'s [FactoredQuery],
}

fn plan<'s>(cube: &DataCube, store: &'s ScenarioStore, e: &Query) -> Result<Vec<PlannedKey<'s>>> {
    if !Arc::ptr_eq(cube.schema(), store.schema()) && cube.schema() != store.schema() {
        return Err(Error::SchemaMismatch(
            "scenario store was built for a different cube".into(),
        ));
    }
    store.validate_query(e)?;
    if let Some(d) = e.first_empty_dimension() {
        return Err(Error::EmptySelection(cube.schema().dimensions()[d].name().to_string()));
    }
    let mut keys = Vec::new();
    for w in extract_scenarios(e) {
        let scenario = store.scenario(w).expect("validated");
        for (key_index, (key, values)) in scenario.entries().iter().enumerate() {
            if let Some(matched) = store.match_key(scenario, key, e) {
                keys.push(PlannedKey {
                    scenario: w,
                    key_index,
                    matched,
                    values,
                });
            }
        }
    }
    Ok(keys)
}

/// Rows of the virtual cube selected by `e`: matching real rows in cube
/// order, then simulated rows grouped by scenario, key, source row and value
/// query. A source row yields one simulated row per value query it matches.
pub fn materialize<'c>(cube: &'c DataCube, store: &ScenarioStore, e: &Query) -> Result<Vec<MaterializedRow<'c>>> {
    let keys = plan(cube, store, e)?;
    let rows = cube.rows();
    let mut out: Vec<MaterializedRow<'c>> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| e.matches(&r.coords))
        .map(|(index, row)| MaterializedRow::Real { index, row })
        .collect();

    for pk in &keys {
        for (source_row, row) in rows.iter().enumerate() {
            if !pk.matched.filter.matches(&row.coords) {
                continue;
            }
            for (value_index, v) in pk.values.iter().enumerate() {
                if !v.query.matches(&row.coords) {
                    continue;
                }
                let mut coords = row.coords.clone();
                for &(d, w) in &pk.matched.substitutions {
                    coords[d] = w;
                }
                out.push(MaterializedRow::Simulated(SimulatedRow {
                    coords,
                    measures: v.factors.apply(&row.measures),
                    provenance: Provenance {
                        scenario: pk.scenario,
                        key_index: pk.key_index,
                        value_index,
                        source_row,
                    },
                }));
            }
        }
    }
    Ok(out)
}

struct Feed<'a> {
    specs: &'a [AggregationSpec],
    accs: Vec<Accumulator>,
    rows: u64,
    scratch: Vec<f64>,
}

impl<'a> Feed<'a> {
    fn new(specs: &'a [AggregationSpec], measures: usize) -> Self {
        Feed {
            specs,
            accs: vec![Accumulator::default(); specs.len()],
            rows: 0,
            scratch: vec![0.0; measures],
        }
    }

    #[inline]
    fn real(&mut self, measures: &[f64]) {
        self.rows += 1;
        for (acc, spec) in self.accs.iter_mut().zip(self.specs) {
            acc.add(spec.row_value(measures));
        }
    }

    #[inline]
    fn scaled(&mut self, measures: &[f64], factors: &[f64]) {
        for ((s, m), f) in self.scratch.iter_mut().zip(measures).zip(factors) {
            *s = m * f;
        }
        self.rows += 1;
        for (acc, spec) in self.accs.iter_mut().zip(self.specs) {
            acc.add(spec.row_value(&self.scratch));
        }
    }

    fn scan(&mut self, rows: &[Row], e: &Query, keys: &[PlannedKey<'_>]) {
        for row in rows {
            if e.matches(&row.coords) {
                self.real(&row.measures);
            }
            for pk in keys {
                if !pk.matched.filter.matches(&row.coords) {
                    continue;
                }
                for v in pk.values {
                    if v.query.matches(&row.coords) {
                        self.scaled(&row.measures, v.factors.as_slice());
                    }
                }
            }
        }
    }

    fn merge(&mut self, other: &Feed<'_>) {
        self.rows += other.rows;
        for (a, b) in self.accs.iter_mut().zip(&other.accs) {
            a.merge(b);
        }
    }

    fn finish(self) -> Evaluation {
        Evaluation {
            values: self
                .accs
                .iter()
                .zip(self.specs)
                .map(|(acc, spec)| acc.finish(spec.function))
                .collect(),
            row_count: self.rows,
        }
    }
}

/// Aggregates the rows [`materialize`] would return, in a single pass over
/// the cube and without building simulated rows.
pub fn evaluate(cube: &DataCube, store: &ScenarioStore, e: &Query, specs: &[AggregationSpec]) -> Result<Evaluation> {
    let keys = plan(cube, store, e)?;
    let mut feed = Feed::new(specs, cube.schema().measure_count());
    feed.scan(cube.rows(), e, &keys);
    Ok(feed.finish())
}

/// [`evaluate`] with the scan split into fixed-size row chunks processed in
/// parallel. Partial states merge in chunk order, so results are
/// deterministic for a given `chunk_rows`.
pub fn evaluate_parallel(
    cube: &DataCube,
    store: &ScenarioStore,
    e: &Query,
    specs: &[AggregationSpec],
    chunk_rows: usize,
) -> Result<Evaluation> {
    let keys = plan(cube, store, e)?;
    let measures = cube.schema().measure_count();
    let partials: Vec<Feed<'_>> = cube
        .rows()
        .par_chunks(chunk_rows.max(1))
        .map(|chunk| {
            let mut feed = Feed::new(specs, measures);
            feed.scan(chunk, e, &keys);
            feed
        })
        .collect();
    let mut total = Feed::new(specs, measures);
    for p in &partials {
        total.merge(p);
    }
    Ok(total.finish())
}

/// Two evaluations of one aggregate side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub value1: Option<f64>,
    pub value2: Option<f64>,
    /// `value2 - value1`.
    pub difference: Option<f64>,
    /// `value2 / value1`, omitted when `value1` is zero.
    pub ratio: Option<f64>,
}

pub fn compare(
    cube: &DataCube,
    store: &ScenarioStore,
    e1: &Query,
    e2: &Query,
    spec: &AggregationSpec,
) -> Result<Comparison> {
    let specs = std::slice::from_ref(spec);
    let value1 = evaluate(cube, store, e1, specs)?.values[0];
    let value2 = evaluate(cube, store, e2, specs)?.values[0];
    let (difference, ratio) = match (value1, value2) {
        (Some(a), Some(b)) => (Some(b - a), (a != 0.0).then(|| b / a)),
        _ => (None, None),
    };
    Ok(Comparison {
        value1,
        value2,
        difference,
        ratio,
    })
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
