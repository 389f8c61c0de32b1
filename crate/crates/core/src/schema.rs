//! Dimensions, measures and interned value identifiers.
//!
//! Value strings are globally unique across dimensions, so one flat
//! namespace of [`ValueId`]s covers every dimension. Real values are numbered
//! in order of first appearance; scenario values carry a tag bit and are
//! numbered by the scenario store in registration order, which makes sorted
//! selections list real values first and scenarios in creation order.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

const SCENARIO_BIT: u32 = 1 << 31;

/// Interned dimension value, real or scenario.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(u32);

impl ValueId {
    pub(crate) fn real(index: usize) -> Self {
        debug_assert!((index as u64) < SCENARIO_BIT as u64);
        ValueId(index as u32)
    }

    pub(crate) fn scenario(index: usize) -> Self {
        debug_assert!((index as u64) < SCENARIO_BIT as u64);
        ValueId(index as u32 | SCENARIO_BIT)
    }

    #[inline]
    pub fn is_scenario(self) -> bool {
        self.0 & SCENARIO_BIT != 0
    }

    #[inline]
    pub fn is_real(self) -> bool {
        !self.is_scenario()
    }

    /// Position within the real table or the scenario table.
    #[inline]
    pub fn index(self) -> usize {
        (self.0 & !SCENARIO_BIT) as usize
    }
}

impl fmt::Debug for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_scenario() {
            write!(f, "w{}", self.index())
        } else {
            write!(f, "v{}", self.index())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    name: String,
    values: Vec<ValueId>,
}

impl Dimension {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Real values of this dimension in order of first appearance.
    pub fn values(&self) -> &[ValueId] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RealValue {
    name: String,
    dimension: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    dimensions: Vec<Dimension>,
    measures: Vec<String>,
    values: Vec<RealValue>,
    by_name: HashMap<String, ValueId>,
}

impl Schema {
    /// Builds a schema from explicit value lists.
    pub fn new<D, V, M>(dimensions: D, measures: M) -> Result<Self>
    where
        D: IntoIterator<Item = (String, V)>,
        V: IntoIterator<Item = String>,
        M: IntoIterator<Item = String>,
    {
        let (names, values): (Vec<String>, Vec<Vec<String>>) = dimensions
            .into_iter()
            .map(|(n, v)| (n, v.into_iter().collect()))
            .unzip();
        let mut builder = SchemaBuilder::new(names, measures.into_iter().collect())?;
        for (dim, vals) in values.into_iter().enumerate() {
            for v in vals {
                builder.intern(dim, &v)?;
            }
        }
        Ok(builder.build())
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dimension_count(&self) -> usize {
        self.dimensions.len()
    }

    pub fn measures(&self) -> &[String] {
        &self.measures
    }

    pub fn measure_count(&self) -> usize {
        self.measures.len()
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m == name)
    }

    pub fn real_value_count(&self) -> usize {
        self.values.len()
    }

    /// Looks up a real value by name.
    pub fn real_value(&self, name: &str) -> Option<ValueId> {
        self.by_name.get(name).copied()
    }

    /// Name of a real value. Panics on scenario ids or ids from another schema.
    pub fn real_name(&self, id: ValueId) -> &str {
        assert!(id.is_real(), "{id:?} is not a real value");
        &self.values[id.index()].name
    }

    /// Dimension of a real value.
    pub fn real_dimension(&self, id: ValueId) -> usize {
        assert!(id.is_real(), "{id:?} is not a real value");
        self.values[id.index()].dimension
    }

    pub fn contains_real(&self, id: ValueId) -> bool {
        id.is_real() && id.index() < self.values.len()
    }

    /// True when `name` is a dimension or a measure name.
    pub(crate) fn has_column(&self, name: &str) -> bool {
        self.dimension_index(name).is_some() || self.measure_index(name).is_some()
    }
}

/// Incremental schema construction used by the CSV loader, which discovers
/// values row by row.
#[derive(Debug)]
pub struct SchemaBuilder {
    schema: Schema,
}

impl SchemaBuilder {
    pub fn new(dimensions: Vec<String>, measures: Vec<String>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidSchema("at least one dimension is required".into()));
        }
        if measures.is_empty() {
            return Err(Error::InvalidSchema("at least one measure is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in dimensions.iter().chain(measures.iter()) {
            if name.is_empty() {
                return Err(Error::InvalidSchema("empty column name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!("column `{name}` listed twice")));
            }
        }
        Ok(SchemaBuilder {
            schema: Schema {
                dimensions: dimensions
                    .into_iter()
                    .map(|name| Dimension {
                        name,
                        values: Vec::new(),
                    })
                    .collect(),
                measures,
                values: Vec::new(),
                by_name: HashMap::new(),
            },
        })
    }

    /// Returns the id of `name` under dimension `dim`, registering it on
    /// first sight. A name already owned by another dimension is rejected.
    pub fn intern(&mut self, dim: usize, name: &str) -> Result<ValueId> {
        let schema = &mut self.schema;
        if let Some(&id) = schema.by_name.get(name) {
            let owner = schema.values[id.index()].dimension;
            if owner != dim {
                return Err(Error::DuplicateValue {
                    value: name.to_string(),
                    first: schema.dimensions[owner].name.clone(),
                    second: schema.dimensions[dim].name.clone(),
                });
            }
            return Ok(id);
        }
        if name.is_empty() {
            return Err(Error::InvalidSchema(format!(
                "empty value in dimension `{}`",
                schema.dimensions[dim].name
            )));
        }
        let id = ValueId::real(schema.values.len());
        schema.values.push(RealValue {
            name: name.to_string(),
            dimension: dim,
        });
        schema.by_name.insert(name.to_string(), id);
        schema.dimensions[dim].values.push(id);
        Ok(id)
    }

    pub fn build(self) -> Schema {
        self.schema
    }
}
