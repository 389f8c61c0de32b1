//! Cube ingestion from CSV, the JSON scenario-store document, and CSV export
//! of materialized rows.

use std::collections::BTreeSet;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::algebra::FactoredQuery;
use crate::cube::{DataCube, Factors, Row};
use crate::error::{Error, Result};
use crate::eval::MaterializedRow;
use crate::query::{Query, Selection};
use crate::scenario::ScenarioStore;
use crate::schema::{Schema, SchemaBuilder, ValueId};
use crate::text::format_number;

/// Which CSV columns are dimensions and which are measures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeManifest {
    pub dimensions: Vec<String>,
    pub measures: Vec<String>,
    /// CSV location, relative to the manifest file when loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Loads a cube from CSV text with a header row. Columns not named in the
/// manifest are ignored. Real values are registered in order of first
/// appearance.
pub fn load_cube(csv_text: &str, manifest: &CubeManifest) -> Result<DataCube> {
    let mut builder = SchemaBuilder::new(manifest.dimensions.clone(), manifest.measures.clone())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let column = |name: &String| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let dim_cols = manifest.dimensions.iter().map(column).collect::<Result<Vec<_>>>()?;
    let measure_cols = manifest.measures.iter().map(column).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut coords = Vec::with_capacity(dim_cols.len());
        for (d, &c) in dim_cols.iter().enumerate() {
            coords.push(builder.intern(d, record[c].trim())?);
        }
        let mut measures = Vec::with_capacity(measure_cols.len());
        for (m, &c) in measure_cols.iter().enumerate() {
            let cell = record[c].trim();
            let x: f64 = cell
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::MeasureParse {
                    line,
                    column: manifest.measures[m].clone(),
                    cell: cell.to_string(),
                })?;
            measures.push(x);
        }
        rows.push(Row::new(coords, measures));
    }
    DataCube::new(Arc::new(builder.build()), rows)
}

/// One dimension's selection in a JSON document: `"*"` or a value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelectionDoc {
    Values(Vec<String>),
    Star(String),
}

/// Dimension name to selection, in schema order when written.
pub type QueryDoc = IndexMap<String, SelectionDoc>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredQueryDoc {
    pub query: QueryDoc,
    pub factors: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub key: QueryDoc,
    pub values: Vec<FactoredQueryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub value: String,
    pub dimension: String,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDoc {
    pub scenarios: Vec<ScenarioDoc>,
}

pub fn query_to_doc(store: &ScenarioStore, q: &Query) -> QueryDoc {
    store
        .schema()
        .dimensions()
        .iter()
        .zip(q.selections())
        .map(|(dim, sel)| {
            let doc = match sel {
                Selection::Star => SelectionDoc::Star("*".into()),
                Selection::Values(v) => {
                    SelectionDoc::Values(v.iter().map(|&id| store.value_name(id).to_string()).collect())
                }
            };
            (dim.name().to_string(), doc)
        })
        .collect()
}

/// Resolves a query document against live values. Unlisted dimensions are
/// STAR.
pub fn query_from_doc(store: &ScenarioStore, doc: &QueryDoc) -> Result<Query> {
    query_from_doc_with(store.schema(), doc, |name, _| {
        let id = store
            .resolve_value(name)
            .ok_or_else(|| Error::UnknownValue(name.to_string()))?;
        Ok((id, store.value_dimension(id)))
    })
}

fn query_from_doc_with<F>(schema: &Schema, doc: &QueryDoc, mut lookup: F) -> Result<Query>
where
    F: FnMut(&str, usize) -> Result<(ValueId, usize)>,
{
    let mut q = Query::star(schema.dimension_count());
    for (dim_name, sel) in doc {
        let dim = schema
            .dimension_index(dim_name)
            .ok_or_else(|| Error::UnknownDimension(dim_name.clone()))?;
        let sel = match sel {
            SelectionDoc::Star(s) if s == "*" => Selection::Star,
            SelectionDoc::Star(s) => {
                return Err(Error::MalformedDocument(format!(
                    "selection for `{dim_name}` must be \"*\" or a list, found \"{s}\""
                )))
            }
            SelectionDoc::Values(names) => {
                let mut ids = Vec::with_capacity(names.len());
                for name in names {
                    let (id, actual) = lookup(name, dim)?;
                    if actual != dim {
                        return Err(Error::WrongDimension {
                            value: name.clone(),
                            listed: dim_name.clone(),
                            actual: schema.dimensions()[actual].name().to_string(),
                        });
                    }
                    ids.push(id);
                }
                Selection::values(ids)
            }
        };
        q.set(dim, sel);
    }
    Ok(q)
}

pub fn factors_to_doc(schema: &Schema, f: &Factors) -> IndexMap<String, f64> {
    schema
        .measures()
        .iter()
        .cloned()
        .zip(f.as_slice().iter().copied())
        .collect()
}

pub fn factors_from_doc(schema: &Schema, doc: &IndexMap<String, f64>) -> Result<Factors> {
    Factors::from_named(doc.iter().map(|(k, &v)| (k.as_str(), v)), schema)
}

pub fn factored_query_to_doc(store: &ScenarioStore, fq: &FactoredQuery) -> FactoredQueryDoc {
    FactoredQueryDoc {
        query: query_to_doc(store, &fq.query),
        factors: factors_to_doc(store.schema(), &fq.factors),
    }
}

pub fn store_to_doc(store: &ScenarioStore) -> StoreDoc {
    let dims = store.schema().dimensions();
    StoreDoc {
        scenarios: store
            .scenarios()
            .map(|s| ScenarioDoc {
                value: s.name().to_string(),
                dimension: dims[s.dimension()].name().to_string(),
                entries: s
                    .entries()
                    .iter()
                    .map(|(key, values)| EntryDoc {
                        key: query_to_doc(store, key),
                        values: values.iter().map(|v| factored_query_to_doc(store, v)).collect(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Serializes the store as pretty-printed JSON.
pub fn save_store(store: &ScenarioStore) -> String {
    let mut text = serde_json::to_string_pretty(&store_to_doc(store)).expect("plain data serializes");
    text.push('\n');
    text
}

/// Rebuilds a store for `schema` from a saved document.
///
/// Key queries may name values of scenarios deleted before the save; those
/// are restored as inert values of the listed dimension.
pub fn load_store(text: &str, schema: Arc<Schema>) -> Result<ScenarioStore> {
    let doc: StoreDoc = serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    store_from_doc(&doc, schema)
}

pub fn store_from_doc(doc: &StoreDoc, schema: Arc<Schema>) -> Result<ScenarioStore> {
    let mut store = ScenarioStore::new(schema.clone());
    for (name, dim, live) in slot_order(doc, &schema)? {
        if live {
            store.create_scenario(&name, schema.dimensions()[dim].name())?;
        } else {
            store.retired_value(&name, dim);
        }
    }
    for s in &doc.scenarios {
        let owner = store.resolve_value(&s.value).expect("created above");
        for entry in &s.entries {
            let key = query_from_doc_with(&schema, &entry.key, |name, dim| {
                let id = match store.resolve_value(name) {
                    Some(id) => id,
                    None => store.retired_value(name, dim),
                };
                Ok((id, store.value_dimension(id)))
            })?;
            let owner_dim = store.value_dimension(owner);
            if !key.selection(owner_dim).contains(owner) {
                return Err(Error::MalformedDocument(format!(
                    "key {} of `{}` does not contain its own value",
                    store.display_query(&key),
                    s.value
                )));
            }
            let mut values = Vec::with_capacity(entry.values.len());
            for v in &entry.values {
                let query = query_from_doc_with(&schema, &v.query, |name, _| {
                    let id = schema
                        .real_value(name)
                        .ok_or_else(|| Error::UnknownValue(name.to_string()))?;
                    Ok((id, schema.real_dimension(id)))
                })?;
                values.push(FactoredQuery::new(query, factors_from_doc(&schema, &v.factors)?));
            }
            store.insert_entry(&s.value, key, values)?;
        }
    }
    Ok(store)
}

/// Scenario slots in an order that agrees with the listed scenarios and with
/// every value list in the stored keys, so ids sort the same way after a load.
fn slot_order(doc: &StoreDoc, schema: &Schema) -> Result<Vec<(String, usize, bool)>> {
    let mut nodes: IndexMap<(String, usize), bool> = IndexMap::new();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut live = Vec::new();
    for s in &doc.scenarios {
        let dim = schema
            .dimension_index(&s.dimension)
            .ok_or_else(|| Error::UnknownDimension(s.dimension.clone()))?;
        let (i, old) = nodes.insert_full((s.value.clone(), dim), true);
        if old.is_some() {
            return Err(Error::NameCollision(s.value.clone()));
        }
        live.push(i);
    }
    chains.push(live);
    let live_dim: IndexMap<&str, usize> = doc
        .scenarios
        .iter()
        .filter_map(|s| Some((s.value.as_str(), schema.dimension_index(&s.dimension)?)))
        .collect();
    for s in &doc.scenarios {
        for entry in &s.entries {
            for (dim_name, sel) in &entry.key {
                let (Some(dim), SelectionDoc::Values(names)) = (schema.dimension_index(dim_name), sel) else {
                    continue;
                };
                let chain = names
                    .iter()
                    .filter(|n| schema.real_value(n).is_none())
                    .filter(|n| live_dim.get(n.as_str()).is_none_or(|&d| d == dim))
                    .map(|n| {
                        let e = nodes.entry((n.clone(), dim));
                        let i = e.index();
                        e.or_insert(false);
                        i
                    })
                    .collect::<Vec<_>>();
                chains.push(chain);
            }
        }
    }
    let mut next: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut pending = vec![0usize; nodes.len()];
    for chain in &chains {
        for w in chain.windows(2) {
            next[w[0]].push(w[1]);
            pending[w[1]] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..nodes.len()).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &next[i] {
            pending[j] -= 1;
            if pending[j] == 0 {
                ready.insert(j);
            }
        }
    }
    // a hand-edited document may contradict itself; keep the rest in first-seen order
    order.extend((0..nodes.len()).filter(|i| pending[*i] > 0));
    Ok(order
        .into_iter()
        .map(|i| {
            let ((name, dim), live) = nodes.get_index(i).expect("index in range");
            (name.clone(), *dim, *live)
        })
        .collect())
}

/// Writes rows as CSV: dimension columns, then measure columns.
pub fn export_rows(store: &ScenarioStore, rows: &[MaterializedRow<'_>]) -> String {
    let schema = store.schema();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<&str> = schema
        .dimensions()
        .iter()
        .map(|d| d.name())
        .chain(schema.measures().iter().map(String::as_str))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let record: Vec<String> = row
            .coords()
            .iter()
            .map(|&id| store.value_name(id).to_string())
            .chain(row.measures().iter().map(|&x| format_number(x)))
            .collect();
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
