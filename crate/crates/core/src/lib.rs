//! What-if analysis over a read-only data cube.
//!
//! Hypothetical dimension values ("scenarios") are stored as queries over
//! the real data plus per-measure multiplicative factors. Queries naming
//! scenario values are evaluated against real rows and simulated rows
//! derived from them on the fly; the cube itself is never modified.

pub mod algebra;
pub mod cube;
pub mod error;
pub mod eval;
pub mod io;
pub mod query;
pub mod scenario;
pub mod schema;
#[cfg(feature = "server")]
pub mod service;
pub mod session;
pub mod text;

#[cfg(test)]
mod testing;

pub use algebra::{atomic_decompose, augment, extract_scenarios, real_subquery, resolve, FactoredQuery};
pub use cube::{cube_union, row_matches, select, select_modify, DataCube, Factors, Row};
pub use error::{Error, Result};
pub use eval::{
    compare, evaluate, evaluate_parallel, materialize, AggFn, AggregationSpec, Comparison, Evaluation, MaterializedRow,
    Provenance,
};
pub use io::{export_rows, load_cube, load_store, save_store, CubeManifest};
pub use query::{covers_all_dimensions, intersect_query, Query, Selection};
pub use scenario::{Scenario, ScenarioStore};
pub use schema::{Dimension, Schema, SchemaBuilder, ValueId};
pub use session::Session;
pub use text::{format_number, parse_factor, parse_query};
