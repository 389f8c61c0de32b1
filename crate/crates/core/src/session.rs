//! A mutable workspace: one loaded cube, its scenario store, and a revision
//! counter bumped by every successful change.

use std::sync::Arc;

use crate::algebra::FactoredQuery;
use crate::cube::{DataCube, Factors};
use crate::error::{Error, Result};
use crate::eval::{self, AggregationSpec, Comparison, Evaluation, MaterializedRow};
use crate::io;
use crate::query::Query;
use crate::scenario::ScenarioStore;

#[derive(Debug, Default, Clone)]
pub struct Session {
    state: Option<(Arc<DataCube>, ScenarioStore)>,
    revision: u64,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn has_cube(&self) -> bool {
        self.state.is_some()
    }

    /// Replaces the cube. The scenario store starts over empty.
    pub fn load_cube(&mut self, cube: DataCube) {
        let store = ScenarioStore::new(cube.schema().clone());
        self.state = Some((Arc::new(cube), store));
        self.revision += 1;
    }

    pub fn cube(&self) -> Result<&Arc<DataCube>> {
        self.state.as_ref().map(|(c, _)| c).ok_or(Error::NoCube)
    }

    pub fn store(&self) -> Result<&ScenarioStore> {
        self.state.as_ref().map(|(_, s)| s).ok_or(Error::NoCube)
    }

    fn store_mut(&mut self) -> Result<&mut ScenarioStore> {
        self.state.as_mut().map(|(_, s)| s).ok_or(Error::NoCube)
    }

    fn change<T>(&mut self, f: impl FnOnce(&mut ScenarioStore) -> Result<T>) -> Result<T> {
        let out = f(self.store_mut()?)?;
        self.revision += 1;
        Ok(out)
    }

    pub fn parse_query(&self, text: &str) -> Result<Query> {
        crate::text::parse_query(text, self.store()?)
    }

    pub fn create_scenario(&mut self, value: &str, dimension: &str) -> Result<()> {
        self.change(|s| s.create_scenario(value, dimension).map(|_| ()))
    }

    pub fn delete_scenario(&mut self, value: &str) -> Result<()> {
        self.change(|s| s.delete_scenario(value).map(|_| ()))
    }

    pub fn associate(
        &mut self,
        target: &str,
        q: &Query,
        factors: &[(&str, f64)],
    ) -> Result<Vec<(Query, Vec<FactoredQuery>)>> {
        self.change(|s| {
            let f = Factors::from_named(factors.iter().copied(), s.schema())?;
            s.associate_query(target, q, &f)
        })
    }

    /// Key of the entry at `index` in `target`'s insertion order.
    pub fn entry_key(&self, target: &str, index: usize) -> Result<Query> {
        let scenario = self
            .store()?
            .scenario_by_name(target)
            .ok_or_else(|| Error::UnknownScenario(target.to_string()))?;
        let len = scenario.entries().len();
        scenario
            .entries()
            .get_index(index)
            .map(|(k, _)| k.clone())
            .ok_or(Error::IndexOutOfRange { index, len })
    }

    pub fn remove_entry(&mut self, target: &str, index: usize) -> Result<(Query, Vec<FactoredQuery>)> {
        let key = self.entry_key(target, index)?;
        self.change(|s| s.remove_entry(target, &key))
    }

    pub fn update_factors(
        &mut self,
        target: &str,
        index: usize,
        value_index: usize,
        factors: &[(&str, f64)],
    ) -> Result<FactoredQuery> {
        let key = self.entry_key(target, index)?;
        self.change(|s| s.update_factors(target, &key, value_index, factors))
    }

    pub fn evaluate(&self, e: &Query, specs: &[AggregationSpec]) -> Result<Evaluation> {
        eval::evaluate(self.cube()?, self.store()?, e, specs)
    }

    pub fn materialize(&self, e: &Query) -> Result<Vec<MaterializedRow<'_>>> {
        eval::materialize(self.cube()?, self.store()?, e)
    }

    pub fn compare(&self, e1: &Query, e2: &Query, spec: &AggregationSpec) -> Result<Comparison> {
        eval::compare(self.cube()?, self.store()?, e1, e2, spec)
    }

    pub fn save_store(&self) -> Result<String> {
        Ok(io::save_store(self.store()?))
    }

    /// Replaces the whole store; on error the current one is kept.
    pub fn load_store(&mut self, text: &str) -> Result<()> {
        let schema = self.cube()?.schema().clone();
        let store = io::load_store(text, schema)?;
        self.change(|s| {
            *s = store;
            Ok(())
        })
    }
}
