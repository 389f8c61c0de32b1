//! The scenario registry.
//!
//! A scenario is a new value of one dimension whose rows are never stored.
//! Instead it keeps a two-tier map: atomic *key* queries (always carrying the
//! scenario's own value) to lists of real-only factored queries. Association
//! reduces arbitrary queries, including ones naming other scenarios, to that
//! form immediately, so stored state never references another scenario's
//! definition and no dependency cycle can be expressed.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::algebra::{atomic_decompose, augment, extract_scenarios, resolve, FactoredQuery};
use crate::cube::Factors;
use crate::error::{Error, Result};
use crate::query::{Query, Selection};
use crate::schema::{Schema, ValueId};

/// How one stored key contributes rows to a selecting query.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KeyMatch {
    /// Dimension overrides applied to every source row.
    pub substitutions: Vec<(usize, ValueId)>,
    /// Real-only guard a source row must pass.
    pub filter: Query,
}

/// Key query to resolved real queries, in insertion order.
pub type Entries = IndexMap<Query, Vec<FactoredQuery>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    value: ValueId,
    name: String,
    dimension: usize,
    entries: Entries,
}

impl Scenario {
    pub fn value(&self) -> ValueId {
        self.value
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    name: String,
    dimension: usize,
    /// `None` once deleted. The id stays reserved so keys of other
    /// scenarios that mention it keep pointing at a value nothing matches.
    scenario: Option<Scenario>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStore {
    schema: Arc<Schema>,
    slots: Vec<Slot>,
    live: HashMap<String, ValueId>,
}

impl ScenarioStore {
    pub fn new(schema: Arc<Schema>) -> Self {
        ScenarioStore {
            schema,
            slots: Vec::new(),
            live: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Live scenarios in registration order.
    pub fn scenarios(&self) -> impl Iterator<Item = &Scenario> {
        self.slots.iter().filter_map(|s| s.scenario.as_ref())
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn scenario(&self, id: ValueId) -> Option<&Scenario> {
        if !id.is_scenario() {
            return None;
        }
        self.slots.get(id.index())?.scenario.as_ref()
    }

    pub fn scenario_by_name(&self, name: &str) -> Option<&Scenario> {
        self.live.get(name).and_then(|&id| self.scenario(id))
    }

    fn scenario_mut(&mut self, name: &str) -> Result<&mut Scenario> {
        let id = *self
            .live
            .get(name)
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
        Ok(self.slots[id.index()]
            .scenario
            .as_mut()
            .expect("live scenario has a slot"))
    }

    /// Resolves a value name against real values, then live scenarios.
    pub fn resolve_value(&self, name: &str) -> Option<ValueId> {
        self.schema.real_value(name).or_else(|| self.live.get(name).copied())
    }

    /// True for real values of the schema and for live scenario values.
    pub fn is_known(&self, id: ValueId) -> bool {
        if id.is_real() {
            self.schema.contains_real(id)
        } else {
            self.scenario(id).is_some()
        }
    }

    /// Name of any value this store has ever issued, deleted scenarios
    /// included.
    pub fn value_name(&self, id: ValueId) -> &str {
        if id.is_real() {
            self.schema.real_name(id)
        } else {
            &self.slots[id.index()].name
        }
    }

    pub fn value_dimension(&self, id: ValueId) -> usize {
        if id.is_real() {
            self.schema.real_dimension(id)
        } else {
            self.slots[id.index()].dimension
        }
    }

    /// Checks that `q` fits the schema and names only known values, each
    /// under its own dimension.
    pub fn validate_query(&self, q: &Query) -> Result<()> {
        if q.dimension_count() != self.schema.dimension_count() {
            return Err(Error::SchemaMismatch(format!(
                "query has {} dimensions, schema has {}",
                q.dimension_count(),
                self.schema.dimension_count()
            )));
        }
        for (dim, sel) in q.selections().iter().enumerate() {
            for &v in sel.explicit() {
                let known = if v.is_real() {
                    self.schema.contains_real(v)
                } else {
                    self.scenario(v).is_some()
                };
                if !known {
                    let name = if v.is_scenario() && v.index() < self.slots.len() {
                        self.slots[v.index()].name.clone()
                    } else {
                        format!("{v:?}")
                    };
                    return Err(Error::UnknownValue(name));
                }
                let actual = self.value_dimension(v);
                if actual != dim {
                    let dims = self.schema.dimensions();
                    return Err(Error::WrongDimension {
                        value: self.value_name(v).to_string(),
                        listed: dims[dim].name().to_string(),
                        actual: dims[actual].name().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Renders a query in the `Dim=v1,v2;Dim2=*` text form.
    pub fn display_query(&self, q: &Query) -> String {
        let dims = self.schema.dimensions();
        q.selections()
            .iter()
            .enumerate()
            .map(|(d, sel)| {
                let vals = match sel {
                    Selection::Star => "*".to_string(),
                    Selection::Values(v) => v.iter().map(|&id| self.value_name(id)).collect::<Vec<_>>().join(","),
                };
                format!("{}={}", dims[d].name(), vals)
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Registers an empty scenario for a new value of `dimension`.
    pub fn create_scenario(&mut self, value: &str, dimension: &str) -> Result<&Scenario> {
        let dim = self
            .schema
            .dimension_index(dimension)
            .ok_or_else(|| Error::UnknownDimension(dimension.to_string()))?;
        if value.is_empty() || value.contains([',', ';', '=']) || value == "*" {
            return Err(Error::InvalidSchema(format!("`{value}` is not a usable value name")));
        }
        if self.resolve_value(value).is_some() || self.schema.has_column(value) {
            return Err(Error::NameCollision(value.to_string()));
        }
        let id = ValueId::scenario(self.slots.len());
        self.slots.push(Slot {
            name: value.to_string(),
            dimension: dim,
            scenario: Some(Scenario {
                value: id,
                name: value.to_string(),
                dimension: dim,
                entries: IndexMap::new(),
            }),
        });
        self.live.insert(value.to_string(), id);
        Ok(self.scenario(id).expect("just inserted"))
    }

    /// Reserves an id for a value that only survives inside stored keys.
    pub(crate) fn retired_value(&mut self, name: &str, dimension: usize) -> ValueId {
        if let Some(i) = self
            .slots
            .iter()
            .position(|s| s.scenario.is_none() && s.name == name && s.dimension == dimension)
        {
            return ValueId::scenario(i);
        }
        let id = ValueId::scenario(self.slots.len());
        self.slots.push(Slot {
            name: name.to_string(),
            dimension,
            scenario: None,
        });
        id
    }

    /// Key→value entries of the given scenarios merged in order.
    pub fn scenario_queries(&self, scenarios: &[ValueId]) -> Vec<(&Query, &[FactoredQuery])> {
        scenarios
            .iter()
            .filter_map(|&id| self.scenario(id))
            .flat_map(|s| s.entries.iter().map(|(k, v)| (k, v.as_slice())))
            .collect()
    }

    /// Reduces `q` to atomic keys over factored real queries and stores the
    /// result under scenario `target`. Nothing is stored unless every atomic
    /// part resolves. Returns the entries produced by this call.
    pub fn associate_query(
        &mut self,
        target: &str,
        q: &Query,
        factors: &Factors,
    ) -> Result<Vec<(Query, Vec<FactoredQuery>)>> {
        let owner = self
            .scenario_by_name(target)
            .ok_or_else(|| Error::UnknownScenario(target.to_string()))?;
        let (w, w_dim) = (owner.value, owner.dimension);
        self.validate_query(q)?;
        if factors.len() != self.schema.measure_count() {
            return Err(Error::SchemaMismatch(format!(
                "{} factors for {} measures",
                factors.len(),
                self.schema.measure_count()
            )));
        }
        if let Some(i) = factors.as_slice().iter().position(|f| !f.is_finite()) {
            return Err(Error::NonFiniteFactor(self.schema.measures()[i].clone()));
        }
        if q.names(w) {
            return Err(Error::SelfReference(target.to_string()));
        }
        if let Some(d) = q.first_empty_dimension() {
            return Err(Error::EmptySelection(self.schema.dimensions()[d].name().to_string()));
        }

        let mut produced = Vec::new();
        if extract_scenarios(q).is_empty() {
            produced.push((
                augment(q, w, w_dim),
                vec![FactoredQuery::new(q.clone(), factors.clone())],
            ));
        } else {
            for atom in atomic_decompose(q) {
                let values = self.resolve_atom(&atom, factors)?;
                produced.push((augment(&atom, w, w_dim), values));
            }
        }

        let scenario = self.scenario_mut(target)?;
        for (key, values) in &produced {
            scenario
                .entries
                .entry(key.clone())
                .or_default()
                .extend(values.iter().cloned());
        }
        Ok(produced)
    }

    /// Resolves one atomic query to factored real queries scaled by `factors`.
    ///
    /// A scenario-bearing atom selects simulated rows of the virtual cube, so
    /// it is reduced with the same key matching evaluation uses: every key of
    /// a named scenario that can emit rows the atom selects contributes its
    /// value queries, each narrowed to the matching source rows and composed
    /// with the caller's factors.
    fn resolve_atom(&self, atom: &Query, factors: &Factors) -> Result<Vec<FactoredQuery>> {
        let named = extract_scenarios(atom);
        if named.is_empty() {
            return Ok(vec![FactoredQuery::new(atom.clone(), factors.clone())]);
        }
        let mut values = Vec::new();
        for &s in &named {
            let scenario = self.scenario(s).expect("validated");
            for (key, stored) in &scenario.entries {
                let Some(m) = self.match_key(scenario, key, atom) else {
                    continue;
                };
                let narrowing = vec![FactoredQuery::new(m.filter, factors.clone())];
                values.extend(resolve(&[stored.clone(), narrowing]));
            }
        }
        if values.is_empty() {
            return Err(Error::EmptyResolution(format!(
                "`{}`: no scenario rows match it",
                self.display_query(atom)
            )));
        }
        Ok(values)
    }

    /// Decides whether `key` of `owner` can emit rows selected by `e`.
    ///
    /// Simulated rows take the key's scenario values on their dimensions (the
    /// owner's substitution applied last), so `e` must list those values
    /// there; on every other dimension the source row keeps its real value,
    /// which must lie in both `e` and the key.
    pub(crate) fn match_key(&self, owner: &Scenario, key: &Query, e: &Query) -> Option<KeyMatch> {
        let dims = self.schema.dimension_count();
        let mut substituted: Vec<Option<ValueId>> = vec![None; dims];
        for w in extract_scenarios(key) {
            if w != owner.value {
                substituted[self.value_dimension(w)] = Some(w);
            }
        }
        substituted[owner.dimension] = Some(owner.value);

        let mut filter = Query::star(dims);
        for (d, sub) in substituted.iter().enumerate() {
            match sub {
                Some(w) => {
                    if !e.selection(d).admits(*w) {
                        return None;
                    }
                }
                None => {
                    let e_real = match e.selection(d) {
                        Selection::Star => Selection::Star,
                        Selection::Values(v) => Selection::Values(v.iter().copied().filter(|v| v.is_real()).collect()),
                    };
                    let sel = e_real.intersect(key.selection(d));
                    if !sel.is_non_empty() {
                        return None;
                    }
                    filter.set(d, sel);
                }
            }
        }
        let substitutions = substituted
            .iter()
            .enumerate()
            .filter_map(|(d, s)| s.map(|w| (d, w)))
            .collect();
        Some(KeyMatch { substitutions, filter })
    }

    /// Removes one key and its values from `target`.
    pub fn remove_entry(&mut self, target: &str, key: &Query) -> Result<(Query, Vec<FactoredQuery>)> {
        let rendered = self.display_query(key);
        let scenario = self.scenario_mut(target)?;
        scenario
            .entries
            .shift_remove_entry(key)
            .ok_or(Error::MissingKey(rendered))
    }

    /// Replaces the named factors of one stored value query; others keep
    /// their current value.
    pub fn update_factors(
        &mut self,
        target: &str,
        key: &Query,
        value_index: usize,
        factors: &[(&str, f64)],
    ) -> Result<FactoredQuery> {
        let mut updates = Vec::with_capacity(factors.len());
        for &(name, f) in factors {
            let m = self
                .schema
                .measure_index(name)
                .ok_or_else(|| Error::UnknownMeasure(name.to_string()))?;
            if !f.is_finite() {
                return Err(Error::NonFiniteFactor(name.to_string()));
            }
            updates.push((m, f));
        }
        let rendered = self.display_query(key);
        let scenario = self.scenario_mut(target)?;
        let values = scenario.entries.get_mut(key).ok_or(Error::MissingKey(rendered))?;
        let len = values.len();
        let fq = values.get_mut(value_index).ok_or(Error::IndexOutOfRange {
            index: value_index,
            len,
        })?;
        for (m, f) in updates {
            fq.factors.set(m, f);
        }
        Ok(fq.clone())
    }

    /// Removes a scenario. Other scenarios keep their entries untouched; keys
    /// that mention the removed value simply stop matching anything.
    pub fn delete_scenario(&mut self, value: &str) -> Result<Scenario> {
        let id = self
            .live
            .remove(value)
            .ok_or_else(|| Error::UnknownScenario(value.to_string()))?;
        Ok(self.slots[id.index()]
            .scenario
            .take()
            .expect("live scenario has a slot"))
    }

    /// Inserts an entry verbatim, appending to an existing key. Used when
    /// loading a saved store.
    pub(crate) fn insert_entry(&mut self, target: &str, key: Query, values: Vec<FactoredQuery>) -> Result<()> {
        self.scenario_mut(target)?
            .entries
            .entry(key)
            .or_default()
            .extend(values);
        Ok(())
    }
}
