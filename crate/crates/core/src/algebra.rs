//! Scenario-aware query operators: scenario extraction, real sub-query,
//! atomic decomposition, resolution of query sets, and key augmentation.

use crate::cube::Factors;
use crate::query::{Query, Selection};
use crate::schema::ValueId;

/// A real-only query with one multiplicative factor per measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredQuery {
    pub query: Query,
    pub factors: Factors,
}

impl FactoredQuery {
    pub fn new(query: Query, factors: Factors) -> Self {
        debug_assert!(query.is_real_only());
        FactoredQuery { query, factors }
    }
}

/// Scenario values named anywhere in `q`, ascending (registration order).
pub fn extract_scenarios(q: &Query) -> Vec<ValueId> {
    let mut out: Vec<ValueId> = q.named_values().filter(|v| v.is_scenario()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Drops scenario values; a dimension left without values becomes STAR.
pub fn real_subquery(q: &Query) -> Query {
    Query::new(
        q.selections()
            .iter()
            .map(|sel| match sel {
                Selection::Star => Selection::Star,
                Selection::Values(v) => {
                    let real: Vec<ValueId> = v.iter().copied().filter(|v| v.is_real()).collect();
                    if real.is_empty() {
                        Selection::Star
                    } else {
                        Selection::Values(real)
                    }
                }
            })
            .collect(),
    )
}

/// Splits `q` into atomic queries: on each dimension either one scenario
/// value alone or the undivided block of real values. Options per dimension
/// are scenario values in registration order followed by the real block;
/// the output is their Cartesian product, first dimension slowest.
///
/// Returns nothing if any dimension selects no values.
pub fn atomic_decompose(q: &Query) -> Vec<Query> {
    let mut options: Vec<Vec<Selection>> = Vec::with_capacity(q.dimension_count());
    for sel in q.selections() {
        let opts = match sel {
            Selection::Star => vec![Selection::Star],
            Selection::Values(v) => {
                let mut opts: Vec<Selection> = v
                    .iter()
                    .filter(|v| v.is_scenario())
                    .map(|&w| Selection::single(w))
                    .collect();
                let real: Vec<ValueId> = v.iter().copied().filter(|v| v.is_real()).collect();
                if !real.is_empty() {
                    opts.push(Selection::Values(real));
                }
                opts
            }
        };
        if opts.is_empty() {
            return Vec::new();
        }
        options.push(opts);
    }

    let mut out = vec![Vec::with_capacity(options.len())];
    for opts in &options {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for opt in opts {
                let mut sels: Vec<Selection> = prefix.clone();
                sels.push(opt.clone());
                next.push(sels);
            }
        }
        out = next;
    }
    out.into_iter().map(Query::new).collect()
}

/// True iff `q` is atomic: every dimension is STAR, one scenario value alone,
/// or a non-empty set of real values.
pub fn is_atomic(q: &Query) -> bool {
    q.selections().iter().all(|sel| match sel {
        Selection::Star => true,
        Selection::Values(v) => match v.iter().filter(|x| x.is_scenario()).count() {
            0 => !v.is_empty(),
            1 => v.len() == 1,
            _ => false,
        },
    })
}

/// Left fold over the sets: each pair drawn one from the accumulated set and
/// one from the next set is intersected and its factors multiplied. Pairs
/// whose intersection selects nothing on some dimension are dropped. A single
/// set is returned unchanged.
pub fn resolve(sets: &[Vec<FactoredQuery>]) -> Vec<FactoredQuery> {
    let Some((first, rest)) = sets.split_first() else {
        return Vec::new();
    };
    let mut acc = first.clone();
    for set in rest {
        let mut next = Vec::with_capacity(acc.len() * set.len());
        for a in &acc {
            for b in set {
                let query = a.query.intersect(&b.query);
                if query.covers_all_dimensions() {
                    next.push(FactoredQuery {
                        query,
                        factors: a.factors.compose(&b.factors),
                    });
                }
            }
        }
        acc = next;
    }
    acc
}

/// Adds scenario value `w` to the selection of its own dimension `dim`.
/// Every other dimension is untouched and STAR stays STAR.
pub fn augment(q: &Query, w: ValueId, dim: usize) -> Query {
    let sel = q.selection(dim).with(w);
    q.clone().with_selection(dim, sel)
}
