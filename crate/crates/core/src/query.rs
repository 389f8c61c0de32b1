//! Per-dimension selections and the query intersection primitive.

use crate::schema::ValueId;

/// What a query selects on one dimension.
///
/// `Star` is kept symbolic: it never expands into the dimension's current
/// value list, so stored queries stay valid as the value universe grows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Selection {
    Star,
    /// Sorted, deduplicated. May be empty, which selects nothing.
    Values(Vec<ValueId>),
}

impl Selection {
    pub fn values<I: IntoIterator<Item = ValueId>>(ids: I) -> Self {
        let mut v: Vec<ValueId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Selection::Values(v)
    }

    pub fn single(id: ValueId) -> Self {
        Selection::Values(vec![id])
    }

    pub fn empty() -> Self {
        Selection::Values(Vec::new())
    }

    pub fn is_star(&self) -> bool {
        matches!(self, Selection::Star)
    }

    /// STAR or at least one explicit value.
    pub fn is_non_empty(&self) -> bool {
        match self {
            Selection::Star => true,
            Selection::Values(v) => !v.is_empty(),
        }
    }

    /// Explicit values; empty for STAR.
    pub fn explicit(&self) -> &[ValueId] {
        match self {
            Selection::Star => &[],
            Selection::Values(v) => v,
        }
    }

    /// Membership test for a real row coordinate. STAR admits every real
    /// value but no scenario value.
    #[inline]
    pub fn admits(&self, id: ValueId) -> bool {
        match self {
            Selection::Star => id.is_real(),
            Selection::Values(v) => contains_sorted(v, id),
        }
    }

    /// Set membership with STAR read as "every value of the dimension".
    /// Used for query algebra, where STAR must intersect scenario values.
    #[inline]
    pub fn contains(&self, id: ValueId) -> bool {
        match self {
            Selection::Star => true,
            Selection::Values(v) => contains_sorted(v, id),
        }
    }

    pub fn intersect(&self, other: &Selection) -> Selection {
        match (self, other) {
            (Selection::Star, x) | (x, Selection::Star) => x.clone(),
            (Selection::Values(a), Selection::Values(b)) => {
                let mut out = Vec::with_capacity(a.len().min(b.len()));
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            out.push(a[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
                Selection::Values(out)
            }
        }
    }

    /// Adds one value; STAR stays STAR.
    pub fn with(&self, id: ValueId) -> Selection {
        match self {
            Selection::Star => Selection::Star,
            Selection::Values(v) => {
                let mut v = v.clone();
                if let Err(pos) = v.binary_search(&id) {
                    v.insert(pos, id);
                }
                Selection::Values(v)
            }
        }
    }

    pub fn has_scenario(&self) -> bool {
        self.explicit().iter().any(|v| v.is_scenario())
    }
}

#[inline]
fn contains_sorted(v: &[ValueId], id: ValueId) -> bool {
    // selections are tiny; a linear scan beats binary search below ~16 items
    if v.len() <= 16 {
        v.contains(&id)
    } else {
        v.binary_search(&id).is_ok()
    }
}

/// One selection per schema dimension, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    selections: Vec<Selection>,
}

impl Query {
    pub fn new(selections: Vec<Selection>) -> Self {
        Query { selections }
    }

    /// The all-STAR query over `dimensions` dimensions.
    pub fn star(dimensions: usize) -> Self {
        Query {
            selections: vec![Selection::Star; dimensions],
        }
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    pub fn selection(&self, dim: usize) -> &Selection {
        &self.selections[dim]
    }

    pub fn dimension_count(&self) -> usize {
        self.selections.len()
    }

    pub fn set(&mut self, dim: usize, selection: Selection) {
        self.selections[dim] = selection;
    }

    pub fn with_selection(mut self, dim: usize, selection: Selection) -> Self {
        self.selections[dim] = selection;
        self
    }

    /// Every explicitly named value across all dimensions.
    pub fn named_values(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.selections.iter().flat_map(|s| s.explicit().iter().copied())
    }

    pub fn names(&self, id: ValueId) -> bool {
        self.named_values().any(|v| v == id)
    }

    pub fn is_real_only(&self) -> bool {
        self.named_values().all(ValueId::is_real)
    }

    /// True iff a real row with these coordinates is selected.
    #[inline]
    pub fn matches(&self, coords: &[ValueId]) -> bool {
        debug_assert_eq!(coords.len(), self.selections.len());
        self.selections.iter().zip(coords).all(|(sel, &c)| sel.admits(c))
    }

    /// Per-dimension intersection: STAR ∩ X = X, sets intersect as sets.
    pub fn intersect(&self, other: &Query) -> Query {
        debug_assert_eq!(self.selections.len(), other.selections.len());
        Query {
            selections: self
                .selections
                .iter()
                .zip(&other.selections)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        }
    }

    /// True iff every dimension is STAR or carries at least one value.
    pub fn covers_all_dimensions(&self) -> bool {
        self.selections.iter().all(Selection::is_non_empty)
    }

    /// First dimension with an empty explicit selection.
    pub fn first_empty_dimension(&self) -> Option<usize> {
        self.selections.iter().position(|s| !s.is_non_empty())
    }
}

/// Query intersection, free-function form.
pub fn intersect_query(a: &Query, b: &Query) -> Query {
    a.intersect(b)
}

/// The per-dimension non-emptiness guard.
pub fn covers_all_dimensions(q: &Query) -> bool {
    q.covers_all_dimensions()
}
