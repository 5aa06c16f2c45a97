//! The partial `and` / `or` connectives on setups.
//!
//! `and` places two setups in immediate succession; it is only defined when
//! the earlier setup ends exactly where the later one starts. `or` merges two
//! setups that agree everywhere except for disjoint hole sets at a single
//! filter. Both return an error rather than an unallowed proposition.

use thiserror::Error;

use crate::lattice::{Event, Filter, Setup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("junction mismatch: earlier setup ends at {earlier_sink}, later setup starts at {later_source}")]
    JunctionMismatch {
        earlier_sink: Event,
        later_source: Event,
    },
    #[error("setups are not joinable: {0}")]
    NotJoinable(String),
    #[error("holes overlap at filter time {time}")]
    OverlappingHoles { time: i64 },
}

/// Records the single filter time at which two or-joined setups differed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinWitness {
    pub filter_time: i64,
}

/// `ab`: `later` placed immediately after `earlier`.
///
/// The junction event becomes a one-hole filter in the result, so the
/// composite is `[later.sink, later filters, {junction}, earlier filters,
/// earlier.source]`.
pub fn and_compose(later: &Setup, earlier: &Setup) -> Result<Setup, AlgebraError> {
    let junction = earlier.sink();
    if junction != later.source() {
        return Err(AlgebraError::JunctionMismatch {
            earlier_sink: junction,
            later_source: later.source(),
        });
    }
    // Setup invariants already put earlier's filters before the junction and
    // later's after it.
    let mut filters = Vec::with_capacity(earlier.filters().len() + later.filters().len() + 1);
    filters.extend_from_slice(earlier.filters());
    filters.push(Filter::single(junction.time, junction.site));
    filters.extend_from_slice(later.filters());
    Ok(Setup::from_parts(earlier.source(), filters, later.sink()))
}

/// `a ∨ b`.
pub fn or_join(a: &Setup, b: &Setup) -> Result<(Setup, JoinWitness), AlgebraError> {
    if a.source() != b.source() || a.sink() != b.sink() {
        return Err(AlgebraError::NotJoinable(
            "sources or sinks differ".to_string(),
        ));
    }
    let (fa, fb) = (a.filters(), b.filters());
    if fa.len() != fb.len() || fa.iter().zip(fb).any(|(x, y)| x.time() != y.time()) {
        return Err(AlgebraError::NotJoinable(
            "filter times differ".to_string(),
        ));
    }
    let differing: Vec<usize> = (0..fa.len()).filter(|&k| fa[k] != fb[k]).collect();
    let k = match differing.as_slice() {
        [k] => *k,
        [] => {
            return match fa.first() {
                // Identical filters: every hole overlaps.
                Some(f) => Err(AlgebraError::OverlappingHoles { time: f.time() }),
                None => Err(AlgebraError::NotJoinable(
                    "no filter to join at".to_string(),
                )),
            }
        }
        more => {
            return Err(AlgebraError::NotJoinable(format!(
                "setups differ at {} filter times",
                more.len()
            )))
        }
    };
    if !fa[k].is_disjoint(&fb[k]) {
        return Err(AlgebraError::OverlappingHoles { time: fa[k].time() });
    }
    let mut filters = fa.to_vec();
    filters[k] = fa[k].merged(&fb[k]);
    let witness = JoinWitness {
        filter_time: fa[k].time(),
    };
    Ok((Setup::from_parts(a.source(), filters, a.sink()), witness))
}

pub fn is_and_allowed(later: &Setup, earlier: &Setup) -> bool {
    earlier.sink() == later.source()
}

pub fn is_or_allowed(a: &Setup, b: &Setup) -> bool {
    or_join(a, b).is_ok()
}

/// Left fold of [`or_join`] over a nonempty sequence.
pub fn or_join_all<'a>(setups: impl IntoIterator<Item = &'a Setup>) -> Result<Setup, AlgebraError> {
    let mut it = setups.into_iter();
    let first = it
        .next()
        .ok_or_else(|| AlgebraError::NotJoinable("empty join".to_string()))?;
    it.try_fold(first.clone(), |acc, s| or_join(&acc, s).map(|(j, _)| j))
}
