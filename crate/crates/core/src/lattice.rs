//! The discrete spacetime arena: a 1D spatial lattice with integer time, and
//! the [`Setup`] proposition `[x_f, s_N, ..., s_1, x_i]` built on top of it.
//!
//! Every constructor validates; once built, values are immutable and all
//! invariants hold. Filters are kept sorted by time and hole sets are kept
//! sorted, so structural equality is proposition equality.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetupError {
    #[error("grid must have at least one site")]
    EmptyGrid,
    #[error("invalid time order: {0}")]
    InvalidTimeOrder(String),
    #[error("two filters at time {0}")]
    DuplicateFilterTime(i64),
    #[error("filter at time {0} has no open sites")]
    EmptyFilter(i64),
    #[error("filter at time {time} lists site {site} more than once")]
    DuplicateSite { time: i64, site: usize },
    #[error("site {site} out of range for a grid of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
}

/// Spatial lattice of `num_sites` sites; time is an unbounded integer index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    num_sites: usize,
}

impl Grid {
    pub fn new(num_sites: usize) -> Result<Self, SetupError> {
        if num_sites == 0 {
            return Err(SetupError::EmptyGrid);
        }
        Ok(Grid { num_sites })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn sites(&self) -> std::ops::Range<usize> {
        0..self.num_sites
    }

    fn check_site(&self, site: usize) -> Result<(), SetupError> {
        if site < self.num_sites {
            Ok(())
        } else {
            Err(SetupError::SiteOutOfRange {
                site,
                num_sites: self.num_sites,
            })
        }
    }
}

/// A small spacetime region around `(site, time)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub site: usize,
    pub time: i64,
}

impl Event {
    pub const fn new(site: usize, time: i64) -> Self {
        Event { site, time }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.site, self.time)
    }
}

/// An instantaneous screen at `time`, opaque except at `open_sites`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Filter {
    time: i64,
    open_sites: Vec<usize>,
}

impl Filter {
    /// Builds a filter; holes are stored sorted. Duplicate or missing holes
    /// are rejected.
    pub fn new(time: i64, open_sites: impl IntoIterator<Item = usize>) -> Result<Self, SetupError> {
        let mut open_sites: Vec<usize> = open_sites.into_iter().collect();
        if open_sites.is_empty() {
            return Err(SetupError::EmptyFilter(time));
        }
        open_sites.sort_unstable();
        if let Some(w) = open_sites.windows(2).find(|w| w[0] == w[1]) {
            return Err(SetupError::DuplicateSite { time, site: w[0] });
        }
        Ok(Filter { time, open_sites })
    }

    /// One-hole filter; used for and-junctions.
    pub fn single(time: i64, site: usize) -> Self {
        Filter {
            time,
            open_sites: vec![site],
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn open_sites(&self) -> &[usize] {
        &self.open_sites
    }

    pub fn is_open(&self, site: usize) -> bool {
        self.open_sites.binary_search(&site).is_ok()
    }

    pub fn num_open(&self) -> usize {
        self.open_sites.len()
    }

    /// True when the two hole sets share no site.
    pub fn is_disjoint(&self, other: &Filter) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.open_sites.len() && j < other.open_sites.len() {
            match self.open_sites[i].cmp(&other.open_sites[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Union of two disjoint hole sets at the same time.
    pub(crate) fn merged(&self, other: &Filter) -> Filter {
        debug_assert_eq!(self.time, other.time);
        let mut open_sites = self.open_sites.clone();
        open_sites.extend_from_slice(&other.open_sites);
        open_sites.sort_unstable();
        open_sites.dedup();
        Filter {
            time: self.time,
            open_sites,
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{t={}:", self.time)?;
        for (k, s) in self.open_sites.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// A filter at `time` with every site of `grid` open.
pub fn full_filter(grid: Grid, time: i64) -> Filter {
    Filter {
        time,
        open_sites: grid.sites().collect(),
    }
}

/// The proposition "the particle goes from `source` to `sink`, passing only
/// through the open holes of each filter".
///
/// Field order makes the derived `Ord` usable as a map key; it carries no
/// physical meaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setup {
    source: Event,
    filters: Vec<Filter>,
    sink: Event,
}

impl Setup {
    /// Validates time ordering only. Use [`make_setup`] to also check sites
    /// against a grid.
    pub fn new(source: Event, filters: Vec<Filter>, sink: Event) -> Result<Self, SetupError> {
        if source.time >= sink.time {
            return Err(SetupError::InvalidTimeOrder(format!(
                "source time {} is not before sink time {}",
                source.time, sink.time
            )));
        }
        let mut filters = filters;
        filters.sort_by_key(|f| f.time);
        for w in filters.windows(2) {
            if w[0].time == w[1].time {
                return Err(SetupError::DuplicateFilterTime(w[0].time));
            }
        }
        if let Some(f) = filters
            .iter()
            .find(|f| f.time <= source.time || f.time >= sink.time)
        {
            return Err(SetupError::InvalidTimeOrder(format!(
                "filter at time {} is outside the open interval ({}, {})",
                f.time, source.time, sink.time
            )));
        }
        Ok(Setup {
            source,
            filters,
            sink,
        })
    }

    /// `[x_f, x_i]` with no filters.
    pub fn elementary(source: Event, sink: Event) -> Result<Self, SetupError> {
        Setup::new(source, Vec::new(), sink)
    }

    /// Caller guarantees the invariants; checked in debug builds.
    pub(crate) fn from_parts(source: Event, filters: Vec<Filter>, sink: Event) -> Self {
        let s = Setup {
            source,
            filters,
            sink,
        };
        debug_assert!(s.invariants_hold());
        s
    }

    pub fn source(&self) -> Event {
        self.source
    }

    pub fn sink(&self) -> Event {
        self.sink
    }

    /// Filters in increasing time order.
    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn filter_at(&self, time: i64) -> Option<&Filter> {
        self.filters
            .binary_search_by_key(&time, |f| f.time)
            .ok()
            .map(|k| &self.filters[k])
    }

    /// Number of unit time steps from source to sink.
    pub fn steps(&self) -> u64 {
        (self.sink.time - self.source.time) as u64
    }

    /// Interior times `source.time + 1 .. sink.time`.
    pub fn interior_times(&self) -> std::ops::Range<i64> {
        self.source.time + 1..self.sink.time
    }

    /// Largest site index referenced by the events or any hole.
    pub fn max_site(&self) -> usize {
        self.filters
            .iter()
            .filter_map(|f| f.open_sites.last().copied())
            .chain([self.source.site, self.sink.site])
            .max()
            .unwrap_or(0)
    }

    pub fn check_grid(&self, grid: Grid) -> Result<(), SetupError> {
        grid.check_site(self.source.site)?;
        grid.check_site(self.sink.site)?;
        for f in &self.filters {
            for &s in &f.open_sites {
                grid.check_site(s)?;
            }
        }
        Ok(())
    }

    /// Same setup with `filter` added; errors if a filter already sits at
    /// that time or the time is not interior.
    pub fn with_filter(&self, filter: Filter) -> Result<Setup, SetupError> {
        let mut filters = self.filters.clone();
        filters.push(filter);
        Setup::new(self.source, filters, self.sink)
    }

    /// Same setup with the filter at `time` (if any) removed.
    pub fn without_filter_at(&self, time: i64) -> Setup {
        let filters = self
            .filters
            .iter()
            .filter(|f| f.time != time)
            .cloned()
            .collect();
        Setup::from_parts(self.source, filters, self.sink)
    }

    /// Checks every structural invariant. Always true for values built by
    /// this module; exposed for property tests.
    pub fn invariants_hold(&self) -> bool {
        self.source.time < self.sink.time
            && self
                .filters
                .iter()
                .all(|f| f.time > self.source.time && f.time < self.sink.time && !f.open_sites.is_empty())
            && self.filters.windows(2).all(|w| w[0].time < w[1].time)
            && self
                .filters
                .iter()
                .all(|f| f.open_sites.windows(2).all(|w| w[0] < w[1]))
    }
}

/// Writes the later-event-first form `[(site,time),{t=..:..},...,(site,time)]`.
impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.sink)?;
        for filter in self.filters.iter().rev() {
            write!(f, ",{filter}")?;
        }
        write!(f, ",{}]", self.source)
    }
}

/// Validated construction against a grid; filters come back sorted by time.
pub fn make_setup(
    grid: Grid,
    source: Event,
    filters: Vec<Filter>,
    sink: Event,
) -> Result<Setup, SetupError> {
    let setup = Setup::new(source, filters, sink)?;
    setup.check_grid(grid)?;
    Ok(setup)
}
