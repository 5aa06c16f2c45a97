//! Seeded generators for allowed setup families.
//!
//! Allowed `and`/`or` combinations are rare among uniformly drawn setups, so
//! these build chainable and joinable families directly.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lattice::{Event, Filter, Setup};
use crate::schrodinger::WaveFunction;
use num_complex::Complex64;

/// Random nonempty hole set at `time`.
pub fn random_filter<R: Rng + ?Sized>(rng: &mut R, time: i64, num_sites: usize) -> Filter {
    let mut sites: Vec<usize> = (0..num_sites).collect();
    sites.shuffle(rng);
    let k = rng.random_range(1..=num_sites);
    Filter::new(time, sites.into_iter().take(k)).expect("nonempty distinct holes")
}

/// Random setup from `source` lasting `steps`, ending at `sink_site`, with up
/// to `max_filters` random filters at interior times other than `skip`.
pub fn setup_from<R: Rng + ?Sized>(
    rng: &mut R,
    source: Event,
    steps: i64,
    sink_site: usize,
    num_sites: usize,
    max_filters: usize,
    skip: Option<i64>,
) -> Setup {
    assert!(steps >= 1);
    let mut times: Vec<i64> = (source.time + 1..source.time + steps)
        .filter(|t| Some(*t) != skip)
        .collect();
    times.shuffle(rng);
    let count = rng.random_range(0..=max_filters.min(times.len()));
    let filters = times[..count]
        .iter()
        .map(|&t| random_filter(rng, t, num_sites))
        .collect();
    Setup::new(source, filters, Event::new(sink_site, source.time + steps))
        .expect("generated setups are valid")
}

/// Random setup starting at time 0 with `1..=max_steps` steps.
pub fn random_setup<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> Setup {
    let steps = rng.random_range(1..=max_steps);
    let source = Event::new(rng.random_range(0..num_sites), 0);
    let sink = rng.random_range(0..num_sites);
    setup_from(rng, source, steps, sink, num_sites, max_filters, None)
}

fn next_after<R: Rng + ?Sized>(
    rng: &mut R,
    junction: Event,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> Setup {
    let steps = rng.random_range(1..=max_steps);
    let sink = rng.random_range(0..num_sites);
    setup_from(rng, junction, steps, sink, num_sites, max_filters, None)
}

/// `(later, earlier)` with `earlier.sink == later.source`.
pub fn chainable_pair<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup) {
    let earlier = random_setup(rng, num_sites, max_steps, max_filters);
    let later = next_after(rng, earlier.sink(), num_sites, max_steps, max_filters);
    (later, earlier)
}

/// `(a, b, c)` with `ab` and `bc` allowed (`a` latest).
pub fn chainable_triple<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup, Setup) {
    let (b, c) = chainable_pair(rng, num_sites, max_steps, max_filters);
    let a = next_after(rng, b.sink(), num_sites, max_steps, max_filters);
    (a, b, c)
}

/// `k` setups identical except for pairwise-disjoint hole sets at one
/// filter time. Needs `num_sites >= k` and `max_steps >= 2`.
pub fn joinable_family<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    source: Event,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> Vec<Setup> {
    assert!(k >= 1 && num_sites >= k, "need at least {k} sites");
    assert!(max_steps >= 2, "joins need an interior time");
    let steps = rng.random_range(2..=max_steps);
    let join_time = rng.random_range(source.time + 1..source.time + steps);
    let sink = rng.random_range(0..num_sites);
    let base = setup_from(
        rng,
        source,
        steps,
        sink,
        num_sites,
        max_filters.saturating_sub(1),
        Some(join_time),
    );

    let mut sites: Vec<usize> = (0..num_sites).collect();
    sites.shuffle(rng);
    // k cut points split a prefix of the shuffled sites into k nonempty runs.
    let used = rng.random_range(k..=num_sites);
    let mut cuts: Vec<usize> = (1..used).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(used);

    cuts.windows(2)
        .map(|w| {
            let filter = Filter::new(join_time, sites[w[0]..w[1]].iter().copied())
                .expect("nonempty run");
            base.with_filter(filter).expect("join time is free and interior")
        })
        .collect()
}

/// `(a, b)` with `a ∨ b` allowed.
pub fn joinable_pair<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup) {
    let source = Event::new(rng.random_range(0..num_sites), 0);
    let mut v = joinable_family(rng, 2, source, num_sites, max_steps, max_filters);
    let b = v.pop().unwrap();
    (v.pop().unwrap(), b)
}

/// `(a, b, c)` pairwise joinable at the same filter.
pub fn joinable_triple<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup, Setup) {
    let source = Event::new(rng.random_range(0..num_sites), 0);
    let mut v = joinable_family(rng, 3, source, num_sites, max_steps, max_filters);
    let c = v.pop().unwrap();
    let b = v.pop().unwrap();
    (v.pop().unwrap(), b, c)
}

/// `(a, b, c)` for `a(b ∨ c)`: `a` later, `b`, `c` joinable and ending at
/// `a`'s source.
pub fn left_distributive_triple<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup, Setup) {
    let (b, c) = joinable_pair(rng, num_sites, max_steps, max_filters);
    let a = next_after(rng, b.sink(), num_sites, max_steps, max_filters);
    (a, b, c)
}

/// `(a, b, c)` for `(b ∨ c)a`: `a` earlier and starting at time 0, `b`, `c`
/// joinable and starting at `a`'s sink.
pub fn right_distributive_triple<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    max_steps: i64,
    max_filters: usize,
) -> (Setup, Setup, Setup) {
    let a = random_setup(rng, num_sites, max_steps, max_filters);
    let mut v = joinable_family(rng, 2, a.sink(), num_sites, max_steps, max_filters);
    let c = v.pop().unwrap();
    (a, v.pop().unwrap(), c)
}

fn unit_square<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

/// State with every entry drawn from the unit square.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, num_sites: usize, time: i64) -> WaveFunction {
    let values: Vec<Complex64> = (0..num_sites).map(|_| unit_square(rng)).collect();
    WaveFunction::new(values, time).expect("finite entries")
}

/// State supported on exactly two distinct sites, each entry with modulus
/// in `[0.5, 1]`.
pub fn two_component_state<R: Rng + ?Sized>(rng: &mut R, num_sites: usize, time: i64) -> WaveFunction {
    assert!(num_sites >= 2, "two components need two sites");
    let mut sites: Vec<usize> = (0..num_sites).collect();
    sites.shuffle(rng);
    let mut values = vec![Complex64::new(0.0, 0.0); num_sites];
    for &site in &sites[..2] {
        values[site] = Complex64::from_polar(
            rng.random_range(0.5..=1.0),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
    }
    WaveFunction::new(values, time).expect("finite entries")
}
