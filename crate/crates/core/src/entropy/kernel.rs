//! Orbit cache and the greedy counting kernels.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::EntropyError;
use crate::systems::SystemInstance;
use crate::uniformity::{chord, EntourageFamily, Level, Point};

/// Orbits `p, f(p), ..., f^{horizon-1}(p)` of a list of samples, stored flat.
#[derive(Clone, Debug)]
pub struct OrbitCache {
    horizon: usize,
    samples: usize,
    states: Vec<Point>,
    /// Declared fixed points, used to skip times when both states sit near one.
    hubs: Vec<Point>,
}

impl OrbitCache {
    pub fn build(system: &SystemInstance, points: &[Point], horizon: usize) -> Result<OrbitCache, EntropyError> {
        if horizon == 0 {
            return Err(EntropyError::HorizonZero);
        }
        let mut states = vec![Point::Infinity; points.len() * horizon];
        states
            .par_chunks_mut(horizon)
            .zip(points.par_iter())
            .try_for_each(|(row, p)| -> Result<(), EntropyError> {
                let mut q = *p;
                row[0] = q;
                for slot in row.iter_mut().skip(1) {
                    q = system.step(&q)?;
                    *slot = q;
                }
                Ok(())
            })?;
        let hubs = if system.non_wandering_everything() || system.non_wandering().len() > MAX_HUBS {
            Vec::new()
        } else {
            system.non_wandering().to_vec()
        };
        Ok(OrbitCache {
            horizon,
            samples: points.len(),
            states,
            hubs,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    #[inline]
    pub fn at(&self, i: usize, t: usize) -> &Point {
        &self.states[i * self.horizon + t]
    }

    pub fn orbit(&self, i: usize) -> &[Point] {
        &self.states[i * self.horizon..(i + 1) * self.horizon]
    }

    /// Whether samples `a` and `b` stay `k`-close at every time `< t`.
    #[inline]
    pub fn close_through(&self, family: &dyn EntourageFamily, k: Level, a: usize, b: usize, t: usize) -> bool {
        let (ra, rb) = (self.orbit(a), self.orbit(b));
        // probe a few spread-out times first; most rejections happen there
        probe(family, k, ra, rb, t) && (0..t).rev().all(|i| family.contains(k, &ra[i], &rb[i]))
    }
}

const MAX_HUBS: usize = 8;
const FAR: u8 = u8::MAX;

/// A few spread-out times; most rejections happen there.
#[inline]
fn probe(family: &dyn EntourageFamily, k: Level, ra: &[Point], rb: &[Point], t: usize) -> bool {
    [0, t / 4, t / 2, 3 * t / 4]
        .into_iter()
        .filter(|&i| i < t)
        .all(|i| family.contains(k, &ra[i], &rb[i]))
}

/// For every cached state, the first hub it is `square_root_level(k)`-close
/// to, or `FAR`. Two states close to the same hub are `k`-close, so a
/// history check only has to look at the times when one of them is far.
struct HubTable {
    horizon: usize,
    hub: Vec<u8>,
    far_start: Vec<usize>,
    far_times: Vec<u32>,
    several: bool,
}

impl HubTable {
    fn new(cache: &OrbitCache, family: &dyn EntourageFamily, k: Level) -> Option<HubTable> {
        let root = family.square_root_level(k);
        if cache.hubs.is_empty() || family.check_level(root).is_err() {
            return None;
        }
        let hub: Vec<u8> = cache
            .states
            .par_iter()
            .map(|p| {
                cache
                    .hubs
                    .iter()
                    .position(|h| family.contains(root, p, h))
                    .map_or(FAR, |i| i as u8)
            })
            .collect();
        let mut far_start = Vec::with_capacity(cache.samples + 1);
        let mut far_times = Vec::new();
        for row in hub.chunks(cache.horizon.max(1)) {
            far_start.push(far_times.len());
            far_times.extend(row.iter().enumerate().filter(|(_, &h)| h == FAR).map(|(i, _)| i as u32));
        }
        far_start.push(far_times.len());
        Some(HubTable {
            horizon: cache.horizon,
            hub,
            far_start,
            far_times,
            several: cache.hubs.len() > 1,
        })
    }

    fn far(&self, i: usize) -> &[u32] {
        &self.far_times[self.far_start[i]..self.far_start[i + 1]]
    }
}

/// `k`-closeness of cached orbits, with embedded coordinates cached when
/// the family allows it and the hub shortcut when available.
struct Closeness<'a> {
    cache: &'a OrbitCache,
    family: &'a dyn EntourageFamily,
    k: Level,
    embedded: Option<(Vec<[f64; 3]>, f64)>,
    hubs: Option<HubTable>,
}

impl<'a> Closeness<'a> {
    fn new(cache: &'a OrbitCache, family: &'a dyn EntourageFamily, k: Level) -> Self {
        let embedded = family
            .embedded_radius(k)
            .map(|r| (cache.states.par_iter().map(|p| family.locate(p)).collect(), r));
        Closeness {
            cache,
            family,
            k,
            embedded,
            hubs: HubTable::new(cache, family, k),
        }
    }

    /// `locate` of sample `i` at time `t`.
    #[inline]
    fn locate(&self, i: usize, t: usize) -> [f64; 3] {
        match &self.embedded {
            Some((loc, _)) => loc[i * self.cache.horizon + t],
            None => self.family.locate(self.cache.at(i, t)),
        }
    }

    /// Whether samples `a` and `b` are `k`-close at time `t`.
    #[inline]
    fn at(&self, a: usize, b: usize, t: usize) -> bool {
        match &self.embedded {
            Some((loc, r)) => {
                let h = self.cache.horizon;
                chord(&loc[a * h + t], &loc[b * h + t]) < *r
            }
            None => self.family.contains(self.k, self.cache.at(a, t), self.cache.at(b, t)),
        }
    }

    /// Same answer as [`OrbitCache::close_through`].
    #[inline]
    fn through(&self, a: usize, b: usize, t: usize) -> bool {
        if ![0, t / 4, t / 2, 3 * t / 4].into_iter().filter(|&i| i < t).all(|i| self.at(a, b, i)) {
            return false;
        }
        let Some(h) = &self.hubs else {
            return (0..t).rev().all(|i| self.at(a, b, i));
        };
        for &i in h.far(a).iter().chain(h.far(b)) {
            let i = i as usize;
            if i < t && !self.at(a, b, i) {
                return false;
            }
        }
        if h.several {
            let (ha, hb) = (&h.hub[a * h.horizon..], &h.hub[b * h.horizon..]);
            return (0..t).all(|i| ha[i] == hb[i] || ha[i] == FAR || hb[i] == FAR || self.at(a, b, i));
        }
        true
    }
}

/// Buckets of `locate` coordinates with cell side `reach(k)`.
pub(crate) struct Grid {
    reach: f64,
    dims: usize,
    cells: FxHashMap<[i64; 3], Vec<u32>>,
}

impl Grid {
    pub(crate) fn new(family: &dyn EntourageFamily, k: Level) -> Grid {
        Grid {
            reach: family.reach(k),
            dims: family.dims().clamp(1, 3),
            cells: FxHashMap::default(),
        }
    }

    pub(crate) fn key(&self, loc: [f64; 3]) -> [i64; 3] {
        let mut key = [0i64; 3];
        for d in 0..self.dims {
            // saturating float-to-int casts keep non-finite coordinates bucketed
            key[d] = (loc[d] / self.reach).floor() as i64;
        }
        key
    }

    /// Whether two keys are neighbours; a necessary condition for `contains`.
    pub(crate) fn adjacent(a: &[i64; 3], b: &[i64; 3]) -> bool {
        (0..3).all(|d| a[d].abs_diff(b[d]) <= 1)
    }

    pub(crate) fn clear(&mut self) {
        self.cells.clear();
    }

    pub(crate) fn insert(&mut self, loc: [f64; 3], id: u32) {
        let key = self.key(loc);
        self.cells.entry(key).or_default().push(id);
    }

    /// First id near `loc`, in a fixed cell order, satisfying `pred`.
    pub(crate) fn find(&self, loc: [f64; 3], mut pred: impl FnMut(u32) -> bool) -> Option<u32> {
        let base = self.key(loc);
        let span = |d: usize| if d < self.dims { -1..=1 } else { 0..=0 };
        for dx in span(0) {
            for dy in span(1) {
                for dz in span(2) {
                    let key = [
                        base[0].saturating_add(dx),
                        base[1].saturating_add(dy),
                        base[2].saturating_add(dz),
                    ];
                    if let Some(ids) = self.cells.get(&key) {
                        if let Some(&id) = ids.iter().find(|&&id| pred(id)) {
                            return Some(id);
                        }
                    }
                }
            }
        }
        None
    }

    /// All ids near `loc` satisfying `pred`.
    pub(crate) fn collect(&self, loc: [f64; 3], mut pred: impl FnMut(u32) -> bool) -> Vec<u32> {
        let mut out = Vec::new();
        self.find(loc, |id| {
            if pred(id) {
                out.push(id);
            }
            false
        });
        out
    }
}

/// Result of one greedy separated-set run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatedRun {
    /// `counts[n - 1]` is the size of the admitted set after scan `n`.
    pub counts: Vec<u64>,
    /// Admitted sample indices in admission order.
    pub admitted: Vec<u32>,
    /// For every sample, the scan `n` at which it was admitted, if ever.
    pub admitted_at: Vec<Option<u32>>,
    /// For every sample not admitted after the last scan, an admitted sample
    /// whose dynamical ball contains it.
    pub blocker: Vec<Option<u32>>,
}

const NONE: u32 = u32::MAX;

/// Greedy maximal `(n, k)`-separated subsets for `n = 1..=horizon`.
///
/// Scan `n` visits the samples in `order` and admits a sample iff it is
/// `(n, k)`-separated from everything admitted so far; scan `n + 1` starts
/// from the set left by scan `n`. A non-admitted sample keeps one admitted
/// blocker it has not separated from; only when that pair separates is a new
/// blocker searched for, among admitted points bucketed by their position
/// at the latest time.
pub fn greedy_separated(cache: &OrbitCache, family: &dyn EntourageFamily, k: Level, order: &[u32]) -> SeparatedRun {
    let m = cache.len();
    let mut blocker = vec![NONE; m];
    let mut admitted_at: Vec<Option<u32>> = vec![None; m];
    let mut admitted: Vec<u32> = Vec::new();
    let mut pending: Vec<u32> = order.to_vec();
    let mut counts = Vec::with_capacity(cache.horizon());
    let mut grid = Grid::new(family, k);
    let mut fresh = Grid::new(family, k);
    let closeness = Closeness::new(cache, family, k);
    // cells at time 0; a blocker must share a neighbouring one
    let key0: Vec<[i64; 3]> = (0..m).map(|i| grid.key(family.locate(cache.at(i, 0)))).collect();

    for n in 1..=cache.horizon() {
        let t = n - 1;
        grid.clear();
        for &a in &admitted {
            grid.insert(closeness.locate(a as usize, t), a);
        }
        // test phase: blockers among points admitted before this scan
        let status: Vec<u32> = pending
            .par_iter()
            .map(|&q| {
                let q = q as usize;
                let b = blocker[q];
                if b != NONE && closeness.at(b as usize, q, t) {
                    return b;
                }
                grid.find(closeness.locate(q, t), |a| {
                    Grid::adjacent(&key0[a as usize], &key0[q])
                        && closeness.at(a as usize, q, t)
                        && closeness.through(a as usize, q, t)
                })
                .unwrap_or(NONE)
            })
            .collect();
        // commit phase, in scan order, against points admitted during this scan
        fresh.clear();
        let mut still = Vec::with_capacity(pending.len());
        for (&q, &b) in pending.iter().zip(&status) {
            let qi = q as usize;
            if b != NONE {
                blocker[qi] = b;
                still.push(q);
                continue;
            }
            let loc = closeness.locate(qi, t);
            let hit = fresh.find(loc, |a| {
                Grid::adjacent(&key0[a as usize], &key0[qi])
                    && closeness.at(a as usize, qi, t)
                    && closeness.through(a as usize, qi, t)
            });
            match hit {
                Some(a) => {
                    blocker[qi] = a;
                    still.push(q);
                }
                None => {
                    blocker[qi] = NONE;
                    admitted_at[qi] = Some(n as u32);
                    admitted.push(q);
                    fresh.insert(loc, q);
                }
            }
        }
        pending = still;
        counts.push(admitted.len() as u64);
    }
    SeparatedRun {
        counts,
        admitted,
        admitted_at,
        blocker: blocker.into_iter().map(|b| (b != NONE).then_some(b)).collect(),
    }
}

/// Above this many ball entries the cover kernel refuses to run.
pub const MAX_BALL_ENTRIES: usize = 40_000_000;

/// Greedy covers of the samples by dynamical balls centred at samples, for
/// `n = 1..=horizon`: repeatedly take the centre whose ball holds the most
/// uncovered samples (ties to the lowest index).
pub fn greedy_cover(cache: &OrbitCache, family: &dyn EntourageFamily, k: Level) -> Result<Vec<u64>, EntropyError> {
    let m = cache.len();
    let mut grid = Grid::new(family, k);
    for i in 0..m {
        grid.insert(family.locate(cache.at(i, 0)), i as u32);
    }
    let mut total = 0usize;
    let mut balls: Vec<Vec<u32>> = Vec::with_capacity(m);
    for i in 0..m {
        let p = cache.at(i, 0);
        let mut ball = grid.collect(family.locate(p), |q| family.contains(k, p, cache.at(q as usize, 0)));
        ball.sort_unstable();
        total += ball.len();
        if total > MAX_BALL_ENTRIES {
            return Err(EntropyError::TooLarge(format!(
                "generator count needs more than {MAX_BALL_ENTRIES} ball entries at level {k}; use fewer samples"
            )));
        }
        balls.push(ball);
    }
    let mut out = Vec::with_capacity(cache.horizon());
    let mut covered = vec![false; m];
    for n in 1..=cache.horizon() {
        let t = n - 1;
        if t > 0 {
            balls.par_iter_mut().enumerate().for_each(|(i, ball)| {
                let c = cache.at(i, t);
                ball.retain(|&q| family.contains(k, c, cache.at(q as usize, t)));
            });
        }
        covered.iter_mut().for_each(|c| *c = false);
        let mut heap: BinaryHeap<(usize, Reverse<u32>)> =
            balls.iter().enumerate().map(|(i, b)| (b.len(), Reverse(i as u32))).collect();
        let (mut remaining, mut used) = (m, 0u64);
        while remaining > 0 {
            let Some((stale, Reverse(i))) = heap.pop() else { break };
            let ball = &balls[i as usize];
            let fresh = ball.iter().filter(|&&q| !covered[q as usize]).count();
            if fresh == stale {
                for &q in ball {
                    covered[q as usize] = true;
                }
                remaining -= fresh;
                used += 1;
            } else if fresh > 0 {
                heap.push((fresh, Reverse(i)));
            }
        }
        out.push(used);
    }
    Ok(out)
}

/// Samples of `universe` whose orbit stays `k`-close to `center_orbit` for
/// the first `n` times.
pub fn dynamical_ball_cached(
    cache: &OrbitCache,
    center_orbit: &[Point],
    family: &dyn EntourageFamily,
    k: Level,
    n: usize,
) -> Vec<u32> {
    (0..cache.len() as u32)
        .filter(|&q| (0..n).all(|i| family.contains(k, &center_orbit[i], cache.at(q as usize, i))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build, CatalogOptions};

    /// Quadratic greedy straight from the definition.
    fn brute_force(cache: &OrbitCache, family: &dyn EntourageFamily, k: Level) -> Vec<u64> {
        let m = cache.len();
        let mut set: Vec<usize> = Vec::new();
        let mut out = Vec::new();
        for n in 1..=cache.horizon() {
            for q in 0..m {
                if set.contains(&q) {
                    continue;
                }
                let separated = set.iter().all(|&a| !cache.close_through(family, k, a, q, n));
                if separated {
                    set.push(q);
                }
            }
            out.push(set.len() as u64);
        }
        out
    }

    #[test]
    fn kernel_matches_brute_force() {
        let opts = CatalogOptions { grid: Some(300), horizon: Some(12), ..Default::default() };
        for name in ["north-south-interval", "doubling", "parabolic-disk", "double-arrow", "translation-line"] {
            let s = build(name, &opts).unwrap();
            let pts = s.default_compact().points();
            let cache = OrbitCache::build(&s, pts, 12).unwrap();
            let order: Vec<u32> = (0..pts.len() as u32).collect();
            for k in [2, 4, 6] {
                let run = greedy_separated(&cache, s.entourages(), k, &order);
                assert_eq!(run.counts, brute_force(&cache, s.entourages(), k), "{name} k={k}");
            }
        }
    }

    #[test]
    fn shortcut_history_check_agrees() {
        let opts = CatalogOptions { grid: Some(400), horizon: Some(40), ..Default::default() };
        for name in ["north-south-interval", "brouwer-sphere", "translation-line", "double-arrow", "rotation"] {
            let s = build(name, &opts).unwrap();
            let cache = OrbitCache::build(&s, s.default_compact().points(), 40).unwrap();
            let m = cache.len();
            for k in [1, 3, 5] {
                let fast = Closeness::new(&cache, s.entourages(), k);
                for a in (0..m).step_by(7) {
                    for b in (0..m).step_by(5) {
                        for t in [1, 9, 40] {
                            assert_eq!(
                                fast.through(a, b, t),
                                cache.close_through(s.entourages(), k, a, b, t),
                                "{name} k={k} {a} {b} {t}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn blockers_witness_maximality() {
        let s = build("north-south-interval", &CatalogOptions { grid: Some(500), horizon: Some(20), ..Default::default() }).unwrap();
        let pts = s.default_compact().points();
        let cache = OrbitCache::build(&s, pts, 20).unwrap();
        let order: Vec<u32> = (0..pts.len() as u32).collect();
        let run = greedy_separated(&cache, s.entourages(), 5, &order);
        for q in 0..pts.len() {
            match (run.admitted_at[q], run.blocker[q]) {
                (Some(_), None) => {}
                (None, Some(b)) => assert!(cache.close_through(s.entourages(), 5, b as usize, q, 20)),
                other => panic!("sample {q}: {other:?}"),
            }
        }
    }
}
