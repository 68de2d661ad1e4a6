//! Mutual singularity, the coding entropy bound and family-level checks.

use rayon::prelude::*;
use serde::Serialize;

use super::exact::Chart;
use super::{codings_count, member_samples, wandering_check, CodingError, CodingFamily};
use crate::entropy::kernel::{Grid, OrbitCache};
use crate::entropy::separated_counts;
use crate::growth::{compare, default_tail_start, ComparisonVerdict, GrowthSeries};
use crate::systems::{SystemError, SystemInstance};
use crate::uniformity::{Level, Point, SampledCompact};

/// Members handled by the exhaustive subfamily enumeration.
const MAX_SUBFAMILY_MEMBERS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularWitness {
    pub n0: usize,
    pub point: Point,
    /// Visit time to each member, pairwise more than `n0` apart.
    pub times: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityReport {
    pub singular: bool,
    pub n0_max: usize,
    pub search_bound: usize,
    /// One witness per tested `n0` that has one.
    pub witnesses: Vec<SingularWitness>,
    /// Smallest tested `n0` without a sampled witness.
    pub first_failure: Option<usize>,
    /// Largest sampled min-gap over all orbits.
    pub max_sampled_gap: Option<usize>,
    /// On exact charts: no orbit at all visits every member with pairwise
    /// gaps above this, so the family is not singular for any larger `n0`.
    pub certified_bound: Option<u64>,
}

/// Largest `g` such that one visit time per member can be chosen with all
/// pairwise gaps at least `g`, with the schedule.
fn best_schedule(visits: &[Vec<usize>]) -> Option<(usize, Vec<usize>)> {
    if visits.iter().any(|v| v.is_empty()) {
        return None;
    }
    if let [a, b] = visits {
        // extreme visits suffice for two members
        let (a0, a1, b0, b1) = (a[0], a[a.len() - 1], b[0], b[b.len() - 1]);
        return Some(if a1.abs_diff(b0) >= b1.abs_diff(a0) {
            (a1.abs_diff(b0), vec![a1, b0])
        } else {
            (b1.abs_diff(a0), vec![a0, b1])
        });
    }
    fn place(visits: &[Vec<usize>], g: usize, chosen: &mut Vec<usize>) -> bool {
        let Some(v) = visits.get(chosen.len()) else { return true };
        for &t in v {
            if chosen.iter().all(|&c| c.abs_diff(t) >= g) {
                chosen.push(t);
                if place(visits, g, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let hi = visits.iter().flatten().max().copied().unwrap_or(0);
    let (mut lo, mut hi) = (0usize, hi + 1);
    let mut best = Vec::new();
    place(visits, 0, &mut best);
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        let mut chosen = Vec::new();
        if place(visits, mid, &mut chosen) {
            lo = mid;
            best = chosen;
        } else {
            hi = mid;
        }
    }
    Some((lo, best))
}

/// Searches sampled orbits for visits to every member at times pairwise
/// more than `n0` apart, for each `n0 <= n0_max`.
pub fn mutually_singular_probe(
    system: &SystemInstance,
    family: &CodingFamily,
    n0_max: usize,
    search_bound: usize,
    universe: &SampledCompact,
) -> Result<SingularityReport, CodingError> {
    let k = family.len();
    if k < 2 {
        return Err(CodingError::TooFewMembers(2));
    }
    let v = family.validate(system, universe)?;
    family.require_disjoint(&v)?;
    let mut pts = universe.points().to_vec();
    pts.extend(family.members.iter().flat_map(|m| member_samples(system, m, None)));
    let best: Vec<Option<(usize, Vec<usize>)>> = pts
        .par_iter()
        .map(|p| -> Result<_, SystemError> {
            let orbit = system.orbit(p, search_bound + 1)?;
            let mut visits = vec![Vec::new(); k];
            for (t, q) in orbit.iter().enumerate() {
                let c = system.coords(q);
                if let Some(j) = family.members.iter().position(|m| m.contains(c)) {
                    visits[j].push(t);
                }
            }
            Ok(best_schedule(&visits))
        })
        .collect::<Result<_, _>>()?;
    let mut witnesses = Vec::new();
    let mut first_failure = None;
    for n0 in 0..=n0_max {
        match best.iter().position(|b| b.as_ref().is_some_and(|b| b.0 > n0)) {
            Some(i) => witnesses.push(SingularWitness {
                n0,
                point: pts[i],
                times: best[i].as_ref().map(|b| b.1.clone()).unwrap_or_default(),
            }),
            None => {
                first_failure.get_or_insert(n0);
            }
        }
    }
    let certified_bound = match family.chart_intervals(system)? {
        Some((chart, ivs)) => certified_gap(&chart, &ivs, k, search_bound),
        None => None,
    };
    Ok(SingularityReport {
        singular: first_failure.is_none(),
        n0_max,
        search_bound,
        witnesses,
        first_failure,
        max_sampled_gap: best.iter().flatten().map(|b| b.0).max(),
        certified_bound,
    })
}

/// Minimum over member pairs of the largest gap any orbit realizes between
/// them; `None` when some gap reaches `limit` and so may be larger.
fn certified_gap(chart: &Chart, ivs: &[super::exact::ChartInterval], k: usize, limit: usize) -> Option<u64> {
    let mut bound: Option<u64> = None;
    for i in 0..k {
        for j in i + 1..k {
            let mut pair = 0u64;
            for a in ivs.iter().filter(|a| a.member == i) {
                for b in ivs.iter().filter(|b| b.member == j) {
                    if let Some(g) = chart.max_gap(a, b, limit as i64) {
                        if g >= limit as i64 {
                            return None;
                        }
                        pair = pair.max(g as u64);
                    }
                }
            }
            bound = Some(bound.map_or(pair, |b| b.min(pair)));
        }
    }
    bound
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Level `u` separating the members.
    pub level: Level,
    /// `square_root_level(u)`, at which `s` is counted.
    pub count_level: Level,
    pub factor: u64,
    pub c: Vec<u64>,
    pub s: Vec<u64>,
    pub ok: bool,
    pub first_violation: Option<usize>,
    pub exact_codings: bool,
    pub samples: usize,
}

/// Whether no member sample is `k`-close to a sample of another member at
/// time 0, nor to a sample of its own member after `1..horizon` steps.
fn separates(system: &SystemInstance, caches: &[OrbitCache], k: Level) -> bool {
    let fam = system.entourages();
    let mut grid = Grid::new(fam, k);
    let mut owner = Vec::new();
    for (r, c) in caches.iter().enumerate() {
        for i in 0..c.len() {
            grid.insert(fam.locate(c.at(i, 0)), owner.len() as u32);
            owner.push((r, i));
        }
    }
    caches.par_iter().enumerate().all(|(r, c)| {
        (0..c.len()).all(|i| {
            let y = c.at(i, 0);
            let cross = grid.find(fam.locate(y), |id| {
                let (q, j) = owner[id as usize];
                q != r && fam.contains(k, y, caches[q].at(j, 0))
            });
            cross.is_none()
                && (1..c.horizon()).all(|m| {
                    let z = c.at(i, m);
                    grid.find(fam.locate(z), |id| {
                        let (q, j) = owner[id as usize];
                        q == r && fam.contains(k, z, c.at(j, 0))
                    })
                    .is_none()
                })
        })
    })
}

/// Checks `c(n) <= 2^{#F} s(n)` with `s` counted at the square-root level
/// of the coarsest level in `levels` separating the members.
pub fn coding_entropy_bound_check(
    system: &SystemInstance,
    family: &CodingFamily,
    levels: &[Level],
    horizon: usize,
    universe: &SampledCompact,
) -> Result<BoundReport, CodingError> {
    let v = family.validate(system, universe)?;
    family.require_disjoint(&v)?;
    for m in &family.members {
        let w = wandering_check(system, m, horizon, Some(universe))?;
        if let Some(time) = w.first_return {
            return Err(CodingError::NotWandering {
                member: m.label.clone(),
                time,
            });
        }
    }
    let caches = family
        .members
        .iter()
        .map(|m| OrbitCache::build(system, &member_samples(system, m, Some(universe)), horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let fam = system.entourages();
    let (lo, hi) = fam.level_range();
    let mut sorted: Vec<Level> = levels.iter().copied().filter(|k| (lo..=hi).contains(k)).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let level = sorted
        .into_iter()
        .find(|&k| (lo..=hi).contains(&fam.square_root_level(k)) && separates(system, &caches, k))
        .ok_or(CodingError::NoSeparatingLevel)?;
    let count_level = fam.square_root_level(level);
    let pool = family.augmented_universe(system, universe)?;
    let c = codings_count(system, family, horizon, &pool)?;
    let s = separated_counts(system, &pool, count_level, horizon)?;
    let factor = 1u64 << family.len().min(63);
    let first_violation = c
        .counts
        .iter()
        .zip(&s)
        .position(|(&c, &s)| c > factor.saturating_mul(s))
        .map(|i| i + 1);
    Ok(BoundReport {
        level,
        count_level,
        factor,
        ok: first_violation.is_none(),
        first_violation,
        exact_codings: c.exact,
        samples: pool.len(),
        c: c.counts,
        s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubfamilySup {
    /// Pairwise disjoint subfamilies, by label.
    pub subfamilies: Vec<Vec<String>>,
    pub counts: Vec<u64>,
    pub series: GrowthSeries,
}

/// Pointwise sup of `c` over all pairwise disjoint non-empty subfamilies.
pub fn disjoint_subfamily_sup(
    system: &SystemInstance,
    family: &CodingFamily,
    horizon: usize,
    universe: &SampledCompact,
) -> Result<SubfamilySup, CodingError> {
    let k = family.len();
    if k > MAX_SUBFAMILY_MEMBERS {
        return Err(CodingError::TooManyMembers(MAX_SUBFAMILY_MEMBERS));
    }
    let mut apart = vec![vec![true; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = family.subfamily(&[i, j]).validate(system, universe)?;
            apart[i][j] = v.disjoint;
            apart[j][i] = v.disjoint;
        }
    }
    let mut subfamilies = Vec::new();
    let mut counts = vec![0u64; horizon];
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        if idx.iter().any(|&i| idx.iter().any(|&j| !apart[i][j])) {
            continue;
        }
        let sub = family.subfamily(&idx);
        let c = codings_count(system, &sub, horizon, universe)?;
        for (dst, &v) in counts.iter_mut().zip(&c.counts) {
            *dst = (*dst).max(v);
        }
        subfamilies.push(idx.iter().map(|&i| family.members[i].label.clone()).collect());
    }
    Ok(SubfamilySup {
        subfamilies,
        series: GrowthSeries::from_counts(&counts)?,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub family: Vec<u64>,
    pub union: Vec<u64>,
    pub verdict: ComparisonVerdict,
}

/// Compares `c` over `F` with `c` over `{∪F}`.
pub fn additivity_check(
    system: &SystemInstance,
    family: &CodingFamily,
    horizon: usize,
    universe: &SampledCompact,
) -> Result<AdditivityReport, CodingError> {
    let a = codings_count(system, family, horizon, universe)?;
    let b = codings_count(system, &family.union_family(), horizon, universe)?;
    let verdict = compare(&a.series, &b.series, default_tail_start(horizon))?;
    Ok(AdditivityReport {
        family: a.counts,
        union: b.counts,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Endpoint, Member, Shape};
    use super::*;
    use crate::growth::Relation;
    use crate::systems::{build, CatalogOptions};

    fn iv(a: &str, b: &str) -> Shape {
        Shape::Interval([Endpoint::parse(a).unwrap(), Endpoint::parse(b).unwrap()])
    }

    fn opts(grid: usize, horizon: usize) -> CatalogOptions {
        CatalogOptions { grid: Some(grid), horizon: Some(horizon), ..Default::default() }
    }

    #[test]
    fn schedules() {
        assert_eq!(best_schedule(&[vec![0, 5], vec![7]]), Some((7, vec![0, 7])));
        assert_eq!(best_schedule(&[vec![3], vec![]]), None);
        let (g, t) = best_schedule(&[vec![0, 10], vec![5], vec![0, 10]]).unwrap();
        assert_eq!(g, 5);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn north_south_pair_is_not_singular() {
        let s = build("north-south-interval", &opts(2000, 64)).unwrap();
        let f = CodingFamily::new(vec![Member::new("A", iv("1/8", "1/4")), Member::new("B", iv("1/2", "3/4"))]).unwrap();
        let r = mutually_singular_probe(&s, &f, 16, 128, s.default_compact()).unwrap();
        assert!(!r.singular);
        let bound = r.certified_bound.unwrap();
        // odds 1/7..1/3 and 1..3: at most log2(21) halvings apart
        assert_eq!(bound, 4);
        assert!(r.max_sampled_gap.unwrap() as u64 <= bound);
        assert_eq!(r.first_failure, Some(bound as usize));
    }

    #[test]
    fn translation_pair_has_bounded_gap() {
        let s = build("translation-line", &opts(2000, 64)).unwrap();
        let f = CodingFamily::new(vec![Member::new("A", iv("5", "11/2")), Member::new("B", iv("0", "1/2"))]).unwrap();
        let r = mutually_singular_probe(&s, &f, 8, 64, s.default_compact()).unwrap();
        assert!(!r.singular);
        assert_eq!(r.first_failure, Some(5));
        assert_eq!(r.certified_bound, Some(5));
    }

    #[test]
    fn translation_bound_holds() {
        let s = build("translation-line", &opts(2000, 64)).unwrap();
        let f = CodingFamily::new(vec![Member::new("Y", iv("0", "1/2"))]).unwrap();
        let levels: Vec<Level> = (1..=10).collect();
        let r = coding_entropy_bound_check(&s, &f, &levels, 64, s.default_compact()).unwrap();
        assert!(r.exact_codings && r.ok, "{r:?}");
        assert_eq!(r.c[63], 65);
    }

    #[test]
    fn bound_rejects_returning_members() {
        let r = build("rotation", &CatalogOptions { alpha: Some(0.25), grid: Some(200), ..Default::default() }).unwrap();
        let arc = CodingFamily::new(vec![Member::new("A", Shape::arc(0.1, 0.12).unwrap())]).unwrap();
        let e = coding_entropy_bound_check(&r, &arc, &[1, 2, 3], 16, r.default_compact());
        assert!(matches!(e, Err(CodingError::MeetsNonWandering { .. })));
        let s = build("north-south-interval", &opts(500, 16)).unwrap();
        let wide = CodingFamily::new(vec![Member::new("Y", iv("1/8", "3/4"))]).unwrap();
        let e = coding_entropy_bound_check(&s, &wide, &[1, 2, 3], 16, s.default_compact());
        assert!(matches!(e, Err(CodingError::NotWandering { time: 1, .. })));
    }

    #[test]
    fn additivity_and_sup_on_translation() {
        let s = build("translation-line", &opts(2000, 64)).unwrap();
        let f = CodingFamily::new(vec![
            Member::new("A", iv("0", "1/2")),
            Member::new("B", iv("3", "7/2")),
            Member::new("C", iv("13/4", "4")),
        ])
        .unwrap();
        let two = f.subfamily(&[0, 1]);
        let r = additivity_check(&s, &two, 64, s.default_compact()).unwrap();
        assert_eq!(r.verdict.relation, Relation::Equivalent);
        let sup = disjoint_subfamily_sup(&s, &f, 32, s.default_compact()).unwrap();
        // B and C overlap, so {A,B,C} and {B,C} are skipped
        assert_eq!(sup.subfamilies.len(), 5);
        let ab = codings_count(&s, &two, 32, s.default_compact()).unwrap();
        assert!(ab.counts.iter().zip(&sup.counts).all(|(a, b)| a <= b));
    }
}
