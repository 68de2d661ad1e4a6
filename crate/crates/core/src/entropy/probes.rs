//! Stability probes and the property checks that compare two count runs.

use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{greedy_separated, Grid, OrbitCache};
use super::{natural_order, non_empty, EntropyError};
use crate::growth::{classify, Bands, GrowthClass, GrowthSeries};
use crate::systems::{SystemError, SystemInstance};
use crate::uniformity::{EntourageFamily, Level, Point, SampledCompact};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub stable: bool,
    pub target_level: Level,
    /// Coarsest level whose close pairs all stay `target_level`-close.
    pub witness_level: Option<Level>,
    /// At the finest level: two samples and the first time they separate.
    pub counterexample: Option<(Point, Point, usize)>,
    /// Close pairs examined at the witness level (or the finest level).
    pub pairs_checked: u64,
}

struct LevelScan {
    pairs: u64,
    failure: Option<(u32, u32, usize)>,
}

fn scan_pairs(cache: &OrbitCache, family: &dyn EntourageFamily, v: Level, target: Level) -> LevelScan {
    let mut grid = Grid::new(family, v);
    for i in 0..cache.len() {
        grid.insert(family.locate(cache.at(i, 0)), i as u32);
    }
    let per_point: Vec<(u64, Option<(u32, u32, usize)>)> = (0..cache.len() as u32)
        .into_par_iter()
        .map(|i| {
            let (oi, p) = (cache.orbit(i as usize), cache.at(i as usize, 0));
            let mut pairs = 0;
            let mut failure = None;
            grid.find(family.locate(p), |q| {
                if q <= i || !family.contains(v, p, cache.at(q as usize, 0)) {
                    return false;
                }
                pairs += 1;
                let oq = cache.orbit(q as usize);
                if let Some(t) = (0..oi.len()).find(|&t| !family.contains(target, &oi[t], &oq[t])) {
                    failure = Some((i, q, t));
                    return true;
                }
                false
            });
            (pairs, failure)
        })
        .collect();
    LevelScan {
        pairs: per_point.iter().map(|r| r.0).sum(),
        failure: per_point.iter().find_map(|r| r.1),
    }
}

/// Looks for a level `v >= target_k` such that every pair of samples of
/// `compact` that is `v`-close stays `target_k`-close for `horizon` steps.
///
/// Levels with no close pair at all are vacuous and never serve as witness.
pub fn lyapunov_probe(
    system: &SystemInstance,
    compact: &SampledCompact,
    target_k: Level,
    horizon: usize,
) -> Result<LyapunovReport, EntropyError> {
    let family = system.entourages();
    family.check_level(target_k)?;
    non_empty(compact)?;
    let cache = OrbitCache::build(system, compact.points(), horizon + 1)?;
    let pts = compact.points();
    let mut last = None;
    let mut last_pairs = 0;
    for v in target_k..=family.level_range().1 {
        let scan = scan_pairs(&cache, family, v, target_k);
        if scan.pairs == 0 {
            continue;
        }
        match scan.failure {
            None => {
                return Ok(LyapunovReport {
                    stable: true,
                    target_level: target_k,
                    witness_level: Some(v),
                    counterexample: None,
                    pairs_checked: scan.pairs,
                })
            }
            Some((i, q, t)) => {
                last = Some((pts[i as usize], pts[q as usize], t));
                last_pairs = scan.pairs;
            }
        }
    }
    Ok(LyapunovReport {
        stable: false,
        target_level: target_k,
        witness_level: None,
        counterexample: last,
        pairs_checked: last_pairs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub target_level: Level,
    pub witness_level: Option<Level>,
    /// The witness ball holds no sample besides `x`, so the check was vacuous.
    pub trivial_ball: bool,
    /// At the finest level: a ball sample and the signed time it leaves.
    pub counterexample: Option<(Point, i64)>,
}

fn two_sided(system: &SystemInstance, inverse: &SystemInstance, p: &Point, horizon: usize) -> Result<Vec<Point>, SystemError> {
    let mut out = inverse.orbit(p, horizon + 1)?;
    out.reverse();
    out.pop();
    out.extend(system.orbit(p, horizon + 1)?);
    Ok(out)
}

/// Two-sided, centred version of [`lyapunov_probe`]: searches for a level
/// `v` whose ball around `x` stays `target_k`-close to the orbit of `x` for
/// times `-horizon..=horizon`.
pub fn regularity_probe(
    system: &SystemInstance,
    x: &Point,
    target_k: Level,
    horizon: usize,
    universe: &SampledCompact,
) -> Result<RegularityReport, EntropyError> {
    let family = system.entourages();
    family.check_level(target_k)?;
    if !system.is_invertible() {
        return Err(EntropyError::NotInvertible(system.name().to_string()));
    }
    if !universe.points().contains(x) {
        return Err(EntropyError::NotSampled(x.to_string()));
    }
    let inverse = system.inverse()?;
    let ox = two_sided(system, &inverse, x, horizon)?;
    let h = horizon as i64;
    let mut counterexample = None;
    for v in target_k..=family.level_range().1 {
        let ball: Vec<&Point> = universe
            .points()
            .iter()
            .filter(|q| *q != x && family.contains(v, x, q))
            .collect();
        let failure = ball
            .par_iter()
            .map(|q| -> Result<Option<(Point, i64)>, SystemError> {
                let oq = two_sided(system, &inverse, q, horizon)?;
                Ok((0..oq.len())
                    .find(|&t| !family.contains(target_k, &ox[t], &oq[t]))
                    .map(|t| (**q, t as i64 - h)))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .next();
        match failure {
            None => {
                return Ok(RegularityReport {
                    regular: true,
                    target_level: target_k,
                    witness_level: Some(v),
                    trivial_ball: ball.is_empty(),
                    counterexample: None,
                })
            }
            Some(c) => counterexample = Some(c),
        }
    }
    Ok(RegularityReport {
        regular: false,
        target_level: target_k,
        witness_level: None,
        trivial_ball: false,
        counterexample,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaLimitReport {
    /// First `i >= 1` with `f^{-i}(x)` outside the `k`-ball of `x`.
    pub exit_time: Option<usize>,
    pub counts: Vec<u64>,
    /// Smallest `c >= 0` with `s(n) >= n - c` on the run.
    pub c: u64,
}

/// Checks that the backward orbit of `x` leaves its `k`-ball, and reports
/// the constant in `s(n) >= n - c` for the level-`k` counts on `compact`.
pub fn alpha_limit_probe(
    system: &SystemInstance,
    x: &Point,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
) -> Result<AlphaLimitReport, EntropyError> {
    let family = system.entourages();
    family.check_level(k)?;
    non_empty(compact)?;
    if !system.is_invertible() {
        return Err(EntropyError::NotInvertible(system.name().to_string()));
    }
    let back = system.inverse()?.orbit(x, horizon + 1)?;
    let exit_time = (1..back.len()).find(|&i| !family.contains(k, x, &back[i]));
    let cache = OrbitCache::build(system, compact.points(), horizon)?;
    let counts = greedy_separated(&cache, family, k, &natural_order(cache.len())).counts;
    let c = counts
        .iter()
        .enumerate()
        .map(|(i, &s)| (i as u64 + 1).saturating_sub(s))
        .max()
        .unwrap_or(0);
    Ok(AlphaLimitReport { exit_time, counts, c })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub r: u32,
    pub k: Level,
    pub base: GrowthClass,
    pub power: GrowthClass,
    pub ok: bool,
}

/// Classifies the level-`k` counts of `f` and of `f^r` and checks
/// `class(f) <= class(f^r)`.
pub fn power_monotonicity_check(
    system: &SystemInstance,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
    r: u32,
    bands: &Bands,
    slack: f64,
) -> Result<PowerReport, EntropyError> {
    let family = system.entourages();
    family.check_level(k)?;
    non_empty(compact)?;
    let order = natural_order(compact.len());
    let mut classes = Vec::with_capacity(2);
    for s in [system.clone(), system.power(r)?] {
        let cache = OrbitCache::build(&s, compact.points(), horizon)?;
        let counts = greedy_separated(&cache, family, k, &order).counts;
        classes.push(classify(&GrowthSeries::from_counts(&counts)?, bands)?);
    }
    Ok(PowerReport {
        r,
        k,
        base: classes[0],
        power: classes[1],
        ok: classes[0].le_with(&classes[1], slack),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchedLevel {
    pub target_level: Level,
    pub source_level: Level,
    pub s_target: Vec<u64>,
    pub s_source: Vec<u64>,
    pub first_violation: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemiconjugacyReport {
    /// Source samples with `pi(f(p)) != g(pi(p))`.
    pub equivariance_failures: usize,
    pub levels: Vec<MatchedLevel>,
    pub ok: bool,
}

/// Smallest source level whose membership forces target membership at
/// level `j` after projection: cells narrower than the target radius, or the
/// same metric with a radius no larger.
fn matched_level(source: &dyn EntourageFamily, target: &dyn EntourageFamily, j: Level) -> Result<Level, EntropyError> {
    let radius = target.radius(j).ok_or(EntropyError::NoMatchingLevel(j))?;
    let (lo, hi) = source.level_range();
    (lo..=hi)
        .find(|&k| match (source.cell_diameter(k), source.radius(k)) {
            (Some(d), _) => d < radius,
            (None, Some(r)) => source.describe() == target.describe() && r <= radius,
            _ => false,
        })
        .ok_or(EntropyError::NoMatchingLevel(j))
}

/// For a factor map `pi` from `source` onto `target`, compares separated
/// counts of the projected samples at each target level with those of the
/// source samples at the matched source level.
pub fn semiconjugacy_inequality_check(
    source: &SystemInstance,
    target: &SystemInstance,
    pi: &(dyn Fn(&Point) -> Result<Point, SystemError> + Sync),
    target_levels: &[Level],
    horizon: usize,
) -> Result<SemiconjugacyReport, EntropyError> {
    if target_levels.is_empty() {
        return Err(EntropyError::NoLevels);
    }
    let samples = source.default_compact();
    non_empty(samples)?;
    let projected = samples.points().iter().map(pi).collect::<Result<Vec<_>, _>>()?;
    let equivariance_failures = samples
        .points()
        .par_iter()
        .zip(projected.par_iter())
        .map(|(p, q)| Ok::<_, SystemError>(pi(&source.step(p)?)? != target.step(q)?))
        .collect::<Result<Vec<bool>, _>>()?
        .into_iter()
        .filter(|&bad| bad)
        .count();
    let projected = SampledCompact::deduplicated("projected", projected, None)?;

    let (sf, tf) = (source.entourages(), target.entourages());
    let source_cache = OrbitCache::build(source, samples.points(), horizon)?;
    let target_cache = OrbitCache::build(target, projected.points(), horizon)?;
    let mut levels = Vec::with_capacity(target_levels.len());
    for &j in target_levels {
        tf.check_level(j)?;
        let k = matched_level(sf, tf, j)?;
        let s_target = greedy_separated(&target_cache, tf, j, &natural_order(target_cache.len())).counts;
        let s_source = greedy_separated(&source_cache, sf, k, &natural_order(source_cache.len())).counts;
        let first_violation = s_target.iter().zip(&s_source).position(|(a, b)| a > b).map(|i| i + 1);
        levels.push(MatchedLevel {
            target_level: j,
            source_level: k,
            s_target,
            s_source,
            first_violation,
        });
    }
    let ok = equivariance_failures == 0 && levels.iter().all(|l| l.first_violation.is_none());
    Ok(SemiconjugacyReport {
        equivariance_failures,
        levels,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::ClassLabel;
    use crate::systems::{build, circle_rotation, semiconjugacy_projection, CatalogOptions, Projection};

    fn opts(grid: usize, horizon: usize) -> CatalogOptions {
        CatalogOptions { grid: Some(grid), horizon: Some(horizon), ..Default::default() }
    }

    #[test]
    fn rotation_is_lyapunov_stable_at_the_target() {
        let s = build("rotation", &opts(1001, 32)).unwrap();
        for k in [2, 5, 8] {
            let r = lyapunov_probe(&s, s.default_compact(), k, 64).unwrap();
            assert!(r.stable);
            assert_eq!(r.witness_level, Some(k));
        }
    }

    #[test]
    fn doubling_is_unstable() {
        let s = build("doubling", &opts(100_000, 16)).unwrap();
        let r = lyapunov_probe(&s, s.default_compact(), 2, 16).unwrap();
        assert!(!r.stable);
        let (p, q, t) = r.counterexample.unwrap();
        let (op, oq) = (s.orbit(&p, t + 1).unwrap(), s.orbit(&q, t + 1).unwrap());
        assert!(!s.entourages().contains(2, &op[t], &oq[t]));
    }

    #[test]
    fn north_south_middle_is_stable_both_ways() {
        let s = build("north-south-interval", &opts(4000, 64)).unwrap();
        let k = s.compact("middle").unwrap();
        assert!(lyapunov_probe(&s, k, 3, 64).unwrap().stable);
        assert!(lyapunov_probe(&s.inverse().unwrap(), k, 3, 64).unwrap().stable);
    }

    #[test]
    fn translation_points_are_regular() {
        let s = build("translation-line", &opts(4000, 64)).unwrap();
        let c = s.default_compact();
        // the chordal metric shrinks by 1 + x^2 far out, so far points need levels beyond the base
        for p in c.points().iter().filter(|p| p.real().is_some_and(|x| x.abs() < 16.0)).step_by(41) {
            let r = regularity_probe(&s, p, 3, 64, c).unwrap();
            assert!(r.regular, "{p}");
        }
        let d = build("doubling", &opts(100, 16)).unwrap();
        assert!(matches!(
            regularity_probe(&d, &Point::Real(0.0), 2, 4, d.default_compact()),
            Err(EntropyError::NotInvertible(_))
        ));
    }

    #[test]
    fn rotation_fixed_point_of_identity_is_regular() {
        let s = circle_rotation(0.25, &opts(101, 16)).unwrap().power(4).unwrap();
        let c = s.default_compact();
        let r = regularity_probe(&s, &c.points()[0], 4, 32, c).unwrap();
        assert!(r.regular && r.witness_level == Some(4));
    }

    #[test]
    fn alpha_limit_on_translation() {
        let s = build("translation-line", &opts(4000, 128)).unwrap();
        let c = s.default_compact();
        let r = alpha_limit_probe(&s, &Point::Real(0.0), c, 6, 128).unwrap();
        assert_eq!(r.exit_time, Some(1));
        assert!(r.counts.iter().enumerate().all(|(i, &v)| v + r.c > i as u64));
    }

    #[test]
    fn periodic_power_is_bounded() {
        let s = circle_rotation(0.25, &opts(1001, 64)).unwrap();
        let r = power_monotonicity_check(&s, s.default_compact(), 6, 64, 4, &Bands::default(), 0.3).unwrap();
        assert!(r.ok);
        assert_eq!(r.power.label, ClassLabel::Bounded);
    }

    #[test]
    fn double_arrow_projection() {
        let s = build("double-arrow", &opts(2000, 32)).unwrap();
        let (pi, base) = semiconjugacy_projection(&s).unwrap();
        let f = |p: &Point| pi.apply(p);
        let r = semiconjugacy_inequality_check(&s, &base, &f, &[2, 4, 6, 8], 32).unwrap();
        assert_eq!(r.equivariance_failures, 0);
        assert!(r.ok, "{:?}", r.levels.iter().map(|l| l.first_violation).collect::<Vec<_>>());
        assert!(r.levels.iter().all(|l| l.source_level > l.target_level));
    }

    #[test]
    fn identity_and_constant_factors() {
        let s = build("double-arrow", &opts(1000, 32)).unwrap();
        let (_, base) = semiconjugacy_projection(&s).unwrap();
        let id = |p: &Point| Ok(*p);
        let r = semiconjugacy_inequality_check(&base, &base, &id, &[3, 6], 32).unwrap();
        assert!(r.ok);
        assert!(r.levels.iter().all(|l| l.s_target == l.s_source));
        let zero = Projection.apply(&Point::arrow(crate::uniformity::Dyadic::ZERO, crate::uniformity::Side::Upper)).unwrap();
        let constant = move |_: &Point| Ok(zero);
        let r = semiconjugacy_inequality_check(&s, &base, &constant, &[5], 32).unwrap();
        assert!(r.levels[0].s_target.iter().all(|&v| v == 1));
        assert!(r.levels[0].first_violation.is_none());
    }
}
