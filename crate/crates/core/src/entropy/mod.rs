//! Separated and generator counts over dynamical neighborhoods, per-level
//! classification, and the stability probes built on the same orbit cache.

pub(crate) mod kernel;
mod probes;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::growth::{classify, Bands, GrowthClass, GrowthError, GrowthSeries};
use crate::systems::{SystemError, SystemInstance};
use crate::uniformity::{EntourageFamily, Level, Point, SampledCompact, UniformityError};

pub use kernel::{
    dynamical_ball_cached, greedy_cover, greedy_separated, OrbitCache, SeparatedRun, MAX_BALL_ENTRIES,
};
pub use probes::{
    alpha_limit_probe, lyapunov_probe, power_monotonicity_check, regularity_probe, semiconjugacy_inequality_check,
    AlphaLimitReport, LyapunovReport, MatchedLevel, PowerReport, RegularityReport, SemiconjugacyReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Uniformity(#[from] UniformityError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("compact '{0}' has no samples")]
    EmptyCompact(String),
    #[error("horizon must be >= 1")]
    HorizonZero,
    #[error("no levels requested")]
    NoLevels,
    #[error("system '{0}' is not invertible")]
    NotInvertible(String),
    #[error("no level of the source base refines target level {0}")]
    NoMatchingLevel(Level),
    #[error("unknown compact selector '{0}'")]
    UnknownSelector(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("point {0} is not a sample of the universe")]
    NotSampled(String),
}

fn non_empty(compact: &SampledCompact) -> Result<(), EntropyError> {
    if compact.is_empty() {
        return Err(EntropyError::EmptyCompact(compact.label().to_string()));
    }
    Ok(())
}

fn natural_order(m: usize) -> Vec<u32> {
    (0..m as u32).collect()
}

/// Samples of `universe` in the dynamical ball `B(center, n, u_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicalBallSpec {
    pub center: Point,
    pub n: usize,
    pub k: Level,
}

pub fn dynamical_ball(
    system: &SystemInstance,
    spec: &DynamicalBallSpec,
    universe: &SampledCompact,
) -> Result<Vec<Point>, EntropyError> {
    system.entourages().check_level(spec.k)?;
    if spec.n == 0 {
        return Err(EntropyError::HorizonZero);
    }
    let cache = OrbitCache::build(system, universe.points(), spec.n)?;
    let center = system.orbit(&spec.center, spec.n)?;
    let hits = dynamical_ball_cached(&cache, &center, system.entourages(), spec.k, spec.n);
    Ok(hits.into_iter().map(|i| universe.points()[i as usize]).collect())
}

/// Greedy `(n, k)`-separated counts for `n = 1..=horizon`, as integers.
pub fn separated_counts(
    system: &SystemInstance,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
) -> Result<Vec<u64>, EntropyError> {
    system.entourages().check_level(k)?;
    non_empty(compact)?;
    let cache = OrbitCache::build(system, compact.points(), horizon)?;
    Ok(greedy_separated(&cache, system.entourages(), k, &natural_order(compact.len())).counts)
}

pub fn separated_count(
    system: &SystemInstance,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
) -> Result<GrowthSeries, EntropyError> {
    Ok(GrowthSeries::from_counts(&separated_counts(system, compact, k, horizon)?)?)
}

/// Clips a greedy cover series to `g(n) = max_{m <= n} min(cover(m), s(m))`.
///
/// Any maximal separated set is itself a generator, so `s` bounds the
/// optimal cover; the running max restores monotonicity in `n`.
fn clip_cover(cover: &[u64], s: &[u64]) -> Vec<u64> {
    let mut best = 0;
    cover
        .iter()
        .zip(s)
        .map(|(&c, &s)| {
            best = best.max(c.min(s));
            best
        })
        .collect()
}

fn generator_counts_cached(cache: &OrbitCache, family: &dyn EntourageFamily, k: Level) -> Result<Vec<u64>, EntropyError> {
    let cover = greedy_cover(cache, family, k)?;
    let s = greedy_separated(cache, family, k, &natural_order(cache.len())).counts;
    Ok(clip_cover(&cover, &s))
}

/// Generator counts at level `k`: the greedy dynamical-ball cover of the
/// samples, clipped by the greedy separated count at the same level.
pub fn generator_count(
    system: &SystemInstance,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
) -> Result<GrowthSeries, EntropyError> {
    system.entourages().check_level(k)?;
    non_empty(compact)?;
    let cache = OrbitCache::build(system, compact.points(), horizon)?;
    Ok(GrowthSeries::from_counts(&generator_counts_cached(&cache, system.entourages(), k)?)?)
}

/// `s(coarse, n) <= g(fine, n) <= s(fine, n)` with `fine = square_root_level(coarse)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub coarse: Level,
    pub fine: Level,
    pub s_coarse: Vec<u64>,
    pub g_fine: Vec<u64>,
    pub s_fine: Vec<u64>,
    pub ok: bool,
    /// First `n` (1-based) where the chain breaks.
    pub first_violation: Option<usize>,
}

impl SandwichReport {
    /// Whether `s_coarse(n) <= g_fine(n) <= s_fine(n)`.
    pub fn holds_at(&self, n: usize) -> bool {
        let i = n - 1;
        self.s_coarse[i] <= self.g_fine[i] && self.g_fine[i] <= self.s_fine[i]
    }

    pub fn violations(&self) -> usize {
        (1..=self.s_coarse.len()).filter(|&n| !self.holds_at(n)).count()
    }
}

fn sandwich_from(coarse: Level, fine: Level, s_coarse: Vec<u64>, g_fine: Vec<u64>, s_fine: Vec<u64>) -> SandwichReport {
    let first_violation = (0..s_coarse.len())
        .find(|&i| !(s_coarse[i] <= g_fine[i] && g_fine[i] <= s_fine[i]))
        .map(|i| i + 1);
    SandwichReport {
        coarse,
        fine,
        s_coarse,
        g_fine,
        s_fine,
        ok: first_violation.is_none(),
        first_violation,
    }
}

fn sandwich_cached(
    cache: &OrbitCache,
    family: &dyn EntourageFamily,
    k: Level,
    s_coarse: Vec<u64>,
) -> Result<SandwichReport, EntropyError> {
    let fine = family.square_root_level(k);
    let order = natural_order(cache.len());
    let s_fine = if fine == k {
        s_coarse.clone()
    } else {
        greedy_separated(cache, family, fine, &order).counts
    };
    let cover = greedy_cover(cache, family, fine)?;
    let g_fine = clip_cover(&cover, &s_fine);
    Ok(sandwich_from(k, fine, s_coarse, g_fine, s_fine))
}

pub fn sandwich_check(
    system: &SystemInstance,
    compact: &SampledCompact,
    k: Level,
    horizon: usize,
) -> Result<SandwichReport, EntropyError> {
    system.entourages().check_level(k)?;
    non_empty(compact)?;
    let cache = OrbitCache::build(system, compact.points(), horizon)?;
    let family = system.entourages();
    let s = greedy_separated(&cache, family, k, &natural_order(cache.len())).counts;
    sandwich_cached(&cache, family, k, s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCounts {
    pub k: Level,
    pub counts: Vec<u64>,
    pub s_series: GrowthSeries,
    pub class: GrowthClass,
    pub sandwich: Option<SandwichReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregateStatus {
    /// The two finest levels agree.
    Stable,
    /// The two finest levels disagree.
    UnstableAtLevels { coarse: Level, fine: Level },
    /// Only one level was computed; nothing to compare.
    SingleLevel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileMetadata {
    pub grid_size: usize,
    pub density_level: Option<Level>,
    pub horizon: usize,
    pub config_hash: Option<String>,
    pub family: String,
}

/// Greedy-order sensitivity at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceRow {
    pub k: Level,
    pub counts: Vec<u64>,
    pub class: GrowthClass,
    /// `max_n |s'(n) - s(n)| / s(n)` against the fixed-order run.
    pub max_relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceReport {
    pub seed: u64,
    pub levels: Vec<VarianceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountProfile {
    pub system: String,
    pub compact: String,
    pub levels: Vec<LevelCounts>,
    /// Class of the finest level agreeing with its coarser neighbour.
    pub aggregate: Option<GrowthClass>,
    pub status: AggregateStatus,
    pub metadata: ProfileMetadata,
    pub variance: Option<VarianceReport>,
}

impl CountProfile {
    pub fn level(&self, k: Level) -> Option<&LevelCounts> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn sandwich_ok(&self) -> bool {
        self.levels.iter().all(|l| l.sandwich.as_ref().is_none_or(|s| s.ok))
    }

    /// `(k, k', n)` triples with `k < k'` and `s(k', n) < s(k, n)`.
    pub fn level_monotonicity_violations(&self) -> Vec<(Level, Level, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.levels.iter().enumerate() {
            for b in &self.levels[i + 1..] {
                let (lo, hi) = if a.k < b.k { (a, b) } else { (b, a) };
                for (n, (x, y)) in lo.counts.iter().zip(&hi.counts).enumerate() {
                    if y < x {
                        out.push((lo.k, hi.k, n + 1));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileOptions {
    pub bands: Bands,
    /// Also compute generator counts and the sandwich chain per level.
    pub generators: bool,
    /// Run a second pass in a seeded random order.
    pub variance_seed: Option<u64>,
    /// Degree (and relative rate) slack for level agreement.
    pub agreement_slack: f64,
    pub config_hash: Option<String>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            bands: Bands::default(),
            generators: false,
            variance_seed: None,
            agreement_slack: 0.3,
            config_hash: None,
        }
    }
}

fn aggregate(levels: &[LevelCounts], slack: f64) -> (Option<GrowthClass>, AggregateStatus) {
    if levels.len() == 1 {
        return (Some(levels[0].class), AggregateStatus::SingleLevel);
    }
    let agreeing = levels
        .windows(2)
        .rev()
        .find(|w| w[1].class.agrees_with(&w[0].class, slack))
        .map(|w| w[1].class);
    let (c, f) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
    let status = if f.class.agrees_with(&c.class, slack) {
        AggregateStatus::Stable
    } else {
        AggregateStatus::UnstableAtLevels { coarse: c.k, fine: f.k }
    };
    (agreeing, status)
}

fn relative_difference(a: &[u64], b: &[u64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).abs() / (x.max(1) as f64))
        .fold(0.0, f64::max)
}

/// Per-level separated counts on one compact, classified and aggregated.
pub fn entropy_profile(
    system: &SystemInstance,
    compact: &SampledCompact,
    levels: &[Level],
    horizon: usize,
    opts: &ProfileOptions,
) -> Result<CountProfile, EntropyError> {
    if levels.is_empty() {
        return Err(EntropyError::NoLevels);
    }
    non_empty(compact)?;
    opts.bands.validate()?;
    let family = system.entourages();
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    for &k in &levels {
        family.check_level(k)?;
    }
    let cache = OrbitCache::build(system, compact.points(), horizon)?;
    let order = natural_order(cache.len());

    let mut rows = Vec::with_capacity(levels.len());
    for &k in &levels {
        let counts = greedy_separated(&cache, family, k, &order).counts;
        let s_series = GrowthSeries::from_counts(&counts)?;
        let class = classify(&s_series, &opts.bands)?;
        let sandwich = if opts.generators {
            Some(sandwich_cached(&cache, family, k, counts.clone())?)
        } else {
            None
        };
        rows.push(LevelCounts {
            k,
            counts,
            s_series,
            class,
            sandwich,
        });
    }

    let variance = match opts.variance_seed {
        Some(seed) => {
            let mut shuffled = order.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut out = Vec::with_capacity(rows.len());
            for row in &rows {
                let counts = greedy_separated(&cache, family, row.k, &shuffled).counts;
                let class = classify(&GrowthSeries::from_counts(&counts)?, &opts.bands)?;
                out.push(VarianceRow {
                    k: row.k,
                    max_relative_difference: relative_difference(&row.counts, &counts),
                    counts,
                    class,
                });
            }
            Some(VarianceReport { seed, levels: out })
        }
        None => None,
    };

    let (aggregate, status) = aggregate(&rows, opts.agreement_slack);
    Ok(CountProfile {
        system: system.display_name(),
        compact: compact.label().to_string(),
        levels: rows,
        aggregate,
        status,
        metadata: ProfileMetadata {
            grid_size: compact.len(),
            density_level: compact.density_level(),
            horizon,
            config_hash: opts.config_hash.clone(),
            family: family.describe(),
        },
        variance,
    })
}

/// A declared compact, or a finite union of them written `a+b+...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompactSelector {
    Named(String),
    Union(Vec<String>),
}

impl CompactSelector {
    pub fn parse(s: &str) -> Result<CompactSelector, EntropyError> {
        let parts: Vec<String> = s.split('+').map(|p| p.trim().to_string()).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(EntropyError::UnknownSelector(s.to_string()));
        }
        Ok(if parts.len() == 1 {
            CompactSelector::Named(parts.into_iter().next().unwrap_or_default())
        } else {
            CompactSelector::Union(parts)
        })
    }

    pub fn resolve(&self, system: &SystemInstance) -> Result<SampledCompact, EntropyError> {
        let find = |name: &str| {
            system
                .compact(name)
                .map_err(|_| EntropyError::UnknownSelector(name.to_string()))
        };
        match self {
            CompactSelector::Named(name) => Ok(find(name)?.clone()),
            CompactSelector::Union(names) => {
                let parts = names.iter().map(|n| find(n)).collect::<Result<Vec<_>, _>>()?;
                Ok(SampledCompact::union(names.join("+"), &parts)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedProfile {
    pub profile: CountProfile,
    /// Profiles of the union's pieces; empty for a single named compact.
    pub pieces: Vec<CountProfile>,
    /// Pointwise sup of the pieces' counts per level.
    pub pieces_sup: Vec<(Level, Vec<u64>)>,
    /// `(k, n)` where the union count leaves `[max, sum]` of the pieces.
    pub union_bound_violations: Vec<(Level, usize)>,
}

pub fn restricted_profile(
    system: &SystemInstance,
    selector: &CompactSelector,
    levels: &[Level],
    horizon: usize,
    opts: &ProfileOptions,
) -> Result<RestrictedProfile, EntropyError> {
    let compact = selector.resolve(system)?;
    let profile = entropy_profile(system, &compact, levels, horizon, opts)?;
    let CompactSelector::Union(names) = selector else {
        return Ok(RestrictedProfile {
            profile,
            pieces: vec![],
            pieces_sup: vec![],
            union_bound_violations: vec![],
        });
    };
    let pieces = names
        .iter()
        .map(|n| CompactSelector::Named(n.clone()).resolve(system))
        .map(|c| entropy_profile(system, &c?, levels, horizon, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pieces_sup = Vec::new();
    let mut violations = Vec::new();
    for row in &profile.levels {
        let piece_counts: Vec<&Vec<u64>> = pieces.iter().filter_map(|p| p.level(row.k)).map(|l| &l.counts).collect();
        let sup: Vec<u64> = (0..horizon).map(|i| piece_counts.iter().map(|c| c[i]).max().unwrap_or(0)).collect();
        for (i, &u) in row.counts.iter().enumerate() {
            let sum: u64 = piece_counts.iter().map(|c| c[i]).sum();
            if u < sup[i] || u > sum {
                violations.push((row.k, i + 1));
            }
        }
        pieces_sup.push((row.k, sup));
    }
    Ok(RestrictedProfile {
        profile,
        pieces,
        pieces_sup,
        union_bound_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::ClassLabel;
    use crate::systems::{build, circle_rotation, CatalogOptions};

    fn opts(grid: usize, horizon: usize) -> CatalogOptions {
        CatalogOptions { grid: Some(grid), horizon: Some(horizon), ..Default::default() }
    }

    #[test]
    fn rotation_is_constant_and_bounded() {
        let s = build("rotation", &opts(1001, 64)).unwrap();
        let p = entropy_profile(&s, s.default_compact(), &[3, 5, 7], 64, &ProfileOptions::default()).unwrap();
        for l in &p.levels {
            assert!(l.counts.iter().all(|&c| c == l.counts[0]), "k={}", l.k);
        }
        assert_eq!(p.aggregate.unwrap().label, ClassLabel::Bounded);
        assert_eq!(p.status, AggregateStatus::Stable);
    }

    #[test]
    fn two_point_identity() {
        let s = circle_rotation(0.5, &opts(3, 16)).unwrap();
        let pts = SampledCompact::new("two", vec![Point::Real(0.0), Point::Real(0.5)], None).unwrap();
        // half-turn swaps the points; still two separated orbits
        assert_eq!(separated_counts(&s, &pts, 2, 20).unwrap(), vec![2; 20]);
    }

    #[test]
    fn doubling_ball_shrinks() {
        let s = build("doubling", &opts(100_000, 8)).unwrap();
        let ball = dynamical_ball(
            &s,
            &DynamicalBallSpec { center: Point::Real(0.0), n: 3, k: 2 },
            s.default_compact(),
        )
        .unwrap();
        assert!(!ball.is_empty());
        for p in ball {
            let x = p.real().unwrap();
            assert!(x.min(1.0 - x) < 1.0 / 32.0, "{x}");
        }
    }

    #[test]
    fn dynamical_ball_at_one_step_is_the_plain_ball() {
        let s = build("north-south-interval", &opts(2000, 32)).unwrap();
        let c = s.default_compact();
        for (i, center) in c.points().iter().enumerate().step_by(97) {
            let spec = DynamicalBallSpec { center: *center, n: 1, k: 4 };
            let dynamic = dynamical_ball(&s, &spec, c).unwrap();
            let plain = crate::uniformity::ball(s.entourages(), center, 4, c).unwrap();
            assert_eq!(dynamic, plain, "center #{i}");
        }
    }

    #[test]
    fn north_south_generators_below_separated() {
        let s = build("north-south-interval", &opts(4000, 64)).unwrap();
        let g = generator_count(&s, s.default_compact(), 4, 64).unwrap();
        let sep = separated_count(&s, s.default_compact(), 4, 64).unwrap();
        assert!(g.dominated_by(&sep));
        let r = sandwich_check(&s, s.default_compact(), 3, 64).unwrap();
        assert!(r.ok, "{:?}", r.first_violation);
    }

    #[test]
    fn partition_sandwich_collapses() {
        let s = build("double-arrow", &opts(2000, 32)).unwrap();
        let r = sandwich_check(&s, s.default_compact(), 6, 32).unwrap();
        assert_eq!(r.coarse, r.fine);
        assert!(r.ok);
        assert_eq!(r.g_fine, r.s_fine);
    }

    #[test]
    fn single_point_sandwich() {
        let s = build("north-south-interval", &opts(100, 16)).unwrap();
        let one = SampledCompact::new("one", vec![Point::Real(0.25)], None).unwrap();
        let r = sandwich_check(&s, &one, 5, 16).unwrap();
        assert_eq!((r.s_coarse[15], r.g_fine[15], r.s_fine[15]), (1, 1, 1));
    }

    #[test]
    fn errors() {
        let s = build("rotation", &opts(101, 16)).unwrap();
        let c = s.default_compact();
        assert!(matches!(entropy_profile(&s, c, &[], 16, &ProfileOptions::default()), Err(EntropyError::NoLevels)));
        assert!(matches!(separated_count(&s, c, 99, 16), Err(EntropyError::Uniformity(_))));
        assert!(matches!(separated_count(&s, c, 2, 0), Err(EntropyError::HorizonZero)));
        assert!(matches!(
            CompactSelector::parse("nope").unwrap().resolve(&s),
            Err(EntropyError::UnknownSelector(_))
        ));
        assert_eq!(
            CompactSelector::parse("a+b").unwrap(),
            CompactSelector::Union(vec!["a".into(), "b".into()])
        );
    }

    #[test]
    fn variance_pass_is_reproducible() {
        let s = build("north-south-interval", &opts(3000, 32)).unwrap();
        let o = ProfileOptions { variance_seed: Some(9), ..Default::default() };
        let a = entropy_profile(&s, s.default_compact(), &[3, 4], 32, &o).unwrap();
        let b = entropy_profile(&s, s.default_compact(), &[3, 4], 32, &o).unwrap();
        assert_eq!(a, b);
        assert!(a.variance.unwrap().levels.iter().all(|r| r.max_relative_difference < 0.5));
    }
}
