//! Orbit codings relative to finite families of subsets of `X - Ω(f)`:
//! word counts `c(n)`, wandering and visit checks, hitting sets and the
//! `d(n)` lower bound, plus the singularity and entropy-bound probes.
//!
//! Counts are taken over sampled orbits, except on interval systems with an
//! [`ExactChart`], where families of closed intervals are handled exactly.

mod exact;
mod probes;

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::entropy::EntropyError;
use crate::growth::{GrowthError, GrowthSeries};
use crate::systems::{Coords, SystemError, SystemInstance};
use crate::uniformity::{Point, SampledCompact, UniformityError};
use exact::{Chart, ChartInterval};

pub use probes::{
    additivity_check, coding_entropy_bound_check, disjoint_subfamily_sup, mutually_singular_probe, AdditivityReport,
    BoundReport, SingularWitness, SingularityReport, SubfamilySup,
};

/// Index of a member, or [`INF_LETTER`] for the complement of the family.
pub type Letter = u8;
pub const INF_LETTER: Letter = u8::MAX;
pub const DEFAULT_MAX_WORDS_PER_ORBIT: usize = 1 << 12;
const MAX_MEMBERS: usize = 64;
/// Shape samples per side used by the sampled paths.
pub const SHAPE_SAMPLES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Uniformity(#[from] UniformityError),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("member '{member}' meets the non-wandering point {point}")]
    MeetsNonWandering { member: String, point: String },
    #[error("members '{0}' and '{1}' overlap")]
    NotDisjoint(String, String),
    #[error("member '{member}' is not wandering: returns after {time} steps")]
    NotWandering { member: String, time: usize },
    #[error("need at least {0} members")]
    TooFewMembers(usize),
    #[error("at most {0} members supported here")]
    TooManyMembers(usize),
    #[error("hitting data bounded by {bound} cannot cover horizon {horizon}")]
    InsufficientBound { bound: usize, horizon: usize },
    #[error("no level separates the members")]
    NoSeparatingLevel,
}

/// An exact rational coordinate, written `p/q` or as an integer in family files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Endpoint(pub Ratio<i64>);

impl Endpoint {
    pub fn parse(s: &str) -> Result<Endpoint, CodingError> {
        let bad = || CodingError::InvalidShape(format!("cannot read endpoint '{s}'"));
        let t = s.trim();
        let (p, q) = match t.split_once('/') {
            Some((p, q)) => (p.trim().parse::<i64>().map_err(|_| bad())?, q.trim().parse::<i64>().map_err(|_| bad())?),
            None => match t.parse::<i64>() {
                Ok(p) => (p, 1),
                Err(_) => return Endpoint::from_f64(t.parse::<f64>().map_err(|_| bad())?),
            },
        };
        if q == 0 {
            return Err(bad());
        }
        Ok(Endpoint(Ratio::new(p, q)))
    }

    /// The exact binary value of `x`.
    pub fn from_f64(x: f64) -> Result<Endpoint, CodingError> {
        let bad = || CodingError::InvalidShape(format!("endpoint {x} is not representable"));
        if !x.is_finite() {
            return Err(bad());
        }
        if x == 0.0 {
            return Ok(Endpoint(Ratio::from_integer(0)));
        }
        // x = m 2^e with odd m
        let bits = x.abs().to_bits();
        let (raw_e, frac) = ((bits >> 52) as i32, bits & ((1 << 52) - 1));
        let (mut m, mut e) = if raw_e == 0 { (frac, -1074) } else { (frac | 1 << 52, raw_e - 1075) };
        let tz = m.trailing_zeros();
        m >>= tz;
        e += tz as i32;
        let m = i64::try_from(m).map_err(|_| bad())? * if x < 0.0 { -1 } else { 1 };
        let r = if e >= 0 {
            m.checked_mul(1i64.checked_shl(e as u32).filter(|_| e < 63).ok_or_else(bad)?).map(Ratio::from_integer)
        } else {
            (e > -63).then(|| Ratio::new(m, 1i64 << -e))
        };
        r.map(Endpoint).ok_or_else(bad)
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let r = match Raw::deserialize(d)? {
            Raw::Int(p) => Ok(Endpoint(Ratio::from_integer(p))),
            Raw::Float(x) => Endpoint::from_f64(x),
            Raw::Text(s) => Endpoint::parse(&s),
        };
        r.map_err(serde::de::Error::custom)
    }
}

/// A closed region read in the system's [`Coords`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `[a, b]` on a line.
    Interval([Endpoint; 2]),
    /// `[x0, x1] × [y0, y1]` in the plane.
    Rect([Endpoint; 4]),
    /// The arc from `a` counterclockwise to `b` on `R/Z`.
    Arc([Endpoint; 2]),
}

impl Shape {
    pub fn interval(a: f64, b: f64) -> Result<Shape, CodingError> {
        Ok(Shape::Interval([Endpoint::from_f64(a)?, Endpoint::from_f64(b)?]))
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Shape, CodingError> {
        Ok(Shape::Rect([
            Endpoint::from_f64(x0)?,
            Endpoint::from_f64(x1)?,
            Endpoint::from_f64(y0)?,
            Endpoint::from_f64(y1)?,
        ]))
    }

    pub fn arc(a: f64, b: f64) -> Result<Shape, CodingError> {
        Ok(Shape::Arc([Endpoint::from_f64(a)?, Endpoint::from_f64(b)?]))
    }

    fn validate(&self) -> Result<(), CodingError> {
        let ok = match self {
            Shape::Interval([a, b]) => a <= b,
            Shape::Rect([x0, x1, y0, y1]) => x0 <= x1 && y0 <= y1,
            Shape::Arc(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CodingError::InvalidShape(format!("{self:?} has reversed bounds")))
        }
    }

    pub fn contains(&self, c: Coords) -> bool {
        match (self, c) {
            (Shape::Interval([a, b]), Coords::Line(x)) => a.to_f64() <= x && x <= b.to_f64(),
            (Shape::Rect([x0, x1, y0, y1]), Coords::Plane(x, y)) => {
                x0.to_f64() <= x && x <= x1.to_f64() && y0.to_f64() <= y && y <= y1.to_f64()
            }
            (Shape::Arc([a, b]), Coords::Circle(x)) => {
                let (a, b, x) = (a.to_f64().rem_euclid(1.0), b.to_f64().rem_euclid(1.0), x.rem_euclid(1.0));
                if a <= b {
                    a <= x && x <= b
                } else {
                    x >= a || x <= b
                }
            }
            _ => false,
        }
    }

    /// Whether the shape can be read in coordinates like `c`.
    fn fits(&self, c: Coords) -> bool {
        matches!(
            (self, c),
            (Shape::Interval(_), Coords::Line(_)) | (Shape::Rect(_), Coords::Plane(..)) | (Shape::Arc(_), Coords::Circle(_))
        )
    }

    /// Evenly spaced coordinates covering the shape, `per_side + 1` per side.
    pub fn samples(&self, per_side: usize) -> Vec<Coords> {
        let lin = |a: Endpoint, b: Endpoint| {
            let (a, b) = (a.to_f64(), b.to_f64());
            crate::systems::linspace(a, b, per_side + 1).collect::<Vec<f64>>()
        };
        match self {
            Shape::Interval([a, b]) => lin(*a, *b).into_iter().map(Coords::Line).collect(),
            Shape::Rect([x0, x1, y0, y1]) => {
                let ys = lin(*y0, *y1);
                lin(*x0, *x1)
                    .into_iter()
                    .flat_map(|x| ys.iter().map(move |&y| Coords::Plane(x, y)))
                    .collect()
            }
            Shape::Arc([a, b]) => {
                let (a0, b0) = (a.to_f64().rem_euclid(1.0), b.to_f64().rem_euclid(1.0));
                let len = if a0 <= b0 { b0 - a0 } else { b0 + 1.0 - a0 };
                crate::systems::linspace(a0, a0 + len, per_side + 1)
                    .map(|x| Coords::Circle(x.rem_euclid(1.0)))
                    .collect()
            }
        }
    }
}

/// One member of a coding family: a finite union of shapes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Member {
    pub label: String,
    pub shapes: Vec<Shape>,
    /// Documentation; checked against [`wandering_check`] in reports.
    pub declared_wandering: bool,
}

impl Member {
    pub fn new(label: impl Into<String>, shape: Shape) -> Member {
        Member {
            label: label.into(),
            shapes: vec![shape],
            declared_wandering: false,
        }
    }

    pub fn union(label: impl Into<String>, shapes: Vec<Shape>) -> Member {
        Member {
            label: label.into(),
            shapes,
            declared_wandering: false,
        }
    }

    pub fn contains(&self, c: Coords) -> bool {
        self.shapes.iter().any(|s| s.contains(c))
    }

    /// Shape samples mapped to states of `system`.
    pub fn sample_points(&self, system: &SystemInstance, per_side: usize) -> Vec<Point> {
        self.shapes
            .iter()
            .flat_map(|s| s.samples(per_side))
            .filter_map(|c| system.point_at(c))
            .filter(|p| self.contains(system.coords(p)))
            .collect()
    }

    /// Chart intervals, when every shape is an interval.
    fn chart_intervals(&self, chart: &Chart, member: usize) -> Result<Option<Vec<ChartInterval>>, CodingError> {
        let mut out = Vec::with_capacity(self.shapes.len());
        for s in &self.shapes {
            let Shape::Interval([a, b]) = s else { return Ok(None) };
            out.push(ChartInterval {
                member,
                lo: chart.value(a.0)?,
                hi: chart.value(b.0)?,
            });
        }
        Ok(Some(out))
    }
}

/// Family file layout: `{"members": [{"label": .., "shape": ..}]}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub members: Vec<MemberSpec>,
    #[serde(default)]
    pub max_words_per_orbit: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub label: String,
    #[serde(default)]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    #[serde(default)]
    pub wandering: bool,
}

/// A finite family `F` of subsets of `X - Ω(f)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodingFamily {
    members: Vec<Member>,
    max_words_per_orbit: usize,
}

impl CodingFamily {
    pub fn new(members: Vec<Member>) -> Result<CodingFamily, CodingError> {
        if members.is_empty() {
            return Err(CodingError::TooFewMembers(1));
        }
        if members.len() > MAX_MEMBERS {
            return Err(CodingError::TooManyMembers(MAX_MEMBERS));
        }
        for (i, m) in members.iter().enumerate() {
            if m.label.is_empty() || m.label == "inf" {
                return Err(CodingError::InvalidFamily(format!("bad member label '{}'", m.label)));
            }
            if members[..i].iter().any(|o| o.label == m.label) {
                return Err(CodingError::InvalidFamily(format!("duplicate label '{}'", m.label)));
            }
            if m.shapes.is_empty() {
                return Err(CodingError::InvalidFamily(format!("member '{}' has no shape", m.label)));
            }
            for s in &m.shapes {
                s.validate()?;
            }
        }
        Ok(CodingFamily {
            members,
            max_words_per_orbit: DEFAULT_MAX_WORDS_PER_ORBIT,
        })
    }

    pub fn from_spec(spec: FamilySpec) -> Result<CodingFamily, CodingError> {
        let members = spec
            .members
            .into_iter()
            .map(|m| {
                let mut shapes: Vec<Shape> = m.shape.into_iter().collect();
                shapes.extend(m.shapes);
                Member {
                    label: m.label,
                    shapes,
                    declared_wandering: m.wandering,
                }
            })
            .collect();
        let family = CodingFamily::new(members)?;
        Ok(match spec.max_words_per_orbit {
            Some(cap) => family.with_max_words(cap),
            None => family,
        })
    }

    pub fn with_max_words(mut self, cap: usize) -> CodingFamily {
        self.max_words_per_orbit = cap.max(1);
        self
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_words_per_orbit(&self) -> usize {
        self.max_words_per_orbit
    }

    /// The one-member family `{∪F}`.
    pub fn union_family(&self) -> CodingFamily {
        let shapes = self.members.iter().flat_map(|m| m.shapes.iter().cloned()).collect();
        CodingFamily {
            members: vec![Member::union("union", shapes)],
            max_words_per_orbit: self.max_words_per_orbit,
        }
    }

    pub fn subfamily(&self, indices: &[usize]) -> CodingFamily {
        CodingFamily {
            members: indices.iter().map(|&i| self.members[i].clone()).collect(),
            max_words_per_orbit: self.max_words_per_orbit,
        }
    }

    /// Members containing `c`.
    pub fn letters_at(&self, c: Coords) -> Vec<Letter> {
        let v: Vec<Letter> = (0..self.members.len())
            .filter(|&i| self.members[i].contains(c))
            .map(|i| i as Letter)
            .collect();
        if v.is_empty() {
            vec![INF_LETTER]
        } else {
            v
        }
    }

    pub fn render(&self, word: &[Letter]) -> String {
        word.iter()
            .map(|&l| if l == INF_LETTER { "inf" } else { self.members[l as usize].label.as_str() })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Samples of every member, as states of `system`.
    pub fn sample_points(&self, system: &SystemInstance, per_side: usize) -> Vec<Point> {
        self.members.iter().flat_map(|m| m.sample_points(system, per_side)).collect()
    }

    /// `base` together with the member samples.
    pub fn augmented_universe(&self, system: &SystemInstance, base: &SampledCompact) -> Result<SampledCompact, CodingError> {
        let mut pts = base.points().to_vec();
        pts.extend(self.sample_points(system, SHAPE_SAMPLES));
        Ok(SampledCompact::deduplicated(format!("{}+members", base.label()), pts, None)?)
    }

    /// Chart intervals of all members, when the system has a chart and every
    /// shape is an interval.
    fn chart_intervals(&self, system: &SystemInstance) -> Result<Option<(Chart, Vec<ChartInterval>)>, CodingError> {
        let Some(kind) = system.exact_chart() else { return Ok(None) };
        let chart = Chart::new(kind);
        let mut all = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            match m.chart_intervals(&chart, i)? {
                Some(v) => all.extend(v),
                None => return Ok(None),
            }
        }
        Ok(Some((chart, all)))
    }

    /// Checks shapes against the system's coordinates and `Ω(f)`, and
    /// decides disjointness (exactly on charts, on samples otherwise).
    pub fn validate(&self, system: &SystemInstance, universe: &SampledCompact) -> Result<Validation, CodingError> {
        let kind = universe
            .points()
            .iter()
            .chain(system.default_compact().points())
            .map(|p| system.coords(p))
            .find(|c| !matches!(c, Coords::Ideal));
        if let Some(c) = kind {
            for m in &self.members {
                if let Some(s) = m.shapes.iter().find(|s| !s.fits(c)) {
                    return Err(CodingError::InvalidShape(format!(
                        "member '{}' shape {s:?} does not fit the coordinates of '{}'",
                        m.label,
                        system.name()
                    )));
                }
            }
        }
        if system.non_wandering_everything() {
            return Err(CodingError::MeetsNonWandering {
                member: self.members[0].label.clone(),
                point: "every point".into(),
            });
        }
        for m in &self.members {
            if let Some(p) = system.non_wandering().iter().find(|p| m.contains(system.coords(p))) {
                return Err(CodingError::MeetsNonWandering {
                    member: m.label.clone(),
                    point: p.to_string(),
                });
            }
        }
        let exact = self.chart_intervals(system)?;
        let mut overlap = None;
        if let Some((chart, ivs)) = &exact {
            'outer: for (i, a) in ivs.iter().enumerate() {
                for b in &ivs[i + 1..] {
                    if a.member != b.member && chart.meets_after(a, b, 0) {
                        overlap = Some((a.member, b.member));
                        break 'outer;
                    }
                }
            }
        } else {
            let samples = self.sample_points(system, SHAPE_SAMPLES);
            overlap = universe.points().iter().chain(&samples).find_map(|p| {
                let l = self.letters_at(system.coords(p));
                (l.len() > 1).then(|| (l[0] as usize, l[1] as usize))
            });
        }
        Ok(Validation {
            disjoint: overlap.is_none(),
            overlap: overlap.map(|(a, b)| (self.members[a].label.clone(), self.members[b].label.clone())),
            exact: exact.is_some(),
        })
    }

    fn require_disjoint(&self, v: &Validation) -> Result<(), CodingError> {
        match &v.overlap {
            Some((a, b)) => Err(CodingError::NotDisjoint(a.clone(), b.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub disjoint: bool,
    pub overlap: Option<(String, String)>,
    /// Whether the exact interval path applies.
    pub exact: bool,
}

/// Appends every word with one letter from each slot, stopping at `cap`
/// words; returns whether the cap cut the enumeration short.
pub(crate) fn expand(slots: &[Vec<Letter>], cap: usize, out: &mut Vec<Vec<Letter>>) -> bool {
    let total = slots.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()));
    let take = total.unwrap_or(usize::MAX).min(cap);
    let mut idx = vec![0usize; slots.len()];
    for _ in 0..take {
        out.push(idx.iter().zip(slots).map(|(&i, s)| s[i]).collect());
        for (i, s) in idx.iter_mut().zip(slots).rev() {
            *i += 1;
            if *i < s.len() {
                break;
            }
            *i = 0;
        }
    }
    take < total.unwrap_or(usize::MAX)
}

/// Distinct realized words of one length, sorted, with a witness sample
/// index on the sampled path.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedWords {
    pub words: Vec<Vec<Letter>>,
    pub witnesses: Vec<Option<u32>>,
    pub exact: bool,
    /// Orbits (or chart cells) whose codings hit `max_words_per_orbit`.
    pub overflowed: usize,
}

impl RealizedWords {
    /// `c(n)` for `n = 1..=len`: distinct length-`n` prefixes.
    pub fn prefix_counts(&self, len: usize) -> Vec<u64> {
        let mut counts = vec![u64::from(!self.words.is_empty()); len];
        for w in self.words.windows(2) {
            let lcp = w[0].iter().zip(&w[1]).take_while(|(a, b)| a == b).count();
            for c in counts.iter_mut().skip(lcp) {
                *c += 1;
            }
        }
        counts
    }
}

/// All codings of length `n` realized by orbits of `universe` (or by every
/// orbit, on the exact path).
pub fn realized_words(
    system: &SystemInstance,
    family: &CodingFamily,
    n: usize,
    universe: &SampledCompact,
) -> Result<RealizedWords, CodingError> {
    let cap = family.max_words_per_orbit;
    if let Some((chart, ivs)) = family.chart_intervals(system)? {
        let (mut words, overflowed) = chart.words(&ivs, n, cap);
        words.sort_unstable();
        words.dedup();
        let witnesses = vec![None; words.len()];
        return Ok(RealizedWords {
            words,
            witnesses,
            exact: true,
            overflowed,
        });
    }
    let per_point: Vec<(Vec<Vec<Letter>>, bool, u32)> = universe
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<_, CodingError> {
            let orbit = system.orbit(p, n)?;
            let slots: Vec<Vec<Letter>> = orbit.iter().map(|q| family.letters_at(system.coords(q))).collect();
            let mut words = Vec::new();
            let over = expand(&slots, cap, &mut words);
            Ok((words, over, i as u32))
        })
        .collect::<Result<_, _>>()?;
    let overflowed = per_point.iter().filter(|r| r.1).count();
    let mut tagged: Vec<(Vec<Letter>, u32)> = per_point
        .into_iter()
        .flat_map(|(words, _, i)| words.into_iter().map(move |w| (w, i)))
        .collect();
    tagged.sort_unstable();
    tagged.dedup_by(|a, b| a.0 == b.0);
    let (words, witnesses) = tagged.into_iter().map(|(w, i)| (w, Some(i))).unzip();
    Ok(RealizedWords {
        words,
        witnesses,
        exact: false,
        overflowed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodingCounts {
    pub counts: Vec<u64>,
    pub series: GrowthSeries,
    pub exact: bool,
    /// Sampled orbits used; zero on the exact path.
    pub samples: usize,
    pub overflowed: usize,
}

/// `c(n)` for `n = 1..=horizon`.
pub fn codings_count(
    system: &SystemInstance,
    family: &CodingFamily,
    horizon: usize,
    universe: &SampledCompact,
) -> Result<CodingCounts, CodingError> {
    if horizon == 0 {
        return Err(EntropyError::HorizonZero.into());
    }
    family.validate(system, universe)?;
    let words = realized_words(system, family, horizon, universe)?;
    let counts = words.prefix_counts(horizon);
    Ok(CodingCounts {
        series: GrowthSeries::from_counts(&counts)?,
        counts,
        exact: words.exact,
        samples: if words.exact { 0 } else { universe.len() },
        overflowed: words.overflowed,
    })
}

fn member_samples(system: &SystemInstance, member: &Member, universe: Option<&SampledCompact>) -> Vec<Point> {
    let mut pts = member.sample_points(system, SHAPE_SAMPLES);
    if let Some(u) = universe {
        pts.extend(u.points().iter().filter(|p| member.contains(system.coords(p))));
    }
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WanderingReport {
    pub member: String,
    pub wandering: bool,
    /// Smallest `n >= 1` with `f^n(Y) ∩ Y` non-empty, if found.
    pub first_return: Option<usize>,
    pub witness: Option<Point>,
    pub bound: usize,
    pub exact: bool,
}

/// Looks for returns of `member` to itself within `bound` steps, over its
/// shape samples and the samples of `universe` inside it.
pub fn wandering_check(
    system: &SystemInstance,
    member: &Member,
    bound: usize,
    universe: Option<&SampledCompact>,
) -> Result<WanderingReport, CodingError> {
    if let Some(kind) = system.exact_chart() {
        let chart = Chart::new(kind);
        if let Some(ivs) = member.chart_intervals(&chart, 0)? {
            let first = (1..=bound as i64).find(|&m| ivs.iter().any(|a| ivs.iter().any(|b| chart.meets_after(a, b, m))));
            return Ok(WanderingReport {
                member: member.label.clone(),
                wandering: first.is_none(),
                first_return: first.map(|m| m as usize),
                witness: None,
                bound,
                exact: true,
            });
        }
    }
    let pts = member_samples(system, member, universe);
    let first = pts
        .par_iter()
        .map(|p| -> Result<Option<(usize, Point)>, SystemError> {
            let orbit = system.orbit(p, bound + 1)?;
            Ok((1..orbit.len()).find(|&m| member.contains(system.coords(&orbit[m]))).map(|m| (m, *p)))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .min_by_key(|r| r.0);
    Ok(WanderingReport {
        member: member.label.clone(),
        wandering: first.is_none(),
        first_return: first.map(|r| r.0),
        witness: first.map(|r| r.1),
        bound,
        exact: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitReport {
    pub member: String,
    /// `max_x #{n in [-bound, bound] : f^n(x) in Y}`.
    pub max_visits: u64,
    pub witness: Option<Point>,
    pub bound: usize,
    pub exact: bool,
}

pub fn max_visits(
    system: &SystemInstance,
    member: &Member,
    bound: usize,
    universe: &SampledCompact,
) -> Result<VisitReport, CodingError> {
    if !system.is_invertible() {
        return Err(SystemError::NotInvertible(system.name().to_string()).into());
    }
    if let Some(kind) = system.exact_chart() {
        let chart = Chart::new(kind);
        if let Some(ivs) = member.chart_intervals(&chart, 0)? {
            return Ok(VisitReport {
                member: member.label.clone(),
                max_visits: chart.max_visits(&ivs, bound as i64),
                witness: None,
                bound,
                exact: true,
            });
        }
    }
    let inverse = system.inverse()?;
    let mut pts = universe.points().to_vec();
    pts.extend(member.sample_points(system, SHAPE_SAMPLES));
    let best = pts
        .par_iter()
        .map(|p| -> Result<(u64, Point), SystemError> {
            let inside = |q: &Point| member.contains(system.coords(q));
            let fwd = system.orbit(p, bound + 1)?.iter().filter(|q| inside(q)).count();
            let back = inverse.orbit(p, bound + 1)?.iter().skip(1).filter(|q| inside(q)).count();
            Ok(((fwd + back) as u64, *p))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .max_by_key(|r| r.0);
    Ok(VisitReport {
        member: member.label.clone(),
        max_visits: best.map_or(0, |b| b.0),
        witness: best.filter(|b| b.0 > 0).map(|b| b.1),
        bound,
        exact: false,
    })
}

/// `R(Y_from, Y_to)` up to `bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HittingData {
    pub from: String,
    pub to: String,
    pub bound: usize,
    /// Sorted `m <= bound` with `f^m(Y_from) ∩ Y_to` non-empty.
    pub hits: Vec<usize>,
    pub exact: bool,
}

impl HittingData {
    /// Hand-made hitting data; `hits` is sorted and clipped to `bound`.
    pub fn synthetic(mut hits: Vec<usize>, bound: usize) -> HittingData {
        hits.retain(|&m| m <= bound);
        hits.sort_unstable();
        hits.dedup();
        HittingData {
            from: "Y1".into(),
            to: "Y2".into(),
            bound,
            hits,
            exact: true,
        }
    }
}

/// Hitting sets for every ordered pair of distinct members.
pub fn hitting_sets(
    system: &SystemInstance,
    family: &CodingFamily,
    bound: usize,
    universe: &SampledCompact,
) -> Result<Vec<HittingData>, CodingError> {
    let k = family.len();
    if k < 2 {
        return Err(CodingError::TooFewMembers(2));
    }
    let label = |i: usize| family.members[i].label.clone();
    if let Some((chart, ivs)) = family.chart_intervals(system)? {
        let mut out = Vec::new();
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                let hits = (0..=bound)
                    .filter(|&m| {
                        ivs.iter().filter(|a| a.member == i).any(|a| {
                            ivs.iter().filter(|b| b.member == j).any(|b| chart.meets_after(a, b, m as i64))
                        })
                    })
                    .collect();
                out.push(HittingData {
                    from: label(i),
                    to: label(j),
                    bound,
                    hits,
                    exact: true,
                });
            }
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for i in 0..k {
        let pts = member_samples(system, &family.members[i], Some(universe));
        // hits[j][m]
        let found = pts
            .par_iter()
            .map(|p| -> Result<Vec<Vec<bool>>, SystemError> {
                let orbit = system.orbit(p, bound + 1)?;
                let mut seen = vec![vec![false; bound + 1]; k];
                for (m, q) in orbit.iter().enumerate() {
                    let c = system.coords(q);
                    for (j, row) in seen.iter_mut().enumerate() {
                        if j != i && family.members[j].contains(c) {
                            row[m] = true;
                        }
                    }
                }
                Ok(seen)
            })
            .try_reduce(
                || vec![vec![false; bound + 1]; k],
                |mut a, b| {
                    for (ra, rb) in a.iter_mut().zip(&b) {
                        for (x, y) in ra.iter_mut().zip(rb) {
                            *x |= *y;
                        }
                    }
                    Ok(a)
                },
            )?;
        for j in (0..k).filter(|&j| j != i) {
            out.push(HittingData {
                from: label(i),
                to: label(j),
                bound,
                hits: (0..=bound).filter(|&m| found[j][m]).collect(),
                exact: false,
            });
        }
    }
    Ok(out)
}

/// `d(n) = Σ_{n'=1}^{n-1} #R_{n-n'}` for `n = 1..=horizon`, where
/// `R_k = {m in R : m <= k}`.
pub fn d_lower_bound_counts(hits: &HittingData, horizon: usize) -> Result<Vec<u64>, CodingError> {
    if hits.bound < horizon {
        return Err(CodingError::InsufficientBound {
            bound: hits.bound,
            horizon,
        });
    }
    // r[k] = #R_k
    let mut r = vec![0u64; horizon + 1];
    for &m in &hits.hits {
        if m <= horizon {
            r[m] += 1;
        }
    }
    for k in 1..=horizon {
        r[k] += r[k - 1];
    }
    let mut d = Vec::with_capacity(horizon);
    let mut acc = 0u64;
    for n in 1..=horizon {
        // d(n) = Σ_{k=1}^{n-1} r[k]
        if n >= 2 {
            acc += r[n - 1];
        }
        d.push(acc);
    }
    Ok(d)
}

pub fn d_lower_bound(hits: &HittingData, horizon: usize) -> Result<GrowthSeries, CodingError> {
    Ok(GrowthSeries::from_counts(&d_lower_bound_counts(hits, horizon)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build, CatalogOptions};

    fn sys(name: &str) -> SystemInstance {
        build(name, &CatalogOptions { grid: Some(2000), horizon: Some(64), ..Default::default() }).unwrap()
    }

    fn fam(members: Vec<(&str, Shape)>) -> CodingFamily {
        CodingFamily::new(members.into_iter().map(|(l, s)| Member::new(l, s)).collect()).unwrap()
    }

    fn iv(a: &str, b: &str) -> Shape {
        Shape::Interval([Endpoint::parse(a).unwrap(), Endpoint::parse(b).unwrap()])
    }

    #[test]
    fn endpoints_parse_exactly() {
        assert_eq!(Endpoint::parse("3/4").unwrap().0, Ratio::new(3, 4));
        assert_eq!(Endpoint::parse(" -2 ").unwrap().0, Ratio::from_integer(-2));
        assert_eq!(Endpoint::parse("0.5").unwrap().0, Ratio::new(1, 2));
        assert!(Endpoint::parse("1/0").is_err());
        assert!(Endpoint::parse("x").is_err());
    }

    #[test]
    fn expand_enumerates_products() {
        let mut out = Vec::new();
        assert!(!expand(&[vec![0, 1], vec![INF_LETTER], vec![2, 3]], 16, &mut out));
        assert_eq!(out.len(), 4);
        assert_eq!(out[1], vec![0, INF_LETTER, 3]);
        out.clear();
        assert!(expand(&[vec![0, 1], vec![0, 1], vec![0, 1]], 5, &mut out));
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn single_wandering_interval_counts_n_plus_one() {
        let s = sys("translation-line");
        let f = fam(vec![("Y", iv("0", "1/2"))]);
        let c = codings_count(&s, &f, 64, s.default_compact()).unwrap();
        assert!(c.exact);
        let expected: Vec<u64> = (1..=64).map(|n| n + 1).collect();
        assert_eq!(c.counts, expected);
    }

    #[test]
    fn sampled_path_agrees_on_translation() {
        // a compact on a fine grid realizes every word of the exact path
        let s = sys("translation-line").power(1).unwrap();
        let f = fam(vec![("A", iv("0", "1/2")), ("B", iv("3", "7/2"))]);
        let exact = realized_words(&s, &f, 24, s.default_compact()).unwrap();
        let grid: Vec<Point> = (-4000..=500).map(|i| Point::Real(i as f64 / 128.0)).collect();
        let pts = SampledCompact::new("fine", grid, None).unwrap();
        let mut no_chart = s.clone().power(2).unwrap();
        no_chart = no_chart.inverse().unwrap().inverse().unwrap();
        // power(2) drops the chart; compare the square map against its exact words
        let sampled = realized_words(&no_chart, &f, 12, &pts).unwrap();
        assert!(!sampled.exact && exact.exact);
        let exact12: Vec<Vec<Letter>> = {
            let s2 = sys("translation-line");
            // the square map's words are the even-time letters of the plain map
            let w = realized_words(&s2, &f, 24, s2.default_compact()).unwrap();
            let mut v: Vec<Vec<Letter>> = w.words.iter().map(|w| w.iter().step_by(2).copied().collect()).collect();
            v.sort();
            v.dedup();
            v
        };
        assert_eq!(sampled.words, exact12);
    }

    #[test]
    fn never_hit_family_counts_one() {
        let s = sys("north-south-interval");
        // orbits visit [1/4, 3/8] but a compact far from it never does
        let f = fam(vec![("Y", iv("1/4", "3/8"))]);
        let far = SampledCompact::new("far", vec![Point::Real(-100.0), Point::Real(-90.0)], None).unwrap();
        let s2 = s.power(1).unwrap();
        let words = realized_words(&s2.inverse().unwrap().inverse().unwrap(), &f, 16, &far).unwrap();
        assert_eq!(words.prefix_counts(16), vec![1; 16]);
    }

    #[test]
    fn hitting_examples() {
        let s = sys("translation-line");
        let f = fam(vec![("Y1", iv("0", "1/2")), ("Y2", iv("10", "21/2"))]);
        let h = hitting_sets(&s, &f, 64, s.default_compact()).unwrap();
        assert_eq!(h[0].hits, vec![10]);
        assert!(h[1].hits.is_empty());
        let g = fam(vec![("Y1", iv("0", "1/2")), ("Y2", iv("1/4", "3/4"))]);
        assert_eq!(hitting_sets(&s, &g, 64, s.default_compact()).unwrap()[0].hits, vec![0]);
    }

    #[test]
    fn d_formula_examples() {
        let all = HittingData::synthetic((1..=300).collect(), 300);
        let d = d_lower_bound_counts(&all, 256).unwrap();
        assert!(d.iter().enumerate().all(|(i, &v)| v == ((i + 1) * i / 2) as u64));
        let ten = HittingData::synthetic(vec![10], 64);
        let d = d_lower_bound_counts(&ten, 64).unwrap();
        assert!(d.iter().enumerate().all(|(i, &v)| v == (i as u64 + 1).saturating_sub(10)));
        let none = HittingData::synthetic(vec![], 64);
        assert_eq!(d_lower_bound_counts(&none, 64).unwrap(), vec![0; 64]);
        assert!(matches!(d_lower_bound_counts(&ten, 65), Err(CodingError::InsufficientBound { .. })));
    }

    #[test]
    fn wandering_examples() {
        let s = sys("translation-line");
        let y = Member::new("Y", iv("0", "1/2"));
        assert!(wandering_check(&s, &y, 256, None).unwrap().wandering);
        let r = build("rotation", &CatalogOptions { alpha: Some(0.25), grid: Some(400), ..Default::default() }).unwrap();
        let arc = Member::new("A", Shape::arc(0.1, 0.12).unwrap());
        let w = wandering_check(&r, &arc, 64, None).unwrap();
        assert_eq!(w.first_return, Some(4));
        let b = build("brouwer-sphere", &CatalogOptions { grid: Some(2000), horizon: Some(32), ..Default::default() }).unwrap();
        let sq = Member::new("square", Shape::rect(0.75, 1.25, 0.75, 1.25).unwrap());
        assert!(wandering_check(&b, &sq, 256, None).unwrap().wandering);
        // the unit square reaches the strip along the lower arm
        let unit = Member::new("unit", Shape::rect(0.0, 1.0, 0.0, 1.0).unwrap());
        assert!(!wandering_check(&b, &unit, 256, None).unwrap().wandering);
    }

    #[test]
    fn visit_examples() {
        let s = sys("translation-line");
        let y = Member::new("Y", iv("0", "1/2"));
        assert_eq!(max_visits(&s, &y, 64, s.default_compact()).unwrap().max_visits, 1);
        let two = Member::union("Y", vec![iv("0", "1/2"), iv("10", "21/2")]);
        assert_eq!(max_visits(&s, &two, 64, s.default_compact()).unwrap().max_visits, 2);
        let r = build("rotation", &CatalogOptions { grid: Some(400), ..Default::default() }).unwrap();
        let arc = Member::new("A", Shape::arc(0.1, 0.2).unwrap());
        let short = max_visits(&r, &arc, 16, r.default_compact()).unwrap().max_visits;
        let long = max_visits(&r, &arc, 128, r.default_compact()).unwrap().max_visits;
        assert!(long > short);
        let d = sys("doubling");
        assert!(max_visits(&d, &arc, 4, d.default_compact()).is_err());
    }

    #[test]
    fn validation_rejects_bad_families() {
        let s = sys("north-south-interval");
        let at_zero = fam(vec![("Y", iv("0", "1/2"))]);
        assert!(matches!(at_zero.validate(&s, s.default_compact()), Err(CodingError::MeetsNonWandering { .. })));
        let rect = fam(vec![("R", Shape::rect(0.1, 0.2, 0.1, 0.2).unwrap())]);
        assert!(matches!(rect.validate(&s, s.default_compact()), Err(CodingError::InvalidShape(_))));
        let overlapping = fam(vec![("A", iv("1/4", "1/2")), ("B", iv("1/2", "3/4"))]);
        let v = overlapping.validate(&s, s.default_compact()).unwrap();
        assert!(!v.disjoint && v.exact);
        assert!(CodingFamily::new(vec![Member::new("A", iv("1", "0"))]).is_err());
        assert!(CodingFamily::new(vec![Member::new("A", iv("0", "1")), Member::new("A", iv("2", "3"))]).is_err());
    }

    #[test]
    fn overlapping_members_give_several_codings() {
        let s = sys("translation-line");
        let f = fam(vec![("A", iv("0", "1")), ("B", iv("1/2", "2"))]);
        let words = realized_words(&s, &f, 8, s.default_compact()).unwrap();
        // the point 1/2 at time 0 is coded both ways
        let a = words.words.iter().any(|w| w[0] == 0 && w[1] == 1);
        let b = words.words.iter().any(|w| w[0] == 1 && w[1] == 1);
        assert!(a && b);
    }
}
