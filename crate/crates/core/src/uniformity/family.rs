use std::f64::consts::PI;
use std::fmt;

use super::dyadic::Dyadic;
use super::point::{ArrowPoint, Point, Side};
use super::UniformityError;

/// Index of an entourage in a base; larger levels are smaller entourages.
pub type Level = u32;

/// A directed, indexed base of a uniform structure.
///
/// Besides membership, a family exposes a coarse embedding used for spatial
/// bucketing: `contains(k, p, q)` must imply that `locate(p)` and `locate(q)`
/// differ by less than `reach(k)` in every coordinate.
pub trait EntourageFamily: Send + Sync + fmt::Debug {
    /// Inclusive `(k_min, k_max)`.
    fn level_range(&self) -> (Level, Level);

    /// Membership without range checking; see [`EntourageFamily::membership`].
    fn contains(&self, k: Level, p: &Point, q: &Point) -> bool;

    /// A level `k'` with `u_{k'} ∘ u_{k'} ⊆ u_k`.
    fn square_root_level(&self, k: Level) -> Level;

    fn locate(&self, p: &Point) -> [f64; 3];

    fn reach(&self, k: Level) -> f64;

    /// Number of meaningful coordinates returned by `locate`.
    fn dims(&self) -> usize {
        3
    }

    fn describe(&self) -> String;

    /// For partition bases, the largest diameter of a cell of level `k`;
    /// such bases are transitive (`u ∘ u = u`).
    fn cell_diameter(&self, _k: Level) -> Option<f64> {
        None
    }

    /// For metric bases, the radius `eps_k` of `u_k`.
    fn radius(&self, _k: Level) -> Option<f64> {
        None
    }

    /// `Some(r)` when `contains(k, p, q)` is exactly
    /// `chord(&locate(p), &locate(q)) < r`, letting callers cache `locate`.
    fn embedded_radius(&self, _k: Level) -> Option<f64> {
        None
    }

    fn check_level(&self, k: Level) -> Result<(), UniformityError> {
        let (lo, hi) = self.level_range();
        if k < lo || k > hi {
            return Err(UniformityError::LevelOutOfRange { k, lo, hi });
        }
        Ok(())
    }

    fn membership(&self, k: Level, p: &Point, q: &Point) -> Result<bool, UniformityError> {
        self.check_level(k)?;
        Ok(self.contains(k, p, q))
    }
}

/// A metric on the states of one system, with an embedding into `R^3`
/// that does not increase distances in the sup norm.
pub trait Metric: Send + Sync + fmt::Debug {
    fn distance(&self, p: &Point, q: &Point) -> f64;
    fn embed(&self, p: &Point) -> [f64; 3];
    fn dims(&self) -> usize;
    fn name(&self) -> &'static str;
    /// Whether `distance` is the Euclidean distance of `embed`, computed by [`chord`].
    fn euclidean(&self) -> bool {
        false
    }
}

/// Euclidean distance in `R^3`.
#[inline]
pub fn chord(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `|x - y|` on `Real` states.
#[derive(Clone, Copy, Debug, Default)]
pub struct LineMetric;

impl Metric for LineMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Real(a), Point::Real(b)) => (a - b).abs(),
            _ => f64::NAN,
        }
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        [p.real().unwrap_or(f64::NAN), 0.0, 0.0]
    }
    fn dims(&self) -> usize {
        1
    }
    fn name(&self) -> &'static str {
        "line"
    }
}

/// Arc length on `R/Z`, states `Real(x)` with `x` in `[0, 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArcMetric;

impl Metric for ArcMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Real(a), Point::Real(b)) => {
                let d = (a - b).abs().rem_euclid(1.0);
                d.min(1.0 - d)
            }
            _ => f64::NAN,
        }
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        // chord length / 2π never exceeds arc length
        let x = p.real().unwrap_or(f64::NAN);
        let (s, c) = (2.0 * PI * x).sin_cos();
        [c / (2.0 * PI), s / (2.0 * PI), 0.0]
    }
    fn dims(&self) -> usize {
        2
    }
    fn name(&self) -> &'static str {
        "arc"
    }
}

/// Euclidean distance on `Plane` states.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlaneMetric;

impl Metric for PlaneMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Plane(..), Point::Plane(..)) => chord(&self.embed(p), &self.embed(q)),
            _ => f64::NAN,
        }
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        let (x, y) = p.plane().unwrap_or((f64::NAN, f64::NAN));
        [x, y, 0.0]
    }
    fn dims(&self) -> usize {
        2
    }
    fn name(&self) -> &'static str {
        "plane"
    }
    fn euclidean(&self) -> bool {
        true
    }
}

/// Stereographic image of `t` on the unit circle; `∞` goes to `(0, 1)`.
pub fn circle_from_line(p: &Point) -> [f64; 2] {
    match p {
        Point::Infinity => [0.0, 1.0],
        Point::Real(t) => {
            let t = *t;
            if t.is_infinite() {
                return [0.0, 1.0];
            }
            if t.abs() <= 1.0 {
                let d = t * t + 1.0;
                [2.0 * t / d, (t * t - 1.0) / d]
            } else {
                // same formulas, rearranged so that huge |t| cannot overflow
                let inv = 1.0 / t;
                [2.0 / (t + inv), 1.0 - 2.0 * inv * inv / (1.0 + inv * inv)]
            }
        }
        _ => [f64::NAN, f64::NAN],
    }
}

/// Stereographic image of `(x, y)` on the unit sphere; `∞` goes to the pole.
pub fn sphere_from_plane(p: &Point) -> [f64; 3] {
    match p {
        Point::Infinity => [0.0, 0.0, 1.0],
        Point::Plane(x, y) => {
            let r = x.hypot(*y);
            if !r.is_finite() {
                return [0.0, 0.0, 1.0];
            }
            if r <= 1.0 {
                let d = r * r + 1.0;
                [2.0 * x / d, 2.0 * y / d, (r * r - 1.0) / d]
            } else {
                let (ux, uy, inv) = (x / r, y / r, 1.0 / r);
                let s = 2.0 / (r + inv);
                [s * ux, s * uy, 1.0 - 2.0 * inv * inv / (1.0 + inv * inv)]
            }
        }
        _ => [f64::NAN; 3],
    }
}

/// Chordal metric on `R ∪ {∞}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ChordalLineMetric;

impl Metric for ChordalLineMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        chord(&self.embed(p), &self.embed(q))
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        let a = circle_from_line(p);
        [a[0], a[1], 0.0]
    }
    fn dims(&self) -> usize {
        2
    }
    fn name(&self) -> &'static str {
        "chordal-line"
    }
    fn euclidean(&self) -> bool {
        true
    }
}

/// Chordal metric on `R^2 ∪ {∞}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ChordalPlaneMetric;

impl Metric for ChordalPlaneMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        chord(&sphere_from_plane(p), &sphere_from_plane(q))
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        sphere_from_plane(p)
    }
    fn dims(&self) -> usize {
        3
    }
    fn name(&self) -> &'static str {
        "chordal-plane"
    }
    fn euclidean(&self) -> bool {
        true
    }
}

/// `1 / (1 + 2^-t)`: the point of `[0, 1]` with base-2 log-odds `t`.
pub fn logistic2(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp2())
    } else {
        let e = t.exp2();
        e / (1.0 + e)
    }
}

/// `|x - x'|` on `[0, 1]` for states `Real(t)` in log-odds coordinates
/// (`±inf` are the endpoints).
#[derive(Clone, Copy, Debug, Default)]
pub struct LogOddsMetric;

impl Metric for LogOddsMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Real(s), Point::Real(t)) => {
                let (s, t) = (*s, *t);
                if s >= 0.0 && t >= 0.0 {
                    (logistic2(-s) - logistic2(-t)).abs()
                } else if s <= 0.0 && t <= 0.0 {
                    (logistic2(s) - logistic2(t)).abs()
                } else {
                    let (hi, lo) = if s > t { (s, t) } else { (t, s) };
                    1.0 - logistic2(-hi) - logistic2(lo)
                }
            }
            _ => f64::NAN,
        }
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        [p.real().map(logistic2).unwrap_or(f64::NAN), 0.0, 0.0]
    }
    fn dims(&self) -> usize {
        1
    }
    fn name(&self) -> &'static str {
        "log-odds"
    }
}

/// `|x - y|` on exact dyadic states.
#[derive(Clone, Copy, Debug, Default)]
pub struct DyadicMetric;

impl Metric for DyadicMetric {
    fn distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Exact(a), Point::Exact(b)) => a.distance(b),
            _ => f64::NAN,
        }
    }
    fn embed(&self, p: &Point) -> [f64; 3] {
        match p {
            Point::Exact(a) => [a.to_f64(), 0.0, 0.0],
            _ => [f64::NAN; 3],
        }
    }
    fn dims(&self) -> usize {
        1
    }
    fn name(&self) -> &'static str {
        "dyadic"
    }
}

/// Entourages `{(p, q) : d(p, q) < eps0 2^-k}`.
#[derive(Clone, Debug)]
pub struct MetricFamily<M> {
    metric: M,
    eps0: f64,
    levels: (Level, Level),
}

impl<M: Metric> MetricFamily<M> {
    pub fn new(metric: M, eps0: f64, levels: (Level, Level)) -> Result<Self, UniformityError> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(UniformityError::InvalidFamily(format!("eps0 must be positive, got {eps0}")));
        }
        if levels.0 > levels.1 || levels.1 > 60 {
            return Err(UniformityError::InvalidFamily(format!("bad level range {levels:?}")));
        }
        Ok(MetricFamily { metric, eps0, levels })
    }

    pub fn eps(&self, k: Level) -> f64 {
        self.eps0 * 2f64.powi(-(k as i32))
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.metric.distance(p, q)
    }
}

impl<M: Metric> EntourageFamily for MetricFamily<M> {
    fn level_range(&self) -> (Level, Level) {
        self.levels
    }
    fn contains(&self, k: Level, p: &Point, q: &Point) -> bool {
        self.metric.distance(p, q) < self.eps(k)
    }
    fn square_root_level(&self, k: Level) -> Level {
        k + 1
    }
    fn locate(&self, p: &Point) -> [f64; 3] {
        self.metric.embed(p)
    }
    fn reach(&self, k: Level) -> f64 {
        self.eps(k)
    }
    fn radius(&self, k: Level) -> Option<f64> {
        Some(self.eps(k))
    }
    fn embedded_radius(&self, k: Level) -> Option<f64> {
        self.metric.euclidean().then(|| self.eps(k))
    }
    fn dims(&self) -> usize {
        self.metric.dims()
    }
    fn describe(&self) -> String {
        format!(
            "metric({}) eps0={} levels {}..={}",
            self.metric.name(),
            self.eps0,
            self.levels.0,
            self.levels.1
        )
    }
}

#[derive(Clone, Debug)]
enum Cuts {
    /// `cuts(k) = {j / 2^k : 0 < j < 2^k}`.
    Dyadic,
    /// Explicit ascending cut lists, indexed from `k_min`.
    Explicit(Vec<Vec<Dyadic>>),
}

/// Entourages of the double arrow given by finite clopen partitions.
///
/// A cut `c` splits the space between `(c, 0)` and `(c, 1)`; two points are
/// `k`-close when no cut of level `k` separates them.
#[derive(Clone, Debug)]
pub struct PartitionFamily {
    cuts: Cuts,
    levels: (Level, Level),
    widths: Vec<f64>,
}

impl PartitionFamily {
    /// Cuts at all dyadics of level `k`.
    pub fn dyadic(levels: (Level, Level)) -> Result<Self, UniformityError> {
        if levels.0 > levels.1 || levels.1 > 62 {
            return Err(UniformityError::InvalidFamily(format!("bad level range {levels:?}")));
        }
        let widths = (levels.0..=levels.1).map(|k| 2f64.powi(-(k as i32))).collect();
        Ok(PartitionFamily {
            cuts: Cuts::Dyadic,
            levels,
            widths,
        })
    }

    /// Cuts given per level; they must be ascending, inside `(0, 1)` and nested.
    pub fn from_cuts(
        levels: (Level, Level),
        cuts_per_level: impl Fn(Level) -> Vec<Dyadic>,
    ) -> Result<Self, UniformityError> {
        if levels.0 > levels.1 {
            return Err(UniformityError::InvalidFamily(format!("bad level range {levels:?}")));
        }
        let mut all: Vec<Vec<Dyadic>> = Vec::new();
        for k in levels.0..=levels.1 {
            let cuts = cuts_per_level(k);
            for w in cuts.windows(2) {
                if w[0] >= w[1] {
                    return Err(UniformityError::UnsortedCuts { k });
                }
            }
            if cuts.iter().any(|c| *c == Dyadic::ZERO || *c == Dyadic::ONE) {
                return Err(UniformityError::CutOutOfRange { k });
            }
            if let Some(prev) = all.last() {
                if prev.iter().any(|c| cuts.binary_search(c).is_err()) {
                    return Err(UniformityError::NonNested { k });
                }
            }
            all.push(cuts);
        }
        let widths = all
            .iter()
            .map(|cuts| {
                let mut last = Dyadic::ZERO;
                let mut w: f64 = 0.0;
                for c in cuts.iter().chain(std::iter::once(&Dyadic::ONE)) {
                    w = w.max(c.distance(&last));
                    last = *c;
                }
                w
            })
            .collect();
        Ok(PartitionFamily {
            cuts: Cuts::Explicit(all),
            levels,
            widths,
        })
    }

    /// Index of the cell of level `k` containing `p`.
    pub fn cell(&self, k: Level, p: &ArrowPoint) -> u64 {
        match &self.cuts {
            Cuts::Dyadic => {
                let top = 1u64 << k;
                let (f, exact) = p.x().scaled_floor(k);
                if exact {
                    let below = f.saturating_sub(1).min(top - 1);
                    let on_cut = f >= 1 && f < top && p.side() == Side::Upper;
                    below + on_cut as u64
                } else {
                    f.min(top - 1)
                }
            }
            Cuts::Explicit(all) => {
                let cuts = &all[(k - self.levels.0) as usize];
                let x = p.x();
                let below = cuts.partition_point(|c| *c < x);
                let on_cut = below < cuts.len() && cuts[below] == x && p.side() == Side::Upper;
                (below + on_cut as usize) as u64
            }
        }
    }

    /// Largest `x`-width of a cell of level `k`.
    pub fn cell_width(&self, k: Level) -> f64 {
        self.widths[(k - self.levels.0) as usize]
    }
}

impl EntourageFamily for PartitionFamily {
    fn level_range(&self) -> (Level, Level) {
        self.levels
    }
    fn contains(&self, k: Level, p: &Point, q: &Point) -> bool {
        match (p, q) {
            (Point::Arrow(a), Point::Arrow(b)) => self.cell(k, a) == self.cell(k, b),
            _ => false,
        }
    }
    fn square_root_level(&self, k: Level) -> Level {
        k
    }
    fn locate(&self, p: &Point) -> [f64; 3] {
        match p {
            Point::Arrow(a) => [a.x().to_f64(), 0.0, 0.0],
            _ => [f64::NAN; 3],
        }
    }
    fn reach(&self, k: Level) -> f64 {
        // same cell means |x - x'| <= width; pad for float rounding of x
        self.cell_width(k) * (1.0 + 1e-9) + 1e-15
    }
    fn dims(&self) -> usize {
        1
    }
    fn cell_diameter(&self, k: Level) -> Option<f64> {
        Some(self.cell_width(k))
    }
    fn describe(&self) -> String {
        let kind = match self.cuts {
            Cuts::Dyadic => "dyadic",
            Cuts::Explicit(_) => "explicit",
        };
        format!("partition({kind}) levels {}..={}", self.levels.0, self.levels.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrow(n: u128, e: u32, s: Side) -> Point {
        Point::arrow(Dyadic::new(n, e).unwrap(), s)
    }

    #[test]
    fn metric_examples() {
        let f = MetricFamily::new(PlaneMetric, 1.0, (0, 10)).unwrap();
        let (p, q) = (Point::Plane(0.0, 0.0), Point::Plane(0.9, 0.0));
        assert!(f.membership(0, &p, &q).unwrap());
        assert!(!f.membership(1, &p, &q).unwrap());
        assert!(f.membership(11, &p, &q).is_err());
        assert!((ArcMetric.distance(&Point::Real(0.1), &Point::Real(0.9)) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn chordal_line_limits() {
        let inf = Point::Infinity;
        let d = |t: f64| ChordalLineMetric.distance(&Point::Real(t), &inf);
        assert!(d(1e3) < 2.1e-3 && d(1e6) < 2.1e-6 && d(1e300) < 1e-299);
        assert!((d(0.0) - 2.0).abs() < 1e-15);
        // the formula branches agree at |t| = 1
        let a = circle_from_line(&Point::Real(1.0));
        let b = circle_from_line(&Point::Real(1.0 + 1e-12));
        assert!((a[0] - b[0]).abs() < 1e-11 && (a[1] - b[1]).abs() < 1e-11);
    }

    #[test]
    fn embeddings_do_not_expand() {
        let metrics: Vec<(Box<dyn Metric>, Vec<Point>)> = vec![
            (Box::new(ArcMetric), (0..50).map(|i| Point::Real(i as f64 / 50.0)).collect()),
            (
                Box::new(ChordalPlaneMetric),
                (0..50).map(|i| Point::Plane(i as f64 * 0.7 - 10.0, (i * i) as f64 * 0.03 - 5.0)).collect(),
            ),
            (Box::new(LogOddsMetric), (0..50).map(|i| Point::Real(i as f64 - 25.0)).collect()),
        ];
        for (m, pts) in metrics {
            for p in &pts {
                for q in &pts {
                    let (a, b) = (m.embed(p), m.embed(q));
                    let sup = (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
                    assert!(sup <= m.distance(p, q) + 1e-12, "{} {p} {q}", m.name());
                }
            }
        }
    }

    #[test]
    fn log_odds_distance_near_the_ends() {
        let d = LogOddsMetric.distance(&Point::Real(600.0), &Point::Real(601.0));
        assert!(d > 0.0 && (d - 2f64.powi(-601)).abs() < 1e-190);
        let mid = LogOddsMetric.distance(&Point::Real(-1.0), &Point::Real(1.0));
        assert!((mid - (2.0 / 3.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(LogOddsMetric.distance(&Point::Real(f64::NEG_INFINITY), &Point::Real(f64::INFINITY)), 1.0);
    }

    #[test]
    fn partition_examples() {
        let f = PartitionFamily::from_cuts((1, 2), |k| {
            if k == 1 {
                vec![Dyadic::HALF]
            } else {
                vec![Dyadic::new(1, 2).unwrap(), Dyadic::HALF]
            }
        })
        .unwrap();
        let (a, b) = (arrow(1, 2, Side::Lower), arrow(1, 2, Side::Upper));
        assert!(f.contains(1, &a, &b));
        assert!(!f.contains(2, &a, &b));
        assert!(f.contains(1, &arrow(1, 1, Side::Lower), &a));
        assert!(!f.contains(1, &arrow(1, 1, Side::Upper), &a));
    }

    #[test]
    fn dyadic_cells_match_explicit_cuts() {
        let fast = PartitionFamily::dyadic((0, 4)).unwrap();
        let slow = PartitionFamily::from_cuts((0, 4), |k| {
            (1..(1u128 << k)).map(|j| Dyadic::new(j, k).unwrap()).collect()
        })
        .unwrap();
        let mut pts = Vec::new();
        for j in 0..=64u128 {
            for s in [Side::Lower, Side::Upper] {
                pts.push(ArrowPoint::new(Dyadic::new(j, 6).unwrap(), s));
            }
        }
        pts.push(ArrowPoint::new(Dyadic::one_minus(1, 300).unwrap(), Side::Lower));
        pts.push(ArrowPoint::new(Dyadic::new(1, 300).unwrap(), Side::Upper));
        for k in 0..=4 {
            for p in &pts {
                assert_eq!(fast.cell(k, p), slow.cell(k, p), "k={k} p={:?}", p);
            }
            assert_eq!(fast.cell_width(k), slow.cell_width(k));
        }
    }

    #[test]
    fn partition_validation() {
        let h = Dyadic::HALF;
        let q = Dyadic::new(1, 2).unwrap();
        assert!(matches!(
            PartitionFamily::from_cuts((0, 1), |k| if k == 0 { vec![h] } else { vec![q] }),
            Err(UniformityError::NonNested { k: 1 })
        ));
        assert!(matches!(
            PartitionFamily::from_cuts((0, 0), |_| vec![h, q]),
            Err(UniformityError::UnsortedCuts { k: 0 })
        ));
        assert!(matches!(
            PartitionFamily::from_cuts((0, 0), |_| vec![Dyadic::ONE]),
            Err(UniformityError::CutOutOfRange { k: 0 })
        ));
    }
}
