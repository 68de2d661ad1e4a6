//! Uniform structures given by indexed entourage bases, and sampled
//! stand-ins for compact sets.

mod dyadic;
mod family;
mod point;

use std::collections::HashSet;

use thiserror::Error;

pub use dyadic::{Anchor, Dyadic};
pub use family::{
    chord, circle_from_line, logistic2, sphere_from_plane, ArcMetric, ChordalLineMetric, ChordalPlaneMetric,
    DyadicMetric, EntourageFamily, Level, LineMetric, LogOddsMetric, Metric, MetricFamily,
    PartitionFamily, PlaneMetric,
};
pub use point::{ArrowPoint, Point, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniformityError {
    #[error("level {k} outside {lo}..={hi}")]
    LevelOutOfRange { k: Level, lo: Level, hi: Level },
    #[error("empty compact set '{0}'")]
    EmptyCompact(String),
    #[error("duplicate sample {point} in '{label}'")]
    DuplicatePoint { label: String, point: String },
    #[error("cut sets are not nested at level {k}")]
    NonNested { k: Level },
    #[error("cuts at level {k} are not strictly ascending")]
    UnsortedCuts { k: Level },
    #[error("cuts at level {k} must lie strictly inside (0, 1)")]
    CutOutOfRange { k: Level },
    #[error("invalid entourage family: {0}")]
    InvalidFamily(String),
}

/// Finite sample standing in for a compact set.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCompact {
    label: String,
    points: Vec<Point>,
    /// Every point of the intended compact set is within this entourage level
    /// of some sample, when known.
    density_level: Option<Level>,
}

impl SampledCompact {
    pub fn new(
        label: impl Into<String>,
        points: Vec<Point>,
        density_level: Option<Level>,
    ) -> Result<Self, UniformityError> {
        let label = label.into();
        if points.is_empty() {
            return Err(UniformityError::EmptyCompact(label));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(*p) {
                return Err(UniformityError::DuplicatePoint {
                    label,
                    point: p.to_string(),
                });
            }
        }
        Ok(SampledCompact {
            label,
            points,
            density_level,
        })
    }

    /// Like [`SampledCompact::new`] but silently drops repeated points.
    pub fn deduplicated(
        label: impl Into<String>,
        points: Vec<Point>,
        density_level: Option<Level>,
    ) -> Result<Self, UniformityError> {
        let mut seen = HashSet::with_capacity(points.len());
        let points = points.into_iter().filter(|p| seen.insert(*p)).collect();
        SampledCompact::new(label, points, density_level)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn density_level(&self) -> Option<Level> {
        self.density_level
    }

    /// Union of samples, first occurrence order.
    pub fn union(label: impl Into<String>, parts: &[&SampledCompact]) -> Result<Self, UniformityError> {
        let pts = parts.iter().flat_map(|p| p.points.iter().copied()).collect();
        let density = parts.iter().map(|p| p.density_level).try_fold(0, |acc: Level, d| d.map(|d| acc.max(d)));
        SampledCompact::deduplicated(label, pts, density)
    }

    /// The samples satisfying `keep`.
    pub fn filtered(&self, label: impl Into<String>, keep: impl Fn(&Point) -> bool) -> Result<Self, UniformityError> {
        let pts = self.points.iter().copied().filter(|p| keep(p)).collect();
        SampledCompact::new(label, pts, self.density_level)
    }
}

/// Samples of `universe` that are `k`-close to `p`.
pub fn ball(
    family: &dyn EntourageFamily,
    p: &Point,
    k: Level,
    universe: &SampledCompact,
) -> Result<Vec<Point>, UniformityError> {
    family.check_level(k)?;
    Ok(universe
        .points()
        .iter()
        .filter(|q| family.contains(k, p, q))
        .copied()
        .collect())
}

/// Whether `s × s` lies in the entourage of level `k`.
pub fn is_small(family: &dyn EntourageFamily, s: &[Point], k: Level) -> Result<bool, UniformityError> {
    family.check_level(k)?;
    Ok(s.iter()
        .enumerate()
        .all(|(i, p)| s[i + 1..].iter().all(|q| family.contains(k, p, q))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_ball_on_grid() {
        let f = MetricFamily::new(LineMetric, 1.0, (0, 8)).unwrap();
        let grid = SampledCompact::new("grid", (0..=16).map(|i| Point::Real(i as f64 / 16.0)).collect(), None).unwrap();
        let b = ball(&f, &Point::Real(0.5), 2, &grid).unwrap();
        let xs: Vec<f64> = b.iter().map(|p| p.real().unwrap()).collect();
        assert_eq!(xs, (5..=11).map(|i| i as f64 / 16.0).collect::<Vec<_>>());
        assert!(ball(&f, &Point::Real(0.5), 9, &grid).is_err());
    }

    #[test]
    fn partition_ball_on_double_arrow() {
        let f = PartitionFamily::from_cuts((1, 1), |_| vec![Dyadic::HALF]).unwrap();
        let mut pts = Vec::new();
        for j in 0..=8u128 {
            for s in [Side::Lower, Side::Upper] {
                pts.push(Point::arrow(Dyadic::new(j, 3).unwrap(), s));
            }
        }
        let universe = SampledCompact::new("arrow", pts.clone(), None).unwrap();
        let p = Point::arrow(Dyadic::new(1, 2).unwrap(), Side::Upper);
        let b = ball(&f, &p, 1, &universe).unwrap();
        // oracle: lexicographic comparison against (1/2, 0)
        let cut = ArrowPoint::new(Dyadic::HALF, Side::Lower);
        let expected: Vec<Point> = pts
            .iter()
            .copied()
            .filter(|q| match q {
                Point::Arrow(a) => *a <= cut,
                _ => false,
            })
            .collect();
        assert_eq!(b, expected);
        let single = SampledCompact::new("one", vec![p], None).unwrap();
        assert_eq!(ball(&f, &p, 1, &single).unwrap(), vec![p]);
    }

    #[test]
    fn smallness() {
        let f = MetricFamily::new(LineMetric, 1.0, (0, 4)).unwrap();
        assert!(is_small(&f, &[Point::Real(0.3)], 4).unwrap());
        assert!(!is_small(&f, &[Point::Real(0.0), Point::Real(1.0)], 1).unwrap());
        let pf = PartitionFamily::dyadic((0, 4)).unwrap();
        let cell: Vec<Point> = (1..4u128)
            .map(|j| Point::arrow(Dyadic::new(j, 5).unwrap(), Side::Upper))
            .collect();
        assert!(is_small(&pf, &cell, 3).unwrap());
    }

    #[test]
    fn compact_validation() {
        assert!(matches!(SampledCompact::new("e", vec![], None), Err(UniformityError::EmptyCompact(_))));
        assert!(matches!(
            SampledCompact::new("d", vec![Point::Infinity, Point::Infinity], None),
            Err(UniformityError::DuplicatePoint { .. })
        ));
    }
}
