use std::sync::Arc;

use super::{foreign, linspace, CatalogOptions, Coords, Dynamics, ExactChart, Parts, SystemError, SystemInstance};
use crate::growth::ClassLabel;
use crate::uniformity::{
    circle_from_line, logistic2, ChordalLineMetric, Level, LogOddsMetric, MetricFamily, Point,
    SampledCompact,
};

/// Chordal radius of the sample set around `∞` on the translation line.
pub const INFINITY_BALL_RADIUS: f64 = 0.3;

/// Extra steps of samples beyond the horizon at the repelling end.
const MARGIN: f64 = 24.0;

/// Base-2 log-odds `log2(x / (1 - x))`; the endpoints map to `∓inf`.
pub fn log_odds(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x >= 1.0 {
        f64::INFINITY
    } else {
        x.log2() - (-x).ln_1p() / std::f64::consts::LN_2
    }
}

/// Largest level `k` with `eps0 2^-k` above half the largest sample gap.
pub(crate) fn density_level(eps0: f64, max_gap: f64) -> Option<Level> {
    if !(max_gap > 0.0) {
        return None;
    }
    let k = (2.0 * eps0 / max_gap).log2().floor();
    (k >= 0.0).then_some(k as Level)
}

fn max_gap(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

struct NorthSouth;

impl Dynamics for NorthSouth {
    // x -> x / (2 - x) halves the odds: t -> t - 1
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Real(t) => Ok(Point::Real(t - 1.0)),
            _ => Err(foreign("north-south-interval", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match p {
            Point::Real(t) => Ok(Point::Real(t + 1.0)),
            _ => Err(foreign("north-south-interval", p)),
        })
    }
}

/// `x -> x / (2 - x)` on `[0, 1]`: `0` attracts, `1` repels.
///
/// States are `Real(t)` with `t = log2(x / (1 - x))`, so that the map is
/// `t -> t - 1` and points `2^-500` from the repeller stay distinct.
pub fn north_south_interval(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let eps0 = 0.5;
    let family = MetricFamily::new(LogOddsMetric, eps0, opts.levels.unwrap_or((0, 12)))?;
    let span = opts.horizon_or(512) as f64 + MARGIN;
    let grid = opts.grid.unwrap_or(10_001).max(3);

    let mut pts: Vec<Point> = vec![Point::Real(f64::NEG_INFINITY)];
    pts.extend(linspace(-span, span, grid - 2).map(Point::Real));
    pts.push(Point::Real(f64::INFINITY));
    let gap = max_gap(pts.iter().map(|p| logistic2(p.real().unwrap())).collect());
    let default = SampledCompact::new("default", pts, density_level(eps0, gap))?;

    let xs: Vec<f64> = linspace(0.1, 0.9, 2001).collect();
    let middle = SampledCompact::deduplicated(
        "middle",
        xs.iter().map(|&x| Point::Real(log_odds(x))).collect(),
        density_level(eps0, 0.8 / 2000.0),
    )?;
    let uniform_x = SampledCompact::deduplicated(
        "x-grid",
        linspace(0.0, 1.0, 4097).map(|x| Point::Real(log_odds(x))).collect(),
        density_level(eps0, 1.0 / 4096.0),
    )?;

    Ok(SystemInstance::from_parts(Parts {
        name: "north-south-interval",
        dynamics: Arc::new(NorthSouth),
        entourages: Arc::new(family),
        compacts: vec![default, middle, uniform_x],
        non_wandering: vec![Point::Real(f64::NEG_INFINITY), Point::Real(f64::INFINITY)],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Linear, 1.0)),
        chart: Some(ExactChart::HalvingOdds),
        coords: Arc::new(|p| match p {
            Point::Real(t) => Coords::Line(logistic2(*t)),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Line(x) if (0.0..=1.0).contains(&x) => Some(Point::Real(log_odds(x))),
            _ => None,
        }),
    }))
}

struct Translation;

impl Dynamics for Translation {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Real(t) => Ok(Point::Real(t + 1.0)),
            Point::Infinity => Ok(Point::Infinity),
            _ => Err(foreign("translation-line", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match p {
            Point::Real(t) => Ok(Point::Real(t - 1.0)),
            Point::Infinity => Ok(Point::Infinity),
            _ => Err(foreign("translation-line", p)),
        })
    }
}

/// `t -> t + 1` on `R ∪ {∞}` with the chordal metric.
pub fn translation_line_compactified(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let eps0 = 1.0;
    let family = MetricFamily::new(ChordalLineMetric, eps0, opts.levels.unwrap_or((0, 12)))?;
    let span = opts.horizon_or(512) as f64 + MARGIN;
    let grid = opts.grid.unwrap_or(10_001).max(16);

    let ring: Vec<f64> = (0..8).flat_map(|j| [-1e3 * 4f64.powi(j), 1e3 * 4f64.powi(j)]).collect();
    let mut pts: Vec<Point> = linspace(-span, span, grid - ring.len() - 1).map(Point::Real).collect();
    pts.extend(ring.iter().map(|&t| Point::Real(t)));
    pts.push(Point::Infinity);
    let step = 2.0 * span / (grid - ring.len() - 2) as f64;
    // chordal speed is at most 2
    let default = SampledCompact::new("default", pts, density_level(eps0, 2.0 * step))?;

    let near = default.filtered("near-infinity", |p| {
        chordal_distance_to_infinity(p) <= INFINITY_BALL_RADIUS
    })?;
    let away = SampledCompact::new(
        "away-from-infinity",
        linspace(-5.0, 5.0, 2001).map(Point::Real).collect(),
        density_level(eps0, 2.0 * 10.0 / 2000.0),
    )?;

    Ok(SystemInstance::from_parts(Parts {
        name: "translation-line",
        dynamics: Arc::new(Translation),
        entourages: Arc::new(family),
        compacts: vec![default, near, away],
        non_wandering: vec![Point::Infinity],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Linear, 1.0)),
        chart: Some(ExactChart::Translation),
        coords: Arc::new(|p| match p {
            Point::Real(t) => Coords::Line(*t),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Line(t) => Some(Point::Real(t)),
            Coords::Ideal => Some(Point::Infinity),
            _ => None,
        }),
    }))
}

/// Chordal distance from `p` to `∞` on the compactified line.
pub fn chordal_distance_to_infinity(p: &Point) -> f64 {
    let a = circle_from_line(p);
    a[0].hypot(a[1] - 1.0)
}
