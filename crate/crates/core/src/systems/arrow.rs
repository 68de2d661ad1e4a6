use std::cmp::Ordering;
use std::sync::Arc;

use super::{foreign, CatalogOptions, Coords, Dynamics, Parts, SystemError, SystemInstance};
use crate::growth::ClassLabel;
use crate::uniformity::{
    Dyadic, DyadicMetric, MetricFamily, PartitionFamily, Point, SampledCompact, Side,
};

/// `g(x) = x/2` on `[0, 2/3]` and `2x - 1` on `[2/3, 1]`.
///
/// A north-south map of `[0, 1]` (0 attracts, 1 repels) that keeps dyadic
/// rationals dyadic without growing their mantissas.
fn g(x: &Dyadic) -> Option<Dyadic> {
    if x.cmp_ratio(2, 3) == Ordering::Greater {
        x.double_minus_one()
    } else {
        x.half()
    }
}

fn g_inv(y: &Dyadic) -> Option<Dyadic> {
    if y.cmp_ratio(1, 3) == Ordering::Greater {
        y.half_up()
    } else {
        y.double()
    }
}

fn lift(x: Option<Dyadic>, p: &Point) -> Result<Dyadic, SystemError> {
    x.ok_or_else(|| SystemError::Precision(p.to_string()))
}

struct DoubleArrow;

impl Dynamics for DoubleArrow {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Arrow(a) => Ok(Point::arrow(lift(g(&a.x()), p)?, a.side())),
            _ => Err(foreign("double-arrow", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match p {
            Point::Arrow(a) => lift(g_inv(&a.x()), p).map(|x| Point::arrow(x, a.side())),
            _ => Err(foreign("double-arrow", p)),
        })
    }
}

struct BaseInterval;

impl Dynamics for BaseInterval {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Exact(x) => Ok(Point::Exact(lift(g(x), p)?)),
            _ => Err(foreign("split-base-interval", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match p {
            Point::Exact(x) => lift(g_inv(x), p).map(Point::Exact),
            _ => Err(foreign("split-base-interval", p)),
        })
    }
}

/// Exact dyadic value of a float in `[0, 1]`.
pub(crate) fn dyadic_from_f64(x: f64) -> Option<Dyadic> {
    if !(0.0..=1.0).contains(&x) {
        return None;
    }
    if x == 0.0 {
        return Some(Dyadic::ZERO);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 { (frac, 1074) } else { (frac | (1u64 << 52), 1075 - raw_exp) };
    Dyadic::new(mant as u128, u32::try_from(exp).ok()?)
}

/// Coordinates `x` of the samples: shells `1 - x = (R + r) / (R 2^(j+2))`
/// toward the repeller for `j < depth`, a few mirrored shells toward the
/// attractor, and `1/2`.
fn sample_coordinates(depth: u32, attractor_depth: u32, per_shell_bits: u32) -> Vec<Dyadic> {
    let r_count = 1u128 << per_shell_bits;
    let mut xs = vec![Dyadic::HALF];
    for j in 0..depth {
        for r in 0..r_count {
            xs.extend(Dyadic::one_minus(r_count + r, j + 2 + per_shell_bits));
        }
    }
    for j in 0..attractor_depth {
        for r in 0..r_count {
            xs.extend(Dyadic::new(r_count + r, j + 2 + per_shell_bits));
        }
    }
    xs
}

fn shells(opts: &CatalogOptions) -> (u32, u32, u32) {
    let depth = opts.horizon_or(512) as u32 + 24;
    let attractor_depth = 24;
    let target = opts.grid.unwrap_or(18_000).max(64) as f64;
    let per_shell = target / (2.0 * (depth + attractor_depth) as f64);
    let bits = per_shell.log2().round().clamp(1.0, 8.0) as u32;
    (depth, attractor_depth, bits)
}

/// `f(x, s) = (g(x), s)` on the double arrow `[0, 1] × {0, 1}` minus
/// `(0, 0)` and `(1, 1)`, with dyadic partition entourages.
pub fn double_arrow_north_south(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let family = PartitionFamily::dyadic(opts.levels.unwrap_or((0, 16)))?;
    let (depth, attractor_depth, bits) = shells(opts);
    let mut pts = vec![
        Point::arrow(Dyadic::ZERO, Side::Upper),
        Point::arrow(Dyadic::ONE, Side::Lower),
    ];
    for x in sample_coordinates(depth, attractor_depth, bits) {
        pts.push(Point::arrow(x, Side::Lower));
        pts.push(Point::arrow(x, Side::Upper));
    }
    let default = SampledCompact::new("default", pts, None)?;

    Ok(SystemInstance::from_parts(Parts {
        name: "double-arrow",
        dynamics: Arc::new(DoubleArrow),
        entourages: Arc::new(family),
        compacts: vec![default],
        non_wandering: vec![
            Point::arrow(Dyadic::ZERO, Side::Upper),
            Point::arrow(Dyadic::ONE, Side::Lower),
        ],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Linear, 1.0)),
        chart: None,
        coords: Arc::new(|p| match p {
            Point::Arrow(a) => Coords::Line(a.x().to_f64()),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Line(x) => dyadic_from_f64(x).map(|d| Point::arrow(d, Side::Lower)),
            _ => None,
        }),
    }))
}

/// The base map `g` on exact dyadic points of `[0, 1]`, the quotient of
/// the double arrow that forgets the side.
pub fn split_base_interval(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let family = MetricFamily::new(DyadicMetric, 0.5, opts.levels.unwrap_or((0, 14)))?;
    let (depth, attractor_depth, bits) = shells(opts);
    let mut pts = vec![Point::Exact(Dyadic::ZERO), Point::Exact(Dyadic::ONE)];
    pts.extend(sample_coordinates(depth, attractor_depth, bits).into_iter().map(Point::Exact));
    let default = SampledCompact::new("default", pts, None)?;
    Ok(SystemInstance::from_parts(Parts {
        name: "split-base-interval",
        dynamics: Arc::new(BaseInterval),
        entourages: Arc::new(family),
        compacts: vec![default],
        non_wandering: vec![Point::Exact(Dyadic::ZERO), Point::Exact(Dyadic::ONE)],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Linear, 1.0)),
        chart: None,
        coords: Arc::new(|p| match p {
            Point::Exact(x) => Coords::Line(x.to_f64()),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Line(x) => dyadic_from_f64(x).map(Point::Exact),
            _ => None,
        }),
    }))
}

/// `π(x, s) = x` from the double arrow onto the base interval.
#[derive(Clone, Copy, Debug, Default)]
pub struct Projection;

impl Projection {
    pub fn apply(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Arrow(a) => Ok(Point::Exact(a.x())),
            _ => Err(foreign("double-arrow", p)),
        }
    }

    /// Samples `p` of `source` with `π(f(p)) != g(π(p))`.
    pub fn equivariance_failures(
        &self,
        source: &SystemInstance,
        target: &SystemInstance,
    ) -> Result<Vec<Point>, SystemError> {
        let mut bad = Vec::new();
        for p in source.default_compact().points() {
            if self.apply(&source.step(p)?)? != target.step(&self.apply(p)?)? {
                bad.push(*p);
            }
        }
        Ok(bad)
    }
}

/// The projection `π` together with the base system, whose default samples
/// are the projected samples of `system`.
pub fn semiconjugacy_projection(system: &SystemInstance) -> Result<(Projection, SystemInstance), SystemError> {
    if system.name() != "double-arrow" {
        return Err(SystemError::InvalidParameter(format!(
            "semiconjugacy projection needs the double-arrow system, got '{}'",
            system.name()
        )));
    }
    let pi = Projection;
    let projected = system
        .default_compact()
        .points()
        .iter()
        .map(|p| pi.apply(p))
        .collect::<Result<Vec<_>, _>>()?;
    let target = split_base_interval(&CatalogOptions { grid: Some(64), horizon: Some(1), ..Default::default() })?
        .with_compact(SampledCompact::deduplicated("default", projected, None)?);
    Ok((pi, target))
}
