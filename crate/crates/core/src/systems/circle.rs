use std::sync::Arc;

use super::{foreign, CatalogOptions, Coords, Dynamics, Parts, SystemError, SystemInstance};
use crate::growth::ClassLabel;
use crate::uniformity::{ArcMetric, MetricFamily, Point, SampledCompact};

use super::interval::density_level;

const QUANTUM: f64 = 1.0 / 4_503_599_627_370_496.0; // 2^-52

/// Rounds to a multiple of `2^-52` in `[0, 1)`. Sums of two such numbers
/// are exact in `f64`, so rotations by a quantized angle are exact isometries.
fn quantize(x: f64) -> f64 {
    let q = (x.rem_euclid(1.0) / QUANTUM).round() * QUANTUM;
    if q >= 1.0 {
        0.0
    } else {
        q
    }
}

struct Rotation {
    alpha: f64,
}

impl Dynamics for Rotation {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Real(x) => {
                let y = x + self.alpha;
                Ok(Point::Real(if y >= 1.0 { y - 1.0 } else { y }))
            }
            _ => Err(foreign("rotation", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match p {
            Point::Real(x) => {
                let y = x - self.alpha;
                Ok(Point::Real(if y < 0.0 { y + 1.0 } else { y }))
            }
            _ => Err(foreign("rotation", p)),
        })
    }
}

fn circle_coords() -> (
    Arc<dyn Fn(&Point) -> Coords + Send + Sync>,
    Arc<dyn Fn(Coords) -> Option<Point> + Send + Sync>,
) {
    (
        Arc::new(|p| match p {
            Point::Real(x) => Coords::Circle(*x),
            _ => Coords::Ideal,
        }),
        Arc::new(|c| match c {
            Coords::Circle(x) | Coords::Line(x) => Some(Point::Real(x.rem_euclid(1.0))),
            _ => None,
        }),
    )
}

/// `x -> x + alpha mod 1` with the arc-length metric.
///
/// The angle and the samples are rounded to multiples of `2^-52`, which
/// makes every step exact; the default grid has an odd number of points so
/// that no sample distance equals an entourage radius.
pub fn circle_rotation(alpha: f64, opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SystemError::InvalidParameter(format!("rotation angle {alpha} not in (0, 1)")));
    }
    let eps0 = 0.5;
    let family = MetricFamily::new(ArcMetric, eps0, opts.levels.unwrap_or((0, 12)))?;
    let grid = opts.grid.unwrap_or(4097).max(1);
    let grid = grid | 1;
    let pts = (0..grid).map(|i| Point::Real(quantize(i as f64 / grid as f64))).collect();
    let default = SampledCompact::deduplicated("default", pts, density_level(eps0, 1.0 / grid as f64))?;
    let (coords, from_coords) = circle_coords();
    Ok(SystemInstance::from_parts(Parts {
        name: "rotation",
        dynamics: Arc::new(Rotation { alpha: quantize(alpha) }),
        entourages: Arc::new(family),
        compacts: vec![default],
        non_wandering: vec![],
        non_wandering_everything: true,
        expected: Some((ClassLabel::Bounded, 0.0)),
        chart: None,
        coords,
        from_coords,
    }))
}

struct Doubling;

impl Dynamics for Doubling {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match p {
            Point::Real(x) => {
                let y = 2.0 * x;
                Ok(Point::Real(if y >= 1.0 { y - 1.0 } else { y }))
            }
            _ => Err(foreign("doubling", p)),
        }
    }
    fn step_inv(&self, _: &Point) -> Option<Result<Point, SystemError>> {
        None
    }
}

/// `x -> 2x mod 1`; forward only.
pub fn doubling_map(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let eps0 = 0.5;
    let family = MetricFamily::new(ArcMetric, eps0, opts.levels.unwrap_or((0, 12)))?;
    let grid = opts.grid.unwrap_or(100_000).max(1);
    let pts = (0..grid).map(|i| Point::Real(i as f64 / grid as f64)).collect();
    let default = SampledCompact::new("default", pts, density_level(eps0, 1.0 / grid as f64))?;
    let (coords, from_coords) = circle_coords();
    Ok(SystemInstance::from_parts(Parts {
        name: "doubling",
        dynamics: Arc::new(Doubling),
        entourages: Arc::new(family),
        compacts: vec![default],
        non_wandering: vec![Point::Real(0.0)],
        non_wandering_everything: true,
        expected: Some((ClassLabel::Exponential, 0.0)),
        chart: None,
        coords,
        from_coords,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniformity::Metric;

    #[test]
    fn quarter_rotation_is_periodic_on_samples() {
        let s = circle_rotation(0.25, &CatalogOptions::default()).unwrap();
        let s4 = s.power(4).unwrap();
        for p in s.default_compact().points() {
            assert_eq!(s4.step(p).unwrap(), *p);
            assert_eq!(s.step_inv(&s.step(p).unwrap()).unwrap(), *p);
        }
    }

    #[test]
    fn rotation_is_an_exact_isometry() {
        let s = circle_rotation(0.3, &CatalogOptions { grid: Some(301), ..Default::default() }).unwrap();
        let pts = s.default_compact().points();
        for p in pts.iter().step_by(7) {
            for q in pts.iter().step_by(11) {
                let (fp, fq) = (s.step(p).unwrap(), s.step(q).unwrap());
                assert_eq!(ArcMetric.distance(&fp, &fq), ArcMetric.distance(p, q));
            }
        }
        assert!(circle_rotation(1.5, &CatalogOptions::default()).is_err());
        assert_eq!(s.entourages().level_range(), (0, 12));
    }

    #[test]
    fn doubling_examples() {
        let s = doubling_map(&CatalogOptions { grid: Some(10), ..Default::default() }).unwrap();
        assert_eq!(s.step(&Point::Real(0.3)).unwrap(), Point::Real(0.6));
        assert_eq!(s.step(&Point::Real(0.75)).unwrap(), Point::Real(0.5));
    }
}
