use std::sync::Arc;

use num_complex::Complex64;

use super::interval::density_level;
use super::{foreign, linspace, CatalogOptions, Coords, Dynamics, Parts, SystemError, SystemInstance};
use crate::growth::ClassLabel;
use crate::uniformity::{MetricFamily, PlaneMetric, Point, SampledCompact};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Imaginary parts of the half-plane sample rows.
const ROWS: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Cayley transform `w -> (w - i) / (w + i)` from the upper half-plane to the disk.
pub(crate) fn cayley(w: Complex64) -> Complex64 {
    (w - I) / (w + I)
}

struct Parabolic;

fn mobius(p: &Point, a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Point, SystemError> {
    match p {
        Point::Plane(x, y) => {
            let z = Complex64::new(*x, *y);
            let w = (a * z + b) / (c * z + d);
            Ok(Point::Plane(w.re, w.im))
        }
        _ => Err(foreign("parabolic-disk", p)),
    }
}

impl Dynamics for Parabolic {
    // C ∘ (w + 1) ∘ C⁻¹ = ((2i - 1) z + 1) / (-z + 2i + 1)
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        mobius(p, 2.0 * I - 1.0, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), 2.0 * I + 1.0)
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(mobius(p, 2.0 * I + 1.0, Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0), 2.0 * I - 1.0))
    }
}

/// The parabolic Möbius map of the closed unit disk fixing `1`, conjugate
/// to `w -> w + 1` on the upper half-plane.
///
/// Samples are images of half-plane rows `Im w = v`, with `Re w` spread
/// over `horizon` steps on both sides of the origin.
pub fn parabolic_disk(opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    let eps0 = 1.0;
    let family = MetricFamily::new(PlaneMetric, eps0, opts.levels.unwrap_or((0, 12)))?;
    let span = opts.horizon_or(512) as f64 + 24.0;
    let per_row = (opts.grid.unwrap_or(22_000) / ROWS.len()).max(8);
    let h = 2.0 * span / (per_row - 1) as f64;

    let mut pts = vec![Point::Plane(1.0, 0.0)];
    for v in ROWS {
        for u in linspace(-span, span, per_row) {
            let z = cayley(Complex64::new(u, v));
            pts.push(Point::Plane(z.re, z.im));
        }
    }
    // |C'(w)| <= 2 on the closed half-plane
    let row_gap = ROWS.windows(2).map(|w| w[1] - w[0]).fold(h, f64::max);
    let default = SampledCompact::deduplicated("default", pts, density_level(eps0, 2.0 * row_gap.hypot(h)))?;

    Ok(SystemInstance::from_parts(Parts {
        name: "parabolic-disk",
        dynamics: Arc::new(Parabolic),
        entourages: Arc::new(family),
        compacts: vec![default],
        non_wandering: vec![Point::Plane(1.0, 0.0)],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Linear, 1.0)),
        chart: None,
        coords: Arc::new(|p| match p {
            Point::Plane(x, y) => Coords::Plane(*x, *y),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Plane(x, y) if x.hypot(y) <= 1.0 + 1e-12 => Some(Point::Plane(x, y)),
            _ => None,
        }),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(p: Point) -> Complex64 {
        let (x, y) = p.plane().unwrap();
        Complex64::new(x, y)
    }

    #[test]
    fn fixed_point_and_closed_form() {
        let s = parabolic_disk(&CatalogOptions { grid: Some(2000), ..Default::default() }).unwrap();
        assert_eq!(s.step(&Point::Plane(1.0, 0.0)).unwrap(), Point::Plane(1.0, 0.0));
        // oracle: conjugate the translation through the Cayley transform by hand
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w = Complex64::new(rng.random_range(-20.0..20.0), rng.random_range(0.0..5.0));
            let got = z(s.step(&Point::Plane(cayley(w).re, cayley(w).im)).unwrap());
            assert!((got - cayley(w + 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn preserves_disk_and_inverts() {
        let s = parabolic_disk(&CatalogOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts: Vec<Point> = s.default_compact().points().iter().step_by(3).copied().collect();
        while pts.len() < 10_000 {
            let (r, t): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..std::f64::consts::TAU));
            pts.push(Point::Plane(r.sqrt() * t.cos(), r.sqrt() * t.sin()));
        }
        for p in &pts {
            let q = s.step(p).unwrap();
            assert!(z(q).norm() <= 1.0 + 1e-12);
            assert!((z(s.step_inv(&q).unwrap()) - z(*p)).norm() < 1e-12);
        }
    }

    #[test]
    fn samples_follow_the_translation() {
        let s = parabolic_disk(&CatalogOptions { horizon: Some(64), ..Default::default() }).unwrap();
        assert!(s.default_compact().len() >= 10_000);
        // z = 0 is w = i; after n steps it sits at C(n + i)
        let orbit = s.orbit(&Point::Plane(0.0, 0.0), 40).unwrap();
        let last = z(orbit[39]);
        assert!((last - cayley(Complex64::new(39.0, 1.0))).norm() < 1e-10);
    }
}
