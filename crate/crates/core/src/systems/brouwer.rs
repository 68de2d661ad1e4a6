use std::sync::{Arc, OnceLock};

use super::{foreign, CatalogOptions, Coords, Dynamics, Parts, SystemError, SystemInstance};
use crate::growth::ClassLabel;
use crate::uniformity::{ChordalPlaneMetric, Level, MetricFamily, Point, SampledCompact};

/// Curves are split into a turn (`1/(y(1-y)) <= D_TURN`, parametrized by
/// `y`) and two arms (parametrized by `D = c - x`).
const D_TURN: f64 = 6.0;

fn h(y: f64) -> f64 {
    1.0 / (y * (1.0 - y))
}

/// Slope `dx/dy` of the curve through height `y`, for `0 < y < 1`.
pub fn brouwer_dx_dy(y: f64) -> f64 {
    let p = y * (1.0 - y);
    (1.0 - 2.0 * y) / (p * p)
}

/// The `c` of the curve `x = 1/(y(y-1)) + c` through `(x, y)`.
pub fn brouwer_curve_parameter(x: f64, y: f64) -> f64 {
    x + h(y)
}

const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gl10(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, r) = ((a + b) / 2.0, (b - a) / 2.0);
    let mut s = 0.0;
    for i in 0..5 {
        s += GL_W[i] * (f(m - r * GL_X[i]) + f(m + r * GL_X[i]));
    }
    s * r
}

/// Adaptive 10-point Gauss-Legendre; signed when `b < a`.
fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
        let m = (a + b) / 2.0;
        let (l, r) = (gl10(f, a, m), gl10(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= 1e-15 * (1.0 + (l + r).abs()) {
            l + r
        } else {
            go(f, a, m, l, depth - 1) + go(f, m, b, r, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    go(f, a, b, gl10(f, a, b), 24)
}

fn turn_speed(y: f64) -> f64 {
    1f64.hypot(brouwer_dx_dy(y))
}

/// `ds/dD - 1` on an arm, in the variable `t = 1/D`, divided by `t²`.
fn arm_excess(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let w = 1.0 - 4.0 * t;
    let u = t.powi(4) / w;
    t * t / (w * ((1.0 + u).sqrt() + 1.0))
}

/// `∫_D^∞ (ds/dD - 1) dD`.
fn tail(d: f64) -> f64 {
    integrate(&arm_excess, 0.0, 1.0 / d)
}

fn arm_speed(d: f64) -> f64 {
    (1.0 + 1.0 / (d.powi(3) * (d - 4.0))).sqrt()
}

struct Geometry {
    y_lo: f64,
    y_hi: f64,
    sigma_turn: f64,
    tail_turn: f64,
}

fn geometry() -> &'static Geometry {
    static G: OnceLock<Geometry> = OnceLock::new();
    G.get_or_init(|| {
        let y_lo = (1.0 - (1.0 - 4.0 / D_TURN).sqrt()) / 2.0;
        Geometry {
            y_lo,
            y_hi: 1.0 - y_lo,
            sigma_turn: integrate(&turn_speed, y_lo, 0.5),
            tail_turn: tail(D_TURN),
        }
    })
}

/// Arc length from the end of the turn out to `D` along an arm.
fn arm_length(d: f64) -> f64 {
    d - D_TURN + geometry().tail_turn - tail(d)
}

/// `(c, σ)`: the curve and the signed arc length from its turning point
/// `(c - 4, 1/2)`, increasing downward.
fn to_curve(x: f64, y: f64) -> (f64, f64) {
    let g = geometry();
    let d = h(y);
    let sigma = if d <= D_TURN {
        integrate(&turn_speed, y, 0.5)
    } else {
        let a = g.sigma_turn + arm_length(d);
        if y < 0.5 {
            a
        } else {
            -a
        }
    };
    (x + d, sigma)
}

fn from_curve(c: f64, sigma: f64) -> Result<(f64, f64), String> {
    let g = geometry();
    if !(sigma.is_finite() && c.is_finite()) {
        return Err(format!("non-finite curve coordinates ({c}, {sigma})"));
    }
    if sigma.abs() <= g.sigma_turn {
        let y = solve_turn(sigma)?;
        return Ok((c - h(y), y));
    }
    let target = sigma.abs() - g.sigma_turn;
    let d = solve_arm(target)?;
    let y_low = 2.0 / (d * (1.0 + (1.0 - 4.0 / d).sqrt()));
    let y = if sigma > 0.0 { y_low } else { 1.0 - y_low };
    Ok((c - d, y))
}

/// `y` in the turn with `∫_y^{1/2} ds = sigma`; safeguarded Newton.
fn solve_turn(sigma: f64) -> Result<f64, String> {
    let g = geometry();
    let (mut lo, mut hi) = (g.y_lo, g.y_hi);
    let mut y = (0.5 - sigma / 2.0).clamp(lo, hi);
    let mut f = integrate(&turn_speed, y, 0.5) - sigma;
    for _ in 0..100 {
        // f decreases in y
        if f > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mut next = y + f / turn_speed(y);
        if !(next > lo && next < hi) {
            next = (lo + hi) / 2.0;
        }
        if (next - y).abs() <= 1e-16 || hi - lo <= 1e-16 {
            return Ok(next);
        }
        f -= integrate(&turn_speed, y, next);
        y = next;
        if f == 0.0 {
            return Ok(y);
        }
    }
    Err(format!("turn solve did not converge for arc length {sigma}"))
}

/// `D >= D_TURN` with `arm_length(D) = target`.
fn solve_arm(target: f64) -> Result<f64, String> {
    let g = geometry();
    let mut d = (target + D_TURN - g.tail_turn).max(D_TURN);
    for _ in 0..60 {
        let f = arm_length(d) - target;
        let next = (d - f / arm_speed(d)).max(D_TURN);
        if (next - d).abs() <= 4.0 * f64::EPSILON * d {
            return Ok(next);
        }
        d = next;
    }
    Err(format!("arm solve did not converge for arc length {target}"))
}

struct Brouwer;

impl Brouwer {
    fn strip(&self, p: &Point, x: f64, y: f64, ds: f64) -> Result<Point, SystemError> {
        let (c, s) = to_curve(x, y);
        let (x2, y2) = from_curve(c, s + ds).map_err(|reason| SystemError::Integration {
            point: p.to_string(),
            reason,
        })?;
        if !(y2 > 0.0 && y2 < 1.0) {
            return Err(SystemError::Integration {
                point: p.to_string(),
                reason: format!("left the strip at y = {y2}"),
            });
        }
        Ok(Point::Plane(x2, y2))
    }
}

impl Dynamics for Brouwer {
    fn step(&self, p: &Point) -> Result<Point, SystemError> {
        match *p {
            Point::Infinity => Ok(Point::Infinity),
            Point::Plane(x, y) if y >= 1.0 => Ok(Point::Plane(x + 1.0, y)),
            Point::Plane(x, y) if y <= 0.0 => Ok(Point::Plane(x - 1.0, y)),
            Point::Plane(x, y) => self.strip(p, x, y, 1.0),
            _ => Err(foreign("brouwer-sphere", p)),
        }
    }
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>> {
        Some(match *p {
            Point::Infinity => Ok(Point::Infinity),
            Point::Plane(x, y) if y >= 1.0 => Ok(Point::Plane(x - 1.0, y)),
            Point::Plane(x, y) if y <= 0.0 => Ok(Point::Plane(x + 1.0, y)),
            Point::Plane(x, y) => self.strip(p, x, y, -1.0),
            _ => Err(foreign("brouwer-sphere", p)),
        })
    }
}

/// Sampling layout for [`brouwer_sphere`].
///
/// The strip is sampled along curves `c = c_min, c_min + spacing, ...` up to
/// `(horizon + margin) / 2`. On each curve, points at arc-length steps
/// `1 / phases` run along the upper arm up to `x = 0`, starting far enough
/// left that every one of them comes back to `x = 0` on the lower arm within
/// `horizon + margin` steps. An orbit is then pinned down by the times of
/// its two passages near the origin, which is where the `n²` comes from.
/// The translation-zone rows go to a separate compact `zones`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrouwerConfig {
    pub horizon: usize,
    pub curve_spacing: f64,
    pub c_min: f64,
    pub phases: usize,
    pub margin: f64,
    /// Heights of sampled rows in the translation zones.
    pub zone_rows: Vec<f64>,
    pub zone_step: f64,
    /// Radii of the circles of 16 points near `∞`.
    pub ring_radii: Vec<f64>,
    pub levels: (Level, Level),
}

impl Default for BrouwerConfig {
    fn default() -> Self {
        BrouwerConfig {
            horizon: 256,
            curve_spacing: 1.0,
            c_min: 0.0,
            phases: 1,
            margin: 16.0,
            zone_rows: vec![1.0, 1.5, 3.0, 0.0, -0.5, -2.0],
            zone_step: 0.5,
            ring_radii: vec![1e3, 4e3, 1.6e4, 6.4e4],
            levels: (0, 10),
        }
    }
}

impl BrouwerConfig {
    /// Defaults with the horizon and levels taken from `opts`; a `grid`
    /// target adjusts the curve spacing.
    pub fn from_options(opts: &CatalogOptions) -> BrouwerConfig {
        let mut cfg = BrouwerConfig {
            horizon: opts.horizon_or(256),
            levels: opts.levels.unwrap_or((0, 10)),
            ..Default::default()
        };
        let target = opts.grid.unwrap_or(32_000) as f64;
        let unit = BrouwerConfig { curve_spacing: 1.0, ..cfg.clone() };
        let strip_unit = unit.curves().map(|c| unit.arc_range(c).map_or(0.0, |(lo, hi)| hi - lo)).sum::<f64>();
        let rest = (16 * cfg.ring_radii.len() + 1) as f64;
        cfg.curve_spacing = (strip_unit / (target - rest).max(target / 4.0)).clamp(0.1, 32.0);
        cfg
    }

    fn curves(&self) -> impl Iterator<Item = f64> + '_ {
        let top = (self.horizon as f64 + self.margin) / 2.0;
        let count = ((top - self.c_min) / self.curve_spacing).floor() as usize + 1;
        (0..count).map(move |i| self.c_min + i as f64 * self.curve_spacing)
    }

    /// Arc-length range `(lo, hi)` of the samples on curve `c`: `hi` is the
    /// upper-arm passage at `x = 0` (or the start of the turn), `lo` lies
    /// `horizon + margin` before the lower-arm passage.
    fn arc_range(&self, c: f64) -> Option<(f64, f64)> {
        let g = geometry();
        let reach = |d: f64| if d > D_TURN { g.sigma_turn + arm_length(d) } else { g.sigma_turn };
        let hi = -reach(c);
        let lo = reach(c) - (self.horizon as f64 + self.margin);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Brouwer's fixed-point-free map of the plane, extended to the sphere by
/// fixing `∞`. Strip steps move arc length 1 down the curve `x = 1/(y(y-1)) + c`.
pub fn brouwer_sphere(cfg: &BrouwerConfig) -> Result<SystemInstance, SystemError> {
    if cfg.curve_spacing <= 0.0 || cfg.phases == 0 || cfg.zone_step <= 0.0 {
        return Err(SystemError::InvalidParameter(format!("bad sampling layout {cfg:?}")));
    }
    let family = MetricFamily::new(ChordalPlaneMetric, 1.0, cfg.levels)?;
    let mut pts = Vec::new();
    for c in cfg.curves() {
        let Some((lo, hi)) = cfg.arc_range(c) else { continue };
        let count = ((hi - lo) * cfg.phases as f64).floor() as usize;
        for m in 0..=count {
            let (x, y) = from_curve(c, lo + m as f64 / cfg.phases as f64).map_err(|reason| {
                SystemError::Integration { point: format!("curve {c}"), reason }
            })?;
            pts.push(Point::Plane(x, y));
        }
    }
    for &r in &cfg.ring_radii {
        pts.extend((0..16).map(|i| {
            let (s, c) = (i as f64 * std::f64::consts::TAU / 16.0).sin_cos();
            Point::Plane(r * c, r * s)
        }));
    }
    pts.push(Point::Infinity);
    let default = SampledCompact::deduplicated("default", pts, None)?;
    let span = cfg.horizon as f64 + cfg.margin;
    let per_row = (2.0 * span / cfg.zone_step) as usize + 1;
    let rows = cfg
        .zone_rows
        .iter()
        .flat_map(|&y| (0..per_row).map(move |i| Point::Plane(-span + i as f64 * cfg.zone_step, y)))
        .collect();
    let zones = SampledCompact::new("zones", rows, None)?;
    let square = SampledCompact::new(
        "square",
        (0..21).flat_map(|i| (0..21).map(move |j| Point::Plane(i as f64 / 20.0, j as f64 / 20.0))).collect(),
        None,
    )?;

    Ok(SystemInstance::from_parts(Parts {
        name: "brouwer-sphere",
        dynamics: Arc::new(Brouwer),
        entourages: Arc::new(family),
        compacts: vec![default, zones, square],
        non_wandering: vec![Point::Infinity],
        non_wandering_everything: false,
        expected: Some((ClassLabel::Polynomial, 2.0)),
        chart: None,
        coords: Arc::new(|p| match p {
            Point::Plane(x, y) => Coords::Plane(*x, *y),
            _ => Coords::Ideal,
        }),
        from_coords: Arc::new(|c| match c {
            Coords::Plane(x, y) => Some(Point::Plane(x, y)),
            Coords::Ideal => Some(Point::Infinity),
            _ => None,
        }),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniformity::Metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xy(p: Point) -> (f64, f64) {
        p.plane().unwrap()
    }

    /// Adaptive Simpson in `y`, independent of the arm/turn split.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = (a + b) / 2.0;
            let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                go(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + go(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f((a + b) / 2.0));
        go(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    fn small() -> SystemInstance {
        brouwer_sphere(&BrouwerConfig { horizon: 16, curve_spacing: 4.0, ..Default::default() }).unwrap()
    }

    #[test]
    fn translation_zones() {
        let s = small();
        assert_eq!(s.step(&Point::Plane(5.0, 2.0)).unwrap(), Point::Plane(6.0, 2.0));
        assert_eq!(s.step(&Point::Plane(5.0, -1.0)).unwrap(), Point::Plane(4.0, -1.0));
        assert_eq!(s.step(&Point::Plane(0.0, 1.0)).unwrap(), Point::Plane(1.0, 1.0));
        assert_eq!(s.step(&Point::Infinity).unwrap(), Point::Infinity);
    }

    #[test]
    fn strip_steps_have_unit_arc_length() {
        let s = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (x, y) = (rng.random_range(-30.0..30.0), rng.random_range(0.02..0.98));
            let (x2, y2) = xy(s.step(&Point::Plane(x, y)).unwrap());
            assert!(y2 < y);
            let c = brouwer_curve_parameter(x, y);
            assert!((brouwer_curve_parameter(x2, y2) - c).abs() < 1e-9 * (1.0 + c.abs()));
            let len = simpson(&|t| 1f64.hypot(brouwer_dx_dy(t)), y2, y, 1e-12);
            assert!((len - 1.0).abs() < 1e-6, "({x}, {y}) -> ({x2}, {y2}): {len}");
        }
    }

    #[test]
    fn inverse_round_trip_on_samples() {
        let s = small();
        for p in s.default_compact().points() {
            let back = s.step_inv(&s.step(p).unwrap()).unwrap();
            assert!(ChordalPlaneMetric.distance(&back, p) < 1e-9, "{p} -> {back}");
        }
    }

    #[test]
    fn deep_arm_points_round_trip() {
        let s = small();
        for (c, x) in [(300.0, -500.0), (2.0, -700.0), (140.0, 120.0)] {
            let d: f64 = c - x;
            let y = 1.0 - 2.0 / (d * (1.0 + (1.0 - 4.0 / d).sqrt()));
            let p = Point::Plane(x, y);
            let q = s.step(&p).unwrap();
            let (x2, _) = xy(q);
            // far out on the upper arm a step is almost exactly +1 in x
            assert!((x2 - x - 1.0).abs() < 1e-3);
            let (bx, by) = xy(s.step_inv(&q).unwrap());
            assert!((bx - x).abs() < 1e-9 && (by - y).abs() < 1e-12);
        }
    }

    #[test]
    fn default_layout_size() {
        let s = brouwer_sphere(&BrouwerConfig::from_options(&CatalogOptions::default())).unwrap();
        let n = s.default_compact().len();
        assert!((20_000..40_000).contains(&n), "{n}");
    }
}
