//! Catalog of concrete dynamical systems.
//!
//! Every system bundles its step maps, an entourage base, named sample sets
//! and the declared non-wandering set. Sample sets for parabolic and
//! north-south systems are laid out uniformly in fundamental-domain
//! coordinates (log-odds, half-plane, curve arc length), since a uniform grid
//! in natural coordinates only feeds the counters for `log(1/h)` steps.

mod arrow;
mod brouwer;
mod circle;
mod disk;
mod interval;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::growth::{ClassLabel, GrowthClass};
use crate::uniformity::{EntourageFamily, Level, Point, SampledCompact, UniformityError};

pub use arrow::{double_arrow_north_south, semiconjugacy_projection, split_base_interval, Projection};
pub use brouwer::{brouwer_curve_parameter, brouwer_dx_dy, brouwer_sphere, BrouwerConfig};
pub use circle::{circle_rotation, doubling_map};
pub use disk::parabolic_disk;
pub use interval::{
    chordal_distance_to_infinity, log_odds, north_south_interval, translation_line_compactified,
    INFINITY_BALL_RADIUS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("system '{0}' has no inverse")]
    NotInvertible(String),
    #[error("state {point} does not belong to system '{system}'")]
    ForeignState { system: String, point: String },
    #[error("arc-length integration failed at {point}: {reason}")]
    Integration { point: String, reason: String },
    #[error("exact arithmetic overflow at {0}")]
    Precision(String),
    #[error("unknown compact '{name}' for system '{system}'")]
    UnknownCompact { system: String, name: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Uniformity(#[from] UniformityError),
}

/// Forward and (optionally) backward step of a system.
pub trait Dynamics: Send + Sync {
    fn step(&self, p: &Point) -> Result<Point, SystemError>;
    /// `None` for non-invertible maps.
    fn step_inv(&self, p: &Point) -> Option<Result<Point, SystemError>>;
}

/// Coordinates in which coding shapes are read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coords {
    Line(f64),
    Plane(f64, f64),
    Circle(f64),
    /// A point at infinity; it lies in no bounded shape.
    Ideal,
}

/// Chart on the wandering part of an interval system in which the map is
/// an explicit affine action, so that images of intervals are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactChart {
    /// Coordinate `t`, map `t -> t + 1`.
    Translation,
    /// Coordinate `x` in `(0, 1)` with odds `x / (1 - x)` halved by each step.
    HalvingOdds,
}

type CoordFn = dyn Fn(&Point) -> Coords + Send + Sync;
type FromCoordFn = dyn Fn(Coords) -> Option<Point> + Send + Sync;

/// A dynamical system with everything the counters need.
#[derive(Clone)]
pub struct SystemInstance {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    entourages: Arc<dyn EntourageFamily>,
    compacts: Vec<SampledCompact>,
    non_wandering: Vec<Point>,
    non_wandering_everything: bool,
    expected_class: Option<GrowthClass>,
    chart: Option<ExactChart>,
    coords: Arc<CoordFn>,
    from_coords: Arc<FromCoordFn>,
    power: u32,
    inverted: bool,
}

impl fmt::Debug for SystemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemInstance")
            .field("name", &self.name)
            .field("entourages", &self.entourages.describe())
            .field("compacts", &self.compacts.iter().map(|c| (c.label(), c.len())).collect::<Vec<_>>())
            .field("non_wandering", &self.non_wandering)
            .field("power", &self.power)
            .field("inverted", &self.inverted)
            .finish()
    }
}

pub(crate) struct Parts {
    pub name: &'static str,
    pub dynamics: Arc<dyn Dynamics>,
    pub entourages: Arc<dyn EntourageFamily>,
    pub compacts: Vec<SampledCompact>,
    pub non_wandering: Vec<Point>,
    pub non_wandering_everything: bool,
    pub expected: Option<(ClassLabel, f64)>,
    pub chart: Option<ExactChart>,
    pub coords: Arc<CoordFn>,
    pub from_coords: Arc<FromCoordFn>,
}

impl SystemInstance {
    pub(crate) fn from_parts(p: Parts) -> SystemInstance {
        SystemInstance {
            name: p.name.to_string(),
            dynamics: p.dynamics,
            entourages: p.entourages,
            compacts: p.compacts,
            non_wandering: p.non_wandering,
            non_wandering_everything: p.non_wandering_everything,
            expected_class: p.expected.map(|(label, degree)| GrowthClass {
                label,
                degree,
                rate: 0.0,
                fit_residual: 0.0,
            }),
            chart: p.chart,
            coords: p.coords,
            from_coords: p.from_coords,
            power: 1,
            inverted: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Name including power and inversion, e.g. `rotation^3` or `north-south-interval^-1`.
    pub fn display_name(&self) -> String {
        match (self.power, self.inverted) {
            (1, false) => self.name.clone(),
            (r, false) => format!("{}^{r}", self.name),
            (r, true) => format!("{}^-{r}", self.name),
        }
    }

    pub fn step(&self, p: &Point) -> Result<Point, SystemError> {
        let mut q = *p;
        for _ in 0..self.power {
            q = if self.inverted {
                self.dynamics
                    .step_inv(&q)
                    .ok_or_else(|| SystemError::NotInvertible(self.name.clone()))??
            } else {
                self.dynamics.step(&q)?
            };
        }
        Ok(q)
    }

    pub fn step_inv(&self, p: &Point) -> Result<Point, SystemError> {
        let mut q = *p;
        for _ in 0..self.power {
            q = if self.inverted {
                self.dynamics.step(&q)?
            } else {
                self.dynamics
                    .step_inv(&q)
                    .ok_or_else(|| SystemError::NotInvertible(self.name.clone()))??
            };
        }
        Ok(q)
    }

    pub fn is_invertible(&self) -> bool {
        self.dynamics.step_inv(&self.probe_point()).is_some()
    }

    fn probe_point(&self) -> Point {
        self.default_compact().points()[0]
    }

    /// The `r`-th iterate as a system of its own.
    pub fn power(&self, r: u32) -> Result<SystemInstance, SystemError> {
        if r == 0 {
            return Err(SystemError::InvalidParameter("power must be >= 1".into()));
        }
        let mut s = self.clone();
        s.power = self.power * r;
        s.chart = if s.power == 1 { self.chart } else { None };
        Ok(s)
    }

    /// The inverse map as a system of its own.
    pub fn inverse(&self) -> Result<SystemInstance, SystemError> {
        if !self.is_invertible() {
            return Err(SystemError::NotInvertible(self.name.clone()));
        }
        let mut s = self.clone();
        s.inverted = !self.inverted;
        s.chart = None;
        Ok(s)
    }

    pub fn entourages(&self) -> &dyn EntourageFamily {
        self.entourages.as_ref()
    }

    pub fn entourages_arc(&self) -> Arc<dyn EntourageFamily> {
        self.entourages.clone()
    }

    pub fn default_compact(&self) -> &SampledCompact {
        &self.compacts[0]
    }

    pub fn compacts(&self) -> &[SampledCompact] {
        &self.compacts
    }

    pub fn compact(&self, label: &str) -> Result<&SampledCompact, SystemError> {
        self.compacts
            .iter()
            .find(|c| c.label() == label)
            .ok_or_else(|| SystemError::UnknownCompact {
                system: self.name.clone(),
                name: label.to_string(),
            })
    }

    /// Replaces or adds a named sample set.
    pub fn with_compact(mut self, compact: SampledCompact) -> SystemInstance {
        if let Some(slot) = self.compacts.iter_mut().find(|c| c.label() == compact.label()) {
            *slot = compact;
        } else {
            self.compacts.push(compact);
        }
        self
    }

    pub fn non_wandering(&self) -> &[Point] {
        &self.non_wandering
    }

    pub fn non_wandering_everything(&self) -> bool {
        self.non_wandering_everything
    }

    /// Documentation only; no algorithm reads it.
    pub fn expected_class(&self) -> Option<&GrowthClass> {
        self.expected_class.as_ref()
    }

    pub fn exact_chart(&self) -> Option<ExactChart> {
        self.chart
    }

    pub fn coords(&self, p: &Point) -> Coords {
        (self.coords)(p)
    }

    pub fn point_at(&self, c: Coords) -> Option<Point> {
        (self.from_coords)(c)
    }

    /// Orbit `p, f(p), ..., f^{len-1}(p)`.
    pub fn orbit(&self, p: &Point, len: usize) -> Result<Vec<Point>, SystemError> {
        let mut out = Vec::with_capacity(len);
        let mut q = *p;
        for i in 0..len {
            out.push(q);
            if i + 1 < len {
                q = self.step(&q)?;
            }
        }
        Ok(out)
    }

    /// Checks that declared non-wandering points are fixed.
    pub fn verify_non_wandering(&self) -> Result<(), SystemError> {
        for p in &self.non_wandering {
            let q = self.step(p)?;
            if q != *p {
                return Err(SystemError::InvalidParameter(format!(
                    "declared non-wandering point {p} moves to {q}"
                )));
            }
        }
        Ok(())
    }
}

/// System names accepted by [`build`].
pub const SYSTEM_NAMES: [&str; 7] = [
    "north-south-interval",
    "rotation",
    "doubling",
    "brouwer-sphere",
    "parabolic-disk",
    "double-arrow",
    "translation-line",
];

/// Sampling knobs shared by the catalog constructors; `None` picks the
/// per-system default.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CatalogOptions {
    /// Target number of samples in the default compact.
    pub grid: Option<usize>,
    /// Longest orbit length the samples must keep feeding; parabolic and
    /// north-south samples extend this many steps into the repelling end.
    pub horizon: Option<usize>,
    /// Rotation angle.
    pub alpha: Option<f64>,
    /// Entourage level range.
    pub levels: Option<(Level, Level)>,
}

impl CatalogOptions {
    pub(crate) fn horizon_or(&self, d: usize) -> usize {
        self.horizon.unwrap_or(d).max(1)
    }
}

/// Builds a catalog system by name.
pub fn build(name: &str, opts: &CatalogOptions) -> Result<SystemInstance, SystemError> {
    match name {
        "north-south-interval" => north_south_interval(opts),
        "rotation" => circle_rotation(opts.alpha.unwrap_or(GOLDEN_ANGLE), opts),
        "doubling" => doubling_map(opts),
        "brouwer-sphere" => brouwer_sphere(&BrouwerConfig::from_options(opts)),
        "parabolic-disk" => parabolic_disk(opts),
        "double-arrow" => double_arrow_north_south(opts),
        "translation-line" => translation_line_compactified(opts),
        other => Err(SystemError::UnknownSystem(other.to_string())),
    }
}

/// Default rotation angle `(sqrt 5 - 1) / 2`.
pub const GOLDEN_ANGLE: f64 = 0.618_033_988_749_894_9;

pub(crate) fn foreign(system: &str, p: &Point) -> SystemError {
    SystemError::ForeignState {
        system: system.to_string(),
        point: p.to_string(),
    }
}

/// Evenly spaced values `lo, ..., hi` (both included).
pub(crate) fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let steps = count.max(2) - 1;
    (0..=steps).map(move |i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds_every_name() {
        let opts = CatalogOptions {
            grid: Some(400),
            horizon: Some(32),
            ..Default::default()
        };
        for name in SYSTEM_NAMES {
            let s = build(name, &opts).unwrap();
            assert_eq!(s.name(), name);
            s.verify_non_wandering().unwrap();
            assert!(!s.default_compact().is_empty());
        }
        assert_eq!(
            build("lorenz", &opts).unwrap_err(),
            SystemError::UnknownSystem("lorenz".into())
        );
    }

    #[test]
    fn powers_and_inverses() {
        let s = build("translation-line", &CatalogOptions::default()).unwrap();
        let p = Point::Real(0.5);
        assert_eq!(s.power(3).unwrap().step(&p).unwrap(), Point::Real(3.5));
        assert_eq!(s.inverse().unwrap().step(&p).unwrap(), Point::Real(-0.5));
        assert_eq!(s.inverse().unwrap().power(2).unwrap().step_inv(&p).unwrap(), Point::Real(2.5));
        let d = build("doubling", &CatalogOptions::default()).unwrap();
        assert!(!d.is_invertible());
        assert!(matches!(d.inverse(), Err(SystemError::NotInvertible(_))));
        assert!(matches!(d.step_inv(&Point::Real(0.1)), Err(SystemError::NotInvertible(_))));
    }
}
