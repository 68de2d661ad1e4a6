use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::dyadic::{Anchor, Dyadic};

/// Side tag of a double-arrow point: `(x, 0)` sits just below `(x, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn bit(self) -> u8 {
        match self {
            Side::Lower => 0,
            Side::Upper => 1,
        }
    }
}

/// A point `(x, s)` of the double arrow, ordered lexicographically.
///
/// Stored flat so that a [`Point`] stays at 24 bytes; orbit caches hold
/// millions of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArrowPoint {
    mant: u64,
    exp: u32,
    anchor: Anchor,
    side: Side,
}

impl ArrowPoint {
    pub fn new(x: Dyadic, side: Side) -> ArrowPoint {
        let (mant, exp, anchor) = x.parts();
        ArrowPoint {
            mant,
            exp,
            anchor,
            side,
        }
    }

    pub fn x(&self) -> Dyadic {
        Dyadic::from_parts(self.mant, self.exp, self.anchor)
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

impl Ord for ArrowPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x().cmp(&other.x()).then(self.side.cmp(&other.side))
    }
}

impl PartialOrd for ArrowPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A state of some system. How coordinates are read depends on the system:
/// circles use `Real(x)` with `x` in `[0, 1)`, the north-south interval uses
/// `Real(t)` with `t` the base-2 log-odds, and so on.
#[derive(Clone, Copy, Debug)]
pub enum Point {
    Real(f64),
    Plane(f64, f64),
    Arrow(ArrowPoint),
    Exact(Dyadic),
    Infinity,
}

fn canon(x: f64) -> u64 {
    // +0.0 and -0.0 are the same coordinate
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => canon(*a) == canon(*b),
            (Point::Plane(a, b), Point::Plane(c, d)) => canon(*a) == canon(*c) && canon(*b) == canon(*d),
            (Point::Arrow(a), Point::Arrow(b)) => a == b,
            (Point::Exact(a), Point::Exact(b)) => a == b,
            (Point::Infinity, Point::Infinity) => true,
            _ => false,
        }
    }
}

impl Eq for Point {}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Point::Real(a) => {
                0u8.hash(state);
                canon(*a).hash(state);
            }
            Point::Plane(a, b) => {
                1u8.hash(state);
                canon(*a).hash(state);
                canon(*b).hash(state);
            }
            Point::Arrow(a) => {
                2u8.hash(state);
                a.hash(state);
            }
            Point::Exact(d) => {
                3u8.hash(state);
                d.hash(state);
            }
            Point::Infinity => 4u8.hash(state),
        }
    }
}

impl Point {
    pub fn arrow(x: Dyadic, side: Side) -> Point {
        Point::Arrow(ArrowPoint::new(x, side))
    }

    pub fn real(&self) -> Option<f64> {
        match self {
            Point::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn plane(&self) -> Option<(f64, f64)> {
        match self {
            Point::Plane(x, y) => Some((*x, *y)),
            _ => None,
        }
    }

    pub fn as_arrow(&self) -> Option<ArrowPoint> {
        match self {
            Point::Arrow(a) => Some(*a),
            _ => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Real(x) => write!(f, "{x}"),
            Point::Plane(x, y) => write!(f, "({x}, {y})"),
            Point::Arrow(a) => write!(f, "({}, {})", a.x(), a.side().bit()),
            Point::Exact(d) => write!(f, "{d}"),
            Point::Infinity => f.write_str("inf"),
        }
    }
}

/// Points serialize as their display string.
impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn equality_is_by_coordinates() {
        assert_eq!(Point::Real(0.0), Point::Real(-0.0));
        assert_ne!(Point::Real(0.5), Point::Exact(Dyadic::HALF));
        let lo = Point::arrow(Dyadic::HALF, Side::Lower);
        let hi = Point::arrow(Dyadic::HALF, Side::Upper);
        assert_ne!(lo, hi);
        let set: HashSet<Point> = [lo, hi, lo, Point::Infinity, Point::Infinity].into_iter().collect();
        assert_eq!(set.len(), 3);
    }

    #[test]
    fn arrow_order_is_lexicographic() {
        let q = Dyadic::new(1, 2).unwrap();
        let a = ArrowPoint::new(q, Side::Upper);
        let b = ArrowPoint::new(Dyadic::HALF, Side::Lower);
        let c = ArrowPoint::new(Dyadic::HALF, Side::Upper);
        assert!(a < b && b < c);
    }

    #[test]
    fn compact_layout() {
        assert_eq!(std::mem::size_of::<Point>(), 24);
    }
}
