use std::cmp::Ordering;
use std::fmt;

/// Which endpoint of `[0, 1]` a [`Dyadic`] is measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    Zero,
    One,
}

/// An exact dyadic rational in `[0, 1]`, stored as `m / 2^e` (anchored at
/// zero) or `1 - m / 2^e` (anchored at one).
///
/// Values below one half are anchored at zero and the rest at one, with `m`
/// odd (or zero). Both ends of the interval therefore keep full relative
/// precision, which is what orbits of north-south maps need: points
/// `2^-500` away from the repeller stay representable with tiny mantissas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: u64,
    exp: u32,
    anchor: Anchor,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic {
        mant: 0,
        exp: 0,
        anchor: Anchor::Zero,
    };
    pub const ONE: Dyadic = Dyadic {
        mant: 0,
        exp: 0,
        anchor: Anchor::One,
    };
    pub const HALF: Dyadic = Dyadic {
        mant: 1,
        exp: 1,
        anchor: Anchor::One,
    };

    /// `num / 2^exp`, or `None` if it exceeds one or does not fit.
    pub fn new(num: u128, exp: u32) -> Option<Dyadic> {
        Dyadic::normalize(Anchor::Zero, num, exp)
    }

    /// `1 - num / 2^exp`, or `None` if negative or it does not fit.
    pub fn one_minus(num: u128, exp: u32) -> Option<Dyadic> {
        Dyadic::normalize(Anchor::One, num, exp)
    }

    pub(crate) fn from_parts(mant: u64, exp: u32, anchor: Anchor) -> Dyadic {
        Dyadic { mant, exp, anchor }
    }

    pub fn parts(&self) -> (u64, u32, Anchor) {
        (self.mant, self.exp, self.anchor)
    }

    fn normalize(anchor: Anchor, mut m: u128, mut e: u32) -> Option<Dyadic> {
        if m == 0 {
            return Some(Dyadic { mant: 0, exp: 0, anchor });
        }
        let tz = m.trailing_zeros().min(e);
        m >>= tz;
        e -= tz;
        // reject values outside [0, 1]: m / 2^e <= 1
        if e < 128 && m > (1u128 << e) {
            return None;
        }
        if e == 0 {
            // m == 1: the value is the opposite endpoint
            let other = match anchor {
                Anchor::Zero => Anchor::One,
                Anchor::One => Anchor::Zero,
            };
            return Some(Dyadic { mant: 0, exp: 0, anchor: other });
        }
        // m / 2^e >= 1/2 iff m >= 2^(e-1); such values live at the other anchor
        let big = e <= 128 && m >= (1u128 << (e - 1));
        if big && e >= 128 {
            return None;
        }
        let flip = match anchor {
            Anchor::Zero => big,
            // 1 - m/2^e < 1/2 iff m/2^e > 1/2
            Anchor::One => big && m != (1u128 << (e - 1)),
        };
        let (anchor, m) = if flip {
            let other = match anchor {
                Anchor::Zero => Anchor::One,
                Anchor::One => Anchor::Zero,
            };
            (other, (1u128 << e) - m)
        } else {
            (anchor, m)
        };
        let tz = m.trailing_zeros().min(e);
        let (m, e) = (m >> tz, e - tz);
        let mant = u64::try_from(m).ok()?;
        Some(Dyadic { mant, exp: e, anchor })
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    /// Distance to the anchor endpoint, `m / 2^e`, as a float.
    pub fn offset_f64(&self) -> f64 {
        if self.mant == 0 {
            return 0.0;
        }
        ldexp(self.mant as f64, -(self.exp as i64))
    }

    pub fn to_f64(&self) -> f64 {
        match self.anchor {
            Anchor::Zero => self.offset_f64(),
            Anchor::One => 1.0 - self.offset_f64(),
        }
    }

    /// `|self - other|` as a float, without cancellation near the endpoints.
    pub fn distance(&self, other: &Dyadic) -> f64 {
        match (self.anchor, other.anchor) {
            (Anchor::Zero, Anchor::Zero) | (Anchor::One, Anchor::One) => {
                (self.offset_f64() - other.offset_f64()).abs()
            }
            _ => 1.0 - self.offset_f64() - other.offset_f64(),
        }
    }

    /// `x / 2`.
    pub fn half(&self) -> Option<Dyadic> {
        match self.anchor {
            Anchor::Zero => Dyadic::normalize(Anchor::Zero, self.mant as u128, self.exp.checked_add(1)?),
            // (1 - m/2^e)/2 = 1/2 - m/2^(e+1) = (2^e - m)/2^(e+1)
            Anchor::One => {
                if self.exp >= 127 {
                    return None;
                }
                Dyadic::normalize(
                    Anchor::Zero,
                    (1u128 << self.exp) - self.mant as u128,
                    self.exp + 1,
                )
            }
        }
    }

    /// `2x`, or `None` above one half.
    pub fn double(&self) -> Option<Dyadic> {
        match self.anchor {
            Anchor::Zero if self.mant == 0 => Some(*self),
            Anchor::Zero => Dyadic::normalize(Anchor::Zero, self.mant as u128, self.exp - 1),
            Anchor::One if *self == Dyadic::HALF => Some(Dyadic::ONE),
            Anchor::One => None,
        }
    }

    /// `2x - 1`, or `None` below one half.
    pub fn double_minus_one(&self) -> Option<Dyadic> {
        match self.anchor {
            Anchor::One if self.mant == 0 => Some(*self),
            Anchor::One => Dyadic::normalize(Anchor::One, self.mant as u128, self.exp - 1),
            Anchor::Zero => None,
        }
    }

    /// `(x + 1) / 2`.
    pub fn half_up(&self) -> Option<Dyadic> {
        match self.anchor {
            // (1 + m/2^e)/2 = (2^e + m)/2^(e+1)
            Anchor::Zero => {
                if self.exp >= 126 {
                    return None;
                }
                Dyadic::normalize(
                    Anchor::Zero,
                    (1u128 << self.exp) + self.mant as u128,
                    self.exp + 1,
                )
            }
            Anchor::One => Dyadic::normalize(Anchor::One, self.mant as u128, self.exp.checked_add(1)?),
        }
    }

    /// Compares `self` with `num / den` exactly, for small `num`, `den`.
    pub fn cmp_ratio(&self, num: u64, den: u64) -> Ordering {
        debug_assert!(den > 0 && num <= den);
        // anchor zero: m/2^e vs num/den  <=>  m*den vs num*2^e
        // anchor one:  1 - m/2^e vs num/den  <=>  (den-num)*2^e vs m*den
        let (m, e) = (self.mant as u128, self.exp);
        let (lhs, rhs_coef) = match self.anchor {
            Anchor::Zero => (m * den as u128, num as u128),
            Anchor::One => (m * den as u128, (den - num) as u128),
        };
        // rhs = rhs_coef * 2^e
        let rhs_cmp = if rhs_coef == 0 {
            lhs.cmp(&0)
        } else if e >= 128 || (128 - rhs_coef.leading_zeros()) + e > 127 {
            Ordering::Less
        } else {
            lhs.cmp(&(rhs_coef << e))
        };
        match self.anchor {
            Anchor::Zero => rhs_cmp,
            Anchor::One => rhs_cmp.reverse(),
        }
    }

    /// `floor(x * 2^k)` and whether `x * 2^k` is an integer, for `k < 63`.
    pub fn scaled_floor(&self, k: u32) -> (u64, bool) {
        debug_assert!(k < 63);
        let (m, e) = (self.mant, self.exp);
        match self.anchor {
            Anchor::Zero => {
                if e <= k {
                    (m << (k - e), true)
                } else {
                    (if e - k >= 64 { 0 } else { m >> (e - k) }, false)
                }
            }
            Anchor::One => {
                let top = 1u64 << k;
                if e <= k {
                    (top - (m << (k - e)), true)
                } else {
                    let q = if e - k >= 64 { 0 } else { m >> (e - k) };
                    (top - q - 1, false)
                }
            }
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.anchor, other.anchor) {
            (Anchor::Zero, Anchor::One) => Ordering::Less,
            (Anchor::One, Anchor::Zero) => Ordering::Greater,
            (Anchor::Zero, Anchor::Zero) => cmp_offsets(self, other),
            (Anchor::One, Anchor::One) => cmp_offsets(other, self),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares `a.m / 2^a.e` with `b.m / 2^b.e`.
fn cmp_offsets(a: &Dyadic, b: &Dyadic) -> Ordering {
    if a.mant == 0 || b.mant == 0 {
        return a.mant.cmp(&b.mant);
    }
    if a.exp == b.exp {
        return a.mant.cmp(&b.mant);
    }
    // bring both to the larger exponent: compare m_a * 2^(E-e_a) with m_b * 2^(E-e_b)
    let (shift_a, shift_b) = if a.exp > b.exp {
        (0, a.exp - b.exp)
    } else {
        (b.exp - a.exp, 0)
    };
    let shifted = |m: u64, s: u32| -> Option<u128> {
        if s >= 64 {
            None
        } else {
            Some((m as u128) << s)
        }
    };
    match (shifted(a.mant, shift_a), shifted(b.mant, shift_b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        // an overflowing shift exceeds any unshifted 64-bit mantissa
        (None, _) => Ordering::Greater,
        (_, None) => Ordering::Less,
    }
}

fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(e as i32)
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.anchor, self.mant) {
            (Anchor::Zero, 0) => f.write_str("0"),
            (Anchor::One, 0) => f.write_str("1"),
            (Anchor::Zero, m) => write!(f, "{m}/2^{}", self.exp),
            (Anchor::One, m) => write!(f, "1-{m}/2^{}", self.exp),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: u128, e: u32) -> Dyadic {
        Dyadic::new(n, e).unwrap()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(d(1, 1), Dyadic::HALF);
        assert_eq!(d(2, 2), Dyadic::HALF);
        assert_eq!(d(4, 2), Dyadic::ONE);
        assert_eq!(d(0, 9), Dyadic::ZERO);
        assert_eq!(d(3, 2), Dyadic::one_minus(1, 2).unwrap());
        assert_eq!(Dyadic::one_minus(3, 2).unwrap(), d(1, 2));
        assert!(Dyadic::new(5, 2).is_none());
        assert_eq!(d(3, 2).to_f64(), 0.75);
    }

    #[test]
    fn arithmetic() {
        assert_eq!(Dyadic::HALF.half().unwrap(), d(1, 2));
        assert_eq!(d(3, 2).double_minus_one().unwrap(), Dyadic::HALF);
        assert_eq!(d(1, 3).double().unwrap(), d(1, 2));
        assert_eq!(d(1, 2).half_up().unwrap(), d(5, 3));
        let near_one = Dyadic::one_minus(3, 500).unwrap();
        assert_eq!(near_one.double_minus_one().unwrap(), Dyadic::one_minus(3, 499).unwrap());
        assert_eq!(near_one.half_up().unwrap(), Dyadic::one_minus(3, 501).unwrap());
        assert!((near_one.distance(&Dyadic::ONE) - 3.0 * 2f64.powi(-500)).abs() < 1e-160);
    }

    #[test]
    fn ordering_is_exact() {
        let a = Dyadic::one_minus(1, 400).unwrap();
        let b = Dyadic::one_minus(1, 401).unwrap();
        assert!(a < b && b < Dyadic::ONE);
        assert!(d(1, 400) > d(1, 401) && d(1, 401) > Dyadic::ZERO);
        assert!(d(1, 3) < Dyadic::HALF);
        assert_eq!(d(2, 3).cmp(&d(1, 2)), Ordering::Equal);
    }

    #[test]
    fn ratio_comparison() {
        assert_eq!(d(1, 1).cmp_ratio(2, 3), Ordering::Less);
        assert_eq!(d(3, 2).cmp_ratio(2, 3), Ordering::Greater);
        assert_eq!(d(1, 2).cmp_ratio(1, 3), Ordering::Less);
        assert_eq!(Dyadic::one_minus(1, 300).unwrap().cmp_ratio(2, 3), Ordering::Greater);
        assert_eq!(d(1, 300).cmp_ratio(1, 3), Ordering::Less);
        assert_eq!(Dyadic::ONE.cmp_ratio(1, 1), Ordering::Equal);
    }

    #[test]
    fn scaled_floor() {
        assert_eq!(d(3, 4).scaled_floor(2), (0, false));
        assert_eq!(d(1, 2).scaled_floor(2), (1, true));
        assert_eq!(d(3, 2).scaled_floor(3), (6, true));
        assert_eq!(Dyadic::one_minus(1, 90).unwrap().scaled_floor(4), (15, false));
        assert_eq!(Dyadic::one_minus(5, 5).unwrap().scaled_floor(2), (3, false));
        assert_eq!(Dyadic::ONE.scaled_floor(3), (8, true));
    }
}
