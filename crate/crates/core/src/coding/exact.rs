//! Exact word, hitting and visit computations for interval systems whose
//! chart turns the map into a unit shift.
//!
//! In the chart coordinate `u` the map is `u -> u + sigma`. A time-0
//! position `u0` has its time-`i` image in `[A, B]` iff `u0` lies in
//! `[A - sigma i, B - sigma i]`, so every word is decided by the order of
//! these "breakpoints", and that order only needs the sign of
//! `u(a) - u(b) - d` for endpoints `a`, `b` and integers `d`.

use std::cmp::Ordering;

use num_rational::Ratio;

use super::{CodingError, Letter, INF_LETTER};
use crate::systems::ExactChart;

/// Largest endpoint numerator or denominator handled exactly.
const MAX_PART: i64 = 1 << 40;

/// A closed interval of chart values, tagged with its member.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ChartInterval {
    pub member: usize,
    pub lo: Value,
    pub hi: Value,
}

/// Translation: the coordinate itself. Halving odds: the odds `x / (1 - x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Value {
    num: i128,
    den: i128,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Chart {
    kind: ExactChart,
}

impl Chart {
    pub fn new(kind: ExactChart) -> Chart {
        Chart { kind }
    }

    /// Shift per step in chart units.
    fn sigma(&self) -> i64 {
        match self.kind {
            ExactChart::Translation => 1,
            ExactChart::HalvingOdds => -1,
        }
    }

    /// Chart value of the line coordinate `x`.
    pub fn value(&self, x: Ratio<i64>) -> Result<Value, CodingError> {
        let (p, q) = (*x.numer(), *x.denom());
        if p.abs() > MAX_PART || q > MAX_PART {
            return Err(CodingError::InvalidShape(format!("endpoint {x} is too large for exact arithmetic")));
        }
        match self.kind {
            ExactChart::Translation => Ok(Value { num: p as i128, den: q as i128 }),
            ExactChart::HalvingOdds => {
                if p <= 0 || p >= q {
                    return Err(CodingError::InvalidShape(format!("endpoint {x} is not inside (0, 1)")));
                }
                Ok(Value { num: p as i128, den: (q - p) as i128 })
            }
        }
    }

    /// Sign of `u(a) - u(b) - d`.
    pub fn cmp_shift(&self, a: &Value, b: &Value, d: i64) -> Ordering {
        match self.kind {
            ExactChart::Translation => {
                let lhs = a.num * b.den - (d as i128) * a.den * b.den;
                lhs.cmp(&(b.num * a.den))
            }
            ExactChart::HalvingOdds => {
                // a.num/a.den vs b.num/b.den * 2^d
                let (x, y) = ((a.num * b.den) as u128, (b.num * a.den) as u128);
                let (sx, sy) = if d >= 0 { (0, d as u32) } else { ((-d) as u32, 0) };
                cmp_scaled(x, sx, y, sy)
            }
        }
    }

    /// Breakpoint order: `u(a) - sigma i` against `u(b) - sigma j`.
    fn cmp_break(&self, a: &Value, i: i64, b: &Value, j: i64) -> Ordering {
        self.cmp_shift(a, b, self.sigma() * (i - j))
    }

    /// Whether `f^m` of the first interval meets the second.
    pub fn meets_after(&self, from: &ChartInterval, to: &ChartInterval, m: i64) -> bool {
        let s = self.sigma() * m;
        // [lo + s, hi + s] against [to.lo, to.hi]
        self.cmp_shift(&from.lo, &to.hi, -s) != Ordering::Greater
            && self.cmp_shift(&to.lo, &from.hi, s) != Ordering::Greater
    }

    /// All realized words of length `n`, one per cell of the breakpoint
    /// arrangement, with the number of letter choices clipped at `cap`.
    pub fn words(&self, intervals: &[ChartInterval], n: usize, cap: usize) -> (Vec<Vec<Letter>>, usize) {
        let mut points: Vec<(Value, i64)> = Vec::with_capacity(2 * intervals.len() * n);
        for iv in intervals {
            for i in 0..n as i64 {
                points.push((iv.lo, i));
                points.push((iv.hi, i));
            }
        }
        points.sort_by(|a, b| self.cmp_break(&a.0, a.1, &b.0, b.1));
        points.dedup_by(|a, b| self.cmp_break(&a.0, a.1, &b.0, b.1) == Ordering::Equal);
        let rank = |v: &Value, i: i64| -> usize {
            points
                .binary_search_by(|p| self.cmp_break(&p.0, p.1, v, i))
                .unwrap_or_else(|_| unreachable!("every breakpoint is ranked"))
        };
        // ranks[iv][i] = (rank of lo breakpoint, rank of hi breakpoint)
        let ranks: Vec<Vec<(usize, usize)>> = intervals
            .iter()
            .map(|iv| (0..n as i64).map(|i| (rank(&iv.lo, i), rank(&iv.hi, i))).collect())
            .collect();
        let members = intervals.iter().map(|iv| iv.member).max().map_or(0, |m| m + 1);
        let mut out = Vec::with_capacity(2 * points.len() + 1);
        let mut overflow = 0;
        // cell 2r + 1 is the point of rank r; cell 2r is the gap below it
        for cell in 0..=2 * points.len() {
            let inside = |&(lo, hi): &(usize, usize)| {
                if cell % 2 == 1 {
                    lo <= cell / 2 && cell / 2 <= hi
                } else {
                    // gap strictly between ranks cell/2 - 1 and cell/2
                    cell / 2 >= 1 && lo < cell / 2 && cell / 2 <= hi
                }
            };
            let letters: Vec<Vec<Letter>> = (0..n)
                .map(|i| {
                    let mut hit = vec![false; members];
                    for (iv, r) in intervals.iter().zip(&ranks) {
                        if inside(&r[i]) {
                            hit[iv.member] = true;
                        }
                    }
                    let v: Vec<Letter> = (0..members).filter(|&m| hit[m]).map(|m| m as Letter).collect();
                    if v.is_empty() {
                        vec![INF_LETTER]
                    } else {
                        v
                    }
                })
                .collect();
            if super::expand(&letters, cap, &mut out) {
                overflow += 1;
            }
        }
        (out, overflow)
    }

    /// `max_u #{i in [-bound, bound] : u + sigma i in region}`.
    pub fn max_visits(&self, region: &[ChartInterval], bound: i64) -> u64 {
        let mut best = 0;
        for start in region {
            for i0 in -bound..=bound {
                let count = region
                    .iter()
                    .map(|iv| {
                        (-bound..=bound)
                            .filter(|&i| {
                                self.cmp_break(&iv.lo, i, &start.lo, i0) != Ordering::Greater
                                    && self.cmp_break(&start.lo, i0, &iv.hi, i) != Ordering::Greater
                            })
                            .count() as u64
                    })
                    .sum();
                best = best.max(count);
            }
        }
        best
    }

    /// Largest `|t1 - t2| <= limit` with `f^t1(u)` in `a` and `f^t2(u)` in `b`
    /// for some `u`; `None` when no orbit visits both.
    pub fn max_gap(&self, a: &ChartInterval, b: &ChartInterval, limit: i64) -> Option<i64> {
        (-limit..=limit)
            .filter(|&d| self.meets_after(b, a, d))
            .map(i64::abs)
            .max()
    }
}

/// Compares `x 2^sx` with `y 2^sy`.
fn cmp_scaled(x: u128, sx: u32, y: u128, sy: u32) -> Ordering {
    let m = sx.min(sy);
    let (sx, sy) = (sx - m, sy - m);
    let shifted = |v: u128, s: u32| if s >= 128 || (s > 0 && v.leading_zeros() < s) { None } else { Some(v << s) };
    match (x, y) {
        (0, 0) => Ordering::Equal,
        (0, _) => Ordering::Less,
        (_, 0) => Ordering::Greater,
        _ => match (shifted(x, sx), shifted(y, sy)) {
            (Some(a), Some(b)) => a.cmp(&b),
            (None, _) => Ordering::Greater,
            (_, None) => Ordering::Less,
        },
    }
}
