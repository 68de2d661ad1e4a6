//! Finite-horizon orders of growth.
//!
//! A [`GrowthSeries`] stands for the class `[a(n)]` of a non-decreasing
//! sequence. Values are kept together with their natural logarithms so that
//! series such as `e^{3n}` survive long horizons without overflowing.

mod expr;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{parse_expr, parse_sequence, Expr, ParseError, ParseOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),
    #[error("tail start {tail_start} outside 1..={max} for horizon {horizon}")]
    TailOutOfRange {
        tail_start: usize,
        max: usize,
        horizon: usize,
    },
    #[error("degenerate tail: {0} points, need at least 3")]
    DegenerateTail(usize),
    #[error("empty series list")]
    EmptyList,
    #[error("empty series")]
    EmptySeries,
    #[error("negative value {value} at n={n}")]
    Negative { n: usize, value: f64 },
    #[error("value at n={n} is not a number")]
    NotANumber { n: usize },
    #[error("series decreases at n={n}: {prev} > {next}")]
    NotMonotone { n: usize, prev: f64, next: f64 },
    #[error("horizon {horizon} too short: {need}")]
    HorizonTooShort { horizon: usize, need: String },
    #[error("invalid band configuration: {0}")]
    InvalidBands(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Representative `a(1..=N)` of an order of growth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GrowthSeries {
    values: Vec<f64>,
    // ln a(n); -inf for zero entries
    ln: Vec<f64>,
}

impl TryFrom<Vec<f64>> for GrowthSeries {
    type Error = GrowthError;
    fn try_from(values: Vec<f64>) -> Result<Self, GrowthError> {
        GrowthSeries::new(values)
    }
}

impl From<GrowthSeries> for Vec<f64> {
    fn from(s: GrowthSeries) -> Vec<f64> {
        s.values
    }
}

impl GrowthSeries {
    /// Validates non-negativity and monotonicity. `values[0]` is `a(1)`.
    pub fn new(values: Vec<f64>) -> Result<Self, GrowthError> {
        if values.is_empty() {
            return Err(GrowthError::EmptySeries);
        }
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() {
                return Err(GrowthError::NotANumber { n: i + 1 });
            }
            if v < 0.0 {
                return Err(GrowthError::Negative { n: i + 1, value: v });
            }
            if i > 0 && values[i - 1] > v {
                return Err(GrowthError::NotMonotone {
                    n: i + 1,
                    prev: values[i - 1],
                    next: v,
                });
            }
        }
        let ln = values.iter().map(|v| v.ln()).collect();
        Ok(GrowthSeries { values, ln })
    }

    /// Builds a series from `ln a(n)`. Values that overflow `f64` are kept
    /// as `+inf` while the logarithms stay exact.
    pub fn from_ln_values(ln: Vec<f64>) -> Result<Self, GrowthError> {
        if ln.is_empty() {
            return Err(GrowthError::EmptySeries);
        }
        for (i, &l) in ln.iter().enumerate() {
            if l.is_nan() || l == f64::INFINITY {
                return Err(GrowthError::NotANumber { n: i + 1 });
            }
            if i > 0 && ln[i - 1] > l {
                return Err(GrowthError::NotMonotone {
                    n: i + 1,
                    prev: ln[i - 1].exp(),
                    next: l.exp(),
                });
            }
        }
        let values = ln.iter().map(|l| l.exp()).collect();
        Ok(GrowthSeries { values, ln })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self, GrowthError> {
        GrowthSeries::new(counts.iter().map(|&c| c as f64).collect())
    }

    /// Evaluates `f` at `n = 1..=horizon`.
    pub fn from_fn(horizon: usize, f: impl Fn(f64) -> f64) -> Result<Self, GrowthError> {
        GrowthSeries::new((1..=horizon).map(|n| f(n as f64)).collect())
    }

    /// Running maximum of `values`, clamped at zero.
    pub fn monotone_envelope(values: &[f64]) -> Result<Self, GrowthError> {
        let mut out = Vec::with_capacity(values.len());
        let mut best = 0.0f64;
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() {
                return Err(GrowthError::NotANumber { n: i + 1 });
            }
            best = best.max(v);
            out.push(best);
        }
        GrowthSeries::new(out)
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a(n)` for `1 <= n <= horizon`.
    pub fn at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn ln_at(&self, n: usize) -> f64 {
        self.ln[n - 1]
    }

    /// `ln max(a(n), 1)`: log of counts below one is taken as zero.
    fn clamped_ln(&self, n: usize) -> f64 {
        self.ln[n - 1].max(0.0)
    }

    /// The series `c * a(n)`.
    pub fn scaled(&self, c: f64) -> Result<Self, GrowthError> {
        if !(c > 0.0) {
            return Err(GrowthError::Negative { n: 0, value: c });
        }
        let lc = c.ln();
        GrowthSeries::from_ln_values(self.ln.iter().map(|l| l + lc).collect())
    }

    /// First `n` terms.
    pub fn truncated(&self, n: usize) -> Result<Self, GrowthError> {
        if n == 0 || n > self.horizon() {
            return Err(GrowthError::HorizonTooShort {
                horizon: self.horizon(),
                need: format!("truncation to {n}"),
            });
        }
        Ok(GrowthSeries {
            values: self.values[..n].to_vec(),
            ln: self.ln[..n].to_vec(),
        })
    }

    /// The series `n -> a(m n)` on `1..=horizon/m`.
    pub fn dilated(&self, m: usize) -> Result<Self, GrowthError> {
        let len = self.horizon() / m.max(1);
        if m == 0 || len == 0 {
            return Err(GrowthError::HorizonTooShort {
                horizon: self.horizon(),
                need: format!("dilation by {m}"),
            });
        }
        Ok(GrowthSeries {
            values: (1..=len).map(|n| self.values[m * n - 1]).collect(),
            ln: (1..=len).map(|n| self.ln[m * n - 1]).collect(),
        })
    }

    /// True when every entry of `self` is at most the matching entry of `other`.
    pub fn dominated_by(&self, other: &GrowthSeries) -> bool {
        self.horizon() == other.horizon() && self.ln.iter().zip(&other.ln).all(|(a, b)| a <= b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equivalent,
    Less,
    Greater,
    IncomparableAtHorizon,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Equivalent => "equivalent",
            Relation::Less => "less",
            Relation::Greater => "greater",
            Relation::IncomparableAtHorizon => "incomparable_at_horizon",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub relation: Relation,
    /// Smallest `C` with `a(n) <= C b(n)` over the horizon, reported when
    /// `a` is found to be dominated by `b`.
    pub witness_constant: Option<f64>,
    /// Same for `b(n) <= C a(n)`.
    pub reverse_witness_constant: Option<f64>,
}

/// Relative growth allowed between the two halves of the tail before a
/// ratio counts as unbounded.
pub const RATIO_GROWTH_TOLERANCE: f64 = 0.05;

/// Whether `a <= C b`, judged by fitting `C` on the first half of the tail
/// and validating it on the second half. Returns the witness constant.
fn dominated(a: &GrowthSeries, b: &GrowthSeries, tail_start: usize) -> Option<f64> {
    let n_max = a.horizon();
    let mid = tail_start + (n_max - tail_start) / 2;
    let lr = |n: usize| a.ln_at(n) - b.clamped_ln(n);
    let first = (tail_start..=mid).map(lr).fold(f64::NEG_INFINITY, f64::max);
    let second = (mid + 1..=n_max).map(lr).fold(f64::NEG_INFINITY, f64::max);
    let holds = second == f64::NEG_INFINITY || second <= first + (1.0 + RATIO_GROWTH_TOLERANCE).ln();
    holds.then(|| (1..=n_max).map(lr).fold(f64::NEG_INFINITY, f64::max).exp())
}

pub fn compare(
    a: &GrowthSeries,
    b: &GrowthSeries,
    tail_start: usize,
) -> Result<ComparisonVerdict, GrowthError> {
    if a.horizon() != b.horizon() {
        return Err(GrowthError::HorizonMismatch(a.horizon(), b.horizon()));
    }
    let n_max = a.horizon();
    if tail_start < 1 || tail_start > n_max / 2 {
        return Err(GrowthError::TailOutOfRange {
            tail_start,
            max: n_max / 2,
            horizon: n_max,
        });
    }
    let ab = dominated(a, b, tail_start);
    let ba = dominated(b, a, tail_start);
    let relation = match (ab.is_some(), ba.is_some()) {
        (true, true) => Relation::Equivalent,
        (true, false) => Relation::Less,
        (false, true) => Relation::Greater,
        (false, false) => Relation::IncomparableAtHorizon,
    };
    Ok(ComparisonVerdict {
        relation,
        witness_constant: ab,
        reverse_witness_constant: ba,
    })
}

/// Default tail start for [`compare`]: a quarter of the horizon.
pub fn default_tail_start(horizon: usize) -> usize {
    (horizon / 4).max(1)
}

/// Pointwise maximum.
pub fn sup(list: &[GrowthSeries]) -> Result<GrowthSeries, GrowthError> {
    let first = list.first().ok_or(GrowthError::EmptyList)?;
    let mut ln = first.ln.clone();
    for s in &list[1..] {
        if s.horizon() != first.horizon() {
            return Err(GrowthError::HorizonMismatch(first.horizon(), s.horizon()));
        }
        for (dst, &l) in ln.iter_mut().zip(&s.ln) {
            *dst = dst.max(l);
        }
    }
    let mut values = first.values.clone();
    for s in &list[1..] {
        for (dst, &v) in values.iter_mut().zip(&s.values) {
            *dst = dst.max(v);
        }
    }
    Ok(GrowthSeries { values, ln })
}

/// Least-squares line through the final `tail_fraction` of the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

fn tail_range(horizon: usize, tail_fraction: f64) -> Result<std::ops::RangeInclusive<usize>, GrowthError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(GrowthError::InvalidBands(format!(
            "tail_fraction {tail_fraction} not in (0, 1]"
        )));
    }
    let count = ((horizon as f64) * tail_fraction).floor() as usize;
    if count < 3 {
        return Err(GrowthError::DegenerateTail(count));
    }
    Ok(horizon - count + 1..=horizon)
}

fn least_squares(points: impl Iterator<Item = (f64, f64)> + Clone) -> TailFit {
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (x, y) in points.clone() {
        n += 1.0;
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points.clone() {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = points
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    TailFit {
        slope,
        intercept,
        residual: (sse / n).sqrt(),
    }
}

/// Fit of `ln a(n)` against `ln n` over the tail.
pub fn poly_fit(a: &GrowthSeries, tail_fraction: f64) -> Result<TailFit, GrowthError> {
    let r = tail_range(a.horizon(), tail_fraction)?;
    Ok(least_squares(r.map(|n| ((n as f64).ln(), a.clamped_ln(n)))))
}

/// Fit of `ln a(n)` against `n` over the tail.
pub fn exp_fit(a: &GrowthSeries, tail_fraction: f64) -> Result<TailFit, GrowthError> {
    let r = tail_range(a.horizon(), tail_fraction)?;
    Ok(least_squares(r.map(|n| (n as f64, a.clamped_ln(n)))))
}

/// Polynomial projection: slope of `ln a` versus `ln n` over the tail.
pub fn project_poly(a: &GrowthSeries, tail_fraction: f64) -> Result<f64, GrowthError> {
    Ok(poly_fit(a, tail_fraction)?.slope.max(0.0))
}

/// Exponential projection: slope of `ln a` versus `n` over the tail.
pub fn project_exp(a: &GrowthSeries, tail_fraction: f64) -> Result<f64, GrowthError> {
    Ok(exp_fit(a, tail_fraction)?.slope.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Bounded,
    Linear,
    Polynomial,
    Exponential,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Bounded => "bounded",
            ClassLabel::Linear => "linear",
            ClassLabel::Polynomial => "polynomial",
            ClassLabel::Exponential => "exponential",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthClass {
    pub label: ClassLabel,
    pub degree: f64,
    pub rate: f64,
    pub fit_residual: f64,
}

impl GrowthClass {
    /// Order `bounded < linear < polynomial(d) < exponential`, with linear
    /// and polynomial classes compared by degree up to `degree_slack`.
    pub fn le_with(&self, other: &GrowthClass, degree_slack: f64) -> bool {
        fn tier(c: &GrowthClass) -> u8 {
            match c.label {
                ClassLabel::Bounded => 0,
                ClassLabel::Linear | ClassLabel::Polynomial => 1,
                ClassLabel::Exponential => 2,
            }
        }
        match tier(self).cmp(&tier(other)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => match self.label {
                ClassLabel::Bounded => true,
                ClassLabel::Exponential => self.rate <= other.rate * (1.0 + degree_slack),
                _ => {
                    (self.label == ClassLabel::Linear && other.label == ClassLabel::Linear)
                        || self.degree <= other.degree + degree_slack
                }
            },
        }
    }

    /// Same class for the purpose of level stabilization.
    pub fn agrees_with(&self, other: &GrowthClass, degree_slack: f64) -> bool {
        self.label == other.label
            && match self.label {
                ClassLabel::Polynomial => (self.degree - other.degree).abs() <= degree_slack,
                ClassLabel::Exponential => {
                    (self.rate - other.rate).abs() <= degree_slack * self.rate.max(other.rate)
                }
                _ => true,
            }
    }
}

impl fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            ClassLabel::Polynomial => write!(f, "polynomial(degree {:.3})", self.degree),
            ClassLabel::Exponential => write!(f, "exponential(rate {:.4})", self.rate),
            l => write!(f, "{l}"),
        }
    }
}

/// Thresholds for [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bands {
    pub tail_fraction: f64,
    pub linear_band: (f64, f64),
    pub bounded_max_degree: f64,
    /// Minimum exponential rate; above it, a series is exponential when the
    /// log-linear fit beats the log-log fit.
    pub exp_rate_floor: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands {
            tail_fraction: 0.5,
            linear_band: (0.75, 1.25),
            bounded_max_degree: 0.25,
            exp_rate_floor: 0.05,
        }
    }
}

impl Bands {
    pub fn validate(&self) -> Result<(), GrowthError> {
        let (lo, hi) = self.linear_band;
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(GrowthError::InvalidBands("tail_fraction must lie in (0, 1]".into()));
        }
        if !(lo <= 1.0 && 1.0 <= hi && self.bounded_max_degree >= 0.0 && self.bounded_max_degree < lo) {
            return Err(GrowthError::InvalidBands(format!(
                "linear band [{lo}, {hi}] must contain 1 and lie above the bounded cutoff {}",
                self.bounded_max_degree
            )));
        }
        if !(self.exp_rate_floor >= 0.0) {
            return Err(GrowthError::InvalidBands("exp_rate_floor must be >= 0".into()));
        }
        Ok(())
    }
}

pub const MIN_CLASSIFY_HORIZON: usize = 16;

pub fn classify(a: &GrowthSeries, bands: &Bands) -> Result<GrowthClass, GrowthError> {
    bands.validate()?;
    if a.horizon() < MIN_CLASSIFY_HORIZON {
        return Err(GrowthError::HorizonTooShort {
            horizon: a.horizon(),
            need: format!("classification needs at least {MIN_CLASSIFY_HORIZON}"),
        });
    }
    let pf = poly_fit(a, bands.tail_fraction)?;
    let ef = exp_fit(a, bands.tail_fraction)?;
    let degree = pf.slope.max(0.0);
    let rate = ef.slope.max(0.0);
    if rate > bands.exp_rate_floor && ef.residual < pf.residual {
        return Ok(GrowthClass {
            label: ClassLabel::Exponential,
            degree,
            rate,
            fit_residual: ef.residual,
        });
    }
    let tail = tail_range(a.horizon(), bands.tail_fraction)?;
    let (lo, hi) = (a.ln_at(*tail.start()), a.ln_at(a.horizon()));
    let constant = hi - lo <= 1e-12;
    let (label, degree) = if degree <= bands.bounded_max_degree && constant {
        (ClassLabel::Bounded, 0.0)
    } else if degree >= bands.linear_band.0 && degree <= bands.linear_band.1 {
        (ClassLabel::Linear, degree)
    } else {
        (ClassLabel::Polynomial, degree)
    };
    Ok(GrowthClass {
        label,
        degree,
        rate,
        fit_residual: pf.residual,
    })
}

/// Result of [`is_linearly_invariant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub invariant: bool,
    pub verdict: ComparisonVerdict,
}

/// Minimum number of points of the dilated series.
pub const MIN_INVARIANCE_POINTS: usize = 8;

/// Tests `[a(n)] = [a(m n)]` over the common sub-horizon `1..=N/m`.
pub fn is_linearly_invariant(a: &GrowthSeries, m: usize) -> Result<InvarianceVerdict, GrowthError> {
    if m < 2 {
        return Err(GrowthError::HorizonTooShort {
            horizon: a.horizon(),
            need: format!("dilation factor must be >= 2, got {m}"),
        });
    }
    let len = a.horizon() / m;
    if len < MIN_INVARIANCE_POINTS {
        return Err(GrowthError::HorizonTooShort {
            horizon: a.horizon(),
            need: format!("{MIN_INVARIANCE_POINTS} points of a(n*{m})"),
        });
    }
    let base = a.truncated(len)?;
    let dil = a.dilated(m)?;
    let verdict = compare(&base, &dil, default_tail_start(len))?;
    Ok(InvarianceVerdict {
        invariant: verdict.relation == Relation::Equivalent,
        verdict,
    })
}

/// Formats `x` with `digits` significant digits, `%g` style.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n: usize) -> GrowthSeries {
        GrowthSeries::from_fn(n, f).unwrap()
    }

    #[test]
    fn rejects_decreasing_and_negative() {
        assert!(matches!(
            GrowthSeries::new(vec![1.0, 0.5]),
            Err(GrowthError::NotMonotone { n: 2, .. })
        ));
        assert!(matches!(
            GrowthSeries::new(vec![-1.0]),
            Err(GrowthError::Negative { n: 1, .. })
        ));
    }

    #[test]
    fn compare_examples() {
        let n = series(|n| n, 128);
        let r = |a: &GrowthSeries, b: &GrowthSeries| compare(a, b, 32).unwrap().relation;
        assert_eq!(r(&series(|n| 2.0 * n + 5.0, 128), &n), Relation::Equivalent);
        assert_eq!(r(&n, &series(|n| n * n, 128)), Relation::Less);
        assert_eq!(r(&series(|n| n * (n + 1.0).ln(), 128), &n), Relation::Greater);
    }

    #[test]
    fn compare_witness_is_the_max_ratio() {
        let v = compare(&series(|n| 2.0 * n + 5.0, 128), &series(|n| n, 128), 1).unwrap();
        assert!((v.witness_constant.unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn compare_errors() {
        let a = series(|n| n, 16);
        assert!(matches!(compare(&a, &series(|n| n, 8), 1), Err(GrowthError::HorizonMismatch(16, 8))));
        assert!(matches!(compare(&a, &a, 9), Err(GrowthError::TailOutOfRange { .. })));
        assert!(matches!(compare(&a, &a, 0), Err(GrowthError::TailOutOfRange { .. })));
    }

    #[test]
    fn sup_examples() {
        let a = series(|n| n, 10);
        let b = series(|n| n * n, 10);
        assert_eq!(sup(&[a.clone(), b.clone()]).unwrap(), b);
        assert_eq!(sup(&[a.clone()]).unwrap(), a);
        let c = series(|_| 3.0, 10);
        assert_eq!(sup(&[c, a]).unwrap(), series(|n| n.max(3.0), 10));
        assert_eq!(sup(&[]), Err(GrowthError::EmptyList));
    }

    #[test]
    fn projections() {
        let close = |x: f64, y: f64| (x - y).abs() < 0.01;
        assert!(close(project_poly(&series(|n| n * n, 128), 0.5).unwrap(), 2.0));
        assert_eq!(project_poly(&series(|_| 7.0, 128), 0.5).unwrap(), 0.0);
        assert!(close(project_poly(&series(|n| n.powf(1.5), 128), 0.5).unwrap(), 1.5));
        let e07 = GrowthSeries::from_ln_values((1..=128).map(|n| 0.7 * n as f64).collect()).unwrap();
        assert!(close(project_exp(&e07, 0.5).unwrap(), 0.7));
        assert!(project_exp(&series(|n| n * n, 128), 0.5).unwrap() <= 0.05);
        assert!(close(project_exp(&series(|n| n.exp2(), 128), 0.5).unwrap(), std::f64::consts::LN_2));
        assert_eq!(project_poly(&series(|n| n, 4), 0.5), Err(GrowthError::DegenerateTail(2)));
    }

    #[test]
    fn classify_examples() {
        let b = Bands::default();
        assert_eq!(classify(&series(|n| 3.0 * n + 1.0, 128), &b).unwrap().label, ClassLabel::Linear);
        let q = classify(&series(|n| n * (n - 1.0) / 2.0, 128), &b).unwrap();
        assert_eq!(q.label, ClassLabel::Polynomial);
        assert!((q.degree - 2.0).abs() < 0.1, "{q:?}");
        let e = classify(&series(|n| n.exp2(), 128), &b).unwrap();
        assert_eq!(e.label, ClassLabel::Exponential);
        assert!((e.rate - std::f64::consts::LN_2).abs() < 0.01);
        let c = classify(&series(|n| n.min(10.0), 128), &b).unwrap();
        assert_eq!((c.label, c.degree), (ClassLabel::Bounded, 0.0));
        assert!(classify(&series(|n| n, 15), &b).is_err());
    }

    #[test]
    fn invariance_examples() {
        assert!(is_linearly_invariant(&series(|n| n * n, 128), 2).unwrap().invariant);
        assert!(!is_linearly_invariant(&series(|n| n.exp2(), 128), 2).unwrap().invariant);
        assert!(is_linearly_invariant(&series(|n| n, 128), 3).unwrap().invariant);
        assert!(is_linearly_invariant(&series(|n| n, 20), 3).is_err());
    }

    #[test]
    fn class_order() {
        let mk = |label, degree, rate| GrowthClass { label, degree, rate, fit_residual: 0.0 };
        let bounded = mk(ClassLabel::Bounded, 0.0, 0.0);
        let linear = mk(ClassLabel::Linear, 0.97, 0.0);
        let quad = mk(ClassLabel::Polynomial, 2.0, 0.0);
        let exp = mk(ClassLabel::Exponential, 9.0, 0.69);
        assert!(bounded.le_with(&linear, 0.25) && linear.le_with(&quad, 0.25) && quad.le_with(&exp, 0.25));
        assert!(!quad.le_with(&linear, 0.25));
        assert!(linear.le_with(&mk(ClassLabel::Linear, 0.9, 0.0), 0.25));
    }

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(7.0, 9), "7");
        assert_eq!(format_significant(0.1, 9), "0.1");
        assert_eq!(format_significant(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_significant(123456789.0, 9), "123456789");
        assert_eq!(format_significant(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(format_significant(2.5e-7, 9), "2.5e-07");
        assert_eq!(format_significant(-std::f64::consts::LN_2, 9), "-0.693147181");
    }
}
