//! Trade-off distributions over the weight `w`, Pareto filtering, the lower
//! convex hull with its breakpoints, the closed-form Integrated Convex
//! Preference (ICP), and a quadrature oracle for it.
//!
//! A plan's value under weight `w` is `V(p, w) = w·time(p) + (1 - w)·cost(p)`
//! (lower is better). The ICP of a set is the expected best value in the set
//! when `w` is drawn from the distribution.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exact::{big, big_to_f64, to_f64, Quantity};
use crate::plan::TimeCostPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution {
    Uniform,
    /// Triangular on `[0, 1]` with its peak at `mode`, `0 < mode < 1`.
    Triangular { mode: f64 },
}

impl WeightDistribution {
    pub fn triangular(mode: f64) -> Result<Self, String> {
        if mode > 0.0 && mode < 1.0 {
            Ok(WeightDistribution::Triangular { mode })
        } else {
            Err(format!("triangular mode must lie strictly inside (0, 1), got {mode}"))
        }
    }

    pub fn density(&self, w: f64) -> f64 {
        if !(0.0..=1.0).contains(&w) {
            return 0.0;
        }
        match *self {
            WeightDistribution::Uniform => 1.0,
            WeightDistribution::Triangular { mode } => {
                if w <= mode {
                    2.0 * w / mode
                } else {
                    2.0 * (1.0 - w) / (1.0 - mode)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightDistribution::Uniform => 0.5,
            WeightDistribution::Triangular { mode } => (1.0 + mode) / 3.0,
        }
    }

    /// Closed-form inverse CDF.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match *self {
            WeightDistribution::Uniform => u,
            WeightDistribution::Triangular { mode } => {
                if u <= mode {
                    (mode * u).sqrt()
                } else {
                    1.0 - ((1.0 - mode) * (1.0 - u)).sqrt()
                }
            }
        }
    }

    /// `∫_a^b h(w) (cost + (time - cost)·w) dw` for `0 ≤ a ≤ b ≤ 1`.
    fn integrate_linear(&self, a: f64, b: f64, time: f64, cost: f64) -> f64 {
        let slope = time - cost;
        match *self {
            WeightDistribution::Uniform => {
                let f = |w: f64| cost * w + slope * w * w / 2.0;
                f(b) - f(a)
            }
            WeightDistribution::Triangular { mode } => {
                let left = |w: f64| (2.0 / mode) * (cost * w * w / 2.0 + slope * w * w * w / 3.0);
                let right = |w: f64| {
                    (2.0 / (1.0 - mode)) * (cost * w + (slope - cost) * w * w / 2.0 - slope * w * w * w / 3.0)
                };
                let mut total = 0.0;
                if a < mode {
                    let hi = b.min(mode);
                    total += left(hi) - left(a);
                }
                if b > mode {
                    let lo = a.max(mode);
                    total += right(b) - right(lo);
                }
                total
            }
        }
    }
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDistribution::Uniform => f.write_str("uniform"),
            WeightDistribution::Triangular { mode } => write!(f, "tri:{mode}"),
        }
    }
}

impl FromStr for WeightDistribution {
    type Err = String;

    /// `uniform`, `tri:<mode>`; `w02`/`w08` are accepted as aliases.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" => Ok(WeightDistribution::Uniform),
            "w02" => WeightDistribution::triangular(0.2),
            "w08" => WeightDistribution::triangular(0.8),
            other => {
                let mode = other
                    .strip_prefix("tri:")
                    .ok_or_else(|| format!("unknown distribution `{other}` (expected uniform or tri:<mode>)"))?;
                let mode: f64 = mode.parse().map_err(|_| format!("bad triangular mode `{mode}`"))?;
                WeightDistribution::triangular(mode)
            }
        }
    }
}

impl Serialize for WeightDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeightDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `V(p, w)` in floating point.
pub fn value(p: &TimeCostPoint, w: f64) -> f64 {
    w * to_f64(&p.time) + (1.0 - w) * to_f64(&p.cost)
}

/// `V(p, w)` for a rational weight, exactly.
pub fn value_exact(p: &TimeCostPoint, w: Quantity) -> Quantity {
    w * p.time + (Quantity::one() - w) * p.cost
}

/// Indices of the non-dominated points, in input order. Of several equal
/// points only the first survives.
pub fn pareto_filter(points: &[TimeCostPoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = &points[i];
            !points.iter().enumerate().any(|(j, q)| q.dominates(p) || (j < i && q == p))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSegment {
    pub from: BigRational,
    pub to: BigRational,
    /// Index into the input points of the plan optimal on this segment.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullResult {
    /// Input indices of hull points, by increasing time.
    pub hull: Vec<usize>,
    /// Segments of `[0, 1]` by increasing `w`.
    pub segments: Vec<HullSegment>,
}

impl HullResult {
    /// Interior breakpoints `w_1 < ... < w_{k-1}`.
    pub fn breakpoints(&self) -> Vec<BigRational> {
        self.segments.iter().skip(1).map(|s| s.from.clone()).collect()
    }

    /// Input index of the plan minimizing `V(·, w)`. At a breakpoint the plan
    /// optimal just above it is returned.
    pub fn optimal_at(&self, w: f64) -> Option<usize> {
        let seg = self
            .segments
            .iter()
            .find(|s| w >= big_to_f64(&s.from) && w < big_to_f64(&s.to))
            .or_else(|| self.segments.last())?;
        Some(seg.index)
    }
}

fn cross(o: &(BigRational, BigRational), a: &(BigRational, BigRational), b: &(BigRational, BigRational)) -> BigRational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// The plans optimal under `V(·, w)` for some `w ∈ [0, 1]`, with exact
/// breakpoints. Collinear interior points are dropped.
pub fn lower_convex_hull(points: &[TimeCostPoint]) -> HullResult {
    let mut order = pareto_filter(points);
    order.sort_by(|&a, &b| points[a].time.cmp(&points[b].time));
    let exact: Vec<(BigRational, BigRational)> = points.iter().map(|p| (big(&p.time), big(&p.cost))).collect();

    let mut hull: Vec<usize> = Vec::new();
    for &i in &order {
        while hull.len() >= 2 {
            let n = hull.len();
            if cross(&exact[hull[n - 2]], &exact[hull[n - 1]], &exact[i]).is_positive() {
                break;
            }
            hull.pop();
        }
        hull.push(i);
    }

    // Breakpoint between hull[i] (faster) and hull[i+1] (cheaper).
    let between = |i: usize| -> BigRational {
        let (t0, c0) = &exact[hull[i]];
        let (t1, c1) = &exact[hull[i + 1]];
        let dc = c0 - c1;
        &dc / ((t1 - t0) + &dc)
    };
    let mut segments = Vec::with_capacity(hull.len());
    let mut from = BigRational::zero();
    for pos in (0..hull.len()).rev() {
        let to = if pos == 0 { BigRational::one() } else { between(pos - 1) };
        segments.push(HullSegment { from: from.clone(), to: to.clone(), index: hull[pos] });
        from = to;
    }
    HullResult { hull, segments }
}

/// Closed-form ICP: piecewise integration of `h(w)·V` over the hull
/// segments. The empty set scores `+∞`.
pub fn icp(points: &[TimeCostPoint], dist: &WeightDistribution) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let hull = lower_convex_hull(points);
    hull.segments
        .iter()
        .map(|s| {
            let p = &points[s.index];
            dist.integrate_linear(big_to_f64(&s.from), big_to_f64(&s.to), to_f64(&p.time), to_f64(&p.cost))
        })
        .sum()
}

/// Quadrature oracle for the ICP: composite midpoint rule over `grid` cells
/// of `h(w) · min_p V(p, w)`, taking the minimum over every input point.
pub fn ipf_numeric(points: &[TimeCostPoint], dist: &WeightDistribution, grid: usize) -> f64 {
    assert!(grid >= 2, "grid must have at least two cells");
    if points.is_empty() {
        return f64::INFINITY;
    }
    let coords: Vec<(f64, f64)> = points.iter().map(|p| (to_f64(&p.time), to_f64(&p.cost))).collect();
    let step = 1.0 / grid as f64;
    let mut sum = 0.0;
    let mut carry = 0.0;
    for i in 0..grid {
        let w = (i as f64 + 0.5) * step;
        let best = coords.iter().map(|&(t, c)| w * t + (1.0 - w) * c).fold(f64::INFINITY, f64::min);
        let term = dist.density(w) * best * step - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    sum
}

/// Draws one trade-off weight.
pub fn sample_weight<R: Rng + ?Sized>(dist: &WeightDistribution, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    dist.inverse_cdf(u)
}

/// A rational threshold helper for reports: the breakpoint values as floats.
pub fn breakpoints_f64(hull: &HullResult) -> Vec<f64> {
    hull.breakpoints().iter().map(big_to_f64).collect()
}

/// Exact rational from small integers, handy in tests and fixtures.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
