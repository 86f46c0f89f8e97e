//! Summary statistics for benchmark reports.

use serde::Serialize;

use crate::icp::lower_convex_hull;
use crate::plan::TimeCostPoint;

/// Median; the mean of the two central values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Population standard deviation.
pub fn stddev(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some((values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Percentage of the pooled lower convex hull produced by each method.
/// A hull point produced by several methods credits all of them.
pub fn lch_contribution(sets: &[Vec<TimeCostPoint>]) -> Vec<f64> {
    let mut pool: Vec<TimeCostPoint> = sets.iter().flatten().copied().collect();
    pool.sort_by(|a, b| a.time.cmp(&b.time).then(a.cost.cmp(&b.cost)));
    pool.dedup();
    if pool.is_empty() {
        return vec![0.0; sets.len()];
    }
    let hull: Vec<TimeCostPoint> = lower_convex_hull(&pool).hull.into_iter().map(|i| pool[i]).collect();
    sets.iter()
        .map(|s| {
            let hit = hull.iter().filter(|h| s.contains(h)).count();
            100.0 * hit as f64 / hull.len() as f64
        })
        .collect()
}

/// One benchmark cell. Column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub domain: String,
    pub problem: String,
    pub method: String,
    pub distribution: String,
    pub seed: u64,
    pub status: String,
    pub plans: usize,
    pub icp: Option<f64>,
    pub zeta_min: Option<f64>,
    pub zeta_avg: Option<f64>,
    pub zeta_max: Option<f64>,
    pub makespan_median: Option<f64>,
    pub makespan_stddev: Option<f64>,
    pub cost_median: Option<f64>,
    pub cost_stddev: Option<f64>,
    pub lch_contribution: Option<f64>,
    pub runtime_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn population_stddev() {
        assert_eq!(stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), Some(2.0));
        assert_eq!(stddev(&[5.0]), Some(0.0));
    }

    #[test]
    fn shared_hull_points_credit_both() {
        let a = vec![TimeCostPoint::new(4, 25), TimeCostPoint::new(7, 15), TimeCostPoint::new(12, 5)];
        let b = vec![TimeCostPoint::new(12, 5), TimeCostPoint::new(8, 20)];
        let c = lch_contribution(&[a.clone(), b]);
        assert_eq!(c[0], 100.0);
        assert!((c[1] - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(lch_contribution(&[a.clone(), a]), [100.0, 100.0]);
    }
}
