use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::{Metric, RiskRow};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0x5245_5341_4d50_4c45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Risk,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlopeOptions {
    pub value: ValueKind,
    pub include_flagged: bool,
}

/// Log-log least-squares fit of per-n medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub metric: Metric,
    pub value: ValueKind,
    pub slope: f64,
    pub slope_ci95: (f64, f64),
    pub intercept: f64,
    pub n_grid: Vec<usize>,
    pub medians: Vec<f64>,
    pub rows_used: usize,
    pub rows_excluded: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of log median risk against log n, excluding flagged rows.
pub fn fit_rate_slope(rows: &[RiskRow], metric: Metric) -> Result<RateReport> {
    fit_rate_slope_with(rows, metric, SlopeOptions::default())
}

pub fn fit_rate_slope_with(rows: &[RiskRow], metric: Metric, opts: SlopeOptions) -> Result<RateReport> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut excluded = 0;
    for r in rows.iter().filter(|r| r.metric == metric) {
        let group = groups.entry(r.n).or_default();
        let v = match opts.value {
            ValueKind::Risk => r.risk_value,
            ValueKind::Point => r.point_value,
        };
        if (r.flag.is_set() && !opts.include_flagged) || !v.is_finite() {
            excluded += 1;
        } else {
            group.push(v);
        }
    }
    if let Some((n, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::invalid(format!("every {metric} row at n = {n} is flagged or missing")));
    }
    if groups.len() < 2 {
        return Err(Error::invalid(format!("slope for {metric} needs at least two distinct n")));
    }
    let n_grid: Vec<usize> = groups.keys().copied().collect();
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let medians: Vec<f64> = groups.values().map(|v| median(v)).collect();
    if medians.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::invalid(format!("{metric} has a nonpositive median; log-log fit undefined")));
    }
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (slope, intercept) = ols(&x, &y);

    let mut rng = stream_rng(BOOTSTRAP_SEED, 0);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut yb = Vec::with_capacity(groups.len());
        for vals in groups.values() {
            buf.clear();
            buf.extend((0..vals.len()).map(|_| vals[rng.gen_range(0..vals.len())]));
            yb.push(median(&buf).max(f64::MIN_POSITIVE).ln());
        }
        slopes.push(ols(&x, &yb).0);
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((BOOTSTRAP_RESAMPLES - 1) as f64 * p).round() as usize];
    // percentile interval, widened if needed so it contains the point estimate
    let ci = (q(0.025).min(slope), q(0.975).max(slope));
    let used = groups.values().map(Vec::len).sum();
    Ok(RateReport {
        metric,
        value: opts.value,
        slope,
        slope_ci95: ci,
        intercept,
        n_grid,
        medians,
        rows_used: used,
        rows_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::RowFlag;

    fn rows(f: impl Fn(f64, usize) -> f64) -> Vec<RiskRow> {
        let mut out = Vec::new();
        for n in [100usize, 200, 400, 800, 1600] {
            for rep in 0..5 {
                out.push(RiskRow {
                    n,
                    replicate: rep,
                    metric: Metric::W1Sq,
                    point_value: f(n as f64, rep),
                    risk_value: f(n as f64, rep),
                    std_error: 0.0,
                    elbo_final: 0.0,
                    iterations: 1,
                    seed: 0,
                    flag: RowFlag::None,
                });
            }
        }
        out
    }

    #[test]
    fn exact_power_laws() {
        let r = fit_rate_slope(&rows(|n, _| 3.0 / n), Metric::W1Sq).unwrap();
        assert!((r.slope + 1.0).abs() < 1e-9);
        assert!((r.slope_ci95.1 - r.slope_ci95.0).abs() < 1e-9);
        let r = fit_rate_slope(&rows(|n, _| 3.0 / n.sqrt()), Metric::W1Sq).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-9);
        let r = fit_rate_slope(&rows(|_, _| 0.7), Metric::W1Sq).unwrap();
        assert!(r.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_ci_contains_slope() {
        let r = fit_rate_slope(&rows(|n, rep| (1.0 + 0.3 * rep as f64) / n), Metric::W1Sq).unwrap();
        assert!(r.slope_ci95.0 <= r.slope && r.slope <= r.slope_ci95.1);
        assert!(r.slope_ci95.1 > r.slope_ci95.0);
    }

    #[test]
    fn flagged_rows() {
        let mut rs = rows(|n, _| 1.0 / n);
        rs[0].flag = RowFlag::NotConverged;
        rs[0].risk_value = 1e6;
        let r = fit_rate_slope(&rs, Metric::W1Sq).unwrap();
        assert_eq!(r.rows_excluded, 1);
        assert!((r.slope + 1.0).abs() < 1e-9);
        let with = fit_rate_slope_with(&rs, Metric::W1Sq, SlopeOptions { include_flagged: true, ..Default::default() }).unwrap();
        assert_eq!(with.rows_used, 25);
        for r in rs.iter_mut().filter(|r| r.n == 100) {
            r.flag = RowFlag::FitFailed;
        }
        assert!(fit_rate_slope(&rs, Metric::W1Sq).is_err());
        assert!(fit_rate_slope(&rows(|n, _| 1.0 / n), Metric::AtomError).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
