use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::abm::Trajectory;
use crate::{Error, Result};

pub const BIN_WIDTH: f64 = 0.1;
pub const BIN_COUNT: usize = 5;

/// Chosen quality over the best available one.
pub fn success_metric(chosen: f64, qualities: &[f64]) -> Result<f64> {
    let max = qualities
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::Analysis("no site qualities".into()))?;
    if !(max > 0.0) {
        return Err(Error::Analysis(format!("best quality {max} is not positive")));
    }
    if !qualities.contains(&chosen) {
        return Err(Error::Analysis(format!("chosen quality {chosen} is not among the sites")));
    }
    Ok(chosen / max)
}

/// One finished trial reduced to the numbers the tables need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub simulation: u64,
    pub condition_id: usize,
    pub runtime: u64,
    pub distance: f64,
    pub qualities: Vec<f64>,
    pub chosen: Option<usize>,
    pub success: Option<f64>,
    pub ticks: Option<u64>,
}

impl RunMetrics {
    pub fn of(simulation: u64, runtime: u64, distance: f64, t: &Trajectory) -> Result<Self> {
        let qualities: Vec<f64> = t.sites.iter().map(|s| s.quality).collect();
        let chosen = t.outcome.chosen();
        let success = match t.chosen_quality() {
            Some(q) => Some(success_metric(q, &qualities)?),
            None => None,
        };
        Ok(RunMetrics {
            simulation,
            condition_id: t.condition_id,
            runtime,
            distance,
            qualities,
            chosen,
            success,
            ticks: chosen.map(|_| t.ticks_elapsed),
        })
    }

    /// Spread between the best and worst site.
    pub fn quality_difference(&self) -> f64 {
        let hi = self.qualities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.qualities.iter().copied().fold(f64::INFINITY, f64::min);
        if self.qualities.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Index of the width-0.1 bin holding `diff`, for `diff` in `[0, 0.5)`.
pub fn quality_bin(diff: f64) -> Option<usize> {
    if !(0.0..BIN_WIDTH * BIN_COUNT as f64).contains(&diff) {
        return None;
    }
    // guard against 0.3 / 0.1 = 2.9999999999999996
    let i = ((diff + 1e-12) / BIN_WIDTH).floor() as usize;
    Some(i.min(BIN_COUNT - 1))
}

/// Percentile of sorted data by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub p25: f64,
    pub p75: f64,
    pub count: usize,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Spread {
            mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
            p25: percentile(&v, 0.25)?,
            p75: percentile(&v, 0.75)?,
            count: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub bin: usize,
    pub bin_low: f64,
    pub bin_high: f64,
    pub distance: f64,
    pub runs: usize,
    pub success: Option<Spread>,
    pub ticks: Option<Spread>,
}

/// Groups runs by quality-difference bin and site distance. Timed-out runs
/// count towards `runs` but towards neither statistic.
pub fn aggregate_metrics(runs: &[RunMetrics]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, u64), Vec<&RunMetrics>> = BTreeMap::new();
    for r in runs {
        if let Some(bin) = quality_bin(r.quality_difference()) {
            groups.entry((bin, r.distance.to_bits())).or_default().push(r);
        }
    }
    let mut rows: Vec<AggregateRow> = groups
        .into_iter()
        .map(|((bin, d), rs)| {
            let success: Vec<f64> = rs.iter().filter_map(|r| r.success).collect();
            let ticks: Vec<f64> = rs.iter().filter_map(|r| r.ticks).map(|t| t as f64).collect();
            AggregateRow {
                bin,
                bin_low: bin as f64 * BIN_WIDTH,
                bin_high: (bin + 1) as f64 * BIN_WIDTH,
                distance: f64::from_bits(d),
                runs: rs.len(),
                success: Spread::of(&success),
                ticks: Spread::of(&ticks),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.bin.cmp(&b.bin).then(a.distance.total_cmp(&b.distance)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(qs: &[f64], success: Option<f64>, ticks: Option<u64>) -> RunMetrics {
        RunMetrics {
            simulation: 0,
            condition_id: 0,
            runtime: 1000,
            distance: 100.0,
            qualities: qs.to_vec(),
            chosen: success.map(|_| 0),
            success,
            ticks,
        }
    }

    #[test]
    fn success_metric_examples() {
        assert_eq!(success_metric(0.9, &[0.9, 0.6]).unwrap(), 1.0);
        assert!((success_metric(0.6, &[0.9, 0.6]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let r = success_metric(0.55, &[0.95, 0.7, 0.55, 0.6]).unwrap();
        assert!((r - 0.5789).abs() < 1e-4);
        assert!(success_metric(0.5, &[]).is_err());
    }

    #[test]
    fn quartiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let s = Spread::of(&v).unwrap();
        assert_eq!((s.mean, s.p25, s.p75), (2.5, 1.75, 3.25));
        let one = Spread::of(&[7.0]).unwrap();
        assert_eq!((one.mean, one.p25, one.p75), (7.0, 7.0, 7.0));
    }

    #[test]
    fn bins() {
        assert_eq!(quality_bin(0.0), Some(0));
        assert_eq!(quality_bin(0.3), Some(3));
        assert_eq!(quality_bin(0.4999), Some(4));
        assert_eq!(quality_bin(0.5), None);
        assert_eq!(quality_bin(-0.1), None);
    }

    #[test]
    fn timeouts_are_excluded() {
        let rows = aggregate_metrics(&[run(&[0.9, 0.85], None, None), run(&[0.9, 0.88], None, None)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs, 2);
        assert!(rows[0].success.is_none() && rows[0].ticks.is_none());

        let rows = aggregate_metrics(&[run(&[0.9, 0.68], Some(1.0), Some(40)), run(&[0.9, 0.65], None, None)]);
        assert_eq!(rows[0].bin, 2);
        assert_eq!(rows[0].ticks.unwrap().count, 1);
        assert_eq!(rows[0].ticks.unwrap().mean, 40.0);
    }
}
