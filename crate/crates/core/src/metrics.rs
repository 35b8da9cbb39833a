//! Evaluation metrics and their CSV emission.
//!
//! NAR normalizes the aggregate reward by the number of jobs; NAR per crew
//! additionally divides by the crew count. NUWT is total unused work time
//! over total effective budget, which keeps it in [0, 1] (dividing by spent
//! time instead could exceed 1). MAR is the first difference of an AR
//! sequence indexed by crew count.

use crate::model::CrewSpec;
use crate::solve::{tour_cost, Schedule};
use crate::transform::WorkingGraph;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Normalized aggregate reward: `AR / (n - 1)` for a working graph on `n`
/// nodes.
pub fn nar(aggregate_reward: f64, n: usize) -> f64 {
    aggregate_reward / (n - 1) as f64
}

/// NAR per crew: `AR / ((n - 1) * m)`.
pub fn nar_per_crew(aggregate_reward: f64, n: usize, m: usize) -> f64 {
    assert!(n >= 2 && m >= 1);
    aggregate_reward / ((n - 1) as f64 * m as f64)
}

/// Marginal aggregate reward: first differences of AR as the crew count
/// grows by one between consecutive entries.
pub fn marginal_aggregate_reward(ar_by_crews: &[f64]) -> Vec<f64> {
    assert!(ar_by_crews.len() >= 2);
    ar_by_crews.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Normalized unused work time from precomputed per-crew spent times.
pub fn nuwt_from_spent(spent: &[f64], effective_budgets: &[f64]) -> f64 {
    assert_eq!(spent.len(), effective_budgets.len());
    let total: f64 = effective_budgets.iter().sum();
    let unused: f64 =
        spent.iter().zip(effective_budgets).map(|(&s, &b)| (b - s).max(0.0)).sum();
    if total == 0.0 {
        0.0
    } else {
        unused / total
    }
}

/// Normalized unused work time of a schedule set.
pub fn nuwt(gw: &WorkingGraph, schedules: &[Schedule], crews: &CrewSpec) -> f64 {
    let spent: Vec<f64> = schedules.iter().map(|s| tour_cost(gw, &s.jobs)).collect();
    let budgets: Vec<f64> = (0..crews.crew_count()).map(|c| crews.effective_budget(c)).collect();
    nuwt_from_spent(&spent, &budgets)
}

/// One line of a sweep result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub mean_repair_min: f64,
    pub mean_travel_min: f64,
    pub budget_min: f64,
    pub aggregate_reward: f64,
    pub nar: f64,
    pub nar_per_crew: f64,
    pub nuwt: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub status: String,
    pub elapsed_s: f64,
}

pub const CSV_HEADER: &str = "instance,n,m,mean_repair_min,mean_travel_min,budget_min,\
aggregate_reward,nar,nar_per_crew,nuwt,lower_bound,upper_bound,gap,status,elapsed_s";

impl MetricRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
            self.instance,
            self.n,
            self.m,
            self.mean_repair_min,
            self.mean_travel_min,
            self.budget_min,
            self.aggregate_reward,
            self.nar,
            self.nar_per_crew,
            self.nuwt,
            self.lower_bound,
            self.upper_bound,
            self.gap,
            self.status,
            self.elapsed_s,
        )
    }
}

/// Writes rows as CSV: a header line, then one line per row, floats with six
/// fractional digits.
pub fn emit_csv(rows: &[MetricRow], path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(f, "{}", row.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn nar_per_crew_examples() {
        assert_eq!(nar_per_crew(12.0, 13, 4), 0.25);
        let v = nar_per_crew(4.0, 13, 4);
        assert!((v - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(nar_per_crew(0.0, 13, 4), 0.0);
    }

    #[test]
    fn mar_alternating_steps() {
        // AR for m = 5..10 whose differences step 2,3,2,3,3.
        let ar = [20.0, 22.0, 25.0, 27.0, 30.0, 33.0];
        assert_eq!(marginal_aggregate_reward(&ar), vec![2.0, 3.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn mar_constant_is_zero() {
        assert_eq!(marginal_aggregate_reward(&[5.0, 5.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn mar_matches_subtraction_oracle() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let len = 2 + rng.next_below(10) as usize;
            let seq: Vec<f64> = (0..len).map(|_| rng.next_below(100) as f64).collect();
            let mar = marginal_aggregate_reward(&seq);
            for i in 0..len - 1 {
                assert_eq!(mar[i], seq[i + 1] - seq[i]);
            }
            // telescoping: the differences sum to last minus first
            let total: f64 = mar.iter().sum();
            assert!((total - (seq[len - 1] - seq[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn nuwt_edge_cases() {
        assert_eq!(nuwt_from_spent(&[100.0, 100.0], &[100.0, 100.0]), 0.0);
        assert_eq!(nuwt_from_spent(&[0.0, 0.0], &[100.0, 100.0]), 1.0);
        assert_eq!(nuwt_from_spent(&[60.0, 100.0], &[100.0, 100.0]), 0.2);
    }

    #[test]
    fn nuwt_invariant_under_crew_relabeling() {
        let mut rng = SplitMix64::new(6);
        for _ in 0..20 {
            let m = 2 + rng.next_below(5) as usize;
            let budgets: Vec<f64> = (0..m).map(|_| 10.0 + rng.next_below(100) as f64).collect();
            let spent: Vec<f64> =
                budgets.iter().map(|&b| b * rng.next_f64()).collect();
            let base = nuwt_from_spent(&spent, &budgets);
            let mut order: Vec<usize> = (0..m).collect();
            order.reverse();
            let spent_p: Vec<f64> = order.iter().map(|&i| spent[i]).collect();
            let budgets_p: Vec<f64> = order.iter().map(|&i| budgets[i]).collect();
            assert!((nuwt_from_spent(&spent_p, &budgets_p) - base).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_format_golden() {
        let row = MetricRow {
            instance: "ieee13/t0".into(),
            n: 13,
            m: 4,
            mean_repair_min: 47.725,
            mean_travel_min: 26.22,
            budget_min: 60.0,
            aggregate_reward: 4.0,
            nar: 4.0 / 12.0,
            nar_per_crew: 4.0 / 48.0,
            nuwt: 0.25,
            lower_bound: 4.0,
            upper_bound: 4.0,
            gap: 0.0,
            status: "optimal".into(),
            elapsed_s: 0.125,
        };
        assert_eq!(
            row.csv_line(),
            "ieee13/t0,13,4,47.725000,26.220000,60.000000,4.000000,0.333333,0.083333,\
0.250000,4.000000,4.000000,0.000000,optimal,0.125000"
        );
    }

    #[test]
    fn csv_file_golden() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let rows = vec![MetricRow {
            instance: "a".into(),
            n: 4,
            m: 1,
            mean_repair_min: 1.0,
            mean_travel_min: 0.0,
            budget_min: 30.0,
            aggregate_reward: 1.0,
            nar: 1.0 / 3.0,
            nar_per_crew: 1.0 / 3.0,
            nuwt: 0.0,
            lower_bound: 1.0,
            upper_bound: 1.0,
            gap: 0.0,
            status: "optimal".into(),
            elapsed_s: 0.0,
        }];
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let expect = format!(
            "{CSV_HEADER}\na,4,1,1.000000,0.000000,30.000000,1.000000,0.333333,0.333333,\
0.000000,1.000000,1.000000,0.000000,optimal,0.000000\n"
        );
        assert_eq!(text, expect);
    }

    #[test]
    fn csv_rejects_unwritable_path() {
        let rows: Vec<MetricRow> = Vec::new();
        assert!(emit_csv(&rows, Path::new("/nonexistent-dir/out.csv")).is_err());
    }
}
