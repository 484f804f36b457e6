//! Median convergence curves over many traces.
//!
//! Each trace is read as a step function of the chosen abscissa (last
//! observation carried forward). The grid starts where every trace has at
//! least one observation, so every grid point aggregates all runs.

use std::fs;
use std::path::{Path, PathBuf};

use partial_reinit::TraceRecord;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::trace::read_trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    #[default]
    Evals,
    Level0Calls,
    Seconds,
}

impl Axis {
    pub fn of(self, r: &TraceRecord) -> f64 {
        match self {
            Self::Evals => r.cost_evaluations as f64,
            Self::Level0Calls => r.level0_calls as f64,
            Self::Seconds => r.wall_seconds,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Self::Evals => "evals",
            Self::Level0Calls => "level0_calls",
            Self::Seconds => "seconds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub axis: Axis,
    /// Number of evenly spaced abscissae, at least 1.
    pub points: usize,
    /// Last abscissa; defaults to the largest final abscissa of any trace.
    pub max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { axis: Axis::Evals, points: 200, max: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub median_best: Vec<f64>,
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
    pub mean: Vec<f64>,
    pub run_count: usize,
}

impl AggregateCurve {
    /// Median at the last grid point.
    pub fn final_median(&self) -> f64 {
        *self.median_best.last().expect("curves have at least one point")
    }
}

/// Linear-interpolated quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[lo + 1] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Best cost of `trace` at abscissa `x`; `None` before its first record.
pub fn value_at(trace: &[TraceRecord], axis: Axis, x: f64) -> Option<f64> {
    let idx = trace.partition_point(|r| axis.of(r) <= x);
    idx.checked_sub(1).map(|i| trace[i].best_cost)
}

pub fn aggregate_traces(traces: &[Vec<TraceRecord>], grid: &GridSpec) -> Result<AggregateCurve> {
    if traces.is_empty() {
        return Err(BenchError::Config("no traces to aggregate".into()));
    }
    if traces.iter().any(Vec::is_empty) {
        return Err(BenchError::Config("a trace has no records".into()));
    }
    if grid.points == 0 {
        return Err(BenchError::Config("grid needs at least one point".into()));
    }
    let axis = grid.axis;
    let start = traces.iter().map(|t| axis.of(&t[0])).fold(f64::NEG_INFINITY, f64::max);
    let end = grid
        .max
        .unwrap_or_else(|| traces.iter().map(|t| axis.of(t.last().unwrap())).fold(start, f64::max))
        .max(start);
    let xs: Vec<f64> = if grid.points == 1 {
        vec![end]
    } else {
        let step = (end - start) / (grid.points - 1) as f64;
        (0..grid.points).map(|i| if i + 1 == grid.points { end } else { start + step * i as f64 }).collect()
    };

    let mut curve = AggregateCurve {
        axis,
        grid: xs.clone(),
        median_best: Vec::with_capacity(xs.len()),
        p25: Vec::with_capacity(xs.len()),
        p75: Vec::with_capacity(xs.len()),
        mean: Vec::with_capacity(xs.len()),
        run_count: traces.len(),
    };
    let mut column = Vec::with_capacity(traces.len());
    for &x in &xs {
        column.clear();
        column.extend(
            traces.iter().map(|t| value_at(t, axis, x).expect("grid starts after every first record")),
        );
        column.sort_by(f64::total_cmp);
        curve.median_best.push(quantile(&column, 0.5));
        curve.p25.push(quantile(&column, 0.25));
        curve.p75.push(quantile(&column, 0.75));
        curve.mean.push(column.iter().sum::<f64>() / column.len() as f64);
    }
    Ok(curve)
}

/// Trace files in `dir`: every `trace_*.csv`, sorted by name.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with("trace_") && name.ends_with(".csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn aggregate_runs(trace_dir: &Path, grid: &GridSpec) -> Result<AggregateCurve> {
    let files = trace_files(trace_dir)?;
    if files.is_empty() {
        return Err(BenchError::Config(format!("no trace files in {}", trace_dir.display())));
    }
    let traces = files.iter().map(|f| read_trace(f)).collect::<Result<Vec<_>>>()?;
    aggregate_traces(&traces, grid)
}

/// CSV with columns `<axis>,median,p25,p75,mean`.
pub fn format_curve(curve: &AggregateCurve) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([curve.axis.column(), "median", "p25", "p75", "mean"]).expect("writing to memory");
    for i in 0..curve.grid.len() {
        w.write_record(
            [curve.grid[i], curve.median_best[i], curve.p25[i], curve.p75[i], curve.mean[i]]
                .map(|x| x.to_string()),
        )
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(e: u64, c: f64) -> TraceRecord {
        TraceRecord { cost_evaluations: e, level0_calls: e, wall_seconds: e as f64 * 1e-3, best_cost: c }
    }

    #[test]
    fn single_trace_is_its_step_function() {
        let t = vec![rec(1, 9.0), rec(4, 5.0), rec(10, 2.0)];
        let c = aggregate_traces(
            std::slice::from_ref(&t),
            &GridSpec { axis: Axis::Evals, points: 10, max: None },
        )
        .unwrap();
        assert_eq!(c.grid, (1..=10).map(f64::from).collect::<Vec<_>>());
        for (x, m) in c.grid.iter().zip(&c.median_best) {
            assert_eq!(Some(*m), value_at(&t, Axis::Evals, *x));
        }
        assert_eq!(c.median_best[2], 9.0);
        assert_eq!(c.median_best[3], 5.0);
        assert_eq!(c.final_median(), 2.0);
    }

    #[test]
    fn constant_traces_give_the_middle() {
        let traces: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&c| vec![rec(1, c), rec(50, c)]).collect();
        let c = aggregate_traces(&traces, &GridSpec::default()).unwrap();
        assert!(c.median_best.iter().all(|&m| m == 2.0));
        assert!(c.p25.iter().all(|&m| m == 1.5));
        assert!(c.p75.iter().all(|&m| m == 2.5));
        assert_eq!(c.run_count, 3);
    }

    #[test]
    fn grid_starts_after_all_first_records() {
        let traces = vec![vec![rec(1, 5.0), rec(3, 1.0)], vec![rec(2, 4.0), rec(8, 3.0)]];
        let c = aggregate_traces(&traces, &GridSpec { axis: Axis::Evals, points: 7, max: None }).unwrap();
        assert_eq!(c.grid[0], 2.0);
        assert_eq!(*c.grid.last().unwrap(), 8.0);
        assert_eq!(c.median_best[0], 4.5);
    }

    #[test]
    fn infinite_costs_do_not_poison_quantiles() {
        assert_eq!(quantile(&[1.0, f64::INFINITY, f64::INFINITY], 0.75), f64::INFINITY);
        assert_eq!(quantile(&[1.0, 3.0], 0.5), 2.0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(aggregate_traces(&[], &GridSpec::default()).is_err());
        assert!(aggregate_traces(&[vec![]], &GridSpec::default()).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(aggregate_runs(dir.path(), &GridSpec::default()), Err(BenchError::Config(_))));
    }

    #[test]
    fn csv_columns() {
        let c =
            aggregate_traces(&[vec![rec(1, 3.0)]], &GridSpec { axis: Axis::Seconds, points: 1, max: None })
                .unwrap();
        assert_eq!(format_curve(&c), "seconds,median,p25,p75,mean\n0.001,3,3,3,3\n");
    }
}
