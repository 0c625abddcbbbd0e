//! On-disk form of a GP estimate: `t, y0_mean, y0_var, …, <inputs>, excluded`.

use std::io;

use super::{Estimate, PipelineError};
use crate::diffpoly::{DiffVar, VarKind};
use crate::simulate::{column_name, SimError, TimeSeries};

/// Derivative means and exclusions read back from an estimate table.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTable {
    /// Means as `y, dy, …` plus any input columns.
    pub series: TimeSeries,
    /// Variances by derivative order.
    pub variances: Vec<Vec<f64>>,
    pub excluded: Vec<usize>,
}

impl EstimateTable {
    pub fn kept_rows(&self) -> Vec<usize> {
        (0..self.series.len()).filter(|i| self.excluded.binary_search(i).is_err()).collect()
    }
}

pub fn write_estimate_csv(est: &Estimate, w: impl io::Write) -> Result<(), PipelineError> {
    let mut extra: Vec<(String, Vec<f64>)> = est
        .series
        .columns
        .iter()
        .filter(|(v, _)| v.kind == VarKind::Input)
        .map(|(v, c)| (column_name(v), c.clone()))
        .collect();
    let mut flag = vec![0.0; est.series.len()];
    for &i in &est.gate.excluded {
        flag[i] = 1.0;
    }
    extra.push(("excluded".into(), flag));
    est.posterior.write_csv(w, &extra)?;
    Ok(())
}

/// Whether a CSV header row has the estimate-table layout.
pub fn is_estimate_header(header: &str) -> bool {
    header.split(',').any(|h| h.trim() == "y0_mean")
}

pub fn read_estimate_csv(r: impl io::Read) -> Result<EstimateTable, PipelineError> {
    let csv_err = |e: String| PipelineError::Sim(SimError::Csv(e));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if header.get(0) != Some("t") {
        return Err(csv_err("first column must be `t`".into()));
    }
    enum Col {
        Mean(usize),
        Var(usize),
        Input(DiffVar),
        Excluded,
    }
    let mut cols = Vec::new();
    for name in header.iter().skip(1) {
        let order = |suffix: &str| name.strip_prefix('y')?.strip_suffix(suffix)?.parse::<usize>().ok();
        let col = if let Some(k) = order("_mean") {
            Col::Mean(k)
        } else if let Some(k) = order("_var") {
            Col::Var(k)
        } else if name == "excluded" {
            Col::Excluded
        } else {
            let v = TimeSeries::read_csv(format!("t,{name}\n0,0\n").as_bytes())
                .ok()
                .and_then(|ts| ts.vars().next().copied())
                .filter(|v| v.kind == VarKind::Input)
                .ok_or_else(|| csv_err(format!("unrecognized column `{name}`")))?;
            Col::Input(v)
        };
        cols.push(col);
    }
    let n_orders = cols.iter().filter(|c| matches!(c, Col::Mean(_))).count();
    for k in 0..n_orders {
        if !cols.iter().any(|c| matches!(c, Col::Mean(j) if *j == k)) {
            return Err(csv_err(format!("missing column `y{k}_mean`")));
        }
    }
    if n_orders == 0 {
        return Err(csv_err("no `y0_mean` column".into()));
    }
    let mut times = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| csv_err(format!("row {}: `{s}` is not a finite number", line + 2)))
        };
        times.push(parse(&rec[0])?);
        for (k, col) in values.iter_mut().enumerate() {
            col.push(parse(rec.get(k + 1).ok_or_else(|| csv_err(format!("row {}: too few fields", line + 2)))?)?);
        }
    }
    if times.is_empty() {
        return Err(csv_err("no data rows".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PipelineError::Sim(SimError::InvalidGrid("times must be strictly increasing".into())));
    }
    let mut series = TimeSeries::new(times);
    let mut variances = vec![Vec::new(); n_orders];
    let mut excluded = Vec::new();
    for (col, v) in cols.into_iter().zip(values) {
        match col {
            Col::Mean(k) => series.set_column(DiffVar::output(1).with_order(k as u16), v),
            Col::Var(k) if k < n_orders => variances[k] = v,
            Col::Var(_) => {}
            Col::Input(var) => series.set_column(var, v),
            Col::Excluded => excluded = v.iter().enumerate().filter(|(_, f)| **f != 0.0).map(|(i, _)| i).collect(),
        }
    }
    Ok(EstimateTable { series, variances, excluded })
}
