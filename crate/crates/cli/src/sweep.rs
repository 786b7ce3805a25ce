//! One-parameter sweeps written as CSV.

use clap::ValueEnum;
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;
use xree::XStateParams;

use crate::report::{analyze_params, AnalysisOptions, AnalysisReport};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Phi,
    Lambda0,
    Lambda1,
    Lambda2,
    Lambda3,
}

impl SweepParam {
    /// `base` with the parameter set to `v`. Setting one eigenvalue rescales
    /// the other three so the trace stays one.
    pub fn apply(&self, base: &XStateParams, v: f64) -> Result<XStateParams, CliError> {
        let mut p = *base;
        let slot = match self {
            SweepParam::Phi => {
                p.phi = v;
                return Ok(XStateParams::new(p.lambda0, p.lambda3, p.lambda1, p.lambda2, p.phi, p.eta)?);
            }
            SweepParam::Lambda0 => 0,
            SweepParam::Lambda1 => 1,
            SweepParam::Lambda2 => 2,
            SweepParam::Lambda3 => 3,
        };
        let mut l = [p.lambda0, p.lambda1, p.lambda2, p.lambda3];
        let rest: f64 = (0..4).filter(|&i| i != slot).map(|i| l[i]).sum();
        if !(0.0..=1.0).contains(&v) || (rest == 0.0 && v != 1.0) {
            return Err(CliError::Validation(format!("{} = {v} leaves the simplex", self.name())));
        }
        for (i, x) in l.iter_mut().enumerate() {
            *x = if i == slot {
                v
            } else if rest > 0.0 {
                *x * (1.0 - v) / rest
            } else {
                0.0
            };
        }
        Ok(XStateParams::new(l[0], l[3], l[1], l[2], p.phi, p.eta)?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Phi => "phi",
            SweepParam::Lambda0 => "lambda0",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::Lambda3 => "lambda3",
        }
    }
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowOutcome {
    Invalid(String),
    Failed(String),
    Done(Box<AnalysisReport>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: RowOutcome,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            RowOutcome::Invalid(_) => "invalid",
            RowOutcome::Failed(_) => "error",
            RowOutcome::Done(r) if r.certified() => "ok",
            RowOutcome::Done(_) => "upper_bound",
        }
    }
}

/// Evaluates every grid point. Row failures are recorded, not propagated.
pub fn run_sweep(base: &XStateParams, param: SweepParam, values: &[f64], opts: &AnalysisOptions) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| {
            let outcome = match param.apply(base, value) {
                Err(e) => RowOutcome::Invalid(e.to_string()),
                Ok(p) => match analyze_params(p.into(), &p, opts, Instant::now()) {
                    Ok(r) => RowOutcome::Done(Box::new(r)),
                    Err(e) if e.exit_code() == 2 => RowOutcome::Invalid(e.to_string()),
                    Err(e) => RowOutcome::Failed(e.to_string()),
                },
            };
            SweepRow { value, outcome }
        })
        .collect()
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the rows as CSV. The `oracle_gap` column is present only when
/// `with_oracle` is set.
pub fn write_csv<W: Write>(out: W, param: SweepParam, rows: &[SweepRow], with_oracle: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![param.name(), "concurrence", "e_r", "method", "certified"];
    if with_oracle {
        header.push("oracle_gap");
    }
    header.push("status");
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![real(row.value)];
        match &row.outcome {
            RowOutcome::Done(r) => {
                rec.extend([real(r.concurrence), real(r.e_r), r.method.clone(), r.certified().to_string()]);
                if with_oracle {
                    rec.push(r.oracle.map_or(String::new(), |o| real(o.gap)));
                }
            }
            _ => {
                rec.extend(std::iter::repeat_n(String::new(), if with_oracle { 5 } else { 4 }));
            }
        }
        rec.push(row.status().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
