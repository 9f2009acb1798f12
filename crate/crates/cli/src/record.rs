//! The estimate row shared by `simulate` and `tables`, and format writers.

use crate::config::Format;
use crate::error::CliResult;
use mtp_core::{DependenceModel, Estimate, Metric};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Column order of [`Record`] in CSV output.
pub const CSV_HEADER: &str = "procedure,sided,k,metric,n,alpha,lambda1,delta,model,reps,seed,estimate,std_error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub procedure: String,
    pub sided: String,
    pub k: u32,
    pub metric: String,
    pub n: u64,
    pub alpha: f64,
    pub lambda1: Option<f64>,
    pub delta: Option<f64>,
    pub model: String,
    pub reps: u64,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
}

impl Record {
    pub fn from_estimate(e: &Estimate, model: &DependenceModel, alpha: f64) -> Self {
        let spec = &e.meta.procedure;
        let k = if e.meta.metric == Metric::Kfwer { e.meta.k } else { spec.k() };
        let schedule = model.schedule();
        Record {
            procedure: spec.family().to_string(),
            sided: spec.sided().to_string(),
            k,
            metric: e.meta.metric.to_string(),
            n: model.len() as u64,
            alpha,
            lambda1: schedule.map(|s| s.lambda1),
            delta: schedule.map(|s| s.delta),
            model: model.kind().to_string(),
            reps: e.replicates,
            seed: e.seed,
            estimate: e.value,
            std_error: e.std_error,
        }
    }
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> CliResult<Vec<Record>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<Record>, _>>()?)
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> CliResult<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_markdown<W: Write>(mut out: W, records: &[Record]) -> CliResult<()> {
    writeln!(out, "| {} |", CSV_HEADER.replace(',', " | "))?;
    writeln!(out, "|{}", "---|".repeat(CSV_HEADER.split(',').count()))?;
    for r in records {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {:.6} | {:.6} |",
            r.procedure,
            r.sided,
            r.k,
            r.metric,
            r.n,
            r.alpha,
            opt(r.lambda1),
            opt(r.delta),
            r.model,
            r.reps,
            r.seed,
            r.estimate,
            r.std_error
        )?;
    }
    Ok(())
}

pub fn write_records<W: Write>(out: W, format: Format, records: &[Record]) -> CliResult<()> {
    match format {
        Format::Csv => write_csv(out, records),
        Format::Json => write_json_lines(out, records),
        Format::Md => write_markdown(out, records),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Record {
        Record {
            procedure: "sidak".into(),
            sided: "one".into(),
            k: 1,
            metric: "fwer".into(),
            n: 5000,
            alpha: 0.05,
            lambda1: Some(0.5),
            delta: None,
            model: "product".into(),
            reps: 10_000,
            seed: 7,
            estimate: 0.049_891_234_567_890_12,
            std_error: 1.234e-4,
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[sample()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let mut empty = Vec::new();
        write_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[sample()]).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![sample()]);
    }
}
