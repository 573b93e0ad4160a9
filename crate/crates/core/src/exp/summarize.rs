use std::io::{Read, Write};
use std::path::Path;

use super::format::fmt_float;
use crate::error::{Error, Result};
use crate::pipeline::mean_stderr;

const COLUMNS: [&str; 8] = ["sweep_param", "value", "scheme", "seed", "sum_rate_bits", "iterations", "wall_ms", "converged"];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub value: f64,
    pub scheme: String,
    pub mean_bits: f64,
    pub stderr_bits: f64,
    pub n_seeds: usize,
}

fn malformed(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("row {line}: {msg}"))
}

/// Mean and standard error per `(sweep value, scheme)` in first-seen order.
///
/// Empty input, with or without a header, yields no rows.
pub fn summarize<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut groups: Vec<(String, f64, String, Vec<f64>)> = Vec::new();
    let mut seen_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            let header: Vec<&str> = record.iter().collect();
            if header != COLUMNS {
                return Err(malformed(line, format!("expected header {}", COLUMNS.join(","))));
            }
            seen_header = true;
            continue;
        }
        if record.len() != COLUMNS.len() {
            return Err(malformed(line, format!("expected {} fields, found {}", COLUMNS.len(), record.len())));
        }
        let number = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| malformed(line, format!("{} is not a number: {:?}", COLUMNS[i], &record[i])))
        };
        let value = number(1)?;
        let rate = number(4)?;
        record[3].parse::<u64>().map_err(|_| malformed(line, format!("seed is not an integer: {:?}", &record[3])))?;
        let (param, scheme) = (&record[0], &record[2]);
        match groups.iter_mut().find(|g| g.0 == param && g.1.to_bits() == value.to_bits() && g.2 == scheme) {
            Some(g) => g.3.push(rate),
            None => groups.push((param.to_string(), value, scheme.to_string(), vec![rate])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(sweep_param, value, scheme, rates)| {
            let (mean_bits, stderr_bits) = mean_stderr(&rates);
            SummaryRow { sweep_param, value, scheme, mean_bits, stderr_bits, n_seeds: rates.len() }
        })
        .collect())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_param", "value", "scheme", "mean_bits", "stderr_bits", "n_seeds"])?;
    for r in rows {
        w.write_record([
            r.sweep_param.clone(),
            fmt_float(r.value),
            r.scheme.clone(),
            fmt_float(r.mean_bits),
            fmt_float(r.stderr_bits),
            r.n_seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Summarizes a results file into CSV text.
pub fn summarize_file(path: &Path) -> Result<String> {
    let file = std::fs::File::open(path)?;
    let rows = summarize(file)?;
    let mut buf = Vec::new();
    write_summary(&rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
