//! Two-column `time,abundance` CSV.

use std::io::{Read, Write};

use anyhow::Context;
use wzrisk::estimate::TimeSeries;

use crate::errors::ParseError;

fn parse_field(s: &str, what: &str, line: u64) -> Result<f64, ParseError> {
    s.trim().parse::<f64>().map_err(|_| ParseError {
        line: Some(line),
        msg: format!("cannot read {what} from '{s}'"),
    })
}

/// Reads a series; a first row that is not numeric is taken as a header.
pub fn read_series<R: Read>(r: R) -> anyhow::Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(ParseError { line: Some(line), msg: format!("expected 2 fields, found {}", rec.len()) }.into());
        }
        if i == 0 && rec[0].parse::<f64>().is_err() {
            continue;
        }
        times.push(parse_field(&rec[0], "time", line)?);
        values.push(parse_field(&rec[1], "abundance", line)?);
    }
    Ok(TimeSeries::new(times, values)?)
}

pub fn read_series_file(path: &std::path::Path) -> anyhow::Result<TimeSeries> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_series(f).with_context(|| format!("reading {}", path.display()))
}

/// Writes with a header; floats use the shortest exact representation.
pub fn write_series<W: Write>(w: W, s: &TimeSeries) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time", "abundance"])?;
    for (t, v) in s.times().iter().zip(s.values()) {
        wtr.write_record([t.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
