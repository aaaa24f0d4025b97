use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

use super::SeriesFrame;

/// Seventeen significant digits: enough for any `f64` to survive a text
/// round trip unchanged.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    s.trim().parse::<NaiveDate>().map_err(|e| Error::Date {
        row,
        value: s.to_string(),
        reason: e.to_string(),
    })
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv(format!("{other:?}")),
    }
}

/// Reads `date,<id1>,...,<idM>` with ISO-8601 dates. Rows may come in any
/// order; after sorting, dates must be consecutive days without repeats.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<SeriesFrame> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    parse_series_csv(file)
}

pub fn parse_series_csv(reader: impl Read) -> Result<SeriesFrame> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("date") {
        return Err(Error::Csv(format!(
            "header must be `date,<series...>`, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::Csv(format!(
                "line {line}: {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let date = parse_date(&record[0], line)?;
        let mut values = Vec::with_capacity(ids.len());
        for (col, cell) in record.iter().enumerate().skip(1) {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: line,
                    column: col + 1,
                    header: headers[col].to_string(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
        rows.push((date, values));
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    rows.sort_by_key(|(d, _)| *d);

    let dates: Vec<NaiveDate> = rows.iter().map(|(d, _)| *d).collect();
    let values = (0..ids.len())
        .map(|m| rows.iter().map(|(_, v)| v[m]).collect())
        .collect();
    SeriesFrame::new(ids, dates, values)
}

pub fn write_series_csv(frame: &SeriesFrame, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(frame.series_ids().iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    for (i, date) in frame.dates().iter().enumerate() {
        let mut row = vec![date.to_string()];
        row.extend((0..frame.num_series()).map(|m| format_real(frame.series(m)[i])));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
