use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

use super::csv_io::{csv_error, parse_date};

/// Dates on which each event type is active.
///
/// Dates not in the calendar have no active events.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventCalendar {
    event_types: Vec<String>,
    membership: BTreeMap<NaiveDate, Vec<bool>>,
}

impl EventCalendar {
    pub fn new(event_types: Vec<String>) -> Self {
        EventCalendar {
            event_types,
            membership: BTreeMap::new(),
        }
    }

    /// One event type active on the first day of every month in `[start, end]`.
    pub fn month_starts(name: &str, start: NaiveDate, end: NaiveDate) -> Self {
        let mut cal = EventCalendar::new(vec![name.to_string()]);
        for d in start.iter_days().take_while(|d| *d <= end) {
            if d.day() == 1 {
                cal.mark(d, 0);
            }
        }
        cal
    }

    pub fn event_types(&self) -> &[String] {
        &self.event_types
    }

    /// Number of event types `L`.
    pub fn len(&self) -> usize {
        self.event_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_types.is_empty()
    }

    pub fn mark(&mut self, date: NaiveDate, event: usize) {
        let l = self.event_types.len();
        self.membership.entry(date).or_insert_with(|| vec![false; l])[event] = true;
    }

    /// Adds `name` as a new type if unseen, then marks it on `date`.
    pub fn mark_named(&mut self, date: NaiveDate, name: &str) {
        let idx = match self.event_types.iter().position(|e| e == name) {
            Some(i) => i,
            None => {
                self.event_types.push(name.to_string());
                for v in self.membership.values_mut() {
                    v.push(false);
                }
                self.event_types.len() - 1
            }
        };
        self.mark(date, idx);
    }

    /// Binary indicator vector for `date`, as reals.
    pub fn indicators(&self, date: NaiveDate) -> Vec<f64> {
        match self.membership.get(&date) {
            Some(v) => v.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            None => vec![0.0; self.event_types.len()],
        }
    }

    /// All `(date, event type)` pairs in date order.
    pub fn entries(&self) -> impl Iterator<Item = (NaiveDate, &str)> {
        self.membership.iter().flat_map(move |(d, v)| {
            v.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(move |(i, _)| (*d, self.event_types[i].as_str()))
        })
    }

    /// Reads `date,event_type` rows. Event types are numbered in order of
    /// first appearance.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::parse_csv(file)
    }

    pub fn parse_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.len() != 2 || !headers[0].eq_ignore_ascii_case("date") {
            return Err(Error::Csv("event calendar header must be `date,event_type`".into()));
        }
        let mut cal = EventCalendar::default();
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let date = parse_date(&record[0], line)?;
            let name = record.get(1).unwrap_or_default();
            if name.is_empty() {
                return Err(Error::Csv(format!("line {line}: empty event type")));
            }
            cal.mark_named(date, name);
        }
        Ok(cal)
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "event_type"]).map_err(csv_error)?;
        for (d, name) in self.entries() {
            w.write_record([d.to_string().as_str(), name]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}
