//! Input series, event calendars, lag windows, normalization and synthetic
//! data with known components.

mod calendar;
mod csv_io;
mod norm;
pub mod synth;
mod window;

pub use calendar::EventCalendar;
pub use csv_io::{format_real, ingest_csv, parse_series_csv, write_series_csv};
pub use norm::NormStats;
pub use synth::{synth_generate, write_truth_csv, SynthOutput, SynthSpec};
pub use window::{build_windows, build_windows_range, WindowBatch};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive date range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Range(format!("range end {end} precedes start {start}")));
        }
        Ok(DateRange { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

/// Aligned daily series: `values[m][i]` is series `m` on `dates[i]`.
///
/// Day indices used by the seasonal and event heads count days from
/// `origin`, which is the first date unless the frame was cut out of a longer
/// one.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesFrame {
    series_ids: Vec<String>,
    dates: Vec<NaiveDate>,
    values: Vec<Vec<f64>>,
    origin: NaiveDate,
}

impl SeriesFrame {
    pub fn new(series_ids: Vec<String>, dates: Vec<NaiveDate>, values: Vec<Vec<f64>>) -> Result<Self> {
        if series_ids.is_empty() || series_ids.len() != values.len() {
            return Err(Error::Csv(format!(
                "{} series ids for {} value rows",
                series_ids.len(),
                values.len()
            )));
        }
        if dates.is_empty() {
            return Err(Error::InsufficientData { needed: 1, available: 0 });
        }
        for (id, row) in series_ids.iter().zip(&values) {
            if row.len() != dates.len() {
                return Err(Error::Csv(format!("series {id:?} has {} values for {} dates", row.len(), dates.len())));
            }
            if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i + 1,
                    column: 0,
                    header: id.clone(),
                    value: row[i].to_string(),
                });
            }
        }
        for pair in dates.windows(2) {
            let next = pair[0].succ_opt().expect("date in range");
            if pair[1] == pair[0] {
                return Err(Error::Duplicate(pair[1]));
            }
            if pair[1] != next {
                return Err(Error::Gap { missing: next });
            }
        }
        let origin = dates[0];
        Ok(SeriesFrame {
            series_ids,
            dates,
            values,
            origin,
        })
    }

    pub fn num_series(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn series(&self, m: usize) -> &[f64] {
        &self.values[m]
    }

    pub fn origin(&self) -> NaiveDate {
        self.origin
    }

    /// Day index of row `i` relative to the origin.
    pub fn day(&self, i: usize) -> i64 {
        (self.dates[i] - self.origin).num_days()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - *self.dates.first()?).num_days();
        usize::try_from(offset).ok().filter(|&i| i < self.len())
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.series_ids.iter().position(|s| s == id)
    }

    /// Rows `start..end`, keeping this frame's origin.
    pub fn slice(&self, start: usize, end: usize) -> Result<SeriesFrame> {
        if start >= end || end > self.len() {
            return Err(Error::Range(format!("rows {start}..{end} of {}", self.len())));
        }
        Ok(SeriesFrame {
            series_ids: self.series_ids.clone(),
            dates: self.dates[start..end].to_vec(),
            values: self.values.iter().map(|r| r[start..end].to_vec()).collect(),
            origin: self.origin,
        })
    }

    /// Rows dated on or before `last`.
    pub fn until(&self, last: NaiveDate) -> Result<SeriesFrame> {
        let end = self.dates.iter().take_while(|&&d| d <= last).count();
        if end == 0 {
            return Err(Error::Range(format!("no data on or before {last}")));
        }
        self.slice(0, end)
    }

    /// Row indices covered by `range`, which must lie inside the frame.
    pub fn rows_of(&self, range: &DateRange) -> Result<std::ops::Range<usize>> {
        let start = self
            .index_of(range.start)
            .ok_or_else(|| Error::Range(format!("{} is outside the data", range.start)))?;
        let end = self
            .index_of(range.end)
            .ok_or_else(|| Error::Range(format!("{} is outside the data", range.end)))?;
        Ok(start..end + 1)
    }

    pub(crate) fn map_series(&self, mut f: impl FnMut(usize, f64) -> f64) -> SeriesFrame {
        SeriesFrame {
            series_ids: self.series_ids.clone(),
            dates: self.dates.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(m, row)| row.iter().map(|&v| f(m, v)).collect())
                .collect(),
            origin: self.origin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_gaps_and_duplicates() {
        let ids = vec!["a".to_string()];
        let gap = SeriesFrame::new(ids.clone(), vec![d("2018-01-01"), d("2018-01-03")], vec![vec![1., 2.]]);
        assert!(matches!(gap, Err(Error::Gap { missing }) if missing == d("2018-01-02")));
        let dup = SeriesFrame::new(ids, vec![d("2018-01-01"), d("2018-01-01")], vec![vec![1., 2.]]);
        assert!(matches!(dup, Err(Error::Duplicate(_))));
    }

    #[test]
    fn slicing_keeps_day_origin() {
        let dates: Vec<_> = d("2018-01-01").iter_days().take(5).collect();
        let f = SeriesFrame::new(vec!["a".into()], dates, vec![vec![0., 1., 2., 3., 4.]]).unwrap();
        let tail = f.slice(2, 5).unwrap();
        assert_eq!(tail.day(0), 2);
        assert_eq!(f.until(d("2018-01-02")).unwrap().len(), 2);
        assert_eq!(f.index_of(d("2018-01-04")), Some(3));
        assert_eq!(f.index_of(d("2017-12-31")), None);
    }
}
