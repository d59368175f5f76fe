//! Station CSV ingestion and calendar-year block maxima.
//!
//! Input is a CSV with a station column, an ISO-8601 (`YYYY-MM-DD`) date
//! column, and a real-valued column. Rows are grouped per station and sorted
//! by date; missing values (empty, `NA`, `NaN`, or absent days inside the
//! covered range) are filled by linear interpolation over days and counted.
//! Unparseable rows are collected into a rejects report instead of aborting
//! the ingest.

use std::collections::HashMap;
use std::io::Read;

use chrono::{Datelike, Days, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::BlockMaxSeries;

#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub station_col: String,
    pub date_col: String,
    pub value_col: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { station_col: "station".into(), date_col: "date".into(), value_col: "value".into() }
    }
}

/// Fraction of filled values above which a station is flagged.
pub const MISSING_FLAG_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct StationSeries {
    pub station_id: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    /// Number of values produced by interpolation rather than observation.
    pub missing_filled: usize,
    /// More than [`MISSING_FLAG_FRACTION`] of the series was interpolated.
    pub flagged_missing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub stations: Vec<StationSeries>,
    pub rejects: Vec<RejectedRow>,
}

fn is_missing_token(t: &str) -> bool {
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") || t == "-"
}

/// Ingest a station CSV. Stations come back in first-appearance order; each
/// series is dense over its covered date range with gaps interpolated.
pub fn ingest_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Data(format!("cannot read header: {e}")))?;
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("missing column `{name}` in header")))
    };
    let c_station = find(&schema.station_col)?;
    let c_date = find(&schema.date_col)?;
    let c_value = find(&schema.value_col)?;

    let mut order: Vec<String> = Vec::new();
    let mut raw: HashMap<String, HashMap<NaiveDate, Option<f64>>> = HashMap::new();
    let mut rejects = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RejectedRow { line, reason: format!("unparseable row: {e}") });
                continue;
            }
        };
        let field = |c: usize| record.get(c).map(str::trim);
        let (Some(station), Some(date_s), Some(value_s)) =
            (field(c_station), field(c_date), field(c_value))
        else {
            rejects.push(RejectedRow { line, reason: "short row".into() });
            continue;
        };
        let Ok(date) = NaiveDate::parse_from_str(date_s, "%Y-%m-%d") else {
            rejects.push(RejectedRow { line, reason: format!("bad date `{date_s}`") });
            continue;
        };
        let value = if is_missing_token(value_s) {
            None
        } else {
            match value_s.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                Ok(_) => None,
                Err(_) => {
                    rejects.push(RejectedRow { line, reason: format!("bad value `{value_s}`") });
                    continue;
                }
            }
        };
        let per_station = raw.entry(station.to_string()).or_insert_with(|| {
            order.push(station.to_string());
            HashMap::new()
        });
        if per_station.insert(date, value).is_some() {
            rejects.push(RejectedRow { line, reason: format!("duplicate date {date} (kept last)") });
        }
    }

    let mut stations = Vec::with_capacity(order.len());
    for id in order {
        let by_date = &raw[&id];
        let mut dates: Vec<NaiveDate> = by_date.keys().copied().collect();
        dates.sort();
        let (first, last) = (dates[0], *dates.last().expect("non-empty"));

        // Dense daily grid over the covered range; absent days are missing.
        let mut grid_dates = Vec::new();
        let mut grid_values: Vec<Option<f64>> = Vec::new();
        let mut d = first;
        while d <= last {
            grid_dates.push(d);
            grid_values.push(by_date.get(&d).copied().flatten());
            d = d.checked_add_days(Days::new(1)).expect("date in range");
        }

        if grid_values.iter().all(Option::is_none) {
            rejects.push(RejectedRow {
                line: 0,
                reason: format!("station {id}: no usable values, dropped"),
            });
            continue;
        }

        let (values, missing_filled) = interpolate(&grid_values);
        let flagged_missing =
            missing_filled as f64 > MISSING_FLAG_FRACTION * grid_values.len() as f64;
        stations.push(StationSeries {
            station_id: id,
            dates: grid_dates,
            values,
            missing_filled,
            flagged_missing,
        });
    }
    Ok(IngestReport { stations, rejects })
}

/// Linear interpolation of `None` runs between observed neighbors; leading
/// and trailing runs take the nearest observed value.
fn interpolate(grid: &[Option<f64>]) -> (Vec<f64>, usize) {
    let n = grid.len();
    let mut out = vec![0.0; n];
    let mut filled = 0;
    let mut i = 0;
    while i < n {
        if let Some(v) = grid[i] {
            out[i] = v;
            i += 1;
            continue;
        }
        let run_start = i;
        while i < n && grid[i].is_none() {
            i += 1;
        }
        let left = run_start.checked_sub(1).and_then(|j| grid[j]);
        let right = if i < n { grid[i] } else { None };
        for (offset, slot) in out[run_start..i].iter_mut().enumerate() {
            *slot = match (left, right) {
                (Some(a), Some(b)) => {
                    let span = (i - run_start + 1) as f64;
                    a + (b - a) * (offset + 1) as f64 / span
                }
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("all-missing stations are dropped"),
            };
            filled += 1;
        }
    }
    (out, filled)
}

/// Complete calendar years covered by the series (Jan 1 through Dec 31 inside
/// the date range).
fn complete_years(s: &StationSeries) -> Vec<i32> {
    let (first, last) = (s.dates[0], *s.dates.last().expect("non-empty"));
    let mut years = Vec::new();
    for y in first.year()..=last.year() {
        let jan1 = NaiveDate::from_ymd_opt(y, 1, 1).expect("valid");
        let dec31 = NaiveDate::from_ymd_opt(y, 12, 31).expect("valid");
        if jan1 >= first && dec31 <= last {
            years.push(y);
        }
    }
    years
}

/// One maximum per complete calendar year of a station series. Leap years
/// are handled by calendar date, not a fixed block of 365.
pub fn yearly_block_maxima(s: &StationSeries) -> Result<BlockMaxSeries> {
    let years = complete_years(s);
    if years.is_empty() {
        return Err(Error::InsufficientData(format!(
            "station {}: no complete calendar year in range {}..{}",
            s.station_id,
            s.dates[0],
            s.dates.last().expect("non-empty")
        )));
    }
    let mut maxima = Vec::with_capacity(years.len());
    for &y in &years {
        let mx = s
            .dates
            .iter()
            .zip(&s.values)
            .filter(|(d, _)| d.year() == y)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        maxima.push(mx);
    }
    let n_blocks = maxima.len();
    Ok(BlockMaxSeries {
        maxima,
        block_length: 365,
        n_blocks,
        source_label: format!("{}:yearly", s.station_id),
    })
}

/// Yearly maxima pooled across stations by concatenation, in station order.
/// The pooled count is the sum of complete station-years.
pub fn pooled_yearly_maxima(stations: &[StationSeries]) -> Result<BlockMaxSeries> {
    let mut maxima = Vec::new();
    for s in stations {
        maxima.extend(yearly_block_maxima(s)?.maxima);
    }
    if maxima.is_empty() {
        return Err(Error::InsufficientData("no stations with a complete year".into()));
    }
    let n_blocks = maxima.len();
    Ok(BlockMaxSeries { maxima, block_length: 365, n_blocks, source_label: "pooled:yearly".into() })
}
