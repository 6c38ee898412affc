//! CSV ingestion.
//!
//! One CSV per asset with header `date,open,high,low,close,volume`, plus a
//! risk-free CSV with header `date,rate`. Dates are ISO-8601. The trading
//! calendar is the risk-free file's dates restricted to the requested range;
//! every asset must cover exactly those dates.

use super::panel::PricePanel;
use super::MarketError;
use chrono::NaiveDate;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

/// One parsed row of an asset CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcvRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

fn parse_date(s: &str, path: &str, line: u64) -> Result<NaiveDate, MarketError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| MarketError::MalformedRow {
        path: path.to_string(),
        line,
        msg: format!("bad date {s:?}: {e}"),
    })
}

fn parse_number(s: &str, field: &str, path: &str, line: u64) -> Result<f64, MarketError> {
    let v: f64 = s.trim().parse().map_err(|_| MarketError::MalformedRow {
        path: path.to_string(),
        line,
        msg: format!("bad {field} value {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(MarketError::MalformedRow {
            path: path.to_string(),
            line,
            msg: format!("non-finite {field} value {s:?}"),
        });
    }
    Ok(v)
}

/// Parses one asset's OHLCV CSV. `label` only appears in error messages.
pub fn parse_asset_csv<R: Read>(label: &str, reader: R) -> Result<Vec<OhlcvRow>, MarketError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    {
        let headers = csv.headers().map_err(|e| MarketError::MalformedRow {
            path: label.to_string(),
            line: 1,
            msg: e.to_string(),
        })?;
        let expected = ["date", "open", "high", "low", "close", "volume"];
        let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if got != expected {
            return Err(MarketError::MalformedRow {
                path: label.to_string(),
                line: 1,
                msg: format!("expected header date,open,high,low,close,volume, got {got:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| MarketError::MalformedRow {
            path: label.to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 6 {
            return Err(MarketError::MalformedRow {
                path: label.to_string(),
                line,
                msg: format!("expected 6 fields, got {}", record.len()),
            });
        }
        let date = parse_date(&record[0], label, line)?;
        let row = OhlcvRow {
            date,
            open: parse_number(&record[1], "open", label, line)?,
            high: parse_number(&record[2], "high", label, line)?,
            low: parse_number(&record[3], "low", label, line)?,
            close: parse_number(&record[4], "close", label, line)?,
            volume: parse_number(&record[5], "volume", label, line)?,
        };
        for price in [row.open, row.high, row.low, row.close] {
            if !(price > 0.0) {
                return Err(MarketError::NonPositivePrice { asset: label.to_string(), date });
            }
        }
        if row.volume < 0.0 {
            return Err(MarketError::NegativeVolume { asset: label.to_string(), date });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Parses the risk-free CSV (`date,rate`, rate as a daily decimal fraction).
pub fn parse_risk_free_csv<R: Read>(reader: R) -> Result<Vec<(NaiveDate, f64)>, MarketError> {
    let label = "risk_free";
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    {
        let headers = csv.headers().map_err(|e| MarketError::MalformedRow {
            path: label.to_string(),
            line: 1,
            msg: e.to_string(),
        })?;
        let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if got != ["date", "rate"] {
            return Err(MarketError::MalformedRow {
                path: label.to_string(),
                line: 1,
                msg: format!("expected header date,rate, got {got:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| MarketError::MalformedRow {
            path: label.to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(MarketError::MalformedRow {
                path: label.to_string(),
                line,
                msg: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let date = parse_date(&record[0], label, line)?;
        let rate = parse_number(&record[1], "rate", label, line)?;
        rows.push((date, rate));
    }
    Ok(rows)
}

fn open_file(path: &Path) -> Result<File, MarketError> {
    if !path.exists() {
        return Err(MarketError::MissingFile(path.to_path_buf()));
    }
    File::open(path).map_err(|source| MarketError::Io { path: path.to_path_buf(), source })
}

/// Loads an aligned panel from one CSV per asset plus the risk-free CSV.
///
/// The calendar is the risk-free file's dates restricted to `calendar`
/// (inclusive, `None` bound means unbounded). An asset missing any calendar
/// date is rejected; asset rows outside the calendar are ignored.
pub fn load_panel(
    asset_files: &[(String, PathBuf)],
    risk_free_path: &Path,
    calendar: (Option<NaiveDate>, Option<NaiveDate>),
) -> Result<PricePanel, MarketError> {
    let rf_rows = parse_risk_free_csv(open_file(risk_free_path)?)?;
    let (start, end) = calendar;
    let mut rf_map = BTreeMap::new();
    for (date, rate) in rf_rows {
        if start.is_some_and(|s| date < s) || end.is_some_and(|e| date > e) {
            continue;
        }
        if rf_map.insert(date, rate).is_some() {
            return Err(MarketError::CalendarMisalignment {
                asset: "risk_free".to_string(),
                msg: format!("duplicate date {date}"),
            });
        }
    }
    if rf_map.is_empty() {
        return Err(MarketError::EmptyCalendar);
    }
    let dates: Vec<NaiveDate> = rf_map.keys().copied().collect();
    let risk_free: Vec<f64> = rf_map.values().copied().collect();

    let n = asset_files.len();
    let t = dates.len();
    let mut open = vec![Vec::with_capacity(t); n];
    let mut high = vec![Vec::with_capacity(t); n];
    let mut low = vec![Vec::with_capacity(t); n];
    let mut close = vec![Vec::with_capacity(t); n];
    let mut volume = vec![Vec::with_capacity(t); n];

    for (a, (name, path)) in asset_files.iter().enumerate() {
        let rows = parse_asset_csv(name, open_file(path)?)?;
        let mut by_date = BTreeMap::new();
        for row in rows {
            if by_date.insert(row.date, row).is_some() {
                return Err(MarketError::CalendarMisalignment {
                    asset: name.clone(),
                    msg: format!("duplicate date {}", row.date),
                });
            }
        }
        for date in &dates {
            let row = by_date.get(date).ok_or_else(|| MarketError::CalendarMisalignment {
                asset: name.clone(),
                msg: format!("missing calendar date {date}"),
            })?;
            open[a].push(row.open);
            high[a].push(row.high);
            low[a].push(row.low);
            close[a].push(row.close);
            volume[a].push(row.volume);
        }
    }

    let assets = asset_files.iter().map(|(name, _)| name.clone()).collect();
    PricePanel::new(assets, dates, open, high, low, close, volume, risk_free)
}

/// Loads every `*.csv` in `dir` (sorted by file name, stem used as the asset
/// name) against the given risk-free CSV.
pub fn load_panel_from_dir(
    dir: &Path,
    risk_free_path: &Path,
    calendar: (Option<NaiveDate>, Option<NaiveDate>),
) -> Result<PricePanel, MarketError> {
    if !dir.is_dir() {
        return Err(MarketError::MissingFile(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    let entries =
        std::fs::read_dir(dir).map_err(|source| MarketError::Io { path: dir.to_path_buf(), source })?;
    for entry in entries {
        let entry = entry.map_err(|source| MarketError::Io { path: dir.to_path_buf(), source })?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")) {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.to_string_lossy().into_owned());
            files.push((name, path));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(MarketError::MissingFile(dir.join("*.csv")));
    }
    load_panel(&files, risk_free_path, calendar)
}
