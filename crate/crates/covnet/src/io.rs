//! CSV readers and writers for the three input files and the dump outputs.
//!
//! Inputs: `date,ticker,close` prices, `date,analyst_id,ticker` estimates and
//! `ticker,industry` codes. Header rows are mandatory; dates are ISO-8601.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDate;
use covnet_core::market_data::{align_prices, DataQuality, EstimateSet, PriceObservation, RawEstimate};
use covnet_core::{EstimateRecord, IndustryMap, PricePanel};
use serde::Serialize;

use crate::error::{Error, Result};

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::data(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = r.headers().map_err(|e| Error::data(path, e))?.clone();
    if found.is_empty() {
        return Err(Error::data(path, "empty file"));
    }
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::data(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(r)
}

/// Data rows with their 1-based row number (header excluded).
fn rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut r = reader(path, header)?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::data(path, format!("row {}: {e}", k + 1)))?;
        out.push((k + 1, rec));
    }
    Ok(out)
}

fn parse_date(path: &Path, row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::data(path, format!("row {row}: unparseable date `{s}`")))
}

pub fn read_price_observations(path: &Path) -> Result<Vec<PriceObservation>> {
    rows(path, &["date", "ticker", "close"])?
        .into_iter()
        .map(|(row, rec)| {
            let date = parse_date(path, row, &rec[0])?;
            let close: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| Error::data(path, format!("row {row}: unparseable price `{}`", &rec[2])))?;
            Ok(PriceObservation {
                row,
                date,
                ticker: rec[1].trim().to_string(),
                close,
            })
        })
        .collect()
}

/// Loads and aligns a long-format price file.
pub fn load_price_panel(path: &Path, max_missing: f64) -> Result<(PricePanel, DataQuality)> {
    let obs = read_price_observations(path)?;
    if obs.is_empty() {
        return Err(Error::data(path, "empty file"));
    }
    align_prices(&obs, max_missing).map_err(|e| Error::data(path, e))
}

pub fn load_estimates(path: &Path, panel: &PricePanel) -> Result<EstimateSet> {
    let raw = rows(path, &["date", "analyst_id", "ticker"])?
        .into_iter()
        .map(|(row, rec)| {
            Ok(RawEstimate {
                row,
                date: parse_date(path, row, &rec[0])?,
                analyst_id: rec[1].trim().to_string(),
                ticker: rec[2].trim().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateSet::from_raw(&raw, panel))
}

pub fn load_industries(path: &Path, panel: &PricePanel) -> Result<IndustryMap> {
    let pairs: Vec<(String, String)> = rows(path, &["ticker", "industry"])?
        .into_iter()
        .map(|(_, rec)| (rec[0].trim().to_string(), rec[1].trim().to_string()))
        .collect();
    IndustryMap::from_pairs(&pairs, panel).map_err(|e| Error::data(path, e))
}

/// Writes rows of any serializable record type under `header`.
pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::data(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::data(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    let fail = |e: csv::Error| Error::data(path, e);
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::data(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::data(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::data(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::data(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::data(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(path, e))
}

pub fn write_price_panel(path: &Path, panel: &PricePanel) -> Result<()> {
    let rows = (0..panel.n_dates()).flat_map(|t| (0..panel.n_firms()).map(move |i| (panel.date(t), panel.firm(i), panel.price(t, i))));
    write_csv(path, &["date", "ticker", "close"], rows)
}

pub fn write_estimates(path: &Path, records: &[EstimateRecord], panel: &PricePanel) -> Result<()> {
    let rows = records.iter().map(|r| (r.date, r.analyst_id.as_str(), panel.firm(r.firm)));
    write_csv(path, &["date", "analyst_id", "ticker"], rows)
}

pub fn write_industries(path: &Path, map: &IndustryMap, panel: &PricePanel) -> Result<()> {
    let rows = (0..panel.n_firms()).map(|i| (panel.firm(i), map.code(i)));
    write_csv(path, &["ticker", "industry"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn complete_panel_has_no_fills() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("date,ticker,close\n");
        for d in 1..=4 {
            for t in ["A", "B", "C"] {
                text.push_str(&format!("2020-01-0{d},{t},{}.5\n", 10 + d));
            }
        }
        let (panel, q) = load_price_panel(&file(dir.path(), "p.csv", &text), 0.05).unwrap();
        assert_eq!((panel.n_dates(), panel.n_firms()), (4, 3));
        assert_eq!(q.cells_filled(), 0);
    }

    #[test]
    fn negative_price_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("date,ticker,close\n");
        for k in 1..=20 {
            let close = if k == 17 { "-1.0".to_string() } else { "5".to_string() };
            text.push_str(&format!("2020-02-{k:02},XYZ,{close}\n"));
        }
        let err = load_price_panel(&file(dir.path(), "p.csv", &text), 0.05).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("row 17"), "{err}");
    }

    #[test]
    fn bad_dates_headers_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let bad_date = file(dir.path(), "a.csv", "date,ticker,close\n2020-13-01,A,1\n");
        assert!(load_price_panel(&bad_date, 0.05).unwrap_err().to_string().contains("row 1"));
        let bad_header = file(dir.path(), "b.csv", "day,ticker,close\n");
        assert!(load_price_panel(&bad_header, 0.05).is_err());
        let empty = file(dir.path(), "c.csv", "");
        assert!(load_price_panel(&empty, 0.05).is_err());
        let header_only = file(dir.path(), "d.csv", "date,ticker,close\n");
        assert!(load_price_panel(&header_only, 0.05).is_err());
        let missing = dir.path().join("nope.csv");
        let err = load_price_panel(&missing, 0.05).unwrap_err();
        assert!(err.to_string().contains("nope.csv"));
    }

    #[test]
    fn estimates_dedup_and_drop() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(dir.path(), "p.csv", "date,ticker,close\n2020-01-02,A,1\n2020-01-02,B,2\n2020-01-03,A,1\n2020-01-03,B,2\n");
        let (panel, _) = load_price_panel(&p, 0.05).unwrap();
        let e = file(
            dir.path(),
            "e.csv",
            "date,analyst_id,ticker\n2020-01-02,x,A\n2020-01-02,x,B\n2020-01-02,x,A\n2020-01-03,y,A\n2020-01-03,y,B\n2020-01-03,y,ZZZ\n",
        );
        let set = load_estimates(&e, &panel).unwrap();
        assert_eq!(set.records.len(), 4);
        assert_eq!((set.duplicates_removed, set.dropped_unknown_ticker), (1, 1));
        let empty = file(dir.path(), "f.csv", "date,analyst_id,ticker\n");
        assert!(load_estimates(&empty, &panel).unwrap().empty_input);
        let ind = file(dir.path(), "i.csv", "ticker,industry\nA,10\n");
        assert!(load_industries(&ind, &panel).unwrap_err().to_string().contains('B'));
        let conflict = file(dir.path(), "j.csv", "ticker,industry\nA,10\nB,20\nA,30\n");
        assert!(load_industries(&conflict, &panel).is_err());
    }
}
