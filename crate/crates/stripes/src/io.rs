//! Grid files, JSON reports and CSV tables.
//!
//! Grid format: a header line `d n kappa`, then `n^(d-1)` rows of `n` characters,
//! axis 0 along each row and the remaining axes in row order (axis 1 fastest).
//! `#` or `1` marks a filled cell, `.` or `0` an empty one. Lines starting with
//! `//` and blank lines are ignored.

use crate::diagnostics::{Label, RegionMap};
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::lattice::TorusConfig;
use crate::search::SearchReport;
use crate::stripes1d::SweepRow;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

fn write_rows<F: Fn(usize) -> char>(out: &mut String, d: usize, n: usize, cell: F) {
    for row in 0..n.pow(d as u32 - 1) {
        let line: String = (0..n).map(|x| cell(row * n + x)).collect();
        out.push_str(&line);
        out.push('\n');
    }
}

pub fn grid_to_string(cfg: &TorusConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", cfg.d, cfg.n, cfg.spacing);
    write_rows(&mut s, cfg.d, cfg.n, |i| if cfg.cells[i] { '#' } else { '.' });
    s
}

fn parse_header(lines: &mut dyn Iterator<Item = &str>) -> Result<(usize, usize, f64)> {
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("header must be `d n kappa`, got `{header}`")));
    }
    let d = parts[0].parse().map_err(|_| Error::Parse(format!("bad dimension `{}`", parts[0])))?;
    let n = parts[1].parse().map_err(|_| Error::Parse(format!("bad size `{}`", parts[1])))?;
    let kappa: f64 = parts[2].parse().map_err(|_| Error::Parse(format!("bad spacing `{}`", parts[2])))?;
    if !(1..=3).contains(&d) || n == 0 || !(kappa > 0.0) {
        return Err(Error::Parse("need 1 <= d <= 3, n >= 1, kappa > 0".into()));
    }
    Ok((d, n, kappa))
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with("//"))
}

fn parse_rows<T, F: Fn(char) -> Option<T>>(lines: &mut dyn Iterator<Item = &str>, d: usize, n: usize, f: F) -> Result<Vec<T>> {
    let rows = n.pow(d as u32 - 1);
    let mut out = Vec::with_capacity(rows * n);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("expected {rows} rows, found {r}")))?;
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != n {
            return Err(Error::Parse(format!("row {r} has {} cells, expected {n}", chars.len())));
        }
        for c in chars {
            out.push(f(c).ok_or_else(|| Error::Parse(format!("unexpected character `{c}` in row {r}")))?);
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing rows after the grid".into()));
    }
    Ok(out)
}

pub fn grid_from_str(text: &str) -> Result<TorusConfig> {
    let mut lines = content_lines(text);
    let (d, n, kappa) = parse_header(&mut lines)?;
    let cells = parse_rows(&mut lines, d, n, |c| match c {
        '#' | '1' => Some(true),
        '.' | '0' => Some(false),
        _ => None,
    })?;
    TorusConfig::new(d, n, kappa, cells)
}

pub fn read_grid(path: &Path) -> Result<TorusConfig> {
    grid_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_grid(path: &Path, cfg: &TorusConfig) -> Result<()> {
    Ok(std::fs::write(path, grid_to_string(cfg))?)
}

/// Region labels in the grid layout: `-` for A_-1, `0` for A_0, `i` for A_i.
pub fn regions_to_string(map: &RegionMap) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", map.d, map.n, map.spacing);
    write_rows(&mut s, map.d, map.n, |i| map.labels[i].to_char());
    s
}

pub fn regions_from_str(text: &str) -> Result<(usize, usize, f64, Vec<Label>)> {
    let mut lines = content_lines(text);
    let (d, n, kappa) = parse_header(&mut lines)?;
    let labels = parse_rows(&mut lines, d, n, Label::from_char)?;
    Ok((d, n, kappa, labels))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Breakdown as a JSON object with the flat field names.
pub fn breakdown_json(b: &EnergyBreakdown) -> Result<String> {
    let map: serde_json::Map<String, serde_json::Value> =
        b.record().into_iter().map(|(k, v)| (k, serde_json::json!(v))).collect();
    to_json(&map)
}

/// Breakdown as a two-line CSV (header and values).
pub fn breakdown_csv(b: &EnergyBreakdown) -> Result<String> {
    let rec = b.record();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(rec.iter().map(|(k, _)| k.as_str())).map_err(csv_err)?;
    w.write_record(rec.iter().map(|(_, v)| format!("{v:.17e}"))).map_err(csv_err)?;
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Sweep table with columns tau, p, d, h_star, c_star, second_derivative.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

#[derive(Serialize)]
struct ReportJson<'a> {
    method: crate::search::Method,
    best_energy: f64,
    visited: u64,
    raw_minimizer_count: u64,
    stripe_spec: &'a Option<crate::lattice::StripeSpec>,
    minimizers: Vec<MinimizerJson>,
}

#[derive(Serialize)]
struct MinimizerJson {
    is_stripe: bool,
    grid: String,
}

/// Search report as JSON with each minimizer embedded as a grid file.
pub fn report_json(r: &SearchReport) -> Result<String> {
    let minimizers = r
        .minimizers
        .iter()
        .zip(&r.is_stripe)
        .map(|(c, &s)| MinimizerJson { is_stripe: s, grid: grid_to_string(c) })
        .collect();
    to_json(&ReportJson {
        method: r.method,
        best_energy: r.best_energy,
        visited: r.visited,
        raw_minimizer_count: r.raw_minimizer_count,
        stripe_spec: &r.stripe_spec,
        minimizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_roundtrip_2d() {
        let text = "2 4 0.5\n#..#\n....\n####\n.#.#\n";
        let cfg = grid_from_str(text).unwrap();
        assert!(cfg.get(&[0, 0]) && cfg.get(&[3, 0]) && !cfg.get(&[1, 0]) && cfg.get(&[1, 3]));
        assert_eq!(grid_to_string(&cfg), text);
    }

    #[test]
    fn grid_rejects_bad_rows() {
        assert!(grid_from_str("2 3 1\n###\n##\n...\n").is_err());
        assert!(grid_from_str("1 3 1\n#x#\n").is_err());
        assert!(grid_from_str("1 3 1\n###\n...\n").is_err());
    }

    #[test]
    fn sweep_roundtrip() {
        let rows = vec![SweepRow { tau: 0.1, p: 3.0, d: 1, h_star: 2.5, c_star: -0.2, second_derivative: 0.05 }];
        let text = sweep_csv(&rows).unwrap();
        assert!(text.starts_with("tau,p,d,h_star,c_star,second_derivative"));
        assert_eq!(sweep_from_csv(&text).unwrap(), rows);
    }
}
