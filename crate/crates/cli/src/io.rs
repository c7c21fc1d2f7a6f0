//! Reading inputs and writing artifacts.
//!
//! Documents are JSON unless the file name ends in `.toml`. Floats are written
//! in shortest round-trip form so repeated runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use abelian_coh::bochner::PdFunction;
use abelian_coh::{Cocycle, Complex64, DualMeasure, GroupDescriptor, MeasureSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "ABELIAN_COH_OUT";

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

pub fn parse_str<T: DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(text).map_err(|e| CliError::parse(path.display(), e.to_string().trim_end()))
    } else {
        serde_json::from_str(text).map_err(|e| CliError::parse(path.display(), e))
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse_str(path, &read_text(path)?)
}

/// The group from `path`, or `Z` when no file is given.
pub fn load_group(path: Option<&Path>) -> CliResult<GroupDescriptor> {
    match path {
        Some(p) => load(p),
        None => Ok(GroupDescriptor::integers(1)),
    }
}

pub fn load_measure_spec(path: &Path, grid: Option<usize>) -> CliResult<MeasureSpec> {
    let mut spec: MeasureSpec = load(path)?;
    if let Some(m) = grid {
        spec.grid_size = m;
    }
    Ok(spec)
}

pub fn load_measure(path: &Path, g: &GroupDescriptor, grid: Option<usize>) -> CliResult<DualMeasure> {
    Ok(load_measure_spec(path, grid)?.build(g)?)
}

pub fn load_phi(path: &Path) -> CliResult<PdFunction> {
    load(path)
}

/// Output directory: `ABELIAN_COH_OUT` when set, otherwise `default`.
pub fn output_dir(default: &Path) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => default.to_path_buf(),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value))
}

fn point_header(g: &GroupDescriptor) -> Vec<String> {
    let mut h = vec!["index".to_string(), "kind".to_string()];
    h.extend((1..=g.free_rank()).map(|i| format!("theta_{i}")));
    h.extend((1..=g.torsion_orders().len()).map(|j| format!("torsion_{j}")));
    h.push("mass".into());
    h
}

fn point_fields(mu: &DualMeasure, masses: &[f64], i: usize) -> Vec<String> {
    let p = mu.point(i);
    let kind = if i < mu.atoms().len() { "atom" } else { "cell" };
    let mut row = vec![i.to_string(), kind.to_string()];
    row.extend(p.angles.iter().map(|a| a.to_string()));
    row.extend(p.torsion.iter().map(|c| c.to_string()));
    row.push(masses[i].to_string());
    row
}

/// One row per point of `mu` where some column is nonzero; each named column
/// contributes `{name}_re` and `{name}_im`.
pub fn point_table_csv(mu: &DualMeasure, columns: &[(String, &[Complex64])]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = point_header(mu.descriptor());
    for (name, _) in columns {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    w.write_record(&header).expect("in-memory write");
    let masses = mu.masses();
    for i in 0..mu.len() {
        if columns.iter().all(|(_, v)| v[i] == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let mut row = point_fields(mu, &masses, i);
        for (_, v) in columns {
            row.push(v[i].re.to_string());
            row.push(v[i].im.to_string());
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn cocycle_csv(b: &Cocycle) -> String {
    let columns: Vec<(String, &[Complex64])> = b
        .generator_values()
        .iter()
        .enumerate()
        .map(|(k, v)| (format!("g{}", k + 1), v.as_slice()))
        .collect();
    point_table_csv(b.measure(), &columns)
}

/// Reads a cocycle written by [`cocycle_csv`]; rows that are absent are zero.
pub fn read_cocycle_csv(path: &Path, mu: &DualMeasure) -> CliResult<Cocycle> {
    let text = read_text(path)?;
    let g = mu.descriptor();
    let fixed = point_header(g).len();
    let generators = g.generator_count();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::parse(path.display(), e))?.clone();
    if header.len() != fixed + 2 * generators {
        return Err(CliError::parse(
            path.display(),
            format!(
                "expected {} columns for {generators} generators, found {}",
                fixed + 2 * generators,
                header.len()
            ),
        ));
    }
    let mut values = vec![vec![Complex64::new(0.0, 0.0); mu.len()]; generators];
    for (line, record) in reader.records().enumerate() {
        let at = |msg: String| CliError::parse(path.display(), format!("line {}: {msg}", line + 2));
        let record = record.map_err(|e| at(e.to_string()))?;
        let num = |k: usize| -> CliResult<f64> {
            record[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| at(format!("column {}: {e}", &header[k])))
        };
        let i: usize = record[0].trim().parse().map_err(|e| at(format!("index: {e}")))?;
        if i >= mu.len() {
            return Err(at(format!("index {i} out of range for a measure with {} points", mu.len())));
        }
        let p = mu.point(i);
        for (k, a) in p.angles.iter().enumerate() {
            if (num(2 + k)? - a).abs() > 1e-9 {
                return Err(at(format!("point {i} does not match the measure grid")));
            }
        }
        for (k, slot) in values.iter_mut().enumerate() {
            slot[i] = Complex64::new(num(fixed + 2 * k)?, num(fixed + 2 * k + 1)?);
        }
    }
    Ok(Cocycle::new(mu.clone(), values)?)
}
