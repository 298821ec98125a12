//! CSV datasets, score files and small tabular outputs.
//!
//! A dataset CSV has a header row. Recognized non-signal columns:
//! timestamps (`timestamp`, `time`, `date`, `datetime`; several are joined
//! with a space), row indices (`row`, `index`) and one label column
//! (`label`, `normal/attack`, `attack`, or the WADI attack column). Every other
//! column is a signal and every signal cell must parse as a finite number.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tsae_core::preprocess::TimeSeriesMatrix;
use tsae_core::Matrix;

use crate::error::{csv_err, io_err, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Label column name; when unset a recognized name is looked up.
    pub label_column: Option<String>,
    /// Signals to drop while reading, resolved with [`resolve_columns`].
    pub exclude: Vec<String>,
}

/// What a dataset file contained besides the signals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetInfo {
    /// Requested exclusions, then columns that held no values at all.
    pub excluded: Vec<String>,
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelCoding {
    /// `0`/`1` or `Normal`/`Attack`.
    Standard,
    /// `1` normal, `-1` attack.
    Signed,
}

fn norm(name: &str) -> String {
    name.trim().to_ascii_lowercase()
}

fn is_time_column(name: &str) -> bool {
    matches!(norm(name).as_str(), "timestamp" | "time" | "date" | "datetime")
}

fn is_index_column(name: &str) -> bool {
    matches!(norm(name).as_str(), "row" | "index")
}

fn label_coding(name: &str) -> Option<LabelCoding> {
    let n = norm(name);
    if n.starts_with("attack lable") || n.starts_with("attack label") {
        return Some(LabelCoding::Signed);
    }
    matches!(n.as_str(), "label" | "normal/attack" | "attack").then_some(LabelCoding::Standard)
}

fn parse_label(raw: &str, coding: LabelCoding) -> Option<u8> {
    let v: String = raw.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    match (coding, v.as_str()) {
        (LabelCoding::Standard, "0" | "normal") => Some(0),
        (LabelCoding::Standard, "1" | "attack") => Some(1),
        (LabelCoding::Signed, "1") => Some(0),
        (LabelCoding::Signed, "-1") => Some(1),
        _ => None,
    }
}

/// Indices of `requested` names in `columns`: exact match first, then a
/// unique suffix match, then a unique substring match.
pub fn resolve_columns(columns: &[String], requested: &[String]) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::with_capacity(requested.len());
    for req in requested {
        let r = req.trim();
        let exact: Vec<usize> = (0..columns.len()).filter(|&i| columns[i].trim() == r).collect();
        let found = if exact.len() == 1 {
            exact
        } else {
            let suffix: Vec<usize> = (0..columns.len()).filter(|&i| columns[i].trim().ends_with(r)).collect();
            if suffix.len() == 1 {
                suffix
            } else {
                (0..columns.len()).filter(|&i| columns[i].contains(r)).collect()
            }
        };
        match found.as_slice() {
            [i] => {
                if out.contains(i) {
                    return Err(format!("column '{}' requested twice", columns[*i]));
                }
                out.push(*i);
            }
            [] => return Err(format!("unknown column '{r}'")),
            many => {
                let names: Vec<&str> = many.iter().map(|&i| columns[i].as_str()).collect();
                return Err(format!("column '{r}' is ambiguous: {names:?}"));
            }
        }
    }
    Ok(out)
}

pub fn read_dataset(path: &Path, opts: &CsvOptions) -> Result<(TimeSeriesMatrix, DatasetInfo)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let fmt = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };

    let label_idx = match &opts.label_column {
        Some(name) => Some(
            resolve_columns(&header, std::slice::from_ref(name)).map_err(fmt)?[0],
        ),
        None => {
            let found: Vec<usize> = (0..header.len()).filter(|&i| label_coding(&header[i]).is_some()).collect();
            if found.len() > 1 {
                return Err(fmt(format!("several label columns: {found:?}")));
            }
            found.first().copied()
        }
    };
    let coding = label_idx.map(|i| label_coding(&header[i]).unwrap_or(LabelCoding::Standard));
    let time_idx: Vec<usize> = (0..header.len())
        .filter(|&i| Some(i) != label_idx && is_time_column(&header[i]))
        .collect();
    let meta = |i: usize| Some(i) == label_idx || time_idx.contains(&i) || is_index_column(&header[i]);
    let candidates: Vec<usize> = (0..header.len()).filter(|&i| !meta(i)).collect();
    let candidate_names: Vec<String> = candidates.iter().map(|&i| header[i].clone()).collect();
    let excluded_pos = resolve_columns(&candidate_names, &opts.exclude).map_err(fmt)?;
    let excluded: Vec<String> = excluded_pos.iter().map(|&p| candidate_names[p].clone()).collect();
    let signals: Vec<usize> = candidates
        .iter()
        .enumerate()
        .filter(|(p, _)| !excluded_pos.contains(p))
        .map(|(_, &i)| i)
        .collect();
    if signals.is_empty() {
        return Err(fmt("no signal columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut stamps = Vec::new();
    let mut first_empty: Vec<Option<usize>> = vec![None; signals.len()];
    let mut has_value = vec![false; signals.len()];
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    while reader.read_record(&mut record).map_err(csv_err(path))? {
        row += 1;
        for (p, &i) in signals.iter().enumerate() {
            let cell = record[i].trim();
            if cell.is_empty() {
                first_empty[p].get_or_insert(row);
                values.push(0.0);
                continue;
            }
            let cell_err = |msg: String| Error::Cell {
                path: path.to_path_buf(),
                row,
                column: header[i].clone(),
                msg,
            };
            let v: f64 = cell.parse().map_err(|_| cell_err(format!("not a number: '{cell}'")))?;
            if !v.is_finite() {
                return Err(cell_err("non-finite value".into()));
            }
            has_value[p] = true;
            values.push(v);
        }
        if let (Some(i), Some(c)) = (label_idx, coding) {
            let l = parse_label(&record[i], c).ok_or_else(|| Error::Cell {
                path: path.to_path_buf(),
                row,
                column: header[i].clone(),
                msg: format!("unrecognized label '{}'", &record[i]),
            })?;
            labels.push(l);
        }
        if !time_idx.is_empty() {
            let parts: Vec<&str> = time_idx.iter().map(|&i| record[i].trim()).collect();
            stamps.push(parts.join(" "));
        }
    }
    if row == 0 {
        return Err(fmt("no data rows".into()));
    }
    // Columns without a single value are dropped; a partly empty column is an error.
    let mut excluded = excluded;
    let mut keep = Vec::with_capacity(signals.len());
    for (p, &i) in signals.iter().enumerate() {
        match (has_value[p], first_empty[p]) {
            (false, _) => excluded.push(header[i].clone()),
            (true, Some(r)) => {
                return Err(Error::Cell {
                    path: path.to_path_buf(),
                    row: r,
                    column: header[i].clone(),
                    msg: "empty cell".into(),
                })
            }
            (true, None) => keep.push(p),
        }
    }
    if keep.is_empty() {
        return Err(fmt("no signal columns with values".into()));
    }
    let signals: Vec<usize> = keep.iter().map(|&p| signals[p]).collect();
    let all = Matrix::from_vec(row, has_value.len(), values)?;
    let matrix = if signals.len() == has_value.len() { all } else { all.select_columns(&keep)? };
    let names: Vec<String> = signals.iter().map(|&i| header[i].clone()).collect();
    let mut series = TimeSeriesMatrix::new(matrix, names)?;
    if label_idx.is_some() {
        series = series.with_labels(labels)?;
    }
    if !time_idx.is_empty() {
        series = series.with_timestamps(stamps)?;
    }
    Ok((
        series,
        DatasetInfo {
            excluded,
            label_column: label_idx.map(|i| header[i].clone()),
        },
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Write text, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

/// Dataset in the same layout [`read_dataset`] reads; labels as `label`.
pub fn write_dataset(path: &Path, data: &TimeSeriesMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = Vec::new();
    if data.timestamps().is_some() {
        header.push("timestamp".into());
    }
    header.extend(data.column_names().iter().cloned());
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(csv_err(path))?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for t in 0..data.len() {
        rec.clear();
        if let Some(ts) = data.timestamps() {
            rec.push(ts[t].clone());
        }
        rec.extend(data.values().row(t).iter().map(|v| v.to_string()));
        if let Some(l) = data.labels() {
            rec.push(l[t].to_string());
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Per-instant scores: `t,score,label`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub t: Vec<usize>,
    pub score: Vec<f64>,
    pub label: Vec<u8>,
}

pub fn write_scores(path: &Path, table: &ScoreTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "score", "label"]).map_err(csv_err(path))?;
    for i in 0..table.t.len() {
        w.write_record([table.t[i].to_string(), table.score[i].to_string(), table.label[i].to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_table(path: &Path, expect: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(norm).collect();
    if header != expect {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("expected columns {expect:?}, found {header:?}"),
        });
    }
    r.records().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, column: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Cell {
        path: path.to_path_buf(),
        row,
        column: column.into(),
        msg: format!("cannot parse '{raw}'"),
    })
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let rows = read_table(path, &["t", "score", "label"])?;
    let mut table = ScoreTable {
        t: Vec::with_capacity(rows.len()),
        score: Vec::with_capacity(rows.len()),
        label: Vec::with_capacity(rows.len()),
    };
    for (i, r) in rows.iter().enumerate() {
        table.t.push(parse_cell(path, i + 1, "t", &r[0])?);
        table.score.push(parse_cell(path, i + 1, "score", &r[1])?);
        table.label.push(parse_cell(path, i + 1, "label", &r[2])?);
    }
    Ok(table)
}

/// Instant-indexed labels: `t,label`.
pub fn write_labels(path: &Path, t: &[usize], labels: &[u8]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "label"]).map_err(csv_err(path))?;
    for (ti, l) in t.iter().zip(labels) {
        w.write_record([ti.to_string(), l.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_labels(path: &Path) -> Result<(Vec<usize>, Vec<u8>)> {
    let rows = read_table(path, &["t", "label"])?;
    let mut t = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        t.push(parse_cell(path, i + 1, "t", &r[0])?);
        let l: u8 = parse_cell(path, i + 1, "label", &r[1])?;
        if l > 1 {
            return Err(Error::Cell {
                path: path.to_path_buf(),
                row: i + 1,
                column: "label".into(),
                msg: format!("label must be 0 or 1, got {l}"),
            });
        }
        labels.push(l);
    }
    Ok((t, labels))
}

/// Rows of `records` under `header`, values written with shortest round-trip formatting.
pub fn write_rows<S: AsRef<str>>(path: &Path, header: &[S], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header.iter().map(|h| h.as_ref())).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Matrix with a leading row-name column.
pub fn write_matrix(path: &Path, corner: &str, row_names: &[String], col_names: &[String], m: &Matrix) -> Result<()> {
    let mut header = vec![corner.to_string()];
    header.extend(col_names.iter().cloned());
    let records: Vec<Vec<String>> = (0..m.rows())
        .map(|r| {
            let mut rec = vec![row_names[r].clone()];
            rec.extend(m.row(r).iter().map(|v| v.to_string()));
            rec
        })
        .collect();
    write_rows(path, &header, &records)
}
