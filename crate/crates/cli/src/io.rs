//! CSV ingestion and atomic output staging.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use kmh_core::{DataMatrix, Partition};
use tempfile::NamedTempFile;

#[derive(Debug)]
pub struct Dataset {
    pub data: DataMatrix,
    pub truth: Option<Partition>,
    pub header: Option<Vec<String>>,
}

/// Reads a numeric CSV. The first line is a header when any of its fields
/// is not a number. `truth_col` is 1-based.
pub fn read_dataset(path: &Path, truth_col: Option<usize>) -> Result<Dataset> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut header = None;
    let mut width = None;
    let mut values = Vec::new();
    let mut raw_truth = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                bail!("{}: line {line}: expected {w} fields, found {}", path.display(), record.len())
            }
            _ => {}
        }
        if let Some(tc) = truth_col {
            if tc == 0 || tc > record.len() {
                bail!("--truth-col {tc} is outside the {} columns of {}", record.len(), path.display());
            }
        }
        for (col, field) in record.iter().enumerate() {
            if truth_col == Some(col + 1) {
                let label: u32 = field.parse().map_err(|_| {
                    anyhow!(
                        "{}: line {line}, column {}: truth label `{field}` is not a non-negative integer",
                        path.display(),
                        col + 1
                    )
                })?;
                raw_truth.push(label);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                anyhow!("{}: line {line}, column {}: `{field}` is not a number", path.display(), col + 1)
            })?;
            if !v.is_finite() {
                bail!("{}: line {line}, column {}: non-finite value `{field}`", path.display(), col + 1);
            }
            values.push(v);
        }
    }
    let width = width.ok_or_else(|| anyhow!("{}: no data", path.display()))?;
    let p = width - usize::from(truth_col.is_some());
    if p == 0 {
        bail!("{}: no feature columns", path.display());
    }
    let n = values.len() / p;
    if let Some(tc) = truth_col {
        if tc > width {
            bail!("--truth-col {tc} is outside the {width} columns of {}", path.display());
        }
    }
    let data = DataMatrix::new(values, n, p).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let truth = truth_col.map(|_| Partition::canonical(&raw_truth));
    Ok(Dataset { data, truth, header })
}

/// Files written to temporaries in the destination directory and renamed
/// into place together once everything has been produced.
pub struct Staged {
    dir: PathBuf,
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_owned(),
            files: Vec::new(),
        })
    }

    pub fn add(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let mut tmp = NamedTempFile::new_in(&self.dir).with_context(|| format!("cannot write to {}", self.dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        let dest = self.dir.join(name);
        self.files.push((tmp, dest.clone()));
        Ok(dest)
    }

    pub fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest).with_context(|| format!("cannot write {}", dest.display()))?;
        }
        Ok(())
    }
}

/// Dataset CSV with a `truth` column; values use the shortest exact
/// decimal representation.
pub fn dataset_csv(data: &DataMatrix, truth: &Partition) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push("truth".into());
    w.write_record(&header)?;
    for (row, label) in data.rows().zip(truth.labels()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_csv(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_and_truth() {
        let f = tmp_csv("a,b,label\n1,2,1\n3,4.5,2\n-1e-3,0,1\n");
        let ds = read_dataset(f.path(), Some(3)).unwrap();
        assert_eq!(ds.header.unwrap(), vec!["a", "b", "label"]);
        assert_eq!((ds.data.n(), ds.data.p()), (3, 2));
        assert_eq!(ds.data.row(2), &[-1e-3, 0.0]);
        assert_eq!(ds.truth.unwrap().labels(), &[1, 2, 1]);
    }

    #[test]
    fn headerless() {
        let f = tmp_csv("1,2\n3,4\n");
        let ds = read_dataset(f.path(), None).unwrap();
        assert!(ds.header.is_none());
        assert_eq!(ds.data.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let f = tmp_csv("x,y\n1,2\n3,oops\n");
        let err = read_dataset(f.path(), None).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
        let f = tmp_csv("1,2\n3\n");
        let err = read_dataset(f.path(), None).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let f = tmp_csv("1,2\n3,4\n");
        assert!(read_dataset(f.path(), Some(5)).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let data = DataMatrix::new(vec![0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567], 2, 2).unwrap();
        let truth = Partition::new(vec![1, 2]).unwrap();
        let f = tmp_csv(std::str::from_utf8(&dataset_csv(&data, &truth).unwrap()).unwrap());
        let back = read_dataset(f.path(), Some(3)).unwrap();
        assert_eq!(back.data, data);
        assert_eq!(back.truth.unwrap(), truth);
    }
}
