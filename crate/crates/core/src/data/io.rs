use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::OmicsMatrix;
use crate::error::{MotgnnError, Result};

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| MotgnnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut reader = open(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        out.push(rec.map_err(|e| MotgnnError::csv(path, e.to_string()))?);
    }
    Ok(out)
}

/// Read an omics CSV: header `sample_id,<feature>...`, one row per sample.
///
/// Data rows are numbered from 1 in error messages.
pub fn load_omics_csv(path: impl AsRef<Path>) -> Result<OmicsMatrix> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| MotgnnError::csv(path, "empty file"))?;
    let feature_names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let p = feature_names.len();
    if p == 0 {
        return Err(MotgnnError::csv(path, "header has no feature columns"));
    }
    let mut seen = HashSet::new();
    for name in &feature_names {
        if !seen.insert(name.as_str()) {
            return Err(MotgnnError::csv(path, format!("duplicate feature name `{name}`")));
        }
    }
    if rows.len() < 2 {
        return Err(MotgnnError::csv(
            path,
            format!("need at least 2 samples, found {}", rows.len()),
        ));
    }

    let mut values = Vec::with_capacity(rows.len() * p);
    let mut sample_ids = Vec::with_capacity(rows.len());
    let mut seen_ids = HashSet::new();
    for (r, rec) in rows.iter().enumerate() {
        let row = r + 1;
        if rec.len() != p + 1 {
            return Err(MotgnnError::csv(
                path,
                format!("row {row}: expected {} cells, found {}", p + 1, rec.len()),
            ));
        }
        let id = rec[0].trim().to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(MotgnnError::csv(path, format!("row {row}: duplicate sample id `{id}`")));
        }
        sample_ids.push(id);
        for (c, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                MotgnnError::csv(
                    path,
                    format!("row {row}, column {} (`{}`): cannot parse `{cell}` as a number", c + 1, feature_names[c]),
                )
            })?;
            if !v.is_finite() {
                return Err(MotgnnError::csv(
                    path,
                    format!("row {row}, column {} (`{}`): non-finite value", c + 1, feature_names[c]),
                ));
            }
            values.push(v);
        }
    }
    let values = Array2::from_shape_vec((rows.len(), p), values).expect("row lengths checked");
    OmicsMatrix::new(values, feature_names, sample_ids)
}

/// Read a label CSV with header `sample_id,label` and labels in {0, 1}.
pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, u8>> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| MotgnnError::csv(path, "empty file"))?;
    if header.len() != 2 {
        return Err(MotgnnError::csv(path, "header must be `sample_id,label`"));
    }
    let mut labels = BTreeMap::new();
    for (r, rec) in rows.iter().enumerate() {
        let row = r + 1;
        if rec.len() != 2 {
            return Err(MotgnnError::csv(path, format!("row {row}: expected 2 cells")));
        }
        let label = match rec[1].trim() {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(MotgnnError::csv(
                    path,
                    format!("row {row}: label `{other}` is not 0 or 1"),
                ))
            }
        };
        let id = rec[0].trim().to_string();
        if labels.insert(id.clone(), label).is_some() {
            return Err(MotgnnError::csv(path, format!("row {row}: duplicate sample id `{id}`")));
        }
    }
    Ok(labels)
}

/// Write `m` in the format read by [`load_omics_csv`]. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_omics_csv<W: Write>(m: &OmicsMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| MotgnnError::InvalidData(format!("csv write: {e}"));
    let mut header = vec!["sample_id".to_string()];
    header.extend(m.feature_names().iter().cloned());
    w.write_record(&header).map_err(to_err)?;
    let mut rec = Vec::with_capacity(m.n_features() + 1);
    for (id, row) in m.sample_ids().iter().zip(m.values().rows()) {
        rec.clear();
        rec.push(id.clone());
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| MotgnnError::InvalidData(format!("csv write: {e}")))?;
    Ok(())
}

pub fn write_labels_csv<W: Write>(ids: &[String], labels: &[u8], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| MotgnnError::InvalidData(format!("csv write: {e}"));
    w.write_record(["sample_id", "label"]).map_err(to_err)?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()]).map_err(to_err)?;
    }
    w.flush().map_err(|e| MotgnnError::InvalidData(format!("csv write: {e}")))?;
    Ok(())
}
