//! Dataset CSV with a JSON sidecar manifest.
//!
//! The CSV header is `x0,…,x{d-1},y[,sub][,group][,patient],h0,…,h{m-1}`.
//! Labels, subclass IDs and expert predictions are written 1-based; features
//! use the shortest decimal text that round-trips exactly. The manifest at
//! `<stem>.manifest.json` declares the dimensions and which optional columns
//! are present.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::experts::ExpertPredictionTable;
use crate::nn::Matrix;

pub const MANIFEST_SCHEMA: &str = "teamalloc.dataset/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: String,
    pub d: usize,
    pub k: usize,
    #[serde(default)]
    pub s: Option<usize>,
    pub m: usize,
    pub has_sub: bool,
    pub has_group: bool,
    pub has_patient: bool,
    /// 1-based label of each subclass, when subclasses are present.
    #[serde(default)]
    pub superclass_map: Option<Vec<usize>>,
    #[serde(default)]
    pub expert_provenance: String,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl DatasetManifest {
    pub fn describe(ds: &Dataset, provenance: serde_json::Value) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            d: ds.dim(),
            k: ds.num_classes(),
            s: ds.subclasses().map(|_| ds.num_subclasses()),
            m: ds.num_experts(),
            has_sub: ds.subclasses().is_some(),
            has_group: ds.groups().is_some(),
            has_patient: ds.patients().is_some(),
            superclass_map: ds
                .superclass_map()
                .map(|m| m.iter().map(|y| y + 1).collect()),
            expert_provenance: ds
                .expert_predictions()
                .map(|t| t.provenance.clone())
                .unwrap_or_default(),
            provenance,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (0..self.d).map(|i| format!("x{i}")).collect();
        h.push("y".into());
        if self.has_sub {
            h.push("sub".into());
        }
        if self.has_group {
            h.push("group".into());
        }
        if self.has_patient {
            h.push("patient".into());
        }
        h.extend((0..self.m).map(|j| format!("h{j}")));
        h
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::format(path, format!("unsupported schema `{}`", m.schema)));
        }
        if m.has_sub && m.s.is_none() {
            return Err(Error::format(path, "has_sub requires `s`"));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::format(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `data.csv` → `data.manifest.json`
pub fn manifest_path_for(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.manifest.json"))
}

pub fn save_dataset(ds: &Dataset, csv_path: &Path, provenance: serde_json::Value) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::describe(ds, provenance);
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| csv_err(csv_path, e))?;
    w.write_record(manifest.header()).map_err(|e| csv_err(csv_path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(manifest.header().len());
    for i in 0..ds.len() {
        row.clear();
        row.extend(ds.features().row(i).iter().map(|v| v.to_string()));
        row.push((ds.labels()[i] + 1).to_string());
        if let Some(s) = ds.subclasses() {
            row.push(s[i].to_string());
        }
        if let Some(g) = ds.groups() {
            row.push(g[i].to_string());
        }
        if let Some(p) = ds.patients() {
            row.push(p[i].to_string());
        }
        if let Some(t) = ds.expert_predictions() {
            row.extend((0..t.num_experts()).map(|j| (t.get(j, i) + 1).to_string()));
        }
        w.write_record(&row).map_err(|e| csv_err(csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;
    manifest.save(&manifest_path_for(csv_path))?;
    Ok(manifest)
}

/// Loads `csv_path` using the sidecar manifest next to it.
pub fn load_dataset(csv_path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::load(&manifest_path_for(csv_path))?;
    load_feature_csv(csv_path, &manifest)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e)
}

pub fn load_feature_csv(path: &Path, schema: &DatasetManifest) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let expected = schema.header();
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: "header".into(),
            message: format!("expected `{}`, found `{}`", expected.join(","), header.join(",")),
        });
    }

    let (d, k, m) = (schema.d, schema.k, schema.m);
    let s = schema.s.unwrap_or(0);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut subs = Vec::new();
    let mut groups = Vec::new();
    let mut patients = Vec::new();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];

    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fail = |col: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            column: col.to_string(),
            message,
        };
        if rec.len() != expected.len() {
            return Err(fail(
                "row",
                format!("expected {} fields, found {}", expected.len(), rec.len()),
            ));
        }
        let int_in = |col: usize, lo: usize, hi: usize| -> Result<usize> {
            let name = &expected[col];
            let text = &rec[col];
            if text.is_empty() {
                return Err(fail(name, "missing value".into()));
            }
            let v: usize = text
                .parse()
                .map_err(|_| fail(name, format!("`{text}` is not an integer")))?;
            if v < lo || v > hi {
                return Err(fail(name, format!("value {v} outside {lo}..={hi}")));
            }
            Ok(v)
        };
        for c in 0..d {
            let text = &rec[c];
            let v: f64 = text
                .parse()
                .map_err(|_| fail(&expected[c], format!("`{text}` is not a number")))?;
            if !v.is_finite() {
                return Err(fail(&expected[c], format!("non-finite value `{text}`")));
            }
            features.push(v);
        }
        let mut col = d;
        labels.push(int_in(col, 1, k)? - 1);
        col += 1;
        if schema.has_sub {
            subs.push(int_in(col, 1, s)?);
            col += 1;
        }
        if schema.has_group {
            groups.push(int_in(col, 0, 1)? as u8);
            col += 1;
        }
        if schema.has_patient {
            let text = &rec[col];
            let v: u64 = text
                .parse()
                .map_err(|_| fail(&expected[col], format!("`{text}` is not a patient id")))?;
            patients.push(v);
            col += 1;
        }
        for p in preds.iter_mut() {
            p.push(int_in(col, 1, k)? - 1);
            col += 1;
        }
    }

    let n = labels.len();
    let mut ds = Dataset::new(Matrix::from_vec(n, d, features)?, labels, k)?;
    if schema.has_sub {
        ds = ds.with_subclasses(subs, s)?;
        if let Some(map) = &schema.superclass_map {
            if map.iter().any(|&y| y == 0 || y > k) {
                return Err(Error::format(path, "superclass map label out of range"));
            }
            ds = ds.with_superclass_map(map.iter().map(|y| y - 1).collect())?;
        }
    }
    if schema.has_group {
        ds = ds.with_groups(groups)?;
    }
    if schema.has_patient {
        ds = ds.with_patients(patients)?;
    }
    if m > 0 {
        ds = ds.with_expert_predictions(ExpertPredictionTable::new(
            preds,
            schema.expert_provenance.clone(),
        )?)?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};
    use crate::experts::{
        gen_subclass_experts, materialize_predictions, ExpertProfile, SubclassExpertParams,
    };

    fn manifest(d: usize, k: usize, m: usize) -> DatasetManifest {
        DatasetManifest {
            schema: MANIFEST_SCHEMA.into(),
            d,
            k,
            s: None,
            m,
            has_sub: false,
            has_group: false,
            has_patient: false,
            superclass_map: None,
            expert_provenance: String::new(),
            provenance: serde_json::Value::Null,
        }
    }

    #[test]
    fn loads_handcrafted_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "x0,x1,y,h0\n0.5,-1e-3,1,1\n2,3.25E1,2,1\n-0,7,2,2\n").unwrap();
        let ds = load_feature_csv(&path, &manifest(2, 2, 1)).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.features().row(0), &[0.5, -0.001]);
        assert_eq!(ds.features().row(1), &[2.0, 32.5]);
        assert_eq!(ds.labels(), &[0, 1, 1]);
        assert_eq!(ds.expert_predictions().unwrap().expert(0), &[0, 0, 1]);
    }

    #[test]
    fn reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x0,y,h0\n1.0,1,2\n1.0,3,7\n").unwrap();
        let err = load_feature_csv(&path, &manifest(1, 3, 1)).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "h0");
            }
            other => panic!("unexpected {other}"),
        }
        std::fs::write(&path, "x0,y,h0\n1.0,1,\n").unwrap();
        let msg = load_feature_csv(&path, &manifest(1, 3, 1)).unwrap_err().to_string();
        assert!(msg.contains("missing value"), "{msg}");
        std::fs::write(&path, "x0,y,h0\n1.0,1\n").unwrap();
        assert!(load_feature_csv(&path, &manifest(1, 3, 1)).is_err());
        std::fs::write(&path, "x0,y,h1\n1.0,1,1\n").unwrap();
        assert!(load_feature_csv(&path, &manifest(1, 3, 1)).is_err());
        std::fs::write(&path, "x0,y,h0\nabc,1,1\n").unwrap();
        assert!(load_feature_csv(&path, &manifest(1, 3, 1)).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn synthetic_round_trip() {
        let ds = gen_synthetic(&SyntheticSpec::small(), 3).unwrap();
        let experts: Vec<_> = gen_subclass_experts(2, &SubclassExpertParams::default(), ds.superclass_map().unwrap(), 1)
            .unwrap()
            .into_iter()
            .map(ExpertProfile::Subclass)
            .collect();
        let table = materialize_predictions(&experts, &ds, 2).unwrap();
        let patients = (0..ds.len() as u64).map(|i| i / 3).collect();
        let ds = ds
            .with_expert_predictions(table)
            .unwrap()
            .with_patients(patients)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("syn.csv");
        save_dataset(&ds, &path, serde_json::json!({"generator": "synthetic"})).unwrap();
        assert!(manifest_path_for(&path).exists());
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
    }
}
