//! Provenance and file writing.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub code_version: String,
    /// SHA-256 of the resolved configuration text.
    pub config_sha256: String,
}

impl Provenance {
    pub fn of(config_text: &str) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        Self { code_version: env!("CARGO_PKG_VERSION").to_string(), config_sha256: format!("{digest:x}") }
    }

    pub fn comment(&self) -> String {
        format!("# flatwave {} config-sha256 {}\n", self.code_version, self.config_sha256)
    }
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

/// JSON object with a `provenance` field followed by `body`'s fields.
pub fn json_with_provenance(prov: &Provenance, body: &impl Serialize) -> String {
    let mut v = serde_json::to_value(body).expect("serializable");
    let p = serde_json::to_value(prov).expect("serializable");
    match v.as_object_mut() {
        Some(m) => {
            m.insert("provenance".into(), p);
        }
        None => v = serde_json::json!({ "provenance": p, "data": v }),
    }
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

/// CSV text with a provenance comment line.
pub fn csv_with_provenance<const N: usize>(prov: &Provenance, header: &[&str; N], rows: &[[f64; N]]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:.15e}"))).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("flushed")).expect("ascii");
    prov.comment() + &body
}

/// `(t, value)` pairs of `column` from a CSV that may carry `#` comments.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>, Failure> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| Failure::Usage(e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let ti = find("t").ok_or_else(|| Failure::Usage(format!("{} has no 't' column", path.display())))?;
    let ci = find(column).ok_or_else(|| {
        Failure::Usage(format!("{} has no column '{column}' (have: {})", path.display(), headers.iter().collect::<Vec<_>>().join(", ")))
    })?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::Usage(e.to_string()))?;
        let num = |i: usize| -> Result<f64, Failure> {
            rec.get(i).unwrap_or("").trim().parse().map_err(|_| Failure::Usage(format!("bad number in row {rec:?}")))
        };
        out.push((num(ti)?, num(ci)?));
    }
    Ok(out)
}
