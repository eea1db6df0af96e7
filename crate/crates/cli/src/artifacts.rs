//! Output directory handling: provenance headers, input hashing and
//! named-dependency checks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("riskdecode ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Formats a float with the fixed six decimals used in every output.
pub fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub struct Workspace {
    pub out: PathBuf,
    pub seed: u64,
    /// `(name, sha256)` of every input read by the current command.
    inputs: Vec<(String, String)>,
    written: Vec<PathBuf>,
}

impl Workspace {
    pub fn new(out: PathBuf, seed: u64) -> Self {
        Self {
            out,
            seed,
            inputs: Vec::new(),
            written: Vec::new(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    /// Fails with a message naming the missing artifact and the command
    /// that produces it.
    pub fn require(&self, rel: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if !p.exists() {
            bail!(
                "missing upstream artifact `{}`: run `riskdecode {producer}` first",
                p.display()
            );
        }
        Ok(p)
    }

    /// Reads an external or upstream file and records its hash.
    pub fn read_file(&mut self, path: &Path, label: &str) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push((label.to_string(), sha256_hex(&bytes)));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn read_artifact(&mut self, rel: &str, producer: &str) -> Result<String> {
        let p = self.require(rel, producer)?;
        self.read_file(&p, rel)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, rel: &str, producer: &str) -> Result<T> {
        let text = self.read_artifact(rel, producer)?;
        let mut v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {rel}"))?;
        let data = v
            .get_mut("data")
            .map(serde_json::Value::take)
            .with_context(|| format!("{rel} has no `data` field"))?;
        serde_json::from_value(data).with_context(|| format!("decoding {rel}"))
    }

    fn header_line(&self) -> String {
        let mut inputs: Vec<String> = self.inputs.iter().map(|(n, h)| format!("{n}:sha256={h}")).collect();
        inputs.sort();
        inputs.dedup();
        format!(
            "{TOOL} seed={} inputs={}",
            self.seed,
            if inputs.is_empty() { "none".to_string() } else { inputs.join(";") }
        )
    }

    fn write(&mut self, rel: &str, body: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p.clone());
        Ok(p)
    }

    /// CSV text (header row included) behind a `#` provenance line.
    pub fn write_csv(&mut self, rel: &str, csv_body: &str) -> Result<PathBuf> {
        let text = format!("# {}\n{csv_body}", self.header_line());
        self.write(rel, &text)
    }

    /// JSON object `{ "header": ..., "data": ... }`.
    pub fn write_json<T: Serialize>(&mut self, rel: &str, data: &T) -> Result<PathBuf> {
        let mut inputs = serde_json::Map::new();
        for (n, h) in &self.inputs {
            inputs.insert(n.clone(), serde_json::Value::String(h.clone()));
        }
        let doc = serde_json::json!({
            "header": { "tool": TOOL, "seed": self.seed, "inputs": inputs },
            "data": data,
        });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.write(rel, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Builds a CSV body from a header and rows of already formatted cells.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}

/// Reader that skips `#` provenance lines.
pub fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}
