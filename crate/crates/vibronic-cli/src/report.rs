//! Deterministic CSV serialization and the run manifest.
//!
//! Numbers are written as decimal with 12 significant digits, which keeps
//! output bytes identical across runs and worker counts. Every CSV emitted
//! by a run is checksummed into `manifest.txt`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::CliResult;

/// `%.12g`-style formatting: plain decimal inside a readable exponent range,
/// scientific notation outside it, trailing zeros trimmed.
pub fn fmt_g(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..SIG).contains(&exp) {
        format!("{:.*e}", (SIG - 1) as usize, x)
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        if trimmed == "-0" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    }
}

/// In-memory CSV: UTF-8, header row, LF line endings.
pub struct CsvBuffer {
    pub name: String,
    bytes: Vec<u8>,
}

impl CsvBuffer {
    pub fn new(name: &str, header: &[&str]) -> Self {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(header.join(",").as_bytes());
        bytes.push(b'\n');
        Self { name: name.to_string(), bytes }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.bytes.extend_from_slice(fields.join(",").as_bytes());
        self.bytes.push(b'\n');
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Collects everything a run must report: config echo, effective settings,
/// the convergence-audit outcome, and per-file checksums.
pub struct Manifest {
    kind: String,
    status: String,
    notes: Vec<(String, String)>,
    config_echo: Vec<(String, String)>,
    outputs: Vec<(String, usize, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            status: "ok".to_string(),
            notes: Vec::new(),
            config_echo: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn set_status(&mut self, status: &str) {
        self.status = status.to_string();
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.to_string(), value.into()));
    }

    pub fn echo_config<'a>(&mut self, entries: impl Iterator<Item = (&'a str, &'a str)>) {
        self.config_echo = entries.map(|(k, v)| (k.to_string(), v.to_string())).collect();
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push((name.to_string(), bytes.len(), sha256_hex(bytes)));
    }

    pub fn write_to(&self, dir: &Path) -> CliResult<()> {
        let mut text = String::new();
        text.push_str("# vibronic run manifest\n");
        text.push_str("schema: 1\ncsv_schema: 1\n");
        text.push_str(&format!("kind: {}\n", self.kind));
        text.push_str(&format!("code_version: {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("status: {}\n", self.status));
        text.push_str(&format!(
            "wall_clock_s: {:.3}\n",
            self.started.elapsed().as_secs_f64()
        ));
        for (k, v) in &self.notes {
            text.push_str(&format!("{k}: {v}\n"));
        }
        text.push_str("config:\n");
        for (k, v) in &self.config_echo {
            text.push_str(&format!("  {k} = {v}\n"));
        }
        text.push_str("outputs:\n");
        for (name, len, sha) in &self.outputs {
            text.push_str(&format!("  {name} bytes={len} sha256={sha}\n"));
        }
        let mut file = std::fs::File::create(dir.join("manifest.txt"))?;
        file.write_all(text.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_g_covers_ranges() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(-0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(-0.125), "-0.125");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(1e-7), "1.00000000000e-7");
        assert_eq!(fmt_g(123456789012345.0), "1.23456789012e14");
        // 12 significant digits survive a round trip at this magnitude
        let x = 0.123456789012;
        assert_eq!(fmt_g(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_bytes_are_lf_terminated() {
        let mut csv = CsvBuffer::new("x.csv", &["a", "b"]);
        csv.row(&["1".into(), "2".into()]);
        assert_eq!(csv.bytes(), b"a,b\n1,2\n");
    }
}
