//! Provenance headers and number formatting for emitted files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use relaysec::SolverSettings;

/// Provenance embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub scenario_sha256: String,
    pub command: String,
    pub solver: SolverSettings,
    pub timestamp: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(scenario: &str, scenario_text: &str, command: String, solver: SolverSettings) -> Self {
        Self {
            scenario: scenario.to_string(),
            scenario_sha256: hex_digest(scenario_text.as_bytes()),
            command,
            solver,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// `# key: value` lines for the top of a CSV file.
    pub fn csv_header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# relaysec {}", self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# scenario: {} sha256={}", self.scenario, self.scenario_sha256);
        let _ = writeln!(
            s,
            "# solver: {}",
            serde_json::to_string(&self.solver).unwrap_or_default()
        );
        let _ = writeln!(s, "# timestamp: {}", self.timestamp);
        s
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit; re-check via the exponent form
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" { "0".into() } else { s }
    } else {
        let s = format!("{x:.8e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// A CSV document with manifest header, LF line endings.
pub struct CsvDoc {
    text: String,
}

impl CsvDoc {
    pub fn new(manifest: &RunManifest) -> Self {
        Self {
            text: manifest.csv_header(),
        }
    }

    pub fn comment(&mut self, line: &str) {
        self.text.push_str("# ");
        self.text.push_str(line);
        self.text.push('\n');
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(|f| f.as_ref()).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// The document without `#` lines.
    pub fn body(&self) -> String {
        self.text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect()
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// JSON summary with the manifest attached under `"manifest"`.
pub fn json_with_manifest<T: Serialize>(manifest: &RunManifest, body: &T) -> Result<String> {
    let mut v = serde_json::to_value(body)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("manifest".into(), serde_json::to_value(manifest)?);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn out_dir(path: Option<&Path>) -> Result<PathBuf> {
    let dir = path.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.001445), "0.001445");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(7.943282347242816), "7.94328235");
        assert_eq!(sig9(-2.5e-7), "-2.5e-7");
        assert_eq!(sig9(123456789012.0), "1.23456789e11");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn body_strips_header() {
        let m = RunManifest::new("s.json", "{}", "test".into(), SolverSettings::default());
        let mut d = CsvDoc::new(&m);
        d.row(&["a", "b"]);
        d.row(&[sig9(1.5), sig9(2.0)]);
        assert_eq!(d.body(), "a,b\n1.5,2\n");
        assert!(d.as_str().starts_with("# relaysec"));
        assert!(!d.as_str().contains('\r'));
    }
}
