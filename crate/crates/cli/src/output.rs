//! CSV files with a `#` comment header.
//!
//! Line 1 (optional) is a banner with the version, command and time. The
//! next line always carries the config hash. Data rows depend only on the
//! config, so two runs differ at most in the banner.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct Header<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub banner: bool,
}

pub type CsvOut = csv::Writer<BufWriter<File>>;

pub fn create(dir: &Path, name: &str, header: &Header, columns: &[&str]) -> Result<(CsvOut, PathBuf), CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path)?);
    if header.banner {
        let now = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ");
        writeln!(f, "# synctrl {} {} {now}", env!("CARGO_PKG_VERSION"), header.command)?;
    }
    writeln!(f, "# config-hash sha256:{}", header.config_hash)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(columns)?;
    Ok((w, path))
}

/// Shortest round-trip text; exponent form for very small or large values.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Data rows of a CSV file written by [`create`], comment lines dropped.
pub fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.015), "0.015");
        assert_eq!(num(1e-100), "1e-100");
        assert_eq!(num(1e100), "1e100");
        assert_eq!(num(2.0), "2.0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn header_lines() {
        let dir = tempfile::tempdir().unwrap();
        let h = Header { command: "sweep", config_hash: "abc", banner: false };
        let (mut w, path) = create(dir.path(), "x.csv", &h, &["a", "b"]).unwrap();
        w.write_record(["1", "2"]).unwrap();
        drop(w);
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "# config-hash sha256:abc\na,b\n1,2\n");
        assert_eq!(data_lines(&text), vec!["a,b", "1,2"]);
    }
}
