use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::{CliError, Command, VERSION};

/// Shortest decimal that round-trips, in exponent form for very small or
/// large magnitudes; `NaN` for missing values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "NaN".to_string()
    } else if a == 0.0 || (1e-5..1e16).contains(&a) || a.is_infinite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

/// Output directory with the provenance line shared by every file.
pub struct OutputDir {
    root: PathBuf,
    provenance: String,
}

impl OutputDir {
    /// Creates the directory and echoes the effective configuration into it.
    pub fn create(cfg: &RunConfig, command: Command) -> Result<Self, CliError> {
        let root = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let provenance = format!(
            "# provenance config_sha256={} version={} command={}",
            cfg.digest(),
            VERSION,
            command.name()
        );
        let out = Self { root, provenance };
        let echo = serde_json::to_string_pretty(cfg).expect("config serialises");
        out.write_text("effective_config.json", &(echo + "\n"))?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Text file whose comment syntax is `#`, led by the provenance line.
    pub fn write_commented(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_text(name, &format!("{}\n{text}", self.provenance))
    }

    /// Provenance line, header row, then one record per row.
    pub fn write_csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let fail = |e: csv::Error| CliError::Failed(format!("writing {}: {e}", path.display()));
        let mut buf = Vec::new();
        buf.extend_from_slice(self.provenance.as_bytes());
        buf.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(fail)?;
            for row in rows {
                w.write_record(&row).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
        fs::write(&path, &buf).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.258107068274819, 1e-300, 4.95, -0.0, 12345678.9, 3.3e-9, 7.1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1.5e-70), "1.5e-70");
        assert_eq!(num(2e20), "2e20");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(opt(None), "NaN");
    }
}
