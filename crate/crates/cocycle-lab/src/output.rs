//! Result files with embedded run metadata.
//!
//! Every file carries the tool version, config hash and seed. The elapsed wall-clock
//! time goes on a line of its own containing `wall_clock`, so reproducibility checks
//! can drop exactly that line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata shared by the files of one run.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    started: Instant,
}

impl RunMeta {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        Ok(RunMeta { command: command.to_string(), config_hash: cfg.hash()?, seed: cfg.seed, started: Instant::now() })
    }

    fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: &'a T,
    wall_clock_seconds: f64,
}

/// Full-precision float for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &RunMeta, cfg: &RunConfig, result: &T) -> Result<PathBuf> {
    let env = Envelope {
        version: VERSION,
        command: &meta.command,
        config_hash: &meta.config_hash,
        seed: meta.seed,
        config: cfg,
        result,
        wall_clock_seconds: meta.elapsed(),
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Header comment, header row, records, trailing wall-clock comment.
pub fn write_csv(dir: &Path, name: &str, meta: &RunMeta, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut file = fs::File::create(&path)?;
    writeln!(
        file,
        "# version={} command={} config_hash={} seed={}",
        VERSION, meta.command, meta.config_hash, meta.seed
    )?;
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut file);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    writeln!(file, "# wall_clock_seconds={:.3}", meta.elapsed())?;
    Ok(path)
}

/// The file contents without the wall-clock line.
pub fn strip_wall_clock(text: &str) -> String {
    text.lines().filter(|l| !l.contains("wall_clock")).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::LN_2, -2.5e-300, 1e300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn strips_only_the_clock() {
        assert_eq!(strip_wall_clock("a\n# wall_clock_seconds=1.0\nb"), "a\nb");
    }
}
