use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use congruent::mixture::{DensityData, IntervalReport, MixturePosterior};
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// Where a command's files go. Without a directory nothing is written and
/// the summary goes to stdout only.
pub struct Sink {
    dir: Option<PathBuf>,
    format: Format,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>, format: Format) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| {
                CliError::Usage(format!(
                    "cannot create output directory {}: {e}",
                    d.display()
                ))
            })?;
        }
        Ok(Sink {
            dir: dir.map(Path::to_path_buf),
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&mut self, name: &str) -> Result<Option<PathBuf>, CliError> {
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(path.clone());
        Ok(Some(path))
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        self.json_always(name, value, false)
    }

    /// Writes JSON even when the format is CSV-only (manifests, sidecars).
    pub fn json_always(&mut self, name: &str, value: &Value, force: bool) -> Result<(), CliError> {
        if !(force || self.format.json()) {
            return Ok(());
        }
        if let Some(path) = self.path(name)? {
            fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
        }
        Ok(())
    }

    pub fn csv<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> congruent::Result<()>,
    {
        if !self.format.csv() {
            return Ok(());
        }
        if let Some(path) = self.path(name)? {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    /// Figure-panel data: `<stem>.csv` plus `<stem>.atoms.json`.
    pub fn density(&mut self, stem: &str, data: &DensityData) -> Result<(), CliError> {
        if !self.format.csv() {
            return Ok(());
        }
        self.csv(&format!("{stem}.csv"), |w| data.write_csv(w))?;
        self.json_always(
            &format!("{stem}.atoms.json"),
            &json!({ "atoms": data.atoms }),
            true,
        )
    }

    /// Probability mass over outcomes, with the observed outcome marked.
    pub fn pmf(&mut self, stem: &str, probs: &[f64], observed: u64) -> Result<(), CliError> {
        self.csv(&format!("{stem}.csv"), |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["x", "probability", "observed"])?;
            for (x, p) in probs.iter().enumerate() {
                c.write_record([
                    x.to_string(),
                    p.to_string(),
                    ((x as u64 == observed) as u8).to_string(),
                ])?;
            }
            c.flush()?;
            Ok(())
        })
    }
}

pub fn r3(v: f64) -> String {
    format!("{v:.3}")
}

pub fn interval_display(iv: &IntervalReport) -> String {
    format!("[{}, {}]", r3(iv.lower), r3(iv.upper))
}

/// Full-precision summaries of a posterior with 3-decimal display strings.
pub fn posterior_summary(
    mp: &MixturePosterior,
    interval: &IntervalReport,
) -> Result<Value, CliError> {
    let mean = mp.mean();
    let median = mp.median()?;
    Ok(json!({
        "w0": mp.w0().get(),
        "w1": mp.w1().get(),
        "mean": mean,
        "median": median,
        "interval": interval,
        "display": {
            "mean": r3(mean),
            "median": r3(median),
            "interval": interval_display(interval),
            "actual_mass": format!("{:.4}", interval.actual_mass),
            "lower_tail": r3(interval.lower_tail),
            "upper_tail": r3(interval.upper_tail),
        },
    }))
}
