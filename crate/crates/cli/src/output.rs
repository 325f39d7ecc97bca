use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::args::ExperimentConfig;
use crate::error::CliResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Opens `out` for writing. `None`, `-` or the bare format name (`csv`,
/// `json`) select stdout.
pub fn open(out: Option<&str>, format: &str) -> CliResult<Box<dyn Write>> {
    match out {
        None | Some("-") => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(s) if s == format => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => create(Path::new(path)),
    }
}

pub fn create(path: &Path) -> CliResult<Box<dyn Write>> {
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        x.to_string()
    }
}

/// `#` header: tool, command, config echo, RNG, then command-specific facts.
pub fn csv_header(w: &mut dyn Write, cfg: &ExperimentConfig, extra: &[(&str, String)]) -> CliResult<()> {
    writeln!(w, "# gkpsim {TOOL_VERSION}")?;
    writeln!(w, "# command: {}", cfg.name())?;
    writeln!(w, "# config: {}", serde_json::to_string(cfg)?)?;
    writeln!(w, "# rng: {}", gkpsim::rng::RNG_ALGORITHM)?;
    for (k, v) in extra {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
    pub rng: &'static str,
}

impl<'a> Meta<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            tool: "gkpsim",
            version: TOOL_VERSION,
            command: cfg.name(),
            config: cfg,
            rng: gkpsim::rng::RNG_ALGORITHM,
        }
    }
}
