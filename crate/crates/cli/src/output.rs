use std::io::Write;
use std::path::Path;

use crate::{CliError, CliResult};

/// `#` lines recording the tool version, subcommand, full command line and seed.
pub fn provenance(subcommand: &str, seed: u64) -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!(
        "# perceptor {} {subcommand}\n# command: perceptor {}\n# seed: {seed}\n",
        env!("CARGO_PKG_VERSION"),
        args.join(" ")
    )
}

/// JSON object with the provenance fields under a `provenance` key.
pub fn provenance_json(subcommand: &str, seed: u64) -> serde_json::Value {
    let args: Vec<String> = std::env::args().skip(1).collect();
    serde_json::json!({
        "tool": "perceptor",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "command": args,
        "seed": seed,
    })
}

pub fn csv_row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::File {
            path: p.display().to_string(),
            source: e.into(),
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Core(e.into()))
        }
    }
}
