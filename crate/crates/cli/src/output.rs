use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use darkpath::linalg::Matrix;
use serde::de::DeserializeOwned;

use crate::Format;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files; exit 2.
    Usage(String),
    /// Valid input whose computation failed; exit 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<darkpath::Error> for CliError {
    fn from(e: darkpath::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Read and parse a JSON input file. Parse errors carry the line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Writer for `--out`, or stdout.
pub fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

/// Chosen format, else inferred from the output extension, else `default`.
pub fn resolve_format(format: Option<Format>, out: Option<&Path>, default: Format) -> Format {
    format.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => default,
    })
}

pub fn write_failed(e: impl fmt::Display) -> CliError {
    CliError::Failure(format!("writing output: {e}"))
}

/// Long-format matrix rows: `matrix,row,col,re,im`.
pub fn write_matrices_csv<W: Write>(writer: W, matrices: &[(&str, &Matrix)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["matrix", "row", "col", "re", "im"]).map_err(write_failed)?;
    for (name, m) in matrices {
        for ((i, j), z) in m.indexed_iter() {
            w.write_record([name.to_string(), i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])
                .map_err(write_failed)?;
        }
    }
    w.flush().map_err(write_failed)
}
