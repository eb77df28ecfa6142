/// Errors from file handling, schema application, and everything the core
/// crate can raise.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    BadNumber { line: u64, column: String, value: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] fairpost_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reads a file with the path recorded in the error.
pub fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads raw bytes with the path recorded in the error.
pub fn read_bytes(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a file with the path recorded in the error.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
