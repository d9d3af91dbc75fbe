use std::fmt::Display;
use std::io::Write;
use std::path::Path;

/// Error with the process exit code it maps to: 1 for bad input, 2 for
/// internal failures.
#[derive(Debug)]
pub struct CliError {
    pub error: anyhow::Error,
    pub code: u8,
}

impl CliError {
    pub fn user(error: impl Into<anyhow::Error>) -> Self {
        CliError { error: error.into(), code: 1 }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        CliError { error: error.into(), code: 2 }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait OrUser<T> {
    fn or_user(self) -> CliResult<T>;
    fn or_user_ctx(self, ctx: impl Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrUser<T> for Result<T, E> {
    fn or_user(self) -> CliResult<T> {
        self.map_err(CliError::user)
    }

    fn or_user_ctx(self, ctx: impl Display) -> CliResult<T> {
        self.map_err(|e| CliError::user(e.into().context(ctx.to_string())))
    }
}

pub fn user_msg(msg: impl Display) -> CliError {
    CliError::user(anyhow::anyhow!("{msg}"))
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(CliError::internal)?;
            stdout.flush().map_err(CliError::internal)
        }
    }
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).or_user_ctx(format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, content).or_user_ctx(format!("cannot write {}", path.display()))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).or_user_ctx(format!("cannot read {}", path.display()))
}
