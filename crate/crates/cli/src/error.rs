use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: delayfront::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn from_core(module: &'static str, source: delayfront::Error) -> Self {
        Self::Core { module, source }
    }

    /// 2 for anything the configuration could fix, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        use delayfront::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Core { source, .. } => match source {
                E::InvalidInput(_) | E::Domain(_) | E::Config(_) | E::Model(_) => 2,
                _ => 3,
            },
            Self::Io { .. } => 3,
        }
    }
}

pub trait Context<T> {
    fn ctx(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for delayfront::Result<T> {
    fn ctx(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(module, e))
    }
}
