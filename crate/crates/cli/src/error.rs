use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] wishent::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input: {0}")]
    Missing(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 config, 3 numerical, 4 io.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Missing(_) => 4,
            CliError::Core(e) => core_code(e),
        }
    }
}

fn core_code(e: &wishent::Error) -> u8 {
    use wishent::Error as E;
    match e {
        E::GridPoint { source, .. } => core_code(source),
        _ if e.is_io() => 4,
        E::ParameterDomain(_)
        | E::Config(_)
        | E::InsufficientData(_)
        | E::SingularParameter { .. }
        | E::DegenerateProfile => 2,
        _ => 3,
    }
}
