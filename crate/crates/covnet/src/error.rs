use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] covnet_core::Error),
}

impl Error {
    pub fn data(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Data {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status: 1 config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        use covnet_core::Error as C;
        match self {
            Error::Config(_) => 1,
            Error::Data { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Core(e) => match e {
                C::InvalidConfig(_) => 1,
                C::ShapeMismatch { .. }
                | C::EmptySoftmaxRow { .. }
                | C::NonScalarLoss(_)
                | C::NonFiniteFeature { .. }
                | C::ZeroVolatility
                | C::TotalLoss { .. }
                | C::Divergence { .. }
                | C::AllCellsFailed => 3,
                _ => 2,
            },
        }
    }
}
