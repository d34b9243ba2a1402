use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<tempocast_core::Error> for CliError {
    fn from(e: tempocast_core::Error) -> Self {
        use tempocast_core::gbt::GbtError;
        match e {
            tempocast_core::Error::Gbt(GbtError::Params(m)) => CliError::Config(m),
            tempocast_core::Error::Synth(s) => CliError::Config(s.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                tempocast_core::Error::from(e).into()
            }
        }
    )*};
}

data_error!(
    tempocast_core::eventlog::EventLogError,
    tempocast_core::features::FeatureError,
    tempocast_core::dataset::DatasetError,
    tempocast_core::gbt::GbtError,
    tempocast_core::forecast::ForecastError,
    tempocast_core::synthgen::SynthError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
