use gasket_core::cocycle::CocycleError;
use gasket_core::exact::ExactError;
use gasket_core::lyapunov::LyapunovError;
use gasket_core::surface::SurfaceError;
use gasket_core::thermo::ThermoError;
use serde::Serialize;

/// A failed run, reported on stderr as one JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub error: &'static str,
    pub message: String,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Failure {
    fn new(error: &'static str, message: String, exit_code: i32) -> Self {
        Failure { error, message, exit_code }
    }

    pub fn bad_parameters(message: String) -> Self {
        Failure::new("BadParameters", message, 2)
    }

    pub fn config(message: String) -> Self {
        Failure::new("BadConfig", message, 2)
    }

    pub fn io(message: String) -> Self {
        Failure::new("IoFailure", message, 3)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

impl From<SurfaceError> for Failure {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::BadParameters | SurfaceError::BadStart(_) => Failure::new("BadParameters", e.to_string(), 2),
            SurfaceError::IoFailure(m) => Failure::io(m),
            _ => Failure::new("SurfaceError", e.to_string(), 1),
        }
    }
}

impl From<ThermoError> for Failure {
    fn from(e: ThermoError) -> Self {
        Failure::new("ThermoError", e.to_string(), 1)
    }
}

impl From<LyapunovError> for Failure {
    fn from(e: LyapunovError) -> Self {
        Failure::new("LyapunovError", e.to_string(), 1)
    }
}

impl From<CocycleError> for Failure {
    fn from(e: CocycleError) -> Self {
        Failure::new("CocycleError", e.to_string(), 1)
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Self {
        Failure::bad_parameters(e.to_string())
    }
}
