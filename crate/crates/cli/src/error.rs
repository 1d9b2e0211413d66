use std::fmt;

use pathmeasure::correlations::CorrelationError;
use pathmeasure::decay::DecayError;
use pathmeasure::dynamics::DynamicsError;
use pathmeasure::measure_lab::MeasureError;
use pathmeasure::scattering::ScatteringError;
use pathmeasure::semiclassical::SemiclassicalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Numerical,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Validation => 2,
            Kind::Numerical => 3,
            Kind::Io => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Validation => "invalid configuration",
            Kind::Numerical => "numerical failure",
            Kind::Io => "i/o failure",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidSpec(_)
            | DynamicsError::ShapeMismatch { .. }
            | DynamicsError::InvalidSpan { .. }
            | DynamicsError::TooFewSamples(_)
            | DynamicsError::NonUniformSamples => Self::validation(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<SemiclassicalError> for CliError {
    fn from(e: SemiclassicalError) -> Self {
        match e {
            SemiclassicalError::Dynamics(inner) => inner.into(),
            SemiclassicalError::InvalidBranch(_) | SemiclassicalError::Model(_) => {
                Self::validation(e.to_string())
            }
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        match e {
            ScatteringError::Dynamics(inner) => inner.into(),
            ScatteringError::InvalidProblem(_) => Self::validation(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<DecayError> for CliError {
    fn from(e: DecayError) -> Self {
        match e {
            DecayError::InvalidSpec(_)
            | DecayError::NoRealVertex(_)
            | DecayError::NotCentreOfMass(_) => Self::validation(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<CorrelationError> for CliError {
    fn from(e: CorrelationError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        Self::validation(e.to_string())
    }
}
