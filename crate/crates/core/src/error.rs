use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid problem or solver configuration.
    Config(String),
    /// A grid or shock curve violates its structural invariants.
    Geometry(String),
    /// A frozen coefficient field left the admissible range.
    Coefficient { node: usize, value: f64 },
    /// The Krylov solve and its fallback both stalled.
    LinearSolve { residuals: Vec<f64> },
    /// Picard changes grew for several consecutive sweeps.
    PicardDivergence { changes: Vec<f64> },
    /// Converged field escaped the `[p2, p1]` band.
    MaxPrinciple { min: f64, max: f64 },
    /// Shock iteration hit its iteration cap.
    OuterMaxExceeded { last_change: f64 },
    /// Error raised at a given continuation stage.
    Stage { epsilon: f64, source: alloc::boxed::Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Geometry(msg) => write!(f, "geometry error: {msg}"),
            Error::Coefficient { node, value } => {
                write!(f, "coefficient field not positive at node {node} (value {value})")
            }
            Error::LinearSolve { residuals } => write!(
                f,
                "linear solver did not converge after {} iterations (last residual {:e})",
                residuals.len(),
                residuals.last().copied().unwrap_or(f64::NAN)
            ),
            Error::PicardDivergence { changes } => write!(
                f,
                "Picard iteration diverged after {} sweeps (last change {:e})",
                changes.len(),
                changes.last().copied().unwrap_or(f64::NAN)
            ),
            Error::MaxPrinciple { min, max } => {
                write!(f, "pressure left the admissible band: min {min}, max {max}")
            }
            Error::OuterMaxExceeded { last_change } => {
                write!(f, "shock iteration did not converge (last change {last_change:e})")
            }
            Error::Stage { epsilon, source } => write!(f, "stage eps={epsilon:e}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
