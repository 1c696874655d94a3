//! Parameter regions, Lyapunov diagnostics and rate fitting.

pub mod bounds;
pub mod lyapunov;
pub mod rate;

pub use bounds::{
    bounds_theorem1, bounds_theorem3, bounds_theorem5, bounds_theorem7, InitialNorms, NamedConstant, RelativeInputs,
    Theorem1, Theorem3, Theorem5, Theorem7,
};
pub use lyapunov::{check_pairing, lyapunov_eval, LyapunovKind, LyapunovSpec, LyapunovValue};
pub use rate::{fit_rate, fit_window, FitMode, RateFit};
