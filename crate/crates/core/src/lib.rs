//! Secrecy-rate optimization for a two-hop MIMO decode-and-forward relay
//! with artificial noise, finite-alphabet input and norm-bounded CSI errors.

pub mod alphabet;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod outcome;
pub mod perfect;
pub mod robust;
pub mod scenario;
pub mod sdp;

pub use alphabet::{Alphabet, MiEvaluator, MonotoneTable};
pub use channel::{ChannelSet, PowerConfig, ScalarBounds, UncertaintyRadii};
pub use error::{Error, Result};
pub use linalg::HermitianMatrix;
pub use outcome::{extract_beamvector, OutcomeStatus, SolveOutcome};
pub use scenario::{Scenario, SolverSettings};
