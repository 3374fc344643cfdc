//! Controlled remote state preparation over maximal-slice channels.
//!
//! Three parties share `(|000> + a|111> + b|110>)/sqrt(2)` (one copy per
//! target qubit). Alice measures in a basis built from the target, Charlie
//! measures in a channel-dependent tau basis and decides whether to tell Bob,
//! and Bob applies a Pauli correction. The crate simulates these runs with a
//! seeded random source ([`protocol`]) and certifies them exactly by walking
//! every measurement branch ([`oracle`]).

pub mod bases;
pub mod channel;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod protocol;
pub mod qstate;

pub use bases::{SingleTarget, Target, TargetClass, TwoTarget};
pub use channel::ChannelParams;
pub use error::{CrspError, Result};
pub use protocol::{ProtocolId, TrialRecord, TrialStatus};
pub use qstate::{LocalUnitary2, MeasurementBasis, Statevector};
