//! Quantum network tomography on Pauli-channel networks.
//!
//! * [`pauli`]: Pauli-Liouville vectors, transfer matrices, CNOT, dressing.
//! * [`oracle`]: density-matrix reference used to check [`pauli`].
//! * [`network`]: topologies, degree-2 simplification, etching bookkeeping.
//! * [`protocols`]: unicast, Mergecast, BypassUnicast, SPAM protocols and estimators.
//! * [`stats`]: seeded streams, MSE aggregation, Cramér–Rao bounds.
//! * [`realistic`]: photon loss and memory decoherence.

pub mod network;
pub mod oracle;
pub mod par;
pub mod pauli;
pub mod protocols;
pub mod realistic;
pub mod stats;

pub use network::{parse_topology, validate, EdgeId, NodeId, NodeKind, Topology};
pub use par::Execution;
pub use pauli::{Basis, PauliChannel, PauliVector1Q, PauliVector2Q, Ptm1Q};
pub use protocols::SpamModel;
