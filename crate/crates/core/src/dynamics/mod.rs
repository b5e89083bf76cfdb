//! Continuous-time exclusion and collision dynamics on the periodic lattice.

mod lattice;
mod sim;
mod snapshot;
mod state;

pub use lattice::Lattice;
pub use sim::{DynamicsParams, EventCounts, Simulator};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use state::LatticeState;
