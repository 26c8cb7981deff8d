pub mod algebra;
pub mod decoder;
pub mod defects;
pub mod error;
pub mod floquet;
pub mod lattice;
pub mod modular;
pub mod pauli;
pub mod stabilizer;
pub mod toric;

pub use error::{Error, Result};
pub use lattice::{Edge, EdgeLabel, HexLattice, LatticePath, Plaquette, Topology, Vertex};
pub use pauli::{ModParams, PauliWord};
pub use stabilizer::{Expectation, LogicalCount, Membership, StabilizerGroup};
