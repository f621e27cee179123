//! Viscous-plastic sea-ice stress update (mEVP) on discontinuous Galerkin
//! quadrilateral meshes, with the data layouts, map strategies and execution
//! policies needed to study its throughput.
//!
//! * [`fields`]: per-element coefficient storage in row- or column-major layout
//! * [`mesh`]: structured quadrilateral meshes with bilinear element maps
//! * [`basis`]: Gauss rules, basis tables and L2 projection
//! * [`kernels`]: the stress update, its variants and a scalar reference
//! * [`bench`]: the benchmark harness behind the `mevp` binary

pub mod basis;
pub mod bench;
mod error;
pub mod fields;
pub mod kernels;
mod linalg;
pub mod mesh;

pub use error::{Error, Result};
pub use fields::{DGField, Precision, Scalar, StorageLayout};
pub use kernels::{ExecPolicy, MapMode, StressState, VPParams};
pub use mesh::{ElementQuad, Mesh};
