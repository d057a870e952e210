pub mod basis;
pub mod bench;
pub mod block;
pub mod dense;
pub mod dg;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod mg;
pub mod par;
pub mod quadrature;
pub mod stability;

pub use basis::{BasisSpec, NodeRule};
pub use block::BlockVector;
pub use error::{Error, Result};
pub use par::Executor;
