pub mod error;
pub mod io;
pub mod lattice;
pub mod protocol;
pub mod states;
pub mod symplectic;

pub use error::{Error, Result};
