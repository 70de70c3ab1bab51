pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod quad;
pub mod search;
pub mod special;
pub mod stripes1d;

pub use error::{Error, Result};
