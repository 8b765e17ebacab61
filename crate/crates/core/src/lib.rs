pub mod error;
pub mod boundary;
pub mod ebh;
pub mod exact;
pub mod linalg;
pub mod qes;
pub mod scan;
pub mod spin;
pub mod tn;

pub use error::{Error, Result};
