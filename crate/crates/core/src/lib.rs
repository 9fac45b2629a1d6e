//! Disentanglement of two-qubit states under local noise.

pub mod channels;
pub mod concurrence;
pub mod critical;
pub mod density;
pub mod error;
pub mod oracle;
mod linalg;
pub mod roots;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Mat4, C};
