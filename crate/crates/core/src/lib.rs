pub mod coefficients;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod features;
pub mod gee;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod random;
pub mod sim;
pub mod spot;
pub mod stickiness;

pub use error::{Error, Result};
