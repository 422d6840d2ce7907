pub mod besov;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod norms;
pub mod packing;
pub mod recovery;
pub mod rng;
pub mod widths;

pub use error::{Error, Result};
pub use norms::{Exponent, ExponentPair, MixedArray, MixedShape, SupportPattern};
