pub mod density;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod multipliers;
pub mod nystrom;
pub mod resonance;
pub mod quad;
pub mod spectral;
pub mod strip;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
