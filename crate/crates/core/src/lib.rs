pub mod boost;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod matrix;
pub mod month;
pub mod pipeline;
pub mod plot;
pub mod resample;
pub mod seed;
pub mod spi;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use month::{Season, YearMonth};
