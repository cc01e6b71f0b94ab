pub mod error;
pub mod linalg;
pub mod generate;
pub mod solver;
pub mod recovery;
pub mod certificate;
pub mod segmentation;
pub mod outlier;
pub mod io;
pub mod experiment;

pub use error::{LrrError, Result};
