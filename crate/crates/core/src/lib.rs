//! Mean curvature flow of rotationally symmetric, asymptotically cylindrical hypersurfaces,
//! evolved on two overlapping coordinate patches.

pub mod atlas;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod initdata;
pub mod params;
pub mod soliton;

pub use error::{Error, Result};
