//! Return trajectories, fictitious controls and their reduction for cubically
//! coupled 1D wave equations.

pub mod error;
pub mod fd;
pub mod geometry;
pub mod field;
pub mod jet;
pub mod profiles;
pub mod trajectory;
pub mod coupling;
pub mod data;
pub mod wavelab;
pub mod compat;
pub mod fictitious;
pub mod reducer;
pub mod scenario;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};
pub use jet::Jet;
