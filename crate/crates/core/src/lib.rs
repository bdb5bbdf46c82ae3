//! Discrete-time control contraction metrics for polynomial control-affine
//! plants: sum-of-squares synthesis, geodesics under the metric, and the
//! resulting tracking controller.

pub mod ctrl;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod linalg;
pub mod plot;
pub mod poly;
pub mod sdp;
pub mod sim;
pub mod synth;
pub mod system;
pub mod verify;

pub use error::{DccmError, Result};
