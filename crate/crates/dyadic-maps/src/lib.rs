//! Exact arithmetic for Lebesgue-measure-preserving dyadic piecewise-affine
//! interval maps: the monoid `G` of onto maps with power-of-two slopes and
//! dyadic breakpoints, built on Thompson's group `F`.
//!
//! ```
//! use dyadic_maps::prelude::*;
//!
//! let t = PAMap::tent();
//! assert!(is_in_g(&t));
//! assert_eq!(entropy(&t).unwrap(), Entropy::Exact(qi(1)));
//! ```

pub mod error;
pub mod numeric;
pub mod map_core;
pub mod dynamics;
pub mod construct;
pub mod algebra;
pub mod conjugacy;
pub mod plot;
pub mod cli;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::map_core::*;
    pub use crate::dynamics::*;
    pub use crate::construct::*;
    pub use crate::algebra::*;
    pub use crate::conjugacy::*;
    pub use crate::plot::*;
    pub use crate::numeric::*;
}
