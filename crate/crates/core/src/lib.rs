//! Rational points of bounded height on the split quartic del Pezzo surface
//!
//! ```text
//! x0 x1 - x2 x3 = x0 x4 + x1 x2 + x3^2 = 0
//! ```
//!
//! with an `A4` singularity: exact counts through the universal torsor, the
//! leading constant of the asymptotic formula, and the arithmetic and
//! analytic quantities that enter its proof.
//!
//! ```
//! use a4_manin::enumerate::count_torsor;
//!
//! assert_eq!(count_torsor(10).unwrap().count, count_torsor(10).unwrap().count);
//! ```

pub mod arith;
pub mod cli;
pub mod constants;
pub mod enumerate;
pub mod error;
pub mod modsqrt;
pub mod quad;
pub mod series;
pub mod surface;
pub mod torsor;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/surface.md")]
    pub mod surface {}
    #[doc = include_str!("../../../book/src/torsor.md")]
    pub mod torsor {}
    #[doc = include_str!("../../../book/src/counting.md")]
    pub mod counting {}
    #[doc = include_str!("../../../book/src/constant.md")]
    pub mod constant {}
    #[doc = include_str!("../../../book/src/prediction.md")]
    pub mod prediction {}
    #[doc = include_str!("../../../book/src/progressions.md")]
    pub mod progressions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
