//! Local Kloosterman-type sums attached to overorders of monogenic cubic
//! orders with fixed norm constant `±p^k`, their Dirichlet series, and the
//! checks that tie them to closed Euler-factor forms.

pub mod analytic;
pub mod arith;
pub mod cubic;
pub mod error;
pub mod kloosterman;
pub mod overorders;
pub mod report;
pub mod series;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/forms.md")]
    mod forms {}
    #[doc = include_str!("../../../book/src/overorders.md")]
    mod overorders {}
    #[doc = include_str!("../../../book/src/kloosterman.md")]
    mod kloosterman {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/analytic.md")]
    mod analytic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
