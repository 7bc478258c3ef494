//! Measures on the unit circle, their Herglotz and multiplicative
//! transforms, and the operators generated by rotations and `z -> z^N`.
//!
//! - [`series`]: truncated power series over exact rationals or floats.
//! - [`fourier`]: measure expressions and certified Fourier windows.
//! - [`mass`]: cumulative mass functions and premeasures.
//! - [`algebra`]: the rotation/power monoid, its semigroup ring and actions.
//! - [`kappa`]: entropy functions, Carleson sets and growth profiles.
//! - [`witt`]: big Witt vectors as power series with constant term 1.
//! - [`cyclo`]: exact sums of roots of unity.

pub mod algebra;
pub mod cyclo;
pub mod fourier;
pub mod kappa;
pub mod mass;
pub mod series;
pub mod witt;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/premeasures.md")]
    mod premeasures {}
    #[doc = include_str!("../../../book/src/monoid.md")]
    mod monoid {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/witt.md")]
    mod witt {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
