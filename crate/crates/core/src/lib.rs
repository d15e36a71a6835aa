//! Gibbs measures, groupoid convolution algebras and KMS checks on one-sided
//! shifts, with a numerical model of the T-Baker map.

pub mod algebra;
pub mod baker;
pub mod cocycles;
pub mod error;
pub mod function;
pub mod groupoid;
pub mod kms;
pub mod measures;
pub mod quadrature;
pub mod ruelle;
pub mod symbolic;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symbolic.md")]
    mod symbolic {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/transfer-operator.md")]
    mod transfer_operator {}
    #[doc = include_str!("../../../book/src/groupoids.md")]
    mod groupoids {}
    #[doc = include_str!("../../../book/src/algebra.md")]
    mod algebra {}
    #[doc = include_str!("../../../book/src/kms.md")]
    mod kms {}
    #[doc = include_str!("../../../book/src/baker.md")]
    mod baker {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
