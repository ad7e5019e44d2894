//! Speed priors on a fixed reference monotone machine.

pub mod bits;
pub mod enumerate;
pub mod measures;
mod par;
pub mod predictor;
pub mod priors;
pub mod rational;
pub mod verify;
pub mod vm;

pub use bits::{bs, BitString};
pub use par::{map_ordered, Workers};
pub use rational::Rational;
