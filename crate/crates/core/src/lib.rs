//! Freezing phase transitions for the distance potential over mixing
//! subshifts of finite type.
//!
//! The library builds the subshift from a transition matrix or forbidden
//! blocks, analyzes the induced system on the complement of a forbidden
//! 2-cylinder (return words, depth profiles, exact Birkhoff sums), and
//! evaluates the induced pressure series with certified tail bounds to
//! locate the freezing point t_c and the pressure curve.

pub mod cli;
pub mod induced;
pub mod potential;
pub mod pressure;
pub mod series;
pub mod sft;
pub mod spectral;
