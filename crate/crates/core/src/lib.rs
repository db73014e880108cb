//! Certainty-equivalent perception-based control: learned perception maps
//! with uniform error certificates, dense sampling, L1-optimal tracking
//! synthesis and closed-loop evaluation.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod closed_loop;
pub mod error;
pub mod lin_sys;
pub mod linalg;
pub mod math;
pub mod perception;
pub mod sampling;
pub mod synthesis;

pub use error::{Error, Result};
