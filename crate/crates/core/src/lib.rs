//! Deterministic core for generating assistive-contact simulation data.
//!
//! Everything in this crate is a pure function of its inputs: no file IO, no
//! clocks, no ambient randomness. Seeds are threaded explicitly through the
//! [`rng::SplitMix64`] stream so that identical inputs reproduce identical
//! bytes, which the dataset layer relies on for content-addressed episodes.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod body;
pub mod bvh;
pub mod collide;
pub mod math;
pub mod mesh;
pub mod motion;
pub mod obs;
pub mod plan;
pub mod rng;
pub mod robot;
pub mod scenario;
pub mod scene;
pub mod shapes;
