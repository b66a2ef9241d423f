//! IO companion to `caresim-core`: scenario providers, dataset persistence,
//! exporters, and the `caresim` CLI plumbing.

pub use caresim_core as core;
