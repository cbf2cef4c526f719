//! Benchmark harness for the symmetry-aware object SLAM backend: scenario
//! generation, pipeline runs (proposed / single-hypothesis / symmetry-
//! agnostic multi-hypothesis), metrics and comparison tables.

pub mod bench;
pub mod compare;
pub mod metrics;
pub mod pipeline;
pub mod presets;
