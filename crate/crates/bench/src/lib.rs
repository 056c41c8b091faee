//! Criterion benchmarks for the field evaluations and the integrator; see
//! `benches/fields.rs`.
