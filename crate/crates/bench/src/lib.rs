//! Criterion benchmarks of the eigensolvers, generators and full anneals;
//! run with `cargo bench -p pspin-bench`.
