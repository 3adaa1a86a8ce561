//! Inputs shared by the benchmarks.

use tenclass::classifiers::Config;
use tenclass::verify::{generate, GeneratorKind, GeneratorSpec};
use tenclass::Tensor;

/// A fixed batch of tensors of one kind and shape.
pub fn batch(kind: GeneratorKind, order: usize, dim: usize, count: usize) -> Vec<Tensor> {
    let spec = GeneratorSpec {
        kind,
        order,
        dim,
        seed: 17,
        count,
    };
    generate(&spec, &Config::default()).expect("benchmark inputs")
}
