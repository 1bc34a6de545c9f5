// SPDX-License-Identifier: Apache-2.0

mod common;

use minihls::pipeline::{compile, CompileOptions};
use minihls::sim::{random_vectors, DEFAULT_SEED};

const OUTSIDE: &str = "void k(int8_t A[10], int16_t C[8]) {
  int i;
  for (i = 0; i < 8; i = i + 1) { C[i] = A[i] + 2 * A[i + 1] - A[i + 2]; }
}";

const INSIDE: &str = "void k(int8_t A[10], int16_t C[8]) {
  for (int i = 0; i < 8; i = i + 1) { C[i] = A[i] + 2 * A[i + 1] - A[i + 2]; }
}";

/// A loop index declared before its loop must not be folded to its first
/// value in the store address.
#[test]
fn index_declared_outside_loop_is_not_folded() {
    let a = compile(OUTSIDE, &CompileOptions::default()).unwrap();
    let b = compile(INSIDE, &CompileOptions::default()).unwrap();
    assert_eq!(a.scalarized.stores, b.scalarized.stores);
    for v in random_vectors(&a.source, DEFAULT_SEED, 3) {
        let ra = common::sim_arrays(&a, &common::run(&a, &v));
        let rb = common::sim_arrays(&b, &common::run(&b, &v));
        assert_eq!(ra, rb);
        assert!(ra["C"].iter().all(Option::is_some), "{ra:?}");
    }
}
