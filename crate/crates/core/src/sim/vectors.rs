// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::{Direction, KernelAst, ScalarType};

pub const DEFAULT_SEED: u64 = 0x5EED_2006;

/// Input contents of one run, at element granularity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVectors {
    #[serde(default)]
    pub memories: BTreeMap<String, Vec<i64>>,
    #[serde(default)]
    pub scalars: BTreeMap<String, i64>,
}

impl TestVectors {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vectors serialize")
    }
}

/// Seed override from `MINIHLS_SEED`, decimal or `0x` hex.
pub fn seed_from_env() -> u64 {
    std::env::var("MINIHLS_SEED")
        .ok()
        .and_then(|s| match s.strip_prefix("0x") {
            Some(h) => u64::from_str_radix(h, 16).ok(),
            None => s.parse().ok(),
        })
        .unwrap_or(DEFAULT_SEED)
}

fn sample(rng: &mut ChaCha8Rng, ty: ScalarType) -> i64 {
    rng.gen_range(ty.min_value()..=ty.max_value()) as i64
}

/// `n` input sets drawn uniformly over each input's declared type.
pub fn random_vectors(ast: &KernelAst, seed: u64, n: usize) -> Vec<TestVectors> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = TestVectors::default();
            for a in ast.arrays.iter().filter(|a| a.direction == Direction::In) {
                let vals = (0..a.len()).map(|_| sample(&mut rng, a.element)).collect();
                v.memories.insert(a.name.clone(), vals);
            }
            for p in ast.params.iter().filter(|p| !p.pointer) {
                v.scalars.insert(p.name.clone(), sample(&mut rng, p.ty));
            }
            v
        })
        .collect()
}
