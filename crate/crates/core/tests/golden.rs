// SPDX-License-Identifier: Apache-2.0

mod common;

use std::fs;

use minihls::corpus::{corpus_dir, CORPUS};

/// Set `UPDATE_GOLDEN=1` to rewrite the checked-in files.
#[test]
fn corpus_matches_golden_files() {
    let dir = corpus_dir().join("golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut stale = Vec::new();
    for k in &CORPUS {
        for (suffix, text) in common::artifacts(k) {
            let path = dir.join(format!("{}{suffix}", k.name));
            if update {
                fs::create_dir_all(&dir).unwrap();
                fs::write(&path, &text).unwrap();
            } else {
                match fs::read_to_string(&path) {
                    Ok(g) if g == text => {}
                    _ => stale.push(path.display().to_string()),
                }
            }
        }
    }
    assert!(stale.is_empty(), "differs from golden: {stale:?}");
}

#[test]
fn artifacts_are_deterministic() {
    for k in &CORPUS {
        assert_eq!(common::artifacts(k), common::artifacts(k), "{}", k.name);
    }
}
