// SPDX-License-Identifier: Apache-2.0

//! Differential verification of compiled kernels against the reference
//! interpreter over many random vectors. Each (kernel, vector) case is
//! independent, so cases run on the rayon pool when the `parallel`
//! feature is on.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::corpus::CorpusKernel;
use crate::netlist::{MemKind, Netlist};
use crate::pipeline::{compile, CompileOptions, Compiled};
use crate::sim::{
    interpret_oracle, oracle_tables, random_vectors, simulate, OracleOutputs, SimConfig, TestVectors,
};
use crate::frontend::KernelAst;

/// One kernel and how many random vectors to check it on.
#[derive(Clone, Debug)]
pub struct BatchJob {
    pub name: String,
    pub source: String,
    pub options: CompileOptions,
    pub seed: u64,
    pub vectors: usize,
}

impl BatchJob {
    pub fn corpus(k: &CorpusKernel, seed: u64, vectors: usize) -> Self {
        BatchJob {
            name: k.name.to_string(),
            source: k.source.to_string(),
            options: k.options(),
            seed,
            vectors,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub index: usize,
    pub cycles: u64,
    /// `None` when the simulated outputs equal the interpreter's.
    pub mismatch: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchOutcome {
    pub name: String,
    /// A compile or table error stops the kernel before any case runs.
    pub error: Option<String>,
    pub cases: Vec<CaseResult>,
}

impl BatchOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.cases.iter().all(|c| c.mismatch.is_none())
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| c.mismatch.is_some()).count()
    }
}

/// Simulated outputs in the interpreter's shape.
pub fn simulated_outputs(nl: &Netlist, v: &TestVectors) -> Result<(OracleOutputs, u64), String> {
    let cfg = SimConfig::from_vectors(nl, v).map_err(|e| e.to_string())?;
    let r = simulate(nl, &cfg).map_err(|e| e.to_string())?;
    let arrays = nl
        .mems
        .iter()
        .filter(|m| m.kind == MemKind::Write)
        .map(|m| {
            let cells = r.memory(&m.name).map(|img| img.unpack(m)).unwrap_or_default();
            (m.name.clone(), cells)
        })
        .collect();
    Ok((
        OracleOutputs {
            arrays,
            scalars: r.scalars,
        },
        r.trace.cycles,
    ))
}

fn diff(sim: &OracleOutputs, gold: &OracleOutputs) -> Option<String> {
    let mut out = Vec::new();
    for (a, want) in &gold.arrays {
        let got = sim.arrays.get(a).cloned().unwrap_or_default();
        for (k, w) in want.iter().enumerate() {
            let g = got.get(k).copied().flatten();
            if g != *w {
                out.push(format!("{a}[{k}]: simulated {g:?}, expected {w:?}"));
            }
        }
    }
    let keys: BTreeMap<&String, ()> = sim.scalars.keys().chain(gold.scalars.keys()).map(|k| (k, ())).collect();
    for k in keys.keys() {
        let (g, w) = (sim.scalars.get(*k), gold.scalars.get(*k));
        if g != w {
            out.push(format!("{k}: simulated {g:?}, expected {w:?}"));
        }
    }
    (!out.is_empty()).then(|| out.join("; "))
}

/// Simulate one vector and compare against the interpreter.
pub fn check_case(c: &Compiled, tables: &BTreeMap<String, Vec<i64>>, index: usize, v: &TestVectors) -> CaseResult {
    let ast: &KernelAst = &c.source;
    let gold = interpret_oracle(ast, v, tables);
    let sim = simulated_outputs(&c.netlist, v);
    let (cycles, mismatch) = match (sim, gold) {
        (Ok((s, cycles)), Ok(g)) => (cycles, diff(&s, &g)),
        (Err(e), _) => (0, Some(format!("simulation failed: {e}"))),
        (_, Err(e)) => (0, Some(format!("interpreter failed: {e}"))),
    };
    CaseResult { index, cycles, mismatch }
}

struct Prepared {
    compiled: Compiled,
    tables: BTreeMap<String, Vec<i64>>,
    vectors: Vec<TestVectors>,
}

fn prepare(job: &BatchJob) -> Result<Prepared, String> {
    let compiled = compile(&job.source, &job.options).map_err(|e| e.to_string())?;
    let tables = oracle_tables(&compiled.source, &job.options.luts).map_err(|e| e.to_string())?;
    let vectors = random_vectors(&compiled.source, job.seed, job.vectors);
    Ok(Prepared {
        compiled,
        tables,
        vectors,
    })
}

fn outcome(job: &BatchJob, p: Result<Prepared, String>, run: impl Fn(&Prepared) -> Vec<CaseResult>) -> BatchOutcome {
    match p {
        Ok(p) => BatchOutcome {
            name: job.name.clone(),
            error: None,
            cases: run(&p),
        },
        Err(e) => BatchOutcome {
            name: job.name.clone(),
            error: Some(e),
            cases: Vec::new(),
        },
    }
}

/// Verify every job on the calling thread.
pub fn verify_sequential(jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    jobs.iter()
        .map(|j| {
            outcome(j, prepare(j), |p| {
                p.vectors
                    .iter()
                    .enumerate()
                    .map(|(k, v)| check_case(&p.compiled, &p.tables, k, v))
                    .collect()
            })
        })
        .collect()
}

/// Verify every job with compiles and cases spread over the rayon pool.
/// Results are identical to [`verify_sequential`].
#[cfg(feature = "parallel")]
pub fn verify_parallel(jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    let prepared: Vec<Result<Prepared, String>> = jobs.par_iter().map(prepare).collect();
    jobs.iter()
        .zip(prepared)
        .map(|(j, p)| {
            outcome(j, p, |p| {
                p.vectors
                    .par_iter()
                    .enumerate()
                    .map(|(k, v)| check_case(&p.compiled, &p.tables, k, v))
                    .collect()
            })
        })
        .collect()
}

/// The parallel path when built with it, the sequential one otherwise.
pub fn verify(jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    #[cfg(feature = "parallel")]
    {
        verify_parallel(jobs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        verify_sequential(jobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CORPUS;
    use crate::sim::DEFAULT_SEED;

    #[test]
    fn corpus_passes_and_paths_agree() {
        let jobs: Vec<BatchJob> = CORPUS.iter().map(|k| BatchJob::corpus(k, DEFAULT_SEED, 4)).collect();
        let seq = verify_sequential(&jobs);
        for o in &seq {
            assert!(o.passed(), "{}: {:?} {:?}", o.name, o.error, o.cases);
        }
        assert_eq!(verify(&jobs), seq);
    }

    #[test]
    fn compile_error_is_reported() {
        let job = BatchJob {
            name: "bad".into(),
            source: "void k(int8_t A[4]) { for (;;) {} }".into(),
            options: CompileOptions::default(),
            seed: 1,
            vectors: 2,
        };
        let o = verify_sequential(&[job]).remove(0);
        assert!(o.error.is_some() && !o.passed());
    }
}
