use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::Problem;
use crate::reductions::Reduction;
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub queries_per_sample: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 100,
            queries_per_sample: 20,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    pub fn with_samples(samples: usize) -> Self {
        VerifyConfig {
            samples,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub reduction: String,
    pub source: String,
    pub target: String,
    pub samples: usize,
    pub queries_checked: usize,
    pub target_failures: usize,
    pub query_failures: usize,
    pub plan_gaps: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    /// First few failure descriptions, for diagnostics.
    pub failures: Vec<String>,
    pub passed: bool,
}

const MAX_RECORDED_FAILURES: usize = 8;

/// Checks both defining equations of a reduction on sampled catalog inputs and
/// sampled target queries.
pub fn verify_reduction<S: Problem, P: Problem>(
    r: &Reduction<S, P>,
    config: &VerifyConfig,
) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let inputs = r.source.catalog();
    let queries = r.target.query_catalog();
    let mut report = VerificationReport {
        reduction: r.name.clone(),
        source: r.source.id(),
        target: r.target.id(),
        samples: 0,
        queries_checked: 0,
        target_failures: 0,
        query_failures: 0,
        plan_gaps: 0,
        max_discrepancy: 0.0,
        tolerance: config.tol,
        failures: Vec::new(),
        passed: false,
    };
    let note = |report: &mut VerificationReport, msg: String| {
        if report.failures.len() < MAX_RECORDED_FAILURES {
            report.failures.push(msg);
        }
    };
    if inputs.is_empty() {
        note(&mut report, "source catalog is empty".into());
        return report;
    }
    for _ in 0..config.samples.max(1) {
        let a = &inputs[rng.gen_range(0..inputs.len())];
        report.samples += 1;
        let ea = r.encode(a);

        match (r.source.target(a), r.target.target(&ea)) {
            (Ok(psi), Ok(xi)) => {
                let d = r.source.distance(&psi, &r.decode(&xi));
                report.max_discrepancy = report.max_discrepancy.max(d);
                if d > config.tol {
                    report.target_failures += 1;
                    note(&mut report, format!("target relation off by {d} on {a:?}"));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                report.target_failures += 1;
                note(&mut report, format!("target evaluation failed on {a:?}: {e}"));
            }
        }

        let picks: Vec<usize> = if queries.len() <= config.queries_per_sample {
            (0..queries.len()).collect()
        } else {
            (0..config.queries_per_sample)
                .map(|_| rng.gen_range(0..queries.len()))
                .collect()
        };
        for qi in picks {
            let f = &queries[qi];
            report.queries_checked += 1;
            let Some(sim) = r.plan.simulate(f) else {
                report.plan_gaps += 1;
                report.query_failures += 1;
                note(&mut report, format!("plan gap at {f}"));
                continue;
            };
            let lhs = r.target.evaluate(f, &ea);
            let answers: Result<Vec<Value>, _> =
                sim.sources().iter().map(|g| r.source.evaluate(g, a)).collect();
            match (lhs, answers) {
                (Ok(lhs), Ok(answers)) => {
                    let rhs = sim.combine(&answers);
                    let d = lhs.abs_diff(&rhs);
                    report.max_discrepancy = report.max_discrepancy.max(d);
                    if !lhs.agrees(&rhs, config.tol) {
                        report.query_failures += 1;
                        note(&mut report, format!("{f}: target answer {lhs}, simulated {rhs}"));
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    report.query_failures += 1;
                    note(&mut report, format!("{f}: evaluation failed: {e}"));
                }
            }
        }
    }
    report.passed = report.target_failures == 0
        && report.query_failures == 0
        && report.max_discrepancy <= config.tol;
    report
}
