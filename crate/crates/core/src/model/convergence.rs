use serde::Serialize;

use crate::error::{Result, SciError};
use crate::model::{evaluate_tower, Problem, Tower};

/// Finite-stage surrogate for an iterated limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport<O> {
    /// Outer stages probed, in schedule order.
    pub stages: Vec<usize>,
    /// Value attached to each outer stage (for height >= 2, the last probed inner value).
    pub values: Vec<O>,
    /// Distances between successive outer values.
    pub distances: Vec<f64>,
    /// Whether every inner level also stabilized.
    pub inner_stabilized: bool,
    pub stabilized: bool,
    pub final_value: O,
}

/// Probes `tower` along `schedule` (one stage list per level, outer level first).
///
/// A level counts as stabilized when its last `tail` successive distances are all
/// below `tol`. Height-0 towers are stabilized immediately.
pub fn probe_convergence<P, T>(
    tower: &T,
    problem: &P,
    input: &P::Input,
    schedule: &[Vec<usize>],
    tol: f64,
    tail: usize,
) -> Result<ConvergenceReport<P::Output>>
where
    P: Problem,
    T: Tower<P> + ?Sized,
{
    let height = tower.height();
    if height == 0 {
        let v = evaluate_tower(tower, &[], problem, input)?;
        return Ok(ConvergenceReport {
            stages: Vec::new(),
            values: vec![v.clone()],
            distances: Vec::new(),
            inner_stabilized: true,
            stabilized: true,
            final_value: v,
        });
    }
    if schedule.len() != height {
        return Err(SciError::IndexArityMismatch {
            expected: height,
            got: schedule.len(),
        });
    }
    if schedule.iter().any(|level| level.is_empty()) {
        return Err(SciError::invalid("every schedule level needs at least one stage"));
    }
    probe_level(tower, problem, input, schedule, &mut Vec::new(), tol, tail)
}

fn probe_level<P, T>(
    tower: &T,
    problem: &P,
    input: &P::Input,
    schedule: &[Vec<usize>],
    prefix: &mut Vec<usize>,
    tol: f64,
    tail: usize,
) -> Result<ConvergenceReport<P::Output>>
where
    P: Problem,
    T: Tower<P> + ?Sized,
{
    let level = prefix.len();
    let innermost = level + 1 == schedule.len();
    let mut values = Vec::new();
    let mut inner_ok = true;
    for &n in &schedule[level] {
        prefix.push(n);
        let v = if innermost {
            evaluate_tower(tower, prefix, problem, input)
        } else {
            probe_level(tower, problem, input, schedule, prefix, tol, tail).map(|r| {
                inner_ok &= r.stabilized;
                r.final_value
            })
        };
        prefix.pop();
        values.push(v?);
    }
    let distances: Vec<f64> = values
        .windows(2)
        .map(|w| problem.distance(&w[0], &w[1]))
        .collect();
    let tail_ok = distances.len() >= tail && distances[distances.len() - tail..].iter().all(|&d| d < tol);
    Ok(ConvergenceReport {
        stages: schedule[level].clone(),
        final_value: values.last().cloned().expect("nonempty schedule level"),
        values,
        distances,
        inner_stabilized: inner_ok,
        stabilized: tail_ok && inner_ok,
    })
}
