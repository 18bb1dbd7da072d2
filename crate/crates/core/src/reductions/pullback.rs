use std::sync::Arc;

use crate::error::{Result, SciError};
use crate::model::{GeneralAlgorithm, Problem, Session, Step, Tower, DEFAULT_BUDGET};
use crate::reductions::{Reduction, Simulation};
use crate::value::Value;

/// Runs a target-side algorithm on source inputs by simulating each of its
/// queries with the reduction's plan and decoding its output.
pub struct PullbackAlgorithm<S: Problem, P: Problem> {
    reduction: Arc<Reduction<S, P>>,
    inner: Arc<dyn GeneralAlgorithm<P>>,
}

pub fn pullback_algorithm<S: Problem, P: Problem>(
    reduction: Arc<Reduction<S, P>>,
    inner: Arc<dyn GeneralAlgorithm<P>>,
) -> PullbackAlgorithm<S, P> {
    PullbackAlgorithm { reduction, inner }
}

struct PullbackSession<'a, S: Problem, P: Problem> {
    reduction: &'a Reduction<S, P>,
    inner: Box<dyn Session<P::Query, P::Output> + 'a>,
    block: Option<(Simulation<S::Query>, Vec<Value>)>,
    started: bool,
}

impl<S: Problem, P: Problem> Session<S::Query, S::Output> for PullbackSession<'_, S, P> {
    fn advance(&mut self, answer: Option<&Value>) -> Result<Step<S::Query, S::Output>> {
        if let (Some(v), Some((_, got))) = (answer, self.block.as_mut()) {
            got.push(v.clone());
        }
        loop {
            let step = match self.block.take() {
                Some((sim, got)) if got.len() < sim.width() => {
                    let q = sim.sources()[got.len()].clone();
                    self.block = Some((sim, got));
                    return Ok(Step::Query(q));
                }
                Some((sim, got)) => {
                    let v = sim.combine(&got);
                    self.inner.advance(Some(&v))?
                }
                None if !self.started => {
                    self.started = true;
                    self.inner.advance(None)?
                }
                None => return Err(SciError::invalid("pullback session advanced after completion")),
            };
            match step {
                Step::Query(f) => {
                    let sim = self
                        .reduction
                        .plan
                        .simulate(&f)
                        .ok_or_else(|| SciError::PlanGap(f.to_string()))?;
                    self.block = Some((sim, Vec::new()));
                }
                Step::Output(o) => return Ok(Step::Output(self.reduction.decode(&o))),
            }
        }
    }
}

impl<S: Problem, P: Problem> GeneralAlgorithm<S> for PullbackAlgorithm<S, P> {
    fn start(&self) -> Box<dyn Session<S::Query, S::Output> + '_> {
        Box::new(PullbackSession {
            reduction: &self.reduction,
            inner: self.inner.start(),
            block: None,
            started: false,
        })
    }

    fn budget(&self) -> usize {
        self.inner.budget().max(DEFAULT_BUDGET)
    }

    fn name(&self) -> String {
        format!("pullback of {} along {}", self.inner.name(), self.reduction.name)
    }
}

/// Stagewise pullback of a tower; same height.
pub struct PullbackTower<S: Problem, P: Problem> {
    reduction: Arc<Reduction<S, P>>,
    inner: Arc<dyn Tower<P>>,
}

pub fn pullback_tower<S: Problem, P: Problem>(
    reduction: Arc<Reduction<S, P>>,
    inner: Arc<dyn Tower<P>>,
) -> PullbackTower<S, P> {
    PullbackTower { reduction, inner }
}

impl<S: Problem, P: Problem> Tower<S> for PullbackTower<S, P> {
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<S>>> {
        let alg = self.inner.stage(index)?;
        Ok(Arc::new(pullback_algorithm(self.reduction.clone(), alg)))
    }

    fn name(&self) -> String {
        format!("pullback of {} along {}", self.inner.name(), self.reduction.name)
    }
}
