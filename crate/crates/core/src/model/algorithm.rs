use std::sync::Arc;

use crate::error::{Result, SciError};
use crate::model::Problem;
use crate::value::Value;

pub const DEFAULT_BUDGET: usize = 1_000_000;

/// One move of an interactive protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Step<Q, O> {
    Query(Q),
    Output(O),
}

/// A running protocol. Each call receives the answer to the previously emitted
/// query (`None` on the first call) and returns the next move.
pub trait Session<Q, O> {
    fn advance(&mut self, answer: Option<&Value>) -> Result<Step<Q, O>>;
}

/// An adaptive protocol that reads its input only through query answers.
pub trait GeneralAlgorithm<P: Problem>: Send + Sync {
    fn start(&self) -> Box<dyn Session<P::Query, P::Output> + '_>;

    fn budget(&self) -> usize {
        DEFAULT_BUDGET
    }

    fn name(&self) -> String {
        "algorithm".to_string()
    }
}

impl<P: Problem, A: GeneralAlgorithm<P> + ?Sized> GeneralAlgorithm<P> for Arc<A> {
    fn start(&self) -> Box<dyn Session<P::Query, P::Output> + '_> {
        (**self).start()
    }
    fn budget(&self) -> usize {
        (**self).budget()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Ordered `(query, answer)` pairs of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryTrace<Q> {
    pub steps: Vec<(Q, Value)>,
}

impl<Q> QueryTrace<Q> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn queries(&self) -> impl Iterator<Item = &Q> {
        self.steps.iter().map(|(q, _)| q)
    }

    pub fn answers(&self) -> impl Iterator<Item = &Value> {
        self.steps.iter().map(|(_, v)| v)
    }
}

pub fn run_algorithm<P, A>(
    alg: &A,
    problem: &P,
    input: &P::Input,
) -> Result<(P::Output, QueryTrace<P::Query>)>
where
    P: Problem,
    A: GeneralAlgorithm<P> + ?Sized,
{
    problem.admits(input)?;
    let budget = alg.budget();
    let mut session = alg.start();
    let mut steps = Vec::new();
    let mut last: Option<Value> = None;
    loop {
        match session.advance(last.as_ref())? {
            Step::Query(q) => {
                if steps.len() >= budget {
                    return Err(SciError::BudgetExceeded { budget });
                }
                let v = problem.evaluate(&q, input)?;
                steps.push((q, v.clone()));
                last = Some(v);
            }
            Step::Output(o) => {
                if steps.is_empty() {
                    return Err(SciError::EmptyTrace);
                }
                return Ok((o, QueryTrace { steps }));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Locality {
    /// `premise_held` records whether input b answered a's queries identically.
    Pass { premise_held: bool },
    Fail(String),
}

impl Locality {
    pub fn passed(&self) -> bool {
        matches!(self, Locality::Pass { .. })
    }
}

/// Regression guard: if `b` answers `a`'s trace queries identically, both runs
/// must emit the same queries and the same output.
pub fn check_locality<P, A>(alg: &A, problem: &P, a: &P::Input, b: &P::Input) -> Locality
where
    P: Problem,
    A: GeneralAlgorithm<P> + ?Sized,
{
    let (out_a, trace_a) = match run_algorithm(alg, problem, a) {
        Ok(r) => r,
        Err(e) => return Locality::Fail(format!("run on first input failed: {e}")),
    };
    for (q, v) in &trace_a.steps {
        match problem.evaluate(q, b) {
            Ok(w) if w.agrees(v, 0.0) => {}
            Ok(_) => return Locality::Pass { premise_held: false },
            Err(e) => return Locality::Fail(format!("query {q} failed on second input: {e}")),
        }
    }
    match run_algorithm(alg, problem, b) {
        Ok((out_b, trace_b)) => {
            if trace_b != trace_a {
                Locality::Fail("traces differ although all answers agree".into())
            } else if out_b != out_a {
                Locality::Fail("outputs differ although all answers agree".into())
            } else {
                Locality::Pass { premise_held: true }
            }
        }
        Err(e) => Locality::Fail(format!("run on second input failed: {e}")),
    }
}

type Rule<Q, O> = dyn Fn(&[Value]) -> Step<Q, O> + Send + Sync;

/// A protocol given as a function from the answers received so far to the next move.
pub struct FnAlgorithm<P: Problem> {
    name: String,
    budget: usize,
    rule: Arc<Rule<P::Query, P::Output>>,
}

impl<P: Problem> FnAlgorithm<P> {
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(&[Value]) -> Step<P::Query, P::Output> + Send + Sync + 'static,
    ) -> Self {
        FnAlgorithm {
            name: name.into(),
            budget: DEFAULT_BUDGET,
            rule: Arc::new(rule),
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget.max(1);
        self
    }

    /// Asks the given queries in order, then applies `output` to the answers.
    pub fn fixed(
        name: impl Into<String>,
        queries: Vec<P::Query>,
        output: impl Fn(&[Value]) -> P::Output + Send + Sync + 'static,
    ) -> Self {
        FnAlgorithm::new(name, move |answers| match queries.get(answers.len()) {
            Some(q) => Step::Query(q.clone()),
            None => Step::Output(output(answers)),
        })
    }
}

struct FnSession<'a, Q, O> {
    rule: &'a Rule<Q, O>,
    answers: Vec<Value>,
}

impl<Q, O> Session<Q, O> for FnSession<'_, Q, O> {
    fn advance(&mut self, answer: Option<&Value>) -> Result<Step<Q, O>> {
        if let Some(v) = answer {
            self.answers.push(v.clone());
        }
        Ok((self.rule)(&self.answers))
    }
}

impl<P: Problem> GeneralAlgorithm<P> for FnAlgorithm<P> {
    fn start(&self) -> Box<dyn Session<P::Query, P::Output> + '_> {
        Box::new(FnSession {
            rule: &*self.rule,
            answers: Vec::new(),
        })
    }

    fn budget(&self) -> usize {
        self.budget
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}
