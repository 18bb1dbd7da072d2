use std::sync::Arc;

use crate::error::{Result, SciError};
use crate::model::tower::check_index;
use crate::model::{FnAlgorithm, GeneralAlgorithm, Problem, Tower};
use crate::value::Value;

pub type TableFn<O> = Arc<dyn Fn(&[Value]) -> O + Send + Sync>;

/// A height-0 tower that asks a fixed query list and reads the output from a table.
pub struct FactorizedTower<P: Problem> {
    queries: Vec<P::Query>,
    alg: Arc<FnAlgorithm<P>>,
}

impl<P: Problem> FactorizedTower<P> {
    pub fn queries(&self) -> &[P::Query] {
        &self.queries
    }

    pub fn algorithm(&self) -> Arc<dyn GeneralAlgorithm<P>> {
        self.alg.clone()
    }
}

impl<P: Problem> Tower<P> for FactorizedTower<P> {
    fn height(&self) -> usize {
        0
    }

    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<P>>> {
        check_index(0, index)?;
        Ok(self.alg.clone())
    }

    fn name(&self) -> String {
        self.alg.name()
    }
}

/// Builds the height-0 tower `A -> table(f_1(A), ..., f_m(A))` after checking it
/// reproduces the target on every catalog input.
pub fn finite_query_factorization<P: Problem>(
    problem: &P,
    queries: Vec<P::Query>,
    table: TableFn<P::Output>,
) -> Result<FactorizedTower<P>> {
    if queries.is_empty() {
        return Err(SciError::invalid("a factorization needs at least one query"));
    }
    for input in problem.catalog() {
        let values = queries
            .iter()
            .map(|q| problem.evaluate(q, &input))
            .collect::<Result<Vec<_>>>()?;
        let target = problem.target(&input)?;
        if problem.distance(&table(&values), &target) != 0.0 {
            return Err(SciError::FactorizationMismatch(format!("{input:?}")));
        }
    }
    let name = format!("finite-query table over {} queries", queries.len());
    let qs = queries.clone();
    let alg = FnAlgorithm::fixed(name, qs, move |answers| table(answers));
    Ok(FactorizedTower {
        queries,
        alg: Arc::new(alg),
    })
}
