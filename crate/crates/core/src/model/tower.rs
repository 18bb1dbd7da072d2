use std::sync::Arc;

use crate::error::{Result, SciError};
use crate::model::{run_algorithm, GeneralAlgorithm, Problem};

/// A height-k family of general algorithms indexed by `(n_k, ..., n_1)`, outer index first.
pub trait Tower<P: Problem>: Send + Sync {
    fn height(&self) -> usize;

    /// The stage algorithm. Implementations may assume the index has `height()` entries.
    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<P>>>;

    fn name(&self) -> String {
        format!("height-{} tower", self.height())
    }
}

impl<P: Problem, T: Tower<P> + ?Sized> Tower<P> for Arc<T> {
    fn height(&self) -> usize {
        (**self).height()
    }
    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<P>>> {
        (**self).stage(index)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

pub(crate) fn check_index(height: usize, index: &[usize]) -> Result<()> {
    if index.len() != height {
        return Err(SciError::IndexArityMismatch {
            expected: height,
            got: index.len(),
        });
    }
    match index.iter().find(|&&n| n == 0) {
        Some(&n) => Err(SciError::InvalidStageIndex(n)),
        None => Ok(()),
    }
}

pub fn evaluate_tower<P, T>(tower: &T, index: &[usize], problem: &P, input: &P::Input) -> Result<P::Output>
where
    P: Problem,
    T: Tower<P> + ?Sized,
{
    check_index(tower.height(), index)?;
    let alg = tower.stage(index)?;
    run_algorithm(alg.as_ref(), problem, input).map(|(out, _)| out)
}

/// A height-0 tower wrapping one algorithm.
pub struct SingleStageTower<P: Problem> {
    alg: Arc<dyn GeneralAlgorithm<P>>,
}

impl<P: Problem> SingleStageTower<P> {
    pub fn new(alg: Arc<dyn GeneralAlgorithm<P>>) -> Self {
        SingleStageTower { alg }
    }
}

impl<P: Problem> Tower<P> for SingleStageTower<P> {
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
