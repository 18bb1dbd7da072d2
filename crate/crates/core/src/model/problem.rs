use std::fmt::{Debug, Display};
use std::hash::Hash;

use crate::error::Result;
use crate::value::Value;

/// A computational problem: target map, input class, metric output space and
/// evaluation family.
///
/// Inputs are finite symbolic descriptions. Algorithms never see them directly;
/// they only receive the values returned by [`Problem::evaluate`].
pub trait Problem: Send + Sync + 'static {
    type Input: Clone + Debug + PartialEq + Send + Sync + 'static;
    type Output: Clone + Debug + PartialEq + Send + Sync + 'static;
    type Query: Clone + Debug + Display + PartialEq + Eq + Hash + Send + Sync + 'static;

    fn id(&self) -> String;

    /// Name of the metric output space. Identity decoders only compose over equal names.
    fn output_space(&self) -> String;

    /// Finite catalog of inputs in canonical order.
    fn catalog(&self) -> Vec<Self::Input>;

    /// Finite representative sample of the evaluation family, canonical order.
    fn query_catalog(&self) -> Vec<Self::Query>;

    /// Whether the evaluation family is nonempty. It may be infinite even when
    /// the representative sample is short.
    fn has_queries(&self) -> bool {
        !self.query_catalog().is_empty()
    }

    /// Reference oracle for the target map.
    fn target(&self, input: &Self::Input) -> Result<Self::Output>;

    fn distance(&self, a: &Self::Output, b: &Self::Output) -> f64;

    fn evaluate(&self, query: &Self::Query, input: &Self::Input) -> Result<Value>;

    /// Rejects descriptions that are not members of the input class.
    fn admits(&self, _input: &Self::Input) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub pairs_checked: usize,
    /// Catalog index pairs with different targets that no catalog query separates.
    pub unseparated: Vec<(usize, usize)>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.unseparated.is_empty()
    }
}

/// Checks on the catalog that inputs with different targets are separated by some query.
pub fn check_consistency<P: Problem>(p: &P) -> Result<ConsistencyReport> {
    let inputs = p.catalog();
    let queries = p.query_catalog();
    let targets = inputs.iter().map(|a| p.target(a)).collect::<Result<Vec<_>>>()?;
    let answers = inputs
        .iter()
        .map(|a| queries.iter().map(|q| p.evaluate(q, a)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut report = ConsistencyReport {
        pairs_checked: 0,
        unseparated: Vec::new(),
    };
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            report.pairs_checked += 1;
            if p.distance(&targets[i], &targets[j]) == 0.0 {
                continue;
            }
            let separated = answers[i]
                .iter()
                .zip(&answers[j])
                .any(|(x, y)| !x.agrees(y, 0.0));
            if !separated {
                report.unseparated.push((i, j));
            }
        }
    }
    Ok(report)
}

/// Metric axioms on a list of sample points; returns a description of the first violation.
pub fn check_metric<P: Problem>(p: &P, points: &[P::Output], tol: f64) -> Option<String> {
    for (i, x) in points.iter().enumerate() {
        if p.distance(x, x) > tol {
            return Some(format!("d(x{i}, x{i}) > 0"));
        }
        for (j, y) in points.iter().enumerate() {
            let dxy = p.distance(x, y);
            if dxy < 0.0 || (dxy - p.distance(y, x)).abs() > tol {
                return Some(format!("symmetry or sign fails at ({i}, {j})"));
            }
            if x != y && dxy == 0.0 {
                return Some(format!("distinct points {i}, {j} at distance 0"));
            }
            for (k, w) in points.iter().enumerate() {
                if dxy > p.distance(x, w) + p.distance(w, y) + tol {
                    return Some(format!("triangle inequality fails at ({i}, {k}, {j})"));
                }
            }
        }
    }
    None
}
