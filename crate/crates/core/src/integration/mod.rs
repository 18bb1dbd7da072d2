//! Exact point-evaluation integration on compact rational intervals.

mod function;

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::model::{
    finite_query_factorization, FactorizedTower, GeneralAlgorithm, Problem, Session, Step, Tower,
};
use crate::certificates::{HeightCertificate, PackageInputs};
use crate::reductions::{verify_reduction, Decoder, QueryPlan, Reduction, Simulation, VerifyConfig};
use crate::value::{int, rat, serde_rational, Rational, Value};

pub use function::{default_functions, FunctionDescription};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "serde_rational")]
    pub a: Rational,
    #[serde(with = "serde_rational")]
    pub b: Rational,
}

impl Interval {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a > b {
            return Err(SciError::invalid(format!("interval needs a <= b, got [{a}, {b}]")));
        }
        Ok(Interval { a, b })
    }

    pub fn unit() -> Self {
        Interval { a: int(0), b: int(1) }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn length(&self) -> Rational {
        &self.b - &self.a
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.a <= x && x <= &self.b
    }

    fn require_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(SciError::DegenerateInterval(self.a.to_string()))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// The point evaluation `ev_x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointEval(pub Rational);

impl fmt::Display for PointEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ev_{{{}}}", self.0)
    }
}

/// `f -> ∫_a^b f` over the catalog, observed through point evaluations.
#[derive(Clone, Debug)]
pub struct IntegrationProblem {
    interval: Interval,
    functions: Vec<FunctionDescription>,
}

impl IntegrationProblem {
    pub fn new(interval: Interval) -> Self {
        IntegrationProblem::with_functions(interval, default_functions())
    }

    pub fn with_functions(interval: Interval, functions: Vec<FunctionDescription>) -> Self {
        IntegrationProblem { interval, functions }
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }
}

/// `make_problem` under its module-level name.
pub fn make_problem(interval: Interval) -> IntegrationProblem {
    IntegrationProblem::new(interval)
}

impl Problem for IntegrationProblem {
    type Input = FunctionDescription;
    type Output = Value;
    type Query = PointEval;

    fn id(&self) -> String {
        format!("int{}", self.interval)
    }

    fn output_space(&self) -> String {
        "R".into()
    }

    fn catalog(&self) -> Vec<FunctionDescription> {
        self.functions.clone()
    }

    fn query_catalog(&self) -> Vec<PointEval> {
        let Interval { a, b } = &self.interval;
        if a == b {
            return vec![PointEval(a.clone())];
        }
        let len = b - a;
        let mut qs: Vec<PointEval> = (0..=16).map(|j| PointEval(a + &len * rat(j, 16))).collect();
        qs.push(PointEval(a + &len * rat(1, 3)));
        qs.push(PointEval(a + &len * rat(2, 7)));
        qs
    }

    fn has_queries(&self) -> bool {
        true
    }

    fn target(&self, f: &FunctionDescription) -> Result<Value> {
        Ok(f.integral(&self.interval.a, &self.interval.b))
    }

    fn distance(&self, x: &Value, y: &Value) -> f64 {
        x.abs_diff(y)
    }

    fn evaluate(&self, q: &PointEval, f: &FunctionDescription) -> Result<Value> {
        if !self.interval.contains(&q.0) {
            return Err(SciError::UnknownQuery(format!("{q} outside {}", self.interval)));
        }
        Ok(f.eval(&q.0))
    }

    fn admits(&self, f: &FunctionDescription) -> Result<()> {
        f.validate()
    }
}

/// Left-endpoint rectangle rule `((b-a)/n) Σ_{j<n} f(a + j(b-a)/n)`.
pub struct RectangleRule {
    interval: Interval,
    n: usize,
}

impl RectangleRule {
    pub fn new(interval: Interval, n: usize) -> Result<Self> {
        interval.require_nondegenerate()?;
        if n == 0 {
            return Err(SciError::InvalidStageIndex(0));
        }
        Ok(RectangleRule { interval, n })
    }

    /// Grid nodes `x_j = a + j(b-a)/n`, `j = 0..n-1`.
    pub fn nodes(&self) -> Vec<Rational> {
        let h = self.interval.length() / int(self.n as i64);
        (0..self.n).map(|j| &self.interval.a + &h * int(j as i64)).collect()
    }
}

struct RectangleSession<'a> {
    rule: &'a RectangleRule,
    step: Rational,
    next: usize,
    sum: Value,
}

impl Session<PointEval, Value> for RectangleSession<'_> {
    fn advance(&mut self, answer: Option<&Value>) -> Result<Step<PointEval, Value>> {
        if let Some(v) = answer {
            self.sum = self.sum.add(v);
        }
        if self.next < self.rule.n {
            let x = &self.rule.interval.a + &self.step * int(self.next as i64);
            self.next += 1;
            Ok(Step::Query(PointEval(x)))
        } else {
            Ok(Step::Output(self.sum.scale(&self.step)))
        }
    }
}

impl GeneralAlgorithm<IntegrationProblem> for RectangleRule {
    fn start(&self) -> Box<dyn Session<PointEval, Value> + '_> {
        Box::new(RectangleSession {
            rule: self,
            step: self.interval.length() / int(self.n as i64),
            next: 0,
            sum: Value::zero(),
        })
    }

    fn name(&self) -> String {
        format!("rectangle rule n={} on {}", self.n, self.interval)
    }
}

/// The height-1 tower `n -> Γ_n`.
#[derive(Clone, Debug)]
pub struct RectangleTower {
    interval: Interval,
}

pub fn rectangle_tower(interval: Interval) -> Result<RectangleTower> {
    interval.require_nondegenerate()?;
    Ok(RectangleTower { interval })
}

impl Tower<IntegrationProblem> for RectangleTower {
    fn height(&self) -> usize {
        1
    }

    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<IntegrationProblem>>> {
        match index {
            [n] => Ok(Arc::new(RectangleRule::new(self.interval.clone(), *n)?)),
            _ => Err(SciError::IndexArityMismatch {
                expected: 1,
                got: index.len(),
            }),
        }
    }

    fn name(&self) -> String {
        format!("rectangle tower on {}", self.interval)
    }
}

/// Tent function `h` on `[u, v] ⊂ (0, 1)` avoiding a given query set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BumpGadget {
    #[serde(with = "serde_rational")]
    pub u: Rational,
    #[serde(with = "serde_rational")]
    pub v: Rational,
}

impl BumpGadget {
    pub fn apex(&self) -> Rational {
        (&self.u + &self.v) / int(2)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        function::bump_value(&self.u, &self.v, x)
    }

    /// `∫_0^1 h = (v - u)/2`.
    pub fn integral(&self) -> Rational {
        (&self.v - &self.u) / int(2)
    }

    pub fn as_function(&self) -> FunctionDescription {
        FunctionDescription::bump(self.u.clone(), self.v.clone())
    }
}

/// Places a bump in the widest gap of `{0} ∪ points ∪ {1}` (leftmost on ties),
/// shrunk by a quarter gap on each side. Points outside `[0, 1]` are ignored.
pub fn adversary_bump(points: &[Rational]) -> BumpGadget {
    let mut pts: Vec<Rational> = points
        .iter()
        .filter(|x| !(*x < &Rational::zero() || *x > &Rational::one()))
        .cloned()
        .collect();
    pts.push(Rational::zero());
    pts.push(Rational::one());
    pts.sort();
    pts.dedup();
    let mut best = (pts[0].clone(), pts[1].clone());
    for w in pts.windows(2) {
        if &w[1] - &w[0] > &best.1 - &best.0 {
            best = (w[0].clone(), w[1].clone());
        }
    }
    let quarter = (&best.1 - &best.0) / int(4);
    BumpGadget {
        u: &best.0 + &quarter,
        v: &best.1 - &quarter,
    }
}

/// The reduction `P_from ≤ P_to` by affine change of variables:
/// `(E f)(x) = λ f(c + (x - a)λ)` with `λ = (d - c)/(b - a)`, plan
/// `ev_x -> [ev_{c + (x - a)λ}]`, `ϑ(z) = λ z`, identity decoder.
pub fn affine_reduction_between(
    from: Interval,
    to: Interval,
) -> Result<Reduction<IntegrationProblem, IntegrationProblem>> {
    from.require_nondegenerate()?;
    to.require_nondegenerate()?;
    let lambda = from.length() / to.length();
    let shift = &from.a - &to.a * &lambda;
    let name = format!("affine{}->{}", from, to);
    let (l1, s1) = (lambda.clone(), shift.clone());
    let (l2, s2) = (lambda, shift);
    let to_interval = to.clone();
    Ok(Reduction::new(
        name,
        Arc::new(IntegrationProblem::new(from)),
        Arc::new(IntegrationProblem::new(to)),
        move |f: &FunctionDescription| FunctionDescription::affine(l1.clone(), l1.clone(), s1.clone(), f.clone()),
        Decoder::identity(),
        QueryPlan::new(move |q: &PointEval| {
            if !to_interval.contains(&q.0) {
                return None;
            }
            let y = &l2 * &q.0 + &s2;
            let l = l2.clone();
            Simulation::new(vec![PointEval(y)], Arc::new(move |v: &[Value]| v[0].scale(&l))).ok()
        }),
    ))
}

/// `S_1 ≤ P_I` from the unit interval.
pub fn affine_reduction(to: Interval) -> Result<Reduction<IntegrationProblem, IntegrationProblem>> {
    affine_reduction_between(Interval::unit(), to)
}

/// Height-0 tower on `[a, a]`: query `ev_a`, output 0.
pub fn degenerate_algorithm(a: Rational) -> Result<FactorizedTower<IntegrationProblem>> {
    let p = IntegrationProblem::new(Interval {
        a: a.clone(),
        b: a.clone(),
    });
    finite_query_factorization(&p, vec![PointEval(a)], Arc::new(|_: &[Value]| Value::zero()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalClass {
    pub height: u32,
    pub reduction_available: bool,
}

pub fn classify_interval(i: &Interval) -> IntervalClass {
    if i.is_degenerate() {
        IntervalClass {
            height: 0,
            reduction_available: false,
        }
    } else {
        IntervalClass {
            height: 1,
            reduction_available: true,
        }
    }
}

/// Citation attached to the recorded lower bound of the unit-interval source.
pub const UNIT_SOURCE_CITATION: &str =
    "unit-interval integration has exact height 1: the rectangle tower gives one limit, and the bump adversary defeats every finite-query algorithm";

/// Package premises for exactness at height 1 on the given nondegenerate
/// intervals: the unit-interval source, one verified affine reduction per
/// member and a rectangle-tower upper bound per member.
pub fn package_inputs(intervals: &[Interval], config: &VerifyConfig) -> Result<PackageInputs> {
    let source = HeightCertificate::recorded_exact(IntegrationProblem::new(Interval::unit()).id(), 1, UNIT_SOURCE_CITATION);
    let mut members = Vec::new();
    let mut reductions = Vec::new();
    let mut upper = Vec::new();
    for i in intervals {
        let r = affine_reduction(i.clone())?;
        let tower = rectangle_tower(i.clone())?;
        members.push(r.target.id());
        reductions.push(verify_reduction(&r, config));
        upper.push(HeightCertificate::tower_witness(r.target.id(), tower.name(), 1));
    }
    Ok(PackageInputs {
        source,
        k: 1,
        members,
        reductions,
        upper,
    })
}
