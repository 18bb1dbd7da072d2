//! Singleton-window spectral decision over diagonal operators, and its
//! block-diagonal stabilization.

mod diagonal;

use std::fmt;
use std::sync::Arc;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::integration::Interval;
use crate::model::{GeneralAlgorithm, Problem, Session, Step, Tower};
use crate::certificates::{HeightCertificate, PackageInputs};
use crate::reductions::{pullback_tower, verify_reduction, Decoder, QueryPlan, Reduction, Simulation, VerifyConfig};
use crate::value::{floor, int, pow2, rat, serde_rational, Rational, Value};

pub use diagonal::{point_interval_distance, DiagonalSpec};

/// A singleton window `K = {z}` inside the domain `J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    #[serde(with = "serde_rational")]
    pub z: Rational,
    pub domain: Interval,
}

impl Window {
    pub fn new(z: Rational, domain: Interval) -> Result<Self> {
        if !domain.contains(&z) {
            return Err(SciError::WindowOutsideDomain {
                z: z.to_string(),
                lo: domain.a.to_string(),
                hi: domain.b.to_string(),
            });
        }
        Ok(Window { z, domain })
    }
}

/// `r_n = 2^{-(n+2)} floor(2^{n+2} z)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowApproximant {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub r: Rational,
}

impl WindowApproximant {
    /// Checks `|r_n - z| < 2^{-(n+2)}` exactly.
    pub fn bound_holds(&self, z: &Rational) -> bool {
        (&self.r - z).abs() < pow2(-(self.n as i64 + 2))
    }
}

pub fn window_approximant(w: &Window, n: usize) -> Result<WindowApproximant> {
    dyadic(&w.z, n).map(|r| WindowApproximant { n, r })
}

fn dyadic(z: &Rational, n: usize) -> Result<Rational> {
    if n == 0 {
        return Err(SciError::InvalidStageIndex(0));
    }
    let scale = pow2(n as i64 + 2);
    Ok(Rational::from_integer(floor(&(z * &scale))) / scale)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpectralInput {
    pub operator: DiagonalSpec,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpectralQuery {
    /// `μ_{i,j} = <A e_j, e_i>`.
    Mu(usize, usize),
    /// `ρ_n = r_n(K)`.
    Rho(usize),
}

impl fmt::Display for SpectralQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralQuery::Mu(i, j) => write!(f, "mu_{{{i},{j}}}"),
            SpectralQuery::Rho(n) => write!(f, "rho_{{{n}}}"),
        }
    }
}

/// Reference oracle: 1 iff `dist(z, σ(A)) > 0`.
pub fn exact_decision_oracle(a: &DiagonalSpec, w: &Window) -> Result<u8> {
    a.validate()?;
    Ok(u8::from(a.dist(&w.z).is_positive()))
}

fn discrete(a: &u8, b: &u8) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

fn entry_value(d: &DiagonalSpec, i: usize, j: usize) -> Value {
    if i == j {
        Value::real(d.entry(i))
    } else {
        Value::zero()
    }
}

/// `S_J`: decide `σ(A) ∩ {z} = ∅` from matrix entries and dyadic window values.
#[derive(Clone, Debug)]
pub struct SpectralSourceProblem {
    domain: Interval,
    catalog: Vec<SpectralInput>,
}

impl SpectralSourceProblem {
    pub fn new(domain: Interval, catalog: Vec<SpectralInput>) -> Result<Self> {
        let p = SpectralSourceProblem { domain, catalog };
        for a in &p.catalog {
            p.admits(a)?;
        }
        Ok(p)
    }

    /// Catalog: every default diagonal against every default window of `domain`.
    pub fn with_defaults(domain: Interval) -> Result<Self> {
        let mut catalog = Vec::new();
        for op in default_diagonals() {
            for z in default_window_points(&domain) {
                catalog.push(SpectralInput {
                    operator: op.clone(),
                    window: Window::new(z, domain.clone())?,
                });
            }
        }
        SpectralSourceProblem::new(domain, catalog)
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }
}

/// `source_problem(J)` under its module-level name.
pub fn source_problem(domain: Interval) -> Result<SpectralSourceProblem> {
    SpectralSourceProblem::with_defaults(domain)
}

impl Problem for SpectralSourceProblem {
    type Input = SpectralInput;
    type Output = u8;
    type Query = SpectralQuery;

    fn id(&self) -> String {
        format!("spec{}", self.domain)
    }

    fn output_space(&self) -> String {
        "{0,1}".into()
    }

    fn catalog(&self) -> Vec<SpectralInput> {
        self.catalog.clone()
    }

    fn query_catalog(&self) -> Vec<SpectralQuery> {
        let mut qs = Vec::new();
        for i in 1..=4 {
            for j in 1..=4 {
                qs.push(SpectralQuery::Mu(i, j));
            }
        }
        qs.extend((1..=6).map(SpectralQuery::Rho));
        qs
    }

    fn has_queries(&self) -> bool {
        true
    }

    fn target(&self, a: &SpectralInput) -> Result<u8> {
        exact_decision_oracle(&a.operator, &a.window)
    }

    fn distance(&self, a: &u8, b: &u8) -> f64 {
        discrete(a, b)
    }

    fn evaluate(&self, q: &SpectralQuery, a: &SpectralInput) -> Result<Value> {
        match *q {
            SpectralQuery::Mu(i, j) if i >= 1 && j >= 1 => Ok(entry_value(&a.operator, i, j)),
            SpectralQuery::Rho(n) if n >= 1 => dyadic(&a.window.z, n).map(Value::real),
            _ => Err(SciError::UnknownQuery(q.to_string())),
        }
    }

    fn admits(&self, a: &SpectralInput) -> Result<()> {
        if a.window.domain != self.domain || !self.domain.contains(&a.window.z) {
            return Err(SciError::WindowOutsideDomain {
                z: a.window.z.to_string(),
                lo: self.domain.a.to_string(),
                hi: self.domain.b.to_string(),
            });
        }
        a.operator.validate()
    }
}

/// `Γ_{n2,n1} = 1` iff `min_{j <= n1} |d_j - r_{n2}| > 2^{-(n2 + shift)}`.
///
/// The shift tunes the threshold; it must stay below 2 so the threshold
/// dominates the window error `2^{-(n2+2)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionTower {
    shift: u32,
}

pub fn decision_tower() -> DecisionTower {
    DecisionTower { shift: 0 }
}

impl DecisionTower {
    pub fn with_shift(shift: u32) -> Result<Self> {
        if shift >= 2 {
            return Err(SciError::invalid("threshold shift must be 0 or 1"));
        }
        Ok(DecisionTower { shift })
    }

    pub fn threshold(&self, n2: usize) -> Rational {
        pow2(-(n2 as i64 + self.shift as i64))
    }
}

pub struct DecisionStage {
    n2: usize,
    n1: usize,
    threshold: Rational,
}

struct DecisionSession<'a> {
    stage: &'a DecisionStage,
    r: Option<Rational>,
    next: usize,
    min: Option<Rational>,
}

impl Session<SpectralQuery, u8> for DecisionSession<'_> {
    fn advance(&mut self, answer: Option<&Value>) -> Result<Step<SpectralQuery, u8>> {
        if let Some(v) = answer {
            let x = v
                .as_rational()
                .ok_or_else(|| SciError::invalid("decision tower needs exact real answers"))?
                .clone();
            match &self.r {
                None => self.r = Some(x),
                Some(r) => {
                    let d = (x - r).abs();
                    if self.min.as_ref().is_none_or(|m| &d < m) {
                        self.min = Some(d);
                    }
                }
            }
        }
        if self.r.is_none() {
            return Ok(Step::Query(SpectralQuery::Rho(self.stage.n2)));
        }
        if self.next < self.stage.n1 {
            self.next += 1;
            return Ok(Step::Query(SpectralQuery::Mu(self.next, self.next)));
        }
        let m = self.min.as_ref().expect("n1 >= 1");
        Ok(Step::Output(u8::from(m > &self.stage.threshold)))
    }
}

impl GeneralAlgorithm<SpectralSourceProblem> for DecisionStage {
    fn start(&self) -> Box<dyn Session<SpectralQuery, u8> + '_> {
        Box::new(DecisionSession {
            stage: self,
            r: None,
            next: 0,
            min: None,
        })
    }

    fn name(&self) -> String {
        format!("decision stage ({}, {})", self.n2, self.n1)
    }
}

impl DecisionTower {
    pub fn stage_at(&self, n2: usize, n1: usize) -> Result<DecisionStage> {
        if n2 == 0 || n1 == 0 {
            return Err(SciError::InvalidStageIndex(0));
        }
        Ok(DecisionStage {
            n2,
            n1,
            threshold: self.threshold(n2),
        })
    }
}

impl Tower<SpectralSourceProblem> for DecisionTower {
    fn height(&self) -> usize {
        2
    }

    fn stage(&self, index: &[usize]) -> Result<Arc<dyn GeneralAlgorithm<SpectralSourceProblem>>> {
        match index {
            [n2, n1] => Ok(Arc::new(self.stage_at(*n2, *n1)?)),
            _ => Err(SciError::IndexArityMismatch {
                expected: 2,
                got: index.len(),
            }),
        }
    }

    fn name(&self) -> String {
        format!("dyadic decision tower (threshold 2^-(n2+{}))", self.shift)
    }
}

/// Stage at which the decision tower provably shows the oracle value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizationStage {
    pub value: u8,
    pub n2: usize,
    pub n1: usize,
}

impl DecisionTower {
    /// If `δ = dist(z, σ(A)) > 0`: the least `n2` with `2^{-(n2+2)} + θ_{n2} < δ`,
    /// any `n1` (reported as 1). Otherwise `n2 = 1` and the first `n1` reaching an
    /// entry within `θ_1 - 2^{-3}` of `z`.
    pub fn stabilization_stage(&self, a: &DiagonalSpec, w: &Window) -> Result<StabilizationStage> {
        a.validate()?;
        let delta = a.dist(&w.z);
        if delta.is_positive() {
            let mut n2 = 1;
            while pow2(-(n2 as i64 + 2)) + self.threshold(n2) >= delta {
                n2 += 1;
            }
            Ok(StabilizationStage { value: 1, n2, n1: 1 })
        } else {
            let n1 = self.approximating_index(a, w, 1)?;
            Ok(StabilizationStage { value: 0, n2: 1, n1 })
        }
    }

    /// For `z ∈ σ(A)`: an `n1` from which stage `(n2, n1)` returns 0.
    pub fn approximating_index(&self, a: &DiagonalSpec, w: &Window, n2: usize) -> Result<usize> {
        let eps = self.threshold(n2) - pow2(-(n2 as i64 + 2));
        a.index_within(&w.z, &eps)
            .ok_or_else(|| SciError::invalid(format!("{} has no entry within {eps} of {}", a, w.z)))
    }
}

/// A diagonal `B` certified to satisfy `dist(σ(B), J) > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub operator: DiagonalSpec,
    pub domain: Interval,
    #[serde(with = "serde_rational")]
    pub margin: Rational,
}

impl StabilizerSpec {
    pub fn certify(operator: DiagonalSpec, domain: Interval) -> Result<Self> {
        operator.validate()?;
        let margin = operator.dist_to_interval(&domain.a, &domain.b);
        if !margin.is_positive() {
            return Err(SciError::invalid(format!(
                "spectrum of stabilizer {operator} meets {domain}"
            )));
        }
        Ok(StabilizerSpec {
            operator,
            domain,
            margin,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockOperator {
    pub first: DiagonalSpec,
    pub second: DiagonalSpec,
}

impl BlockOperator {
    /// `ν_{(i,r),(j,s)}`: diagonal within a block, 0 across blocks.
    pub fn entry(&self, (i, r): (usize, u8), (j, s): (usize, u8)) -> Value {
        match (r, s) {
            (1, 1) => entry_value(&self.first, i, j),
            (2, 2) => entry_value(&self.second, i, j),
            _ => Value::zero(),
        }
    }

    /// `dist(z, σ(A) ∪ σ(B))`.
    pub fn dist(&self, z: &Rational) -> Rational {
        self.first.dist(z).min(self.second.dist(z))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StabilizedInput {
    pub operator: BlockOperator,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StabilizedQuery {
    Nu { row: (usize, u8), col: (usize, u8) },
    RhoB(usize),
}

impl fmt::Display for StabilizedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilizedQuery::Nu { row, col } => {
                write!(f, "nu_{{({},{}),({},{})}}", row.0, row.1, col.0, col.1)
            }
            StabilizedQuery::RhoB(n) => write!(f, "rhoB_{{{n}}}"),
        }
    }
}

/// `P_{J,B}`: the decision problem for `A ⊕ B` with a fixed stabilizer `B`.
#[derive(Clone, Debug)]
pub struct StabilizedProblem {
    domain: Interval,
    stabilizer: StabilizerSpec,
    catalog: Vec<StabilizedInput>,
}

impl StabilizedProblem {
    pub fn stabilizer(&self) -> &StabilizerSpec {
        &self.stabilizer
    }
}

fn stabilize(b: &DiagonalSpec, a: &SpectralInput) -> StabilizedInput {
    StabilizedInput {
        operator: BlockOperator {
            first: a.operator.clone(),
            second: b.clone(),
        },
        window: a.window.clone(),
    }
}

/// `P_{J,B}` with the catalog obtained by stabilizing every source catalog input.
pub fn stabilized_problem(source: &SpectralSourceProblem, b: &StabilizerSpec) -> Result<StabilizedProblem> {
    if b.domain != source.domain {
        return Err(SciError::invalid(format!(
            "stabilizer certified for {} but the source lives on {}",
            b.domain, source.domain
        )));
    }
    Ok(StabilizedProblem {
        domain: source.domain.clone(),
        stabilizer: b.clone(),
        catalog: source.catalog.iter().map(|a| stabilize(&b.operator, a)).collect(),
    })
}

impl Problem for StabilizedProblem {
    type Input = StabilizedInput;
    type Output = u8;
    type Query = StabilizedQuery;

    fn id(&self) -> String {
        format!("spec{}+B({})", self.domain, self.stabilizer.operator)
    }

    fn output_space(&self) -> String {
        "{0,1}".into()
    }

    fn catalog(&self) -> Vec<StabilizedInput> {
        self.catalog.clone()
    }

    fn query_catalog(&self) -> Vec<StabilizedQuery> {
        let mut qs = Vec::new();
        for i in 1..=3 {
            for r in 1..=2 {
                for j in 1..=3 {
                    for s in 1..=2 {
                        qs.push(StabilizedQuery::Nu { row: (i, r), col: (j, s) });
                    }
                }
            }
        }
        qs.extend((1..=6).map(StabilizedQuery::RhoB));
        qs
    }

    fn has_queries(&self) -> bool {
        true
    }

    fn target(&self, a: &StabilizedInput) -> Result<u8> {
        Ok(u8::from(a.operator.dist(&a.window.z).is_positive()))
    }

    fn distance(&self, a: &u8, b: &u8) -> f64 {
        discrete(a, b)
    }

    fn evaluate(&self, q: &StabilizedQuery, a: &StabilizedInput) -> Result<Value> {
        match *q {
            StabilizedQuery::Nu { row, col }
                if row.0 >= 1 && col.0 >= 1 && (1..=2).contains(&row.1) && (1..=2).contains(&col.1) =>
            {
                Ok(a.operator.entry(row, col))
            }
            StabilizedQuery::RhoB(n) if n >= 1 => dyadic(&a.window.z, n).map(Value::real),
            _ => Err(SciError::UnknownQuery(q.to_string())),
        }
    }

    fn admits(&self, a: &StabilizedInput) -> Result<()> {
        if a.operator.second != self.stabilizer.operator {
            return Err(SciError::invalid("second block differs from the problem's stabilizer"));
        }
        if a.window.domain != self.domain {
            return Err(SciError::WindowOutsideDomain {
                z: a.window.z.to_string(),
                lo: self.domain.a.to_string(),
                hi: self.domain.b.to_string(),
            });
        }
        a.operator.first.validate()
    }
}

pub type ForwardReduction = Reduction<SpectralSourceProblem, StabilizedProblem>;
pub type BackwardReduction = Reduction<StabilizedProblem, SpectralSourceProblem>;

/// The two transports between `S_J` and `P_{J,B}`.
pub fn stabilization_reductions(
    source: Arc<SpectralSourceProblem>,
    b: &StabilizerSpec,
) -> Result<(ForwardReduction, BackwardReduction)> {
    let target = Arc::new(stabilized_problem(&source, b)?);
    let bd = b.operator.clone();
    let bd_plan = b.operator.clone();
    let forward = Reduction::new(
        format!("stabilize[{}]", b.operator),
        source.clone(),
        target.clone(),
        move |a: &SpectralInput| stabilize(&bd, a),
        Decoder::identity(),
        QueryPlan::new(move |q: &StabilizedQuery| match *q {
            StabilizedQuery::RhoB(n) => Some(Simulation::direct(SpectralQuery::Rho(n))),
            StabilizedQuery::Nu { row: (i, 1), col: (j, 1) } => Some(Simulation::direct(SpectralQuery::Mu(i, j))),
            StabilizedQuery::Nu { row: (i, 2), col: (j, 2) } => Some(Simulation::constant(
                SpectralQuery::Rho(1),
                entry_value(&bd_plan, i, j),
            )),
            StabilizedQuery::Nu { .. } => Some(Simulation::constant(SpectralQuery::Rho(1), Value::zero())),
        }),
    );
    let backward = Reduction::new(
        format!("unstabilize[{}]", b.operator),
        target,
        source,
        |a: &StabilizedInput| SpectralInput {
            operator: a.operator.first.clone(),
            window: a.window.clone(),
        },
        Decoder::identity(),
        QueryPlan::new(|q: &SpectralQuery| match *q {
            SpectralQuery::Mu(i, j) => Some(Simulation::direct(StabilizedQuery::Nu { row: (i, 1), col: (j, 1) })),
            SpectralQuery::Rho(n) => Some(Simulation::direct(StabilizedQuery::RhoB(n))),
        }),
    );
    Ok((forward, backward))
}

/// Citation for the recorded exact height of the singleton-window source.
pub const SOURCE_CITATION: &str =
    "singleton-window spectral decision over diagonal operators has exact height 2 (established classification)";

pub fn default_diagonals() -> Vec<DiagonalSpec> {
    [
        "const:2",
        "list:1,2,3",
        "enum:0,1",
        "harmonic:0,1",
        "geometric:1/2,1/4,1/2",
        "list:1/3,2/3,1/2",
        "enum:1/4,1/2",
        "harmonic:1,-1/2",
        "geometric:1/3,1/3,1/3",
        "list:0,1,1/4",
    ]
    .iter()
    .map(|s| DiagonalSpec::parse(s).expect("shipped diagonal parses"))
    .collect()
}

/// Window points of the default catalog, kept inside `domain`.
pub fn default_window_points(domain: &Interval) -> Vec<Rational> {
    let len = domain.length();
    [rat(0, 1), rat(1, 3), rat(1, 2), rat(3, 4), rat(1, 1), rat(5, 8)]
        .into_iter()
        .map(|t| &domain.a + &len * t)
        .collect()
}

pub fn default_stabilizers(domain: &Interval) -> Vec<StabilizerSpec> {
    let len = domain.length().max(int(1));
    let above = &domain.b + &len;
    let below = &domain.a - &len;
    let specs = vec![
        DiagonalSpec::constant(&domain.b + int(4) * &len),
        DiagonalSpec::FiniteThenConstant {
            head: vec![&above + int(1), &above + int(2)],
            tail: &above + rat(5, 2),
        },
        DiagonalSpec::Harmonic {
            offset: above.clone(),
            scale: int(1),
        },
        DiagonalSpec::Geometric {
            offset: below.clone(),
            scale: rat(-1, 2),
            ratio: rat(1, 2),
        },
        DiagonalSpec::Enumeration {
            lo: &above + rat(1, 2),
            hi: &above + int(1),
        },
        DiagonalSpec::Harmonic {
            offset: below,
            scale: rat(-1, 3),
        },
    ];
    specs
        .into_iter()
        .map(|b| StabilizerSpec::certify(b, domain.clone()).expect("shipped stabilizer is certified"))
        .collect()
}

/// Package premises for exactness at height 2 on the stabilized problems: the
/// recorded source, the verified forward reductions, and upper bounds from the
/// decision tower pulled back along verified backward reductions.
pub fn package_inputs(domain: &Interval, stabilizers: &[StabilizerSpec], config: &VerifyConfig) -> Result<PackageInputs> {
    let source = Arc::new(source_problem(domain.clone())?);
    let cert = HeightCertificate::recorded_exact(source.id(), 2, SOURCE_CITATION);
    let mut members = Vec::new();
    let mut reductions = Vec::new();
    let mut upper = Vec::new();
    for b in stabilizers {
        let (forward, backward) = stabilization_reductions(source.clone(), b)?;
        let member = forward.target.id();
        members.push(member.clone());
        reductions.push(verify_reduction(&forward, config));
        if verify_reduction(&backward, config).passed {
            let tower = pullback_tower(Arc::new(backward), Arc::new(decision_tower()));
            upper.push(HeightCertificate::tower_witness(member, tower.name(), tower.height() as u32));
        }
    }
    Ok(PackageInputs {
        source: cert,
        k: 2,
        members,
        reductions,
        upper,
    })
}
