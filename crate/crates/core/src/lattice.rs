//! Directedness witnesses for the reduction preorder (tagged joins, singleton
//! meets) and the small problem pairs showing that no joins exist in general.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, SciError};
use crate::model::{check_consistency, Problem};
use crate::reductions::{
    decoder_compose_class, structural_feasibility, Decoder, DecoderClass, Feasibility, QueryPlan, Reduction,
    Simulation,
};
use crate::value::Value;

/// A point of `{0} × A ∪ {1} × B`.
#[derive(Clone, Debug, PartialEq)]
pub enum Tagged<A, B> {
    Zero(A),
    One(B),
}

impl<A, B> Tagged<A, B> {
    pub fn tag(&self) -> u8 {
        match self {
            Tagged::Zero(_) => 0,
            Tagged::One(_) => 1,
        }
    }
}

/// Queries of the union: padded lifts of each side plus the tag query `τ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TaggedQuery<F, G> {
    Left(F),
    Right(G),
    Tag,
}

impl<F: fmt::Display, G: fmt::Display> fmt::Display for TaggedQuery<F, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaggedQuery::Left(q) => write!(f, "~{q}_0"),
            TaggedQuery::Right(q) => write!(f, "~{q}_1"),
            TaggedQuery::Tag => f.write_str("tau"),
        }
    }
}

/// Disjoint union of two problems with the truncated-or-2 output metric.
pub struct TaggedProblem<P0: Problem, P1: Problem> {
    pub left: Arc<P0>,
    pub right: Arc<P1>,
}

impl<P0: Problem, P1: Problem> TaggedProblem<P0, P1> {
    pub fn new(left: Arc<P0>, right: Arc<P1>) -> Self {
        TaggedProblem { left, right }
    }
}

impl<P0: Problem, P1: Problem> Problem for TaggedProblem<P0, P1> {
    type Input = Tagged<P0::Input, P1::Input>;
    type Output = Tagged<P0::Output, P1::Output>;
    type Query = TaggedQuery<P0::Query, P1::Query>;

    fn id(&self) -> String {
        format!("join({}, {})", self.left.id(), self.right.id())
    }

    fn output_space(&self) -> String {
        format!("{} + {}", self.left.output_space(), self.right.output_space())
    }

    fn catalog(&self) -> Vec<Self::Input> {
        let mut out: Vec<Self::Input> = self.left.catalog().into_iter().map(Tagged::Zero).collect();
        out.extend(self.right.catalog().into_iter().map(Tagged::One));
        out
    }

    fn query_catalog(&self) -> Vec<Self::Query> {
        let mut out = vec![TaggedQuery::Tag];
        out.extend(self.left.query_catalog().into_iter().map(TaggedQuery::Left));
        out.extend(self.right.query_catalog().into_iter().map(TaggedQuery::Right));
        out
    }

    fn has_queries(&self) -> bool {
        true
    }

    fn target(&self, input: &Self::Input) -> Result<Self::Output> {
        Ok(match input {
            Tagged::Zero(a) => Tagged::Zero(self.left.target(a)?),
            Tagged::One(b) => Tagged::One(self.right.target(b)?),
        })
    }

    fn distance(&self, x: &Self::Output, y: &Self::Output) -> f64 {
        match (x, y) {
            (Tagged::Zero(a), Tagged::Zero(b)) => self.left.distance(a, b).min(1.0),
            (Tagged::One(a), Tagged::One(b)) => self.right.distance(a, b).min(1.0),
            _ => 2.0,
        }
    }

    fn evaluate(&self, q: &Self::Query, input: &Self::Input) -> Result<Value> {
        match (q, input) {
            (TaggedQuery::Tag, x) => Ok(Value::int(x.tag() as i64)),
            (TaggedQuery::Left(f), Tagged::Zero(a)) => self.left.evaluate(f, a),
            (TaggedQuery::Right(g), Tagged::One(b)) => self.right.evaluate(g, b),
            _ => Ok(Value::zero()),
        }
    }

    fn admits(&self, input: &Self::Input) -> Result<()> {
        match input {
            Tagged::Zero(a) => self.left.admits(a),
            Tagged::One(b) => self.right.admits(b),
        }
    }
}

pub struct Join<P0: Problem, P1: Problem> {
    pub union: Arc<TaggedProblem<P0, P1>>,
    pub from_left: Reduction<P0, TaggedProblem<P0, P1>>,
    pub from_right: Reduction<P1, TaggedProblem<P0, P1>>,
}

fn pivots<P: Problem>(p: &P) -> Result<(P::Input, P::Query)> {
    let a = p.catalog().into_iter().next().ok_or_else(|| SciError::EmptyInputClass(p.id()))?;
    let q = p
        .query_catalog()
        .into_iter()
        .next()
        .ok_or_else(|| SciError::EmptyQueryFamily(p.id()))?;
    Ok((a, q))
}

/// Common upper bound of two problems with nonempty input classes and query families.
pub fn upper_bound_join<P0: Problem, P1: Problem>(p0: Arc<P0>, p1: Arc<P1>) -> Result<Join<P0, P1>> {
    let (a0, q0) = pivots(p0.as_ref())?;
    let (a1, q1) = pivots(p1.as_ref())?;
    let m0 = p0.target(&a0)?;
    let m1 = p1.target(&a1)?;
    let union = Arc::new(TaggedProblem::new(p0.clone(), p1.clone()));

    let from_left = Reduction::new(
        format!("tag0[{}]", p0.id()),
        p0.clone(),
        union.clone(),
        |a: &P0::Input| Tagged::Zero(a.clone()),
        Decoder::new(DecoderClass::Cont, move |o: &Tagged<P0::Output, P1::Output>| match o {
            Tagged::Zero(x) => x.clone(),
            Tagged::One(_) => m0.clone(),
        }),
        QueryPlan::new(move |q: &TaggedQuery<P0::Query, P1::Query>| {
            Some(match q {
                TaggedQuery::Left(f) => Simulation::direct(f.clone()),
                TaggedQuery::Right(_) => Simulation::constant(q0.clone(), Value::zero()),
                TaggedQuery::Tag => Simulation::constant(q0.clone(), Value::int(0)),
            })
        }),
    );
    let from_right = Reduction::new(
        format!("tag1[{}]", p1.id()),
        p1.clone(),
        union.clone(),
        |b: &P1::Input| Tagged::One(b.clone()),
        Decoder::new(DecoderClass::Cont, move |o: &Tagged<P0::Output, P1::Output>| match o {
            Tagged::One(y) => y.clone(),
            Tagged::Zero(_) => m1.clone(),
        }),
        QueryPlan::new(move |q: &TaggedQuery<P0::Query, P1::Query>| {
            Some(match q {
                TaggedQuery::Right(g) => Simulation::direct(g.clone()),
                TaggedQuery::Left(_) => Simulation::constant(q1.clone(), Value::zero()),
                TaggedQuery::Tag => Simulation::constant(q1.clone(), Value::int(1)),
            })
        }),
    );
    Ok(Join {
        union,
        from_left,
        from_right,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Star;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConstQuery;

impl fmt::Display for ConstQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("c")
    }
}

/// One input, output space `{0}`, one constant query.
#[derive(Clone, Copy, Debug, Default)]
pub struct SingletonProblem;

impl Problem for SingletonProblem {
    type Input = Star;
    type Output = u8;
    type Query = ConstQuery;

    fn id(&self) -> String {
        "L".into()
    }

    fn output_space(&self) -> String {
        "{0}".into()
    }

    fn catalog(&self) -> Vec<Star> {
        vec![Star]
    }

    fn query_catalog(&self) -> Vec<ConstQuery> {
        vec![ConstQuery]
    }

    fn target(&self, _: &Star) -> Result<u8> {
        Ok(0)
    }

    fn distance(&self, a: &u8, b: &u8) -> f64 {
        f64::from(u8::from(a != b))
    }

    fn evaluate(&self, _: &ConstQuery, _: &Star) -> Result<Value> {
        Ok(Value::int(0))
    }
}

pub struct Meet<P0: Problem, P1: Problem> {
    pub bottom: Arc<SingletonProblem>,
    pub into_left: Reduction<SingletonProblem, P0>,
    pub into_right: Reduction<SingletonProblem, P1>,
}

fn from_singleton<P: Problem>(bottom: &Arc<SingletonProblem>, p: Arc<P>) -> Result<Reduction<SingletonProblem, P>> {
    let a = p.catalog().into_iter().next().ok_or_else(|| SciError::EmptyInputClass(p.id()))?;
    let (pe, ae) = (p.clone(), a.clone());
    Ok(Reduction::new(
        format!("pick[{}]", p.id()),
        bottom.clone(),
        p,
        move |_: &Star| a.clone(),
        Decoder::new(DecoderClass::Cont, |_: &P::Output| 0u8),
        QueryPlan::new(move |f: &P::Query| {
            let v = pe.evaluate(f, &ae).ok()?;
            Some(Simulation::constant(ConstQuery, v))
        }),
    ))
}

/// Common lower bound of two problems with nonempty input classes.
pub fn lower_bound_meet<P0: Problem, P1: Problem>(p0: Arc<P0>, p1: Arc<P1>) -> Result<Meet<P0, P1>> {
    let bottom = Arc::new(SingletonProblem);
    Ok(Meet {
        into_left: from_singleton(&bottom, p0)?,
        into_right: from_singleton(&bottom, p1)?,
        bottom,
    })
}

/// A problem given by explicit tables over named inputs, with the discrete metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteProblem {
    pub name: String,
    pub inputs: Vec<String>,
    pub carrier: Vec<i64>,
    pub target: Vec<i64>,
    pub queries: Vec<(String, Vec<i64>)>,
}

impl FiniteProblem {
    fn index(&self, a: &str) -> Result<usize> {
        self.inputs
            .iter()
            .position(|x| x == a)
            .ok_or_else(|| SciError::invalid(format!("{a} is not an input of {}", self.name)))
    }

    pub fn is_constant(&self) -> bool {
        self.target.windows(2).all(|w| w[0] == w[1])
    }
}

impl Problem for FiniteProblem {
    type Input = String;
    type Output = i64;
    type Query = String;

    fn id(&self) -> String {
        self.name.clone()
    }

    fn output_space(&self) -> String {
        let parts: Vec<String> = self.carrier.iter().map(|c| c.to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }

    fn catalog(&self) -> Vec<String> {
        self.inputs.clone()
    }

    fn query_catalog(&self) -> Vec<String> {
        self.queries.iter().map(|(n, _)| n.clone()).collect()
    }

    fn target(&self, a: &String) -> Result<i64> {
        Ok(self.target[self.index(a)?])
    }

    fn distance(&self, a: &i64, b: &i64) -> f64 {
        f64::from(u8::from(a != b))
    }

    fn evaluate(&self, q: &String, a: &String) -> Result<Value> {
        let i = self.index(a)?;
        let (_, table) = self
            .queries
            .iter()
            .find(|(n, _)| n == q)
            .ok_or_else(|| SciError::UnknownQuery(q.clone()))?;
        Ok(Value::int(table[i]))
    }

    fn admits(&self, a: &String) -> Result<()> {
        self.index(a).map(|_| ())
    }
}

/// `P₀`: one input, output `{0}`, empty query family.
pub fn empty_family_problem() -> FiniteProblem {
    FiniteProblem {
        name: "P0".into(),
        inputs: vec!["*".into()],
        carrier: vec![0],
        target: vec![0],
        queries: vec![],
    }
}

/// `P₁`: inputs `a, b`, outputs `{0,1}`, one query `e` with `e(a) = 0`, `e(b) = 1`.
pub fn separating_problem() -> FiniteProblem {
    FiniteProblem {
        name: "P1".into(),
        inputs: vec!["a".into(), "b".into()],
        carrier: vec![0, 1],
        target: vec![0, 1],
        queries: vec![("e".into(), vec![0, 1])],
    }
}

/// One-point problem whose output carrier is `{value}`.
pub fn point_problem(value: i64) -> FiniteProblem {
    FiniteProblem {
        name: format!("Q{value}"),
        inputs: vec!["*".into()],
        carrier: vec![value],
        target: vec![value],
        queries: vec![("c".into(), vec![0])],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoVerdict {
    Infeasible,
    CarrierClash,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub class: DecoderClass,
    pub problems: Vec<FiniteProblem>,
    pub checks: Vec<DemoCheck>,
    pub verdict: DemoVerdict,
    /// The universally quantified step, which is argued rather than checked.
    pub recorded_argument: String,
}

impl CounterexampleReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> DemoCheck {
    DemoCheck {
        name: name.into(),
        passed,
        detail,
    }
}

/// Runs the finitely checkable steps showing that the two problems of the pair
/// have no common upper bound under the given decoder class.
pub fn counterexample_demo(class: DecoderClass) -> CounterexampleReport {
    match class {
        DecoderClass::Cont | DecoderClass::Bor => empty_family_demo(class),
        DecoderClass::Id => carrier_clash_demo(),
    }
}

fn empty_family_demo(class: DecoderClass) -> CounterexampleReport {
    let p0 = empty_family_problem();
    let p1 = separating_problem();
    let mut checks = Vec::new();

    checks.push(check(
        "p0_family_empty",
        !p0.has_queries(),
        format!("|Λ(P0)| = {}", p0.queries.len()),
    ));
    let (ea, eb) = (p1.queries[0].1[0], p1.queries[0].1[1]);
    checks.push(check(
        "p1_query_separates",
        ea != eb,
        format!("e(a) = {ea}, e(b) = {eb}"),
    ));
    checks.push(check(
        "p1_target_nonconstant",
        !p1.is_constant(),
        format!("target(a) = {}, target(b) = {}", p1.target[0], p1.target[1]),
    ));

    let obstructed = [
        ("P1", structural_feasibility(&p0, &p1)),
        ("L", structural_feasibility(&p0, &SingletonProblem)),
        ("Q0", structural_feasibility(&p0, &point_problem(0))),
    ];
    checks.push(check(
        "p0_reduces_only_to_empty_families",
        obstructed.iter().all(|(_, f)| *f == Feasibility::Infeasible),
        obstructed
            .iter()
            .map(|(n, f)| format!("P0 -> {n}: {f:?}"))
            .collect::<Vec<_>>()
            .join("; "),
    ));

    // Any upper bound U must have Λ_U = ∅. Consistency then forces a constant target.
    let probe = FiniteProblem {
        name: "U?".into(),
        inputs: vec!["u".into(), "v".into()],
        carrier: vec![0, 1],
        target: vec![0, 1],
        queries: vec![],
    };
    let forced_constant = check_consistency(&probe).map(|r| !r.passed()).unwrap_or(false);
    checks.push(check(
        "empty_family_forces_constant_target",
        forced_constant,
        "a two-input problem with Λ = ∅ and distinct targets fails the consistency check".into(),
    ));

    // With a constant target c, every reduction P1 -> U decodes both inputs to D(c).
    let mut candidates = 0usize;
    let mut survivors = 0usize;
    for universe in 1..=3usize {
        let xi = vec![7i64; universe];
        for ea in 0..universe {
            for eb in 0..universe {
                for dc in [0i64, 1] {
                    let decode = |v: i64| if v == xi[0] { dc } else { 1 - dc };
                    candidates += 1;
                    if decode(xi[ea]) == p1.target[0] && decode(xi[eb]) == p1.target[1] {
                        survivors += 1;
                    }
                }
            }
        }
    }
    checks.push(check(
        "no_constant_target_decodes_p1",
        survivors == 0,
        format!("{candidates} (encoder, decoder) candidates over constant-target U, {survivors} reproduce P1"),
    ));

    CounterexampleReport {
        class,
        problems: vec![p0, p1],
        checks,
        verdict: DemoVerdict::Infeasible,
        recorded_argument: "an upper bound U of P0 must have an empty query family, since P0 has no queries to \
                            simulate with; a problem with no queries has a constant target; decoding a constant \
                            cannot reproduce the two distinct values of P1"
            .into(),
    }
}

fn carrier_clash_demo() -> CounterexampleReport {
    let q0 = point_problem(0);
    let q1 = point_problem(1);
    let (s0, s1) = (q0.output_space(), q1.output_space());
    let mut checks = vec![check(
        "carriers_differ",
        s0 != s1,
        format!("M(Q0) = {s0}, M(Q1) = {s1}"),
    )];
    let clash = decoder_compose_class(DecoderClass::Id, DecoderClass::Id, s0 == s1);
    checks.push(check(
        "identity_decoders_do_not_compose",
        matches!(clash, Err(SciError::TagIncompatible { .. })),
        match clash {
            Ok(c) => format!("composed to {c}"),
            Err(e) => e.to_string(),
        },
    ));
    CounterexampleReport {
        class: DecoderClass::Id,
        problems: vec![q0, q1],
        checks,
        verdict: DemoVerdict::CarrierClash,
        recorded_argument: "an identity decoder forces the output space of an upper bound to equal both {0} and {1}"
            .into(),
    }
}
