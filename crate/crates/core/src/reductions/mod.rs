//! Finite-query evaluation reductions: encoder, decoder with a class tag, and a
//! per-query simulation plan.

mod pullback;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::model::Problem;
use crate::value::Value;

pub use pullback::{pullback_algorithm, pullback_tower, PullbackAlgorithm, PullbackTower};
pub use verify::{verify_reduction, VerificationReport, VerifyConfig};

/// Declared regularity of a decoder. Never machine-checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderClass {
    Cont,
    Bor,
    Id,
}

impl fmt::Display for DecoderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderClass::Cont => "cont",
            DecoderClass::Bor => "bor",
            DecoderClass::Id => "id",
        })
    }
}

impl std::str::FromStr for DecoderClass {
    type Err = SciError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cont" => Ok(DecoderClass::Cont),
            "bor" => Ok(DecoderClass::Bor),
            "id" => Ok(DecoderClass::Id),
            other => Err(SciError::Usage(format!("unknown decoder class `{other}` (cont|bor|id)"))),
        }
    }
}

/// Class of `outer ∘ inner`. `same_space` says whether the composite's domain and
/// codomain coincide, which an identity composite requires.
///
/// Identity decoders are continuous, so mixing `Id` with `Cont` or `Bor` lands in
/// the other class.
pub fn decoder_compose_class(
    outer: DecoderClass,
    inner: DecoderClass,
    same_space: bool,
) -> Result<DecoderClass> {
    use DecoderClass::*;
    match (outer, inner) {
        (Id, Id) if same_space => Ok(Id),
        (Id, Id) => Err(SciError::TagIncompatible {
            outer,
            inner,
            reason: "identity decoders over different output spaces".into(),
        }),
        (Bor, _) | (_, Bor) => Ok(Bor),
        _ => Ok(Cont),
    }
}

pub type Combiner = Arc<dyn Fn(&[Value]) -> Value + Send + Sync>;

/// Simulation of one target query: source queries `γ_1..γ_m` and a combiner `ϑ`.
#[derive(Clone)]
pub struct Simulation<Q> {
    sources: Vec<Q>,
    combiner: Combiner,
}

impl<Q> Simulation<Q> {
    pub fn new(sources: Vec<Q>, combiner: Combiner) -> Result<Self> {
        if sources.is_empty() {
            return Err(SciError::invalid("a simulation needs at least one source query"));
        }
        Ok(Simulation { sources, combiner })
    }

    /// One source query with the identity combiner.
    pub fn direct(q: Q) -> Self {
        Simulation {
            sources: vec![q],
            combiner: Arc::new(|v: &[Value]| v[0].clone()),
        }
    }

    /// One source query whose answer is ignored in favour of `value`.
    pub fn constant(q: Q, value: Value) -> Self {
        Simulation {
            sources: vec![q],
            combiner: Arc::new(move |_: &[Value]| value.clone()),
        }
    }

    pub fn sources(&self) -> &[Q] {
        &self.sources
    }

    pub fn width(&self) -> usize {
        self.sources.len()
    }

    pub fn combine(&self, answers: &[Value]) -> Value {
        (self.combiner)(answers)
    }
}

impl<Q: fmt::Debug> fmt::Debug for Simulation<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation").field("sources", &self.sources).finish_non_exhaustive()
    }
}

type PlanRule<T, S> = dyn Fn(&T) -> Option<Simulation<S>> + Send + Sync;

/// Parametric plan: a rule from target query ids to simulations.
pub struct QueryPlan<T, S> {
    rule: Arc<PlanRule<T, S>>,
}

impl<T, S> Clone for QueryPlan<T, S> {
    fn clone(&self) -> Self {
        QueryPlan { rule: self.rule.clone() }
    }
}

impl<T, S> QueryPlan<T, S> {
    pub fn new(rule: impl Fn(&T) -> Option<Simulation<S>> + Send + Sync + 'static) -> Self {
        QueryPlan { rule: Arc::new(rule) }
    }

    /// `None` when the plan does not cover `q`.
    pub fn simulate(&self, q: &T) -> Option<Simulation<S>> {
        (self.rule)(q)
    }

    pub fn width(&self, q: &T) -> Option<usize> {
        self.simulate(q).map(|s| s.width())
    }
}

type DecodeFn<A, B> = dyn Fn(&A) -> B + Send + Sync;

pub struct Decoder<A, B> {
    map: Arc<DecodeFn<A, B>>,
    class: DecoderClass,
}

impl<A, B> Clone for Decoder<A, B> {
    fn clone(&self) -> Self {
        Decoder {
            map: self.map.clone(),
            class: self.class,
        }
    }
}

impl<A, B> Decoder<A, B> {
    pub fn new(class: DecoderClass, map: impl Fn(&A) -> B + Send + Sync + 'static) -> Self {
        Decoder {
            map: Arc::new(map),
            class,
        }
    }

    pub fn class(&self) -> DecoderClass {
        self.class
    }

    pub fn apply(&self, a: &A) -> B {
        (self.map)(a)
    }
}

impl<A: Clone> Decoder<A, A> {
    pub fn identity() -> Self {
        Decoder::new(DecoderClass::Cont, |a: &A| a.clone())
    }
}

type EncodeFn<S, P> = dyn Fn(&<S as Problem>::Input) -> <P as Problem>::Input + Send + Sync;

/// A finite-query evaluation reduction of `S` (source) to `P` (target).
pub struct Reduction<S: Problem, P: Problem> {
    pub name: String,
    pub source: Arc<S>,
    pub target: Arc<P>,
    encoder: Arc<EncodeFn<S, P>>,
    pub decoder: Decoder<P::Output, S::Output>,
    pub plan: QueryPlan<P::Query, S::Query>,
}

impl<S: Problem, P: Problem> Clone for Reduction<S, P> {
    fn clone(&self) -> Self {
        Reduction {
            name: self.name.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
            plan: self.plan.clone(),
        }
    }
}

impl<S: Problem, P: Problem> Reduction<S, P> {
    pub fn new(
        name: impl Into<String>,
        source: Arc<S>,
        target: Arc<P>,
        encoder: impl Fn(&S::Input) -> P::Input + Send + Sync + 'static,
        decoder: Decoder<P::Output, S::Output>,
        plan: QueryPlan<P::Query, S::Query>,
    ) -> Self {
        Reduction {
            name: name.into(),
            source,
            target,
            encoder: Arc::new(encoder),
            decoder,
            plan,
        }
    }

    pub fn encode(&self, a: &S::Input) -> P::Input {
        (self.encoder)(a)
    }

    pub fn decode(&self, o: &P::Output) -> S::Output {
        self.decoder.apply(o)
    }
}

impl<S: Problem, P: Problem> fmt::Debug for Reduction<S, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reduction")
            .field("name", &self.name)
            .field("source", &self.source.id())
            .field("target", &self.target.id())
            .field("decoder", &self.decoder.class())
            .finish()
    }
}

pub fn identity_reduction<P: Problem>(p: Arc<P>) -> Reduction<P, P> {
    Reduction::new(
        format!("id({})", p.id()),
        p.clone(),
        p,
        |a: &P::Input| a.clone(),
        Decoder::identity(),
        QueryPlan::new(|q: &P::Query| Some(Simulation::direct(q.clone()))),
    )
}

/// Composes `first: R ≤ Q` with `second: Q ≤ P` into `R ≤ P` by blockwise substitution.
pub fn compose<R, Q, P>(first: &Reduction<R, Q>, second: &Reduction<Q, P>) -> Result<Reduction<R, P>>
where
    R: Problem,
    Q: Problem,
    P: Problem,
{
    if first.target.id() != second.source.id() {
        return Err(SciError::ProblemMismatch {
            expected: first.target.id(),
            found: second.source.id(),
        });
    }
    let same_space = first.source.output_space() == second.target.output_space();
    let class = decoder_compose_class(first.decoder.class(), second.decoder.class(), same_space)?;

    let (e1, e2) = (first.encoder.clone(), second.encoder.clone());
    let (d1, d2) = (first.decoder.clone(), second.decoder.clone());
    let (p1, p2) = (first.plan.clone(), second.plan.clone());

    let plan = QueryPlan::new(move |f: &P::Query| {
        let outer = p2.simulate(f)?;
        let inner: Vec<Simulation<R::Query>> =
            outer.sources().iter().map(|g| p1.simulate(g)).collect::<Option<_>>()?;
        let widths: Vec<usize> = inner.iter().map(|s| s.width()).collect();
        let sources: Vec<R::Query> = inner.iter().flat_map(|s| s.sources().iter().cloned()).collect();
        let combiner: Combiner = Arc::new(move |answers: &[Value]| {
            let mut at = 0;
            let mid: Vec<Value> = inner
                .iter()
                .zip(&widths)
                .map(|(s, &w)| {
                    let v = s.combine(&answers[at..at + w]);
                    at += w;
                    v
                })
                .collect();
            outer.combine(&mid)
        });
        Simulation::new(sources, combiner).ok()
    });

    Ok(Reduction::new(
        format!("{} ; {}", first.name, second.name),
        first.source.clone(),
        second.target.clone(),
        move |a: &R::Input| e2(&e1(a)),
        Decoder::new(class, move |o: &P::Output| d1.apply(&d2.apply(o))),
        plan,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Feasibility {
    Infeasible,
    Unknown,
}

/// The one structural obstruction: a nonempty target family cannot be simulated
/// from an empty source family. Never claims feasibility.
pub fn structural_feasibility<S: Problem, P: Problem>(source: &S, target: &P) -> Feasibility {
    if target.has_queries() && !source.has_queries() {
        Feasibility::Infeasible
    } else {
        Feasibility::Unknown
    }
}
