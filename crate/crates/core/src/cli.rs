//! Command-line surface. [`dispatch`] parses an argument vector, runs the named
//! operation and returns a [`RunReport`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::catalog::{default_catalog, load_catalog, Catalog};
use crate::certificates::{
    classify_heights, transport_saturation, Clause, PackageInputs,
};
use crate::error::{Result, SciError};
use crate::integration::{
    self, adversary_bump, affine_reduction, affine_reduction_between, degenerate_algorithm, rectangle_tower,
    FunctionDescription, IntegrationProblem, Interval, PointEval, RectangleRule,
};
use crate::koopman::{
    hausdorff, hausdorff_to_disks, height0_algorithm, koopman_matrix, sigma_ap, sigma_ap_eps, FiniteSpace, Grid,
    KoopmanProblem, MapTable, TargetKind,
};
use crate::lattice::{
    counterexample_demo, empty_family_problem, lower_bound_meet, point_problem, separating_problem,
    upper_bound_join, FiniteProblem, SingletonProblem, TaggedQuery,
};
use crate::model::{check_consistency, evaluate_tower, run_algorithm, FnAlgorithm, Problem, Tower};
use crate::reductions::{
    compose, identity_reduction, pullback_tower, verify_reduction, DecoderClass, Reduction, VerificationReport,
    VerifyConfig,
};
use crate::spectral::{
    self, decision_tower, exact_decision_oracle, source_problem, stabilization_reductions, stabilized_problem,
    DiagonalSpec, SpectralInput, SpectralSourceProblem, StabilizerSpec, Window,
};
use crate::value::{parse_rational, parse_rational_list, to_f64, Rational, Value};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "SCI_WORKBENCH_SEED";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Json,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Check {
    fn new(name: &str, passed: bool, measured: impl Serialize, tolerance: Option<f64>) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: serde_json::to_value(measured).unwrap_or(Json::Null),
            tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub parameters: Json,
    pub result: Json,
    pub checks: Vec<Check>,
    pub seed: u64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} (seed {})\n", self.command, self.seed);
        out.push_str(&serde_json::to_string_pretty(&self.result).expect("results serialize"));
        out.push('\n');
        for c in &self.checks {
            let tol = c.tolerance.map(|t| format!(", tol {t:e}")).unwrap_or_default();
            out.push_str(&format!(
                "[{}] {} (measured {}{tol})\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.measured
            ));
        }
        out
    }
}

#[derive(Debug, Parser)]
#[command(name = "sci-workbench", version, about = "Towers, finite-query reductions and height certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Catalog file; the shipped catalog is used when absent.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point-evaluation integration on intervals.
    #[command(subcommand)]
    Integrate(IntegrateCmd),
    /// Singleton-window spectral decision and block stabilization.
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Koopman operators on finite spaces.
    #[command(subcommand)]
    Koopman(KoopmanCmd),
    /// Family-level sharpness.
    #[command(subcommand)]
    Family(FamilyCmd),
    /// Certificate inference.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Joins, meets and the non-lattice pairs.
    #[command(subcommand)]
    Degrees(DegreesCmd),
    /// Named reductions.
    #[command(subcommand)]
    Reduce(ReduceCmd),
}

#[derive(Debug, Subcommand)]
pub enum IntegrateCmd {
    /// Run one rectangle-rule stage and compare with the exact integral.
    Tower(TowerArgs),
    /// Build the bump adversary for a query set.
    Adversary(AdversaryArgs),
    /// Verify the affine reduction between two intervals.
    Reduce(IntegrateReduceArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TowerArgs {
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub interval: Vec<String>,
    #[arg(long, default_value = "poly:0,1")]
    pub function: String,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AdversaryArgs {
    /// Comma-separated query points in [0, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Draw this many random rational points instead.
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct IntegrateReduceArgs {
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub from: Vec<String>,
    #[arg(long, num_args = 2, value_names = ["C", "D"], allow_hyphen_values = true, required = true)]
    pub to: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Subcommand)]
pub enum SpectralCmd {
    /// Run the decision tower against the exact oracle.
    Decide(DecideArgs),
    /// Compare a pair with its block-stabilized version.
    Stabilize(StabilizeArgs),
    /// Verify both stabilization reductions for a stabilizer.
    Reduce(SpectralReduceArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DecideArgs {
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub domain: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub diagonal: String,
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    /// Stage `n2 n1`; the derived stabilization stage when absent.
    #[arg(long, num_args = 2, value_names = ["N2", "N1"])]
    pub stage: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilizeArgs {
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub domain: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub diagonal: String,
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    #[arg(long, allow_hyphen_values = true)]
    pub stabilizer: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectralReduceArgs {
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub domain: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub stabilizer: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Subcommand)]
pub enum KoopmanCmd {
    /// Spectra of one map and the height-0 algorithm.
    Finite(KoopmanArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct KoopmanArgs {
    /// 1-based images `F(1),...,F(N)`.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub weights: Option<String>,
    /// Also sample the epsilon-relaxed spectrum.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Grid spacing; defaults to eps/4.
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum FamilyCmd {
    /// Sharpness flags of a list of exact heights.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub heights: String,
    #[arg(long)]
    pub k: u32,
}

#[derive(Debug, Subcommand)]
pub enum CertifyCmd {
    /// Run the sufficiency package on a shipped family.
    Package(PackageArgs),
    /// Run transport saturation on a shipped family.
    Saturate(SaturateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PackageArgs {
    /// integration | spectral
    #[arg(long)]
    pub family: String,
    /// Remove one clause (c1 | c2 | c3) and report the failure.
    #[arg(long)]
    pub drop: Option<String>,
    /// Member whose premise is dropped.
    #[arg(long, default_value_t = 0)]
    pub member: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SaturateArgs {
    /// integration | spectral
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Subcommand)]
pub enum DegreesCmd {
    /// Tagged-union upper bound of two problems.
    Join(PairArgs),
    /// Singleton lower bound of two problems.
    Meet(PairArgs),
    /// The pairs with no upper bound.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PairArgs {
    /// Problem spec: int:A,B | spec:A,B | koopman:N | finite:NAME | singleton
    #[arg(long, allow_hyphen_values = true)]
    pub left: String,
    #[arg(long, allow_hyphen_values = true)]
    pub right: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, value_name = "cont|bor|id")]
    pub class: String,
}

#[derive(Debug, Subcommand)]
pub enum ReduceCmd {
    /// Verify a named reduction.
    Verify(ReduceVerifyArgs),
    /// Compose two named reductions and verify the composite.
    Compose(ReduceComposeArgs),
    /// Pull the rectangle tower back along an affine reduction.
    Pullback(PullbackArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceVerifyArgs {
    /// identity:<problem> | affine:A,B->C,D | stabilize:<diagonal> | unstabilize:<diagonal>
    #[arg(long, allow_hyphen_values = true)]
    pub reduction: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub domain: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceComposeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub first: String,
    #[arg(long, allow_hyphen_values = true)]
    pub second: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values = ["0", "1"])]
    pub domain: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PullbackArgs {
    #[arg(long, num_args = 2, value_names = ["C", "D"], allow_hyphen_values = true, required = true)]
    pub to: Vec<String>,
    #[arg(long, default_value = "poly:0,1")]
    pub function: String,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

struct Ctx {
    seed: u64,
    catalog: Catalog,
}

impl Ctx {
    fn verify(&self, samples: usize) -> VerifyConfig {
        VerifyConfig {
            seed: self.seed,
            ..VerifyConfig::with_samples(samples)
        }
    }
}

struct Outcome {
    result: Json,
    checks: Vec<Check>,
}

fn outcome(result: Json, checks: Vec<Check>) -> Result<Outcome> {
    Ok(Outcome { result, checks })
}

fn to_json<T: Serialize>(t: &T) -> Json {
    serde_json::to_value(t).unwrap_or(Json::Null)
}

/// Parses `argv` (including the program name) and runs it.
pub fn dispatch<I, S>(argv: I) -> Result<RunReport>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| SciError::Usage(e.render().to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let catalog = match &cli.catalog {
        Some(p) => load_catalog(p)?,
        None => default_catalog(),
    };
    let ctx = Ctx {
        seed: cli.seed,
        catalog,
    };
    let (command, parameters, out) = match &cli.command {
        Command::Integrate(IntegrateCmd::Tower(a)) => ("integrate tower", to_json(a), integrate_tower(a)?),
        Command::Integrate(IntegrateCmd::Adversary(a)) => ("integrate adversary", to_json(a), integrate_adversary(a, &ctx)?),
        Command::Integrate(IntegrateCmd::Reduce(a)) => ("integrate reduce", to_json(a), integrate_reduce(a, &ctx)?),
        Command::Spectral(SpectralCmd::Decide(a)) => ("spectral decide", to_json(a), spectral_decide(a)?),
        Command::Spectral(SpectralCmd::Stabilize(a)) => ("spectral stabilize", to_json(a), spectral_stabilize(a)?),
        Command::Spectral(SpectralCmd::Reduce(a)) => ("spectral reduce", to_json(a), spectral_reduce(a, &ctx)?),
        Command::Koopman(KoopmanCmd::Finite(a)) => ("koopman finite", to_json(a), koopman_finite(a)?),
        Command::Family(FamilyCmd::Classify(a)) => ("family classify", to_json(a), family_classify(a)?),
        Command::Certify(CertifyCmd::Package(a)) => ("certify package", to_json(a), certify_package(a, &ctx)?),
        Command::Certify(CertifyCmd::Saturate(a)) => ("certify saturate", to_json(a), certify_saturate(a, &ctx)?),
        Command::Degrees(DegreesCmd::Join(a)) => ("degrees join", to_json(a), degrees_join(a, &ctx)?),
        Command::Degrees(DegreesCmd::Meet(a)) => ("degrees meet", to_json(a), degrees_meet(a, &ctx)?),
        Command::Degrees(DegreesCmd::Counterexample(a)) => ("degrees counterexample", to_json(a), degrees_counterexample(a)?),
        Command::Reduce(ReduceCmd::Verify(a)) => ("reduce verify", to_json(a), reduce_verify(a, &ctx)?),
        Command::Reduce(ReduceCmd::Compose(a)) => ("reduce compose", to_json(a), reduce_compose(a, &ctx)?),
        Command::Reduce(ReduceCmd::Pullback(a)) => ("reduce pullback", to_json(a), reduce_pullback(a)?),
    };
    let mut parameters = parameters;
    if let (Some(path), Json::Object(map)) = (&cli.catalog, &mut parameters) {
        map.insert("catalog".into(), Json::String(path.display().to_string()));
    }
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: command.into(),
        parameters,
        result: out.result,
        checks: out.checks,
        seed: cli.seed,
    })
}

fn interval_arg(v: &[String]) -> Result<Interval> {
    match v {
        [a, b] => Interval::new(parse_rational(a)?, parse_rational(b)?),
        _ => Err(SciError::Usage("an interval takes two endpoints".into())),
    }
}

fn interval_spec(s: &str) -> Result<Interval> {
    let ends = parse_rational_list(s)?;
    match <[Rational; 2]>::try_from(ends) {
        Ok([a, b]) => Interval::new(a, b),
        Err(_) => Err(SciError::Usage(format!("`{s}` is not an interval `A,B`"))),
    }
}

fn value_json(v: &Value) -> Json {
    json!({ "exact": v.as_rational().map(|q| q.to_string()), "approx": v.re_f64() })
}

fn integrate_tower(a: &TowerArgs) -> Result<Outcome> {
    let interval = interval_arg(&a.interval)?;
    let f = FunctionDescription::parse(&a.function)?;
    let problem = IntegrationProblem::with_functions(interval.clone(), vec![f.clone()]);
    let exact = f.integral(&interval.a, &interval.b);
    if interval.is_degenerate() {
        let tower = degenerate_algorithm(interval.a.clone())?;
        let (v, trace) = run_algorithm(tower.algorithm().as_ref(), &problem, &f)?;
        let err = v.abs_diff(&exact);
        return outcome(
            json!({ "interval": interval.to_string(), "height": 0, "value": value_json(&v), "exact": value_json(&exact), "queries": trace.len() }),
            vec![Check::new("degenerate_value_exact", err == 0.0, err, Some(0.0))],
        );
    }
    let rule = RectangleRule::new(interval.clone(), a.n)?;
    let (v, trace) = run_algorithm(&rule, &problem, &f)?;
    let err = v.abs_diff(&exact);
    let len = to_f64(&interval.length());
    let bound = f.lipschitz(&interval.a, &interval.b) * len * len / (2.0 * a.n as f64);
    outcome(
        json!({
            "interval": interval.to_string(),
            "function": f.to_string(),
            "n": a.n,
            "value": value_json(&v),
            "exact": value_json(&exact),
            "error": err,
            "bound": bound,
            "queries": trace.len(),
        }),
        vec![Check::new("error_within_lipschitz_bound", err <= bound, err, Some(bound))],
    )
}

/// Random rationals `p/q` in `[0, 1]` with `q <= 1000`.
pub fn random_points(rng: &mut impl Rng, count: usize) -> Vec<Rational> {
    (0..count)
        .map(|_| {
            let q: i64 = rng.gen_range(1..=1000);
            let p: i64 = rng.gen_range(0..=q);
            Rational::new(p.into(), q.into())
        })
        .collect()
}

fn integrate_adversary(a: &AdversaryArgs, ctx: &Ctx) -> Result<Outcome> {
    let points = match (&a.points, a.random) {
        (Some(p), None) => parse_rational_list(p)?,
        (None, Some(k)) => random_points(&mut ChaCha8Rng::seed_from_u64(ctx.seed), k),
        (None, None) => Vec::new(),
        (Some(_), Some(_)) => return Err(SciError::Usage("give either --points or --random".into())),
    };
    let h = adversary_bump(&points);
    let nonzero = points.iter().filter(|x| h.eval(x) != Rational::from_integer(0.into())).count();
    let integral = h.integral();
    let expected = (&h.v - &h.u) / Rational::from_integer(2.into());
    let mut checks = vec![
        Check::new("vanishes_at_queries", nonzero == 0, nonzero, None),
        Check::new(
            "integral_positive",
            integral > Rational::from_integer(0.into()) && integral == expected,
            integral.to_string(),
            None,
        ),
    ];
    let unit = IntegrationProblem::with_functions(Interval::unit(), vec![FunctionDescription::poly(vec![]), h.as_function()]);
    if !points.is_empty() {
        let queries: Vec<PointEval> = points
            .iter()
            .filter(|x| Interval::unit().contains(x))
            .cloned()
            .map(PointEval)
            .collect();
        if !queries.is_empty() {
            let alg = FnAlgorithm::<IntegrationProblem>::fixed("replay", queries, |v: &[Value]| {
                v.iter().fold(Value::zero(), |acc, x| acc.add(x))
            });
            let (o0, _) = run_algorithm(&alg, &unit, &FunctionDescription::poly(vec![]))?;
            let (oh, _) = run_algorithm(&alg, &unit, &h.as_function())?;
            checks.push(Check::new("protocol_replay_identical", o0 == oh, o0 == oh, None));
        }
    }
    outcome(
        json!({
            "points": points.len(),
            "bump": to_json(&h),
            "apex": h.apex().to_string(),
            "integral": integral.to_string(),
        }),
        checks,
    )
}

fn integrate_reduce(a: &IntegrateReduceArgs, ctx: &Ctx) -> Result<Outcome> {
    let r = affine_reduction_between(interval_arg(&a.from)?, interval_arg(&a.to)?)?;
    let report = verify_reduction(&r, &ctx.verify(a.samples));
    verification_outcome(vec![report])
}

fn verification_outcome(reports: Vec<VerificationReport>) -> Result<Outcome> {
    let checks = reports
        .iter()
        .map(|r| {
            Check::new(
                &format!("verified {}", r.reduction),
                r.passed,
                r.max_discrepancy,
                Some(r.tolerance),
            )
        })
        .collect();
    outcome(to_json(&reports), checks)
}

fn spectral_input(domain: &Interval, diagonal: &str, window: &str) -> Result<SpectralInput> {
    Ok(SpectralInput {
        operator: DiagonalSpec::parse(diagonal)?,
        window: Window::new(parse_rational(window)?, domain.clone())?,
    })
}

fn spectral_decide(a: &DecideArgs) -> Result<Outcome> {
    let domain = interval_arg(&a.domain)?;
    let input = spectral_input(&domain, &a.diagonal, &a.window)?;
    let problem = SpectralSourceProblem::new(domain, vec![input.clone()])?;
    let tower = decision_tower();
    let derived = tower.stabilization_stage(&input.operator, &input.window)?;
    let (n2, n1) = match &a.stage {
        Some(s) => (s[0], s[1]),
        None => (derived.n2, derived.n1),
    };
    let v = evaluate_tower(&tower, &[n2, n1], &problem, &input)?;
    let oracle = exact_decision_oracle(&input.operator, &input.window)?;
    outcome(
        json!({
            "operator": input.operator.to_string(),
            "window": input.window.z.to_string(),
            "stage": [n2, n1],
            "derived_stage": to_json(&derived),
            "distance": input.operator.dist(&input.window.z).to_string(),
            "value": v,
            "oracle": oracle,
        }),
        vec![Check::new("agrees_with_oracle", v == oracle, v, None)],
    )
}

fn spectral_stabilize(a: &StabilizeArgs) -> Result<Outcome> {
    let domain = interval_arg(&a.domain)?;
    let input = spectral_input(&domain, &a.diagonal, &a.window)?;
    let b = StabilizerSpec::certify(DiagonalSpec::parse(&a.stabilizer)?, domain.clone())?;
    let source = Arc::new(SpectralSourceProblem::new(domain, vec![input.clone()])?);
    let stabilized = stabilized_problem(&source, &b)?;
    let (forward, backward) = stabilization_reductions(source.clone(), &b)?;
    let encoded = forward.encode(&input);
    let xi_src = source.target(&input)?;
    let xi_stab = stabilized.target(&encoded)?;
    let round_trip = backward.encode(&encoded) == input;

    let stage = decision_tower().stabilization_stage(&input.operator, &input.window)?;
    let pulled = pullback_tower(Arc::new(backward), Arc::new(decision_tower()));
    let tower_value = evaluate_tower(&pulled, &[stage.n2, stage.n1], &stabilized, &encoded)?;
    outcome(
        json!({
            "stabilizer": b.operator.to_string(),
            "margin": b.margin.to_string(),
            "source_target": xi_src,
            "stabilized_target": xi_stab,
            "pulled_back_stage": [stage.n2, stage.n1],
            "pulled_back_value": tower_value,
        }),
        vec![
            Check::new("target_invariant", xi_src == xi_stab, xi_stab, None),
            Check::new("encoder_round_trip", round_trip, round_trip, None),
            Check::new("pulled_back_tower_agrees", tower_value == xi_src, tower_value, None),
        ],
    )
}

fn spectral_reduce(a: &SpectralReduceArgs, ctx: &Ctx) -> Result<Outcome> {
    let domain = interval_arg(&a.domain)?;
    let b = StabilizerSpec::certify(DiagonalSpec::parse(&a.stabilizer)?, domain.clone())?;
    let source = Arc::new(spectral_source_for(&domain, ctx)?);
    let (forward, backward) = stabilization_reductions(source, &b)?;
    let cfg = ctx.verify(a.samples);
    verification_outcome(vec![verify_reduction(&forward, &cfg), verify_reduction(&backward, &cfg)])
}

/// Spectral source over `domain`, with catalog pairs when the catalog has an
/// entry for that domain.
fn spectral_source_for(domain: &Interval, ctx: &Ctx) -> Result<SpectralSourceProblem> {
    match ctx.catalog.spectral().find(|s| &s.domain == domain) {
        Some(entry) => SpectralSourceProblem::new(domain.clone(), entry.pairs.clone()),
        None => source_problem(domain.clone()),
    }
}

fn parse_indices(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| SciError::Usage(format!("`{t}` is not a point index")))
        })
        .collect()
}

fn complex_list(pts: &[Complex64]) -> Json {
    Json::Array(pts.iter().map(|z| json!([z.re, z.im])).collect())
}

fn koopman_finite(a: &KoopmanArgs) -> Result<Outcome> {
    let f = MapTable::from_one_based(&parse_indices(&a.map)?)?;
    let space = match &a.weights {
        Some(w) => FiniteSpace::new(parse_rational_list(w)?)?,
        None => FiniteSpace::uniform(f.size())?,
    };
    let m = koopman_matrix(&space, &f)?;
    let exact = sigma_ap(&m);
    let problem = KoopmanProblem::with_catalog(space.clone(), TargetKind::Ap, vec![f.clone()]);
    let tower = height0_algorithm(&space, TargetKind::Ap)?;
    let (out, trace) = run_algorithm(tower.algorithm().as_ref(), &problem, &f)?;
    let d = hausdorff(&out, &exact)?;
    let mut result = json!({
        "map": f.one_based(),
        "matrix": m.rows(),
        "sigma_ap": complex_list(&exact.points),
        "height0_output": complex_list(&out.points),
        "queries": trace.len(),
    });
    let mut checks = vec![
        Check::new("height0_matches_exact", d == 0.0, d, Some(0.0)),
        Check::new("query_count_is_n", trace.len() == f.size(), trace.len(), None),
    ];
    if let Some(eps) = a.eps {
        let h = a.spacing.unwrap_or(eps / 4.0);
        let pad = eps + h;
        let re = exact.points.iter().map(|z| z.re);
        let im = exact.points.iter().map(|z| z.im);
        let grid = Grid {
            re: (re.clone().fold(f64::INFINITY, f64::min) - pad, re.fold(f64::NEG_INFINITY, f64::max) + pad),
            im: (im.clone().fold(f64::INFINITY, f64::min) - pad, im.fold(f64::NEG_INFINITY, f64::max) + pad),
            spacing: h,
        };
        let s = sigma_ap_eps(&m, eps, &grid, &space)?;
        result["sigma_ap_eps"] = json!({ "grid": to_json(&grid), "points": s.points.len() });
        let permutation = {
            let mut seen = f.one_based();
            seen.sort_unstable();
            seen.dedup();
            seen.len() == f.size()
        };
        let uniform = space.weights().windows(2).all(|w| w[0] == w[1]);
        if permutation && uniform {
            let dh = hausdorff_to_disks(&s, &exact.points, eps, 40, 360)?;
            result["sigma_ap_eps"]["disk_hausdorff"] = json!(dh);
            checks.push(Check::new("disk_hausdorff_within_spacing", dh <= h, dh, Some(h)));
        }
    }
    outcome(result, checks)
}

fn family_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let heights: Vec<u32> = a
        .heights
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| SciError::Usage(format!("`{t}` is not a height")))
        })
        .collect::<Result<_>>()?;
    let v = classify_heights(&heights, a.k)?;
    // a finite family attains its supremum
    let checks = vec![Check::new(
        "witness_sharp_iff_worst_case",
        v.witness_sharp == v.worst_case_exact,
        json!([v.witness_sharp, v.worst_case_exact]),
        None,
    )];
    outcome(json!({ "verdict": v.to_string(), "flags": to_json(&v) }), checks)
}

fn nondegenerate_intervals(ctx: &Ctx) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for e in ctx.catalog.integration() {
        if !e.degenerate && !out.contains(&e.interval) {
            out.push(e.interval.clone());
        }
    }
    out
}

fn package_for(family: &str, ctx: &Ctx, cfg: &VerifyConfig) -> Result<PackageInputs> {
    match family {
        "integration" => integration::package_inputs(&nondegenerate_intervals(ctx), cfg),
        "spectral" => {
            let entry = ctx
                .catalog
                .spectral()
                .find(|s| !s.stabilizers.is_empty())
                .ok_or_else(|| SciError::invalid("catalog has no spectral entry with stabilizers"))?;
            spectral::package_inputs(&entry.domain, &entry.stabilizers, cfg)
        }
        other => Err(SciError::Usage(format!("unknown family `{other}` (integration|spectral)"))),
    }
}

fn parse_clause(s: &str) -> Result<Clause> {
    match s.to_ascii_lowercase().as_str() {
        "c1" => Ok(Clause::C1),
        "c2" => Ok(Clause::C2),
        "c3" => Ok(Clause::C3),
        other => Err(SciError::Usage(format!("unknown clause `{other}` (c1|c2|c3)"))),
    }
}

fn certify_package(a: &PackageArgs, ctx: &Ctx) -> Result<Outcome> {
    let inputs = package_for(&a.family, ctx, &ctx.verify(a.samples))?;
    match &a.drop {
        None => {
            let out = inputs.run()?;
            let all_exact = out.certificates.iter().all(|c| c.exact_value() == Some(out.k));
            outcome(
                json!({
                    "k": out.k,
                    "members": inputs.members,
                    "verdict": out.verdict.to_string(),
                    "certificates": to_json(&out.certificates),
                    "derivation": out.certificates.iter().map(|c| c.derivation_tree()).collect::<Vec<_>>(),
                }),
                vec![Check::new("all_members_exact", all_exact, out.verdict.to_string(), None)],
            )
        }
        Some(c) => {
            let clause = parse_clause(c)?;
            let res = inputs.without(clause, a.member).run();
            let reported = match &res {
                Err(SciError::MissingClause { clause: got, .. }) => Some(*got),
                _ => None,
            };
            outcome(
                json!({
                    "dropped": format!("{clause:?}"),
                    "member": inputs.members.get(a.member),
                    "outcome": match &res {
                        Ok(o) => json!({ "verdict": o.verdict.to_string() }),
                        Err(e) => json!({ "error": e.to_string() }),
                    },
                }),
                vec![Check::new(
                    "missing_clause_reported",
                    reported == Some(clause),
                    reported.map(|c| format!("{c:?}")),
                    None,
                )],
            )
        }
    }
}

fn certify_saturate(a: &SaturateArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.verify(a.samples);
    let package = package_for(&a.family, ctx, &cfg)?;
    let via_package = package.run()?;
    let (basis, assignment, reductions) = match a.family.as_str() {
        "integration" => {
            // Second basis element: [0,2], itself certified by the package.
            let wide = Interval::new(Rational::from_integer(0.into()), Rational::from_integer(2.into()))?;
            let wide_id = IntegrationProblem::new(wide.clone()).id();
            let wide_cert = integration::package_inputs(std::slice::from_ref(&wide), &cfg)?
                .run()?
                .certificates
                .remove(0);
            let mut reductions = package.reductions.clone();
            let mut assignment = BTreeMap::new();
            for (i, (m, interval)) in package.members.iter().zip(nondegenerate_intervals(ctx)).enumerate() {
                if i % 2 == 1 {
                    let r = affine_reduction_between(wide.clone(), interval)?;
                    reductions.push(verify_reduction(&r, &cfg));
                    assignment.insert(m.clone(), wide_id.clone());
                } else {
                    assignment.insert(m.clone(), package.source.problem.clone());
                }
            }
            (vec![package.source.clone(), wide_cert], assignment, reductions)
        }
        _ => {
            let assignment = package
                .members
                .iter()
                .map(|m| (m.clone(), package.source.problem.clone()))
                .collect();
            (vec![package.source.clone()], assignment, package.reductions.clone())
        }
    };
    let out = transport_saturation(&basis, package.k, &package.members, &assignment, &reductions, &package.upper)?;
    let all_exact = out.certificates.iter().all(|c| c.exact_value() == Some(out.k));
    let same = out.verdict == via_package.verdict;
    outcome(
        json!({
            "basis": basis.iter().map(|b| b.problem.clone()).collect::<Vec<_>>(),
            "assignment": assignment,
            "verdict": out.verdict.to_string(),
            "certificates": to_json(&out.certificates),
        }),
        vec![
            Check::new("all_members_exact", all_exact, out.verdict.to_string(), None),
            Check::new("agrees_with_package", same, via_package.verdict.to_string(), None),
        ],
    )
}

enum AnyProblem {
    Integration(IntegrationProblem),
    Spectral(SpectralSourceProblem),
    Koopman(KoopmanProblem),
    Finite(FiniteProblem),
    Singleton(SingletonProblem),
}

fn parse_problem(spec: &str, ctx: &Ctx) -> Result<AnyProblem> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "int" => Ok(AnyProblem::Integration(IntegrationProblem::new(interval_spec(arg)?))),
        "spec" => Ok(AnyProblem::Spectral(spectral_source_for(&interval_spec(arg)?, ctx)?)),
        "koopman" => {
            let n: usize = arg
                .parse()
                .map_err(|_| SciError::Usage(format!("`{arg}` is not a point count")))?;
            Ok(AnyProblem::Koopman(KoopmanProblem::new(FiniteSpace::uniform(n)?, TargetKind::Ap)))
        }
        "finite" => {
            let p = match arg {
                "P0" => empty_family_problem(),
                "P1" => separating_problem(),
                "Q0" => point_problem(0),
                "Q1" => point_problem(1),
                name => ctx
                    .catalog
                    .finite()
                    .find(|f| f.name == name)
                    .cloned()
                    .ok_or_else(|| SciError::Usage(format!("no finite problem named `{name}`")))?,
            };
            Ok(AnyProblem::Finite(p))
        }
        "singleton" => Ok(AnyProblem::Singleton(SingletonProblem)),
        _ => Err(SciError::Usage(format!(
            "problem `{spec}` is not one of int:A,B  spec:A,B  koopman:N  finite:NAME  singleton"
        ))),
    }
}

macro_rules! with_problem {
    ($p:expr, |$x:ident| $body:expr) => {
        match $p {
            AnyProblem::Integration(v) => {
                let $x = Arc::new(v);
                $body
            }
            AnyProblem::Spectral(v) => {
                let $x = Arc::new(v);
                $body
            }
            AnyProblem::Koopman(v) => {
                let $x = Arc::new(v);
                $body
            }
            AnyProblem::Finite(v) => {
                let $x = Arc::new(v);
                $body
            }
            AnyProblem::Singleton(v) => {
                let $x = Arc::new(v);
                $body
            }
        }
    };
}

fn join_outcome<P0: Problem, P1: Problem>(p0: Arc<P0>, p1: Arc<P1>, cfg: &VerifyConfig) -> Result<Outcome> {
    let j = upper_bound_join(p0.clone(), p1.clone())?;
    let u = j.union.clone();
    let left = verify_reduction(&j.from_left, cfg);
    let right = verify_reduction(&j.from_right, cfg);
    let a0 = p0.catalog().remove(0);
    let a1 = p1.catalog().remove(0);
    let (x0, x1) = (j.from_left.encode(&a0), j.from_right.encode(&a1));
    let cross = u.distance(&u.target(&x0)?, &u.target(&x1)?);
    let tau0 = u.evaluate(&TaggedQuery::Tag, &x0)?;
    let tau1 = u.evaluate(&TaggedQuery::Tag, &x1)?;
    let g1 = p1.query_catalog().remove(0);
    let padded = u.evaluate(&TaggedQuery::Right(g1), &x0)?;
    let consistency = check_consistency(u.as_ref())?;
    outcome(
        json!({
            "union": u.id(),
            "reductions": [to_json(&left), to_json(&right)],
            "cross_tag_distance": cross,
            "tau": [tau0, tau1],
            "padded_off_tag": padded,
            "consistency": { "pairs": consistency.pairs_checked, "unseparated": consistency.unseparated.len() },
        }),
        vec![
            Check::new("left_reduction_verified", left.passed, left.max_discrepancy, Some(left.tolerance)),
            Check::new("right_reduction_verified", right.passed, right.max_discrepancy, Some(right.tolerance)),
            Check::new("cross_tag_distance_is_2", cross == 2.0, cross, None),
            Check::new("tag_query", tau0 == Value::int(0) && tau1 == Value::int(1), [&tau0, &tau1], None),
            Check::new("padded_query_vanishes_off_tag", padded == Value::zero(), &padded, None),
            Check::new("union_consistent", consistency.passed(), consistency.unseparated.len(), None),
        ],
    )
}

fn meet_outcome<P0: Problem, P1: Problem>(p0: Arc<P0>, p1: Arc<P1>, cfg: &VerifyConfig) -> Result<Outcome> {
    let m = lower_bound_meet(p0, p1)?;
    let left = verify_reduction(&m.into_left, cfg);
    let right = verify_reduction(&m.into_right, cfg);
    let id = verify_reduction(&identity_reduction(m.bottom.clone()), cfg);
    outcome(
        json!({ "bottom": m.bottom.id(), "reductions": [to_json(&left), to_json(&right)] }),
        vec![
            Check::new("left_reduction_verified", left.passed, left.max_discrepancy, Some(left.tolerance)),
            Check::new("right_reduction_verified", right.passed, right.max_discrepancy, Some(right.tolerance)),
            Check::new("bottom_identity_verified", id.passed, id.max_discrepancy, Some(id.tolerance)),
        ],
    )
}

fn degrees_join(a: &PairArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.verify(a.samples);
    let (l, r) = (parse_problem(&a.left, ctx)?, parse_problem(&a.right, ctx)?);
    with_problem!(l, |p0| with_problem!(r, |p1| join_outcome(p0, p1, &cfg)))
}

fn degrees_meet(a: &PairArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.verify(a.samples);
    let (l, r) = (parse_problem(&a.left, ctx)?, parse_problem(&a.right, ctx)?);
    with_problem!(l, |p0| with_problem!(r, |p1| meet_outcome(p0, p1, &cfg)))
}

fn degrees_counterexample(a: &CounterexampleArgs) -> Result<Outcome> {
    let class: DecoderClass = a.class.parse()?;
    let report = counterexample_demo(class);
    let checks = report
        .checks
        .iter()
        .map(|c| Check::new(&c.name, c.passed, &c.detail, None))
        .collect();
    outcome(to_json(&report), checks)
}

enum Named {
    Affine(Reduction<IntegrationProblem, IntegrationProblem>),
    Stabilize(spectral::ForwardReduction),
    Unstabilize(spectral::BackwardReduction),
}

fn named_reduction(spec: &str, domain: &Interval, ctx: &Ctx) -> Result<Named> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| SciError::Usage(format!("reduction `{spec}` needs the form kind:args")))?;
    match kind {
        "affine" => {
            let (from, to) = arg
                .split_once("->")
                .ok_or_else(|| SciError::Usage(format!("affine reduction `{arg}` needs A,B->C,D")))?;
            Ok(Named::Affine(affine_reduction_between(interval_spec(from)?, interval_spec(to)?)?))
        }
        "stabilize" | "unstabilize" => {
            let b = StabilizerSpec::certify(DiagonalSpec::parse(arg)?, domain.clone())?;
            let (fwd, bwd) = stabilization_reductions(Arc::new(spectral_source_for(domain, ctx)?), &b)?;
            Ok(if kind == "stabilize" {
                Named::Stabilize(fwd)
            } else {
                Named::Unstabilize(bwd)
            })
        }
        _ => Err(SciError::Usage(format!(
            "reduction `{spec}` is not one of identity:<problem>  affine:A,B->C,D  stabilize:<diagonal>  unstabilize:<diagonal>"
        ))),
    }
}

fn reduce_verify(a: &ReduceVerifyArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.verify(a.samples);
    if let Some(p) = a.reduction.strip_prefix("identity:") {
        let p = parse_problem(p, ctx)?;
        return with_problem!(p, |x| verification_outcome(vec![verify_reduction(&identity_reduction(x), &cfg)]));
    }
    let report = match named_reduction(&a.reduction, &interval_arg(&a.domain)?, ctx)? {
        Named::Affine(r) => verify_reduction(&r, &cfg),
        Named::Stabilize(r) => verify_reduction(&r, &cfg),
        Named::Unstabilize(r) => verify_reduction(&r, &cfg),
    };
    verification_outcome(vec![report])
}

/// Composite width of `f` against the blockwise sum of inner widths.
fn width_law<R: Problem, Q: Problem, P: Problem>(
    first: &Reduction<R, Q>,
    second: &Reduction<Q, P>,
    composite: &Reduction<R, P>,
) -> (usize, usize) {
    let mut checked = 0;
    let mut violations = 0;
    for f in second.target.query_catalog() {
        let Some(outer) = second.plan.simulate(&f) else { continue };
        let inner: Option<usize> = outer.sources().iter().map(|g| first.plan.width(g)).sum();
        checked += 1;
        if composite.plan.width(&f) != inner {
            violations += 1;
        }
    }
    (checked, violations)
}

fn compose_outcome<R: Problem, Q: Problem, P: Problem>(
    first: Reduction<R, Q>,
    second: Reduction<Q, P>,
    cfg: &VerifyConfig,
) -> Result<Outcome> {
    let composite = compose(&first, &second)?;
    let reports = [
        verify_reduction(&first, cfg),
        verify_reduction(&second, cfg),
        verify_reduction(&composite, cfg),
    ];
    let (checked, violations) = width_law(&first, &second, &composite);
    let mut checks: Vec<Check> = reports
        .iter()
        .map(|r| Check::new(&format!("verified {}", r.reduction), r.passed, r.max_discrepancy, Some(r.tolerance)))
        .collect();
    checks.push(Check::new("plan_width_law", violations == 0 && checked > 0, json!({"checked": checked, "violations": violations}), None));
    outcome(
        json!({
            "composite": composite.name,
            "decoder_class": composite.decoder.class(),
            "reports": to_json(&reports),
        }),
        checks,
    )
}

fn reduce_compose(a: &ReduceComposeArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.verify(a.samples);
    let domain = interval_arg(&a.domain)?;
    match (named_reduction(&a.first, &domain, ctx)?, named_reduction(&a.second, &domain, ctx)?) {
        (Named::Affine(r1), Named::Affine(r2)) => compose_outcome(r1, r2, &cfg),
        (Named::Stabilize(r1), Named::Unstabilize(r2)) => compose_outcome(r1, r2, &cfg),
        (Named::Unstabilize(r1), Named::Stabilize(r2)) => compose_outcome(r1, r2, &cfg),
        _ => Err(SciError::Usage(
            "composable pairs: affine;affine, stabilize;unstabilize, unstabilize;stabilize".into(),
        )),
    }
}

fn reduce_pullback(a: &PullbackArgs) -> Result<Outcome> {
    let to = interval_arg(&a.to)?;
    let f = FunctionDescription::parse(&a.function)?;
    let r = Arc::new(affine_reduction(to.clone())?);
    let pulled = pullback_tower(r.clone(), Arc::new(rectangle_tower(to)?));
    let native = rectangle_tower(Interval::unit())?;
    let unit = IntegrationProblem::with_functions(Interval::unit(), vec![f.clone()]);
    let vp = evaluate_tower(&pulled, &[a.n], &unit, &f)?;
    let vn = evaluate_tower(&native, &[a.n], &unit, &f)?;
    let exact_pair = vp.is_exact() && vn.is_exact();
    let diff = vp.abs_diff(&vn);
    let ok = if exact_pair { vp == vn } else { diff <= 1e-12 };
    outcome(
        json!({
            "reduction": r.name,
            "tower": pulled.name(),
            "n": a.n,
            "pulled_back": value_json(&vp),
            "native": value_json(&vn),
            "exact_comparison": exact_pair,
        }),
        vec![Check::new("stage_equals_native", ok, diff, Some(if exact_pair { 0.0 } else { 1e-12 }))],
    )
}
