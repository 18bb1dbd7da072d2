//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sci_workbench::catalog::{default_catalog, CatalogEntry};
use sci_workbench::certificates::{classify_heights, Clause, Tri};
use sci_workbench::integration::{
    self, adversary_bump, affine_reduction, affine_reduction_between, default_functions, rectangle_tower,
    FunctionDescription, IntegrationProblem, Interval, PointEval, RectangleRule,
};
use sci_workbench::koopman::{
    height0_algorithm, koopman_matrix, FiniteSpace, Grid, KoopmanProblem, MapTable, TargetKind,
};
use sci_workbench::lattice::{counterexample_demo, lower_bound_meet, upper_bound_join, DemoVerdict, FiniteProblem};
use sci_workbench::model::{evaluate_tower, run_algorithm, FnAlgorithm, GeneralAlgorithm, Problem, Step};
use sci_workbench::reductions::{
    compose, identity_reduction, pullback_tower, verify_reduction, DecoderClass, Reduction, VerifyConfig,
};
use sci_workbench::spectral::{
    self, decision_tower, stabilization_reductions, stabilized_problem, window_approximant, SpectralInput,
    SpectralQuery, SpectralSourceProblem, StabilizedQuery,
};
use sci_workbench::value::pow2;
use sci_workbench::{Rational, SciError, Value};

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog_intervals() -> Vec<Interval> {
    let mut seen = Vec::new();
    for e in default_catalog().integration() {
        if !e.degenerate && !seen.contains(&e.interval) {
            seen.push(e.interval.clone());
        }
    }
    seen
}

fn spectral_pairs() -> Vec<SpectralInput> {
    default_catalog().spectral().flat_map(|s| s.pairs.clone()).collect()
}

// 1. Quadrature convergence.
fn quadrature() -> Outcome {
    let start = Instant::now();
    let intervals = catalog_intervals();
    ensure(intervals.len() >= 5, || format!("only {} catalog intervals", intervals.len()))?;
    let functions = default_functions();
    ensure(functions.len() == 10, || format!("{} catalog functions", functions.len()))?;
    let mut cases = 0;
    let mut worst_ratio = 0.0f64;
    let mut sine_err = 0.0f64;
    for i in intervals.iter().take(5) {
        let p = IntegrationProblem::new(i.clone());
        let len = i.length();
        for f in &functions {
            let l = lipschitz(f, &i.a, &i.b);
            for e in 4..=12 {
                let n = 1usize << e;
                let (gamma, _) = run_algorithm(&RectangleRule::new(i.clone(), n).unwrap(), &p, f).map_err(|e| e.to_string())?;
                let bound = &l * &len * &len / q(2 * n as i64, 1);
                match f {
                    FunctionDescription::Sine { scale, freq } => {
                        let truth = sine_integral(scale, freq, &i.a, &i.b);
                        let err = (gamma.re_f64() - truth).abs();
                        ensure(err <= to_f(&bound) + 1e-12, || format!("{f} on {i}, n={n}: {err} > {bound}"))?;
                        if e == 12 {
                            sine_err = sine_err.max(err);
                            ensure(err <= 1e-3, || format!("{f} on {i}: error {err} at n=4096"))?;
                        }
                        if !bound.is_zero() {
                            worst_ratio = worst_ratio.max(err / to_f(&bound));
                        }
                    }
                    _ => {
                        let truth = boole_integral(f, &i.a, &i.b);
                        let err = (exact(&gamma) - truth).abs();
                        ensure(err <= bound, || format!("{f} on {i}, n={n}: {err} > {bound}"))?;
                        if !bound.is_zero() {
                            worst_ratio = worst_ratio.max(to_f(&(err / &bound)));
                        }
                    }
                }
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("runtime {elapsed:?} >= 5 s"))?;
    Ok(format!(
        "{cases} cases, max error/bound {worst_ratio:.4}, sine error at 2^12 {sine_err:.2e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

// 2. Adversary soundness.
fn protocols(qs: &[Rational]) -> Vec<FnAlgorithm<IntegrationProblem>> {
    let pts: Vec<PointEval> = qs.iter().cloned().map(PointEval).collect();
    let n = pts.len();
    let mean = FnAlgorithm::fixed("mean", pts.clone(), move |ans: &[Value]| {
        ans.iter().fold(Value::zero(), |s, v| s.add(v)).scale(&q(1, n as i64))
    });
    let weighted = FnAlgorithm::fixed("weighted", pts.clone(), |ans: &[Value]| {
        ans.iter()
            .enumerate()
            .fold(Value::zero(), |s, (i, v)| s.add(&v.scale(&q(1, i as i64 + 1))))
    });
    let p = pts.clone();
    let stop = FnAlgorithm::new("stop on nonzero", move |ans: &[Value]| {
        match ans.last() {
            Some(v) if !v.agrees(&Value::zero(), 0.0) => {
                if ans.len() > p.len() {
                    Step::Output(v.clone())
                } else {
                    Step::Query(PointEval(q(1, 2)))
                }
            }
            _ => match p.get(ans.len()) {
                Some(x) => Step::Query(x.clone()),
                None => Step::Output(Value::int(ans.len() as i64)),
            },
        }
    });
    let p = pts.clone();
    let branch = FnAlgorithm::new("branch", move |ans: &[Value]| {
        let i = ans.len();
        if i >= p.len() {
            return Step::Output(ans.last().cloned().unwrap_or_else(Value::zero));
        }
        match ans.last() {
            Some(v) if !v.agrees(&Value::zero(), 0.0) => Step::Query(p[p.len() - 1 - i].clone()),
            _ => Step::Query(p[i].clone()),
        }
    });
    let mut sorted = qs.to_vec();
    sorted.sort();
    sorted.dedup();
    let widths: Vec<Rational> = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| sorted.get(i + 1).cloned().unwrap_or_else(|| q(1, 1)) - x)
        .collect();
    let riemann = FnAlgorithm::fixed(
        "riemann",
        sorted.iter().cloned().map(PointEval).collect(),
        move |ans: &[Value]| {
            ans.iter()
                .zip(&widths)
                .fold(Value::zero(), |s, (v, w)| s.add(&v.scale(w)))
        },
    );
    vec![mean, weighted, stop, branch, riemann]
}

fn adversary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let zero = FunctionDescription::poly(vec![Rational::zero()]);
    let mut replays = 0;
    for set in 0..200 {
        let size = rng.gen_range(1..=50);
        let qs: Vec<Rational> = (0..size).map(|_| random_rational(&mut rng, &q(0, 1), &q(1, 1))).collect();
        let bump = adversary_bump(&qs);
        for x in &qs {
            ensure(tent(&bump.u, &bump.v, x).is_zero(), || format!("set {set}: h({x}) != 0"))?;
            ensure(exact(&bump.as_function().eval(x)).is_zero(), || format!("set {set}: library h({x}) != 0"))?;
        }
        let area = boole_integral(&bump.as_function(), &q(0, 1), &q(1, 1));
        ensure(area == (&bump.v - &bump.u) / q(2, 1) && area.is_positive(), || {
            format!("set {set}: integral {area} for bump on [{}, {}]", bump.u, bump.v)
        })?;
        ensure(bump.integral() == area, || format!("set {set}: gadget integral disagrees"))?;
        let h = bump.as_function();
        let p = IntegrationProblem::with_functions(Interval::unit(), vec![zero.clone(), h.clone()]);
        for alg in protocols(&qs) {
            let (o0, t0) = run_algorithm(&alg, &p, &zero).map_err(|e| e.to_string())?;
            // the gadget built from the protocol's own trace on 0
            let seen: Vec<Rational> = t0.queries().map(|x| x.0.clone()).collect();
            let g = adversary_bump(&seen).as_function();
            let pg = IntegrationProblem::with_functions(Interval::unit(), vec![zero.clone(), g.clone()]);
            for (prob, f) in [(&p, &h), (&pg, &g)] {
                let (o1, t1) = run_algorithm(&alg, prob, f).map_err(|e| e.to_string())?;
                ensure(o0 == o1 && t0 == t1, || format!("set {set}: protocol {} separates 0 from h", alg.name()))?;
            }
            replays += 1;
        }
    }
    Ok(format!("200 query sets, {replays} protocol replays identical"))
}

// 3. Reduction laws.
fn strict(report: &sci_workbench::reductions::VerificationReport) -> Result<(), String> {
    ensure(
        report.passed
            && report.samples == 100
            && report.target_failures == 0
            && report.query_failures == 0
            && report.plan_gaps == 0,
        || format!("{} failed: {:?}", report.reduction, report.failures),
    )
}

fn width_law<R: Problem, Q: Problem, P: Problem>(
    first: &Reduction<R, Q>,
    second: &Reduction<Q, P>,
    composite: &Reduction<R, P>,
    queries: &[P::Query],
) -> Result<usize, String> {
    for t in queries {
        let sim = second.plan.simulate(t).ok_or_else(|| format!("{} has no plan for {t}", second.name))?;
        let expected: usize = sim
            .sources()
            .iter()
            .map(|s| first.plan.width(s).ok_or_else(|| format!("{} has no plan for {s}", first.name)))
            .sum::<Result<usize, String>>()?;
        let got = composite.plan.width(t);
        ensure(got == Some(expected), || format!("width of {t}: {got:?} != {expected}"))?;
    }
    Ok(queries.len())
}

fn reduction_laws() -> Outcome {
    let cfg = VerifyConfig::default();
    let mut verified = 0;
    let intervals = catalog_intervals();
    let unit = Arc::new(IntegrationProblem::new(Interval::unit()));
    strict(&verify_reduction(&identity_reduction(unit.clone()), &cfg))?;
    for i in &intervals {
        strict(&verify_reduction(&identity_reduction(Arc::new(IntegrationProblem::new(i.clone()))), &cfg))?;
        strict(&verify_reduction(&affine_reduction(i.clone()).unwrap(), &cfg))?;
        verified += 2;
    }
    let source = Arc::new(spectral::source_problem(Interval::unit()).unwrap());
    strict(&verify_reduction(&identity_reduction(source.clone()), &cfg))?;
    let koop = Arc::new(KoopmanProblem::new(FiniteSpace::uniform(3).unwrap(), TargetKind::Ap));
    strict(&verify_reduction(&identity_reduction(koop), &cfg))?;
    let fin = Arc::new(sci_workbench::lattice::separating_problem());
    strict(&verify_reduction(&identity_reduction(fin), &cfg))?;
    verified += 4;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut widths = 0;
    let mut composites = 0;
    for a in &intervals {
        for b in &intervals {
            if a == b {
                continue;
            }
            let first = affine_reduction(a.clone()).unwrap();
            let second = affine_reduction_between(a.clone(), b.clone()).unwrap();
            strict(&verify_reduction(&second, &cfg))?;
            let c = compose(&first, &second).map_err(|e| e.to_string())?;
            strict(&verify_reduction(&c, &cfg))?;
            let mut qs = c.target.query_catalog();
            qs.extend((0..20).map(|_| PointEval(random_rational(&mut rng, &b.a, &b.b))));
            widths += width_law(&first, &second, &c, &qs)?;
            let id = identity_reduction(c.target.clone());
            let c2 = compose(&c, &id).map_err(|e| e.to_string())?;
            strict(&verify_reduction(&c2, &cfg))?;
            widths += width_law(&c, &id, &c2, &qs)?;
            composites += 2;
            verified += 1;
        }
    }
    let stab = default_catalog().spectral().next().unwrap().stabilizers.clone();
    for b in &stab {
        let (fwd, bwd) = stabilization_reductions(source.clone(), b).unwrap();
        let there_and_back = compose(&fwd, &bwd).map_err(|e| e.to_string())?;
        strict(&verify_reduction(&there_and_back, &cfg))?;
        let src_qs: Vec<SpectralQuery> = (1..=6)
            .flat_map(|i| (1..=6).map(move |j| SpectralQuery::Mu(i, j)))
            .chain((1..=8).map(SpectralQuery::Rho))
            .collect();
        widths += width_law(&fwd, &bwd, &there_and_back, &src_qs)?;
        let back_and_forth = compose(&bwd, &fwd).map_err(|e| e.to_string())?;
        strict(&verify_reduction(&back_and_forth, &cfg))?;
        let mut stab_qs = vec![];
        for i in 1..=4 {
            for j in 1..=4 {
                for r in 1..=2u8 {
                    for s in 1..=2u8 {
                        stab_qs.push(StabilizedQuery::Nu { row: (i, r), col: (j, s) });
                    }
                }
            }
        }
        stab_qs.extend((1..=8).map(StabilizedQuery::RhoB));
        widths += width_law(&bwd, &fwd, &back_and_forth, &stab_qs)?;
        composites += 2;
    }
    Ok(format!(
        "{verified} identity/affine reductions and {composites} composites verified, width law on {widths} queries"
    ))
}

// 4. Pullback identity.
fn pullback_identity() -> Outcome {
    let unit = IntegrationProblem::new(Interval::unit());
    let native = rectangle_tower(Interval::unit()).unwrap();
    let stages: Vec<usize> = (1..=64).chain([100, 128, 256, 512, 1024]).collect();
    let mut exact_cases = 0;
    let mut approx_cases = 0;
    let mut worst = 0.0f64;
    for i in catalog_intervals() {
        let r = Arc::new(affine_reduction(i.clone()).unwrap());
        let pulled = pullback_tower(r, Arc::new(rectangle_tower(i.clone()).unwrap()));
        for f in default_functions() {
            for &n in &stages {
                let a = evaluate_tower(&pulled, &[n], &unit, &f).map_err(|e| e.to_string())?;
                let b = evaluate_tower(&native, &[n], &unit, &f).map_err(|e| e.to_string())?;
                if f.is_rational() {
                    ensure(a == b, || format!("{f} along {i}, n={n}: {a} != {b}"))?;
                    if n <= 16 {
                        // native stage against a direct left-endpoint sum
                        let direct: Rational = (0..n)
                            .map(|j| exact(&f.eval(&q(j as i64, n as i64))))
                            .fold(Rational::zero(), |s, v| s + v)
                            / q(n as i64, 1);
                        ensure(exact(&b) == direct, || format!("native stage {n} on {f} is not the rectangle sum"))?;
                    }
                    exact_cases += 1;
                } else {
                    let d = a.abs_diff(&b);
                    worst = worst.max(d);
                    ensure(d <= 1e-12, || format!("{f} along {i}, n={n}: |diff| = {d}"))?;
                    approx_cases += 1;
                }
            }
        }
    }
    Ok(format!(
        "{exact_cases} exact stage matches, {approx_cases} floating matches (max diff {worst:.1e})"
    ))
}

// 5. Spectral tower against the oracle.
fn spectral_tower() -> Outcome {
    let pairs = spectral_pairs();
    ensure(pairs.len() >= 30, || format!("only {} catalog pairs", pairs.len()))?;
    let tower = decision_tower();
    let domain = pairs[0].window.domain.clone();
    let problem = SpectralSourceProblem::new(domain, pairs.clone()).map_err(|e| e.to_string())?;
    let mut probes = 0;
    for inp in &pairs {
        let (a, z) = (&inp.operator, &inp.window.z);
        let delta = closure_distance(a, z);
        let truth = u8::from(delta.is_positive());
        let oracle = spectral::exact_decision_oracle(a, &inp.window).map_err(|e| e.to_string())?;
        ensure(oracle == truth, || format!("oracle {oracle} != closure distance verdict {truth} on {a} at {z}"))?;
        let mut stages = Vec::new();
        if truth == 1 {
            let mut n2 = 1usize;
            while q(5, 1) * pow2(-(n2 as i64 + 2)) >= delta {
                n2 += 1;
            }
            for m in [n2, n2 + 1, n2 + 3] {
                for n1 in [1, 2, 7, 40] {
                    stages.push((m, n1));
                }
            }
        } else {
            for n2 in 1..=5usize {
                let eps = q(3, 1) * pow2(-(n2 as i64 + 2));
                let n1 = (1..=1_000_000)
                    .find(|&j| (a.entry(j) - z).abs() <= eps)
                    .ok_or_else(|| format!("no entry of {a} within {eps} of {z}"))?;
                stages.push((n2, n1));
                stages.push((n2, n1 + 5));
            }
        }
        for (n2, n1) in stages {
            let v = evaluate_tower(&tower, &[n2, n1], &problem, inp).map_err(|e| e.to_string())?;
            ensure(v == truth, || format!("stage ({n2},{n1}) on {a} at {z}: {v} != {truth}"))?;
            probes += 1;
        }
        for n in 1..=20usize {
            let scale = pow2(n as i64 + 2);
            let r = Rational::from_integer((z * &scale).floor().to_integer()) / &scale;
            let w = window_approximant(&inp.window, n).map_err(|e| e.to_string())?;
            ensure(w.r == r, || format!("r_{n}({z}) = {} != {r}", w.r))?;
            ensure((&r - z).abs() < pow2(-(n as i64 + 2)), || format!("dyadic bound fails at z={z}, n={n}"))?;
        }
    }
    Ok(format!("{} pairs, {probes} stage probes agree, dyadic bound for n <= 20", pairs.len()))
}

// 6. Stabilization invariance.
fn stabilization() -> Outcome {
    let entry = default_catalog().spectral().next().unwrap().clone();
    let source = Arc::new(SpectralSourceProblem::new(entry.domain.clone(), entry.pairs.clone()).map_err(|e| e.to_string())?);
    let diagonals: BTreeSet<String> = entry.pairs.iter().map(|p| p.operator.to_string()).collect();
    let cfg = VerifyConfig {
        tol: 0.0,
        ..VerifyConfig::default()
    };
    let mut combos = BTreeSet::new();
    let mut checks = 0;
    for b in &entry.stabilizers {
        ensure(b.margin.is_positive(), || format!("stabilizer {} has no margin", b.operator))?;
        let stab = stabilized_problem(&source, b).map_err(|e| e.to_string())?;
        let (fwd, bwd) = stabilization_reductions(source.clone(), b).map_err(|e| e.to_string())?;
        for r in [verify_reduction(&fwd, &cfg), verify_reduction(&bwd, &cfg)] {
            ensure(r.passed && r.max_discrepancy == 0.0, || format!("{} failed: {:?}", r.reduction, r.failures))?;
        }
        for a in &entry.pairs {
            let e = fwd.encode(a);
            let src = source.target(a).map_err(|e| e.to_string())?;
            let st = stab.target(&e).map_err(|e| e.to_string())?;
            let union = closure_distance(&a.operator, &a.window.z).min(closure_distance(&b.operator, &a.window.z));
            ensure(src == st && st == u8::from(union.is_positive()), || {
                format!("Ξ differs on {} ⊕ {} at {}", a.operator, b.operator, a.window.z)
            })?;
            ensure(bwd.encode(&e) == *a, || format!("round trip fails on {}", a.operator))?;
            combos.insert((a.operator.to_string(), b.operator.to_string()));
            checks += 1;
        }
    }
    ensure(combos.len() >= 60, || format!("only {} diagonal × stabilizer combinations", combos.len()))?;
    Ok(format!(
        "{} diagonals × {} stabilizers = {} combinations, {checks} window checks, both reductions exact",
        diagonals.len(),
        entry.stabilizers.len(),
        combos.len()
    ))
}

// 7. Koopman collapse.
fn koopman() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let spaces: Vec<FiniteSpace> = (1..=4)
        .map(|n| FiniteSpace::uniform(n).unwrap())
        .chain([FiniteSpace::new(vec![q(1, 1), q(2, 1), q(1, 2)]).unwrap()])
        .collect();
    for space in &spaces {
        let n = space.size();
        let problem = KoopmanProblem::new(space.clone(), TargetKind::Ap);
        let alg = height0_algorithm(space, TargetKind::Ap).map_err(|e| e.to_string())?.algorithm();
        let maps = MapTable::all(n);
        ensure(maps.len() == n.pow(n as u32), || format!("{} maps for N={n}", maps.len()))?;
        for f in maps {
            let (out, trace) = run_algorithm(&alg, &problem, &f).map_err(|e| e.to_string())?;
            ensure(trace.len() == n, || format!("{f}: {} queries", trace.len()))?;
            let images: Vec<usize> = (0..n).map(|i| f.image(i)).collect();
            let truth = koopman_spectrum_oracle(&images);
            let d = hausdorff_points(&out.points, &truth);
            ensure(d == 0.0, || format!("{f}: d_H = {d}"))?;
            let d = hausdorff_points(&problem.target(&f).unwrap().points, &truth);
            ensure(d == 0.0, || format!("{f}: target oracle d_H = {d}"))?;
            cases += 1;
        }
    }
    ensure(cases >= 256 + 27 + 4 + 1, || format!("{cases} cases"))?;

    let space = FiniteSpace::uniform(2).unwrap();
    let swap = MapTable::from_one_based(&[2, 1]).unwrap();
    let eps = 0.25;
    let grid = Grid {
        re: (-1.5, 1.5),
        im: (-0.5, 0.5),
        spacing: 0.025,
    };
    let kind = TargetKind::ApEps { eps, grid };
    let problem = KoopmanProblem::new(space.clone(), kind);
    let alg = height0_algorithm(&space, kind).map_err(|e| e.to_string())?.algorithm();
    let (set, trace) = run_algorithm(&alg, &problem, &swap).map_err(|e| e.to_string())?;
    ensure(trace.len() == 2, || format!("swap used {} queries", trace.len()))?;
    ensure(koopman_matrix(&space, &swap).is_ok(), || "swap matrix".into())?;
    let centers = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
    let d = hausdorff_disk_union(&set.points, &centers, eps);
    ensure(d <= grid.spacing, || format!("swap σ_ap,ε: d_H = {d} > {}", grid.spacing))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("runtime {elapsed:?} >= 30 s"))?;
    Ok(format!(
        "{cases} maps with d_H = 0 and N queries, swap ε-disk d_H = {d:.4} <= {}, {:.2} s",
        grid.spacing,
        elapsed.as_secs_f64()
    ))
}

// 8. Classifier truth table.
fn multisets(max_len: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    let mut frontier: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for m in &frontier {
            let lo = m.last().copied().unwrap_or(0);
            for h in lo..=3 {
                let mut v = m.clone();
                v.push(h);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn classifier() -> Outcome {
    let mut rows = 0;
    for hs in multisets(4) {
        for k in 0..=3 {
            if hs.is_empty() {
                ensure(matches!(classify_heights(&hs, k), Err(SciError::EmptyFamily)), || "empty family accepted".into())?;
                continue;
            }
            let v = classify_heights(&hs, k).map_err(|e| e.to_string())?;
            let (pw, ws, wc) = sharpness_oracle(&hs, k);
            ensure(
                v.pointwise_exact == Tri::from(pw) && v.witness_sharp == Tri::from(ws) && v.worst_case_exact == Tri::from(wc),
                || format!("{hs:?}, k={k}: got {v}, expected ({pw},{ws},{wc})"),
            )?;
            ensure(ws == wc, || format!("{hs:?}, k={k}: witness-sharp and worst-case exact disagree"))?;
            rows += 1;
        }
    }
    Ok(format!("{rows} (multiset, k) rows agree with brute force"))
}

// 9. Certificate engine.
fn certificates() -> Outcome {
    let cfg = VerifyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut intervals = catalog_intervals();
    for _ in 0..5 {
        let a = random_rational(&mut rng, &q(-3, 1), &q(3, 1));
        let b = &a + random_rational(&mut rng, &q(1, 100), &q(4, 1));
        intervals.push(Interval::new(a, b).unwrap());
    }
    let entry = default_catalog().spectral().next().unwrap().clone();
    let packages = [
        (1u32, integration::package_inputs(&intervals, &cfg).map_err(|e| e.to_string())?),
        (2u32, spectral::package_inputs(&entry.domain, &entry.stabilizers, &cfg).map_err(|e| e.to_string())?),
    ];
    let mut removals = 0;
    for (k, inputs) in &packages {
        let out = inputs.run().map_err(|e| e.to_string())?;
        ensure(out.certificates.len() == inputs.members.len(), || "a member lost its certificate".into())?;
        for c in &out.certificates {
            ensure(c.exact_value() == Some(*k), || format!("{} certified {} instead of exact {k}", c.problem, c.interval))?;
        }
        ensure(out.verdict.pointwise_exact == Tri::True, || format!("verdict {}", out.verdict))?;
        for clause in [Clause::C1, Clause::C2, Clause::C3] {
            for m in 0..inputs.members.len() {
                match inputs.without(clause, m).run() {
                    Err(SciError::MissingClause { clause: got, .. }) if got == clause => removals += 1,
                    other => return Err(format!("dropping {clause} for member {m}: {other:?}")),
                }
            }
        }
    }
    Ok(format!(
        "{} intervals exact at 1, {} stabilizers exact at 2, {removals} clause removals reported",
        packages[0].1.members.len(),
        packages[1].1.members.len()
    ))
}

// 10. Join, meet and the counterexample.
enum Member {
    Int(Arc<IntegrationProblem>),
    Spec(Arc<SpectralSourceProblem>),
    Koop(Arc<KoopmanProblem>),
    Finite(Arc<FiniteProblem>),
}

macro_rules! with_member {
    ($m:expr, $p:ident => $body:expr) => {
        match $m {
            Member::Int($p) => $body,
            Member::Spec($p) => $body,
            Member::Koop($p) => $body,
            Member::Finite($p) => $body,
        }
    };
}

fn member_pool() -> Vec<Member> {
    let mut pool = Vec::new();
    for e in default_catalog().entries {
        match e {
            CatalogEntry::Integration(i) if !i.degenerate => {
                pool.push(Member::Int(Arc::new(IntegrationProblem::with_functions(i.interval, i.functions))))
            }
            CatalogEntry::Spectral(s) => {
                pool.push(Member::Spec(Arc::new(SpectralSourceProblem::new(s.domain, s.pairs).unwrap())))
            }
            CatalogEntry::Koopman(k) => {
                let p = match k.maps {
                    Some(maps) => KoopmanProblem::with_catalog(k.space, TargetKind::Ap, maps),
                    None => KoopmanProblem::new(k.space, TargetKind::Ap),
                };
                pool.push(Member::Koop(Arc::new(p)))
            }
            CatalogEntry::Finite(f) if !f.queries.is_empty() && !f.inputs.is_empty() => {
                pool.push(Member::Finite(Arc::new(f)))
            }
            _ => {}
        }
    }
    pool
}

fn check_pair<P0: Problem, P1: Problem>(p0: Arc<P0>, p1: Arc<P1>, cfg: &VerifyConfig) -> Result<String, String> {
    let join = upper_bound_join(p0.clone(), p1.clone()).map_err(|e| e.to_string())?;
    let meet = lower_bound_meet(p0.clone(), p1.clone()).map_err(|e| e.to_string())?;
    let reports = [
        verify_reduction(&join.from_left, cfg),
        verify_reduction(&join.from_right, cfg),
        verify_reduction(&meet.into_left, cfg),
        verify_reduction(&meet.into_right, cfg),
    ];
    for r in &reports {
        ensure(r.passed, || format!("{} failed: {:?}", r.reduction, r.failures))?;
    }
    ensure(join.from_left.decoder.class() == DecoderClass::Cont, || "join decoder class".into())?;
    Ok(format!("{} ∨ {}", p0.id(), p1.id()))
}

fn lattice() -> Outcome {
    let pool = member_pool();
    ensure(pool.len() >= 4, || format!("pool of {}", pool.len()))?;
    let cfg = VerifyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut kinds = BTreeSet::new();
    for _ in 0..20 {
        let (i, j) = (rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
        let label = with_member!(&pool[i], a => with_member!(&pool[j], b => check_pair(a.clone(), b.clone(), &cfg)))?;
        kinds.insert(label);
    }
    for class in [DecoderClass::Cont, DecoderClass::Bor] {
        let r = counterexample_demo(class);
        ensure(r.verdict == DemoVerdict::Infeasible && r.all_checks_passed(), || format!("{class}: {:?}", r.checks))?;
        ensure(r == counterexample_demo(class), || format!("{class} demo is not deterministic"))?;
    }
    let r = counterexample_demo(DecoderClass::Id);
    ensure(r.verdict == DemoVerdict::CarrierClash && r.all_checks_passed(), || format!("Id: {:?}", r.checks))?;
    ensure(r == counterexample_demo(DecoderClass::Id), || "Id demo is not deterministic".into())?;
    Ok(format!(
        "20 random pairs ({} distinct) verify join and meet, Cont/Bor infeasible, Id carrier clash",
        kinds.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quadrature convergence", quadrature),
        ("adversary soundness", adversary),
        ("reduction laws", reduction_laws),
        ("pullback identity", pullback_identity),
        ("spectral tower vs oracle", spectral_tower),
        ("stabilization invariance", stabilization),
        ("koopman collapse", koopman),
        ("classifier truth table", classifier),
        ("certificate engine", certificates),
        ("join, meet and counterexample", lattice),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1)
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
