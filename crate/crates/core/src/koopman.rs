//! Koopman operators of self-maps of a finite weighted space.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Result, SciError};
use crate::model::{finite_query_factorization, FactorizedTower, Problem};
use crate::value::{serde_rational, to_f64, Rational, Value};

/// `X = {x_1, ..., x_N}` with positive point weights, coded by `ι(x_i) = i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSpace {
    #[serde(with = "serde_rational::vec")]
    weights: Vec<Rational>,
}

impl FiniteSpace {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SciError::invalid("a finite space needs at least one point"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
            return Err(SciError::invalid(format!("weights must be positive, got {w}")));
        }
        Ok(FiniteSpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        FiniteSpace::new(vec![Rational::from_integer(1.into()); n])
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(to_f64).collect()
    }
}

/// A self-map `F`, stored 0-based; displayed and parsed 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapTable(Vec<usize>);

impl MapTable {
    /// From 1-based images `F(1), ..., F(N)`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(SciError::invalid("empty map table"));
        }
        if let Some(&bad) = images.iter().find(|&&v| v == 0 || v > n) {
            return Err(SciError::invalid(format!("map value {bad} outside 1..={n}")));
        }
        Ok(MapTable(images.iter().map(|v| v - 1).collect()))
    }

    pub fn identity(n: usize) -> Self {
        MapTable((0..n).collect())
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    /// 0-based image of the 0-based point `i`.
    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    /// Every map of an `n`-point space, in lexicographic order.
    pub fn all(n: usize) -> Vec<MapTable> {
        let total = n.pow(n as u32);
        (0..total)
            .map(|mut code| {
                let mut t = vec![0; n];
                for slot in t.iter_mut().rev() {
                    *slot = code % n;
                    code /= n;
                }
                MapTable(t)
            })
            .collect()
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> MapTable {
        MapTable((0..n).map(|_| rng.gen_range(0..n)).collect())
    }
}

impl fmt::Display for MapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl Serialize for MapTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

/// The row-selection matrix `M[i, F(i)] = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoopmanMatrix {
    map: MapTable,
}

pub fn koopman_matrix(space: &FiniteSpace, table: &MapTable) -> Result<KoopmanMatrix> {
    if table.size() != space.size() {
        return Err(SciError::invalid(format!(
            "map on {} points for a space of {} points",
            table.size(),
            space.size()
        )));
    }
    Ok(KoopmanMatrix { map: table.clone() })
}

impl KoopmanMatrix {
    pub fn size(&self) -> usize {
        self.map.size()
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        u8::from(self.map.image(i) == j)
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// Exact spectrum from the cycle structure of `F`: every cycle of length `L`
    /// contributes the `L`-th roots of unity, and any point off the cycles contributes 0.
    pub fn exact_spectrum(&self) -> ExactSpectrum {
        let n = self.size();
        let mut on_cycle = vec![false; n];
        let mut lengths = BTreeSet::new();
        let mut state = vec![0u8; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut x = start;
            while state[x] == 0 {
                state[x] = 1;
                path.push(x);
                x = self.map.image(x);
            }
            if state[x] == 1 {
                let pos = path.iter().position(|&p| p == x).expect("x on current path");
                for &p in &path[pos..] {
                    on_cycle[p] = true;
                }
                lengths.insert(path.len() - pos);
            }
            for p in path {
                state[p] = 2;
            }
        }
        let mut roots = BTreeSet::new();
        for &l in &lengths {
            for k in 0..l {
                let g = k.gcd(&l);
                roots.insert(Root {
                    k: (k / g) as u32,
                    l: (l / g) as u32,
                });
            }
        }
        ExactSpectrum {
            zero: on_cycle.iter().any(|c| !c),
            roots,
        }
    }
}

/// `e^{2πi k/l}` with `k/l` in lowest terms, `0 <= k < l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Root {
    pub k: u32,
    pub l: u32,
}

impl Root {
    pub fn point(&self) -> Complex64 {
        match (self.k, self.l) {
            (0, 1) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            (k, l) => {
                let t = TAU * k as f64 / l as f64;
                Complex64::new(t.cos(), t.sin())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactSpectrum {
    pub zero: bool,
    pub roots: BTreeSet<Root>,
}

impl ExactSpectrum {
    /// Points in canonical order: 0 first, then roots by increasing angle.
    pub fn points(&self) -> Vec<Complex64> {
        let mut roots: Vec<&Root> = self.roots.iter().collect();
        roots.sort_by(|a, b| (a.k as u64 * b.l as u64).cmp(&(b.k as u64 * a.l as u64)));
        let mut pts = Vec::new();
        if self.zero {
            pts.push(Complex64::new(0.0, 0.0));
        }
        pts.extend(roots.iter().map(|r| r.point()));
        pts
    }
}

/// A finite point sample standing for a nonempty compact subset of ℂ.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSetApprox {
    pub points: Vec<Complex64>,
    pub resolution: f64,
}

impl Serialize for CompactSetApprox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let pts: Vec<(f64, f64)> = self.points.iter().map(|z| (z.re, z.im)).collect();
        let mut st = s.serialize_struct("CompactSetApprox", 2)?;
        st.serialize_field("points", &pts)?;
        st.serialize_field("resolution", &self.resolution)?;
        st.end()
    }
}

/// Smallest singular value of `W^{1/2} (M - zI) W^{-1/2}`.
pub fn sigma_inf(m: &KoopmanMatrix, z: Complex64, space: &FiniteSpace) -> f64 {
    let n = m.size();
    let w = space.weights_f64();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let base = Complex64::new(m.entry(i, j) as f64, 0.0) - if i == j { z } else { Complex64::new(0.0, 0.0) };
        base * (w[i] / w[j]).sqrt()
    });
    a.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `σ_ap(K_F)`: in finite dimension, the set of eigenvalues.
pub fn sigma_ap(m: &KoopmanMatrix) -> CompactSetApprox {
    CompactSetApprox {
        points: m.exact_spectrum().points(),
        resolution: 0.0,
    }
}

/// Rectangular sampling grid `{re0 + a h} × {im0 + b h}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub spacing: f64,
}

impl Grid {
    fn steps(&self) -> (usize, usize) {
        let steps = |lo: f64, hi: f64| ((hi - lo) / self.spacing + 1e-9).floor() as usize;
        (steps(self.re.0, self.re.1), steps(self.im.0, self.im.1))
    }

    fn at(&self, a: usize, b: usize) -> Complex64 {
        Complex64::new(self.re.0 + a as f64 * self.spacing, self.im.0 + b as f64 * self.spacing)
    }

    pub fn points(&self) -> Vec<Complex64> {
        let (nr, ni) = self.steps();
        let mut pts = Vec::with_capacity((nr + 1) * (ni + 1));
        for a in 0..=nr {
            for b in 0..=ni {
                pts.push(self.at(a, b));
            }
        }
        pts
    }
}

const BISECTION_STEPS: usize = 40;

/// Grid sample of `σ_ap,ε = {z : σ_inf(z) <= ε}`, with the eigenvalues added and
/// the boundary located by bisection on every grid edge that crosses it.
pub fn sigma_ap_eps(m: &KoopmanMatrix, eps: f64, grid: &Grid, space: &FiniteSpace) -> Result<CompactSetApprox> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(SciError::invalid("epsilon must be positive"));
    }
    if grid.spacing.is_nan() || grid.spacing <= 0.0 || grid.spacing > eps / 4.0 {
        return Err(SciError::GridTooCoarse(format!(
            "spacing {} exceeds epsilon/4 = {}",
            grid.spacing,
            eps / 4.0
        )));
    }
    let eigen = sigma_ap(m).points;
    for z in &eigen {
        let covered = grid.re.0 <= z.re - eps
            && z.re + eps <= grid.re.1
            && grid.im.0 <= z.im - eps
            && z.im + eps <= grid.im.1;
        if !covered {
            return Err(SciError::GridTooCoarse(format!(
                "grid does not cover the eigenvalue {z} with an epsilon margin"
            )));
        }
    }
    let (nr, ni) = grid.steps();
    let inside: Vec<Vec<bool>> = (0..=nr)
        .map(|a| (0..=ni).map(|b| sigma_inf(m, grid.at(a, b), space) <= eps).collect())
        .collect();
    let mut points = eigen;
    for a in 0..=nr {
        for b in 0..=ni {
            if inside[a][b] {
                points.push(grid.at(a, b));
            }
        }
    }
    // Each grid edge that crosses the boundary contributes an inside point
    // bisected onto the boundary.
    let mut edges = Vec::new();
    for a in 0..=nr {
        for b in 0..=ni {
            if a < nr && inside[a][b] != inside[a + 1][b] {
                edges.push(((a, b), (a + 1, b)));
            }
            if b < ni && inside[a][b] != inside[a][b + 1] {
                edges.push(((a, b), (a, b + 1)));
            }
        }
    }
    for (p, q) in edges {
        let (mut lo, mut hi) = if inside[p.0][p.1] {
            (grid.at(p.0, p.1), grid.at(q.0, q.1))
        } else {
            (grid.at(q.0, q.1), grid.at(p.0, p.1))
        };
        for _ in 0..BISECTION_STEPS {
            let mid = (lo + hi) / 2.0;
            if sigma_inf(m, mid, space) <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        points.push(lo);
    }
    Ok(CompactSetApprox {
        points,
        resolution: grid.spacing,
    })
}

fn directed(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff(a: &CompactSetApprox, b: &CompactSetApprox) -> Result<f64> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(SciError::EmptySet);
    }
    Ok(directed(&a.points, &b.points).max(directed(&b.points, &a.points)))
}

/// Hausdorff distance from a sample to the union of closed `r`-disks about
/// `centers`. The disks are sampled on a polar grid of `rings × rays` points.
pub fn hausdorff_to_disks(
    set: &CompactSetApprox,
    centers: &[Complex64],
    r: f64,
    rings: usize,
    rays: usize,
) -> Result<f64> {
    if set.points.is_empty() || centers.is_empty() {
        return Err(SciError::EmptySet);
    }
    let outside = set
        .points
        .iter()
        .map(|p| {
            let d = centers.iter().map(|c| (p - c).norm()).fold(f64::INFINITY, f64::min);
            (d - r).max(0.0)
        })
        .fold(0.0, f64::max);
    let mut disk = Vec::with_capacity(centers.len() * (rings * rays + 1));
    for c in centers {
        disk.push(*c);
        for i in 1..=rings {
            let rho = r * i as f64 / rings as f64;
            for j in 0..rays {
                disk.push(c + Complex64::from_polar(rho, TAU * j as f64 / rays as f64));
            }
        }
    }
    Ok(outside.max(directed(&disk, &set.points)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Ap,
    ApEps { eps: f64, grid: Grid },
}

impl TargetKind {
    fn compute(&self, m: &KoopmanMatrix, space: &FiniteSpace) -> Result<CompactSetApprox> {
        match self {
            TargetKind::Ap => Ok(sigma_ap(m)),
            TargetKind::ApEps { eps, grid } => sigma_ap_eps(m, *eps, grid, space),
        }
    }
}

/// `ev_{x_i}`, returning `ι(F(x_i)) = F(i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PointQuery(pub usize);

impl fmt::Display for PointQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ev_{{x_{}}}", self.0)
    }
}

/// `F -> σ_ap(K_F)` (or its ε-relaxation) over self-maps of a finite space.
#[derive(Clone, Debug)]
pub struct KoopmanProblem {
    space: FiniteSpace,
    kind: TargetKind,
    catalog: Vec<MapTable>,
}

/// Exhaustive catalogs up to this many maps; a seeded sample beyond.
const EXHAUSTIVE_LIMIT: usize = 256;
const SAMPLED_MAPS: usize = 100;

impl KoopmanProblem {
    pub fn new(space: FiniteSpace, kind: TargetKind) -> Self {
        let n = space.size();
        let catalog = if (n as f64).powi(n as i32) <= EXHAUSTIVE_LIMIT as f64 {
            MapTable::all(n)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..SAMPLED_MAPS).map(|_| MapTable::random(n, &mut rng)).collect()
        };
        KoopmanProblem { space, kind, catalog }
    }

    pub fn with_catalog(space: FiniteSpace, kind: TargetKind, catalog: Vec<MapTable>) -> Self {
        KoopmanProblem { space, kind, catalog }
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }
}

impl Problem for KoopmanProblem {
    type Input = MapTable;
    type Output = CompactSetApprox;
    type Query = PointQuery;

    fn id(&self) -> String {
        let kind = match self.kind {
            TargetKind::Ap => "ap".to_string(),
            TargetKind::ApEps { eps, .. } => format!("ap,{eps}"),
        };
        format!("koopman[N={};{kind}]", self.space.size())
    }

    fn output_space(&self) -> String {
        "M_H(C)".into()
    }

    fn catalog(&self) -> Vec<MapTable> {
        self.catalog.clone()
    }

    fn query_catalog(&self) -> Vec<PointQuery> {
        (1..=self.space.size()).map(PointQuery).collect()
    }

    fn target(&self, f: &MapTable) -> Result<CompactSetApprox> {
        self.kind.compute(&koopman_matrix(&self.space, f)?, &self.space)
    }

    fn distance(&self, a: &CompactSetApprox, b: &CompactSetApprox) -> f64 {
        hausdorff(a, b).unwrap_or(f64::INFINITY)
    }

    fn evaluate(&self, q: &PointQuery, f: &MapTable) -> Result<Value> {
        if q.0 == 0 || q.0 > self.space.size() {
            return Err(SciError::UnknownQuery(q.to_string()));
        }
        Ok(Value::int(f.image(q.0 - 1) as i64 + 1))
    }

    fn admits(&self, f: &MapTable) -> Result<()> {
        koopman_matrix(&self.space, f).map(|_| ())
    }
}

/// Height-0 tower: ask `ev_{x_1}, ..., ev_{x_N}`, rebuild `F`, compute the target.
pub fn height0_algorithm(space: &FiniteSpace, kind: TargetKind) -> Result<FactorizedTower<KoopmanProblem>> {
    let problem = KoopmanProblem::new(space.clone(), kind);
    let n = space.size();
    let sp = space.clone();
    let table = Arc::new(move |answers: &[Value]| {
        let images: Option<Vec<usize>> = answers.iter().map(Value::as_index).collect();
        images
            .and_then(|im| MapTable::from_one_based(&im).ok())
            .and_then(|f| koopman_matrix(&sp, &f).ok())
            .and_then(|m| kind.compute(&m, &sp).ok())
            .unwrap_or(CompactSetApprox {
                points: vec![Complex64::new(f64::NAN, f64::NAN)],
                resolution: f64::NAN,
            })
    });
    finite_query_factorization(&problem, (1..=n).map(PointQuery).collect(), table)
}
