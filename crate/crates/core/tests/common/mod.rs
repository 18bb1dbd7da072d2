#![allow(dead_code)]

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use sci_workbench::integration::FunctionDescription;
use sci_workbench::spectral::DiagonalSpec;
use sci_workbench::{Rational, Value};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn exact(v: &Value) -> Rational {
    v.as_rational().expect("exact real value").clone()
}

/// Random rational `p/d` in `[lo, hi]` with `d <= 1000`.
pub fn random_rational(rng: &mut impl Rng, lo: &Rational, hi: &Rational) -> Rational {
    let d: i64 = rng.gen_range(1..=1000);
    let t = q(rng.gen_range(0..=d), d);
    lo + (hi - lo) * t
}

/// Kinks of a piecewise polynomial catalog function.
fn breakpoints(f: &FunctionDescription) -> Vec<Rational> {
    match f {
        FunctionDescription::Polynomial { .. } | FunctionDescription::Sine { .. } => vec![],
        FunctionDescription::Bump { u, v } => vec![u.clone(), (u + v) / q(2, 1), v.clone()],
        FunctionDescription::AffinePrecomposed { slope, shift, base, .. } => breakpoints(base)
            .into_iter()
            .map(|k| (k - shift) / slope)
            .collect(),
    }
}

fn degree(f: &FunctionDescription) -> usize {
    match f {
        FunctionDescription::Polynomial { coeffs } => coeffs.len().saturating_sub(1),
        FunctionDescription::Bump { .. } => 1,
        FunctionDescription::AffinePrecomposed { base, .. } => degree(base),
        FunctionDescription::Sine { .. } => usize::MAX,
    }
}

/// Exact integral of a piecewise polynomial of degree at most 5 by Boole's rule
/// on every piece between kinks.
pub fn boole_integral(f: &FunctionDescription, c: &Rational, d: &Rational) -> Rational {
    assert!(degree(f) <= 5, "Boole's rule is exact only up to degree 5");
    let mut cuts = vec![c.clone()];
    let mut kinks: Vec<Rational> = breakpoints(f).into_iter().filter(|k| c < k && k < d).collect();
    kinks.sort();
    cuts.extend(kinks);
    cuts.push(d.clone());
    let weights = [7, 32, 12, 32, 7];
    let mut total = Rational::zero();
    for w in cuts.windows(2) {
        let h = (&w[1] - &w[0]) / q(4, 1);
        let mut s = Rational::zero();
        for (i, wt) in weights.iter().enumerate() {
            let x = &w[0] + &h * q(i as i64, 1);
            s += exact(&f.eval(&x)) * q(*wt, 1);
        }
        total += s * (&w[1] - &w[0]) / q(90, 1);
    }
    total
}

/// Closed form for `s sin(w x)` on `[c, d]`.
pub fn sine_integral(s: &Rational, w: &Rational, c: &Rational, d: &Rational) -> f64 {
    let (s, w, c, d) = (to_f(s), to_f(w), to_f(c), to_f(d));
    s * ((w * c).cos() - (w * d).cos()) / w
}

pub fn to_f(x: &Rational) -> f64 {
    x.to_f64().expect("finite")
}

/// Exact Lipschitz bound on `[c, d]` for catalog functions with rational data.
pub fn lipschitz(f: &FunctionDescription, c: &Rational, d: &Rational) -> Rational {
    match f {
        FunctionDescription::Polynomial { coeffs } => {
            let m = c.abs().max(d.abs());
            let mut l = Rational::zero();
            let mut pow = q(1, 1);
            for (k, ck) in coeffs.iter().enumerate().skip(1) {
                l += ck.abs() * q(k as i64, 1) * &pow;
                pow *= &m;
            }
            l
        }
        FunctionDescription::Sine { scale, freq } => (scale * freq).abs(),
        FunctionDescription::Bump { u, v } => q(2, 1) / (v - u),
        FunctionDescription::AffinePrecomposed {
            scale,
            slope,
            shift,
            base,
        } => {
            let (x, y) = (slope * c + shift, slope * d + shift);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            (scale * slope).abs() * lipschitz(base, &lo, &hi)
        }
    }
}

/// `max(0, 1 - |x - m| / r)` for the tent on `[u, v]`.
pub fn tent(u: &Rational, v: &Rational, x: &Rational) -> Rational {
    let m = (u + v) / q(2, 1);
    let r = (v - u) / q(2, 1);
    let t = q(1, 1) - (x - &m).abs() / r;
    if t.is_negative() {
        Rational::zero()
    } else {
        t
    }
}

/// `dist(z, closure{d_j})`, from the monotone structure of each kind.
pub fn closure_distance(a: &DiagonalSpec, z: &Rational) -> Rational {
    let near = |xs: Vec<Rational>| xs.into_iter().map(|x| (x - z).abs()).min().expect("nonempty");
    match a {
        DiagonalSpec::FiniteThenConstant { head, tail } => {
            near(head.iter().chain([tail]).cloned().collect())
        }
        DiagonalSpec::Enumeration { lo, hi } => {
            if z < lo {
                lo - z
            } else if z > hi {
                z - hi
            } else {
                Rational::zero()
            }
        }
        DiagonalSpec::Harmonic { offset, scale } => {
            let mut cands = vec![offset.clone(), offset + scale];
            if !scale.is_zero() && z != offset {
                let t = scale / (z - offset);
                if t >= q(1, 1) {
                    let f = t.floor().to_integer();
                    for j in [f.clone(), f + 1] {
                        let j = Rational::from_integer(j);
                        cands.push(offset + scale / j);
                    }
                }
            }
            near(cands)
        }
        DiagonalSpec::Geometric { offset, scale, ratio } => {
            let mut cands = vec![offset.clone()];
            let mut p = ratio.clone();
            // ratio <= 1/2 in the catalog, so 200 terms reach below any catalog gap
            for _ in 0..200 {
                cands.push(offset + scale * &p);
                p *= ratio;
                if p.is_zero() {
                    break;
                }
            }
            near(cands)
        }
    }
}

/// Integer polynomial, lowest degree first.
pub type Poly = Vec<i64>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    trim(out)
}

/// Quotient and remainder by a monic divisor.
pub fn poly_divmod(p: &Poly, d: &Poly) -> (Poly, Poly) {
    assert_eq!(*d.last().unwrap(), 1, "monic divisor");
    let mut r = p.clone();
    if r.len() < d.len() {
        return (vec![0], trim(r));
    }
    let mut quo = vec![0; r.len() - d.len() + 1];
    for i in (0..quo.len()).rev() {
        let c = r[i + d.len() - 1];
        quo[i] = c;
        for (j, dj) in d.iter().enumerate() {
            r[i + j] -= c * dj;
        }
    }
    (trim(quo), trim(r))
}

pub fn cyclotomic(l: usize) -> Poly {
    let mut p = vec![0; l + 1];
    p[0] = -1;
    p[l] = 1;
    for d in 1..l {
        if l.is_multiple_of(d) {
            p = poly_divmod(&p, &cyclotomic(d)).0;
        }
    }
    p
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut v = p.clone();
            v.insert(pos, n - 1);
            out.push(v);
        }
    }
    out
}

fn sign(p: &[usize]) -> i64 {
    let mut s = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// `det(x I - K_F)` by the Leibniz expansion, `F` given 0-based.
pub fn koopman_char_poly(images: &[usize]) -> Poly {
    let n = images.len();
    let entry = |i: usize, j: usize| -> Poly {
        let k = i64::from(images[i] == j);
        if i == j {
            trim(vec![-k, 1])
        } else {
            vec![-k]
        }
    };
    let mut det = vec![0];
    for p in permutations(n) {
        let mut term = vec![sign(&p)];
        for (i, &j) in p.iter().enumerate() {
            term = poly_mul(&term, &entry(i, j));
        }
        det = poly_add(&det, &term);
    }
    det
}

/// `e^{2πik/l}`, exact on the axes.
pub fn unit_root(k: usize, l: usize) -> Complex64 {
    if (4 * k).is_multiple_of(l) {
        match 4 * k / l {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        let t = TAU * k as f64 / l as f64;
        Complex64::new(t.cos(), t.sin())
    }
}

/// Eigenvalues of `K_F`: zero if `det K_F = 0`, and every primitive `l`-th
/// root of unity whose cyclotomic polynomial divides the characteristic polynomial.
pub fn koopman_spectrum_oracle(images: &[usize]) -> Vec<Complex64> {
    let p = koopman_char_poly(images);
    let mut pts = Vec::new();
    if p[0] == 0 {
        pts.push(Complex64::new(0.0, 0.0));
    }
    for l in 1..=images.len() {
        if poly_divmod(&p, &cyclotomic(l)).1 == vec![0] {
            for k in 0..l {
                if k.gcd(&l) == 1 {
                    pts.push(unit_root(k, l));
                }
            }
        }
    }
    pts
}

fn directed(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff_points(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Hausdorff distance from a finite sample to the union of closed `r`-disks.
pub fn hausdorff_disk_union(points: &[Complex64], centers: &[Complex64], r: f64) -> f64 {
    let outside = points
        .iter()
        .map(|p| {
            let d = centers.iter().map(|c| (p - c).norm()).fold(f64::INFINITY, f64::min);
            (d - r).max(0.0)
        })
        .fold(0.0, f64::max);
    let mut disk = Vec::new();
    for c in centers {
        for i in 0..=60 {
            let rho = r * i as f64 / 60.0;
            for j in 0..480 {
                disk.push(c + Complex64::from_polar(rho, TAU * j as f64 / 480.0));
            }
        }
    }
    outside.max(directed(&disk, points))
}

/// Brute-force sharpness notions over a finite family of exact heights.
pub fn sharpness_oracle(heights: &[u32], k: u32) -> (bool, bool, bool) {
    let pointwise = heights.iter().all(|&h| h == k);
    let witness = heights.iter().all(|&h| h <= k) && heights.contains(&k);
    // sup = k: k bounds the family and no smaller level does
    let bounded_by = |m: u32| heights.iter().all(|&h| h <= m);
    let worst = bounded_by(k) && (k == 0 || !bounded_by(k - 1));
    (pointwise, witness, worst)
}
