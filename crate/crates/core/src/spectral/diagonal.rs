use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::integration::Interval;
use crate::value::{ceil, floor, int, parse_rational_list, rat, serde_rational, Rational};

/// Diagonal entries `d_1, d_2, ...` of a diagonal operator, described by a rule
/// whose closure `σ(A) = closure{d_j}` is exactly computable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DiagonalSpec {
    /// `head[0], head[1], ..., tail, tail, ...`.
    FiniteThenConstant {
        #[serde(with = "serde_rational::vec")]
        head: Vec<Rational>,
        #[serde(with = "serde_rational")]
        tail: Rational,
    },
    /// `d_j = offset + scale / j`.
    Harmonic {
        #[serde(with = "serde_rational")]
        offset: Rational,
        #[serde(with = "serde_rational")]
        scale: Rational,
    },
    /// `d_j = offset + scale * ratio^j` with `0 <= ratio < 1`.
    Geometric {
        #[serde(with = "serde_rational")]
        offset: Rational,
        #[serde(with = "serde_rational")]
        scale: Rational,
        #[serde(with = "serde_rational")]
        ratio: Rational,
    },
    /// Every rational of `[lo, hi]`, in the order `lo + (hi - lo) t` with `t`
    /// running through `0, 1, 1/2, 1/3, 2/3, 1/4, 3/4, ...`.
    Enumeration {
        #[serde(with = "serde_rational")]
        lo: Rational,
        #[serde(with = "serde_rational")]
        hi: Rational,
    },
}

use DiagonalSpec::*;

fn distance_to_interval(x: &Rational, lo: &Rational, hi: &Rational) -> Rational {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        Rational::zero()
    }
}

fn to_index(j: &num_bigint::BigInt) -> Option<usize> {
    j.to_usize().filter(|&n| n >= 1)
}

/// `|{p : 1 <= p < q, gcd(p, q) = 1}|`.
fn totient(q: u64) -> u64 {
    (1..q).filter(|p| p.gcd(&q) == 1).count() as u64
}

impl DiagonalSpec {
    pub fn constant(c: Rational) -> Self {
        FiniteThenConstant { head: vec![], tail: c }
    }

    /// Parses `const:c`, `list:d1,..,dm` (last entry repeats), `harmonic:c,s`,
    /// `geometric:c,s,r` or `enum:lo,hi`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        let mut args = parse_rational_list(params)?;
        let d = match (kind.trim(), args.len()) {
            ("const", 1) => DiagonalSpec::constant(args.remove(0)),
            ("list", n) if n >= 1 => {
                let tail = args.pop().expect("nonempty");
                FiniteThenConstant { head: args, tail }
            }
            ("harmonic", 2) => Harmonic {
                offset: args[0].clone(),
                scale: args[1].clone(),
            },
            ("geometric", 3) => Geometric {
                offset: args[0].clone(),
                scale: args[1].clone(),
                ratio: args[2].clone(),
            },
            ("enum", 2) => Enumeration {
                lo: args[0].clone(),
                hi: args[1].clone(),
            },
            _ => {
                return Err(SciError::Usage(format!(
                    "diagonal `{spec}` is not one of const:c  list:d1,..,dm  harmonic:c,s  geometric:c,s,r  enum:lo,hi"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Geometric { ratio, .. } if ratio.is_negative() || ratio >= &Rational::one() => Err(
                SciError::UnsupportedKind(format!("geometric ratio {ratio} outside [0, 1)")),
            ),
            Enumeration { lo, hi } if lo > hi => {
                Err(SciError::UnsupportedKind(format!("enumeration over empty interval [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    /// `d_j` for `j >= 1`.
    pub fn entry(&self, j: usize) -> Rational {
        assert!(j >= 1, "diagonal entries are indexed from 1");
        match self {
            FiniteThenConstant { head, tail } => head.get(j - 1).unwrap_or(tail).clone(),
            Harmonic { offset, scale } => offset + scale / int(j as i64),
            Geometric { offset, scale, ratio } => offset + scale * num_traits::pow(ratio.clone(), j),
            Enumeration { lo, hi } => lo + (hi - lo) * farey_entry(j as u64),
        }
    }

    /// Exact `dist(z, closure{d_j})`.
    pub fn dist(&self, z: &Rational) -> Rational {
        self.dist_to_interval(z, z)
    }

    /// Exact distance from `closure{d_j}` to `[lo, hi]`.
    pub fn dist_to_interval(&self, lo: &Rational, hi: &Rational) -> Rational {
        let d = |x: &Rational| distance_to_interval(x, lo, hi);
        match self {
            FiniteThenConstant { head, tail } => head.iter().chain([tail]).map(d).min().expect("nonempty"),
            Enumeration { lo: a, hi: b } => {
                if b < lo {
                    lo - b
                } else if a > hi {
                    a - hi
                } else {
                    Rational::zero()
                }
            }
            Harmonic { offset, scale } => {
                let mut best = d(offset);
                best = best.min(d(&(offset + scale)));
                if !scale.is_zero() {
                    for e in [lo, hi] {
                        let gap = e - offset;
                        if gap.is_zero() {
                            continue;
                        }
                        let t = scale / gap;
                        if t.is_positive() {
                            for j in [floor(&t), ceil(&t)] {
                                if let Some(j) = to_index(&j) {
                                    best = best.min(d(&self.entry(j)));
                                }
                            }
                        }
                    }
                }
                best
            }
            Geometric { offset, .. } => {
                let mut best = d(offset);
                let mut j = 1;
                while !best.is_zero() {
                    let x = self.entry(j);
                    best = best.min(d(&x));
                    let (s0, s1) = if &x <= offset { (&x, offset) } else { (offset, &x) };
                    if s1 < lo || s0 > hi {
                        break;
                    }
                    j += 1;
                }
                best
            }
        }
    }

    /// An index `j` with `|d_j - z| <= eps`, if one exists. For every kind except
    /// the enumeration it is the smallest such index.
    pub fn index_within(&self, z: &Rational, eps: &Rational) -> Option<usize> {
        match self {
            FiniteThenConstant { head, tail } => head
                .iter()
                .chain([tail])
                .position(|x| (x - z).abs() <= *eps)
                .map(|i| i + 1),
            Harmonic { offset, scale } => {
                if scale.is_zero() {
                    return ((offset - z).abs() <= *eps).then_some(1);
                }
                // |d_j - z| = |s| |1/j - w| with w = (z - c)/s.
                let w = (z - offset) / scale;
                let e = eps / scale.abs();
                let upper = &w + &e;
                if !upper.is_positive() {
                    return None;
                }
                let j = ceil(&(Rational::one() / &upper)).max(num_bigint::BigInt::one());
                let j = to_index(&j)?;
                (Rational::one() / int(j as i64) >= &w - &e).then_some(j)
            }
            Geometric { offset, scale, ratio } => {
                if scale.is_zero() || ratio.is_zero() {
                    return ((offset - z).abs() <= *eps).then_some(1);
                }
                let g = z - offset;
                let same_sign = g.is_positive() == scale.is_positive() && !g.is_zero();
                let mut t = scale.abs();
                for j in 1.. {
                    t *= ratio;
                    let term = if same_sign { (&t - g.abs()).abs() } else { &t + g.abs() };
                    if term <= *eps {
                        return Some(j);
                    }
                    let hopeless = if same_sign { t < g.abs() - eps } else { g.abs() >= *eps };
                    if hopeless {
                        return None;
                    }
                }
                unreachable!()
            }
            Enumeration { lo, hi } => {
                if lo == hi {
                    return ((lo - z).abs() <= *eps).then_some(1);
                }
                if z < lo {
                    return (lo - z <= *eps).then_some(1);
                }
                if z > hi {
                    return (z - hi <= *eps).then_some(2);
                }
                Some(farey_index(&((z - lo) / (hi - lo))) as usize)
            }
        }
    }
}

/// `t_j` of the enumeration `0, 1, 1/2, 1/3, 2/3, 1/4, 3/4, ...`.
fn farey_entry(j: u64) -> Rational {
    match j {
        1 => return Rational::zero(),
        2 => return Rational::one(),
        _ => {}
    }
    let mut before = 2;
    let mut q = 2;
    loop {
        let phi = totient(q);
        if j <= before + phi {
            let rank = j - before;
            let p = (1..q)
                .filter(|p| p.gcd(&q) == 1)
                .nth(rank as usize - 1)
                .expect("rank within totient");
            return rat(p as i64, q as i64);
        }
        before += phi;
        q += 1;
    }
}

/// Position of `t ∈ [0, 1]` in the enumeration.
fn farey_index(t: &Rational) -> u64 {
    if t.is_zero() {
        return 1;
    }
    if t.is_one() {
        return 2;
    }
    let q = t.denom().to_u64().expect("small denominator");
    let p = t.numer().to_u64().expect("small numerator");
    let before: u64 = 2 + (2..q).map(totient).sum::<u64>();
    before + (1..=p).filter(|k| k.gcd(&q) == 1).count() as u64
}

impl fmt::Display for DiagonalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteThenConstant { head, tail } if head.is_empty() => write!(f, "const:{tail}"),
            FiniteThenConstant { head, tail } => {
                let hs: Vec<String> = head.iter().map(|h| h.to_string()).collect();
                write!(f, "list:{},{tail}", hs.join(","))
            }
            Harmonic { offset, scale } => write!(f, "harmonic:{offset},{scale}"),
            Geometric { offset, scale, ratio } => write!(f, "geometric:{offset},{scale},{ratio}"),
            Enumeration { lo, hi } => write!(f, "enum:{lo},{hi}"),
        }
    }
}

/// Distance from a point to a compact interval.
pub fn point_interval_distance(x: &Rational, j: &Interval) -> Rational {
    distance_to_interval(x, &j.a, &j.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force minimum of `|d_j - z|` over a long prefix plus the limit point.
    fn prefix_dist(d: &DiagonalSpec, z: &Rational, limit: Option<&Rational>, n: usize) -> Rational {
        let mut best = limit.map(|c| (c - z).abs());
        for j in 1..=n {
            let v = (d.entry(j) - z).abs();
            best = Some(match best {
                Some(b) if b <= v => b,
                _ => v,
            });
        }
        best.unwrap()
    }

    #[test]
    fn enumeration_order() {
        let e: Vec<Rational> = (1..=7).map(farey_entry).collect();
        assert_eq!(e, vec![int(0), int(1), rat(1, 2), rat(1, 3), rat(2, 3), rat(1, 4), rat(3, 4)]);
        for j in 1..200 {
            assert_eq!(farey_index(&farey_entry(j)), j);
        }
    }

    #[test]
    fn dist_examples() {
        let d = DiagonalSpec::parse("list:1,2,3").unwrap();
        assert_eq!(d.dist(&int(2)), int(0));
        assert_eq!(d.dist(&rat(5, 2)), rat(1, 2));
        let e = DiagonalSpec::parse("enum:0,1").unwrap();
        assert_eq!(e.dist(&int(2)), int(1));
        assert_eq!(e.dist(&rat(1, 3)), int(0));
    }

    #[test]
    fn harmonic_and_geometric_dist_match_brute_force() {
        let h = DiagonalSpec::parse("harmonic:0,1").unwrap();
        let g = DiagonalSpec::parse("geometric:1/2,1/4,1/2").unwrap();
        for k in -8..=24 {
            let z = rat(k, 16);
            assert_eq!(h.dist(&z), prefix_dist(&h, &z, Some(&int(0)), 400), "harmonic z={z}");
            assert_eq!(g.dist(&z), prefix_dist(&g, &z, Some(&rat(1, 2)), 80), "geometric z={z}");
        }
    }

    #[test]
    fn index_within_is_smallest() {
        let specs = ["harmonic:0,1", "harmonic:1,-1/2", "geometric:1/2,1/4,1/2", "list:1/3,2/3,1/2"];
        for s in specs {
            let d = DiagonalSpec::parse(s).unwrap();
            for k in 0..=16 {
                let z = rat(k, 16);
                for eps in [rat(1, 8), rat(1, 64), rat(3, 1024)] {
                    let brute = (1..=2000).find(|&j| (d.entry(j) - &z).abs() <= eps);
                    let got = d.index_within(&z, &eps);
                    match (got, brute) {
                        (Some(a), Some(b)) => assert_eq!(a, b, "{s} z={z} eps={eps}"),
                        (None, None) => {}
                        (Some(a), None) => assert!(a > 2000, "{s} z={z} eps={eps}"),
                        (None, Some(b)) => panic!("{s} z={z} eps={eps}: missed index {b}"),
                    }
                }
            }
        }
    }

    #[test]
    fn interval_distance_for_stabilizers() {
        let j = (int(0), int(1));
        assert_eq!(DiagonalSpec::constant(int(5)).dist_to_interval(&j.0, &j.1), int(4));
        assert_eq!(DiagonalSpec::parse("harmonic:2,1").unwrap().dist_to_interval(&j.0, &j.1), int(1));
        assert_eq!(
            DiagonalSpec::parse("geometric:-1,-1/2,1/2").unwrap().dist_to_interval(&j.0, &j.1),
            int(1)
        );
        assert_eq!(DiagonalSpec::parse("harmonic:0,1").unwrap().dist_to_interval(&j.0, &j.1), int(0));
        assert_eq!(
            DiagonalSpec::parse("harmonic:3/2,-1").unwrap().dist_to_interval(&int(0), &rat(3, 4)),
            rat(0, 1)
        );
    }

    #[test]
    fn geometric_ratio_must_be_below_one() {
        assert!(matches!(DiagonalSpec::parse("geometric:0,1,1"), Err(SciError::UnsupportedKind(_))));
        assert!(matches!(DiagonalSpec::parse("geometric:0,1,-1/2"), Err(SciError::UnsupportedKind(_))));
    }
}
