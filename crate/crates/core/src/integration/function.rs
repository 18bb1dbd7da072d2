use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::value::{int, parse_rational_list, serde_rational, to_f64, Rational, Value};

/// Symbolic continuous function with an exact reference integral.
///
/// The catalog is closed under affine precomposition `x -> scale * base(slope * x + shift)`,
/// so encoded inputs keep exact integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionDescription {
    /// `c_0 + c_1 x + ... + c_m x^m`.
    #[serde(rename = "poly")]
    Polynomial {
        #[serde(with = "serde_rational::vec")]
        coeffs: Vec<Rational>,
    },
    /// `scale * sin(freq * x)`.
    #[serde(rename = "sin")]
    Sine {
        #[serde(with = "serde_rational")]
        scale: Rational,
        #[serde(with = "serde_rational")]
        freq: Rational,
    },
    /// Tent of height 1 supported on `[u, v]` with apex at the midpoint.
    Bump {
        #[serde(with = "serde_rational")]
        u: Rational,
        #[serde(with = "serde_rational")]
        v: Rational,
    },
    #[serde(rename = "affine")]
    AffinePrecomposed {
        #[serde(with = "serde_rational")]
        scale: Rational,
        #[serde(with = "serde_rational")]
        slope: Rational,
        #[serde(with = "serde_rational")]
        shift: Rational,
        base: Box<FunctionDescription>,
    },
}

use FunctionDescription::*;

impl FunctionDescription {
    pub fn poly(coeffs: Vec<Rational>) -> Self {
        Polynomial { coeffs }
    }

    pub fn sine(scale: Rational, freq: Rational) -> Self {
        Sine { scale, freq }
    }

    pub fn bump(u: Rational, v: Rational) -> Self {
        Bump { u, v }
    }

    pub fn affine(scale: Rational, slope: Rational, shift: Rational, base: FunctionDescription) -> Self {
        AffinePrecomposed {
            scale,
            slope,
            shift,
            base: Box::new(base),
        }
    }

    /// Parses the short CLI form: `poly:c0,c1,..`, `sin:scale,freq`, `bump:u,v`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        let args = parse_rational_list(params)?;
        let f = match (kind.trim(), args.as_slice()) {
            ("poly", _) => Polynomial { coeffs: args },
            ("sin", [s, w]) => Sine {
                scale: s.clone(),
                freq: w.clone(),
            },
            ("bump", [u, v]) => Bump {
                u: u.clone(),
                v: v.clone(),
            },
            _ => {
                return Err(SciError::Usage(format!(
                    "function `{spec}` is not one of poly:c0,c1,..  sin:scale,freq  bump:u,v"
                )))
            }
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Bump { u, v } if u >= v => Err(SciError::invalid(format!("bump needs u < v, got [{u}, {v}]"))),
            AffinePrecomposed { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &Rational) -> Value {
        match self {
            Polynomial { coeffs } => {
                let mut acc = Rational::zero();
                for c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                Value::real(acc)
            }
            Sine { scale, freq } => {
                if scale.is_zero() || freq.is_zero() {
                    Value::zero()
                } else {
                    Value::approx(to_f64(scale) * (to_f64(&(freq * x))).sin())
                }
            }
            Bump { u, v } => Value::real(bump_value(u, v, x)),
            AffinePrecomposed {
                scale,
                slope,
                shift,
                base,
            } => base.eval(&(slope * x + shift)).scale(scale),
        }
    }

    /// Exact `∫_c^d f`, rational where the closed form is rational.
    pub fn integral(&self, c: &Rational, d: &Rational) -> Value {
        if c == d {
            return Value::zero();
        }
        match self {
            Polynomial { coeffs } => {
                let anti = |x: &Rational| {
                    let mut acc = Rational::zero();
                    for (k, ck) in coeffs.iter().enumerate().rev() {
                        acc = acc * x + ck / int(k as i64 + 1);
                    }
                    acc * x
                };
                Value::real(anti(d) - anti(c))
            }
            Sine { scale, freq } => {
                if scale.is_zero() || freq.is_zero() {
                    return Value::zero();
                }
                let w = to_f64(freq);
                let (cf, df) = (to_f64(c), to_f64(d));
                Value::approx(to_f64(scale) * ((w * cf).cos() - (w * df).cos()) / w)
            }
            Bump { u, v } => Value::real(bump_primitive(u, v, d) - bump_primitive(u, v, c)),
            AffinePrecomposed {
                scale,
                slope,
                shift,
                base,
            } => {
                if slope.is_zero() {
                    base.eval(shift).scale(&(scale * (d - c)))
                } else {
                    let lo = slope * c + shift;
                    let hi = slope * d + shift;
                    base.integral(&lo, &hi).scale(&(scale / slope))
                }
            }
        }
    }

    /// An upper bound for the Lipschitz constant on `[c, d]`.
    pub fn lipschitz(&self, c: &Rational, d: &Rational) -> f64 {
        match self {
            Polynomial { coeffs } => {
                let m = c.abs().max(d.abs());
                let mut total = Rational::zero();
                let mut power = Rational::one();
                for (k, ck) in coeffs.iter().enumerate().skip(1) {
                    total += int(k as i64) * ck.abs() * &power;
                    power *= &m;
                }
                to_f64(&total) * (1.0 + 1e-12)
            }
            Sine { scale, freq } => to_f64(&(scale * freq).abs()),
            Bump { u, v } => to_f64(&(int(2) / (v - u))),
            AffinePrecomposed {
                scale,
                slope,
                shift,
                base,
            } => {
                let lo = slope * c + shift;
                let hi = slope * d + shift;
                let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                to_f64(&(scale * slope).abs()) * base.lipschitz(&lo, &hi)
            }
        }
    }

    /// True when every value and integral is exact rational.
    pub fn is_rational(&self) -> bool {
        match self {
            Polynomial { .. } | Bump { .. } => true,
            Sine { scale, freq } => scale.is_zero() || freq.is_zero(),
            AffinePrecomposed { base, .. } => base.is_rational(),
        }
    }
}

impl fmt::Display for FunctionDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polynomial { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:{}", cs.join(","))
            }
            Sine { scale, freq } => write!(f, "sin:{scale},{freq}"),
            Bump { u, v } => write!(f, "bump:{u},{v}"),
            AffinePrecomposed {
                scale,
                slope,
                shift,
                base,
            } => write!(f, "{scale}*({base})({slope}x+{shift})"),
        }
    }
}

pub(crate) fn bump_value(u: &Rational, v: &Rational, x: &Rational) -> Rational {
    let mid = (u + v) / int(2);
    let h = Rational::one() - int(2) * (x - &mid).abs() / (v - u);
    if h.is_positive() {
        h
    } else {
        Rational::zero()
    }
}

/// `∫_{-∞}^x h` for the tent on `[u, v]`.
fn bump_primitive(u: &Rational, v: &Rational, x: &Rational) -> Rational {
    let w = v - u;
    if x <= u {
        Rational::zero()
    } else if x >= v {
        w / int(2)
    } else if x * int(2) <= u + v {
        let t = x - u;
        &t * &t / w
    } else {
        let t = v - x;
        &w / int(2) - &t * &t / &w
    }
}

/// The shipped Lipschitz catalog.
pub fn default_functions() -> Vec<FunctionDescription> {
    use crate::value::rat;
    vec![
        FunctionDescription::poly(vec![int(1)]),
        FunctionDescription::poly(vec![int(0), int(1)]),
        FunctionDescription::poly(vec![int(0), int(0), int(1)]),
        FunctionDescription::poly(vec![int(1), int(-2), int(0), int(3)]),
        FunctionDescription::poly(vec![int(0), rat(1, 2), int(0), int(0), rat(-1, 4)]),
        FunctionDescription::sine(int(1), int(1)),
        FunctionDescription::sine(int(2), int(3)),
        FunctionDescription::sine(rat(1, 2), int(5)),
        FunctionDescription::bump(rat(1, 4), rat(3, 4)),
        FunctionDescription::affine(int(3), rat(1, 2), int(1), FunctionDescription::poly(vec![int(0), int(0), int(1)])),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::rat;

    #[test]
    fn polynomial_integrals() {
        let x2 = FunctionDescription::poly(vec![int(0), int(0), int(1)]);
        assert_eq!(x2.integral(&int(0), &int(1)), Value::real(rat(1, 3)));
        assert_eq!(x2.integral(&int(-1), &int(2)), Value::real(int(3)));
    }

    #[test]
    fn bump_integral_is_half_width() {
        let h = FunctionDescription::bump(rat(1, 8), rat(3, 8));
        assert_eq!(h.integral(&int(0), &int(1)), Value::real(rat(1, 8)));
        assert_eq!(h.integral(&int(0), &rat(1, 4)), Value::real(rat(1, 16)));
        assert_eq!(h.eval(&rat(1, 4)), Value::real(int(1)));
        assert_eq!(h.eval(&rat(1, 2)), Value::real(int(0)));
    }

    #[test]
    fn affine_precomposition_moves_the_integral() {
        // (1/2) f(x/2) on [0,2] integrates like f on [0,1].
        let f = FunctionDescription::poly(vec![int(1), int(0), int(5)]);
        let e = FunctionDescription::affine(rat(1, 2), rat(1, 2), int(0), f.clone());
        assert_eq!(e.integral(&int(0), &int(2)), f.integral(&int(0), &int(1)));
    }

    #[test]
    fn parse_short_forms() {
        assert_eq!(
            FunctionDescription::parse("poly:0,1").unwrap(),
            FunctionDescription::poly(vec![int(0), int(1)])
        );
        assert!(FunctionDescription::parse("bump:1,1").is_err());
        assert!(FunctionDescription::parse("cos:1").is_err());
    }

    #[test]
    fn serde_round_trip() {
        for f in default_functions() {
            let s = serde_json::to_string(&f).unwrap();
            let back: FunctionDescription = serde_json::from_str(&s).unwrap();
            assert_eq!(back, f);
        }
    }
}
