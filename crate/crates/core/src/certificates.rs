//! Interval-valued height knowledge and the family-level sharpness calculus.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SciError};
use crate::reductions::VerificationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    C1,
    C2,
    C3,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::C1 => "C1 (source exact)",
            Clause::C2 => "C2 (reduction per member)",
            Clause::C3 => "C3 (upper bound per member)",
        })
    }
}

fn missing(clause: Clause, detail: impl Into<String>) -> SciError {
    SciError::MissingClause {
        clause,
        detail: detail.into(),
    }
}

/// `lb <= SCI <= ub`, with `ub = None` meaning unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightInterval {
    pub lb: u32,
    pub ub: Option<u32>,
}

impl HeightInterval {
    pub fn new(lb: u32, ub: Option<u32>) -> Result<Self> {
        match ub {
            Some(u) if u < lb => Err(SciError::invalid(format!("empty height interval [{lb}, {u}]"))),
            _ => Ok(HeightInterval { lb, ub }),
        }
    }

    pub fn exact(k: u32) -> Self {
        HeightInterval { lb: k, ub: Some(k) }
    }

    pub fn unknown() -> Self {
        HeightInterval { lb: 0, ub: None }
    }

    pub fn exact_value(&self) -> Option<u32> {
        (self.ub == Some(self.lb)).then_some(self.lb)
    }

    pub fn intersect(&self, other: &HeightInterval) -> Result<HeightInterval> {
        let ub = match (self.ub, other.ub) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        HeightInterval::new(self.lb.max(other.lb), ub)
    }
}

impl fmt::Display for HeightInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.exact_value(), self.ub) {
            (Some(k), _) => write!(f, "= {k}"),
            (None, Some(u)) => write!(f, "in [{}, {u}]", self.lb),
            (None, None) => write!(f, ">= {}", self.lb),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    TowerWitness { tower: String, height: u32 },
    RecordedFact { citation: String },
    TransferredLb { reduction: String, source: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::TowerWitness { tower, height } => write!(f, "tower witness `{tower}` of height {height}"),
            Provenance::RecordedFact { citation } => write!(f, "recorded fact: {citation}"),
            Provenance::TransferredLb { reduction, source } => {
                write!(f, "lower bound transferred from `{source}` along `{reduction}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightCertificate {
    pub problem: String,
    pub interval: HeightInterval,
    pub lower: Option<Provenance>,
    pub upper: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<HeightCertificate>,
}

impl HeightCertificate {
    pub fn tower_witness(problem: impl Into<String>, tower: impl Into<String>, height: u32) -> Self {
        HeightCertificate {
            problem: problem.into(),
            interval: HeightInterval { lb: 0, ub: Some(height) },
            lower: None,
            upper: Some(Provenance::TowerWitness {
                tower: tower.into(),
                height,
            }),
            premises: Vec::new(),
        }
    }

    pub fn recorded_exact(problem: impl Into<String>, k: u32, citation: impl Into<String>) -> Self {
        let p = Provenance::RecordedFact {
            citation: citation.into(),
        };
        HeightCertificate {
            problem: problem.into(),
            interval: HeightInterval::exact(k),
            lower: Some(p.clone()),
            upper: Some(p),
            premises: Vec::new(),
        }
    }

    pub fn recorded_lower(problem: impl Into<String>, k: u32, citation: impl Into<String>) -> Self {
        HeightCertificate {
            problem: problem.into(),
            interval: HeightInterval { lb: k, ub: None },
            lower: Some(Provenance::RecordedFact {
                citation: citation.into(),
            }),
            upper: None,
            premises: Vec::new(),
        }
    }

    pub fn exact_value(&self) -> Option<u32> {
        self.interval.exact_value()
    }

    /// Combines two certificates about the same problem by intersecting intervals.
    pub fn merge(&self, other: &HeightCertificate) -> Result<HeightCertificate> {
        if self.problem != other.problem {
            return Err(SciError::ProblemMismatch {
                expected: self.problem.clone(),
                found: other.problem.clone(),
            });
        }
        let interval = self.interval.intersect(&other.interval)?;
        let lower = if other.interval.lb > self.interval.lb || self.lower.is_none() {
            other.lower.clone().or_else(|| self.lower.clone())
        } else {
            self.lower.clone()
        };
        let tighter_upper = match (self.interval.ub, other.interval.ub) {
            (Some(a), Some(b)) => b < a,
            (None, Some(_)) => true,
            _ => false,
        };
        let upper = if tighter_upper || self.upper.is_none() {
            other.upper.clone().or_else(|| self.upper.clone())
        } else {
            self.upper.clone()
        };
        let mut premises = self.premises.clone();
        premises.extend(other.premises.iter().cloned());
        Ok(HeightCertificate {
            problem: self.problem.clone(),
            interval,
            lower,
            upper,
            premises,
        })
    }

    /// Human-readable derivation tree.
    pub fn derivation_tree(&self) -> String {
        let mut out = String::new();
        self.write_tree(&mut out, 0);
        out
    }

    fn write_tree(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        out.push_str(&format!("{pad}{}: SCI {}\n", self.problem, self.interval));
        if let Some(l) = &self.lower {
            out.push_str(&format!("{pad}  lb {} by {l}\n", self.interval.lb));
        }
        if let (Some(u), Some(ub)) = (&self.upper, self.interval.ub) {
            out.push_str(&format!("{pad}  ub {ub} by {u}\n"));
        }
        for p in &self.premises {
            p.write_tree(out, depth + 2);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub name: String,
    pub members: Vec<HeightCertificate>,
}

impl FamilyRecord {
    pub fn new(name: impl Into<String>, members: Vec<HeightCertificate>) -> Result<Self> {
        if members.is_empty() {
            return Err(SciError::EmptyFamily);
        }
        Ok(FamilyRecord {
            name: name.into(),
            members,
        })
    }

    /// A record of recorded exact heights, members named `name[i]`.
    pub fn from_heights(name: &str, heights: &[u32]) -> Result<Self> {
        let members = heights
            .iter()
            .enumerate()
            .map(|(i, &h)| HeightCertificate::recorded_exact(format!("{name}[{i}]"), h, "supplied height"))
            .collect();
        FamilyRecord::new(name, members)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl From<bool> for Tri {
    fn from(b: bool) -> Self {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tri::True => "T",
            Tri::False => "F",
            Tri::Unknown => "?",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharpnessVerdict {
    pub k: u32,
    pub pointwise_exact: Tri,
    pub witness_sharp: Tri,
    pub worst_case_exact: Tri,
}

impl fmt::Display for SharpnessVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})",
            self.pointwise_exact, self.witness_sharp, self.worst_case_exact
        )
    }
}

/// Classifies a nonempty list of exact heights at level `k`.
pub fn classify_heights(heights: &[u32], k: u32) -> Result<SharpnessVerdict> {
    let sup = *heights.iter().max().ok_or(SciError::EmptyFamily)?;
    Ok(SharpnessVerdict {
        k,
        pointwise_exact: heights.iter().all(|&h| h == k).into(),
        witness_sharp: (sup <= k && heights.contains(&k)).into(),
        worst_case_exact: (sup == k).into(),
    })
}

pub fn classify_family(record: &FamilyRecord, k: u32) -> Result<SharpnessVerdict> {
    let heights = record
        .members
        .iter()
        .map(|m| m.exact_value().ok_or_else(|| SciError::IndeterminateHeight(m.problem.clone())))
        .collect::<Result<Vec<_>>>()?;
    classify_heights(&heights, k)
}

/// Transfers the source's lower bound along every verified reduction out of it.
pub fn transfer_lower_bound(
    source: &HeightCertificate,
    reductions: &[VerificationReport],
) -> Result<Vec<HeightCertificate>> {
    reductions
        .iter()
        .map(|r| {
            if r.source != source.problem {
                return Err(SciError::ProblemMismatch {
                    expected: source.problem.clone(),
                    found: r.source.clone(),
                });
            }
            if !r.passed {
                return Err(SciError::UnverifiedReduction(r.reduction.clone()));
            }
            Ok(HeightCertificate {
                problem: r.target.clone(),
                interval: HeightInterval {
                    lb: source.interval.lb,
                    ub: None,
                },
                lower: Some(Provenance::TransferredLb {
                    reduction: r.reduction.clone(),
                    source: source.problem.clone(),
                }),
                upper: None,
                premises: vec![source.clone()],
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackageOutcome {
    pub k: u32,
    pub certificates: Vec<HeightCertificate>,
    pub verdict: SharpnessVerdict,
}

fn find_reduction<'a>(
    reductions: &'a [VerificationReport],
    source: &str,
    member: &str,
) -> Result<&'a VerificationReport> {
    let candidates: Vec<&VerificationReport> = reductions
        .iter()
        .filter(|r| r.source == source && r.target == member)
        .collect();
    if candidates.is_empty() {
        return Err(missing(Clause::C2, format!("no reduction from `{source}` to `{member}`")));
    }
    candidates
        .into_iter()
        .find(|r| r.passed)
        .ok_or_else(|| missing(Clause::C2, format!("reduction from `{source}` to `{member}` failed verification")))
}

fn find_upper<'a>(upper: &'a [HeightCertificate], member: &str, k: u32) -> Result<&'a HeightCertificate> {
    upper
        .iter()
        .find(|c| c.problem == member && c.interval.ub.is_some_and(|u| u <= k))
        .ok_or_else(|| missing(Clause::C3, format!("no upper bound <= {k} for `{member}`")))
}

/// Pointwise exactness at `k` from a source of exact height `k` (C1), one
/// verified reduction per member (C2) and member upper bounds at `k` (C3).
pub fn sufficiency_package(
    source: &HeightCertificate,
    k: u32,
    members: &[String],
    reductions: &[VerificationReport],
    upper: &[HeightCertificate],
) -> Result<PackageOutcome> {
    let basis = [source.clone()];
    let assignment = members
        .iter()
        .map(|m| (m.clone(), source.problem.clone()))
        .collect();
    transport_saturation(&basis, k, members, &assignment, reductions, upper)
}

/// Pointwise exactness from a basis of exact-`k` sources, each member assigned
/// to a basis element that reduces to it.
pub fn transport_saturation(
    basis: &[HeightCertificate],
    k: u32,
    members: &[String],
    assignment: &BTreeMap<String, String>,
    reductions: &[VerificationReport],
    upper: &[HeightCertificate],
) -> Result<PackageOutcome> {
    if members.is_empty() {
        return Err(SciError::EmptyFamily);
    }
    if basis.is_empty() {
        return Err(missing(Clause::C1, "empty basis"));
    }
    for b in basis {
        if b.exact_value() != Some(k) {
            return Err(missing(Clause::C1, format!("`{}` is not certified exact at {k} (SCI {})", b.problem, b.interval)));
        }
    }
    let mut certificates = Vec::new();
    for m in members {
        let src = assignment
            .get(m)
            .ok_or_else(|| missing(Clause::C2, format!("`{m}` has no basis assignment")))?;
        let b = basis
            .iter()
            .find(|b| &b.problem == src)
            .ok_or_else(|| missing(Clause::C2, format!("`{m}` is assigned to `{src}`, which is not in the basis")))?;
        let report = find_reduction(reductions, src, m)?;
        let ub = find_upper(upper, m, k)?;
        let lb = transfer_lower_bound(b, std::slice::from_ref(report))?.remove(0);
        certificates.push(lb.merge(ub)?);
    }
    let record = FamilyRecord::new("package", certificates.clone())?;
    let verdict = classify_family(&record, k)?;
    Ok(PackageOutcome {
        k,
        certificates,
        verdict,
    })
}

/// The premises of a sufficiency package, kept together so that single clauses
/// can be knocked out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackageInputs {
    pub source: HeightCertificate,
    pub k: u32,
    pub members: Vec<String>,
    pub reductions: Vec<VerificationReport>,
    pub upper: Vec<HeightCertificate>,
}

impl PackageInputs {
    pub fn run(&self) -> Result<PackageOutcome> {
        sufficiency_package(&self.source, self.k, &self.members, &self.reductions, &self.upper)
    }

    /// A copy with the data behind `clause` removed for member `member`
    /// (for C1, the source is weakened to a lower bound).
    pub fn without(&self, clause: Clause, member: usize) -> PackageInputs {
        let mut out = self.clone();
        let name = self.members.get(member).cloned().unwrap_or_default();
        match clause {
            Clause::C1 => {
                out.source = HeightCertificate::recorded_lower(
                    self.source.problem.clone(),
                    self.k,
                    "lower bound only",
                );
            }
            Clause::C2 => out.reductions.retain(|r| r.target != name),
            Clause::C3 => out.upper.retain(|c| c.problem != name),
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMembership {
    Reduced,
    NotReduced,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbientVerdict {
    pub subfamily: String,
    pub pointwise_exact: Tri,
    pub witness_sharp: Tri,
}

/// Principal ambient criterion. When the ambient is bounded by `k` and the source
/// is exact at `k`, a subfamily is pointwise exact iff every member lies in the
/// source's cone and witness-sharp iff some member does. If the hypotheses are
/// not met every verdict is `Unknown`.
pub fn principal_ambient_check(
    ambient: &FamilyRecord,
    k: u32,
    source: &HeightCertificate,
    cone: &BTreeMap<String, ConeMembership>,
    subfamilies: &[(String, Vec<String>)],
) -> Vec<AmbientVerdict> {
    let hypotheses = source.exact_value() == Some(k)
        && ambient
            .members
            .iter()
            .all(|m| m.interval.ub.is_some_and(|u| u <= k));
    subfamilies
        .iter()
        .map(|(name, members)| {
            let status: Vec<ConeMembership> = members
                .iter()
                .map(|m| cone.get(m).copied().unwrap_or(ConeMembership::Unknown))
                .collect();
            let (pointwise, witness) = if !hypotheses || members.is_empty() {
                (Tri::Unknown, Tri::Unknown)
            } else {
                let all = if status.iter().all(|s| *s == ConeMembership::Reduced) {
                    Tri::True
                } else if status.contains(&ConeMembership::NotReduced) {
                    Tri::False
                } else {
                    Tri::Unknown
                };
                let some = if status.contains(&ConeMembership::Reduced) {
                    Tri::True
                } else if status.iter().all(|s| *s == ConeMembership::NotReduced) {
                    Tri::False
                } else {
                    Tri::Unknown
                };
                (all, some)
            };
            AmbientVerdict {
                subfamily: name.clone(),
                pointwise_exact: pointwise,
                witness_sharp: witness,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let v = classify_heights(&[2, 2, 2], 2).unwrap();
        assert_eq!(v.to_string(), "(T,T,T)");
        assert_eq!(classify_heights(&[0, 2], 2).unwrap().to_string(), "(F,T,T)");
        assert_eq!(classify_heights(&[1, 3], 2).unwrap().to_string(), "(F,F,F)");
    }

    #[test]
    fn strict_interval_is_indeterminate() {
        let rec = FamilyRecord::new("f", vec![HeightCertificate::tower_witness("p", "t", 2)]).unwrap();
        assert!(matches!(classify_family(&rec, 2), Err(SciError::IndeterminateHeight(_))));
    }

    #[test]
    fn merge_intersects_and_keeps_provenance() {
        let lb = HeightCertificate::recorded_lower("p", 1, "adversary");
        let ub = HeightCertificate::tower_witness("p", "rect", 1);
        let m = lb.merge(&ub).unwrap();
        assert_eq!(m.exact_value(), Some(1));
        assert!(matches!(m.lower, Some(Provenance::RecordedFact { .. })));
        assert!(matches!(m.upper, Some(Provenance::TowerWitness { .. })));
        let bad = HeightCertificate::recorded_lower("p", 2, "x").merge(&ub);
        assert!(bad.is_err());
    }

    #[test]
    fn empty_family_rejected() {
        assert_eq!(FamilyRecord::new("f", vec![]), Err(SciError::EmptyFamily));
    }
}
