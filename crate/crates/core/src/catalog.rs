//! JSON problem catalogs. See `catalog/SCHEMA.md` for the document format.

use std::path::Path;

use serde_json::Value as Json;

use crate::error::{Result, SciError};
use crate::integration::{default_functions, FunctionDescription, Interval};
use crate::koopman::{FiniteSpace, MapTable};
use crate::lattice::FiniteProblem;
use crate::spectral::{DiagonalSpec, SpectralInput, StabilizerSpec, Window};
use crate::value::{parse_rational, Rational};

pub const SCHEMA_VERSION: u64 = 1;

pub const DEFAULT_CATALOG: &str = include_str!("../catalog/default.json");

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationEntry {
    pub interval: Interval,
    pub degenerate: bool,
    pub functions: Vec<FunctionDescription>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEntry {
    pub domain: Interval,
    pub pairs: Vec<SpectralInput>,
    pub stabilizers: Vec<StabilizerSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KoopmanEntry {
    pub space: FiniteSpace,
    /// Explicit maps; `None` means the problem's own catalog.
    pub maps: Option<Vec<MapTable>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CatalogEntry {
    Integration(IntegrationEntry),
    Spectral(SpectralEntry),
    Koopman(KoopmanEntry),
    Finite(FiniteProblem),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn integration(&self) -> impl Iterator<Item = &IntegrationEntry> {
        self.entries.iter().filter_map(|e| match e {
            CatalogEntry::Integration(i) => Some(i),
            _ => None,
        })
    }

    pub fn spectral(&self) -> impl Iterator<Item = &SpectralEntry> {
        self.entries.iter().filter_map(|e| match e {
            CatalogEntry::Spectral(s) => Some(s),
            _ => None,
        })
    }

    pub fn koopman(&self) -> impl Iterator<Item = &KoopmanEntry> {
        self.entries.iter().filter_map(|e| match e {
            CatalogEntry::Koopman(k) => Some(k),
            _ => None,
        })
    }

    pub fn finite(&self) -> impl Iterator<Item = &FiniteProblem> {
        self.entries.iter().filter_map(|e| match e {
            CatalogEntry::Finite(f) => Some(f),
            _ => None,
        })
    }

    pub fn spectral_pair_count(&self) -> usize {
        self.spectral().map(|s| s.pairs.len()).sum()
    }
}

fn err(location: &str, message: impl Into<String>) -> SciError {
    SciError::Catalog {
        location: location.to_string(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Json, key: &str, loc: &str) -> Result<&'a Json> {
    obj.get(key).ok_or_else(|| err(loc, format!("missing field `{key}`")))
}

fn array<'a>(v: &'a Json, loc: &str) -> Result<&'a Vec<Json>> {
    v.as_array().ok_or_else(|| err(loc, "expected an array"))
}

fn string<'a>(v: &'a Json, loc: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| err(loc, "expected a string"))
}

fn rational(v: &Json, loc: &str) -> Result<Rational> {
    match v {
        Json::String(s) => parse_rational(s).map_err(|e| err(loc, e.to_string())),
        Json::Number(n) => match n.as_i64() {
            Some(i) => Ok(Rational::from_integer(i.into())),
            None => parse_rational(&n.to_string()).map_err(|e| err(loc, e.to_string())),
        },
        _ => Err(err(loc, "expected a rational (string like \"1/3\" or a number)")),
    }
}

fn rationals(v: &Json, loc: &str) -> Result<Vec<Rational>> {
    array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{loc}[{i}]")))
        .collect()
}

fn integers(v: &Json, loc: &str) -> Result<Vec<i64>> {
    array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_i64().ok_or_else(|| err(&format!("{loc}[{i}]"), "expected an integer")))
        .collect()
}

fn interval(v: &Json, loc: &str) -> Result<Interval> {
    let ends = rationals(v, loc)?;
    let [a, b]: [Rational; 2] = ends
        .try_into()
        .map_err(|_| err(loc, "an interval is a pair [a, b]"))?;
    Interval::new(a, b).map_err(|e| err(loc, e.to_string()))
}

fn parse_entry(entry: &Json, loc: &str) -> Result<CatalogEntry> {
    let kind = string(field(entry, "problem", loc)?, &format!("{loc}.problem"))?;
    let params = field(entry, "params", loc)?;
    let ploc = format!("{loc}.params");
    if !params.is_object() {
        return Err(err(&ploc, "expected an object"));
    }
    match kind {
        "integration" => {
            let interval = interval(field(params, "interval", &ploc)?, &format!("{ploc}.interval"))?;
            let functions = match params.get("functions") {
                None => default_functions(),
                Some(fs) => {
                    let floc = format!("{ploc}.functions");
                    array(fs, &floc)?
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            let l = format!("{floc}[{i}]");
                            FunctionDescription::parse(string(f, &l)?).map_err(|e| err(&l, e.to_string()))
                        })
                        .collect::<Result<_>>()?
                }
            };
            Ok(CatalogEntry::Integration(IntegrationEntry {
                degenerate: interval.is_degenerate(),
                interval,
                functions,
            }))
        }
        "spectral" => {
            let domain = interval(field(params, "domain", &ploc)?, &format!("{ploc}.domain"))?;
            let diagonals = specs(field(params, "diagonals", &ploc)?, &format!("{ploc}.diagonals"))?;
            let wloc = format!("{ploc}.windows");
            let points = rationals(field(params, "windows", &ploc)?, &wloc)?;
            let windows = points
                .into_iter()
                .enumerate()
                .map(|(i, z)| Window::new(z, domain.clone()).map_err(|e| err(&format!("{wloc}[{i}]"), e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let mut pairs = Vec::new();
            for operator in &diagonals {
                for window in &windows {
                    pairs.push(SpectralInput {
                        operator: operator.clone(),
                        window: window.clone(),
                    });
                }
            }
            let stabilizers = match params.get("stabilizers") {
                None => Vec::new(),
                Some(v) => {
                    let sloc = format!("{ploc}.stabilizers");
                    specs(v, &sloc)?
                        .into_iter()
                        .enumerate()
                        .map(|(i, b)| {
                            StabilizerSpec::certify(b, domain.clone()).map_err(|e| err(&format!("{sloc}[{i}]"), e.to_string()))
                        })
                        .collect::<Result<_>>()?
                }
            };
            Ok(CatalogEntry::Spectral(SpectralEntry {
                domain,
                pairs,
                stabilizers,
            }))
        }
        "koopman" => {
            let wloc = format!("{ploc}.weights");
            let space = FiniteSpace::new(rationals(field(params, "weights", &ploc)?, &wloc)?)
                .map_err(|e| err(&wloc, e.to_string()))?;
            let maps = match params.get("maps") {
                None => None,
                Some(v) => {
                    let mloc = format!("{ploc}.maps");
                    let maps = array(v, &mloc)?
                        .iter()
                        .enumerate()
                        .map(|(i, m)| {
                            let l = format!("{mloc}[{i}]");
                            let images: Vec<usize> = integers(m, &l)?
                                .into_iter()
                                .map(|x| usize::try_from(x).unwrap_or(0))
                                .collect();
                            if images.len() != space.size() {
                                return Err(err(&l, format!("map has {} entries, space has {}", images.len(), space.size())));
                            }
                            MapTable::from_one_based(&images).map_err(|e| err(&l, e.to_string()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Some(maps)
                }
            };
            Ok(CatalogEntry::Koopman(KoopmanEntry { space, maps }))
        }
        "finite" => {
            let name = string(field(params, "name", &ploc)?, &format!("{ploc}.name"))?.to_string();
            let iloc = format!("{ploc}.inputs");
            let inputs = array(field(params, "inputs", &ploc)?, &iloc)?
                .iter()
                .enumerate()
                .map(|(i, x)| string(x, &format!("{iloc}[{i}]")).map(str::to_string))
                .collect::<Result<Vec<_>>>()?;
            let carrier = integers(field(params, "carrier", &ploc)?, &format!("{ploc}.carrier"))?;
            let tloc = format!("{ploc}.target");
            let target = integers(field(params, "target", &ploc)?, &tloc)?;
            if target.len() != inputs.len() {
                return Err(err(&tloc, "one target value per input"));
            }
            if let Some(t) = target.iter().find(|t| !carrier.contains(t)) {
                return Err(err(&tloc, format!("target value {t} is outside the carrier")));
            }
            let qloc = format!("{ploc}.queries");
            let queries = array(field(params, "queries", &ploc)?, &qloc)?
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    let l = format!("{qloc}[{i}]");
                    let pair = array(q, &l)?;
                    if pair.len() != 2 {
                        return Err(err(&l, "a query is [name, [values per input]]"));
                    }
                    let table = integers(&pair[1], &format!("{l}[1]"))?;
                    if table.len() != inputs.len() {
                        return Err(err(&l, "one query value per input"));
                    }
                    Ok((string(&pair[0], &format!("{l}[0]"))?.to_string(), table))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CatalogEntry::Finite(FiniteProblem {
                name,
                inputs,
                carrier,
                target,
                queries,
            }))
        }
        other => Err(err(
            &format!("{loc}.problem"),
            format!("unknown problem kind `{other}` (integration|spectral|koopman|finite)"),
        )),
    }
}

fn specs(v: &Json, loc: &str) -> Result<Vec<DiagonalSpec>> {
    array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let l = format!("{loc}[{i}]");
            DiagonalSpec::parse(string(s, &l)?).map_err(|e| err(&l, e.to_string()))
        })
        .collect()
}

/// Parses a catalog document: `{"schema_version": 1, "entries": [...]}`, a bare
/// array of entries, or a single entry.
pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let doc: Json = serde_json::from_str(text)
        .map_err(|e| err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let entries: Vec<(String, &Json)> = match &doc {
        Json::Array(items) => items.iter().enumerate().map(|(i, e)| (format!("[{i}]"), e)).collect(),
        Json::Object(obj) if obj.contains_key("entries") => {
            if let Some(v) = obj.get("schema_version") {
                if v.as_u64() != Some(SCHEMA_VERSION) {
                    return Err(err("schema_version", format!("unsupported schema version {v}")));
                }
            }
            array(&obj["entries"], "entries")?
                .iter()
                .enumerate()
                .map(|(i, e)| (format!("entries[{i}]"), e))
                .collect()
        }
        Json::Object(_) => vec![("$".to_string(), &doc)],
        _ => return Err(err("$", "expected an object or an array")),
    };
    let entries = entries
        .into_iter()
        .map(|(loc, e)| parse_entry(e, &loc))
        .collect::<Result<_>>()?;
    Ok(Catalog { entries })
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), e.to_string()))?;
    parse_catalog(&text)
}

pub fn default_catalog() -> Catalog {
    parse_catalog(DEFAULT_CATALOG).expect("shipped catalog parses")
}
