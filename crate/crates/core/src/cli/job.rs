use num::{BigRational, Signed};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

use crate::apra::{ApraError, BlockedPermutationSystem};
use crate::maharam::{Block, MaharamError, MaharamInvariant};
use crate::randomization::{DensityProfile, ModelCatalog, ProfileFile, RandomizationError};
use crate::rational;
use crate::symspec::{EigenMultiplicity, SelfAdjointOperator, SpectralDescription, SpectralError, VALUE_TOL};

use super::CliError;

pub const DEFAULT_OPERATOR_EPSILON: f64 = 1e-6;

/// The five structure families a job can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum JobKind {
    Operators,
    Descriptions,
    Algebras,
    Automorphisms,
    Randomizations,
}

impl JobKind {
    pub fn name(self) -> &'static str {
        match self {
            JobKind::Operators => "operators",
            JobKind::Descriptions => "descriptions",
            JobKind::Algebras => "algebras",
            JobKind::Automorphisms => "automorphisms",
            JobKind::Randomizations => "randomizations",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            JobKind::Operators,
            JobKind::Descriptions,
            JobKind::Algebras,
            JobKind::Automorphisms,
            JobKind::Randomizations,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// A validated pair of structures with the parameters for their kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Operators {
        left: SelfAdjointOperator,
        right: SelfAdjointOperator,
        epsilon: f64,
        cluster_tol: f64,
    },
    Descriptions {
        left: SpectralDescription,
        right: SpectralDescription,
    },
    Algebras {
        left: MaharamInvariant,
        right: MaharamInvariant,
    },
    Automorphisms {
        left: BlockedPermutationSystem,
        right: BlockedPermutationSystem,
        /// `(n, ε)` steps; a single step when no schedule was given.
        schedule: Vec<(usize, BigRational)>,
        from_schedule: bool,
    },
    Randomizations {
        left: DensityProfile,
        right: DensityProfile,
    },
}

impl Job {
    pub fn kind(&self) -> JobKind {
        match self {
            Job::Operators { .. } => JobKind::Operators,
            Job::Descriptions { .. } => JobKind::Descriptions,
            Job::Algebras { .. } => JobKind::Algebras,
            Job::Automorphisms { .. } => JobKind::Automorphisms,
            Job::Randomizations { .. } => JobKind::Randomizations,
        }
    }

    /// Job file form accepted by [`parse_job`].
    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("kind".into(), json!(self.kind().name()));
        match self {
            Job::Operators { left, right, epsilon, cluster_tol } => {
                out.insert("left".into(), serde_json::to_value(left).expect("operator serializes"));
                out.insert("right".into(), serde_json::to_value(right).expect("operator serializes"));
                out.insert("epsilon".into(), json!(epsilon));
                out.insert("cluster_tol".into(), json!(cluster_tol));
            }
            Job::Descriptions { left, right } => {
                out.insert("left".into(), serde_json::to_value(left).expect("description serializes"));
                out.insert("right".into(), serde_json::to_value(right).expect("description serializes"));
            }
            Job::Algebras { left, right } => {
                out.insert("left".into(), serde_json::to_value(left).expect("invariant serializes"));
                out.insert("right".into(), serde_json::to_value(right).expect("invariant serializes"));
            }
            Job::Automorphisms { left, right, schedule, from_schedule } => {
                out.insert("left".into(), serde_json::to_value(left).expect("system serializes"));
                out.insert("right".into(), serde_json::to_value(right).expect("system serializes"));
                if *from_schedule {
                    let steps: Vec<Value> =
                        schedule.iter().map(|(n, e)| json!([n, rational::format(e)])).collect();
                    out.insert("schedule".into(), Value::Array(steps));
                } else {
                    out.insert("tower_height".into(), json!(schedule[0].0));
                    out.insert("epsilon".into(), json!(rational::format(&schedule[0].1)));
                }
            }
            Job::Randomizations { left, right } => {
                let catalog = left.catalog();
                out.insert("catalog".into(), serde_json::to_value(catalog).expect("catalog serializes"));
                for (key, p) in [("left", left), ("right", right)] {
                    let rho: BTreeMap<String, String> = catalog
                        .ids()
                        .iter()
                        .zip(p.rho())
                        .map(|(id, w)| (id.clone(), rational::format(w)))
                        .collect();
                    out.insert(key.into(), json!({ "rho": rho }));
                }
            }
        }
        Value::Object(out)
    }
}

/// Reads a job file: `{"kind": …, "left": …, "right": …, parameters}`.
pub fn parse_job(text: &str) -> Result<Job, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::parse("$", e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| CliError::parse("$", "a job must be an object"))?;
    let kind_name = obj
        .get("kind")
        .ok_or_else(|| CliError::parse("kind", "missing field"))?
        .as_str()
        .ok_or_else(|| CliError::parse("kind", "must be a string"))?;
    let kind = JobKind::from_name(kind_name)
        .ok_or_else(|| CliError::parse("kind", format!("unknown kind {kind_name:?}")))?;
    let known: &[&str] = match kind {
        JobKind::Operators => &["kind", "left", "right", "epsilon", "cluster_tol"],
        JobKind::Descriptions | JobKind::Algebras => &["kind", "left", "right"],
        JobKind::Automorphisms => &["kind", "left", "right", "epsilon", "tower_height", "schedule"],
        JobKind::Randomizations => &["kind", "left", "right", "catalog"],
    };
    if let Some(extra) = obj.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(CliError::parse(extra, format!("unexpected field for a {} job", kind.name())));
    }
    let field = |name: &str| obj.get(name).ok_or_else(|| CliError::parse(name, "missing field"));
    let left = field("left")?;
    let right = field("right")?;
    let params = JobParams {
        epsilon: obj.get("epsilon"),
        cluster_tol: obj.get("cluster_tol"),
        tower_height: obj.get("tower_height"),
        schedule: obj.get("schedule"),
        catalog: obj.get("catalog"),
    };
    build_job(kind, left, right, &params)
}

/// Optional parameters as raw JSON, from a job file or from CLI flags.
#[derive(Debug, Default, Clone, Copy)]
pub struct JobParams<'a> {
    pub epsilon: Option<&'a Value>,
    pub cluster_tol: Option<&'a Value>,
    pub tower_height: Option<&'a Value>,
    pub schedule: Option<&'a Value>,
    pub catalog: Option<&'a Value>,
}

pub fn build_job(kind: JobKind, left: &Value, right: &Value, params: &JobParams) -> Result<Job, CliError> {
    let forbid = |name: &str, v: Option<&Value>| match v {
        Some(_) => Err(CliError::parse(name, format!("not a parameter of {} jobs", kind.name()))),
        None => Ok(()),
    };
    match kind {
        JobKind::Operators => {
            forbid("tower_height", params.tower_height)?;
            forbid("schedule", params.schedule)?;
            forbid("catalog", params.catalog)?;
            let epsilon = match params.epsilon {
                Some(v) => positive_real("epsilon", v)?,
                None => DEFAULT_OPERATOR_EPSILON,
            };
            let cluster_tol = match params.cluster_tol {
                Some(v) => positive_real("cluster_tol", v)?,
                None => VALUE_TOL,
            };
            Ok(Job::Operators { left: operator("left", left)?, right: operator("right", right)?, epsilon, cluster_tol })
        }
        JobKind::Descriptions => {
            for (n, v) in [("epsilon", params.epsilon), ("cluster_tol", params.cluster_tol), ("tower_height", params.tower_height), ("schedule", params.schedule), ("catalog", params.catalog)] {
                forbid(n, v)?;
            }
            Ok(Job::Descriptions { left: description("left", left)?, right: description("right", right)? })
        }
        JobKind::Algebras => {
            for (n, v) in [("epsilon", params.epsilon), ("cluster_tol", params.cluster_tol), ("tower_height", params.tower_height), ("schedule", params.schedule), ("catalog", params.catalog)] {
                forbid(n, v)?;
            }
            Ok(Job::Algebras { left: invariant("left", left)?, right: invariant("right", right)? })
        }
        JobKind::Automorphisms => {
            forbid("cluster_tol", params.cluster_tol)?;
            forbid("catalog", params.catalog)?;
            let lsys = system("left", left)?;
            let rsys = system("right", right)?;
            if lsys.size() != rsys.size() || lsys.blocks() != rsys.blocks() {
                return Err(CliError::validation("same block structure", "left and right differ in N or block sizes"));
            }
            let (schedule, from_schedule) = match params.schedule {
                Some(s) => {
                    if params.tower_height.is_some() || params.epsilon.is_some() {
                        return Err(CliError::parse("schedule", "give either a schedule or tower_height/epsilon"));
                    }
                    (schedule_steps(s)?, true)
                }
                None => {
                    let n = params
                        .tower_height
                        .ok_or_else(|| CliError::parse("tower_height", "missing field"))
                        .and_then(|v| tower_height("tower_height", v))?;
                    let eps = match params.epsilon {
                        Some(v) => nonnegative_rational("epsilon", v)?,
                        None => rational::zero(),
                    };
                    (vec![(n, eps)], false)
                }
            };
            Ok(Job::Automorphisms { left: lsys, right: rsys, schedule, from_schedule })
        }
        JobKind::Randomizations => {
            for (n, v) in [("epsilon", params.epsilon), ("cluster_tol", params.cluster_tol), ("tower_height", params.tower_height), ("schedule", params.schedule)] {
                forbid(n, v)?;
            }
            let shared = params.catalog.map(|c| typed::<ModelCatalogWire>("catalog", c)).transpose()?;
            let shared = shared.map(|w| catalog_from_wire("catalog", w)).transpose()?;
            let lp = profile("left", left, shared.as_ref())?;
            let rp = profile("right", right, shared.as_ref())?;
            if lp.catalog() != rp.catalog() {
                return Err(CliError::validation("same catalog", "left and right profiles use different catalogs"));
            }
            Ok(Job::Randomizations { left: lp, right: rp })
        }
    }
}

/// Deserializes with the offending path in the error.
fn typed<T: DeserializeOwned>(root: &str, v: &Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { root.to_string() } else { format!("{root}.{inner}") };
        CliError::parse(path, e.into_inner().to_string())
    })
}

fn real(path: &str, v: &Value) -> Result<f64, CliError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().or_else(|| {
            rational::parse(s).ok().and_then(|r| num::ToPrimitive::to_f64(&r))
        }),
        _ => None,
    };
    x.filter(|x| x.is_finite()).ok_or_else(|| CliError::parse(path, "expected a real number or \"p/q\""))
}

fn positive_real(path: &str, v: &Value) -> Result<f64, CliError> {
    let x = real(path, v)?;
    if x <= 0.0 {
        return Err(CliError::validation(format!("positive {path}"), format!("{path} = {x}")));
    }
    Ok(x)
}

fn exact_rational(path: &str, v: &Value) -> Result<BigRational, CliError> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(CliError::parse(path, "expected \"p/q\" or a decimal")),
    };
    rational::parse(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

fn nonnegative_rational(path: &str, v: &Value) -> Result<BigRational, CliError> {
    let r = exact_rational(path, v)?;
    if r.is_negative() {
        return Err(CliError::validation(format!("nonnegative {path}"), rational::format(&r)));
    }
    Ok(r)
}

fn tower_height(path: &str, v: &Value) -> Result<usize, CliError> {
    let n = v.as_u64().ok_or_else(|| CliError::parse(path, "expected a positive integer"))?;
    if n == 0 {
        return Err(CliError::validation("positive tower height", "tower height is 0"));
    }
    Ok(n as usize)
}

/// `[[n, "ε"], …]` with strictly decreasing `1/n + ε`.
pub fn schedule_steps(v: &Value) -> Result<Vec<(usize, BigRational)>, CliError> {
    let items = v.as_array().ok_or_else(|| CliError::parse("schedule", "expected a list of [n, epsilon] pairs"))?;
    if items.is_empty() {
        return Err(CliError::validation("nonempty schedule", "schedule has no steps"));
    }
    let mut steps = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        let pair = item
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| CliError::parse(format!("schedule[{k}]"), "expected [n, epsilon]"))?;
        let n = tower_height(&format!("schedule[{k}][0]"), &pair[0])?;
        let e = nonnegative_rational(&format!("schedule[{k}][1]"), &pair[1])?;
        steps.push((n, e));
    }
    let bound = |(n, e): &(usize, BigRational)| rational::ratio(1, *n as i64) + e;
    if steps.windows(2).any(|w| bound(&w[1]) >= bound(&w[0])) {
        return Err(CliError::validation("decreasing schedule", "bounds 1/n + epsilon must strictly decrease"));
    }
    Ok(steps)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixWire {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

fn operator(path: &str, v: &Value) -> Result<SelfAdjointOperator, CliError> {
    let w: MatrixWire = typed(path, v)?;
    if w.rows.len() != w.dim || w.dim == 0 {
        return Err(CliError::validation("shape", format!("{path}: dim {} with {} rows", w.dim, w.rows.len())));
    }
    SelfAdjointOperator::from_rows(&w.rows).map_err(|e| spectral_validation(path, e))
}

fn spectral_validation(path: &str, e: SpectralError) -> CliError {
    let invariant = match e {
        SpectralError::NotSymmetric { .. } => "symmetry",
        SpectralError::NonFinite { .. } => "finite entries",
        SpectralError::BadShape => "shape",
        SpectralError::InvalidDescription(_) => "description",
        _ => "operator",
    };
    CliError::validation(invariant, format!("{path}: {e}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptionWire {
    #[serde(default)]
    isolated: Vec<(f64, u64)>,
    #[serde(default)]
    essential: Vec<(f64, EigenMultiplicity)>,
}

fn description(path: &str, v: &Value) -> Result<SpectralDescription, CliError> {
    let w: DescriptionWire = typed(path, v)?;
    SpectralDescription::new(w.isolated, w.essential).map_err(|e| spectral_validation(path, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvariantWire {
    #[serde(default)]
    atoms: Vec<String>,
    #[serde(default)]
    blocks: Vec<(String, u32)>,
}

fn invariant(path: &str, v: &Value) -> Result<MaharamInvariant, CliError> {
    let w: InvariantWire = typed(path, v)?;
    let parse = |p: String, s: &str| rational::parse(s).map_err(|e| CliError::parse(p, e.to_string()));
    let atoms = w
        .atoms
        .iter()
        .enumerate()
        .map(|(k, s)| parse(format!("{path}.atoms[{k}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    let blocks = w
        .blocks
        .iter()
        .enumerate()
        .map(|(k, (s, kappa))| Ok(Block::new(parse(format!("{path}.blocks[{k}][0]"), s)?, *kappa)))
        .collect::<Result<Vec<_>, CliError>>()?;
    MaharamInvariant::new(atoms, blocks).map_err(|e| {
        let invariant = match e {
            MaharamError::BadTotalMass(_) => "unit mass",
            MaharamError::NonPositiveWeight(_) => "positive weights",
            _ => "invariant",
        };
        CliError::validation(invariant, format!("{path}: {e}"))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemWire {
    #[serde(rename = "N")]
    n: usize,
    blocks: Vec<usize>,
    pi: Vec<usize>,
}

fn system(path: &str, v: &Value) -> Result<BlockedPermutationSystem, CliError> {
    let w: SystemWire = typed(path, v)?;
    BlockedPermutationSystem::new(w.n, w.blocks, w.pi).map_err(|e| match e {
        ApraError::InvalidSystem(msg) => CliError::validation("permutation system", format!("{path}: {msg}")),
        other => CliError::validation("permutation system", format!("{path}: {other}")),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelCatalogWire {
    ids: Vec<String>,
    embeds: Vec<Vec<bool>>,
}

fn catalog_from_wire(path: &str, w: ModelCatalogWire) -> Result<ModelCatalog, CliError> {
    ModelCatalog::new(w.ids, w.embeds).map_err(|e| randomization_validation(path, e))
}

fn randomization_validation(path: &str, e: RandomizationError) -> CliError {
    let invariant = match e {
        RandomizationError::BadTotalMass(_) => "unit mass",
        RandomizationError::NegativeWeight(_) => "nonnegative weights",
        RandomizationError::NotAPreorder(_) => "preorder",
        RandomizationError::UnknownId(_) => "known ids",
        RandomizationError::CatalogMismatch => "same catalog",
        _ => "catalog",
    };
    CliError::validation(invariant, format!("{path}: {e}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileWire {
    #[serde(default)]
    catalog: Option<ModelCatalogWire>,
    rho: BTreeMap<String, String>,
}

fn profile(path: &str, v: &Value, shared: Option<&ModelCatalog>) -> Result<DensityProfile, CliError> {
    let w: ProfileWire = typed(path, v)?;
    let own = w.catalog.map(|c| catalog_from_wire(&format!("{path}.catalog"), c)).transpose()?;
    let catalog = match (own, shared) {
        (Some(own), Some(shared)) if &own != shared => {
            return Err(CliError::validation("same catalog", format!("{path}: embedded catalog differs from the shared one")));
        }
        (Some(own), _) => own,
        (None, Some(shared)) => shared.clone(),
        (None, None) => return Err(CliError::parse(format!("{path}.catalog"), "no catalog given")),
    };
    let file = ProfileFile { catalog: None, rho: w.rho };
    let weights = file.weights().map_err(|(p, reason)| CliError::parse(format!("{path}.{p}"), reason))?;
    DensityProfile::from_map(catalog, &weights).map_err(|e| randomization_validation(path, e))
}
