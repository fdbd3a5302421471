//! Separable randomizations classified by density functions.
//!
//! A [`ModelCatalog`] lists the isomorphism types of countable models with
//! their embeddability preorder; a [`DensityProfile`] weighs those types.
//! One profile embeds into another exactly when every up-closed set of types
//! carries no more weight on the left than on the right, which is the Hall
//! condition of the transport problem along embeddability arcs.

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

use crate::flow::{self, TransportPlan};
use crate::rational;

/// Largest catalog whose up-closed sets are enumerated directly.
pub const UPSET_ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RandomizationError {
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("embeds is not a preorder: {0}")]
    NotAPreorder(String),
    #[error("embeds is not antisymmetric: {0} and {1} embed into each other")]
    NotAPartialOrder(String, String),
    #[error("profiles are over different catalogs")]
    CatalogMismatch,
    #[error("unknown model id {0:?}")]
    UnknownId(String),
    #[error("weight of {0:?} is negative")]
    NegativeWeight(String),
    #[error("total mass is {0}, expected 1")]
    BadTotalMass(String),
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
}

/// Model types and the relation "embeds into" between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelCatalog {
    ids: Vec<String>,
    embeds: Vec<Vec<bool>>,
}

#[derive(Deserialize)]
struct CatalogWire {
    ids: Vec<String>,
    embeds: Vec<Vec<bool>>,
}

impl<'de> Deserialize<'de> for ModelCatalog {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = CatalogWire::deserialize(d)?;
        ModelCatalog::new(w.ids, w.embeds).map_err(D::Error::custom)
    }
}

/// Which preorder axioms a relation satisfies, with one witness per failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogReport {
    pub reflexive: bool,
    pub transitive: bool,
    pub antisymmetric: bool,
    pub is_partial_order: bool,
    /// Distinct ids that embed into each other.
    pub mutual_pairs: Vec<(String, String)>,
    pub missing_reflexive: Option<String>,
    /// `(a, b, c)` with `a ≤ b ≤ c` but not `a ≤ c`.
    pub broken_transitivity: Option<(String, String, String)>,
}

impl ModelCatalog {
    /// Checks shape and id uniqueness only; see [`validate_catalog`] for the
    /// order axioms.
    pub fn new(ids: Vec<String>, embeds: Vec<Vec<bool>>) -> Result<Self, RandomizationError> {
        if ids.is_empty() {
            return Err(RandomizationError::InvalidCatalog("no ids".into()));
        }
        if embeds.len() != ids.len() || embeds.iter().any(|row| row.len() != ids.len()) {
            return Err(RandomizationError::InvalidCatalog(format!(
                "embeds must be a {0}x{0} matrix",
                ids.len()
            )));
        }
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(RandomizationError::InvalidCatalog("duplicate ids".into()));
        }
        Ok(ModelCatalog { ids, embeds })
    }

    /// Catalog of the order `ids[i] ≤ ids[j]` iff `i ≤ j`.
    pub fn chain(ids: &[&str]) -> Self {
        let n = ids.len();
        let embeds = (0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect();
        ModelCatalog::new(ids.iter().map(|s| s.to_string()).collect(), embeds).expect("chain is well formed")
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn embeds(&self, i: usize, j: usize) -> bool {
        self.embeds[i][j]
    }

    pub fn relation(&self) -> &[Vec<bool>] {
        &self.embeds
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn report(&self) -> CatalogReport {
        let n = self.len();
        let e = &self.embeds;
        let missing_reflexive = (0..n).find(|&i| !e[i][i]).map(|i| self.ids[i].clone());
        let mut broken_transitivity = None;
        'outer: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if e[a][b] && e[b][c] && !e[a][c] {
                        broken_transitivity =
                            Some((self.ids[a].clone(), self.ids[b].clone(), self.ids[c].clone()));
                        break 'outer;
                    }
                }
            }
        }
        let mutual_pairs: Vec<(String, String)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| e[i][j] && e[j][i])
            .map(|(i, j)| (self.ids[i].clone(), self.ids[j].clone()))
            .collect();
        let reflexive = missing_reflexive.is_none();
        let transitive = broken_transitivity.is_none();
        let antisymmetric = mutual_pairs.is_empty();
        CatalogReport {
            reflexive,
            transitive,
            antisymmetric,
            is_partial_order: reflexive && transitive && antisymmetric,
            mutual_pairs,
            missing_reflexive,
            broken_transitivity,
        }
    }

    /// Bitmask of everything `i` embeds into.
    fn up_masks(&self) -> Vec<u64> {
        (0..self.len())
            .map(|i| (0..self.len()).filter(|&j| self.embeds[i][j]).fold(0, |m, j| m | 1 << j))
            .collect()
    }

    /// Smallest up-closed set containing `seed`.
    pub fn up_closure(&self, seed: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.len()];
        let mut stack = seed.to_vec();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut inside[i], true) {
                continue;
            }
            stack.extend((0..self.len()).filter(|&j| self.embeds[i][j] && !inside[j]));
        }
        (0..self.len()).filter(|&i| inside[i]).collect()
    }

    pub fn is_up_closed(&self, set: &[usize]) -> bool {
        let mut inside = vec![false; self.len()];
        for &i in set {
            if i >= self.len() {
                return false;
            }
            inside[i] = true;
        }
        set.iter().all(|&i| (0..self.len()).all(|j| !self.embeds[i][j] || inside[j]))
    }
}

/// Report for a preorder, or `NotAPreorder` naming the failing axiom.
pub fn validate_catalog(c: &ModelCatalog) -> Result<CatalogReport, RandomizationError> {
    let report = c.report();
    if let Some(id) = &report.missing_reflexive {
        return Err(RandomizationError::NotAPreorder(format!("{id} does not embed into itself")));
    }
    if let Some((a, b, c)) = &report.broken_transitivity {
        return Err(RandomizationError::NotAPreorder(format!(
            "{a} embeds into {b} and {b} into {c}, but not {a} into {c}"
        )));
    }
    Ok(report)
}

/// Topological order of the catalog, choosing the smallest available id at
/// each step. A prime model, embedding into every other, is the unique
/// minimum and so comes first.
pub fn linear_extension(c: &ModelCatalog) -> Result<Vec<String>, RandomizationError> {
    let report = validate_catalog(c)?;
    if let Some((a, b)) = report.mutual_pairs.into_iter().next() {
        return Err(RandomizationError::NotAPartialOrder(a, b));
    }
    let n = c.len();
    let mut indegree: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| i != j && c.embeds[i][j]).count()).collect();
    let mut ready: BTreeSet<(&str, usize)> =
        (0..n).filter(|&j| indegree[j] == 0).map(|j| (c.ids[j].as_str(), j)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(c.ids[i].clone());
        for j in 0..n {
            if j != i && c.embeds[i][j] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert((c.ids[j].as_str(), j));
                }
            }
        }
    }
    Ok(order)
}

/// Weights `ρ` on the ids of a preorder catalog, summing to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    catalog: ModelCatalog,
    rho: Vec<BigRational>,
}

impl DensityProfile {
    /// `rho[i]` is the weight of `catalog.ids()[i]`.
    pub fn new(catalog: ModelCatalog, rho: Vec<BigRational>) -> Result<Self, RandomizationError> {
        validate_catalog(&catalog)?;
        if rho.len() != catalog.len() {
            return Err(RandomizationError::InvalidCatalog(format!(
                "{} weights for {} ids",
                rho.len(),
                catalog.len()
            )));
        }
        if let Some(i) = rho.iter().position(|w| w.is_negative()) {
            return Err(RandomizationError::NegativeWeight(catalog.ids[i].clone()));
        }
        let total: BigRational = rho.iter().sum();
        if !total.is_one() {
            return Err(RandomizationError::BadTotalMass(rational::format(&total)));
        }
        Ok(DensityProfile { catalog, rho })
    }

    /// Weights by id; ids left out weigh zero.
    pub fn from_map(
        catalog: ModelCatalog,
        weights: &BTreeMap<String, BigRational>,
    ) -> Result<Self, RandomizationError> {
        let mut rho = vec![BigRational::zero(); catalog.len()];
        for (id, w) in weights {
            let i = catalog.index_of(id).ok_or_else(|| RandomizationError::UnknownId(id.clone()))?;
            rho[i] = w.clone();
        }
        DensityProfile::new(catalog, rho)
    }

    /// All mass on one id.
    pub fn dirac(catalog: ModelCatalog, id: usize) -> Result<Self, RandomizationError> {
        let rho = (0..catalog.len()).map(|i| if i == id { BigRational::one() } else { BigRational::zero() }).collect();
        DensityProfile::new(catalog, rho)
    }

    pub fn catalog(&self) -> &ModelCatalog {
        &self.catalog
    }

    pub fn rho(&self) -> &[BigRational] {
        &self.rho
    }

    pub fn weight_of(&self, set: &[usize]) -> BigRational {
        set.iter().map(|&i| &self.rho[i]).sum()
    }
}

/// On-disk profile: `{"rho": {"M0": "1/2", …}}`, optionally with the
/// catalog embedded under `"catalog"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<ModelCatalog>,
    pub rho: BTreeMap<String, String>,
}

impl ProfileFile {
    /// Parsed weights; the path of a bad entry is `rho.<id>`.
    pub fn weights(&self) -> Result<BTreeMap<String, BigRational>, (String, String)> {
        self.rho
            .iter()
            .map(|(id, w)| {
                rational::parse(w).map(|v| (id.clone(), v)).map_err(|e| (format!("rho.{id}"), e.to_string()))
            })
            .collect()
    }
}

impl Serialize for DensityProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProfileFile {
            catalog: Some(self.catalog.clone()),
            rho: self
                .catalog
                .ids
                .iter()
                .zip(&self.rho)
                .map(|(id, w)| (id.clone(), rational::format(w)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = ProfileFile::deserialize(d)?;
        let catalog = file.catalog.clone().ok_or_else(|| D::Error::missing_field("catalog"))?;
        let weights = file.weights().map_err(|(path, reason)| D::Error::custom(format!("{path}: {reason}")))?;
        DensityProfile::from_map(catalog, &weights).map_err(D::Error::custom)
    }
}

fn same_catalog(p: &DensityProfile, q: &DensityProfile) -> Result<(), RandomizationError> {
    if p.catalog != q.catalog {
        return Err(RandomizationError::CatalogMismatch);
    }
    Ok(())
}

/// An up-closed set `U` with `Σ_U p.rho > Σ_U q.rho`, or `None` when `p`
/// is dominated on every up-closed set.
///
/// Catalogs up to [`UPSET_ENUMERATION_LIMIT`] ids are searched exhaustively
/// and the returned set is the one with the smallest bitmask; larger ones use
/// the cut left by a failed transport.
pub fn upset_violation(
    p: &DensityProfile,
    q: &DensityProfile,
) -> Result<Option<Vec<usize>>, RandomizationError> {
    same_catalog(p, q)?;
    let c = &p.catalog;
    if c.len() > UPSET_ENUMERATION_LIMIT {
        let cut = flow::transport_or_cut(&p.rho, &q.rho, |i, j| c.embeds[i][j]).err();
        return Ok(cut.map(|a| c.up_closure(&a)));
    }
    let up = c.up_masks();
    let closed = |mask: u64| (0..c.len()).all(|i| mask & (1 << i) == 0 || up[i] & !mask == 0);
    let members = |mask: u64| (0..c.len()).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>();

    // p − q over a common denominator; small enough for machine integers in
    // every realistic profile
    let denom = p.rho.iter().chain(&q.rho).fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let scaled: Option<Vec<i128>> = p
        .rho
        .iter()
        .zip(&q.rho)
        .map(|(a, b)| ((a - b) * BigRational::from_integer(denom.clone())).to_integer().to_i128())
        .collect();
    let full = 1u64 << c.len();
    match scaled {
        Some(diff) if diff.iter().map(|d| d.unsigned_abs()).sum::<u128>() < i128::MAX as u128 => {
            let mut excess = vec![0i128; full as usize];
            for mask in 1..full {
                let low = mask.trailing_zeros() as usize;
                excess[mask as usize] = excess[(mask & (mask - 1)) as usize] + diff[low];
                if excess[mask as usize] > 0 && closed(mask) {
                    return Ok(Some(members(mask)));
                }
            }
            Ok(None)
        }
        _ => {
            for mask in 1..full {
                if closed(mask) {
                    let set = members(mask);
                    if p.weight_of(&set) > q.weight_of(&set) {
                        return Ok(Some(set));
                    }
                }
            }
            Ok(None)
        }
    }
}

/// `Σ_U p.rho ≤ Σ_U q.rho` for every up-closed `U`.
pub fn upset_dominance_embeddable(p: &DensityProfile, q: &DensityProfile) -> Result<bool, RandomizationError> {
    Ok(upset_violation(p, q)?.is_none())
}

/// Transport of `p.rho` onto `q.rho` with mass moving from `i` to `j` only
/// when `i` embeds into `j`.
pub fn flow_embeddable(
    p: &DensityProfile,
    q: &DensityProfile,
) -> Result<Option<TransportPlan>, RandomizationError> {
    same_catalog(p, q)?;
    let c = &p.catalog;
    Ok(flow::transport(&p.rho, &q.rho, |i, j| c.embeds[i][j]))
}

/// Outcome of the Schröder–Bernstein decision for two profiles.
///
/// Failed directions carry an up-closed set on which the dominance breaks;
/// holding directions carry a transport plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomizationVerdict {
    Isomorphic,
    EmbedsOnlyForward { plan: TransportPlan, backward_violation: Vec<usize> },
    EmbedsOnlyBackward { plan: TransportPlan, forward_violation: Vec<usize> },
    Incomparable { forward_violation: Vec<usize>, backward_violation: Vec<usize> },
    /// Mutually embeddable yet different: only possible when the catalog is
    /// not antisymmetric.
    SbFailureWitness { forward: TransportPlan, backward: TransportPlan },
}

impl RandomizationVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            RandomizationVerdict::Isomorphic => "Isomorphic",
            RandomizationVerdict::EmbedsOnlyForward { .. } => "EmbedsOnlyForward",
            RandomizationVerdict::EmbedsOnlyBackward { .. } => "EmbedsOnlyBackward",
            RandomizationVerdict::Incomparable { .. } => "Incomparable",
            RandomizationVerdict::SbFailureWitness { .. } => "SBFailureWitness",
        }
    }
}

pub fn sb_decide_randomization(
    p: &DensityProfile,
    q: &DensityProfile,
) -> Result<RandomizationVerdict, RandomizationError> {
    let forward = upset_violation(p, q)?;
    let backward = upset_violation(q, p)?;
    let plan = |x, y| -> Result<TransportPlan, RandomizationError> {
        flow_embeddable(x, y)?.ok_or_else(|| {
            RandomizationError::InternalContradiction("up-set dominance holds but no transport plan exists".into())
        })
    };
    Ok(match (forward, backward) {
        (None, None) if p.rho == q.rho => RandomizationVerdict::Isomorphic,
        (None, None) => {
            if p.catalog.report().is_partial_order {
                return Err(RandomizationError::InternalContradiction(
                    "different profiles dominate each other over a partial order".into(),
                ));
            }
            RandomizationVerdict::SbFailureWitness { forward: plan(p, q)?, backward: plan(q, p)? }
        }
        (None, Some(backward_violation)) => {
            RandomizationVerdict::EmbedsOnlyForward { plan: plan(p, q)?, backward_violation }
        }
        (Some(forward_violation), None) => {
            RandomizationVerdict::EmbedsOnlyBackward { plan: plan(q, p)?, forward_violation }
        }
        (Some(forward_violation), Some(backward_violation)) => {
            RandomizationVerdict::Incomparable { forward_violation, backward_violation }
        }
    })
}

/// Two distinct ids embedding into each other with all mass on one of them
/// and then on the other, as for `Q ⊔ R` and `R ⊔ Q` over dense linear
/// orders.
pub fn dlo_counterexample() -> (ModelCatalog, DensityProfile, DensityProfile) {
    let catalog = ModelCatalog::new(vec!["M1".into(), "M2".into()], vec![vec![true, true], vec![true, true]])
        .expect("fixed catalog is well formed");
    let p = DensityProfile::dirac(catalog.clone(), 0).expect("fixed profile is valid");
    let q = DensityProfile::dirac(catalog.clone(), 1).expect("fixed profile is valid");
    (catalog, p, q)
}

/// Dirac profiles on the first mutual pair of a preorder, if there is one.
pub fn sb_failure_profiles(c: &ModelCatalog) -> Result<Option<(DensityProfile, DensityProfile)>, RandomizationError> {
    let report = validate_catalog(c)?;
    let Some((a, b)) = report.mutual_pairs.first() else {
        return Ok(None);
    };
    let (i, j) = (c.index_of(a).expect("id from report"), c.index_of(b).expect("id from report"));
    Ok(Some((DensityProfile::dirac(c.clone(), i)?, DensityProfile::dirac(c.clone(), j)?)))
}
