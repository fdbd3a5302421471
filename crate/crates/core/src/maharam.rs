//! Probability algebras up to isomorphism: a decreasing list of atom
//! measures plus homogeneous blocks `α·[0,1]^κ`.
//!
//! Embeddability between two invariants with the same atoms is decided by
//! tail dominance of the block weights and certified by a transport plan that
//! only moves weight upwards in cardinality.

use num::{BigRational, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use crate::flow::{self, TransportPlan};
use crate::rational;

/// `ℵ_k`, coded by `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CardinalCode(pub u32);

impl fmt::Display for CardinalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "aleph_{}", self.0)
    }
}

/// A homogeneous summand `weight · [0,1]^kappa`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub weight: BigRational,
    pub kappa: CardinalCode,
}

impl Block {
    pub fn new(weight: BigRational, kappa: u32) -> Self {
        Block { weight, kappa: CardinalCode(kappa) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaharamError {
    #[error("total mass is {0}, expected 1")]
    BadTotalMass(String),
    #[error("weights must be positive, found {0}")]
    NonPositiveWeight(String),
    #[error("atom lists differ; embeddings between different completions are not considered")]
    AtomMismatch,
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
}

/// Atom measures `t_1 ≥ t_2 ≥ …` and blocks `(α_i, κ_i)`.
///
/// Values built through [`MaharamInvariant::new`] or deserialized are
/// normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaharamInvariant {
    pub atoms: Vec<BigRational>,
    pub blocks: Vec<Block>,
}

impl MaharamInvariant {
    /// Validates and normalizes.
    pub fn new(atoms: Vec<BigRational>, blocks: Vec<Block>) -> Result<Self, MaharamError> {
        normalize(&MaharamInvariant { atoms, blocks })
    }

    /// Total weight of blocks with `κ_i ≥ kappa`.
    pub fn tail(&self, kappa: CardinalCode) -> BigRational {
        self.blocks
            .iter()
            .filter(|b| b.kappa >= kappa)
            .map(|b| &b.weight)
            .sum()
    }

    pub fn block_weights(&self) -> Vec<BigRational> {
        self.blocks.iter().map(|b| b.weight.clone()).collect()
    }

    pub fn is_normalized(&self) -> bool {
        normalize(self).is_ok_and(|n| &n == self)
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    #[serde(default, with = "crate::rational::serde_vec")]
    atoms: Vec<BigRational>,
    #[serde(default)]
    blocks: Vec<(String, u32)>,
}

impl Serialize for MaharamInvariant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            atoms: self.atoms.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| (rational::format(&b.weight), b.kappa.0))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaharamInvariant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = Wire::deserialize(d)?;
        let mut blocks = Vec::with_capacity(wire.blocks.len());
        for (w, k) in wire.blocks {
            blocks.push(Block::new(rational::parse(&w).map_err(D::Error::custom)?, k));
        }
        MaharamInvariant::new(wire.atoms, blocks).map_err(D::Error::custom)
    }
}

/// Canonical form: atoms decreasing, blocks by decreasing `κ` with equal
/// cardinals merged.
pub fn normalize(inv: &MaharamInvariant) -> Result<MaharamInvariant, MaharamError> {
    let weights = inv.atoms.iter().chain(inv.blocks.iter().map(|b| &b.weight));
    let mut total = BigRational::zero();
    for w in weights {
        if !w.is_positive() {
            return Err(MaharamError::NonPositiveWeight(rational::format(w)));
        }
        total += w;
    }
    if total != rational::one() {
        return Err(MaharamError::BadTotalMass(rational::format(&total)));
    }

    let mut atoms = inv.atoms.clone();
    atoms.sort_by(|a, b| b.cmp(a));

    let mut sorted = inv.blocks.clone();
    sorted.sort_by(|a, b| b.kappa.cmp(&a.kappa));
    let mut blocks: Vec<Block> = Vec::with_capacity(sorted.len());
    for b in sorted {
        match blocks.last_mut() {
            Some(last) if last.kappa == b.kappa => last.weight += b.weight,
            _ => blocks.push(b),
        }
    }
    Ok(MaharamInvariant { atoms, blocks })
}

pub fn is_isomorphic(a: &MaharamInvariant, b: &MaharamInvariant) -> bool {
    a.atoms == b.atoms && a.blocks == b.blocks
}

/// Same atoms, and `Σ{α_i : κ_i ≥ κ} ≤ Σ{β_j : λ_j ≥ κ}` for every `κ`.
///
/// Both tails are step functions that only change at the cardinals of `a`
/// or `b`; the left one is constant between consecutive cardinals of `a`
/// while the right one can only decrease, so checking at the cardinals of `a`
/// is enough.
pub fn tail_dominance_embeddable(a: &MaharamInvariant, b: &MaharamInvariant) -> bool {
    a.atoms == b.atoms && a.blocks.iter().all(|blk| a.tail(blk.kappa) <= b.tail(blk.kappa))
}

/// Ships the block weights of `a` onto those of `b`, never lowering the
/// cardinal. Plan indices refer to the block lists of `a` and `b`.
pub fn flow_embeddable(
    a: &MaharamInvariant,
    b: &MaharamInvariant,
) -> Result<Option<TransportPlan>, MaharamError> {
    if a.atoms != b.atoms {
        return Err(MaharamError::AtomMismatch);
    }
    Ok(flow::transport(&a.block_weights(), &b.block_weights(), arc_rule(a, b)))
}

/// `κ_i ≤ λ_j`.
pub fn arc_rule<'a>(
    a: &'a MaharamInvariant,
    b: &'a MaharamInvariant,
) -> impl Fn(usize, usize) -> bool + 'a {
    move |i, j| a.blocks[i].kappa <= b.blocks[j].kappa
}

/// Outcome of the Schröder–Bernstein decision. Embedding verdicts carry the
/// transport plan of each direction that holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SbVerdict {
    Isomorphic { witness: MaharamInvariant },
    EmbedsOnlyForward { plan: TransportPlan },
    EmbedsOnlyBackward { plan: TransportPlan },
    Incomparable,
}

impl SbVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            SbVerdict::Isomorphic { .. } => "Isomorphic",
            SbVerdict::EmbedsOnlyForward { .. } => "EmbedsOnlyForward",
            SbVerdict::EmbedsOnlyBackward { .. } => "EmbedsOnlyBackward",
            SbVerdict::Incomparable => "Incomparable",
        }
    }
}

pub fn sb_decide(a: &MaharamInvariant, b: &MaharamInvariant) -> Result<SbVerdict, MaharamError> {
    let forward = tail_dominance_embeddable(a, b);
    let backward = tail_dominance_embeddable(b, a);
    let plan = |x, y| -> Result<TransportPlan, MaharamError> {
        flow_embeddable(x, y)?.ok_or_else(|| {
            MaharamError::InternalContradiction("tail dominance holds but no transport plan exists".into())
        })
    };
    match (forward, backward) {
        (true, true) if is_isomorphic(a, b) => Ok(SbVerdict::Isomorphic { witness: a.clone() }),
        (true, true) => Err(MaharamError::InternalContradiction(
            "mutual tail dominance between non-isomorphic invariants".into(),
        )),
        (true, false) => Ok(SbVerdict::EmbedsOnlyForward { plan: plan(a, b)? }),
        (false, true) => Ok(SbVerdict::EmbedsOnlyBackward { plan: plan(b, a)? }),
        (false, false) => Ok(SbVerdict::Incomparable),
    }
}
