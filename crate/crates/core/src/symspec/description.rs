use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use super::eigen::eigendecompose;
use super::{SelfAdjointOperator, SpectralError};

/// Two spectral values closer than this are the same point.
pub const VALUE_TOL: f64 = 1e-9;

/// Dimension of an eigenspace: a natural number or the symbolic `INFINITE`,
/// which sits above every natural. Only comparisons are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EigenMultiplicity {
    Finite(u64),
    Infinite,
}

impl EigenMultiplicity {
    pub fn is_eigenvalue(self) -> bool {
        self != EigenMultiplicity::Finite(0)
    }
}

impl Ord for EigenMultiplicity {
    fn cmp(&self, other: &Self) -> Ordering {
        use EigenMultiplicity::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for EigenMultiplicity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for EigenMultiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EigenMultiplicity::Finite(k) => s.serialize_u64(*k),
            EigenMultiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for EigenMultiplicity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Token(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(k) => Ok(EigenMultiplicity::Finite(k)),
            Raw::Token(t) if t == "inf" => Ok(EigenMultiplicity::Infinite),
            Raw::Token(t) => Err(de::Error::custom(format!(
                "multiplicity must be a natural or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Symbolic spectrum: isolated eigenvalues of finite multiplicity plus
/// declared essential points, each carrying the dimension of its eigenspace
/// (possibly zero, possibly infinite).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDescription {
    isolated: Vec<(f64, u64)>,
    essential: Vec<(f64, EigenMultiplicity)>,
}

impl SpectralDescription {
    pub fn new(
        mut isolated: Vec<(f64, u64)>,
        mut essential: Vec<(f64, EigenMultiplicity)>,
    ) -> Result<Self, SpectralError> {
        let bad = |msg: String| Err(SpectralError::InvalidDescription(msg));
        if isolated.iter().map(|p| p.0).chain(essential.iter().map(|p| p.0)).any(|x| !x.is_finite()) {
            return bad("spectral values must be finite".into());
        }
        if let Some(&(v, _)) = isolated.iter().find(|p| p.1 == 0) {
            return bad(format!("isolated value {v} needs a positive multiplicity"));
        }
        isolated.sort_by(|a, b| a.0.total_cmp(&b.0));
        essential.sort_by(|a, b| a.0.total_cmp(&b.0));
        if isolated.windows(2).any(|w| w[1].0 - w[0].0 <= VALUE_TOL) {
            return bad("isolated values must be pairwise distinct".into());
        }
        if essential.windows(2).any(|w| w[1].0 - w[0].0 <= VALUE_TOL) {
            return bad("essential values must be pairwise distinct".into());
        }
        if let Some(&(v, _)) = isolated.iter().find(|(v, _)| find(&essential, *v).is_some()) {
            return bad(format!("value {v} is both isolated and essential"));
        }
        Ok(SpectralDescription { isolated, essential })
    }

    pub fn isolated(&self) -> &[(f64, u64)] {
        &self.isolated
    }

    pub fn essential(&self) -> &[(f64, EigenMultiplicity)] {
        &self.essential
    }

    /// Every point of `σ`, isolated or essential.
    pub fn spectrum(&self) -> impl Iterator<Item = f64> + '_ {
        self.isolated.iter().map(|p| p.0).chain(self.essential.iter().map(|p| p.0))
    }

    /// `dim Ker(A − λ)` as recorded by the description (zero when absent).
    pub fn eigen_multiplicity(&self, value: f64) -> EigenMultiplicity {
        if let Some(&(_, m)) = find(&self.isolated, value) {
            return EigenMultiplicity::Finite(m);
        }
        find(&self.essential, value).map_or(EigenMultiplicity::Finite(0), |p| p.1)
    }

    fn contains(&self, value: f64) -> bool {
        find(&self.isolated, value).is_some() || find(&self.essential, value).is_some()
    }

    fn is_essential(&self, value: f64) -> bool {
        find(&self.essential, value).is_some()
    }
}

impl<'de> Deserialize<'de> for SpectralDescription {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            isolated: Vec<(f64, u64)>,
            #[serde(default)]
            essential: Vec<(f64, EigenMultiplicity)>,
        }
        let raw = Raw::deserialize(d)?;
        SpectralDescription::new(raw.isolated, raw.essential).map_err(de::Error::custom)
    }
}

fn find<T>(list: &[(f64, T)], value: f64) -> Option<&(f64, T)> {
    list.iter().find(|p| (p.0 - value).abs() <= VALUE_TOL)
}

/// Finite-dimensional description of `A`: eigenvalues closer than
/// `cluster_tol` to their neighbour are merged into one isolated point whose
/// multiplicity is the cluster size. The essential part is empty.
pub fn describe(a: &SelfAdjointOperator, cluster_tol: f64) -> Result<SpectralDescription, SpectralError> {
    if !(cluster_tol > 0.0) {
        return Err(SpectralError::InvalidParameter("cluster_tol must be positive".into()));
    }
    let eig = eigendecompose(a)?;
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &x in &eig.values {
        match clusters.last_mut() {
            Some(c) if x - c[c.len() - 1] <= cluster_tol => c.push(x),
            _ => clusters.push(vec![x]),
        }
    }
    let isolated = clusters
        .iter()
        .map(|c| (c.iter().sum::<f64>() / c.len() as f64, c.len() as u64))
        .collect();
    // cluster means may land within VALUE_TOL of each other only when
    // cluster_tol < VALUE_TOL; surface that as a description error
    SpectralDescription::new(isolated, Vec::new())
}

/// `D1 ∼_σ D2`: equal spectra, equal essential spectra and equal
/// multiplicities at every isolated point. Eigenspace dimensions at essential
/// points are not compared.
pub fn spectrally_equivalent(d1: &SpectralDescription, d2: &SpectralDescription) -> bool {
    let same_isolated = d1.isolated.len() == d2.isolated.len()
        && d1
            .isolated
            .iter()
            .zip(&d2.isolated)
            .all(|(a, b)| (a.0 - b.0).abs() <= VALUE_TOL && a.1 == b.1);
    let same_essential = d1.essential.len() == d2.essential.len()
        && d1.essential.iter().zip(&d2.essential).all(|(a, b)| (a.0 - b.0).abs() <= VALUE_TOL);
    same_isolated && same_essential
}

/// Necessary condition for `(H₁, A₁) ↪ (H₂, A₂)`: spectral values stay
/// spectral, essential points stay essential, and every eigenvalue of `D1`
/// is an eigenvalue of `D2` with at least the same multiplicity.
///
/// `false` rules an embedding out. `true` only says these checks pass.
pub fn description_embeddable(d1: &SpectralDescription, d2: &SpectralDescription) -> bool {
    if !d1.spectrum().all(|v| d2.contains(v)) {
        return false;
    }
    if !d1.essential.iter().all(|&(v, _)| d2.is_essential(v)) {
        return false;
    }
    d1.spectrum().all(|v| {
        let m1 = d1.eigen_multiplicity(v);
        !m1.is_eigenvalue() || d2.eigen_multiplicity(v) >= m1
    })
}
