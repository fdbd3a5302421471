//! Finite stand-ins for atomless probability algebras with an automorphism.
//!
//! A [`BlockedPermutationSystem`] has `N` atoms of measure `1/N`, split into
//! consecutive invariant blocks, and a permutation `pi` preserving every
//! block. Rokhlin towers are read off the cycles of `pi`, and two systems
//! with the same block sizes are matched tower by tower into a conjugacy
//! whose distance to the target is at most `1/n + ε`.

use num::{BigRational, One, Signed, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::rational::{self, ratio};

/// Largest `N` for which [`sup_distance`] enumerates all `2^N` subsets.
pub const SUP_EXACT_LIMIT: usize = 16;

/// Random subsets evaluated for the lower end of the interval above
/// [`SUP_EXACT_LIMIT`].
pub const SUP_SAMPLES: usize = 256;

const SUP_SEED: u64 = 0x5b_d157;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApraError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("systems differ in size or block structure")]
    ShapeMismatch,
    #[error("block {block}: no tower reaches the requested coverage, best relative coverage is {}", rational::format(best))]
    TowerDeficit { block: usize, best: BigRational },
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `N` equal atoms, invariant blocks of consecutive indices, and a
/// block-preserving permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockedPermutationSystem {
    #[serde(rename = "N")]
    n: usize,
    blocks: Vec<usize>,
    pi: Vec<usize>,
}

#[derive(Deserialize)]
struct Wire {
    #[serde(rename = "N")]
    n: usize,
    blocks: Vec<usize>,
    pi: Vec<usize>,
}

impl<'de> Deserialize<'de> for BlockedPermutationSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        BlockedPermutationSystem::new(w.n, w.blocks, w.pi).map_err(D::Error::custom)
    }
}

impl BlockedPermutationSystem {
    pub fn new(n: usize, blocks: Vec<usize>, pi: Vec<usize>) -> Result<Self, ApraError> {
        let bad = |m: String| Err(ApraError::InvalidSystem(m));
        if n == 0 {
            return bad("N must be positive".into());
        }
        if blocks.iter().any(|&b| b == 0) {
            return bad("block sizes must be positive".into());
        }
        if blocks.iter().sum::<usize>() != n {
            return bad(format!("block sizes sum to {}, expected {n}", blocks.iter().sum::<usize>()));
        }
        if pi.len() != n {
            return bad(format!("pi has length {}, expected {n}", pi.len()));
        }
        let mut seen = vec![false; n];
        for &y in &pi {
            if y >= n || std::mem::replace(&mut seen[y], true) {
                return bad("pi is not a permutation".into());
            }
        }
        let sys = BlockedPermutationSystem { n, blocks, pi };
        for x in 0..n {
            if sys.block_of(x) != sys.block_of(sys.pi[x]) {
                return bad(format!("pi moves atom {x} out of its block"));
            }
        }
        Ok(sys)
    }

    /// One block holding all atoms.
    pub fn single_block(pi: Vec<usize>) -> Result<Self, ApraError> {
        Self::new(pi.len(), vec![pi.len()], pi)
    }

    /// The `n`-cycle `x ↦ x + 1 mod n`.
    pub fn cycle(n: usize) -> Result<Self, ApraError> {
        Self::single_block((0..n).map(|x| (x + 1) % n.max(1)).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    /// `[start, end)` of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.blocks[..i].iter().sum();
        start..start + self.blocks[i]
    }

    pub fn block_of(&self, x: usize) -> usize {
        let mut end = 0;
        for (i, &b) in self.blocks.iter().enumerate() {
            end += b;
            if x < end {
                return i;
            }
        }
        unreachable!("atom {x} outside 0..{}", self.n)
    }

    pub fn inverse(&self) -> Vec<usize> {
        invert(&self.pi)
    }

    /// Cycles of `pi` restricted to block `i`, each starting at its smallest
    /// atom, in order of that atom.
    pub fn cycles_in_block(&self, i: usize) -> Vec<Vec<usize>> {
        let range = self.block_range(i);
        let mut seen = vec![false; range.len()];
        let mut cycles = Vec::new();
        for start in range.clone() {
            if seen[start - range.start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x - range.start] {
                seen[x - range.start] = true;
                cycle.push(x);
                x = self.pi[x];
            }
            cycles.push(cycle);
        }
        cycles
    }

    fn same_shape(&self, other: &Self) -> Result<(), ApraError> {
        if self.n != other.n || self.blocks != other.blocks {
            return Err(ApraError::ShapeMismatch);
        }
        Ok(())
    }
}

pub(crate) fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

/// `μ{x : pi^n(x) = x}`: an atom is fixed by `pi^n` exactly when its cycle
/// length divides `n`.
pub fn genericity_defect(sys: &BlockedPermutationSystem, n: usize) -> Result<BigRational, ApraError> {
    if n == 0 {
        return Err(ApraError::InvalidParameter("n must be at least 1".into()));
    }
    let fixed: usize = (0..sys.blocks.len())
        .flat_map(|i| sys.cycles_in_block(i))
        .filter(|c| n % c.len() == 0)
        .map(|c| c.len())
        .sum();
    Ok(ratio(fixed as i64, sys.n as i64))
}

/// Base `c` of a tower `c, pi(c), …, pi^{height−1}(c)` inside one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerCertificate {
    pub block: usize,
    pub base: Vec<usize>,
    pub height: usize,
    /// `height·|base|/N`.
    #[serde(with = "crate::rational::serde_str")]
    pub coverage: BigRational,
    /// `height·|base|/n_i`, the coverage after rescaling the block to mass 1.
    #[serde(with = "crate::rational::serde_str")]
    pub relative_coverage: BigRational,
}

impl TowerCertificate {
    fn from_base(sys: &BlockedPermutationSystem, block: usize, base: Vec<usize>, height: usize) -> Self {
        let covered = (height * base.len()) as i64;
        TowerCertificate {
            block,
            coverage: ratio(covered, sys.n as i64),
            relative_coverage: ratio(covered, sys.blocks[block] as i64),
            base,
            height,
        }
    }

    /// Atoms of the tower, level by level.
    pub fn levels(&self, sys: &BlockedPermutationSystem) -> Vec<Vec<usize>> {
        let mut level = self.base.clone();
        let mut out = Vec::with_capacity(self.height);
        for _ in 0..self.height {
            let next = level.iter().map(|&x| sys.pi[x]).collect();
            out.push(std::mem::replace(&mut level, next));
        }
        out
    }

    /// Re-derives every claim from the system alone.
    pub fn verify(&self, sys: &BlockedPermutationSystem) -> Result<(), String> {
        if self.block >= sys.blocks.len() {
            return Err(format!("block {} does not exist", self.block));
        }
        if self.height == 0 {
            return Err("height must be at least 1".into());
        }
        let range = sys.block_range(self.block);
        if let Some(x) = self.base.iter().find(|x| !range.contains(x)) {
            return Err(format!("base atom {x} lies outside block {}", self.block));
        }
        let mut seen = vec![false; sys.n];
        for (j, level) in self.levels(sys).iter().enumerate() {
            for &x in level {
                if std::mem::replace(&mut seen[x], true) {
                    return Err(format!("atom {x} appears twice, last on level {j}"));
                }
            }
        }
        let expected = TowerCertificate::from_base(sys, self.block, self.base.clone(), self.height);
        if expected.coverage != self.coverage || expected.relative_coverage != self.relative_coverage {
            return Err("claimed coverage does not match the base".into());
        }
        Ok(())
    }
}

/// Tower of the given height in `block` with relative coverage `≥ 1 − ε`.
///
/// Every cycle of length `L` contributes the atoms at positions
/// `0, n, 2n, …` below `⌊L/n⌋·n`, which is the most any base can take from
/// that cycle.
pub fn rokhlin_tower(
    sys: &BlockedPermutationSystem,
    block: usize,
    n: usize,
    epsilon: &BigRational,
) -> Result<TowerCertificate, ApraError> {
    if n == 0 {
        return Err(ApraError::InvalidParameter("tower height must be at least 1".into()));
    }
    if epsilon.is_negative() {
        return Err(ApraError::InvalidParameter("epsilon must be nonnegative".into()));
    }
    if block >= sys.blocks.len() {
        return Err(ApraError::InvalidParameter(format!("block {block} does not exist")));
    }
    let mut base: Vec<usize> = sys
        .cycles_in_block(block)
        .iter()
        .flat_map(|c| c.iter().step_by(n).take(c.len() / n).copied())
        .collect();
    base.sort_unstable();
    let tower = TowerCertificate::from_base(sys, block, base, n);
    if tower.relative_coverage < BigRational::one() - epsilon {
        return Err(ApraError::TowerDeficit { block, best: tower.relative_coverage });
    }
    Ok(tower)
}

/// `μ{x : T(x) ≠ S(x)}`.
pub fn uniform_distance(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
) -> Result<BigRational, ApraError> {
    t.same_shape(s)?;
    Ok(ratio(disagreements(&t.pi, &s.pi) as i64, t.n as i64))
}

fn disagreements(p: &[usize], q: &[usize]) -> usize {
    p.iter().zip(q).filter(|(a, b)| a != b).count()
}

/// `sup_a μ(T(a) △ S(a))`, exactly or as a certified enclosure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SupDistance {
    Exact {
        #[serde(with = "crate::rational::serde_str")]
        value: BigRational,
    },
    Interval {
        #[serde(with = "crate::rational::serde_str")]
        lower: BigRational,
        #[serde(with = "crate::rational::serde_str")]
        upper: BigRational,
    },
}

impl SupDistance {
    /// A value guaranteed to be at least the true supremum.
    pub fn upper(&self) -> &BigRational {
        match self {
            SupDistance::Exact { value } => value,
            SupDistance::Interval { upper, .. } => upper,
        }
    }

    pub fn lower(&self) -> &BigRational {
        match self {
            SupDistance::Exact { value } => value,
            SupDistance::Interval { lower, .. } => lower,
        }
    }
}

/// `μ(T(a) △ S(a))` for the atom set `a`.
pub fn symmetric_difference_measure(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
    a: &[usize],
) -> Result<BigRational, ApraError> {
    t.same_shape(s)?;
    let mut in_t = vec![false; t.n];
    let mut in_s = vec![false; t.n];
    for &x in a {
        if x >= t.n {
            return Err(ApraError::InvalidParameter(format!("atom {x} out of range")));
        }
        in_t[t.pi[x]] = true;
        in_s[s.pi[x]] = true;
    }
    let count = in_t.iter().zip(&in_s).filter(|(u, v)| u != v).count();
    Ok(ratio(count as i64, t.n as i64))
}

/// Exact supremum for `N ≤ 16`; above that an interval whose lower end is
/// the best of an alternating candidate and [`SUP_SAMPLES`] seeded random
/// subsets, and whose upper end is [`uniform_distance`].
pub fn sup_distance(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
) -> Result<SupDistance, ApraError> {
    t.same_shape(s)?;
    if t.n <= SUP_EXACT_LIMIT {
        return Ok(SupDistance::Exact { value: ratio(enumerate_sup(&t.pi, &s.pi) as i64, t.n as i64) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUP_SEED);
    sup_distance_sampled(t, s, &mut rng, SUP_SAMPLES)
}

/// The interval form of [`sup_distance`] at any size, drawing `samples`
/// random subsets from `rng`.
pub fn sup_distance_sampled(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
    rng: &mut dyn RngCore,
    samples: usize,
) -> Result<SupDistance, ApraError> {
    let upper = uniform_distance(t, s)?;
    let mut best = symmetric_difference_measure(t, s, &alternating_candidate(t, s))?;
    for _ in 0..samples {
        if best == upper {
            break;
        }
        let a: Vec<usize> = (0..t.n).filter(|_| rng.gen_bool(0.5)).collect();
        best = best.max(symmetric_difference_measure(t, s, &a)?);
    }
    Ok(SupDistance::Interval { lower: best, upper })
}

/// `T(a) △ S(a) = T(a △ R(a))` with `R = T⁻¹S`, so a set alternating along
/// the cycles of `R` makes the symmetric difference large.
fn alternating_candidate(t: &BlockedPermutationSystem, s: &BlockedPermutationSystem) -> Vec<usize> {
    let t_inv = t.inverse();
    let r: Vec<usize> = (0..t.n).map(|x| t_inv[s.pi[x]]).collect();
    let mut seen = vec![false; t.n];
    let mut a = Vec::new();
    for start in 0..t.n {
        let mut x = start;
        let mut take = true;
        while !seen[x] {
            seen[x] = true;
            if take {
                a.push(x);
            }
            take = !take;
            x = r[x];
        }
    }
    a
}

fn enumerate_sup(p: &[usize], q: &[usize]) -> usize {
    let n = p.len();
    let image = |perm: &[usize], mask: u32| -> u32 {
        (0..n).filter(|&x| mask & (1 << x) != 0).fold(0, |acc, x| acc | (1 << perm[x]))
    };
    (0u32..(1 << n))
        .map(|mask| (image(p, mask) ^ image(q, mask)).count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// `φ ∘ pi ∘ φ⁻¹`, for a `φ` mapping every block onto itself.
pub fn conjugate(
    sys: &BlockedPermutationSystem,
    phi: &[usize],
) -> Result<BlockedPermutationSystem, ApraError> {
    let relabel = BlockedPermutationSystem::new(sys.n, sys.blocks.clone(), phi.to_vec())?;
    let phi_inv = relabel.inverse();
    let pi = (0..sys.n).map(|x| phi[sys.pi[phi_inv[x]]]).collect();
    BlockedPermutationSystem::new(sys.n, sys.blocks.clone(), pi)
}

/// The relabeling `φ` matching `T` to `S` tower by tower, with the bound it
/// was built to meet and the distance it actually achieves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugacyCertificate {
    pub height: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: BigRational,
    pub phi: Vec<usize>,
    /// Equalized towers for `T` and `S`, one pair per block.
    pub towers: Vec<(TowerCertificate, TowerCertificate)>,
    /// `1/n + ε`.
    #[serde(with = "crate::rational::serde_str")]
    pub bound: BigRational,
    /// `μ{x : φTφ⁻¹(x) ≠ S(x)}`.
    #[serde(with = "crate::rational::serde_str")]
    pub measured_distance: BigRational,
}

impl ConjugacyCertificate {
    /// Re-checks the certificate against the two systems.
    pub fn verify(
        &self,
        t: &BlockedPermutationSystem,
        s: &BlockedPermutationSystem,
    ) -> Result<(), String> {
        t.same_shape(s).map_err(|e| e.to_string())?;
        if self.height == 0 || self.epsilon.is_negative() {
            return Err("height must be positive and epsilon nonnegative".into());
        }
        let bound = ratio(1, self.height as i64) + &self.epsilon;
        if bound != self.bound {
            return Err(format!("bound should be {}", rational::format(&bound)));
        }
        let conj = conjugate(t, &self.phi).map_err(|e| format!("phi: {e}"))?;
        let measured = uniform_distance(&conj, s).map_err(|e| e.to_string())?;
        if measured != self.measured_distance {
            return Err(format!("measured distance is {}", rational::format(&measured)));
        }
        if measured > bound {
            return Err("measured distance exceeds the bound".into());
        }
        if self.towers.len() != t.blocks.len() {
            return Err("one tower pair per block is required".into());
        }
        for (i, (ct, cs)) in self.towers.iter().enumerate() {
            if ct.block != i || cs.block != i || ct.height != self.height || cs.height != self.height {
                return Err(format!("tower pair {i} has the wrong block or height"));
            }
            ct.verify(t).map_err(|e| format!("T tower {i}: {e}"))?;
            cs.verify(s).map_err(|e| format!("S tower {i}: {e}"))?;
            if ct.base.len() != cs.base.len() {
                return Err(format!("tower pair {i} has unequal bases"));
            }
            let need = BigRational::one() - block_budget(&self.epsilon, i);
            if ct.relative_coverage < need {
                return Err(format!("tower pair {i} misses its coverage budget"));
            }
        }
        if self.phi != build_phi(t, s, &self.towers) {
            return Err("phi is not the tower matching of the listed towers".into());
        }
        Ok(())
    }
}

/// `ε/2^i` for block index `block`, counting blocks from `i = 1`.
fn block_budget(epsilon: &BigRational, block: usize) -> BigRational {
    let mut e = epsilon.clone();
    for _ in 0..=block {
        e /= BigRational::from_integer(2.into());
        if e.is_zero() {
            break;
        }
    }
    e
}

/// Builds `φ` with `d(φTφ⁻¹, S) ≤ 1/n + ε`.
///
/// In block `i` (from 1) towers of height `n` and relative coverage at least
/// `1 − ε/2^i` are taken for both systems. The larger base loses its
/// lowest-index atoms until both bases have the same size. Base atoms are
/// matched in ascending order by `φ₀`, level `j` is sent by
/// `φ_j = S^j φ₀ T^{-j}`, and the atoms outside the towers are matched in
/// ascending order. `φ T` and `S φ` can then only differ on the top level and
/// on the leftover atoms.
pub fn tower_conjugacy(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
    n: usize,
    epsilon: &BigRational,
) -> Result<ConjugacyCertificate, ApraError> {
    t.same_shape(s)?;
    let mut towers = Vec::with_capacity(t.blocks.len());
    for i in 0..t.blocks.len() {
        let budget = block_budget(epsilon, i);
        let mut ct = rokhlin_tower(t, i, n, &budget)?;
        let mut cs = rokhlin_tower(s, i, n, &budget)?;
        let keep = ct.base.len().min(cs.base.len());
        for (sys, tower) in [(t, &mut ct), (s, &mut cs)] {
            let drop = tower.base.len() - keep;
            let base = tower.base.split_off(drop);
            *tower = TowerCertificate::from_base(sys, i, base, n);
        }
        towers.push((ct, cs));
    }
    let phi = build_phi(t, s, &towers);
    let measured_distance = uniform_distance(&conjugate(t, &phi)?, s)?;
    Ok(ConjugacyCertificate {
        height: n,
        epsilon: epsilon.clone(),
        bound: ratio(1, n as i64) + epsilon,
        phi,
        towers,
        measured_distance,
    })
}

fn build_phi(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
    towers: &[(TowerCertificate, TowerCertificate)],
) -> Vec<usize> {
    let mut phi = vec![usize::MAX; t.n];
    for (i, (ct, cs)) in towers.iter().enumerate() {
        let mut covered_t = vec![false; t.n];
        let mut covered_s = vec![false; t.n];
        for (&c, &c2) in ct.base.iter().zip(&cs.base) {
            let (mut x, mut y) = (c, c2);
            for _ in 0..ct.height {
                phi[x] = y;
                covered_t[x] = true;
                covered_s[y] = true;
                x = t.pi[x];
                y = s.pi[y];
            }
        }
        let rest_t = t.block_range(i).filter(|&x| !covered_t[x]);
        let rest_s = s.block_range(i).filter(|&y| !covered_s[y]);
        for (x, y) in rest_t.zip(rest_s) {
            phi[x] = y;
        }
    }
    phi
}

/// One certificate per `(n, ε)` step; the bounds `1/n + ε` must strictly
/// decrease.
pub fn perturbation_sequence(
    t: &BlockedPermutationSystem,
    s: &BlockedPermutationSystem,
    schedule: &[(usize, BigRational)],
) -> Result<Vec<ConjugacyCertificate>, ApraError> {
    if schedule.is_empty() {
        return Err(ApraError::BadSchedule("schedule is empty".into()));
    }
    if let Some(&(n, _)) = schedule.iter().find(|(n, _)| *n == 0) {
        return Err(ApraError::BadSchedule(format!("tower height {n} is not positive")));
    }
    let bounds: Vec<BigRational> = schedule.iter().map(|(n, e)| ratio(1, *n as i64) + e).collect();
    if let Some(k) = bounds.windows(2).position(|w| w[1] >= w[0]) {
        return Err(ApraError::BadSchedule(format!(
            "bound of step {} ({}) does not decrease from {}",
            k + 1,
            rational::format(&bounds[k + 1]),
            rational::format(&bounds[k])
        )));
    }
    schedule.iter().map(|(n, e)| tower_conjugacy(t, s, *n, e)).collect()
}
