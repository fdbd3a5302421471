//! Generators and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num::{BigRational, One};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sb_kit::apra::*;
use sb_kit::maharam::{Block, MaharamInvariant};
use sb_kit::randomization::ModelCatalog;
use sb_kit::rational::{self, ratio};
use sb_kit::symspec::{EigenMultiplicity, OrthogonalMap, SelfAdjointOperator, SpectralDescription};
use serde_json::{json, Value};

/// Random block-preserving permutation whose cycles all have length at least
/// `min_cycle` (blocks must be at least that large).
pub fn random_system(rng: &mut ChaCha8Rng, blocks: &[usize], min_cycle: usize) -> BlockedPermutationSystem {
    let n: usize = blocks.iter().sum();
    let mut pi = vec![0; n];
    let mut start = 0;
    for &size in blocks {
        let mut atoms: Vec<usize> = (start..start + size).collect();
        atoms.shuffle(rng);
        let mut rest = &atoms[..];
        while !rest.is_empty() {
            let len = if rest.len() < 2 * min_cycle { rest.len() } else { rng.gen_range(min_cycle..=rest.len() - min_cycle) };
            let (cycle, tail) = rest.split_at(len);
            for k in 0..len {
                pi[cycle[k]] = cycle[(k + 1) % len];
            }
            rest = tail;
        }
        start += size;
    }
    BlockedPermutationSystem::new(n, blocks.to_vec(), pi).unwrap()
}

/// Any block-preserving permutation, fixed points allowed.
pub fn any_system(rng: &mut ChaCha8Rng, blocks: &[usize]) -> BlockedPermutationSystem {
    let n: usize = blocks.iter().sum();
    let mut pi = Vec::with_capacity(n);
    let mut start = 0;
    for &size in blocks {
        let mut part: Vec<usize> = (start..start + size).collect();
        part.shuffle(rng);
        pi.extend(part);
        start += size;
    }
    BlockedPermutationSystem::new(n, blocks.to_vec(), pi).unwrap()
}

pub fn random_blocks(rng: &mut ChaCha8Rng, n: usize, parts: usize, min: usize) -> Vec<usize> {
    let mut sizes = vec![min; parts];
    for _ in 0..n - parts * min {
        sizes[rng.gen_range(0..parts)] += 1;
    }
    sizes
}

/// Smallest ε for which every block meets its `ε/2^i` budget in both systems.
pub fn achievable_epsilon(t: &BlockedPermutationSystem, s: &BlockedPermutationSystem, n: usize) -> BigRational {
    let one = BigRational::one();
    (0..t.blocks().len())
        .map(|i| {
            let ct = rokhlin_tower(t, i, n, &one).unwrap();
            let cs = rokhlin_tower(s, i, n, &one).unwrap();
            let worst = ct.relative_coverage.min(cs.relative_coverage);
            (&one - worst) * BigRational::from_integer((1u64 << (i + 1)).into())
        })
        .max()
        .unwrap()
}

/// Every normalized block-only invariant with at most four blocks, cardinal
/// codes in 0..=3 and weights in eighths.
pub fn family() -> Vec<MaharamInvariant> {
    fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        (1..total)
            .flat_map(|first| {
                compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
            })
            .collect()
    }
    let mut out = Vec::new();
    for mask in 1u32..16 {
        let kappas: Vec<u32> = (0..4).filter(|k| mask & (1 << k) != 0).collect();
        for parts in compositions(8, kappas.len()) {
            let blocks = kappas.iter().zip(&parts).map(|(&k, &p)| Block::new(ratio(p, 8), k)).collect();
            out.push(MaharamInvariant::new(vec![], blocks).unwrap());
        }
    }
    out
}

/// Brute-force tail check over every code in range, independent of the
/// library's shortcut of only looking at the codes of `a`.
pub fn tails_dominate(a: &MaharamInvariant, b: &MaharamInvariant) -> bool {
    (0..=4).all(|k| {
        let tail = |inv: &MaharamInvariant| -> BigRational {
            inv.blocks.iter().filter(|blk| blk.kappa.0 >= k).map(|blk| blk.weight.clone()).sum()
        };
        tail(a) <= tail(b)
    })
}

/// Every reflexive, transitive relation on `n` labeled ids.
pub fn preorders(n: usize) -> Vec<ModelCatalog> {
    let off: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("M{i}")).collect();
    let mut out = Vec::new();
    for bits in 0u32..(1 << off.len()) {
        let mut e = vec![vec![false; n]; n];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = true;
        }
        for (k, &(i, j)) in off.iter().enumerate() {
            e[i][j] = bits & (1 << k) != 0;
        }
        let transitive = (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| !(e[a][b] && e[b][c]) || e[a][c])));
        if transitive {
            out.push(ModelCatalog::new(ids.clone(), e).unwrap());
        }
    }
    out
}

/// Weight vectors in quarters summing to 1.
pub fn quarter_profiles(n: usize) -> Vec<Vec<BigRational>> {
    fn go(left: i64, slots: usize, acc: &mut Vec<i64>, out: &mut Vec<Vec<BigRational>>) {
        if slots == 1 {
            acc.push(left);
            out.push(acc.iter().map(|&k| ratio(k, 4)).collect());
            acc.pop();
            return;
        }
        for k in 0..=left {
            acc.push(k);
            go(left - k, slots - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(4, n, &mut Vec::new(), &mut out);
    out
}

/// Up-closed sets by brute force over all subsets.
pub fn upsets(c: &ModelCatalog) -> Vec<Vec<usize>> {
    let n = c.len();
    (0u32..1 << n)
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s| s.iter().all(|&i| (0..n).all(|j| !c.embeds(i, j) || s.contains(&j))))
        .collect()
}

/// Symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SelfAdjointOperator {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-scale..=scale));
    SelfAdjointOperator::symmetrized(&((&m + m.transpose()) * 0.5)).unwrap()
}

/// Orthogonal factor of a QR decomposition of a random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..=1.0));
        let qr = m.qr();
        if qr.r().diagonal().iter().all(|d: &f64| d.abs() > 1e-3) {
            return qr.q();
        }
    }
}

/// `Q·A·Qᵀ`, symmetrized to clear rounding.
pub fn rotate(a: &SelfAdjointOperator, q: &DMatrix<f64>) -> SelfAdjointOperator {
    SelfAdjointOperator::symmetrized(&(q * a.matrix() * q.transpose())).unwrap()
}

pub fn rotate_by(a: &SelfAdjointOperator, u: &OrthogonalMap) -> SelfAdjointOperator {
    rotate(a, u.matrix())
}

/// Operator with exactly the given eigenvalues in a random eigenbasis.
pub fn with_spectrum(rng: &mut ChaCha8Rng, values: &[f64]) -> SelfAdjointOperator {
    let q = random_orthogonal(rng, values.len());
    rotate(&SelfAdjointOperator::diagonal(values).unwrap(), &q)
}

/// Every nonempty description over the values 0, 1, 2 where each value is
/// absent, isolated with multiplicity 1 or 2, or essential with eigenspace
/// dimension 0, 1, 2 or infinite.
pub fn description_family() -> Vec<SpectralDescription> {
    use EigenMultiplicity::{Finite, Infinite};
    let states = 7usize;
    let mut out = Vec::new();
    for code in 1..states.pow(3) {
        let mut isolated = Vec::new();
        let mut essential = Vec::new();
        let mut c = code;
        for v in 0..3 {
            let value = v as f64;
            match c % states {
                0 => {}
                1 => isolated.push((value, 1)),
                2 => isolated.push((value, 2)),
                3 => essential.push((value, Finite(0))),
                4 => essential.push((value, Finite(1))),
                5 => essential.push((value, Finite(2))),
                _ => essential.push((value, Infinite)),
            }
            c /= states;
        }
        out.push(SpectralDescription::new(isolated, essential).unwrap());
    }
    out
}

/// Every leaf of a JSON tree, as a path of object keys and array indices.
pub fn leaf_paths(v: &Value, prefix: &mut Vec<Value>, out: &mut Vec<Vec<Value>>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                prefix.push(Value::String(k.clone()));
                leaf_paths(child, prefix, out);
                prefix.pop();
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                prefix.push(Value::from(i));
                leaf_paths(child, prefix, out);
                prefix.pop();
            }
        }
        _ => out.push(prefix.clone()),
    }
}

pub fn leaf_mut<'a>(v: &'a mut Value, path: &[Value]) -> &'a mut Value {
    path.iter().fold(v, |node, key| match key {
        Value::String(k) => &mut node[k.as_str()],
        Value::Number(i) => &mut node[i.as_u64().unwrap() as usize],
        _ => unreachable!(),
    })
}

pub fn mutate(leaf: &mut Value) {
    *leaf = match leaf.take() {
        Value::Bool(b) => Value::Bool(!b),
        Value::Null => Value::from(0),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => Value::from(u + 1),
            (None, Some(i)) => Value::from(i + 1),
            _ => Value::from(n.as_f64().unwrap() + 1.0),
        },
        Value::String(s) => {
            if let Ok(r) = rational::parse(&s) {
                Value::String(rational::format(&(r + rational::one())))
            } else if let Some(x) = s.parse::<f64>().ok().filter(|x| x.is_finite()) {
                Value::String((x + 1.0).to_string())
            } else {
                Value::String(s + "x")
            }
        }
        other => other,
    };
}

pub fn rational_weights(parts: &[u32]) -> Vec<String> {
    let total: u32 = parts.iter().sum();
    parts.iter().map(|p| format!("{p}/{total}")).collect()
}

pub fn algebras_text(l: &[(u32, u32)], r: &[(u32, u32)]) -> String {
    let side = |v: &[(u32, u32)]| {
        let w = rational_weights(&v.iter().map(|x| x.0).collect::<Vec<_>>());
        let blocks: Vec<Value> = w.iter().zip(v).map(|(w, (_, k))| json!([w, k])).collect();
        json!({ "atoms": [], "blocks": blocks })
    };
    json!({ "kind": "algebras", "left": side(l), "right": side(r) }).to_string()
}

pub fn randomizations_text(embeds: &[Vec<bool>], l: &[u32], r: &[u32]) -> String {
    let ids: Vec<String> = (0..embeds.len()).map(|i| format!("M{i}")).collect();
    let rho = |w: &[u32]| {
        let m: serde_json::Map<String, Value> =
            ids.iter().cloned().zip(rational_weights(w).into_iter().map(Value::String)).collect();
        json!({ "rho": m })
    };
    json!({
        "kind": "randomizations",
        "catalog": { "ids": ids, "embeds": embeds },
        "left": rho(l),
        "right": rho(r),
    })
    .to_string()
}

/// Reflexive-transitive closure of a random relation.
pub fn preorder(n: usize, bits: &[bool]) -> Vec<Vec<bool>> {
    let mut m: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || bits[i * n + j]).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    m
}
