//! Exact-rational bipartite transport feasibility.
//!
//! Both the probability-algebra and the randomization modules reduce an
//! embedding question to "can the mass on the left be shipped to the mass on
//! the right along permitted arcs". This module answers it with an
//! Edmonds-Karp max-flow over [`BigRational`] capacities and returns the flow
//! as a [`TransportPlan`] certificate.

use num::{BigRational, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// One positive entry `x_ij` of a transport plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub amount: BigRational,
}

/// Sparse nonnegative matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub sources: usize,
    pub targets: usize,
    pub entries: Vec<PlanEntry>,
}

/// Why a plan fails to certify a transport problem.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanViolation {
    #[error("plan shape {got:?} does not match problem shape {expected:?}")]
    Shape {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("entry ({source_index}, {target}) is out of range")]
    OutOfRange { source_index: usize, target: usize },
    #[error("entry ({source_index}, {target}) is not positive")]
    NonPositive { source_index: usize, target: usize },
    #[error("entry ({source_index}, {target}) uses a forbidden arc")]
    ForbiddenArc { source_index: usize, target: usize },
    #[error("row {0} does not sum to its supply")]
    RowSum(usize),
    #[error("column {0} does not sum to its demand")]
    ColumnSum(usize),
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<BigRational> {
        let mut sums = vec![BigRational::zero(); self.sources];
        for e in &self.entries {
            if e.source < self.sources {
                sums[e.source] += &e.amount;
            }
        }
        sums
    }

    pub fn column_sums(&self) -> Vec<BigRational> {
        let mut sums = vec![BigRational::zero(); self.targets];
        for e in &self.entries {
            if e.target < self.targets {
                sums[e.target] += &e.amount;
            }
        }
        sums
    }

    /// Amount shipped from `source` to `target` (zero when absent).
    pub fn amount(&self, source: usize, target: usize) -> BigRational {
        self.entries
            .iter()
            .filter(|e| e.source == source && e.target == target)
            .fold(BigRational::zero(), |acc, e| acc + &e.amount)
    }

    /// Re-checks every certificate condition in exact arithmetic.
    pub fn check(
        &self,
        supply: &[BigRational],
        demand: &[BigRational],
        allowed: impl Fn(usize, usize) -> bool,
    ) -> Result<(), PlanViolation> {
        if (self.sources, self.targets) != (supply.len(), demand.len()) {
            return Err(PlanViolation::Shape {
                got: (self.sources, self.targets),
                expected: (supply.len(), demand.len()),
            });
        }
        for e in &self.entries {
            let (source_index, target) = (e.source, e.target);
            if source_index >= self.sources || target >= self.targets {
                return Err(PlanViolation::OutOfRange { source_index, target });
            }
            if !e.amount.is_positive() {
                return Err(PlanViolation::NonPositive { source_index, target });
            }
            if !allowed(source_index, target) {
                return Err(PlanViolation::ForbiddenArc { source_index, target });
            }
        }
        for (i, (got, want)) in self.row_sums().iter().zip(supply).enumerate() {
            if got != want {
                return Err(PlanViolation::RowSum(i));
            }
        }
        for (j, (got, want)) in self.column_sums().iter().zip(demand).enumerate() {
            if got != want {
                return Err(PlanViolation::ColumnSum(j));
            }
        }
        Ok(())
    }
}

struct Edge {
    to: usize,
    rev: usize,
    cap: Option<BigRational>,
    flow: BigRational,
}

impl Edge {
    fn residual(&self) -> Option<BigRational> {
        self.cap.as_ref().map(|c| c - &self.flow)
    }
}

struct Network {
    adj: Vec<Vec<Edge>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network { adj: (0..nodes).map(|_| Vec::new()).collect() }
    }

    // `cap == None` is an uncapacitated arc.
    fn add_edge(&mut self, from: usize, to: usize, cap: Option<BigRational>) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let back = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Edge { to, rev: back, cap, flow: BigRational::zero() });
        self.adj[to].push(Edge {
            to: from,
            rev: fwd,
            cap: Some(BigRational::zero()),
            flow: BigRational::zero(),
        });
        (from, fwd)
    }

    fn has_room(edge: &Edge) -> bool {
        match edge.residual() {
            None => true,
            Some(r) => r.is_positive(),
        }
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for e in &self.adj[u] {
                if !seen[e.to] && Self::has_room(e) {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    fn max_flow(&mut self, s: usize, t: usize) -> BigRational {
        let mut total = BigRational::zero();
        loop {
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (k, e) in self.adj[u].iter().enumerate() {
                    if !seen[e.to] && Self::has_room(e) {
                        seen[e.to] = true;
                        parent[e.to] = Some((u, k));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            // bottleneck; the source and sink arcs are always capacitated
            let mut bottleneck: Option<BigRational> = None;
            let mut v = t;
            while let Some((u, k)) = parent[v] {
                if let Some(r) = self.adj[u][k].residual() {
                    bottleneck = Some(match bottleneck {
                        Some(b) if b <= r => b,
                        _ => r,
                    });
                }
                v = u;
            }
            let push = bottleneck.expect("augmenting path without a capacitated arc");
            let mut v = t;
            while let Some((u, k)) = parent[v] {
                let rev = self.adj[u][k].rev;
                self.adj[u][k].flow += &push;
                self.adj[v][rev].flow -= &push;
                v = u;
            }
            total += push;
        }
    }
}

/// Finds a plan shipping `supply` onto `demand` along arcs where
/// `allowed(i, j)` holds, or `None` when no such plan exists.
///
/// Both marginals must carry the same total mass; otherwise the problem is
/// reported infeasible. Arcs are explored in index order, so the returned
/// plan is deterministic.
pub fn transport(
    supply: &[BigRational],
    demand: &[BigRational],
    allowed: impl Fn(usize, usize) -> bool,
) -> Option<TransportPlan> {
    transport_or_cut(supply, demand, allowed).ok()
}

/// [`transport`], returning on failure a set `A` of sources whose supply
/// exceeds the total demand of the targets reachable from `A`.
///
/// When the totals differ the cut is every source.
pub fn transport_or_cut(
    supply: &[BigRational],
    demand: &[BigRational],
    allowed: impl Fn(usize, usize) -> bool,
) -> Result<TransportPlan, Vec<usize>> {
    let total_supply: BigRational = supply.iter().sum();
    let total_demand: BigRational = demand.iter().sum();
    let (m, n) = (supply.len(), demand.len());
    if total_supply != total_demand {
        return Err((0..m).collect());
    }
    let s = 0;
    let t = m + n + 1;
    let mut net = Network::new(m + n + 2);
    for (i, w) in supply.iter().enumerate() {
        if w.is_positive() {
            net.add_edge(s, 1 + i, Some(w.clone()));
        }
    }
    let mut arcs = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if allowed(i, j) && supply[i].is_positive() && demand[j].is_positive() {
                arcs.push((i, j, net.add_edge(1 + i, 1 + m + j, None)));
            }
        }
    }
    for (j, w) in demand.iter().enumerate() {
        if w.is_positive() {
            net.add_edge(1 + m + j, t, Some(w.clone()));
        }
    }
    if net.max_flow(s, t) != total_supply {
        // sources still reachable in the residual graph form a Hall violator
        let seen = net.reachable(s);
        return Err((0..m).filter(|&i| seen[1 + i]).collect());
    }
    let entries = arcs
        .into_iter()
        .filter_map(|(i, j, (u, k))| {
            let amount = net.adj[u][k].flow.clone();
            amount.is_positive().then_some(PlanEntry { source: i, target: j, amount })
        })
        .collect();
    Ok(TransportPlan { sources: m, targets: n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn identity_problem_ships_along_the_diagonal() {
        let w = vec![ratio(1, 3), ratio(2, 3)];
        let plan = transport(&w, &w, |i, j| i == j).unwrap();
        assert_eq!(plan.amount(0, 0), ratio(1, 3));
        assert_eq!(plan.amount(1, 1), ratio(2, 3));
        plan.check(&w, &w, |i, j| i == j).unwrap();
    }

    #[test]
    fn blocked_mass_is_infeasible() {
        let supply = vec![ratio(1, 2), ratio(1, 2)];
        let demand = vec![ratio(1, 1), ratio(0, 1)];
        assert!(transport(&supply, &demand, |i, j| i == j).is_none());
        assert!(transport(&supply, &demand, |_, j| j == 0).is_some());
    }

    #[test]
    fn unequal_totals_are_infeasible() {
        let supply = vec![ratio(1, 2)];
        let demand = vec![ratio(1, 1)];
        assert!(transport(&supply, &demand, |_, _| true).is_none());
    }

    #[test]
    fn rerouting_through_back_edges() {
        // greedy 0->0 must be undone to serve column 1 from row 1
        let supply = vec![ratio(1, 2), ratio(1, 2)];
        let demand = vec![ratio(1, 2), ratio(1, 2)];
        let allowed = |i: usize, j: usize| !(i == 1 && j == 1);
        let plan = transport(&supply, &demand, allowed).unwrap();
        plan.check(&supply, &demand, allowed).unwrap();
    }

    #[test]
    fn cut_violates_hall_condition() {
        let supply = vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)];
        let demand = vec![ratio(1, 4), ratio(3, 4)];
        // sources 0 and 1 can only reach target 0
        let allowed = |i: usize, j: usize| j == 0 || i == 2;
        let cut = transport_or_cut(&supply, &demand, allowed).unwrap_err();
        let shipped: BigRational = cut.iter().map(|&i| supply[i].clone()).sum();
        let reach: BigRational = (0..demand.len())
            .filter(|&j| cut.iter().any(|&i| allowed(i, j)))
            .map(|j| demand[j].clone())
            .sum();
        assert!(shipped > reach);
        assert_eq!(cut, vec![0, 1]);
    }

    #[test]
    fn check_reports_tampering() {
        let w = vec![ratio(1, 2), ratio(1, 2)];
        let mut plan = transport(&w, &w, |_, _| true).unwrap();
        plan.entries[0].amount = ratio(1, 4);
        assert!(plan.check(&w, &w, |_, _| true).is_err());
    }
}
