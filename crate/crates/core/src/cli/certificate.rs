use num::{BigRational, Signed};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

use crate::apra::{self, ConjugacyCertificate};
use crate::flow::TransportPlan;
use crate::maharam::{self, CardinalCode, MaharamInvariant, SbVerdict};
use crate::randomization::{self, DensityProfile, RandomizationVerdict};
use crate::rational;
use crate::symspec::{
    approximate_unitary, conjugation_residual, describe, description_embeddable, operator_norm,
    spectrally_equivalent, OrthogonalMap, SelfAdjointOperator, SpectralDescription, VALUE_TOL,
};

use super::job::Job;
use super::CliError;

pub const FORMAT: &str = "v1";

/// Verdicts that assert the two structures are the same up to the kind's
/// notion of equivalence.
pub const POSITIVE_VERDICTS: &[&str] =
    &["Isomorphic", "SpectrallyEquivalent", "ApproximatelyUnitarilyEquivalent", "ApproximatelyConjugate"];

/// How far a recomputed floating-point claim may drift from the stated one.
const FLOAT_CLAIM_TOL: f64 = 1e-13;

/// Self-describing result of a job: the verdict, a witness carrying
/// everything needed to check it, and the numeric claims made about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub format: String,
    pub kind: String,
    pub verdict: String,
    pub witness: Value,
    pub bounds: Vec<(String, String)>,
}

impl Certificate {
    fn new(job: &Job, verdict: &str, witness: Value, bounds: Vec<(String, String)>) -> Self {
        Certificate {
            format: FORMAT.into(),
            kind: job.kind().name().into(),
            verdict: verdict.into(),
            witness,
            bounds,
        }
    }

    pub fn is_positive(&self) -> bool {
        POSITIVE_VERDICTS.contains(&self.verdict.as_str())
    }

    /// 0 for positive verdicts, 1 for negative ones.
    pub fn exit_code(&self) -> i32 {
        if self.is_positive() {
            0
        } else {
            1
        }
    }
}

fn claim(name: &str, value: impl ToString) -> (String, String) {
    (name.to_string(), value.to_string())
}

fn frac(r: &BigRational) -> String {
    rational::format(r)
}


/// Why one side does not embed into the other, for probability algebras.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailViolation {
    AtomsDiffer,
    Tail {
        kappa: u32,
        #[serde(with = "crate::rational::serde_str")]
        excess: BigRational,
    },
}

/// Largest cardinal of `a` at which its tail exceeds that of `b`.
pub fn tail_violation(a: &MaharamInvariant, b: &MaharamInvariant) -> Option<TailViolation> {
    if a.atoms != b.atoms {
        return Some(TailViolation::AtomsDiffer);
    }
    a.blocks.iter().find_map(|blk| {
        let excess = a.tail(blk.kappa) - b.tail(blk.kappa);
        excess.is_positive().then_some(TailViolation::Tail { kappa: blk.kappa.0, excess })
    })
}

fn violation_claim(name: &str, v: &TailViolation) -> (String, String) {
    match v {
        TailViolation::AtomsDiffer => claim(name, "atoms differ"),
        TailViolation::Tail { excess, .. } => claim(name, frac(excess)),
    }
}

/// Runs the decision for the job's kind and re-verifies the certificate
/// before returning it.
pub fn run(job: &Job) -> Result<Certificate, CliError> {
    let cert = match job {
        Job::Operators { left, right, epsilon, cluster_tol } => run_operators(job, left, right, *epsilon, *cluster_tol)?,
        Job::Descriptions { left, right } => run_descriptions(job, left, right)?,
        Job::Algebras { left, right } => run_algebras(job, left, right)?,
        Job::Automorphisms { left, right, schedule, .. } => {
            let certs = apra::perturbation_sequence(left, right, schedule).map_err(|e| CliError::Module(e.to_string()))?;
            let mut bounds = Vec::new();
            for (k, c) in certs.iter().enumerate() {
                bounds.push(claim(&format!("bound[{k}]"), frac(&c.bound)));
                bounds.push(claim(&format!("measured_distance[{k}]"), frac(&c.measured_distance)));
            }
            Certificate::new(job, "ApproximatelyConjugate", json!({ "certificates": certs }), bounds)
        }
        Job::Randomizations { left, right } => run_randomizations(job, left, right)?,
    };
    verify(&cert, job).map_err(|e| CliError::Internal(format!("emitted certificate failed verification: {e}")))?;
    Ok(cert)
}

fn run_operators(
    job: &Job,
    left: &SelfAdjointOperator,
    right: &SelfAdjointOperator,
    epsilon: f64,
    cluster_tol: f64,
) -> Result<Certificate, CliError> {
    let module = |e: crate::symspec::SpectralError| CliError::Module(e.to_string());
    if left.dim() != right.dim() {
        return Err(CliError::Module(format!("dimensions differ: {} vs {}", left.dim(), right.dim())));
    }
    let d1 = describe(left, cluster_tol).map_err(module)?;
    let d2 = describe(right, cluster_tol).map_err(module)?;
    if !spectrally_equivalent(&d1, &d2) {
        return Ok(Certificate::new(
            job,
            "NotSpectrallyEquivalent",
            json!({ "left": d1, "right": d2 }),
            vec![claim("cluster_tol", cluster_tol)],
        ));
    }
    let u = approximate_unitary(left, right, epsilon).map_err(module)?;
    let residual = conjugation_residual(left, right, &u).map_err(module)?;
    let defect = u.orthogonality_defect().map_err(module)?;
    if residual >= epsilon {
        return Err(CliError::Internal(format!("constructed residual {residual} is not below epsilon {epsilon}")));
    }
    Ok(Certificate::new(
        job,
        "ApproximatelyUnitarilyEquivalent",
        json!({ "unitary": u }),
        vec![claim("residual", residual), claim("epsilon", epsilon), claim("orthogonality_defect", defect)],
    ))
}

fn run_descriptions(job: &Job, left: &SpectralDescription, right: &SpectralDescription) -> Result<Certificate, CliError> {
    let bounds = vec![claim("value_tol", VALUE_TOL)];
    if spectrally_equivalent(left, right) {
        return Ok(Certificate::new(job, "SpectrallyEquivalent", json!({ "left": left, "right": right }), bounds));
    }
    let forward_excluded = !description_embeddable(left, right);
    let backward_excluded = !description_embeddable(right, left);
    if !forward_excluded && !backward_excluded {
        return Err(CliError::Internal(
            "descriptions embed both ways yet are not spectrally equivalent".into(),
        ));
    }
    Ok(Certificate::new(
        job,
        "NotBiEmbeddable",
        json!({ "forward_excluded": forward_excluded, "backward_excluded": backward_excluded }),
        bounds,
    ))
}

fn run_algebras(job: &Job, left: &MaharamInvariant, right: &MaharamInvariant) -> Result<Certificate, CliError> {
    let verdict = maharam::sb_decide(left, right).map_err(|e| CliError::Internal(e.to_string()))?;
    let violation = |a, b| tail_violation(a, b).ok_or_else(|| CliError::Internal("expected a tail violation".into()));
    Ok(match &verdict {
        SbVerdict::Isomorphic { witness } => {
            let mass: BigRational = witness.atoms.iter().chain(witness.blocks.iter().map(|b| &b.weight)).sum();
            Certificate::new(job, verdict.name(), json!({ "invariant": witness }), vec![claim("total_mass", frac(&mass))])
        }
        SbVerdict::EmbedsOnlyForward { plan } => {
            let back = violation(right, left)?;
            Certificate::new(
                job,
                verdict.name(),
                json!({ "forward_plan": plan, "backward_violation": back }),
                vec![claim("forward_plan_mass", frac(&plan_mass(plan))), violation_claim("backward_tail_excess", &back)],
            )
        }
        SbVerdict::EmbedsOnlyBackward { plan } => {
            let fwd = violation(left, right)?;
            Certificate::new(
                job,
                verdict.name(),
                json!({ "backward_plan": plan, "forward_violation": fwd }),
                vec![claim("backward_plan_mass", frac(&plan_mass(plan))), violation_claim("forward_tail_excess", &fwd)],
            )
        }
        SbVerdict::Incomparable => {
            let fwd = violation(left, right)?;
            let back = violation(right, left)?;
            Certificate::new(
                job,
                verdict.name(),
                json!({ "forward_violation": fwd, "backward_violation": back }),
                vec![violation_claim("forward_tail_excess", &fwd), violation_claim("backward_tail_excess", &back)],
            )
        }
    })
}

fn plan_mass(plan: &TransportPlan) -> BigRational {
    plan.entries.iter().map(|e| &e.amount).sum()
}

fn ids_of(p: &DensityProfile, set: &[usize]) -> Vec<String> {
    set.iter().map(|&i| p.catalog().ids()[i].clone()).collect()
}

fn excess(p: &DensityProfile, q: &DensityProfile, set: &[usize]) -> BigRational {
    p.weight_of(set) - q.weight_of(set)
}

fn run_randomizations(job: &Job, left: &DensityProfile, right: &DensityProfile) -> Result<Certificate, CliError> {
    let verdict =
        randomization::sb_decide_randomization(left, right).map_err(|e| CliError::Internal(e.to_string()))?;
    let name = verdict.name();
    Ok(match verdict {
        RandomizationVerdict::Isomorphic => {
            let rho: BTreeMap<String, String> =
                left.catalog().ids().iter().zip(left.rho()).map(|(id, w)| (id.clone(), frac(w))).collect();
            let total: BigRational = left.rho().iter().sum();
            Certificate::new(job, name, json!({ "rho": rho }), vec![claim("total_mass", frac(&total))])
        }
        RandomizationVerdict::EmbedsOnlyForward { plan, backward_violation } => Certificate::new(
            job,
            name,
            json!({ "forward_plan": plan, "backward_violation": ids_of(left, &backward_violation) }),
            vec![
                claim("forward_plan_mass", frac(&plan_mass(&plan))),
                claim("backward_upset_excess", frac(&excess(right, left, &backward_violation))),
            ],
        ),
        RandomizationVerdict::EmbedsOnlyBackward { plan, forward_violation } => Certificate::new(
            job,
            name,
            json!({ "backward_plan": plan, "forward_violation": ids_of(left, &forward_violation) }),
            vec![
                claim("backward_plan_mass", frac(&plan_mass(&plan))),
                claim("forward_upset_excess", frac(&excess(left, right, &forward_violation))),
            ],
        ),
        RandomizationVerdict::Incomparable { forward_violation, backward_violation } => Certificate::new(
            job,
            name,
            json!({
                "forward_violation": ids_of(left, &forward_violation),
                "backward_violation": ids_of(left, &backward_violation),
            }),
            vec![
                claim("forward_upset_excess", frac(&excess(left, right, &forward_violation))),
                claim("backward_upset_excess", frac(&excess(right, left, &backward_violation))),
            ],
        ),
        RandomizationVerdict::SbFailureWitness { forward, backward } => {
            let differing = left.rho().iter().zip(right.rho()).filter(|(a, b)| a != b).count();
            Certificate::new(
                job,
                name,
                json!({ "forward_plan": forward, "backward_plan": backward }),
                vec![
                    claim("forward_plan_mass", frac(&plan_mass(&forward))),
                    claim("backward_plan_mass", frac(&plan_mass(&backward))),
                    claim("differing_weights", differing),
                ],
            )
        }
    })
}

/// True iff every claim of `cert` holds when recomputed from `job` and the
/// witness alone.
pub fn verify_certificate(cert: &Certificate, job: &Job) -> bool {
    verify(cert, job).is_ok()
}

/// [`verify_certificate`] with the first failing check.
pub fn verify(cert: &Certificate, job: &Job) -> Result<(), String> {
    if cert.format != FORMAT {
        return Err(format!("unsupported format {:?}", cert.format));
    }
    if cert.kind != job.kind().name() {
        return Err(format!("certificate is for {:?}, job is {:?}", cert.kind, job.kind().name()));
    }
    match job {
        Job::Operators { left, right, epsilon, cluster_tol } => verify_operators(cert, left, right, *epsilon, *cluster_tol),
        Job::Descriptions { left, right } => verify_descriptions(cert, left, right),
        Job::Algebras { left, right } => verify_algebras(cert, left, right),
        Job::Automorphisms { left, right, schedule, .. } => verify_automorphisms(cert, left, right, schedule),
        Job::Randomizations { left, right } => verify_randomizations(cert, left, right),
    }
}

fn witness<T: DeserializeOwned>(cert: &Certificate) -> Result<T, String> {
    serde_json::from_value(cert.witness.clone()).map_err(|e| format!("witness: {e}"))
}

fn expect_claims(cert: &Certificate, names: &[&str]) -> Result<(), String> {
    let got: Vec<&str> = cert.bounds.iter().map(|(n, _)| n.as_str()).collect();
    if got != names {
        return Err(format!("expected claims {names:?}, found {got:?}"));
    }
    Ok(())
}

fn claimed<'a>(cert: &'a Certificate, name: &str) -> &'a str {
    cert.bounds.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str()).unwrap_or("")
}

fn claimed_real(cert: &Certificate, name: &str) -> Result<f64, String> {
    claimed(cert, name).parse::<f64>().map_err(|_| format!("claim {name} is not a real number"))
}

fn claimed_rational(cert: &Certificate, name: &str) -> Result<BigRational, String> {
    rational::parse(claimed(cert, name)).map_err(|_| format!("claim {name} is not a rational"))
}

fn close(claim: f64, actual: f64, scale: f64) -> bool {
    (claim - actual).abs() <= FLOAT_CLAIM_TOL * scale.max(1.0)
}

fn check_eq<T: PartialEq + std::fmt::Debug>(what: &str, claim: T, actual: T) -> Result<(), String> {
    if claim != actual {
        return Err(format!("{what}: claimed {claim:?}, recomputed {actual:?}"));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryWitness {
    unitary: OrthogonalMap,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptionPair {
    left: SpectralDescription,
    right: SpectralDescription,
}

fn verify_operators(
    cert: &Certificate,
    left: &SelfAdjointOperator,
    right: &SelfAdjointOperator,
    epsilon: f64,
    cluster_tol: f64,
) -> Result<(), String> {
    match cert.verdict.as_str() {
        "ApproximatelyUnitarilyEquivalent" => {
            expect_claims(cert, &["residual", "epsilon", "orthogonality_defect"])?;
            let w: UnitaryWitness = witness(cert)?;
            check_eq("epsilon", claimed_real(cert, "epsilon")?, epsilon)?;
            let defect = w.unitary.orthogonality_defect().map_err(|e| e.to_string())?;
            // Both claims are upper bounds, so a stated value below the
            // recomputed one is rejected even when it is numerically close.
            let stated_defect = claimed_real(cert, "orthogonality_defect")?;
            if stated_defect < defect || !close(stated_defect, defect, 1.0) {
                return Err(format!("orthogonality defect recomputes to {defect}"));
            }
            let residual = conjugation_residual(left, right, &w.unitary).map_err(|e| e.to_string())?;
            let scale = operator_norm(left).map_err(|e| e.to_string())?;
            let stated = claimed_real(cert, "residual")?;
            if stated < residual || !close(stated, residual, scale) {
                return Err(format!("residual recomputes to {residual}, claimed {stated}"));
            }
            if !(residual < epsilon && stated < epsilon) {
                return Err(format!("residual {residual} is not below epsilon {epsilon}"));
            }
            Ok(())
        }
        "NotSpectrallyEquivalent" => {
            expect_claims(cert, &["cluster_tol"])?;
            check_eq("cluster_tol", claimed_real(cert, "cluster_tol")?, cluster_tol)?;
            let w: DescriptionPair = witness(cert)?;
            let d1 = describe(left, cluster_tol).map_err(|e| e.to_string())?;
            let d2 = describe(right, cluster_tol).map_err(|e| e.to_string())?;
            check_eq("left description", &w.left, &d1)?;
            check_eq("right description", &w.right, &d2)?;
            if spectrally_equivalent(&d1, &d2) {
                return Err("descriptions are spectrally equivalent".into());
            }
            Ok(())
        }
        other => Err(format!("unknown verdict {other:?} for operators")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExclusionWitness {
    forward_excluded: bool,
    backward_excluded: bool,
}

fn verify_descriptions(cert: &Certificate, left: &SpectralDescription, right: &SpectralDescription) -> Result<(), String> {
    expect_claims(cert, &["value_tol"])?;
    check_eq("value_tol", claimed_real(cert, "value_tol")?, VALUE_TOL)?;
    match cert.verdict.as_str() {
        "SpectrallyEquivalent" => {
            let w: DescriptionPair = witness(cert)?;
            check_eq("left description", &w.left, left)?;
            check_eq("right description", &w.right, right)?;
            if !spectrally_equivalent(left, right) {
                return Err("descriptions are not spectrally equivalent".into());
            }
            Ok(())
        }
        "NotBiEmbeddable" => {
            let w: ExclusionWitness = witness(cert)?;
            check_eq("forward_excluded", w.forward_excluded, !description_embeddable(left, right))?;
            check_eq("backward_excluded", w.backward_excluded, !description_embeddable(right, left))?;
            if !(w.forward_excluded || w.backward_excluded) {
                return Err("neither direction is excluded".into());
            }
            Ok(())
        }
        other => Err(format!("unknown verdict {other:?} for descriptions")),
    }
}

fn check_maharam_plan(plan: &TransportPlan, a: &MaharamInvariant, b: &MaharamInvariant) -> Result<(), String> {
    if a.atoms != b.atoms {
        return Err("a plan needs identical atoms on both sides".into());
    }
    plan.check(&a.block_weights(), &b.block_weights(), maharam::arc_rule(a, b)).map_err(|e| e.to_string())
}

fn check_tail_violation(v: &TailViolation, a: &MaharamInvariant, b: &MaharamInvariant) -> Result<(), String> {
    check_eq("tail violation", Some(v.clone()), tail_violation(a, b))?;
    if let TailViolation::Tail { kappa, excess } = v {
        let k = CardinalCode(*kappa);
        check_eq("tail excess", excess.clone(), a.tail(k) - b.tail(k))?;
        if !excess.is_positive() {
            return Err("tail excess must be positive".into());
        }
    }
    Ok(())
}

fn check_violation_claim(cert: &Certificate, name: &str, v: &TailViolation) -> Result<(), String> {
    check_eq(name, claimed(cert, name).to_string(), violation_claim(name, v).1)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvariantWitness {
    invariant: MaharamInvariant,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ForwardMaharam {
    forward_plan: TransportPlan,
    backward_violation: TailViolation,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BackwardMaharam {
    backward_plan: TransportPlan,
    forward_violation: TailViolation,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IncomparableMaharam {
    forward_violation: TailViolation,
    backward_violation: TailViolation,
}

fn verify_algebras(cert: &Certificate, left: &MaharamInvariant, right: &MaharamInvariant) -> Result<(), String> {
    match cert.verdict.as_str() {
        "Isomorphic" => {
            expect_claims(cert, &["total_mass"])?;
            let w: InvariantWitness = witness(cert)?;
            check_eq("left invariant", &w.invariant, left)?;
            check_eq("right invariant", &w.invariant, right)?;
            let mass: BigRational = w.invariant.atoms.iter().chain(w.invariant.blocks.iter().map(|b| &b.weight)).sum();
            check_eq("total_mass", claimed_rational(cert, "total_mass")?, mass)
        }
        "EmbedsOnlyForward" => {
            expect_claims(cert, &["forward_plan_mass", "backward_tail_excess"])?;
            let w: ForwardMaharam = witness(cert)?;
            check_maharam_plan(&w.forward_plan, left, right)?;
            check_eq("forward_plan_mass", claimed_rational(cert, "forward_plan_mass")?, plan_mass(&w.forward_plan))?;
            check_tail_violation(&w.backward_violation, right, left)?;
            check_violation_claim(cert, "backward_tail_excess", &w.backward_violation)
        }
        "EmbedsOnlyBackward" => {
            expect_claims(cert, &["backward_plan_mass", "forward_tail_excess"])?;
            let w: BackwardMaharam = witness(cert)?;
            check_maharam_plan(&w.backward_plan, right, left)?;
            check_eq("backward_plan_mass", claimed_rational(cert, "backward_plan_mass")?, plan_mass(&w.backward_plan))?;
            check_tail_violation(&w.forward_violation, left, right)?;
            check_violation_claim(cert, "forward_tail_excess", &w.forward_violation)
        }
        "Incomparable" => {
            expect_claims(cert, &["forward_tail_excess", "backward_tail_excess"])?;
            let w: IncomparableMaharam = witness(cert)?;
            check_tail_violation(&w.forward_violation, left, right)?;
            check_tail_violation(&w.backward_violation, right, left)?;
            check_violation_claim(cert, "forward_tail_excess", &w.forward_violation)?;
            check_violation_claim(cert, "backward_tail_excess", &w.backward_violation)
        }
        other => Err(format!("unknown verdict {other:?} for algebras")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConjugacyWitness {
    certificates: Vec<ConjugacyCertificate>,
}

fn verify_automorphisms(
    cert: &Certificate,
    left: &apra::BlockedPermutationSystem,
    right: &apra::BlockedPermutationSystem,
    schedule: &[(usize, BigRational)],
) -> Result<(), String> {
    if cert.verdict != "ApproximatelyConjugate" {
        return Err(format!("unknown verdict {:?} for automorphisms", cert.verdict));
    }
    let w: ConjugacyWitness = witness(cert)?;
    if w.certificates.len() != schedule.len() {
        return Err(format!("{} certificates for {} schedule steps", w.certificates.len(), schedule.len()));
    }
    let names: Vec<String> = (0..schedule.len())
        .flat_map(|k| [format!("bound[{k}]"), format!("measured_distance[{k}]")])
        .collect();
    expect_claims(cert, &names.iter().map(String::as_str).collect::<Vec<_>>())?;
    for (k, (c, (n, eps))) in w.certificates.iter().zip(schedule).enumerate() {
        check_eq("tower height", c.height, *n)?;
        check_eq("epsilon", &c.epsilon, eps)?;
        c.verify(left, right).map_err(|e| format!("step {k}: {e}"))?;
        check_eq("bound", claimed_rational(cert, &format!("bound[{k}]"))?, c.bound.clone())?;
        check_eq(
            "measured_distance",
            claimed_rational(cert, &format!("measured_distance[{k}]"))?,
            c.measured_distance.clone(),
        )?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RhoWitness {
    rho: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ForwardRandomization {
    forward_plan: TransportPlan,
    backward_violation: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BackwardRandomization {
    backward_plan: TransportPlan,
    forward_violation: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IncomparableRandomization {
    forward_violation: Vec<String>,
    backward_violation: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BiPlanRandomization {
    forward_plan: TransportPlan,
    backward_plan: TransportPlan,
}

fn check_profile_plan(plan: &TransportPlan, p: &DensityProfile, q: &DensityProfile) -> Result<(), String> {
    let c = p.catalog();
    plan.check(p.rho(), q.rho(), |i, j| c.embeds(i, j)).map_err(|e| e.to_string())
}

/// The ids must name a nonempty up-closed set on which `p` outweighs `q`
/// by exactly the claimed amount.
fn check_upset(
    cert: &Certificate,
    name: &str,
    ids: &[String],
    p: &DensityProfile,
    q: &DensityProfile,
) -> Result<(), String> {
    let c = p.catalog();
    let mut set = Vec::with_capacity(ids.len());
    for id in ids {
        set.push(c.index_of(id).ok_or_else(|| format!("unknown id {id:?}"))?);
    }
    let mut sorted = set.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted != set {
        return Err(format!("{name}: ids must be distinct and in catalog order"));
    }
    if !c.is_up_closed(&set) {
        return Err(format!("{name}: set is not up-closed"));
    }
    let e = excess(p, q, &set);
    if !e.is_positive() {
        return Err(format!("{name}: weight does not exceed"));
    }
    check_eq(name, claimed_rational(cert, name)?, e)
}

fn verify_randomizations(cert: &Certificate, left: &DensityProfile, right: &DensityProfile) -> Result<(), String> {
    if left.catalog() != right.catalog() {
        return Err("profiles use different catalogs".into());
    }
    match cert.verdict.as_str() {
        "Isomorphic" => {
            expect_claims(cert, &["total_mass"])?;
            let w: RhoWitness = witness(cert)?;
            for p in [left, right] {
                let rho: BTreeMap<String, String> =
                    p.catalog().ids().iter().zip(p.rho()).map(|(id, w)| (id.clone(), frac(w))).collect();
                check_eq("rho", &w.rho, &rho)?;
            }
            check_eq("total_mass", claimed_rational(cert, "total_mass")?, left.rho().iter().sum::<BigRational>())
        }
        "EmbedsOnlyForward" => {
            expect_claims(cert, &["forward_plan_mass", "backward_upset_excess"])?;
            let w: ForwardRandomization = witness(cert)?;
            check_profile_plan(&w.forward_plan, left, right)?;
            check_eq("forward_plan_mass", claimed_rational(cert, "forward_plan_mass")?, plan_mass(&w.forward_plan))?;
            check_upset(cert, "backward_upset_excess", &w.backward_violation, right, left)
        }
        "EmbedsOnlyBackward" => {
            expect_claims(cert, &["backward_plan_mass", "forward_upset_excess"])?;
            let w: BackwardRandomization = witness(cert)?;
            check_profile_plan(&w.backward_plan, right, left)?;
            check_eq("backward_plan_mass", claimed_rational(cert, "backward_plan_mass")?, plan_mass(&w.backward_plan))?;
            check_upset(cert, "forward_upset_excess", &w.forward_violation, left, right)
        }
        "Incomparable" => {
            expect_claims(cert, &["forward_upset_excess", "backward_upset_excess"])?;
            let w: IncomparableRandomization = witness(cert)?;
            check_upset(cert, "forward_upset_excess", &w.forward_violation, left, right)?;
            check_upset(cert, "backward_upset_excess", &w.backward_violation, right, left)
        }
        "SBFailureWitness" => {
            expect_claims(cert, &["forward_plan_mass", "backward_plan_mass", "differing_weights"])?;
            let w: BiPlanRandomization = witness(cert)?;
            check_profile_plan(&w.forward_plan, left, right)?;
            check_profile_plan(&w.backward_plan, right, left)?;
            check_eq("forward_plan_mass", claimed_rational(cert, "forward_plan_mass")?, plan_mass(&w.forward_plan))?;
            check_eq("backward_plan_mass", claimed_rational(cert, "backward_plan_mass")?, plan_mass(&w.backward_plan))?;
            let differing = left.rho().iter().zip(right.rho()).filter(|(a, b)| a != b).count();
            check_eq("differing_weights", claimed(cert, "differing_weights").to_string(), differing.to_string())?;
            if differing == 0 {
                return Err("profiles are equal".into());
            }
            Ok(())
        }
        other => Err(format!("unknown verdict {other:?} for randomizations")),
    }
}
