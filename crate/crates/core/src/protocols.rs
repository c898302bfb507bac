//! Tomography protocols: exact outcome probabilities, sampling and estimators.
//!
//! Every probability here is produced by pushing Pauli vectors through the
//! actual circuit (preparation, channels, gates, measurement). The closed
//! forms quoted in the docs are what the tests compare against.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::network::{
    bypass_route, plan_round, EdgeId, EstimatedChannel, EtchingState, MergecastPlan,
    NetworkError, Topology,
};
use crate::par::{map_slice, Execution};
use crate::pauli::{
    apply_cnot, apply_ptm, joint_z_measurement_probs, partial_trace, tensor,
    z_measurement_probs_noisy, AlgebraError, Basis, Dressing, Gate, Pauli, PauliChannel,
    PauliVector1Q, Ptm1Q, Qubit, PHYSICAL_TOL,
};
use crate::stats::{mix, tag, trial_rng};

/// Ratio estimators refuse denominators smaller than this.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("SPAM parameter {name} = {value} is outside [0, 1]")]
    SpamOutOfRange { name: &'static str, value: f64 },
    #[error("path is empty")]
    EmptyPath,
    #[error("channel {index} on the path has q_{basis} = 0")]
    ZeroParameter { index: usize, basis: Basis },
    #[error("channel {index} in the bypass segment is not bypassable")]
    NotBypassable { index: usize },
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("sample size must be at least 1")]
    NoSamples,
    #[error("{what}: denominator {denominator:e} is too close to zero")]
    Unestimable { what: &'static str, denominator: f64 },
    #[error("edge {edge}: {source}")]
    Edge {
        edge: String,
        #[source]
        source: Box<ProtocolError>,
    },
}

type Result<T> = std::result::Result<T, ProtocolError>;

/// Two-parameter SPAM model: preparation `[1, 0, 0, s]`, measurement
/// operators `[1, 0, 0, ±m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpamModel {
    pub s: f64,
    pub m: f64,
}

impl SpamModel {
    pub fn new(s: f64, m: f64) -> Result<Self> {
        for (name, value) in [("s", s), ("m", m)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ProtocolError::SpamOutOfRange { name, value });
            }
        }
        Ok(Self { s, m })
    }

    pub const fn ideal() -> Self {
        Self { s: 1.0, m: 1.0 }
    }

    pub fn prep(&self) -> PauliVector1Q {
        PauliVector1Q::z_state(self.s)
    }
}

impl Default for SpamModel {
    fn default() -> Self {
        Self::ideal()
    }
}

fn dressed(path: &[PauliChannel], basis: Basis) -> Vec<PauliChannel> {
    path.iter().map(|c| c.dress(basis.dressing())).collect()
}

fn reject_zero(path: &[PauliChannel], basis: Basis) -> Result<()> {
    match path.iter().position(|c| c.q(basis) == 0.0) {
        Some(index) => Err(ProtocolError::ZeroParameter { index, basis }),
        None => Ok(()),
    }
}

fn propagate(mut v: PauliVector1Q, path: &[PauliChannel]) -> PauliVector1Q {
    for c in path {
        v = apply_ptm(&c.ptm(), &v);
    }
    v
}

/// Prepare, send along `path`, measure: `(1 + m·s·Π q_B)/2`.
pub fn unicast_prob(path: &[PauliChannel], spam: SpamModel, basis: Basis) -> Result<f64> {
    if path.is_empty() {
        return Err(ProtocolError::EmptyPath);
    }
    reject_zero(path, basis)?;
    let v = propagate(spam.prep(), &dressed(path, basis));
    Ok(z_measurement_probs_noisy(&v, spam.m)?.0)
}

/// Star Mergecast with one target channel: `(1 + m·s²·q·Q_A2·Q_B)/2`.
pub fn mergecast_prob(
    target: &PauliChannel,
    branch_a2: &[PauliChannel],
    branch_b: &[PauliChannel],
    spam: SpamModel,
    basis: Basis,
) -> Result<f64> {
    mergecast_route_prob(std::slice::from_ref(target), branch_a2, branch_b, spam, basis)
}

/// Mergecast where the root qubit crosses a whole route before the merge node.
///
/// The root qubit (CNOT control) and the `branch_a2` qubit (target) are merged,
/// the control is discarded and the survivor leaves along `branch_b`.
pub fn mergecast_route_prob(
    root_route: &[PauliChannel],
    branch_a2: &[PauliChannel],
    branch_b: &[PauliChannel],
    spam: SpamModel,
    basis: Basis,
) -> Result<f64> {
    if root_route.is_empty() || branch_a2.is_empty() || branch_b.is_empty() {
        return Err(ProtocolError::EmptyPath);
    }
    for p in [root_route, branch_a2, branch_b] {
        reject_zero(p, basis)?;
    }
    let root = propagate(spam.prep(), &dressed(root_route, basis));
    let other = propagate(spam.prep(), &dressed(branch_a2, basis));
    let merged = apply_cnot(&tensor(&root, &other), Qubit::First);
    let out = propagate(partial_trace(&merged, Qubit::First), &dressed(branch_b, basis));
    Ok(z_measurement_probs_noisy(&out, spam.m)?.0)
}

/// Rotation taking `Z` to the given basis.
fn rotation(basis: Basis) -> Ptm1Q {
    match basis {
        Basis::X => Gate::Hadamard.ptm().expect("single-qubit gate"),
        Basis::Y => Gate::HadamardPhase.ptm().expect("single-qubit gate"),
        Basis::Z => Ptm1Q::identity(),
    }
}

/// First basis in `X, Y, Z` whose Pauli passes every channel unchanged.
pub fn common_bypass_basis(channels: &[PauliChannel]) -> Result<Basis> {
    Basis::ALL
        .into_iter()
        .find(|&b| channels.iter().all(|c| (c.q(b) - 1.0).abs() <= PHYSICAL_TOL))
        .ok_or_else(|| {
            let index = channels
                .iter()
                .position(|c| !crate::pauli::is_bypassable(c, PHYSICAL_TOL))
                .unwrap_or(0);
            ProtocolError::NotBypassable { index }
        })
}

fn bypass_segment(v: PauliVector1Q, channels: &[PauliChannel], offset: usize) -> Result<PauliVector1Q> {
    if channels.is_empty() {
        return Ok(v);
    }
    let basis = common_bypass_basis(channels).map_err(|e| match e {
        ProtocolError::NotBypassable { index } => ProtocolError::NotBypassable {
            index: index + offset,
        },
        other => other,
    })?;
    let r = rotation(basis);
    let v = propagate(apply_ptm(&r, &v), channels);
    Ok(apply_ptm(&r.transpose(), &v))
}

/// BypassUnicast: `(1 + m·s·q_Z,target)/2`, independent of the bypassed channels.
pub fn bypass_unicast_prob(
    bypassed: &[PauliChannel],
    target: &PauliChannel,
    spam: SpamModel,
) -> Result<f64> {
    bypass_route_prob(bypassed, target, &[], spam)
}

/// BypassUnicast with bypassed channels on both sides of the target.
pub fn bypass_route_prob(
    before: &[PauliChannel],
    target: &PauliChannel,
    after: &[PauliChannel],
    spam: SpamModel,
) -> Result<f64> {
    reject_zero(std::slice::from_ref(target), Basis::Z)?;
    let v = bypass_segment(spam.prep(), before, 0)?;
    let v = apply_ptm(&target.ptm(), &v);
    let v = bypass_segment(v, after, before.len() + 1)?;
    Ok(z_measurement_probs_noisy(&v, spam.m)?.0)
}

/// Two preparations merged by a CNOT at the root, control discarded, then
/// unicast: `(1 + m·s²·Π q_Z)/2`.
pub fn spam_s_protocol_prob(path: &[PauliChannel], spam: SpamModel) -> Result<f64> {
    if path.is_empty() {
        return Err(ProtocolError::EmptyPath);
    }
    reject_zero(path, Basis::Z)?;
    let merged = apply_cnot(&tensor(&spam.prep(), &spam.prep()), Qubit::First);
    let v = propagate(partial_trace(&merged, Qubit::First), path);
    Ok(z_measurement_probs_noisy(&v, spam.m)?.0)
}

/// Joint outcome probabilities of the `m` protocol, first qubit leading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpamMProbs {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    /// `p00 + p11 = (1 + m²·s·Π_A q_Z)/2`.
    pub p_sum: f64,
}

/// The qubit on `path_b` is the CNOT control and the one on `path_a` the
/// target; both are then measured jointly.
pub fn spam_m_protocol_probs(
    path_a: &[PauliChannel],
    path_b: &[PauliChannel],
    spam: SpamModel,
) -> Result<SpamMProbs> {
    if path_a.is_empty() || path_b.is_empty() {
        return Err(ProtocolError::EmptyPath);
    }
    reject_zero(path_a, Basis::Z)?;
    reject_zero(path_b, Basis::Z)?;
    let control = propagate(spam.prep(), path_b);
    let target = propagate(spam.prep(), path_a);
    let merged = apply_cnot(&tensor(&control, &target), Qubit::First);
    let [p00, p01, p10, p11] = joint_z_measurement_probs(&merged, spam.m)?;
    Ok(SpamMProbs {
        p00,
        p01,
        p10,
        p11,
        p_sum: p00 + p11,
    })
}

/// Measure `m·s` by bypassing every channel: `(1 + m·s)/2`.
pub fn spam_ms_bypass_prob(bypassed: &[PauliChannel], spam: SpamModel) -> Result<f64> {
    let v = bypass_segment(spam.prep(), bypassed, 0)?;
    Ok(z_measurement_probs_noisy(&v, spam.m)?.0)
}

/// Shot counts for one protocol configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolOutcome {
    pub p0_analytic: f64,
    pub n0: u64,
    pub n_total: u64,
    pub seed: Option<u64>,
}

impl ProtocolOutcome {
    /// Infinite-sample outcome: `p̂` equals the analytic probability.
    pub fn exact(p0: f64) -> Self {
        Self {
            p0_analytic: p0,
            n0: 0,
            n_total: 0,
            seed: None,
        }
    }

    /// Empirical frequency of outcome 0 (the analytic value for [`Self::exact`]).
    pub fn p_hat(&self) -> f64 {
        if self.n_total == 0 {
            self.p0_analytic
        } else {
            self.n0 as f64 / self.n_total as f64
        }
    }
}

fn checked_probability(p0: f64) -> Result<f64> {
    if !(-PHYSICAL_TOL..=1.0 + PHYSICAL_TOL).contains(&p0) {
        return Err(ProtocolError::BadProbability(p0));
    }
    Ok(p0.clamp(0.0, 1.0))
}

/// `n` Bernoulli(`p0`) shots from a fresh generator seeded by `seed`.
pub fn sample_protocol(p0: f64, n: u64, seed: u64) -> Result<ProtocolOutcome> {
    let mut rng = trial_rng(seed, 0, 0);
    let mut out = sample_with_rng(p0, n, &mut rng)?;
    out.seed = Some(seed);
    Ok(out)
}

/// `n` Bernoulli(`p0`) shots drawn from `rng`.
pub fn sample_with_rng<R: Rng + ?Sized>(p0: f64, n: u64, rng: &mut R) -> Result<ProtocolOutcome> {
    if n == 0 {
        return Err(ProtocolError::NoSamples);
    }
    let p = checked_probability(p0)?;
    let dist = Bernoulli::new(p).map_err(|_| ProtocolError::BadProbability(p0))?;
    let n0 = (0..n).filter(|_| dist.sample(rng)).count() as u64;
    Ok(ProtocolOutcome {
        p0_analytic: p0,
        n0,
        n_total: n,
        seed: None,
    })
}

/// `(2·num - 1)/(2·den - 1)`; unclamped.
pub fn ratio_estimate(num_p: f64, den_p: f64, what: &'static str) -> Result<f64> {
    let den = 2.0 * den_p - 1.0;
    if den.abs() < DEGENERATE_DENOMINATOR {
        return Err(ProtocolError::Unestimable {
            what,
            denominator: den,
        });
    }
    Ok((2.0 * num_p - 1.0) / den)
}

/// `(2p̂_merge - 1)/(2p̂_unicast - 1)`; equals `s·q` under SPAM.
pub fn estimate_q_mergecast(merge: &ProtocolOutcome, uni: &ProtocolOutcome) -> Result<f64> {
    ratio_estimate(merge.p_hat(), uni.p_hat(), "Mergecast ratio")
}

/// [`estimate_q_mergecast`] divided by the known preparation parameter.
pub fn estimate_q_mergecast_spam(
    merge: &ProtocolOutcome,
    uni: &ProtocolOutcome,
    spam: SpamModel,
) -> Result<f64> {
    let r = estimate_q_mergecast(merge, uni)?;
    divide(r, spam.s, "preparation parameter s")
}

fn divide(num: f64, den: f64, what: &'static str) -> Result<f64> {
    if den.abs() < DEGENERATE_DENOMINATOR {
        return Err(ProtocolError::Unestimable {
            what,
            denominator: den,
        });
    }
    Ok(num / den)
}

/// `ŝ = (2p̂_1 - 1)/(2p̂_0 - 1)` with `p_1` from the `s` protocol and `p_0` from unicast.
pub fn estimate_s(p1: &ProtocolOutcome, p0: &ProtocolOutcome) -> Result<f64> {
    ratio_estimate(p1.p_hat(), p0.p_hat(), "s estimator")
}

/// `m̂ = (2p̂_2 - 1)/(2p̂_0 - 1)` with `p_2` the `p00 + p11` statistic.
pub fn estimate_m(p2: &ProtocolOutcome, p0: &ProtocolOutcome) -> Result<f64> {
    ratio_estimate(p2.p_hat(), p0.p_hat(), "m estimator")
}

/// `q̂_Z = (2p̂ - 1)/(m·s)` for BypassUnicast.
pub fn estimate_q_bypass(out: &ProtocolOutcome, spam: SpamModel) -> Result<f64> {
    divide(2.0 * out.p_hat() - 1.0, spam.m * spam.s, "bypass prefactor m·s")
}

/// `(2p̂ - 1)` for the bypass-everything protocol: an estimate of `m·s`.
pub fn estimate_ms(out: &ProtocolOutcome) -> f64 {
    2.0 * out.p_hat() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Mergecast,
    BypassUnicast,
    SpamS,
    SpamM,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EstimateTarget {
    Edge { name: String, basis: Basis },
    S,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub target: EstimateTarget,
    pub value: f64,
    /// `(M, N)`.
    pub sample_sizes: (u64, u64),
    pub method: Method,
}

/// Per-edge result of progressive etching.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    pub edge: EdgeId,
    pub name: String,
    pub step: usize,
    pub estimate: EstimatedChannel,
    pub truth: PauliChannel,
    pub plan: MergecastPlan,
}

impl EdgeReport {
    pub fn records(&self, sample_sizes: (u64, u64)) -> Vec<EstimateRecord> {
        Basis::ALL
            .into_iter()
            .map(|basis| EstimateRecord {
                target: EstimateTarget::Edge {
                    name: self.name.clone(),
                    basis,
                },
                value: self.estimate.q(basis),
                sample_sizes,
                method: Method::Mergecast,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtchingReport {
    /// Sorted by edge id.
    pub edges: Vec<EdgeReport>,
    pub rounds: usize,
}

/// Sample sizes and randomness for one etching run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtchingConfig {
    pub spam: SpamModel,
    /// Mergecast shots per edge and basis.
    pub m_samples: u64,
    /// Unicast reference shots per edge and basis.
    pub n_samples: u64,
    pub seed: u64,
    pub trial: u64,
    pub exec: Execution,
}

impl EtchingConfig {
    pub fn new(spam: SpamModel, m_samples: u64, n_samples: u64, seed: u64) -> Self {
        Self {
            spam,
            m_samples,
            n_samples,
            seed,
            trial: 0,
            exec: Execution::Parallel,
        }
    }
}

fn basis_index(b: Basis) -> u64 {
    match b {
        Basis::X => 0,
        Basis::Y => 1,
        Basis::Z => 2,
    }
}

fn estimate_plan(
    t: &Topology,
    state: &EtchingState,
    plan: &MergecastPlan,
    cfg: &EtchingConfig,
) -> Result<EstimatedChannel> {
    let root = t.channels(&plan.root_route());
    let a2 = t.channels(&plan.route_a2);
    let b = t.channels(&plan.route_b);
    let mut uni_path: Vec<PauliChannel> = a2.iter().rev().copied().collect();
    uni_path.extend(&b);
    let mut out = [0.0; 3];
    for basis in Basis::ALL {
        let key = (plan.target.0 as u64) * 3 + basis_index(basis);
        let p_merge = mergecast_route_prob(&root, &a2, &b, cfg.spam, basis)?;
        let p_uni = unicast_prob(&uni_path, cfg.spam, basis)?;
        let mut rng_merge = trial_rng(cfg.seed, mix(tag("etch/mergecast"), key), cfg.trial);
        let mut rng_uni = trial_rng(cfg.seed, mix(tag("etch/unicast"), key), cfg.trial);
        let merge = sample_with_rng(p_merge, cfg.m_samples, &mut rng_merge)?;
        let uni = sample_with_rng(p_uni, cfg.n_samples, &mut rng_uni)?;
        let ratio = estimate_q_mergecast_spam(&merge, &uni, cfg.spam)?;
        let feeder: f64 = plan
            .root_feeder
            .iter()
            .map(|e| state.estimate(*e).expect("feeder edges are identified").q(basis))
            .product();
        out[basis_index(basis) as usize] = divide(ratio, feeder, "estimated feeder product")?;
    }
    Ok(EstimatedChannel {
        q_x: out[0],
        q_y: out[1],
        q_z: out[2],
    })
}

/// Identify every edge by layered Mergecast, peripheral edges first.
///
/// Each round plans all frontier edges against the state at the start of the
/// round, estimates them (in parallel) and then promotes their merge nodes to
/// effective monitors. Later rounds divide by the frozen estimates of the
/// edges feeding their root.
pub fn run_progressive_etching(t: &Topology, cfg: &EtchingConfig) -> Result<EtchingReport> {
    if let Some(n) = t.node_ids().find(|&n| !t.is_monitor(n) && t.degree(n) == 2) {
        return Err(NetworkError::NotSimplified(t.node(n).name.clone()).into());
    }
    let mut state = EtchingState::new(t);
    let mut reports = Vec::with_capacity(t.edge_count());
    let mut rounds = 0;
    loop {
        let plans = plan_round(t, &state)?;
        if plans.is_empty() {
            break;
        }
        rounds += 1;
        let estimates = map_slice(cfg.exec, &plans, |p| {
            estimate_plan(t, &state, p, cfg).map_err(|e| ProtocolError::Edge {
                edge: t.edge(p.target).name.clone(),
                source: Box::new(e),
            })
        });
        for (plan, est) in plans.into_iter().zip(estimates) {
            let est = est?;
            state.commit(&plan, est, rounds);
            reports.push(EdgeReport {
                edge: plan.target,
                name: t.edge(plan.target).name.clone(),
                step: rounds,
                estimate: est,
                truth: *t.channel(plan.target),
                plan,
            });
        }
    }
    reports.sort_by_key(|r| r.edge);
    Ok(EtchingReport {
        edges: reports,
        rounds,
    })
}

/// BypassUnicast estimates of `q_Z` for the given edges, using `M` shots each.
pub fn run_bypass_estimates(
    t: &Topology,
    targets: &[EdgeId],
    cfg: &EtchingConfig,
) -> Result<Vec<(EdgeId, f64)>> {
    let results = map_slice(cfg.exec, targets, |&e| -> Result<(EdgeId, f64)> {
        let route = bypass_route(t, e)?;
        let p = bypass_route_prob(
            &t.channels(&route.before),
            t.channel(e),
            &t.channels(&route.after),
            cfg.spam,
        )
        .map_err(|err| ProtocolError::Edge {
            edge: t.edge(e).name.clone(),
            source: Box::new(err),
        })?;
        let mut rng = trial_rng(cfg.seed, mix(tag("etch/bypass"), e.0 as u64), cfg.trial);
        let out = sample_with_rng(p, cfg.m_samples, &mut rng)?;
        Ok((e, estimate_q_bypass(&out, cfg.spam)?))
    });
    results.into_iter().collect()
}

/// Sign patterns consistent with observed products on a three-channel star.
///
/// `pairs = [q1·q2, q2·q3, q1·q3]` are the unicast products; `triple` is the
/// optional Mergecast product `q1·q2·q3`. Magnitudes follow from the pairs;
/// every sign assignment is then checked against all observations.
pub fn star_sign_solutions(pairs: [f64; 3], triple: Option<f64>, tol: f64) -> Vec<[f64; 3]> {
    let [p12, p23, p13] = pairs;
    let mags = [
        (p12 * p13 / p23).abs().sqrt(),
        (p12 * p23 / p13).abs().sqrt(),
        (p13 * p23 / p12).abs().sqrt(),
    ];
    let mut out = Vec::new();
    for mask in 0..8u8 {
        let q: [f64; 3] = std::array::from_fn(|i| if mask >> i & 1 == 1 { -mags[i] } else { mags[i] });
        let ok_pairs = (q[0] * q[1] - p12).abs() <= tol
            && (q[1] * q[2] - p23).abs() <= tol
            && (q[0] * q[2] - p13).abs() <= tol;
        let ok_triple = triple.is_none_or(|t| (q[0] * q[1] * q[2] - t).abs() <= tol);
        if ok_pairs && ok_triple {
            out.push(q);
        }
    }
    out
}

/// Unrestricted single-qubit SPAM before phase cycling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralSpam {
    /// Prepared state `[1, s_X, s_Y, s_Z]`.
    pub prep: [f64; 4],
    /// Outcome-0 measurement operator `[m_I, m_X, m_Y, m_Z]`; outcome 1 is `[2,0,0,0]` minus this.
    pub meas0: [f64; 4],
}

impl GeneralSpam {
    /// The two-parameter model it reduces to under phase cycling.
    pub fn reduced(&self) -> (f64, f64) {
        (self.prep[3], self.meas0[3])
    }
}

/// One randomized insertion pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CycleVariant {
    /// `Z` right after preparation.
    pub z_after_prep: bool,
    /// `X` before measurement, with the recorded bit flipped.
    pub x_flip: bool,
    /// `Z` before measurement.
    pub z_before_meas: bool,
}

impl CycleVariant {
    pub fn all() -> [CycleVariant; 8] {
        std::array::from_fn(|i| CycleVariant {
            z_after_prep: i & 1 == 1,
            x_flip: i & 2 == 2,
            z_before_meas: i & 4 == 4,
        })
    }
}

/// `n` independent uniformly random variants.
pub fn phase_cycling_compile(n: usize, seed: u64) -> Vec<CycleVariant> {
    let mut rng = trial_rng(seed, tag("phase-cycling"), 0);
    (0..n)
        .map(|_| CycleVariant::all()[rng.random_range(0..8)])
        .collect()
}

fn pauli_ptm(p: Pauli) -> Ptm1Q {
    let d = match p {
        Pauli::I => [1.0, 1.0, 1.0, 1.0],
        Pauli::X => [1.0, 1.0, -1.0, -1.0],
        Pauli::Y => [1.0, -1.0, 1.0, -1.0],
        Pauli::Z => [1.0, -1.0, -1.0, 1.0],
    };
    Ptm1Q::diag(d)
}

/// Probability that the recorded bit is 0 for one variant, with `process`
/// acting between preparation and measurement.
pub fn cycled_prob(spam: &GeneralSpam, process: &Ptm1Q, v: CycleVariant) -> f64 {
    let mut state = PauliVector1Q::new(spam.prep);
    if v.z_after_prep {
        state = apply_ptm(&pauli_ptm(Pauli::Z), &state);
    }
    state = apply_ptm(process, &state);
    if v.z_before_meas {
        state = apply_ptm(&pauli_ptm(Pauli::Z), &state);
    }
    if v.x_flip {
        state = apply_ptm(&pauli_ptm(Pauli::X), &state);
    }
    let p0: f64 = spam.meas0.iter().zip(state.coeffs).map(|(a, b)| a * b).sum::<f64>() / 2.0;
    if v.x_flip {
        1.0 - p0
    } else {
        p0
    }
}

/// Average of [`cycled_prob`] over all eight variants.
pub fn averaged_cycled_prob(spam: &GeneralSpam, process: &Ptm1Q) -> f64 {
    CycleVariant::all()
        .iter()
        .map(|&v| cycled_prob(spam, process, v))
        .sum::<f64>()
        / 8.0
}

/// Preparation vector averaged over the `I/Z` insertion.
pub fn cycled_prep(spam: &GeneralSpam) -> PauliVector1Q {
    let raw = PauliVector1Q::new(spam.prep);
    let z = apply_ptm(&pauli_ptm(Pauli::Z), &raw);
    PauliVector1Q::new(std::array::from_fn(|i| (raw.coeffs[i] + z.coeffs[i]) / 2.0))
}

/// Outcome-0 operator averaged over the `I/X°` and `I/Z` insertions.
pub fn cycled_meas(spam: &GeneralSpam) -> [f64; 4] {
    let e0 = spam.meas0;
    let e1: [f64; 4] = std::array::from_fn(|i| if i == 0 { 2.0 - e0[0] } else { -e0[i] });
    let x = pauli_ptm(Pauli::X);
    let z = pauli_ptm(Pauli::Z);
    // effects transform with the (self-adjoint, diagonal) Pauli PTMs
    let conj = |e: [f64; 4], m: &Ptm1Q| -> [f64; 4] { std::array::from_fn(|i| m.m[i][i] * e[i]) };
    let mut acc = [0.0; 4];
    for flip in [false, true] {
        let base = if flip { conj(e1, &x) } else { e0 };
        for zz in [false, true] {
            let e = if zz { conj(base, &z) } else { base };
            for (a, v) in acc.iter_mut().zip(e) {
                *a += v / 4.0;
            }
        }
    }
    acc
}

/// Sample `n` shots, each with an independently drawn variant; returns the
/// recorded count of 0 outcomes.
pub fn sample_cycled<R: Rng + ?Sized>(
    spam: &GeneralSpam,
    process: &Ptm1Q,
    n: u64,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    if n == 0 {
        return Err(ProtocolError::NoSamples);
    }
    let probs: [f64; 8] = std::array::from_fn(|i| cycled_prob(spam, process, CycleVariant::all()[i]));
    let mut n0 = 0;
    for _ in 0..n {
        let p = checked_probability(probs[rng.random_range(0..8)])?;
        if rng.random_bool(p) {
            n0 += 1;
        }
    }
    Ok(ProtocolOutcome {
        p0_analytic: probs.iter().sum::<f64>() / 8.0,
        n0,
        n_total: n,
        seed: None,
    })
}

/// The dressing whose Z slot carries `basis`; re-exported for drivers.
pub fn dressing_for(basis: Basis) -> Dressing {
    basis.dressing()
}
