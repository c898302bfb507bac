//! Mergecast on a three-channel star with lossy fibers and a decohering memory.
//!
//! Both roots send once per slot. A qubit that arrives at the merge node
//! without its partner is stored and decoheres until the partner arrives or
//! the cutoff expires. Merged qubits cross the third fiber (where they can
//! also be lost) before being measured.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::par::{map_indexed, Execution};
use crate::pauli::{
    apply_cnot, apply_ptm, partial_trace, tensor, z_measurement_probs_noisy, AlgebraError,
    PauliChannel, PauliVector1Q, Qubit,
};
use crate::protocols::SpamModel;
use crate::stats::{aggregate_mse, tag, trial_rng, TrialAggregate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("invalid fiber parameters: {0}")]
    Fiber(&'static str),
    #[error("invalid memory parameters: {0}")]
    Memory(&'static str),
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberParams {
    pub length_km: f64,
    pub speed_km_per_s: f64,
    pub p0: f64,
    pub alpha_per_km: f64,
}

impl FiberParams {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(length_km: f64, speed_km_per_s: f64, p0: f64, alpha_per_km: f64) -> Result<Self, LossError> {
        if !(length_km >= 0.0 && length_km.is_finite()) {
            return Err(LossError::Fiber("length must be finite and non-negative"));
        }
        if !(speed_km_per_s > 0.0) {
            return Err(LossError::Fiber("speed must be positive"));
        }
        if !(0.0..1.0).contains(&p0) {
            return Err(LossError::Fiber("initial loss must be in [0, 1)"));
        }
        if !(alpha_per_km >= 0.0 && alpha_per_km.is_finite()) {
            return Err(LossError::Fiber("attenuation must be finite and non-negative"));
        }
        Ok(Self {
            length_km,
            speed_km_per_s,
            p0,
            alpha_per_km,
        })
    }

    /// 10 km at 2e5 km/s, 50% initial loss, 0.05 per km.
    pub fn standard() -> Self {
        Self {
            length_km: 10.0,
            speed_km_per_s: 2e5,
            p0: 0.5,
            alpha_per_km: 0.05,
        }
    }

    /// A fiber that never loses photons.
    pub fn lossless() -> Self {
        Self {
            length_km: 10.0,
            speed_km_per_s: 2e5,
            p0: 0.0,
            alpha_per_km: 0.0,
        }
    }

    pub fn propagation_delay_s(&self) -> f64 {
        self.length_km / self.speed_km_per_s
    }
}

/// `(1 - p0)·exp(-α·L)`.
pub fn survival_prob(f: &FiberParams) -> f64 {
    (1.0 - f.p0) * (-f.alpha_per_km * f.length_km).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryParams {
    pub t1_s: f64,
    pub t2_s: f64,
    pub cutoff_s: f64,
}

impl MemoryParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(t1_s: f64, t2_s: f64, cutoff_s: f64) -> Result<Self, LossError> {
        if !(t1_s > 0.0 && t2_s > 0.0) {
            return Err(LossError::Memory("T1 and T2 must be positive"));
        }
        if t2_s > 2.0 * t1_s {
            return Err(LossError::Memory("T2 must not exceed 2·T1"));
        }
        if !(cutoff_s >= 0.0) {
            return Err(LossError::Memory("cutoff must be non-negative"));
        }
        Ok(Self { t1_s, t2_s, cutoff_s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub send_interval_s: f64,
    pub horizon_s: f64,
}

impl Schedule {
    pub fn new(send_interval_s: f64, horizon_s: f64) -> Result<Self, LossError> {
        if !(send_interval_s > 0.0 && send_interval_s <= horizon_s && horizon_s.is_finite()) {
            return Err(LossError::Schedule("need 0 < send interval ≤ horizon"));
        }
        Ok(Self {
            send_interval_s,
            horizon_s,
        })
    }

    /// Number of send slots in the horizon.
    pub fn slots(&self) -> u64 {
        (self.horizon_s / self.send_interval_s + 1e-9).floor() as u64
    }
}

/// T1/T2 memory noise over `dt` seconds.
pub fn decohere(v: &PauliVector1Q, dt_s: f64, mem: &MemoryParams) -> PauliVector1Q {
    if dt_s == 0.0 {
        return *v;
    }
    let e2 = (-dt_s / mem.t2_s).exp();
    let e1 = (-dt_s / mem.t1_s).exp();
    let [i, x, y, z] = v.coeffs;
    PauliVector1Q::new([i, x * e2, y * e2, z * e1 + (1.0 - e1) * i])
}

/// Result of one simulated horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRun {
    pub slots: u64,
    /// CNOT merges performed at the merge node.
    pub merged_count: u64,
    /// Merged qubits that survived the third fiber and were measured.
    pub received_count: u64,
    /// Measured outcomes equal to 0.
    pub n0: u64,
    /// Merges that used a stored (decohered) qubit.
    pub stored_merges: u64,
    /// `None` when nothing was received or the reference product is zero.
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Stored {
    from_first: bool,
    slot: u64,
}

/// One horizon of lossy Mergecast on the star `[target, branch_a2, branch_b]`.
///
/// Loss draws and outcome draws come from separate streams and are consumed
/// once per slot whatever happens, so runs that differ only in cutoff see the
/// same losses. The estimate divides by the analytic unicast reference
/// `m·s·q2·q3` and by `s`.
pub fn run_loss_experiment(
    star: &[PauliChannel; 3],
    fiber: &FiberParams,
    mem: &MemoryParams,
    sched: &Schedule,
    spam: SpamModel,
    seed: u64,
    trial: u64,
) -> Result<LossRun, LossError> {
    let ps = survival_prob(fiber);
    let mut loss_rng = trial_rng(seed, tag("loss/fiber"), trial);
    let mut outcome_rng = trial_rng(seed, tag("loss/outcome"), trial);
    let arrived = [
        apply_ptm(&star[0].ptm(), &spam.prep()),
        apply_ptm(&star[1].ptm(), &spam.prep()),
    ];
    let third = star[2].ptm();

    let slots = sched.slots();
    let mut stored: Option<Stored> = None;
    let mut run = LossRun {
        slots,
        merged_count: 0,
        received_count: 0,
        n0: 0,
        stored_merges: 0,
        estimate: None,
    };
    for k in 0..slots {
        let first = loss_rng.random_bool(ps);
        let second = loss_rng.random_bool(ps);
        let third_ok = loss_rng.random_bool(ps);
        let u: f64 = outcome_rng.random();

        let pair = match (first, second) {
            (true, true) => {
                stored = None;
                Some((arrived[0], arrived[1]))
            }
            (false, false) => None,
            (f, _) => {
                let partner = stored.filter(|st| {
                    st.from_first != f
                        && (k - st.slot) as f64 * sched.send_interval_s <= mem.cutoff_s + 1e-12
                });
                match partner {
                    Some(st) => {
                        stored = None;
                        run.stored_merges += 1;
                        let dt = (k - st.slot) as f64 * sched.send_interval_s;
                        if f {
                            Some((arrived[0], decohere(&arrived[1], dt, mem)))
                        } else {
                            Some((decohere(&arrived[0], dt, mem), arrived[1]))
                        }
                    }
                    None => {
                        stored = Some(Stored { from_first: f, slot: k });
                        None
                    }
                }
            }
        };
        let Some((control, target)) = pair else { continue };
        run.merged_count += 1;
        if !third_ok {
            continue;
        }
        run.received_count += 1;
        let merged = partial_trace(&apply_cnot(&tensor(&control, &target), Qubit::First), Qubit::First);
        let out = apply_ptm(&third, &merged);
        let (p0, _) = z_measurement_probs_noisy(&out, spam.m)?;
        if u < p0 {
            run.n0 += 1;
        }
    }
    if run.received_count > 0 {
        let reference = spam.m * spam.s * star[1].q_z() * star[2].q_z() * spam.s;
        if reference != 0.0 {
            let p_hat = run.n0 as f64 / run.received_count as f64;
            run.estimate = Some((2.0 * p_hat - 1.0) / reference);
        }
    }
    Ok(run)
}

/// Several independent horizons for one `(T_send, T_c)` setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossCell {
    pub runs: Vec<LossRun>,
    pub mean_merged: f64,
    pub mean_received: f64,
    /// MSE of the estimate of `q_Z` of the first channel over runs that produced one.
    pub aggregate: Option<TrialAggregate>,
}

#[allow(clippy::too_many_arguments)]
pub fn run_loss_cell(
    star: &[PauliChannel; 3],
    fiber: &FiberParams,
    mem: &MemoryParams,
    sched: &Schedule,
    spam: SpamModel,
    seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<LossCell, LossError> {
    let runs: Result<Vec<LossRun>, LossError> = map_indexed(exec, trials, |i| {
        run_loss_experiment(star, fiber, mem, sched, spam, seed, i as u64)
    })
    .into_iter()
    .collect();
    let runs = runs?;
    let n = runs.len().max(1) as f64;
    let estimates: Vec<f64> = runs.iter().filter_map(|r| r.estimate).collect();
    Ok(LossCell {
        mean_merged: runs.iter().map(|r| r.merged_count as f64).sum::<f64>() / n,
        mean_received: runs.iter().map(|r| r.received_count as f64).sum::<f64>() / n,
        aggregate: aggregate_mse(&estimates, star[0].q_z()).ok(),
        runs,
    })
}
