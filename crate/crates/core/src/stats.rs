//! Seeded randomness, MSE aggregation and Cramér–Rao bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot aggregate an empty list of estimates")]
    Empty,
    #[error("sample sizes must be at least 1 (got M = {m_samples}, N = {n_samples})")]
    ZeroSamples { m_samples: u64, n_samples: u64 },
    #[error("bound is undefined: zero denominator ({0})")]
    ZeroDenominator(&'static str),
}

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive mix of two 64-bit words.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(17))
}

/// Stable 64-bit tag for a label (FNV-1a).
pub fn tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent generator for one trial.
///
/// The ChaCha key is derived from `(master_seed, experiment_id)` and the
/// trial index selects the stream, so different trials never share output.
pub fn trial_rng(master_seed: u64, experiment_id: u64, trial_index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(mix(master_seed, experiment_id));
    rng.set_stream(trial_index);
    rng
}

/// Per-trial summary of an estimator against a known truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialAggregate {
    pub estimates: Vec<f64>,
    pub truth: f64,
    pub mean: f64,
    pub mse: f64,
    /// Standard deviation of the per-trial squared errors.
    pub sq_err_std: f64,
    /// `sq_err_std / sqrt(n_trials)`.
    pub std_of_mse: f64,
    pub n_trials: usize,
}

pub fn aggregate_mse(estimates: &[f64], truth: f64) -> Result<TrialAggregate, StatsError> {
    if estimates.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / n;
    let sq_err_std = var.sqrt();
    Ok(TrialAggregate {
        estimates: estimates.to_vec(),
        truth,
        mean,
        mse,
        sq_err_std,
        std_of_mse: sq_err_std / n.sqrt(),
        n_trials: estimates.len(),
    })
}

fn check_samples(m_samples: u64, n_samples: u64) -> Result<(f64, f64), StatsError> {
    if m_samples == 0 || n_samples == 0 {
        return Err(StatsError::ZeroSamples { m_samples, n_samples });
    }
    Ok((m_samples as f64, n_samples as f64))
}

fn nonzero(x: f64, what: &'static str) -> Result<f64, StatsError> {
    if x == 0.0 || !x.is_finite() {
        Err(StatsError::ZeroDenominator(what))
    } else {
        Ok(x)
    }
}

/// Bound on the Mergecast estimate of `q1` with `M` Mergecast and `N` unicast shots.
///
/// `q1(1 - ms·q1q2q3)/(M·ms·q2q3) + q1²(1 - ms·q2q3)/(N·ms·q2q3)`
pub fn crb_mergecast(
    m_samples: u64,
    n_samples: u64,
    q1: f64,
    q2: f64,
    q3: f64,
    s: f64,
    m: f64,
) -> Result<f64, StatsError> {
    let (big_m, big_n) = check_samples(m_samples, n_samples)?;
    let ms = m * s;
    let d = nonzero(ms * q2 * q3, "m·s·q2·q3")?;
    Ok(q1 * (1.0 - ms * q1 * q2 * q3) / (big_m * d) + q1 * q1 * (1.0 - ms * q2 * q3) / (big_n * d))
}

/// Delta-method variance of the ratio estimator when each shot's outcome is
/// `0` with probability `(1 + x)/2` (the bound the sampling model attains).
///
/// With `a = ms·q1q2q3` (Mergecast) and `d = ms·q2q3` (unicast):
/// `(1 - a²)/(M d²) + q1²(1 - d²)/(N d²)`.
pub fn fisher_crb_mergecast(
    m_samples: u64,
    n_samples: u64,
    q1: f64,
    q2: f64,
    q3: f64,
    s: f64,
    m: f64,
) -> Result<f64, StatsError> {
    let (big_m, big_n) = check_samples(m_samples, n_samples)?;
    let d = nonzero(m * s * q2 * q3, "m·s·q2·q3")?;
    let a = q1 * d;
    Ok((1.0 - a * a) / (big_m * d * d) + q1 * q1 * (1.0 - d * d) / (big_n * d * d))
}

/// Bound on the estimate of `s` over a two-channel path.
///
/// `s(1 - msQ)/(N(1 - ms²Q)mQ) + (1 - ms²Q)/(M(1 - msQ)mQ)` with `Q = q1q2`.
pub fn crb_spam_s(
    m_samples: u64,
    n_samples: u64,
    q1: f64,
    q2: f64,
    s: f64,
    m: f64,
) -> Result<f64, StatsError> {
    let (big_m, big_n) = check_samples(m_samples, n_samples)?;
    let q = q1 * q2;
    let a = nonzero(1.0 - m * s * q, "1 - m·s·q1·q2")?;
    let b = nonzero(1.0 - m * s * s * q, "1 - m·s²·q1·q2")?;
    let mq = nonzero(m * q, "m·q1·q2")?;
    Ok(s * a / (big_n * b * mq) + b / (big_m * a * mq))
}

/// Bound on the estimate of `m`; [`crb_spam_s`] with the roles of `s` and `m` swapped.
pub fn crb_spam_m(
    m_samples: u64,
    n_samples: u64,
    q1: f64,
    q2: f64,
    s: f64,
    m: f64,
) -> Result<f64, StatsError> {
    let (big_m, big_n) = check_samples(m_samples, n_samples)?;
    let q = q1 * q2;
    let a = nonzero(1.0 - m * s * q, "1 - m·s·q1·q2")?;
    let b = nonzero(1.0 - m * m * s * q, "1 - m²·s·q1·q2")?;
    let sq = nonzero(s * q, "s·q1·q2")?;
    Ok(m * a / (big_n * b * sq) + b / (big_m * a * sq))
}
