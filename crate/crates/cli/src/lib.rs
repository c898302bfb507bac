//! Experiment drivers behind the `qnt` binary.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use qnt_core::network::{parse_topology, simplify_degree2, Topology};
use qnt_core::par::{map_indexed, map_slice, Execution};
use qnt_core::pauli::{Basis, PauliChannel};
use qnt_core::protocols::{
    estimate_m, estimate_q_mergecast_spam, estimate_s, mergecast_prob, run_bypass_estimates,
    run_progressive_etching, sample_with_rng, spam_m_protocol_probs, spam_s_protocol_prob,
    unicast_prob, EtchingConfig, SpamModel,
};
use qnt_core::realistic::{run_loss_cell, FiberParams, MemoryParams, Schedule};
use qnt_core::stats::{aggregate_mse, crb_mergecast, crb_spam_m, crb_spam_s, mix, tag, trial_rng};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Mergecast on a three-channel star.
    Star,
    /// Estimation of the preparation parameter `s`.
    SpamS,
    /// Estimation of the measurement parameter `m`.
    SpamM,
    /// Progressive etching of a whole topology, plus BypassUnicast on its first layer.
    Etch,
    /// Lossy Mergecast with memory cutoff.
    Loss,
    /// `star`, `spam-s` and `spam-m` on every grid cell.
    Sweep,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::Star => "star",
            Experiment::SpamS => "spam-s",
            Experiment::SpamM => "spam-m",
            Experiment::Etch => "etch",
            Experiment::Loss => "loss",
            Experiment::Sweep => "sweep",
        }
    }
}

/// Loss-experiment settings; ignored by the other experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossConfig {
    pub t_send: Vec<f64>,
    pub t_cutoff: Vec<f64>,
    pub horizon_s: f64,
    pub t1_s: f64,
    pub t2_s: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            t_send: vec![0.5],
            t_cutoff: vec![0.05, 0.35],
            horizon_s: 3600.0,
            t1_s: 10.0,
            t2_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub topology_path: Option<PathBuf>,
    pub s: f64,
    pub m: f64,
    /// `M`: Mergecast (or SPAM-protocol) shots.
    pub m_samples: Vec<u64>,
    /// `N`: unicast reference shots.
    pub n_samples: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// `q_Z` of the star channels: target, second branch, outgoing branch.
    pub star_q: [f64; 3],
    /// `q_Z` of the channels on the SPAM-experiment path.
    pub path_q: Vec<f64>,
    pub loss: LossConfig,
    /// Record wall-clock time per row; off by default so output is reproducible.
    pub timing: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        let grid: Vec<u64> = if experiment == Experiment::Etch {
            vec![10_000]
        } else {
            (1..=20).map(|k| k * 1000).collect()
        };
        Self {
            experiment,
            topology_path: None,
            s: 1.0,
            m: 1.0,
            m_samples: grid.clone(),
            n_samples: grid,
            trials: 100,
            seed: 0,
            output_path: None,
            star_q: [0.5, 0.25, 0.35],
            path_q: vec![0.5, 0.25],
            loss: LossConfig::default(),
            timing: false,
            exec: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_samples.is_empty() || self.n_samples.is_empty() {
            bail!("sample grids must be nonempty");
        }
        if self.m_samples.contains(&0) || self.n_samples.contains(&0) {
            bail!("sample sizes must be positive");
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.path_q.is_empty() {
            bail!("the SPAM path needs at least one channel");
        }
        if self.loss.t_send.is_empty() || self.loss.t_cutoff.is_empty() {
            bail!("loss grids must be nonempty");
        }
        SpamModel::new(self.s, self.m).context("invalid SPAM parameters")?;
        Ok(())
    }

    fn spam(&self) -> SpamModel {
        SpamModel::new(self.s, self.m).expect("validated")
    }

    fn cells(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::with_capacity(self.m_samples.len() * self.n_samples.len());
        for &m in &self.m_samples {
            for &n in &self.n_samples {
                out.push((m, n));
            }
        }
        out
    }
}

/// One CSV row: an aggregate over the trials of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub m_samples: u64,
    pub n_samples: u64,
    pub s: f64,
    pub m: f64,
    pub truth: f64,
    pub mse: f64,
    pub mse_std: f64,
    pub crb: f64,
    pub runtime_ms: u64,
    pub seed: u64,
}

/// Parse `a,b,c` or `start:end:step` (inclusive end).
pub fn parse_grid(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            bail!("range grid must be start:end:step, got {text:?}");
        };
        let (start, end, step): (u64, u64, u64) = (a.trim().parse()?, b.trim().parse()?, c.trim().parse()?);
        if step == 0 || start > end {
            bail!("empty or unbounded range {text:?}");
        }
        return Ok((start..=end).step_by(step as usize).collect());
    }
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<u64>().with_context(|| format!("bad grid value {v:?}")))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("empty grid");
    }
    Ok(values)
}

/// Parse a comma-separated list of reals.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?}")))
        .collect()
}

fn bit_flip(q: f64) -> Result<PauliChannel> {
    PauliChannel::new(1.0, q, q).with_context(|| format!("q_Z = {q} is not a valid bit-flip channel"))
}

struct Summary {
    mse: f64,
    mse_std: f64,
}

fn summarize(estimates: &[Option<f64>], truth: f64, what: &str) -> Summary {
    let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
    if ok.len() < estimates.len() {
        eprintln!(
            "warning: {what}: {} of {} trials had a degenerate estimator and were dropped",
            estimates.len() - ok.len(),
            estimates.len()
        );
    }
    match aggregate_mse(&ok, truth) {
        Ok(a) => Summary {
            mse: a.mse,
            mse_std: a.std_of_mse,
        },
        Err(_) => Summary {
            mse: f64::NAN,
            mse_std: f64::NAN,
        },
    }
}

fn cell_key(label: &str, big_m: u64, big_n: u64) -> u64 {
    mix(tag(label), mix(big_m, big_n))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    started: Instant,
}

impl Ctx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn row(&self, label: String, big_m: u64, big_n: u64, truth: f64, sum: Summary, crb: f64) -> Row {
        Row {
            experiment: label,
            m_samples: big_m,
            n_samples: big_n,
            s: self.cfg.s,
            m: self.cfg.m,
            truth,
            mse: sum.mse,
            mse_std: sum.mse_std,
            crb,
            runtime_ms: if self.cfg.timing {
                self.started.elapsed().as_millis() as u64
            } else {
                0
            },
            seed: self.cfg.seed,
        }
    }
}

fn star_rows(cfg: &ExperimentConfig, big_m: u64, big_n: u64) -> Result<Vec<Row>> {
    let ctx = Ctx { cfg, started: Instant::now() };
    let spam = cfg.spam();
    let [q1, q2, q3] = cfg.star_q;
    let p_merge = mergecast_prob(&bit_flip(q1)?, &[bit_flip(q2)?], &[bit_flip(q3)?], spam, Basis::Z)?;
    let p_uni = unicast_prob(&[bit_flip(q2)?, bit_flip(q3)?], spam, Basis::Z)?;
    let key = cell_key("star", big_m, big_n);
    let estimates = map_indexed(cfg.exec, cfg.trials, |t| -> Result<Option<f64>> {
        let t = t as u64;
        let merge = sample_with_rng(p_merge, big_m, &mut trial_rng(cfg.seed, mix(key, 0), t))?;
        let uni = sample_with_rng(p_uni, big_n, &mut trial_rng(cfg.seed, mix(key, 1), t))?;
        Ok(estimate_q_mergecast_spam(&merge, &uni, spam).ok())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let sum = summarize(&estimates, q1, "star");
    let crb = crb_mergecast(big_m, big_n, q1, q2, q3, cfg.s, cfg.m).unwrap_or(f64::NAN);
    Ok(vec![ctx.row("star".into(), big_m, big_n, q1, sum, crb)])
}

fn spam_rows(cfg: &ExperimentConfig, big_m: u64, big_n: u64, want_s: bool, want_m: bool) -> Result<Vec<Row>> {
    let ctx = Ctx { cfg, started: Instant::now() };
    let spam = cfg.spam();
    let path = cfg.path_q.iter().map(|&q| bit_flip(q)).collect::<Result<Vec<_>>>()?;
    let p0 = unicast_prob(&path, spam, Basis::Z)?;
    let p1 = spam_s_protocol_prob(&path, spam)?;
    let p2 = spam_m_protocol_probs(&path, &path, spam)?.p_sum;
    let key = cell_key("spam", big_m, big_n);
    let pairs = map_indexed(cfg.exec, cfg.trials, |t| -> Result<(Option<f64>, Option<f64>)> {
        let t = t as u64;
        let uni = sample_with_rng(p0, big_n, &mut trial_rng(cfg.seed, mix(key, 0), t))?;
        let sp = sample_with_rng(p1, big_m, &mut trial_rng(cfg.seed, mix(key, 1), t))?;
        let mp = sample_with_rng(p2, big_m, &mut trial_rng(cfg.seed, mix(key, 2), t))?;
        Ok((estimate_s(&sp, &uni).ok(), estimate_m(&mp, &uni).ok()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let q: f64 = cfg.path_q.iter().product();
    let mut rows = Vec::new();
    if want_s {
        let est: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let crb = crb_spam_s(big_m, big_n, q, 1.0, cfg.s, cfg.m).unwrap_or(f64::NAN);
        rows.push(ctx.row("spam-s".into(), big_m, big_n, cfg.s, summarize(&est, cfg.s, "spam-s"), crb));
    }
    if want_m {
        let est: Vec<_> = pairs.iter().map(|p| p.1).collect();
        let crb = crb_spam_m(big_m, big_n, q, 1.0, cfg.s, cfg.m).unwrap_or(f64::NAN);
        rows.push(ctx.row("spam-m".into(), big_m, big_n, cfg.m, summarize(&est, cfg.m, "spam-m"), crb));
    }
    Ok(rows)
}

fn basis_label(b: Basis) -> &'static str {
    match b {
        Basis::X => "qx",
        Basis::Y => "qy",
        Basis::Z => "qz",
    }
}

fn load_topology(cfg: &ExperimentConfig) -> Result<Topology> {
    let raw = match &cfg.topology_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_topology(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Topology::two_ring(),
    };
    let (simplified, _) = simplify_degree2(&raw)?;
    Ok(simplified)
}

fn etch_rows(cfg: &ExperimentConfig, topo: &Topology, big_m: u64, big_n: u64) -> Result<Vec<Row>> {
    let ctx = Ctx { cfg, started: Instant::now() };
    let runs = map_indexed(cfg.exec, cfg.trials, |t| -> Result<_> {
        let mut ec = EtchingConfig::new(cfg.spam(), big_m, big_n, mix(cfg.seed, cell_key("etch", big_m, big_n)));
        ec.trial = t as u64;
        ec.exec = Execution::Sequential;
        let report = run_progressive_etching(topo, &ec)?;
        let first: Vec<_> = report.edges.iter().filter(|r| r.step == 1).map(|r| r.edge).collect();
        let bypass = run_bypass_estimates(topo, &first, &ec).ok();
        Ok((report, bypass))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let (first_report, _) = &runs[0];
    for (i, edge) in first_report.edges.iter().enumerate() {
        let truth = topo.channel(edge.edge);
        for basis in Basis::ALL {
            let est: Vec<Option<f64>> = runs.iter().map(|(r, _)| Some(r.edges[i].estimate.q(basis))).collect();
            let label = format!("etch:{}:{}:step{}", edge.name, basis_label(basis), edge.step);
            rows.push(ctx.row(label.clone(), big_m, big_n, truth.q(basis), summarize(&est, truth.q(basis), &label), f64::NAN));
        }
    }
    if runs.iter().all(|(_, b)| b.is_some()) {
        let n_edges = runs[0].1.as_ref().map_or(0, Vec::len);
        for k in 0..n_edges {
            let e = runs[0].1.as_ref().expect("checked")[k].0;
            let est: Vec<Option<f64>> = runs.iter().map(|(_, b)| Some(b.as_ref().expect("checked")[k].1)).collect();
            let truth = topo.channel(e).q_z();
            let label = format!("bypass:{}:qz", topo.edge(e).name);
            rows.push(ctx.row(label.clone(), big_m, big_n, truth, summarize(&est, truth, &label), f64::NAN));
        }
    } else {
        eprintln!("warning: first-layer edges have no BypassUnicast route; bypass rows omitted");
    }
    Ok(rows)
}

fn loss_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let star = [bit_flip(cfg.star_q[0])?, bit_flip(cfg.star_q[1])?, bit_flip(cfg.star_q[2])?];
    let fiber = FiberParams::standard();
    let mut settings = Vec::new();
    for &ts in &cfg.loss.t_send {
        for &tc in &cfg.loss.t_cutoff {
            settings.push((ts, tc));
        }
    }
    map_slice(cfg.exec, &settings, |&(ts, tc)| -> Result<Row> {
        let ctx = Ctx { cfg, started: Instant::now() };
        let mem = MemoryParams::new(cfg.loss.t1_s, cfg.loss.t2_s, tc)?;
        let sched = Schedule::new(ts, cfg.loss.horizon_s)?;
        let cell = run_loss_cell(&star, &fiber, &mem, &sched, cfg.spam(), cfg.seed, cfg.trials, cfg.exec)?;
        let (mse, mse_std) = cell.aggregate.as_ref().map_or((f64::NAN, f64::NAN), |a| (a.mse, a.std_of_mse));
        Ok(ctx.row(
            format!("loss[tsend={ts};tc={tc}]"),
            cell.mean_merged.round() as u64,
            cell.mean_received.round() as u64,
            cfg.star_q[0],
            Summary { mse, mse_std },
            f64::NAN,
        ))
    })
    .into_iter()
    .collect()
}

/// Run the configured experiment; rows come back in grid order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    if cfg.experiment == Experiment::Loss {
        return loss_rows(cfg);
    }
    let topo = if cfg.experiment == Experiment::Etch {
        Some(load_topology(cfg)?)
    } else {
        None
    };
    let cells = cfg.cells();
    let per_cell = map_slice(cfg.exec, &cells, |&(big_m, big_n)| -> Result<Vec<Row>> {
        match cfg.experiment {
            Experiment::Star => star_rows(cfg, big_m, big_n),
            Experiment::SpamS => spam_rows(cfg, big_m, big_n, true, false),
            Experiment::SpamM => spam_rows(cfg, big_m, big_n, false, true),
            Experiment::Etch => etch_rows(cfg, topo.as_ref().expect("loaded"), big_m, big_n),
            Experiment::Sweep => {
                let mut rows = star_rows(cfg, big_m, big_n)?;
                rows.extend(spam_rows(cfg, big_m, big_n, true, true)?);
                Ok(rows)
            }
            Experiment::Loss => unreachable!("handled above"),
        }
        .with_context(|| format!("{} at M={big_m}, N={big_n}", cfg.experiment.label()))
    });
    let mut rows = Vec::new();
    for r in per_cell {
        rows.extend(r?);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "experiment,M,N,s,m,truth,mse,mse_std,crb,runtime_ms,seed";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render rows as CSV, preceded by a comment line carrying the config and seed.
pub fn to_csv(cfg: &ExperimentConfig, rows: &[Row]) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# config={} seed={}", serde_json::to_string(cfg)?, cfg.seed)?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.m_samples,
            r.n_samples,
            real(r.s),
            real(r.m),
            real(r.truth),
            real(r.mse),
            real(r.mse_std),
            real(r.crb),
            r.runtime_ms,
            r.seed
        )?;
    }
    Ok(out)
}
