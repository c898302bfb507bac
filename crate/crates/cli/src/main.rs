use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use qnt_cli::{parse_grid, parse_reals, run_experiment, to_csv, Experiment, ExperimentConfig};
use qnt_core::par::Execution;

/// Run a tomography experiment and write its MSE/CRB table as CSV.
#[derive(Debug, Parser)]
#[command(name = "qnt", version)]
struct Args {
    experiment: Experiment,
    /// Topology file for `etch` (defaults to the bundled 19-channel network).
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Preparation parameter.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Measurement parameter.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Mergecast / SPAM-protocol shots: `a,b,c` or `start:end:step`.
    #[arg(long)]
    m_samples: Option<String>,
    /// Unicast shots, same syntax.
    #[arg(long)]
    n_samples: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "QNT_SEED")]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid step 100 and 1000 trials.
    #[arg(long)]
    full_scale: bool,
    /// Star channel q_Z values: target, second branch, outgoing branch.
    #[arg(long)]
    q: Option<String>,
    /// q_Z values along the SPAM-experiment path.
    #[arg(long)]
    path_q: Option<String>,
    /// Send intervals for `loss`, seconds.
    #[arg(long)]
    t_send: Option<String>,
    /// Memory cutoffs for `loss`, seconds.
    #[arg(long)]
    t_c: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    /// Fill runtime_ms (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Disable the worker pool.
    #[arg(long)]
    sequential: bool,
}

fn config(a: Args) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(a.experiment);
    if a.full_scale {
        if a.experiment != Experiment::Etch {
            let grid = parse_grid("100:20000:100")?;
            cfg.m_samples = grid.clone();
            cfg.n_samples = grid;
        }
        cfg.trials = 1000;
    }
    cfg.topology_path = a.topology;
    cfg.s = a.s;
    cfg.m = a.m;
    if let Some(g) = a.m_samples {
        cfg.m_samples = parse_grid(&g).context("--m-samples")?;
    }
    if let Some(g) = a.n_samples {
        cfg.n_samples = parse_grid(&g).context("--n-samples")?;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    cfg.seed = a.seed.unwrap_or(0);
    cfg.output_path = a.out;
    if let Some(q) = a.q {
        let v = parse_reals(&q).context("--q")?;
        cfg.star_q = v.try_into().map_err(|_| anyhow::anyhow!("--q needs exactly three values"))?;
    }
    if let Some(q) = a.path_q {
        cfg.path_q = parse_reals(&q).context("--path-q")?;
    }
    if let Some(t) = a.t_send {
        cfg.loss.t_send = parse_reals(&t).context("--t-send")?;
    }
    if let Some(t) = a.t_c {
        cfg.loss.t_cutoff = parse_reals(&t).context("--t-c")?;
    }
    if let Some(h) = a.horizon {
        cfg.loss.horizon_s = h;
    }
    if let Some(t) = a.t1 {
        cfg.loss.t1_s = t;
    }
    if let Some(t) = a.t2 {
        cfg.loss.t2_s = t;
    }
    cfg.timing = a.timing;
    if a.sequential {
        cfg.exec = Execution::Sequential;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cfg = config(Args::parse())?;
    let rows = run_experiment(&cfg)?;
    let csv = to_csv(&cfg, &rows)?;
    match &cfg.output_path {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
