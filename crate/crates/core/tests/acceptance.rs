//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qnt_core::network::{simplify_degree2, Topology};
use qnt_core::oracle::{self, KrausChannel};
use qnt_core::par::{map_indexed, Execution};
use qnt_core::pauli::{
    is_bypassable, joint_z_measurement_probs, partial_trace, tensor, z_measurement_probs,
    Basis, Pauli, PauliChannel, PauliVector1Q, Qubit,
};
use qnt_core::protocols::{
    averaged_cycled_prob, cycled_prob, estimate_m, estimate_q_mergecast,
    estimate_q_mergecast_spam, estimate_s, mergecast_prob, run_bypass_estimates,
    run_progressive_etching, sample_with_rng, spam_m_protocol_probs, spam_s_protocol_prob,
    star_sign_solutions, unicast_prob, CycleVariant, EtchingConfig, GeneralSpam,
    ProtocolOutcome, SpamModel,
};
use qnt_core::realistic::{
    decohere, run_loss_cell, run_loss_experiment, survival_prob, FiberParams, MemoryParams,
    Schedule,
};
use qnt_core::stats::{aggregate_mse, crb_mergecast, crb_spam_m, crb_spam_s, fisher_crb_mergecast, tag, trial_rng};
use rand::Rng;

use common::*;

const SEED: u64 = 0x5eed_2024;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn bit_flip_q(q: f64) -> PauliChannel {
    PauliChannel::new(1.0, q, q).unwrap()
}

fn rng_for(label: &str, i: u64) -> qnt_core::stats::Rng {
    trial_rng(SEED, tag(label), i)
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    if elapsed <= budget {
        v
    } else {
        verdict(
            false,
            format!("{} [over budget: {:.1?} > {:.0?}]", v.detail, elapsed, budget),
        )
    }
}

fn criterion_1() -> Verdict {
    let worst = map_indexed(Execution::Parallel, 10_000, |i| {
        let mut rng = rng_for("acceptance/1", i as u64);
        let mut v = tensor(&random_state(&mut rng), &random_state(&mut rng));
        let mut rho = oracle::pauli2_to_density(&v).unwrap();
        for _ in 0..rng.random_range(1..=6) {
            let step = random_step(&mut rng);
            v = apply_pauli(&v, step);
            rho = apply_oracle(&rho, step);
        }
        let mut err = v.max_abs_diff(&oracle::density_to_pauli2(&rho).unwrap());
        let joint = joint_z_measurement_probs(&v, 1.0).unwrap();
        for (a, b) in joint.iter().zip(rho.diagonal_probs()) {
            err = err.max((a - b).abs());
        }
        for q in [Qubit::First, Qubit::Second] {
            let reduced = partial_trace(&v, q);
            let reduced_rho = oracle::trace_out(&rho, q).unwrap();
            err = err.max(reduced.max_abs_diff(&oracle::density_to_pauli(&reduced_rho).unwrap()));
            let (p0, _) = z_measurement_probs(&reduced).unwrap();
            err = err.max((p0 - reduced_rho.prob_zero()).abs());
        }
        err
    })
    .into_iter()
    .fold(0.0, f64::max);
    verdict(
        worst <= 1e-12,
        format!("10000 pipelines, worst abs deviation {worst:.2e}"),
    )
}

fn criterion_2() -> Verdict {
    let p = mergecast_prob(
        &bit_flip_q(0.5),
        &[bit_flip_q(0.25)],
        &[bit_flip_q(0.35)],
        SpamModel::ideal(),
        Basis::Z,
    )
    .unwrap();
    let pin = p == 0.521875;

    let ms = [0.2, 0.4, 0.6, 0.8, 1.0];
    let qs = [-0.9, -0.3, 0.4, 0.7, 1.0];
    let q2p = 0.8;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for &m in &ms {
        for &s in &ms {
            let spam = SpamModel::new(s, m).unwrap();
            for &q1 in &qs {
                for &q2 in &qs {
                    for &q1p in &qs {
                        let probs = spam_m_protocol_probs(
                            &[bit_flip_q(q1), bit_flip_q(q2)],
                            &[bit_flip_q(q1p), bit_flip_q(q2p)],
                            spam,
                        )
                        .unwrap();
                        let expected = (1.0
                            + m * s * s * q1 * q2 * q1p * q2p
                            + m * s * q1p * q2p
                            + m * m * s * q1 * q2)
                            / 4.0;
                        worst = worst.max((probs.p00 - expected).abs());
                        points += 1;
                    }
                }
            }
        }
    }
    verdict(
        pin && worst <= 1e-12,
        format!("mergecast pin {p:?} (exact: {pin}); P00 on {points} grid points, worst {worst:.2e}"),
    )
}

fn signed(rng: &mut impl Rng, lo: f64) -> f64 {
    let mag = rng.random_range(lo..=1.0);
    if rng.random_bool(0.5) {
        -mag
    } else {
        mag
    }
}

fn criterion_3() -> Verdict {
    // Parameters are drawn with |q|, s, m >= 0.2; see the README on conditioning.
    let lo = 0.2;
    let mut rng = rng_for("acceptance/3", 0);
    let mut worst: [f64; 3] = [0.0; 3];
    for _ in 0..1000 {
        let s = rng.random_range(lo..=1.0);
        let m = rng.random_range(lo..=1.0);
        let spam = SpamModel::new(s, m).unwrap();
        let q: [f64; 3] = std::array::from_fn(|_| signed(&mut rng, lo));
        let [c1, c2, c3] = q.map(bit_flip_q);

        let p_merge = mergecast_prob(&c1, &[c2], &[c3], spam, Basis::Z).unwrap();
        let p_uni = unicast_prob(&[c2, c3], spam, Basis::Z).unwrap();
        let q_hat = estimate_q_mergecast_spam(
            &ProtocolOutcome::exact(p_merge),
            &ProtocolOutcome::exact(p_uni),
            spam,
        )
        .unwrap();
        worst[0] = worst[0].max((q_hat - q[0]).abs());

        let path = [c1, c2];
        let p0 = ProtocolOutcome::exact(unicast_prob(&path, spam, Basis::Z).unwrap());
        let p1 = ProtocolOutcome::exact(spam_s_protocol_prob(&path, spam).unwrap());
        worst[1] = worst[1].max((estimate_s(&p1, &p0).unwrap() - s).abs());

        let p2 = ProtocolOutcome::exact(spam_m_protocol_probs(&path, &[c3], spam).unwrap().p_sum);
        worst[2] = worst[2].max((estimate_m(&p2, &p0).unwrap() - m).abs());
    }
    verdict(
        worst.iter().all(|&w| w <= 1e-12),
        format!(
            "1000 draws, worst error q_Z {:.2e}, s {:.2e}, m {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = rng_for("acceptance/4", 0);
    let mut bad = 0;
    for _ in 0..100 {
        let q: [f64; 3] = std::array::from_fn(|_| signed(&mut rng, 0.1));
        let pairs = [q[0] * q[1], q[1] * q[2], q[0] * q[2]];
        let without = star_sign_solutions(pairs, None, 1e-9);
        let with = star_sign_solutions(pairs, Some(q[0] * q[1] * q[2]), 1e-9);
        let recovered = with.len() == 1
            && with[0].iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9);
        if without.len() != 2 || !recovered {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("100 sign patterns, {bad} without exactly 2 unicast / 1 Mergecast solutions"),
    )
}

fn criterion_5() -> Verdict {
    let (q1, q2, q3) = (0.5, 0.25, 0.35);
    let (big_m, big_n) = (10_000, 10_000);
    let spam = SpamModel::ideal();
    let p_merge = mergecast_prob(&bit_flip_q(q1), &[bit_flip_q(q2)], &[bit_flip_q(q3)], spam, Basis::Z).unwrap();
    let p_uni = unicast_prob(&[bit_flip_q(q2), bit_flip_q(q3)], spam, Basis::Z).unwrap();
    let estimates = map_indexed(Execution::Parallel, 200, |t| {
        let t = t as u64;
        let merge = sample_with_rng(p_merge, big_m, &mut rng_for("acceptance/5/mergecast", t)).unwrap();
        let uni = sample_with_rng(p_uni, big_n, &mut rng_for("acceptance/5/unicast", t)).unwrap();
        estimate_q_mergecast(&merge, &uni).unwrap()
    });
    let agg = aggregate_mse(&estimates, q1).unwrap();
    let crb = crb_mergecast(big_m, big_n, q1, q2, q3, 1.0, 1.0).unwrap();
    let fisher = fisher_crb_mergecast(big_m, big_n, q1, q2, q3, 1.0, 1.0).unwrap();
    let ratio = agg.mse / crb;
    verdict(
        (0.3..=3.0).contains(&ratio),
        format!(
            "MSE {:.3e} (±{:.1e}), CRB {crb:.4e}, ratio {ratio:.2} (band [0.3, 3]); binomial delta-method variance {fisher:.3e}",
            agg.mse, agg.std_of_mse
        ),
    )
}

fn criterion_6() -> Verdict {
    let (s, m) = (0.9, 0.9);
    let (q1, q2) = (0.5, 0.25);
    let (big_m, big_n) = (10_000, 10_000);
    let spam = SpamModel::new(s, m).unwrap();
    let path = [bit_flip_q(q1), bit_flip_q(q2)];
    let p0 = unicast_prob(&path, spam, Basis::Z).unwrap();
    let p1 = spam_s_protocol_prob(&path, spam).unwrap();
    let p2 = spam_m_protocol_probs(&path, &path, spam).unwrap().p_sum;
    let pairs = map_indexed(Execution::Parallel, 200, |t| {
        let t = t as u64;
        let uni = sample_with_rng(p0, big_n, &mut rng_for("acceptance/6/unicast", t)).unwrap();
        let sp = sample_with_rng(p1, big_m, &mut rng_for("acceptance/6/s", t)).unwrap();
        let mp = sample_with_rng(p2, big_m, &mut rng_for("acceptance/6/m", t)).unwrap();
        (estimate_s(&sp, &uni).unwrap(), estimate_m(&mp, &uni).unwrap())
    });
    let s_hat: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let m_hat: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let agg_s = aggregate_mse(&s_hat, s).unwrap();
    let agg_m = aggregate_mse(&m_hat, m).unwrap();
    let crb_s = crb_spam_s(big_m, big_n, q1, q2, s, m).unwrap();
    let crb_m = crb_spam_m(big_m, big_n, q1, q2, s, m).unwrap();
    let (rs, rm) = (agg_s.mse / crb_s, agg_m.mse / crb_m);
    let means_ok = (agg_s.mean - s).abs() <= 0.02 && (agg_m.mean - m).abs() <= 0.02;
    let band = 0.2..=5.0;
    verdict(
        means_ok && band.contains(&rs) && band.contains(&rm),
        format!(
            "mean s {:.4}, mean m {:.4} (±0.02: {means_ok}); MSE/CRB s {rs:.2} ({:.2e}/{crb_s:.2e}), m {rm:.2} ({:.2e}/{crb_m:.2e}) (band [0.2, 5])",
            agg_s.mean, agg_m.mean, agg_s.mse, agg_m.mse
        ),
    )
}

fn criterion_7() -> Verdict {
    let topo = Topology::two_ring();
    let trials = 100;
    let runs = map_indexed(Execution::Parallel, trials, |t| {
        let mut cfg = EtchingConfig::new(SpamModel::ideal(), 10_000, 10_000, SEED);
        cfg.trial = t as u64;
        cfg.exec = Execution::Sequential;
        let report = run_progressive_etching(&topo, &cfg).unwrap();
        let step1: Vec<_> = report.edges.iter().filter(|r| r.step == 1).map(|r| r.edge).collect();
        let bypass = run_bypass_estimates(&topo, &step1, &cfg).unwrap();
        (report, bypass)
    });
    let all_edges = runs.iter().all(|(r, _)| r.edges.len() == topo.edge_count());

    let mut per_edge: BTreeMap<_, (usize, Vec<f64>)> = BTreeMap::new();
    let mut per_bypass: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for (report, bypass) in &runs {
        for r in &report.edges {
            per_edge.entry(r.edge).or_insert((r.step, Vec::new())).1.push(r.estimate.q_z);
        }
        for (e, q) in bypass {
            per_bypass.entry(*e).or_default().push(*q);
        }
    }
    let mut step_mse: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (e, (step, est)) in &per_edge {
        step_mse
            .entry(*step)
            .or_default()
            .push(aggregate_mse(est, topo.channel(*e).q_z()).unwrap().mse);
    }
    let means: Vec<(usize, f64)> = step_mse
        .iter()
        .map(|(s, v)| (*s, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let ordered = means.windows(2).all(|w| w[0].1 <= w[1].1);
    let bypass_mse: Vec<f64> = per_bypass
        .iter()
        .map(|(e, v)| aggregate_mse(v, topo.channel(*e).q_z()).unwrap().mse)
        .collect();
    let bypass_mean = bypass_mse.iter().sum::<f64>() / bypass_mse.len().max(1) as f64;
    let step1 = means.first().map(|m| m.1).unwrap_or(f64::NAN);
    let bypass_ok = !bypass_mse.is_empty() && bypass_mean <= step1;
    let steps: Vec<String> = means
        .iter()
        .map(|(s, m)| format!("step{s} {m:.3e} ({} edges)", step_mse[s].len()))
        .collect();
    verdict(
        all_edges && ordered && bypass_ok && means.len() >= 3,
        format!(
            "all {} edges: {all_edges}; {}; ordered: {ordered}; bypass {bypass_mean:.3e} <= step1: {bypass_ok}",
            topo.edge_count(),
            steps.join(", ")
        ),
    )
}

fn criterion_8() -> Verdict {
    let fiber = FiberParams::standard();
    let ps = survival_prob(&fiber);
    let exact = 0.5 * (-0.5f64).exp();
    let loss = 1.0 - ps;
    let survival_ok = (ps - exact).abs() <= 1e-15 && (loss - 0.697).abs() <= 0.001;

    let star = [bit_flip_q(0.5), bit_flip_q(0.25), bit_flip_q(0.35)];
    let spam = SpamModel::ideal();
    let mut counts_ok = true;
    for t_send in [0.1, 0.25, 0.5, 1.0, 2.0] {
        let sched = Schedule::new(t_send, 3600.0).unwrap();
        for trial in 0..3 {
            let counts: Vec<(u64, u64)> = [0.0, 0.2, 0.5, 0.99]
                .iter()
                .map(|f| {
                    let mem = MemoryParams::new(10.0, 1.0, f * t_send).unwrap();
                    let r = run_loss_experiment(&star, &fiber, &mem, &sched, spam, SEED, trial).unwrap();
                    (r.merged_count, r.received_count)
                })
                .collect();
            counts_ok &= counts.windows(2).all(|w| w[0] == w[1]);
        }
    }

    let sched = Schedule::new(0.5, 3600.0).unwrap();
    let cell = |tc: f64| {
        let mem = MemoryParams::new(10.0, 1.0, tc).unwrap();
        run_loss_cell(&star, &fiber, &mem, &sched, spam, SEED, 100, Execution::Parallel).unwrap()
    };
    let (short, long) = (cell(0.05), cell(0.35));
    let mse = |c: &qnt_core::realistic::LossCell| c.aggregate.as_ref().map_or(f64::NAN, |a| a.mse);
    let (mse_short, mse_long) = (mse(&short), mse(&long));
    let order_ok = mse_short < mse_long;
    verdict(
        survival_ok && counts_ok && order_ok,
        format!(
            "loss {:.4}% (survival exact: {survival_ok}); counts equal across T_c < T_send: {counts_ok}; \
             T_send=0.5: merged {:.1} vs {:.1}, MSE(T_c=0.05) {mse_short:.4e} < MSE(T_c=0.35) {mse_long:.4e}: {order_ok}",
            100.0 * loss,
            short.mean_merged,
            long.mean_merged
        ),
    )
}

fn oracle_fixes_some_pauli(c: &PauliChannel) -> bool {
    let k = KrausChannel::pauli(c);
    [Pauli::X, Pauli::Y, Pauli::Z].into_iter().any(|p| {
        let m = oracle::pauli_matrix(p);
        (k.apply_operator(&m) - &m).iter().all(|z| z.norm() <= 1e-12)
    })
}

fn criterion_9() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut rng = rng_for("acceptance/9/bypass", 0);
    let mismatches = (0..10_000)
        .filter(|_| {
            let c = random_channel(&mut rng);
            is_bypassable(&c, 1e-12) != oracle_fixes_some_pauli(&c)
        })
        .count();
    pass &= mismatches == 0;
    notes.push(format!("bypassability mismatches {mismatches}/10000"));

    let mut rng = rng_for("acceptance/9/decohere", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let mem = MemoryParams::new(rng.random_range(0.5..20.0), rng.random_range(0.1..1.0), 0.0).unwrap();
        let v = random_state(&mut rng);
        let (a, b) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        worst = worst.max(decohere(&decohere(&v, a, &mem), b, &mem).max_abs_diff(&decohere(&v, a + b, &mem)));
        worst = worst.max(decohere(&PauliVector1Q::zero(), a, &mem).max_abs_diff(&PauliVector1Q::zero()));
        worst = worst.max(decohere(&v, 1e5, &mem).max_abs_diff(&PauliVector1Q::zero()));
        let rho = oracle::pauli_to_density(&v).unwrap();
        let k = oracle::t1t2_channel(a, mem.t1_s, mem.t2_s);
        let via_oracle = oracle::density_to_pauli(&oracle::evolve_kraus(&rho, &k).unwrap()).unwrap();
        worst = worst.max(decohere(&v, a, &mem).max_abs_diff(&via_oracle));
    }
    pass &= worst <= 1e-12;
    notes.push(format!("decohere semigroup/fixed point/oracle worst {worst:.1e}"));

    let mut rng = rng_for("acceptance/9/simplify", 0);
    let mut simplify_bad = 0;
    for _ in 0..200 {
        let t = subdivided_two_ring(&mut rng);
        let (s1, eq1) = simplify_degree2(&t).unwrap();
        let (s2, eq2) = simplify_degree2(&s1).unwrap();
        let covered: usize = eq1.iter().map(|e| e.edge_ids.len()).sum();
        let conserved = s1.edge_count() + covered - eq1.len() == t.edge_count();
        let idempotent = eq2.is_empty() && s2.to_text() == s1.to_text();
        if !(conserved && idempotent && s1.edge_count() == 19 && s1.is_simplified()) {
            simplify_bad += 1;
        }
    }
    pass &= simplify_bad == 0;
    notes.push(format!("simplification failures {simplify_bad}/200"));

    let mut rng = rng_for("acceptance/9/cycling", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let prep = random_state(&mut rng).coeffs;
        let r = random_state(&mut rng).coeffs;
        let m_i = rng.random_range(0.5..1.5);
        let scale = (1.0 - (m_i - 1.0f64).abs()) * rng.random::<f64>();
        let meas0 = [m_i, scale * r[1], scale * r[2], scale * r[3]];
        let spam = GeneralSpam { prep, meas0 };
        let ch = random_channel(&mut rng);
        let total: f64 = CycleVariant::all()
            .iter()
            .map(|&v| cycled_prob(&spam, &ch.ptm(), v))
            .sum::<f64>()
            / 8.0;
        let (s, m) = spam.reduced();
        let expected = (1.0 + m * ch.q_z() * s) / 2.0;
        worst = worst.max((total - expected).abs());
        worst = worst.max((averaged_cycled_prob(&spam, &ch.ptm()) - expected).abs());
    }
    pass &= worst <= 1e-12;
    notes.push(format!("phase cycling worst {worst:.1e} over 8 variants"));

    verdict(pass, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Verdict, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("algebra matches density-matrix oracle", criterion_1, 10),
        ("closed-form pins", criterion_2, 600),
        ("exact identification", criterion_3, 5),
        ("sign ambiguity", criterion_4, 600),
        ("Monte Carlo vs CRB on the star", criterion_5, 60),
        ("SPAM estimation convergence", criterion_6, 600),
        ("progressive etching", criterion_7, 300),
        ("loss experiment", criterion_8, 300),
        ("property suite", criterion_9, 600),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let v = within_budget(v, elapsed, Duration::from_secs(*budget));
        if !v.pass {
            failures += 1;
        }
        println!(
            "criterion {} {}: {} ({:.2?}) {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            elapsed,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
