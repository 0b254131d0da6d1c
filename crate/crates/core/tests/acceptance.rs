//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The trained-agent check evaluates the checkpoints under `artifacts/`.
//! Set `FEPKIT_FULL_ACCEPTANCE=1` to retrain every seed from scratch and
//! compare against them as well.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fepkit::aircraft::Airframe;
use fepkit::control::{condition_number, indi_law};
use fepkit::ddpg::{
    actor_layers, actor_objective_and_grad, critic_layers, critic_loss_and_grad, soft_update, DdpgAgent, DdpgConfig,
    Network, NoiseProcess, ReplayBuffer, Topology, Transition, TransitionRef,
};
use fepkit::dynamics::trim::trim_level_flight;
use fepkit::dynamics::{step, AircraftState, Loads, MassProperties};
use fepkit::env::{
    penalty_and_done, r_alpha, r_nz, r_q, r_tracking, reward_total, window_steps, EnvConfig, EnvelopeSample,
    PilotProfile, ProtectionEnv, ProtectionMode, RewardConfig, Termination, ViolationTimers,
};
use fepkit::harness::run::manifest_path;
use fepkit::harness::train::{env_rng, EpisodeMetrics};
use fepkit::harness::{make_env, rerun, run_episode, run_fly, run_sweep, sweep, Config, LoadedAgent, Pilot, SweepResult};
use fepkit::protection::EnvelopeLimits;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn artifacts() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../artifacts")
}

fn physics() -> Outcome {
    let m = MassProperties::f16();
    let mut s = AircraftState {
        velocity: Vector3::new(150.0, 0.0, 0.0),
        omega: Vector3::new(1.0, 0.05, 0.03),
        euler: Vector3::zeros(),
        position: Vector3::new(0.0, 0.0, -3000.0),
    };
    let measure = |s: &AircraftState| {
        let h = m.inertia() * s.omega;
        (h.norm(), 0.5 * s.omega.dot(&h))
    };
    let (h0, e0) = measure(&s);
    for _ in 0..5000 {
        s = step(&s, &Loads::zero(), &m, 0.002, 0.005).map_err(|e| e.to_string())?;
    }
    let (h, e) = measure(&s);
    let drift = ((h - h0) / h0).abs().max(((e - e0) / e0).abs());
    ensure(drift < 1e-6, || format!("torque-free drift {drift:e}"))?;

    let airframe = Airframe::default();
    let trim = trim_level_flight(&airframe, 0.6, 500.0).map_err(|e| e.to_string())?;
    let flight = |dt: f64| {
        let loads = airframe.with_controls(trim.controls());
        let mut s = trim.state.clone();
        s.omega = Vector3::new(0.3, 0.2, -0.1);
        for _ in 0..(2.0 / dt).round() as usize {
            s = step(&s, &loads, &airframe.mass, dt, 0.05).unwrap();
        }
        s
    };
    let reference = flight(0.000625);
    let error = |a: &AircraftState| {
        (a.euler - reference.euler).norm() + (a.omega - reference.omega).norm() + (a.velocity - reference.velocity).norm() / 100.0
    };
    let ratio = error(&flight(0.02)) / error(&flight(0.01));
    ensure((12.0..=20.0).contains(&ratio), || format!("convergence ratio {ratio:.2}"))?;

    let residual = trim.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    ensure(residual < 1e-8, || format!("trim residual {residual:e}"))?;
    Ok(format!("drift {drift:.1e}, RK4 ratio {ratio:.2}, trim residual {residual:.1e}"))
}

fn controller() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v = |rng: &mut ChaCha8Rng, scale: f64| Vector3::from_fn(|_, _| rng.gen_range(-scale..scale));
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = loop {
            let g = Matrix3::from_fn(|_, _| rng.gen_range(-40.0..40.0));
            if condition_number(&g) < 1e3 {
                break g;
            }
        };
        let (wanted, measured, d0) = (v(&mut rng, 3.0), v(&mut rng, 3.0), v(&mut rng, 20.0));
        let cmd = indi_law(&wanted, &measured, &g, &d0, 1e6).map_err(|e| e.to_string())?;
        let achieved = g * (cmd - d0).map(f64::to_radians);
        worst = worst.max((achieved - (wanted - measured)).amax());
    }
    ensure(worst < 1e-10, || format!("inversion residual {worst:e}"))?;

    let mut env = ProtectionEnv::new(EnvConfig::default(), Arc::new(Airframe::default()), ProtectionMode::None)
        .map_err(|e| e.to_string())?;
    env.reset(PilotProfile::pitch(5.0)).map_err(|e| e.to_string())?;
    let mut steady = Vec::new();
    loop {
        let r = env.step(0.0).map_err(|e| e.to_string())?;
        if r.info.time >= 3.0 {
            steady.push(r.info.sample.q_deg - 5.0);
        }
        if r.done() {
            break;
        }
    }
    let offset = steady.iter().sum::<f64>() / steady.len() as f64;
    ensure(offset.abs() < 0.05, || format!("steady error {offset:.4} deg/s"))?;
    Ok(format!("inversion residual {worst:.1e}, 5 deg/s step steady error {offset:.4} deg/s"))
}

fn rewards() -> Outcome {
    let eps = 1e-6;
    let cmd = 10f64.to_radians();
    let tracking = (cmd / (cmd + eps)).powi(2);
    let exact = [
        (r_tracking(0.3, 0.3, eps), 0.0),
        (r_tracking(-0.3, 0.3, eps), 0.0),
        (r_alpha(22.25, 25.0, 0.9), 0.0),
        (r_alpha(22.5, 25.0, 0.9), 0.0),
        (r_nz(9.0, 9.0), 0.0),
        (r_nz(18.0, 9.0), -1.0),
        (r_q(30.0, 30.0), 0.0),
        (r_q(45.0, 30.0), -0.25),
    ];
    for (i, (got, want)) in exact.iter().enumerate() {
        ensure(got == want, || format!("example {i}: {got} != {want}"))?;
    }
    let close = [
        (r_tracking(0.0, cmd, eps), tracking),
        (r_tracking(2.0 * cmd, cmd, eps), tracking),
        (r_alpha(25.0, 25.0, 0.9), -(1.0f64 / 9.0).powi(2)),
    ];
    for (i, (got, want)) in close.iter().enumerate() {
        ensure((got - want).abs() < 1e-12, || format!("interior example {i}: {got} vs {want}"))?;
    }
    let config = RewardConfig::default();
    let inside = reward_total(&EnvelopeSample { alpha_deg: 5.0, nz: 2.0, q_deg: 8.0 }, 8.0, 0.0, &EnvelopeLimits::default(), &config);
    ensure(inside.total == 0.1, || format!("survival-only reward {}", inside.total))?;

    let timers = |steps: u32, beyond: [bool; 3]| {
        let mut t = ViolationTimers::default();
        (0..steps).for_each(|_| t.update(beyond));
        t
    };
    let window = window_steps(config.sustained_window, 0.01);
    let sustained = penalty_and_done(&timers(window, [true, false, true]), [0.1, -0.5, 0.1], window, &config);
    ensure(sustained == (-400.0, Some(Termination::Sustained)), || format!("sustained {sustained:?}"))?;
    let short = penalty_and_done(&timers(window - 1, [true, false, true]), [0.1, -0.5, 0.1], window, &config);
    ensure(short == (0.0, None), || format!("one step short {short:?}"))?;
    let gross = penalty_and_done(&timers(1, [false, true, false]), [-1.0, 0.5, -1.0], window, &config);
    ensure(gross == (-600.0, Some(Termination::Gross)), || format!("gross {gross:?}"))?;
    Ok(format!("{} examples reproduced, sustained -400 and gross -600 terminate", exact.len() + close.len() + 4))
}

fn tiny_net(topology: Topology, rng: &mut ChaCha8Rng) -> Network {
    let layers = match topology {
        Topology::Chain => actor_layers(3, 5),
        Topology::Critic => critic_layers(3, [6, 4], 4),
    };
    let mut net = Network::glorot(topology, layers, rng).unwrap();
    let mask = net.weight_mask();
    for (p, is_weight) in net.params.iter_mut().zip(mask) {
        if !is_weight {
            *p = rng.gen_range(-0.5..0.5);
        }
    }
    net
}

fn relative_gap(analytic: &[f64], numeric: impl Fn(usize) -> f64) -> f64 {
    let numeric: Vec<f64> = (0..analytic.len()).map(numeric).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(&numeric));
    if scale < 1e-12 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

fn perturbed(net: &Network, i: usize, h: f64) -> Network {
    let mut p = net.params.clone();
    p[i] += h;
    Network::from_params(net.topology, net.layers.clone(), p).unwrap()
}

fn gradients() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let state = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect() };
    let (mut critic_worst, mut actor_worst): (f64, f64) = (0.0, 0.0);
    let trials = 100;
    for _ in 0..trials {
        let critic = tiny_net(Topology::Critic, &mut rng);
        let m = rng.gen_range(1..6);
        let states: Vec<Vec<f64>> = (0..m).map(|_| state(&mut rng)).collect();
        let next: Vec<Vec<f64>> = (0..m).map(|_| state(&mut rng)).collect();
        let batch: Vec<TransitionRef> = (0..m)
            .map(|i| TransitionRef {
                state: &states[i],
                action: rng.gen_range(-1.0..1.0),
                reward: rng.gen_range(-1.0..1.0),
                next_state: &next[i],
                done: false,
            })
            .collect();
        let targets: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let loss = |net: &Network| critic_loss_and_grad(net, &batch, &targets).0;
        let (_, analytic) = critic_loss_and_grad(&critic, &batch, &targets);
        critic_worst = critic_worst.max(relative_gap(&analytic, |i| {
            (loss(&perturbed(&critic, i, H)) - loss(&perturbed(&critic, i, -H))) / (2.0 * H)
        }));

        let actor = tiny_net(Topology::Chain, &mut rng);
        let views: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
        let objective = |net: &Network| actor_objective_and_grad(net, &critic, &views).0;
        let (_, analytic) = actor_objective_and_grad(&actor, &critic, &views);
        actor_worst = actor_worst.max(relative_gap(&analytic, |i| {
            (objective(&perturbed(&actor, i, H)) - objective(&perturbed(&actor, i, -H))) / (2.0 * H)
        }));
    }
    ensure(critic_worst < 1e-4 && actor_worst < 1e-4, || {
        format!("worst relative error critic {critic_worst:e}, actor {actor_worst:e}")
    })?;
    Ok(format!("{trials} trials, worst relative error critic {critic_worst:.1e}, actor {actor_worst:.1e}"))
}

fn ddpg_mechanics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let online = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
    let start = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
    let mut target = start.clone();
    for _ in 0..500 {
        soft_update(&mut target, &online, 0.001).map_err(|e| e.to_string())?;
    }
    let decay = 0.999f64.powi(500);
    let soft_gap = target
        .params
        .iter()
        .zip(&online.params)
        .zip(&start.params)
        .fold(0.0f64, |a, ((t, o), s)| a.max((t - (o + decay * (s - o))).abs()));
    ensure(soft_gap < 1e-9, || format!("soft update gap {soft_gap:e}"))?;

    let (n, batch, draws) = (100, 16, 20_000);
    let mut buffer = ReplayBuffer::new(n, 1);
    for i in 0..n {
        buffer.push(&Transition { state: vec![i as f64], action: 0.0, reward: 0.0, next_state: vec![0.0], done: false });
    }
    let mut counts = vec![0u32; n];
    for _ in 0..draws {
        buffer.sample_indices(batch, &mut rng).into_iter().for_each(|i| counts[i] += 1);
    }
    let p = batch as f64 / n as f64;
    let (mean, sd) = (draws as f64 * p, (draws as f64 * p * (1.0 - p)).sqrt());
    let within = counts.iter().filter(|&&c| (c as f64 - mean).abs() <= 3.0 * sd).count();
    ensure(within >= 98, || format!("only {within}/{n} replay counts within 3 sigma"))?;

    let mut noise = NoiseProcess::new(0.001, 1e-9);
    let xs: Vec<f64> = (0..100_000).map(|_| noise.sample(&mut rng)).collect();
    let mu = xs.iter().sum::<f64>() / xs.len() as f64;
    let std = (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
    let std_error = std / 0.001f64.sqrt() - 1.0;
    ensure(std_error.abs() < 0.05, || format!("noise std {std:.5}"))?;

    let run = |seed: u64| -> Result<(Vec<f64>, String), String> {
        let config = DdpgConfig { warmup: 200, buffer_capacity: 10_000, ..DdpgConfig::default() };
        let mut agent = DdpgAgent::new(config, seed).map_err(|e| e.to_string())?;
        let mut env = ProtectionEnv::new(EnvConfig::default(), Arc::new(Airframe::default()), ProtectionMode::Rl)
            .map_err(|e| e.to_string())?;
        let mut rng = env_rng(seed);
        let (mut obs, _) = env.reset_random(&mut rng).map_err(|e| e.to_string())?;
        let mut rewards = Vec::new();
        for _ in 0..1000 {
            let a = agent.select_action(&obs, true);
            let r = env.step(env.config.apply_action(a)).map_err(|e| e.to_string())?;
            agent.remember(&Transition {
                state: obs.to_vec(),
                action: a,
                reward: r.reward,
                next_state: r.observation.to_vec(),
                done: r.terminated.is_some(),
            });
            if agent.ready() {
                agent.update().map_err(|e| e.to_string())?;
            }
            rewards.push(r.reward);
            obs = if r.done() { env.reset_random(&mut rng).map_err(|e| e.to_string())?.0 } else { r.observation };
        }
        Ok((rewards, agent.parameter_hash()))
    };
    let (a, b) = (run(5)?, run(5)?);
    ensure(a == b, || "two 1000-step runs with one seed diverged".into())?;
    Ok(format!(
        "soft-update gap {soft_gap:.1e}, replay {within}/{n} within 3 sigma, noise std off by {:.2}%, 1000-step runs identical",
        100.0 * std_error
    ))
}

fn classical_baseline() -> Outcome {
    let config = Config::default();
    let airframe = Arc::new(config.airframe.clone());
    let mut env = make_env(&config.env, airframe, ProtectionMode::Classical, None).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for name in ["pitch-up", "pitch-down", "roll-transition"] {
        let sc = config.scenario(name).map_err(|e| e.to_string())?;
        let s = run_episode(&mut env, sc.profile.clone(), &Pilot::Plain).map_err(|e| e.to_string())?.summary;
        let longest = s.longest_violation.iter().cloned().fold(0.0, f64::max);
        if name == "roll-transition" {
            ensure(s.any_violation(), || format!("{name}: no violation recorded"))?;
        } else {
            ensure(!s.failed && s.termination.is_none(), || {
                format!("{name}: failed, longest violation {longest:.2} s, termination {:?}", s.termination)
            })?;
        }
        notes.push(format!("{name} longest violation {longest:.2} s"));
    }
    Ok(notes.join(", "))
}

fn spearman(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for k in i..=j {
            ranks[order[k]] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    let mean = (n - 1.0) / 2.0;
    let (mut cov, mut var_x, mut var_y) = (0.0, 0.0, 0.0);
    for (x, y) in ranks.iter().enumerate() {
        let (dx, dy) = (x as f64 - mean, y - mean);
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    cov / (var_x * var_y).sqrt()
}

fn describe_failures(result: &SweepResult) -> String {
    let f: Vec<String> = result
        .failures()
        .map(|r| {
            let longest = r.longest_alpha.max(r.longest_nz).max(r.longest_q);
            format!("q={} ({:.2} s, {})", r.q_cmd, longest, r.termination)
        })
        .collect();
    if f.is_empty() {
        String::new()
    } else {
        format!(" failing: {}", f.join(", "))
    }
}

fn trained_agent() -> Outcome {
    let config = Config::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml"))
        .map_err(|e| e.to_string())?;
    let airframe = Arc::new(config.airframe.clone());
    let full = std::env::var("FEPKIT_FULL_ACCEPTANCE").is_ok_and(|v| v == "1");
    let mut coupled_spec = config.sweep.clone();
    coupled_spec.p_cmd = 60.0;
    let mut lines = Vec::new();
    let mut met = 0;
    for seed in 1..=3u64 {
        let dir = artifacts().join(format!("seed{seed}/train"));
        let checkpoint = dir.join("agent.ckpt");
        let agent = DdpgAgent::load(&checkpoint).map_err(|e| format!("seed {seed}: {e}"))?;

        // the committed run must come from this seed and config
        let mut rd = csv::Reader::from_path(dir.join("metrics.csv")).map_err(|e| e.to_string())?;
        let metrics: Vec<EpisodeMetrics> = rd.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let mut prefix = config.clone();
        prefix.training.max_episodes = if full { config.training.max_episodes } else { 3 };
        let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = fepkit::harness::train::train(&prefix, seed, scratch.path()).map_err(|e| e.to_string())?;
        let mut rd = csv::Reader::from_path(&report.metrics).map_err(|e| e.to_string())?;
        let fresh: Vec<EpisodeMetrics> = rd.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        ensure(metrics.starts_with(&fresh), || format!("seed {seed}: retraining does not reproduce metrics.csv"))?;
        if full {
            ensure(report.parameter_hash == agent.parameter_hash(), || {
                format!("seed {seed}: retrained checkpoint differs")
            })?;
        }

        let averages: Vec<f64> = metrics.iter().take(300).map(|m| m.average_reward).collect();
        let rho = spearman(&averages);
        let pitch = sweep(&config.sweep, &config.env, airframe.clone(), ProtectionMode::Rl, Some(&agent), 0)
            .map_err(|e| e.to_string())?;
        let coupled = sweep(&coupled_spec, &config.env, airframe.clone(), ProtectionMode::Rl, Some(&agent), 0)
            .map_err(|e| e.to_string())?;
        let ok = pitch.pass_rate() == 1.0 && coupled.pass_rate() >= 0.9;
        met += ok as usize;
        lines.push(format!(
            "    seed {seed}: {} episodes, reward-trend rho {rho:.2}; pitch {}/{}{}; coupled {}/{}{}",
            metrics.len(),
            pitch.passed(),
            pitch.rows.len(),
            describe_failures(&pitch),
            coupled.passed(),
            coupled.rows.len(),
            describe_failures(&coupled),
        ));
    }
    let detail = format!("{met}/3 seeds meet 100% pitch and 90% coupled\n{}", lines.join("\n"));
    ensure(met >= 1, || detail.clone())?;
    Ok(detail)
}

fn reproducibility() -> Outcome {
    let config = Config::default();
    let scenario = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_fly(&config, "roll-transition", None, None, scenario.path()).map_err(|e| e.to_string())?;
    let sweep_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_sweep(&config, ProtectionMode::Classical, None, 0, sweep_dir.path()).map_err(|e| e.to_string())?;
    let mut manifests = vec![manifest_path(scenario.path()), manifest_path(sweep_dir.path())];
    let committed = manifest_path(&artifacts().join("seed1/sweep-pitch"));
    if committed.is_file() {
        manifests.push(committed);
    }
    for m in &manifests {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = rerun(m, out.path()).map_err(|e| format!("{}: {e}", m.display()))?;
        ensure(report.identical(), || format!("{}: mismatched {:?}", m.display(), report.mismatches))?;
    }
    // an rl scenario replayed from a committed checkpoint
    let agent = LoadedAgent::load(&artifacts().join("seed1/train/agent.ckpt")).map_err(|e| e.to_string())?;
    let rl = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_fly(&config, "pitch-down", Some(ProtectionMode::Rl), Some(&agent), rl.path()).map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = rerun(&manifest_path(rl.path()), out.path()).map_err(|e| e.to_string())?;
    ensure(report.identical(), || format!("rl scenario: mismatched {:?}", report.mismatches))?;
    Ok(format!("{} manifests rerun bit-identically", manifests.len() + 1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 8] = [
        ("physics oracles", physics, Some(10)),
        ("controller algebra", controller, Some(30)),
        ("reward oracles", rewards, None),
        ("gradient checks", gradients, Some(60)),
        ("ddpg mechanics", ddpg_mechanics, None),
        ("classical baseline", classical_baseline, Some(60)),
        ("trained-agent envelope protection", trained_agent, None),
        ("end-to-end reproducibility", reproducibility, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(limit)) if elapsed > Duration::from_secs(limit) => {
                Err(format!("took {:.1} s, budget {limit} s", elapsed.as_secs_f64()))
            }
            (o, _) => o,
        };
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {verdict} {name} ({:.1} s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
