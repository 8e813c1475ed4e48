//! Command-line front end: closed-loop simulation, scenario sample-size
//! queries, one-shot barrier synthesis, certificate validation against
//! fresh samples, and a timing table.
//!
//! Exit codes: `0` success (for `simulate`: goal reached safely), `1`
//! file/argument errors, `2` command-line usage errors, `3` collision,
//! `4` stuck (certification failed for too many consecutive steps),
//! `5` horizon exhausted, `6` certificate check failed, `7` no certified
//! set at the requested state.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use scbf::cbfsyn::{
    assemble_program, evaluate_cbf, synthesize, theory_dimension, CbfError, QuadraticCbf,
    SynthesisOptions,
};
use scbf::consts::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_DT, DEFAULT_EPS, DEFAULT_LAMBDA};
use scbf::control::{
    filter_input, load_certificate, load_plan, load_robot, load_scene, save_certificate,
    simulate, CertificateFile, ControlError, RunOutcome, RunSummary, SimConfig, FORMAT_VERSION,
};
use scbf::geometry::{Placement, Shape};
use scbf::numerics::sym_eigen;
use scbf::robot::{reachable_ball, Joint, JointConfig, ReachableBall, RobotError, RobotModel};
use scbf::scenario::{required_samples, ScenarioBatch, ScenarioBatchError, ScenarioError};
use scbf::sdfield::{overall_sdf, Obstacle, ObstacleMotion, Scene, SdfError, SD_SENTINEL};

const EXIT_ERROR: u8 = 1;
const EXIT_COLLISION: u8 = 3;
const EXIT_STUCK: u8 = 4;
const EXIT_HORIZON: u8 = 5;
const EXIT_CHECK_FAILED: u8 = 6;
const EXIT_NO_CERTIFIED_SET: u8 = 7;

#[derive(Parser)]
#[command(
    name = "scbf",
    version,
    about = "Sampled-data control barrier functions for kinematic manipulators",
    long_about = "Synthesizes quadratic control barrier functions online from \
signed-distance samples and filters waypoint-tracking inputs through them. \
Robot, scene, and plan descriptions are JSON files; `simulate --help` and the \
crate documentation describe the formats."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the closed loop on robot/scene/plan files and write a trace CSV
    Simulate(SimulateArgs),
    /// Print the scenario sample count N̄ for a risk/confidence target
    Samples(SamplesArgs),
    /// Synthesize one barrier at a given state and print its certificate
    Synth(SynthArgs),
    /// Validate a saved certificate against fresh signed-distance samples
    Check(CheckArgs),
    /// Time synthesis and filtering over the sample-count sweep
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Robot description file (JSON)
    #[arg(long)]
    robot: PathBuf,
    /// Scene description file (JSON)
    #[arg(long)]
    scene: PathBuf,
    /// Waypoint plan file (JSON)
    #[arg(long)]
    plan: PathBuf,
    /// Trace CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Scenario batch size per step [default: sized for risk 0.1 at the
    /// certificate dimension]
    #[arg(long)]
    n_samples: Option<usize>,
    /// Base seed; per-step batches derive from it deterministically
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Control period, seconds
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Class-K gain of the synthesis decrease rows
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Barrier-rate gain of the safety filter, 1/s (λ·dt ≤ 1)
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Step budget before the run is cut off
    #[arg(long, default_value_t = 20_000)]
    horizon: usize,
    /// Confidence parameter of the per-step risk certificates
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Count support constraints exactly (slower, tighter risk numbers)
    #[arg(long)]
    count_support: bool,
}

#[derive(Args)]
struct SamplesArgs {
    /// Support-constraint cap e (the certificate dimension)
    #[arg(long, required_unless_present = "dof", conflicts_with = "dof")]
    e: Option<usize>,
    /// Derive e from a joint count instead: e = n + n² + 2
    #[arg(long)]
    dof: Option<usize>,
    /// Target violation probability ε in (0, 1)
    #[arg(long)]
    eps: f64,
    /// Confidence parameter β in (0, 1)
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Search ceiling on N̄
    #[arg(long, default_value_t = 200_000)]
    max_n: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Robot description file (JSON)
    #[arg(long)]
    robot: PathBuf,
    /// Scene description file (JSON)
    #[arg(long)]
    scene: PathBuf,
    /// Synthesis state: comma-separated joint angles, radians
    #[arg(long)]
    state: String,
    /// Control period the reachable ball is sized for, seconds
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Scenario batch size [default: sized for risk 0.1 at the
    /// certificate dimension]
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class-K gain of the decrease rows (used with --u-candidate)
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Confidence parameter of the risk interval
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Input candidate for decrease rows: comma-separated rad/s
    #[arg(long)]
    u_candidate: Option<String>,
    /// Alternation rounds on the input candidate
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Scene time at which moving obstacles are placed, seconds
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    /// Count support constraints exactly (leave-one-out re-solves)
    #[arg(long)]
    count_support: bool,
    /// Write the certificate to this JSON file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the assembled program rows before solving
    #[arg(long)]
    dump_program: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Robot description file (JSON)
    #[arg(long)]
    robot: PathBuf,
    /// Scene description file (JSON)
    #[arg(long)]
    scene: PathBuf,
    /// Certificate file written by `synth --out`
    #[arg(long)]
    cbf: PathBuf,
    /// Fresh Monte-Carlo sample count
    #[arg(long, default_value_t = 10_000)]
    mc: usize,
    /// Seed for the fresh batch (keep ≠ the synthesis seed)
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Scene time at which moving obstacles are placed, seconds
    #[arg(long, default_value_t = 0.0)]
    time: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Joint count of the built-in benchmark arm
    #[arg(long, default_value_t = 7)]
    dof: usize,
    /// Solves per table row; the median is reported
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Control period sizing the reachable ball, seconds
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Confidence parameter β
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Msg(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Cbf(#[from] CbfError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Batch(#[from] ScenarioBatchError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Samples(a) => cmd_samples(a),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut prev = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                let msg = cause.to_string();
                if !prev.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                }
                prev = msg;
                source = cause.source();
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, CliError> {
    let cfg = SimConfig {
        dt: a.dt,
        horizon: a.horizon,
        n_samples: a.n_samples,
        seed: a.seed,
        alpha: a.alpha,
        lambda: a.lambda,
        beta: a.beta,
        count_support: a.count_support,
    };
    let artifacts = simulate(&a.robot, &a.scene, &a.plan, &cfg, Some(&a.out))?;
    let (plan, _) = load_plan(&a.plan)?;
    print_summary(&artifacts.summary, plan.waypoints.len(), a.dt);
    println!(
        "{:<18} {} ({} rows)",
        "trace",
        a.out.display(),
        artifacts.records.len()
    );
    Ok(match artifacts.summary.outcome {
        RunOutcome::GoalReached => 0,
        RunOutcome::Collision => EXIT_COLLISION,
        RunOutcome::Stuck => EXIT_STUCK,
        RunOutcome::HorizonExhausted => EXIT_HORIZON,
    })
}

fn print_summary(s: &RunSummary, n_waypoints: usize, dt: f64) {
    println!("{:<18} {}", "outcome", s.outcome);
    println!(
        "{:<18} {} ({:.2} s simulated)",
        "steps",
        s.steps,
        s.steps as f64 * dt
    );
    if s.min_sd_ov >= SD_SENTINEL {
        println!("{:<18} +inf (no obstacles, no self-collision pairs)", "min sd_ov");
    } else {
        println!("{:<18} {:.6} m", "min sd_ov", s.min_sd_ov);
    }
    if s.min_d_b.is_nan() {
        println!("{:<18} n/a (no certified step)", "min d_b");
    } else {
        println!("{:<18} {:.3e}", "min d_b", s.min_d_b);
    }
    println!("{:<18} {} of {}", "waypoints", s.waypoints_reached, n_waypoints);
    println!(
        "{:<18} {:.1} ms total, {:.1} ms synthesis",
        "wall clock", s.wall_ms, s.synth_ms_total
    );
    let q: Vec<String> = s.final_state.q.iter().map(|v| format!("{v:.4}")).collect();
    println!("{:<18} [{}]", "final state", q.join(", "));
}

fn cmd_samples(a: SamplesArgs) -> Result<u8, CliError> {
    let e = match (a.e, a.dof) {
        (Some(e), _) => e,
        (None, Some(n)) => theory_dimension(n),
        (None, None) => unreachable!("clap enforces one of --e/--dof"),
    };
    let (n_bar, bound) = required_samples(e, a.eps, a.beta, a.max_n, 0.0)?;
    println!("{:<22} {}", "certificate dimension", e);
    println!("{:<22} {} (β = {})", "target ε", a.eps, a.beta);
    println!("{:<22} {}", "required N̄", n_bar);
    println!(
        "{:<22} [{:.4}, {:.4}], midpoint {:.4}",
        "a-priori interval",
        bound.eps_lo,
        bound.eps_hi,
        0.5 * (bound.eps_lo + bound.eps_hi)
    );
    Ok(0)
}

fn cmd_synth(a: SynthArgs) -> Result<u8, CliError> {
    let model = load_robot(&a.robot)?;
    let scene = load_scene(&a.scene)?;
    let x_k = JointConfig::new(parse_vec(&a.state, "--state")?);
    if x_k.len() != model.n() {
        return Err(CliError::Msg(format!(
            "--state has {} entries, robot has {} joints",
            x_k.len(),
            model.n()
        )));
    }
    if !model.within_limits(&x_k) {
        eprintln!("warning: state lies outside the joint limits");
    }
    let u_candidate = a
        .u_candidate
        .as_deref()
        .map(|s| parse_vec(s, "--u-candidate"))
        .transpose()?;
    let n_bar = match a.n_samples {
        Some(n) => n,
        None => default_samples(model.n(), a.beta)?,
    };

    if a.dump_program {
        // Reassembles the exact program `synthesize` will solve: same seed,
        // same batch (the solver additionally tightens the regularity
        // bounds by a hair so accepted solutions meet strict invariants).
        let ball = reachable_ball(&model, &x_k, a.dt)?;
        let batch = ScenarioBatch::draw(&model, &scene, &ball, n_bar, a.seed, a.time)?;
        let assembled =
            assemble_program(&model, &x_k, &ball, &batch, u_candidate.as_deref(), a.alpha)?;
        let mut out = std::io::stdout().lock();
        assembled.program.dump(&mut out)?;
        println!();
    }

    let options = SynthesisOptions {
        u_candidate,
        alpha: a.alpha,
        rounds: a.rounds,
        eval_time: a.time,
        count_support: a.count_support,
        beta: a.beta,
    };
    let report = match synthesize(&model, &scene, &x_k, a.dt, n_bar, a.seed, &options) {
        Ok(r) => r,
        Err(CbfError::NoCertifiedSet { status }) => {
            eprintln!("no certified set at this state (solver status: {status:?})");
            return Ok(EXIT_NO_CERTIFIED_SET);
        }
        Err(CbfError::NoScenarios(n)) => {
            eprintln!("all {n} samples saw empty space; nothing to certify against");
            return Ok(EXIT_NO_CERTIFIED_SET);
        }
        Err(e) => return Err(e.into()),
    };

    let ball = reachable_ball(&model, &x_k, a.dt)?;
    print_certificate(&report.cbf, &ball, &report, model.n());

    if let Some(path) = a.out {
        let file = CertificateFile {
            format_version: FORMAT_VERSION,
            state: x_k.q.clone(),
            dt: a.dt,
            ball_radius: ball.radius,
            cbf: report.cbf.clone(),
            n_samples: report.n_samples,
            c_star: report.c_star,
            eps_hi: report.risk.eps_hi,
            beta: report.risk.beta,
        };
        save_certificate(&path, &file)?;
        println!("{:<18} {}", "written", path.display());
    }
    Ok(0)
}

fn print_certificate(
    cbf: &QuadraticCbf,
    ball: &ReachableBall,
    report: &scbf::cbfsyn::SynthesisReport,
    n: usize,
) {
    let q: Vec<String> = cbf.center().q.iter().map(|v| format!("{v:.4}")).collect();
    println!("{:<18} [{}]", "state", q.join(", "));
    println!("{:<18} {:.6} rad", "ball radius", ball.radius);
    println!(
        "{:<18} {} drawn, {} active",
        "samples",
        report.n_samples,
        report.active.iter().filter(|&&a| a).count()
    );
    println!(
        "{:<18} {:.1} ms, {} iterations, {} round(s)",
        "solve", report.solve_time_ms, report.iterations, report.rounds_used
    );
    println!("{:<18} {:.6e}", "apex d_b", cbf.d_b());
    println!("{:<18} {:.6}", "σ₁ multiplier", cbf.sigma1());
    if let Ok(eig) = sym_eigen(cbf.h_matrix()) {
        println!(
            "{:<18} [{:.6}, {:.6}]",
            "H spectrum",
            eig.min_eigenvalue(),
            eig.max_eigenvalue()
        );
    }
    println!(
        "{:<18} ‖x − x_k‖ ≤ {:.6} rad",
        "superlevel set",
        cbf.superlevel_radius()
    );
    if n <= 8 {
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{:+.5}", cbf.h_matrix().get(i, j)))
                .collect();
            println!("{:<18} [{}]", if i == 0 { "H" } else { "" }, row.join(" "));
        }
    }
    let active: Vec<String> = report
        .active
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(i, _)| i.to_string())
        .take(16)
        .collect();
    let more = report.active.iter().filter(|&&a| a).count().saturating_sub(16);
    let suffix = if more > 0 { format!(", … {more} more") } else { String::new() };
    println!("{:<18} [{}{}]", "active set", active.join(", "), suffix);
    println!("{:<18} {}", "complexity c*", report.c_star);
    println!(
        "{:<18} ε ∈ [{:.4}, {:.4}] at confidence {:.3}",
        "risk",
        report.risk.eps_lo,
        report.risk.eps_hi,
        1.0 - report.risk.beta
    );
}

fn cmd_check(a: CheckArgs) -> Result<u8, CliError> {
    let model = load_robot(&a.robot)?;
    let scene = load_scene(&a.scene)?;
    let cert = load_certificate(&a.cbf)?;
    if cert.state.len() != model.n() {
        return Err(CliError::Msg(format!(
            "certificate is {}-dimensional, robot has {} joints",
            cert.state.len(),
            model.n()
        )));
    }
    if a.mc == 0 {
        return Err(CliError::Msg("--mc must be at least 1".into()));
    }
    let ball = ReachableBall {
        center: JointConfig::new(cert.state.clone()),
        radius: cert.ball_radius,
    };
    let batch = ScenarioBatch::draw(&model, &scene, &ball, a.mc, a.seed, a.time)?;
    let mut violations = 0usize;
    let mut vacuous = 0usize;
    for (x, sdf) in batch.samples.iter().zip(&batch.sdf) {
        if sdf.sd_ov >= SD_SENTINEL {
            vacuous += 1;
            continue;
        }
        let (b, _) = evaluate_cbf(&cert.cbf, x);
        if b > sdf.sd_ov {
            violations += 1;
        }
    }
    let fraction = violations as f64 / a.mc as f64;
    // Binomial standard error; a gauge of Monte-Carlo noise, not part of
    // the pass/fail rule.
    let se = (fraction * (1.0 - fraction) / a.mc as f64).sqrt();
    println!(
        "{:<18} {} (d_b {:.3e}, N̄ {}, c* {})",
        "certificate",
        a.cbf.display(),
        cert.cbf.d_b(),
        cert.n_samples,
        cert.c_star
    );
    println!("{:<18} ε̄ = {:.4} (β {})", "certified bound", cert.eps_hi, cert.beta);
    println!(
        "{:<18} {} drawn, seed {}, {} saw empty space",
        "fresh samples", a.mc, a.seed, vacuous
    );
    println!(
        "{:<18} {} (fraction {:.4} ± {:.4} s.e.)",
        "envelope misses", violations, fraction, se
    );
    if fraction <= cert.eps_hi {
        println!("{:<18} PASS ({fraction:.4} ≤ {:.4})", "verdict", cert.eps_hi);
        Ok(0)
    } else {
        println!("{:<18} FAIL ({fraction:.4} > {:.4})", "verdict", cert.eps_hi);
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Serial arm for the timing table: alternating z/y axes, 0.18 m link
/// pitch, one 0.06 m sphere per link, plus one obstacle pitched so the
/// envelope constraints actually bind at the home state.
fn bench_world(dof: usize) -> Result<(RobotModel, Scene), CliError> {
    if dof == 0 {
        return Err(CliError::Msg("--dof must be at least 1".into()));
    }
    let joints: Vec<Joint> = (0..dof)
        .map(|i| Joint {
            axis: if i % 2 == 0 {
                Vector3::new(0.0, 0.0, 1.0)
            } else {
                Vector3::new(0.0, 1.0, 0.0)
            },
            offset: if i == 0 {
                Placement::identity()
            } else {
                Placement::from_translation(Vector3::new(0.0, 0.0, 0.18))
            },
            limits: (-2.9, 2.9),
            max_speed: 2.5,
        })
        .collect();
    let sphere = Shape::sphere(0.06).map_err(|e| CliError::Msg(e.to_string()))?;
    let links = (0..dof)
        .map(|_| {
            vec![(
                sphere.clone(),
                Placement::from_translation(Vector3::new(0.0, 0.0, 0.09)),
            )]
        })
        .collect();
    let model = RobotModel::new(joints, links, Placement::identity(), &[])?;
    let obstacle = Obstacle {
        name: "pillar".into(),
        shape: Shape::sphere(0.10).map_err(|e| CliError::Msg(e.to_string()))?,
        motion: ObstacleMotion::Fixed(Placement::from_translation(Vector3::new(
            0.22,
            0.0,
            0.18 * dof as f64 * 0.6,
        ))),
    };
    let scene = Scene::new(vec![obstacle])?;
    Ok((model, scene))
}

fn cmd_bench(a: BenchArgs) -> Result<u8, CliError> {
    if a.reps == 0 {
        return Err(CliError::Msg("--reps must be at least 1".into()));
    }
    let (model, scene) = bench_world(a.dof)?;
    let x0 = JointConfig::new(vec![0.0; a.dof]);
    let ball = reachable_ball(&model, &x0, a.dt)?;
    let clearance = overall_sdf(&model, &x0, &scene, 0.0)?.sd_ov;
    let e = theory_dimension(a.dof);
    println!(
        "benchmark arm: {} joints, e = {}, ball radius {:.4} rad, clearance {:.3} m",
        a.dof, e, ball.radius, clearance
    );
    println!(
        "{:>6} {:>7} {:>12} {:>12} {:>12}",
        "ε", "N̄", "median ms", "worst ms", "certified ε̄"
    );
    let options = SynthesisOptions {
        beta: a.beta,
        ..SynthesisOptions::default()
    };
    let mut last: Option<QuadraticCbf> = None;
    for &eps in &[0.5, 0.4, 0.3, 0.2, 0.1, 0.05] {
        let (n_bar, _) = required_samples(e, eps, a.beta, 200_000, 0.0)?;
        let mut times = Vec::with_capacity(a.reps);
        let mut eps_hi = f64::NAN;
        for rep in 0..a.reps {
            let t0 = Instant::now();
            let report = synthesize(
                &model,
                &scene,
                &x0,
                a.dt,
                n_bar,
                a.seed.wrapping_add(rep as u64),
                &options,
            )?;
            times.push(t0.elapsed().as_secs_f64() * 1e3);
            eps_hi = report.risk.eps_hi;
            last = Some(report.cbf);
        }
        times.sort_by(|x, y| x.partial_cmp(y).unwrap());
        println!(
            "{:>6.2} {:>7} {:>12.1} {:>12.1} {:>12.4}",
            eps,
            n_bar,
            times[times.len() / 2],
            times[times.len() - 1],
            eps_hi
        );
    }

    // Filter timing at a state strictly inside the ball (the gradient
    // vanishes at the center, which would make the QP trivially inactive).
    let cbf = last.expect("the sweep ran at least one row");
    let shift = 0.5 * ball.radius / (a.dof as f64).sqrt();
    let x = JointConfig::new(x0.q.iter().map(|v| v + shift).collect());
    let u_des = vec![2.5; a.dof];
    let bounds = model.speed_bounds();
    let reps = 1000;
    let t0 = Instant::now();
    for _ in 0..reps {
        filter_input(&cbf, &x, &u_des, DEFAULT_LAMBDA, &bounds)
            .map_err(|e| CliError::Msg(e.to_string()))?;
    }
    let per_call_us = t0.elapsed().as_secs_f64() * 1e6 / reps as f64;
    println!("filter_input: {per_call_us:.2} µs mean over {reps} calls");
    Ok(0)
}

fn default_samples(n: usize, beta: f64) -> Result<usize, CliError> {
    Ok(required_samples(theory_dimension(n), DEFAULT_EPS, beta, 100_000, 1e-3)?.0)
}

fn parse_vec(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let out: Result<Vec<f64>, _> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse::<f64>)
        .collect();
    match out {
        Ok(v) if v.is_empty() => Err(CliError::Msg(format!("{what} is empty"))),
        Ok(v) => Ok(v),
        Err(e) => Err(CliError::Msg(format!(
            "{what}: expected comma-separated numbers, {e} in {s:?}"
        ))),
    }
}
