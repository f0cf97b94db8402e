mod run_config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stiffquad::actuation::StiffnessGrouping;
use stiffquad::eval::{self, Scenario};
use stiffquad::physics::{KinematicTree, ModelConfig};
use stiffquad::ppo::{self, Checkpoint};

use run_config::{RunConfig, ECHO_FILE};

#[derive(Debug, Parser)]
#[command(name = "stiffquad", version, about = "Train and evaluate variable-stiffness quadruped policies")]
struct Cli {
    /// Worker threads for rollouts and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a policy with PPO.
    Train(TrainArgs),
    /// Run an evaluation protocol on a checkpoint.
    Eval {
        #[command(subcommand)]
        protocol: Protocol,
    },
    /// Log a seeded rollout of a checkpoint to CSV.
    Replay(ReplayArgs),
    /// Print a checkpoint's header.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Run file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of P20, P50, IJS, PJS, PLS, HJLS.
    #[arg(long)]
    grouping: Option<StiffnessGrouping>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    envs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: runs/<grouping>-seed<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Environment config replacing the run file's [env] table.
    #[arg(long)]
    env_config: Option<PathBuf>,
    /// Robot model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct EvalCommon {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Expected grouping; refused if the checkpoint was trained for another.
    #[arg(long)]
    grouping: Option<StiffnessGrouping>,
    /// Run file supplying [eval.*] protocol settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Robot model file (default: bundled quadruped).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "eval")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Protocol {
    /// Velocity tracking over speeds × headings.
    Tracking {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
        /// Seconds per command.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Push recovery trials and the fitted recovery boundary.
    Push {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Cost of transport per commanded speed.
    Cot {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Stiffness response to a trunk payload.
    Payload {
        #[command(flatten)]
        common: EvalCommon,
        /// Added mass, kg.
        #[arg(long)]
        payload: Option<f64>,
        #[arg(long)]
        speed: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    grouping: Option<StiffnessGrouping>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds of simulated time.
    #[arg(long, default_value_t = 5.0)]
    duration: f64,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval { protocol } => cmd_eval(protocol),
        Command::Replay(args) => cmd_replay(args),
        Command::Inspect { checkpoint } => cmd_inspect(&checkpoint),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain, skipping causes their parent message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text = format!("{text}: {c}");
        }
    }
    text
}

fn load_tree(model: Option<&Path>) -> Result<KinematicTree> {
    Ok(match model {
        Some(path) => ModelConfig::load(path)?.build().with_context(|| format!("building {}", path.display()))?,
        None => KinematicTree::default_quadruped(),
    })
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut run = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &args.env_config {
        run.env = stiffquad::env::EnvConfig::load(path)?;
    }
    run.grouping = args.grouping.or(run.grouping);
    let Some(grouping) = run.grouping else {
        bail!("no grouping given: pass --grouping or set `grouping` in the run file (one of P20, P50, IJS, PJS, PLS, HJLS)");
    };
    if let Some(n) = args.iterations {
        run.train.n_iterations = n;
    }
    if let Some(n) = args.envs {
        run.train.n_envs = n;
    }
    let seed = args.seed.or(run.seed).unwrap_or(run.train.seed);
    run.seed = Some(seed);
    run.train.seed = seed;
    run.model = args.model.or(run.model);
    let out = args
        .out
        .or(run.output_dir.take())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{seed}", grouping.name())));
    run.output_dir = Some(out.clone());
    run.validate()?;
    let tree = load_tree(run.model.as_deref())?;

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let echo = out.join(ECHO_FILE);
    std::fs::write(&echo, run.to_toml_string()?).with_context(|| format!("writing {}", echo.display()))?;
    eprintln!(
        "training {} for {} iterations on {} envs (seed {seed}) into {}",
        grouping.name(),
        run.train.n_iterations,
        run.train.n_envs,
        out.display()
    );
    let total = run.train.n_iterations;
    let outcome = ppo::train(&tree, grouping, &run.env, &run.train, Some(&out), |m| {
        if m.iteration % 10 == 0 || m.iteration + 1 == total {
            let ret = m.mean_episode_return.map_or("-".into(), |r| format!("{r:.3}"));
            let len = m.mean_episode_length.map_or("-".into(), |l| format!("{l:.0}"));
            eprintln!(
                "iter {:>5}  return {ret:>8}  length {len:>5}  kp {:.1}/{:.1}/{:.1}  kl {:.4}",
                m.iteration, m.mean_kp[0], m.mean_kp[1], m.mean_kp[2], m.update.approx_kl
            );
        }
    })?;
    println!("{}", out.join(ppo::METRICS_FILE).display());
    for path in &outcome.checkpoints {
        println!("{}", path.display());
    }
    Ok(())
}

/// Loads the checkpoint and checks the requested grouping before anything
/// is written.
fn open_checkpoint(path: &Path, expected: Option<StiffnessGrouping>, model: Option<&Path>) -> Result<(Checkpoint, Scenario)> {
    let checkpoint = Checkpoint::load(path)?;
    if let Some(expected) = expected {
        if expected != checkpoint.grouping {
            bail!(
                "grouping mismatch: requested {} but {} was trained for {}",
                expected.name(),
                path.display(),
                checkpoint.grouping.name()
            );
        }
    }
    let scenario = Scenario { tree: load_tree(model)?, grouping: checkpoint.grouping, env_config: checkpoint.env_config.clone() };
    Ok((checkpoint, scenario))
}

fn cmd_eval(protocol: Protocol) -> Result<()> {
    let common = match &protocol {
        Protocol::Tracking { common, .. }
        | Protocol::Push { common, .. }
        | Protocol::Cot { common, .. }
        | Protocol::Payload { common, .. } => common.clone(),
    };
    let (checkpoint, scenario) = open_checkpoint(&common.checkpoint, common.grouping, common.model.as_deref())?;
    let mut settings = match &common.config {
        Some(path) => RunConfig::load(path)?.eval,
        None => Default::default(),
    };
    let policy = &checkpoint.params;
    let out = &common.out;
    let seed = common.seed;
    let written = match protocol {
        Protocol::Tracking { common: _, speeds, duration } => {
            let config = &mut settings.tracking;
            override_opt(&mut config.speeds, speeds);
            override_opt(&mut config.duration_s, duration);
            override_opt(&mut config.seed, seed);
            let report = eval::eval_tracking(&scenario, policy, config)?;
            for s in &report.per_speed {
                let error = s.mean_error.map_or("-".into(), |e| format!("{e:.3}"));
                println!("speed {:.2} m/s  mean error {error} m/s  falls {}", s.speed, s.falls);
            }
            create_out(out)?;
            eval::report::export_tracking(out, &report)?
        }
        Protocol::Push { common: _, trials } => {
            let config = &mut settings.push;
            override_opt(&mut config.n_trials, trials);
            override_opt(&mut config.seed, seed);
            let results = eval::eval_push_recovery(&scenario, policy, config)?;
            for bin in eval::success_bins(&results, &eval::SUCCESS_BIN_EDGES) {
                let rate = bin.rate.map_or("-".into(), |r| format!("{:.1}%", 100.0 * r));
                println!("< {:>3.0} N  {rate:>6}  ({}/{})", bin.below, bin.successes, bin.trials);
            }
            let boundary = match eval::fit_recovery_boundary(&results, &Default::default()) {
                Ok(b) => Some(b),
                Err(e @ stiffquad::error::EvalError::SingleClass(_)) => {
                    eprintln!("note: no recovery boundary fitted: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            create_out(out)?;
            eval::report::export_push(out, &results, boundary.as_ref())?
        }
        Protocol::Cot { common: _, speeds, duration } => {
            let config = &mut settings.cot;
            override_opt(&mut config.speeds, speeds);
            override_opt(&mut config.duration_s, duration);
            override_opt(&mut config.seed, seed);
            let rows = eval::eval_cot(&scenario, policy, config)?;
            for r in &rows {
                let cot = r.cot.map_or("-".into(), |c| format!("{c:.3}"));
                println!("speed {:.2} m/s  CoT {cot}  measured {:.3} m/s{}", r.speed, r.mean_speed, if r.fell { "  (fell)" } else { "" });
            }
            create_out(out)?;
            eval::report::export_cot(out, &rows)?
        }
        Protocol::Payload { common: _, payload, speed } => {
            let config = &mut settings.payload;
            override_opt(&mut config.payload_kg, payload);
            override_opt(&mut config.walk_speed, speed);
            override_opt(&mut config.seed, seed);
            let series = eval::eval_payload(&scenario, policy, config)?;
            let fmt = |v: Option<f64>| v.map_or("-".into(), |k| format!("{k:.2}"));
            println!(
                "mean kp unloaded {}  loaded {}{}",
                fmt(series.mean_kp(false, config.load_s)),
                fmt(series.mean_kp(true, config.load_s)),
                series.fell_at.map_or(String::new(), |t| format!("  (fell at {t:.2} s)"))
            );
            create_out(out)?;
            eval::report::export_payload(out, &series)?
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn override_opt<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let (checkpoint, scenario) = open_checkpoint(&args.checkpoint, args.grouping, args.model.as_deref())?;
    if !(args.duration > 0.0) {
        bail!("--duration must be positive, got {}", args.duration);
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_out(dir)?;
    }
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let summary = eval::replay(&scenario, &checkpoint.params, args.seed, args.duration, BufWriter::new(file))?;
    if summary.diverged {
        bail!(
            "simulation diverged after {} control steps; {} ends with a divergence row",
            summary.rows,
            args.out.display()
        );
    }
    println!("{} ({} rows, {} episodes)", args.out.display(), summary.rows, summary.episodes);
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let c = Checkpoint::load(path)?;
    let p = &c.params;
    let shapes = |mlp: &stiffquad::ppo::Mlp| {
        let mut dims = vec![mlp.input_dim()];
        dims.extend(mlp.layers.iter().map(|l| l.weight.nrows()));
        dims.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    };
    let std: Vec<f64> = p.log_std.iter().map(|s| s.exp()).collect();
    println!("checkpoint   {}", path.display());
    println!("grouping     {} ({} actions)", c.grouping.name(), p.action_dim());
    println!("iteration    {}", c.iteration);
    println!("actor        {}", shapes(&p.actor));
    println!("critic       {}", shapes(&p.critic));
    println!("action std   {:.4} (mean)", std.iter().sum::<f64>() / std.len() as f64);
    println!("obs samples  {}", p.obs_normalizer.count);
    println!("training     {} envs, {} iterations, seed {}", c.train_config.n_envs, c.train_config.n_iterations, c.train_config.seed);
    Ok(())
}
