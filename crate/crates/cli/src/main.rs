//! banditlab: config-driven experiments and theorem checks for
//! replication-proof bandit mechanisms.
//!
//! Exit codes: 0 = expected verdict met, 1 = contrary verdict (or search
//! exhausted), 2 = statistically inconclusive, 3 = configuration error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use banditlab::checkers::{
    check_eps_greedy_closed_form, check_etc_pull_bound, check_hetc_regret_scaling,
    check_misselect_bound, check_permutation_invariance, check_replication_proof, check_trp,
    etc_theorem_m, recheck, Certificate, OpponentSetup, RpCase, RpCheckConfig, ScalingConfig,
};
use banditlab::counterexamples::{
    hucb_failure_search, ucb_failure_certificate_with, ucb_run_lengths,
};
use banditlab::{
    agent_utilities, enumerate_permutations, estimate_expectation, expost_regret, run_episode,
    run_deterministic_trace, EpsSchedule, Error as LabError, PolicySpec, ReplicationVector,
    RewardModel, RewardTape, RunSpec,
};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "banditlab", version, about = "Replication-proof bandit mechanism lab")]
struct Cli {
    /// Worker threads (overrides the BANDITLAB_THREADS env var).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replication count override.
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and emit the per-round trajectory and a summary.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Trajectory file format.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a named verifier and emit its certificate.
    Check {
        /// One of: trp, pi, rp, pull-bound, misselect, scaling,
        /// eps-closed-form.
        name: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Re-verify a previously emitted certificate instead of computing
        /// a fresh one from the config.
        #[arg(long)]
        recheck: Option<PathBuf>,
    },
    /// Construct a failure certificate (kind: ucb or hucb).
    Counterexample {
        kind: String,
        /// UCB bonus scale c.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Schedule length for the emitted run-length file.
        #[arg(long, default_value_t = 2)]
        i_max: usize,
        /// Horizon scan cap.
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
        /// High support value of the focal prior (hucb).
        #[arg(long, default_value_t = 1.0)]
        prior_high: f64,
        /// Opponent-mean grid step (hucb).
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// Reward share α used in the utility confirmation.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Expected outcome for exit-code purposes (e.g. "hucb-deviation").
        #[arg(long)]
        expect: Option<String>,
    },
    /// Estimate regret over the horizon grid; CSV plus optional SVG.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("BANDITLAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // search exhaustion is a finding, not a config problem
            let exhausted = err
                .downcast_ref::<LabError>()
                .is_some_and(|e| matches!(e, LabError::SearchExhausted(_)));
            if exhausted {
                ExitCode::from(1)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn load(cfg: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&cfg.config)?;
    if let Some(seed) = cfg.seed {
        config.experiment.master_seed = seed;
    }
    if let Some(reps) = cfg.reps {
        config.experiment.reps = reps;
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    output::ensure_dir(&cli.out)?;
    match cli.command {
        Command::Run { cfg, format } => cmd_run(&load(&cfg)?, &cli.out, format),
        Command::Check { name, cfg, recheck } => {
            cmd_check(&name, &load(&cfg)?, &cli.out, recheck.as_deref())
        }
        Command::Counterexample {
            kind,
            scale,
            i_max,
            cap,
            prior_high,
            grid_step,
            alpha,
            expect,
        } => cmd_counterexample(
            &kind, scale, i_max, cap, prior_high, grid_step, alpha, expect, &cli.out,
        ),
        Command::Sweep { cfg } => cmd_sweep(&load(&cfg)?, &cli.out),
    }
}

fn cmd_run(config: &ExperimentConfig, out: &std::path::Path, format: Format) -> Result<ExitCode> {
    let horizon = config.horizon()?;
    let instance = config.realized_instance()?;
    let policy = config.policy_for(horizon)?;
    let spec = RunSpec::new(instance, policy.clone(), horizon);
    let deterministic = spec.instance.all_deterministic() && !spec.policy.is_randomized();
    let traj = if deterministic {
        run_deterministic_trace(&spec)?
    } else {
        run_episode(&spec, &RewardTape::new(config.experiment.master_seed))?
    };
    let utilities = agent_utilities(&traj, config.experiment.alpha)?;
    let traj_path = match format {
        Format::Csv => output::write_trajectory_csv(out, "trajectory", &traj)?,
        Format::Json => output::write_trajectory_json(out, "trajectory", &traj)?,
    };
    let summary_path = output::write_run_summary(
        out,
        &traj,
        &policy,
        &utilities,
        config.experiment.master_seed,
        deterministic,
    )?;
    println!(
        "run: regret {} over {} rounds -> {}, {}",
        expost_regret(&traj),
        horizon,
        traj_path.display(),
        summary_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn build_check_certificate(name: &str, config: &ExperimentConfig) -> Result<Certificate> {
    let check = config.check_section();
    let cert = match name {
        "trp" => {
            let horizon = config.horizon()?;
            let agent = config
                .agents
                .first()
                .ok_or_else(|| anyhow!("trp needs one [[agents]] entry"))?;
            let means = agent.realized_means()?;
            let strategies = check
                .strategies
                .clone()
                .ok_or_else(|| anyhow!("trp needs `check.strategies` (including the zero vector)"))?;
            check_trp(
                &config.policy_for(horizon)?,
                means,
                &strategies,
                horizon,
                config.experiment.reward_model,
                &config.eval_mode(),
            )?
        }
        "pi" => {
            let horizon = config.horizon()?;
            let instance = config.realized_instance()?;
            let num_cases = check.num_cases.unwrap_or(20);
            let perms = enumerate_permutations(instance.len())?;
            let gen = RewardTape::new(config.experiment.master_seed);
            let cases: Vec<(Vec<usize>, u64)> = (0..num_cases)
                .map(|i| {
                    let pick = (gen.policy_uniform(i, 0) * perms.len() as f64) as usize;
                    let seed = (gen.policy_uniform(i, 1) * 1e9) as u64;
                    (
                        perms[pick.min(perms.len() - 1)].as_slice().to_vec(),
                        seed,
                    )
                })
                .collect();
            check_permutation_invariance(&config.policy_for(horizon)?, &instance, horizon, &cases)?
        }
        "rp" => {
            let horizons = check
                .horizons
                .clone()
                .or_else(|| config.experiment.horizon.map(|h| vec![h]))
                .ok_or_else(|| anyhow!("rp needs `check.horizons` or `experiment.horizon`"))?;
            let focus = config
                .agents
                .first()
                .ok_or_else(|| anyhow!("rp needs the focus agent as [[agents]] entry 0"))?;
            let mut opponents = Vec::new();
            for opp in &config.agents[1..] {
                let originals = opp.originals_count()?;
                let strategies = match &opp.strategies {
                    Some(list) => list.iter().cloned().map(ReplicationVector).collect(),
                    None => vec![opp.replication_for(originals)?],
                };
                opponents.push(OpponentSetup {
                    prior: opp.prior()?,
                    originals,
                    strategies,
                });
            }
            let cases = horizons
                .iter()
                .map(|&h| {
                    Ok(RpCase {
                        policy: config.policy_for(h)?,
                        horizon: h,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            check_replication_proof(&RpCheckConfig {
                cases,
                prior: focus.prior()?,
                originals: focus.originals_count()?,
                opponents,
                r_max: check.r_max.unwrap_or(2),
                alpha: config.experiment.alpha,
                model: config.experiment.reward_model,
                mode: config.eval_mode(),
            })?
        }
        "pull-bound" => {
            let horizon = config.horizon()?;
            let agent = config
                .agents
                .first()
                .ok_or_else(|| anyhow!("pull-bound needs one [[agents]] entry"))?;
            let means = agent.realized_means()?;
            let m = check.explore_len.unwrap_or_else(|| {
                let mut distinct = means.to_vec();
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                let delta = distinct
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                etc_theorem_m(means.len(), delta, horizon)
            });
            check_etc_pull_bound(
                means,
                m,
                horizon,
                config.experiment.reps,
                config.experiment.master_seed,
            )?
        }
        "misselect" => {
            let agent = config
                .agents
                .first()
                .ok_or_else(|| anyhow!("misselect needs one [[agents]] entry"))?;
            let means = agent.realized_means()?;
            if means.len() != 2 {
                bail!("misselect needs exactly two means (mu_star, mu_arm)");
            }
            let m = check
                .explore_len
                .ok_or_else(|| anyhow!("misselect needs `check.explore_len`"))?;
            check_misselect_bound(
                means[0],
                means[1],
                m,
                config.experiment.reps,
                config.experiment.master_seed,
            )?
        }
        "scaling" => {
            let t_grid = config
                .experiment
                .t_grid
                .clone()
                .ok_or_else(|| anyhow!("scaling needs `experiment.t_grid`"))?;
            let delta = check
                .delta
                .ok_or_else(|| anyhow!("scaling needs `check.delta`"))?;
            let agent_means = config
                .agents
                .iter()
                .map(|a| a.realized_means().map(<[f64]>::to_vec))
                .collect::<Result<Vec<_>>>()?;
            check_hetc_regret_scaling(&ScalingConfig {
                agent_means,
                delta,
                t_grid,
                reps: config.experiment.reps,
                master_seed: config.experiment.master_seed,
                slack: check.slack.unwrap_or(4.0),
            })?
        }
        "eps-closed-form" => {
            let horizon = config.horizon()?;
            let agent = config
                .agents
                .first()
                .ok_or_else(|| anyhow!("eps-closed-form needs one [[agents]] entry"))?;
            let means = agent.realized_means()?;
            if means.len() != 2 {
                bail!("eps-closed-form needs exactly two means (mu_top, mu_bottom)");
            }
            let PolicySpec::EpsGreedy { mode, c, d } = config.policy_for(horizon)? else {
                bail!("eps-closed-form needs an eps-greedy policy");
            };
            check_eps_greedy_closed_form(
                means[0],
                means[1],
                &EpsSchedule { mode, c, d },
                horizon,
                config.experiment.reps,
                config.experiment.master_seed,
            )?
        }
        other => bail!(
            "unknown check {other:?}; expected one of trp, pi, rp, pull-bound, misselect, \
             scaling, eps-closed-form"
        ),
    };
    Ok(cert)
}

fn cmd_check(
    name: &str,
    config: &ExperimentConfig,
    out: &std::path::Path,
    recheck_path: Option<&std::path::Path>,
) -> Result<ExitCode> {
    if let Some(path) = recheck_path {
        let stored = output::read_certificate(path)?;
        let fresh = recheck(&stored)?;
        let identical = fresh == stored;
        println!(
            "recheck {}: {}",
            path.display(),
            if identical { "reproduced bit-for-bit" } else { "DIVERGED" }
        );
        return Ok(if identical {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }
    let cert = build_check_certificate(name, config)?;
    let path = output::write_certificate(out, &format!("certificate-{name}"), &cert)?;
    let expect = config
        .check_section()
        .expect
        .ok_or_else(|| anyhow!("check needs `check.expect` (a certificate kind)"))?;
    let kind = cert.kind();
    println!("check {name}: verdict {kind}, expected {expect} -> {}", path.display());
    if kind == expect {
        Ok(ExitCode::SUCCESS)
    } else if cert.is_inconclusive() {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::from(1))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_counterexample(
    kind: &str,
    scale: f64,
    i_max: usize,
    cap: u64,
    prior_high: f64,
    grid_step: f64,
    alpha: f64,
    expect: Option<String>,
    out: &std::path::Path,
) -> Result<ExitCode> {
    let cert = match kind {
        "ucb" => {
            let schedule = ucb_run_lengths(i_max.max(2), scale)?;
            let schedule_path = output::write_schedule_csv(out, &schedule.entries)?;
            println!("schedule -> {}", schedule_path.display());
            let cert = ucb_failure_certificate_with(scale, cap, alpha)
                .context("UCB failure certificate")?;
            if let Certificate::UcbFailure(report) = &cert {
                // the three exact traces at the witness horizon
                for (name, r) in [("trace-A", vec![0usize, 0]), ("trace-B", vec![1, 0]), ("trace-C", vec![0, 1])]
                {
                    let inst = banditlab::build_registered_instance(
                        &[1.0, 0.0],
                        &ReplicationVector(r),
                        RewardModel::Deterministic,
                    )?;
                    let spec = RunSpec::new(
                        inst,
                        PolicySpec::Ucb { scale },
                        report.witness.horizon,
                    );
                    let traj = run_deterministic_trace(&spec)?;
                    output::write_trajectory_csv(out, name, &traj)?;
                }
                println!(
                    "witness T={} regrets {:?} rp-margin {} utility-gap {}",
                    report.witness.horizon,
                    report.witness.regrets,
                    report.witness.rp_margin,
                    report.witness.utility_gap
                );
            }
            cert
        }
        "hucb" => {
            let cert = hucb_failure_search(prior_high, grid_step, cap, alpha)?;
            match &cert {
                Certificate::HucbDeviation(r) => {
                    let hit = r.hit.expect("deviation certificate carries its hit");
                    println!(
                        "deviation at opponent mean {} horizon {} gap {}",
                        hit.opponent_mean, hit.horizon, hit.utility_gap
                    );
                }
                _ => println!("no deviation found on the grid"),
            }
            cert
        }
        other => bail!("unknown counterexample kind {other:?}; expected ucb or hucb"),
    };
    let path = output::write_certificate(out, &format!("counterexample-{kind}"), &cert)?;
    println!("certificate -> {}", path.display());
    if let Some(expect) = expect {
        if cert.kind() != expect {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(config: &ExperimentConfig, out: &std::path::Path) -> Result<ExitCode> {
    let t_grid = config
        .experiment
        .t_grid
        .clone()
        .ok_or_else(|| anyhow!("sweep needs `experiment.t_grid`"))?;
    let instance = config.realized_instance()?;
    let mut rows = Vec::new();
    for (grid_idx, &horizon) in t_grid.iter().enumerate() {
        let policy = config.policy_for(horizon)?;
        let spec = RunSpec::new(instance.clone(), policy, horizon);
        let deterministic = spec.instance.all_deterministic() && !spec.policy.is_randomized();
        let (mean, half_width, reps) = if deterministic {
            let traj = run_deterministic_trace(&spec)?;
            (expost_regret(&traj), 0.0, 1)
        } else {
            let est = estimate_expectation(
                &spec,
                expost_regret,
                config.experiment.reps,
                config
                    .experiment
                    .master_seed
                    .wrapping_add(grid_idx as u64),
            )?;
            (est.mean, est.half_width_95, est.reps)
        };
        rows.push(output::SweepRow {
            policy: config.experiment.policy.name().to_string(),
            horizon,
            regret_mean: mean,
            ci_half_width: half_width,
            reps,
        });
    }
    let csv_path = output::write_sweep_csv(out, &rows)?;
    println!("sweep -> {}", csv_path.display());
    if config.output.as_ref().is_some_and(|o| o.svg) {
        let svg_path = output::write_sweep_svg(out, &rows)?;
        println!("svg -> {}", svg_path.display());
    }
    Ok(ExitCode::SUCCESS)
}
