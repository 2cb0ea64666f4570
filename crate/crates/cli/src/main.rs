//! `stochmem`: experiment runner for counter strategies in zero-sum
//! stochastic games.

mod config;
mod descriptors;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stochmem::adversary::build_worthlessness_adversary;
use stochmem::counter::{default_limit_schedule, validate_constants, Condition};
use stochmem::discounted::{estimate_value_limit, solve_discounted};
use stochmem::sim::{
    default_checkpoints, memory_bound_report, monte_carlo, run_replication, write_stats_csv, write_trace_csv, McConfig,
    MemoryBoundReport, RunStatistics,
};

use config::{require, resolve_out_dir, ExperimentConfig};
use descriptors::{build_adversary, build_strategy, load_game, AdversarySpec, CounterParams, StrategySpec};

const DEFAULT_EPSILON: f64 = 0.2;
const DEFAULT_THRESHOLD: f64 = 100.0;
const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "stochmem",
    version,
    about = "Counter strategies for zero-sum stochastic games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the discounted game at one rate or along a schedule.
    Solve(SolveArgs),
    /// Monte Carlo runs of a strategy against an adversary.
    Simulate(SimulateArgs),
    /// Check the largeness conditions on the counter floor M.
    ValidateConstants(ValidateArgs),
    /// Build the Big Match adversary that defeats a finite public-memory strategy.
    Impossibility(ImpossibilityArgs),
    /// Write stage-by-stage traces of a few episodes.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// `big-match` or a JSON game file.
    #[arg(long, default_value = "big-match")]
    game: String,
    /// Discount rate in (0, 1).
    #[arg(long, conflicts_with = "schedule", required_unless_present = "schedule")]
    lambda: Option<f64>,
    /// Decreasing rates, at least three, for estimating the undiscounted value.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Sup-norm accuracy of the values.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Also write `lambda,state,value,error_bound` rows to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CounterArgs {
    /// Precision ε in (0, 1/4) [default: 0.2].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Counter floor M [default: 100].
    #[arg(long)]
    threshold: Option<f64>,
    /// Memory growth constant K_ε, at least 4/ln γ [default: 4/ln γ].
    #[arg(long)]
    k_eps: Option<f64>,
    /// Solver accuracy for the discounted values [default: 1e-9].
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `big-match` or a JSON game file [default: big-match].
    #[arg(long)]
    game: Option<String>,
    #[command(flatten)]
    counter: CounterArgs,
    /// counter, counter-cap:<n>, optimal-stationary:<λ>, always:<i> or table:<path> [default: counter].
    #[arg(long)]
    strategy: Option<String>,
    /// always-<j>, uniform, stationary:<p,...>, alternating, best-response[:<cap>] or mixture:<path>.
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    replications: Option<u64>,
    /// Base seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Stage counts at which statistics are taken [default: 10, 32, 100, … up to the horizon].
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Worker threads; the output does not depend on it [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory [default: $STOCHMEM_OUT_DIR or `out`].
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value = "big-match")]
    game: String,
    #[command(flatten)]
    counter: CounterArgs,
    /// Grid {γᵏM : 0 ≤ k ≤ depth}.
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// Rates for estimating the undiscounted value [default: smallest grid rate, /10, /100].
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Also write one row per grid point to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImpossibilityArgs {
    /// Finite public-memory strategy of player 1: table:<path>, counter-cap:<n>,
    /// always:<i> or optimal-stationary:<λ>.
    #[arg(long)]
    sigma: String,
    #[command(flatten)]
    counter: CounterArgs,
    /// Target payoff level δ > 0.
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    /// Bound on absorption into 0 after n_i within the horizon [default: δ/3].
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Replications for the simulated check of the mixture.
    #[arg(long, default_value_t = 1000)]
    replications: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory [default: $STOCHMEM_OUT_DIR or `out`].
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, default_value = "big-match")]
    game: String,
    #[command(flatten)]
    counter: CounterArgs,
    #[arg(long, default_value = "counter")]
    strategy: String,
    #[arg(long, default_value = "uniform")]
    adversary: String,
    #[arg(long)]
    horizon: usize,
    /// Replications 0..n of the base seed.
    #[arg(long, default_value_t = 1)]
    replications: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory [default: $STOCHMEM_OUT_DIR or `out`].
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl CounterArgs {
    fn params(&self) -> CounterParams {
        CounterParams {
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            threshold: self.threshold.unwrap_or(DEFAULT_THRESHOLD),
            k_eps: self.k_eps,
            tol: self.tol.unwrap_or(DEFAULT_TOL),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::ValidateConstants(a) => cmd_validate(a),
        Command::Impossibility(a) => cmd_impossibility(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<stochmem::Error>())
                .map_or(2, stochmem::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let game = load_game(&a.game)?;
    let mut opts = stochmem::SolveOptions {
        tol: a.tol,
        ..Default::default()
    };
    if let Some(n) = a.max_iterations {
        opts.max_iterations = n;
    }
    let names = game.game.state_names().to_vec();
    let mut rows = Vec::new();
    if let Some(lambda) = a.lambda {
        let sol = solve_discounted(&game, lambda, &opts)?;
        println!(
            "lambda {lambda}: {} iterations, error bound {:.3e}",
            sol.iterations, sol.residual
        );
        for (z, v) in sol.values.iter().enumerate() {
            let v = game.denormalize_value(*v);
            println!("  {:<12} {v:.12}", names[z]);
            rows.push((lambda, z, v, sol.residual));
        }
    } else {
        let schedule = a.schedule.expect("clap requires lambda or schedule");
        let est = estimate_value_limit(&game, &schedule, &opts)?;
        for (lambda, values) in est.lambdas_used.iter().zip(&est.per_rate) {
            println!("lambda {lambda}:");
            for (z, v) in values.iter().enumerate() {
                let v = game.denormalize_value(*v);
                println!("  {:<12} {v:.12}", names[z]);
                rows.push((*lambda, z, v, opts.tol));
            }
        }
        println!(
            "limit estimate (smallest rate), spread over last three rates {:.3e}:",
            est.spread * game.map.scale.recip()
        );
        for (z, v) in est.values.iter().enumerate() {
            println!("  {:<12} {:.12}", names[z], game.denormalize_value(*v));
        }
    }
    if let Some(path) = a.csv {
        let mut w = create(&path)?;
        writeln!(w, "lambda,state,value,error_bound")?;
        for (lambda, z, v, err) in rows {
            writeln!(w, "{},{},{},{}", fmt17(lambda), names[z], fmt17(v), fmt17(err))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let file = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = file.overridden_by(ExperimentConfig {
        game: a.game,
        epsilon: a.counter.epsilon,
        threshold: a.counter.threshold,
        k_eps: a.counter.k_eps,
        strategy: a.strategy,
        adversary: a.adversary,
        horizon: a.horizon,
        replications: a.replications,
        seed: a.seed,
        checkpoints: a.checkpoints,
        workers: a.workers,
        tol: a.counter.tol,
        out_dir: a.out_dir,
    });
    let game = load_game(cfg.game.as_deref().unwrap_or("big-match"))?;
    let params = CounterParams {
        epsilon: cfg.epsilon.unwrap_or(DEFAULT_EPSILON),
        threshold: cfg.threshold.unwrap_or(DEFAULT_THRESHOLD),
        k_eps: cfg.k_eps,
        tol: cfg.tol.unwrap_or(DEFAULT_TOL),
    };
    let horizon = require(cfg.horizon, "horizon")?;
    let replications = require(cfg.replications, "replications")?;
    let strategy_spec: StrategySpec = cfg.strategy.as_deref().unwrap_or("counter").parse()?;
    let adversary_spec: AdversarySpec = require(cfg.adversary, "adversary")?.parse()?;
    let out_dir = resolve_out_dir(cfg.out_dir);

    let strategy = build_strategy(&strategy_spec, &game, &params, horizon)?;
    let adversary = build_adversary(&adversary_spec, &game, &strategy, horizon)?;
    let mc = McConfig {
        horizon,
        replications,
        base_seed: cfg.seed.unwrap_or(0),
        checkpoints: cfg.checkpoints.unwrap_or_else(|| default_checkpoints(horizon)),
        workers: cfg.workers.unwrap_or(0),
    };
    let stats = monte_carlo(&game, strategy.as_dyn(), adversary.as_ref(), &mc)?;

    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut w = create(&out_dir.join("stats.csv"))?;
    write_stats_csv(&mut w, &stats)?;
    w.flush()?;
    print_stats(&stats);

    if let Some(cache) = strategy.cache() {
        let config = cache.config();
        let report = memory_bound_report(&stats, config.thresholds(), config.epsilon, config.threshold);
        let mut w = create(&out_dir.join("memory_bounds.csv"))?;
        write_memory_report(&mut w, &report)?;
        w.flush()?;
        print_memory_report(&report);
    }
    let mut w = create(&out_dir.join("summary.csv"))?;
    writeln!(w, "key,value")?;
    writeln!(w, "horizon,{}", stats.horizon)?;
    writeln!(w, "replications,{}", stats.replications)?;
    writeln!(w, "base_seed,{}", stats.base_seed)?;
    writeln!(w, "absorbed_count,{}", stats.absorbed_count)?;
    writeln!(w, "uniform_exceed_count,{}", stats.uniform_exceed_count)?;
    writeln!(w, "uniform_exceed_rate,{}", fmt17(stats.uniform_exceed_rate))?;
    writeln!(w, "uniform_exceed_se,{}", fmt17(stats.uniform_exceed_se))?;
    w.flush()?;
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn print_stats(stats: &RunStatistics) {
    println!(
        "{} replications, horizon {}, base seed {}",
        stats.replications, stats.horizon, stats.base_seed
    );
    println!(
        "{:>10} {:>12} {:>10} {:>6} {:>6} {:>6} {:>6}",
        "n", "mean r̄_n", "se", "p50", "p90", "p99", "max"
    );
    for c in &stats.checkpoints {
        println!(
            "{:>10} {:>12.6} {:>10.2e} {:>6} {:>6} {:>6} {:>6}",
            c.n, c.mean_avg_payoff, c.se_avg_payoff, c.memory_p50, c.memory_p90, c.memory_p99, c.memory_max
        );
    }
}

fn write_memory_report(w: &mut impl Write, r: &MemoryBoundReport) -> std::io::Result<()> {
    writeln!(
        w,
        "n,threshold,exceed_count,exceed_rate,bound,allowed_count,applies,pass,growth_ratio"
    )?;
    for row in &r.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            row.n,
            fmt17(row.threshold),
            row.exceed_count,
            fmt17(row.exceed_rate),
            fmt17(row.bound),
            fmt17(row.allowed_count),
            row.applies,
            row.pass,
            row.growth_ratio.map(fmt17).unwrap_or_default()
        )?;
    }
    Ok(())
}

fn print_memory_report(r: &MemoryBoundReport) {
    println!("memory bounds: K_eps = {:.4}, n_eps = {:.4e}", r.k_eps, r.n_eps);
    for row in &r.rows {
        println!(
            "  n {:>10}: {} of {:.1} allowed exceed K ln n = {:.1}{}{}",
            row.n,
            row.exceed_count,
            row.allowed_count,
            row.threshold,
            if row.applies { "" } else { " (n < M, bound not claimed)" },
            if row.pass { "" } else { "  FAIL" }
        );
    }
    println!(
        "  uniform bound exceeded with rate {:.3e} (se {:.1e}) vs epsilon {}: {}",
        r.uniform_exceed_rate,
        r.uniform_exceed_se,
        r.epsilon,
        if r.uniform_pass { "pass" } else { "FAIL" }
    );
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let game = load_game(&a.game)?;
    let cache = a.counter.params().cache(&game)?;
    let schedule = a
        .schedule
        .unwrap_or_else(|| default_limit_schedule(cache.config(), a.depth));
    let report = validate_constants(&cache, a.depth, &schedule)?;
    let c = &report.config;
    println!(
        "epsilon {}, M {}, gamma {:.6}, grid depth {}, value estimate spread {:.3e}",
        c.epsilon, c.threshold, c.gamma, a.depth, report.limit.spread
    );
    for (name, cond) in [
        ("value variation", Condition::Variation),
        ("value gap", Condition::ValueGap),
        ("log ratio", Condition::LogRatio),
        ("rate step", Condition::RateStep),
    ] {
        match report.first_failure(cond) {
            None => println!("  {name:<16} pass"),
            Some(p) => println!("  {name:<16} FAIL (first at k = {}, s = {:.4})", p.k, p.s),
        }
    }
    let margin_ok = report.points.iter().all(|p| p.value_gap_with_margin.pass);
    println!(
        "  {:<16} {}",
        "gap + 1/ln M",
        if margin_ok { "pass" } else { "FAIL (informational)" }
    );
    if let Some(path) = a.csv {
        let mut w = create(&path)?;
        writeln!(
            w,
            "k,s,lambda,variation_lhs,variation_rhs,variation_pass,gap,gap_pass,log_ratio,log_ratio_pass,rate_step_lhs,rate_step_rhs,rate_step_pass"
        )?;
        for p in &report.points {
            let (vl, vr, vp) = p.variation.map_or((String::new(), String::new(), String::new()), |v| {
                (fmt17(v.lhs), fmt17(v.rhs), v.pass.to_string())
            });
            writeln!(
                w,
                "{},{},{},{vl},{vr},{vp},{},{},{},{},{},{},{}",
                p.k,
                fmt17(p.s),
                fmt17(p.lambda),
                fmt17(p.value_gap.lhs),
                p.value_gap.pass,
                fmt17(p.log_ratio.lhs),
                p.log_ratio.pass,
                fmt17(p.rate_step.lhs),
                fmt17(p.rate_step.rhs),
                p.rate_step.pass
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_impossibility(a: ImpossibilityArgs) -> Result<()> {
    let game = load_game("big-match")?;
    let spec: StrategySpec = a.sigma.parse()?;
    if spec == StrategySpec::Counter {
        bail!("the construction needs finitely many memory states; use counter-cap:<n>");
    }
    let strategy = build_strategy(&spec, &game, &a.counter.params(), a.horizon)?;
    let sigma = strategy.as_table(0, a.horizon)?;
    sigma.check_game(&game.game)?;
    let tail_tol = a.tail_tol.unwrap_or(a.delta / 3.0);
    let built = build_worthlessness_adversary(&sigma, a.delta, a.horizon, tail_tol)?;
    let cert = &built.certificate;

    let mc = McConfig {
        horizon: a.horizon,
        replications: a.replications,
        base_seed: a.seed,
        checkpoints: vec![a.horizon],
        workers: a.workers.unwrap_or(0),
    };
    let stats = monte_carlo(&game, &sigma, &built.mixture, &mc)?;
    let sim = &stats.checkpoints[0];

    let out_dir = resolve_out_dir(a.out_dir);
    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    built.mixture.save(&out_dir.join("adversary.json"))?;
    let mut w = create(&out_dir.join("certificate.json"))?;
    serde_json::to_writer_pretty(&mut w, cert)?;
    w.flush()?;
    let mut w = create(&out_dir.join("certificate.csv"))?;
    writeln!(w, "t,count,mixture_stage_payoff")?;
    let k = cert.components.len() as f64;
    for t in 1..=a.horizon {
        let mean = cert.components.iter().map(|c| c.stage_payoffs[t - 1]).sum::<f64>() / k;
        writeln!(w, "{t},{},{}", cert.count_at(t), fmt17(mean))?;
    }
    w.flush()?;

    let m = cert.n_memories;
    println!(
        "{} components for M = {m}, delta = {}, horizon {}, tail tolerance {}",
        cert.components.len(),
        cert.delta,
        cert.horizon,
        cert.tail_tol
    );
    println!(
        "  certified from stage {}: at most {} components with r_t >= delta (limit M + 1 = {}): {}",
        cert.t_x + 1,
        cert.max_certified_count,
        m + 1,
        if cert.certificate_holds { "holds" } else { "FAILS" }
    );
    println!("  exact mixture payoff        {:.6}", cert.mixture_payoff);
    println!(
        "  simulated mixture payoff    {:.6} (se {:.2e}, {} replications) vs 3 delta = {:.6}: {}",
        sim.mean_avg_payoff,
        sim.se_avg_payoff,
        stats.replications,
        3.0 * a.delta,
        if sim.mean_avg_payoff <= 3.0 * a.delta + 3.0 * sim.se_avg_payoff {
            "pass"
        } else {
            "FAIL"
        }
    );
    println!("  best single component #{}  {:.6}", cert.witness, cert.witness_payoff);
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    if a.horizon == 0 || a.replications == 0 {
        bail!("horizon and replications must be at least 1");
    }
    let game = load_game(&a.game)?;
    let strategy_spec: StrategySpec = a.strategy.parse()?;
    let adversary_spec: AdversarySpec = a.adversary.parse()?;
    let strategy = build_strategy(&strategy_spec, &game, &a.counter.params(), a.horizon)?;
    let adversary = build_adversary(&adversary_spec, &game, &strategy, a.horizon)?;
    let traces = (0..a.replications)
        .map(|r| run_replication(&game, strategy.as_dyn(), adversary.as_ref(), a.horizon, a.seed, r))
        .collect::<stochmem::Result<Vec<_>>>()?;
    let out_dir = resolve_out_dir(a.out_dir);
    let path = out_dir.join("trace.csv");
    let mut w = create(&path)?;
    write_trace_csv(&mut w, &traces)?;
    w.flush()?;
    for t in &traces {
        let max_k = t.stages.iter().map(|s| s.m).max().unwrap_or(0);
        let avg = t.stages.iter().map(|s| s.x).sum::<f64>() / t.horizon as f64;
        match t.absorption_stage {
            Some(s) => println!(
                "replication {}: average {avg:.6}, max memory {max_k}, absorbed after stage {s}",
                t.replication
            ),
            None => println!(
                "replication {}: average {avg:.6}, max memory {max_k}, not absorbed",
                t.replication
            ),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}
