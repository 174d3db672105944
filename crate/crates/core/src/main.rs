//! Command-line front end: instance generation, recruitment evaluation,
//! informant selection, level iteration and fixed-point analysis, the
//! bi-level and informant-aware solvers, the budget trade-off, and the
//! batch experiment drivers.
//!
//! Exit codes: 0 on success, 1 on validation or input errors, 2 on
//! numerical non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use greensec::bilevel;
use greensec::eval::{EvalContext, EvalMethod};
use greensec::experiments::{self, cell, CsvTable, SweepConfig};
use greensec::levelk;
use greensec::model::{
    generate_instance, quantal_response, validate_instance, CoverageVector, GameInstance,
    GenParams, TargetPayoffs,
};
use greensec::qri;
use greensec::routine::{single_attack_utility, solve_routine};
use greensec::select;
use greensec::tips::InformantSet;

#[derive(Parser)]
#[command(
    name = "greensec",
    about = "Security-game solver with community informants",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random game instance file.
    Gen(GenArgs),
    /// Evaluate a recruited informant set.
    Eval(EvalArgs),
    /// Select an informant set under the recruitment budget.
    Select(SelectArgs),
    /// Trace the level-by-level attacker iteration.
    Levelk(LevelArgs),
    /// Solve the fixed-point attacker response by damped iteration.
    Fixedpoint(FixedPointArgs),
    /// Optimize the defender strategy against the fixed-point attacker.
    Bilevel(BilevelArgs),
    /// Optimize the defender strategy against the informant-aware attacker.
    Qri(QriArgs),
    /// Sweep the budget split between resources and recruits.
    Tradeoff(TradeoffArgs),
    /// Run a named batch experiment and write its CSV table.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of potential informants.
    #[arg(long)]
    nx: usize,
    /// Number of potential attackers.
    #[arg(long)]
    ny: usize,
    /// Number of targets.
    #[arg(long)]
    n: usize,
    /// Defensive resources.
    #[arg(long)]
    r: u32,
    /// Recruitment budget.
    #[arg(long)]
    k: u32,
    #[arg(long)]
    seed: u64,
    /// Cap on the expected number of attacks.
    #[arg(long)]
    sum_pv_cap: Option<f64>,
    /// Payoff magnitude bound.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Recruited informant ids, comma separated; empty set when omitted.
    #[arg(long, value_delimiter = ',')]
    u: Vec<String>,
    /// exact | ctrunc | sampled | sisi | mc
    #[arg(long, default_value = "exact")]
    method: String,
    /// Truncation level for ctrunc.
    #[arg(long = "C", alias = "c", default_value_t = 6)]
    c: usize,
    /// Sample count for sampled.
    #[arg(long = "T", alias = "t", default_value_t = 100)]
    t: u64,
    /// Episode count for mc.
    #[arg(long, default_value_t = 1_000_000)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attacker reasoning level (0 = quantal response to the routine).
    #[arg(long, default_value_t = 0)]
    level: usize,
    /// Append the result as a CSV row to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    instance: PathBuf,
    /// esa | gsa | greedy
    #[arg(long, default_value = "esa")]
    method: String,
    /// exact | ctrunc | sampled | sisi
    #[arg(long, default_value = "exact")]
    evaluator: String,
    #[arg(long = "C", alias = "c", default_value_t = 6)]
    c: usize,
    #[arg(long = "T", alias = "t", default_value_t = 100)]
    t: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Single-attacker strategy inputs shared by levelk and fixedpoint. Either
/// an instance file (routine patrol plus greedy tip responses) or an
/// explicit setup via --x0/--tip/--ra/--pa.
#[derive(Args)]
struct StrategyArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Recruited informant ids for instance mode; all informants when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    u: Option<Vec<String>>,
    /// Routine coverage, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Tip-conditioned coverage; repeat once per target.
    #[arg(long)]
    tip: Vec<String>,
    /// Tip arrival probability.
    #[arg(long)]
    w: Option<f64>,
    /// Attacker rewards, comma separated (explicit mode).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ra: Option<Vec<f64>>,
    /// Attacker penalties, comma separated (explicit mode).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pa: Option<Vec<f64>>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct LevelArgs {
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long, default_value_t = 1000)]
    kappa_max: usize,
    #[arg(long, default_value_t = 4)]
    cycle_window: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FixedPointArgs {
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Args)]
struct BilevelArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Recruited counts to sweep; the instance budget when omitted.
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    /// Resource counts to sweep; the instance resources when omitted.
    #[arg(long, value_delimiter = ',')]
    r_list: Option<Vec<u32>>,
    /// Attack probability of the single attacker.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct QriArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    r_list: Option<Vec<u32>>,
    /// Tip probability override; derived from top-k intensities when
    /// omitted.
    #[arg(long)]
    w: Option<f64>,
    #[arg(long, default_value_t = qri::DEFAULT_SEGMENTS)]
    segments: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value_t = 3.0)]
    cost_resource: f64,
    #[arg(long, default_value_t = 1.0)]
    cost_informant: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// selection | truncation | sisi | levelinf | qri | tradeoff
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("instance failed validation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] greensec::model::ModelError),
    #[error(transparent)]
    Eval(#[from] greensec::eval::EvalError),
    #[error(transparent)]
    Select(#[from] greensec::select::SelectError),
    #[error(transparent)]
    BiLevel(#[from] bilevel::BiLevelError),
    #[error(transparent)]
    Qri(#[from] greensec::qri::QriError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn read_to_string(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn write_string(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn load_instance(path: &PathBuf) -> Result<GameInstance, CliError> {
    let inst = GameInstance::from_json(&read_to_string(path)?)?;
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        let text = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Invalid(text));
    }
    Ok(inst)
}

fn emit_table(table: &CsvTable, csv: Option<&PathBuf>) -> Result<(), CliError> {
    match csv {
        Some(path) => write_string(path, &table.to_csv()),
        None => {
            print!("{}", table.to_csv());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes instead of panicking on
    // the next print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Select(args) => cmd_select(args),
        Command::Levelk(args) => cmd_levelk(args),
        Command::Fixedpoint(args) => cmd_fixedpoint(args),
        Command::Bilevel(args) => cmd_bilevel(args),
        Command::Qri(args) => cmd_qri(args),
        Command::Tradeoff(args) => cmd_tradeoff(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, CliError> {
    let mut params = GenParams::new(args.nx, args.ny, args.n, args.r, args.k);
    params.payoff_scale = args.q;
    params.lambda = args.lambda;
    params.sum_pv_cap = args.sum_pv_cap;
    let inst = generate_instance(args.seed, &params)?;
    let text = inst.to_json();
    match &args.out {
        Some(path) => write_string(path, &text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_eval_method(name: &str) -> Result<EvalMethod, CliError> {
    Ok(match name {
        "exact" => EvalMethod::Exact,
        "ctrunc" => EvalMethod::CTruncated,
        "sampled" => EvalMethod::Sampled,
        "sisi" => EvalMethod::StrongIntensity,
        "mc" => EvalMethod::MonteCarlo,
        other => return Err(CliError::Usage(format!("unknown eval method '{other}'"))),
    })
}

/// Builds the evaluation context at the requested attacker level: level 0
/// responds to the routine patrol; higher levels respond to the induced
/// marginal of the previous level under the recruited set.
fn context_at_level<'a>(
    inst: &'a GameInstance,
    members: &InformantSet,
    level: usize,
) -> Result<EvalContext<'a>, CliError> {
    if level == 0 {
        return Ok(EvalContext::new(inst)?);
    }
    let base = solve_routine(inst)?;
    let index = inst.index()?;
    let view = greensec::tips::RecruitView::build(inst, &index, members.clone());
    let mut attack = base.attack.clone();
    for _ in 0..level {
        let marginal = levelk::marginal_strategy_general(inst, &view, &base.coverage, &attack)?;
        attack = quantal_response(&marginal, &inst.targets, inst.lambda);
    }
    let def_eu = single_attack_utility(&base.coverage, &attack, &inst.targets);
    Ok(EvalContext::with_attack(
        inst,
        base.coverage,
        attack,
        def_eu,
    )?)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.instance)?;
    let ids: Vec<String> = args.u.iter().filter(|s| !s.is_empty()).cloned().collect();
    let members = InformantSet::from_ids(&inst, &ids)?;
    let method = parse_eval_method(&args.method)?;
    let ctx = context_at_level(&inst, &members, args.level)?;
    let result = match method {
        EvalMethod::Exact => ctx.eval_exact(&members)?,
        EvalMethod::CTruncated => ctx.eval_truncated(&members, args.c)?,
        EvalMethod::Sampled => ctx.eval_sampled(&members, args.t, args.seed)?,
        EvalMethod::StrongIntensity => ctx.eval_strong_intensity(&members)?,
        EvalMethod::MonteCarlo => ctx.eval_monte_carlo(&members, args.episodes, args.seed)?,
    };
    println!("method: {}", result.method);
    println!("recruited: [{}]", ids.join(","));
    println!("value: {}", result.value);
    if let Some(bound) = result.error_bound {
        println!("error_bound: {bound}");
    }
    if let Some(count) = result.sample_count {
        println!("samples: {count}");
    }
    if let Some(path) = &args.csv {
        let header = "method,recruited,level,value,error_bound,samples,seed";
        let row = format!(
            "{},{},{},{},{},{},{}",
            result.method,
            ids.join("|"),
            args.level,
            cell(result.value),
            result.error_bound.map(cell).unwrap_or_default(),
            result
                .sample_count
                .map(|s| s.to_string())
                .unwrap_or_default(),
            result.seed.map(|s| s.to_string()).unwrap_or_default(),
        );
        let mut text = if path.exists() {
            read_to_string(path)?
        } else {
            format!("{header}\n")
        };
        text.push_str(&row);
        text.push('\n');
        write_string(path, &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_select(args: SelectArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.instance)?;
    let evaluator_kind = parse_eval_method(&args.evaluator)?;
    let ctx = EvalContext::new(&inst)?;
    let mut evaluator = select::context_evaluator(&ctx, evaluator_kind, args.c, args.t, args.seed);
    let result = match args.method.as_str() {
        "esa" => select::select_exhaustive(&inst, &mut evaluator)?,
        "gsa" => select::select_greedy_branching(&inst, &mut evaluator)?,
        "greedy" => select::select_tip_probability_baseline(&inst, &mut evaluator)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown selection method '{other}'"
            )))
        }
    };
    let ids = result.chosen.ids(&inst);
    println!("method: {}", result.method);
    println!("chosen: [{}]", ids.join(","));
    println!("value: {}", result.value);
    println!("evaluations: {}", result.evaluations_used);
    if let Some(path) = &args.csv {
        let mut table = CsvTable::new(
            "select",
            &["method", "evaluator", "chosen", "value", "evaluations"],
        );
        table.push(vec![
            result.method.to_string(),
            evaluator_kind.to_string(),
            ids.join("|"),
            cell(result.value),
            result.evaluations_used.to_string(),
        ]);
        emit_table(&table, Some(path))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Resolved single-attacker strategy setup for levelk/fixedpoint.
struct StrategySetup {
    routine: Vec<f64>,
    tip_strategies: Vec<CoverageVector>,
    tip_prob: f64,
    targets: Vec<TargetPayoffs>,
    lambda: f64,
}

fn resolve_strategy(args: &StrategyArgs) -> Result<StrategySetup, CliError> {
    if let Some(path) = &args.instance {
        let inst = load_instance(path)?;
        if inst.graph.num_attackers() != 1 {
            return Err(CliError::Usage(
                "instance mode requires a single attacker; use --x0/--tip for explicit setups"
                    .into(),
            ));
        }
        let base = solve_routine(&inst)?;
        let ids = args
            .u
            .clone()
            .unwrap_or_else(|| inst.graph.informants.clone());
        let members = InformantSet::from_ids(&inst, &ids)?;
        let index = inst.index()?;
        let view = greensec::tips::RecruitView::build(&inst, &index, members);
        let n = inst.num_targets();
        let tip_prob = args
            .w
            .unwrap_or_else(|| view.report_prob[0] * inst.graph.attackers[0].attack_prob);
        // Greedy response to a tip: the tipped target carries the only
        // positive gain, remaining resources fall back to low indices.
        let tip_strategies: Vec<CoverageVector> = (0..n)
            .map(|j| {
                let gains: Vec<f64> = (0..n)
                    .map(|i| {
                        greensec::tips::expected_gain(
                            &inst.targets[i],
                            usize::from(i == j),
                            base.attack[i],
                            0.0,
                        )
                    })
                    .collect();
                let mut x = vec![0.0; n];
                for i in greensec::tips::top_targets_by_gain(&gains, inst.resources as usize) {
                    x[i] = 1.0;
                }
                CoverageVector(x)
            })
            .collect();
        return Ok(StrategySetup {
            routine: base.coverage.0,
            tip_strategies,
            tip_prob,
            targets: inst.targets,
            lambda: args.lambda.unwrap_or(inst.lambda),
        });
    }

    let routine = args
        .x0
        .clone()
        .ok_or_else(|| CliError::Usage("--x0 is required without --instance".into()))?;
    let ra = args
        .ra
        .clone()
        .ok_or_else(|| CliError::Usage("--ra is required without --instance".into()))?;
    let pa = args
        .pa
        .clone()
        .ok_or_else(|| CliError::Usage("--pa is required without --instance".into()))?;
    let n = routine.len();
    if ra.len() != n || pa.len() != n {
        return Err(CliError::Usage(
            "--x0, --ra, --pa must have matching lengths".into(),
        ));
    }
    let mut tip_strategies = Vec::new();
    for spec in &args.tip {
        let entries: Result<Vec<f64>, _> = spec.split(',').map(str::trim).map(str::parse).collect();
        let entries =
            entries.map_err(|e| CliError::Usage(format!("bad --tip value '{spec}': {e}")))?;
        if entries.len() != n {
            return Err(CliError::Usage(format!(
                "--tip '{spec}' has {} entries, expected {n}",
                entries.len()
            )));
        }
        tip_strategies.push(CoverageVector(entries));
    }
    if tip_strategies.len() != n {
        return Err(CliError::Usage(format!(
            "need {n} --tip strategies, got {}",
            tip_strategies.len()
        )));
    }
    let targets = (0..n)
        .map(|i| TargetPayoffs::new(1.0, -1.0, ra[i], pa[i]))
        .collect();
    Ok(StrategySetup {
        routine,
        tip_strategies,
        tip_prob: args.w.unwrap_or(0.0),
        targets,
        lambda: args
            .lambda
            .ok_or_else(|| CliError::Usage("--lambda is required without --instance".into()))?,
    })
}

fn cmd_levelk(args: LevelArgs) -> Result<ExitCode, CliError> {
    let setup = resolve_strategy(&args.strategy)?;
    let trace = levelk::iterate_levels_single(
        &setup.routine,
        &setup.tip_strategies,
        setup.tip_prob,
        &setup.targets,
        setup.lambda,
        args.kappa_max,
        args.cycle_window,
    )?;
    let n = setup.routine.len();
    let mut header = vec!["level".to_string()];
    header.extend((0..n).map(|i| format!("q{}", i + 1)));
    header.push("residual".to_string());
    let mut table = CsvTable {
        name: "levelk".into(),
        header,
        rows: Vec::new(),
    };
    for (level, q) in trace.attack_seq.iter().enumerate() {
        let residual = if level == 0 {
            String::new()
        } else {
            cell(q.l1_distance(&trace.attack_seq[level - 1]))
        };
        let mut row = vec![level.to_string()];
        row.extend(q.iter().map(|&v| cell(v)));
        row.push(residual);
        table.push(row);
    }
    emit_table(&table, args.csv.as_ref())?;
    if trace.converged {
        eprintln!("converged: residual {}", trace.residual);
    } else if let Some((a, b)) = &trace.cycle {
        eprintln!(
            "cycle detected between ({}) and ({})",
            a.iter().map(|&v| cell(v)).collect::<Vec<_>>().join(", "),
            b.iter().map(|&v| cell(v)).collect::<Vec<_>>().join(", "),
        );
    } else {
        eprintln!("stopped at level cap; residual {}", trace.residual);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixedpoint(args: FixedPointArgs) -> Result<ExitCode, CliError> {
    let setup = resolve_strategy(&args.strategy)?;
    let outcome = levelk::solve_fixed_point(
        &setup.routine,
        |q| {
            levelk::marginal_strategy_single(
                &setup.routine,
                &setup.tip_strategies,
                setup.tip_prob,
                q,
            )
            .expect("validated dimensions")
        },
        &setup.targets,
        setup.lambda,
        args.damping,
        args.tol,
        args.max_iter,
    );
    println!(
        "q: [{}]",
        outcome
            .attack
            .iter()
            .map(|&v| cell(v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("residual: {}", outcome.residual);
    println!("iterations: {}", outcome.iterations);
    if outcome.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("did not reach tolerance {}", args.tol);
        Ok(ExitCode::from(2))
    }
}

fn cmd_bilevel(args: BilevelArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.instance)?;
    if inst.graph.num_attackers() != 1 {
        return Err(CliError::Usage(
            "bilevel optimization requires a single-attacker instance".into(),
        ));
    }
    let k_list = args
        .k_list
        .unwrap_or_else(|| vec![inst.recruit_budget as usize]);
    let r_list = args.r_list.unwrap_or_else(|| vec![inst.resources]);
    let mut table = CsvTable::new(
        "bilevel",
        &[
            "resources",
            "recruited",
            "tip_prob",
            "bilevel_value",
            "level0_pair_value",
            "marginal_total",
            "outer_iterations",
        ],
    );
    for &r in &r_list {
        for &k in &k_list {
            let (_, w) = qri::select_informants_by_w(&inst, k)?;
            let (pair_value, _, _) =
                bilevel::level0_pair_value(&inst.targets, inst.lambda, r, w, args.p)?;
            let solution = bilevel::outer_optimize(
                &inst.targets,
                inst.lambda,
                r,
                w,
                args.p,
                args.restarts,
                args.seed,
            )?;
            table.push(vec![
                r.to_string(),
                k.to_string(),
                cell(w),
                cell(solution.def_eu),
                cell(pair_value),
                cell(solution.marginal.iter().sum::<f64>()),
                solution.outer_iterations.to_string(),
            ]);
        }
    }
    emit_table(&table, args.csv.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_qri(args: QriArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.instance)?;
    let k_list = args
        .k_list
        .unwrap_or_else(|| vec![inst.recruit_budget as usize]);
    let r_list = args.r_list.unwrap_or_else(|| vec![inst.resources]);
    let mut table = CsvTable::new(
        "qri",
        &[
            "resources",
            "recruited",
            "tip_prob",
            "objective",
            "exact_objective",
            "default_total",
        ],
    );
    for &r in &r_list {
        for &k in &k_list {
            let w = match args.w {
                Some(w) => w,
                None => qri::select_informants_by_w(&inst, k)?.1,
            };
            let strategy = qri::solve_qri(&inst.targets, inst.lambda, r, w, args.segments)?;
            table.push(vec![
                r.to_string(),
                k.to_string(),
                cell(w),
                cell(strategy.objective),
                cell(strategy.exact_objective(&inst.targets, inst.lambda)),
                cell(strategy.default.iter().sum::<f64>()),
            ]);
        }
    }
    emit_table(&table, args.csv.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_tradeoff(args: TradeoffArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.instance)?;
    let (rows, best) =
        select::budget_tradeoff(&inst, args.budget, args.cost_resource, args.cost_informant)?;
    let mut table = CsvTable::new(
        "tradeoff",
        &["recruited", "resources", "value", "chosen", "best"],
    );
    for (i, row) in rows.iter().enumerate() {
        table.push(vec![
            row.recruit_budget.to_string(),
            row.resources.to_string(),
            cell(row.value),
            row.chosen.join("|"),
            (i == best).to_string(),
        ]);
    }
    emit_table(&table, args.csv.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, CliError> {
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let table = match args.name.as_str() {
        "selection" => experiments::selection_experiment(&SweepConfig {
            seeds,
            ..SweepConfig::default()
        })?,
        "truncation" => experiments::truncation_experiment(seeds.len() as u64, 6, 100)?,
        "sisi" => experiments::strong_intensity_experiment(&SweepConfig {
            seeds,
            num_targets: 6,
            ..SweepConfig::default()
        })?,
        "levelinf" => {
            experiments::fixed_point_experiment(&seeds, &[2, 4, 6], &[1, 2, 3, 4, 5, 6], 8)?
        }
        "qri" => experiments::qri_experiment(
            &seeds,
            &[1, 2, 3, 4, 5, 6],
            &[0, 1, 2, 3, 4, 5, 6],
            qri::DEFAULT_SEGMENTS,
        )?,
        "tradeoff" => experiments::tradeoff_experiment(
            seeds.first().copied().unwrap_or(0),
            &[
                1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0,
            ],
            3.0,
            1.0,
        )?,
        other => return Err(CliError::Usage(format!("unknown experiment '{other}'"))),
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let path = args.out_dir.join(format!("{}.csv", table.name));
    write_string(&path, &table.to_csv())?;
    println!("wrote {} rows to {}", table.rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}
