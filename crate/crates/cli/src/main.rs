use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use rmdp::document::{model_hash, number_or_inf};
use rmdp::generate::{generate, GeneratorConfig};
use rmdp::learn::{pac_pipeline, PacConfig};
use rmdp::solver::{memdp_best_stationary, memdp_evaluate, policy_evaluation, DEFAULT_POLICY_GUARD};
use rmdp::{
    parse_model_str, parse_policy_str, policy_iteration, solve_vi, Mode, Model, ModelDocument, ModelKind, Objective,
    ResultDocument, SolveOptions, ValueVector,
};

#[derive(Debug, Parser)]
#[command(name = "rmdp", version, about = "Solve and learn robust Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute robust, optimistic or nominal values of a model.
    Solve(SolveArgs),
    /// Write a random model document.
    Generate(GenerateArgs),
    /// Sample a hidden MDP, learn an interval model and solve it robustly.
    Learn(LearnArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveKind {
    ReachReward,
    Reachability,
    Discounted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Robust,
    Optimistic,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Vi,
    Pi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Mdp,
    Imdp,
    L1,
}

#[derive(Debug, Args)]
struct ObjectiveArgs {
    #[arg(long, value_enum)]
    objective: ObjectiveKind,
    /// Comma separated target states (reach objectives).
    #[arg(long, value_delimiter = ',')]
    target: Vec<String>,
    /// Discount factor in (0, 1) (discounted objective).
    #[arg(long)]
    discount: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long, value_enum, default_value = "robust")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "vi")]
    method: Method,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Evaluate this policy instead of optimizing.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    actions: usize,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    width: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Hidden model, kind mdp.
    #[arg(long)]
    truth: PathBuf,
    /// Samples per state-action pair.
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<rmdp::Error> for Failure {
    fn from(e: rmdp::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    parse_model_str(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn objective(model: &Model, args: &ObjectiveArgs) -> Result<Objective, Failure> {
    let reach = |kind: &str| -> Result<Vec<usize>, Failure> {
        if args.discount.is_some() {
            return Err(Failure::Usage(format!("--discount cannot be combined with --objective {kind}")));
        }
        if args.target.is_empty() {
            return Err(Failure::Usage(format!("--objective {kind} needs --target")));
        }
        Ok(model.state_set(&args.target)?)
    };
    let objective = match args.objective {
        ObjectiveKind::ReachReward => Objective::ReachReward { targets: reach("reach-reward")? },
        ObjectiveKind::Reachability => Objective::Reachability { targets: reach("reachability")? },
        ObjectiveKind::Discounted => {
            if !args.target.is_empty() {
                return Err(Failure::Usage("--target cannot be combined with --objective discounted".into()));
            }
            let gamma =
                args.discount.ok_or_else(|| Failure::Usage("--objective discounted needs --discount".into()))?;
            Objective::Discounted { gamma }
        }
    };
    objective.check(model.num_states())?;
    Ok(objective)
}

fn options(epsilon: f64, max_iter: usize) -> Result<SolveOptions, Failure> {
    let opts = SolveOptions { epsilon, max_iter };
    opts.check()?;
    Ok(opts)
}

fn mode(arg: ModeArg) -> Mode {
    match arg {
        ModeArg::Robust => Mode::Robust,
        ModeArg::Optimistic => Mode::Optimistic,
        ModeArg::Nominal => Mode::Nominal,
    }
}

/// Returns the serialized result and whether the computation converged.
fn solve(args: &SolveArgs) -> Result<(String, bool), Failure> {
    let model = load_model(&args.model)?;
    let objective = objective(&model, &args.objective)?;
    let opts = options(args.epsilon, args.max_iter)?;
    let mode = mode(args.mode);
    let method = match args.method {
        Method::Vi => "vi",
        Method::Pi => "pi",
    };
    let policy =
        args.policy.as_deref().map(|p| parse_policy_str(&model, &read(p)?).map_err(Failure::from)).transpose()?;
    if policy.is_some() && args.method == Method::Pi {
        return Err(Failure::Usage("--policy evaluates a fixed policy and cannot be combined with --method pi".into()));
    }

    let doc = if model.kind() == ModelKind::Memdp {
        if mode != Mode::Robust {
            return Err(Failure::Usage("memdp models are solved in robust mode only".into()));
        }
        if args.method == Method::Pi {
            return Err(Failure::Usage("memdp models do not support --method pi".into()));
        }
        match &policy {
            Some(policy) => {
                let eval = memdp_evaluate(&model, policy, &objective)?;
                let values =
                    ValueVector { values: eval.worst_per_state(), residual: 0.0, iterations: 0, converged: true };
                let mut doc = ResultDocument::new(&model, &values, policy, mode, "exact", &objective);
                doc.metadata.insert("worst_environment".into(), Value::from(eval.worst_environment));
                doc
            }
            None => {
                let result = memdp_best_stationary(&model, &objective, DEFAULT_POLICY_GUARD)?;
                ResultDocument::from_solve(&model, &result, "enumerate")
            }
        }
    } else if let Some(policy) = &policy {
        let values = policy_evaluation(&model, policy, &objective, mode, &opts)?;
        ResultDocument::new(&model, &values, policy, mode, "evaluate", &objective)
    } else {
        let result = match args.method {
            Method::Vi => solve_vi(&model, &objective, mode, &opts)?,
            Method::Pi => policy_iteration(&model, &objective, mode, &opts)?,
        };
        ResultDocument::from_solve(&model, &result, method)
    };
    Ok((doc.to_json(), doc.converged))
}

fn generate_cmd(args: &GenerateArgs) -> Result<String, Failure> {
    let kind = match args.kind {
        KindArg::Mdp => ModelKind::Mdp,
        KindArg::Imdp => ModelKind::Imdp,
        KindArg::L1 => ModelKind::L1,
    };
    let cfg = GeneratorConfig {
        states: args.states,
        actions: args.actions,
        kind,
        density: args.density,
        seed: args.seed,
        width: args.width,
    };
    Ok(ModelDocument::from_model(&generate(&cfg)?).to_json())
}

fn learn(args: &LearnArgs) -> Result<(String, bool), Failure> {
    let truth = load_model(&args.truth)?;
    if truth.kind() != ModelKind::Mdp {
        return Err(Failure::Usage(format!("--truth must be an mdp document, got {}", truth.kind())));
    }
    let objective = objective(&truth, &args.objective)?;
    let opts = options(args.epsilon, args.max_iter)?;
    let cfg = PacConfig::new(args.delta, args.samples)?;
    let outcome = pac_pipeline(&truth, &cfg, &objective, args.seed, &opts)?;
    let learned = &outcome.learned.model;

    let mut result = ResultDocument::from_solve(learned, &outcome.robust, "vi");
    let mut meta = Map::new();
    meta.insert("delta".into(), number_or_inf(cfg.delta));
    meta.insert("delta_prime".into(), number_or_inf(outcome.learned.delta_prime));
    meta.insert("samples_per_pair".into(), Value::from(cfg.n_per_sa));
    meta.insert("seed".into(), Value::from(args.seed));
    meta.insert("transitions".into(), Value::from(outcome.learned.transitions));
    meta.insert("truth_hash".into(), Value::from(model_hash(&truth)));
    result.metadata.extend(meta);

    let converged = result.converged;
    let out = json!({
        "learned_model": ModelDocument::from_model(learned),
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&out).expect("learn output serializes");
    text.push('\n');
    Ok((text, converged))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RMDP_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("RMDP_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(args) => {
            let (text, converged) = solve(args)?;
            emit(&text, args.output.as_deref())?;
            Ok(converged)
        }
        Command::Generate(args) => {
            let text = generate_cmd(args)?;
            emit(&text, args.output.as_deref())?;
            Ok(true)
        }
        Command::Learn(args) => {
            let (text, converged) = learn(args)?;
            emit(&text, args.output.as_deref())?;
            Ok(converged)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: iteration limit reached before convergence");
            ExitCode::from(4)
        }
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
