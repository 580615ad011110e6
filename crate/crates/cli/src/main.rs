//! `qest`: bounds, classification, imaging, multiphase and simulation runs from
//! the command line or a JSON scenario file.

mod config;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_sweep, LambdaSpec, ScenarioConfig, Task, WeightSpec};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical { op: String, message: String },
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical { op, message } => write!(f, "numerical failure in {op}: {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qest", version, about = "Multiparameter quantum Cramér-Rao bounds and related scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON scenario file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV files and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to QEST_THREADS).
    #[arg(long, global = true, env = "QEST_THREADS")]
    threads: Option<usize>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VAL", global = true)]
    tol_override: Vec<String>,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Model id, e.g. `multiphase:d=2,N=2` or `two-source:sigma=1`.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated parameter vector.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Sweep of one parameter: NAME:FROM:TO:STEPS[:log].
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SLD, RLD and Holevo bounds with the upper-bound chain.
    Bounds {
        #[command(flatten)]
        model: ModelArgs,
        /// `identity` or a JSON matrix such as `[[1,0],[0,2]]`.
        #[arg(long)]
        weight: Option<String>,
        /// Skip the Holevo program.
        #[arg(long)]
        no_holevo: bool,
    },
    /// Four-way model classification at sample points.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        /// Extra sample points, `a,b;c,d;...`.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Quantum and classical information of point-source scenes.
    Imaging {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Optimal multiphase probes against the closed form.
    Multiphase {
        /// Comma-separated numbers of phases.
        #[arg(long)]
        d: Option<String>,
        /// Comma-separated photon numbers.
        #[arg(long)]
        photons: Option<String>,
    },
    /// Maximum-likelihood Monte-Carlo at one parameter point.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// `random:K` or `computational`.
        #[arg(long)]
        povm: Option<String>,
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Self-check of the semidefinite solver.
    SdpCheck,
    /// Every task listed in the `--config` file.
    Run,
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Validation(format!("--{flag}: cannot parse `{s}`"))))
        .collect()
}

fn apply_model(cfg: &mut ScenarioConfig, m: ModelArgs) -> Result<(), CliError> {
    if let Some(id) = m.model {
        cfg.model = Some(id);
    }
    if m.lambda.is_some() && m.sweep.is_some() {
        return Err(CliError::Validation("--lambda and --sweep are mutually exclusive".into()));
    }
    if let Some(l) = m.lambda {
        cfg.lambda = Some(LambdaSpec::Point(parse_list("lambda", &l)?));
    }
    if let Some(s) = m.sweep {
        cfg.lambda = Some(LambdaSpec::Sweep(parse_sweep(&s)?));
    }
    Ok(())
}

fn build_config(cli: Cli) -> Result<(ScenarioConfig, bool), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::empty(Task::Bounds),
    };
    let mut sdp_check = false;
    let task = match cli.command {
        Command::Run => {
            if cli.common.config.is_none() {
                return Err(CliError::Validation("run: --config is required".into()));
            }
            None
        }
        Command::SdpCheck => {
            sdp_check = true;
            None
        }
        Command::Bounds { model, weight, no_holevo } => {
            apply_model(&mut cfg, model)?;
            if let Some(w) = weight {
                cfg.weight = Some(match w.trim() {
                    "identity" => WeightSpec::Named("identity".into()),
                    other => WeightSpec::Matrix(
                        serde_json::from_str(other).map_err(|e| CliError::Validation(format!("--weight: {e}")))?,
                    ),
                });
            }
            if no_holevo {
                cfg.holevo = false;
            }
            Some(Task::Bounds)
        }
        Command::Classify { model, points } => {
            apply_model(&mut cfg, model)?;
            if let Some(p) = points {
                cfg.points = p.split(';').filter(|s| !s.trim().is_empty()).map(|s| parse_list("points", s)).collect::<Result<_, _>>()?;
            }
            Some(Task::Classify)
        }
        Command::Imaging { model } => {
            apply_model(&mut cfg, model)?;
            if cfg.model.is_none() {
                cfg.model = Some("two-source:sigma=1".into());
            }
            Some(Task::Imaging)
        }
        Command::Multiphase { d, photons } => {
            if let Some(d) = d {
                cfg.multiphase.d = parse_list("d", &d)?;
            }
            if let Some(n) = photons {
                cfg.multiphase.photons = parse_list("photons", &n)?;
            }
            Some(Task::Multiphase)
        }
        Command::Simulate { model, shots, repetitions, povm, bootstrap } => {
            apply_model(&mut cfg, model)?;
            if let Some(v) = shots {
                cfg.simulate.shots = v;
            }
            if let Some(v) = repetitions {
                cfg.simulate.repetitions = v;
            }
            if let Some(v) = povm {
                cfg.simulate.povm = v;
            }
            if let Some(v) = bootstrap {
                cfg.simulate.bootstrap = v;
            }
            Some(Task::Simulate)
        }
    };
    if let Some(t) = task {
        cfg.tasks = vec![t];
    }
    if let Some(out) = cli.common.out {
        cfg.output = Some(out);
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    for kv in &cli.common.tol_override {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--tol-override: expected KEY=VAL, got `{kv}`")))?;
        cfg.tolerances.insert(k.trim().to_string(), serde_json::Value::String(v.trim().to_string()));
    }
    if !sdp_check {
        cfg.validate()?;
    } else {
        cfg.tolerances()?;
    }
    Ok((cfg, sdp_check))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = cli.common.threads;
    let (cfg, sdp_check) = build_config(cli)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads: must be at least 1".into()));
        }
        // a second initialization only happens in tests that reuse the process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let tol = cfg.tolerances()?;
    let outputs = if sdp_check {
        vec![tasks::sdp_check(&cfg, &tol)?]
    } else {
        cfg.tasks
            .iter()
            .map(|t| match t {
                Task::Bounds => tasks::bounds(&cfg, &tol),
                Task::Classify => tasks::classify_task(&cfg, &tol),
                Task::Imaging => tasks::imaging(&cfg, &tol),
                Task::Multiphase => tasks::multiphase(&cfg, &tol),
                Task::Simulate => tasks::simulate(&cfg, &tol),
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    match &cfg.output {
        Some(dir) => {
            let tables: Vec<_> = outputs.iter().flat_map(|o| o.tables.iter().cloned()).collect();
            let summaries: Vec<_> = outputs.iter().flat_map(|o| o.summaries.iter().cloned()).collect();
            output::write_outputs(dir, &cfg, &tables, &summaries)?;
            println!("{}", dir.join("manifest.json").display());
        }
        None => {
            for o in &outputs {
                print!("{}", o.stdout);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qest: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
