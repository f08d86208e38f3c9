//! Command-line surface.
//!
//! Configuration is layered: command defaults, then an optional flat JSON
//! file (`--config`), then flags. Every output starts with `#` comment lines
//! naming the command and echoing the resolved configuration as JSON; that
//! JSON is itself a valid `--config` file and reproduces the output.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::ControlTrace;
use crate::csv::{self, float};
use crate::harness::{
    default_alpha_grid, gain_grid, generate_dataset, grid_search_alpha, run_control_task,
    run_control_traces, run_prediction_sweep, ControlSweepSpec, ControlTask, DataGenSpec, IcBox,
    PredictionSweepSpec, SweepResult, NOISE_LEVELS, TRACE_GAINS,
};
use crate::ngrc::FeatureConfig;
use crate::plant::{HenonParams, PlantState};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ngrc-control", version, about = "Learn and control the Hénon map with an NG-RC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate data, pick α, train and write the model.
    Train(RunArgs),
    /// Prediction RMSE against training size and noise.
    PredictSweep(RunArgs),
    /// Closed-loop traces for one task.
    ControlTrace(RunArgs),
    /// Control RMSE against gain under plant noise.
    SweepK(RunArgs),
    /// Control RMSE against gain under plant noise and weight errors.
    SweepKModelerror(RunArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Self::Train(_) => CommandKind::Train,
            Self::PredictSweep(_) => CommandKind::PredictSweep,
            Self::ControlTrace(_) => CommandKind::ControlTrace,
            Self::SweepK(_) => CommandKind::SweepK,
            Self::SweepKModelerror(_) => CommandKind::SweepKModelerror,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Self::Train(a)
            | Self::PredictSweep(a)
            | Self::ControlTrace(a)
            | Self::SweepK(a)
            | Self::SweepKModelerror(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Train,
    PredictSweep,
    ControlTrace,
    SweepK,
    SweepKModelerror,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::PredictSweep => "predict-sweep",
            Self::ControlTrace => "control-trace",
            Self::SweepK => "sweep-k",
            Self::SweepKModelerror => "sweep-k-modelerror",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => Self::Train,
            "predict-sweep" => Self::PredictSweep,
            "control-trace" => Self::ControlTrace,
            "sweep-k" => Self::SweepK,
            "sweep-k-modelerror" => Self::SweepKModelerror,
            other => return Err(Error::Config(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
#[command(allow_negative_numbers = true)]
pub struct RunArgs {
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cap on concurrent trials.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Where `train` writes its text report (always also printed).
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub sigma_u: Option<f64>,
    /// Noise level(s), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma_d: Option<Vec<f64>>,
    /// Weight perturbation; `sweep-k-modelerror` defaults to σ_dW = σ_d.
    #[arg(long)]
    pub sigma_dw: Option<f64>,
    /// Closed-loop gain(s), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<f64>>,
    /// Training size(s), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub m_train: Option<Vec<usize>>,
    #[arg(long)]
    pub m_test: Option<usize>,
    #[arg(long)]
    pub n_iters: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Ridge grid, comma separated, values in [0, 1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub task: Option<ControlTask>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub sigma_u: f64,
    pub sigma_d: Vec<f64>,
    /// `None` means zero, or σ_d for `sweep-k-modelerror`.
    pub sigma_dw: Option<f64>,
    pub k: Vec<f64>,
    pub m_train: Vec<usize>,
    pub m_test: usize,
    pub n_iters: usize,
    pub trials: usize,
    pub alpha_grid: Vec<f64>,
    pub task: ControlTask,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub burn_in: usize,
    pub ic_box: IcBox,
    pub max_retries: usize,
}

impl RunConfig {
    pub fn defaults(cmd: CommandKind) -> Self {
        let data = DataGenSpec::default();
        let params = HenonParams::default();
        let mut c = Self {
            seed: 1,
            a: params.a,
            b: params.b,
            g: params.g,
            sigma_u: data.sigma_u,
            sigma_d: vec![0.0],
            sigma_dw: None,
            k: TRACE_GAINS.to_vec(),
            m_train: vec![data.m_train],
            m_test: data.m_test,
            n_iters: 200,
            trials: 100,
            alpha_grid: default_alpha_grid(),
            task: ControlTask::Pu1ToPu2,
            x0: None,
            y0: None,
            burn_in: data.burn_in,
            ic_box: data.ic_box,
            max_retries: data.max_retries,
        };
        match cmd {
            CommandKind::Train => {}
            CommandKind::ControlTrace => c.n_iters = 100,
            CommandKind::PredictSweep => {
                c.sigma_d = NOISE_LEVELS.to_vec();
                c.m_train = (1..=20).collect();
            }
            CommandKind::SweepK | CommandKind::SweepKModelerror => {
                c.sigma_d = NOISE_LEVELS.to_vec();
                c.k = gain_grid();
            }
        }
        c
    }

    /// Defaults, then `file` (a flat JSON object), then flags.
    pub fn resolve(cmd: CommandKind, file: Option<&str>, args: &RunArgs) -> Result<Self> {
        let mut cfg = Self::defaults(cmd);
        if let Some(text) = file {
            cfg = cfg.overlay_json(text)?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &args.$f { cfg.$f = v.clone(); } )* };
        }
        set!(seed, a, b, g, sigma_u, sigma_d, k, m_train, m_test, n_iters, trials, alpha_grid, task);
        if args.sigma_dw.is_some() {
            cfg.sigma_dw = args.sigma_dw;
        }
        if args.x0.is_some() {
            cfg.x0 = args.x0;
        }
        if args.y0.is_some() {
            cfg.y0 = args.y0;
        }
        cfg.validate(cmd)?;
        Ok(cfg)
    }

    fn overlay_json(self, text: &str) -> Result<Self> {
        let overlay: Value = serde_json::from_str(text)?;
        let Value::Object(overlay) = overlay else {
            return Err(Error::Config("configuration file must hold a JSON object".into()));
        };
        let Value::Object(mut base) = serde_json::to_value(&self)? else {
            unreachable!("RunConfig serializes to an object")
        };
        for (k, v) in overlay {
            if !base.contains_key(&k) {
                return Err(Error::Config(format!("unknown configuration key {k:?}")));
            }
            base.insert(k, v);
        }
        Ok(serde_json::from_value(Value::Object(base))?)
    }

    pub fn validate(&self, cmd: CommandKind) -> Result<()> {
        if self.sigma_d.is_empty() {
            return Err(Error::Config("at least one noise level is required".into()));
        }
        if matches!(cmd, CommandKind::Train | CommandKind::ControlTrace) && self.sigma_d.len() != 1 {
            return Err(Error::Config(format!(
                "{} takes a single --sigma-d value",
                cmd.name()
            )));
        }
        if self.k.is_empty() {
            return Err(Error::Config("at least one gain is required".into()));
        }
        if self.m_train.is_empty() || self.m_train.contains(&0) {
            return Err(Error::Config("training sizes must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.x0.is_some() != self.y0.is_some() {
            return Err(Error::Config("--x0 and --y0 must be given together".into()));
        }
        self.data_spec(self.m_train[0], self.sigma_d[0]).validate()
    }

    pub fn params(&self) -> HenonParams {
        HenonParams {
            a: self.a,
            b: self.b,
            g: self.g,
        }
    }

    pub fn data_spec(&self, m_train: usize, sigma_d: f64) -> DataGenSpec {
        DataGenSpec {
            m_train,
            m_test: self.m_test,
            sigma_u: self.sigma_u,
            sigma_d,
            burn_in: self.burn_in,
            ic_box: self.ic_box,
            max_retries: self.max_retries,
        }
    }

    /// `#` header lines for an output of `cmd`.
    pub fn header(&self, cmd: CommandKind) -> String {
        let json = serde_json::to_string(self).expect("RunConfig serializes");
        format!("# ngrc-control {}\n# config {json}\n", cmd.name())
    }

    /// Recover the command and configuration from an output's header.
    pub fn from_header(text: &str) -> Result<(CommandKind, Self)> {
        let mut cmd = None;
        let mut cfg = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("# ngrc-control ") {
                cmd = Some(CommandKind::parse(rest.trim())?);
            } else if let Some(rest) = line.strip_prefix("# config ") {
                cfg = Some(serde_json::from_str(rest)?);
            }
        }
        match (cmd, cfg) {
            (Some(c), Some(f)) => Ok((c, f)),
            _ => Err(Error::Config("output header lacks the command or config line".into())),
        }
    }
}

/// One output file. `suffix` distinguishes files of a multi-file command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: Option<String>,
    pub contents: String,
}

/// Run `cmd` and return its outputs; the first artifact of `train` is the
/// model JSON, the second the report.
pub fn execute(cmd: CommandKind, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match cmd {
        CommandKind::Train => cmd_train(cfg),
        CommandKind::PredictSweep => {
            let spec = PredictionSweepSpec {
                m_train_grid: cfg.m_train.clone(),
                noise_levels: cfg.sigma_d.clone(),
                trials: cfg.trials,
                data: cfg.data_spec(cfg.m_train[0], 0.0),
                alpha_grid: cfg.alpha_grid.clone(),
                params: cfg.params(),
                features: FeatureConfig::henon(),
            };
            let res = run_prediction_sweep(&spec, cfg.seed)?;
            Ok(vec![sweep_artifact(cmd, cfg, &res)])
        }
        CommandKind::ControlTrace => cmd_control_trace(cfg),
        CommandKind::SweepK | CommandKind::SweepKModelerror => {
            let mut all = SweepResult::default();
            for &sigma_d in &cfg.sigma_d {
                let sigma_dw = match (cmd, cfg.sigma_dw) {
                    (_, Some(v)) => v,
                    (CommandKind::SweepKModelerror, None) => sigma_d,
                    _ => 0.0,
                };
                let spec = ControlSweepSpec {
                    label: cmd.name().into(),
                    task: cfg.task,
                    gains: cfg.k.clone(),
                    sigma_d,
                    sigma_dw,
                    n_iters: cfg.n_iters,
                    trials: cfg.trials,
                    window: (50, 150),
                    data: cfg.data_spec(cfg.m_train[0], 0.0),
                    alpha_grid: cfg.alpha_grid.clone(),
                    params: cfg.params(),
                    features: FeatureConfig::henon(),
                };
                all.cells.extend(run_control_task(&spec, cfg.seed)?.cells);
            }
            Ok(vec![sweep_artifact(cmd, cfg, &all)])
        }
    }
}

fn sweep_artifact(cmd: CommandKind, cfg: &RunConfig, res: &SweepResult) -> Artifact {
    let mut contents = cfg.header(cmd);
    contents.push_str(&res.to_csv());
    Artifact {
        suffix: None,
        contents,
    }
}

fn cmd_train(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let spec = cfg.data_spec(cfg.m_train[0], cfg.sigma_d[0]);
    let data = generate_dataset(&spec, &cfg.params(), &mut rng::child(cfg.seed, "train", &[]))?;
    let choice = grid_search_alpha(&data, &cfg.alpha_grid, &FeatureConfig::henon())?;
    let model = choice.model;
    let mut report = cfg.header(CommandKind::Train);
    report.push_str(&format!("alpha,{}\n", float(choice.alpha)));
    report.push_str(&format!("test_rmse,{}\n", float(choice.rmse)));
    if let Some(info) = model.solve_info() {
        report.push_str(&format!("solve,{:?}\n", info.method));
        report.push_str(&format!("condition_number,{}\n", float(info.condition_number)));
    }
    report.push_str("feature,weight\n");
    for (name, w) in weight_names().iter().zip(model.weight_row(0)) {
        report.push_str(&format!("{name},{}\n", float(w)));
    }
    let mut json = model.to_json()?;
    json.push('\n');
    Ok(vec![
        Artifact {
            suffix: None,
            contents: json,
        },
        Artifact {
            suffix: Some("report".into()),
            contents: report,
        },
    ])
}

fn weight_names() -> [&'static str; 7] {
    ["u", "c", "x", "y", "x^2", "xy", "y^2"]
}

fn cmd_control_trace(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let s0 = match (cfg.x0, cfg.y0) {
        (Some(x), Some(y)) => Some(PlantState::new(x, y)),
        _ => None,
    };
    let (_, traces) = run_control_traces(
        cfg.task,
        &cfg.k,
        cfg.sigma_d[0],
        cfg.sigma_dw.unwrap_or(0.0),
        cfg.n_iters,
        s0,
        &cfg.data_spec(cfg.m_train[0], 0.0),
        &cfg.alpha_grid,
        &cfg.params(),
        cfg.seed,
    )?;
    let single = traces.len() == 1;
    Ok(traces
        .iter()
        .map(|t| trace_artifact(cfg, t, single))
        .collect())
}

fn trace_artifact(cfg: &RunConfig, trace: &ControlTrace, single: bool) -> Artifact {
    let mut contents = cfg.header(CommandKind::ControlTrace);
    contents.push_str(&format!(
        "# k {} escaped {}\n",
        float(trace.meta.gain),
        trace.escaped
    ));
    csv::write_trace(&mut contents, trace);
    Artifact {
        suffix: (!single).then(|| format!("k{}", trace.meta.gain)),
        contents,
    }
}

/// `out` with `_suffix` inserted before the extension.
pub fn suffixed_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    out.with_file_name(name)
}

/// Parse flags, run, write outputs.
pub fn run(cli: Cli) -> Result<()> {
    let cmd = cli.command.kind();
    let args = cli.command.args();
    let file = args
        .config
        .as_ref()
        .map(std::fs::read_to_string)
        .transpose()?;
    let cfg = RunConfig::resolve(cmd, file.as_deref(), args)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = args.threads {
            b = b.num_threads(n.max(1));
        }
        b.build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
    };
    let artifacts = pool.install(|| execute(cmd, &cfg))?;
    write_artifacts(cmd, args, &artifacts)
}

fn write_artifacts(cmd: CommandKind, args: &RunArgs, artifacts: &[Artifact]) -> Result<()> {
    use std::io::Write;
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    for art in artifacts {
        let is_report = art.suffix.as_deref() == Some("report");
        if cmd == CommandKind::Train && is_report {
            stdout.write_all(art.contents.as_bytes())?;
            if let Some(p) = &args.report {
                std::fs::write(p, &art.contents)?;
            }
            continue;
        }
        match (&args.out, &art.suffix) {
            (Some(out), None) => std::fs::write(out, &art.contents)?,
            (Some(out), Some(s)) => std::fs::write(suffixed_path(out, s), &art.contents)?,
            (None, _) => stdout.write_all(art.contents.as_bytes())?,
        }
    }
    Ok(())
}
