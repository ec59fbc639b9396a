use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::manifest::{InputFingerprint, RunManifest};
use super::report::{cv_csv, metrics_csv, metrics_markdown, trace_csv, tuning_csv};
use super::{CliError, Command, DataSource, RunConfig};
use crate::dataset::{
    impute_missing, load_csv, make_windows, split, table_to_csv_string, DatasetError, RawTable, WindowedSeries,
};
use crate::evaluation::{compare_models, cross_validate, fit_pipeline, run_stages, EvalError};
use crate::metrics::{bundle, PredictionPair};
use crate::rng::derive_seed;
use crate::synthgen::{inject_missing, simulate_charge_cycles, SynthError};

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        if e.is_divergence() {
            CliError::Diverged(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    files: Vec<PathBuf>,
    sub_seeds: BTreeMap<String, u64>,
    input: Option<InputFingerprint>,
    timestamp: Option<String>,
    summary: Vec<String>,
}

fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

impl Ctx {
    fn seed(&mut self, label: &str) -> u64 {
        let s = derive_seed(self.cfg.seed, label);
        self.sub_seeds.insert(label.to_string(), s);
        s
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    /// The raw table, before imputation.
    fn raw_table(&mut self) -> Result<RawTable, CliError> {
        let table = match self.cfg.data.clone() {
            DataSource::Synth { simulation, missing_fraction } => {
                let mut sim = simulation;
                sim.params.seed = self.seed("synth");
                if let DataSource::Synth { simulation, .. } = &mut self.cfg.data {
                    simulation.params.seed = sim.params.seed;
                }
                let out = simulate_charge_cycles(&sim)?;
                if !out.truncated_cycles.is_empty() {
                    self.summary.push(format!("warning: cycles {:?} hit step_cap before full charge", out.truncated_cycles));
                }
                if missing_fraction > 0.0 {
                    let s = self.seed("missing");
                    inject_missing(&out.table, missing_fraction, s)?
                } else {
                    out.table
                }
            }
            DataSource::Csv { path } => load_csv(&path)?,
        };
        self.input = Some(InputFingerprint::of(&table));
        Ok(table)
    }

    fn series(&mut self) -> Result<WindowedSeries, CliError> {
        let raw = self.raw_table()?;
        let p = self.cfg.preprocessing.clone();
        let table = impute_missing(&raw, p.impute)?;
        Ok(make_windows(&table, p.window_length, p.horizon, &p.features)?)
    }

    fn split_series(&mut self) -> Result<(WindowedSeries, WindowedSeries), CliError> {
        let series = self.series()?;
        let split_seed = self.seed("split");
        let spec = self.cfg.preprocessing.split.spec(split_seed);
        Ok(split(&series, &spec)?)
    }
}

fn cmd_synth(ctx: &mut Ctx) -> Result<(), CliError> {
    if !matches!(ctx.cfg.data, DataSource::Synth { .. }) {
        return Err(CliError::Config("synth needs `data.source` = \"synth\"".into()));
    }
    let table = ctx.raw_table()?;
    ctx.write("dataset.csv", &table_to_csv_string(&table))?;
    ctx.summary.push(format!("wrote {} rows over {} cycles", table.len(), table.cycles().len()));
    Ok(())
}

fn cmd_train(ctx: &mut Ctx, name: &str) -> Result<(), CliError> {
    let spec = ctx.cfg.model(name)?.clone();
    let (train, test) = ctx.split_series()?;
    let seed = ctx.seed(&format!("model:{name}"));
    let fallback = ctx.cfg.preprocessing.model_defaults();
    let pipeline = fit_pipeline(&spec, &fallback, &train, seed)?;
    let weights = serde_json::to_string_pretty(&pipeline).map_err(|e| CliError::Input(e.to_string()))?;
    let stem = slug(name);
    ctx.write(&format!("{stem}.weights.json"), &(weights + "\n"))?;
    if let Some(trace) = &pipeline.trace {
        ctx.write(&format!("{stem}.trace.csv"), &trace_csv(trace))?;
    }
    let pred = pipeline.predict(&test).map_err(CliError::from)?;
    let pair = PredictionPair::new(test.targets(), pred).map_err(|e| CliError::Input(e.to_string()))?;
    let m = bundle(&pair, ctx.cfg.evaluation.mape_zero_policy).map_err(|e| CliError::Input(e.to_string()))?;
    ctx.summary.push(format!("{name}: test rmse {} mae {}", m.rmse, m.mae));
    Ok(())
}

fn cmd_compare(ctx: &mut Ctx) -> Result<(), CliError> {
    if ctx.cfg.models.is_empty() {
        return Err(CliError::Config("`models` must list at least one model".into()));
    }
    let (train, test) = ctx.split_series()?;
    let names: Vec<String> = ctx.cfg.models.iter().map(|m| m.name.clone()).collect();
    for n in &names {
        ctx.seed(&format!("model:{n}"));
    }
    let fallback = ctx.cfg.preprocessing.model_defaults();
    let mut report = compare_models(&ctx.cfg.models, &fallback, &train, &test, ctx.cfg.seed, ctx.cfg.evaluation.mape_zero_policy)?;
    report.timestamp = ctx.timestamp.clone();
    ctx.write("report.md", &metrics_markdown("Model comparison", &report, ctx.timestamp.as_deref()))?;
    ctx.write("metrics.csv", &metrics_csv(&report))?;
    for r in &report.rows {
        if let Some(e) = &r.error {
            ctx.summary.push(format!("{} failed: {e}", r.name));
        }
    }
    if report.all_failed() {
        return Err(CliError::AllFailed("every model failed".into()));
    }
    Ok(())
}

fn cmd_cv(ctx: &mut Ctx, name: &str) -> Result<(), CliError> {
    let spec = ctx.cfg.model(name)?.clone();
    let k = ctx.cfg.evaluation.k;
    if k < 2 {
        return Err(CliError::Config(format!("invalid parameter `k`: needs at least 2 folds, got {k}")));
    }
    let series = ctx.series()?;
    let model_seed = ctx.seed(&format!("model:{name}"));
    ctx.sub_seeds.insert(format!("model:{name}/folds"), derive_seed(model_seed, "folds"));
    let fallback = ctx.cfg.preprocessing.model_defaults();
    let report = cross_validate(&spec, &fallback, &series, k, ctx.cfg.seed, ctx.cfg.evaluation.mape_zero_policy)?;
    ctx.write("cv_report.csv", &cv_csv(&report))?;
    ctx.summary.push(format!("{name}: mean rmse {} over {k} folds", report.mean.rmse));
    Ok(())
}

fn cmd_stages(ctx: &mut Ctx) -> Result<(), CliError> {
    let plan = ctx
        .cfg
        .evaluation
        .stages
        .clone()
        .ok_or_else(|| CliError::Config("`evaluation.stages` is required for the stages command".into()))?;
    let (train, test) = ctx.split_series()?;
    ctx.seed("stages");
    let fallback = ctx.cfg.preprocessing.model_defaults();
    let mut out = run_stages(&plan, &fallback, &train, &test, ctx.cfg.seed, ctx.cfg.evaluation.mape_zero_policy)?;
    out.report.timestamp = ctx.timestamp.clone();
    ctx.write("stages_report.md", &metrics_markdown("Staged optimization", &out.report, ctx.timestamp.as_deref()))?;
    ctx.write("stages_report.csv", &metrics_csv(&out.report))?;
    ctx.write("stages_tuning.csv", &tuning_csv(&out.stages))?;
    for r in &out.report.rows {
        match (&r.metrics, &r.error) {
            (Some(m), _) => ctx.summary.push(format!("{}: rmse {}", r.name, m.rmse)),
            (None, e) => ctx.summary.push(format!("{} failed: {}", r.name, e.as_deref().unwrap_or(""))),
        }
    }
    if out.report.all_failed() {
        return Err(CliError::AllFailed("every stage failed".into()));
    }
    Ok(())
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

pub fn run(cmd: &Command) -> Result<CommandOutcome, CliError> {
    let start = Instant::now();
    let common = cmd.common();
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let out = common.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
    let timestamp = (!common.no_timestamp).then(|| chrono::Utc::now().to_rfc3339());
    let mut ctx = Ctx {
        cfg,
        out: out.clone(),
        files: Vec::new(),
        sub_seeds: BTreeMap::new(),
        input: None,
        timestamp,
        summary: Vec::new(),
    };
    let result = match cmd {
        Command::Synth(_) => cmd_synth(&mut ctx),
        Command::Train { model, .. } => cmd_train(&mut ctx, model),
        Command::Compare(_) => cmd_compare(&mut ctx),
        Command::Cv { model, .. } => cmd_cv(&mut ctx, model),
        Command::Stages(_) => cmd_stages(&mut ctx),
    };
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ctx.cfg.clone(),
        seed: ctx.cfg.seed,
        sub_seeds: ctx.sub_seeds.clone(),
        input: ctx.input.clone(),
        files: ctx.files.iter().map(|p| relative(&out, p)).collect(),
        exit_status: result.as_ref().err().map_or(0, CliError::exit_code),
        error: result.as_ref().err().map(|e| e.to_string()),
        duration_s: start.elapsed().as_secs_f64(),
        timestamp: ctx.timestamp.clone(),
    };
    manifest.write(&out)?;
    result?;
    let mut files = ctx.files;
    files.push(out.join("manifest.json"));
    Ok(CommandOutcome { files, summary: ctx.summary })
}
