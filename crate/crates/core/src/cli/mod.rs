//! The `fibinet` command surface: `train`, `eval`, `gradcheck`, `ablate` and
//! `synth`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{count_columns, generate_synthetic, load_tsv, split_head_tail, split_train_test, write_tsv, Dataset, FieldSchema};
use crate::error::{Error, Result};
use crate::model::{read_checkpoint, write_checkpoint};
use crate::train::{evaluate, grad_check, grad_check_sweep, run_ablation, train, write_ablation_csv, write_metric_csv, Evaluation};

pub use config::{apply_override, DataConfig, OutputConfig, RunConfig, SchemaConfig, SchemaPreset, SplitKind, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fibinet", version, about = "FiBiNET click-through-rate model")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; defaults apply to anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config field, e.g. `--set model.embedding_dim=8`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Top-level seed; replaces the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train, then write the best checkpoint and the metric log.
    Train,
    /// Score a checkpoint on a labeled file; prints `auc=<v> logloss=<v>`.
    Eval {
        /// Defaults to `output.checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to `data.test`, then `data.train`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients per parameter block.
    Gradcheck {
        /// Check every field type × combination code × mode × ablation.
        #[arg(long)]
        sweep: bool,
    },
    /// Train BASE, NO-SE, NO-BI, FM and FNN and write their test metrics as CSV.
    Ablate,
    /// Generate planted-interaction data: train.tsv, test.tsv, synth.json.
    Synth {
        /// Defaults to `output.synth_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::SchemaMismatch(_) | Error::Checkpoint(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = RunConfig::load(g.config.as_deref(), &g.overrides, g.seed)?;
    match cli.command {
        Command::Train => cmd_train(&cfg),
        Command::Eval { checkpoint, data } => cmd_eval(&cfg, checkpoint, data),
        Command::Gradcheck { sweep } => cmd_gradcheck(&cfg, sweep),
        Command::Ablate => cmd_ablate(&cfg),
        Command::Synth { out } => cmd_synth(&cfg, out),
    }
}

fn require_file(path: Option<&PathBuf>, field: &str) -> Result<PathBuf> {
    let path = path.ok_or_else(|| Error::config(field, "required"))?;
    if !path.is_file() {
        return Err(Error::config(field, format!("{} does not exist", path.display())));
    }
    Ok(path.clone())
}

/// Fails when the file's column count disagrees with the schema.
fn check_columns(path: &Path, schema: &FieldSchema, delimiter: char) -> Result<()> {
    if let Some(cols) = count_columns(path, delimiter)? {
        if cols != schema.len() + 1 {
            return Err(Error::SchemaMismatch(format!(
                "schema has {} fields, {} has {} (label excluded)",
                schema.len(),
                path.display(),
                cols.saturating_sub(1)
            )));
        }
    }
    Ok(())
}

fn load(path: &Path, schema: &FieldSchema, delimiter: char) -> Result<Dataset> {
    check_columns(path, schema, delimiter)?;
    let loaded = load_tsv(path, schema, delimiter)?;
    if loaded.skipped > 0 {
        eprintln!("{}: skipped {} malformed of {} lines", path.display(), loaded.skipped, loaded.lines);
    }
    Ok(loaded.data)
}

struct Splits {
    train: Dataset,
    valid: Dataset,
    test: Option<Dataset>,
}

fn load_splits(cfg: &RunConfig, schema: &FieldSchema) -> Result<Splits> {
    let d = &cfg.data;
    let train_path = require_file(d.train.as_ref(), "data.train")?;
    let full = load(&train_path, schema, d.delimiter)?;
    let (train, valid) = match &d.valid {
        Some(_) => {
            let valid_path = require_file(d.valid.as_ref(), "data.valid")?;
            (full, load(&valid_path, schema, d.delimiter)?)
        }
        None => match d.split {
            SplitKind::Random => split_train_test(&full, d.valid_fraction, cfg.split_seed()),
            SplitKind::Tail => split_head_tail(&full, d.valid_fraction),
        }
        .map_err(|e| match e {
            Error::Config { message, .. } => Error::config("data.valid_fraction", message),
            other => other,
        })?,
    };
    let test = match &d.test {
        Some(_) => Some(load(&require_file(d.test.as_ref(), "data.test")?, schema, d.delimiter)?),
        None => None,
    };
    Ok(Splits { train, valid, test })
}

fn metrics_line(e: &Evaluation) -> String {
    let auc = e.auc.map(|a| format!("{a:.6}")).unwrap_or_else(|| "nan".into());
    format!("auc={auc} logloss={:.6}", e.logloss)
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let schema = cfg.schema.build()?;
    let tc = cfg.train_config()?;
    cfg.model.layout(schema.len())?;
    let splits = load_splits(cfg, &schema)?;
    eprintln!(
        "training on {} rows, validating on {} rows",
        splits.train.len(),
        splits.valid.len()
    );
    let outcome = train(&cfg.model, &schema, &splits.train, &splits.valid, &tc)?;
    write_checkpoint(&cfg.output.checkpoint, &outcome.model)?;
    write_metric_csv(&cfg.output.log, &outcome.log)?;
    if !splits.valid.is_empty() {
        let v = evaluate(&outcome.model, &splits.valid, tc.batch_size)?;
        println!("valid {}", metrics_line(&v));
    }
    if let Some(test) = &splits.test {
        let t = evaluate(&outcome.model, test, tc.batch_size)?;
        println!("test {}", metrics_line(&t));
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, checkpoint: Option<PathBuf>, data: Option<PathBuf>) -> Result<()> {
    let ckpt = checkpoint.unwrap_or_else(|| cfg.output.checkpoint.clone());
    let ckpt = require_file(Some(&ckpt), "--checkpoint")?;
    let data = data.or_else(|| cfg.data.test.clone()).or_else(|| cfg.data.train.clone());
    let data = require_file(data.as_ref(), "--data")?;
    let model = read_checkpoint(&ckpt)?;
    let set = load(&data, model.schema(), cfg.data.delimiter)?;
    let e = evaluate(&model, &set, cfg.train.batch_size)?;
    println!("{}", metrics_line(&e));
    Ok(())
}

fn cmd_gradcheck(cfg: &RunConfig, sweep: bool) -> Result<()> {
    let reports = if sweep {
        grad_check_sweep(&cfg.model, cfg.seed)?
    } else {
        vec![grad_check(&cfg.model, cfg.seed)?]
    };
    let failed = reports.iter().filter(|r| !r.passed()).count();
    for r in &reports {
        if !sweep || !r.passed() {
            println!("{r}");
        } else {
            println!("ok   max_rel_error={:.3e}  {}", r.max_rel_error(), r.label());
        }
    }
    println!("{} of {} configurations passed", reports.len() - failed, reports.len());
    if failed > 0 {
        return Err(Error::Numeric(format!("gradient check failed for {failed} configuration(s)")));
    }
    Ok(())
}

fn cmd_ablate(cfg: &RunConfig) -> Result<()> {
    let schema = cfg.schema.build()?;
    let tc = cfg.train_config()?;
    cfg.model.layout(schema.len())?;
    let splits = load_splits(cfg, &schema)?;
    let test = splits.test.as_ref().unwrap_or(&splits.valid);
    let rows = run_ablation(&cfg.model, &schema, &splits.train, &splits.valid, test, &tc)?;
    write_ablation_csv(&cfg.output.ablation, &rows)?;
    print!("{}", crate::train::ablation_csv(&rows));
    Ok(())
}

fn cmd_synth(cfg: &RunConfig, out: Option<PathBuf>) -> Result<()> {
    let spec = cfg.synthetic_spec();
    let data = generate_synthetic(&spec)?;
    let dir = out.unwrap_or_else(|| cfg.output.synth_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_tsv(dir.join("train.tsv"), &data.train_rows, cfg.data.delimiter)?;
    write_tsv(dir.join("test.tsv"), &data.test_rows, cfg.data.delimiter)?;
    let sidecar = serde_json::json!({
        "bayes_auc": data.bayes_auc,
        "seed": spec.seed,
        "spec": cfg.synth,
        "schema": data.schema,
    });
    let path = dir.join("synth.json");
    let text = serde_json::to_string_pretty(&sidecar).expect("plain data serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    println!("bayes_auc={:.6}", data.bayes_auc);
    Ok(())
}
