//! `pc2dae`: generate synthetic data, train, denoise, evaluate and compare.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out`.
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or schema
//! error, 3 numerical failure.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pc2dae_core::baselines::run_comparison;
use pc2dae_core::config::RunConfig;
use pc2dae_core::data::{read_csv, write_csv, ScaleRecord};
use pc2dae_core::metrics::{evaluate, report_table};
use pc2dae_core::model::{Pc2daeModel, Variant};
use pc2dae_core::pipeline::{denoise, fit, simulate};
use pc2dae_core::train::{write_log, TrainMode};
use pc2dae_core::{Error, Family, Result, SeriesFrame};

use manifest::RunManifest;

const CHECKPOINT_FILE: &str = "model.ckpt";
const SCALE_FILE: &str = "scale.txt";

#[derive(Debug, Parser)]
#[command(name = "pc2dae", version, about = "Physics-constrained denoising of multi-channel sensor series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply to anything it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set train.max_epochs=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Top-level seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write clean.csv and noisy.csv.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Gaussian noise level relative to each channel's scale.
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write model.ckpt, scale.txt and train_log.jsonl.
    Train {
        #[command(flatten)]
        common: Common,
        /// Noisy input CSV.
        #[arg(long)]
        data: PathBuf,
        /// Clean target CSV (required in oracle mode).
        #[arg(long)]
        clean: Option<PathBuf>,
        /// lean, wide or ablation.
        #[arg(long)]
        variant: Option<String>,
        /// field or oracle.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Denoise a CSV with a trained checkpoint and write denoised.csv.
    Denoise {
        #[command(flatten)]
        common: Common,
        /// Checkpoint file, or a training output directory.
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics of an output series against its input (and the clean truth).
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the model with the classical filters on a noisy/clean pair.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Numerical(_) => 3,
        Error::Contract(_) | Error::Schema(_) | Error::Format(_) | Error::Data(_) | Error::Checkpoint(_) | Error::Io(_) => 2,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("override `{kv}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", path.display())))
}

fn read_frame(path: &Path) -> Result<SeriesFrame> {
    read_csv(path).map_err(|e| match e {
        Error::Io(io) => Error::Data(format!("cannot read {}: {io}", path.display())),
        other => other,
    })
}

fn checkpoint_paths(ckpt: &Path) -> (PathBuf, PathBuf) {
    let file = if ckpt.is_dir() { ckpt.join(CHECKPOINT_FILE) } else { ckpt.to_path_buf() };
    let scale = file.parent().unwrap_or(Path::new(".")).join(SCALE_FILE);
    (file, scale)
}

fn load_model(ckpt: &Path) -> Result<(Pc2daeModel, ScaleRecord, PathBuf)> {
    let (file, scale) = checkpoint_paths(ckpt);
    let model = Pc2daeModel::load_checkpoint(&file).map_err(|e| match e {
        Error::Io(io) => Error::Checkpoint(format!("cannot read {}: {io}", file.display())),
        other => other,
    })?;
    let record = ScaleRecord::load(&scale).map_err(|e| match e {
        Error::Io(io) => Error::Checkpoint(format!("cannot read scale record {}: {io}", scale.display())),
        other => other,
    })?;
    Ok((model, record, file))
}

fn generate(common: &Common, noise_sigma: Option<f64>, out: &Path) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(s) = noise_sigma {
        cfg.set("corruption.noise_sigma", &s.to_string())?;
    }
    out_dir(out)?;
    let mut m = RunManifest::new("generate", &cfg)?;
    let (clean, noisy) = simulate(&cfg.scenario, &cfg.corruption, cfg.seed)?;
    let (cp, np) = (out.join("clean.csv"), out.join("noisy.csv"));
    write_csv(&clean, &cp)?;
    write_csv(&noisy, &np)?;
    m.output("clean", &cp).output("noisy", &np);
    m.extra("rows", clean.len())?;
    m.write(out)?;
    println!("wrote {} rows to {} and {}", clean.len(), cp.display(), np.display());
    Ok(())
}

fn train_cmd(
    common: &Common,
    data: &Path,
    clean: Option<&Path>,
    variant: Option<&str>,
    mode: Option<&str>,
    out: &Path,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(v) = variant {
        cfg.model.variant = Variant::parse(v)?;
    }
    if let Some(md) = mode {
        cfg.train.mode = TrainMode::parse(md)?;
    }
    cfg.validate()?;
    if cfg.train.mode == TrainMode::Oracle && clean.is_none() {
        return Err(Error::Config("oracle mode needs --clean (or use --mode field)".into()));
    }
    let noisy = read_frame(data)?;
    let clean_frame = clean.map(read_frame).transpose()?;
    out_dir(out)?;
    let mut m = RunManifest::new("train", &cfg)?;
    m.input("data", data);
    if let Some(c) = clean {
        m.input("clean", c);
    }
    let weights = cfg.loss_weights();
    let fitted = fit(&cfg.model_config(), &cfg.train_config(), &weights, &noisy, clean_frame.as_ref())?;
    let o = &fitted.outcome;
    let (ckpt, scale, log) = (out.join(CHECKPOINT_FILE), out.join(SCALE_FILE), out.join("train_log.jsonl"));
    o.model.save_checkpoint(&ckpt)?;
    fitted.record.save(&scale)?;
    write_log(&o.log, &log)?;
    m.output("checkpoint", &ckpt).output("scale", &scale).output("log", &log);
    m.extra("variant", cfg.model.variant)?;
    m.extra("loss_weights", weights)?;
    m.extra("parameters", o.model.param_count())?;
    m.extra("best_epoch", o.best_epoch)?;
    m.extra("epochs_run", o.log.len())?;
    m.timings.insert("train_seconds".into(), o.wall_seconds);
    m.write(out)?;

    println!("{} model, {} parameters, {} epochs, best epoch {:?}", cfg.model.variant.name(), o.model.param_count(), o.log.len(), o.best_epoch);
    if let Some(best) = o.best_epoch.and_then(|b| o.log.get(b)) {
        println!("{:<6} {:>12} {:>12} {:>12}", "family", "recon", "positivity", "smooth");
        for f in Family::ALL {
            println!("{:<6} {:>12.6} {:>12.6} {:>12.6}", f.name(), best.val.recon.get(f), best.val.positivity.get(f), best.val.smooth.get(f));
        }
        println!("validation total {:.6}", best.val.total);
    }
    println!("training took {:.1} s", o.wall_seconds);
    Ok(())
}

fn denoise_cmd(common: &Common, ckpt: &Path, data: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let (model, record, file) = load_model(ckpt)?;
    let noisy = read_frame(data)?;
    out_dir(out)?;
    let mut m = RunManifest::new("denoise", &cfg)?;
    let den = denoise(&model, &record, &noisy, cfg.train.stride, cfg.train.batch_size)?;
    let path = out.join("denoised.csv");
    write_csv(&den, &path)?;
    m.input("checkpoint", &file).input("data", data).output("denoised", &path);
    m.write(out)?;
    println!("wrote {} rows to {}", den.len(), path.display());
    Ok(())
}

fn evaluate_cmd(input: &Path, output: &Path, clean: Option<&Path>, out: &Path) -> Result<()> {
    let x = read_frame(input)?;
    let y = read_frame(output)?;
    let c = clean.map(read_frame).transpose()?;
    out_dir(out)?;
    let mut m = RunManifest::new("evaluate", &RunConfig::default())?;
    let report = evaluate(&x, &y, c.as_ref())?;
    let (jp, tp) = (out.join("report.json"), out.join("report.txt"));
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&jp, json + "\n")?;
    let table = report_table(&report);
    std::fs::write(&tp, &table)?;
    m.input("input", input).input("output", output);
    if let Some(p) = clean {
        m.input("clean", p);
    }
    m.output("report_json", &jp).output("report_text", &tp);
    m.write(out)?;
    print!("{table}");
    Ok(())
}

fn compare_cmd(common: &Common, ckpt: &Path, clean: &Path, noisy: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let (model, record, file) = load_model(ckpt)?;
    let c = read_frame(clean)?;
    let n = read_frame(noisy)?;
    out_dir(out)?;
    let mut m = RunManifest::new("compare", &cfg)?;
    let den = denoise(&model, &record, &n, cfg.train.stride, cfg.train.batch_size)?;
    let table = run_comparison(&n, &c, &cfg.baselines.methods(), &[("pc2dae", &den)])?;
    let (jp, tp) = (out.join("comparison.json"), out.join("comparison.txt"));
    let json = serde_json::to_string_pretty(&table).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&jp, json + "\n")?;
    let text = table.to_text();
    std::fs::write(&tp, &text)?;
    m.input("checkpoint", &file).input("clean", clean).input("noisy", noisy);
    m.output("comparison_json", &jp).output("comparison_text", &tp);
    m.write(out)?;
    print!("{text}");
    let negatives = den.targets.iter().flatten().filter(|&&v| v < 0.0).count();
    if negatives > 0 {
        return Err(Error::Numerical(format!("model output has {negatives} negative samples")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { common, noise_sigma, out } => generate(common, *noise_sigma, out),
        Command::Train { common, data, clean, variant, mode, out } => {
            train_cmd(common, data, clean.as_deref(), variant.as_deref(), mode.as_deref(), out)
        }
        Command::Denoise { common, ckpt, data, out } => denoise_cmd(common, ckpt, data, out),
        Command::Evaluate { input, output, clean, out } => evaluate_cmd(input, output, clean.as_deref(), out),
        Command::Compare { common, ckpt, clean, noisy, out } => compare_cmd(common, ckpt, clean, noisy, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
