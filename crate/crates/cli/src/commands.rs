//! One function per subcommand. Each resolves its configuration, persists
//! it as `resolved_config.json`, then runs and writes its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tensorhar::baselines::LogRegConfig;
use tensorhar::eval::{accuracy, compute_report, cross_validate, randomized_search, stratified_kfold, EvalReport};
use tensorhar::eval::{CvResult, SearchSpace};
use tensorhar::federated::{centralized_gd, run_federation, Partition};
use tensorhar::io::{load_model, ModelDocument};
use tensorhar::models::{ModelFamily, ModelSpec, TrainedModel};
use tensorhar::signal::Standardizer;
use tensorhar::synth::{write_custom_csv_set, write_uci_layout, SynthCsvConfig, SynthUciConfig};
use tensorhar::{Classifier, Dataset, Exec};

use crate::config::{base_config, config_error, overlay_common, resolve_model, CommonArgs, ModelArgs};
use crate::config::{RepresentationChoice, RunConfig, SearchConfig, SourceKind};
use crate::data::{self, DataSummary, Splits};
use crate::output::{pct, slug, Out};

/// Family used when neither `--model` nor the config names one.
const DEFAULT_FAMILY: ModelFamily = ModelFamily::Svm;

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// A model document written by `train` or `fed`.
    #[arg(long)]
    pub model_file: PathBuf,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid points to sample; omit to evaluate the whole grid.
    #[arg(long)]
    pub n_candidates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PartitionArg {
    Iid,
    BySubject,
    Dirichlet,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub clients: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub local_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub partition: Option<PartitionArg>,
    /// Dirichlet concentration; smaller is more skewed.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub client_fraction: Option<f64>,
    #[arg(long = "C", value_name = "C")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ReportArgs {
    /// `report.json` / `cv.json` files, or run directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "runs/report")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthKind {
    /// UCI HAR directory layout with 561 features and raw 128x9 windows.
    Uci,
    /// One CSV stream per participant.
    Custom,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Custom: participants.
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Custom: add gyroscope columns.
    #[arg(long)]
    pub gyro: bool,
    /// UCI: training windows per class.
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// UCI: test windows per class.
    #[arg(long)]
    pub test_per_class: Option<usize>,
}

/// `report.json`, the document `report` consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub protocol: String,
    pub family: ModelFamily,
    pub model: String,
    pub params: Value,
    pub dataset: DataSummary,
    pub report: EvalReport,
}

/// `cv.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub command: String,
    pub seed: u64,
    pub protocol: String,
    pub family: ModelFamily,
    pub model: String,
    pub params: Value,
    pub dataset: DataSummary,
    pub folds: usize,
    pub grouping: tensorhar::eval::Grouping,
    pub cv: CvResult,
    pub test_accuracy: Option<f64>,
    /// Mean CV accuracy minus test accuracy.
    pub cv_test_gap: Option<f64>,
}

struct Prepared {
    cfg: RunConfig,
    exec: Exec,
    out: Out,
}

/// Persist the resolved config before any work, so a failed run still
/// records what it attempted.
fn prepare(cfg: RunConfig, jobs: Option<usize>) -> Result<Prepared> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let mut out = Out::new(&dir)?;
    out.text("resolved_config.json", &cfg.to_json()?)?;
    Ok(Prepared { cfg, exec: Exec::from_jobs(jobs), out })
}

fn model_run(args: &CommonArgs, model: &ModelArgs, command: &str) -> Result<(RunConfig, ModelSpec)> {
    let mut cfg = base_config(args)?;
    overlay_common(&mut cfg, command, args);
    let spec = resolve_model(&mut cfg, model, DEFAULT_FAMILY)?;
    data::resolve_representation(&mut cfg.dataset, spec.family().prefers_tensors());
    Ok((cfg, spec))
}

fn need_test(splits: &Splits) -> Result<&Dataset> {
    splits.test.as_ref().ok_or_else(|| config_error("this command needs a test split"))
}

fn evaluate_on(model: &TrainedModel, test: &Dataset, exec: Exec) -> Result<EvalReport> {
    let pred = model.predict_batch(&test.samples, exec)?;
    Ok(compute_report(&test.labels, &pred, &test.classes)?)
}

fn model_metadata(cfg: &RunConfig, splits: &Splits) -> Value {
    json!({
        "seed": cfg.seed,
        "params": cfg.model.as_ref().map(|m| &m.params),
        "protocol": splits.protocol,
        "dataset": splits.summary,
        "standardizer": splits.standardizer,
    })
}

fn write_report(out: &mut Out, run: &RunReport) -> Result<()> {
    out.json("report.json", run)?;
    let mut text = String::new();
    writeln!(text, "model: {} {}", run.model, run.params)?;
    writeln!(text, "protocol: {}", run.protocol)?;
    writeln!(text, "seed: {}", run.seed)?;
    writeln!(text)?;
    text.push_str(&run.report.to_text());
    out.text("report.txt", &text)?;
    out.text("confusion.csv", &run.report.confusion.to_csv())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let (cfg, spec) = model_run(&args.common, &args.model, "train")?;
    let Prepared { cfg, exec, mut out } = prepare(cfg, args.common.jobs)?;
    let splits = data::load(&cfg.dataset, &cfg.eval, cfg.seed, true, exec)?;
    let test = need_test(&splits)?;
    let model = spec.fit(&splits.train, exec)?;
    let report = evaluate_on(&model, test, exec)?;
    println!("{} test accuracy {}% on {} samples", spec.family().display_name(), pct(report.accuracy), test.len());
    out.text("model.json", &ModelDocument::new(model, model_metadata(&cfg, &splits)).to_json()?)?;
    let run = RunReport {
        command: "train".into(),
        seed: cfg.seed,
        protocol: splits.protocol.clone(),
        family: spec.family(),
        model: spec.family().display_name().into(),
        params: spec.params(),
        dataset: splits.summary.clone(),
        report,
    };
    write_report(&mut out, &run)?;
    out.finish();
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let doc = load_model(&args.model_file)?;
    let family = doc.model.family();
    let mut cfg = base_config(&args.common)?;
    overlay_common(&mut cfg, "evaluate", &args.common);
    let meta = &doc.metadata;
    let trained_repr: Option<RepresentationChoice> =
        meta.pointer("/dataset/representation").and_then(|v| serde_json::from_value(v.clone()).ok());
    let standardizer: Option<Standardizer> =
        meta.get("standardizer").and_then(|v| serde_json::from_value(v.clone()).ok());
    if args.common.representation.is_none() {
        if let Some(r) = trained_repr {
            cfg.dataset.representation = r;
        }
    }
    data::resolve_representation(&mut cfg.dataset, family.prefers_tensors());
    // The stored standardizer replaces a fresh fit.
    let flatten = cfg.dataset.source == SourceKind::CustomCsv
        && cfg.dataset.representation == RepresentationChoice::FeatureVectors;
    cfg.dataset.standardize = Some(standardizer.is_some());
    let Prepared { cfg, exec, mut out } = prepare(cfg, args.common.jobs)?;
    let mut load_cfg = cfg.dataset.clone();
    load_cfg.standardize = Some(false);
    if flatten {
        load_cfg.representation = RepresentationChoice::RawTensors;
    }
    let mut splits = data::load(&load_cfg, &cfg.eval, cfg.seed, true, exec)?;
    let mut test = need_test(&splits)?.clone();
    if let Some(s) = &standardizer {
        test = s.transform_dataset(&test)?;
    }
    if flatten {
        test = test.flattened();
    }
    if test.n_classes() != doc.model.n_classes() {
        bail!(config_error(format!(
            "model has {} classes but the evaluation data has {}",
            doc.model.n_classes(),
            test.n_classes()
        )));
    }
    let report = evaluate_on(&doc.model, &test, exec)?;
    println!("{} accuracy {}% on {} samples", family.display_name(), pct(report.accuracy), test.len());
    splits.summary.representation = cfg.dataset.representation;
    splits.summary.standardized = standardizer.is_some();
    splits.summary.sample_shape = test.sample_shape().map(<[usize]>::to_vec).unwrap_or_default();
    let run = RunReport {
        command: "evaluate".into(),
        seed: cfg.seed,
        protocol: splits.protocol.clone(),
        family,
        model: family.display_name().into(),
        params: meta.get("params").cloned().unwrap_or(Value::Null),
        dataset: splits.summary.clone(),
        report,
    };
    write_report(&mut out, &run)?;
    out.finish();
    Ok(())
}

fn cv_table(rows: &[&CvReport]) -> String {
    let k = rows.iter().map(|r| r.cv.fold_accuracies.len()).max().unwrap_or(0);
    let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<width$}", "Model");
    for f in 1..=k {
        let _ = write!(s, "  {:>7}", format!("Fold {f}"));
    }
    let _ = writeln!(s, "  {:>7}  {:>6}  {:>7}  {:>7}", "Mean", "Std", "Test", "Gap");
    for r in rows {
        let _ = write!(s, "{:<width$}", r.model);
        for a in &r.cv.fold_accuracies {
            let _ = write!(s, "  {:>7}", pct(*a));
        }
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), pct);
        let _ = writeln!(
            s,
            "  {:>7}  {:>6}  {:>7}  {:>7}",
            pct(r.cv.mean),
            pct(r.cv.std),
            opt(r.test_accuracy),
            opt(r.cv_test_gap)
        );
    }
    s
}

pub fn cv(args: &TrainArgs) -> Result<()> {
    let (cfg, spec) = model_run(&args.common, &args.model, "cv")?;
    let Prepared { cfg, exec, mut out } = prepare(cfg, args.common.jobs)?;
    let splits = data::load(&cfg.dataset, &cfg.eval, cfg.seed, cfg.dataset.source == SourceKind::UciHar, exec)?;
    let folds = stratified_kfold(&splits.train, cfg.eval.folds, cfg.seed, cfg.eval.grouping)?;
    let result = cross_validate(&spec, &splits.train, &folds, exec)?;
    let test_accuracy = match &splits.test {
        Some(test) => Some(accuracy(&spec.fit(&splits.train, exec)?, test, exec)?),
        None => None,
    };
    let report = CvReport {
        command: "cv".into(),
        seed: cfg.seed,
        protocol: format!(
            "{}-fold stratified CV{} on the training split; {}",
            folds.len(),
            if cfg.eval.grouping == tensorhar::eval::Grouping::BySubject { " grouped by subject" } else { "" },
            splits.protocol
        ),
        family: spec.family(),
        model: spec.family().display_name().into(),
        params: spec.params(),
        dataset: splits.summary.clone(),
        folds: folds.len(),
        grouping: cfg.eval.grouping,
        test_accuracy,
        cv_test_gap: test_accuracy.map(|t| result.mean - t),
        cv: result,
    };
    println!("{} mean CV accuracy {}%", report.model, pct(report.cv.mean));
    out.json("cv.json", &report)?;
    let mut text = format!("protocol: {}\nseed: {}\n\n", report.protocol, report.seed);
    text.push_str(&cv_table(&[&report]));
    out.text("cv.txt", &text)?;
    out.finish();
    Ok(())
}

pub fn search(args: &SearchArgs) -> Result<()> {
    let (mut cfg, spec) = model_run(&args.common, &args.model, "search")?;
    let mut section = cfg.search.clone().unwrap_or_default();
    if args.n_candidates.is_some() {
        section.n_candidates = args.n_candidates;
    }
    let grid = section.params.clone().unwrap_or_else(|| spec.family().default_search_params());
    cfg.search = Some(SearchConfig { params: Some(grid.clone()), n_candidates: section.n_candidates });
    let space = SearchSpace {
        params: grid,
        n_candidates: section.n_candidates,
        folds: cfg.eval.folds,
        seed: cfg.seed,
        grouping: cfg.eval.grouping,
    };
    space.validate()?;
    // Reject misspelled grid keys before spending any fits.
    spec.with_candidate(&space.candidate(0)).map_err(|e| config_error(e.to_string()))?;

    let Prepared { cfg, exec, mut out } = prepare(cfg, args.common.jobs)?;
    let splits = data::load(&cfg.dataset, &cfg.eval, cfg.seed, false, exec)?;
    let result = randomized_search(&space, &splits.train, exec, |cand, train, test| {
        let model = spec.with_candidate(cand)?.fit(train, Exec::Sequential)?;
        accuracy(&model, test, Exec::Sequential)
    })?;
    let best = result.best();
    let best_spec = spec.with_candidate(&best.params)?;
    println!(
        "{} best CV accuracy {}% over {} candidates ({} fits)",
        spec.family().display_name(),
        pct(best.cv.mean),
        result.candidates.len(),
        result.n_fits
    );

    out.json(
        "search.json",
        &json!({
            "command": "search",
            "seed": cfg.seed,
            "protocol": format!("{}-fold stratified CV on the training split; {}", result.folds, splits.protocol),
            "family": spec.family(),
            "model": spec.family().display_name(),
            "dataset": splits.summary,
            "best_params": best_spec.params(),
            "result": result,
        }),
    )?;

    let mut text = format!("{:<24}  {}\n", "Model", "Best Parameters");
    let shown: Vec<String> = best.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(text, "{:<24}  {}", spec.family().display_name(), shown.join(", "));
    let _ = writeln!(
        text,
        "\nbest mean CV accuracy {}% (std {}), {} of {} grid points, {} folds, {} fits",
        pct(best.cv.mean),
        pct(best.cv.std),
        result.candidates.len(),
        result.space_size,
        result.folds,
        result.n_fits
    );
    out.text("search.txt", &text)?;

    let mut best_cfg = cfg.clone();
    best_cfg.command = Some("train".into());
    best_cfg.output_dir = None;
    best_cfg.search = None;
    best_cfg.model = Some(crate::config::ModelConfig { family: spec.family(), params: best_spec.params() });
    out.text("best_config.json", &best_cfg.to_json()?)?;
    out.finish();
    Ok(())
}

pub fn fed(args: &FedArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    overlay_common(&mut cfg, "fed", &args.common);
    let mut fc = cfg.fed.unwrap_or_default();
    if let Some(v) = args.clients {
        fc.n_clients = v;
    }
    if let Some(v) = args.rounds {
        fc.n_rounds = v;
    }
    if let Some(v) = args.local_epochs {
        fc.local_epochs = v;
    }
    if let Some(v) = args.lr {
        fc.local_learning_rate = v;
    }
    if let Some(v) = args.client_fraction {
        fc.client_fraction = v;
    }
    if let Some(v) = args.c {
        fc.c = v;
    }
    match (args.partition, args.alpha) {
        (Some(PartitionArg::Iid), _) => fc.partition = Partition::Iid,
        (Some(PartitionArg::BySubject), _) => fc.partition = Partition::BySubject,
        (Some(PartitionArg::Dirichlet), a) => fc.partition = Partition::Dirichlet { alpha: a.unwrap_or(0.5) },
        (None, Some(a)) => match &mut fc.partition {
            Partition::Dirichlet { alpha } => *alpha = a,
            _ => bail!(config_error("--alpha needs --partition dirichlet")),
        },
        (None, None) => {}
    }
    fc.seed = cfg.seed;
    fc.validate()?;
    cfg.fed = Some(fc);
    cfg.model = None;
    data::resolve_representation(&mut cfg.dataset, false);

    let Prepared { cfg, exec, mut out } = prepare(cfg, args.common.jobs)?;
    let splits = data::load(&cfg.dataset, &cfg.eval, cfg.seed, true, exec)?;
    let test = need_test(&splits)?;
    let fed = run_federation(&splits.train, test, &fc, exec)?;
    let final_accuracy = fed.rounds.last().map_or(0.0, |r| r.accuracy);
    let gd = centralized_gd(&splits.train, &fc)?;
    let gd_accuracy = accuracy(&gd, test, exec)?;
    let lbfgs = ModelSpec::Logreg(LogRegConfig { c: fc.c, ..LogRegConfig::default() }).fit(&splits.train, exec)?;
    let lbfgs_accuracy = accuracy(&lbfgs, test, exec)?;
    println!(
        "federated accuracy {}% after {} rounds; centralized L-BFGS {}%",
        pct(final_accuracy),
        fc.n_rounds,
        pct(lbfgs_accuracy)
    );

    out.text("rounds.ndjson", &fed.to_ndjson()?)?;
    let meta = model_metadata(&cfg, &splits);
    out.text("model.json", &ModelDocument::new(TrainedModel::Logreg(fed.model.clone()), meta).to_json()?)?;
    out.json(
        "fed.json",
        &json!({
            "command": "fed",
            "seed": cfg.seed,
            "protocol": splits.protocol,
            "dataset": splits.summary,
            "config": fc,
            "shard_sizes": fed.shard_sizes,
            "rounds": fed.rounds.len() - 1,
            "final_accuracy": final_accuracy,
            "centralized_gd_accuracy": gd_accuracy,
            "centralized_lbfgs_accuracy": lbfgs_accuracy,
            "gap_to_lbfgs": lbfgs_accuracy - final_accuracy,
        }),
    )?;
    let mut text = format!(
        "protocol: {}\nseed: {}\n\n{:>5}  {:>7}  {:>8}\n",
        splits.protocol, cfg.seed, "round", "clients", "accuracy"
    );
    for r in &fed.rounds {
        let _ = writeln!(text, "{:>5}  {:>7}  {:>8}", r.round, r.clients.len(), pct(r.accuracy));
    }
    let _ = writeln!(text, "\ncentralized GD, same step budget: {}%", pct(gd_accuracy));
    let _ = writeln!(text, "centralized L-BFGS: {}%", pct(lbfgs_accuracy));
    out.text("fed.txt", &text)?;
    out.finish();
    Ok(())
}

enum Input {
    Eval(RunReport),
    Cv(CvReport),
}

fn read_input(path: &Path) -> Result<Vec<Input>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        ["report.json", "cv.json"].iter().map(|f| path.join(f)).filter(|p| p.is_file()).collect()
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        bail!(config_error(format!("{} holds neither report.json nor cv.json", path.display())));
    }
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
            Ok(if value.get("cv").is_some() {
                Input::Cv(serde_json::from_value(value).with_context(|| format!("{} is not a cv.json", f.display()))?)
            } else {
                Input::Eval(
                    serde_json::from_value(value).with_context(|| format!("{} is not a report.json", f.display()))?,
                )
            })
        })
        .collect()
}

fn comparison_text(rows: &[(String, &RunReport)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
    let mut s = format!(
        "{:<width$}  {:>12}  {:>9}  {:>6}  {:>8}\n",
        "Model", "Accuracy (%)", "Precision", "Recall", "F1-Score"
    );
    for (name, r) in rows {
        let w = &r.report.weighted_avg;
        let _ = writeln!(
            s,
            "{:<width$}  {:>12}  {:>9.2}  {:>6.2}  {:>8.2}",
            name,
            pct(r.report.accuracy),
            w.precision,
            w.recall,
            w.f1
        );
    }
    for (name, r) in rows {
        let _ = writeln!(s, "\n{name}\nprotocol: {}", r.protocol);
        s.push_str(&r.report.to_text());
    }
    s
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let mut evals = Vec::new();
    let mut cvs = Vec::new();
    for p in &args.inputs {
        for input in read_input(p)? {
            match input {
                Input::Eval(r) => evals.push(r),
                Input::Cv(r) => cvs.push(r),
            }
        }
    }
    let mut out = Out::new(&args.out)?;
    let mut names: Vec<String> = Vec::new();
    for r in &evals {
        let mut name = r.model.clone();
        let mut n = 2;
        while names.contains(&name) {
            name = format!("{} ({n})", r.model);
            n += 1;
        }
        names.push(name);
    }
    let rows: Vec<(String, &RunReport)> = names.iter().cloned().zip(&evals).collect();

    let mut csv = String::from("model,protocol,accuracy,precision,recall,f1,macro_precision,macro_recall,macro_f1\n");
    for (name, r) in &rows {
        let (w, m) = (&r.report.weighted_avg, &r.report.macro_avg);
        let _ = writeln!(
            csv,
            "{},\"{}\",{},{},{},{},{},{},{}",
            name,
            r.protocol.replace('"', "'"),
            r.report.accuracy,
            w.precision,
            w.recall,
            w.f1,
            m.precision,
            m.recall,
            m.f1
        );
    }
    let mut text = String::new();
    if !rows.is_empty() {
        text.push_str(&comparison_text(&rows));
        out.text("comparison.csv", &csv)?;
        for (name, r) in &rows {
            out.text(&format!("confusion_{}.csv", slug(name)), &r.report.confusion.to_csv())?;
        }
    }
    if !cvs.is_empty() {
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str("Cross-validation\n");
        text.push_str(&cv_table(&cvs.iter().collect::<Vec<_>>()));
        let mut cv_csv = String::from("model,fold,accuracy\n");
        for r in &cvs {
            for (f, a) in r.cv.fold_accuracies.iter().enumerate() {
                let _ = writeln!(cv_csv, "{},{},{a}", r.model, f + 1);
            }
        }
        out.text("cv_folds.csv", &cv_csv)?;
    }
    out.text("comparison.txt", &text)?;
    out.json(
        "comparison.json",
        &json!({
            "models": rows.iter().map(|(name, r)| json!({
                "name": name,
                "family": r.family,
                "protocol": r.protocol,
                "seed": r.seed,
                "accuracy": r.report.accuracy,
                "weighted_avg": r.report.weighted_avg,
                "macro_avg": r.report.macro_avg,
                "per_class": r.report.per_class,
            })).collect::<Vec<_>>(),
            "cross_validation": cvs.iter().map(|r| json!({
                "model": r.model,
                "protocol": r.protocol,
                "seed": r.seed,
                "fold_accuracies": r.cv.fold_accuracies,
                "mean": r.cv.mean,
                "std": r.cv.std,
                "test_accuracy": r.test_accuracy,
                "cv_test_gap": r.cv_test_gap,
            })).collect::<Vec<_>>(),
        }),
    )?;
    print!("{text}");
    out.finish();
    Ok(())
}

pub fn synth_data(args: &SynthArgs) -> Result<()> {
    let mut out = Out::new(&args.out)?;
    let manifest = match args.kind {
        SynthKind::Uci => {
            let mut c = SynthUciConfig { seed: args.seed, ..SynthUciConfig::default() };
            if let Some(n) = args.train_per_class {
                c.train_per_class = n;
            }
            if let Some(n) = args.test_per_class {
                c.test_per_class = n;
            }
            write_uci_layout(&args.out, &c)?;
            json!({"synthetic": true, "kind": "uci_har_layout", "config": c})
        }
        SynthKind::Custom => {
            let mut c = SynthCsvConfig { seed: args.seed, gyro: args.gyro, ..SynthCsvConfig::default() };
            if let Some(n) = args.subjects {
                c.subjects = n;
            }
            let files = write_custom_csv_set(&args.out, &c)?;
            json!({"synthetic": true, "kind": "custom_csv", "config": c, "files": files.len()})
        }
    };
    out.json("SYNTHETIC.json", &manifest)?;
    println!("synthetic data written under {}", args.out.display());
    out.finish();
    Ok(())
}
