//! Command-line front end. [`run`] returns the process exit status: 0 on
//! success, 1 when inputs or settings fail validation, 2 on usage errors.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use config::{EvaluationConfig, PathsConfig, RunConfig, CONFIG_ENV};

use crate::error::{Error, Result};
use crate::eval::report::{auc_curve_csv, comparison_csv, mean_comparison_csv, stratified_csv, write_text};
use crate::eval::{
    compare_mean_auc, compare_models, hourly_curve, mean_auc, roc_auc, stratified_mean_prob, train_logistic, Alignment,
    HourlyPredictions, LogisticModel,
};
use crate::ingest::{load_cohort, load_outcomes, parse_events, preprocess, save_cohort, write_rejections, EncounterSeries};
use crate::model::export::{write_attention_csv, write_attention_pgm};
use crate::model::{load_model, save_model, split_validation, train, AttentionMode, Model};
use crate::sofa::{bedside_probabilities, traditional_scores, write_sofa_csv, BedsideTable};
use crate::synth::generate;

#[derive(Debug, Parser)]
#[command(name = "icu-acuity", version, about = "Hourly ICU acuity scoring and mortality prediction")]
struct Cli {
    /// TOML run config. Defaults to the file named by ICU_ACUITY_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort as event and outcome CSVs.
    Synth(SynthArgs),
    /// Parse events and outcomes into an hourly cohort file.
    Preprocess(PreprocessArgs),
    /// Hourly SOFA components, totals and bedside probabilities.
    SofaScore(SofaScoreArgs),
    /// Train the GRU/attention model.
    Train(TrainArgs),
    /// Hourly mortality probabilities, optionally with attention maps.
    Predict(PredictArgs),
    /// AUC curves for the trained model and the baselines.
    Evaluate(EvaluateArgs),
    /// Paired bootstrap comparison of two scorers.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of encounters.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long, default_value = "events.csv")]
    events: PathBuf,
    #[arg(long, default_value = "outcomes.csv")]
    outcomes: PathBuf,
    #[arg(long, default_value = "cohort.bin")]
    out: PathBuf,
    /// Also write rejected events here.
    #[arg(long)]
    rejections: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SofaScoreArgs {
    #[arg(long, default_value = "cohort.bin")]
    cohort: PathBuf,
    #[arg(long, default_value = "sofa.csv")]
    out: PathBuf,
    #[arg(long)]
    bedside_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value = "cohort.bin")]
    cohort: PathBuf,
    /// Validation cohort. Without it a stratified share of --cohort is held out.
    #[arg(long)]
    val_cohort: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    attention_mode: Option<AttentionMode>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, default_value = "model.bin")]
    model: PathBuf,
    #[arg(long, default_value = "cohort.bin")]
    cohort: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write each encounter's attention matrix as CSV.
    #[arg(long)]
    attention: bool,
    /// Also render attention as PGM images with this many pixels per cell.
    #[arg(long)]
    pgm_cell: Option<usize>,
    /// Restrict to these encounters.
    #[arg(long = "encounter")]
    encounters: Vec<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    align: Option<Alignment>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Bootstrap iterations.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, default_value = "model.bin")]
    model: PathBuf,
    /// Held-out cohort.
    #[arg(long, default_value = "cohort.bin")]
    cohort: PathBuf,
    /// Training cohort for the logistic-regression baseline; skipped if absent.
    #[arg(long)]
    train_cohort: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    bedside_table: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// A checkpoint path, or one of traditional, bedside, logistic.
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, default_value = "cohort.bin")]
    cohort: PathBuf,
    /// Needed when either side is `logistic`.
    #[arg(long)]
    train_cohort: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    bedside_table: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalArgs,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file {} does not exist", p.display())))
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn ensure_parent(p: &Path) -> Result<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => ensure_dir(d),
        _ => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    cfg.apply_seed();
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    match cli.command {
        Command::Synth(a) => {
            if let Some(n) = a.n {
                cfg.synth.n_encounters = n;
            }
            start(&cfg, "synth")?;
            run_synth(&cfg, &a)
        }
        Command::Preprocess(a) => {
            start(&cfg, "preprocess")?;
            run_preprocess(&cfg, &a)
        }
        Command::SofaScore(a) => {
            if a.bedside_table.is_some() {
                cfg.paths.bedside_table = a.bedside_table.clone();
            }
            start(&cfg, "sofa-score")?;
            require_file(&a.cohort)?;
            ensure_parent(&a.out)?;
            write_sofa_csv(&a.out, &load_cohort(&a.cohort)?, &cfg.bedside_table()?)
        }
        Command::Train(a) => {
            if let Some(m) = a.attention_mode {
                cfg.model.attention_mode = m;
            }
            if let Some(k) = a.hidden_dim {
                cfg.model.hidden_dim = k;
            }
            if let Some(e) = a.max_epochs {
                cfg.model.max_epochs = e;
            }
            start(&cfg, "train")?;
            run_train(&cfg, &a)
        }
        Command::Predict(a) => {
            start(&cfg, "predict")?;
            run_predict(&a)
        }
        Command::Evaluate(a) => {
            override_eval(&mut cfg, &a.eval, &a.bedside_table);
            start(&cfg, "evaluate")?;
            run_evaluate(&cfg, &a)
        }
        Command::Compare(a) => {
            override_eval(&mut cfg, &a.eval, &a.bedside_table);
            start(&cfg, "compare")?;
            run_compare(&cfg, &a)
        }
    }
}

fn override_eval(cfg: &mut RunConfig, e: &EvalArgs, bedside: &Option<PathBuf>) {
    if let Some(al) = e.align {
        cfg.evaluation.alignment = al;
    }
    if let Some(h) = e.horizon {
        cfg.evaluation.horizon = h;
    }
    if let Some(n) = e.iterations {
        cfg.evaluation.bootstrap_iterations = n;
    }
    if bedside.is_some() {
        cfg.paths.bedside_table = bedside.clone();
    }
}

fn start(cfg: &RunConfig, command: &str) -> Result<()> {
    cfg.validate()?;
    eprintln!("# {command}: effective config\n{}", cfg.to_toml());
    Ok(())
}

fn run_synth(cfg: &RunConfig, a: &SynthArgs) -> Result<()> {
    ensure_dir(&a.out_dir)?;
    let cohort = generate(&cfg.synth)?;
    cohort.write(&a.out_dir.join("events.csv"), &a.out_dir.join("outcomes.csv"))?;
    cohort.write_truth(&a.out_dir.join("truth.csv"))?;
    let deaths = cohort.truth.iter().filter(|t| t.label).count();
    eprintln!(
        "wrote {} encounters ({deaths} deaths, {} events) to {}",
        cohort.truth.len(),
        cohort.events.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn run_preprocess(cfg: &RunConfig, a: &PreprocessArgs) -> Result<()> {
    require_file(&a.events)?;
    require_file(&a.outcomes)?;
    ensure_parent(&a.out)?;
    let specs = cfg.variable_specs()?;
    let parsed = parse_events(&a.events)?;
    let outcomes = load_outcomes(&a.outcomes)?;
    let mut out = preprocess(parsed.events, &outcomes, &specs, &cfg.cohort);
    let mut rejections = parsed.rejections;
    rejections.append(&mut out.rejections);
    if let Some(p) = &a.rejections {
        ensure_parent(p)?;
        write_rejections(p, &rejections)?;
    }
    save_cohort(&a.out, &out.cohort)?;
    let x = &out.exclusions;
    eprintln!(
        "{} rejected events; encounters: {} in, {} age, {} stay length, {} no MAP, {} no oxygenation, {} multi-stay, {} kept",
        rejections.len(),
        x.input,
        x.age,
        x.stay_length,
        x.missing_map,
        x.missing_oxygenation,
        x.multi_stay,
        x.kept
    );
    if !out.missing_outcome.is_empty() {
        eprintln!("{} encounters without an outcome record were dropped", out.missing_outcome.len());
    }
    if out.cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(())
}

fn run_train(cfg: &RunConfig, a: &TrainArgs) -> Result<()> {
    require_file(&a.cohort)?;
    if let Some(v) = &a.val_cohort {
        require_file(v)?;
    }
    ensure_dir(&a.out_dir)?;
    let cohort = load_cohort(&a.cohort)?;
    let (fit, val) = match &a.val_cohort {
        Some(v) => (cohort, load_cohort(v)?),
        None => split_validation(&cohort, cfg.model.validation_fraction, cfg.model.seed),
    };
    eprintln!("training on {} encounters, validating on {}", fit.len(), val.len());
    let (model, log) = train(&fit, &val, &cfg.model)?;
    for e in &log.epochs {
        eprintln!("epoch {:>3}  loss {:.5}  val AUC {:.4}", e.epoch, e.train_loss, e.val_auc);
    }
    eprintln!("kept epoch {}{}", log.best_epoch, if log.stopped_early { " (stopped early)" } else { "" });
    save_model(&a.out_dir.join("model.bin"), &model)?;
    log.write_csv(&a.out_dir.join("training_log.csv"))?;
    write_text(&a.out_dir.join("run_config.toml"), &cfg.to_toml())
}

fn predict_all(model: &Model, cohort: &[EncounterSeries]) -> Result<Vec<Vec<f64>>> {
    cohort.par_iter().map(|s| Ok(model.predict(s)?.probs)).collect()
}

fn run_predict(a: &PredictArgs) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.cohort)?;
    if a.pgm_cell == Some(0) {
        return Err(Error::Config("--pgm-cell must be positive".into()));
    }
    ensure_dir(&a.out_dir)?;
    let model = load_model(&a.model)?;
    let mut cohort = load_cohort(&a.cohort)?;
    if !a.encounters.is_empty() {
        for id in &a.encounters {
            if !cohort.iter().any(|s| &s.encounter_id == id) {
                return Err(Error::Config(format!("encounter {id} is not in the cohort")));
            }
        }
        cohort.retain(|s| a.encounters.contains(&s.encounter_id));
    }
    let trajectories = cohort.par_iter().map(|s| model.predict(s)).collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("encounter_id,hour,prob\n");
    for (s, t) in cohort.iter().zip(&trajectories) {
        for (h, p) in t.probs.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", s.encounter_id, h + 1, p);
        }
    }
    write_text(&a.out_dir.join("predictions.csv"), &csv)?;
    if a.attention || a.pgm_cell.is_some() {
        let dir = a.out_dir.join("attention");
        ensure_dir(&dir)?;
        for (s, t) in cohort.iter().zip(&trajectories) {
            write_attention_csv(&dir.join(format!("{}.csv", s.encounter_id)), &t.attention)?;
            if let Some(px) = a.pgm_cell {
                write_attention_pgm(&dir.join(format!("{}.pgm", s.encounter_id)), &t.attention, px)?;
            }
        }
    }
    eprintln!("predicted {} encounters", cohort.len());
    Ok(())
}

enum Scorer {
    Model(Box<Model>),
    Traditional,
    Bedside(BedsideTable),
    Logistic(LogisticModel),
}

impl Scorer {
    fn scores(&self, cohort: &[EncounterSeries]) -> Result<Vec<Vec<f64>>> {
        match self {
            Scorer::Model(m) => predict_all(m, cohort),
            Scorer::Traditional => Ok(cohort.par_iter().map(traditional_scores).collect()),
            Scorer::Bedside(t) => Ok(cohort.par_iter().map(|s| bedside_probabilities(s, t)).collect()),
            Scorer::Logistic(m) => Ok(cohort.par_iter().map(|s| m.predict_series(s)).collect()),
        }
    }

    fn predictions(&self, cohort: &[EncounterSeries]) -> Result<HourlyPredictions> {
        HourlyPredictions::new(
            cohort.iter().map(|s| s.encounter_id.clone()).collect(),
            self.scores(cohort)?,
            cohort.iter().map(|s| s.label).collect(),
        )
    }
}

fn logistic_from(cfg: &RunConfig, train_cohort: &Option<PathBuf>) -> Result<Scorer> {
    let path = train_cohort
        .as_ref()
        .ok_or_else(|| Error::Config("the logistic baseline needs --train-cohort".into()))?;
    Ok(Scorer::Logistic(train_logistic(&load_cohort(path)?, &cfg.logistic)?))
}

fn scorer_named(cfg: &RunConfig, spec: &str, train_cohort: &Option<PathBuf>) -> Result<Scorer> {
    match spec {
        "traditional" => Ok(Scorer::Traditional),
        "bedside" => Ok(Scorer::Bedside(cfg.bedside_table()?)),
        "logistic" => logistic_from(cfg, train_cohort),
        path => {
            require_file(Path::new(path))?;
            Ok(Scorer::Model(Box::new(load_model(Path::new(path))?)))
        }
    }
}

fn run_evaluate(cfg: &RunConfig, a: &EvaluateArgs) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.cohort)?;
    if let Some(t) = &a.train_cohort {
        require_file(t)?;
    }
    ensure_dir(&a.out_dir)?;
    let cohort = load_cohort(&a.cohort)?;
    let mut scorers = vec![
        ("gru", Scorer::Model(Box::new(load_model(&a.model)?))),
        ("bedside", Scorer::Bedside(cfg.bedside_table()?)),
        ("traditional", Scorer::Traditional),
    ];
    if a.train_cohort.is_some() {
        scorers.push(("logistic", logistic_from(cfg, &a.train_cohort)?));
    }
    let ev = &cfg.evaluation;
    let seed = cfg.eval_seed();
    let mut summary = String::from("model,mean_auc,final_hour_auc\n");
    for (name, scorer) in &scorers {
        let preds = scorer.predictions(&cohort)?;
        let curve = hourly_curve(&preds, ev.alignment, ev.horizon, ev.bootstrap_iterations, seed)?;
        write_text(&a.out_dir.join(format!("auc_{name}.csv")), &auc_curve_csv(&curve))?;
        let last = roc_auc(&preds.last(), &preds.labels)?;
        let _ = writeln!(summary, "{name},{},{last}", mean_auc(&curve));
        eprintln!("{name:<12} mean AUC {:.4}  final-hour AUC {last:.4}", mean_auc(&curve));
        if *name == "gru" {
            let strat = stratified_mean_prob(&preds, ev.alignment, ev.horizon, ev.bootstrap_iterations, seed)?;
            write_text(&a.out_dir.join("stratified_gru.csv"), &stratified_csv(&strat))?;
        }
    }
    write_text(&a.out_dir.join("summary.csv"), &summary)
}

fn run_compare(cfg: &RunConfig, a: &CompareArgs) -> Result<()> {
    require_file(&a.cohort)?;
    if let Some(t) = &a.train_cohort {
        require_file(t)?;
    }
    ensure_dir(&a.out_dir)?;
    let sa = scorer_named(cfg, &a.a, &a.train_cohort)?;
    let sb = scorer_named(cfg, &a.b, &a.train_cohort)?;
    let cohort = load_cohort(&a.cohort)?;
    let (pa, pb) = (sa.predictions(&cohort)?, sb.predictions(&cohort)?);
    let ev = &cfg.evaluation;
    let seed = cfg.eval_seed();
    let points = compare_models(&pa, &pb, ev.alignment, ev.horizon, ev.bootstrap_iterations, seed)?;
    write_text(&a.out_dir.join("comparison.csv"), &comparison_csv(&points))?;
    let m = compare_mean_auc(&pa, &pb, ev.alignment, ev.horizon, ev.bootstrap_iterations, seed)?;
    write_text(&a.out_dir.join("mean_comparison.csv"), &mean_comparison_csv(&m))?;
    eprintln!(
        "mean AUC {:.4} vs {:.4}: difference {:.4} [{:.4}, {:.4}], p = {}",
        m.mean_auc_a, m.mean_auc_b, m.difference, m.ci_lo, m.ci_hi, m.p_value
    );
    Ok(())
}
