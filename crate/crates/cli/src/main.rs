//! `fuzzyrec`: generate data, train rule networks, evaluate, explain and self-check.

mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use fuzzyrec::atoms::{AtomCatalog, CatalogKind, Statistic};
use fuzzyrec::config::RunConfig;
use fuzzyrec::data::{rules_fired, write_synthetic_csv, SupportMode, SyntheticConfig};
use fuzzyrec::evaluation::MetricsReport;
use fuzzyrec::explain::{
    describe_rule, duplicate_rules, export_weights, extract_rules, render_horn, weight_distribution, HornStyle,
    DEFAULT_DISPLAY_THRESHOLD,
};
use fuzzyrec::gradcheck::{run_gradcheck, GradcheckConfig};
use fuzzyrec::pipeline::{evaluate_model, recovers_planted_rules, repeat_baseline, repeat_model, Prepared};
use fuzzyrec::{Checkpoint, Network, TrainedModel};

use output::OutDir;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fuzzyrec", version, about = "Fuzzy rule networks for transparent recommendation")]
struct Cli {
    /// Worker threads for atomization and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory receiving every output file and the manifest.
    #[arg(long, global = true, default_value = "out", alias = "out_dir")]
    out_dir: PathBuf,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic corpus as CSV.
    Synth(SynthArgs),
    /// Build atoms, train a rule network and write a checkpoint.
    Train(TrainArgs),
    /// Rank test items and report precision, recall, NDCG and MAP.
    Eval(EvalArgs),
    /// Print the learned rules as Horn clauses and export the weights.
    Explain(ExplainArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Reproduce a results table with its published hyperparameters.
    Repro(ReproArgs),
}

/// One flag per configuration key, named exactly like the key.
#[derive(Debug, Args, Default)]
struct ConfigArgs {
    /// Key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long = "learning_rate", alias = "learning-rate")]
    learning_rate: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Samples per gradient step, or `full`.
    #[arg(long = "batch_size", alias = "batch-size")]
    batch_size: Option<String>,
    /// Model seed; run r of a repeated evaluation uses seed + r.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "init_half_width", alias = "init-half-width")]
    init_half_width: Option<String>,
    #[arg(long = "adam_beta1", alias = "adam-beta1")]
    adam_beta1: Option<String>,
    #[arg(long = "adam_beta2", alias = "adam-beta2")]
    adam_beta2: Option<String>,
    #[arg(long = "adam_eps", alias = "adam-eps")]
    adam_eps: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// `rated` (the user's test items) or `all`.
    #[arg(long)]
    candidates: Option<String>,
    /// Seed of the synthetic corpus and its split.
    #[arg(long = "data_seed", alias = "data-seed")]
    data_seed: Option<String>,
    #[arg(long = "synthetic_samples", alias = "synthetic-samples")]
    synthetic_samples: Option<String>,
    #[arg(long = "synthetic_support", alias = "synthetic-support")]
    synthetic_support: Option<String>,
    /// Directory holding ratings.dat, users.dat and movies.dat.
    #[arg(long = "movielens_dir", alias = "movielens-dir")]
    movielens_dir: Option<String>,
    /// Train, validation and test fractions, e.g. `0.7,0.1,0.2`.
    #[arg(long)]
    split: Option<String>,
    #[arg(long = "bias_epochs", alias = "bias-epochs")]
    bias_epochs: Option<String>,
    #[arg(long = "bias_reg_items", alias = "bias-reg-items")]
    bias_reg_items: Option<String>,
    #[arg(long = "bias_reg_users", alias = "bias-reg-users")]
    bias_reg_users: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("dataset", &self.dataset),
            ("learning_rate", &self.learning_rate),
            ("epochs", &self.epochs),
            ("lambda", &self.lambda),
            ("batch_size", &self.batch_size),
            ("seed", &self.seed),
            ("init_half_width", &self.init_half_width),
            ("adam_beta1", &self.adam_beta1),
            ("adam_beta2", &self.adam_beta2),
            ("adam_eps", &self.adam_eps),
            ("runs", &self.runs),
            ("candidates", &self.candidates),
            ("data_seed", &self.data_seed),
            ("synthetic_samples", &self.synthetic_samples),
            ("synthetic_support", &self.synthetic_support),
            ("movielens_dir", &self.movielens_dir),
            ("split", &self.split),
            ("bias_epochs", &self.bias_epochs),
            ("bias_reg_items", &self.bias_reg_items),
            ("bias_reg_users", &self.bias_reg_users),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    fn resolve(&self, extra: Vec<(String, String)>) -> Result<RunConfig> {
        let mut overrides = extra;
        overrides.extend(self.overrides());
        Ok(RunConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "synthetic_samples", alias = "samples", default_value_t = SyntheticConfig::default().samples)]
    synthetic_samples: usize,
    #[arg(long = "synthetic_support", alias = "support", value_enum, default_value_t = Support::Exclusive)]
    synthetic_support: Support,
    /// CSV file name inside the output directory.
    #[arg(long, default_value = "synthetic.csv")]
    out: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Support {
    Exclusive,
    Overlapping,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of rules.
    #[arg(long = "k", alias = "rules")]
    rules: Option<String>,
    #[arg(long = "out-checkpoint", alias = "out_checkpoint", default_value = "model.ckpt")]
    out_checkpoint: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Baseline {
    Bias,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Evaluate this trained model instead of training one per seed.
    #[arg(long, conflicts_with = "baseline")]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Ranking cutoffs, e.g. `5,10`.
    #[arg(long = "k", alias = "ks")]
    ks: Option<String>,
    /// Number of rules when training from scratch.
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Smallest fuzzy weight shown in a rule body.
    #[arg(long, default_value_t = DEFAULT_DISPLAY_THRESHOLD)]
    threshold: f64,
    /// Render `A AND B -> RELEVANT` instead of `A ∧ B → RELEVANT`.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReproArgs {
    /// 2: synthetic weight matrix, 3: MovieLens rules, 4: ranking metrics.
    #[arg(long = "paper-table", alias = "table", value_parser = clap::value_parser!(u8).range(2..=4))]
    paper_table: u8,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long = "k", alias = "rules")]
    rules: Option<String>,
    #[arg(long = "ks")]
    ks: Option<String>,
}

/// A self-check ran and failed.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain joined by `: `, skipping causes already quoted by
/// the message before them.
fn error_message(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<CheckFailed>().is_some() {
        return EXIT_CHECK;
    }
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<fuzzyrec::Error>() {
            return if err.is_data_error() { EXIT_DATA } else { EXIT_USAGE };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(fuzzyrec::Error::Config("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot size the thread pool")?;
    }
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Synth(args) => synth(args, out),
        Command::Train(args) => train(args, out),
        Command::Eval(args) => eval(args, out),
        Command::Explain(args) => explain(args, out),
        Command::Gradcheck(args) => gradcheck(args),
        Command::Repro(args) => repro(args, out),
    }
}

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn synth(args: SynthArgs, out_dir: &Path) -> Result<()> {
    let cfg = SyntheticConfig {
        samples: args.synthetic_samples,
        support: match args.synthetic_support {
            Support::Exclusive => SupportMode::Exclusive,
            Support::Overlapping => SupportMode::Overlapping,
        },
        seed: args.seed,
        ..SyntheticConfig::default()
    };
    println!("seed: {}", args.seed);
    let samples = cfg.generate();
    let mut csv = Vec::new();
    write_synthetic_csv(&samples, &mut csv)?;
    let mut out = OutDir::create(out_dir, "synth", Some(args.seed))?;
    let path = out.write(&args.out, &csv)?;
    out.finish()?;

    let positives = samples.iter().filter(|s| s.label).count();
    let mut support = [0usize; 3];
    for s in samples.iter().filter(|s| s.label) {
        for (count, fired) in support.iter_mut().zip(rules_fired(&s.atoms)) {
            *count += usize::from(fired);
        }
    }
    println!("samples: {}", samples.len());
    println!("positive rate: {:.4}", positives as f64 / samples.len().max(1) as f64);
    println!("support HIGH: {}", support[0]);
    println!("support RECENT ∧ GENRE: {}", support[1]);
    println!("support RECENT ∧ CAST ∧ DIRECTOR: {}", support[2]);
    println!("wrote {}", path.display());
    Ok(())
}

fn record_inputs(out: &mut OutDir, args: &ConfigArgs, cfg: &RunConfig) -> Result<()> {
    if let Some(path) = &args.config {
        out.input(path)?;
    }
    if cfg.dataset == CatalogKind::MovieLens {
        if let Some(dir) = &cfg.movielens_dir {
            for name in ["ratings.dat", "users.dat", "movies.dat"] {
                out.input(&dir.join(name))?;
            }
        }
    }
    Ok(())
}

fn loss_csv(model: &TrainedModel) -> String {
    let h = &model.history;
    let mut s = String::from("epoch,train_loss,validation_loss\n");
    for (e, loss) in h.train_loss.iter().enumerate() {
        let val = h.validation_loss.get(e).map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{loss},{val}", e + 1);
    }
    s
}

fn thresholds_csv(model: &TrainedModel) -> Option<String> {
    let sel = model.selection.as_ref()?;
    let mut s = String::from("statistic,threshold,score,retained\n");
    for (stat, t, score) in &sel.scores {
        let retained = sel.thresholds[Statistic::ALL.iter().position(|x| x == stat).expect("known statistic")] == *t;
        let _ = writeln!(s, "{},{t},{score},{retained}", stat.id());
    }
    Some(s)
}

/// Writes checkpoint, catalog, loss curve, resolved config and thresholds.
fn save_model(out: &mut OutDir, model: &TrainedModel, cfg: &RunConfig, checkpoint_name: &str) -> Result<()> {
    let mut buf = Vec::new();
    model.checkpoint()?.write(&mut buf)?;
    out.write(checkpoint_name, &buf)?;
    let mut tsv = Vec::new();
    model.catalog.write_tsv(&mut tsv)?;
    out.write("catalog.tsv", &tsv)?;
    out.write("loss.csv", loss_csv(model).as_bytes())?;
    out.write("config.txt", cfg.to_text().as_bytes())?;
    if let Some(csv) = thresholds_csv(model) {
        out.write("thresholds.csv", csv.as_bytes())?;
    }
    Ok(())
}

fn print_losses(model: &TrainedModel) {
    if let Some(l) = model.history.train_loss.last() {
        println!("final train loss: {l:.6}");
    }
    if let Some(l) = model.history.validation_loss.last() {
        println!("final validation loss: {l:.6}");
    }
    if let Some(sel) = &model.selection {
        for (stat, t) in Statistic::ALL.iter().zip(sel.thresholds) {
            println!("threshold {}: {t}", stat.label());
        }
    }
}

fn train(args: TrainArgs, out_dir: &Path) -> Result<()> {
    let extra = args.rules.iter().map(|k| kv("k", k)).collect();
    let cfg = args.config.resolve(extra)?;
    println!("seed: {}", cfg.train.seed);
    let mut out = OutDir::create(out_dir, "train", Some(cfg.train.seed))?;
    record_inputs(&mut out, &args.config, &cfg)?;
    let prepared = Prepared::load(&cfg)?;
    let model = prepared.train::<f64>(&cfg.train_config())?;
    save_model(&mut out, &model, &cfg, &args.out_checkpoint)?;
    out.finish()?;
    print_losses(&model);
    println!("wrote {}", out_dir.join(&args.out_checkpoint).display());
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<(Network, AtomCatalog)> {
    let ckpt = Checkpoint::load(path)?;
    let catalog = AtomCatalog::from_names(&ckpt.atom_names)?;
    Ok((ckpt.network, catalog))
}

fn eval(args: EvalArgs, out_dir: &Path) -> Result<()> {
    let mut extra: Vec<(String, String)> = Vec::new();
    let loaded = args.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    if let Some((_, catalog)) = &loaded {
        let kind = if catalog == &AtomCatalog::synthetic() {
            CatalogKind::Synthetic
        } else {
            CatalogKind::MovieLens
        };
        extra.push(kv("dataset", kind));
    }
    if args.baseline.is_some() {
        extra.push(kv("dataset", CatalogKind::MovieLens));
    }
    extra.extend(args.ks.iter().map(|v| kv("ks", v)));
    extra.extend(args.rules.iter().map(|v| kv("k", v)));
    let cfg = args.config.resolve(extra)?;
    println!("seed: {}", cfg.train.seed);

    let mut out = OutDir::create(out_dir, "eval", Some(cfg.train.seed))?;
    record_inputs(&mut out, &args.config, &cfg)?;
    if let Some(path) = &args.checkpoint {
        out.input(path)?;
    }
    let prepared = Prepared::load(&cfg)?;
    let report = match (&loaded, args.baseline) {
        (Some((net, catalog)), _) => MetricsReport::from_runs(&[evaluate_model(&prepared, net, catalog, &cfg)?])?,
        (None, Some(Baseline::Bias)) => repeat_baseline(&prepared, &cfg)?,
        (None, None) => repeat_model::<f64>(&prepared, &cfg)?,
    };
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write("metrics.csv", &csv)?;
    out.write("config.txt", cfg.to_text().as_bytes())?;
    out.finish()?;
    print!("{report}");
    Ok(())
}

fn rules_text(net: &Network, catalog: &AtomCatalog, threshold: f64, style: HornStyle) -> Result<String> {
    let rules = extract_rules(net, catalog, threshold)?;
    let mut s = String::new();
    for rule in &rules {
        let _ = writeln!(s, "{}", describe_rule(rule));
        let _ = writeln!(s, "    {}", render_horn(rule, style));
    }
    for (a, b) in duplicate_rules(&rules) {
        let _ = writeln!(s, "R{} and R{} use the same atoms", a + 1, b + 1);
    }
    Ok(s)
}

/// Writes `weights.csv` and `weight_distribution.csv`, returning the
/// distribution summary text.
fn export_explanation(out: &mut OutDir, net: &Network, catalog: &AtomCatalog) -> Result<String> {
    let mut weights = Vec::new();
    export_weights(net, catalog, &mut weights)?;
    out.write("weights.csv", &weights)?;
    let dist = weight_distribution(net);
    let mut csv = Vec::new();
    dist.write_csv(catalog, &mut csv)?;
    out.write("weight_distribution.csv", &csv)?;
    Ok(format!(
        "fuzzy weights: median {:.3}, q3 {:.3}, max {:.3}; {:.1}% below {}\n",
        dist.median,
        dist.q3,
        dist.max,
        100.0 * dist.fraction_below_display,
        DEFAULT_DISPLAY_THRESHOLD
    ))
}

fn explain(args: ExplainArgs, out_dir: &Path) -> Result<()> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(fuzzyrec::Error::Config(format!("--threshold must lie in [0, 1], got {}", args.threshold)).into());
    }
    let (net, catalog) = load_checkpoint(&args.checkpoint)?;
    let style = if args.ascii { HornStyle::Ascii } else { HornStyle::Unicode };
    let text = rules_text(&net, &catalog, args.threshold, style)?;
    let mut out = OutDir::create(out_dir, "explain", None)?;
    out.input(&args.checkpoint)?;
    out.write("rules.txt", text.as_bytes())?;
    let summary = export_explanation(&mut out, &net, &catalog)?;
    out.finish()?;
    print!("{text}{summary}");
    Ok(())
}

fn gradcheck(args: GradcheckArgs) -> Result<()> {
    println!("seed: {}", args.seed);
    let report = run_gradcheck(&GradcheckConfig {
        trials: args.trials,
        tolerance: args.tolerance,
        seed: args.seed,
        ..GradcheckConfig::default()
    })?;
    println!(
        "{} trials, {} gradient entries, max error {:.3e} (tolerance {:e})",
        report.trials, report.entries, report.max_error, args.tolerance
    );
    for (trial, i, j, analytic, numeric) in report.failures.iter().take(10) {
        println!("trial {trial} dW[{i}][{j}]: analytic {analytic:e}, numeric {numeric:e}");
    }
    if !report.passed() {
        return Err(CheckFailed(format!("{} gradient entries exceed the tolerance", report.failures.len())).into());
    }
    println!("ok");
    Ok(())
}

fn weight_table(net: &Network, catalog: &AtomCatalog) -> String {
    let fuzzy = net.fuzzify();
    let names = catalog.names();
    let mut s = format!("{:<6}", "rule");
    for name in &names {
        let _ = write!(s, " {name:>9}");
    }
    s.push('\n');
    for i in 0..net.rules() {
        let _ = write!(s, "{:<6}", format!("R{}", i + 1));
        for w in fuzzy.row(i) {
            let _ = write!(s, " {w:>9.3}");
        }
        s.push('\n');
    }
    s
}

fn repro(args: ReproArgs, out_dir: &Path) -> Result<()> {
    let resolve = |dataset: CatalogKind| {
        let mut extra = vec![kv("dataset", dataset)];
        extra.extend(args.rules.iter().map(|v| kv("k", v)));
        extra.extend(args.ks.iter().map(|v| kv("ks", v)));
        args.config.resolve(extra)
    };
    if args.config.dataset.is_some() {
        bail!(fuzzyrec::Error::Config("repro chooses the dataset from --paper-table".into()));
    }
    match args.paper_table {
        2 => {
            let cfg = resolve(CatalogKind::Synthetic)?;
            println!("seed: {}", cfg.train.seed);
            let mut out = OutDir::create(out_dir, "repro-2", Some(cfg.train.seed))?;
            record_inputs(&mut out, &args.config, &cfg)?;
            let model = Prepared::load(&cfg)?.train::<f64>(&cfg.train_config())?;
            save_model(&mut out, &model, &cfg, "model.ckpt")?;
            let text = rules_text(&model.network, &model.catalog, DEFAULT_DISPLAY_THRESHOLD, HornStyle::Unicode)?;
            export_explanation(&mut out, &model.network, &model.catalog)?;
            out.finish()?;
            print!("{}", weight_table(&model.network, &model.catalog));
            print!("{text}");
            let recovered = recovers_planted_rules(&model.network);
            println!("planted rules recovered: {}", if recovered { "yes" } else { "no" });
            print_losses(&model);
        }
        3 => {
            let cfg = resolve(CatalogKind::MovieLens)?;
            println!("seed: {}", cfg.train.seed);
            let mut out = OutDir::create(out_dir, "repro-3", Some(cfg.train.seed))?;
            record_inputs(&mut out, &args.config, &cfg)?;
            let model = Prepared::load(&cfg)?.train::<f64>(&cfg.train_config())?;
            save_model(&mut out, &model, &cfg, "model.ckpt")?;
            let text = rules_text(&model.network, &model.catalog, DEFAULT_DISPLAY_THRESHOLD, HornStyle::Unicode)?;
            let summary = export_explanation(&mut out, &model.network, &model.catalog)?;
            out.finish()?;
            print!("{text}{summary}");
            print_losses(&model);
        }
        _ => {
            let syn = resolve(CatalogKind::Synthetic)?;
            println!("seed: {}", syn.train.seed);
            let mut out = OutDir::create(out_dir, "repro-4", Some(syn.train.seed))?;
            record_inputs(&mut out, &args.config, &syn)?;
            let report = repeat_model::<f64>(&Prepared::load(&syn)?, &syn)?;
            write_report(&mut out, "metrics_synthetic.csv", "synthetic, rule network", &report)?;
            let ml = resolve(CatalogKind::MovieLens)?;
            if ml.movielens_dir.is_some() {
                record_inputs(&mut out, &args.config, &ml)?;
                let prepared = Prepared::load(&ml)?;
                let report = repeat_model::<f64>(&prepared, &ml)?;
                write_report(&mut out, "metrics_movielens.csv", "MovieLens, rule network", &report)?;
                let report = repeat_baseline(&prepared, &ml)?;
                write_report(&mut out, "metrics_baseline.csv", "MovieLens, BaselineOnly", &report)?;
            } else {
                println!("MovieLens rows skipped: pass --movielens_dir");
            }
            out.finish()?;
        }
    }
    Ok(())
}

fn write_report(out: &mut OutDir, name: &str, title: &str, report: &MetricsReport) -> Result<()> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write(name, &csv)?;
    println!("{title}");
    print!("{report}");
    Ok(())
}
