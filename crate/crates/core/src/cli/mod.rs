//! The `agentprint` command line. Every subcommand writes into a run
//! directory: `manifest.json`, `report.json`, `report.txt` and, on request,
//! `plot.csv`.

pub mod args;
pub mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

pub use args::{Cli, Command};
use args::*;
pub use manifest::{hash_path, RunManifest, MANIFEST_FILE};

use crate::classifiers::{load_model, save_model, train, Classifier, Hyperparams, Registry, TrainedModel, Tuning};
use crate::dataset::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::evaluation::report::{fmt, Report, Table, Tabulate, SCHEMA_VERSION};
use crate::evaluation::{
    closed_set_eval, mean_trace_length, open_set_eval, permutation_importance, training_fraction_curve,
    truncation_curve, Truncation,
};
use crate::features::catalog_hash;
use crate::ingest::{
    build_dataset, class_names_of, featurize, read_csv, scan_corpus_as, traces_in_split, write_csv, CorpusScan,
    EpisodeFormat, SplitManifest, SPLIT_MANIFEST,
};
use crate::perturbation::{delay_robustness_experiment, inject_delays, DelayBudget};
use crate::simulator::{generate_corpus, suites, ProfileSet, SplitSizes, PROFILES_FILE};
use crate::trace::Trace;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const PLOT_CSV: &str = "plot.csv";
pub const MODEL_FILE: &str = "models/model.json";

/// Prefix lengths as fractions of the mean test trace length, used when no
/// explicit `--ks` is given.
const DEFAULT_K_FRACTIONS: [f64; 8] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0];

/// Key/value summary for subcommands without a dedicated result type.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct Summary(Map<String, Value>);

impl Summary {
    fn new() -> Self {
        Summary(Map::new())
    }

    fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.0.insert(key.into(), serde_json::to_value(value).expect("summary values serialize"));
        self
    }
}

impl Tabulate for Summary {
    fn table(&self) -> Table {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in &self.0 {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.as_f64().filter(|x| x.fract() != 0.0).map(fmt).unwrap_or_else(|| n.to_string()),
                Value::Array(items) if items.iter().all(Value::is_string) => {
                    items.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(",")
                }
                other => other.to_string(),
            };
            t.push(vec![k.clone(), clip(text)]);
        }
        t
    }
}

/// Long values are left to the JSON report.
fn clip(mut text: String) -> String {
    const MAX: usize = 60;
    if text.chars().count() > MAX {
        text = text.chars().take(MAX - 3).collect::<String>() + "...";
    }
    text
}

struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    emit_plot: bool,
}

impl Run {
    fn start<A: Serialize>(command: &str, args: &A, seed: Option<u64>, output: &OutputArgs) -> Result<Self> {
        fs::create_dir_all(&output.out).map_err(|e| Error::io(&output.out, e))?;
        let config = serde_json::to_value(args).expect("arguments serialize");
        Ok(Run {
            dir: output.out.clone(),
            manifest: RunManifest::new(command, seed, config),
            emit_plot: output.emit_plot_data,
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_input(path)
    }

    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(rel.to_string());
        Ok(path)
    }

    fn finish(mut self, report: Report) -> Result<()> {
        self.write(REPORT_JSON, report.to_json_string().as_bytes())?;
        let mut text = report.to_text();
        text.push('\n');
        self.write(REPORT_TEXT, text.as_bytes())?;
        if self.emit_plot {
            let mut buf = Vec::new();
            report.table.write_csv(&mut buf)?;
            self.write(PLOT_CSV, &buf)?;
        }
        self.manifest.save(&self.dir)?;
        print!("{text}");
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let registry = Registry::builtin();
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ingest(a) => ingest(a),
        Command::Featurize(a) => featurize_cmd(a),
        Command::Train(a) => train_cmd(a, &registry),
        Command::EvalClosed(a) => eval_closed(a),
        Command::EvalOpen(a) => eval_open(a, &registry),
        Command::Importance(a) => importance(a),
        Command::Curves(a) => curves(a, &registry),
        Command::Perturb(a) => perturb(a),
        Command::Report(a) => report(a),
    }
}

fn episode_format(f: FormatArg) -> EpisodeFormat {
    match f {
        FormatArg::Native => EpisodeFormat::Native,
        FormatArg::Released => EpisodeFormat::Released,
    }
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

fn scan(run: &mut Run, root: &Path, dataset: Option<&str>, format: FormatArg) -> Result<CorpusScan> {
    run.input(root)?;
    let scan = scan_corpus_as(root, dataset, episode_format(format))?;
    for (path, err) in &scan.errors {
        log::warn!("skipping {}: {err}", path.display());
    }
    for (path, w) in &scan.warnings {
        log::warn!("{}: {w}", path.display());
    }
    if scan.traces.is_empty() {
        return Err(Error::Config(format!("no episodes found under {}", root.display())));
    }
    Ok(scan)
}

fn split_plan(run: &mut Run, root: &Path, explicit: Option<&Path>) -> Result<BTreeMap<String, Split>> {
    let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| root.join(SPLIT_MANIFEST));
    if explicit.is_some() {
        run.input(&path)?;
    }
    Ok(SplitManifest::load(&path)?.splits)
}

/// `dir/features/<split>.csv` for a featurize run, else `dir/<split>.csv`.
fn features_file(dir: &Path, split: Split) -> PathBuf {
    let nested = dir.join("features").join(format!("{split}.csv"));
    if nested.exists() {
        nested
    } else {
        dir.join(format!("{split}.csv"))
    }
}

fn load_features(run: &mut Run, dir: &Path, split: Split) -> Result<LabeledDataset> {
    let path = features_file(dir, split);
    run.input(&path)?;
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    read_csv(file, split)
}

fn load_trained(run: &mut Run, path: &Path) -> Result<TrainedModel> {
    run.input(path)?;
    load_model(path)
}

fn tuning(run: &mut Run, t: &TuningArgs, registry: &Registry) -> Result<Tuning> {
    let trainer = registry.get(&t.model)?;
    if t.search {
        if t.folds < 2 {
            return Err(Error::Config("--folds must be at least 2".into()));
        }
        return Ok(Tuning::Search { folds: t.folds });
    }
    match &t.config {
        Some(path) => {
            run.input(path)?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let config: Hyperparams = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: bad hyperparameters: {e}", path.display())))?;
            Ok(Tuning::Fixed(config))
        }
        None => Ok(Tuning::Fixed(trainer.default_config())),
    }
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut run = Run::start("simulate", a, Some(a.seed), &a.output)?;
    let (name, profiles) = match (&a.suite, &a.profiles) {
        (Some(s), _) => (s.clone(), suites::suite(s)?),
        (None, Some(p)) => {
            run.input(p)?;
            (p.display().to_string(), ProfileSet::load(p)?)
        }
        (None, None) => return Err(Error::Config("either --suite or --profiles is required".into())),
    };
    let sizes = SplitSizes::new(a.train, a.val, a.test);
    if sizes.total() == 0 {
        return Err(Error::Config("at least one episode per agent is required".into()));
    }
    let corpus = generate_corpus(&profiles, sizes, &run.dir, a.seed)?;
    run.manifest.outputs.extend([SPLIT_MANIFEST.to_string(), PROFILES_FILE.to_string()]);
    let mut s = Summary::new();
    s.set("source", name)
        .set("agents", profiles.agents.iter().map(|p| p.agent_id.clone()).collect::<Vec<_>>())
        .set("episodes", corpus.traces.len())
        .set("train_per_agent", a.train)
        .set("val_per_agent", a.val)
        .set("test_per_agent", a.test)
        .set("mean_events", mean_trace_length(&corpus.traces));
    run.finish(Report::new("simulate", &s))
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let mut run = Run::start("ingest", a, None, &a.output)?;
    run.input(&a.corpus)?;
    let scan = scan_corpus_as(&a.corpus, a.dataset.as_deref(), episode_format(a.format))?;
    let mut per_agent: BTreeMap<String, usize> = BTreeMap::new();
    for t in &scan.traces {
        *per_agent.entry(t.meta().agent_id.clone()).or_default() += 1;
    }
    let errors: Vec<Value> = scan
        .errors
        .iter()
        .map(|(p, e)| json!({ "path": relative(&a.corpus, p), "error": e.kind(), "message": e.to_string() }))
        .collect();
    let warnings: Vec<Value> = scan
        .warnings
        .iter()
        .map(|(p, w)| json!({ "path": relative(&a.corpus, p), "message": w }))
        .collect();
    if a.normalize {
        for (trace, path) in scan.traces.iter().zip(&scan.paths) {
            let rel = relative(&a.corpus, path);
            run.write(&rel, trace.to_json_string().as_bytes())?;
        }
        let manifest = a.corpus.join(SPLIT_MANIFEST);
        if manifest.exists() {
            let bytes = fs::read(&manifest).map_err(|e| Error::io(&manifest, e))?;
            run.write(SPLIT_MANIFEST, &bytes)?;
        }
    }
    let mut s = Summary::new();
    s.set("parsed", scan.traces.len())
        .set("failed", errors.len())
        .set("warnings", warnings.len())
        .set("episodes_per_agent", per_agent)
        .set("errors", errors)
        .set("warning_details", warnings);
    run.finish(Report::new("ingest", &s))
}

fn featurize_cmd(a: &FeaturizeArgs) -> Result<()> {
    let mut run = Run::start("featurize", a, None, &a.output)?;
    let c = &a.corpus;
    let scan = scan(&mut run, &c.corpus, c.dataset.as_deref(), c.format)?;
    let plan = split_plan(&mut run, &c.corpus, c.splits.as_deref())?;
    let data = build_dataset(&scan.traces, &plan)?;
    let mut s = Summary::new();
    s.set("catalog_hash", catalog_hash()).set("classes", data.train.class_names());
    for split in Split::ALL {
        let ds = data.get(split);
        let mut buf = Vec::new();
        write_csv(ds, &mut buf)?;
        run.write(&format!("features/{split}.csv"), &buf)?;
        s.set(&format!("{split}_rows"), ds.len());
    }
    s.set("skipped_files", scan.errors.len());
    run.finish(Report::new("featurize", &s))
}

fn train_cmd(a: &TrainArgs, registry: &Registry) -> Result<()> {
    let mut run = Run::start("train", a, Some(a.seed), &a.output)?;
    let data = load_features(&mut run, &a.features, Split::Train)?;
    let trainer = registry.get(&a.tuning.model)?;
    let tuning = tuning(&mut run, &a.tuning, registry)?;
    let model = train(trainer, &data, &tuning, a.seed)?;
    let path = run.dir.join(MODEL_FILE);
    fs::create_dir_all(path.parent().expect("model path has a parent")).map_err(|e| Error::io(&path, e))?;
    save_model(&model, &path)?;
    run.manifest.outputs.push(MODEL_FILE.to_string());
    let correct = data.rows().iter().zip(data.labels()).filter(|(r, &l)| model.predict(r.as_slice()) == l).count();
    let mut s = Summary::new();
    s.set("family", &model.family)
        .set("searched", a.tuning.search)
        .set("train_rows", data.len())
        .set("classes", &model.class_names)
        .set("train_accuracy", correct as f64 / data.len() as f64)
        .set("referenced_features", model.referenced_features().len())
        .set("config", &model.config);
    run.finish(Report::new("train", &s))
}

fn eval_closed(a: &EvalClosedArgs) -> Result<()> {
    let mut run = Run::start("eval-closed", a, None, &a.output)?;
    let split: Split = a.split.parse()?;
    let model = load_trained(&mut run, &a.model_file)?;
    let data = load_features(&mut run, &a.features, split)?;
    let result = closed_set_eval(&model, &data)?;
    run.finish(Report::new("closed-set", &result))
}

fn eval_open(a: &EvalOpenArgs, registry: &Registry) -> Result<()> {
    let mut run = Run::start("eval-open", a, Some(a.seed), &a.output)?;
    let train_set = load_features(&mut run, &a.features, Split::Train)?;
    let test_set = load_features(&mut run, &a.features, Split::Test)?;
    let trainer = registry.get(&a.tuning.model)?;
    let tuning = tuning(&mut run, &a.tuning, registry)?;
    let result = open_set_eval(&train_set, &test_set, &a.heldout, trainer, &tuning, a.seed)?;
    run.finish(Report::new("open-set", &result))
}

fn importance(a: &ImportanceArgs) -> Result<()> {
    let mut run = Run::start("importance", a, Some(a.seed), &a.output)?;
    let split: Split = a.split.parse()?;
    let model = load_trained(&mut run, &a.model_file)?;
    let data = load_features(&mut run, &a.features, split)?;
    let result = permutation_importance(&model, &data, a.repeats, a.seed)?;
    run.finish(Report::new("importance", &result))
}

fn default_ks(test: &[Trace]) -> Vec<usize> {
    let mean = mean_trace_length(test);
    let mut ks: Vec<usize> = DEFAULT_K_FRACTIONS.iter().map(|f| ((f * mean).round() as usize).max(1)).collect();
    ks.dedup();
    ks
}

fn curves(a: &CurvesArgs, registry: &Registry) -> Result<()> {
    let mut run = Run::start("curves", a, Some(a.seed), &a.output)?;
    let trainer = registry.get(&a.tuning.model)?;
    let tuning = tuning(&mut run, &a.tuning, registry)?;
    if a.kind == CurveKind::Fraction {
        let dir = a
            .features
            .as_ref()
            .ok_or_else(|| Error::Config("fraction curves need --features".into()))?;
        let train_set = load_features(&mut run, dir, Split::Train)?;
        let test_set = load_features(&mut run, dir, Split::Test)?;
        let points = training_fraction_curve(&train_set, &test_set, &a.fractions, trainer, &tuning, a.seed)?;
        return run.finish(Report::new("curve-fraction", points.as_slice()));
    }

    let root = a
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("truncation and delay curves need --corpus".into()))?;
    let scan = scan(&mut run, root, a.dataset.as_deref(), a.format)?;
    let plan = split_plan(&mut run, root, a.splits.as_deref())?;
    let class_names = class_names_of(&scan.traces);
    let train_traces = traces_in_split(&scan.traces, &plan, Split::Train)?;
    let test_traces = traces_in_split(&scan.traces, &plan, Split::Test)?;
    let ks = if a.ks.is_empty() { default_ks(&test_traces) } else { a.ks.clone() };

    match a.kind {
        CurveKind::Fraction => unreachable!("handled above"),
        CurveKind::TruncationTest => {
            let model = match &a.model_file {
                Some(p) => load_trained(&mut run, p)?,
                None => train(trainer, &featurize(&train_traces, &class_names, Split::Train)?, &tuning, a.seed)?,
            };
            let points = truncation_curve(&Truncation::TestSide { model: &model }, &test_traces, &ks)?;
            run.finish(Report::new("curve-truncation-test", points.as_slice()))
        }
        CurveKind::TruncationTrain => {
            let mode = Truncation::TrainSide {
                train: &train_traces,
                class_names: &class_names,
                trainer,
                tuning: &tuning,
                seed: a.seed,
            };
            let points = truncation_curve(&mode, &test_traces, &ks)?;
            run.finish(Report::new("curve-truncation-train", points.as_slice()))
        }
        CurveKind::Delay => {
            let mut budgets = a.budgets.clone();
            budgets.sort_unstable();
            budgets.dedup();
            let rows =
                delay_robustness_experiment(&train_traces, &test_traces, &class_names, &budgets, trainer, &tuning, a.seed)?;
            run.finish(Report::new("curve-delay", rows.as_slice()))
        }
    }
}

fn perturb(a: &PerturbArgs) -> Result<()> {
    let mut run = Run::start("perturb", a, Some(a.seed), &a.output)?;
    let budget = DelayBudget::new(a.max_delay_ms)?;
    let scan = scan(&mut run, &a.corpus, a.dataset.as_deref(), a.format)?;
    for (trace, path) in scan.traces.iter().zip(&scan.paths) {
        let delayed = inject_delays(trace, budget, a.seed);
        run.write(&relative(&a.corpus, path), delayed.to_json_string().as_bytes())?;
    }
    for extra in [SPLIT_MANIFEST, PROFILES_FILE] {
        let src = a.corpus.join(extra);
        if src.exists() {
            let bytes = fs::read(&src).map_err(|e| Error::io(&src, e))?;
            run.write(extra, &bytes)?;
        }
    }
    let mut s = Summary::new();
    s.set("episodes", scan.traces.len())
        .set("max_delay_ms", a.max_delay_ms)
        .set("skipped_files", scan.errors.len());
    run.finish(Report::new("perturb", &s))
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut runs = Vec::new();
    let mut text = String::new();
    let mut manifest = RunManifest::new("report", None, serde_json::to_value(a).expect("arguments serialize"));
    for dir in &a.runs {
        let path = dir.join(REPORT_JSON);
        manifest.add_input(&path)?;
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let value: Value = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: unreadable report: {e}", path.display())))?;
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let rendered = fs::read_to_string(dir.join(REPORT_TEXT)).unwrap_or_default();
        text.push_str(&format!("== {name}\n{rendered}\n"));
        runs.push(json!({ "run": name, "report": value }));
    }
    print!("{text}");
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let summary = json!({ "schema_version": SCHEMA_VERSION, "kind": "summary", "result": { "runs": runs } });
        let mut body = serde_json::to_string_pretty(&summary).expect("summary JSON");
        body.push('\n');
        for (name, contents) in [("summary.json", body.as_str()), ("summary.txt", text.as_str())] {
            let path = out.join(name);
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
            manifest.outputs.push(name.to_string());
        }
        manifest.save(out)?;
    }
    Ok(())
}
