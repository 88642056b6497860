//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bscope::baselines::{run_baseline_pairwise, Method};
use bscope::charmetrics::{
    characterize_pair, pair_label, write_pca_csv, write_reports_csv, Characterization, CharacterizationReport,
    PcaRow,
};
use bscope::data::{self, DatasetKind, LabeledDataset, Split};
use bscope::deepdig::{read_borderline, run_pairwise, write_borderline_dir, write_run_dir, RunSummary};
use bscope::io::{read_json, write_atomic, write_json_atomic};
use bscope::models::{build_model, train_classifier, Arch, ClassifierModel};
use bscope::{viz, Error};
use serde::{Deserialize, Serialize};

use crate::cli::Cli;
use crate::config::{RunConfig, DATA_DIR_ENV};

/// Why a command stopped. Usage and data problems exit with 2, everything
/// else with 1.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Run(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Data(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Run(other),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Resolves the configuration (defaults, then `--config`, then flags) and
/// runs the selected subcommand.
pub fn run(cli: Cli) -> Outcome<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    cli.command.apply(&mut cfg);
    cfg.resolve_data_dir();
    execute(&cfg)
}

/// Runs an already resolved configuration.
pub fn execute(cfg: &RunConfig) -> Outcome<()> {
    match cfg.command.as_str() {
        "train" => train(cfg),
        "deepdig" => deepdig_cmd(cfg),
        "baseline" => baseline(cfg),
        "characterize" => characterize(cfg),
        "characterize-all" => characterize_all(cfg),
        "viz" => viz_cmd(cfg),
        other => Err(usage(format!("unknown command `{other}`"))),
    }
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Outcome<&'a T> {
    value.as_ref().ok_or_else(|| usage(format!("missing required --{flag}")))
}

fn emit<T: Serialize>(value: &T) -> Outcome<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    Ok(())
}

fn save_config(dir: &Path, cfg: &RunConfig) -> Outcome<()> {
    Ok(write_json_atomic(&dir.join("config.json"), cfg)?)
}

fn default_dataset(arch: Arch) -> DatasetKind {
    match arch {
        Arch::Synthetic2d => DatasetKind::Synthetic,
        Arch::MnistCnn | Arch::MnistFcn => DatasetKind::Mnist,
    }
}

fn dataset_kind(cfg: &RunConfig, fallback: &str) -> Outcome<DatasetKind> {
    Ok(DatasetKind::parse(cfg.dataset.as_deref().unwrap_or(fallback))?)
}

/// Loads one split. A data root may hold the IDX files directly or one
/// subdirectory per dataset (`mnist/`, `fashion-mnist/`).
fn load_split(cfg: &RunConfig, kind: DatasetKind, split: Split) -> Outcome<LabeledDataset> {
    if kind == DatasetKind::Synthetic {
        return Ok(data::synthetic_standard(split)?);
    }
    let root = cfg.data_dir.as_ref().ok_or_else(|| {
        Failure::Data(format!("no data directory: pass --data-dir or set {DATA_DIR_ENV}"))
    })?;
    if !root.is_dir() {
        return Err(Failure::Data(format!("data directory {} does not exist", root.display())));
    }
    let nested = root.join(kind.name());
    let dir = if nested.is_dir() { nested } else { root.clone() };
    data::load_dir(&dir, kind, split).map_err(|e| Failure::Data(format!("loading {} data: {e}", kind.name())))
}

fn load_model(cfg: &RunConfig) -> Outcome<ClassifierModel> {
    let path = required(&cfg.model_ckpt, "model-ckpt")?;
    Ok(ClassifierModel::load(path)?)
}

fn class_of(ds: &LabeledDataset, name: &str) -> Outcome<usize> {
    Ok(data::resolve_class(ds.class_names(), name)?)
}

fn train(cfg: &RunConfig) -> Outcome<()> {
    let out = required(&cfg.out, "out")?;
    let arch = Arch::parse(&cfg.model)?;
    let kind = dataset_kind(cfg, default_dataset(arch).name())?;
    let train_ds = load_split(cfg, kind, Split::Train)?;
    let test_ds = load_split(cfg, kind, Split::Test)?;
    let mut model = build_model(arch, cfg.train.seed)?;
    model.set_dataset(kind.name());
    let report = train_classifier(&mut model, &train_ds, Some(&test_ds), &cfg.train)?;
    model.save(&out.join("model.json"))?;
    write_json_atomic(&out.join("train_report.json"), &report)?;
    save_config(out, cfg)?;
    emit(&report)
}

fn deepdig_cmd(cfg: &RunConfig) -> Outcome<()> {
    let out = required(&cfg.out, "out")?;
    let model = load_model(cfg)?;
    let kind = dataset_kind(cfg, model.dataset())?;
    let train_ds = load_split(cfg, kind, Split::Train)?;
    let s = class_of(&train_ds, required(&cfg.source, "source")?)?;
    let t = class_of(&train_ds, required(&cfg.target, "target")?)?;
    if s == t {
        return Err(usage(format!("--source and --target are the same class ({s})")));
    }
    if cfg.alpha_sweep.is_empty() {
        let summary = deepdig_once(cfg, &model, &train_ds, s, t, out)?;
        return emit(&summary);
    }
    let mut summaries = BTreeMap::new();
    for &alpha in &cfg.alpha_sweep {
        let mut one = cfg.clone();
        one.alpha_sweep.clear();
        one.deepdig.advgen.alpha = alpha;
        let dir = out.join(format!("alpha-{alpha}"));
        one.out = Some(dir.clone());
        log::info!("alpha {alpha}");
        let summary = deepdig_once(&one, &model, &train_ds, s, t, &dir)?;
        summaries.insert(format!("{alpha}"), summary.combined);
    }
    save_config(out, cfg)?;
    emit(&summaries)
}

fn deepdig_once(
    cfg: &RunConfig,
    model: &ClassifierModel,
    train_ds: &LabeledDataset,
    s: usize,
    t: usize,
    out: &Path,
) -> Outcome<RunSummary> {
    let result = run_pairwise(model, train_ds, s, t, &cfg.deepdig)?;
    write_run_dir(out, &result, model.input_shape())?;
    save_config(out, cfg)?;
    Ok(result.summary())
}

/// Pairs fed per direction by an earlier DeepDIG run, in `(a,b), (b,a)` order.
fn deepdig_budgets(summary: &RunSummary, a: usize, b: usize) -> Outcome<[usize; 2]> {
    let fed = |dir: (usize, usize)| {
        summary
            .directions
            .iter()
            .find(|d| d.direction == dir)
            .map(|d| d.stats.pairs_fed)
            .ok_or_else(|| usage(format!("stats.json has no direction {dir:?}")))
    };
    Ok([fed((a, b))?, fed((b, a))?])
}

fn baseline(cfg: &RunConfig) -> Outcome<()> {
    let out = required(&cfg.out, "out")?;
    let method = Method::parse(required(&cfg.method, "method")?)?;
    let model = load_model(cfg)?;
    let kind = dataset_kind(cfg, model.dataset())?;
    let stats_path = out.join("stats.json");
    let prior: Option<RunSummary> = if stats_path.is_file() {
        Some(read_json(&stats_path)?)
    } else {
        None
    };
    let train_ds = load_split(cfg, kind, Split::Train)?;
    let (a, b) = match (&cfg.source, &cfg.target, &prior) {
        (Some(s), Some(t), _) => (class_of(&train_ds, s)?, class_of(&train_ds, t)?),
        (None, None, Some(p)) => p.pair,
        _ => return Err(usage("pass --source and --target, or --out pointing at a deepdig run")),
    };
    if a == b {
        return Err(usage(format!("--source and --target are the same class ({a})")));
    }
    let budgets = match (cfg.n_pairs, &prior) {
        (Some(n), _) => [n, n],
        (None, Some(p)) if p.pair == (a, b) || p.pair == (b, a) => deepdig_budgets(p, a, b)?,
        _ => return Err(usage("pass --n-pairs or run deepdig for this pair into --out first")),
    };
    let result = run_baseline_pairwise(
        &model,
        &train_ds,
        method,
        a,
        b,
        budgets,
        cfg.baseline_seed,
        &cfg.deepdig.refine,
    )?;
    let summary = result.summary();
    let dir = out.join(format!("baseline-{}", method.name()));
    write_borderline_dir(&dir, &summary, &result.instances, model.input_shape())?;
    save_config(&dir, cfg)?;
    emit(&summary)
}

fn parse_pair(ds: &LabeledDataset, text: &str) -> Outcome<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((class_of(ds, a)?, class_of(ds, b)?)),
        _ => Err(usage(format!("--pair expects `a,b`, got `{text}`"))),
    }
}

fn borderline_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("borderline.jsonl")
    } else {
        path.to_path_buf()
    }
}

/// Writes report.json, report.csv, pca.csv and pca.png for one pair.
fn write_characterization(dir: &Path, ch: &Characterization) -> Outcome<()> {
    write_json_atomic(&dir.join("report.json"), &ch.report)?;
    write_reports_csv(&dir.join("report.csv"), std::slice::from_ref(&ch.report))?;
    write_json_atomic(&dir.join("svm.json"), &ch.svm)?;
    write_pca_csv(&dir.join("pca.csv"), &ch.projections)?;
    save_scatter(&dir.join("pca.png"), &ch.projections)
}

fn characterize(cfg: &RunConfig) -> Outcome<()> {
    let bdir = required(&cfg.borderline_dir, "borderline-dir")?;
    let out = cfg.out.clone().unwrap_or_else(|| bdir.join("characterization"));
    let model = load_model(cfg)?;
    let kind = dataset_kind(cfg, model.dataset())?;
    let borderline = read_borderline(&borderline_file(bdir))?;
    let train_ds = load_split(cfg, kind, Split::Train)?;
    let test_ds = load_split(cfg, kind, Split::Test)?;
    let (a, b) = match &cfg.pair {
        Some(p) => parse_pair(&train_ds, p)?,
        None => {
            let stats = bdir.join("stats.json");
            if !stats.is_file() {
                return Err(usage("pass --pair; no stats.json next to the borderline instances"));
            }
            read_json::<RunSummary>(&stats)?.pair
        }
    };
    let ch = characterize_pair(&model, &train_ds, &test_ds, a, b, &borderline, &cfg.characterize)?;
    write_characterization(&out, &ch)?;
    let mut snapshot = cfg.clone();
    snapshot.out = Some(out.clone());
    save_config(&out, &snapshot)?;
    emit(&ch.report)
}

/// Completed pairs of a characterize-all run, tied to the configuration that
/// produced them.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: RunConfig,
    completed: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    pairs: usize,
    mean_idc: f64,
    mean_edc1_borderline: f64,
    mean_edc1_test: f64,
    mean_edc2_borderline: f64,
    mean_edc2_test: f64,
    /// Rank correlation of IDC with borderline EDC2 across pairs.
    spearman_idc_edc2_borderline: Option<f64>,
    all_in_range: bool,
}

fn characterize_all(cfg: &RunConfig) -> Outcome<()> {
    let out = required(&cfg.out, "out")?;
    let model = load_model(cfg)?;
    let kind = dataset_kind(cfg, model.dataset())?;
    let train_ds = load_split(cfg, kind, Split::Train)?;
    let test_ds = load_split(cfg, kind, Split::Test)?;

    let manifest_path = out.join("manifest.json");
    let mut manifest = if manifest_path.is_file() {
        let m: Manifest = read_json(&manifest_path)?;
        if m.config != *cfg {
            return Err(usage(format!(
                "{} was produced with a different configuration; use a fresh --out",
                manifest_path.display()
            )));
        }
        m
    } else {
        Manifest {
            config: cfg.clone(),
            completed: Vec::new(),
        }
    };
    save_config(out, cfg)?;

    let c = model.num_classes();
    let mut reports = Vec::new();
    for a in 0..c {
        for b in a + 1..c {
            let label = pair_label((a, b));
            let dir = out.join("pairs").join(&label);
            if manifest.completed.contains(&label) {
                log::info!("pair {label}: already done");
                reports.push(read_json::<CharacterizationReport>(&dir.join("report.json"))?);
                continue;
            }
            log::info!("pair {label}");
            let result = run_pairwise(&model, &train_ds, a, b, &cfg.deepdig)?;
            write_run_dir(&dir, &result, model.input_shape())?;
            let ch = characterize_pair(&model, &train_ds, &test_ds, a, b, &result.borderline(), &cfg.characterize)?;
            write_characterization(&dir, &ch)?;
            reports.push(ch.report);
            manifest.completed.push(label);
            write_json_atomic(&manifest_path, &manifest)?;
        }
    }

    write_reports_csv(&out.join("reports.csv"), &reports)?;
    write_bars(&out.join("bars"), &reports)?;
    let summary = sweep_summary(&reports);
    write_json_atomic(&out.join("summary.json"), &summary)?;
    emit(&summary)
}

fn write_bars(dir: &Path, reports: &[CharacterizationReport]) -> Outcome<()> {
    let table = |header: &[&str], row: &dyn Fn(&CharacterizationReport) -> Vec<f64>| -> Outcome<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Failure::Run(Error::Parse(e.to_string()));
        w.write_record(header).map_err(fail)?;
        for r in reports {
            let mut rec = vec![pair_label(r.pair)];
            rec.extend(row(r).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(fail)?;
        }
        w.into_inner().map_err(|e| Failure::Run(Error::Parse(e.to_string())))
    };
    write_atomic(&dir.join("idc.csv"), &table(&["pair", "idc"], &|r| vec![r.idc])?)?;
    write_atomic(
        &dir.join("edc1.csv"),
        &table(&["pair", "borderline", "test"], &|r| vec![r.edc1_borderline, r.edc1_test])?,
    )?;
    write_atomic(
        &dir.join("edc2.csv"),
        &table(&["pair", "borderline", "test"], &|r| vec![r.edc2_borderline, r.edc2_test])?,
    )?;
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn sweep_summary(reports: &[CharacterizationReport]) -> SweepSummary {
    let idc: Vec<f64> = reports.iter().map(|r| r.idc).collect();
    let edc2: Vec<f64> = reports.iter().map(|r| r.edc2_borderline).collect();
    SweepSummary {
        pairs: reports.len(),
        mean_idc: mean(idc.iter().copied()),
        mean_edc1_borderline: mean(reports.iter().map(|r| r.edc1_borderline)),
        mean_edc1_test: mean(reports.iter().map(|r| r.edc1_test)),
        mean_edc2_borderline: mean(edc2.iter().copied()),
        mean_edc2_test: mean(reports.iter().map(|r| r.edc2_test)),
        spearman_idc_edc2_borderline: spearman(&idc, &edc2),
        all_in_range: reports.iter().all(CharacterizationReport::in_range),
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either side is constant or has
/// fewer than two values.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(rx.iter().copied()), mean(ry.iter().copied()));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

const SCATTER_SETS: [&str; 3] = ["train", "test", "borderline"];

fn save_scatter(path: &Path, rows: &[PcaRow]) -> Outcome<()> {
    let mut names: Vec<&str> = SCATTER_SETS.to_vec();
    for r in rows {
        if !names.contains(&r.set.as_str()) {
            names.push(&r.set);
        }
    }
    let points: Vec<Vec<(f64, f64)>> = names
        .iter()
        .map(|n| rows.iter().filter(|r| r.set == *n).map(|r| (r.pc1, r.pc2)).collect())
        .collect();
    let series: Vec<viz::Series> = names
        .iter()
        .zip(&points)
        .map(|(name, p)| viz::Series { name, points: p })
        .collect();
    let img = viz::render_scatter(&series, 800, 600)?;
    Ok(viz::save_png_rgb(path, &img)?)
}

fn parse_shape(text: &str) -> Outcome<(usize, usize)> {
    let bad = || usage(format!("--shape expects HxW, got `{text}`"));
    let (h, w) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let h = h.trim().parse().map_err(|_| bad())?;
    let w = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

fn square_shape(len: usize) -> Outcome<(usize, usize)> {
    let side = (len as f64).sqrt().round() as usize;
    if side * side == len {
        Ok((side, side))
    } else {
        Err(usage(format!("{len} pixels is not a square image; pass --shape HxW")))
    }
}

fn viz_cmd(cfg: &RunConfig) -> Outcome<()> {
    let input = required(&cfg.input, "input")?;
    let out = required(&cfg.out, "out")?;
    let kind = required(&cfg.kind, "kind")?;
    match kind.as_str() {
        "grid" => {
            let instances = read_borderline(&borderline_file(input))?;
            let first = instances
                .first()
                .ok_or_else(|| Failure::Run(Error::EmptySelection("no borderline instances to draw".into())))?;
            let (h, w) = match &cfg.shape {
                Some(s) => parse_shape(s)?,
                None => square_shape(first.pixels.len())?,
            };
            let images: Vec<&[f32]> = instances.iter().map(|b| b.pixels.as_slice()).collect();
            viz::save_grid(out, &images, h, w)?;
        }
        "scatter" => {
            let rows = bscope::charmetrics::read_pca_csv(input)?;
            save_scatter(out, &rows)?;
            let csv_copy = out.with_extension("csv");
            if csv_copy != *input {
                write_pca_csv(&csv_copy, &rows)?;
            }
        }
        other => return Err(usage(format!("unknown viz kind `{other}` (expected grid or scatter)"))),
    }
    let mut snapshot = out.as_os_str().to_owned();
    snapshot.push(".config.json");
    write_json_atomic(Path::new(&snapshot), cfg)?;
    Ok(())
}

