use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use proxyhpo::analysis::{
    correlation_report, correlation_strength, estimated_hyperparams, relative_hp_distance,
    speedup, summarize, DISTANCE_DEFINITION,
};
use proxyhpo::hpo::{grid_search, reinforce_search, DataSplit, RlConfig};
use proxyhpo::io::{load_label, load_volume, write_raw, ManifestItem, Normalization};
use proxyhpo::measures::{
    importance_scores, pairwise_matrix, scores_from_csv, scores_to_csv, select_proxy,
    select_random, split_fifty_fifty,
};
use proxyhpo::proxynet::{capacity_ratio, full_spec, param_count, proxy_schedule};
use proxyhpo::synth::{gen_synthetic_dataset, SynthConfig};
use proxyhpo::trainer::{CostModel, ExternalTrainer, Surrogate};
use proxyhpo::{
    DatasetManifest, Evaluator, HyperParams, MeasureConfig, MeasureKind, PairwiseMatrix, RoiMode,
    SearchReport, SearchSpace, TrialTemplate, UNetSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    CompareArgs, IngestArgs, Measure, MeasureArgs, Mode, NetspecArgs, Network, PairwiseArgs,
    SearchArgs, SelectArgs, SynthArgs,
};
use crate::config::{create_dir, write_json, write_resolved, write_text, RESOLVED_CONFIG};
use crate::error::{missing, CliError};

type CliResult<T = ()> = Result<T, CliError>;

pub fn synth(args: &SynthArgs) -> CliResult {
    let n = args.n.ok_or_else(|| missing("n"))?;
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    let shape = match args.shape[..] {
        [s] => [s; 3],
        [x, y, z] => [x, y, z],
        _ => {
            return Err(CliError::Usage(format!(
                "--shape takes one or three extents, got {:?}",
                args.shape
            )))
        }
    };
    let mut cfg = SynthConfig::duplicate_family(n, args.seed);
    cfg.shape = shape;
    cfg.jitter = args.jitter;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    write_resolved(args, "synth", &out.join(RESOLVED_CONFIG))?;
    gen_synthetic_dataset(&cfg, &out)?;
    write_json(&out.join("synth.json"), &cfg)
}

pub fn ingest(args: &IngestArgs) -> CliResult {
    let source = DatasetManifest::load(args.manifest.as_deref().ok_or_else(|| missing("manifest"))?)?;
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    let normalization = match (args.window_lo, args.window_hi) {
        (Some(lo), Some(hi)) => Some(Normalization { lo, hi }),
        (None, None) => source.normalization,
        _ => return Err(CliError::Usage("--window-lo and --window-hi go together".into())),
    };
    write_resolved(args, "ingest", &out.join(RESOLVED_CONFIG))?;
    for sub in ["images", "labels"] {
        create_dir(&out.join(sub))?;
    }
    let mut items = Vec::with_capacity(source.len());
    for item in &source.items {
        let converted = (|| {
            let image = load_volume(&source.resolve(&item.image))?;
            let label = load_label(&source.resolve(&item.label))?;
            let image_loc = format!("images/{}", item.id);
            let label_loc = format!("labels/{}", item.id);
            write_raw(&image, &out.join(&image_loc))?;
            write_raw(label.volume(), &out.join(&label_loc))?;
            Ok::<_, proxyhpo::Error>(ManifestItem {
                id: item.id.clone(),
                image: image_loc,
                label: label_loc,
                split: item.split.clone(),
            })
        })()
        .map_err(|e| for_item(&item.id, e))?;
        items.push(converted);
    }
    let manifest = DatasetManifest::new(items, normalization, &out)?;
    manifest.validate()?;
    manifest.save(&out.join("manifest.json"))?;
    Ok(())
}

/// Names the item a conversion failure concerns.
fn for_item(id: &str, e: proxyhpo::Error) -> proxyhpo::Error {
    match e {
        proxyhpo::Error::Item { .. } => e,
        other => proxyhpo::Error::Item {
            id: id.to_string(),
            source: Box::new(other),
        },
    }
}

fn measure_config(args: &MeasureArgs) -> CliResult<MeasureConfig> {
    let kind = match args.measure {
        Measure::Mi => MeasureKind::Mi,
        Measure::Ncc => MeasureKind::Ncc,
    };
    let roi = if args.labelcrop {
        RoiMode::Labelcrop
    } else {
        RoiMode::WholeVolume
    };
    let mut cfg = MeasureConfig::new(kind, roi);
    cfg.mi_bins = args.bins;
    cfg.ncc_window = [args.window; 3];
    cfg.canonical_cube = args.cube;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Output file and the directory that receives the resolved config.
fn file_or_dir(out: &Path, default_name: &str) -> CliResult<(PathBuf, PathBuf)> {
    if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let dir = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => create_dir(p)?,
            _ => PathBuf::from("."),
        };
        Ok((out.to_path_buf(), dir))
    } else {
        let dir = create_dir(out)?;
        Ok((dir.join(default_name), dir))
    }
}

fn resolved_name(file: &Path) -> String {
    let stem = file.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    format!("{stem}.{RESOLVED_CONFIG}")
}

pub fn pairwise(args: &PairwiseArgs) -> CliResult {
    let cfg = measure_config(&args.measure)?;
    let manifest = DatasetManifest::load(args.manifest.as_deref().ok_or_else(|| missing("manifest"))?)?;
    let (file, dir) = file_or_dir(args.out.as_deref().ok_or_else(|| missing("out"))?, "pairwise.csv")?;
    write_resolved(args, "pairwise", &dir.join(resolved_name(&file)))?;
    let matrix = pairwise_matrix(&manifest, &cfg)?;
    write_text(&file, &matrix.to_csv())
}

/// Written by `select`, read by `search --selection`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: String,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    pub selected: Vec<String>,
    pub indices: Vec<usize>,
    /// Half of the selection (rounded up) for training, the rest for
    /// validation. A single selected item goes to training alone.
    pub train: Vec<String>,
    pub val: Vec<String>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Ids and scores from an `id,score` CSV or a pairwise matrix CSV.
fn scores_from_file(path: &Path) -> CliResult<(Vec<String>, Vec<f64>)> {
    let text = read_text(path)?;
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if header.trim() == "id,score" {
        Ok(scores_from_csv(&text)?)
    } else {
        let matrix = PairwiseMatrix::from_csv(&text)?;
        let scores = importance_scores(&matrix);
        Ok((matrix.ids().to_vec(), scores))
    }
}

pub fn select(args: &SelectArgs) -> CliResult {
    let budget = args.budget.ok_or_else(|| missing("budget"))?;
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    write_resolved(args, "select", &out.join(RESOLVED_CONFIG))?;

    let (ids, scores) = match (&args.scores, &args.manifest) {
        (Some(path), None) => {
            let (ids, scores) = scores_from_file(path)?;
            (ids, Some(scores))
        }
        (None, Some(path)) => {
            let manifest = DatasetManifest::load(path)?;
            if args.random {
                (manifest.ids(), None)
            } else {
                let matrix = pairwise_matrix(&manifest, &measure_config(&args.measure)?)?;
                write_text(&out.join("pairwise.csv"), &matrix.to_csv())?;
                (matrix.ids().to_vec(), Some(importance_scores(&matrix)))
            }
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either --scores or --manifest".into()))
        }
        (None, None) => return Err(CliError::Usage("--scores or --manifest is required".into())),
    };
    if let Some(s) = &scores {
        write_text(&out.join("scores.csv"), &scores_to_csv(&ids, s))?;
    }

    let (method, indices) = match (&scores, args.random) {
        (Some(s), false) => ("proxy", select_proxy(s, budget)?),
        _ => ("random", select_random(ids.len(), budget, args.seed)?),
    };
    let (train, val) = if indices.len() >= 2 {
        split_fifty_fifty(&indices, args.seed)?
    } else {
        (indices.clone(), Vec::new())
    };
    let names = |idx: &[usize]| idx.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>();
    let selection = Selection {
        method: method.into(),
        budget,
        seed: args.seed,
        manifest: args.manifest.clone(),
        selected: names(&indices),
        indices: indices.clone(),
        train: names(&train),
        val: names(&val),
    };
    write_json(&out.join("selection.json"), &selection)
}

pub fn netspec(args: &NetspecArgs) -> CliResult {
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    let full = UNetSpec {
        levels: args.levels,
        base_channels: args.base_channels,
        res_blocks: args.res_blocks,
        in_channels: args.in_channels,
        out_channels: args.out_channels,
    };
    full.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let schedule = proxy_schedule(&full)?;
    write_resolved(args, "netspec", &out.join(RESOLVED_CONFIG))?;
    let proxies: Vec<_> = schedule
        .iter()
        .map(|s| {
            json!({
                "spec": s,
                "param_count": param_count(s),
                "capacity_ratio": capacity_ratio(s, &full),
            })
        })
        .collect();
    let doc = json!({
        "full": { "spec": full, "param_count": param_count(&full) },
        "proxies": proxies,
    });
    write_json(&out.join("netspec.json"), &doc)
}

enum Trainer {
    Surrogate,
    Exec(Vec<String>),
}

fn parse_trainer(text: &str) -> CliResult<Trainer> {
    if text == "surrogate" {
        return Ok(Trainer::Surrogate);
    }
    let Some(command) = text.strip_prefix("exec:") else {
        return Err(CliError::Usage(format!(
            "--trainer must be surrogate or exec:<command>, got {text:?}"
        )));
    };
    match shlex::split(command) {
        Some(words) if !words.is_empty() => Ok(Trainer::Exec(words)),
        _ => Err(CliError::Usage(format!("cannot parse trainer command {command:?}"))),
    }
}

fn search_split(args: &SearchArgs) -> CliResult<DataSplit> {
    let absolute = |p: &Path| {
        fs::canonicalize(p)
            .unwrap_or_else(|_| p.to_path_buf())
            .to_string_lossy()
            .into_owned()
    };
    if let Some(path) = &args.selection {
        let text = read_text(path)?;
        let sel: Selection = serde_json::from_str(&text)
            .map_err(|e| CliError::Core(proxyhpo::Error::InvalidInput(format!("{}: {e}", path.display()))))?;
        // Manifest locators in a selection are relative to the working
        // directory `select` ran in.
        return Ok(DataSplit {
            train: sel.train,
            val: sel.val,
            manifest: sel.manifest.as_deref().map(absolute),
        });
    }
    if let Some(path) = &args.manifest {
        let manifest = DatasetManifest::load(path)?;
        let ids = manifest.ids();
        let all: Vec<usize> = (0..ids.len()).collect();
        let (train, val) = split_fifty_fifty(&all, args.seed)?;
        let names = |idx: Vec<usize>| idx.into_iter().map(|i| ids[i].clone()).collect();
        return Ok(DataSplit {
            train: names(train),
            val: names(val),
            manifest: Some(absolute(path)),
        });
    }
    Ok(DataSplit {
        train: (0..args.n_train).map(|i| format!("train{i:03}")).collect(),
        val: (0..args.n_val).map(|i| format!("val{i:03}")).collect(),
        manifest: None,
    })
}

fn search_network(args: &SearchArgs) -> CliResult<UNetSpec> {
    let full = full_spec();
    match args.network {
        Network::Full => Ok(full),
        Network::Proxy => proxy_schedule(&full)?
            .into_iter()
            .find(|s| s.levels == args.proxy_levels)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "--proxy-levels must be one of {}, {}, {}",
                    full.levels,
                    full.levels - 1,
                    full.levels - 2
                ))
            }),
    }
}

fn load_space(path: &Path) -> CliResult<SearchSpace> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("search space {}: {e}", path.display())))
}

pub fn search(args: &SearchArgs) -> CliResult {
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(CliError::Usage(format!("--noise must be non-negative, got {}", args.noise)));
    }
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err(CliError::Usage(format!("--timeout must be positive, got {}", args.timeout)));
    }
    if !(args.cost_scale.is_finite() && args.cost_scale >= 0.0) {
        return Err(CliError::Usage(format!(
            "--cost-scale must be non-negative, got {}",
            args.cost_scale
        )));
    }
    let evaluator: Box<dyn Evaluator> = match parse_trainer(&args.trainer)? {
        Trainer::Surrogate => Box::new(Surrogate {
            noise_sigma: args.noise,
        }),
        Trainer::Exec(command) => Box::new(ExternalTrainer {
            command,
            timeout: Duration::from_secs_f64(args.timeout),
        }),
    };
    let space = match (&args.space, args.mode) {
        (Some(path), _) => load_space(path)?,
        (None, Mode::Grid) => SearchSpace::default_grid(),
        (None, Mode::Rl) => SearchSpace::default_rl(),
    };
    let template = TrialTemplate {
        network: search_network(args)?,
        split: search_split(args)?,
        max_steps: args.max_steps,
        cost_model: CostModel {
            scale: args.cost_scale,
        },
    };
    write_resolved(args, "search", &out.join(RESOLVED_CONFIG))?;

    let report = match args.mode {
        Mode::Grid => grid_search(&space, evaluator.as_ref(), &template, args.workers, args.seed)?,
        Mode::Rl => {
            let rl = RlConfig {
                n_trials: args.trials,
                alpha: args.alpha,
                baseline_decay: args.baseline_decay,
            };
            rl.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            reinforce_search(&space, evaluator.as_ref(), &template, &rl, args.seed)?
        }
    };
    report.save(&out.join("report.json"))?;
    write_text(&out.join("trials.csv"), &trials_csv(&report))?;

    let failed: Vec<_> = report.trials.iter().filter(|t| !t.result.is_ok()).collect();
    if !failed.is_empty() && failed.len() == report.trials.len() {
        let first = failed[0].result.message.as_deref().unwrap_or("no message");
        return Err(CliError::Trainer(format!(
            "all {} trials failed; first: {}",
            failed.len(),
            first
        )));
    }
    if !failed.is_empty() {
        eprintln!(
            "warning: {} of {} trials failed; report is partial",
            failed.len(),
            report.trials.len()
        );
    }
    Ok(())
}

fn trials_csv(report: &SearchReport) -> String {
    let mut out = String::from("trial_id,optimizer,lr,p,status,val_dice,gpu_hours\n");
    for t in &report.trials {
        let hp = t.spec.hyperparams;
        let status = if t.result.is_ok() { "ok" } else { "failed" };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.spec.trial_id,
            hp.optimizer,
            hp.learning_rate,
            hp.intensity_shift_prob,
            status,
            t.result.val_dice,
            t.result.gpu_hours
        );
    }
    out
}

struct Compared {
    proxy: SearchReport,
    full: SearchReport,
    out: PathBuf,
}

fn load_pair(args: &CompareArgs, command: &str) -> CliResult<Compared> {
    let proxy = SearchReport::load(args.proxy.as_deref().ok_or_else(|| missing("proxy"))?)?;
    let full = SearchReport::load(args.full.as_deref().ok_or_else(|| missing("full"))?)?;
    let out = create_dir(args.out.as_deref().ok_or_else(|| missing("out"))?)?;
    write_resolved(args, command, &out.join(RESOLVED_CONFIG))?;
    Ok(Compared { proxy, full, out })
}

pub fn correlate(args: &CompareArgs) -> CliResult {
    let c = load_pair(args, "analyze correlate")?;
    let report = correlation_report(&c.proxy, &c.full)?;
    write_text(&c.out.join("pairs.csv"), &report.pairs.to_csv())?;
    write_json(
        &c.out.join("correlation.json"),
        &json!({
            "r": report.r,
            "strength": correlation_strength(report.r),
            "n_pairs": report.pairs.rows.len(),
            "dropped": report.dropped,
        }),
    )
}

fn estimate(report: &SearchReport, which: &str) -> CliResult<HyperParams> {
    estimated_hyperparams(report).ok_or_else(|| {
        CliError::Core(proxyhpo::Error::InvalidInput(format!(
            "{which} report has no successful trial to estimate from"
        )))
    })
}

pub fn distance(args: &CompareArgs) -> CliResult {
    let c = load_pair(args, "analyze distance")?;
    let proxy_hp = estimate(&c.proxy, "proxy")?;
    let full_hp = estimate(&c.full, "full")?;
    let d = relative_hp_distance(&proxy_hp, &full_hp, &c.full.space)?;
    write_json(
        &c.out.join("distance.json"),
        &json!({
            "distance": d,
            "definition": DISTANCE_DEFINITION,
            "proxy": proxy_hp,
            "full": full_hp,
        }),
    )
}

pub fn speedup_cmd(args: &CompareArgs) -> CliResult {
    let c = load_pair(args, "analyze speedup")?;
    let s = speedup(&c.full.ledger, &c.proxy.ledger)?;
    write_json(
        &c.out.join("speedup.json"),
        &json!({
            "speedup": s,
            "full_gpu_hours": c.full.ledger.total(),
            "proxy_gpu_hours": c.proxy.ledger.total(),
        }),
    )
}

pub fn report(args: &CompareArgs) -> CliResult {
    let c = load_pair(args, "report")?;
    let (summary, pairs) = summarize(&c.proxy, &c.full)?;
    if let Some(pairs) = pairs {
        write_text(&c.out.join("pairs.csv"), &pairs.to_csv())?;
    }
    write_json(&c.out.join("summary.json"), &summary)
}
