//! End-to-end orchestration: ingest -> encode -> mix -> probe -> eval ->
//! report, with content-hash caching and deterministic outputs. Worker count
//! affects wall time only; results are collected in input order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    downsample, enumerate_mixes, load_manifest, subsample_fraction_of, DatasetManifest,
    FractionSpec, MixSpec, Split,
};
use crate::error::{Error, Result};
use crate::eval::{r_squared, EvalReport};
use crate::graph::{Graph, RandomFeatureSpec};
use crate::probe::{probe_inputs, train_probe, LinearProbe, ProbeTrainConfig};
use crate::pse::{assemble_targets, Provenance, PseConfig, PseTargets, TargetMode};
use crate::targets_io::{read_targets, write_targets};

pub const WORKERS_ENV: &str = "GRAPHPSE_WORKERS";

fn default_ratios() -> Vec<f64> {
    vec![0.01, 0.1, 0.25, 0.5]
}

fn default_workers() -> usize {
    1
}

fn default_rf_dim() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Manifest paths, resolved relative to the config file location.
    pub datasets: Vec<PathBuf>,
    #[serde(default)]
    pub pse: PseConfig,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    /// Explicit seed; there is deliberately no wall-clock default.
    pub seed: u64,
    /// Optional cap on per-component mix sample counts.
    #[serde(default)]
    pub mix_cap: Option<usize>,
    #[serde(default = "default_rf_dim")]
    pub random_feature_dim: usize,
    #[serde(default)]
    pub probe: ProbeTrainConfig,
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.datasets = cfg
            .datasets
            .iter()
            .map(|p| if p.is_absolute() { p.clone() } else { base.join(p) })
            .collect();
        if !cfg.out_dir.is_absolute() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        for p in &self.datasets {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "manifest does not exist: {}",
                    p.display()
                )));
            }
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::Config("ratios must be in (0, 1]".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        self.pse.validate()
    }

    pub fn effective_workers(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&w| w >= 1)
            .unwrap_or(self.workers)
    }

    /// Digest over everything that can influence output bytes; out_dir and
    /// worker count are excluded by construction.
    pub fn digest(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = PathBuf::new();
        canon.workers = 0;
        canon.datasets = self
            .datasets
            .iter()
            .map(|p| {
                PathBuf::from(
                    p.file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                )
            })
            .collect();
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub key: String,
    pub cached: bool,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub stages: Vec<StageRecord>,
    pub report_path: PathBuf,
    pub report_digest: String,
}

/// Ordered parallel map: results come back in input order regardless of the
/// worker count or completion order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let results: Vec<Vec<Result<R>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|slice| scope.spawn(|| slice.iter().map(&f).collect::<Vec<Result<R>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for batch in results {
        for r in batch {
            out.push(r?);
        }
    }
    Ok(out)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Moves any leftover partial outputs into a quarantine directory.
fn quarantine_partials(out_dir: &Path) {
    let quarantine = out_dir.join("quarantine");
    let mut moved = false;
    for dir in [out_dir.to_path_buf(), out_dir.join("cache").join("encode")] {
        let Ok(entries) = std::fs::read_dir(&dir) else {
            continue;
        };
        for entry in entries.flatten() {
            let p = entry.path();
            if p.extension().map_or(false, |e| e == "tmp") {
                if !moved {
                    let _ = std::fs::create_dir_all(&quarantine);
                    moved = true;
                }
                let _ = std::fs::rename(&p, quarantine.join(p.file_name().unwrap()));
            }
        }
    }
}

fn short_key(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Keeps only the block set of the requested mode: plain keeps the
/// original-provenance blocks, structuralized keeps everything.
pub fn restrict_targets(t: &PseTargets, mode: TargetMode) -> PseTargets {
    match mode {
        TargetMode::Structuralized => t.clone(),
        TargetMode::Plain => PseTargets {
            graph_id: t.graph_id.clone(),
            node_ids: t.node_ids.clone(),
            blocks: t
                .blocks
                .iter()
                .filter(|b| b.provenance == Provenance::Original)
                .cloned()
                .collect(),
        },
    }
}

/// Computes targets for every graph, structuralized when the graph carries
/// features, plain otherwise.
pub fn encode_graphs(
    graphs: &[Graph],
    cfg: &PseConfig,
    mode: TargetMode,
    workers: usize,
) -> Result<Vec<PseTargets>> {
    parallel_map(graphs, workers, |g| assemble_targets(g, cfg, mode))
}

struct DatasetState {
    manifest: DatasetManifest,
    /// Graphs per split, in file order.
    graphs: HashMap<&'static str, Vec<Graph>>,
    /// Full (structuralized when possible) targets per split.
    targets: HashMap<&'static str, Vec<PseTargets>>,
    /// True when the dataset could be encoded in structuralized mode.
    has_struct: bool,
}

fn split_tag(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Valid => "valid",
        Split::Test => "test",
    }
}

pub struct Pipeline {
    cfg: RunConfig,
    workers: usize,
    config_digest: String,
    stages: Vec<StageRecord>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Pipeline> {
        cfg.validate()?;
        let workers = cfg.effective_workers();
        let config_digest = cfg.digest();
        Ok(Pipeline {
            cfg,
            workers,
            config_digest,
            stages: Vec::new(),
        })
    }

    fn stage<R>(
        &mut self,
        name: &str,
        key: String,
        cached: bool,
        f: impl FnOnce(&RunConfig, usize) -> Result<R>,
    ) -> Result<R> {
        let start = Instant::now();
        let result = f(&self.cfg, self.workers).map_err(|e| Error::Stage {
            stage: name.to_string(),
            source: Box::new(e),
        });
        self.stages.push(StageRecord {
            name: name.to_string(),
            key,
            cached,
            millis: start.elapsed().as_millis(),
        });
        result
    }

    fn encode_dataset(&mut self, state: &mut DatasetState) -> Result<()> {
        let cache_dir = self.cfg.out_dir.join("cache").join("encode");
        std::fs::create_dir_all(&cache_dir)?;
        let pse_json = serde_json::to_string(&self.cfg.pse)?;
        for split in crate::dataset::SPLITS {
            let tag = split_tag(split);
            let name = format!("encode:{}:{}", state.manifest.name, tag);
            let key = short_key(&["encode-v1", &state.manifest.digest, tag, &pse_json]);
            let path = cache_dir.join(format!("{}-{tag}-{key}.pset", state.manifest.name));
            let graphs = state.manifest.load_split(split)?;
            if path.exists() {
                let targets = read_targets(&path)?;
                state.has_struct = targets
                    .first()
                    .map_or(false, |t| t.blocks.iter().any(|b| b.provenance == Provenance::Structuralized));
                state.targets.insert(tag, targets);
                state.graphs.insert(tag, graphs);
                self.stages.push(StageRecord {
                    name,
                    key,
                    cached: true,
                    millis: 0,
                });
                continue;
            }
            let has_features = graphs.iter().any(|g| {
                g.num_channels() > 0
                    || g.edge_categories.is_some()
                    || g.node_continuous.as_ref().map_or(false, |c| {
                        c.first().map_or(false, |r| !r.is_empty())
                    })
            });
            let mode = if has_features {
                TargetMode::Structuralized
            } else {
                TargetMode::Plain
            };
            let digest = self.config_digest.clone();
            let targets = self.stage(&name, key.clone(), false, |cfg, workers| {
                let targets = encode_graphs(&graphs, &cfg.pse, mode, workers)?;
                // Serialize through a temp file so partial encodes never
                // masquerade as cache entries.
                let tmp = path.with_extension("tmp");
                write_targets(&tmp, &targets, &digest)?;
                std::fs::rename(&tmp, &path)?;
                Ok(targets)
            })?;
            state.has_struct = mode == TargetMode::Structuralized;
            state.targets.insert(tag, targets);
            state.graphs.insert(tag, graphs);
        }
        Ok(())
    }

    fn probe_corpus(
        &self,
        states: &HashMap<String, DatasetState>,
        mix: &MixSpec,
        ratio: f64,
    ) -> Result<Vec<(DMatrix<f64>, PseTargets)>> {
        let rf = RandomFeatureSpec {
            dim: self.cfg.random_feature_dim,
            seed: self.cfg.seed,
        };
        let mut corpus = Vec::new();
        for (name, count) in &mix.components {
            let state = states
                .get(name)
                .ok_or_else(|| Error::Config(format!("mix references unknown dataset {name}")))?;
            if mix.transform_mode == TargetMode::Structuralized && !state.has_struct {
                return Err(Error::NothingToStructuralize(format!(
                    "dataset {name} has no features for structuralized mix"
                )));
            }
            let picked = downsample(&state.manifest, *count, mix.seed)?;
            let picked = subsample_fraction_of(
                &picked,
                &state.manifest.digest,
                &FractionSpec {
                    ratio,
                    seed: mix.seed,
                },
            )?;
            let graphs = &state.graphs["train"];
            let targets = &state.targets["train"];
            for idx in picked {
                let inputs = probe_inputs(&graphs[idx], &rf)?;
                corpus.push((inputs, restrict_targets(&targets[idx], mix.transform_mode)));
            }
        }
        Ok(corpus)
    }

    fn eval_probe(
        &self,
        report: &mut EvalReport,
        probe: &LinearProbe,
        states: &HashMap<String, DatasetState>,
        dataset_order: &[String],
        mix: &MixSpec,
        ratio: f64,
    ) -> Result<()> {
        let rf = RandomFeatureSpec {
            dim: self.cfg.random_feature_dim,
            seed: self.cfg.seed,
        };
        for name in dataset_order {
            let state = &states[name];
            if mix.transform_mode == TargetMode::Structuralized && !state.has_struct {
                continue;
            }
            let graphs = &state.graphs["test"];
            let targets = &state.targets["test"];
            // Pool predictions and targets over all test nodes, per column.
            let layout = &probe.layout;
            let total_width: usize = layout.iter().map(|s| s.width).sum();
            let mut pred_cols: Vec<Vec<f64>> = vec![Vec::new(); total_width];
            let mut target_cols: Vec<Vec<f64>> = vec![Vec::new(); total_width];
            let inputs_list: Vec<DMatrix<f64>> =
                parallel_map(graphs, self.workers, |g| probe_inputs(g, &rf))?;
            for (inputs, t) in inputs_list.iter().zip(targets) {
                let t = restrict_targets(t, mix.transform_mode);
                let pred = probe.predict(inputs);
                for i in 0..t.node_ids.len() {
                    let row = t.row(i);
                    for c in 0..total_width {
                        pred_cols[c].push(pred[(i, c)]);
                        target_cols[c].push(row[c]);
                    }
                }
            }
            for span in layout {
                let per_dim: Vec<Option<f64>> = (0..span.width)
                    .map(|c| r_squared(&pred_cols[span.start + c], &target_cols[span.start + c]))
                    .collect::<Result<_>>()?;
                report.push_group(mix.label(), ratio, name.clone(), span.name.clone(), per_dim);
            }
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunRecord> {
        std::fs::create_dir_all(&self.cfg.out_dir)?;
        let result = self.run_inner();
        if result.is_err() {
            quarantine_partials(&self.cfg.out_dir);
        }
        result
    }

    fn run_inner(&mut self) -> Result<RunRecord> {
        let manifest_paths = self.cfg.datasets.clone();
        let manifests = self.stage("manifests", short_key(&["manifests"]), false, |_, _| {
            manifest_paths.iter().map(|p| load_manifest(p)).collect::<Result<Vec<_>>>()
        })?;

        let dataset_order: Vec<String> = manifests.iter().map(|m| m.name.clone()).collect();
        let mut states: HashMap<String, DatasetState> = HashMap::new();
        for manifest in manifests.iter().cloned() {
            let mut state = DatasetState {
                manifest,
                graphs: HashMap::new(),
                targets: HashMap::new(),
                has_struct: false,
            };
            self.encode_dataset(&mut state)?;
            states.insert(state.manifest.name.clone(), state);
        }

        let mix_cap = self.cfg.mix_cap;
        let seed = self.cfg.seed;
        let mixes = self.stage("mixes", short_key(&["mixes"]), false, |_, _| {
            enumerate_mixes(&manifests, mix_cap, seed)
        })?;

        let mut report = EvalReport::default();
        let probes_dir = self.cfg.out_dir.join("probes");
        std::fs::create_dir_all(&probes_dir)?;
        let ratios = self.cfg.ratios.clone();
        for mix in &mixes {
            for &ratio in &ratios {
                let label = format!("probe:{}@{ratio}", mix.label());
                let corpus = self.probe_corpus(&states, mix, ratio)?;
                if corpus.is_empty() {
                    continue;
                }
                let probe_cfg = self.cfg.probe.clone();
                let config_digest = self.config_digest.clone();
                let (probe, _log) =
                    self.stage(&label, short_key(&[&label]), false, move |_, _| {
                        train_probe(&corpus, &probe_cfg)
                    })?;
                let model_path = probes_dir.join(format!(
                    "{}-{ratio}.json",
                    mix.label().replace('/', "_").replace('+', "_")
                ));
                let model = serde_json::json!({
                    "config_digest": config_digest,
                    "probe": &probe,
                });
                atomic_write(&model_path, &serde_json::to_vec_pretty(&model)?)?;
                self.eval_probe(&mut report, &probe, &states, &dataset_order, mix, ratio)?;
            }
        }

        let report_path = self.cfg.out_dir.join("report.json");
        let payload = serde_json::json!({
            "config_digest": self.config_digest,
            "report": &report,
        });
        let bytes = serde_json::to_vec_pretty(&payload)?;
        atomic_write(&report_path, &bytes)?;
        let report_digest = hex::encode(Sha256::digest(&bytes));

        let record = RunRecord {
            config_digest: self.config_digest.clone(),
            stages: std::mem::take(&mut self.stages),
            report_path,
            report_digest,
        };
        atomic_write(
            &self.cfg.out_dir.join("run_record.json"),
            &serde_json::to_vec_pretty(&record)?,
        )?;
        Ok(record)
    }
}

pub fn run_pipeline(cfg: RunConfig) -> Result<RunRecord> {
    Pipeline::new(cfg)?.run()
}
