//! Corpus manifests, split management, reproducible sampling, and
//! pretraining-mix enumeration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::read_jsonl;
use crate::pse::TargetMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

pub const SPLITS: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestFile {
    name: String,
    splits: SplitPaths,
    #[serde(default)]
    counts: Option<SplitCounts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPaths {
    pub train: PathBuf,
    pub valid: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub num_channels: usize,
    /// Distinct category count per channel, pooled over all splits.
    pub cardinalities: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub split_files: SplitPaths,
    pub counts: SplitCounts,
    pub schema: FeatureSchema,
    /// Content hash of the three split files; sampling and cache keys hang
    /// off this so data changes invalidate everything derived from them.
    pub digest: String,
}

impl DatasetManifest {
    pub fn split_path(&self, split: Split) -> &Path {
        match split {
            Split::Train => &self.split_files.train,
            Split::Valid => &self.split_files.valid,
            Split::Test => &self.split_files.test,
        }
    }

    pub fn split_count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.counts.train,
            Split::Valid => self.counts.valid,
            Split::Test => self.counts.test,
        }
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<Graph>> {
        read_jsonl(self.split_path(split))
    }
}

fn split_schema(graphs: &[Graph]) -> (usize, Vec<BTreeSet<u32>>) {
    let channels = graphs.first().map_or(0, |g| g.num_channels());
    let mut cats = vec![BTreeSet::new(); channels];
    for g in graphs {
        for row in &g.node_categories {
            for (i, &c) in row.iter().enumerate() {
                if i < channels {
                    cats[i].insert(c);
                }
            }
        }
    }
    (channels, cats)
}

/// Loads a manifest file, reads every split, validates counts, and infers the
/// feature schema; splits must agree on channel count.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let mf: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let split_files = SplitPaths {
        train: resolve(&mf.splits.train),
        valid: resolve(&mf.splits.valid),
        test: resolve(&mf.splits.test),
    };

    let mut hasher = Sha256::new();
    let mut counts = [0usize; 3];
    let mut channel_counts = [0usize; 3];
    let mut pooled: Vec<BTreeSet<u32>> = Vec::new();
    for (si, split_path) in [&split_files.train, &split_files.valid, &split_files.test]
        .iter()
        .enumerate()
    {
        let bytes = std::fs::read(split_path)
            .map_err(|e| Error::Manifest(format!("{}: {e}", split_path.display())))?;
        hasher.update(&bytes);
        let graphs = read_jsonl(split_path)?;
        counts[si] = graphs.len();
        let (channels, cats) = split_schema(&graphs);
        // Per-split internal consistency.
        for g in &graphs {
            if g.num_channels() != channels {
                return Err(Error::SchemaMismatch {
                    channel: channels.min(g.num_channels()),
                    reason: format!(
                        "graph {} in {} has {} channels, split has {}",
                        g.graph_id,
                        split_path.display(),
                        g.num_channels(),
                        channels
                    ),
                });
            }
        }
        if si == 0 {
            channel_counts = [channels; 3];
            pooled = cats;
        } else {
            channel_counts[si] = channels;
            if channels != channel_counts[0] {
                return Err(Error::SchemaMismatch {
                    channel: channels.min(channel_counts[0]),
                    reason: format!(
                        "split {} has {} categorical channels, train has {}",
                        split_path.display(),
                        channels,
                        channel_counts[0]
                    ),
                });
            }
            for (i, set) in cats.into_iter().enumerate() {
                pooled[i].extend(set);
            }
        }
    }

    let counts = SplitCounts {
        train: counts[0],
        valid: counts[1],
        test: counts[2],
    };
    if let Some(declared) = mf.counts {
        if declared != counts {
            return Err(Error::Manifest(format!(
                "declared counts {declared:?} do not match file contents {counts:?}"
            )));
        }
    }
    Ok(DatasetManifest {
        name: mf.name,
        split_files,
        counts,
        schema: FeatureSchema {
            num_channels: channel_counts[0],
            cardinalities: pooled.iter().map(|s| s.len()).collect(),
        },
        digest: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionSpec {
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixSpec {
    /// (dataset name, training sample count) per component.
    pub components: Vec<(String, usize)>,
    pub transform_mode: TargetMode,
    pub seed: u64,
}

impl MixSpec {
    pub fn label(&self) -> String {
        let names: Vec<&str> = self.components.iter().map(|(n, _)| n.as_str()).collect();
        let mode = match self.transform_mode {
            TargetMode::Plain => "plain",
            TargetMode::Structuralized => "struct",
        };
        format!("{}/{mode}", names.join("+"))
    }
}

fn seeded_rng(digest: &str, seed: u64, tag: &str, extra: u64) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(digest.as_bytes());
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(extra.to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&hasher.finalize());
    ChaCha20Rng::from_seed(key)
}

fn sample_without_replacement(n: usize, k: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    indices.partial_shuffle(rng, k);
    let mut picked: Vec<usize> = indices.into_iter().take(k).collect();
    picked.sort_unstable();
    picked
}

/// Uniform sample without replacement from the training split; deterministic
/// for a fixed (manifest digest, seed), output sorted.
pub fn downsample(m: &DatasetManifest, target_count: usize, seed: u64) -> Result<Vec<usize>> {
    if target_count > m.counts.train {
        return Err(Error::Sampling(format!(
            "target count {target_count} exceeds training size {}",
            m.counts.train
        )));
    }
    let mut rng = seeded_rng(&m.digest, seed, "downsample", target_count as u64);
    Ok(sample_without_replacement(m.counts.train, target_count, &mut rng))
}

/// Training-fraction subsample: floor(ratio * train count), minimum 1.
pub fn subsample_fraction(m: &DatasetManifest, f: &FractionSpec) -> Result<Vec<usize>> {
    if !(f.ratio > 0.0 && f.ratio <= 1.0) {
        return Err(Error::Sampling(format!("ratio {} not in (0, 1]", f.ratio)));
    }
    let k = ((f.ratio * m.counts.train as f64).floor() as usize).max(1);
    let mut rng = seeded_rng(&m.digest, f.seed, "fraction", f.ratio.to_bits());
    Ok(sample_without_replacement(m.counts.train, k, &mut rng))
}

/// Fraction subsample of an arbitrary index list (e.g. a mix component),
/// keyed by a caller-provided digest.
pub fn subsample_fraction_of(
    indices: &[usize],
    digest: &str,
    f: &FractionSpec,
) -> Result<Vec<usize>> {
    if !(f.ratio > 0.0 && f.ratio <= 1.0) {
        return Err(Error::Sampling(format!("ratio {} not in (0, 1]", f.ratio)));
    }
    let k = ((f.ratio * indices.len() as f64).floor() as usize).max(1);
    let mut rng = seeded_rng(digest, f.seed, "fraction-of", f.ratio.to_bits());
    let picked = sample_without_replacement(indices.len(), k, &mut rng);
    Ok(picked.into_iter().map(|i| indices[i]).collect())
}

/// All singleton and unordered-pair pretraining mixes, each in both transform
/// modes. Component sample counts are matched to the smallest training set in
/// the mix (optionally capped).
pub fn enumerate_mixes(
    datasets: &[DatasetManifest],
    cap: Option<usize>,
    seed: u64,
) -> Result<Vec<MixSpec>> {
    if datasets.is_empty() {
        return Err(Error::Sampling("need at least one dataset".into()));
    }
    let count_for = |group: &[&DatasetManifest]| -> usize {
        let min_train = group.iter().map(|m| m.counts.train).min().unwrap();
        cap.map_or(min_train, |c| c.min(min_train))
    };
    let mut groups: Vec<Vec<&DatasetManifest>> = Vec::new();
    for m in datasets {
        groups.push(vec![m]);
    }
    for i in 0..datasets.len() {
        for j in (i + 1)..datasets.len() {
            groups.push(vec![&datasets[i], &datasets[j]]);
        }
    }
    let mut mixes = Vec::new();
    for group in &groups {
        let count = count_for(group);
        for mode in [TargetMode::Plain, TargetMode::Structuralized] {
            mixes.push(MixSpec {
                components: group.iter().map(|m| (m.name.clone(), count)).collect(),
                transform_mode: mode,
                seed,
            });
        }
    }
    Ok(mixes)
}
