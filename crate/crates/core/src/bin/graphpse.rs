use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphpse::dataset::{downsample, enumerate_mixes, load_manifest, subsample_fraction, FractionSpec};
use graphpse::error::Error;
use graphpse::eval::{emit_heatmap, r_squared, EvalReport};
use graphpse::graph::RandomFeatureSpec;
use graphpse::io::{read_jsonl, write_jsonl};
use graphpse::pipeline::{restrict_targets, run_pipeline, RunConfig};
use graphpse::probe::{
    layout_of, load_probe, log_to_csv, probe_inputs, save_probe, train_probe, AdamWParams,
    ProbeTrainConfig,
};
use graphpse::pse::{assemble_targets, Provenance, PseConfig, PseTargets, TargetBlock, TargetMode};
use graphpse::structuralize::{structuralize, TransformMode, TransformStats};
use graphpse::synth::{synth_corpus, SynthKind};
use graphpse::targets_io::{dump_csv, read_targets, write_targets};
use graphpse::validate;

#[derive(Parser)]
#[command(name = "graphpse", about = "Feature-structuralization and P/SE encoding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL graph file and report invariant violations.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Apply feature-structuralization to every graph in a JSONL file.
    Structuralize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_transform_mode, default_value = "auto")]
        mode: TransformMode,
    },
    /// Compute P/SE targets for every graph.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_target_mode, default_value = "plain")]
        mode: TargetMode,
        /// Optional PseConfig JSON file; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also dump the targets as CSV to this path.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },
    /// Pretraining-mix operations.
    Mix {
        #[command(subcommand)]
        command: MixCommand,
    },
    /// Training-fraction subsample of a dataset's training split.
    Sample {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ratio: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Uniform downsample of a dataset's training split.
    Downsample {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        to: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Probe training and prediction.
    Probe {
        #[command(subcommand)]
        command: ProbeCommand,
    },
    /// Pooled per-dimension R² of predictions against targets.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "cli")]
        mix: String,
        #[arg(long, default_value = "cli")]
        dataset: String,
    },
    /// Report post-processing.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Write a single JSONL file here...
        #[arg(long, conflicts_with = "dir")]
        out: Option<PathBuf>,
        /// ...or a full dataset directory (train/valid/test + manifest).
        #[arg(long, requires = "name")]
        dir: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Run the full pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum MixCommand {
    /// Enumerate all singleton and pair mixes in both transform modes.
    Enumerate {
        #[arg(long, num_args = 1.., required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ProbeTrainArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    targets: PathBuf,
    #[arg(long, default_value_t = 120)]
    epochs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_parser = parse_target_mode, default_value = "plain")]
    mode: TargetMode,
}

#[derive(Subcommand)]
enum ProbeCommand {
    Train(ProbeTrainArgs),
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Emit the heatmap CSV for one P/SE group.
    Heatmap {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        group: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_transform_mode(s: &str) -> Result<TransformMode, String> {
    match s {
        "categorical" => Ok(TransformMode::Categorical),
        "edge" => Ok(TransformMode::Edge),
        "continuous" => Ok(TransformMode::Continuous),
        "auto" => Ok(TransformMode::Auto),
        other => Err(format!("unknown mode: {other}")),
    }
}

fn parse_target_mode(s: &str) -> Result<TargetMode, String> {
    match s {
        "plain" => Ok(TargetMode::Plain),
        "struct" => Ok(TargetMode::Structuralized),
        other => Err(format!("unknown mode: {other}")),
    }
}

fn load_pse_config(path: Option<&PathBuf>) -> graphpse::Result<PseConfig> {
    let cfg = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => PseConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> graphpse::Result<bool> {
    match cli.command {
        Command::Validate { input } => {
            let graphs = read_jsonl(&input)?;
            let mut ok = true;
            for g in &graphs {
                let report = validate(g);
                if !report.is_valid() {
                    ok = false;
                    for v in &report.violations {
                        eprintln!("{}: {v}", g.graph_id);
                    }
                }
            }
            println!("{} graphs, {}", graphs.len(), if ok { "all valid" } else { "violations found" });
            Ok(ok)
        }
        Command::Structuralize { input, out, mode } => {
            let graphs = read_jsonl(&input)?;
            let mut transformed = Vec::with_capacity(graphs.len());
            let mut stats = TransformStats {
                graphs: graphs.len(),
                nodes_before: 0,
                nodes_after: 0,
                edges_before: 0,
                edges_after: 0,
            };
            for g in &graphs {
                let res = structuralize(g, mode)?;
                stats.nodes_before += g.num_nodes;
                stats.edges_before += g.edges.len();
                stats.nodes_after += res.graph.num_nodes;
                stats.edges_after += res.graph.edges.len();
                transformed.push(res.graph);
            }
            write_jsonl(&out, &transformed)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(true)
        }
        Command::Encode {
            input,
            out,
            mode,
            config,
            dump_csv: csv_path,
        } => {
            let cfg = load_pse_config(config.as_ref())?;
            let graphs = read_jsonl(&input)?;
            let targets: graphpse::Result<Vec<PseTargets>> =
                graphs.iter().map(|g| assemble_targets(g, &cfg, mode)).collect();
            let targets = targets?;
            write_targets(&out, &targets, "")?;
            if let Some(p) = csv_path {
                let mut buf = Vec::new();
                dump_csv(&targets, &mut buf)?;
                std::fs::write(p, buf)?;
            }
            println!("encoded {} graphs -> {}", targets.len(), out.display());
            Ok(true)
        }
        Command::Mix { command } => match command {
            MixCommand::Enumerate { manifests, cap, seed } => {
                let loaded: graphpse::Result<Vec<_>> =
                    manifests.iter().map(|p| load_manifest(p)).collect();
                let mixes = enumerate_mixes(&loaded?, cap, seed)?;
                for m in &mixes {
                    println!("{}", serde_json::to_string(m)?);
                }
                Ok(true)
            }
        },
        Command::Sample { manifest, ratio, seed } => {
            let m = load_manifest(&manifest)?;
            let idx = subsample_fraction(&m, &FractionSpec { ratio, seed })?;
            println!("{}", serde_json::to_string(&idx)?);
            Ok(true)
        }
        Command::Downsample { manifest, to, seed } => {
            let m = load_manifest(&manifest)?;
            let idx = downsample(&m, to, seed)?;
            println!("{}", serde_json::to_string(&idx)?);
            Ok(true)
        }
        Command::Probe { command } => match command {
            ProbeCommand::Train(args) => {
                let graphs = read_jsonl(&args.graphs)?;
                let targets = read_targets(&args.targets)?;
                if graphs.len() != targets.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} graphs but {} target entries",
                        graphs.len(),
                        targets.len()
                    )));
                }
                let rf = RandomFeatureSpec { dim: 20, seed: args.seed };
                let corpus: graphpse::Result<Vec<_>> = graphs
                    .iter()
                    .zip(&targets)
                    .map(|(g, t)| Ok((probe_inputs(g, &rf)?, restrict_targets(t, args.mode))))
                    .collect();
                let cfg = ProbeTrainConfig {
                    epochs: args.epochs,
                    warmup_epochs: 5,
                    optimizer: AdamWParams::default(),
                };
                let (probe, log) = train_probe(&corpus?, &cfg)?;
                save_probe(&args.out, &probe, "")?;
                if let Some(p) = args.log {
                    std::fs::write(p, log_to_csv(&log, &probe.layout))?;
                }
                println!(
                    "trained probe: {} epochs, final loss {}",
                    log.len(),
                    log.last().map(|e| e.loss).unwrap_or(f64::NAN)
                );
                Ok(true)
            }
            ProbeCommand::Predict { model, graphs, seed, out } => {
                let probe = load_probe(&model)?;
                let graphs = read_jsonl(&graphs)?;
                let rf = RandomFeatureSpec { dim: 20, seed };
                let mut predictions = Vec::with_capacity(graphs.len());
                for g in &graphs {
                    let inputs = probe_inputs(g, &rf)?;
                    let pred = probe.predict(&inputs);
                    let node_ids = g.original_node_indices();
                    let blocks = probe
                        .layout
                        .iter()
                        .map(|span| TargetBlock {
                            name: span.name.trim_end_matches("+struct").to_string(),
                            provenance: if span.name.ends_with("+struct") {
                                Provenance::Structuralized
                            } else {
                                Provenance::Original
                            },
                            rows: node_ids
                                .iter()
                                .map(|&v| {
                                    (0..span.width).map(|c| pred[(v, span.start + c)]).collect()
                                })
                                .collect(),
                        })
                        .collect();
                    predictions.push(PseTargets {
                        graph_id: g.graph_id.clone(),
                        node_ids,
                        blocks,
                    });
                }
                write_targets(&out, &predictions, "")?;
                println!("predicted {} graphs -> {}", predictions.len(), out.display());
                Ok(true)
            }
        },
        Command::Eval { pred, targets, out, mix, dataset } => {
            let preds = read_targets(&pred)?;
            let targets = read_targets(&targets)?;
            if preds.len() != targets.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} prediction entries but {} target entries",
                    preds.len(),
                    targets.len()
                )));
            }
            let layout = layout_of(&targets[0]);
            let total_width: usize = layout.iter().map(|s| s.width).sum();
            let mut pred_cols = vec![Vec::new(); total_width];
            let mut target_cols = vec![Vec::new(); total_width];
            for (p, t) in preds.iter().zip(&targets) {
                for i in 0..t.node_ids.len() {
                    let pr = p.row(i);
                    let tr = t.row(i);
                    for c in 0..total_width {
                        pred_cols[c].push(pr[c]);
                        target_cols[c].push(tr[c]);
                    }
                }
            }
            let mut report = EvalReport::default();
            for span in &layout {
                let per_dim: graphpse::Result<Vec<Option<f64>>> = (0..span.width)
                    .map(|c| r_squared(&pred_cols[span.start + c], &target_cols[span.start + c]))
                    .collect();
                report.push_group(mix.clone(), 1.0, dataset.clone(), span.name.clone(), per_dim?);
            }
            let payload = serde_json::json!({ "config_digest": "", "report": report });
            std::fs::write(&out, serde_json::to_vec_pretty(&payload)?)?;
            println!("wrote {}", out.display());
            Ok(true)
        }
        Command::Report { command } => match command {
            ReportCommand::Heatmap { report, group, out } => {
                let payload: serde_json::Value =
                    serde_json::from_str(&std::fs::read_to_string(&report)?)?;
                let report: EvalReport = serde_json::from_value(payload["report"].clone())?;
                let csv = emit_heatmap(&report, &group)?;
                std::fs::write(&out, csv)?;
                println!("wrote {}", out.display());
                Ok(true)
            }
        },
        Command::Synth { kind, n, seed, out, dir, name } => {
            let graphs = synth_corpus(kind, n, seed);
            match (out, dir, name) {
                (Some(path), None, _) => {
                    write_jsonl(&path, &graphs)?;
                    println!("wrote {} graphs -> {}", graphs.len(), path.display());
                }
                (None, Some(dir), Some(name)) => {
                    std::fs::create_dir_all(&dir)?;
                    // 80/10/10 split by position (generation is i.i.d.).
                    let train_end = n * 8 / 10;
                    let valid_end = train_end + (n - train_end) / 2;
                    write_jsonl(&dir.join("train.jsonl"), &graphs[..train_end])?;
                    write_jsonl(&dir.join("valid.jsonl"), &graphs[train_end..valid_end])?;
                    write_jsonl(&dir.join("test.jsonl"), &graphs[valid_end..])?;
                    let manifest = serde_json::json!({
                        "name": name,
                        "splits": {
                            "train": "train.jsonl",
                            "valid": "valid.jsonl",
                            "test": "test.jsonl"
                        }
                    });
                    let manifest_path = dir.join("manifest.json");
                    std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
                    println!("wrote dataset {} -> {}", name, manifest_path.display());
                }
                _ => {
                    return Err(Error::Config(
                        "pass either --out <jsonl> or --dir <dir> --name <name>".into(),
                    ))
                }
            }
            Ok(true)
        }
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let record = run_pipeline(cfg)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            Ok(true)
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidGraph { .. }
        | Error::MalformedLine { .. }
        | Error::Manifest(_)
        | Error::SchemaMismatch { .. }
        | Error::Config(_) => 1,
        Error::Stage { source, .. } => exit_code_for(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
