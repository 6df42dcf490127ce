use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};

use acorn::bundle::Bundle;
use acorn::detect::{Decision, DEFAULT_ENERGY};
use acorn::eval::{
    curve_csv, decision_log_csv, naive_curve, per_class_curve, reports_csv, reports_json, run_openset,
    softmax_curve, SplitSpec, DEFAULT_TRAIN_FRACTION,
};
use acorn::features::{FeatureLayout, FeatureSet, NgramVocabulary, DEFAULT_TOP_M};
use acorn::mlp::TrainConfig;
use acorn::pipeline::{
    featurize_set, fit_detectors, generate_catalog, read_traces, roles, subsequences, trace_files,
    train_classifier, training_vocab, PipelineConfig, DEFAULT_SUBSEQ_LEN,
};
use acorn::synth::{presets, Catalog, Workload};
use acorn::trace::{label_from_path, read_trace_file, write_trace_file, DramGeometry, IngestReport};

/// Open-set workload recognition for DRAM command traces.
#[derive(Debug, Parser)]
#[command(name = "acorn", version)]
struct Cli {
    /// DRAM geometry as a TOML file (default: 2 ranks x 4 groups x 4 banks).
    #[arg(long, global = true)]
    geometry: Option<PathBuf>,
    /// Records per subsequence.
    #[arg(long, global = true, default_value_t = DEFAULT_SUBSEQ_LEN)]
    subseq_len: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Skip per-feature standardization.
    #[arg(long, global = true)]
    no_standardize: bool,
    /// Threshold multiplier used by `predict`.
    #[arg(long, global = true, default_value_t = 3.0)]
    alpha: f64,
    /// Alpha values reported by `evaluate`.
    #[arg(long, global = true, value_delimiter = ',', default_value = "1,1.5,2,2.5,3")]
    alpha_grid: Vec<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Roles {
    /// Known workload labels (comma separated).
    #[arg(long, value_delimiter = ',')]
    known: Vec<String>,
    /// Unknown workload labels (comma separated).
    #[arg(long, value_delimiter = ',')]
    unknown: Vec<String>,
    /// Take roles from a profile catalog instead.
    #[arg(long, conflicts_with_all = ["known", "unknown"])]
    roles: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic traces from a preset or a profile catalog.
    Gen {
        #[arg(long, conflicts_with = "catalog", required_unless_present = "catalog")]
        preset: Option<String>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Records per workload (default: 20 subsequences).
        #[arg(long)]
        length: Option<usize>,
        /// Write gzip-compressed traces.
        #[arg(long)]
        gzip: bool,
    },
    /// Build the n-gram vocabulary from the known workloads' training split.
    Vocab {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_M)]
        top_m: usize,
        #[arg(long, value_delimiter = ',', default_value = "7,11,15")]
        n_values: Vec<usize>,
        #[command(flatten)]
        roles: Roles,
    },
    /// Parse, partition and featurize traces into one feature file.
    Ingest {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the standardizer and train the classifier.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        learning_rate: f64,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = acorn::mlp::DEFAULT_HIDDEN)]
        hidden: usize,
        #[command(flatten)]
        roles: Roles,
    },
    /// Fit and calibrate the per-class and pooled detectors.
    FitDetectors {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Output bundle (default: overwrite the input).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENERGY)]
        energy: f64,
    },
    /// Score the test split and write reports.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Label every complete subsequence of one trace.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::InvalidValue, msg).exit()
}

fn resolve_roles(roles: &Roles, fallback: Option<&Path>, geometry: &DramGeometry, seed: u64) -> acorn::Result<SplitSpec> {
    let (known, unknown) = if let Some(path) = roles.roles.as_deref() {
        self::roles(&Catalog::from_toml_file(path, geometry)?)
    } else if !roles.known.is_empty() {
        (roles.known.clone(), roles.unknown.clone())
    } else if let Some(path) = fallback.filter(|p| p.exists()) {
        self::roles(&Catalog::from_toml_file(path, geometry)?)
    } else {
        usage_error("workload roles needed: pass --known/--unknown or --roles <catalog.toml>")
    };
    Ok(SplitSpec::new(known, unknown, roles.train_fraction, seed))
}

fn write(path: &Path, text: &str) -> acorn::Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> acorn::Result<()> {
    let geometry = match &cli.geometry {
        Some(p) => DramGeometry::from_toml_file(p)?,
        None => DramGeometry::default(),
    };
    if cli.subseq_len == 0 {
        usage_error("--subseq-len must be at least 1");
    }
    let cfg = PipelineConfig {
        geometry,
        subseq_len: cli.subseq_len,
        standardize: !cli.no_standardize,
        alpha_grid: cli.alpha_grid.clone(),
        seed: cli.seed,
        train: TrainConfig {
            seed: cli.seed,
            ..TrainConfig::default()
        },
        ..PipelineConfig::default()
    };

    match cli.command {
        Command::Gen {
            preset,
            catalog,
            out,
            length,
            gzip,
        } => {
            let mut catalog = match (preset, catalog) {
                (Some(name), _) => presets::by_name(&name, &geometry)
                    .unwrap_or_else(|| usage_error(format!("unknown preset {name}"))),
                (None, Some(path)) => Catalog::from_toml_file(&path, &geometry)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            for (w, _) in &mut catalog.entries {
                match w {
                    Workload::Profile(p) => p.seed ^= cli.seed,
                    Workload::Interleave(i) => i.seed ^= cli.seed,
                }
            }
            let length = length.unwrap_or(20 * cli.subseq_len);
            std::fs::create_dir_all(&out)?;
            let seqs = generate_catalog(&catalog, length, &geometry)?;
            let ext = if gzip { "csv.gz" } else { "csv" };
            for seq in &seqs {
                let path = out.join(format!("{}.{ext}", seq.label));
                write_trace_file(&path, &seq.records)?;
                println!("{}\t{} records", path.display(), seq.len());
            }
            write(&out.join("catalog.toml"), &catalog.to_toml())?;
        }
        Command::Vocab {
            traces,
            out,
            top_m,
            n_values,
            roles,
        } => {
            let spec = resolve_roles(&roles, Some(&traces.join("catalog.toml")), &geometry, cli.seed)?;
            let seqs = read_traces(&trace_files(&traces)?, &geometry)?;
            let cfg = PipelineConfig {
                top_m,
                n_values,
                ..cfg
            };
            let vocab = training_vocab(&subsequences(&seqs, cfg.subseq_len), &spec, &cfg)?;
            vocab.save(&out)?;
            println!("vocabulary sizes {:?}, total {}", vocab.sizes(), vocab.len());
        }
        Command::Ingest { traces, vocab, out } => {
            let layout = FeatureLayout::new(NgramVocabulary::load(&vocab)?, geometry);
            let mut subseqs = Vec::new();
            for path in trace_files(&traces)? {
                let seq = read_trace_file(&path, &geometry)?;
                let report = IngestReport::new(seq.len(), cfg.subseq_len);
                println!(
                    "{}\t{} records, {} subsequences, {} dropped",
                    seq.label, report.records, report.subsequences, report.dropped_records
                );
                subseqs.extend(acorn::trace::partition(&seq, cfg.subseq_len));
            }
            let set = featurize_set(&layout, &subseqs);
            set.save(&out)?;
            println!("{} rows x {} features", set.len(), set.dim());
        }
        Command::Train {
            features,
            vocab,
            out,
            learning_rate,
            batch_size,
            epochs,
            hidden,
            roles,
        } => {
            let spec = resolve_roles(&roles, None, &geometry, cli.seed)?;
            let set = FeatureSet::load(&features)?;
            let layout = FeatureLayout::new(NgramVocabulary::load(&vocab)?, geometry);
            let cfg = PipelineConfig {
                subseq_len: infer_subseq_len(&set, &layout).unwrap_or(cfg.subseq_len),
                train: TrainConfig {
                    learning_rate,
                    batch_size,
                    epochs,
                    hidden,
                    ..cfg.train.clone()
                },
                ..cfg
            };
            let bundle = train_classifier(&set, &layout, &spec, &cfg)?;
            bundle.save(&out)?;
            println!("trained {} classes on {} features", bundle.labels().len(), layout.dim());
        }
        Command::FitDetectors {
            features,
            bundle,
            out,
            energy,
        } => {
            let set = FeatureSet::load(&features)?;
            let mut b = Bundle::load(&bundle)?;
            fit_detectors(&mut b, &set, energy, &cli.alpha_grid)?;
            for (label, d) in b.labels().iter().zip(&b.detectors.as_ref().expect("just fitted").detectors) {
                println!("{label}\trank {}", d.rank());
            }
            b.save(out.as_deref().unwrap_or(&bundle))?;
        }
        Command::Evaluate {
            features,
            bundle,
            out_dir,
        } => {
            let set = FeatureSet::load(&features)?;
            let b = Bundle::load(&bundle)?;
            let eval = run_openset(&b, &set, &cli.alpha_grid)?;
            std::fs::create_dir_all(&out_dir)?;
            let csv = reports_csv(&eval.reports);
            write(&out_dir.join("report.csv"), &csv)?;
            write(&out_dir.join("report.json"), &reports_json(&eval.reports)?)?;
            let dense: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
            let mut curve = per_class_curve(&b, &eval.scored, &dense);
            curve.extend(naive_curve(&b, &eval.scored).unwrap_or_default());
            curve.extend(softmax_curve(&eval.scored));
            write(&out_dir.join("curve.csv"), &curve_csv(&curve))?;
            write(
                &out_dir.join("decisions.csv"),
                &decision_log_csv(&b, &set, &eval.scored, &cli.alpha_grid),
            )?;
            print!("{csv}");
        }
        Command::Predict { bundle, trace } => {
            let b = Bundle::load(&bundle)?;
            let seq = read_trace_file(&trace, &b.layout.geometry)?;
            let decisions = acorn::pipeline::predict_trace(&b, &seq, cli.alpha)?;
            println!("# {}", label_from_path(&trace));
            for (block, d) in decisions.iter().enumerate() {
                match d {
                    Decision::Known(w) => println!("{block}\t{}", b.labels()[*w]),
                    Decision::Unknown => println!("{block}\tUNKNOWN"),
                }
            }
        }
    }
    Ok(())
}

/// Every subsequence's bank counts sum to its length.
fn infer_subseq_len(set: &FeatureSet, layout: &FeatureLayout) -> Option<usize> {
    let (bank_at, block_at) = layout.offsets();
    let row = set.data.rows().into_iter().next()?;
    Some(row.slice(ndarray::s![bank_at..block_at]).sum().round() as usize)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
