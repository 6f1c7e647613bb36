use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use translationese::cluster::{best_of_restarts, evaluate_majority, xmeans, ClusteringReport, RestartConfig};
use translationese::corpus::{
    balance, make_chunks_by_group, read_chunks, read_documents, write_chunks, write_documents, ChunkSet,
};
use translationese::features::{Resources, SchemeKind, RESOURCE_DIR_ENV};
use translationese::harness::report::{read_json, write_curve_csv, write_json, write_labels_jsonl};
use translationese::harness::{
    markers_from_reference, run_mixed, run_pipeline, run_supervised, sensitivity_sweep, tf_features, Curve, RunConfig,
    SweepInput, SyntheticModel, SyntheticSpec,
};
use translationese::label::MarkerSets;
use translationese::mixed::{weigh, Strategy};
use translationese::reduce::fit_transform;
use translationese::{Error, Result};

#[derive(Parser)]
#[command(
    name = "translationese",
    version,
    about = "Unsupervised identification of translated text"
)]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Directory holding function_words.txt / cohesive_markers.txt.
    #[arg(long, global = true, env = RESOURCE_DIR_ENV)]
    resources: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MarkerSource {
    /// Marker sets (JSON) from an earlier run.
    #[arg(long, conflicts_with = "reference")]
    markers: Option<PathBuf>,
    /// Labeled reference chunks to select markers from.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus.
    Synth {
        /// Generator spec (JSON); defaults are used when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n_chunks_per_class: Option<usize>,
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long)]
        shift_ratio: Option<f64>,
        /// Also write the unchunked documents.
        #[arg(long)]
        documents: bool,
    },
    /// Chunk documents and balance classes.
    Chunk {
        #[arg(long)]
        input: PathBuf,
        /// Keep class proportions as they are.
        #[arg(long)]
        no_balance: bool,
    },
    /// Write a feature matrix as CSV.
    Features {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long, default_value = "FW")]
        scheme: SchemeKind,
    },
    /// Cluster chunks (KMeans, or XMeans with --k-max).
    Cluster {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long, default_value = "FW")]
        scheme: SchemeKind,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Cluster and label with one feature scheme.
    Label {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long)]
        scheme: Option<SchemeKind>,
        #[command(flatten)]
        source: MarkerSource,
    },
    /// Majority vote over several feature schemes.
    Vote {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<SchemeKind>>,
        #[command(flatten)]
        source: MarkerSource,
    },
    /// Mixed-domain classification.
    Mixed {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[command(flatten)]
        source: MarkerSource,
    },
    /// Supervised baseline: ten-fold CV, or train/test with --test.
    Supervised {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Accuracy as a function of data size or chunk size.
    Sweep {
        /// Down-sample these chunks to each point.
        #[arg(long, conflicts_with = "documents")]
        chunks: Option<PathBuf>,
        /// Re-chunk these documents at each point.
        #[arg(long)]
        documents: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<usize>,
        #[command(flatten)]
        source: MarkerSource,
    },
    /// Collect JSON reports into one summary and export curves as CSV.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    resources: Resources,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn markers(&self, source: &MarkerSource) -> Result<MarkerSets> {
        match (&source.markers, &source.reference) {
            (Some(path), _) => {
                let m: MarkerSets = read_json(path)?;
                m.validate(Some(&self.resources.function_words))?;
                Ok(m)
            }
            (None, Some(path)) => {
                let reference = read_chunks(path)?;
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let source = format!("{name} ({})", reference.provenance.config_hash);
                let m = markers_from_reference(&reference, &self.cfg, &self.resources, &source)?;
                write_json(&self.path("markers.json"), &m)?;
                Ok(m)
            }
            (None, None) => Err(Error::Config("pass --markers or --reference".into())),
        }
    }
}

#[derive(serde::Serialize)]
struct ClusterOutput {
    config_hash: String,
    scheme: SchemeKind,
    pca_components: usize,
    majority_accuracy: Option<f64>,
    clustering: ClusteringReport,
}

#[derive(serde::Serialize)]
struct ChunkOutput {
    config_hash: String,
    target_size: usize,
    chunks: usize,
    balanced: bool,
    provenance_hash: String,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let resources = match &cli.resources {
        Some(dir) => Resources::from_dir(dir)?,
        None => Resources::bundled(),
    };
    let mut ctx = Context {
        cfg,
        out: cli.out,
        resources,
    };

    match cli.command {
        Command::Synth {
            spec,
            n_chunks_per_class,
            chunk_size,
            shift_ratio,
            documents,
        } => {
            let mut spec: SyntheticSpec = match spec {
                Some(p) => read_json(&p)?,
                None => SyntheticSpec::default(),
            };
            spec.seed = cli.seed.unwrap_or(spec.seed);
            spec.n_chunks_per_class = n_chunks_per_class.unwrap_or(spec.n_chunks_per_class);
            spec.chunk_size = chunk_size.unwrap_or(spec.chunk_size);
            spec.shift_ratio = shift_ratio.unwrap_or(spec.shift_ratio);
            let model = SyntheticModel::new(&spec, &ctx.resources.function_words)?;
            let docs = model.documents(spec.seed)?;
            if documents {
                write_documents(&ctx.path("documents.jsonl"), &docs)?;
            }
            write_chunks(&ctx.path("chunks.jsonl"), &model.chunk(&docs, spec.seed)?, true)?;
            write_chunks(&ctx.path("reference.jsonl"), &model.reference_sample()?, true)?;
            write_json(&ctx.path("synth.json"), &spec)?;
        }
        Command::Chunk { input, no_balance } => {
            let docs = read_documents(&input)?;
            let mut set = make_chunks_by_group(&docs, ctx.cfg.chunk_target)?;
            let labeled = !set.is_empty() && set.gold().iter().all(Option::is_some);
            let balanced = labeled && !no_balance;
            if balanced {
                set = balance(&set, ctx.cfg.ratio_o_to_t, ctx.cfg.seed)?;
            }
            write_chunks(&ctx.path("chunks.jsonl"), &set, true)?;
            write_json(
                &ctx.path("chunking.json"),
                &ChunkOutput {
                    config_hash: ctx.cfg.hash(),
                    target_size: set.target_size,
                    chunks: set.len(),
                    balanced,
                    provenance_hash: set.provenance.config_hash.clone(),
                },
            )?;
        }
        Command::Features { chunks, scheme } => {
            let set = read_chunks(&chunks)?;
            let tf = tf_features(&set, scheme, &ctx.cfg, &ctx.resources)?;
            let m = weigh(&tf, ctx.cfg.weighting_for(scheme))?;
            m.write_csv(&ctx.path(&format!("features_{scheme}.csv")))?;
        }
        Command::Cluster {
            chunks,
            scheme,
            k,
            k_max,
        } => {
            let set = read_chunks(&chunks)?;
            let tf = tf_features(&set, scheme, &ctx.cfg, &ctx.resources)?;
            let m = weigh(&tf, ctx.cfg.weighting_for(scheme))?;
            let (pca, projected) = fit_transform(m.values.view(), ctx.cfg.variance_covered)?;
            let restart = RestartConfig {
                n_restarts: ctx.cfg.n_restarts,
                max_iterations: ctx.cfg.max_iterations,
                seed: ctx.cfg.judge_seed(scheme),
            };
            let run = match k_max {
                Some(k_max) => xmeans(projected.view(), k, k_max, &restart)?,
                None => best_of_restarts(projected.view(), k, &restart)?,
            };
            let gold = set.gold();
            let majority_accuracy = gold
                .iter()
                .all(Option::is_some)
                .then(|| evaluate_majority(&run, &gold))
                .transpose()?;
            write_json(
                &ctx.path("clustering.json"),
                &ClusterOutput {
                    config_hash: ctx.cfg.hash(),
                    scheme,
                    pca_components: pca.n_components(),
                    majority_accuracy,
                    clustering: run.report(&set.ids()),
                },
            )?;
        }
        Command::Label { chunks, scheme, source } => {
            if let Some(s) = scheme {
                ctx.cfg.schemes = vec![s];
            }
            ctx.cfg.schemes.truncate(1);
            pipeline_command(&ctx, &chunks, &source, false)?;
        }
        Command::Vote {
            chunks,
            schemes,
            source,
        } => {
            ctx.cfg.schemes = schemes.unwrap_or_else(|| SchemeKind::ALL.to_vec());
            pipeline_command(&ctx, &chunks, &source, true)?;
        }
        Command::Mixed {
            chunks,
            k,
            strategy,
            source,
        } => {
            ctx.cfg.k_domains = k.or(ctx.cfg.k_domains);
            ctx.cfg.strategy = strategy.or(ctx.cfg.strategy);
            let set = read_chunks(&chunks)?;
            let markers = ctx.markers(&source)?;
            let report = run_mixed(&ctx.cfg, &set, &markers, &ctx.resources)?;
            write_labels_jsonl(&ctx.path("labels.jsonl"), &report.result.labels)?;
            write_json(&ctx.path("mixed.json"), &report)?;
        }
        Command::Supervised { chunks, test } => {
            let train = read_chunks(&chunks)?;
            let test = test.map(|p| read_chunks(&p)).transpose()?;
            let report = run_supervised(&ctx.cfg, &train, test.as_ref(), &ctx.resources)?;
            write_json(&ctx.path("supervised.json"), &report)?;
        }
        Command::Sweep {
            chunks,
            documents,
            points,
            source,
        } => {
            let markers = ctx.markers(&source)?;
            let curve = match (chunks, documents) {
                (Some(c), _) => {
                    let set = read_chunks(&c)?;
                    sensitivity_sweep(&ctx.cfg, SweepInput::Chunks(&set), &markers, &ctx.resources, &points)?
                }
                (None, Some(d)) => {
                    let docs = read_documents(&d)?;
                    sensitivity_sweep(
                        &ctx.cfg,
                        SweepInput::Documents(&docs),
                        &markers,
                        &ctx.resources,
                        &points,
                    )?
                }
                (None, None) => return Err(Error::Config("pass --chunks or --documents".into())),
            };
            write_curve_csv(&ctx.path("curve.csv"), &curve)?;
            write_json(&ctx.path("curve.json"), &curve)?;
        }
        Command::Report { inputs } => {
            let mut summary = BTreeMap::new();
            for path in &inputs {
                let value: serde_json::Value = read_json(path)?;
                let stem = stem(path);
                if let Ok(curve) = serde_json::from_value::<Curve>(value.clone()) {
                    write_curve_csv(&ctx.path(&format!("{stem}.csv")), &curve)?;
                }
                summary.insert(stem, value);
            }
            write_json(&ctx.path("summary.json"), &summary)?;
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn pipeline_command(ctx: &Context, chunks: &Path, source: &MarkerSource, verdicts: bool) -> Result<()> {
    let set: ChunkSet = read_chunks(chunks)?;
    let markers = ctx.markers(source)?;
    let report = run_pipeline(&ctx.cfg, &set, &markers, &ctx.resources)?;
    write_labels_jsonl(&ctx.path("labels.jsonl"), &report.labels)?;
    if verdicts {
        let ids = set.ids();
        let mut lines = String::new();
        for v in report.verdicts(&ids) {
            lines.push_str(&serde_json::to_string(&v)?);
            lines.push('\n');
        }
        let path = ctx.path("verdicts.jsonl");
        std::fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;
    }
    write_json(&ctx.path("report.json"), &report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
