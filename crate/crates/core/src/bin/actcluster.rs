use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use actcluster::clustering::TransitionSemantics;
use actcluster::data::{adapt_wisdm_v1, generate_synthetic, load_canonical, write_canonical, SynthConfig};
use actcluster::metrics::{Granularity, SubjectSetting};
use actcluster::pipeline::{evaluate, table2, write_assignments, write_embedding, MaskSemantics, PipelineConfig};
use actcluster::Result;

#[derive(Parser)]
#[command(
    name = "actcluster",
    version,
    about = "Unsupervised activity clustering for wearable-sensor data"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cluster a canonical CSV dataset and score the result.
    Run(RunArgs),
    /// Write a synthetic frequency-coded dataset in canonical CSV.
    Synth(SynthArgs),
    /// Convert the WISDM v1.1 raw file to canonical CSV.
    AdaptWisdm { raw: PathBuf, out: PathBuf },
    /// Baseline scores under the four evaluation settings.
    Table2 {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the table as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Sdep,
    Sindep,
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Window,
    Point,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskArg {
    Loss,
    Algorithm1,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransitionArg {
    #[value(name = "self")]
    SelfProb,
    Complement,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    setting: Option<SettingArg>,
    #[arg(long, value_enum, default_value = "both")]
    granularity: GranularityArg,
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_umap: bool,
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    gmm: bool,
    /// No UMAP, no filtering, step 100.
    #[arg(long)]
    baseline: bool,
    /// Replace UMAP by a trained 32→256→2 projector.
    #[arg(long)]
    dimreduce_mlp: bool,
    /// Re-initialize the encoder before every pseudo-label training round
    /// (default true).
    #[arg(long)]
    reinit_encoder: Option<bool>,
    #[arg(long, value_enum)]
    mask_semantics: Option<MaskArg>,
    #[arg(long, value_enum)]
    transition_semantics: Option<TransitionArg>,
    /// Fixed HMM self-transition probability.
    #[arg(long)]
    self_transition: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Per-window cluster assignments as CSV.
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Last clustering-space embedding as CSV.
    #[arg(long)]
    embedding: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 2)]
    subjects: usize,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    #[arg(long, default_value_t = 800)]
    bout_len: usize,
    #[arg(long, default_value_t = 2)]
    bouts_per_class: usize,
    /// Join bouts into one contiguous stream instead of separating them.
    #[arg(long)]
    no_gaps: bool,
    #[arg(long, default_value_t = 0.0)]
    offset_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 50.0)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn run_config(a: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = &a.data {
        cfg.dataset = Some(d.clone());
    }
    if a.k.is_some() {
        cfg.k = a.k;
    }
    if let Some(s) = a.setting {
        cfg.setting = match s {
            SettingArg::Sdep => SubjectSetting::Dependent,
            SettingArg::Sindep => SubjectSetting::Independent,
        };
    }
    if let Some(s) = a.step {
        cfg.step = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.no_umap |= a.no_umap;
    cfg.no_filter |= a.no_filter;
    cfg.gmm |= a.gmm;
    cfg.dimreduce_mlp |= a.dimreduce_mlp;
    if let Some(r) = a.reinit_encoder {
        cfg.reinit_encoder = r;
    }
    if let Some(m) = a.mask_semantics {
        cfg.mask_semantics = match m {
            MaskArg::Loss => MaskSemantics::Loss,
            MaskArg::Algorithm1 => MaskSemantics::Algorithm1,
        };
    }
    if let Some(t) = a.transition_semantics {
        cfg.transition_semantics = match t {
            TransitionArg::SelfProb => TransitionSemantics::SelfProb,
            TransitionArg::Complement => TransitionSemantics::Complement,
        };
    }
    if a.self_transition.is_some() {
        cfg.self_transition = a.self_transition;
    }
    if a.baseline {
        cfg = cfg.baseline();
    }
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = run_config(&a)?;
    let path = cfg
        .dataset
        .clone()
        .ok_or_else(|| actcluster::Error::InvalidArgument("no dataset given (--data or `dataset` key)".into()))?;
    let data = load_canonical(&path)?;
    let eval = evaluate(&cfg, &data)?;
    let mut record = eval.record.clone();
    match a.granularity {
        GranularityArg::Window => record.reports.retain(|r| r.setting.granularity == Granularity::Window),
        GranularityArg::Point => record.reports.retain(|r| r.setting.granularity == Granularity::Point),
        GranularityArg::Both => {}
    }
    let json = serde_json::to_string_pretty(&record)?;
    fs::write(&a.out, json + "\n")
        .map_err(|e| actcluster::Error::InvalidArgument(format!("{}: {e}", a.out.display())))?;
    if let Some(p) = &a.assignments {
        write_assignments(p, &eval)?;
    }
    if let Some(p) = &a.embedding {
        write_embedding(p, &eval)?;
    }
    for r in &record.reports {
        let m = r.metrics;
        println!(
            "{:?}/{:?}: ACC {:.2} NMI {:.2} ARI {:.2} F1 {:.2}",
            r.setting.subject,
            r.setting.granularity,
            m.acc * 100.0,
            m.nmi * 100.0,
            m.ari * 100.0,
            m.f1 * 100.0
        );
    }
    println!("total {:.2}s", record.timing.total);
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        classes: a.classes,
        subjects: a.subjects,
        channels: a.channels,
        bout_len: a.bout_len,
        bouts_per_class: a.bouts_per_class,
        gaps: !a.no_gaps,
        subject_offset_scale: a.offset_scale,
        noise_std: a.noise,
        sample_rate_hz: a.rate,
        seed: a.seed,
    };
    let mut data = generate_synthetic(&cfg)?;
    if let Some(n) = a.name {
        data.name = n;
    }
    write_canonical(&a.out, &data)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Synth(a) => synth(a),
        Cmd::AdaptWisdm { raw, out } => adapt_wisdm_v1(&raw, &out).map(|r| {
            println!("{} rows written, {} skipped", r.rows_written, r.rows_skipped);
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
        }),
        Cmd::Table2 {
            data,
            k,
            seed,
            config,
            out,
        } => (|| {
            let mut cfg = match &config {
                Some(p) => PipelineConfig::from_file(p)?,
                None => PipelineConfig::default(),
            };
            if k.is_some() {
                cfg.k = k;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dataset = load_canonical(&data)?;
            let t = table2(&cfg, &dataset)?;
            print!("{}", t.render());
            if let Some(o) = out {
                fs::write(&o, serde_json::to_string_pretty(&t)? + "\n")
                    .map_err(|e| actcluster::Error::InvalidArgument(format!("{}: {e}", o.display())))?;
            }
            Ok(())
        })(),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
