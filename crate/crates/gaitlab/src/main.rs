use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaitlab_core::template::MahalanobisMetric;
use gaitlab_core::transform::project;
use gaitlab_core::{
    classify_wta, run_experiment, CvMode, CycleSearch, Error as CoreError, ExtractorRegistry,
    GaitSample, JointMap, LocalCost, Method, Modality, Preset, SetupConfig, SetupKind,
    TemplateDistance,
};

use gaitlab::archive::{load_dataset, load_transform, save_dataset, save_transform};
use gaitlab::clock::StdClock;
use gaitlab::error::{ArchiveError, ParseError};
use gaitlab::ingest::{build_dataset, read_pairs, scan_corpus, IngestConfig};
use gaitlab::reports::{dto_csv_row, read_json, write_csv, write_json, CSV_HEADER};
use gaitlab::synth::{generate, SynthConfig};
use gaitlab::{parse_amc, parse_asf};

/// Exit codes: 0 success, 1 validation failure, 2 runtime failure.
#[derive(Debug)]
enum AppError {
    Validation(String),
    Runtime(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Runtime(m) => m,
        }
    }

    fn validation(msg: impl Into<String>) -> Self {
        AppError::Validation(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        AppError::Runtime(msg.into())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        // Repetition failures are classified by their cause.
        if let CoreError::Repetition { index, source } = e {
            return match AppError::from(*source) {
                AppError::Validation(m) => {
                    AppError::Validation(format!("repetition {index}: {m}"))
                }
                AppError::Runtime(m) => AppError::Runtime(format!("repetition {index}: {m}")),
            };
        }
        match e {
            CoreError::InvalidArgument(_)
            | CoreError::ShapeMismatch { .. }
            | CoreError::InvalidSplit(_)
            | CoreError::MissingJoint(_)
            | CoreError::NotImplemented(_)
            | CoreError::UnknownBone(_)
            | CoreError::DofMismatch { .. } => AppError::Validation(e.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<ParseError> for AppError {
    fn from(e: ParseError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<ArchiveError> for AppError {
    fn from(e: ArchiveError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "gaitlab",
    version,
    about = "Gait recognition from motion capture data: ingestion, feature learning, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset archive from an ASF/AMC corpus.
    Ingest(IngestArgs),
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Learn a feature transform from a dataset.
    Learn(LearnArgs),
    /// Evaluate a method under an experiment setup or preset.
    Evaluate(EvaluateArgs),
    /// Classify probe samples against a gallery dataset.
    Classify(ClassifyArgs),
    /// Regenerate the CSV table from JSON reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Directory scanned recursively for <subject>.asf and
    /// <subject>_<sequence>.amc files.
    #[arg(long)]
    corpus: PathBuf,
    /// Skeleton file for the exemplar cycle.
    #[arg(long)]
    exemplar_asf: PathBuf,
    /// Motion file containing the exemplar cycle.
    #[arg(long)]
    exemplar_amc: PathBuf,
    /// Frame range of the exemplar cycle, 1-based inclusive, as START:END.
    #[arg(long)]
    exemplar_range: String,
    /// DTW distance threshold for accepting a cycle (required; never
    /// inferred).
    #[arg(long)]
    threshold: f64,
    /// Raw form stored in the dataset: br or jc.
    #[arg(long, default_value = "br")]
    modality: String,
    /// Candidate window as a fraction range of the exemplar length.
    #[arg(long, default_value = "0.7:1.3")]
    window: String,
    /// Step between candidate start frames.
    #[arg(long, default_value_t = 5)]
    stride: usize,
    /// Subjects with fewer samples are excluded.
    #[arg(long, default_value_t = 10)]
    min_samples: usize,
    /// Normalized frame count; defaults to the rounded mean cycle length.
    #[arg(long)]
    target_frames: Option<usize>,
    /// Capture frame rate in Hz.
    #[arg(long, default_value_t = 120.0)]
    rate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    /// Samples per identity class.
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 15)]
    joints: usize,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 3)]
    harmonics: usize,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Per-channel Gaussian noise level.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 2)]
    cycles_per_sequence: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// mmc or pcalda.
    #[arg(long)]
    method: String,
    /// PCA dimensionality for pcalda (default: the class count).
    #[arg(long)]
    pca_dims: Option<usize>,
    /// Relative singular-value cutoff for mmc.
    #[arg(long)]
    rank_tolerance: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// mmc, pcalda, raw, alis, balla, preisj or random.
    #[arg(long)]
    method: String,
    /// Experiment preset A, B, C or D (a range of setups).
    #[arg(long)]
    preset: Option<String>,
    /// homogeneous or heterogeneous (single setup).
    #[arg(long)]
    kind: Option<String>,
    /// Learning identity count.
    #[arg(long)]
    cl: Option<usize>,
    /// Evaluation identity count.
    #[arg(long)]
    ce: Option<usize>,
    /// Learning sample fraction for homogeneous setups.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    ratio: f64,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Cross-validation flavor: nested or grouped.
    #[arg(long, default_value = "nested")]
    cv: String,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file mapping logical joints to skeleton joint names.
    #[arg(long)]
    joint_map: Option<PathBuf>,
    /// Output directory for report.csv and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    transform: PathBuf,
    /// Dataset archive supplying the labeled gallery.
    #[arg(long)]
    gallery: PathBuf,
    /// Dataset archive with the probe sample(s).
    #[arg(long)]
    probe: PathBuf,
    /// Open-set rejection threshold on the best distance.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report files to merge.
    #[arg(long, num_args = 1.., required = true)]
    json: Vec<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Die silently on closed pipes instead of panicking mid-print, so
/// `gaitlab ... | head` behaves like any other command-line tool.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// GAITLAB_THREADS caps the worker pool used for parallel parsing.
fn configure_threads() {
    if let Ok(value) = std::env::var("GAITLAB_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn materialize_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(rand::random);
    println!("seed: {seed}");
    seed
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), AppError> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| AppError::validation(format!("{what} must look like A:B, got `{text}`")))?;
    let a = a
        .parse()
        .map_err(|_| AppError::validation(format!("{what}: `{a}` is not a number")))?;
    let b = b
        .parse()
        .map_err(|_| AppError::validation(format!("{what}: `{b}` is not a number")))?;
    Ok((a, b))
}

fn cmd_ingest(args: IngestArgs) -> Result<(), AppError> {
    let modality = Modality::parse(&args.modality)
        .ok_or_else(|| AppError::validation(format!("unknown modality `{}`", args.modality)))?;
    let (lo, hi) = parse_pair(&args.window, "--window")?;
    let (start, end) = parse_pair(&args.exemplar_range, "--exemplar-range")?;
    let (start, end) = (start as usize, end as usize);
    if start < 1 || end < start + 1 {
        return Err(AppError::validation(
            "--exemplar-range needs 1 <= START < END",
        ));
    }

    // Cut the exemplar cycle out of its motion file.
    let exemplar_skeleton = parse_asf(&std::fs::read_to_string(&args.exemplar_asf)?)?;
    let exemplar_motion = parse_amc(
        &std::fs::read_to_string(&args.exemplar_amc)?,
        &exemplar_skeleton,
        args.rate,
    )?;
    if end > exemplar_motion.frames() {
        return Err(AppError::validation(format!(
            "--exemplar-range ends at frame {end} but the motion has {}",
            exemplar_motion.frames()
        )));
    }
    let normalized = gaitlab_core::normalize_root(&exemplar_motion);
    let (rotations, _) = normalized.rotation_channels();
    let exemplar = GaitSample::new(
        rotations.rows(start - 1, end - start + 1).into_owned(),
        Modality::BoneRotations,
        "exemplar",
        "exemplar",
        0,
        (end - start + 1) as u32,
        args.rate,
    )?;

    let scan = scan_corpus(&args.corpus)?;
    if scan.is_empty() {
        return Err(AppError::validation(format!(
            "no ASF/AMC pairs found under {}",
            args.corpus.display()
        )));
    }
    let pairs = read_pairs(&scan)?;
    let cycle = CycleSearch {
        threshold: args.threshold,
        window: (lo, hi),
        stride: args.stride,
        local_cost: LocalCost::L1,
    };
    let config = IngestConfig {
        modality,
        cycle,
        min_samples: args.min_samples,
        target_frames: args.target_frames,
        frame_rate: args.rate,
    };
    let outcome = build_dataset(&pairs, &exemplar, &config)?;

    for (subject, sequence, count) in &outcome.extraction_log {
        println!("{subject}/{sequence}: {count} cycles");
    }
    for excluded in &outcome.manifest.excluded {
        println!(
            "excluded {} ({} samples: {})",
            excluded.id, excluded.samples, excluded.reason
        );
    }
    for issue in &outcome.issues {
        eprintln!("failed {}/{}: {}", issue.subject, issue.sequence, issue.message);
    }

    let dataset = outcome.dataset.ok_or_else(|| {
        AppError::runtime("no subjects passed the minimum-samples filter; dataset not written")
    })?;
    save_dataset(&dataset, &outcome.manifest, &args.out)?;
    println!(
        "wrote {} ({} subjects, {} samples, T = {})",
        args.out.display(),
        dataset.class_count(),
        dataset.len(),
        dataset.frames()
    );
    if !outcome.issues.is_empty() {
        return Err(AppError::runtime(format!(
            "{} file(s) failed to ingest",
            outcome.issues.len()
        )));
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), AppError> {
    let seed = materialize_seed(args.seed);
    let cfg = SynthConfig {
        classes: args.classes,
        samples_per_class: args.samples,
        joints: args.joints,
        frames: args.frames,
        harmonics: args.harmonics,
        amplitude: args.amplitude,
        noise_sigma: args.sigma,
        cycles_per_sequence: args.cycles_per_sequence,
        seed,
    };
    let (dataset, manifest) = generate(&cfg)?;
    save_dataset(&dataset, &manifest, &args.out)?;
    println!(
        "wrote {} ({} classes x {} samples, D = {})",
        args.out.display(),
        dataset.class_count(),
        args.samples,
        dataset.dimension()
    );
    Ok(())
}

fn cmd_learn(args: LearnArgs) -> Result<(), AppError> {
    let (dataset, _) = load_dataset(&args.dataset)?;
    let transform = match args.method.to_ascii_lowercase().as_str() {
        "mmc" => gaitlab_core::learn_mmc(&dataset, args.rank_tolerance)?,
        "pcalda" | "pca+lda" => gaitlab_core::learn_pcalda(&dataset, args.pca_dims)?,
        other => {
            return Err(AppError::validation(format!(
                "unknown learning method `{other}` (expected mmc or pcalda)"
            )))
        }
    };
    save_transform(&transform, &args.out)?;
    println!(
        "learned {} on {} classes / {} samples: D = {}, feature dimension = {}",
        transform.method().code(),
        transform.learned_on().classes,
        transform.learned_on().samples,
        transform.input_dim(),
        transform.output_dim()
    );
    let shown = transform.eigenvalues().len().min(8);
    println!("leading eigenvalues: {:?}", &transform.eigenvalues()[..shown]);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn load_joint_map(path: Option<&Path>) -> Result<JointMap, AppError> {
    match path {
        None => Ok(JointMap::cmu_default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let entries: std::collections::BTreeMap<String, String> = serde_json::from_str(&text)
                .map_err(|e| AppError::validation(format!("joint map: {e}")))?;
            Ok(JointMap::from_pairs(entries))
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), AppError> {
    let (dataset, _) = load_dataset(&args.dataset)?;
    let seed = materialize_seed(args.seed);
    let cv_mode = CvMode::parse(&args.cv)
        .ok_or_else(|| AppError::validation(format!("unknown cv mode `{}`", args.cv)))?;
    let method = Method::parse(&args.method);
    if let Method::Extractor(name) = &method {
        let known = gaitlab_core::extractors::IMPLEMENTED_METHODS
            .iter()
            .chain(gaitlab_core::extractors::STUB_METHODS)
            .any(|m| m == name);
        if !known {
            return Err(AppError::validation(format!("unknown method `{name}`")));
        }
    }

    let base = SetupConfig {
        kind: SetupKind::Homogeneous,
        learn_classes: 2,
        eval_classes: 2,
        learn_ratio: args.ratio,
        repetitions: args.repetitions,
        folds: args.folds,
        cv_mode,
        seed,
    };
    let setups: Vec<SetupConfig> = match (&args.preset, &args.kind) {
        (Some(letter), None) => {
            let preset = Preset::parse(letter)
                .ok_or_else(|| AppError::validation(format!("unknown preset `{letter}`")))?;
            let setups = preset.setups(dataset.class_count(), &base);
            if setups.is_empty() {
                return Err(AppError::validation(format!(
                    "preset {letter} yields no setups for {} classes",
                    dataset.class_count()
                )));
            }
            setups
        }
        (None, Some(kind)) => {
            let kind = SetupKind::parse(kind)
                .ok_or_else(|| AppError::validation(format!("unknown setup kind `{kind}`")))?;
            let cl = args
                .cl
                .ok_or_else(|| AppError::validation("--cl is required without --preset"))?;
            let ce = match kind {
                SetupKind::Homogeneous => cl,
                SetupKind::Heterogeneous => args.ce.ok_or_else(|| {
                    AppError::validation("--ce is required for heterogeneous setups")
                })?,
            };
            vec![SetupConfig {
                kind,
                learn_classes: cl,
                eval_classes: ce,
                ..base
            }]
        }
        (Some(_), Some(_)) => {
            return Err(AppError::validation(
                "--preset and --kind are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(AppError::validation("one of --preset or --kind is required"))
        }
    };

    let registry = ExtractorRegistry::new(load_joint_map(args.joint_map.as_deref())?);
    let clock = StdClock::new();
    std::fs::create_dir_all(&args.out)?;

    let mut reports = Vec::with_capacity(setups.len());
    for setup in &setups {
        let report = run_experiment(&dataset, &method, setup, &registry, &clock)?;
        println!(
            "{} {} C_L={} C_E={}: CCR {:.3}{}",
            report.method,
            setup.kind.code(),
            setup.learn_classes,
            setup.eval_classes,
            report.average.ccr,
            match report.average.eer {
                Some(e) => format!(", EER {e:.3}"),
                None => String::new(),
            }
        );
        reports.push(report);
    }

    let csv_path = args.out.join("report.csv");
    let json_path = args.out.join("report.json");
    write_csv(&reports, &csv_path)?;
    write_json(&reports, &json_path)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), AppError> {
    let transform = load_transform(&args.transform)?;
    let (gallery, _) = load_dataset(&args.gallery)?;
    let (probes, _) = load_dataset(&args.probe)?;

    for (name, ds) in [("gallery", &gallery), ("probe", &probes)] {
        if ds.modality() != transform.learned_on().modality {
            return Err(AppError::validation(format!(
                "{name} modality {} does not match the transform's {}",
                ds.modality().code(),
                transform.learned_on().modality.code()
            )));
        }
        if ds.dimension() != transform.input_dim() {
            return Err(AppError::validation(format!(
                "{name} dimension {} does not match the transform's {} (frames {} vs {})",
                ds.dimension(),
                transform.input_dim(),
                ds.frames(),
                transform.learned_on().frames
            )));
        }
    }

    let metric =
        TemplateDistance::Mahalanobis(MahalanobisMetric::new(transform.inverse_total().clone())?);
    let gallery_templates: Vec<_> = gallery
        .samples()
        .iter()
        .map(|s| project(&transform, s))
        .collect::<Result<_, _>>()?;

    for sample in probes.samples() {
        let template = project(&transform, sample)?;
        // Per-class best distance, ranked ascending.
        let mut per_class: Vec<(String, f64)> = Vec::new();
        for (g, t) in gallery.samples().iter().zip(&gallery_templates) {
            let d = metric.distance(&template.data, &t.data)?;
            match per_class.iter_mut().find(|(label, _)| label == g.subject()) {
                Some((_, best)) => {
                    if d < *best {
                        *best = d;
                    }
                }
                None => per_class.push((g.subject().to_string(), d)),
            }
        }
        per_class.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        let winner = classify_wta(&template.data, &gallery_templates, &metric)?;
        println!("probe {}/{}:", sample.subject(), sample.sequence());
        match args.threshold {
            Some(t) if per_class[0].1 > t => {
                println!(
                    "  rejected (best distance {} above threshold {t})",
                    per_class[0].1
                );
            }
            _ => println!("  identified as {winner}"),
        }
        for (label, d) in per_class.iter().take(10) {
            println!("  {label}  {d:.6}");
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), AppError> {
    let mut rows = vec![CSV_HEADER.to_string()];
    for path in &args.json {
        for dto in read_json(path)? {
            rows.push(dto_csv_row(&dto));
        }
    }
    let text = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
