use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use blendaug::align::{parse_ctm, pure_phone, PhonemeInterval};
use blendaug::blender::LabelMode;
use blendaug::closedict::{default_inventory, CloseDict, DonorWeighting};
use blendaug::gopfeat::{
    gop_augment, gop_vector, text_augment, GopBank, GopRecord, PosteriorMatrix, SwapKind,
    SwapPolicy,
};
use blendaug::mask::{dump_mask, get_property, MaskParams, Template};
use blendaug::pipeline::{self, parse_manifest, utterance_rng, AugConfig, Corpus, MaskChoice};
use blendaug::Error;

const SEED_ENV: &str = "BLENDAUG_SEED";

#[derive(Debug)]
enum CliError {
    /// Bad flags or config: exit 2.
    Usage(String),
    /// Data or I/O failure: exit 1.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidMaskParam(_) | Error::SegmentTooShort { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

#[derive(Parser)]
#[command(
    name = "blendaug",
    version,
    about = "Phoneme-level audio blending for mispronunciation data augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blend candidate phones with close donors across a corpus.
    Augment(AugmentArgs),
    /// Write the per-frame mixing curve of a mask as CSV.
    MaskDump(MaskDumpArgs),
    /// Compute 84-dim GOP vectors from frame posteriors.
    Gop(GopArgs),
    /// Swap one phone per utterance in the canonical phone sequence.
    TextAug(TextAugArgs),
    /// Swap one GOP vector per utterance with a donor vector.
    GopAug(GopAugArgs),
    /// Check input files against their schemas.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelModeArg {
    FrameWeighted,
    PaperFloor,
}

impl From<LabelModeArg> for LabelMode {
    fn from(m: LabelModeArg) -> Self {
        match m {
            LabelModeArg::FrameWeighted => LabelMode::FrameWeighted,
            LabelModeArg::PaperFloor => LabelMode::PaperFloor,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    ConfusionWeighted,
    Uniform,
}

impl From<WeightingArg> for DonorWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::ConfusionWeighted => DonorWeighting::ConfusionWeighted,
            WeightingArg::Uniform => DonorWeighting::Uniform,
        }
    }
}

#[derive(Args, Default)]
struct MaskParamArgs {
    /// Constant mix of the smooth overlay.
    #[arg(long)]
    lambda: Option<f64>,
    /// Dip depth of the Gaussian overlay.
    #[arg(long)]
    a: Option<f64>,
    /// Gaussian width as a fraction divisor: sigma = N / sigma_frac.
    #[arg(long)]
    sigma_frac: Option<f64>,
    /// Cross-fade share of the smooth concatenation.
    #[arg(long)]
    crossfade: Option<f64>,
}

impl MaskParamArgs {
    fn is_set(&self) -> bool {
        self.lambda.is_some()
            || self.a.is_some()
            || self.sigma_frac.is_some()
            || self.crossfade.is_some()
    }

    fn apply(&self, mut params: MaskParams) -> MaskParams {
        if let Some(v) = self.lambda {
            params.overlay_lambda = v;
        }
        if let Some(v) = self.a {
            params.gaussian_depth = v;
        }
        if let Some(v) = self.sigma_frac {
            params.gaussian_sigma_frac = v;
        }
        if let Some(v) = self.crossfade {
            params.crossfade_frac = v;
        }
        params
    }
}

#[derive(Args)]
struct AugmentArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Close phoneme pair dictionary (TSV).
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Input manifest (JSONL).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Phone alignment (CTM).
    #[arg(long)]
    ctm: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long, value_enum)]
    label_mode: Option<LabelModeArg>,
    #[arg(long, value_enum)]
    donor_weighting: Option<WeightingArg>,
    #[arg(long)]
    min_segment_frames: Option<usize>,
    /// Use a single mask template instead of the configured pool.
    #[arg(long)]
    mask: Option<String>,
    #[command(flatten)]
    params: MaskParamArgs,
}

#[derive(Args)]
struct MaskDumpArgs {
    template: String,
    /// Candidate length in frames.
    #[arg(long)]
    t: usize,
    /// Donor length in frames.
    #[arg(long)]
    l: usize,
    #[command(flatten)]
    params: MaskParamArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GopArgs {
    #[arg(long)]
    ctm: PathBuf,
    /// A posterior CSV, or a directory holding `<utt_id>.csv` files.
    #[arg(long)]
    posteriors: PathBuf,
    /// Seconds per posterior frame.
    #[arg(long, default_value_t = 0.01)]
    frame_shift: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TextAugArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    ctm: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    /// Probability of a close swap (label 1) over a distant swap (label 0).
    #[arg(long, default_value_t = 0.5)]
    close_ratio: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "confusion-weighted")]
    donor_weighting: WeightingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GopAugArgs {
    /// GOP JSONL as written by `gop`.
    #[arg(long)]
    gop: PathBuf,
    /// Input manifest supplying per-phone scores.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    close_ratio: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "confusion-weighted")]
    donor_weighting: WeightingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    ctm: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    posteriors: Option<PathBuf>,
}

/// The TOML run file. Every field is optional so flags can fill the gaps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    dict: Option<PathBuf>,
    manifest: Option<PathBuf>,
    ctm: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    candidates_per_utterance: Option<usize>,
    label_mode: Option<LabelMode>,
    donor_weighting: Option<DonorWeighting>,
    min_segment_frames: Option<usize>,
    mask_pool: Option<Vec<MaskChoice>>,
}

#[derive(Debug, Serialize)]
struct EffectiveConfig {
    dict: PathBuf,
    manifest: PathBuf,
    ctm: PathBuf,
    #[serde(flatten)]
    aug: AugConfig,
}

fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            usage(format!(
                "invalid config field `seed`: {SEED_ENV}={v:?} is not an integer"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Flag, then explicit value, then environment, then 0.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> CliResult<u64> {
    match flag.or(file) {
        Some(s) => Ok(s),
        None => Ok(env_seed()?.unwrap_or(0)),
    }
}

fn required_path(
    field: &str,
    flag: Option<PathBuf>,
    file: Option<PathBuf>,
    base: &Path,
) -> CliResult<PathBuf> {
    let path = match (flag, file) {
        (Some(p), _) => p,
        (None, Some(p)) if p.is_relative() => base.join(p),
        (None, Some(p)) => p,
        (None, None) => {
            return Err(usage(format!(
                "invalid config field `{field}`: missing {field} path"
            )));
        }
    };
    if !path.exists() {
        return Err(usage(format!(
            "invalid config field `{field}`: {field} path {} does not exist",
            path.display()
        )));
    }
    Ok(path)
}

fn resolve_augment(args: &AugmentArgs) -> CliResult<EffectiveConfig> {
    let file = match &args.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let base = args
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let defaults = AugConfig::default();

    let mask_pool = match &args.mask {
        Some(name) => {
            let template: Template = name
                .parse()
                .map_err(|e: Error| usage(format!("invalid config field `mask`: {e}")))?;
            vec![MaskChoice::new(
                template,
                args.params.apply(MaskParams::default()),
            )]
        }
        None if args.params.is_set() => {
            return Err(usage("mask parameter flags require --mask"));
        }
        None => file.mask_pool.unwrap_or(defaults.mask_pool),
    };
    let output_dir = match (&args.output_dir, file.output_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) if p.is_relative() => base.join(p),
        (None, Some(p)) => p,
        (None, None) => defaults.output_dir,
    };

    let aug = AugConfig {
        seed: resolve_seed(args.seed, file.seed)?,
        candidates_per_utterance: args
            .candidates
            .or(file.candidates_per_utterance)
            .unwrap_or(defaults.candidates_per_utterance),
        mask_pool,
        label_mode: args
            .label_mode
            .map(Into::into)
            .or(file.label_mode)
            .unwrap_or_default(),
        donor_weighting: args
            .donor_weighting
            .map(Into::into)
            .or(file.donor_weighting)
            .unwrap_or_default(),
        min_segment_frames: args
            .min_segment_frames
            .or(file.min_segment_frames)
            .unwrap_or(defaults.min_segment_frames),
        output_dir,
        workers: args.workers.or(file.workers).unwrap_or(defaults.workers),
    };
    aug.validate()?;
    Ok(EffectiveConfig {
        dict: required_path("dict", args.dict.clone(), file.dict, &base)?,
        manifest: required_path("manifest", args.manifest.clone(), file.manifest, &base)?,
        ctm: required_path("ctm", args.ctm.clone(), file.ctm, &base)?,
        aug,
    })
}

fn cmd_augment(args: AugmentArgs) -> CliResult {
    let config = resolve_augment(&args)?;
    let echo = toml::to_string(&config).map_err(|e| runtime(e.to_string()))?;
    eprintln!("# effective config\n{echo}");

    let dict = CloseDict::load(&config.dict, default_inventory())
        .map_err(|e| runtime(format!("dict {}: {e}", config.dict.display())))?;
    let corpus = Corpus::load(&config.manifest, &config.ctm)?;
    let summary = pipeline::run(&config.aug, &corpus, &dict)?;

    let mut err = io::stderr().lock();
    let _ = writeln!(err, "utterances  {}", summary.utterances);
    let _ = writeln!(err, "produced    {}", summary.produced);
    for (label, n) in &summary.by_label {
        let _ = writeln!(err, "  label {label}  {n}");
    }
    for (template, n) in &summary.by_template {
        let _ = writeln!(err, "  {template:<24}{n}");
    }
    let skipped: usize = summary.skipped.values().sum();
    let _ = writeln!(err, "skipped     {skipped}");
    for (reason, n) in &summary.skipped {
        let _ = writeln!(err, "  {reason:<24}{n}");
    }
    let _ = writeln!(err, "manifest    {}", summary.manifest_path.display());
    for (utt, e) in &summary.errors {
        let _ = writeln!(err, "error: {utt}: {e}");
    }
    if summary.is_success() {
        Ok(())
    } else {
        Err(runtime(format!(
            "{} utterance(s) failed",
            summary.errors.len()
        )))
    }
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_jsonl<T: Serialize>(out: &mut dyn Write, row: &T) -> CliResult {
    let line = serde_json::to_string(row).map_err(|e| runtime(e.to_string()))?;
    writeln!(out, "{line}").map_err(|e| runtime(e.to_string()))
}

fn cmd_mask_dump(args: MaskDumpArgs) -> CliResult {
    let template: Template = args
        .template
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let property = get_property(
        template,
        args.t,
        args.l,
        args.params.apply(MaskParams::default()),
    )?;
    let mut out = open_output(args.out.as_deref())?;
    out.write_all(dump_mask(&property).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| runtime(e.to_string()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn group_by_utt(intervals: Vec<PhonemeInterval>) -> BTreeMap<String, Vec<PhonemeInterval>> {
    let mut out: BTreeMap<String, Vec<PhonemeInterval>> = BTreeMap::new();
    for iv in intervals {
        out.entry(iv.utt_id.clone()).or_default().push(iv);
    }
    for ivs in out.values_mut() {
        ivs.sort_by(|a, b| a.start.total_cmp(&b.start));
    }
    out
}

fn cmd_gop(args: GopArgs) -> CliResult {
    if !(args.frame_shift > 0.0 && args.frame_shift.is_finite()) {
        return Err(usage(format!(
            "invalid config field `frame_shift`: {} must be positive",
            args.frame_shift
        )));
    }
    let ctm = parse_ctm(&read_text(&args.ctm)?)
        .map_err(|e| runtime(format!("{}: {e}", args.ctm.display())))?;
    let by_utt = group_by_utt(ctm);
    let per_utt_files = args.posteriors.is_dir();
    if !per_utt_files && by_utt.len() > 1 {
        return Err(usage(
            "a single posterior file serves one utterance; pass a directory of <utt_id>.csv files",
        ));
    }

    let mut out = open_output(args.out.as_deref())?;
    for (utt, intervals) in &by_utt {
        let path = if per_utt_files {
            args.posteriors.join(format!("{utt}.csv"))
        } else {
            args.posteriors.clone()
        };
        let matrix = PosteriorMatrix::load(&path)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        for (idx, iv) in intervals.iter().enumerate() {
            let start = (iv.start / args.frame_shift).round() as usize;
            let end = ((iv.end() / args.frame_shift).round() as usize).min(matrix.frames());
            if start >= end {
                return Err(runtime(format!(
                    "{utt}: phone #{idx} ({}) covers no posterior frames ({} available)",
                    iv.phone,
                    matrix.frames()
                )));
            }
            let vector = gop_vector(&matrix, pure_phone(&iv.phone), start..end)
                .map_err(|e| runtime(format!("{utt}: phone #{idx}: {e}")))?;
            write_jsonl(&mut out, &GopRecord::new(utt.as_str(), idx, &vector))?;
        }
    }
    out.flush().map_err(|e| runtime(e.to_string()))
}

fn load_dict(path: &Path) -> CliResult<CloseDict> {
    if !path.exists() {
        return Err(usage(format!(
            "invalid config field `dict`: dict path {} does not exist",
            path.display()
        )));
    }
    CloseDict::load(path, default_inventory())
        .map_err(|e| runtime(format!("dict {}: {e}", path.display())))
}

#[derive(Serialize)]
struct TextAugRow<'a> {
    utt_id: &'a str,
    position: usize,
    original: &'a str,
    replacement: &'a str,
    kind: SwapKind,
    label: u8,
    phones: &'a [String],
    labels: &'a [u8],
}

fn cmd_text_aug(args: TextAugArgs) -> CliResult {
    let policy = SwapPolicy::new(args.close_ratio, args.donor_weighting.into())?;
    let seed = resolve_seed(args.seed, None)?;
    let dict = load_dict(&args.dict)?;
    let corpus = Corpus::load(&args.manifest, &args.ctm)?;

    let mut out = open_output(args.out.as_deref())?;
    for utt in corpus.utterance_ids() {
        let record = corpus.utterance(utt).expect("listed utterance");
        let phones: Vec<String> = record
            .phones
            .iter()
            .map(|iv| pure_phone(&iv.phone).to_string())
            .collect();
        let labels: Vec<u8> = record
            .phones
            .iter()
            .map(|iv| iv.score.unwrap_or(0))
            .collect();
        let mut rng = utterance_rng(seed, utt);
        match text_augment(&phones, &labels, &dict, &mut rng, policy) {
            Ok(swap) => write_jsonl(
                &mut out,
                &TextAugRow {
                    utt_id: utt,
                    position: swap.position,
                    original: &swap.original,
                    replacement: &swap.replacement,
                    kind: swap.kind,
                    label: swap.kind.label(),
                    phones: &swap.phones,
                    labels: &swap.labels,
                },
            )?,
            Err(Error::NoCandidate) => eprintln!("warning: {utt}: no good phone to swap"),
            Err(e) => return Err(runtime(format!("{utt}: {e}"))),
        }
    }
    out.flush().map_err(|e| runtime(e.to_string()))
}

#[derive(Serialize)]
struct GopAugRow<'a> {
    utt: &'a str,
    phone_index: usize,
    canonical: &'a str,
    donor: &'a str,
    kind: SwapKind,
    label: u8,
    layout: &'a str,
    values: &'a [f64],
}

fn cmd_gop_aug(args: GopAugArgs) -> CliResult {
    let policy = SwapPolicy::new(args.close_ratio, args.donor_weighting.into())?;
    let seed = resolve_seed(args.seed, None)?;
    let dict = load_dict(&args.dict)?;
    let manifest = parse_manifest(&read_text(&args.manifest)?)
        .map_err(|e| runtime(format!("{}: {e}", args.manifest.display())))?;
    let scores: BTreeMap<&str, &[u8]> = manifest
        .iter()
        .map(|m| (m.utt_id.as_str(), m.scores.as_slice()))
        .collect();

    let mut good: BTreeMap<String, Vec<GopRecord>> = BTreeMap::new();
    let mut bank = GopBank::new();
    for (i, line) in read_text(&args.gop)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: GopRecord = serde_json::from_str(line)
            .map_err(|e| runtime(format!("{}: line {}: {e}", args.gop.display(), i + 1)))?;
        let vector = record
            .to_vector()
            .map_err(|e| runtime(format!("{}: line {}: {e}", args.gop.display(), i + 1)))?;
        let utt_scores = scores.get(record.utt.as_str()).ok_or_else(|| {
            runtime(format!(
                "{}: line {}: utterance {:?} not in manifest",
                args.gop.display(),
                i + 1,
                record.utt
            ))
        })?;
        let score = *utt_scores.get(record.phone_index).ok_or_else(|| {
            runtime(format!(
                "{}: line {}: phone index {} beyond {} scores",
                args.gop.display(),
                i + 1,
                record.phone_index,
                utt_scores.len()
            ))
        })?;
        if score == blendaug::blender::GoodScore::SPEECHOCEAN.value() {
            bank.insert(vector);
            good.entry(record.utt.clone()).or_default().push(record);
        }
    }

    let mut out = open_output(args.out.as_deref())?;
    for (utt, records) in &good {
        let mut rng = utterance_rng(seed, utt);
        let cand = &records[rand::Rng::gen_range(&mut rng, 0..records.len())];
        match gop_augment(&bank, &cand.canonical, &dict, &mut rng, policy) {
            Ok(swap) => write_jsonl(
                &mut out,
                &GopAugRow {
                    utt,
                    phone_index: cand.phone_index,
                    canonical: &cand.canonical,
                    donor: &swap.donor,
                    kind: swap.kind,
                    label: swap.label,
                    layout: &cand.layout,
                    values: swap.vector.values(),
                },
            )?,
            Err(e @ Error::EmptyBank(_)) => eprintln!("warning: {utt}: {e}"),
            Err(e) => return Err(runtime(format!("{utt}: {e}"))),
        }
    }
    out.flush().map_err(|e| runtime(e.to_string()))
}

fn cmd_validate(args: ValidateArgs) -> CliResult {
    if args.ctm.is_none()
        && args.manifest.is_none()
        && args.dict.is_none()
        && args.posteriors.is_none()
    {
        return Err(usage(
            "nothing to validate: pass --ctm, --manifest, --dict or --posteriors",
        ));
    }
    let fail = |path: &Path, e: Error| runtime(format!("{}: {e}", path.display()));

    let mut ctm = None;
    if let Some(p) = &args.ctm {
        let ivs = parse_ctm(&read_text(p)?).map_err(|e| fail(p, e))?;
        eprintln!("ok: {} ({} intervals)", p.display(), ivs.len());
        ctm = Some(ivs);
    }
    let mut manifest = None;
    if let Some(p) = &args.manifest {
        let entries = parse_manifest(&read_text(p)?).map_err(|e| fail(p, e))?;
        eprintln!("ok: {} ({} utterances)", p.display(), entries.len());
        manifest = Some(entries);
    }
    if let (Some(ivs), Some(entries), Some(p)) = (ctm, manifest, &args.manifest) {
        let base = p.parent().unwrap_or(Path::new("."));
        let corpus = Corpus::from_parts(entries, ivs, base).map_err(|e| fail(p, e))?;
        eprintln!(
            "ok: manifest and CTM agree ({} good phone occurrences)",
            corpus.good_occurrence_count()
        );
    }
    if let Some(p) = &args.dict {
        let dict = CloseDict::load(p, default_inventory()).map_err(|e| fail(p, e))?;
        eprintln!("ok: {} ({} pairs)", p.display(), dict.pair_count());
    }
    if let Some(p) = &args.posteriors {
        let m = PosteriorMatrix::load(p).map_err(|e| fail(p, e))?;
        eprintln!("ok: {} ({} frames)", p.display(), m.frames());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Augment(a) => cmd_augment(a),
        Command::MaskDump(a) => cmd_mask_dump(a),
        Command::Gop(a) => cmd_gop(a),
        Command::TextAug(a) => cmd_text_aug(a),
        Command::GopAug(a) => cmd_gop_aug(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
