//! Corpus-level augmentation: candidate selection, donor search, blending,
//! splicing and manifest output.
//!
//! Each utterance gets its own RNG seeded from FNV-1a over the run seed
//! (little-endian) followed by the utterance id, so output does not depend
//! on how utterances are scheduled across workers.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{
    extract_segment, parse_ctm, pure_phone, to_span, PhonemeInterval, UtteranceRecord,
};
use crate::audio::{read_wav, splice, write_wav, AudioBuffer};
use crate::blender::{speech_blend, GoodScore, LabelMode};
use crate::closedict::{CloseDict, DonorWeighting};
use crate::error::{Error, Result};
use crate::mask::{MaskParams, MaskProperty, Template, MIN_SEGMENT_FRAMES};

/// Donor draws per candidate before it is skipped.
pub const MAX_DONOR_ATTEMPTS: usize = 5;

pub const OUTPUT_MANIFEST: &str = "augmented.jsonl";
pub const WARNINGS_FILE: &str = "warnings.jsonl";

/// One line of the input manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub wav: PathBuf,
    /// One score per phone, in CTM order.
    pub scores: Vec<u8>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        if let Some(s) = entry.scores.iter().find(|&&s| s > 2) {
            return Err(Error::parse(
                idx + 1,
                format!("score {s} outside {{0, 1, 2}}"),
            ));
        }
        out.push(entry);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Corpus {
    utterances: BTreeMap<String, UtteranceRecord>,
    phone_index: BTreeMap<String, Vec<(String, usize)>>,
}

impl Corpus {
    /// Joins manifest entries with CTM intervals. Relative WAV paths are
    /// resolved against `base_dir`.
    pub fn from_parts(
        manifest: Vec<ManifestEntry>,
        intervals: Vec<PhonemeInterval>,
        base_dir: &Path,
    ) -> Result<Self> {
        let mut by_utt: BTreeMap<String, Vec<PhonemeInterval>> = BTreeMap::new();
        for iv in intervals {
            by_utt.entry(iv.utt_id.clone()).or_default().push(iv);
        }

        let mut utterances = BTreeMap::new();
        for entry in manifest {
            if utterances.contains_key(&entry.utt_id) {
                return Err(Error::InvalidData(format!(
                    "duplicated utt_id {:?} in manifest",
                    entry.utt_id
                )));
            }
            let mut phones = by_utt.remove(&entry.utt_id).ok_or_else(|| {
                Error::InvalidData(format!("utterance {:?} missing from CTM", entry.utt_id))
            })?;
            if phones.len() != entry.scores.len() {
                return Err(Error::InvalidData(format!(
                    "utterance {:?}: {} CTM phones but {} scores",
                    entry.utt_id,
                    phones.len(),
                    entry.scores.len()
                )));
            }
            for (iv, &score) in phones.iter_mut().zip(&entry.scores) {
                iv.score = Some(score);
            }
            let wav = if entry.wav.is_absolute() {
                entry.wav.clone()
            } else {
                base_dir.join(&entry.wav)
            };
            let record = UtteranceRecord::new(entry.utt_id.clone(), wav, phones)?;
            utterances.insert(entry.utt_id, record);
        }
        if let Some(utt) = by_utt.keys().next() {
            return Err(Error::InvalidData(format!(
                "CTM references unknown utterance {utt:?}"
            )));
        }

        let mut phone_index: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
        for (utt_id, record) in &utterances {
            for (i, iv) in record.phones.iter().enumerate() {
                if iv.is_good() {
                    phone_index
                        .entry(pure_phone(&iv.phone).to_string())
                        .or_default()
                        .push((utt_id.clone(), i));
                }
            }
        }
        Ok(Self {
            utterances,
            phone_index,
        })
    }

    pub fn load(manifest_path: impl AsRef<Path>, ctm_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let ctm_path = ctm_path.as_ref();
        let manifest_text =
            fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let ctm_text = fs::read_to_string(ctm_path).map_err(|e| Error::io(ctm_path, e))?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        Self::from_parts(parse_manifest(&manifest_text)?, parse_ctm(&ctm_text)?, base)
    }

    pub fn utterance(&self, utt_id: &str) -> Option<&UtteranceRecord> {
        self.utterances.get(utt_id)
    }

    pub fn utterance_ids(&self) -> impl Iterator<Item = &str> {
        self.utterances.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Good-scored occurrences of a (pure) phone label.
    pub fn good_occurrences(&self, phone: &str) -> &[(String, usize)] {
        self.phone_index
            .get(phone)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn good_occurrence_count(&self) -> usize {
        self.phone_index.values().map(Vec::len).sum()
    }
}

/// One weighted entry of the mask pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskChoice {
    pub template: Template,
    #[serde(default)]
    pub params: MaskParams,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl MaskChoice {
    pub fn new(template: Template, params: MaskParams) -> Self {
        Self {
            template,
            params,
            weight: 1.0,
        }
    }
}

/// Mask ids 1-4 drawn uniformly; the smooth overlay splits its share
/// evenly over λ0 ∈ {0.1, 0.2, 0.5, 0.6}.
pub fn default_mask_pool() -> Vec<MaskChoice> {
    let mut pool: Vec<MaskChoice> = [0.1, 0.2, 0.5, 0.6]
        .into_iter()
        .map(|l| MaskChoice {
            template: Template::SmoothOverlay,
            params: MaskParams::with_overlay_lambda(l),
            weight: 0.25,
        })
        .collect();
    for t in [
        Template::CutMix,
        Template::SmoothConcatenation,
        Template::SmoothGaussianOverlay,
    ] {
        pool.push(MaskChoice::new(t, MaskParams::default()));
    }
    pool
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugConfig {
    pub seed: u64,
    pub candidates_per_utterance: usize,
    pub mask_pool: Vec<MaskChoice>,
    pub label_mode: LabelMode,
    pub donor_weighting: DonorWeighting,
    pub min_segment_frames: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
}

impl Default for AugConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            candidates_per_utterance: 1,
            mask_pool: default_mask_pool(),
            label_mode: LabelMode::default(),
            donor_weighting: DonorWeighting::default(),
            min_segment_frames: MIN_SEGMENT_FRAMES,
            output_dir: PathBuf::from("augmented"),
            workers: 0,
        }
    }
}

impl AugConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mask_pool.is_empty() {
            return Err(Error::config("mask_pool", "must not be empty"));
        }
        for (i, choice) in self.mask_pool.iter().enumerate() {
            if !(choice.weight > 0.0 && choice.weight.is_finite()) {
                return Err(Error::config(
                    format!("mask_pool[{i}].weight"),
                    format!("{} must be positive", choice.weight),
                ));
            }
            choice
                .params
                .validate()
                .map_err(|e| Error::config(format!("mask_pool[{i}].params"), e.to_string()))?;
        }
        if self.min_segment_frames < MIN_SEGMENT_FRAMES {
            return Err(Error::config(
                "min_segment_frames",
                format!(
                    "{} is below the minimum of {MIN_SEGMENT_FRAMES}",
                    self.min_segment_frames
                ),
            ));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a over `seed.to_le_bytes() ++ utt_id`.
pub fn utterance_seed(seed: u64, utt_id: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    seed.to_le_bytes()
        .iter()
        .chain(utt_id.as_bytes())
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

pub fn utterance_rng(seed: u64, utt_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(utterance_seed(seed, utt_id))
}

/// Up to `candidates_per_utterance` good phones at least
/// `min_segment_frames` samples long, drawn without replacement and
/// returned in time order.
pub fn select_candidates<R: Rng + ?Sized>(
    record: &UtteranceRecord,
    sample_rate: u32,
    config: &AugConfig,
    rng: &mut R,
) -> Vec<usize> {
    let eligible = record.phones.iter().enumerate().filter(|(_, iv)| {
        iv.is_good()
            && to_span(iv, sample_rate)
                .map(|s| s.len() >= config.min_segment_frames)
                .unwrap_or(false)
    });
    let mut picked: Vec<usize> = eligible
        .map(|(i, _)| i)
        .choose_multiple(rng, config.candidates_per_utterance);
    picked.sort_unstable();
    picked
}

/// Picks a good occurrence of `donor_phone`, preferring utterances other
/// than `exclude_utt`.
pub fn find_donor_occurrence<'c, R: Rng + ?Sized>(
    corpus: &'c Corpus,
    donor_phone: &str,
    exclude_utt: &str,
    rng: &mut R,
) -> Option<(&'c str, usize)> {
    let all = corpus.good_occurrences(donor_phone);
    let others: Vec<&(String, usize)> = all.iter().filter(|(u, _)| u != exclude_utt).collect();
    let picked = if others.is_empty() {
        all.choose(rng)?
    } else {
        *others.choose(rng)?
    };
    Some((picked.0.as_str(), picked.1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRef {
    pub utt_id: String,
    pub phone: String,
    pub interval_index: usize,
    pub start_sample: usize,
    pub end_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentedSample {
    pub new_utt_id: String,
    /// Relative to the output manifest's directory.
    pub wav_path: String,
    pub label: u8,
    pub label_mode: LabelMode,
    pub candidate: SegmentRef,
    pub donor: SegmentRef,
    pub donor_gain: f64,
    pub mask: MaskProperty,
    pub regional_labels: Vec<u8>,
    pub shift: isize,
    pub updated_intervals: Vec<PhonemeInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    NoCandidate,
    NoCloseEntry,
    NoDonorOccurrence,
    ShortSegment,
    SilentDonor,
    AlignmentMismatch,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoCandidate => "no-candidate",
            SkipReason::NoCloseEntry => "no-close-entry",
            SkipReason::NoDonorOccurrence => "no-donor-occurrence",
            SkipReason::ShortSegment => "short-segment",
            SkipReason::SilentDonor => "silent-donor",
            SkipReason::AlignmentMismatch => "alignment-mismatch",
        }
    }
}

/// One line of the warnings stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub utt_id: String,
    pub reason: SkipReason,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct UtteranceOutcome {
    pub samples: Vec<AugmentedSample>,
    pub warnings: Vec<Warning>,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn shifted_intervals(
    record: &UtteranceRecord,
    candidate: usize,
    new_utt_id: &str,
    shift_s: f64,
    label: u8,
) -> Vec<PhonemeInterval> {
    record
        .phones
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let mut out = iv.clone();
            out.utt_id = new_utt_id.to_string();
            if i == candidate {
                out.duration += shift_s;
                out.score = Some(label);
            } else if i > candidate {
                out.start += shift_s;
            }
            out.start = round6(out.start);
            out.duration = round6(out.duration);
            out
        })
        .collect()
}

struct AudioCache<'c> {
    corpus: &'c Corpus,
    loaded: HashMap<String, AudioBuffer>,
}

impl<'c> AudioCache<'c> {
    fn get(&mut self, utt_id: &str) -> Result<&AudioBuffer> {
        if !self.loaded.contains_key(utt_id) {
            let record = self
                .corpus
                .utterance(utt_id)
                .ok_or_else(|| Error::InvalidData(format!("unknown utterance {utt_id:?}")))?;
            let audio = read_wav(&record.wav_path)?;
            self.loaded.insert(utt_id.to_string(), audio);
        }
        Ok(&self.loaded[utt_id])
    }
}

fn skip_reason(err: &Error) -> Option<SkipReason> {
    match err {
        Error::SilentDonor => Some(SkipReason::SilentDonor),
        Error::SegmentTooShort { .. } | Error::EmptySpan { .. } => Some(SkipReason::ShortSegment),
        Error::AlignmentExceedsAudio { .. } => Some(SkipReason::AlignmentMismatch),
        _ => None,
    }
}

/// Augments each selected candidate of one utterance, writing
/// `<utt_id>__aug<k>.wav` into the output directory. Degenerate candidates
/// are skipped with a warning; I/O and format errors are returned.
pub fn augment_utterance<R: Rng + ?Sized>(
    corpus: &Corpus,
    dict: &CloseDict,
    utt_id: &str,
    config: &AugConfig,
    rng: &mut R,
) -> Result<UtteranceOutcome> {
    let record = corpus
        .utterance(utt_id)
        .ok_or_else(|| Error::InvalidData(format!("unknown utterance {utt_id:?}")))?;
    let mut cache = AudioCache {
        corpus,
        loaded: HashMap::new(),
    };
    let mut outcome = UtteranceOutcome::default();
    let skip = |reason: SkipReason, detail: String, outcome: &mut UtteranceOutcome| {
        debug!("{utt_id}: {}: {detail}", reason.as_str());
        outcome.warnings.push(Warning {
            utt_id: utt_id.to_string(),
            reason,
            detail,
        });
    };

    let rate = cache.get(utt_id)?.sample_rate();
    let candidates = select_candidates(record, rate, config, rng);
    if candidates.is_empty() {
        skip(
            SkipReason::NoCandidate,
            "no eligible good phone".into(),
            &mut outcome,
        );
        return Ok(outcome);
    }

    'candidates: for (k, &cand_idx) in candidates.iter().enumerate() {
        let cand_iv = &record.phones[cand_idx];
        let cand_phone = pure_phone(&cand_iv.phone);
        if dict.donors(cand_phone).is_empty() {
            skip(
                SkipReason::NoCloseEntry,
                format!("phone {cand_phone} (#{cand_idx}) has no close-pair entry"),
                &mut outcome,
            );
            continue;
        }
        let cand_span = to_span(cand_iv, rate)?;
        let x_c = match extract_segment(cache.get(utt_id)?, cand_iv) {
            Ok(seg) => seg,
            Err(e) => match skip_reason(&e) {
                Some(reason) => {
                    skip(reason, format!("candidate #{cand_idx}: {e}"), &mut outcome);
                    continue;
                }
                None => return Err(e),
            },
        };

        let mut last_failure = (SkipReason::NoDonorOccurrence, String::new());
        for _ in 0..MAX_DONOR_ATTEMPTS {
            let donor_phone = dict
                .pick_donor(cand_phone, rng, config.donor_weighting)
                .expect("candidate has close entries");
            let Some((donor_utt, donor_idx)) =
                find_donor_occurrence(corpus, donor_phone, utt_id, rng)
            else {
                last_failure = (
                    SkipReason::NoDonorOccurrence,
                    format!("no good occurrence of donor {donor_phone}"),
                );
                continue;
            };
            let donor_record = corpus
                .utterance(donor_utt)
                .expect("indexed utterance exists");
            let donor_iv = &donor_record.phones[donor_idx];
            let attempt = extract_segment(cache.get(donor_utt)?, donor_iv).and_then(|x_d| {
                if x_d.len() < config.min_segment_frames {
                    return Err(Error::SegmentTooShort {
                        len: x_d.len(),
                        min: config.min_segment_frames,
                    });
                }
                let choice = config
                    .mask_pool
                    .choose_weighted(&mut *rng, |c| c.weight)
                    .expect("validated non-empty pool");
                speech_blend(
                    &x_c,
                    &x_d,
                    GoodScore::SPEECHOCEAN,
                    choice.template,
                    choice.params,
                    config.label_mode,
                )
            });
            let blended = match attempt {
                Ok(b) => b,
                Err(e) => match skip_reason(&e) {
                    Some(reason) => {
                        last_failure = (reason, format!("donor {donor_utt}#{donor_idx}: {e}"));
                        continue;
                    }
                    None => return Err(e),
                },
            };

            let original = cache.get(utt_id)?;
            let (spliced, shift) = splice(original, cand_span, &blended.audio)?;
            let new_utt_id = format!("{utt_id}__aug{k}");
            let wav_name = format!("{new_utt_id}.wav");
            write_wav(&spliced, config.output_dir.join(&wav_name))?;

            let donor_span = to_span(donor_iv, rate)?;
            outcome.samples.push(AugmentedSample {
                updated_intervals: shifted_intervals(
                    record,
                    cand_idx,
                    &new_utt_id,
                    shift as f64 / rate as f64,
                    blended.label,
                ),
                new_utt_id,
                wav_path: wav_name,
                label: blended.label,
                label_mode: blended.mode,
                candidate: SegmentRef {
                    utt_id: utt_id.to_string(),
                    phone: cand_iv.phone.clone(),
                    interval_index: cand_idx,
                    start_sample: cand_span.start,
                    end_sample: cand_span.end,
                },
                donor: SegmentRef {
                    utt_id: donor_utt.to_string(),
                    phone: donor_iv.phone.clone(),
                    interval_index: donor_idx,
                    start_sample: donor_span.start,
                    end_sample: donor_span.end,
                },
                donor_gain: blended.donor_gain,
                mask: blended.property,
                regional_labels: blended.regional_labels,
                shift,
            });
            continue 'candidates;
        }
        let (reason, detail) = last_failure;
        skip(
            reason,
            format!(
                "candidate #{cand_idx} skipped after {MAX_DONOR_ATTEMPTS} donor attempts: {detail}"
            ),
            &mut outcome,
        );
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub utterances: usize,
    pub produced: usize,
    pub by_label: BTreeMap<u8, usize>,
    pub by_template: BTreeMap<String, usize>,
    pub skipped: BTreeMap<String, usize>,
    /// Per-utterance I/O or format failures.
    pub errors: Vec<(String, String)>,
    pub manifest_path: PathBuf,
    pub warnings_path: PathBuf,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        self.errors.is_empty()
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for row in rows {
        let line = serde_json::to_string(&row).map_err(|e| Error::InvalidData(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    file.flush().map_err(|e| Error::io(path, e))
}

/// Augments every utterance in parallel and writes the output manifest and
/// warnings stream, both ordered by utterance id.
pub fn run(config: &AugConfig, corpus: &Corpus, dict: &CloseDict) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let ids: Vec<&str> = corpus.utterance_ids().collect();
    let results: Vec<(&str, Result<UtteranceOutcome>)> = pool.install(|| {
        ids.par_iter()
            .map(|&utt| {
                let mut rng = utterance_rng(config.seed, utt);
                (utt, augment_utterance(corpus, dict, utt, config, &mut rng))
            })
            .collect()
    });

    let mut summary = RunSummary {
        utterances: ids.len(),
        manifest_path: config.output_dir.join(OUTPUT_MANIFEST),
        warnings_path: config.output_dir.join(WARNINGS_FILE),
        ..RunSummary::default()
    };
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (utt, result) in results {
        match result {
            Ok(outcome) => {
                samples.extend(outcome.samples);
                warnings.extend(outcome.warnings);
            }
            Err(e) => summary.errors.push((utt.to_string(), e.to_string())),
        }
    }
    for s in &samples {
        *summary.by_label.entry(s.label).or_default() += 1;
        *summary
            .by_template
            .entry(s.mask.template.name().to_string())
            .or_default() += 1;
    }
    for w in &warnings {
        *summary
            .skipped
            .entry(w.reason.as_str().to_string())
            .or_default() += 1;
    }
    summary.produced = samples.len();

    write_jsonl(&summary.manifest_path, &samples)?;
    write_jsonl(&summary.warnings_path, &warnings)?;
    info!(
        "augmented {} of {} utterances: {} samples, {} warnings, {} errors",
        ids.len() - summary.errors.len(),
        ids.len(),
        samples.len(),
        warnings.len(),
        summary.errors.len()
    );
    Ok(summary)
}

/// Parses an output manifest back into samples.
pub fn read_output_manifest(text: &str) -> Result<Vec<AugmentedSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}
