//! Goodness-of-pronunciation features over frame-level phone posteriors,
//! and the text-level and GOP-level baseline augmenters.
//!
//! A GOP vector has 84 dimensions: the log phone posterior (LPP) of each of
//! the 42 inventory phones over the segment, followed by the log posterior
//! ratio (LPR) of the canonical phone against each inventory phone. LPR is
//! frame-averaged, so `LPR(a|b) = LPP(a) - LPP(b)` and the canonical slot
//! is exactly zero.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::align::pure_phone;
use crate::blender::GoodScore;
use crate::closedict::{CloseDict, DonorWeighting};
use crate::error::{Error, Result};

pub const GOP_PHONES: usize = 42;
pub const GOP_DIM: usize = 2 * GOP_PHONES;
pub const GOP_LAYOUT: &str = "lpp42+lpr42/v1";

/// Probabilities are floored here before taking the log.
pub const PROB_FLOOR: f64 = 1e-10;
const ROW_SUM_TOLERANCE: f64 = 1e-4;

/// Attempts at finding a donor with a non-empty bank.
pub const MAX_DONOR_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    phones: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl PosteriorMatrix {
    pub fn new(phones: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if phones.len() != GOP_PHONES {
            return Err(Error::InvalidData(format!(
                "posterior matrix needs {GOP_PHONES} phone columns, found {}",
                phones.len()
            )));
        }
        let mut index = HashMap::with_capacity(GOP_PHONES);
        for (i, p) in phones.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidData(format!("duplicate phone column {p:?}")));
            }
        }
        if rows.is_empty() {
            return Err(Error::InvalidData("posterior matrix has no frames".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * GOP_PHONES);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != GOP_PHONES {
                return Err(Error::InvalidData(format!(
                    "frame {t}: {} values, expected {GOP_PHONES}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidData(format!(
                    "frame {t}: probability {p} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidData(format!("frame {t}: row sums to {sum}")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            phones,
            index,
            data,
        })
    }

    /// Header row of phone labels, then one comma-separated row per frame.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let phones: Vec<String> = reader
            .headers()
            .map_err(|e| Error::parse(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("non-numeric probability {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(phones, rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn phones(&self) -> &[String] {
        &self.phones
    }

    pub fn frames(&self) -> usize {
        self.data.len() / GOP_PHONES
    }

    pub fn phone_index(&self, phone: &str) -> Result<usize> {
        self.index
            .get(phone)
            .copied()
            .ok_or_else(|| Error::UnknownPhone(phone.to_string()))
    }

    pub fn prob(&self, frame: usize, phone_idx: usize) -> f64 {
        self.data[frame * GOP_PHONES + phone_idx]
    }

    fn check_span(&self, span: &Range<usize>) -> Result<()> {
        if span.start >= span.end {
            return Err(Error::EmptyInput);
        }
        if span.end > self.frames() {
            return Err(Error::InvalidData(format!(
                "frame range {}..{} exceeds {} frames",
                span.start,
                span.end,
                self.frames()
            )));
        }
        Ok(())
    }

    fn lpp_at(&self, phone_idx: usize, span: Range<usize>) -> f64 {
        let n = span.len() as f64;
        span.map(|t| self.prob(t, phone_idx).max(PROB_FLOOR).ln())
            .sum::<f64>()
            / n
    }
}

/// Mean log posterior of `phone` over the frames in `span`.
pub fn lpp(posteriors: &PosteriorMatrix, phone: &str, span: Range<usize>) -> Result<f64> {
    let idx = posteriors.phone_index(phone)?;
    posteriors.check_span(&span)?;
    Ok(posteriors.lpp_at(idx, span))
}

/// Frame-averaged log posterior ratio of `p_j` against `p_i`.
pub fn lpr(posteriors: &PosteriorMatrix, p_j: &str, p_i: &str, span: Range<usize>) -> Result<f64> {
    Ok(lpp(posteriors, p_j, span.clone())? - lpp(posteriors, p_i, span)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GopVector {
    canonical: String,
    values: Vec<f64>,
}

impl GopVector {
    pub fn new(canonical: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != GOP_DIM {
            return Err(Error::InvalidData(format!(
                "GOP vector has {} values, expected {GOP_DIM}",
                values.len()
            )));
        }
        Ok(Self {
            canonical: canonical.into(),
            values,
        })
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lpp_part(&self) -> &[f64] {
        &self.values[..GOP_PHONES]
    }

    pub fn lpr_part(&self) -> &[f64] {
        &self.values[GOP_PHONES..]
    }
}

pub fn gop_vector(
    posteriors: &PosteriorMatrix,
    canonical: &str,
    span: Range<usize>,
) -> Result<GopVector> {
    let c = posteriors.phone_index(canonical)?;
    posteriors.check_span(&span)?;
    let lpps: Vec<f64> = (0..GOP_PHONES)
        .map(|k| posteriors.lpp_at(k, span.clone()))
        .collect();
    let mut values = lpps.clone();
    values.extend(lpps.iter().map(|l| lpps[c] - l));
    GopVector::new(canonical, values)
}

/// One line of the GOP JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GopRecord {
    pub utt: String,
    pub phone_index: usize,
    pub canonical: String,
    pub layout: String,
    pub values: Vec<f64>,
}

impl GopRecord {
    pub fn new(utt: impl Into<String>, phone_index: usize, vector: &GopVector) -> Self {
        Self {
            utt: utt.into(),
            phone_index,
            canonical: vector.canonical.clone(),
            layout: GOP_LAYOUT.to_string(),
            values: vector.values.clone(),
        }
    }

    pub fn to_vector(&self) -> Result<GopVector> {
        if self.layout != GOP_LAYOUT {
            return Err(Error::InvalidData(format!(
                "unsupported GOP layout {:?} (expected {GOP_LAYOUT})",
                self.layout
            )));
        }
        GopVector::new(self.canonical.clone(), self.values.clone())
    }
}

/// Good-pronunciation GOP vectors grouped by canonical phone.
#[derive(Debug, Clone, Default)]
pub struct GopBank {
    bags: BTreeMap<String, Vec<GopVector>>,
}

impl GopBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, vector: GopVector) {
        self.bags
            .entry(pure_phone(&vector.canonical).to_string())
            .or_default()
            .push(vector);
    }

    pub fn get(&self, phone: &str) -> &[GopVector] {
        self.bags.get(phone).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.bags.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a candidate phone is replaced by the baseline augmenters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapPolicy {
    /// Probability of a close-phone swap (label 1) over a distant one (label 0).
    pub close_ratio: f64,
    pub weighting: DonorWeighting,
}

impl SwapPolicy {
    pub fn new(close_ratio: f64, weighting: DonorWeighting) -> Result<Self> {
        if !(0.0..=1.0).contains(&close_ratio) {
            return Err(Error::config(
                "close_ratio",
                format!("{close_ratio} outside [0, 1]"),
            ));
        }
        Ok(Self {
            close_ratio,
            weighting,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapKind {
    Close,
    Distant,
}

impl SwapKind {
    /// Close exchanges sound accented (1); distant ones are mispronounced (0).
    pub fn label(self) -> u8 {
        match self {
            SwapKind::Close => 1,
            SwapKind::Distant => 0,
        }
    }
}

/// Draws a donor for `candidate`: a close phone with probability
/// `close_ratio` when the candidate has close entries, a distant one
/// otherwise.
fn draw_swap<'d, R: Rng + ?Sized>(
    dict: &'d CloseDict,
    candidate: &str,
    rng: &mut R,
    policy: SwapPolicy,
) -> Result<(&'d str, SwapKind)> {
    let want_close = rng.gen_bool(policy.close_ratio);
    if want_close {
        if let Some(d) = dict.pick_donor(candidate, rng, policy.weighting) {
            return Ok((d, SwapKind::Close));
        }
    }
    Ok((dict.pick_distant(candidate, rng)?, SwapKind::Distant))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSwap {
    pub phones: Vec<String>,
    pub labels: Vec<u8>,
    pub position: usize,
    pub original: String,
    pub replacement: String,
    pub kind: SwapKind,
}

/// Replaces one good phone of a canonical sequence with a close or distant
/// donor and labels it accordingly.
pub fn text_augment<R: Rng + ?Sized>(
    phones: &[String],
    labels: &[u8],
    dict: &CloseDict,
    rng: &mut R,
    policy: SwapPolicy,
) -> Result<TextSwap> {
    if phones.len() != labels.len() {
        return Err(Error::InvalidData(format!(
            "{} phones but {} labels",
            phones.len(),
            labels.len()
        )));
    }
    let good = GoodScore::SPEECHOCEAN.value();
    let eligible: Vec<usize> = (0..phones.len()).filter(|&i| labels[i] == good).collect();
    if eligible.is_empty() {
        return Err(Error::NoCandidate);
    }

    let want_close = rng.gen_bool(policy.close_ratio);
    let closeable: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|&i| !dict.donors(pure_phone(&phones[i])).is_empty())
        .collect();

    let (position, replacement, kind) = match closeable.choose(rng) {
        Some(&pos) if want_close => {
            let donor = dict
                .pick_donor(pure_phone(&phones[pos]), rng, policy.weighting)
                .expect("closeable phone has donors");
            (pos, donor, SwapKind::Close)
        }
        _ => {
            let pos = *eligible.choose(rng).expect("non-empty");
            (
                pos,
                dict.pick_distant(pure_phone(&phones[pos]), rng)?,
                SwapKind::Distant,
            )
        }
    };

    let mut out_phones = phones.to_vec();
    let mut out_labels = labels.to_vec();
    out_phones[position] = replacement.to_string();
    out_labels[position] = kind.label();
    Ok(TextSwap {
        phones: out_phones,
        labels: out_labels,
        position,
        original: phones[position].clone(),
        replacement: replacement.to_string(),
        kind,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GopSwap {
    pub vector: GopVector,
    pub label: u8,
    pub donor: String,
    pub kind: SwapKind,
}

/// Replaces the candidate's GOP vector with one drawn from a donor's bag.
/// Donors with an empty bag are redrawn up to [`MAX_DONOR_RETRIES`] times.
pub fn gop_augment<R: Rng + ?Sized>(
    bank: &GopBank,
    candidate_phone: &str,
    dict: &CloseDict,
    rng: &mut R,
    policy: SwapPolicy,
) -> Result<GopSwap> {
    let candidate = pure_phone(candidate_phone);
    let mut last_donor = String::new();
    for _ in 0..MAX_DONOR_RETRIES {
        let (donor, kind) = draw_swap(dict, candidate, rng, policy)?;
        if let Some(v) = bank.get(donor).choose(rng) {
            return Ok(GopSwap {
                vector: v.clone(),
                label: kind.label(),
                donor: donor.to_string(),
                kind,
            });
        }
        last_donor = donor.to_string();
    }
    Err(Error::EmptyBank(last_donor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedict::KALDI_PURE_PHONES;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn phones() -> Vec<String> {
        KALDI_PURE_PHONES.iter().map(|s| s.to_string()).collect()
    }

    fn uniform(frames: usize) -> PosteriorMatrix {
        PosteriorMatrix::new(phones(), vec![vec![1.0 / 42.0; 42]; frames]).unwrap()
    }

    fn one_hot(phone: usize, frames: usize) -> PosteriorMatrix {
        let mut row = vec![0.0; 42];
        row[phone] = 1.0;
        PosteriorMatrix::new(phones(), vec![row; frames]).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, frames: usize) -> PosteriorMatrix {
        let rows = (0..frames)
            .map(|_| {
                let raw: Vec<f64> = (0..42).map(|_| rng.gen_range(1e-6..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        PosteriorMatrix::new(phones(), rows).unwrap()
    }

    #[test]
    fn lpp_examples() {
        let m = uniform(5);
        assert!((lpp(&m, "SH", 0..5).unwrap() - (1.0f64 / 42.0).ln()).abs() < 1e-9);
        assert!((lpp(&m, "SH", 0..5).unwrap() + 3.7377).abs() < 1e-4);
        assert_eq!(lpp(&one_hot(32, 3), "SH", 0..3).unwrap(), 0.0);

        let mut r0 = vec![0.5 / 41.0; 42];
        r0[32] = 0.5;
        let mut r1 = vec![0.75 / 41.0; 42];
        r1[32] = 0.25;
        let m = PosteriorMatrix::new(phones(), vec![r0, r1]).unwrap();
        let expected = (0.5f64.ln() + 0.25f64.ln()) / 2.0;
        assert!((lpp(&m, "SH", 0..2).unwrap() - expected).abs() < 1e-12);
        assert!((lpp(&m, "SH", 0..2).unwrap() + 1.0397).abs() < 1e-4);
    }

    #[test]
    fn lpp_errors() {
        let m = uniform(3);
        assert!(matches!(lpp(&m, "QQ", 0..3), Err(Error::UnknownPhone(_))));
        assert!(matches!(lpp(&m, "SH", 1..1), Err(Error::EmptyInput)));
        assert!(lpp(&m, "SH", 0..4).is_err());
    }

    #[test]
    fn lpr_examples() {
        let mut row = vec![0.25 / 40.0; 42];
        row[32] = 0.5; // SH
        row[31] = 0.25; // S
        let m = PosteriorMatrix::new(phones(), vec![row; 4]).unwrap();
        assert_eq!(lpr(&m, "SH", "SH", 0..4).unwrap(), 0.0);
        assert!((lpr(&m, "SH", "S", 0..4).unwrap() - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn gop_vector_examples() {
        let v = gop_vector(&uniform(4), "SH", 0..4).unwrap();
        assert_eq!(v.values().len(), 84);
        assert!(v
            .lpp_part()
            .iter()
            .all(|x| (x - (1.0f64 / 42.0).ln()).abs() < 1e-9));
        assert!(v.lpr_part().iter().all(|&x| x == 0.0));

        let v = gop_vector(&one_hot(32, 4), "SH", 0..4).unwrap();
        assert_eq!(v.lpp_part()[32], 0.0);
        for k in 0..42 {
            assert_eq!(v.lpr_part()[k], -v.lpp_part()[k]);
            if k != 32 {
                assert!((v.lpr_part()[k] + PROB_FLOOR.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn matrix_validation() {
        assert!(PosteriorMatrix::new(phones()[..41].to_vec(), vec![vec![1.0 / 41.0; 41]]).is_err());
        assert!(PosteriorMatrix::new(phones(), vec![]).is_err());
        assert!(PosteriorMatrix::new(phones(), vec![vec![0.5; 42]]).is_err());
        let mut dup = phones();
        dup[1] = "<eps>".into();
        assert!(PosteriorMatrix::new(dup, vec![vec![1.0 / 42.0; 42]]).is_err());
    }

    #[test]
    fn csv_parsing() {
        let mut text = phones().join(",");
        text.push('\n');
        for _ in 0..3 {
            text.push_str(&vec![format!("{}", 1.0 / 42.0); 42].join(","));
            text.push('\n');
        }
        let m = PosteriorMatrix::parse_csv(&text).unwrap();
        assert_eq!(m.frames(), 3);
        let bad = text.replacen(&format!("{}", 1.0 / 42.0), "x", 1);
        assert!(matches!(
            PosteriorMatrix::parse_csv(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn random_matrix_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inv = phones();
        for _ in 0..200 {
            let frames = rng.gen_range(1..20);
            let m = random_matrix(&mut rng, frames);
            let a = &inv[rng.gen_range(0..42)];
            let b = &inv[rng.gen_range(0..42)];
            let c = &inv[rng.gen_range(0..42)];
            let ab = lpr(&m, a, b, 0..frames).unwrap();
            let ba = lpr(&m, b, a, 0..frames).unwrap();
            let bc = lpr(&m, b, c, 0..frames).unwrap();
            let ac = lpr(&m, a, c, 0..frames).unwrap();
            assert!((ab + ba).abs() <= 1e-12);
            assert!((ab + bc - ac).abs() <= 1e-12);
            let v = gop_vector(&m, a, 0..frames).unwrap();
            let ai = m.phone_index(a).unwrap();
            assert_eq!(v.lpr_part()[ai], 0.0);
        }
    }

    fn seq(p: &[&str]) -> Vec<String> {
        p.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn text_augment_close_and_distant() {
        let dict = CloseDict::parse(
            "SH\tS\t0.76\n",
            ["SH", "S", "V"]
                .iter()
                .map(|s| s.to_string())
                .collect::<BTreeSet<_>>(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let close = SwapPolicy::new(1.0, DonorWeighting::ConfusionWeighted).unwrap();
        let r = text_augment(&seq(&["SH"]), &[2], &dict, &mut rng, close).unwrap();
        assert_eq!((r.phones, r.labels), (seq(&["S"]), vec![1]));

        let distant = SwapPolicy::new(0.0, DonorWeighting::ConfusionWeighted).unwrap();
        let r = text_augment(&seq(&["SH"]), &[2], &dict, &mut rng, distant).unwrap();
        assert_eq!((r.phones, r.labels), (seq(&["V"]), vec![0]));

        let err = text_augment(&seq(&["SH", "S"]), &[1, 0], &dict, &mut rng, close).unwrap_err();
        assert!(err.to_string().contains("no augmentation candidate"));
    }

    #[test]
    fn text_augment_changes_one_slot() {
        let dict = CloseDict::starter();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phones = seq(&["DH", "IH", "S", "IH", "Z", "SH", "IY", "P"]);
        let labels = vec![2, 2, 2, 1, 2, 2, 0, 2];
        let policy = SwapPolicy::new(0.5, DonorWeighting::ConfusionWeighted).unwrap();
        for _ in 0..500 {
            let r = text_augment(&phones, &labels, &dict, &mut rng, policy).unwrap();
            assert_eq!(r.phones.len(), phones.len());
            let changed: Vec<usize> = (0..phones.len())
                .filter(|&i| r.phones[i] != phones[i])
                .collect();
            assert_eq!(changed, vec![r.position]);
            assert_eq!(labels[r.position], 2);
            let close = dict.is_close(&phones[r.position], &r.replacement);
            assert_eq!(r.labels[r.position], u8::from(close));
            for i in (0..phones.len()).filter(|&i| i != r.position) {
                assert_eq!(r.labels[i], labels[i]);
            }
        }
    }

    #[test]
    fn gop_augment_draws_from_donor_bag() {
        let dict = CloseDict::starter();
        let mut bank = GopBank::new();
        let v = gop_vector(&uniform(2), "S", 0..2).unwrap();
        bank.insert(v.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let close = SwapPolicy::new(1.0, DonorWeighting::ConfusionWeighted).unwrap();
        let swap = gop_augment(&bank, "SH", &dict, &mut rng, close).unwrap();
        assert_eq!((swap.vector, swap.label, swap.donor.as_str()), (v, 1, "S"));

        let err = gop_augment(&GopBank::new(), "SH", &dict, &mut rng, close).unwrap_err();
        assert!(matches!(err, Error::EmptyBank(ref d) if d == "S"));
    }

    #[test]
    fn gop_bag_draw_is_uniform() {
        let dict = CloseDict::starter();
        let mut bank = GopBank::new();
        let m = {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            random_matrix(&mut rng, 16)
        };
        for k in 0..4 {
            bank.insert(gop_vector(&m, "S", k * 4..k * 4 + 4).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let close = SwapPolicy::new(1.0, DonorWeighting::ConfusionWeighted).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let swap = gop_augment(&bank, "SH", &dict, &mut rng, close).unwrap();
            let k = bank
                .get("S")
                .iter()
                .position(|v| *v == swap.vector)
                .unwrap();
            counts[k] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn bank_keys_by_pure_phone() {
        let mut bank = GopBank::new();
        bank.insert(GopVector::new("S_B", vec![0.0; 84]).unwrap());
        assert_eq!(bank.get("S").len(), 1);
        assert!(GopVector::new("S", vec![0.0; 83]).is_err());
    }
}
