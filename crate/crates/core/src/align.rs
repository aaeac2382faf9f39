//! Forced-alignment input: CTM parsing and phone-to-sample-span mapping.
//!
//! CTM lines have the form `utt_id channel start dur phone`, with times in
//! decimal seconds. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, SampleSpan};
use crate::error::{Error, Result};

/// Two intervals may overlap by at most this many seconds.
pub const OVERLAP_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeInterval {
    pub utt_id: String,
    pub channel: String,
    pub start: f64,
    pub duration: f64,
    pub phone: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<u8>,
}

impl PhonemeInterval {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn is_good(&self) -> bool {
        self.score == Some(crate::blender::GoodScore::SPEECHOCEAN.value())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub wav_path: PathBuf,
    pub phones: Vec<PhonemeInterval>,
}

impl UtteranceRecord {
    /// Sorts `phones` by start time and rejects overlaps beyond tolerance.
    pub fn new(
        utt_id: impl Into<String>,
        wav_path: impl Into<PathBuf>,
        mut phones: Vec<PhonemeInterval>,
    ) -> Result<Self> {
        let utt_id = utt_id.into();
        if let Some(p) = phones.iter().find(|p| p.utt_id != utt_id) {
            return Err(Error::InvalidData(format!(
                "interval for {:?} filed under utterance {utt_id:?}",
                p.utt_id
            )));
        }
        phones.sort_by(|a, b| a.start.total_cmp(&b.start));
        for pair in phones.windows(2) {
            if pair[1].start < pair[0].end() - OVERLAP_TOLERANCE_S {
                return Err(Error::InvalidData(format!(
                    "{utt_id}: phone {} at {}s overlaps {} ending at {}s",
                    pair[1].phone,
                    pair[1].start,
                    pair[0].phone,
                    pair[0].end()
                )));
            }
        }
        Ok(Self {
            utt_id,
            wav_path: wav_path.into(),
            phones,
        })
    }
}

fn parse_seconds(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("non-numeric {what} {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what} {field:?}")));
    }
    Ok(v)
}

pub fn parse_ctm(text: &str) -> Result<Vec<PhonemeInterval>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let start = parse_seconds(fields[2], "start", line_no)?;
        let duration = parse_seconds(fields[3], "duration", line_no)?;
        if start < 0.0 {
            return Err(Error::parse(line_no, format!("negative start {start}")));
        }
        if duration <= 0.0 {
            return Err(Error::parse(
                line_no,
                format!("non-positive duration {duration}"),
            ));
        }
        out.push(PhonemeInterval {
            utt_id: fields[0].to_string(),
            channel: fields[1].to_string(),
            start,
            duration,
            phone: fields[4].to_string(),
            score: None,
        });
    }
    Ok(out)
}

/// Shortest round-tripping decimal with at least two fractional digits.
pub(crate) fn format_seconds(v: f64) -> String {
    let mut s = format!("{v}");
    match s.find('.') {
        None => s.push_str(".00"),
        Some(dot) => {
            for _ in (s.len() - dot - 1)..2 {
                s.push('0');
            }
        }
    }
    s
}

pub fn serialize_ctm(intervals: &[PhonemeInterval]) -> String {
    let mut out = String::new();
    for iv in intervals {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            iv.utt_id,
            iv.channel,
            format_seconds(iv.start),
            format_seconds(iv.duration),
            iv.phone
        );
    }
    out
}

/// Maps an interval to samples, rounding start and end independently
/// (half away from zero).
pub fn to_span(interval: &PhonemeInterval, sample_rate: u32) -> Result<SampleSpan> {
    if sample_rate == 0 {
        return Err(Error::InvalidSampleRate);
    }
    let rate = sample_rate as f64;
    let start = (interval.start * rate).round();
    let end = ((interval.start + interval.duration) * rate).round();
    if end <= start || start < 0.0 {
        return Err(Error::EmptySpan {
            start_s: interval.start,
            duration_s: interval.duration,
            rate: sample_rate,
        });
    }
    Ok(SampleSpan {
        start: start as usize,
        end: end as usize,
    })
}

pub fn extract_segment(utterance: &AudioBuffer, interval: &PhonemeInterval) -> Result<AudioBuffer> {
    let span = to_span(interval, utterance.sample_rate())?;
    if span.end > utterance.len() {
        return Err(Error::AlignmentExceedsAudio {
            start: span.start,
            end: span.end,
            len: utterance.len(),
        });
    }
    utterance.slice(span)
}

/// Strips Kaldi word-position suffixes (`_B`, `_I`, `_E`, `_S`) and
/// ARPAbet stress digits: `AH1_B` -> `AH`.
pub fn pure_phone(label: &str) -> &str {
    let base = match label.rsplit_once('_') {
        Some((head, "B" | "I" | "E" | "S")) => head,
        _ => label,
    };
    let trimmed = base.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.is_empty() {
        base
    } else {
        trimmed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(start: f64, duration: f64) -> PhonemeInterval {
        PhonemeInterval {
            utt_id: "u".into(),
            channel: "1".into(),
            start,
            duration,
            phone: "AA".into(),
            score: None,
        }
    }

    #[test]
    fn parses_single_line() {
        let v = parse_ctm("utt1 1 0.48 0.12 SH\n").unwrap();
        assert_eq!(
            v,
            vec![PhonemeInterval {
                utt_id: "utt1".into(),
                channel: "1".into(),
                start: 0.48,
                duration: 0.12,
                phone: "SH".into(),
                score: None,
            }]
        );
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_ctm("utt1 1 0.48 SH").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_ctm("# header\nutt1 1 0.0 0.1 A\nutt1 1 0.1 -0.2 B\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_ctm("utt1 1 x 0.2 B").unwrap_err();
        assert!(err.to_string().contains("non-numeric start"));
        assert!(parse_ctm("utt1 1 0.1 0 B").is_err());
    }

    #[test]
    fn preserves_out_of_order_lines() {
        let v = parse_ctm("u 1 0.5 0.1 B\n\nu 1 0.0 0.1 A\n").unwrap();
        assert_eq!(v[0].phone, "B");
        assert_eq!(v[1].phone, "A");
        let rec = UtteranceRecord::new("u", "u.wav", v).unwrap();
        assert_eq!(rec.phones[0].phone, "A");
    }

    #[test]
    fn rejects_overlap_beyond_tolerance() {
        assert!(
            UtteranceRecord::new("u", "u.wav", vec![iv(0.0, 0.1), iv(0.1 - 5e-7, 0.1)]).is_ok()
        );
        assert!(UtteranceRecord::new("u", "u.wav", vec![iv(0.0, 0.1), iv(0.09, 0.1)]).is_err());
    }

    #[test]
    fn span_examples() {
        assert_eq!(
            to_span(&iv(0.48, 0.12), 16000).unwrap(),
            SampleSpan {
                start: 7680,
                end: 9600
            }
        );
        assert_eq!(
            to_span(&iv(0.0, 1.0), 16000).unwrap(),
            SampleSpan {
                start: 0,
                end: 16000
            }
        );
        assert!(matches!(
            to_span(&iv(0.0, 1e-6), 16000),
            Err(Error::EmptySpan { .. })
        ));
    }

    #[test]
    fn extract_examples() {
        let audio =
            AudioBuffer::new((0..16000).map(|i| i as f64 / 16000.0).collect(), 16000).unwrap();
        assert_eq!(extract_segment(&audio, &iv(0.0, 1.0)).unwrap(), audio);
        let seg = extract_segment(&audio, &iv(0.48, 0.12)).unwrap();
        assert_eq!(seg.len(), 1920);
        assert_eq!(seg.samples()[0], audio.samples()[7680]);
        let err = extract_segment(&audio, &iv(0.9, 0.2)).unwrap_err();
        assert!(err.to_string().contains("alignment exceeds audio"));
    }

    #[test]
    fn seconds_formatting() {
        assert_eq!(format_seconds(1.0), "1.00");
        assert_eq!(format_seconds(0.5), "0.50");
        assert_eq!(format_seconds(0.48), "0.48");
        assert_eq!(format_seconds(0.125), "0.125");
    }

    #[test]
    fn pure_phone_labels() {
        assert_eq!(pure_phone("AH1_B"), "AH");
        assert_eq!(pure_phone("SH"), "SH");
        assert_eq!(pure_phone("IY0"), "IY");
        assert_eq!(pure_phone("SIL"), "SIL");
        assert_eq!(pure_phone("<eps>"), "<eps>");
    }

    fn arb_interval() -> impl Strategy<Value = PhonemeInterval> {
        (
            "[a-z][a-z0-9_]{0,8}",
            "[A-Z]{1,3}",
            0.0f64..1000.0,
            1e-4f64..10.0,
        )
            .prop_map(|(utt_id, phone, start, duration)| PhonemeInterval {
                utt_id,
                channel: "1".into(),
                start,
                duration,
                phone,
                score: None,
            })
    }

    proptest! {
        #[test]
        fn ctm_round_trip(list in prop::collection::vec(arb_interval(), 0..20)) {
            let parsed = parse_ctm(&serialize_ctm(&list)).unwrap();
            prop_assert_eq!(&parsed, &list);
            prop_assert_eq!(parse_ctm(&serialize_ctm(&parsed)).unwrap(), parsed);
        }

        #[test]
        fn to_span_is_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0, d in 0.001f64..1.0) {
            let (lo, hi) = (a.min(b), a.max(b));
            let s1 = to_span(&iv(lo, d), 16000).unwrap();
            let s2 = to_span(&iv(hi, d), 16000).unwrap();
            prop_assert!(s1.start <= s2.start);
        }
    }
}
