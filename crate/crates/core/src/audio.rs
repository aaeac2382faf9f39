//! Mono PCM audio: WAV I/O, RMS energy and sample-span splicing.
//!
//! Samples are held as `f64` from decode to encode. Quantization to int16
//! happens only in [`encode_wav`], which clamps to `[-1, 1]` first.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const PCM_FORMAT_TAG: u16 = 1;
const INT16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate);
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copies out `span`, failing if it does not lie within the buffer.
    pub fn slice(&self, span: SampleSpan) -> Result<AudioBuffer> {
        span.check_within(self.len())?;
        Ok(AudioBuffer {
            samples: self.samples[span.start..span.end].to_vec(),
            sample_rate: self.sample_rate,
        })
    }
}

/// Half-open sample range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SampleSpan {
    pub start: usize,
    pub end: usize,
}

impl SampleSpan {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::SpanOutOfBounds {
                start,
                end,
                len: end,
            });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn check_within(&self, len: usize) -> Result<()> {
        if self.start >= self.end || self.end > len {
            return Err(Error::SpanOutOfBounds {
                start: self.start,
                end: self.end,
                len,
            });
        }
        Ok(())
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(buffer)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a RIFF/WAVE byte stream holding 16-bit mono PCM.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(Error::MalformedWav("truncated fmt chunk".into()));
                }
                let format_tag = le_u16(bytes, body);
                let channels = le_u16(bytes, body + 2);
                let sample_rate = le_u32(bytes, body + 4);
                let bits = le_u16(bytes, body + 14);
                fmt = Some((format_tag, channels, sample_rate, bits));
            }
            b"data" => {
                let (format_tag, channels, sample_rate, bits) =
                    fmt.ok_or_else(|| Error::MalformedWav("data chunk before fmt chunk".into()))?;
                if format_tag != PCM_FORMAT_TAG || bits != 16 {
                    return Err(Error::UnsupportedEncoding {
                        format_tag,
                        bits_per_sample: bits,
                    });
                }
                if channels != 1 {
                    return Err(Error::UnsupportedChannels(channels));
                }
                if body + size > bytes.len() {
                    return Err(Error::MalformedWav(format!(
                        "data chunk declares {size} bytes, {} present",
                        bytes.len() - body
                    )));
                }
                let samples = bytes[body..body + size]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / INT16_SCALE)
                    .collect();
                return AudioBuffer::new(samples, sample_rate);
            }
            _ => {}
        }
        // chunks are word-aligned
        pos = body + size + (size & 1);
    }
    Err(Error::MalformedWav("no data chunk".into()))
}

fn quantize(sample: f64) -> i16 {
    let clamped = if sample.is_nan() {
        0.0
    } else {
        sample.clamp(-1.0, 1.0)
    };
    (clamped * INT16_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Encodes as a canonical 44-byte-header 16-bit mono PCM WAV.
pub fn encode_wav(buffer: &AudioBuffer) -> Result<Vec<u8>> {
    if buffer.is_empty() {
        return Err(Error::EmptyInput);
    }
    let data_len = (buffer.len() * 2) as u32;
    let rate = buffer.sample_rate;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT_TAG.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buffer.samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    Ok(out)
}

/// Root-mean-square energy.
pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum_sq: f64 = samples.iter().map(|s| s * s).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

/// Scales `donor` so that its RMS equals `target_rms`.
pub fn normalize_energy(donor: &AudioBuffer, target_rms: f64) -> Result<AudioBuffer> {
    if !target_rms.is_finite() || target_rms < 0.0 {
        return Err(Error::InvalidData(format!(
            "target rms must be finite and non-negative, got {target_rms}"
        )));
    }
    let current = rms(donor.samples())?;
    if current == 0.0 {
        return Err(Error::SilentDonor);
    }
    let gain = target_rms / current;
    Ok(AudioBuffer {
        samples: donor.samples.iter().map(|s| s * gain).collect(),
        sample_rate: donor.sample_rate,
    })
}

/// Replaces `span` of `utterance` with `replacement`.
///
/// Returns the new buffer and the length change in samples.
pub fn splice(
    utterance: &AudioBuffer,
    span: SampleSpan,
    replacement: &AudioBuffer,
) -> Result<(AudioBuffer, isize)> {
    span.check_within(utterance.len())?;
    if replacement.sample_rate != utterance.sample_rate {
        return Err(Error::SampleRateMismatch {
            expected: utterance.sample_rate,
            found: replacement.sample_rate,
        });
    }
    let mut samples = Vec::with_capacity(utterance.len() - span.len() + replacement.len());
    samples.extend_from_slice(&utterance.samples[..span.start]);
    samples.extend_from_slice(&replacement.samples);
    samples.extend_from_slice(&utterance.samples[span.end..]);
    let shift = replacement.len() as isize - span.len() as isize;
    Ok((
        AudioBuffer {
            samples,
            sample_rate: utterance.sample_rate,
        },
        shift,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(samples, 16000).unwrap()
    }

    fn raw_wav(format_tag: u16, channels: u16, bits: u16, data: &[i16]) -> Vec<u8> {
        let data_len = (data.len() * 2) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_len).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&format_tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&16000u32.to_le_bytes());
        out.extend_from_slice(&(16000u32 * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_len.to_le_bytes());
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn decodes_zero_signal() {
        let b = decode_wav(&raw_wav(1, 1, 16, &[0; 160])).unwrap();
        assert_eq!(b.len(), 160);
        assert_eq!(b.sample_rate(), 16000);
        assert!(b.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn decodes_half_scale_exactly() {
        let b = decode_wav(&raw_wav(1, 1, 16, &[16384, -16384])).unwrap();
        assert_eq!(b.samples(), &[0.5, -0.5]);
    }

    #[test]
    fn rejects_stereo_and_non_pcm() {
        let err = decode_wav(&raw_wav(1, 2, 16, &[0; 4])).unwrap_err();
        assert!(
            err.to_string().contains("unsupported channel count"),
            "{err}"
        );
        let err = decode_wav(&raw_wav(3, 1, 16, &[0; 4])).unwrap_err();
        assert!(matches!(
            err,
            Error::UnsupportedEncoding { format_tag: 3, .. }
        ));
        let err = decode_wav(&raw_wav(1, 1, 8, &[0; 4])).unwrap_err();
        assert!(matches!(
            err,
            Error::UnsupportedEncoding {
                bits_per_sample: 8,
                ..
            }
        ));
        let err = decode_wav(&raw_wav(0xFFFE, 1, 16, &[0; 4])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedEncoding { .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_wav("/nonexistent/dir/x.wav").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn skips_unknown_and_odd_chunks() {
        let mut bytes = raw_wav(1, 1, 16, &[16384]);
        // insert a 3-byte LIST chunk (padded to 4) between fmt and data
        let extra = [b'L', b'I', b'S', b'T', 3, 0, 0, 0, 1, 2, 3, 0];
        let at = 12 + 8 + 16;
        bytes.splice(at..at, extra);
        assert_eq!(decode_wav(&bytes).unwrap().samples(), &[0.5]);
    }

    #[test]
    fn truncated_data_is_malformed() {
        let mut bytes = raw_wav(1, 1, 16, &[1, 2, 3]);
        bytes.truncate(bytes.len() - 2);
        assert!(matches!(decode_wav(&bytes), Err(Error::MalformedWav(_))));
    }

    #[test]
    fn write_clamps_out_of_range() {
        let bytes = encode_wav(&buf(vec![1.5, -2.0, 0.5])).unwrap();
        assert_eq!(i16::from_le_bytes([bytes[44], bytes[45]]), 32767);
        assert_eq!(i16::from_le_bytes([bytes[46], bytes[47]]), -32768);
        assert_eq!(i16::from_le_bytes([bytes[48], bytes[49]]), 16384);
    }

    #[test]
    fn write_rejects_empty_and_bad_path() {
        assert!(matches!(encode_wav(&buf(vec![])), Err(Error::EmptyInput)));
        let err = write_wav(&buf(vec![0.0]), "/nonexistent/dir/out.wav").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let original = buf(vec![0.0, 0.5, -0.25, 0.123]);
        write_wav(&original, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.samples()[..3], [0.0, 0.5, -0.25]);
        assert!((back.samples()[3] - 0.123).abs() <= 1.0 / 32768.0);
    }

    #[test]
    fn rms_examples() {
        assert!(matches!(rms(&[]), Err(Error::EmptyInput)));
        assert_eq!(rms(&[0.0; 10]).unwrap(), 0.0);
        assert_eq!(rms(&[0.5; 10]).unwrap(), 0.5);
        // 1600 samples = 10 whole periods of a 100 Hz sine at 16 kHz
        let sine: Vec<f64> = (0..1600)
            .map(|n| (2.0 * std::f64::consts::PI * 100.0 * n as f64 / 16000.0).sin())
            .collect();
        assert!((rms(&sine).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn normalize_examples() {
        // rms of alternating +-0.2 is 0.2
        let donor = buf(vec![0.2, -0.2, 0.2, -0.2]);
        let out = normalize_energy(&donor, 0.1).unwrap();
        for (o, d) in out.samples().iter().zip(donor.samples()) {
            assert!((o - d * 0.5).abs() < 1e-15);
        }
        assert_eq!(normalize_energy(&donor, 0.2).unwrap(), donor);

        let out = normalize_energy(&buf(vec![0.25; 8]), 0.6).unwrap();
        assert!(out.samples().iter().all(|&s| (s - 0.6).abs() < 1e-12));

        assert!(matches!(
            normalize_energy(&buf(vec![0.0; 8]), 0.3),
            Err(Error::SilentDonor)
        ));
    }

    #[test]
    fn splice_examples() {
        let utt = buf((0..1000).map(|i| i as f64 / 1000.0).collect());
        let span = SampleSpan::new(100, 200).unwrap();

        let same = utt.slice(span).unwrap();
        let (out, shift) = splice(&utt, span, &same).unwrap();
        assert_eq!(shift, 0);
        assert_eq!(out, utt);

        let repl = buf(vec![-0.5; 80]);
        let (out, shift) = splice(&utt, span, &repl).unwrap();
        assert_eq!(shift, -20);
        assert_eq!(out.len(), 980);
        let back = out.slice(SampleSpan::new(100, 180).unwrap()).unwrap();
        assert_eq!(back, repl);

        assert!(splice(&utt, SampleSpan::new(900, 1001).unwrap(), &repl).is_err());
        let other_rate = AudioBuffer::new(vec![0.0; 10], 8000).unwrap();
        assert!(matches!(
            splice(&utt, span, &other_rate),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn wav_round_trip_within_one_step(samples in prop::collection::vec(-1.0f64..=1.0, 1..200)) {
            let b = buf(samples);
            let back = decode_wav(&encode_wav(&b).unwrap()).unwrap();
            prop_assert_eq!(back.len(), b.len());
            for (x, y) in b.samples().iter().zip(back.samples()) {
                prop_assert!((x - y).abs() <= 1.0 / 32768.0);
            }
        }

        #[test]
        fn rms_is_scale_linear(samples in prop::collection::vec(-1.0f64..1.0, 1..100), g in -10.0f64..10.0) {
            let r = rms(&samples).unwrap();
            let scaled: Vec<f64> = samples.iter().map(|s| s * g).collect();
            let rs = rms(&scaled).unwrap();
            prop_assert!((rs - g.abs() * r).abs() <= 1e-9 * (g.abs() * r).max(1e-300));
        }

        #[test]
        fn normalize_is_idempotent(samples in prop::collection::vec(-1.0f64..1.0, 1..100), target in 0.0f64..1.0) {
            prop_assume!(rms(&samples).unwrap() > 1e-6);
            let once = normalize_energy(&buf(samples), target).unwrap();
            prop_assert!((rms(once.samples()).unwrap() - target).abs() <= 1e-6 * target.max(1e-12));
            if target > 0.0 {
                let twice = normalize_energy(&once, target).unwrap();
                for (a, b) in once.samples().iter().zip(twice.samples()) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn splice_length_bookkeeping(len in 2usize..300, a in 0usize..300, b in 0usize..300, r in 0usize..100) {
            let (start, end) = (a.min(b) % len, a.max(b) % len + 1);
            prop_assume!(start < end);
            let utt = buf(vec![0.1; len]);
            let span = SampleSpan::new(start, end).unwrap();
            let (out, shift) = splice(&utt, span, &buf(vec![0.2; r])).unwrap();
            prop_assert_eq!(out.len() as isize - len as isize, shift);
        }
    }
}
