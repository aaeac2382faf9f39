//! Candidate/donor blending under a mask and the augmented label.
//!
//! Within the mask window every output frame is
//! `λ(t)·x_C[t] + (1 - λ(t))·x_D[t]`, with the donor first scaled to the
//! candidate's RMS. Region outputs are concatenated in order.

use serde::{Deserialize, Serialize};

use crate::audio::{normalize_energy, rms, AudioBuffer};
use crate::error::{Error, Result};
use crate::mask::{generate_mask, get_property, MaskParams, MaskProperty, MixCurve, Template};

/// Frames (or regions) with λ below this count as donor-dominated.
pub const LAMBDA_THRESHOLD: f64 = 0.25;

/// Score of a well-pronounced phone in the source annotation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodScore(u8);

impl GoodScore {
    /// 0 = mispronounced or missing, 1 = accented, 2 = good.
    pub const SPEECHOCEAN: GoodScore = GoodScore(2);

    pub fn new(value: u8) -> Self {
        GoodScore(value)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl Default for GoodScore {
    fn default() -> Self {
        Self::SPEECHOCEAN
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// Share of frames with λ ≥ 0.25 must reach one half for ŷ = 1.
    #[default]
    FrameWeighted,
    /// Per-region threshold on mean λ, then `⌊Σθ / R⌋`.
    PaperFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendResult {
    pub audio: AudioBuffer,
    pub label: u8,
    pub frame_lambdas: MixCurve,
    pub regional_labels: Vec<u8>,
    pub mode: LabelMode,
    pub property: MaskProperty,
    /// Gain applied to the donor by energy matching.
    pub donor_gain: f64,
}

/// Mixes the mask window of `candidate` and `donor` (already
/// energy-matched). Cut/Paste returns the donor window unchanged.
pub fn blend(
    candidate: &[f64],
    donor: &[f64],
    property: &MaskProperty,
    curve: &MixCurve,
) -> Result<Vec<f64>> {
    let window = property.window_len();
    if curve.len() != window {
        return Err(Error::InvalidData(format!(
            "mix curve has {} frames, mask window has {window}",
            curve.len()
        )));
    }
    if donor.len() < window {
        return Err(Error::SegmentTooShort {
            len: donor.len(),
            min: window,
        });
    }
    if property.template == Template::CutPaste {
        return Ok(donor[..window].to_vec());
    }
    if candidate.len() < window {
        return Err(Error::SegmentTooShort {
            len: candidate.len(),
            min: window,
        });
    }

    let mut out = Vec::with_capacity(window);
    let mut offset = 0;
    for &width in &property.widths {
        let region = offset..offset + width;
        out.extend(
            curve.values()[region.clone()]
                .iter()
                .zip(&candidate[region.clone()])
                .zip(&donor[region])
                .map(|((&lambda, &c), &d)| lambda * c + (1.0 - lambda) * d),
        );
        offset += width;
    }
    Ok(out)
}

fn region_means<'a>(
    property: &'a MaskProperty,
    curve: &'a MixCurve,
) -> impl Iterator<Item = f64> + 'a {
    let mut offset = 0;
    property.widths.iter().map(move |&w| {
        let slice = &curve.values()[offset..offset + w];
        offset += w;
        slice.iter().sum::<f64>() / w as f64
    })
}

/// θ per region: 1 when the region's mean λ reaches the threshold.
pub fn regional_labels(property: &MaskProperty, curve: &MixCurve) -> Vec<u8> {
    region_means(property, curve)
        .map(|m| u8::from(m >= LAMBDA_THRESHOLD))
        .collect()
}

pub fn label(property: &MaskProperty, curve: &MixCurve, mode: LabelMode) -> u8 {
    match mode {
        LabelMode::FrameWeighted => {
            if curve.is_empty() {
                return 0;
            }
            let kept = curve
                .values()
                .iter()
                .filter(|&&l| l >= LAMBDA_THRESHOLD)
                .count();
            u8::from(2 * kept >= curve.len())
        }
        LabelMode::PaperFloor => {
            let thetas = regional_labels(property, curve);
            let sum: usize = thetas.iter().map(|&t| t as usize).sum();
            (sum / thetas.len().max(1)) as u8
        }
    }
}

/// Real-valued score: the mean over regions of `mean λ · y_C`, before any
/// discretization. Experimental; not used by the pipeline.
pub fn analytic_score(property: &MaskProperty, curve: &MixCurve, good: GoodScore) -> f64 {
    let y = good.value() as f64;
    let (sum, count) =
        region_means(property, curve).fold((0.0, 0usize), |(s, n), m| (s + m * y, n + 1));
    sum / count.max(1) as f64
}

/// Energy-matches the donor, builds the mask, blends and labels.
pub fn speech_blend(
    candidate: &AudioBuffer,
    donor: &AudioBuffer,
    _good: GoodScore,
    template: Template,
    params: MaskParams,
    mode: LabelMode,
) -> Result<BlendResult> {
    if candidate.sample_rate() != donor.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: candidate.sample_rate(),
            found: donor.sample_rate(),
        });
    }
    let property = get_property(template, candidate.len(), donor.len(), params)?;
    let target = rms(candidate.samples())?;
    let normalized = normalize_energy(donor, target)?;
    let donor_gain = target / rms(donor.samples())?;
    let (_, curve) = generate_mask(&property);
    let samples = blend(candidate.samples(), normalized.samples(), &property, &curve)?;
    let label = label(&property, &curve, mode);
    Ok(BlendResult {
        audio: AudioBuffer::new(samples, candidate.sample_rate())?,
        label,
        regional_labels: regional_labels(&property, &curve),
        frame_lambdas: curve,
        mode,
        property,
        donor_gain,
    })
}
