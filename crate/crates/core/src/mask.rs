//! Mask templates: the mask property (center point, region count, region
//! widths, per-region mixing factors) and its per-frame λ curve.
//!
//! All templates except [`Template::CutPaste`] operate on a start-aligned
//! window of `N = min(T, L)` frames, where `T` is the candidate length and
//! `L` the donor length. Cut/Paste replaces the candidate with the whole
//! donor, so its window is `L` frames long.
//!
//! | template               | R | widths                                   | mixing                    |
//! |------------------------|---|------------------------------------------|---------------------------|
//! | smooth overlay         | 1 | `[N]`                                    | constant λ0               |
//! | cutmix                 | 3 | `[⌈3N/8⌉, ⌊N/4⌋, rest]`                  | `[1, 0, 1]`               |
//! | smooth concatenation   | 3 | `[⌈N(1-c)/2⌉, ⌊Nc⌋, rest]`, c = 1/5      | `[1, ramp 1→0, 0]`        |
//! | smooth gaussian overlay| 1 | `[N]`                                    | `1 - A·exp(-(t-μ)²/2σ²)`  |
//! | cut/paste              | 1 | `[L]`                                    | constant 0                |

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest segment, in frames, that any template accepts.
pub const MIN_SEGMENT_FRAMES: usize = 8;

// guards ceil/floor of products like N * 0.4 against representation error
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    SmoothOverlay,
    CutMix,
    SmoothConcatenation,
    SmoothGaussianOverlay,
    CutPaste,
}

impl Template {
    /// Templates in the random pool, indexed by mask id 1..=4.
    pub const POOL: [Template; 4] = [
        Template::SmoothOverlay,
        Template::CutMix,
        Template::SmoothConcatenation,
        Template::SmoothGaussianOverlay,
    ];

    pub const ALL: [Template; 5] = [
        Template::SmoothOverlay,
        Template::CutMix,
        Template::SmoothConcatenation,
        Template::SmoothGaussianOverlay,
        Template::CutPaste,
    ];

    pub fn from_mid(mid: u8) -> Option<Template> {
        Self::POOL.get((mid as usize).checked_sub(1)?).copied()
    }

    /// Mask id in 1..=4; Cut/Paste sits outside the random pool.
    pub fn mid(self) -> Option<u8> {
        Self::POOL
            .iter()
            .position(|t| *t == self)
            .map(|i| i as u8 + 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::SmoothOverlay => "smooth-overlay",
            Template::CutMix => "cut-mix",
            Template::SmoothConcatenation => "smooth-concatenation",
            Template::SmoothGaussianOverlay => "smooth-gaussian-overlay",
            Template::CutPaste => "cut-paste",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "1" | "smoothoverlay" | "overlay" => Template::SmoothOverlay,
            "2" | "cutmix" => Template::CutMix,
            "3" | "smoothconcatenation" | "smoothconcat" | "concatenation" | "concat" => {
                Template::SmoothConcatenation
            }
            "4" | "smoothgaussianoverlay" | "gaussianoverlay" | "gaussian" => {
                Template::SmoothGaussianOverlay
            }
            "cutpaste" => Template::CutPaste,
            _ => return Err(Error::InvalidMaskParam(format!("unknown template {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    /// λ0 of the smooth overlay.
    pub overlay_lambda: f64,
    /// Peak dip depth `A` of the Gaussian overlay.
    pub gaussian_depth: f64,
    /// σ = N / `gaussian_sigma_frac`.
    pub gaussian_sigma_frac: f64,
    /// Share of the window spent cross-fading in the smooth concatenation.
    pub crossfade_frac: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            overlay_lambda: 0.5,
            gaussian_depth: 0.5,
            gaussian_sigma_frac: 6.0,
            crossfade_frac: 0.2,
        }
    }
}

impl MaskParams {
    pub fn with_overlay_lambda(lambda: f64) -> Self {
        Self {
            overlay_lambda: lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidMaskParam(format!(
                    "{name} = {v} outside [0, 1]"
                )))
            }
        };
        unit("overlay_lambda", self.overlay_lambda)?;
        unit("gaussian_depth", self.gaussian_depth)?;
        if !(self.gaussian_sigma_frac > 0.0 && self.gaussian_sigma_frac.is_finite()) {
            return Err(Error::InvalidMaskParam(format!(
                "gaussian_sigma_frac = {} must be positive",
                self.gaussian_sigma_frac
            )));
        }
        if !(self.crossfade_frac > 0.0 && self.crossfade_frac < 1.0) {
            return Err(Error::InvalidMaskParam(format!(
                "crossfade_frac = {} outside (0, 1)",
                self.crossfade_frac
            )));
        }
        Ok(())
    }
}

/// Mixing factor specification of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionMix {
    Constant {
        lambda: f64,
    },
    /// Linear from `from` at the region's first frame to `to` at its last.
    Ramp {
        from: f64,
        to: f64,
    },
    /// `1 - depth·exp(-(t-μ)²/(2σ²))`, `t` counted from the window start.
    Gaussian {
        depth: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskProperty {
    pub template: Template,
    /// Center point `⌊min(T, L)/2⌋`.
    pub mu: usize,
    pub regions: usize,
    pub widths: Vec<usize>,
    pub lambdas: Vec<RegionMix>,
    pub params: MaskParams,
    pub candidate_len: usize,
    pub donor_len: usize,
}

impl MaskProperty {
    pub fn window_len(&self) -> usize {
        self.widths.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixCurve(Vec<f64>);

impl MixCurve {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn ceil_slack(x: f64) -> usize {
    (x - ROUNDING_SLACK).ceil().max(0.0) as usize
}

fn floor_slack(x: f64) -> usize {
    (x + ROUNDING_SLACK).floor().max(0.0) as usize
}

pub fn get_property(
    template: Template,
    candidate_len: usize,
    donor_len: usize,
    params: MaskParams,
) -> Result<MaskProperty> {
    for len in [candidate_len, donor_len] {
        if len < MIN_SEGMENT_FRAMES {
            return Err(Error::SegmentTooShort {
                len,
                min: MIN_SEGMENT_FRAMES,
            });
        }
    }
    params.validate()?;

    let n = candidate_len.min(donor_len);
    let (widths, lambdas) = match template {
        Template::SmoothOverlay => (
            vec![n],
            vec![RegionMix::Constant {
                lambda: params.overlay_lambda,
            }],
        ),
        Template::CutMix => {
            let head = (3 * n).div_ceil(8);
            let mid = n / 4;
            (
                vec![head, mid, n - head - mid],
                vec![
                    RegionMix::Constant { lambda: 1.0 },
                    RegionMix::Constant { lambda: 0.0 },
                    RegionMix::Constant { lambda: 1.0 },
                ],
            )
        }
        Template::SmoothConcatenation => {
            let c = params.crossfade_frac;
            let head = ceil_slack(n as f64 * (1.0 - c) / 2.0);
            let mid = floor_slack(n as f64 * c);
            if mid == 0 || head + mid >= n {
                return Err(Error::InvalidMaskParam(format!(
                    "crossfade_frac {c} leaves an empty region for a {n}-frame window"
                )));
            }
            (
                vec![head, mid, n - head - mid],
                vec![
                    RegionMix::Constant { lambda: 1.0 },
                    RegionMix::Ramp { from: 1.0, to: 0.0 },
                    RegionMix::Constant { lambda: 0.0 },
                ],
            )
        }
        Template::SmoothGaussianOverlay => (
            vec![n],
            vec![RegionMix::Gaussian {
                depth: params.gaussian_depth,
                sigma: n as f64 / params.gaussian_sigma_frac,
            }],
        ),
        Template::CutPaste => (vec![donor_len], vec![RegionMix::Constant { lambda: 0.0 }]),
    };

    Ok(MaskProperty {
        template,
        mu: n / 2,
        regions: widths.len(),
        widths,
        lambdas,
        params,
        candidate_len,
        donor_len,
    })
}

/// Expands the region specs of `property` to one λ per frame.
pub fn generate_mask(property: &MaskProperty) -> (Vec<usize>, MixCurve) {
    let mu = property.mu as f64;
    let mut curve = Vec::with_capacity(property.window_len());
    let mut offset = 0usize;
    for (&width, mix) in property.widths.iter().zip(&property.lambdas) {
        match *mix {
            RegionMix::Constant { lambda } => curve.extend(std::iter::repeat_n(lambda, width)),
            RegionMix::Ramp { from, to } => {
                if width == 1 {
                    curve.push(from);
                } else {
                    let last = (width - 1) as f64;
                    curve.extend((0..width).map(|i| from + (to - from) * (i as f64 / last)));
                }
            }
            RegionMix::Gaussian { depth, sigma } => {
                curve.extend((offset..offset + width).map(|t| {
                    let d = t as f64 - mu;
                    1.0 - depth * (-(d * d) / (2.0 * sigma * sigma)).exp()
                }));
            }
        }
        offset += width;
    }
    (property.widths.clone(), MixCurve(curve))
}

/// Formats with 9 significant digits, dropping trailing zeros.
pub(crate) fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// CSV of `frame,lambda` rows for the property's mask curve.
pub fn dump_mask(property: &MaskProperty) -> String {
    let (_, curve) = generate_mask(property);
    let mut out = String::from("frame,lambda\n");
    for (i, v) in curve.values().iter().enumerate() {
        let _ = writeln!(out, "{i},{}", format_sig9(*v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prop(t: Template, tl: usize, ll: usize) -> MaskProperty {
        get_property(t, tl, ll, MaskParams::default()).unwrap()
    }

    #[test]
    fn smooth_overlay_property() {
        let p = prop(Template::SmoothOverlay, 100, 60);
        assert_eq!(p.mu, 30);
        assert_eq!(p.regions, 1);
        assert_eq!(p.widths, vec![60]);
        assert_eq!(p.lambdas, vec![RegionMix::Constant { lambda: 0.5 }]);
    }

    #[test]
    fn cutmix_property() {
        let p = prop(Template::CutMix, 80, 80);
        assert_eq!(p.widths, vec![30, 20, 30]);
        let (_, curve) = generate_mask(&p);
        assert_eq!(curve.values()[29..31], [1.0, 0.0]);
        assert_eq!(curve.values()[49..51], [0.0, 1.0]);
    }

    #[test]
    fn cutpaste_property() {
        let p = prop(Template::CutPaste, 100, 60);
        assert_eq!((p.regions, p.mu), (1, 30));
        assert_eq!(p.widths, vec![60]);
        assert_eq!(p.lambdas, vec![RegionMix::Constant { lambda: 0.0 }]);
    }

    #[test]
    fn rejects_short_segments_and_bad_params() {
        assert!(matches!(
            get_property(Template::CutMix, 7, 100, MaskParams::default()),
            Err(Error::SegmentTooShort { len: 7, min: 8 })
        ));
        assert!(get_property(
            Template::SmoothOverlay,
            8,
            8,
            MaskParams::with_overlay_lambda(1.2)
        )
        .is_err());
        let tiny_fade = MaskParams {
            crossfade_frac: 0.01,
            ..MaskParams::default()
        };
        assert!(get_property(Template::SmoothConcatenation, 8, 8, tiny_fade).is_err());
    }

    #[test]
    fn concatenation_widths_match_integer_formula() {
        for n in 8..=1000 {
            let p = prop(Template::SmoothConcatenation, n, n + 3);
            let head = (2 * n).div_ceil(5);
            let mid = n / 5;
            assert_eq!(p.widths, vec![head, mid, n - head - mid], "N = {n}");
        }
    }

    #[test]
    fn curve_examples() {
        let (_, c) = generate_mask(
            &get_property(Template::SmoothOverlay, 10, 10, MaskParams::default()).unwrap(),
        );
        assert_eq!(c.values(), &[0.5; 10]);

        let ramp = MaskProperty {
            template: Template::SmoothConcatenation,
            mu: 2,
            regions: 1,
            widths: vec![5],
            lambdas: vec![RegionMix::Ramp { from: 1.0, to: 0.0 }],
            params: MaskParams::default(),
            candidate_len: 5,
            donor_len: 5,
        };
        assert_eq!(
            generate_mask(&ramp).1.values(),
            &[1.0, 0.75, 0.5, 0.25, 0.0]
        );

        let (_, c) = generate_mask(&prop(Template::SmoothGaussianOverlay, 60, 60));
        let (argmin, min) =
            c.values().iter().enumerate().fold(
                (0, f64::MAX),
                |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
            );
        assert_eq!(argmin, 30);
        assert!((min - 0.5).abs() < 1e-15);
        let expected0 = 1.0 - 0.5 * (-(30.0f64 * 30.0) / (2.0 * 10.0 * 10.0)).exp();
        assert!((c.values()[0] - expected0).abs() < 1e-15);
        assert!((c.values()[0] - 0.99444).abs() < 1e-5);
    }

    #[test]
    fn dump_examples() {
        assert_eq!(
            dump_mask(&prop(Template::CutPaste, 100, 60))
                .lines()
                .count(),
            61
        );
        let mut p = prop(Template::CutPaste, 8, 8);
        p.widths = vec![3];
        assert_eq!(dump_mask(&p), "frame,lambda\n0,0\n1,0\n2,0\n");

        let mut p = get_property(
            Template::SmoothOverlay,
            8,
            8,
            MaskParams::with_overlay_lambda(0.6),
        )
        .unwrap();
        p.widths = vec![2];
        assert_eq!(dump_mask(&p), "frame,lambda\n0,0.6\n1,0.6\n");

        let lambdas: Vec<String> = dump_mask(&prop(Template::CutMix, 8, 8))
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().to_string())
            .collect();
        assert_eq!(lambdas, ["1", "1", "1", "0", "0", "1", "1", "1"]);
    }

    #[test]
    fn sig9_is_lossless_to_nine_digits() {
        for v in [0.994445, 0.123456789123, 1.0, 0.0, 1e-7, 0.25] {
            let back: f64 = format_sig9(v).parse().unwrap();
            assert!(
                (back - v).abs() <= v.abs() * 5e-9,
                "{v} -> {}",
                format_sig9(v)
            );
        }
        assert_eq!(format_sig9(0.6), "0.6");
    }

    #[test]
    fn template_names_and_ids() {
        for t in Template::ALL {
            assert_eq!(t.name().parse::<Template>().unwrap(), t);
        }
        assert_eq!(Template::from_mid(2), Some(Template::CutMix));
        assert_eq!(Template::from_mid(0), None);
        assert_eq!(Template::from_mid(5), None);
        assert_eq!(Template::CutPaste.mid(), None);
        assert_eq!("cutpaste".parse::<Template>().unwrap(), Template::CutPaste);
        assert!("bogus".parse::<Template>().is_err());
    }

    proptest! {
        #[test]
        fn property_invariants(t in 8usize..300, l in 8usize..300, ti in 0usize..5) {
            let template = Template::ALL[ti];
            let p = prop(template, t, l);
            let (w, c) = generate_mask(&p);
            let expected_sum = if template == Template::CutPaste { l } else { t.min(l) };
            prop_assert_eq!(w.iter().sum::<usize>(), expected_sum);
            prop_assert_eq!(c.len(), expected_sum);
            prop_assert_eq!(p.regions, w.len());
            prop_assert_eq!(p.lambdas.len(), w.len());
            prop_assert!(w.iter().all(|&x| x >= 1));
            prop_assert!(c.values().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert_eq!(p.mu, t.min(l) / 2);
        }

        #[test]
        fn gaussian_symmetric_for_even_windows(half in 4usize..150) {
            let n = 2 * half;
            let (_, c) = generate_mask(&prop(Template::SmoothGaussianOverlay, n, n + 5));
            let mu = n / 2;
            for k in 1..mu {
                prop_assert!((c.values()[mu - k] - c.values()[mu + k]).abs() <= 1e-12);
            }
        }
    }
}
