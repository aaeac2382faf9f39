//! Close phoneme pair dictionary and donor selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 42 pure phones of a Kaldi LibriSpeech lexicon: epsilon, silence,
/// spoken noise and the 39 stressless ARPAbet phones.
pub const KALDI_PURE_PHONES: [&str; 42] = [
    "<eps>", "SIL", "SPN", "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER",
    "EY", "F", "G", "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S",
    "SH", "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
];

/// Inventory symbols that never serve as a donor.
pub const NON_SPEECH: [&str; 3] = ["<eps>", "SIL", "SPN"];

pub const STARTER_DICT: &str = include_str!("../data/close_pairs.tsv");

pub fn default_inventory() -> BTreeSet<String> {
    KALDI_PURE_PHONES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DonorWeighting {
    #[default]
    ConfusionWeighted,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloseDict {
    entries: BTreeMap<String, Vec<(String, f64)>>,
    inventory: BTreeSet<String>,
}

impl CloseDict {
    pub fn load(path: impl AsRef<Path>, inventory: BTreeSet<String>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, inventory)
    }

    /// The bundled five-pair dictionary over [`default_inventory`].
    pub fn starter() -> Self {
        Self::parse(STARTER_DICT, default_inventory()).expect("bundled dictionary is valid")
    }

    /// Parses `candidate TAB donor TAB weight` lines.
    pub fn parse(text: &str, inventory: BTreeSet<String>) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [candidate, donor, weight] = fields[..] else {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            };
            for phone in [candidate, donor] {
                if !inventory.contains(phone) {
                    return Err(Error::parse(
                        line_no,
                        format!("unknown phone label {phone:?}"),
                    ));
                }
            }
            if candidate == donor {
                return Err(Error::parse(
                    line_no,
                    format!("self-pair {candidate}->{donor}"),
                ));
            }
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::parse(line_no, format!("non-numeric weight {weight:?}")))?;
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(Error::parse(
                    line_no,
                    format!("weight {weight} outside (0, 1]"),
                ));
            }
            let donors = entries.entry(candidate.to_string()).or_default();
            if donors.iter().any(|(d, _)| d == donor) {
                return Err(Error::parse(
                    line_no,
                    format!("duplicate pair {candidate}->{donor}"),
                ));
            }
            donors.push((donor.to_string(), weight));
        }
        Ok(Self { entries, inventory })
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn donors(&self, candidate: &str) -> &[(String, f64)] {
        self.entries
            .get(candidate)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_close(&self, candidate: &str, other: &str) -> bool {
        self.donors(candidate).iter().any(|(d, _)| d == other)
    }

    pub fn candidates(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn pair_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Draws a close donor for `candidate`, or `None` when it has no entries.
    pub fn pick_donor<R: Rng + ?Sized>(
        &self,
        candidate: &str,
        rng: &mut R,
        weighting: DonorWeighting,
    ) -> Option<&str> {
        let donors = self.entries.get(candidate)?;
        let picked = match weighting {
            DonorWeighting::ConfusionWeighted => donors.choose_weighted(rng, |(_, w)| *w).ok()?,
            DonorWeighting::Uniform => donors.choose(rng)?,
        };
        Some(picked.0.as_str())
    }

    /// Phones eligible as a distant donor: the inventory minus the
    /// candidate, its close set and non-speech symbols.
    pub fn distant_set<'s, 'c>(
        &'s self,
        candidate: &'c str,
    ) -> impl Iterator<Item = &'s str> + use<'s, 'c> {
        self.inventory.iter().map(String::as_str).filter(move |p| {
            *p != candidate && !NON_SPEECH.contains(p) && !self.is_close(candidate, p)
        })
    }

    pub fn pick_distant<R: Rng + ?Sized>(&self, candidate: &str, rng: &mut R) -> Result<&str> {
        self.distant_set(candidate)
            .choose_stable(rng)
            .ok_or_else(|| Error::NoDistantPhone(candidate.to_string()))
    }
}
