#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use blendaug::audio::{write_wav, AudioBuffer};

pub const RATE: u32 = 16_000;

pub const STARTER_PAIRS: &str = "\
# candidate\tdonor\tweight
SH\tS\t0.76
S\tSH\t0.76
V\tF\t0.44
F\tV\t0.44
NG\tN\t0.43
N\tNG\t0.43
IY\tIH\t0.33
IH\tIY\t0.33
Z\tS\t0.77
S\tZ\t0.77
";

const PHONES: [&str; 11] = ["S", "SH", "Z", "V", "F", "N", "NG", "IY", "IH", "AA", "T"];
const DURATIONS: [f64; 4] = [0.05, 0.06, 0.07, 0.08];

/// `(phone, duration_s, score)`
pub type PhoneSpec<'a> = (&'a str, f64, u8);
pub type UttSpec<'a> = (String, Vec<PhoneSpec<'a>>);

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub manifest: PathBuf,
    pub ctm: PathBuf,
    pub dict: PathBuf,
}

impl Fixture {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

fn phone_freq(phone: &str) -> f64 {
    let idx = PHONES.iter().position(|p| *p == phone).unwrap_or(0);
    180.0 + 70.0 * idx as f64
}

fn tone(freq: f64, amp: f64, len: usize) -> impl Iterator<Item = f64> {
    (0..len).map(move |i| amp * (2.0 * PI * freq * i as f64 / RATE as f64).sin())
}

/// Writes one utterance per `(utt_id, [(phone, duration_s, score)])` spec:
/// a tone per phone, a CTM line per phone and a manifest line.
pub fn write_corpus(specs: &[UttSpec]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("wav")).unwrap();
    let mut ctm = String::new();
    let mut manifest = String::new();
    for (u, (utt, phones)) in specs.iter().enumerate() {
        let mut samples = Vec::new();
        let mut start = 0.0f64;
        for (p, &(phone, dur, _)) in phones.iter().enumerate() {
            let len = (dur * RATE as f64).round() as usize;
            let amp = 0.2 + 0.05 * ((u + p) % 5) as f64;
            samples.extend(tone(phone_freq(phone), amp, len));
            writeln!(ctm, "{utt} 1 {:.3} {:.3} {phone}", start, dur).unwrap();
            start += dur;
        }
        let wav = format!("wav/{utt}.wav");
        write_wav(
            &AudioBuffer::new(samples, RATE).unwrap(),
            dir.path().join(&wav),
        )
        .unwrap();
        let scores: Vec<u8> = phones.iter().map(|p| p.2).collect();
        writeln!(
            manifest,
            "{}",
            serde_json::json!({"utt_id": utt, "wav": wav, "scores": scores})
        )
        .unwrap();
    }
    let manifest_path = dir.path().join("manifest.jsonl");
    let ctm_path = dir.path().join("align.ctm");
    let dict_path = dir.path().join("pairs.tsv");
    fs::write(&manifest_path, manifest).unwrap();
    fs::write(&ctm_path, ctm).unwrap();
    fs::write(&dict_path, STARTER_PAIRS).unwrap();
    Fixture {
        dir,
        manifest: manifest_path,
        ctm: ctm_path,
        dict: dict_path,
    }
}

/// `n` utterances of six phones each with varied durations, a few
/// mispronounced phones and sine tones per phone.
pub fn sine_corpus(n: usize) -> Fixture {
    let specs: Vec<UttSpec> = (0..n)
        .map(|u| {
            let phones = (0..6)
                .map(|p| {
                    let k = u * 7 + p * 3;
                    let score = if (u + p) % 9 == 4 { 1 } else { 2 };
                    (
                        PHONES[k % PHONES.len()],
                        DURATIONS[(u + p) % DURATIONS.len()],
                        score,
                    )
                })
                .collect();
            (format!("utt{u:03}"), phones)
        })
        .collect();
    write_corpus(&specs)
}

/// Every file under `dir`, relative path and bytes, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
