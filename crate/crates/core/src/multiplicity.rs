//! Measurement of `|{m : G(x, m) = v}|` and of the PF-PINI parameter
//! `max_{x, v}` of that count.
//!
//! Secrets are the unit of parallel work. Each job enumerates every mask for
//! one secret, and jobs are merged in secret order with ties broken toward the
//! smallest `(x, v)`, so reports do not depend on how work was scheduled.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::field::{Modulus, Residue};
use crate::gadget::{sub_raw, GadgetKind, GadgetSpec};
use crate::{Error, Executor, Result};

/// Dense per-secret histograms are only kept up to this modulus.
pub const DENSE_LIMIT: u32 = 1 << 16;

/// Above this modulus an exhaustive `q^2` run logs a warning.
pub const EXHAUSTIVE_SOFT_LIMIT: u32 = 1 << 20;

pub const SAMPLER_NAME: &str = "chacha8-index-sample";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountHistogram {
    pub secret: Residue,
    /// `counts[v]` masks send `secret` to `v`.
    pub counts: Vec<u32>,
}

impl CountHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Largest count and the smallest value reaching it.
    pub fn max(&self) -> (u32, u32) {
        argmax(&self.counts)
    }

    pub fn zero_values(&self) -> u32 {
        self.counts.iter().filter(|&&c| c == 0).count() as u32
    }
}

/// Exact histogram of `G(x, ·)` over all `q` masks.
pub fn count_histogram(g: &GadgetSpec, x: Residue) -> CountHistogram {
    let mut counts = vec![0u32; g.modulus().q() as usize];
    fill_counts(g, x.val(), &mut counts);
    CountHistogram { secret: x, counts }
}

/// Adds one to `counts[G(x, m)]` for every mask `m`.
pub(crate) fn fill_counts(g: &GadgetSpec, x: u32, counts: &mut [u32]) {
    let q = g.modulus().q();
    debug_assert_eq!(counts.len(), q as usize);
    match g.kind() {
        GadgetKind::Butterfly => {
            for m in 0..q {
                counts[sub_raw(x, m, q) as usize] += 1;
            }
        }
        GadgetKind::BarrettNat { s } | GadgetKind::Montgomery { s } => {
            let r = 1u64 << s;
            let q64 = q as u64;
            for m in 0..q as u64 {
                counts[(((x as u64 + r - m) % r) % q64) as usize] += 1;
            }
        }
        GadgetKind::BarrettAlgebraic { .. } | GadgetKind::Table(_) => {
            for m in 0..q {
                counts[g.compute_raw(x, m) as usize] += 1;
            }
        }
    }
}

fn argmax(counts: &[u32]) -> (u32, u32) {
    let mut best = (0u32, 0u32);
    for (v, &c) in counts.iter().enumerate() {
        if c > best.1 {
            best = (v as u32, c);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramRepr {
    /// Per-secret `count -> number of values with that count`.
    Spectrum,
    /// Spectrum plus the full `q`-length count array per secret.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub x: u32,
    pub v: u32,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub count: u32,
    pub values: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretSummary {
    pub x: u32,
    pub max_count: u32,
    /// Smallest `v` whose count equals `max_count`.
    pub argmax: u32,
    /// Number of output values no mask reaches.
    pub zero_values: u32,
    pub spectrum: Vec<SpectrumEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u32>>,
}

impl SecretSummary {
    fn from_counts(x: u32, counts: Vec<u32>, keep: bool) -> Self {
        let (argmax, max_count) = argmax(&counts);
        let mut spectrum = BTreeMap::new();
        for &c in &counts {
            *spectrum.entry(c).or_insert(0u32) += 1;
        }
        SecretSummary {
            x,
            max_count,
            argmax,
            zero_values: spectrum.get(&0).copied().unwrap_or(0),
            spectrum: spectrum
                .into_iter()
                .map(|(count, values)| SpectrumEntry { count, values })
                .collect(),
            counts: keep.then_some(counts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub generator: String,
    pub seed: u64,
    pub n_secrets: u64,
    pub with_replacement: bool,
    /// Hex SHA-256 of the sorted secrets as little-endian `u32`s.
    pub secrets_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub gadget: String,
    pub q: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    pub mode: Mode,
    pub measured_k: u32,
    pub claimed_k: u32,
    pub witness: Witness,
    pub leakage_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_secrets: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleMeta>,
    pub secrets_covered: u64,
    pub histogram_repr: HistogramRepr,
    pub per_secret: Vec<SecretSummary>,
}

impl MultiplicityReport {
    pub fn summary(&self, x: u32) -> Option<&SecretSummary> {
        self.per_secret
            .binary_search_by_key(&x, |s| s.x)
            .ok()
            .map(|i| &self.per_secret[i])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeasureOptions {
    /// Keep dense per-secret histograms (honoured only for `q <= DENSE_LIMIT`).
    pub dense: bool,
}

pub fn measure_exhaustive<E: Executor>(g: &GadgetSpec, exec: &E) -> MultiplicityReport {
    measure_exhaustive_with(g, exec, MeasureOptions::default())
}

pub fn measure_exhaustive_with<E: Executor>(
    g: &GadgetSpec,
    exec: &E,
    opts: MeasureOptions,
) -> MultiplicityReport {
    let q = g.modulus().q();
    if q > EXHAUSTIVE_SOFT_LIMIT {
        log::warn!("exhaustive measurement at q = {q} needs {} evaluations", q as u64 * q as u64);
    }
    let secrets: Vec<u32> = (0..q).collect();
    measure_secrets(g, &secrets, exec, opts, Mode::Exhaustive)
}

/// Draws `n_secrets` distinct secrets from a seeded generator and enumerates
/// every mask for each of them.
pub fn measure_sampled<E: Executor>(
    g: &GadgetSpec,
    n_secrets: u64,
    seed: u64,
    exec: &E,
) -> Result<MultiplicityReport> {
    measure_sampled_with(g, n_secrets, seed, exec, MeasureOptions::default())
}

pub fn measure_sampled_with<E: Executor>(
    g: &GadgetSpec,
    n_secrets: u64,
    seed: u64,
    exec: &E,
    opts: MeasureOptions,
) -> Result<MultiplicityReport> {
    let secrets = sample_secrets(g.modulus(), n_secrets, seed)?;
    let mut report = measure_secrets(g, &secrets, exec, opts, Mode::Sampled);
    report.seed = Some(seed);
    report.n_secrets = Some(n_secrets);
    report.sample = Some(SampleMeta {
        generator: SAMPLER_NAME.into(),
        seed,
        n_secrets,
        with_replacement: false,
        secrets_digest: secrets_digest(&secrets),
    });
    Ok(report)
}

/// `n` distinct secrets drawn uniformly without replacement, sorted ascending.
pub fn sample_secrets(modulus: Modulus, n: u64, seed: u64) -> Result<Vec<u32>> {
    let q = modulus.q();
    if n == 0 || n > q as u64 {
        return Err(Error::SampleSize { n, q });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut secrets: Vec<u32> = rand::seq::index::sample(&mut rng, q as usize, n as usize)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    secrets.sort_unstable();
    Ok(secrets)
}

pub fn secrets_digest(secrets: &[u32]) -> String {
    let mut h = Sha256::new();
    for x in secrets {
        h.update(x.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn measure_secrets<E: Executor>(
    g: &GadgetSpec,
    secrets: &[u32],
    exec: &E,
    opts: MeasureOptions,
    mode: Mode,
) -> MultiplicityReport {
    let q = g.modulus().q();
    let keep = opts.dense && q <= DENSE_LIMIT;
    let per_secret = exec.map(secrets.len(), |i| {
        let x = secrets[i];
        let mut counts = vec![0u32; q as usize];
        fill_counts(g, x, &mut counts);
        SecretSummary::from_counts(x, counts, keep)
    });
    let mut witness = Witness { x: 0, v: 0, count: 0 };
    for s in &per_secret {
        if s.max_count > witness.count {
            witness = Witness {
                x: s.x,
                v: s.argmax,
                count: s.max_count,
            };
        }
    }
    MultiplicityReport {
        gadget: g.name().into(),
        q,
        s: g.width(),
        mode,
        measured_k: witness.count,
        claimed_k: g.claimed_k(),
        witness,
        leakage_bits: leakage_bits(witness.count),
        seed: None,
        n_secrets: None,
        elapsed_ms: None,
        sample: None,
        secrets_covered: secrets.len() as u64,
        histogram_repr: if keep {
            HistogramRepr::Dense
        } else {
            HistogramRepr::Spectrum
        },
        per_secret,
    }
}

/// `log2(k)` bits, the single-wire leakage bound of a PF-PINI(k) wire.
pub fn leakage_bits(k: u32) -> f64 {
    if k == 0 {
        0.0
    } else {
        libm::log2(k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Sound,
    Violated { x: u32, v: u32, count: u32 },
}

impl Verdict {
    pub fn is_sound(&self) -> bool {
        matches!(self, Verdict::Sound)
    }
}

/// Compares the gadget's claimed parameter against a measured report.
pub fn verify_claim(g: &GadgetSpec, report: &MultiplicityReport) -> Verdict {
    if report.measured_k <= g.claimed_k() {
        Verdict::Sound
    } else {
        Verdict::Violated {
            x: report.witness.x,
            v: report.witness.v,
            count: report.witness.count,
        }
    }
}
