//! Table-style scan of the Montgomery map's measured parameter over small
//! primes and the ML-KEM / ML-DSA moduli.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::composition::Budget;
use crate::field::Modulus;
use crate::gadget::GadgetSpec;
use crate::multiplicity::{measure_exhaustive, measure_sampled, SampleMeta, SAMPLER_NAME};
use crate::{Executor, Result};

pub const MLKEM_Q: u32 = 3329;
pub const MLDSA_Q: u32 = 8_380_417;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub max_prime: u32,
    pub mlkem: bool,
    pub mldsa: bool,
    /// Secrets drawn for the ML-DSA row.
    pub n_secrets: u64,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            max_prime: 31,
            mlkem: true,
            mldsa: true,
            n_secrets: 100,
            seed: 0,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRow {
    pub q: u32,
    pub s: u32,
    pub measured_k: u32,
    pub verification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub gadget: String,
    pub claimed_k: u32,
    pub generator: String,
    pub seed: u64,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    /// Rows whose measured parameter exceeds the claimed bound.
    pub fn violations(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(move |r| r.measured_k > self.claimed_k)
    }
}

pub fn primes_up_to(n: u32) -> Vec<u32> {
    if n < 2 {
        return Vec::new();
    }
    let mut composite = alloc::vec![false; n as usize + 1];
    let mut primes = Vec::new();
    for i in 2..=n as usize {
        if !composite[i] {
            primes.push(i as u32);
            let mut j = i * i;
            while j <= n as usize {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

pub fn scan_montgomery<E: Executor>(opts: &ScanOptions, exec: &E) -> Result<ScanReport> {
    let mut rows = Vec::new();
    let exhaustive = |q: u32, label: Option<&str>| -> Result<ScanRow> {
        let m = Modulus::new(q as u64)?;
        opts.budget.check(q as u128 * q as u128)?;
        let g = GadgetSpec::montgomery(m, None)?;
        let r = measure_exhaustive(&g, exec);
        Ok(ScanRow {
            q,
            s: m.default_width(),
            measured_k: r.measured_k,
            verification: "Exhaustive".into(),
            label: label.map(String::from),
            sample: None,
        })
    };
    for q in primes_up_to(opts.max_prime) {
        rows.push(exhaustive(q, None)?);
    }
    if opts.mlkem {
        rows.push(exhaustive(MLKEM_Q, Some("ML-KEM"))?);
    }
    if opts.mldsa {
        let m = Modulus::new(MLDSA_Q as u64)?;
        opts.budget.check(opts.n_secrets as u128 * MLDSA_Q as u128)?;
        let g = GadgetSpec::montgomery(m, None)?;
        let r = measure_sampled(&g, opts.n_secrets, opts.seed, exec)?;
        rows.push(ScanRow {
            q: MLDSA_Q,
            s: m.default_width(),
            measured_k: r.measured_k,
            verification: alloc::format!("{} random x, exhaustive m", opts.n_secrets),
            label: Some("ML-DSA".into()),
            sample: r.sample,
        });
    }
    Ok(ScanReport {
        gadget: "montgomery".into(),
        claimed_k: 2,
        generator: SAMPLER_NAME.into(),
        seed: opts.seed,
        rows,
    })
}
