//! Butterfly -> Barrett diagnosis for an NTT pipeline with no inter-stage
//! refresh, and the fix that inserts one.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::composition::{contrast_table, Budget, ContrastReport, CountingMethod};
use crate::equivalence::{check_equivalence, EquivalenceReport};
use crate::field::{Modulus, Residue};
use crate::gadget::GadgetSpec;
use crate::multiplicity::{leakage_bits, sample_secrets};
use crate::{Executor, Result};

/// Up to this modulus every secret is analysed by default.
pub const ALL_SECRETS_LIMIT: u32 = 31;
pub const DEFAULT_SAMPLED_SECRETS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgePreset {
    MlKem,
    MlDsa,
}

impl BridgePreset {
    pub fn q(self) -> u32 {
        match self {
            BridgePreset::MlKem => 3329,
            BridgePreset::MlDsa => 8_380_417,
        }
    }

    pub fn s(self) -> u32 {
        match self {
            BridgePreset::MlKem => 12,
            BridgePreset::MlDsa => 23,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SecretChoice {
    All,
    Sampled { n: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosisOptions {
    pub secrets: SecretChoice,
    pub budget: Budget,
}

impl DiagnosisOptions {
    /// All secrets for `q <= 31`, a seeded sample otherwise.
    pub fn for_modulus(q: u32) -> Self {
        let secrets = if q <= ALL_SECRETS_LIMIT {
            SecretChoice::All
        } else {
            SecretChoice::Sampled {
                n: DEFAULT_SAMPLED_SECRETS,
                seed: 0,
            }
        };
        DiagnosisOptions {
            secrets,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButterflyWire {
    pub max_count: u32,
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrettWire {
    pub max_count: u32,
    pub leakage_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WithFresh {
    pub output_max: u128,
    /// `max(k1, k2) * q^2`.
    pub bound: u128,
    pub intermediate_uniform: bool,
    pub intermediate_min: u128,
    pub intermediate_max: u128,
    pub method: CountingMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WithoutFresh {
    pub output_max: u128,
    /// `k2 * q`.
    pub bound: u128,
    /// Worst raw stage register feeding onward without a refresh.
    pub intermediate_max: u128,
    /// Some value on that register is never produced.
    pub intermediate_has_unreached_value: bool,
    /// The butterfly output entering Barrett.
    pub boundary_max: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prescription {
    pub action: String,
    pub registers_per_stage: u32,
    pub subtractions_per_stage: u32,
    pub resulting_pipeline_parameter: u32,
    pub intermediate_wires: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeDiagnosis {
    pub q: u32,
    pub s: u32,
    pub secrets: SecretChoice,
    pub secrets_analysed: Vec<u32>,
    pub nat_cross_check: EquivalenceReport,
    pub butterfly_wire: ButterflyWire,
    pub barrett_wire: BarrettWire,
    pub with_fresh: WithFresh,
    pub without_fresh: WithoutFresh,
    pub pipeline_parameter: u32,
    pub checks: Vec<Check>,
    pub prescription: Prescription,
}

impl BridgeDiagnosis {
    pub fn all_checks_hold(&self) -> bool {
        self.nat_cross_check.is_equal() && self.checks.iter().all(|c| c.holds)
    }
}

pub fn diagnose_bridge<E: Executor>(
    modulus: Modulus,
    s: u32,
    opts: DiagnosisOptions,
    exec: &E,
) -> Result<BridgeDiagnosis> {
    // Also enforces q <= 2^s before any enumeration.
    let nat_cross_check = check_equivalence(modulus, s, exec, opts.budget)?;

    let secrets: Vec<Residue> = match opts.secrets {
        SecretChoice::All => modulus.elements().collect(),
        SecretChoice::Sampled { n, seed } => sample_secrets(modulus, n, seed)?
            .into_iter()
            .map(|x| modulus.residue(x as u64))
            .collect(),
    };

    let butterfly = GadgetSpec::butterfly(modulus);
    let barrett = GadgetSpec::barrett_algebraic(modulus, Some(s));
    let contrast = contrast_table(
        &butterfly,
        &barrett,
        &secrets,
        exec,
        opts.budget,
        CountingMethod::Auto,
    )?;
    Ok(assemble(modulus, s, opts.secrets, &secrets, nat_cross_check, &contrast))
}

fn assemble(
    modulus: Modulus,
    s: u32,
    choice: SecretChoice,
    secrets: &[Residue],
    nat_cross_check: EquivalenceReport,
    c: &ContrastReport,
) -> BridgeDiagnosis {
    let q = modulus.q() as u128;
    let (k1, k2) = (c.k1, c.k2);
    let parameter = k1.max(k2);
    let fresh = &c.with_fresh;
    let plain = &c.without_fresh;

    let with_fresh = WithFresh {
        output_max: fresh.output_max,
        bound: parameter as u128 * q * q,
        intermediate_uniform: fresh.intermediate.uniform,
        intermediate_min: fresh.intermediate.min_count,
        intermediate_max: fresh.intermediate.max_count,
        method: fresh.method,
    };
    let without_fresh = WithoutFresh {
        output_max: plain.output_max,
        bound: k2 as u128 * q,
        intermediate_max: plain.exposed.max_count,
        intermediate_has_unreached_value: plain.exposed.min_count == 0,
        boundary_max: plain.intermediate.max_count,
    };

    let check = |name: &str, holds: bool| Check {
        name: name.into(),
        holds,
    };
    let checks = alloc::vec![
        check("butterfly_wire_at_most_one", k1 <= 1),
        check("barrett_wire_at_most_two", k2 <= 2),
        check(
            "fresh_output_within_max_k_q2",
            with_fresh.output_max <= with_fresh.bound && with_fresh.output_max <= 2 * q * q,
        ),
        check("fresh_pipeline_parameter_is_two", parameter == 2),
        check(
            "fresh_intermediate_counts_equal_q",
            with_fresh.intermediate_uniform
                && with_fresh.intermediate_min == q
                && with_fresh.intermediate_max == q,
        ),
    ];

    BridgeDiagnosis {
        q: modulus.q(),
        s,
        secrets: choice,
        secrets_analysed: secrets.iter().map(|x| x.val()).collect(),
        nat_cross_check,
        butterfly_wire: ButterflyWire {
            max_count: k1,
            uniform: k1 == 1,
        },
        barrett_wire: BarrettWire {
            max_count: k2,
            leakage_bits: leakage_bits(k2),
        },
        with_fresh,
        without_fresh,
        pipeline_parameter: parameter,
        checks,
        prescription: Prescription {
            action: "insert one fresh uniform Z_q mask, subtracted from each stage output before the next stage".into(),
            registers_per_stage: 1,
            subtractions_per_stage: 1,
            resulting_pipeline_parameter: parameter,
            intermediate_wires: "uniform".into(),
        },
    }
}
