//! Pipelines of gadgets and exact wire distributions.
//!
//! A pipeline feeds stage `i`'s output into stage `i + 1`. When
//! `fresh_after[i]` is set, an independent uniform mask is subtracted first.
//! Every stage draws its own mask, so the mask space is `Z_q^d` with
//! `d = stages + fresh masks`.
//!
//! Wires:
//! - [`WireId::Boundary`]`(i)` is the value entering stage `i + 1`, after the
//!   fresh mask when one is applied. Its distribution is taken over every mask
//!   that feeds it, for a fixed pipeline secret `x`.
//! - [`WireId::Output`] is the final stage's output over all `d` masks.
//! - [`WireId::Stage`]`(j)` is stage `j`'s raw output register over its own
//!   mask, with the value entering that stage held at `x`. This is the wire a
//!   single probe on an unrefreshed stage observes.
//!
//! Two exact counting backends exist. [`CountingMethod::Enumerate`] walks every
//! mask tuple. [`CountingMethod::Factored`] pushes per-value counts through the
//! stages one at a time, which costs `O(stages * q^2)` and gives the same
//! integers. Neither ever samples.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::field::{Modulus, Residue};
use crate::gadget::{sub_raw, GadgetSpec};
use crate::multiplicity::{self, leakage_bits, measure_exhaustive};
use crate::{Error, Executor, Result};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evaluations: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_evaluations: DEFAULT_BUDGET,
        }
    }
}

impl Budget {
    pub fn new(max_evaluations: u64) -> Self {
        Budget { max_evaluations }
    }

    pub fn check(&self, required: u128) -> Result<()> {
        if required > self.max_evaluations as u128 {
            Err(Error::BudgetExceeded {
                required,
                cap: self.max_evaluations,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMethod {
    #[default]
    Enumerate,
    Factored,
    /// Enumerate when it fits the budget, otherwise factored.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineSpec {
    stages: Vec<GadgetSpec>,
    fresh_after: Vec<bool>,
    modulus: Modulus,
}

/// Chains `stages`, subtracting a fresh mask after stage `i` when
/// `fresh_flags[i]` is set. Budgets are checked at analysis time.
pub fn multistage_compose(stages: Vec<GadgetSpec>, fresh_flags: Vec<bool>) -> Result<PipelineSpec> {
    PipelineSpec::new(stages, fresh_flags)
}

impl PipelineSpec {
    pub fn new(stages: Vec<GadgetSpec>, fresh_after: Vec<bool>) -> Result<Self> {
        let first = stages.first().ok_or(Error::EmptyPipeline)?;
        let modulus = first.modulus();
        if fresh_after.len() + 1 != stages.len() {
            return Err(Error::FreshFlags {
                stages: stages.len(),
                expected: stages.len() - 1,
                got: fresh_after.len(),
            });
        }
        for (i, g) in stages.iter().enumerate() {
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch {
                    stage: i,
                    expected: modulus.q(),
                    found: g.modulus().q(),
                });
            }
        }
        Ok(PipelineSpec {
            stages,
            fresh_after,
            modulus,
        })
    }

    pub fn two_stage(g1: GadgetSpec, g2: GadgetSpec, fresh: bool) -> Result<Self> {
        Self::new(vec![g1, g2], vec![fresh])
    }

    pub fn stages(&self) -> &[GadgetSpec] {
        &self.stages
    }

    pub fn fresh_after(&self) -> &[bool] {
        &self.fresh_after
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn names(&self) -> Vec<String> {
        self.stages.iter().map(|g| g.name().to_string()).collect()
    }

    pub fn boundaries(&self) -> usize {
        self.fresh_after.len()
    }

    /// Number of independent masks: one per stage plus one per fresh flag.
    pub fn mask_dimension(&self) -> u32 {
        (self.stages.len() + self.fresh_after.iter().filter(|&&f| f).count()) as u32
    }

    fn check_wire(&self, wire: WireId) -> Result<()> {
        let ok = match wire {
            WireId::Boundary(b) => b < self.boundaries(),
            WireId::Stage(j) => j < self.stages.len(),
            WireId::Output => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidWire(wire.to_string()))
        }
    }

    /// `(last stage evaluated, whether a fresh mask follows it)`.
    fn target(&self, wire: WireId) -> (usize, bool) {
        match wire {
            WireId::Boundary(b) => (b, self.fresh_after[b]),
            WireId::Output => (self.stages.len() - 1, false),
            WireId::Stage(j) => (j, false),
        }
    }

    /// Masks the wire's value depends on.
    pub fn wire_dimension(&self, wire: WireId) -> u32 {
        match wire {
            WireId::Stage(_) => 1,
            _ => {
                let (last, fresh_end) = self.target(wire);
                let fresh = self.fresh_after[..last].iter().filter(|&&f| f).count();
                (last + 1 + fresh + fresh_end as usize) as u32
            }
        }
    }

    fn cost(&self, wire: WireId, method: CountingMethod) -> u128 {
        let q = self.modulus.q() as u128;
        match (wire, method) {
            (WireId::Stage(_), _) => q,
            (_, CountingMethod::Factored) => {
                let (last, fresh_end) = self.target(wire);
                let fresh = self.fresh_after[..last].iter().filter(|&&f| f).count() + fresh_end as usize;
                q + (last + fresh) as u128 * q * q
            }
            _ => pow_saturating(q, self.wire_dimension(wire)),
        }
    }
}

fn pow_saturating(base: u128, exp: u32) -> u128 {
    base.checked_pow(exp).unwrap_or(u128::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireId {
    Boundary(usize),
    Output,
    Stage(usize),
}

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireId::Boundary(b) => write!(f, "boundary:{b}"),
            WireId::Output => f.write_str("output"),
            WireId::Stage(j) => write!(f, "stage:{j}"),
        }
    }
}

impl FromStr for WireId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "output" {
            return Ok(WireId::Output);
        }
        let bad = || Error::InvalidWire(s.to_string());
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "boundary" => Ok(WireId::Boundary(idx)),
            "stage" => Ok(WireId::Stage(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireDistribution {
    pub wire: WireId,
    pub secret: u32,
    /// `counts[v]` mask tuples put `v` on the wire.
    pub counts: Vec<u128>,
    /// Size of the mask-tuple space feeding the wire, `q^dimension`.
    pub total: u128,
    pub method: CountingMethod,
}

impl WireDistribution {
    pub fn max_count(&self) -> u128 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn min_count(&self) -> u128 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    /// Smallest value reaching [`WireDistribution::max_count`].
    pub fn argmax(&self) -> u32 {
        let max = self.max_count();
        self.counts.iter().position(|&c| c == max).unwrap_or(0) as u32
    }

    /// Every value has count `total / q`.
    pub fn is_uniform(&self) -> bool {
        self.max_count() == self.min_count()
    }

    pub fn baseline(&self) -> u128 {
        self.total / self.counts.len() as u128
    }
}

/// Exact total-variation distance, kept as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tv {
    pub numerator: u128,
    pub denominator: u128,
    pub value: f64,
}

impl Tv {
    fn new(numerator: u128, denominator: u128) -> Self {
        let g = gcd(numerator, denominator).max(1);
        let (n, d) = (numerator / g, denominator / g);
        Tv {
            numerator: n,
            denominator: d,
            value: n as f64 / d as f64,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `|{(m1, m_fresh) : G1(x, m1) - m_fresh = w}|` by brute force.
pub fn renewal_count(g1: &GadgetSpec, x: Residue, w: Residue) -> u64 {
    let q = g1.modulus().q();
    let mut n = 0;
    for m1 in 0..q {
        let v = g1.compute_raw(x.val(), m1);
        for mf in 0..q {
            n += (sub_raw(v, mf, q) == w.val()) as u64;
        }
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GapVerdict {
    NoGap,
    /// Smallest `(x, v)` whose multiplicity exceeds one.
    GapPresent { x: u32, v: u32, count: u32 },
}

/// Searches the unrefreshed intermediate wire `G1(x, m1)` for a value hit by
/// more than one mask.
pub fn security_gap_check<E: Executor>(g1: &GadgetSpec, exec: &E) -> GapVerdict {
    let q = g1.modulus().q();
    let hits = exec.map(q as usize, |x| {
        let h = multiplicity::count_histogram(g1, g1.modulus().residue(x as u64));
        h.counts
            .iter()
            .position(|&c| c > 1)
            .map(|v| (x as u32, v as u32, h.counts[v]))
    });
    match hits.into_iter().flatten().next() {
        Some((x, v, count)) => GapVerdict::GapPresent { x, v, count },
        None => GapVerdict::NoGap,
    }
}

/// Runs wire and output analyses for one pipeline.
pub struct Analyzer<'a, E> {
    pipeline: &'a PipelineSpec,
    exec: &'a E,
    budget: Budget,
    method: CountingMethod,
}

impl<'a, E: Executor> Analyzer<'a, E> {
    pub fn new(pipeline: &'a PipelineSpec, exec: &'a E) -> Self {
        Analyzer {
            pipeline,
            exec,
            budget: Budget::default(),
            method: CountingMethod::Enumerate,
        }
    }

    pub fn budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn method(mut self, method: CountingMethod) -> Self {
        self.method = method;
        self
    }

    pub fn pipeline(&self) -> &PipelineSpec {
        self.pipeline
    }

    fn resolve(&self, wire: WireId) -> Result<CountingMethod> {
        let p = self.pipeline;
        if wire_total(p, wire).is_none() {
            return Err(Error::BudgetExceeded {
                required: u128::MAX,
                cap: self.budget.max_evaluations,
            });
        }
        match self.method {
            CountingMethod::Auto => {
                let enumerate = p.cost(wire, CountingMethod::Enumerate);
                if self.budget.check(enumerate).is_ok() {
                    Ok(CountingMethod::Enumerate)
                } else {
                    self.budget.check(p.cost(wire, CountingMethod::Factored))?;
                    Ok(CountingMethod::Factored)
                }
            }
            m => {
                self.budget.check(p.cost(wire, m))?;
                Ok(m)
            }
        }
    }

    pub fn wire_distribution(&self, wire: WireId, x: Residue) -> Result<WireDistribution> {
        let p = self.pipeline;
        p.check_wire(wire)?;
        p.modulus.checked_residue(x.val() as u64)?;
        let method = self.resolve(wire)?;
        let total = wire_total(p, wire).expect("checked by resolve");
        let counts = match (wire, method) {
            (WireId::Stage(j), _) => {
                let h = multiplicity::count_histogram(&p.stages[j], x);
                h.counts.into_iter().map(u128::from).collect()
            }
            (_, CountingMethod::Factored) => self.factored(wire, x.val()),
            _ => self.enumerate(wire, x.val()),
        };
        debug_assert_eq!(counts.iter().sum::<u128>(), total);
        Ok(WireDistribution {
            wire,
            secret: x.val(),
            counts,
            total,
            method,
        })
    }

    /// Distribution of the value entering stage `boundary + 1`.
    pub fn intermediate_distribution(&self, boundary: usize, x: Residue) -> Result<WireDistribution> {
        self.wire_distribution(WireId::Boundary(boundary), x)
    }

    /// Largest output multiplicity for one secret `x`.
    pub fn composed_output_multiplicity(&self, x: Residue) -> Result<OutputSlice> {
        let d = self.wire_distribution(WireId::Output, x)?;
        Ok(OutputSlice {
            secret: x.val(),
            max_count: d.max_count(),
            argmax: d.argmax(),
            baseline: d.baseline(),
        })
    }

    /// `1/2 * sum_w |P(wire = w | x0) - P(wire = w | x1)|`, exactly.
    pub fn distinguisher_tv(&self, wire: WireId, x0: Residue, x1: Residue) -> Result<Tv> {
        let a = self.wire_distribution(wire, x0)?;
        let b = self.wire_distribution(wire, x1)?;
        Ok(tv_between(&a, &b))
    }

    /// Aggregates every boundary wire and the output over `secrets`, and
    /// checks the output against the fiber bound built from measured stage
    /// parameters.
    pub fn report(&self, secrets: &[Residue]) -> Result<CompositionReport> {
        let p = self.pipeline;
        let q = p.modulus.q();
        self.budget.check(q as u128 * q as u128)?;
        let stage_k: Vec<u32> = p
            .stages
            .iter()
            .map(|g| measure_exhaustive(g, self.exec).measured_k)
            .collect();

        let mut method = CountingMethod::Enumerate;
        let mut wires = Vec::with_capacity(p.boundaries());
        for b in 0..p.boundaries() {
            let mut acc = WireAccumulator::new(WireId::Boundary(b));
            for &x in secrets {
                let d = self.wire_distribution(WireId::Boundary(b), x)?;
                method = merge_method(method, d.method);
                acc.add(&d);
            }
            wires.push(acc.finish());
        }

        let mut out = WireAccumulator::new(WireId::Output);
        for &x in secrets {
            let d = self.wire_distribution(WireId::Output, x)?;
            method = merge_method(method, d.method);
            out.add(&d);
        }
        let out = out.finish();

        let dim = p.mask_dimension();
        let baseline = pow_saturating(q as u128, dim - 1);
        let k_last = *stage_k.last().expect("non-empty pipeline") as u128;
        let k_max = *stage_k.iter().max().expect("non-empty pipeline") as u128;
        let bound = k_last.saturating_mul(baseline);
        let symmetric_bound = k_max.saturating_mul(baseline);
        let output = OutputSummary {
            max_count: out.max_count,
            min_count: out.min_count,
            bound,
            bound_name: bound_name(p.stages.len(), dim - 1),
            symmetric_bound,
            satisfied: out.max_count <= bound && out.max_count <= symmetric_bound,
            normalized_k: Normalized::new(out.max_count, baseline),
        };
        Ok(CompositionReport {
            pipeline: p.names(),
            fresh_flags: p.fresh_after.clone(),
            q,
            mask_dimension: dim,
            secrets: secrets.iter().map(|x| x.val()).collect(),
            method,
            stage_k,
            wires,
            output,
            tv_pairs: None,
        })
    }

    /// TV distance on `wire` for each requested secret pair.
    pub fn tv_pairs(&self, wire: WireId, pairs: &[(Residue, Residue)]) -> Result<Vec<TvEntry>> {
        pairs
            .iter()
            .map(|&(x0, x1)| {
                Ok(TvEntry {
                    x0: x0.val(),
                    x1: x1.val(),
                    wire,
                    tv: self.distinguisher_tv(wire, x0, x1)?,
                })
            })
            .collect()
    }

    fn enumerate(&self, wire: WireId, x: u32) -> Vec<u128> {
        let p = self.pipeline;
        let q = p.modulus.q();
        let (last, fresh_end) = p.target(wire);
        let parts = self.exec.map(q as usize, |m0| {
            let mut counts = vec![0u128; q as usize];
            let w = p.stages[0].compute_raw(x, m0 as u32);
            descend(p, 0, w, last, fresh_end, &mut counts);
            counts
        });
        sum_parts(q, parts)
    }

    fn factored(&self, wire: WireId, x: u32) -> Vec<u128> {
        let p = self.pipeline;
        let q = p.modulus.q() as usize;
        let (last, fresh_end) = p.target(wire);
        let mut dist = vec![0u128; q];
        dist[x as usize] = 1;
        for i in 0..=last {
            let g = &p.stages[i];
            dist = self.push(&dist, |w, out, c| {
                for m in 0..q as u32 {
                    out[g.compute_raw(w, m) as usize] += c;
                }
            });
            let fresh = if i < last { p.fresh_after[i] } else { fresh_end };
            if fresh {
                let qq = q as u32;
                dist = self.push(&dist, |w, out, c| {
                    for mf in 0..qq {
                        out[sub_raw(w, mf, qq) as usize] += c;
                    }
                });
            }
        }
        dist
    }

    /// Applies `step` to each occupied input value, in parallel chunks.
    fn push<F>(&self, dist: &[u128], step: F) -> Vec<u128>
    where
        F: Fn(u32, &mut [u128], u128) + Sync + Send,
    {
        let q = dist.len();
        let chunks = q.clamp(1, 64);
        let width = q.div_ceil(chunks);
        let parts = self.exec.map(chunks, |c| {
            let mut out = vec![0u128; q];
            let end = ((c + 1) * width).min(q);
            for (w, &n) in dist.iter().enumerate().take(end).skip(c * width) {
                if n != 0 {
                    step(w as u32, &mut out, n);
                }
            }
            out
        });
        sum_parts(q as u32, parts)
    }
}

fn descend(p: &PipelineSpec, stage: usize, w: u32, last: usize, fresh_end: bool, counts: &mut [u128]) {
    let q = p.modulus.q();
    if stage == last {
        if fresh_end {
            for mf in 0..q {
                counts[sub_raw(w, mf, q) as usize] += 1;
            }
        } else {
            counts[w as usize] += 1;
        }
        return;
    }
    let next = &p.stages[stage + 1];
    if p.fresh_after[stage] {
        for mf in 0..q {
            let input = sub_raw(w, mf, q);
            for m in 0..q {
                descend(p, stage + 1, next.compute_raw(input, m), last, fresh_end, counts);
            }
        }
    } else {
        for m in 0..q {
            descend(p, stage + 1, next.compute_raw(w, m), last, fresh_end, counts);
        }
    }
}

fn sum_parts(q: u32, parts: Vec<Vec<u128>>) -> Vec<u128> {
    let mut total = vec![0u128; q as usize];
    for part in parts {
        for (t, c) in total.iter_mut().zip(part) {
            *t += c;
        }
    }
    total
}

fn wire_total(p: &PipelineSpec, wire: WireId) -> Option<u128> {
    (p.modulus.q() as u128).checked_pow(p.wire_dimension(wire))
}

fn merge_method(a: CountingMethod, b: CountingMethod) -> CountingMethod {
    if a == CountingMethod::Factored || b == CountingMethod::Factored {
        CountingMethod::Factored
    } else {
        CountingMethod::Enumerate
    }
}

fn bound_name(stages: usize, exponent: u32) -> String {
    match exponent {
        0 => format!("k{stages}"),
        1 => format!("k{stages} * q"),
        e => format!("k{stages} * q^{e}"),
    }
}

pub fn tv_between(a: &WireDistribution, b: &WireDistribution) -> Tv {
    debug_assert_eq!(a.total, b.total);
    let diff: u128 = a
        .counts
        .iter()
        .zip(&b.counts)
        .map(|(&x, &y)| x.abs_diff(y))
        .sum();
    Tv::new(diff, 2 * a.total)
}

struct WireAccumulator {
    wire: WireId,
    uniform: bool,
    max_count: u128,
    min_count: u128,
    baseline: u128,
    max_at: Option<(u32, u32)>,
}

impl WireAccumulator {
    fn new(wire: WireId) -> Self {
        WireAccumulator {
            wire,
            uniform: true,
            max_count: 0,
            min_count: u128::MAX,
            baseline: 0,
            max_at: None,
        }
    }

    fn add(&mut self, d: &WireDistribution) {
        self.uniform &= d.is_uniform();
        if d.max_count() > self.max_count {
            self.max_count = d.max_count();
            self.max_at = Some((d.secret, d.argmax()));
        }
        self.min_count = self.min_count.min(d.min_count());
        self.baseline = d.baseline();
    }

    fn finish(self) -> WireSummary {
        WireSummary {
            wire: self.wire,
            uniform: self.uniform,
            max_count: self.max_count,
            min_count: if self.min_count == u128::MAX { 0 } else { self.min_count },
            baseline: self.baseline,
            witness: self.max_at.map(|(x, v)| WireWitness { x, v }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireWitness {
    pub x: u32,
    pub v: u32,
}

/// A wire aggregated over several secrets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSummary {
    pub wire: WireId,
    /// Uniform for every secret analysed.
    pub uniform: bool,
    pub max_count: u128,
    pub min_count: u128,
    pub baseline: u128,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WireWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSlice {
    pub secret: u32,
    pub max_count: u128,
    pub argmax: u32,
    pub baseline: u128,
}

/// `max_count / baseline`, kept as the integer pair plus a float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub max_count: u128,
    pub baseline: u128,
    pub value: f64,
}

impl Normalized {
    pub fn new(max_count: u128, baseline: u128) -> Self {
        Normalized {
            max_count,
            baseline,
            value: max_count as f64 / baseline.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSummary {
    pub max_count: u128,
    pub min_count: u128,
    /// `k_last * q^(d-1)` with the last stage's measured parameter.
    pub bound: u128,
    pub bound_name: String,
    /// `max_i k_i * q^(d-1)`.
    pub symmetric_bound: u128,
    pub satisfied: bool,
    pub normalized_k: Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvEntry {
    pub x0: u32,
    pub x1: u32,
    pub wire: WireId,
    pub tv: Tv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub pipeline: Vec<String>,
    pub fresh_flags: Vec<bool>,
    pub q: u32,
    pub mask_dimension: u32,
    pub secrets: Vec<u32>,
    pub method: CountingMethod,
    /// Measured PF-PINI parameter of each stage.
    pub stage_k: Vec<u32>,
    pub wires: Vec<WireSummary>,
    pub output: OutputSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_pairs: Option<Vec<TvEntry>>,
}

/// One configuration (with or without fresh masking) of a stage pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRow {
    pub fresh: bool,
    pub method: CountingMethod,
    pub output_max: u128,
    pub output_bound: u128,
    pub output_bound_name: String,
    pub output_parameter: Normalized,
    /// The boundary wire between the two stages.
    pub intermediate: WireSummary,
    /// The wire a probe between pipeline stages sees: the refreshed boundary
    /// with fresh masking, the worst raw stage register without it.
    pub exposed: WireSummary,
    /// `log2(max / baseline)` of the exposed wire.
    pub exposed_leakage_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub q: u32,
    pub stages: Vec<String>,
    pub k1: u32,
    pub k2: u32,
    pub secrets: Vec<u32>,
    pub with_fresh: ContrastRow,
    pub without_fresh: ContrastRow,
}

/// Analyses `g1 -> g2` with and without a fresh mask between the stages.
pub fn contrast_table<E: Executor>(
    g1: &GadgetSpec,
    g2: &GadgetSpec,
    secrets: &[Residue],
    exec: &E,
    budget: Budget,
    method: CountingMethod,
) -> Result<ContrastReport> {
    let fresh = PipelineSpec::two_stage(g1.clone(), g2.clone(), true)?;
    let plain = PipelineSpec::two_stage(g1.clone(), g2.clone(), false)?;
    let with = contrast_row(&fresh, secrets, exec, budget, method)?;
    let without = contrast_row(&plain, secrets, exec, budget, method)?;
    Ok(ContrastReport {
        q: g1.modulus().q(),
        stages: fresh.names(),
        k1: with.0[0],
        k2: with.0[1],
        secrets: secrets.iter().map(|x| x.val()).collect(),
        with_fresh: with.1,
        without_fresh: without.1,
    })
}

fn contrast_row<E: Executor>(
    p: &PipelineSpec,
    secrets: &[Residue],
    exec: &E,
    budget: Budget,
    method: CountingMethod,
) -> Result<(Vec<u32>, ContrastRow)> {
    let an = Analyzer::new(p, exec).budget(budget).method(method);
    let report = an.report(secrets)?;
    let intermediate = report.wires[0].clone();
    let exposed = if p.fresh_after[0] {
        intermediate.clone()
    } else {
        let mut worst: Option<WireSummary> = None;
        for j in 0..p.stages.len() {
            let mut acc = WireAccumulator::new(WireId::Stage(j));
            for &x in secrets {
                acc.add(&an.wire_distribution(WireId::Stage(j), x)?);
            }
            let s = acc.finish();
            if worst.as_ref().is_none_or(|w| s.max_count > w.max_count) {
                worst = Some(s);
            }
        }
        worst.expect("two stages")
    };
    let bits = leakage_bits_ratio(exposed.max_count, exposed.baseline);
    Ok((
        report.stage_k.clone(),
        ContrastRow {
            fresh: p.fresh_after[0],
            method: report.method,
            output_max: report.output.max_count,
            output_bound: report.output.bound,
            output_bound_name: report.output.bound_name.clone(),
            output_parameter: report.output.normalized_k,
            intermediate,
            exposed,
            exposed_leakage_bits: bits,
        },
    ))
}

fn leakage_bits_ratio(max: u128, baseline: u128) -> f64 {
    if baseline == 0 || max <= baseline {
        0.0
    } else if max.is_multiple_of(baseline) && max / baseline <= u32::MAX as u128 {
        leakage_bits((max / baseline) as u32)
    } else {
        libm::log2(max as f64 / baseline as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Sequential;

    fn q(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn zero(p: u64) -> GadgetSpec {
        GadgetSpec::custom("zero", q(p), vec![0; (p * p) as usize], 1).unwrap()
    }

    fn all(m: Modulus) -> Vec<Residue> {
        m.elements().collect()
    }

    #[test]
    fn construction_errors() {
        let m = q(5);
        assert_eq!(PipelineSpec::new(vec![], vec![]), Err(Error::EmptyPipeline));
        assert!(matches!(
            PipelineSpec::new(vec![GadgetSpec::butterfly(m)], vec![true]),
            Err(Error::FreshFlags { .. })
        ));
        assert!(matches!(
            PipelineSpec::two_stage(GadgetSpec::butterfly(m), GadgetSpec::butterfly(q(7)), true),
            Err(Error::ModulusMismatch { stage: 1, .. })
        ));
    }

    #[test]
    fn mask_dimensions() {
        let m = q(3);
        let bf = GadgetSpec::butterfly(m);
        let p = PipelineSpec::two_stage(bf.clone(), bf.clone(), true).unwrap();
        assert_eq!(p.mask_dimension(), 3);
        assert_eq!(p.wire_dimension(WireId::Boundary(0)), 2);
        assert_eq!(p.wire_dimension(WireId::Output), 3);
        let p3 = multistage_compose(vec![bf.clone(), bf.clone(), bf], vec![true, false]).unwrap();
        assert_eq!(p3.mask_dimension(), 4);
        assert_eq!(p3.wire_dimension(WireId::Boundary(1)), 3);
    }

    #[test]
    fn renewal_examples() {
        let m5 = q(5);
        let bar = GadgetSpec::barrett_algebraic(m5, Some(3));
        for x in m5.elements() {
            for w in m5.elements() {
                assert_eq!(renewal_count(&bar, x, w), 5);
            }
        }
        assert_eq!(renewal_count(&zero(3), q(3).residue(0), q(3).residue(1)), 3);
        let m7 = q(7);
        assert_eq!(
            renewal_count(&GadgetSpec::butterfly(m7), m7.residue(0), m7.residue(0)),
            7
        );
    }

    #[test]
    fn intermediate_examples() {
        let m = q(5);
        let bf = GadgetSpec::butterfly(m);
        let bar = GadgetSpec::barrett_algebraic(m, Some(3));
        let fresh = PipelineSpec::two_stage(bf.clone(), bar.clone(), true).unwrap();
        let an = Analyzer::new(&fresh, &Sequential);
        for x in m.elements() {
            assert_eq!(an.intermediate_distribution(0, x).unwrap().counts, [5; 5]);
        }
        let plain = PipelineSpec::two_stage(bf.clone(), bar.clone(), false).unwrap();
        let an = Analyzer::new(&plain, &Sequential);
        assert_eq!(an.intermediate_distribution(0, m.residue(2)).unwrap().counts, [1; 5]);
        let rev = PipelineSpec::two_stage(bar, bf, false).unwrap();
        let an = Analyzer::new(&rev, &Sequential);
        assert_eq!(
            an.intermediate_distribution(0, m.residue(0)).unwrap().counts,
            [2, 1, 1, 0, 1]
        );
        assert!(an.intermediate_distribution(1, m.residue(0)).is_err());
    }

    #[test]
    fn output_examples() {
        let m = q(5);
        let bf = GadgetSpec::butterfly(m);
        let bar = GadgetSpec::barrett_algebraic(m, Some(3));
        let fresh = PipelineSpec::two_stage(bf.clone(), bar.clone(), true).unwrap();
        let r = Analyzer::new(&fresh, &Sequential).report(&all(m)).unwrap();
        assert_eq!(r.output.bound, 50);
        assert_eq!(r.output.max_count, 35);
        assert!(r.output.satisfied);
        assert!(r.output.normalized_k.value <= 2.0);
        assert_eq!(r.output.bound_name, "k2 * q^2");

        let plain = PipelineSpec::two_stage(bf, bar, false).unwrap();
        let an = Analyzer::new(&plain, &Sequential);
        let d = an.wire_distribution(WireId::Output, m.residue(0)).unwrap();
        assert_eq!(d.counts, [7, 7, 7, 2, 2]);
        let r = an.report(&all(m)).unwrap();
        assert_eq!(r.output.bound, 10);
        assert_eq!(r.output.bound_name, "k2 * q");

        let m7 = q(7);
        let bf7 = GadgetSpec::butterfly(m7);
        let p = PipelineSpec::two_stage(bf7.clone(), bf7, false).unwrap();
        let s = Analyzer::new(&p, &Sequential)
            .composed_output_multiplicity(m7.residue(3))
            .unwrap();
        assert_eq!(s.max_count, 7);
        assert_eq!(s.baseline, 7);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(
            security_gap_check(&GadgetSpec::barrett_algebraic(q(5), Some(3)), &Sequential),
            GapVerdict::GapPresent { x: 0, v: 0, count: 2 }
        );
        assert_eq!(
            security_gap_check(&GadgetSpec::butterfly(q(7)), &Sequential),
            GapVerdict::NoGap
        );
        assert_eq!(
            security_gap_check(&zero(3), &Sequential),
            GapVerdict::GapPresent { x: 0, v: 0, count: 3 }
        );
    }

    #[test]
    fn tv_examples() {
        let m = q(5);
        let bf = GadgetSpec::butterfly(m);
        let bar = GadgetSpec::barrett_algebraic(m, Some(3));
        let fresh = PipelineSpec::two_stage(bf.clone(), bar.clone(), true).unwrap();
        let an = Analyzer::new(&fresh, &Sequential);
        for a in m.elements() {
            for b in m.elements() {
                assert!(an.distinguisher_tv(WireId::Boundary(0), a, b).unwrap().is_zero());
            }
        }
        let plain = PipelineSpec::two_stage(bf, bar, false).unwrap();
        let an = Analyzer::new(&plain, &Sequential);
        let tv = an
            .distinguisher_tv(WireId::Stage(1), m.residue(0), m.residue(1))
            .unwrap();
        assert_eq!((tv.numerator, tv.denominator), (1, 5));
        assert_eq!(tv.value, 0.2);
        let same = an
            .distinguisher_tv(WireId::Output, m.residue(3), m.residue(3))
            .unwrap();
        assert!(same.is_zero());
    }

    #[test]
    fn contrast_examples() {
        let m = q(5);
        let bf = GadgetSpec::butterfly(m);
        let bar = GadgetSpec::barrett_algebraic(m, Some(3));
        let secrets = all(m);
        let c = contrast_table(&bf, &bar, &secrets, &Sequential, Budget::default(), CountingMethod::Enumerate)
            .unwrap();
        assert!(c.with_fresh.intermediate.uniform);
        assert_eq!(c.with_fresh.intermediate.max_count, 5);
        assert_eq!(c.with_fresh.intermediate.min_count, 5);
        assert_eq!(c.with_fresh.exposed_leakage_bits, 0.0);
        assert!(!c.without_fresh.exposed.uniform);
        assert_eq!(c.without_fresh.exposed.max_count, 2);
        assert_eq!(c.without_fresh.exposed.wire, WireId::Stage(1));
        assert_eq!(c.without_fresh.exposed_leakage_bits, 1.0);
        assert_eq!((c.k1, c.k2), (1, 2));

        let c = contrast_table(&bar, &bf, &secrets, &Sequential, Budget::default(), CountingMethod::Enumerate)
            .unwrap();
        assert_eq!(c.without_fresh.intermediate.max_count, 2);
        assert_eq!(c.without_fresh.intermediate.min_count, 0);

        let m7 = q(7);
        let bf7 = GadgetSpec::butterfly(m7);
        let c = contrast_table(&bf7, &bf7, &all(m7), &Sequential, Budget::default(), CountingMethod::Enumerate)
            .unwrap();
        assert!(c.with_fresh.intermediate.uniform);
        assert!(c.without_fresh.intermediate.uniform);
        assert!(c.without_fresh.exposed.uniform);
    }

    #[test]
    fn multistage_examples() {
        let m3 = q(3);
        let bf = GadgetSpec::butterfly(m3);
        let p = multistage_compose(vec![bf.clone(), bf.clone(), bf], vec![true, true]).unwrap();
        let an = Analyzer::new(&p, &Sequential);
        for x in m3.elements() {
            assert_eq!(an.wire_distribution(WireId::Output, x).unwrap().counts, [81; 3]);
        }

        let m5 = q(5);
        let bf = GadgetSpec::butterfly(m5);
        let bar = GadgetSpec::barrett_algebraic(m5, Some(3));
        let p = multistage_compose(vec![bf.clone(), bar, bf], vec![true, true]).unwrap();
        let an = Analyzer::new(&p, &Sequential);
        for x in m5.elements() {
            assert_eq!(an.intermediate_distribution(0, x).unwrap().counts, [5; 5]);
            assert_eq!(an.intermediate_distribution(1, x).unwrap().counts, [125; 5]);
        }

        let bar = GadgetSpec::barrett_algebraic(m5, Some(3));
        let single = multistage_compose(vec![bar.clone()], vec![]).unwrap();
        let r = Analyzer::new(&single, &Sequential).report(&all(m5)).unwrap();
        let direct = measure_exhaustive(&bar, &Sequential);
        assert_eq!(r.output.max_count, direct.measured_k as u128);
        assert_eq!(r.output.bound_name, "k1");
        assert!(r.wires.is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let m = q(101);
        let bf = GadgetSpec::butterfly(m);
        let p = PipelineSpec::two_stage(bf.clone(), bf, true).unwrap();
        let an = Analyzer::new(&p, &Sequential).budget(Budget::new(1_000_000));
        assert_eq!(
            an.wire_distribution(WireId::Output, m.residue(0)),
            Err(Error::BudgetExceeded {
                required: 101u128.pow(3),
                cap: 1_000_000
            })
        );
        let auto = Analyzer::new(&p, &Sequential)
            .budget(Budget::new(1_000_000))
            .method(CountingMethod::Auto);
        let d = auto.wire_distribution(WireId::Output, m.residue(0)).unwrap();
        assert_eq!(d.method, CountingMethod::Factored);
        assert_eq!(d.counts, [101u128 * 101; 101]);
    }

    #[test]
    fn wire_id_text() {
        for w in [WireId::Boundary(3), WireId::Output, WireId::Stage(0)] {
            assert_eq!(w.to_string().parse::<WireId>().unwrap(), w);
        }
        assert!("boundary".parse::<WireId>().is_err());
        assert!("edge:1".parse::<WireId>().is_err());
    }
}
