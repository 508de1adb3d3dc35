//! Argument parsing and command dispatch.
//!
//! Exit codes depend only on verdicts and errors: 0 ok, 1 a verdict failed,
//! 2 bad configuration, 3 scope violation, 4 budget exceeded, 5 IO failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfpini_core::composition::{contrast_table, multistage_compose, tv_between, DEFAULT_BUDGET};
use pfpini_core::diagnosis::SecretChoice;
use pfpini_core::multiplicity::{measure_exhaustive_with, measure_sampled_with, MeasureOptions};
use pfpini_core::{
    check_equivalence, diagnose_bridge, scan_montgomery, transfer_bound, verify_claim, Analyzer,
    BridgePreset, Budget, CountingMethod, DiagnosisOptions, Error as CoreError, GadgetSpec,
    Modulus, MultiplicityReport, Residue, ScanOptions, Tv, Verdict, WireDistribution, WireId,
};
use serde::{Deserialize, Serialize};

use crate::render;
use crate::Threaded;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SCOPE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(CoreError::ScopeViolation { .. }) => EXIT_SCOPE,
            CliError::Core(CoreError::BudgetExceeded { .. }) => EXIT_BUDGET,
            // the two Barrett maps disagree on a histogram cell
            CliError::Core(CoreError::CountMismatch { .. }) => EXIT_VERDICT,
            CliError::Core(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Enumerate,
    Factored,
    Auto,
}

impl From<Method> for CountingMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Enumerate => CountingMethod::Enumerate,
            Method::Factored => CountingMethod::Factored,
            Method::Auto => CountingMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Mlkem,
    Mldsa,
}

#[derive(Debug, Parser)]
#[command(name = "pfpini", version, about = "Exact multiplicity analysis for masked gadgets over Z_q")]
pub struct RunConfig {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on gadget evaluations per analysis call.
    #[arg(long, global = true, env = "PFPINI_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Leave wall-clock timings out of reports.
    #[arg(long, global = true)]
    pub omit_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure one gadget's multiplicity parameter.
    Analyze(AnalyzeArgs),
    /// Count wire distributions through a pipeline of gadgets.
    Compose(ComposeArgs),
    /// Check the algebraic and natural-number Barrett maps agree.
    Equivalence(EquivalenceArgs),
    /// Montgomery reduction across small primes and the ML-KEM/ML-DSA moduli.
    ScanMontgomery(ScanArgs),
    /// Butterfly -> Barrett diagnosis with and without a fresh mask.
    DiagnoseBridge(DiagnoseArgs),
    /// Dump one wire's distribution under two secrets and their distance.
    Probe(ProbeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// butterfly, barrett-alg, barrett-nat, montgomery or custom:<path>
    #[arg(long)]
    pub gadget: String,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub claimed_k: Option<u32>,
    /// Sample this many secrets instead of enumerating all of them.
    #[arg(long, requires = "seed")]
    pub n_secrets: Option<u64>,
    #[arg(long, requires = "n_secrets")]
    pub seed: Option<u64>,
    /// Keep full per-secret histograms (q <= 65536).
    #[arg(long)]
    pub dense: bool,
    /// Fail unless every output value is reached by exactly one mask.
    #[arg(long)]
    pub assert_uniform: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Comma-separated gadget names, first stage first.
    #[arg(long, value_delimiter = ',', required = true)]
    pub stages: Vec<String>,
    /// One flag per stage boundary: refresh with a uniform mask or not.
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set, num_args = 1)]
    pub fresh: Option<Vec<bool>>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// `all` or a comma-separated list of secrets.
    #[arg(long, default_value = "all")]
    pub secrets: String,
    /// Secret pairs `x0:x1` whose distinguisher distance to report.
    #[arg(long)]
    pub tv: Vec<String>,
    #[arg(long, default_value = "output")]
    pub tv_wire: String,
    /// Two-stage contrast of the pipeline with and without a refresh.
    #[arg(long)]
    pub contrast: bool,
    /// Fail if any stage boundary is non-uniform.
    #[arg(long)]
    pub assert_uniform: bool,
}

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub s: u32,
    /// Also compare every histogram cell and report the natural map.
    #[arg(long)]
    pub transfer: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 31)]
    pub max_prime: u32,
    #[arg(long)]
    pub no_mlkem: bool,
    #[arg(long)]
    pub no_mldsa: bool,
    /// Secrets drawn for the ML-DSA row.
    #[arg(long, default_value_t = 100)]
    pub n_secrets: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, value_enum, conflicts_with = "q")]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long, conflicts_with = "n_secrets")]
    pub all_secrets: bool,
    #[arg(long)]
    pub n_secrets: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// `output`, `boundary:<i>` or `stage:<j>`.
    #[arg(long, default_value = "output")]
    pub wire: String,
    #[arg(long)]
    pub x0: u64,
    #[arg(long)]
    pub x1: u64,
    /// Fail if the two distributions differ.
    #[arg(long)]
    pub assert_uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    #[serde(flatten)]
    pub report: MultiplicityReport,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOutput {
    pub equivalence: pfpini_core::EquivalenceReport,
    pub transfer: MultiplicityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub pipeline: Vec<String>,
    pub fresh_flags: Vec<bool>,
    pub wire: WireId,
    pub x0: WireDistribution,
    pub x1: WireDistribution,
    pub tv: Tv,
}

/// Result of one invocation: exit status plus what goes to stdout/stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg.execute(),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_CONFIG,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            }
        }
    }
}

struct Rendered {
    body: String,
    passed: bool,
    note: Option<String>,
}

impl RunConfig {
    pub fn execute(&self) -> Outcome {
        match self.dispatch() {
            Ok(r) => {
                let stderr = r.note.map(|n| n + "\n").unwrap_or_default();
                let code = if r.passed { EXIT_OK } else { EXIT_VERDICT };
                match &self.output {
                    Some(path) => match std::fs::write(path, &r.body) {
                        Ok(()) => Outcome {
                            code,
                            stdout: String::new(),
                            stderr,
                        },
                        Err(source) => failure(&CliError::Io {
                            path: path.clone(),
                            source,
                        }),
                    },
                    None => Outcome {
                        code,
                        stdout: r.body,
                        stderr,
                    },
                }
            }
            Err(e) => failure(&e),
        }
    }

    fn budget(&self) -> Budget {
        Budget::new(self.budget)
    }

    fn executor(&self) -> Result<Threaded, CliError> {
        if self.threads == Some(0) {
            return Err(config("--threads must be at least 1"));
        }
        Threaded::new(self.threads).map_err(|e| config(format!("thread pool: {e}")))
    }

    fn dispatch(&self) -> Result<Rendered, CliError> {
        match &self.command {
            Command::Analyze(a) => self.analyze(a),
            Command::Compose(c) => self.compose(c),
            Command::Equivalence(e) => self.equivalence(e),
            Command::ScanMontgomery(s) => self.scan(s),
            Command::DiagnoseBridge(d) => self.diagnose(d),
            Command::Probe(p) => self.probe(p),
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| config(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    fn elapsed(&self, start: Instant) -> Option<u64> {
        (!self.omit_timing).then(|| start.elapsed().as_millis() as u64)
    }

    fn analyze(&self, a: &AnalyzeArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let mut g = parse_gadget(&a.gadget, a.q, a.s)?;
        if let Some(k) = a.claimed_k {
            g = g.with_claimed_k(k)?;
        }
        let q = g.modulus().q();
        let opts = MeasureOptions { dense: a.dense };
        let start = Instant::now();
        let mut report = match a.n_secrets {
            Some(n) => {
                let seed = a.seed.ok_or_else(|| config("--n-secrets needs --seed"))?;
                measure_sampled_with(&g, n, seed, &exec, opts)?
            }
            None => {
                self.budget().check(q as u128 * q as u128)?;
                measure_exhaustive_with(&g, &exec, opts)
            }
        };
        report.elapsed_ms = self.elapsed(start);
        let verdict = verify_claim(&g, &report);
        let uniform_ok = !a.assert_uniform || report.measured_k == 1;
        let body = match self.format {
            Format::Json => self.json(&AnalyzeOutput {
                report: report.clone(),
                verdict,
            })?,
            Format::Csv => render::multiplicity_csv(&report),
            Format::Text => render::multiplicity_text(&report, &verdict),
        };
        let note = match verdict {
            Verdict::Violated { x, v, count } => Some(format!(
                "claim violated: {count} masks send x = {x} to v = {v}, claimed at most {}",
                report.claimed_k
            )),
            Verdict::Sound if !uniform_ok => Some(format!(
                "not uniform: x = {} reaches v = {} from {} masks",
                report.witness.x, report.witness.v, report.witness.count
            )),
            Verdict::Sound => None,
        };
        Ok(Rendered {
            body,
            passed: verdict.is_sound() && uniform_ok,
            note,
        })
    }

    fn compose(&self, c: &ComposeArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let gadgets = parse_stages(&c.pipeline)?;
        let m = gadgets[0].modulus();
        let secrets = parse_secrets(&c.secrets, m)?;
        let method: CountingMethod = c.pipeline.method.into();

        if c.contrast {
            if gadgets.len() != 2 {
                return Err(config("--contrast takes exactly two stages"));
            }
            if !c.tv.is_empty() {
                return Err(config("--tv is not available with --contrast"));
            }
            let report = contrast_table(&gadgets[0], &gadgets[1], &secrets, &exec, self.budget(), method)?;
            let rows = [&report.with_fresh, &report.without_fresh];
            let bounds_ok = rows.iter().all(|r| r.output_max <= r.output_bound);
            let uniform_ok = !c.assert_uniform || rows.iter().all(|r| r.exposed.uniform);
            let body = match self.format {
                Format::Json => self.json(&report)?,
                Format::Csv => render::contrast_csv(&report),
                Format::Text => render::contrast_text(&report),
            };
            return Ok(Rendered {
                body,
                passed: bounds_ok && uniform_ok,
                note: (!uniform_ok).then(|| "an intermediate wire is not uniform".to_string()),
            });
        }

        let fresh = c
            .pipeline
            .fresh
            .clone()
            .ok_or_else(|| config("--fresh is required (one flag per stage boundary)"))?;
        let p = multistage_compose(gadgets, fresh)?;
        let an = Analyzer::new(&p, &exec).budget(self.budget()).method(method);
        let mut report = an.report(&secrets)?;
        if !c.tv.is_empty() {
            let wire: WireId = c.tv_wire.parse()?;
            let pairs = c
                .tv
                .iter()
                .map(|t| parse_pair(t, m))
                .collect::<Result<Vec<_>, _>>()?;
            report.tv_pairs = Some(an.tv_pairs(wire, &pairs)?);
        }
        let uniform_ok = !c.assert_uniform
            || report
                .wires
                .iter()
                .filter(|w| matches!(w.wire, WireId::Boundary(_)))
                .all(|w| w.uniform);
        let body = match self.format {
            Format::Json => self.json(&report)?,
            Format::Csv => render::composition_csv(&report),
            Format::Text => render::composition_text(&report),
        };
        let mut note = None;
        if !report.output.satisfied {
            note = Some(format!(
                "output max {} exceeds {} = {}",
                report.output.max_count, report.output.bound_name, report.output.bound
            ));
        } else if !uniform_ok {
            note = Some("a stage boundary is not uniform".to_string());
        }
        Ok(Rendered {
            body,
            passed: report.output.satisfied && uniform_ok,
            note,
        })
    }

    fn equivalence(&self, e: &EquivalenceArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let m = Modulus::new(e.q)?;
        let report = check_equivalence(m, e.s, &exec, self.budget())?;
        let passed = report.is_equal();
        let body = if e.transfer && passed {
            let start = Instant::now();
            let mut transfer = transfer_bound(m, e.s, &exec, self.budget())?;
            transfer.elapsed_ms = self.elapsed(start);
            match self.format {
                Format::Json => self.json(&TransferOutput {
                    equivalence: report.clone(),
                    transfer: transfer.clone(),
                })?,
                Format::Csv => render::equivalence_csv(&report) + &render::multiplicity_csv(&transfer),
                Format::Text => {
                    render::equivalence_text(&report)
                        + "\n"
                        + &render::multiplicity_text(&transfer, &Verdict::Sound)
                }
            }
        } else {
            match self.format {
                Format::Json => self.json(&report)?,
                Format::Csv => render::equivalence_csv(&report),
                Format::Text => render::equivalence_text(&report),
            }
        };
        Ok(Rendered {
            body,
            passed,
            note: (!passed).then(|| format!("maps differ: {:?}", report.outcome)),
        })
    }

    fn scan(&self, s: &ScanArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let opts = ScanOptions {
            max_prime: s.max_prime,
            mlkem: !s.no_mlkem,
            mldsa: !s.no_mldsa,
            n_secrets: s.n_secrets,
            seed: s.seed,
            budget: self.budget(),
        };
        let report = scan_montgomery(&opts, &exec)?;
        let bad: Vec<u32> = report.violations().map(|r| r.q).collect();
        let body = match self.format {
            Format::Json => self.json(&report)?,
            Format::Csv => render::scan_csv(&report),
            Format::Text => render::scan_text(&report),
        };
        Ok(Rendered {
            body,
            passed: bad.is_empty(),
            note: (!bad.is_empty()).then(|| format!("multiplicity above 2 at q = {bad:?}")),
        })
    }

    fn diagnose(&self, d: &DiagnoseArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let (q, default_s) = match (d.preset, d.q) {
            (Some(Preset::Mlkem), _) => (BridgePreset::MlKem.q() as u64, Some(BridgePreset::MlKem.s())),
            (Some(Preset::Mldsa), _) => (BridgePreset::MlDsa.q() as u64, Some(BridgePreset::MlDsa.s())),
            (None, Some(q)) => (q, None),
            (None, None) => return Err(config("give --preset or --q")),
        };
        let m = Modulus::new(q)?;
        let s = d.s.or(default_s).unwrap_or_else(|| m.default_width());
        let mut opts = DiagnosisOptions::for_modulus(m.q());
        opts.budget = self.budget();
        if d.all_secrets {
            opts.secrets = SecretChoice::All;
        } else if let Some(n) = d.n_secrets {
            opts.secrets = SecretChoice::Sampled {
                n,
                seed: d.seed.unwrap_or(0),
            };
        } else if let (Some(seed), SecretChoice::Sampled { n, .. }) = (d.seed, opts.secrets) {
            opts.secrets = SecretChoice::Sampled { n, seed };
        }
        let report = diagnose_bridge(m, s, opts, &exec)?;
        let passed = report.all_checks_hold();
        let body = match self.format {
            Format::Json => self.json(&report)?,
            Format::Csv => render::diagnosis_csv(&report),
            Format::Text => render::diagnosis_text(&report),
        };
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect();
        Ok(Rendered {
            body,
            passed,
            note: (!passed).then(|| format!("failed checks: {failed:?}")),
        })
    }

    fn probe(&self, p: &ProbeArgs) -> Result<Rendered, CliError> {
        let exec = self.executor()?;
        let gadgets = parse_stages(&p.pipeline)?;
        let m = gadgets[0].modulus();
        let fresh = p
            .pipeline
            .fresh
            .clone()
            .ok_or_else(|| config("--fresh is required (one flag per stage boundary)"))?;
        let pipeline = multistage_compose(gadgets, fresh)?;
        let wire: WireId = p.wire.parse()?;
        let an = Analyzer::new(&pipeline, &exec)
            .budget(self.budget())
            .method(p.pipeline.method.into());
        let x0 = an.wire_distribution(wire, residue(m, p.x0)?)?;
        let x1 = an.wire_distribution(wire, residue(m, p.x1)?)?;
        let tv = tv_between(&x0, &x1);
        let passed = !p.assert_uniform || tv.is_zero();
        let report = ProbeReport {
            pipeline: pipeline.names(),
            fresh_flags: pipeline.fresh_after().to_vec(),
            wire,
            x0,
            x1,
            tv,
        };
        let body = match self.format {
            Format::Json => self.json(&report)?,
            Format::Csv => render::probe_csv(&report.x0, &report.x1),
            Format::Text => format!(
                "{}{}tv = {}/{}\n",
                render::distribution_text(&report.x0),
                render::distribution_text(&report.x1),
                report.tv.numerator,
                report.tv.denominator
            ),
        };
        Ok(Rendered {
            body,
            passed,
            note: (!passed).then(|| format!("wire {wire} depends on the secret")),
        })
    }
}

fn failure(e: &CliError) -> Outcome {
    Outcome {
        code: e.exit_code(),
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
    }
}

fn residue(m: Modulus, x: u64) -> Result<Residue, CliError> {
    Ok(m.checked_residue(x)?)
}

/// Resolves a gadget name. Built-ins need `q`; a custom table carries its own
/// and `q`, when given, must agree with it.
pub fn parse_gadget(name: &str, q: Option<u64>, s: Option<u32>) -> Result<GadgetSpec, CliError> {
    if let Some(path) = name.strip_prefix("custom:") {
        let g = load_custom(Path::new(path))?;
        if let Some(q) = q {
            if q != g.modulus().q() as u64 {
                return Err(config(format!(
                    "--q {q} does not match the table's modulus {}",
                    g.modulus().q()
                )));
            }
        }
        return Ok(g);
    }
    let q = q.ok_or_else(|| config(format!("--q is required for gadget {name}")))?;
    let m = Modulus::new(q)?;
    Ok(match name {
        "butterfly" => GadgetSpec::butterfly(m),
        "barrett-alg" => {
            if let Some(s) = s {
                m.check_scope(s)?;
            }
            GadgetSpec::barrett_algebraic(m, s)
        }
        "barrett-nat" => GadgetSpec::barrett_nat(m, s)?,
        "montgomery" => GadgetSpec::montgomery(m, s)?,
        other => return Err(config(format!("unknown gadget {other:?}"))),
    })
}

fn load_custom(path: &Path) -> Result<GadgetSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = format!("custom:{}", path.display());
    Ok(GadgetSpec::parse_table(name, &text, 1)?)
}

fn parse_stages(p: &PipelineArgs) -> Result<Vec<GadgetSpec>, CliError> {
    let gadgets = p
        .stages
        .iter()
        .map(|name| parse_gadget(name.trim(), p.q, p.s))
        .collect::<Result<Vec<_>, _>>()?;
    if gadgets.is_empty() {
        return Err(CoreError::EmptyPipeline.into());
    }
    Ok(gadgets)
}

fn parse_secrets(list: &str, m: Modulus) -> Result<Vec<Residue>, CliError> {
    if list == "all" {
        return Ok(m.elements().collect());
    }
    list.split(',')
        .map(|t| {
            let x: u64 = t
                .trim()
                .parse()
                .map_err(|_| config(format!("bad secret {t:?}")))?;
            residue(m, x)
        })
        .collect()
}

fn parse_pair(t: &str, m: Modulus) -> Result<(Residue, Residue), CliError> {
    let bad = || config(format!("--tv expects x0:x1, got {t:?}"));
    let (a, b) = t.split_once(':').ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    Ok((residue(m, a)?, residue(m, b)?))
}
