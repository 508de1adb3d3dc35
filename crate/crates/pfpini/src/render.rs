//! Text and CSV renderings. JSON goes straight through serde.

use std::fmt::Write;

use pfpini_core::composition::{ContrastReport, ContrastRow, WireSummary};
use pfpini_core::diagnosis::BridgeDiagnosis;
use pfpini_core::{CompositionReport, EquivalenceOutcome, EquivalenceReport, MultiplicityReport, ScanReport, Verdict, WireDistribution};

pub fn multiplicity_text(r: &MultiplicityReport, verdict: &Verdict) -> String {
    let mut out = String::new();
    let s = r.s.map_or("-".to_string(), |s| s.to_string());
    let _ = writeln!(out, "gadget        {}", r.gadget);
    let _ = writeln!(out, "q, s          {}, {}", r.q, s);
    let _ = writeln!(out, "mode          {:?} ({} secrets)", r.mode, r.secrets_covered);
    let _ = writeln!(out, "measured k    {}", r.measured_k);
    let _ = writeln!(out, "claimed k     {}", r.claimed_k);
    let _ = writeln!(
        out,
        "witness       x = {}, v = {}, count = {}",
        r.witness.x, r.witness.v, r.witness.count
    );
    let _ = writeln!(out, "leakage bits  {}", r.leakage_bits);
    if let Some(meta) = &r.sample {
        let _ = writeln!(out, "sampler       {} seed {}", meta.generator, meta.seed);
        let _ = writeln!(out, "secrets sha   {}", meta.secrets_digest);
    }
    let _ = match verdict {
        Verdict::Sound => writeln!(out, "verdict       sound"),
        Verdict::Violated { x, v, count } => {
            writeln!(out, "verdict       VIOLATED at x = {x}, v = {v} ({count} masks)")
        }
    };
    out
}

pub fn multiplicity_csv(r: &MultiplicityReport) -> String {
    let mut out = String::from("x,max_count,argmax_v,zero_values\n");
    for s in &r.per_secret {
        let _ = writeln!(out, "{},{},{},{}", s.x, s.max_count, s.argmax, s.zero_values);
    }
    out
}

pub fn scan_text(r: &ScanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<22} {:>3}  {:>16}  Verification", "Prime q", "s", "Max multiplicity");
    for row in &r.rows {
        let q = match &row.label {
            Some(l) => format!("{} ({l})", row.q),
            None => row.q.to_string(),
        };
        let _ = writeln!(out, "{:<22} {:>3}  {:>16}  {}", q, row.s, row.measured_k, row.verification);
    }
    out
}

pub fn scan_csv(r: &ScanReport) -> String {
    let mut out = String::from("q,s,measured_k,verification\n");
    for row in &r.rows {
        let _ = writeln!(out, "{},{},{},\"{}\"", row.q, row.s, row.measured_k, row.verification);
    }
    out
}

fn wire_line(out: &mut String, w: &WireSummary) {
    let _ = writeln!(
        out,
        "  {:<12} uniform={:<5} max={} min={} baseline={}",
        w.wire.to_string(),
        w.uniform,
        w.max_count,
        w.min_count,
        w.baseline
    );
}

pub fn composition_text(r: &CompositionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pipeline  {}", r.pipeline.join(" -> "));
    let _ = writeln!(out, "fresh     {:?}", r.fresh_flags);
    let _ = writeln!(out, "q         {}   masks {}   method {:?}", r.q, r.mask_dimension, r.method);
    let _ = writeln!(out, "stage k   {:?}", r.stage_k);
    let _ = writeln!(out, "wires");
    for w in &r.wires {
        wire_line(&mut out, w);
    }
    let o = &r.output;
    let _ = writeln!(
        out,
        "output    max={} bound={} ({}) satisfied={} normalized={}/{} = {}",
        o.max_count,
        o.bound,
        o.bound_name,
        o.satisfied,
        o.normalized_k.max_count,
        o.normalized_k.baseline,
        o.normalized_k.value
    );
    if let Some(pairs) = &r.tv_pairs {
        for p in pairs {
            let _ = writeln!(
                out,
                "tv        {} x0={} x1={}: {}/{}",
                p.wire, p.x0, p.x1, p.tv.numerator, p.tv.denominator
            );
        }
    }
    out
}

pub fn composition_csv(r: &CompositionReport) -> String {
    let mut out = String::from("wire,uniform,max_count,min_count,baseline\n");
    for w in &r.wires {
        let _ = writeln!(out, "{},{},{},{},{}", w.wire, w.uniform, w.max_count, w.min_count, w.baseline);
    }
    let o = &r.output;
    let _ = writeln!(out, "output,{},{},{},{}", o.max_count == o.min_count, o.max_count, o.min_count, o.normalized_k.baseline);
    out
}

fn intermediate_cell(row: &ContrastRow) -> String {
    let w = &row.exposed;
    if w.uniform {
        format!("Uniform (count = {})", w.max_count)
    } else {
        format!("Non-uniform (max {}, min {})", w.max_count, w.min_count)
    }
}

fn dpa_cell(row: &ContrastRow) -> String {
    if row.exposed.uniform {
        "Not possible (uniform)".into()
    } else {
        format!("Possible (<= {} bits)", row.exposed_leakage_bits)
    }
}

pub fn contrast_text(c: &ContrastReport) -> String {
    let (f, n) = (&c.with_fresh, &c.without_fresh);
    let mut out = String::new();
    let _ = writeln!(out, "{} -> {} over Z_{}  (k1 = {}, k2 = {})", c.stages[0], c.stages[1], c.q, c.k1, c.k2);
    let _ = writeln!(out, "{:<24} {:<32} {:<32}", "", "With fresh mask", "Without fresh mask");
    let _ = writeln!(
        out,
        "{:<24} {:<32} {:<32}",
        "Output multiplicity",
        format!("{} <= {} ({})", f.output_max, f.output_bound, f.output_bound_name),
        format!("{} <= {} ({})", n.output_max, n.output_bound, n.output_bound_name)
    );
    let _ = writeln!(
        out,
        "{:<24} {:<32} {:<32}",
        "Output parameter",
        format!("{}", f.output_parameter.value),
        format!("{}", n.output_parameter.value)
    );
    let _ = writeln!(out, "{:<24} {:<32} {:<32}", "Intermediate wire", intermediate_cell(f), intermediate_cell(n));
    let _ = writeln!(out, "{:<24} {:<32} {:<32}", "DPA on intermediate", dpa_cell(f), dpa_cell(n));
    out
}

pub fn equivalence_text(r: &EquivalenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "q = {}, s = {}, scope ok = {}", r.q, r.s, r.scope_ok);
    let _ = writeln!(
        out,
        "checked {} pairs ({} without wraparound, {} with)",
        r.checked_pairs, r.no_wrap_pairs, r.wrap_pairs
    );
    let _ = match r.outcome {
        EquivalenceOutcome::Equal => writeln!(out, "result: equal"),
        EquivalenceOutcome::Mismatch { x, m, algebraic, nat } => {
            writeln!(out, "result: MISMATCH at x = {x}, m = {m}: algebraic {algebraic}, nat {nat}")
        }
        EquivalenceOutcome::CaseInvariantFailed { x, m, case } => {
            writeln!(out, "result: CASE INVARIANT {case:?} failed at x = {x}, m = {m}")
        }
    };
    out
}

pub fn diagnosis_text(d: &BridgeDiagnosis) -> String {
    let mut out = String::new();
    let q = d.q as u128;
    let _ = writeln!(out, "butterfly -> barrett over Z_{} (s = {}), {} secrets", d.q, d.s, d.secrets_analysed.len());
    let _ = writeln!(out, "nat map cross-check: {:?}", d.nat_cross_check.outcome);
    let _ = writeln!(out, "butterfly wire: max {} uniform {}", d.butterfly_wire.max_count, d.butterfly_wire.uniform);
    let _ = writeln!(out, "barrett wire:   max {} leakage {} bits", d.barrett_wire.max_count, d.barrett_wire.leakage_bits);
    let _ = writeln!(out);
    let (f, n) = (&d.with_fresh, &d.without_fresh);
    let _ = writeln!(out, "{:<24} {:<32} {:<32}", "", "With fresh mask", "Without fresh mask");
    let _ = writeln!(
        out,
        "{:<24} {:<32} {:<32}",
        "Output multiplicity",
        format!("{} <= {}", f.output_max, f.bound),
        format!("{} <= {}", n.output_max, n.bound)
    );
    let fresh_cell = if f.intermediate_uniform && f.intermediate_max == q {
        format!("Uniform (count = {})", f.intermediate_max)
    } else {
        format!("Non-uniform (max {}, min {})", f.intermediate_max, f.intermediate_min)
    };
    let plain_cell = if n.intermediate_max <= 1 {
        "Uniform (count = 1)".to_string()
    } else {
        format!("Non-uniform (max {})", n.intermediate_max)
    };
    let _ = writeln!(out, "{:<24} {:<32} {:<32}", "Intermediate wire", fresh_cell, plain_cell);
    let _ = writeln!(out, "pipeline parameter: {}", d.pipeline_parameter);
    let _ = writeln!(out);
    for c in &d.checks {
        let _ = writeln!(out, "[{}] {}", if c.holds { "ok" } else { "FAIL" }, c.name);
    }
    let p = &d.prescription;
    let _ = writeln!(
        out,
        "\nfix: {} (cost per stage: {} register, {} subtraction; pipeline parameter {}, intermediate wires {})",
        p.action, p.registers_per_stage, p.subtractions_per_stage, p.resulting_pipeline_parameter, p.intermediate_wires
    );
    out
}

pub fn distribution_text(d: &WireDistribution) -> String {
    let counts: Vec<String> = d.counts.iter().map(|c| c.to_string()).collect();
    format!(
        "{} x={} total={} uniform={} counts=[{}]\n",
        d.wire,
        d.secret,
        d.total,
        d.is_uniform(),
        counts.join(",")
    )
}

pub fn contrast_csv(c: &ContrastReport) -> String {
    let mut out = String::from("fresh,output_max,output_bound,output_parameter,exposed_wire,exposed_uniform,exposed_max,exposed_min\n");
    for r in [&c.with_fresh, &c.without_fresh] {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.fresh,
            r.output_max,
            r.output_bound,
            r.output_parameter.value,
            r.exposed.wire,
            r.exposed.uniform,
            r.exposed.max_count,
            r.exposed.min_count
        );
    }
    out
}

pub fn equivalence_csv(r: &EquivalenceReport) -> String {
    let result = match r.outcome {
        EquivalenceOutcome::Equal => "equal",
        EquivalenceOutcome::Mismatch { .. } => "mismatch",
        EquivalenceOutcome::CaseInvariantFailed { .. } => "case_invariant_failed",
    };
    format!(
        "q,s,checked_pairs,no_wrap_pairs,wrap_pairs,result\n{},{},{},{},{},{}\n",
        r.q, r.s, r.checked_pairs, r.no_wrap_pairs, r.wrap_pairs, result
    )
}

pub fn diagnosis_csv(d: &BridgeDiagnosis) -> String {
    let mut out = String::from("check,holds\n");
    for c in &d.checks {
        let _ = writeln!(out, "{},{}", c.name, c.holds);
    }
    out
}

pub fn probe_csv(a: &WireDistribution, b: &WireDistribution) -> String {
    let mut out = format!("v,count_x{},count_x{}\n", a.secret, b.secret);
    for (v, (p, r)) in a.counts.iter().zip(&b.counts).enumerate() {
        let _ = writeln!(out, "{v},{p},{r}");
    }
    out
}
