//! Versioned reports and their deterministic serializations.

use std::fmt::Write as _;

use foliate_core::algebra::{CriticalPoint, DegreeBounds, TamenessReport};
use foliate_core::holonomy::{CommutationDefect, HolonomyMapSamples};
use foliate_core::homology::{ConditionVerdict, DynkinGraph, IntersectionForm, OrbitSpan, PLOperator};
use foliate_core::melnikov::MelnikovReport;
use foliate_core::numeric::C64;
use foliate_core::periods::{period_table_csv, PeriodValue};
use foliate_core::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::scenario::ScenarioEcho;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of the scenario echo and tolerances.
    pub config_hash: String,
    /// Random seeds used by the run; the pipeline is deterministic and uses none.
    pub seeds: Vec<u64>,
    pub conventions: Conventions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub picard_lefschetz_sign: i64,
    pub m1_sign: f64,
    pub m2_sign: f64,
    pub composition_order: String,
    pub iterated_integral_order: String,
    pub basis_order: String,
}

/// Outcome of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Section<T> {
    Ok { result: T },
    Error { kind: ErrorKind, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// The stage itself failed.
    Numerical,
    /// A prerequisite stage failed, so this one did not run.
    Dependency,
}

impl<T> Section<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok { result } => Some(result),
            Section::Error { .. } => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Section::Error { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessSection {
    pub report: TamenessReport,
    pub critical_points: Vec<CriticalPoint>,
    /// Nondegenerate critical points with distinct values.
    pub working_hypotheses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    /// 1-based position in the distinguished basis.
    pub index: usize,
    /// Index into the critical points of the tameness section.
    pub critical_point: usize,
    pub critical_value: C64,
    pub path: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub d1: Vec<i64>,
    pub d2: Vec<i64>,
    pub verdict: ConditionVerdict,
    /// Literal check over the box `[-box_radius, box_radius]^mu`, when within budget.
    pub brute_force: Option<bool>,
    pub box_radius: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomologySection {
    pub base_point: C64,
    pub basis: Vec<BasisEntry>,
    pub intersection: IntersectionForm,
    pub dynkin: DynkinGraph,
    pub dynkin_dot: String,
    pub strongly_tame: bool,
    /// `monodromy[i]` acts around the critical value of basis cycle `i + 1`.
    pub monodromy: Vec<PLOperator>,
    pub monodromy_preserves_form: bool,
    pub monodromy_unipotent: bool,
    pub orbit_spans: Vec<OrbitSpan>,
    pub condition: Option<ConditionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyCheck {
    pub index: usize,
    pub matrix: Vec<Vec<C64>>,
    pub rounded: Vec<Vec<i64>>,
    pub deviation: f64,
    pub tolerance: f64,
    pub matches_picard_lefschetz: bool,
    pub preserves_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodsSection {
    pub tolerance: f64,
    pub omega_on_fiber: String,
    pub omega_derivative: String,
    /// Periods of `omega` and its derivative over basis cycles, then over selected classes.
    pub values: Vec<PeriodValue>,
    pub form_basis: Vec<String>,
    pub form_basis_condition: f64,
    pub monodromy: Vec<MonodromyCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovSection {
    pub report: MelnikovReport,
    pub zero_tolerance: f64,
    /// Bound on `|det - iterated| / max(1, |det|)`.
    pub agreement_tolerance: f64,
    pub agreement: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub t0: C64,
    pub m1: C64,
    pub m2: C64,
    pub m1_error: f64,
    pub m2_error: f64,
    pub consistency: Option<f64>,
    /// Value predicted from periods, when the backend provides them.
    pub reference: Option<C64>,
    pub relative_error: Option<f64>,
    pub tolerance: f64,
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRun {
    pub name: String,
    pub samples: HolonomyMapSamples,
    pub fits: Vec<FitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRun {
    pub word: WordRun,
    pub defect: Vec<f64>,
    pub second_order: f64,
    pub tolerance: f64,
    pub commuting: bool,
}

impl CommutatorRun {
    pub fn new(word: WordRun, d: CommutationDefect) -> Self {
        CommutatorRun { word, defect: d.defect, second_order: d.second_order, tolerance: d.tol, commuting: d.commuting }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomySection {
    pub eps: Vec<C64>,
    pub t0: Vec<C64>,
    pub divergence_guard: f64,
    pub local_tolerance: f64,
    pub cycles: Vec<WordRun>,
    pub commutator: Option<CommutatorRun>,
    pub loops: Vec<WordRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Consistent,
    Vacuous,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub strongly_tame: bool,
    pub condition: ConditionVerdict,
    pub hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub p: String,
    pub q: String,
    pub certified: bool,
    pub bounds: DegreeBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub m2_discrepancy: Option<f64>,
    pub max_holonomy_error: f64,
    pub worst_fit_consistency: Option<f64>,
    pub commutation_second_order: f64,
    pub commutation_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSection {
    pub verdict: Verdict,
    pub hypotheses: Hypotheses,
    pub witness: Option<WitnessSummary>,
    pub commuting: bool,
    pub explanation: String,
    pub audit: Audit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub scenario: ScenarioEcho,
    pub tolerances: Tolerances,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tameness: Option<Section<TamenessSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homology: Option<Section<HomologySection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Section<PeriodsSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub melnikov: Option<Section<MelnikovSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<Section<HolonomySection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Section<TheoremSection>>,
}

impl Report {
    /// Process exit code: 0 success, 1 hypotheses failed, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        let failed = self.tameness.as_ref().is_some_and(Section::is_error)
            || self.homology.as_ref().is_some_and(Section::is_error)
            || self.periods.as_ref().is_some_and(Section::is_error)
            || self.melnikov.as_ref().is_some_and(Section::is_error)
            || self.holonomy.as_ref().is_some_and(Section::is_error)
            || self.theorem.as_ref().is_some_and(Section::is_error);
        if failed {
            return 2;
        }
        match self.theorem.as_ref().and_then(Section::ok).map(|t| t.verdict) {
            Some(Verdict::Inconsistent) => 2,
            Some(Verdict::Vacuous) => 1,
            _ => 0,
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.theorem.as_ref().and_then(Section::ok).map(|t| t.verdict)
    }
}

/// Hash of the canonical JSON of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let text = canonical_json(value);
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// JSON with sorted keys, two-space indentation and floats written with 17
/// significant digits.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize to JSON");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|i| !i.is_array() && !i.is_object());
            if flat {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvBundle,
    Text,
}

impl Format {
    pub fn parse(name: &str) -> Option<Format> {
        match name {
            "json" => Some(Format::Json),
            "csv-bundle" => Some(Format::CsvBundle),
            "text" => Some(Format::Text),
            _ => None,
        }
    }
}

/// Serialized report as `(file name, contents)` pairs.
pub fn emit_report(report: &Report, format: Format) -> Vec<(String, String)> {
    match format {
        Format::Json => vec![("report.json".into(), canonical_json(report))],
        Format::Text => vec![("report.txt".into(), text_report(report))],
        Format::CsvBundle => csv_bundle(report),
    }
}

fn csv_bundle(report: &Report) -> Vec<(String, String)> {
    let mut files = Vec::new();
    if let Some(p) = report.periods.as_ref().and_then(Section::ok) {
        files.push(("periods.csv".into(), period_table_csv(&p.values)));
    }
    if let Some(m) = report.melnikov.as_ref().and_then(Section::ok) {
        files.push(("melnikov.csv".into(), m.report.to_csv()));
    }
    if let Some(h) = report.holonomy.as_ref().and_then(Section::ok) {
        let words = h.cycles.iter().chain(h.commutator.as_ref().map(|c| &c.word)).chain(&h.loops);
        for w in words {
            files.push((format!("holonomy_{}.csv", file_stem(&w.name)), w.samples.to_csv()));
        }
    }
    files
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn fmt_c(z: C64) -> String {
    format!("{:.10e}{:+.10e}i", z.re, z.im)
}

fn section_line<T>(out: &mut String, name: &str, s: &Option<Section<T>>) -> Option<()> {
    match s.as_ref()? {
        Section::Ok { .. } => None,
        Section::Error { kind, message } => {
            let _ = writeln!(out, "[{name}] {kind:?} error: {message}");
            Some(())
        }
    }
}

/// Human-readable summary including the Dynkin diagram in DOT.
pub fn text_report(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "foliate report (schema {})", r.schema_version);
    let _ = writeln!(out, "f = {}", r.scenario.f);
    let _ = writeln!(out, "omega = ({}) dx + ({}) dy", r.scenario.omega_dx, r.scenario.omega_dy);
    let _ = writeln!(out, "config hash {}", r.provenance.config_hash);
    if section_line(&mut out, "tameness", &r.tameness).is_none() {
        if let Some(t) = r.tameness.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[tameness] mu = {}, tame = {}, working hypotheses = {}", t.report.milnor, t.report.verdict, t.working_hypotheses);
            for note in &t.report.notes {
                let _ = writeln!(out, "  note: {note}");
            }
        }
    }
    if section_line(&mut out, "homology", &r.homology).is_none() {
        if let Some(h) = r.homology.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[homology] base point {}, strongly tame = {}", fmt_c(h.base_point), h.strongly_tame);
            for b in &h.basis {
                let _ = writeln!(out, "  d{} -> critical value {}", b.index, fmt_c(b.critical_value));
            }
            let _ = writeln!(out, "  intersection matrix:");
            for row in h.intersection.matrix() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>3}")).collect();
                let _ = writeln!(out, "   {}", cells.join(" "));
            }
            let ranks: Vec<String> = h.orbit_spans.iter().map(|o| o.rank.to_string()).collect();
            let _ = writeln!(out, "  orbit ranks: {}", ranks.join(" "));
            if let Some(c) = &h.condition {
                let _ = writeln!(out, "  condition on ({:?}, {:?}): holds = {} ({:?})", c.d1, c.d2, c.verdict.holds, c.verdict.certificate);
            }
            let _ = writeln!(out, "  dynkin diagram:");
            out.push_str(&h.dynkin_dot);
            if !h.dynkin_dot.ends_with('\n') {
                out.push('\n');
            }
        }
    }
    if section_line(&mut out, "periods", &r.periods).is_none() {
        if let Some(p) = r.periods.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[periods] omega|fiber = {}", p.omega_on_fiber);
            for v in &p.values {
                let _ = writeln!(out, "  {} {}: {} (err {:.1e})", v.cycle, v.form, fmt_c(v.value), v.error);
            }
            for m in &p.monodromy {
                let _ = writeln!(
                    out,
                    "  monodromy around c{}: {:?}, deviation {:.1e}, matches PL = {}",
                    m.index, m.rounded, m.deviation, m.matches_picard_lefschetz
                );
            }
        }
    }
    if section_line(&mut out, "melnikov", &r.melnikov).is_none() {
        if let Some(m) = r.melnikov.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[melnikov] {} samples", m.report.ts.len());
            for c in &m.report.m1 {
                let _ = writeln!(out, "  M1 {}: identically zero = {}", c.name, c.identically_zero);
            }
            if m.report.pair.is_some() {
                let _ = writeln!(out, "  M2 commutator: identically zero = {}, det/iterated discrepancy {:.3e}", m.report.m2_identically_zero, m.report.discrepancy);
            }
        }
    }
    if section_line(&mut out, "holonomy", &r.holonomy).is_none() {
        if let Some(h) = r.holonomy.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[holonomy] {} eps values, {} base values", h.eps.len(), h.t0.len());
            for w in h.cycles.iter().chain(&h.loops) {
                for f in &w.fits {
                    let _ = writeln!(out, "  {} at {}: M1 = {}", w.name, fmt_c(f.t0), fmt_c(f.m1));
                }
            }
            if let Some(c) = &h.commutator {
                let _ = writeln!(out, "  commutator {}: eps^2 term {:.3e}, commuting = {}", c.word.name, c.second_order, c.commuting);
            }
        }
    }
    if section_line(&mut out, "theorem", &r.theorem).is_none() {
        if let Some(t) = r.theorem.as_ref().and_then(Section::ok) {
            let _ = writeln!(out, "\n[theorem] verdict {:?}", t.verdict);
            let _ = writeln!(out, "  {}", t.explanation);
        }
    }
    out
}
