//! Scenario files: JSON objects naming a polynomial, a deformation and the
//! stages to run.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use foliate_core::algebra::{critical_set, hyperelliptic_part, parse_poly, BivarPoly, PlanarOneForm};
use foliate_core::homology::CycleClass;
use foliate_core::numeric::{c, C64};
use foliate_core::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const DEFAULT_EPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

const FIELDS: [&str; 13] = [
    "f", "omega_dx", "omega_dy", "backend", "base_point", "cycles", "eps", "t_grid", "t0", "tolerances", "stages", "loops",
    "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Hyperelliptic,
    HolonomyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Tameness,
    Homology,
    Periods,
    Melnikov,
    Holonomy,
    Theorem,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Tameness, Stage::Homology, Stage::Periods, Stage::Melnikov, Stage::Holonomy, Stage::Theorem];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Tameness => "tameness",
            Stage::Homology => "homology",
            Stage::Periods => "periods",
            Stage::Melnikov => "melnikov",
            Stage::Holonomy => "holonomy",
            Stage::Theorem => "theorem",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Direct prerequisites under a backend.
    pub fn requires(self, backend: Backend) -> &'static [Stage] {
        match (self, backend) {
            (Stage::Tameness, _) => &[],
            (Stage::Homology, _) => &[Stage::Tameness],
            (Stage::Periods, _) => &[Stage::Homology],
            (Stage::Melnikov, _) => &[Stage::Periods],
            (Stage::Holonomy, Backend::Hyperelliptic) => &[Stage::Homology],
            (Stage::Holonomy, Backend::HolonomyOnly) => &[Stage::Tameness],
            (Stage::Theorem, _) => &[Stage::Homology, Stage::Holonomy],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `stages` together with everything they depend on.
pub fn stage_closure(stages: &[Stage], backend: Backend) -> BTreeSet<Stage> {
    let mut out = BTreeSet::new();
    let mut todo: Vec<Stage> = stages.to_vec();
    while let Some(s) = todo.pop() {
        if out.insert(s) {
            todo.extend_from_slice(s.requires(backend));
        }
    }
    out
}

/// A closed polyline in the x-plane on one fiber, lifted from a starting `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLoop {
    pub name: String,
    pub t: C64,
    pub x: Vec<C64>,
    pub y0: C64,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub f: BivarPoly,
    pub omega: PlanarOneForm,
    pub backend: Backend,
    pub base_point: Option<C64>,
    /// Selected classes in the distinguished basis; the first two form the commutator pair.
    pub cycles: Vec<CycleClass>,
    pub eps: Vec<C64>,
    pub t_grid: Option<Vec<C64>>,
    pub t0: Option<Vec<C64>>,
    pub tolerances: Tolerances,
    pub stages: BTreeSet<Stage>,
    pub loops: Vec<UserLoop>,
    pub output: Option<PathBuf>,
    pub mu: usize,
    /// The scenario in normalized form, as echoed in reports.
    pub echo: ScenarioEcho,
}

/// Normalized scenario text; its canonical JSON is hashed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub f: String,
    pub omega_dx: String,
    pub omega_dy: String,
    pub backend: Backend,
    pub base_point: Option<C64>,
    pub cycles: Vec<Vec<i64>>,
    pub eps: Vec<C64>,
    pub t_grid: Option<Vec<C64>>,
    pub t0: Option<Vec<C64>>,
    pub stages: Vec<Stage>,
    pub loops: Vec<UserLoop>,
}

impl Scenario {
    /// The commutator pair, when at least two cycles are selected.
    pub fn pair(&self) -> Option<(&CycleClass, &CycleClass)> {
        match self.cycles.as_slice() {
            [a, b, ..] => Some((a, b)),
            _ => None,
        }
    }

    /// Replaces the requested stages by the closure of `stages`.
    pub fn with_stages(mut self, stages: &[Stage]) -> Self {
        self.stages = stage_closure(stages, self.backend);
        self.echo.stages = self.stages.iter().copied().collect();
        self
    }

    pub fn with_tolerance_scale(mut self, factor: f64) -> Self {
        self.tolerances = self.tolerances.scaled(factor);
        self
    }
}

/// One problem in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

/// Every problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

struct Collector<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl Collector<'_> {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        let key = format!("\"{}\"", field.split(['.', '[']).next().unwrap_or(field));
        let line = self.text.lines().position(|l| l.contains(&key)).map(|i| i + 1);
        self.issues.push(ConfigIssue { field: field.to_string(), line, message: message.into() });
    }
}

fn complex(v: &Value) -> Option<C64> {
    match v {
        Value::Number(n) => n.as_f64().map(|re| c(re, 0.0)),
        Value::Array(a) if a.len() == 2 => Some(c(a[0].as_f64()?, a[1].as_f64()?)),
        _ => None,
    }
}

fn complex_list(v: &Value) -> Option<Vec<C64>> {
    v.as_array()?.iter().map(complex).collect()
}

fn poly_field(obj: &Map<String, Value>, key: &str, errs: &mut Collector<'_>) -> Option<(String, BivarPoly)> {
    let v = obj.get(key)?;
    let Some(text) = v.as_str() else {
        errs.push(key, "expected a polynomial string");
        return None;
    };
    match parse_poly(text) {
        Ok(p) => Some((text.to_string(), p)),
        Err(e) => {
            errs.push(key, format!("cannot parse polynomial: {e}"));
            None
        }
    }
}

/// Parses and validates a scenario, reporting all problems at once.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError {
        issues: vec![ConfigIssue { field: String::new(), line: Some(e.line()), message: format!("invalid JSON: {e}") }],
    })?;
    let mut errs = Collector { text, issues: Vec::new() };
    let Some(obj) = root.as_object() else {
        errs.push("", "scenario must be a JSON object");
        return Err(ConfigError { issues: errs.issues });
    };
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            errs.push(key, "unknown field");
        }
    }

    let f = match obj.get("f") {
        None => {
            errs.push("f", "missing field");
            None
        }
        Some(_) => poly_field(obj, "f", &mut errs),
    };
    if !obj.contains_key("omega_dx") && !obj.contains_key("omega_dy") {
        errs.push("omega_dx", "missing field (give omega_dx and/or omega_dy)");
    }
    let dx = if obj.contains_key("omega_dx") { poly_field(obj, "omega_dx", &mut errs) } else { Some(("0".into(), BivarPoly::zero())) };
    let dy = if obj.contains_key("omega_dy") { poly_field(obj, "omega_dy", &mut errs) } else { Some(("0".into(), BivarPoly::zero())) };

    let backend = match obj.get("backend") {
        None => Some(Backend::Hyperelliptic),
        Some(v) => match serde_json::from_value::<Backend>(v.clone()) {
            Ok(b) => Some(b),
            Err(_) => {
                errs.push("backend", "expected \"hyperelliptic\" or \"holonomy-only\"");
                None
            }
        },
    };

    let base_point = match obj.get("base_point") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let z = complex(v);
            if z.is_none() {
                errs.push("base_point", "expected a number or [re, im]");
            }
            z
        }
    };

    let tolerances = match obj.get("tolerances") {
        None => Tolerances::default(),
        Some(v) => match serde_json::from_value::<Tolerances>(v.clone()) {
            Ok(t) => t,
            Err(e) => {
                errs.push("tolerances", e.to_string());
                Tolerances::default()
            }
        },
    };

    let eps = match obj.get("eps") {
        None => DEFAULT_EPS.iter().map(|e| c(*e, 0.0)).collect(),
        Some(v) => match complex_list(v) {
            Some(list) => {
                if list.is_empty() {
                    errs.push("eps", "empty list");
                }
                for (k, e) in list.iter().enumerate() {
                    if e.norm() == 0.0 {
                        errs.push(&format!("eps[{k}]"), "ε must be nonzero");
                    }
                    if list[..k].contains(e) {
                        errs.push(&format!("eps[{k}]"), "duplicate ε");
                    }
                }
                list
            }
            None => {
                errs.push("eps", "expected a list of numbers or [re, im] pairs");
                Vec::new()
            }
        },
    };

    let mut grid = |key: &str| -> Option<Vec<C64>> {
        let v = obj.get(key)?;
        match complex_list(v) {
            Some(list) if !list.is_empty() => Some(list),
            Some(_) => {
                errs.push(key, "empty list");
                None
            }
            None => {
                errs.push(key, "expected a list of numbers or [re, im] pairs");
                None
            }
        }
    };
    let t_grid = grid("t_grid");
    let t0 = grid("t0");

    let requested: Option<Vec<Stage>> = match obj.get("stages") {
        None => None,
        Some(Value::Array(a)) => {
            let mut out = Vec::new();
            for (k, s) in a.iter().enumerate() {
                match s.as_str().and_then(Stage::parse) {
                    Some(st) => out.push(st),
                    None => errs.push(&format!("stages[{k}]"), format!("unknown stage {s}")),
                }
            }
            Some(out)
        }
        Some(_) => {
            errs.push("stages", "expected a list of stage names");
            None
        }
    };

    let loops = match obj.get("loops") {
        None => Vec::new(),
        Some(v) => parse_loops(v, base_point, &mut errs),
    };

    let output = match obj.get("output") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            errs.push("output", "expected a directory path");
            None
        }
    };

    let mut mu = 0;
    if let (Some((_, f)), Some(backend)) = (&f, backend) {
        if backend == Backend::Hyperelliptic && hyperelliptic_part(f).is_none_or(|g| g.len() < 3) {
            errs.push("f", "the hyperelliptic backend needs f = y^2 - g(x) with deg g >= 2");
        }
        match critical_set(f, &tolerances) {
            Ok(cs) => mu = cs.milnor(),
            Err(e) => errs.push("f", format!("critical locus: {e}")),
        }
    }

    let issues_before_cycles = errs.issues.len();
    let cycles = match obj.get("cycles") {
        None => (0..mu.min(2)).map(|k| CycleClass::basis(k, mu)).collect(),
        Some(Value::Array(a)) => {
            let mut out = Vec::new();
            for (k, item) in a.iter().enumerate() {
                let field = format!("cycles[{k}]");
                match item {
                    Value::Number(_) if mu == 0 => {}
                    Value::Number(n) => match n.as_u64() {
                        Some(i) if i >= 1 && (i as usize) <= mu => out.push(CycleClass::basis(i as usize - 1, mu)),
                        Some(i) => errs.push(&field, format!("index out of range: {i} (mu = {mu}, indices start at 1)")),
                        None => errs.push(&field, "expected a positive integer index"),
                    },
                    Value::Array(coords) => {
                        let v: Option<Vec<i64>> = coords.iter().map(Value::as_i64).collect();
                        match v {
                            _ if mu == 0 => {}
                            Some(v) if v.len() == mu => out.push(CycleClass(v)),
                            Some(v) => errs.push(&field, format!("class has {} coordinates, mu = {mu}", v.len())),
                            None => errs.push(&field, "expected integer coordinates"),
                        }
                    }
                    _ => errs.push(&field, "expected an index or a list of integer coordinates"),
                }
            }
            out
        }
        Some(_) => {
            errs.push("cycles", "expected a list");
            Vec::new()
        }
    };

    let backend_v = backend.unwrap_or(Backend::Hyperelliptic);
    let stages: BTreeSet<Stage> = match &requested {
        Some(list) => list.iter().copied().collect(),
        None => match backend_v {
            Backend::Hyperelliptic => Stage::ALL.into_iter().collect(),
            Backend::HolonomyOnly => [Stage::Tameness, Stage::Holonomy].into_iter().collect(),
        },
    };
    for s in &stages {
        for r in s.requires(backend_v) {
            if !stages.contains(r) {
                errs.push("stages", format!("stage `{s}` requires `{r}`"));
            }
        }
    }
    if backend_v == Backend::HolonomyOnly {
        for s in [Stage::Homology, Stage::Periods, Stage::Melnikov, Stage::Theorem] {
            if stages.contains(&s) {
                errs.push("stages", format!("stage `{s}` needs the hyperelliptic backend"));
            }
        }
        if stages.contains(&Stage::Holonomy) && loops.is_empty() {
            errs.push("loops", "the holonomy-only backend needs explicit loops");
        }
    }
    let cycles_ok = errs.issues[issues_before_cycles..].iter().all(|i| !i.field.starts_with("cycles"));
    if stages.contains(&Stage::Theorem) && cycles.len() < 2 && mu > 0 && cycles_ok {
        errs.push("cycles", "the theorem stage needs two cycles");
    }

    if !errs.issues.is_empty() {
        return Err(ConfigError { issues: errs.issues });
    }
    let (f_text, f) = f.unwrap();
    let (dx_text, a) = dx.unwrap();
    let (dy_text, b) = dy.unwrap();
    let echo = ScenarioEcho {
        f: f_text,
        omega_dx: dx_text,
        omega_dy: dy_text,
        backend: backend_v,
        base_point,
        cycles: cycles.iter().map(|c| c.0.clone()).collect(),
        eps: eps.clone(),
        t_grid: t_grid.clone(),
        t0: t0.clone(),
        stages: stages.iter().copied().collect(),
        loops: loops.clone(),
    };
    Ok(Scenario {
        f,
        omega: PlanarOneForm::new(a, b),
        backend: backend_v,
        base_point,
        cycles,
        eps,
        t_grid,
        t0,
        tolerances,
        stages,
        loops,
        output,
        mu,
        echo,
    })
}

fn parse_loops(v: &Value, base: Option<C64>, errs: &mut Collector<'_>) -> Vec<UserLoop> {
    let Some(items) = v.as_array() else {
        errs.push("loops", "expected a list");
        return Vec::new();
    };
    let mut out = Vec::new();
    for (k, item) in items.iter().enumerate() {
        let field = format!("loops[{k}]");
        let Some(o) = item.as_object() else {
            errs.push(&field, "expected an object with `x` and `y0`");
            continue;
        };
        for key in o.keys() {
            if !["name", "t", "x", "y0"].contains(&key.as_str()) {
                errs.push(&format!("{field}.{key}"), "unknown field");
            }
        }
        let name = o.get("name").and_then(Value::as_str).map_or_else(|| format!("loop{}", k + 1), str::to_string);
        let t = match o.get("t") {
            None => base.unwrap_or(c(0.0, 0.0)),
            Some(v) => complex(v).unwrap_or_else(|| {
                errs.push(&format!("{field}.t"), "expected a number or [re, im]");
                c(0.0, 0.0)
            }),
        };
        let x = o.get("x").and_then(complex_list);
        let y0 = o.get("y0").and_then(complex);
        match (x, y0) {
            (Some(x), Some(y0)) if x.len() >= 3 => out.push(UserLoop { name, t, x, y0 }),
            (Some(_), Some(_)) => errs.push(&format!("{field}.x"), "a loop needs at least 3 vertices"),
            (x, y0) => {
                if x.is_none() {
                    errs.push(&format!("{field}.x"), "expected a list of [re, im] vertices");
                }
                if y0.is_none() {
                    errs.push(&format!("{field}.y0"), "expected a number or [re, im]");
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "backend": "hyperelliptic" }"#;

    #[test]
    fn minimal_config() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.mu, 2);
        assert_eq!(s.cycles, vec![CycleClass(vec![1, 0]), CycleClass(vec![0, 1])]);
        assert_eq!(s.stages.len(), 6);
        assert_eq!(s.eps.len(), 5);
        assert!(s.omega.b.is_zero());
    }

    #[test]
    fn unknown_field_is_named() {
        let text = "{\n  \"f\": \"y^2 - x^3 + 3x\",\n  \"omega_dx\": \"y\",\n  \"colour\": 3\n}";
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].field, "colour");
        assert_eq!(err.issues[0].line, Some(4));
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_scenario(r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "cycles": [1, 5] }"#).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert!(err.issues[0].message.contains("index out of range"), "{err}");
    }

    #[test]
    fn all_problems_are_reported() {
        let text = r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y +", "eps": [0, 1e-3], "stages": ["periods"], "extra": 1 }"#;
        let err = parse_scenario(text).unwrap_err();
        let fields: Vec<&str> = err.issues.iter().map(|i| i.field.as_str()).collect();
        for want in ["extra", "omega_dx", "eps[0]", "stages"] {
            assert!(fields.contains(&want), "{fields:?}");
        }
    }

    #[test]
    fn bad_tolerance_field() {
        let err = parse_scenario(r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "tolerances": { "perod": 1e-9 } }"#).unwrap_err();
        assert!(err.issues[0].message.contains("perod"));
    }

    #[test]
    fn stage_closure_and_backend_checks() {
        let s = parse_scenario(MINIMAL).unwrap().with_stages(&[Stage::Melnikov]);
        let want: BTreeSet<Stage> = [Stage::Tameness, Stage::Homology, Stage::Periods, Stage::Melnikov].into_iter().collect();
        assert_eq!(s.stages, want);
        let err = parse_scenario(r#"{ "f": "y^2 - x^4 + x", "omega_dx": "y", "backend": "holonomy-only", "stages": ["tameness", "homology"] }"#)
            .unwrap_err();
        assert!(err.to_string().contains("hyperelliptic backend"));
        let err = parse_scenario(r#"{ "f": "x*y + x^3 + y^3", "omega_dx": "y" }"#).unwrap_err();
        assert!(err.to_string().contains("y^2 - g(x)"));
    }

    #[test]
    fn classes_and_loops() {
        let text = r#"{ "f": "x^2 + y^3 + y", "omega_dy": "x", "backend": "holonomy-only",
            "loops": [ { "name": "l", "t": 0.5, "x": [[1,0],[0,1],[-1,0],[0,-1]], "y0": [0.2, 0.1] } ] }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.loops[0].x.len(), 4);
        assert!(s.omega.a.is_zero());
        let s = parse_scenario(r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "cycles": [[1, 1], 2] }"#).unwrap();
        assert_eq!(s.cycles[0], CycleClass(vec![1, 1]));
    }
}
