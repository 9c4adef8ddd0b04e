//! Flat `key = value` configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment.
//! `--set key=value` overrides win over the file, and every key not given
//! falls back to a per-command default. Grid commands (`iterations`,
//! `efficiency`) accept comma-separated lists for `n`, `nu`, `delta` and
//! `predictor`; `converge` and `richardson` accept a list for `n` only.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use compact_scheme::analysis::ReferenceSource;
use compact_scheme::problems::{FhnParams, FkppBoundary};
use compact_scheme::{JacobianMode, PredictorKind, ProblemSpec, RelaxationConfig, SolitonParams, SweepOrdering};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Converge,
    Richardson,
    Iterations,
    Efficiency,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Converge => "converge",
            Command::Richardson => "richardson",
            Command::Iterations => "iterations",
            Command::Efficiency => "efficiency",
        }
    }
}

const GENERAL_KEYS: &[&str] = &[
    "problem",
    "n",
    "nu",
    "tau",
    "t_final",
    "predictor",
    "ordering",
    "delta",
    "max_iterations",
    "omega",
    "jacobian",
    "x_left",
    "x_right",
    "reference",
    "targets",
    "repeats",
];

const FKPP_KEYS: &[&str] = &["boundary", "fkpp.d"];
const FHN_KEYS: &[&str] = &["fhn.epsilon", "fhn.alpha", "fhn.beta", "fhn.mu", "fhn.d1", "fhn.d2"];
const NLSE_KEYS: &[&str] = &["nlse.alpha", "nlse.beta", "nlse.u"];

/// Assignments as written, before defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_assignment(line).ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1))
            })?;
            if raw.entries.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("line {}: `{k}` assigned twice", i + 1)));
            }
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = split_assignment(assignment)
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
        self.entries.insert(k, v);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

fn split_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return None;
    }
    Some((k.to_string(), v.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemChoice {
    Fkpp { diffusion: f64, boundary: FkppBoundary },
    Fhn(FhnParams),
    Nlse(SolitonParams),
    NlseFermi(SolitonParams),
}

/// A built problem of any node type.
pub enum AnyProblem {
    Scalar(ProblemSpec<f64>),
    Pair(ProblemSpec<compact_scheme::Pair>),
    Complex(ProblemSpec<num_complex::Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Auto,
    Analytic,
    Mesh(usize),
}

impl Reference {
    pub fn source<V: compact_scheme::NodeState>(self, problem: &ProblemSpec<V>, finest: usize) -> ReferenceSource {
        match self {
            Reference::Auto => ReferenceSource::default_for(problem, finest),
            Reference::Analytic => ReferenceSource::Analytic,
            Reference::Mesh(intervals) => ReferenceSource::FineMesh { intervals },
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Auto => f.write_str("auto"),
            Reference::Analytic => f.write_str("analytic"),
            Reference::Mesh(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepChoice {
    Nu(Vec<f64>),
    Tau(f64),
}

/// Fully resolved configuration of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemChoice,
    pub n: Vec<usize>,
    pub step: StepChoice,
    pub t_final: Option<f64>,
    pub predictors: Vec<PredictorKind>,
    pub deltas: Vec<f64>,
    /// Relaxation settings; `delta_stop` is overwritten per run from `deltas`.
    pub relaxation: RelaxationConfig,
    pub domain: (Option<f64>, Option<f64>),
    pub reference: Reference,
    pub targets: Vec<f64>,
    pub repeats: usize,
    /// Every key with the value actually used, defaults included.
    pub resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig, command: Command) -> Result<Self> {
        let problem_name = raw.get("problem").unwrap_or("fkpp").to_string();
        let problem_keys: &[&str] = match problem_name.as_str() {
            "fkpp" => FKPP_KEYS,
            "fhn" => FHN_KEYS,
            "nlse" | "nlse_fermi" => NLSE_KEYS,
            other => {
                return Err(CliError::Config(format!(
                    "unknown problem `{other}` (expected fkpp, fhn, nlse or nlse_fermi)"
                )))
            }
        };
        for key in raw.entries.keys() {
            if !GENERAL_KEYS.contains(&key.as_str()) && !problem_keys.contains(&key.as_str()) {
                let hint = if FKPP_KEYS.contains(&key.as_str())
                    || FHN_KEYS.contains(&key.as_str())
                    || NLSE_KEYS.contains(&key.as_str())
                {
                    format!(" for problem `{problem_name}`")
                } else {
                    String::new()
                };
                return Err(CliError::Config(format!("unknown key `{key}`{hint}")));
            }
        }

        let mut merged: BTreeMap<String, String> = defaults(command, &problem_name, raw)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in &raw.entries {
            merged.insert(k.clone(), v.clone());
        }
        let get = |k: &str| merged.get(k).map(String::as_str);

        let problem = match problem_name.as_str() {
            "fkpp" => ProblemChoice::Fkpp {
                diffusion: number(&merged, "fkpp.d")?,
                boundary: get("boundary")
                    .unwrap()
                    .parse()
                    .map_err(|e: compact_scheme::Error| CliError::Config(e.to_string()))?,
            },
            "fhn" => ProblemChoice::Fhn(FhnParams {
                epsilon: number(&merged, "fhn.epsilon")?,
                alpha: number(&merged, "fhn.alpha")?,
                beta: number(&merged, "fhn.beta")?,
                mu: number(&merged, "fhn.mu")?,
                d1: number(&merged, "fhn.d1")?,
                d2: number(&merged, "fhn.d2")?,
            }),
            name => {
                let params = SolitonParams {
                    alpha: number(&merged, "nlse.alpha")?,
                    beta: number(&merged, "nlse.beta")?,
                    velocity: number(&merged, "nlse.u")?,
                };
                if name == "nlse" {
                    ProblemChoice::Nlse(params)
                } else {
                    ProblemChoice::NlseFermi(params)
                }
            }
        };

        let step = match (raw.get("nu"), raw.get("tau")) {
            (Some(_), Some(_)) => return Err(CliError::Config("give exactly one of `nu` and `tau`".into())),
            (None, Some(_)) => {
                if command != Command::Run {
                    return Err(CliError::Config(format!(
                        "`tau` is only accepted by `run`; `{}` is parameterized by `nu`",
                        command.name()
                    )));
                }
                StepChoice::Tau(number(&merged, "tau")?)
            }
            _ => StepChoice::Nu(list(&merged, "nu")?),
        };

        let mut relaxation = RelaxationConfig {
            ordering: parse_with(&merged, "ordering", |s| s.parse::<SweepOrdering>())?,
            max_iterations: parse_with(&merged, "max_iterations", |s| s.parse::<usize>().map_err(|e| e.to_string()))?,
            omega: number(&merged, "omega")?,
            jacobian_mode: parse_with(&merged, "jacobian", |s| match s {
                "diagonal" => Ok(JacobianMode::Diagonal),
                "block" => Ok(JacobianMode::Block),
                other => Err(format!("expected diagonal or block, got `{other}`")),
            })?,
            ..RelaxationConfig::default()
        };

        let deltas: Vec<f64> = list(&merged, "delta")?;
        relaxation.delta_stop = deltas[0];

        let cfg = RunConfig {
            command,
            problem,
            n: list(&merged, "n")?,
            step,
            t_final: optional_number(&merged, "t_final")?,
            predictors: list(&merged, "predictor")?,
            deltas,
            relaxation,
            domain: (optional_number(&merged, "x_left")?, optional_number(&merged, "x_right")?),
            reference: match get("reference") {
                None | Some("auto") => Reference::Auto,
                Some("analytic") => Reference::Analytic,
                Some(s) => Reference::Mesh(s.parse().map_err(|_| {
                    CliError::Config(format!("reference must be auto, analytic or an interval count, got `{s}`"))
                })?),
            },
            targets: if merged.contains_key("targets") { list(&merged, "targets")? } else { Vec::new() },
            repeats: match get("repeats") {
                Some(s) => s.parse().map_err(|_| CliError::Config(format!("repeats: not a count: `{s}`")))?,
                None => 1,
            },
            resolved: merged,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let single = |key: &str, len: usize| {
            if len != 1 {
                Err(CliError::Config(format!("`{}` takes a single value for `{key}`", self.command.name())))
            } else {
                Ok(())
            }
        };
        let nus = match &self.step {
            StepChoice::Nu(v) => v.len(),
            StepChoice::Tau(_) => 1,
        };
        match self.command {
            Command::Run => {
                single("n", self.n.len())?;
                single("nu", nus)?;
                single("delta", self.deltas.len())?;
                single("predictor", self.predictors.len())?;
            }
            Command::Converge | Command::Richardson => {
                single("nu", nus)?;
                single("delta", self.deltas.len())?;
                single("predictor", self.predictors.len())?;
            }
            Command::Iterations | Command::Efficiency => {}
        }
        if self.command == Command::Efficiency && self.targets.is_empty() {
            return Err(CliError::Config("`efficiency` needs at least one target".into()));
        }
        if let StepChoice::Nu(v) = &self.step {
            if let Some(bad) = v.iter().find(|&&x| !(x > 0.0)) {
                return Err(CliError::Config(format!("nu must be positive, got {bad}")));
            }
        }
        if let Some(bad) = self.n.iter().find(|&&n| n < 2) {
            return Err(CliError::Config(format!("n must be at least 2, got {bad}")));
        }
        for &delta in &self.deltas {
            self.relaxation
                .clone()
                .with_delta(delta)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn nus(&self) -> Vec<f64> {
        match &self.step {
            StepChoice::Nu(v) => v.clone(),
            StepChoice::Tau(_) => Vec::new(),
        }
    }

    pub fn build_problem(&self) -> Result<AnyProblem> {
        let mut problem = match &self.problem {
            ProblemChoice::Fkpp { diffusion, boundary } => {
                if !(*diffusion > 0.0) {
                    return Err(CliError::Config(format!("fkpp.d must be positive, got {diffusion}")));
                }
                let mut p = compact_scheme::problems::fkpp_cos2(*boundary);
                p.diffusion = *diffusion;
                for (k, v) in &mut p.metadata {
                    if k == "fkpp.d" {
                        *v = diffusion.to_string();
                    }
                }
                AnyProblem::Scalar(p)
            }
            ProblemChoice::Fhn(params) => AnyProblem::Pair(compact_scheme::problems::fhn(*params)?),
            ProblemChoice::Nlse(params) => AnyProblem::Complex(compact_scheme::problems::nlse(*params)?),
            ProblemChoice::NlseFermi(params) => AnyProblem::Complex(compact_scheme::problems::nlse_fermi(*params)?),
        };
        let t_final = self.t_final;
        let (xl, xr) = self.domain;
        let fkpp_trace = matches!(self.problem, ProblemChoice::Fkpp { boundary: FkppBoundary::InitialTrace, .. });
        match &mut problem {
            AnyProblem::Scalar(p) => {
                adjust(p, t_final, xl, xr);
                if fkpp_trace && (xl.is_some() || xr.is_some()) {
                    *p = p.clone().with_initial_trace();
                }
            }
            AnyProblem::Pair(p) => adjust(p, t_final, xl, xr),
            AnyProblem::Complex(p) => {
                if let Some(t) = t_final {
                    p.t_final = t;
                }
                let (l, r) = p.domain;
                *p = p.clone().with_schrodinger_domain(xl.unwrap_or(l), xr.unwrap_or(r));
            }
        }
        Ok(problem)
    }
}

fn adjust<V: compact_scheme::NodeState>(p: &mut ProblemSpec<V>, t_final: Option<f64>, xl: Option<f64>, xr: Option<f64>) {
    if let Some(t) = t_final {
        p.t_final = t;
    }
    p.domain = (xl.unwrap_or(p.domain.0), xr.unwrap_or(p.domain.1));
}

/// Per-command defaults; `raw` decides whether `nu` is defaulted at all.
fn defaults(command: Command, problem: &str, raw: &RawConfig) -> Vec<(&'static str, &'static str)> {
    let mut d = vec![
        ("problem", "fkpp"),
        ("ordering", "chess"),
        ("max_iterations", "10000"),
        ("omega", "1"),
        ("jacobian", "diagonal"),
    ];
    let schrodinger = problem.starts_with("nlse");
    let (n, nu, delta, predictor) = match command {
        Command::Run => ("64", "0.1", if schrodinger { "1e-8" } else { "1e-12" }, "ab"),
        Command::Converge => ("16,32,64,128", "0.1", if schrodinger { "1e-8" } else { "1e-12" }, "ab"),
        Command::Richardson => ("16,32,64", "0.1", if schrodinger { "1e-8" } else { "1e-12" }, "ab"),
        Command::Iterations => ("16,32,64,128,256", "0.1,3.2", "1e-6,1e-12", "euler,ab"),
        Command::Efficiency => ("16,32,64,128", "0.1,0.4,1.6,3.2", "1e-2,1e-4,1e-6,1e-8", "euler,ab"),
    };
    d.extend([("n", n), ("delta", delta), ("predictor", predictor)]);
    if raw.get("tau").is_none() {
        d.push(("nu", nu));
    }
    if matches!(command, Command::Converge | Command::Richardson | Command::Efficiency) {
        d.push(("reference", "auto"));
    }
    if command == Command::Efficiency {
        d.extend([("targets", "1e-2,1e-3,1e-4,1e-5,1e-6"), ("repeats", "3")]);
    }
    match problem {
        "fkpp" => d.extend([("boundary", "zero"), ("fkpp.d", "0.01")]),
        "fhn" => d.extend([
            ("fhn.epsilon", "2"),
            ("fhn.alpha", "2"),
            ("fhn.beta", "1"),
            ("fhn.mu", "2"),
            ("fhn.d1", "1"),
            ("fhn.d2", "1"),
        ]),
        _ => d.extend([("nlse.alpha", "1"), ("nlse.beta", "1"), ("nlse.u", "1")]),
    }
    d
}

fn parse_with<T>(m: &BTreeMap<String, String>, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
    let s = m.get(key).ok_or_else(|| CliError::Config(format!("missing `{key}`")))?;
    f(s).map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn number(m: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    parse_with(m, key, parse_float)
}

fn optional_number(m: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    m.get(key).map(|_| number(m, key)).transpose()
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("not a finite decimal number: `{s}`")),
    }
}

trait ListItem: Sized {
    fn parse_item(s: &str) -> std::result::Result<Self, String>;
}

impl ListItem for f64 {
    fn parse_item(s: &str) -> std::result::Result<Self, String> {
        parse_float(s)
    }
}

impl ListItem for usize {
    fn parse_item(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("not a count: `{s}`"))
    }
}

impl ListItem for PredictorKind {
    fn parse_item(s: &str) -> std::result::Result<Self, String> {
        PredictorKind::from_str(s)
    }
}

fn list<T: ListItem>(m: &BTreeMap<String, String>, key: &str) -> Result<Vec<T>> {
    parse_with(m, key, |s| s.split(',').map(|item| T::parse_item(item.trim())).collect())
}
