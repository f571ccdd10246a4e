//! Batch driver: load a source file, check every rule, render reports.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

use crate::completion::{Precedence, PrecedenceError};
use crate::reduce::DEFAULT_FUEL;
use crate::signature::{ConfluenceReport, Signature, SignatureError};
use crate::srcheck::{check_all, CheckOptions, Status, Verdict};
use crate::syntax::{parse, print, Declaration, SyntaxError};
use crate::term::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub fuel: u64,
    pub precedence: Option<String>,
    pub format: OutputFormat,
    /// Warnings make the run fail.
    pub strict: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig { input: input.into(), fuel: DEFAULT_FUEL, precedence: None, format: OutputFormat::Text, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: {error}")]
    Declaration { line: usize, error: SignatureError },
    #[error("line {line}: {error}")]
    Rule { line: usize, error: SignatureError },
    #[error("invalid precedence: {0}")]
    Precedence(#[from] PrecedenceError),
    #[error("fuel must be positive")]
    NoFuel,
}

impl LoadError {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadError::Io { .. } => "io-error",
            LoadError::Syntax(_) => "syntax-error",
            LoadError::Declaration { error, .. } | LoadError::Rule { error, .. } => match error {
                SignatureError::DuplicateSymbol(_) => "duplicate-symbol",
                SignatureError::UnknownSymbol { .. } => "unknown-symbol",
                SignatureError::IllTypedDeclaration { .. } => "ill-typed-declaration",
                SignatureError::LhsNotPattern { .. } => "lhs-not-pattern",
                SignatureError::FreeRhsVariable { .. } => "free-rhs-variable",
                SignatureError::ConstantHead { .. } => "constant-head",
            },
            LoadError::Precedence(_) => "invalid-precedence",
            LoadError::NoFuel => "invalid-fuel",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            LoadError::Syntax(e) => Some(e.line),
            LoadError::Declaration { line, .. } | LoadError::Rule { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A loaded file: its signature and the source line of every rule.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub sig: Signature,
    pub rule_lines: Vec<usize>,
}

/// Declares symbols and adds rules in file order, stopping at the first
/// error.
pub fn load(text: &str, fuel: u64) -> Result<Loaded, LoadError> {
    if fuel == 0 {
        return Err(LoadError::NoFuel);
    }
    let file = parse(text)?;
    let mut sig = Signature::with_fuel(fuel);
    let mut rule_lines = Vec::new();
    for d in &file.declarations {
        match d {
            Declaration::Symbol(s) => {
                sig.declare(s).map_err(|error| LoadError::Declaration { line: s.line, error })?;
            }
            Declaration::Rule(r) => {
                sig.add_rule(r.lhs.clone(), r.rhs.clone()).map_err(|error| LoadError::Rule { line: r.line, error })?;
                rule_lines.push(r.line);
            }
        }
    }
    Ok(Loaded { sig, rule_lines })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: String,
    pub verdicts: Vec<Verdict>,
    pub error: Option<LoadError>,
}

pub fn run(cfg: &RunConfig) -> RunOutcome {
    match std::fs::read_to_string(&cfg.input) {
        Ok(text) => run_source(&text, cfg),
        Err(e) => {
            let error = LoadError::Io { path: cfg.input.display().to_string(), message: e.to_string() };
            failed(cfg, error)
        }
    }
}

pub fn run_source(text: &str, cfg: &RunConfig) -> RunOutcome {
    let over = match cfg.precedence.as_deref().map(Precedence::parse_override).transpose() {
        Ok(p) => p,
        Err(e) => return failed(cfg, e.into()),
    };
    let loaded = match load(text, cfg.fuel) {
        Ok(l) => l,
        Err(e) => return failed(cfg, e),
    };
    let opts = CheckOptions { fuel: cfg.fuel, precedence: over.clone() };
    let verdicts = check_all(&loaded.sig, &opts);
    if let Some(over) = &over {
        let known: BTreeSet<&Name> = verdicts
            .iter()
            .filter_map(|v| v.precedence.as_ref())
            .flat_map(|p| p.names())
            .chain(loaded.sig.symbols().iter().map(|s| &s.name))
            .collect();
        if let Some(f) = over.iter().find(|f| !known.contains(f)) {
            return failed(cfg, PrecedenceError::Unknown(f.to_string()).into());
        }
    }
    let confluence = loaded.sig.confluence_diagnostics();
    let exit_code = exit_code(&verdicts, cfg.strict);
    let report = match cfg.format {
        OutputFormat::Text => text_report(cfg, &loaded, &confluence, &verdicts),
        OutputFormat::Json => {
            let value = json_report(cfg, &loaded, &confluence, &verdicts, exit_code);
            serde_json::to_string_pretty(&value).expect("serializable") + "\n"
        }
    };
    RunOutcome { exit_code, report, verdicts, error: None }
}

/// 1 if some rule is not accepted, or under `strict` if any rule carries a
/// warning; 0 otherwise.
pub fn exit_code(verdicts: &[Verdict], strict: bool) -> i32 {
    if verdicts.iter().any(|v| v.status != Status::Accepted) {
        return 1;
    }
    if strict && verdicts.iter().any(|v| !v.warnings.is_empty()) {
        return 1;
    }
    0
}

fn failed(cfg: &RunConfig, error: LoadError) -> RunOutcome {
    let report = match cfg.format {
        OutputFormat::Text => format!("{}: error: {error}\n", cfg.input.display()),
        OutputFormat::Json => {
            let value = json!({
                "file": cfg.input.display().to_string(),
                "exit_code": 2,
                "error": { "kind": error.kind(), "line": error.line(), "message": error.to_string() },
            });
            serde_json::to_string_pretty(&value).expect("serializable") + "\n"
        }
    };
    RunOutcome { exit_code: 2, report, verdicts: Vec::new(), error: Some(error) }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Accepted => "Accepted",
        Status::Rejected => "Rejected",
        Status::Inapplicable => "Inapplicable",
    }
}

pub fn verdict_json(v: &Verdict, line: Option<usize>) -> Value {
    json!({
        "index": v.index,
        "line": line,
        "rule": v.rule,
        "head": v.head.to_string(),
        "status": status_name(v.status),
        "reasons": v.reasons,
        "inferred_type": v.inferred_type.as_ref().map(print),
        "equations": v.equations.lines(),
        "simplified": v.simplified.lines(),
        "ground_rules": v.ground_rules.lines(),
        "precedence": v.precedence.as_ref().map(|p| p.names().iter().map(|n| n.to_string()).collect::<Vec<_>>()),
        "postponement": v.postponement,
        "warnings": v.warnings,
        "notes": v.notes,
    })
}

fn json_report(cfg: &RunConfig, loaded: &Loaded, confluence: &ConfluenceReport, verdicts: &[Verdict], code: i32) -> Value {
    let rules: Vec<Value> = verdicts.iter().map(|v| verdict_json(v, loaded.rule_lines.get(v.index).copied())).collect();
    json!({
        "file": cfg.input.display().to_string(),
        "exit_code": code,
        "confluence": {
            "orthogonal": confluence.is_orthogonal(),
            "diagnostics": confluence.lines(),
        },
        "rules": rules,
    })
}

fn text_report(cfg: &RunConfig, loaded: &Loaded, confluence: &ConfluenceReport, verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!(
        "{}: {} symbol(s), {} rule(s)",
        cfg.input.display(),
        loaded.sig.symbols().len(),
        verdicts.len()
    ));
    for d in confluence.lines() {
        line(format!("confluence: {d}"));
    }
    let join = |xs: Vec<String>| if xs.is_empty() { "(none)".to_string() } else { xs.join("; ") };
    for v in verdicts {
        let at = loaded.rule_lines.get(v.index).map(|l| format!(" (line {l})")).unwrap_or_default();
        line(String::new());
        line(format!("rule {}{at}: {}", v.index + 1, v.rule));
        line(format!("  status: {}", status_name(v.status)));
        for r in &v.reasons {
            line(format!("  reason: {r}"));
        }
        if let Some(t) = &v.inferred_type {
            line(format!("  inferred type: {}", print(t)));
        }
        line(format!("  constraints: {}", join(v.equations.lines())));
        line(format!("  simplified: {}", join(v.simplified.lines())));
        if let Some(p) = &v.precedence {
            line(format!("  precedence: {p}"));
        }
        line(format!("  ground rules: {}", join(v.ground_rules.lines())));
        for p in &v.postponement {
            let state = match p.holds {
                None => "assumed",
                Some(true) => "holds",
                Some(false) => "fails",
            };
            line(format!("  postponement ({}) {state}: {}", p.condition, p.detail));
        }
        for w in &v.warnings {
            line(format!("  warning: {w}"));
        }
        for n in &v.notes {
            line(format!("  note: {n}"));
        }
    }
    let count = |s| verdicts.iter().filter(|v| v.status == s).count();
    line(String::new());
    line(format!(
        "summary: {} accepted, {} rejected, {} inapplicable",
        count(Status::Accepted),
        count(Status::Rejected),
        count(Status::Inapplicable)
    ));
    out
}
