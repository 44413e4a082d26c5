//! Seeded batch runs and report serialization behind the command-line tool.

mod generate;
mod lemmas;
mod render;
mod run;

pub use generate::*;
pub use lemmas::*;
pub use run::*;

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::ambient::CheckResult;
use crate::chen::{Case, InequalityKind, InequalityReport, NonMinimality};
use crate::subman::{GaussRicciResiduals, SubmanifoldClass};

pub const DEFAULT_SEED: u64 = 0xC4E2;
pub const SEED_ENV: &str = "CHENVERIFY_SEED";
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 8;
pub const DEFAULT_PLANES: usize = 4;
/// Random vector tuples per point for the Gauss and Ricci checks.
pub const GAUSS_TRIALS: usize = 10;
/// Bound on `‖H‖`, `‖H*‖` for a point to count as minimal.
pub const MINIMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    Failure,
    InputError,
    Finding,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Failure => 1,
            ExitStatus::InputError => 2,
            ExitStatus::Finding => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (expected json, csv or text)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseSelector {
    Holomorphic,
    Real,
}

impl CaseSelector {
    pub fn cases(self) -> &'static [Case] {
        match self {
            CaseSelector::Holomorphic => &[Case::HolomorphicPrinted, Case::HolomorphicProofVariant],
            CaseSelector::Real => &[Case::TotallyReal],
        }
    }
}

impl FromStr for CaseSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<CaseSelector, String> {
        match s {
            "holomorphic" => Ok(CaseSelector::Holomorphic),
            "real" => Ok(CaseSelector::Real),
            _ => Err(format!("unknown case `{s}` (expected holomorphic or real)")),
        }
    }
}

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

/// The seed from `CHENVERIFY_SEED`, falling back to [`DEFAULT_SEED`].
pub fn default_seed() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub planes: usize,
    /// Overrides the validator tolerance.
    pub tol: Option<f64>,
    pub case: Option<CaseSelector>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig { seed: DEFAULT_SEED, samples: DEFAULT_SAMPLES, planes: DEFAULT_PLANES, tol: None, case: None }
    }
}

impl RunConfig {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

pub fn spec_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub seed: u64,
    pub version: &'static str,
    pub spec_hash: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Violation,
    Contradiction,
    LemmaViolation,
    LemmaExceeded,
}

/// Falsification evidence with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<InequalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub index: usize,
    pub point_index: usize,
    pub plane_index: usize,
    pub report: InequalityReport,
    pub nonminimality: NonMinimality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case: Case,
    pub reports: usize,
    pub min_margin: Option<f64>,
    pub violations: usize,
    pub equality_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: InequalityKind,
    pub points: usize,
    pub planes: usize,
    pub min_margin: Option<f64>,
    /// Violations in the cases whose failure counts as a finding.
    pub violations: usize,
    /// Violations of the proof-variant reading, reported but not findings.
    pub variant_violations: usize,
    pub equality_hits: usize,
    pub contradictions: usize,
    pub cases: Vec<CaseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub status: ExitStatus,
    pub checks: Vec<CheckResult>,
    pub findings: Vec<Finding>,
    pub errors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<SubmanifoldClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauss_ricci: Option<GaussRicciResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Sample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<LemmaEntry>>,
}

impl Report {
    fn new(command: &str, seed: u64, spec: Option<&str>) -> Report {
        Report {
            meta: Meta { command: command.into(), seed, version: env!("CARGO_PKG_VERSION"), spec_hash: spec.map(spec_hash) },
            status: ExitStatus::Pass,
            checks: Vec::new(),
            findings: Vec::new(),
            errors: Vec::new(),
            classification: None,
            gauss_ricci: None,
            summary: None,
            samples: Vec::new(),
            lemmas: None,
        }
    }

    fn fail(mut self, status: ExitStatus, message: impl fmt::Display) -> Report {
        self.status = status;
        self.errors.push(message.to_string());
        self
    }

    /// Sets the status from the checks and findings unless an error is already recorded.
    fn settle(mut self) -> Report {
        if self.status != ExitStatus::Pass {
            return self;
        }
        self.status = if !self.findings.is_empty() {
            ExitStatus::Finding
        } else if self.checks.iter().any(|c| !c.passed) || !self.errors.is_empty() {
            ExitStatus::Failure
        } else {
            ExitStatus::Pass
        };
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.status.code()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => render::json(self),
            Format::Csv => render::csv(self),
            Format::Text => render::text(self),
        }
    }
}
