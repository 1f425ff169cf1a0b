//! System files.
//!
//! ```json
//! {
//!   "A": [[-2.5, 1.5], [3, -2.5]],
//!   "B": [["3/2", "-1/2"], [1, "-3/2"]],
//!   "T": 4,
//!   "control": {"type": "bangbang", "r": 1, "switch_times": [1, 2, 3]}
//! }
//! ```
//!
//! Matrix entries and `T` are JSON numbers or strings holding a decimal or a
//! ratio `p/q`; strings are converted with one correctly rounded division.
//! `control` is optional and is either
//! `{"type": "bangbang", "r": ±1, "switch_times": [...]}` or
//! `{"type": "piecewise", "breakpoints": [0, ..., T], "values": [...]}`.

use std::path::Path;

use pbcs_core::{BangBangControl, Control, Matrix, PBCSystem, PiecewiseConstantControl};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Exact {
    Number(f64),
    Text(String),
}

impl Exact {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Exact::Number(x) => Ok(*x),
            Exact::Text(s) => parse_exact(s),
        }
    }
}

/// `"2.2"`, `"-5/2"`, `"1e-3"`.
pub fn parse_exact(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Format(format!("cannot read {s:?} as a number"));
    let s = s.trim();
    let x = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlSpec {
    Bangbang { r: i8, switch_times: Vec<Exact> },
    Piecewise { breakpoints: Vec<Exact>, values: Vec<Exact> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<Exact>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Exact>>,
    #[serde(rename = "T")]
    pub horizon: Exact,
    #[serde(default)]
    pub control: Option<ControlSpec>,
}

fn values(xs: &[Exact]) -> Result<Vec<f64>, CliError> {
    xs.iter().map(Exact::value).collect()
}

fn matrix(rows: &[Vec<Exact>]) -> Result<Matrix, CliError> {
    let rows = rows.iter().map(|r| values(r)).collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_rows(&rows)?)
}

/// A parsed system file. The control, if present, has the system horizon.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: PBCSystem,
    pub control: Option<Control>,
}

impl SystemFile {
    pub fn into_problem(self) -> Result<Problem, CliError> {
        let system = PBCSystem::new(matrix(&self.a)?, matrix(&self.b)?, self.horizon.value()?)?;
        let control = match self.control {
            None => None,
            Some(ControlSpec::Bangbang { r, switch_times }) => {
                Some(BangBangControl::new(r, values(&switch_times)?, system.horizon())?.into())
            }
            Some(ControlSpec::Piecewise { breakpoints, values: vals }) => {
                let pc = PiecewiseConstantControl::new(values(&breakpoints)?, values(&vals)?)?;
                if (pc.horizon() - system.horizon()).abs() > 1e-12 * system.horizon().max(1.0) {
                    return Err(pbcs_core::Error::HorizonMismatch {
                        control: pc.horizon(),
                        system: system.horizon(),
                    }
                    .into());
                }
                Some(pc.into())
            }
        };
        Ok(Problem { system, control })
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, CliError> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.into_problem()
}

pub fn read_problem(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_problem(&text)
}
