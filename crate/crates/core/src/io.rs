//! JSON and CSV formats for fields, densities, oracle runs and reports.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circlemath::ArcSet;
use crate::density::DensityProfile;
use crate::field::{ExternalField, PolynomialWeight, SampledField, TrigExponentialWeight, WeightZero};
use crate::oracle::{extract_support, DiscreteMeasure, Extrapolation, OracleResult};
use crate::support::SupportSolveReport;
use crate::verify::{EquilibriumSolution, ResidualReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpec {
    pub zero: [f64; 2],
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub m: i64,
    pub c: [f64; 2],
}

/// Field description as read from and written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Polynomial { terms: Vec<ZeroSpec> },
    Trig { coeffs: Vec<CoeffSpec> },
    Sampled { grid: Vec<f64> },
}

impl FieldSpec {
    pub fn build(&self) -> Result<ExternalField> {
        match self {
            FieldSpec::Polynomial { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| WeightZero { zero: Complex64::new(t.zero[0], t.zero[1]), lambda: t.lambda })
                    .collect();
                Ok(ExternalField::Polynomial(PolynomialWeight::new(terms)?))
            }
            FieldSpec::Trig { coeffs } => {
                let terms: Vec<_> = coeffs.iter().map(|c| (c.m, Complex64::new(c.c[0], c.c[1]))).collect();
                Ok(ExternalField::Trig(TrigExponentialWeight::from_terms(&terms)?))
            }
            FieldSpec::Sampled { grid } => Ok(ExternalField::Sampled(SampledField::from_grid(grid.clone())?)),
        }
    }

    /// Inverse of [`FieldSpec::build`]. Sampled fields given by closures have no spec.
    pub fn of(field: &ExternalField) -> Result<Self> {
        match field {
            ExternalField::Polynomial(w) => Ok(FieldSpec::Polynomial {
                terms: w.terms().iter().map(|t| ZeroSpec { zero: [t.zero.re, t.zero.im], lambda: t.lambda }).collect(),
            }),
            ExternalField::Trig(w) => Ok(FieldSpec::Trig {
                coeffs: w
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(m, c)| CoeffSpec { m: m as i64, c: [c.re, c.im] })
                    .collect(),
            }),
            ExternalField::Sampled(s) => match s.grid_values() {
                Some(g) => Ok(FieldSpec::Sampled { grid: g.to_vec() }),
                None => Err(Error::Parse("a field given by closures cannot be serialized".into())),
            },
        }
    }
}

pub fn parse_field(json: &str) -> Result<ExternalField> {
    serde_json::from_str::<FieldSpec>(json)?.build()
}

fn push_row(out: &mut String, a: f64, b: f64) {
    writeln!(out, "{a:.16e},{b:.16e}").expect("writing to a String");
}

/// `theta,f` rows of [`DensityProfile::resampled`], increasing in angle.
pub fn profile_csv(profile: &DensityProfile, n: usize) -> String {
    let mut out = String::from("theta,f\n");
    for (t, f) in profile.resampled(n) {
        push_row(&mut out, t, f);
    }
    out
}

/// `theta,weight` rows on the oracle grid.
pub fn measure_csv(measure: &DiscreteMeasure) -> String {
    let mut out = String::from("theta,weight\n");
    for (j, &w) in measure.weights.iter().enumerate() {
        push_row(&mut out, measure.theta(j), w);
    }
    out
}

/// Reads two-column CSV written by [`profile_csv`] or [`measure_csv`].
pub fn read_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let mut cols = l.split(',').map(|c| c.trim().parse::<f64>());
            match (cols.next(), cols.next(), cols.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Parse(format!("bad CSV row {}", i + 2))),
            }
        })
        .collect()
}

fn pairs(support: &ArcSet) -> Vec<[f64; 2]> {
    support.arcs().iter().map(|a| [a.alpha, a.beta]).collect()
}

/// Density profile as JSON: support, samples and sampling metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub full_circle: bool,
    pub arcs: Vec<[f64; 2]>,
    pub mass: f64,
    pub min_value: f64,
    pub imag_part_sup: f64,
    pub samples: Vec<[f64; 2]>,
}

impl ProfileDocument {
    pub fn of(profile: &DensityProfile) -> Self {
        ProfileDocument {
            full_circle: profile.support().is_full_circle(),
            arcs: pairs(profile.support()),
            mass: profile.mass(),
            min_value: profile.min_value(),
            imag_part_sup: profile.imag_residual(),
            samples: profile.samples().into_iter().map(|(t, f)| [t, f]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    pub grid: usize,
    #[serde(rename = "V_w")]
    pub energy: f64,
    #[serde(rename = "F_w")]
    pub robin: f64,
    pub frostman_gap: f64,
    pub iterations: usize,
    /// Runs of grid points holding weight above the threshold.
    pub support: Vec<[f64; 2]>,
    pub full_circle: bool,
    pub extrapolation: Option<Extrapolation>,
}

impl OracleDocument {
    pub fn of(run: &OracleResult, threshold: f64, extrapolation: Option<Extrapolation>) -> Result<Self> {
        let support = extract_support(&run.measure, threshold)?;
        Ok(OracleDocument {
            grid: run.measure.n(),
            energy: run.energy,
            robin: run.robin,
            frostman_gap: run.frostman_gap,
            iterations: run.iterations,
            full_circle: support.is_full_circle(),
            support: pairs(&support),
            extrapolation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    /// Empty for full-circle support.
    pub arcs: Vec<[f64; 2]>,
    pub full_circle: bool,
    #[serde(rename = "F_w")]
    pub robin: f64,
    #[serde(rename = "V_w")]
    pub energy: f64,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SupportSolveReport>,
}

impl SolutionSummary {
    pub fn support(&self) -> Result<ArcSet> {
        if self.full_circle {
            Ok(ArcSet::full_circle())
        } else {
            ArcSet::new(&self.arcs.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())
        }
    }
}

/// `{"solution": …, "residuals": …, "pass": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub solution: SolutionSummary,
    pub residuals: ResidualReport,
    pub pass: bool,
}

impl ReportDocument {
    pub fn of(solution: &EquilibriumSolution, report: &ResidualReport) -> Self {
        ReportDocument {
            solution: SolutionSummary {
                arcs: pairs(&solution.support),
                full_circle: solution.support.is_full_circle(),
                robin: solution.robin,
                energy: solution.energy,
                capacity: solution.capacity,
                solve: solution.solve.clone(),
            },
            residuals: report.clone(),
            pass: report.pass,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
