//! Running experiment cells and summarizing them.

use std::time::Instant;

use lasserre_core::estimators::{
    certify, linear_estimator_on_ball, lipschitz_estimator, normal_multiplier, quadratic_estimator,
};
use lasserre_core::quadrature::rule_for;
use lasserre_core::{
    needle_density, rate_fit_points, series_with_oracle, smoothness_constants, BoundSeries, DomainSpec, MomentOracle,
    NeedleRegime, Polynomial, SchedulePolicy,
};
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorChoice, Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output;

/// Grid density for the smoothness constants behind the estimators.
const CONSTANTS_GRID: usize = 40;

/// Rows per order `r`; fields an engine does not produce are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub r: usize,
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assemble_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub needle_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub needle_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_of_regime: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator_bound: Option<f64>,
}

impl SeriesRow {
    fn empty(r: usize) -> Self {
        Self {
            r,
            bound: None,
            error: None,
            residual: None,
            wall_ms: 0.0,
            assemble_ms: None,
            solve_ms: None,
            needle_bound: None,
            needle_h: None,
            density_degree: None,
            out_of_regime: None,
            estimator_bound: None,
        }
    }
}

/// The result of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub series: Vec<SeriesRow>,
}

impl RunOutput {
    /// `(r, E^(r))` for rows with a known error.
    pub fn errors(&self) -> Vec<(usize, f64)> {
        self.series.iter().filter_map(|row| row.error.map(|e| (row.r, e))).collect()
    }
}

/// Runs one cell and writes its artifact when `config.output` is set.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let exp = config.resolve()?;
    let mut rows: Vec<SeriesRow> = (1..=config.r_max).map(SeriesRow::empty).collect();
    if config.engine.eigen() {
        let series = eigen_series(&exp, &exp.f, config)?;
        for (row, res) in rows.iter_mut().zip(&series.results) {
            row.bound = Some(res.value + exp.offset);
            row.residual = Some(res.residual);
            row.assemble_ms = Some(res.assemble_ms);
            row.solve_ms = Some(res.solve_ms);
            row.wall_ms = res.wall_ms();
        }
    }
    if config.engine.needle() {
        needle_rows(&exp, config, &mut rows)?;
    }
    if let Some(kind) = config.estimator {
        estimator_rows(&exp, config, kind, &mut rows)?;
    }
    if !config.engine.eigen() {
        // the needle order starts at 2
        rows.retain(|row| row.bound.is_some());
    }
    for row in &mut rows {
        row.error = match (row.bound, exp.f_min) {
            (Some(b), Some(m)) => Some(b - m),
            _ => None,
        };
    }
    let out = RunOutput {
        config: config.clone(),
        series: rows,
    };
    if let Some(path) = &config.output {
        output::write_run(&out, path)?;
    }
    Ok(out)
}

fn eigen_series(exp: &Experiment, f: &Polynomial, config: &ExperimentConfig) -> Result<BoundSeries> {
    let o = MomentOracle::new(exp.domain.clone(), exp.measure, config.precision_bits)?;
    Ok(series_with_oracle(f, &o, 1, config.r_max, exp.f_min.unwrap_or(f64::NAN))?)
}

/// A recentred copy of the problem for needle densities, whose minimizer sits
/// at the origin of a domain inside the unit ball.
struct NeedleProblem {
    f: Polynomial,
    domain: DomainSpec,
    /// `f(a)` in original units.
    offset: f64,
    /// Maps working coordinates to original ones.
    anchor: Vec<f64>,
    scale: f64,
    regime: NeedleRegime,
}

fn needle_problem(exp: &Experiment) -> Result<NeedleProblem> {
    if !exp.measure.is_lebesgue() {
        return Err(CliError::Config("needle bounds use the Lebesgue measure only".into()));
    }
    let a = exp
        .anchor
        .clone()
        .ok_or_else(|| CliError::Config("needle bounds need a known minimizer in the domain".into()))?;
    let rc = lasserre_core::estimators::recentre(&exp.f, &exp.domain, &a)?;
    let interior = exp.domain.contains(&a, -1e-9);
    let regime = if interior {
        NeedleRegime::InteriorCone { beta: 2.0 }
    } else {
        NeedleRegime::ConvexBody
    };
    Ok(NeedleProblem {
        f: rc.f,
        domain: rc.domain,
        offset: exp.offset + rc.offset,
        anchor: a,
        scale: rc.scale,
        regime,
    })
}

fn needle_rows(exp: &Experiment, config: &ExperimentConfig, rows: &mut [SeriesRow]) -> Result<()> {
    let p = needle_problem(exp)?;
    let o = MomentOracle::new(p.domain.clone(), lasserre_core::MeasureSpec::Lebesgue, config.precision_bits)?;
    for row in rows.iter_mut().filter(|row| row.r >= 2) {
        let t0 = Instant::now();
        let (q, sched, _) = needle_density(&p.f, &p.domain, row.r as u32, p.regime, SchedulePolicy::Clamp)?;
        let (num, mass) = lasserre_core::needles::integrate_against(&q, &p.f, &o)?;
        let value = num / mass + p.offset;
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        if config.engine.eigen() {
            row.needle_bound = Some(value);
            row.wall_ms += ms;
        } else {
            row.bound = Some(value);
            row.wall_ms = ms;
        }
        row.needle_h = Some(sched.h);
        row.density_degree = Some(q.degree());
        row.out_of_regime = Some(sched.out_of_regime);
    }
    Ok(())
}

fn estimator_rows(
    exp: &Experiment,
    config: &ExperimentConfig,
    kind: EstimatorChoice,
    rows: &mut [SeriesRow],
) -> Result<()> {
    let a = exp
        .anchor
        .clone()
        .ok_or_else(|| CliError::Config("estimators need a known minimizer in the domain".into()))?;
    let consts = smoothness_constants(&exp.f, &exp.domain, CONSTANTS_GRID);
    let report = match kind {
        EstimatorChoice::Quadratic => quadratic_estimator(&exp.f, &a, consts.gamma, &exp.domain)?,
        EstimatorChoice::LinearOnBall => {
            let DomainSpec::Ball { center, radius } = &exp.domain else {
                return Err(CliError::Config("the linear estimator needs a ball domain".into()));
            };
            let lambda = normal_multiplier(&exp.f, &a, center)?;
            linear_estimator_on_ball(&exp.f, &a, center, *radius, consts.gamma, lambda)?
        }
        EstimatorChoice::Lipschitz => {
            if !config.engine.needle() {
                return Err(CliError::Config(
                    "the Lipschitz estimator is not a polynomial; use it with the needle engine".into(),
                ));
            }
            let lip = lipschitz_estimator(&exp.f, &a, consts.beta)?;
            let p = needle_problem(exp)?;
            for row in rows.iter_mut().filter(|row| row.r >= 2) {
                let (q, _, _) = needle_density(&p.f, &p.domain, row.r as u32, p.regime, SchedulePolicy::Clamp)?;
                // positive weights keep the comparison with the needle bound exact
                let rule = rule_for(&p.domain, q.degree() + exp.f.degree().max(2))?;
                let to_original = |y: &[f64]| -> Vec<f64> { y.iter().zip(&p.anchor).map(|(v, a)| a + v / p.scale).collect() };
                let mass = rule.integrate(|y| q.eval(y));
                let num = rule.integrate(|y| q.eval(y) * lip.eval(&to_original(y)));
                row.estimator_bound = Some(num / mass + exp.offset);
            }
            return Ok(());
        }
    };
    certify(&report, &exp.f, config.seed).map_err(|e| CliError::Numerical(e.to_string()))?;
    if !config.engine.eigen() {
        return Err(CliError::Config("polynomial estimators are compared with the eigen engine".into()));
    }
    let series = eigen_series(exp, &report.g, config)?;
    for (row, res) in rows.iter_mut().zip(&series.results) {
        row.estimator_bound = Some(res.value + exp.offset);
    }
    Ok(())
}

/// Per-order ratio of two error series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub r: usize,
    pub error_a: Option<f64>,
    pub error_b: Option<f64>,
    /// `None` when either error is missing or the denominator is zero.
    pub ratio: Option<f64>,
}

/// `E_A^(r) / E_B^(r)` with mean and sample standard deviation over the last
/// five orders (rows without a ratio are skipped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub tail_mean: f64,
    pub tail_stdev: f64,
}

impl RatioReport {
    /// Coefficient of variation `stdev / |mean|` of the tail.
    pub fn tail_cv(&self) -> f64 {
        self.tail_stdev / self.tail_mean.abs()
    }
}

pub const TAIL: usize = 5;

pub fn ratio_report(a: &RunOutput, b: &RunOutput) -> Result<RatioReport> {
    let ea = a.errors();
    let eb = b.errors();
    if ea.is_empty() || eb.is_empty() {
        return Err(CliError::Config("ratio needs error series (known minima) on both sides".into()));
    }
    let lookup = |v: &[(usize, f64)], r: usize| v.iter().find(|(k, _)| *k == r).map(|(_, e)| *e);
    let r_lo = ea[0].0.max(eb[0].0);
    let r_hi = ea[ea.len() - 1].0.min(eb[eb.len() - 1].0);
    let rows: Vec<RatioRow> = (r_lo..=r_hi)
        .map(|r| {
            let (x, y) = (lookup(&ea, r), lookup(&eb, r));
            let ratio = match (x, y) {
                (Some(x), Some(y)) if y != 0.0 => Some(x / y),
                _ => None,
            };
            RatioRow {
                r,
                error_a: x,
                error_b: y,
                ratio,
            }
        })
        .collect();
    let tail: Vec<f64> = rows.iter().rev().take(TAIL).filter_map(|row| row.ratio).collect();
    let (tail_mean, tail_stdev) = mean_stdev(&tail);
    Ok(RatioReport {
        rows,
        tail_mean,
        tail_stdev,
    })
}

fn mean_stdev(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatus {
    Ok,
    /// Decay slower than the ceiling allows.
    ViolatesCeiling,
    /// Some error in the window is exactly zero (or negative).
    ConvergedExactly,
}

/// Fitted `log E` against `log r` slope for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub window: (usize, usize),
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub points: usize,
    pub ceiling: f64,
    pub status: RateStatus,
}

/// Default ceiling: decay at least like `1/r` up to a tolerance.
pub const DEFAULT_CEILING: f64 = -0.75;

pub fn rate_report(out: &RunOutput, window: (usize, usize), ceiling: f64) -> Result<RateReport> {
    let pts: Vec<(f64, f64)> = out
        .errors()
        .into_iter()
        .filter(|(r, _)| *r >= window.0 && *r <= window.1)
        .map(|(r, e)| (r as f64, e))
        .collect();
    if pts.len() < 2 {
        return Err(CliError::Config(format!(
            "window {window:?} holds {} errors; need at least two",
            pts.len()
        )));
    }
    let label = out.config.label();
    match rate_fit_points(&pts) {
        Ok(fit) => Ok(RateReport {
            label,
            window,
            slope: Some(fit.slope),
            stderr: Some(fit.stderr),
            points: fit.points,
            ceiling,
            status: if fit.slope > ceiling {
                RateStatus::ViolatesCeiling
            } else {
                RateStatus::Ok
            },
        }),
        Err(lasserre_core::Error::ConvergedExactly { .. }) => Ok(RateReport {
            label,
            window,
            slope: None,
            stderr: None,
            points: pts.len(),
            ceiling,
            status: RateStatus::ConvergedExactly,
        }),
        Err(e) => Err(e.into()),
    }
}
