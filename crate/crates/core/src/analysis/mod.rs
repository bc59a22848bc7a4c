//! Factor–index dependence: alignment, Pearson correlation, simple OLS with a
//! slope t-test, null baselines and charts.

mod baseline;
mod chart;
pub mod dist;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::factor::DailyFactorSeries;
use crate::ingest::MarketSeries;

pub use baseline::{random_baseline, temperature_baseline, BaselineReport, RandomDist};
pub use chart::{plot_chart, render_chart, Axis, ChartSeries};

/// Fewest aligned observations accepted for inference.
pub const MIN_OBSERVATIONS: usize = 3;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("only {found} overlapping dates, need at least {MIN_OBSERVATIONS}")]
    TooFewObservations { found: usize },
    #[error("{0} series has zero variance")]
    ZeroVariance(&'static str),
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least one trial")]
    NoTrials,
    #[error("invalid distribution parameters: {0}")]
    BadDistribution(String),
    #[error("chart needs at least one non-empty series")]
    EmptyChart,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, AnalysisError>;

/// Factor and index values on their common dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub dates: Vec<NaiveDate>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Inner join of two date-sorted series on exact dates.
pub fn align_points(x: &[(NaiveDate, f64)], y: &[(NaiveDate, f64)]) -> Result<AlignedPair> {
    let mut pair = AlignedPair {
        dates: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                pair.dates.push(x[i].0);
                pair.x.push(x[i].1);
                pair.y.push(y[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    if pair.len() < MIN_OBSERVATIONS {
        return Err(AnalysisError::TooFewObservations { found: pair.len() });
    }
    Ok(pair)
}

/// Drops factor values on dates the market did not trade.
pub fn align(factor: &DailyFactorSeries, market: &MarketSeries) -> Result<AlignedPair> {
    align_points(&factor.pairs(), market.points())
}

/// First differences of both series, dated by the later observation.
pub fn differenced(pair: &AlignedPair) -> Result<AlignedPair> {
    let diff = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let out = AlignedPair {
        dates: pair.dates.iter().skip(1).copied().collect(),
        x: diff(&pair.x),
        y: diff(&pair.y),
    };
    if out.len() < MIN_OBSERVATIONS {
        return Err(AnalysisError::TooFewObservations { found: out.len() });
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

struct Moments {
    mx: f64,
    my: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Result<Moments> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < MIN_OBSERVATIONS {
        return Err(AnalysisError::TooFewObservations { found: x.len() });
    }
    if is_constant(x) {
        return Err(AnalysisError::ZeroVariance("x"));
    }
    if is_constant(y) {
        return Err(AnalysisError::ZeroVariance("y"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok(Moments { mx, my, sxx, syy, sxy })
}

/// Sample Pearson coefficient of two equal-length slices.
pub fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    let m = moments(x, y)?;
    Ok((m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson(pair: &AlignedPair) -> Result<f64> {
    pearson_slices(&pair.x, &pair.y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub rho: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `slope / se(slope)`; infinite for an exact fit.
    pub t_stat: f64,
    /// Two-sided, `n − 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub r_squared: f64,
}

/// Least squares of `y` on `x` with a t-test on the slope.
pub fn ols_slices(x: &[f64], y: &[f64]) -> Result<CorrelationReport> {
    let m = moments(x, y)?;
    let n = x.len();
    let slope = m.sxy / m.sxx;
    let intercept = m.my - slope * m.mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = (n - 2) as f64;
    let se = (sse / df / m.sxx).sqrt();
    let t_stat = if se > 0.0 {
        slope / se
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    Ok(CorrelationReport {
        rho: (m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0),
        slope,
        intercept,
        t_stat,
        p_value: dist::t_two_sided_p(t_stat, df),
        n,
        r_squared: (1.0 - sse / m.syy).clamp(0.0, 1.0),
    })
}

pub fn ols(pair: &AlignedPair) -> Result<CorrelationReport> {
    ols_slices(&pair.x, &pair.y)
}

/// One row of the analysis report. Baseline rows leave regression columns
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub factor_kind: String,
    pub target: String,
    pub rho: f64,
    pub regression: Option<CorrelationReport>,
    pub n: usize,
}

impl ReportRow {
    pub fn from_report(factor_kind: impl Into<String>, target: impl Into<String>, r: &CorrelationReport) -> Self {
        Self {
            factor_kind: factor_kind.into(),
            target: target.into(),
            rho: r.rho,
            regression: Some(*r),
            n: r.n,
        }
    }
}

/// CSV `factor_kind,target,rho,slope,intercept,t,p,n`.
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("factor_kind,target,rho,slope,intercept,t,p,n\n");
    for r in rows {
        let reg = match &r.regression {
            Some(c) => format!("{:?},{:?},{:?},{:?}", c.slope, c.intercept, c.t_stat, c.p_value),
            None => ",,,".to_string(),
        };
        let _ = writeln!(out, "{},{},{:?},{},{}", r.factor_kind, r.target, r.rho, reg, r.n);
    }
    out
}

pub fn write_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_to_csv(rows)).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}
