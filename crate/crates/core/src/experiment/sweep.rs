//! End-to-end learning-rate sweeps and log–log slope fitting.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::classifier::{sample_noiseless, Classifier};
use crate::entropy::{rate_exponents, ratio_f64};
use crate::erm::{misclassification_error, plan_architecture, train_erm, TrainConfig};
use crate::error::{LabError, Result};
use crate::par::map_indexed;

/// Least-squares line through `(ln m, ln error)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Ordinary least squares on `(ln m, ln error)`; standard errors use the
/// residual variance with `n − 2` degrees of freedom.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(LabError::Degenerate(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(LabError::Degenerate(format!("point {p:?} is not positive")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Degenerate("all m values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = sse / (n - 2.0);
    Ok(SlopeFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}

/// One `(m, seed)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub m: usize,
    pub seed: u64,
    pub achieved_hinge_risk: Option<f64>,
    /// Monte Carlo error, floored at `1/(2 n_mc)` when no mismatch was seen.
    pub misclass_error: Option<f64>,
    pub mc_half_width: Option<f64>,
    pub flags: Vec<String>,
    /// Why a cell produced no measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const FLAG_FLOORED: &str = "floored";
pub const FLAG_DIVERGED: &str = "diverged";
pub const FLAG_INSUFFICIENT: &str = "insufficient_points";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub m: usize,
    pub median_error: f64,
    pub seeds_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// `(d+1)/(3d−1)`.
    pub lower_exp: f64,
    /// `1/3 − κ`.
    pub upper_exp: f64,
    pub kappa_report: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    /// `[−lower_exp, −upper_exp]`.
    pub envelope: [f64; 2],
    pub acceptance: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub aggregation: String,
    pub records: Vec<RateRecord>,
    pub medians: Vec<MedianRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub intercept_stderr: Option<f64>,
    pub reference: Reference,
    pub windows: Windows,
    pub flags: Vec<String>,
}

impl RateReport {
    pub fn slope_in(&self, window: [f64; 2]) -> bool {
        self.slope.is_some_and(|s| window[0] <= s && s <= window[1])
    }

    /// Median error at the smallest m above the median at the largest m.
    pub fn decreases_end_to_end(&self) -> bool {
        match (self.medians.first(), self.medians.last()) {
            (Some(a), Some(b)) if self.medians.len() >= 2 => a.median_error > b.median_error,
            _ => false,
        }
    }
}

/// Independent seed for one stream of one cell.
pub fn cell_seed(seed: u64, m: usize, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((m as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(stream.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-m medians over records with a valid error; only m values with at
/// least three such seeds are kept.
pub fn median_rows(records: &[RateRecord]) -> Vec<MedianRow> {
    let mut ms: Vec<usize> = records.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .filter_map(|m| {
            let mut errs: Vec<f64> = records
                .iter()
                .filter(|r| r.m == m)
                .filter_map(|r| r.misclass_error)
                .collect();
            (errs.len() >= 3).then(|| MedianRow {
                m,
                seeds_used: errs.len(),
                median_error: median(&mut errs),
            })
        })
        .collect()
}

fn run_cell(h: &dyn Classifier, cfg: &ExperimentConfig, m: usize, seed: u64) -> RateRecord {
    let s = &cfg.sweep;
    let attempt = || -> Result<(f64, f64, f64)> {
        let sample = sample_noiseless(h, m, cell_seed(seed, m, 1))?;
        let plan = plan_architecture(
            m,
            cfg.classifier.dim,
            cfg.classifier.pieces,
            cfg.classifier.budget,
            s.tau,
            s.scale_factor,
        )?;
        let train = TrainConfig {
            seed: cell_seed(seed, m, 2),
            ..cfg.train.clone()
        };
        let fit = train_erm(&sample, &plan, &train)?;
        let err = misclassification_error(&fit.net, h, s.n_mc, cell_seed(seed, m, 3))?;
        Ok((fit.achieved_risk, err.value, err.half_width.unwrap_or(0.0)))
    };
    match attempt() {
        Ok((risk, err, hw)) => {
            let mut flags = Vec::new();
            let floor = 1.0 / (2.0 * s.n_mc as f64);
            let err = if err == 0.0 {
                flags.push(FLAG_FLOORED.to_string());
                floor
            } else {
                err
            };
            RateRecord {
                m,
                seed,
                achieved_hinge_risk: Some(risk),
                misclass_error: Some(err),
                mc_half_width: Some(hw),
                flags,
                error: None,
            }
        }
        Err(e) => RateRecord {
            m,
            seed,
            achieved_hinge_risk: None,
            misclass_error: None,
            mc_half_width: None,
            flags: vec![FLAG_DIVERGED.to_string()],
            error: Some(e.to_string()),
        },
    }
}

/// Train and measure every `(m, seed)` cell, aggregate medians and fit the
/// slope. Cells are independent and merged in `(m, seed)` order.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::RateSweep {
        return Err(LabError::Config(format!(
            "expected a rate_sweep config, got {:?}",
            cfg.kind
        )));
    }
    let h = cfg.classifier.build()?;
    let s = &cfg.sweep;
    let cells: Vec<(usize, u64)> = s
        .m_grid
        .iter()
        .flat_map(|&m| s.seeds.iter().map(move |&sd| (m, sd)))
        .collect();
    let records = map_indexed(cells.len(), |k| run_cell(h.as_ref(), cfg, cells[k].0, cells[k].1));
    report_from_records(cfg, records)
}

/// Aggregate records into a report; also used to re-derive a stored report.
pub fn report_from_records(cfg: &ExperimentConfig, records: Vec<RateRecord>) -> Result<RateReport> {
    let exps = rate_exponents(cfg.classifier.dim)?;
    let lower_exp = ratio_f64(exps.lower_exp);
    let upper_exp = 1.0 / 3.0 - cfg.sweep.kappa_report;
    let medians = median_rows(&records);
    let points: Vec<(f64, f64)> = medians.iter().map(|r| (r.m as f64, r.median_error)).collect();
    let mut flags = Vec::new();
    let fit = match fit_loglog_slope(&points) {
        Ok(f) => Some(f),
        Err(_) => {
            flags.push(FLAG_INSUFFICIENT.to_string());
            None
        }
    };
    Ok(RateReport {
        config: cfg.clone(),
        aggregation: "median".into(),
        records,
        medians,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        slope_stderr: fit.map(|f| f.slope_stderr),
        intercept_stderr: fit.map(|f| f.intercept_stderr),
        reference: Reference {
            lower_exp,
            upper_exp,
            kappa_report: cfg.sweep.kappa_report,
        },
        windows: Windows {
            envelope: [-lower_exp, -upper_exp],
            acceptance: cfg.sweep.slope_window,
        },
        flags,
    })
}
