//! Reproducible Monte Carlo experiments with exact finite-n counterparts.
//!
//! Replicate `r` at grid index `i` always draws from
//! `RandomStream::for_task(master_seed, i, r)`, and results are reduced in
//! index order, so reports are bit-identical for any worker count.

mod plan;
mod stats;

use rayon::prelude::*;
use serde::Serialize;

pub use plan::{default_x_grid, ExperimentKind, ExperimentPlan, Sampling, MIN_INTERVAL_REPLICATES, SCHEMA};
pub use stats::{
    fit_log_slope, ks_distance, median_band_levels, sorted_quantile, summarize, wilson_interval, SlopeFit, Summary, Z95,
};

use crate::distributions::{AtomTable, Domain, Family, ModelSpec, ParetoLog, TailModel};
use crate::error::{Error, Result};
use crate::estimator::safe_log_unchecked;
use crate::limits::{self, gumbel_cdf, LimitLaw};
use crate::rng::RandomStream;

/// Grid points with fewer observed events are left out of slope fits.
pub const MIN_EVENTS_FOR_FIT: u64 = 10;

fn count_log(n: u64) -> f64 {
    safe_log_unchecked(n as f64)
}

/// Estimate from the natural log of the maximum magnitude.
fn theta_from_ln_max(ln_max: f64, n: u64) -> f64 {
    count_log(n) / ln_max.max(1.0)
}

/// Surviving level `1 - p^(1/n)` of the max's `p`-quantile.
fn max_level(p: f64, n: u64) -> f64 {
    -(p.ln() / n as f64).exp_m1()
}

/// Natural log of the `p`-quantile of the maximum of `n` draws.
pub fn exact_log_max_quantile(model: &TailModel, n: u64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability level must lie in (0, 1), got {p}")));
    }
    Ok(match model {
        TailModel::ParetoLog(m) => m.log_quantile(max_level(p, n)),
        TailModel::AtomicOscillating(t) => t.log2_atoms[t.max_quantile_index(p, n)] * std::f64::consts::LN_2,
        _ => {
            let x = model.quantile(max_level(p, n))?;
            if x > 0.0 {
                x.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    })
}

/// `p`-quantile of the maximum of `n` draws in natural scale.
pub fn exact_max_quantile(model: &TailModel, n: u64, p: f64) -> Result<f64> {
    match model {
        TailModel::AtomicOscillating(_) | TailModel::ParetoLog(_) => Ok(exact_log_max_quantile(model, n, p)?.exp()),
        _ => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::domain(format!("probability level must lie in (0, 1), got {p}")));
            }
            model.quantile(max_level(p, n))
        }
    }
}

/// `P(ln(e ∨ M_n) <= y)` under an exact power-law tail.
pub fn pareto_safe_log_max_cdf(model: &ParetoLog, n: u64, y: f64) -> f64 {
    if y < 1.0 || y < model.x0().ln() {
        return 0.0;
    }
    let s = model.ln_tail_at_ln(y).exp();
    (n as f64 * (-s).ln_1p()).exp()
}

/// `P(ln(e ∨ M_n) >= y)` under an exact power-law tail.
pub fn pareto_safe_log_max_sf(model: &ParetoLog, n: u64, y: f64) -> f64 {
    if y <= 1.0 || y <= model.x0().ln() {
        return 1.0;
    }
    let s = model.ln_tail_at_ln(y).exp();
    -(n as f64 * (-s).ln_1p()).exp_m1()
}

/// Runs replicate tasks for one grid index in parallel, collected in
/// replicate order.
fn replicate<F>(seed: u64, group: usize, reps: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut RandomStream) -> Result<f64> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|r| f(&mut RandomStream::for_task(seed, group as u64, r)))
        .collect()
}

fn resolve_sampling(plan: &ExperimentPlan, model: &TailModel) -> Sampling {
    plan.sampling
        .unwrap_or_else(|| match (&plan.experiment, model.family()) {
            (ExperimentKind::Stability {}, Family::StdNormal | Family::Poisson) => Sampling::Plain,
            _ => Sampling::DirectMax,
        })
}

/// One maximum in the model's sampling domain. With `magnitude`, plain
/// sampling reduces `|X|` instead of `X`.
fn draw_max(model: &TailModel, s: &mut RandomStream, n: u64, sampling: Sampling, magnitude: bool) -> Result<f64> {
    match sampling {
        Sampling::DirectMax => model.sample_maximum(s, n),
        Sampling::Plain => {
            let fold_abs = magnitude && model.domain() == Domain::Natural;
            let mut m = f64::NEG_INFINITY;
            for _ in 0..n {
                let x = model.sample(s, 1)[0];
                m = m.max(if fold_abs { x.abs() } else { x });
            }
            Ok(m)
        }
    }
}

/// Natural log of one maximum magnitude.
fn draw_ln_max(model: &TailModel, s: &mut RandomStream, n: u64, sampling: Sampling) -> Result<f64> {
    match (sampling, model.domain()) {
        (Sampling::DirectMax, _) => model.sample_log_maximum(s, n),
        (Sampling::Plain, Domain::Log2Magnitude) => Ok(draw_max(model, s, n, sampling, true)? * std::f64::consts::LN_2),
        (Sampling::Plain, Domain::Natural) => Ok(draw_max(model, s, n, sampling, true)?.ln()),
    }
}

fn require_estimable(model: &TailModel) -> Result<()> {
    if model.family() == Family::StdNormal {
        return Err(Error::unsupported(
            "std_normal models the one-sided tail P(X > x); estimator experiments need the law of |X|",
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Consistency

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: u64,
    pub estimate: Summary,
    pub exact_median: f64,
    pub exact_q05: f64,
    pub exact_q95: f64,
}

pub fn run_consistency(plan: &ExperimentPlan) -> Result<Vec<ConsistencyRow>> {
    let model = plan.model.build()?;
    require_estimable(&model)?;
    let sampling = resolve_sampling(plan, &model);
    plan.n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values = replicate(plan.master_seed, i, plan.replicates, |s| {
                Ok(theta_from_ln_max(draw_ln_max(&model, s, n, sampling)?, n))
            })?;
            // theta_hat decreases in the maximum, so its q-quantile is the
            // image of the max's (1 - q)-quantile.
            let exact = |q: f64| exact_log_max_quantile(&model, n, 1.0 - q).map(|l| theta_from_ln_max(l, n));
            Ok(ConsistencyRow {
                n,
                estimate: summarize(&values),
                exact_median: exact(0.5)?,
                exact_q05: exact(0.05)?,
                exact_q95: exact(0.95)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Deviation rates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationSide {
    /// `P(theta_hat <= theta - s)`, fitted as `ln p` against `ln n`.
    Lower,
    /// `P(theta_hat >= theta + t)`, fitted as `ln(-ln p)` against `ln n`.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub n: u64,
    pub replicates: u64,
    pub events: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_exact: f64,
    /// Binomial standard error at `p_exact`.
    pub se_exact: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationResult {
    pub side: DeviationSide,
    pub theta: f64,
    pub deviation: f64,
    pub rows: Vec<DeviationRow>,
    /// Slope from the Monte Carlo estimates; `None` when underpowered.
    pub fitted: Option<SlopeFit>,
    /// Slope of the same regression on the exact probabilities.
    pub exact_fit: Option<SlopeFit>,
    pub theoretical_exponent: f64,
    pub relative_gap: Option<f64>,
    pub underpowered: bool,
}

fn deviation_y(side: DeviationSide, p: f64) -> Option<f64> {
    match side {
        DeviationSide::Lower if p > 0.0 => Some(p.ln()),
        DeviationSide::Upper if p > 0.0 && p < 1.0 => Some((-p.ln()).ln()),
        _ => None,
    }
}

pub fn run_deviation(plan: &ExperimentPlan) -> Result<DeviationResult> {
    let (side, deviation) = match plan.experiment {
        ExperimentKind::DeviationLower { s } => (DeviationSide::Lower, s),
        ExperimentKind::DeviationUpper { t } => (DeviationSide::Upper, t),
        _ => {
            return Err(Error::domain(
                "run_deviation needs a deviation_lower or deviation_upper plan",
            ))
        }
    };
    let model = plan.model.build()?;
    let TailModel::ParetoLog(pareto) = &model else {
        return Err(Error::unsupported(format!(
            "deviation rates need a pareto_log model with equal lim/liminf tail exponents, got {:?}",
            model.family()
        )));
    };
    let theta = pareto.theta();
    let theoretical_exponent = match side {
        DeviationSide::Lower => -limits::ld_exponent_theta_lower(theta, deviation)?,
        DeviationSide::Upper => limits::ld_exponent_theta_upper(theta, deviation)?,
    };
    let sampling = resolve_sampling(plan, &model);
    let reps = plan.replicates as u64;

    let mut rows = Vec::with_capacity(plan.n_grid.len());
    for (i, &n) in plan.n_grid.iter().enumerate() {
        let estimates = replicate(plan.master_seed, i, plan.replicates, |s| {
            Ok(theta_from_ln_max(draw_ln_max(&model, s, n, sampling)?, n))
        })?;
        let events = match side {
            DeviationSide::Lower => estimates.iter().filter(|&&th| th <= theta - deviation).count(),
            DeviationSide::Upper => estimates.iter().filter(|&&th| th >= theta + deviation).count(),
        } as u64;
        let p_exact = match side {
            DeviationSide::Lower => pareto_safe_log_max_sf(pareto, n, count_log(n) / (theta - deviation)),
            DeviationSide::Upper => pareto_safe_log_max_cdf(pareto, n, count_log(n) / (theta + deviation)),
        };
        let p_hat = events as f64 / reps as f64;
        let se_exact = (p_exact * (1.0 - p_exact) / reps as f64).sqrt();
        let z_score = if se_exact > 0.0 {
            (p_hat - p_exact) / se_exact
        } else if p_hat == p_exact {
            0.0
        } else {
            f64::INFINITY
        };
        let (ci_low, ci_high) = wilson_interval(events, reps, Z95);
        rows.push(DeviationRow {
            n,
            replicates: reps,
            events,
            p_hat,
            ci_low,
            ci_high,
            p_exact,
            se_exact,
            z_score,
        });
    }

    let mc_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.events >= MIN_EVENTS_FOR_FIT)
        .filter_map(|r| deviation_y(side, r.p_hat).map(|y| ((r.n as f64).ln(), y)))
        .collect();
    let exact_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| deviation_y(side, r.p_exact).map(|y| ((r.n as f64).ln(), y)))
        .collect();
    let fitted = (mc_points.len() >= 3).then(|| fit_log_slope(&mc_points)).transpose()?;
    let exact_fit = (exact_points.len() >= 3)
        .then(|| fit_log_slope(&exact_points))
        .transpose()?;
    let relative_gap = fitted.map(|f| ((f.slope - theoretical_exponent) / theoretical_exponent).abs());
    Ok(DeviationResult {
        side,
        theta,
        deviation,
        rows,
        underpowered: fitted.is_none(),
        fitted,
        exact_fit,
        theoretical_exponent,
        relative_gap,
    })
}

// ---------------------------------------------------------------------------
// Gumbel limit law

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfComparison {
    pub n: u64,
    pub sample_size: usize,
    pub ks: f64,
    pub reference: String,
    pub law: LimitLaw,
    /// Summary of the standardized sample.
    pub standardized: Summary,
    /// `sup_x |P(log M_n <= b_n(x)) - exp(-e^-x)|` over the plan's x-grid,
    /// from the exact finite-n law.
    pub exact_sup_gap: f64,
}

pub fn run_limit_law(plan: &ExperimentPlan) -> Result<Vec<CdfComparison>> {
    let ExperimentKind::LimitLaw { x_grid } = &plan.experiment else {
        return Err(Error::domain("run_limit_law needs a limit_law plan"));
    };
    let model = plan.model.build()?;
    let sampling = resolve_sampling(plan, &model);
    plan.n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let law = limits::gumbel_law_logmax(&model, n)?;
            let TailModel::ParetoLog(pareto) = &model else {
                unreachable!("checked by gumbel_law_logmax")
            };
            let z = replicate(plan.master_seed, i, plan.replicates, |s| {
                Ok(law.standardize(draw_ln_max(&model, s, n, sampling)?.max(1.0)))
            })?;
            let ks = ks_distance(&z, gumbel_cdf)?;
            let exact_sup_gap = x_grid
                .iter()
                .map(|&x| (pareto_safe_log_max_cdf(pareto, n, law.location + law.scale * x) - gumbel_cdf(x)).abs())
                .fold(0.0, f64::max);
            Ok(CdfComparison {
                n,
                sample_size: z.len(),
                ks,
                reference: "gumbel exp(-exp(-x))".to_string(),
                law,
                standardized: summarize(&z),
                exact_sup_gap,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Maxima stability

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub n: u64,
    pub norming: f64,
    pub ratio: Summary,
    pub exact_median_max: f64,
    pub exact_median_ratio: f64,
    /// 95% band for the sample median of the ratio under the exact law.
    pub band_low: f64,
    pub band_high: f64,
    pub median_in_band: bool,
}

pub fn run_stability(plan: &ExperimentPlan) -> Result<Vec<StabilityRow>> {
    let model = plan.model.build()?;
    if !matches!(
        model.family(),
        Family::StdNormal | Family::Poisson | Family::StretchedDoubleExp
    ) {
        return Err(Error::unsupported(format!(
            "stability runs cover std_normal, poisson and stretched_double_exp maxima; got {:?}",
            model.family()
        )));
    }
    let sampling = resolve_sampling(plan, &model);
    let (lo_level, hi_level) = median_band_levels(plan.replicates);
    plan.n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let norming = limits::stability_norming(&model, n)?;
            let ratios = replicate(plan.master_seed, i, plan.replicates, |s| {
                Ok(draw_max(&model, s, n, sampling, false)? / norming)
            })?;
            let ratio = summarize(&ratios);
            let exact_median_max = exact_max_quantile(&model, n, 0.5)?;
            let band_low = exact_max_quantile(&model, n, lo_level)? / norming;
            let band_high = exact_max_quantile(&model, n, hi_level)? / norming;
            Ok(StabilityRow {
                n,
                norming,
                median_in_band: band_low <= ratio.median && ratio.median <= band_high,
                ratio,
                exact_median_max,
                exact_median_ratio: exact_median_max / norming,
                band_low,
                band_high,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Oscillating tails

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationExact {
    pub n: u64,
    /// Attainable estimate values `ln n / ln d_k`, one per atom.
    pub levels: Vec<f64>,
    /// `P(M_n <= d_k)` per atom.
    pub max_cdf: Vec<f64>,
    pub median_theta_hat: f64,
}

pub fn oscillation_exact(table: &AtomTable, n: u64) -> OscillationExact {
    let levels: Vec<f64> = table
        .log2_atoms
        .iter()
        .map(|a| theta_from_ln_max(a * std::f64::consts::LN_2, n))
        .collect();
    let max_cdf = (0..table.len()).map(|k| table.max_cdf_at(k, n)).collect();
    let median_theta_hat = levels[table.max_quantile_index(0.5, n)];
    OscillationExact {
        n,
        levels,
        max_cdf,
        median_theta_hat,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationRow {
    pub exact: OscillationExact,
    pub estimate: Summary,
    /// Every replicate landed on one of `exact.levels`.
    pub on_levels: bool,
}

pub fn run_oscillation_plan(plan: &ExperimentPlan) -> Result<Vec<OscillationRow>> {
    let model = plan.model.build()?;
    let TailModel::AtomicOscillating(table) = &model else {
        return Err(Error::unsupported("oscillation runs need an atomic_oscillating model"));
    };
    let sampling = resolve_sampling(plan, &model);
    plan.n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values = replicate(plan.master_seed, i, plan.replicates, |s| {
                Ok(theta_from_ln_max(draw_ln_max(&model, s, n, sampling)?, n))
            })?;
            let exact = oscillation_exact(table, n);
            let on_levels = values.iter().all(|v| exact.levels.contains(v));
            Ok(OscillationRow {
                estimate: summarize(&values),
                exact,
                on_levels,
            })
        })
        .collect()
}

pub fn run_oscillation(
    rho1: f64,
    rho2: f64,
    atom_count: usize,
    n_grid: Vec<u64>,
    replicates: usize,
    seed: u64,
) -> Result<Vec<OscillationRow>> {
    let plan = ExperimentPlan::new(
        ModelSpec::AtomicOscillating { rho1, rho2, atom_count },
        n_grid,
        replicates,
        ExperimentKind::Oscillation {},
    )
    .with_seed(seed);
    plan.validate()?;
    run_oscillation_plan(&plan)
}

// ---------------------------------------------------------------------------
// Dispatch and reports

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentResult {
    Consistency { rows: Vec<ConsistencyRow> },
    DeviationLower(DeviationResult),
    DeviationUpper(DeviationResult),
    LimitLaw { comparisons: Vec<CdfComparison> },
    Stability { rows: Vec<StabilityRow> },
    Oscillation { rows: Vec<OscillationRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub plan: ExperimentPlan,
    pub result: ExperimentResult,
}

/// One long-format CSV record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub schema: &'static str,
    pub n: u64,
    pub statistic: String,
    pub value: f64,
}

fn summary_rows(out: &mut Vec<CsvRow>, n: u64, prefix: &str, s: &Summary) {
    for (name, v) in [
        ("min", s.min),
        ("q05", s.q05),
        ("median", s.median),
        ("q95", s.q95),
        ("max", s.max),
    ] {
        out.push(CsvRow {
            schema: SCHEMA,
            n,
            statistic: format!("{prefix}_{name}"),
            value: v,
        });
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only serializable data")
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut out = Vec::new();
        let push = |out: &mut Vec<CsvRow>, n: u64, statistic: &str, value: f64| {
            out.push(CsvRow {
                schema: SCHEMA,
                n,
                statistic: statistic.to_string(),
                value,
            })
        };
        match &self.result {
            ExperimentResult::Consistency { rows } => {
                for r in rows {
                    summary_rows(&mut out, r.n, "theta_hat", &r.estimate);
                    push(&mut out, r.n, "exact_median", r.exact_median);
                    push(&mut out, r.n, "exact_q05", r.exact_q05);
                    push(&mut out, r.n, "exact_q95", r.exact_q95);
                }
            }
            ExperimentResult::DeviationLower(d) | ExperimentResult::DeviationUpper(d) => {
                for r in &d.rows {
                    push(&mut out, r.n, "events", r.events as f64);
                    push(&mut out, r.n, "p_hat", r.p_hat);
                    push(&mut out, r.n, "ci_low", r.ci_low);
                    push(&mut out, r.n, "ci_high", r.ci_high);
                    push(&mut out, r.n, "p_exact", r.p_exact);
                    push(&mut out, r.n, "z_score", r.z_score);
                }
                if let Some(f) = d.fitted {
                    push(&mut out, 0, "fitted_slope", f.slope);
                    push(&mut out, 0, "fitted_slope_se", f.slope_se);
                }
                if let Some(f) = d.exact_fit {
                    push(&mut out, 0, "exact_slope", f.slope);
                }
                push(&mut out, 0, "theoretical_exponent", d.theoretical_exponent);
            }
            ExperimentResult::LimitLaw { comparisons } => {
                for c in comparisons {
                    push(&mut out, c.n, "ks", c.ks);
                    push(&mut out, c.n, "exact_sup_gap", c.exact_sup_gap);
                    push(&mut out, c.n, "location", c.law.location);
                    push(&mut out, c.n, "scale", c.law.scale);
                    summary_rows(&mut out, c.n, "standardized", &c.standardized);
                }
            }
            ExperimentResult::Stability { rows } => {
                for r in rows {
                    push(&mut out, r.n, "norming", r.norming);
                    summary_rows(&mut out, r.n, "ratio", &r.ratio);
                    push(&mut out, r.n, "exact_median_ratio", r.exact_median_ratio);
                    push(&mut out, r.n, "band_low", r.band_low);
                    push(&mut out, r.n, "band_high", r.band_high);
                }
            }
            ExperimentResult::Oscillation { rows } => {
                for r in rows {
                    summary_rows(&mut out, r.exact.n, "theta_hat", &r.estimate);
                    push(&mut out, r.exact.n, "exact_median_theta_hat", r.exact.median_theta_hat);
                    for (k, p) in r.exact.max_cdf.iter().enumerate() {
                        push(&mut out, r.exact.n, &format!("exact_max_cdf_atom{}", k + 1), *p);
                    }
                }
            }
        }
        out
    }
}

/// Runs a plan on `threads` workers (the global pool when `None`).
pub fn run_experiment(plan: &ExperimentPlan, threads: Option<usize>) -> Result<ExperimentReport> {
    plan.validate()?;
    let run = || -> Result<ExperimentResult> {
        Ok(match &plan.experiment {
            ExperimentKind::Consistency {} => ExperimentResult::Consistency {
                rows: run_consistency(plan)?,
            },
            ExperimentKind::DeviationLower { .. } => ExperimentResult::DeviationLower(run_deviation(plan)?),
            ExperimentKind::DeviationUpper { .. } => ExperimentResult::DeviationUpper(run_deviation(plan)?),
            ExperimentKind::LimitLaw { .. } => ExperimentResult::LimitLaw {
                comparisons: run_limit_law(plan)?,
            },
            ExperimentKind::Stability {} => ExperimentResult::Stability {
                rows: run_stability(plan)?,
            },
            ExperimentKind::Oscillation {} => ExperimentResult::Oscillation {
                rows: run_oscillation_plan(plan)?,
            },
        })
    };
    let result = match threads {
        None => run()?,
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::unsupported(format!("cannot start worker pool: {e}")))?;
            pool.install(run)?
        }
    };
    Ok(ExperimentReport {
        schema: SCHEMA,
        plan: plan.clone(),
        result,
    })
}
