//! Early-exit policy analytics over per-sample, per-iteration error records:
//! threshold assignment, matched-compute random baselines, oracle curves and
//! operating-point selection.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// True and predicted error (NME percent) after every iteration of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub true_nme: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl SampleRecord {
    pub fn new(true_nme: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if true_nme.is_empty() || true_nme.len() != predicted.len() {
            return Err(Error::config(
                "a record needs equally many true and predicted errors",
            ));
        }
        if true_nme.iter().chain(&predicted).any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("record errors must be nonnegative".into()));
        }
        Ok(Self {
            true_nme,
            predicted,
        })
    }

    pub fn iterations(&self) -> usize {
        self.true_nme.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorSource {
    Predicted,
    True,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Predicted,
    RandomBaseline,
    Oracle,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Predicted => "predicted",
            Self::RandomBaseline => "random_baseline",
            Self::Oracle => "oracle",
        }
    }
}

/// 1-based exit iteration per sample and the number of samples exiting at
/// each iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub exits: Vec<usize>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyPoint {
    pub threshold: f64,
    pub mean_iterations: f64,
    pub mean_nme: f64,
    pub variant: Variant,
    /// Standard deviation of `mean_nme` across repetitions (random baseline only).
    pub rep_std: f64,
}

fn common_iterations(records: &[SampleRecord]) -> Result<usize> {
    let first = records
        .first()
        .ok_or_else(|| Error::Usage("no sample records".into()))?;
    let l = first.iterations();
    if records.iter().any(|r| r.iterations() != l) {
        return Err(Error::config("records differ in iteration count"));
    }
    Ok(l)
}

fn counts_of(exits: &[usize], l: usize) -> Vec<usize> {
    let mut counts = vec![0; l];
    for &e in exits {
        counts[e - 1] += 1;
    }
    counts
}

/// Exit at the first iteration whose error is strictly below `threshold`,
/// otherwise at the last one.
pub fn assign_iterations(
    records: &[SampleRecord],
    threshold: f64,
    source: ErrorSource,
) -> Result<Assignment> {
    let l = common_iterations(records)?;
    let exits: Vec<usize> = records
        .iter()
        .map(|r| {
            let errors = match source {
                ErrorSource::Predicted => &r.predicted,
                ErrorSource::True => &r.true_nme,
            };
            errors.iter().position(|&e| e < threshold).map_or(l, |i| i + 1)
        })
        .collect();
    Ok(Assignment {
        counts: counts_of(&exits, l),
        exits,
    })
}

fn mean_nme_at(records: &[SampleRecord], exits: &[usize]) -> f64 {
    records
        .iter()
        .zip(exits)
        .map(|(r, &e)| r.true_nme[e - 1])
        .sum::<f64>()
        / records.len() as f64
}

/// Mean exit iteration and mean true NME at the assigned exits. The point
/// is tagged as the predicted policy with an unset (NaN) threshold.
pub fn evaluate_policy(records: &[SampleRecord], exits: &[usize]) -> Result<PolicyPoint> {
    let l = common_iterations(records)?;
    if exits.len() != records.len() {
        return Err(Error::Usage(format!(
            "{} exits for {} records",
            exits.len(),
            records.len()
        )));
    }
    if exits.iter().any(|&e| e == 0 || e > l) {
        return Err(Error::Usage(format!("exit iterations must lie in 1..={l}")));
    }
    Ok(PolicyPoint {
        threshold: f64::NAN,
        mean_iterations: exits.iter().sum::<usize>() as f64 / exits.len() as f64,
        mean_nme: mean_nme_at(records, exits),
        variant: Variant::Predicted,
        rep_std: 0.0,
    })
}

/// Assigns exits uniformly at random subject to exactly `counts[j]`
/// samples exiting at iteration `j + 1`, averaged over `reps` draws.
pub fn random_baseline(
    records: &[SampleRecord],
    counts: &[usize],
    reps: usize,
    seed: u64,
) -> Result<PolicyPoint> {
    let l = common_iterations(records)?;
    if counts.len() != l || counts.iter().sum::<usize>() != records.len() {
        return Err(Error::Usage(format!(
            "counts {counts:?} do not partition {} records over {l} iterations",
            records.len()
        )));
    }
    if reps == 0 {
        return Err(Error::Usage("random baseline needs at least one repetition".into()));
    }
    let mut exits: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat_n(j + 1, k))
        .collect();
    let mean_iterations = exits.iter().sum::<usize>() as f64 / exits.len() as f64;
    let mut values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        exits.shuffle(&mut rng);
        values.push(mean_nme_at(records, &exits));
    }
    let mean = values.iter().sum::<f64>() / reps as f64;
    let rep_std = if reps > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(PolicyPoint {
        threshold: f64::NAN,
        mean_iterations,
        mean_nme: mean,
        variant: Variant::RandomBaseline,
        rep_std,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyCurves {
    pub predicted: Vec<PolicyPoint>,
    pub random_baseline: Vec<PolicyPoint>,
    pub oracle: Vec<PolicyPoint>,
}

/// Matched predicted / random / oracle points for one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub predicted: PolicyPoint,
    pub random_baseline: PolicyPoint,
    pub oracle: PolicyPoint,
}

/// Sorted unique predicted errors plus the ±∞ sentinels: every achievable
/// predicted-policy assignment appears exactly once.
pub fn threshold_grid(records: &[SampleRecord]) -> Vec<f64> {
    let mut grid: Vec<f64> = records.iter().flat_map(|r| r.predicted.iter().copied()).collect();
    grid.push(f64::NEG_INFINITY);
    grid.push(f64::INFINITY);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Per-threshold rows in input order. The baseline for threshold `k` uses
/// seed stream `seed + k`.
pub fn sweep_rows(
    records: &[SampleRecord],
    thresholds: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if thresholds.is_empty() {
        return Err(Error::Usage("threshold list is empty".into()));
    }
    thresholds
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let pred = assign_iterations(records, t, ErrorSource::Predicted)?;
            let oracle = assign_iterations(records, t, ErrorSource::True)?;
            let tag = |p: PolicyPoint, variant| PolicyPoint {
                threshold: t,
                variant,
                ..p
            };
            Ok(SweepRow {
                threshold: t,
                predicted: tag(evaluate_policy(records, &pred.exits)?, Variant::Predicted),
                random_baseline: tag(
                    random_baseline(records, &pred.counts, reps, seed.wrapping_add(k as u64))?,
                    Variant::RandomBaseline,
                ),
                oracle: tag(evaluate_policy(records, &oracle.exits)?, Variant::Oracle),
            })
        })
        .collect()
}

fn sort_curve(curve: &mut [PolicyPoint]) {
    curve.sort_by(|a, b| {
        a.mean_iterations
            .total_cmp(&b.mean_iterations)
            .then(b.threshold.total_cmp(&a.threshold))
    });
}

/// The three curves, each sorted by mean iterations.
pub fn sweep(
    records: &[SampleRecord],
    thresholds: &[f64],
    reps: usize,
    seed: u64,
) -> Result<PolicyCurves> {
    let rows = sweep_rows(records, thresholds, reps, seed)?;
    let mut curves = PolicyCurves {
        predicted: rows.iter().map(|r| r.predicted).collect(),
        random_baseline: rows.iter().map(|r| r.random_baseline).collect(),
        oracle: rows.iter().map(|r| r.oracle).collect(),
    };
    sort_curve(&mut curves.predicted);
    sort_curve(&mut curves.random_baseline);
    sort_curve(&mut curves.oracle);
    Ok(curves)
}

/// Linear interpolation of mean NME at `mean_iterations` along a curve;
/// among points sharing an iteration count the lowest NME is used. `None`
/// outside the curve's range.
pub fn interpolate_nme(curve: &[PolicyPoint], mean_iterations: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.mean_iterations, p.mean_nme)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    if let Some(&(_, y)) = pts.iter().find(|p| p.0 == mean_iterations) {
        return Some(y);
    }
    let hi = pts.iter().position(|p| p.0 > mean_iterations)?;
    if hi == 0 {
        return None;
    }
    let (x0, y0) = pts[hi - 1];
    let (x1, y1) = pts[hi];
    Some(y0 + (y1 - y0) * (mean_iterations - x0) / (x1 - x0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// Upper bound on mean iterations.
    MaxIterations(f64),
    /// Upper bound on mean NME.
    MaxNme(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selection {
    Feasible(PolicyPoint),
    Infeasible,
}

/// Under an iteration cap: the lowest-NME point within the cap. Under an
/// NME cap: the point with the fewest iterations meeting it. Ties go to
/// fewer iterations, then lower NME.
pub fn pick_operating_point(curve: &[PolicyPoint], budget: Budget) -> Result<Selection> {
    if curve.is_empty() {
        return Err(Error::Usage("cannot pick from an empty curve".into()));
    }
    let key = |p: &&PolicyPoint| match budget {
        Budget::MaxIterations(_) => (p.mean_nme, p.mean_iterations),
        Budget::MaxNme(_) => (p.mean_iterations, p.mean_nme),
    };
    let best = curve
        .iter()
        .filter(|p| match budget {
            Budget::MaxIterations(cap) => p.mean_iterations <= cap,
            Budget::MaxNme(cap) => p.mean_nme <= cap,
        })
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        });
    Ok(best.map_or(Selection::Infeasible, |p| Selection::Feasible(*p)))
}

fn fmt_threshold(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        t.to_string()
    }
}

/// Long-format curves: `variant,threshold,mean_iterations,mean_nme,rep_std`.
pub fn write_curves_csv<W: Write>(curves: &PolicyCurves, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "variant,threshold,mean_iterations,mean_nme,rep_std")?;
    for curve in [&curves.predicted, &curves.random_baseline, &curves.oracle] {
        for p in curve {
            let std = if p.variant == Variant::RandomBaseline {
                p.rep_std.to_string()
            } else {
                String::new()
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                p.variant.tag(),
                fmt_threshold(p.threshold),
                p.mean_iterations,
                p.mean_nme,
                std
            )?;
        }
    }
    Ok(())
}

/// One row per threshold with the matched baseline beside the policy and
/// mean multiply-adds per sample (`mean_iterations × per_iteration_mma`).
pub fn write_sweep_table<W: Write>(
    rows: &[SweepRow],
    per_iteration_mma: u64,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "threshold,mean_iterations,mean_mma,predicted_nme,baseline_nme,baseline_std,oracle_iterations,oracle_mma,oracle_nme"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_threshold(r.threshold),
            r.predicted.mean_iterations,
            r.predicted.mean_iterations * per_iteration_mma as f64,
            r.predicted.mean_nme,
            r.random_baseline.mean_nme,
            r.random_baseline.rep_std,
            r.oracle.mean_iterations,
            r.oracle.mean_iterations * per_iteration_mma as f64,
            r.oracle.mean_nme
        )?;
    }
    Ok(())
}
