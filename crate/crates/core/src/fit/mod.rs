//! Bound-constrained nonlinear least squares for the drag-ratio power law.
//!
//! The observations are compared against the piecewise curve: points below
//! the candidate critical gap `G_o` see the power branch `a*G^b + c`, points
//! at or above it see the constant 1. Between two data gaps the objective
//! does not change with `G_o` at all, so `G_o` cannot be driven by the
//! damped least-squares step. Instead each start freezes a partition, fits
//! `{a, b, c}`, re-derives the breakpoint as the gap where the fitted branch
//! reaches 1 (extrapolation when the data stops short of it), re-partitions
//! and repeats to a fixed point. A grid of starting partitions spanning
//! `[max_gap, 10 * max_gap]` (or the `G_o` box when bounds are given) plays
//! the role of a multi-start, and the lowest objective wins, ties broken by
//! the smaller critical gap.
//!
//! When a bound pins the breakpoint away from the curve's own root, the
//! branch is re-fitted with `c` eliminated through `c = 1 - a*G_o^b`, so the
//! returned curve still meets 1 exactly at the constrained gap.

mod lm;
mod seed;

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::drag::unity_root;
use crate::error::{Error, Result};
use crate::types::{
    DragModel, MeasurementKind, MeasurementSeries, Position, Violation,
};

use lm::{LmOptions, LmReport, ResidualSystem};

const MAX_ROUNDS: usize = 12;
const GRID_STARTS: usize = 8;
const RSS_TIE_TOL: f64 = 1e-12;

/// Convergence thresholds of the damped least-squares loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub gradient: f64,
    pub step: f64,
    pub cost: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gradient: 1e-10,
            step: 1e-10,
            cost: 1e-10,
        }
    }
}

/// Optional user-provided starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_o_m: Option<f64>,
}

/// One fitting task: the data, whether the critical gap is a free
/// parameter, its optional box constraint, and solver knobs.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data: MeasurementSeries,
    pub include_g_o: bool,
    /// `(lower_m, upper_m)` box for the critical gap.
    pub g_o_bounds: Option<(f64, f64)>,
    pub initial_guess: Option<InitialGuess>,
    pub max_iterations: usize,
    pub tolerance: Tolerances,
    /// Metadata stamped onto the fitted model.
    pub position: Position,
    pub platoon_size: u32,
}

impl FitProblem {
    pub fn new(data: MeasurementSeries) -> Self {
        FitProblem {
            data,
            include_g_o: false,
            g_o_bounds: None,
            initial_guess: None,
            max_iterations: 200,
            tolerance: Tolerances::default(),
            position: Position::Trail,
            platoon_size: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: DragModel,
    /// The objective re-evaluated on the returned model.
    pub residual_sum_squares: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_bounds: BTreeSet<BoundSide>,
    /// Post-fit model-invariant violations; reported, never enforced.
    pub violations: Vec<Violation>,
}

/// Residual of one observation against the power branch.
pub fn power_residual(a: f64, b: f64, c: f64, gap_m: f64, observed: f64) -> f64 {
    a * gap_m.powf(b) + c - observed
}

/// Analytic partials of [`power_residual`] with respect to `{a, b, c}`.
pub fn power_residual_gradient(a: f64, b: f64, _c: f64, gap_m: f64) -> [f64; 3] {
    let gb = gap_m.powf(b);
    [gb, a * gb * gap_m.ln(), 1.0]
}

/// The fitting objective evaluated on a model: the sum of squared
/// differences between the model's ratio prediction and the observations,
/// with the prediction clamped to 1 at and beyond the model's breakpoint
/// (the recorded gap, or the branch's own unity root when absent).
pub fn objective(model: &DragModel, data: &MeasurementSeries) -> f64 {
    let bp = model
        .g_o_m
        .or_else(|| unity_root(model.a, model.b, model.c));
    data.points
        .iter()
        .map(|&(g, r)| {
            let pred = match bp {
                Some(bp) if g >= bp => 1.0,
                _ => (model.a * g.powf(model.b) + model.c).min(1.0),
            };
            let e = pred - r;
            e * e
        })
        .sum()
}

/// Partitioned three-parameter system: rows at gaps below the partition see
/// the power branch; rows at or above it are pinned to 1 and contribute a
/// constant residual with a zero Jacobian row.
struct PowerSystem<'a> {
    gaps: &'a [f64],
    values: &'a [f64],
    partition_m: f64,
}

impl ResidualSystem for PowerSystem<'_> {
    fn params(&self) -> usize {
        3
    }
    fn residual_count(&self) -> usize {
        self.gaps.len()
    }
    fn residuals(&self, p: &[f64], out: &mut DVector<f64>) {
        for (i, (&g, &r)) in self.gaps.iter().zip(self.values).enumerate() {
            out[i] = if g >= self.partition_m {
                1.0 - r
            } else {
                power_residual(p[0], p[1], p[2], g, r)
            };
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        for (i, &g) in self.gaps.iter().enumerate() {
            if g >= self.partition_m {
                out[(i, 0)] = 0.0;
                out[(i, 1)] = 0.0;
                out[(i, 2)] = 0.0;
            } else {
                let grad = power_residual_gradient(p[0], p[1], p[2], g);
                out[(i, 0)] = grad[0];
                out[(i, 1)] = grad[1];
                out[(i, 2)] = grad[2];
            }
        }
    }
}

/// Two-parameter system with the offset eliminated through continuity at a
/// pinned gap: `c = 1 - a*S^b`.
struct TiedSystem<'a> {
    gaps: &'a [f64],
    values: &'a [f64],
    pinned_m: f64,
}

impl ResidualSystem for TiedSystem<'_> {
    fn params(&self) -> usize {
        2
    }
    fn residual_count(&self) -> usize {
        self.gaps.len()
    }
    fn residuals(&self, p: &[f64], out: &mut DVector<f64>) {
        let sb = self.pinned_m.powf(p[1]);
        for (i, (&g, &r)) in self.gaps.iter().zip(self.values).enumerate() {
            out[i] = if g >= self.pinned_m {
                1.0 - r
            } else {
                p[0] * (g.powf(p[1]) - sb) + 1.0 - r
            };
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let sb = self.pinned_m.powf(p[1]);
        let ls = self.pinned_m.ln();
        for (i, &g) in self.gaps.iter().enumerate() {
            if g >= self.pinned_m {
                out[(i, 0)] = 0.0;
                out[(i, 1)] = 0.0;
            } else {
                let gb = g.powf(p[1]);
                out[(i, 0)] = gb - sb;
                out[(i, 1)] = p[0] * (gb * g.ln() - sb * ls);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    a: f64,
    b: f64,
    c: f64,
    g_o_m: Option<f64>,
    rss: f64,
    iterations: usize,
    converged: bool,
    active_bounds: BTreeSet<BoundSide>,
}

fn lm_opts(problem: &FitProblem) -> LmOptions {
    LmOptions {
        max_iterations: problem.max_iterations,
        tol_gradient: problem.tolerance.gradient,
        tol_step: problem.tolerance.step,
        tol_cost: problem.tolerance.cost,
    }
}

/// Runs the free `{a, b, c}` fit at a fixed partition from every seed and
/// keeps the best local optimum.
fn best_seeded_fit(
    sys: &PowerSystem<'_>,
    seeds: &[[f64; 3]],
    opts: &LmOptions,
) -> Result<LmReport> {
    let mut best: Option<LmReport> = None;
    let mut last_err = None;
    for seed in seeds {
        match lm::minimize(sys, seed, opts) {
            Ok(rep) => {
                if best.as_ref().is_none_or(|b| rep.rss < b.rss) {
                    best = Some(rep);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or(Error::NonConvergence {
            iterations: 0,
            rss: f64::NAN,
            gradient_norm: f64::NAN,
        })
    })
}

/// Alternating fit from one starting partition. Returns the candidate with
/// its breakpoint resolved and, for bounded problems, the bound refit
/// applied.
///
/// Every round re-seeds from the points currently on the power branch: the
/// shape of the unclamped subset can differ a lot from the full series when
/// the data straddles the breakpoint, and a warm start alone can stay stuck
/// in the wrong curve family.
fn run_start(
    gaps: &[f64],
    values: &[f64],
    start_m: f64,
    bounds: Option<(f64, f64)>,
    guess: Option<[f64; 3]>,
    opts: &LmOptions,
    data: &MeasurementSeries,
) -> Result<Candidate> {
    let mut s = start_m;
    let mut abc: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut have_root = false;

    for _ in 0..MAX_ROUNDS {
        let (sub_gaps, sub_values): (Vec<f64>, Vec<f64>) = gaps
            .iter()
            .zip(values)
            .filter(|(g, _)| **g < s)
            .map(|(&g, &v)| (g, v))
            .unzip();
        if sub_gaps.is_empty() {
            break;
        }
        let mut round_seeds: Vec<[f64; 3]> = Vec::new();
        if let Some(p) = &abc {
            round_seeds.push([p[0], p[1], p[2]]);
        }
        if let Some(g) = guess {
            round_seeds.push(g);
        }
        round_seeds.extend(seed::candidate_seeds(&sub_gaps, &sub_values));

        let sys = PowerSystem {
            gaps,
            values,
            partition_m: s,
        };
        let rep = best_seeded_fit(&sys, &round_seeds, opts)?;
        iterations += rep.iterations;
        converged = rep.converged;
        abc = Some(rep.params);
        let p = abc.as_ref().unwrap();

        match unity_root(p[0], p[1], p[2]) {
            None => {
                have_root = false;
                break;
            }
            Some(root) => {
                have_root = true;
                let target = match bounds {
                    Some((lo, hi)) => root.clamp(lo, hi),
                    None => root,
                };
                if (target - s).abs() <= 1e-9 * s.max(1.0) {
                    s = target;
                    break;
                }
                s = target;
            }
        }
    }

    let p = abc.ok_or_else(|| {
        Error::invalid("starting partition clamps every point; nothing to fit")
    })?;
    let (mut a, mut b, mut c) = (p[0], p[1], p[2]);
    let mut active = BTreeSet::new();
    let mut g_o_m = have_root.then_some(s);

    if let Some((lo, hi)) = bounds {
        let root = unity_root(a, b, c);
        let side = match root {
            Some(r) if r < lo => Some((BoundSide::Lower, lo)),
            Some(r) if r > hi => Some((BoundSide::Upper, hi)),
            Some(_) => None,
            // No finite root: the curve reaches 1 only in the limit, so the
            // constrained optimum sits on the upper face of the box.
            None => Some((BoundSide::Upper, hi)),
        };
        if let Some((which, pin)) = side {
            let sys = TiedSystem {
                gaps,
                values,
                pinned_m: pin,
            };
            let rep = lm::minimize(&sys, &[a, b], opts)?;
            iterations += rep.iterations;
            converged = rep.converged;
            a = rep.params[0];
            b = rep.params[1];
            c = 1.0 - a * pin.powf(b);
            g_o_m = Some(pin);
            active.insert(which);
        } else {
            g_o_m = Some(s);
        }
    }

    let model = DragModel {
        a,
        b,
        c,
        g_o_m,
        position: Position::Trail,
        platoon_size: 2,
    };
    Ok(Candidate {
        a,
        b,
        c,
        g_o_m,
        rss: objective(&model, data),
        iterations,
        converged,
        active_bounds: active,
    })
}

fn better(best: &Candidate, other: &Candidate) -> bool {
    if other.rss < best.rss - RSS_TIE_TOL {
        return true;
    }
    if (other.rss - best.rss).abs() <= RSS_TIE_TOL {
        let bg = best.g_o_m.unwrap_or(f64::INFINITY);
        let og = other.g_o_m.unwrap_or(f64::INFINITY);
        return og < bg;
    }
    false
}

fn finish(problem: &FitProblem, cand: Candidate) -> FitResult {
    let model = DragModel {
        a: cand.a,
        b: cand.b,
        c: cand.c,
        g_o_m: cand.g_o_m,
        position: problem.position,
        platoon_size: problem.platoon_size,
    };
    let violations = model.validate();
    FitResult {
        residual_sum_squares: cand.rss,
        iterations: cand.iterations,
        converged: cand.converged,
        active_bounds: cand.active_bounds,
        violations,
        model,
    }
}

fn check_data(problem: &FitProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    if problem.data.kind != MeasurementKind::DragRatio {
        return Err(Error::invalid(
            "fitting expects drag-ratio data; convert fuel ratios first",
        ));
    }
    Ok((
        problem.data.gaps().collect(),
        problem.data.values().collect(),
    ))
}

fn all_seeds(problem: &FitProblem, gaps: &[f64], values: &[f64]) -> Vec<[f64; 3]> {
    let mut seeds = seed::candidate_seeds(gaps, values);
    if let Some(g) = problem.initial_guess {
        seeds.insert(0, [g.a, g.b, g.c]);
    }
    seeds
}

/// Plain three-parameter fit (no partition: every point sees the branch).
fn fit_branch_only(problem: &FitProblem) -> Result<FitResult> {
    let (gaps, values) = check_data(problem)?;
    let seeds = all_seeds(problem, &gaps, &values);
    let opts = lm_opts(problem);
    let sys = PowerSystem {
        gaps: &gaps,
        values: &values,
        partition_m: f64::INFINITY,
    };
    let rep = best_seeded_fit(&sys, &seeds, &opts)?;
    let cand = Candidate {
        a: rep.params[0],
        b: rep.params[1],
        c: rep.params[2],
        g_o_m: None,
        rss: f64::NAN,
        iterations: rep.iterations,
        converged: rep.converged,
        active_bounds: BTreeSet::new(),
    };
    let model = DragModel {
        a: cand.a,
        b: cand.b,
        c: cand.c,
        g_o_m: None,
        position: problem.position,
        platoon_size: problem.platoon_size,
    };
    let cand = Candidate {
        rss: objective(&model, &problem.data),
        ..cand
    };
    Ok(finish(problem, cand))
}

fn multistart(problem: &FitProblem, bounds: Option<(f64, f64)>) -> Result<FitResult> {
    let (gaps, values) = check_data(problem)?;
    let guess = problem.initial_guess.map(|g| [g.a, g.b, g.c]);
    let opts = lm_opts(problem);
    let max_gap = *gaps.last().expect("non-empty series");

    let mut starts = Vec::with_capacity(GRID_STARTS + 1);
    match bounds {
        Some((lo, hi)) => {
            for k in 0..GRID_STARTS {
                starts.push(lo + (hi - lo) * k as f64 / (GRID_STARTS - 1) as f64);
            }
        }
        None => {
            for k in 0..GRID_STARTS {
                starts.push(max_gap * (1.0 + 9.0 * k as f64 / (GRID_STARTS - 1) as f64));
            }
        }
    }
    if let Some(g) = problem.initial_guess.and_then(|g| g.g_o_m) {
        starts.push(match bounds {
            Some((lo, hi)) => g.clamp(lo, hi),
            None => g,
        });
    }

    let mut best: Option<Candidate> = None;
    let mut last_err = None;
    for s0 in starts {
        match run_start(&gaps, &values, s0, bounds, guess, &opts, &problem.data) {
            Ok(cand) => {
                if best.as_ref().is_none_or(|b| better(b, &cand)) {
                    best = Some(cand);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }

    // The branch-only optimum is always a feasible interpretation of the
    // unconstrained problem (its breakpoint is the curve's own root), so
    // including the critical gap can never end up worse than leaving it out.
    if bounds.is_none() {
        if let Ok(plain) = fit_branch_only(problem) {
            let cand = Candidate {
                a: plain.model.a,
                b: plain.model.b,
                c: plain.model.c,
                g_o_m: unity_root(plain.model.a, plain.model.b, plain.model.c),
                rss: plain.residual_sum_squares,
                iterations: plain.iterations,
                converged: plain.converged,
                active_bounds: BTreeSet::new(),
            };
            if best.as_ref().is_none_or(|b| better(b, &cand)) {
                best = Some(cand);
            }
        }
    }

    match best {
        Some(cand) => Ok(finish(problem, cand)),
        None => Err(last_err.unwrap_or_else(|| Error::invalid("no feasible start"))),
    }
}

/// Fit without a box constraint on the critical gap.
///
/// With `include_g_o = false` this is the plain three-parameter branch fit
/// and the returned model carries no critical gap. With `include_g_o = true`
/// the partition multi-start runs and the returned model's critical gap is
/// the fixed point described in the module docs.
pub fn fit_unconstrained(problem: &FitProblem) -> Result<FitResult> {
    if problem.g_o_bounds.is_some() {
        return Err(Error::invalid(
            "problem carries bounds; use fit_bounded",
        ));
    }
    if problem.include_g_o {
        multistart(problem, None)
    } else {
        fit_branch_only(problem)
    }
}

/// Fit with the critical gap constrained to `g_o_bounds`.
pub fn fit_bounded(problem: &FitProblem) -> Result<FitResult> {
    let (lo, hi) = problem
        .g_o_bounds
        .ok_or_else(|| Error::invalid("fit_bounded requires g_o_bounds"))?;
    if !problem.include_g_o {
        return Err(Error::invalid(
            "bounded fits require include_g_o = true",
        ));
    }
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::invalid(format!(
            "infeasible bounds: need 0 < lower < upper, got ({lo}, {hi})"
        )));
    }
    if let Some(g) = problem.initial_guess.and_then(|g| g.g_o_m) {
        if g < lo || g > hi {
            return Err(Error::invalid(format!(
                "initial critical gap {g} lies outside the bounds ({lo}, {hi})"
            )));
        }
    }
    multistart(problem, Some((lo, hi)))
}

/// Gap at which a fitted branch-only model reaches the unity ratio,
/// resolved by the public breakpoint search.
pub fn extrapolated_breakpoint(result: &FitResult) -> Result<f64> {
    if result.model.g_o_m.is_some() {
        return Err(Error::invalid(
            "model already carries a critical gap; extrapolation applies to fits without one",
        ));
    }
    crate::drag::effective_breakpoint(&result.model)
}
