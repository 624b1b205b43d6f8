//! Numerical certification of the scheme's qualitative claims along
//! computed trajectories: positivity and mass accounting, the discrete
//! Volterra-type inequality, the weight-shift identity for memory sums, and
//! the memory-weighted Lyapunov functions for both equilibria together with
//! their fractional decay diagnostics.
//!
//! The Lyapunov values carry the model's mixed implicit units; only signs,
//! zeros and identities are asserted about them, never magnitudes.

use crate::epidemics::{EquilibriumPoint, Incidence, ModelParams};
use crate::fracops::{caputo_l1, FracOpsError, FractionalOrder, L1Weights};
use crate::solver::HistoryBuffer;
use crate::{real, Real};
use std::fmt;

/// Errors from the analysis layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    /// A value required to be strictly positive was not (e.g. a field entry
    /// inside a logarithm).
    Domain(&'static str),
    /// Inconsistent slice lengths or an out-of-range level index.
    BadInput(&'static str),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain(what) => write!(f, "domain error: {what}"),
            Self::BadInput(what) => write!(f, "bad input: {what}"),
        }
    }
}

impl std::error::Error for AnalysisError {}

/// The relative-entropy kernel `Phi(w) = w - 1 - ln w`; nonnegative with a
/// single zero at `w = 1`.
pub fn phi<T: Real>(w: T) -> Result<T, AnalysisError> {
    if !(w > T::zero()) {
        return Err(AnalysisError::Domain("phi requires w > 0"));
    }
    Ok(w - T::one() - w.ln())
}

/// The Lyapunov weight sequence `w_i = dt^{-alpha}/Gamma(2-alpha) * b_{i-1}`
/// for `i >= 1`.
///
/// Nonincreasing, positive for `alpha < 1`, bounded by the L1 scale; at
/// `alpha = 1` it collapses to `w_1 = 1/dt` with all later weights zero.
#[derive(Debug, Clone)]
pub struct LyapunovWeights<T: Real> {
    scale: T,
    b: L1Weights<T>,
    dt: T,
}

impl<T: Real> LyapunovWeights<T> {
    pub fn new(alpha: FractionalOrder<T>, dt: T, n: usize) -> Self {
        Self {
            scale: alpha.l1_scale(dt),
            b: L1Weights::compute(alpha, n),
            dt,
        }
    }

    pub fn alpha(&self) -> FractionalOrder<T> {
        self.b.alpha()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// The L1 scale `dt^{-alpha}/Gamma(2-alpha)`.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// `w_i`, `i >= 1`.
    pub fn w(&self, i: usize) -> T {
        self.scale * self.b.b(i - 1)
    }

    pub fn l1(&self) -> &L1Weights<T> {
        &self.b
    }
}

/// Which equilibrium a Lyapunov diagnostic targets.
#[derive(Debug, Clone)]
pub enum DecayTarget<T: Real> {
    DiseaseFree,
    Endemic(EquilibriumPoint<T>),
}

/// Per-level aggregates of a memory Lyapunov function: `v[i]` is the
/// weighted part, `extra[i]` the current-level part added outside the
/// memory sum.
struct Aggregates<T: Real> {
    v: Vec<T>,
    extra: Vec<T>,
}

fn dfe_aggregates<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    upto: usize,
) -> Result<Aggregates<T>, AnalysisError> {
    let s0 = p.lambda / p.gamma_s;
    let c = p.beta * s0 * f.slope_at_zero();
    let mut v = Vec::with_capacity(upto + 1);
    let mut extra = Vec::with_capacity(upto + 1);
    for k in 0..=upto {
        let state = hist.level(k);
        let mut vs = T::zero();
        let mut ji = T::zero();
        for n in 0..state.nodes() {
            let s = state.s[n];
            if !(s > T::zero()) {
                return Err(AnalysisError::Domain(
                    "S must be positive for the DFE Lyapunov",
                ));
            }
            vs = vs + s0 * phi(s / s0)?;
            ji = ji + state.i[n];
        }
        v.push(vs + ji);
        extra.push(c * ji);
    }
    Ok(Aggregates { v, extra })
}

fn ee_aggregates<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    estar: &EquilibriumPoint<T>,
    upto: usize,
) -> Result<Aggregates<T>, AnalysisError> {
    if !(estar.s > T::zero()) || !(estar.i > T::zero()) {
        return Err(AnalysisError::Domain(
            "endemic equilibrium must be interior",
        ));
    }
    let c = p.beta * estar.s * f.eval(estar.i);
    let mut v = Vec::with_capacity(upto + 1);
    let mut extra = Vec::with_capacity(upto + 1);
    for k in 0..=upto {
        let state = hist.level(k);
        let mut h12 = T::zero();
        let mut h3 = T::zero();
        for n in 0..state.nodes() {
            let s = state.s[n];
            let i = state.i[n];
            if !(s > T::zero()) || !(i > T::zero()) {
                return Err(AnalysisError::Domain(
                    "S and I must be positive for the endemic Lyapunov",
                ));
            }
            h12 = h12 + estar.s * phi(s / estar.s)? + estar.i * phi(i / estar.i)?;
            h3 = h3 + phi(i / estar.i)?;
        }
        v.push(h12);
        extra.push(c * h3);
    }
    Ok(Aggregates { v, extra })
}

/// Memory Lyapunov evaluator shared by the disease-free and endemic cases.
struct MemoryLyapunov<T: Real> {
    agg: Aggregates<T>,
    lw: LyapunovWeights<T>,
}

impl<T: Real> MemoryLyapunov<T> {
    fn new(agg: Aggregates<T>, alpha: FractionalOrder<T>, dt: T, max_level: usize) -> Self {
        Self {
            agg,
            lw: LyapunovWeights::new(alpha, dt, max_level + 1),
        }
    }

    /// `W^m = sum_{i=1}^m w_{m+1-i} v^i + extra^m`, `m >= 1`; ascending i
    /// adds the smallest weights first.
    fn value(&self, m: usize) -> T {
        let mut acc = T::zero();
        for i in 1..=m {
            acc = acc + self.lw.w(m + 1 - i) * self.agg.v[i];
        }
        acc + self.agg.extra[m]
    }

    /// `b_k W^0` without the division by `b_k`, i.e.
    /// `sum_{i=1}^{k+1} w_i b_{k+1-i} v^0`; well defined for every order
    /// including the classical collapse.
    fn anchor_product(&self, k: usize) -> T {
        let b = self.lw.l1();
        let mut acc = T::zero();
        for i in 1..=k + 1 {
            acc = acc + self.lw.w(i) * b.b(k + 1 - i);
        }
        acc * self.agg.v[0]
    }

    /// The boundary value `W^0` anchored to target level `k+1`, following
    /// the stated convention `(sum_i w_i b_{k+1-i}) v^0 / b_k`. At
    /// `alpha = 1` the convention degenerates (0/0 for k >= 1) and the
    /// continuous limit `w_1 v^0` is returned instead.
    fn anchor(&self, k: usize) -> T {
        if self.lw.alpha().is_classical() {
            return self.lw.w(1) * self.agg.v[0];
        }
        self.anchor_product(k) / self.lw.l1().b(k)
    }

    /// `delta^alpha W^{k+1}` evaluated with the level-0 anchor above;
    /// `values[m]` must hold `W^m` for `m = 1..=k+1` (index 0 unused).
    fn delta(&self, k: usize, values: &[T]) -> T {
        let b = self.lw.l1();
        let mut acc = T::zero();
        for j in (1..=k).rev() {
            acc = acc + b.diff(j) * values[k + 1 - j];
        }
        self.lw.scale() * (values[k + 1] - self.anchor_product(k) - acc)
    }
}

fn dfe_evaluator<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    upto: usize,
) -> Result<MemoryLyapunov<T>, AnalysisError> {
    if upto >= hist.len() {
        return Err(AnalysisError::BadInput("level beyond stored history"));
    }
    let agg = dfe_aggregates(hist, p, f, upto)?;
    Ok(MemoryLyapunov::new(
        agg,
        hist.alpha(),
        hist.dt(),
        hist.len(),
    ))
}

fn ee_evaluator<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    estar: &EquilibriumPoint<T>,
    upto: usize,
) -> Result<MemoryLyapunov<T>, AnalysisError> {
    if upto >= hist.len() {
        return Err(AnalysisError::BadInput("level beyond stored history"));
    }
    let agg = ee_aggregates(hist, p, f, estar, upto)?;
    Ok(MemoryLyapunov::new(
        agg,
        hist.alpha(),
        hist.dt(),
        hist.len(),
    ))
}

/// The disease-free Lyapunov value
/// `W^m = sum_{i=1}^m w_{m+1-i} V^i + beta S_0 f'(0) sum_n I_n^m` at level
/// `m >= 1`.
pub fn lyapunov_dfe<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    level: usize,
) -> Result<T, AnalysisError> {
    if level == 0 {
        return Err(AnalysisError::BadInput(
            "level 0 is the anchor; use lyapunov_dfe_anchor",
        ));
    }
    Ok(dfe_evaluator(hist, p, f, level)?.value(level))
}

/// The k-dependent boundary value `W^0` for the disease-free Lyapunov
/// series targeting level `k+1 = target_level`.
pub fn lyapunov_dfe_anchor<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    target_level: usize,
) -> Result<T, AnalysisError> {
    if target_level == 0 {
        return Err(AnalysisError::BadInput("target level must be >= 1"));
    }
    Ok(dfe_evaluator(hist, p, f, 0)?.anchor(target_level - 1))
}

/// The endemic Lyapunov value
/// `W^m = sum w_{m+1-i} (H_1^i + H_2^i) + beta S* f(I*) sum_n Phi(I_n^m/I*)`
/// at level `m >= 1`. Zero exactly when the history sits at the equilibrium.
pub fn lyapunov_ee<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    estar: &EquilibriumPoint<T>,
    level: usize,
) -> Result<T, AnalysisError> {
    if level == 0 {
        return Err(AnalysisError::BadInput(
            "level 0 is the anchor; use lyapunov_ee_anchor",
        ));
    }
    Ok(ee_evaluator(hist, p, f, estar, level)?.value(level))
}

/// The k-dependent boundary value `W^0` for the endemic Lyapunov series.
pub fn lyapunov_ee_anchor<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    estar: &EquilibriumPoint<T>,
    target_level: usize,
) -> Result<T, AnalysisError> {
    if target_level == 0 {
        return Err(AnalysisError::BadInput("target level must be >= 1"));
    }
    Ok(ee_evaluator(hist, p, f, estar, 0)?.anchor(target_level - 1))
}

/// Apply the discrete Caputo operator to a scalar series at index `upto`.
pub fn fractional_difference_of<T: Real>(
    series: &[T],
    alpha: FractionalOrder<T>,
    dt: T,
    upto: usize,
) -> Result<T, FracOpsError> {
    if upto + 1 > series.len() {
        return Err(FracOpsError::HistoryTooShort);
    }
    caputo_l1(&series[..=upto], alpha, dt)
}

/// Outcome of checking the discrete Volterra-type inequality
/// `delta^alpha (x - 1 - ln x) <= (1 - 1/x) delta^alpha x` on a positive
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma22Report<T: Real> {
    /// Indices checked (all n >= 1 up to the series length).
    pub checked: usize,
    pub violations: usize,
    /// First violating index with its excess, if any.
    pub first_violation: Option<(usize, T)>,
    /// Largest observed `lhs - rhs` (negative when the inequality is strict
    /// everywhere).
    pub max_excess: T,
}

impl<T: Real> Lemma22Report<T> {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Check the inequality at every index of a positive series, with additive
/// round-off slack.
pub fn check_lemma22<T: Real>(
    series: &[T],
    alpha: FractionalOrder<T>,
    dt: T,
    slack: T,
) -> Result<Lemma22Report<T>, AnalysisError> {
    if series.len() < 2 {
        return Err(AnalysisError::BadInput("series needs at least two entries"));
    }
    if series.iter().any(|&x| !(x > T::zero())) {
        return Err(AnalysisError::Domain("series must be strictly positive"));
    }
    let n_max = series.len() - 1;
    let weights = L1Weights::compute(alpha, n_max);
    let rho = alpha.l1_scale(dt);
    let transformed: Vec<T> = series.iter().map(|&x| x - T::one() - x.ln()).collect();
    let telescoped = |h: &[T], n: usize| -> T {
        let mut acc = T::zero();
        for j in (1..n).rev() {
            acc = acc + weights.diff(j) * h[n - j];
        }
        rho * (h[n] - weights.b(n - 1) * h[0] - acc)
    };
    let mut report = Lemma22Report {
        checked: 0,
        violations: 0,
        first_violation: None,
        max_excess: T::neg_infinity(),
    };
    for n in 1..=n_max {
        let lhs = telescoped(&transformed, n);
        let rhs = (T::one() - series[n].recip()) * telescoped(series, n);
        let excess = lhs - rhs;
        report.checked += 1;
        report.max_excess = report.max_excess.max(excess);
        if excess > slack {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some((n, excess));
            }
        }
    }
    Ok(report)
}

/// Outcome of checking the weight-shift identity for memory sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma34Report<T: Real> {
    pub lhs: T,
    pub rhs: T,
    pub rel_err: T,
}

impl<T: Real> Lemma34Report<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.rel_err <= tol
    }
}

/// Verify `delta^alpha u^{k+1} = sum_{i=1}^{k+1} w_{k+2-i} delta^alpha h^i`
/// for `u^{m} = sum_{i=1}^{m} w_{m+1-i} h^i` with the stated level-0
/// anchor, where `h` covers levels `0..=k+1` and `w` supplies
/// `w_1..w_{k+1}` (arbitrary positive constants).
pub fn check_lemma34<T: Real>(
    h: &[T],
    w: &[T],
    alpha: FractionalOrder<T>,
    dt: T,
) -> Result<Lemma34Report<T>, AnalysisError> {
    if h.len() < 2 {
        return Err(AnalysisError::BadInput("h needs at least two levels"));
    }
    let k = h.len() - 2;
    if w.len() < k + 1 {
        return Err(AnalysisError::BadInput("w must supply k+1 weights"));
    }
    if w.iter().take(k + 1).any(|&x| !(x > T::zero())) {
        return Err(AnalysisError::Domain("weights must be positive"));
    }
    let weights = L1Weights::compute(alpha, k + 1);
    let rho = alpha.l1_scale(dt);
    // u^m for m = 1..=k+1; index 0 left untouched (the anchor enters as a
    // product, which also covers alpha = 1 where b_k = 0).
    let mut u = vec![T::zero(); k + 2];
    for (m, slot) in u.iter_mut().enumerate().skip(1) {
        let mut acc = T::zero();
        for i in 1..=m {
            acc = acc + w[m - i] * h[i];
        }
        *slot = acc;
    }
    let mut anchor = T::zero();
    for i in 1..=k + 1 {
        anchor = anchor + w[i - 1] * weights.b(k + 1 - i);
    }
    anchor = anchor * h[0];
    let mut mem = T::zero();
    for j in (1..=k).rev() {
        mem = mem + weights.diff(j) * u[k + 1 - j];
    }
    let lhs = rho * (u[k + 1] - anchor - mem);

    let mut rhs = T::zero();
    for i in 1..=k + 1 {
        let mut acc = T::zero();
        for j in (1..i).rev() {
            acc = acc + weights.diff(j) * h[i - j];
        }
        let delta_h = rho * (h[i] - weights.b(i - 1) * h[0] - acc);
        rhs = rhs + w[k + 1 - i] * delta_h;
    }
    let rel_err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(real::<T>(1e-300));
    Ok(Lemma34Report { lhs, rhs, rel_err })
}

/// Total mass per level together with its uniform upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MassReport<T: Real> {
    /// `G^k = sum_n (S + I + R)` for every stored level.
    pub series: Vec<T>,
    /// `(G^0 + (M+1) g lambda)(1 + g mu~)/(g mu~)^2` with
    /// `mu~ = min(mu, gamma, delta)`; the recruitment term is summed over
    /// the `M+1` grid nodes, which is what the per-node recursion yields.
    pub bound: T,
}

/// Mass series and bound for a finished run.
pub fn mass_series<T: Real>(hist: &HistoryBuffer<T>, p: &ModelParams<T>) -> MassReport<T> {
    let series: Vec<T> = (0..hist.len())
        .map(|k| hist.level(k).total_mass())
        .collect();
    let g = hist.g();
    let mu = p.min_death_rate();
    let nodes = real::<T>(hist.level(0).nodes() as f64);
    let bound = (series[0] + nodes * g * p.lambda) * (T::one() + g * mu) / (g * mu).powi(2);
    MassReport { series, bound }
}

/// One row of the decay diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<T: Real> {
    /// Time level `k+1` the record describes.
    pub level: usize,
    /// Total mass `G` at this level.
    pub mass: T,
    /// Lyapunov value `W`.
    pub lyapunov: T,
    /// Fractional difference `delta^alpha W`.
    pub delta: T,
    /// Sup-norm distance to the target equilibrium.
    pub dist: T,
    /// True when `delta` exceeds the decay slack.
    pub flagged: bool,
}

/// Decay diagnostic over a whole trajectory.
#[derive(Debug, Clone)]
pub struct DecayReport<T: Real> {
    pub records: Vec<TraceRecord<T>>,
    /// Largest observed fractional difference.
    pub max_delta: T,
    /// Steps whose fractional difference exceeded the slack.
    pub violations: usize,
    pub slack: T,
}

impl<T: Real> DecayReport<T> {
    pub fn decays(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluate the Lyapunov function, its fractional difference and the
/// distance to the target equilibrium at every level of a finished run.
///
/// A step is flagged when `delta^alpha W > slack`; the slack absorbs
/// round-off in the O(K)-term sums, for which exact nonpositivity is not
/// attainable.
pub fn decay_report<T: Real>(
    hist: &HistoryBuffer<T>,
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    target: &DecayTarget<T>,
    slack: T,
) -> Result<DecayReport<T>, AnalysisError> {
    let last = hist.len() - 1;
    if last == 0 {
        return Err(AnalysisError::BadInput("history has no computed steps"));
    }
    let (eval, point) = match target {
        DecayTarget::DiseaseFree => {
            let e0 = crate::epidemics::disease_free_equilibrium(p);
            (dfe_evaluator(hist, p, f, last)?, e0)
        }
        DecayTarget::Endemic(estar) => (ee_evaluator(hist, p, f, estar, last)?, *estar),
    };
    let mut values = vec![T::zero(); last + 1];
    for (m, slot) in values.iter_mut().enumerate().skip(1) {
        *slot = eval.value(m);
    }
    let mut records = Vec::with_capacity(last);
    let mut max_delta = T::neg_infinity();
    let mut violations = 0;
    for k in 0..last {
        let level = k + 1;
        let delta = eval.delta(k, &values);
        let flagged = delta > slack;
        if flagged {
            violations += 1;
        }
        max_delta = max_delta.max(delta);
        records.push(TraceRecord {
            level,
            mass: hist.level(level).total_mass(),
            lyapunov: values[level],
            delta,
            dist: hist.level(level).sup_distance_to(&point),
            flagged,
        });
    }
    Ok(DecayReport {
        records,
        max_delta,
        violations,
        slack,
    })
}
