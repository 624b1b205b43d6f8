//! The implicit L1/NSFD scheme: per-step tridiagonal assembly and solve,
//! full-history time stepping, and the classical-order reduction.
//!
//! Each step advances the three fields in the order S, then I, then R: the
//! freshly solved `S^{k+1}` enters the right-hand side of the I system and
//! `I^{k+1}` enters the R system, while the incidence term is lagged at
//! `f(I^k)`. That lag is what keeps every solve linear and every matrix an
//! M-matrix, so states stay nonnegative for any step sizes.

mod tridiag;

pub use tridiag::{thomas_solve, Tridiagonal};

use crate::epidemics::{EquilibriumPoint, Incidence, ModelParams};
use crate::fracops::{FractionalOrder, L1Weights};
use crate::{real, Real};
use std::fmt;

/// Errors from grid construction and time stepping.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Grid parameter out of range; carries the offending field name.
    InvalidGrid(&'static str),
    /// Initial state violates positivity requirements.
    InvalidInitialState(&'static str),
    /// Diagonal/off-diagonal/rhs lengths are inconsistent.
    ShapeMismatch,
    /// A step matrix lost strict diagonal dominance (mis-assembly).
    DominanceViolation { step: Option<usize> },
    /// A solve produced NaN or infinity at the given step.
    NonFiniteState { step: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidGrid(name) => write!(f, "invalid grid parameter: {name}"),
            Self::InvalidInitialState(what) => write!(f, "invalid initial state: {what}"),
            Self::ShapeMismatch => write!(f, "tridiagonal system shape mismatch"),
            Self::DominanceViolation { step: Some(k) } => {
                write!(f, "strict diagonal dominance violated at step {k}")
            }
            Self::DominanceViolation { step: None } => {
                write!(f, "strict diagonal dominance violated")
            }
            Self::NonFiniteState { step } => {
                write!(f, "non-finite state produced at step {step}")
            }
        }
    }
}

impl std::error::Error for SolverError {}

/// Uniform 1-D grid over `[a, b]` with `M` subintervals plus the time step
/// and the step budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T: Real> {
    a: T,
    b: T,
    m: usize,
    dx: T,
    dt: T,
    steps: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(a: T, b: T, m: usize, dt: T, steps: usize) -> Result<Self, SolverError> {
        if m < 2 {
            return Err(SolverError::InvalidGrid("M"));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(SolverError::InvalidGrid("domain"));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(SolverError::InvalidGrid("dt"));
        }
        if steps < 1 {
            return Err(SolverError::InvalidGrid("steps"));
        }
        let dx = (b - a) / real::<T>(m as f64);
        Ok(Self {
            a,
            b,
            m,
            dx,
            dt,
            steps,
        })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Subinterval count; grid nodes run n = 0..=M.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Coordinate of node n.
    pub fn node(&self, n: usize) -> T {
        self.a + real::<T>(n as f64) * self.dx
    }
}

/// One of the three population fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    S,
    I,
    R,
}

/// One time level of the three fields on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T: Real> {
    pub s: Vec<T>,
    pub i: Vec<T>,
    pub r: Vec<T>,
    /// Time index of this level.
    pub k: usize,
}

impl<T: Real> FieldState<T> {
    pub fn nodes(&self) -> usize {
        self.s.len()
    }

    pub fn field(&self, which: Field) -> &[T] {
        match which {
            Field::S => &self.s,
            Field::I => &self.i,
            Field::R => &self.r,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.s
            .iter()
            .chain(&self.i)
            .chain(&self.r)
            .all(|v| v.is_finite())
    }

    pub fn min_entry(&self) -> T {
        self.s
            .iter()
            .chain(&self.i)
            .chain(&self.r)
            .fold(T::infinity(), |m, &v| m.min(v))
    }

    /// Sum of all three fields over all nodes (the total mass `G^k`).
    pub fn total_mass(&self) -> T {
        let mut acc = T::zero();
        for n in 0..self.nodes() {
            acc = acc + self.s[n] + self.i[n] + self.r[n];
        }
        acc
    }

    /// Sup-norm difference against another level.
    pub fn sup_distance(&self, other: &FieldState<T>) -> T {
        let mut d = T::zero();
        for n in 0..self.nodes() {
            d = d
                .max((self.s[n] - other.s[n]).abs())
                .max((self.i[n] - other.i[n]).abs())
                .max((self.r[n] - other.r[n]).abs());
        }
        d
    }

    /// Sup-norm distance to a spatially homogeneous equilibrium.
    pub fn sup_distance_to(&self, e: &EquilibriumPoint<T>) -> T {
        let mut d = T::zero();
        for n in 0..self.nodes() {
            d = d
                .max((self.s[n] - e.s).abs())
                .max((self.i[n] - e.i).abs())
                .max((self.r[n] - e.r).abs());
        }
        d
    }
}

/// Initial data for the three fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition<T: Real> {
    /// Spatially constant values.
    Constant { s: T, i: T, r: T },
    /// The reproduction preset: `S = 0.5`, `I = R = exp(-n dx)`.
    Decaying,
}

impl<T: Real> InitialCondition<T> {
    /// Materialize the level-0 state; requires `S > 0` and `I, R >= 0`.
    pub fn build(&self, grid: &GridSpec<T>) -> Result<FieldState<T>, SolverError> {
        let nodes = grid.m() + 1;
        let state = match *self {
            Self::Constant { s, i, r } => FieldState {
                s: vec![s; nodes],
                i: vec![i; nodes],
                r: vec![r; nodes],
                k: 0,
            },
            Self::Decaying => {
                let decay: Vec<T> = (0..nodes)
                    .map(|n| (-real::<T>(n as f64) * grid.dx()).exp())
                    .collect();
                FieldState {
                    s: vec![real::<T>(0.5); nodes],
                    i: decay.clone(),
                    r: decay,
                    k: 0,
                }
            }
        };
        if !state.is_finite() {
            return Err(SolverError::InvalidInitialState("non-finite entry"));
        }
        if state.s.iter().any(|&v| !(v > T::zero())) {
            return Err(SolverError::InvalidInitialState(
                "S must be strictly positive",
            ));
        }
        if state.i.iter().chain(&state.r).any(|&v| !(v >= T::zero())) {
            return Err(SolverError::InvalidInitialState(
                "I and R must be nonnegative",
            ));
        }
        Ok(state)
    }
}

/// The full trajectory computed so far plus the scheme constants
/// `r_i = d_i Gamma(2-alpha) dt^alpha / dx^2` and `g = Gamma(2-alpha) dt^alpha`.
///
/// The L1 memory sum needs every past level, so the buffer keeps all of
/// them: storage is O((M+1) K) and a run costs O(K^2) in time, accepted at
/// desk scale.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T: Real> {
    states: Vec<FieldState<T>>,
    weights: L1Weights<T>,
    dt: T,
    dx: T,
    r: [T; 3],
    g: T,
}

impl<T: Real> HistoryBuffer<T> {
    pub fn new(
        p: &ModelParams<T>,
        grid: &GridSpec<T>,
        alpha: FractionalOrder<T>,
        initial: FieldState<T>,
    ) -> Result<Self, SolverError> {
        if initial.nodes() != grid.m() + 1
            || initial.i.len() != initial.s.len()
            || initial.r.len() != initial.s.len()
        {
            return Err(SolverError::ShapeMismatch);
        }
        if !initial.is_finite() || initial.min_entry() < T::zero() {
            return Err(SolverError::InvalidInitialState(
                "entries must be finite and nonnegative",
            ));
        }
        let g = alpha.step_factor(grid.dt());
        let dx2 = grid.dx() * grid.dx();
        let r = [p.d1 * g / dx2, p.d2 * g / dx2, p.d3 * g / dx2];
        Ok(Self {
            states: vec![FieldState { k: 0, ..initial }],
            weights: L1Weights::compute(alpha, grid.steps()),
            dt: grid.dt(),
            dx: grid.dx(),
            r,
            g,
        })
    }

    /// Wrap an externally produced trajectory (e.g. parsed from a CSV) so
    /// the analysis layer can run over it. Levels must be shape-consistent
    /// and contiguously indexed from 0; entries are taken as-is, so
    /// downstream checks can flag defective data.
    pub fn from_states(
        p: &ModelParams<T>,
        grid: &GridSpec<T>,
        alpha: FractionalOrder<T>,
        states: Vec<FieldState<T>>,
    ) -> Result<Self, SolverError> {
        if states.is_empty() {
            return Err(SolverError::ShapeMismatch);
        }
        for (k, st) in states.iter().enumerate() {
            if st.nodes() != grid.m() + 1
                || st.i.len() != st.s.len()
                || st.r.len() != st.s.len()
                || st.k != k
            {
                return Err(SolverError::ShapeMismatch);
            }
        }
        let g = alpha.step_factor(grid.dt());
        let dx2 = grid.dx() * grid.dx();
        let r = [p.d1 * g / dx2, p.d2 * g / dx2, p.d3 * g / dx2];
        let weights = L1Weights::compute(alpha, states.len().max(grid.steps()));
        Ok(Self {
            states,
            weights,
            dt: grid.dt(),
            dx: grid.dx(),
            r,
            g,
        })
    }

    pub fn alpha(&self) -> FractionalOrder<T> {
        self.weights.alpha()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// `g = Gamma(2-alpha) dt^alpha`.
    pub fn g(&self) -> T {
        self.g
    }

    /// `r_i` for field i (0 = S, 1 = I, 2 = R).
    pub fn r(&self, field: Field) -> T {
        match field {
            Field::S => self.r[0],
            Field::I => self.r[1],
            Field::R => self.r[2],
        }
    }

    /// Number of stored levels (current index + 1).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level(&self, k: usize) -> &FieldState<T> {
        &self.states[k]
    }

    pub fn last(&self) -> &FieldState<T> {
        self.states.last().expect("buffer holds at least level 0")
    }

    pub fn weights(&self) -> &L1Weights<T> {
        &self.weights
    }

    /// Time series of one field at one node across all stored levels.
    pub fn node_series(&self, field: Field, n: usize) -> Vec<T> {
        self.states.iter().map(|st| st.field(field)[n]).collect()
    }

    /// The L1 memory right-hand side for one field at the current step:
    /// `b_k X^0 + sum_{j=1}^k (b_{j-1} - b_j) X^{k+1-j}`, accumulated from
    /// the smallest weights up to limit round-off.
    pub fn memory_rhs(&self, field: Field) -> Vec<T> {
        let k = self.states.len() - 1;
        let nodes = self.states[0].nodes();
        let b_k = self.weights.b(k);
        let first = self.states[0].field(field);
        let mut acc: Vec<T> = (0..nodes).map(|n| b_k * first[n]).collect();
        for j in (1..=k).rev() {
            let w = self.weights.diff(j);
            let level = self.states[k + 1 - j].field(field);
            for n in 0..nodes {
                acc[n] = acc[n] + w * level[n];
            }
        }
        acc
    }

    fn push(&mut self, state: FieldState<T>) {
        self.states.push(state);
    }

    fn ensure_weights(&mut self, upto: usize) {
        self.weights.ensure(upto);
    }
}

/// Diffusion-plus-reaction matrix: `1 + c r + linear(n)` on the diagonal
/// with `c = 2` at interior nodes and `c = 1` at the two Neumann rows
/// (the mirrored ghost node folds one off-diagonal into the diagonal),
/// and `-r` on both off-diagonals.
fn scheme_matrix<T: Real>(nodes: usize, r: T, linear: impl Fn(usize) -> T) -> Tridiagonal<T> {
    let two = real::<T>(2.0);
    let mut diag = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let c = match (n == 0, n + 1 == nodes) {
            (true, true) => T::zero(),
            (true, false) | (false, true) => T::one(),
            (false, false) => two,
        };
        diag.push(T::one() + c * r + linear(n));
    }
    Tridiagonal {
        lower: vec![-r; nodes - 1],
        diag,
        upper: vec![-r; nodes - 1],
    }
}

fn assemble_s_core<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    r1: T,
    g: T,
    memory: Vec<T>,
    i_prev: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    let nodes = memory.len();
    let matrix = scheme_matrix(nodes, r1, |n| {
        g * p.beta * f.eval(i_prev[n]) + g * p.gamma_s
    });
    let mut rhs = memory;
    for v in rhs.iter_mut() {
        *v = *v + g * p.lambda;
    }
    (matrix, rhs)
}

fn assemble_i_core<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    r2: T,
    g: T,
    memory: Vec<T>,
    s_next: &[T],
    i_prev: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    let nodes = memory.len();
    let removal = g * p.removal();
    let matrix = scheme_matrix(nodes, r2, |_| removal);
    let mut rhs = memory;
    for (n, v) in rhs.iter_mut().enumerate() {
        *v = *v + g * p.beta * s_next[n] * f.eval(i_prev[n]);
    }
    (matrix, rhs)
}

fn assemble_r_core<T: Real>(
    p: &ModelParams<T>,
    r3: T,
    g: T,
    memory: Vec<T>,
    i_next: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    let nodes = memory.len();
    let decay = g * p.delta;
    let matrix = scheme_matrix(nodes, r3, |_| decay);
    let mut rhs = memory;
    for (n, v) in rhs.iter_mut().enumerate() {
        *v = *v + g * p.r * i_next[n];
    }
    (matrix, rhs)
}

/// Assemble the S system at the buffer's current step: the diagonal carries
/// `1 + {1,2} r_1 + g beta f(I_n^k) + g gamma`, the right-hand side the L1
/// memory sum plus `g lambda`.
pub fn assemble_s<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    hist: &HistoryBuffer<T>,
    i_prev: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    assemble_s_core(
        p,
        f,
        hist.r(Field::S),
        hist.g(),
        hist.memory_rhs(Field::S),
        i_prev,
    )
}

/// Assemble the I system; `s_next` is the already-solved `S^{k+1}`. The
/// matrix does not depend on the state.
pub fn assemble_i<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    hist: &HistoryBuffer<T>,
    s_next: &[T],
    i_prev: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    assemble_i_core(
        p,
        f,
        hist.r(Field::I),
        hist.g(),
        hist.memory_rhs(Field::I),
        s_next,
        i_prev,
    )
}

/// Assemble the R system; `i_next` is the already-solved `I^{k+1}`.
pub fn assemble_r<T: Real>(
    p: &ModelParams<T>,
    hist: &HistoryBuffer<T>,
    i_next: &[T],
) -> (Tridiagonal<T>, Vec<T>) {
    assemble_r_core(
        p,
        hist.r(Field::R),
        hist.g(),
        hist.memory_rhs(Field::R),
        i_next,
    )
}

fn solve_block<T: Real>(
    matrix: &Tridiagonal<T>,
    rhs: &[T],
    step_index: usize,
) -> Result<Vec<T>, SolverError> {
    let x = thomas_solve(matrix, rhs).map_err(|e| match e {
        SolverError::DominanceViolation { .. } => SolverError::DominanceViolation {
            step: Some(step_index),
        },
        other => other,
    })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteState { step: step_index });
    }
    Ok(x)
}

/// Advance the buffer by one step of the L1/NSFD scheme and return the new
/// level. Solves S, then I, then R.
pub fn step<'h, T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    hist: &'h mut HistoryBuffer<T>,
) -> Result<&'h FieldState<T>, SolverError> {
    let k = hist.len() - 1;
    hist.ensure_weights(k);
    let i_prev = hist.last().i.clone();

    let (mat_s, rhs_s) = assemble_s(p, f, hist, &i_prev);
    let s_next = solve_block(&mat_s, &rhs_s, k + 1)?;

    let (mat_i, rhs_i) = assemble_i(p, f, hist, &s_next, &i_prev);
    let i_next = solve_block(&mat_i, &rhs_i, k + 1)?;

    let (mat_r, rhs_r) = assemble_r(p, hist, &i_next);
    let r_next = solve_block(&mat_r, &rhs_r, k + 1)?;

    hist.push(FieldState {
        s: s_next,
        i: i_next,
        r: r_next,
        k: k + 1,
    });
    Ok(hist.last())
}

/// One step of the classical (`alpha = 1`) scheme: implicit central
/// diffusion, lagged incidence, no memory sum. Matches `step` bitwise when
/// the latter runs with `alpha = 1`, because the L1 weights then collapse
/// exactly and `g` reduces exactly to `dt`.
pub fn euler_step<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    prev: &FieldState<T>,
    dt: T,
    dx: T,
) -> Result<FieldState<T>, SolverError> {
    let g = dt;
    let dx2 = dx * dx;
    let step_index = prev.k + 1;

    let (mat_s, rhs_s) = assemble_s_core(p, f, p.d1 * g / dx2, g, prev.s.clone(), &prev.i);
    let s_next = solve_block(&mat_s, &rhs_s, step_index)?;

    let (mat_i, rhs_i) = assemble_i_core(p, f, p.d2 * g / dx2, g, prev.i.clone(), &s_next, &prev.i);
    let i_next = solve_block(&mat_i, &rhs_i, step_index)?;

    let (mat_r, rhs_r) = assemble_r_core(p, p.d3 * g / dx2, g, prev.r.clone(), &i_next);
    let r_next = solve_block(&mat_r, &rhs_r, step_index)?;

    Ok(FieldState {
        s: s_next,
        i: i_next,
        r: r_next,
        k: step_index,
    })
}

/// Early-termination settings for [`simulate_with`]: stop once the sup-norm
/// change across `window` steps drops below `tol`. A zero window disables
/// the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions<T: Real> {
    pub window: usize,
    pub tol: T,
}

impl<T: Real> Default for SimulateOptions<T> {
    fn default() -> Self {
        Self {
            window: 50,
            tol: real::<T>(1e-10),
        }
    }
}

/// Reported when a run terminates before exhausting its step budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport<T: Real> {
    /// Step at which the window criterion fired.
    pub step: usize,
    pub window: usize,
    pub tol: T,
}

/// A finished run: the full history plus an optional early-termination
/// report.
#[derive(Debug, Clone)]
pub struct Simulation<T: Real> {
    pub history: HistoryBuffer<T>,
    pub convergence: Option<ConvergenceReport<T>>,
}

/// Run the scheme for up to `grid.steps()` steps from the given initial
/// condition.
pub fn simulate<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    grid: &GridSpec<T>,
    ic: &InitialCondition<T>,
    alpha: FractionalOrder<T>,
) -> Result<Simulation<T>, SolverError> {
    simulate_with(p, f, grid, ic, alpha, &SimulateOptions::default())
}

pub fn simulate_with<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    grid: &GridSpec<T>,
    ic: &InitialCondition<T>,
    alpha: FractionalOrder<T>,
    opts: &SimulateOptions<T>,
) -> Result<Simulation<T>, SolverError> {
    let initial = ic.build(grid)?;
    let mut hist = HistoryBuffer::new(p, grid, alpha, initial)?;
    let mut convergence = None;
    for _ in 0..grid.steps() {
        step(p, f, &mut hist)?;
        let k = hist.len() - 1;
        if opts.window > 0 && k >= opts.window {
            let drift = hist.level(k).sup_distance(hist.level(k - opts.window));
            if drift < opts.tol {
                convergence = Some(ConvergenceReport {
                    step: k,
                    window: opts.window,
                    tol: opts.tol,
                });
                break;
            }
        }
    }
    Ok(Simulation {
        history: hist,
        convergence,
    })
}
