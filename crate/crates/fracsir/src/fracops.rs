//! Fractional-calculus substrate: the Gamma function, the L1 weight
//! sequence `b_j = (j+1)^{1-alpha} - j^{1-alpha}`, and the discrete Caputo
//! derivative built from them.
//!
//! Two algebraically equivalent forms of the L1 operator are provided. The
//! telescoped form is what the solver uses; the direct difference-sum form
//! exists as a cheap independent oracle for tests.

use crate::{real, Real};
use std::fmt;

/// Errors from fractional-operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracOpsError {
    /// Argument outside the supported domain (e.g. `x <= 0` for Gamma).
    Domain,
    /// Fractional order outside `(0, 1]`.
    InvalidOrder,
    /// A history slice with fewer than two entries was passed to the
    /// Caputo operator.
    HistoryTooShort,
    /// Nonpositive time step.
    InvalidStep,
}

impl fmt::Display for FracOpsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain => write!(f, "argument outside function domain"),
            Self::InvalidOrder => write!(f, "fractional order must lie in (0, 1]"),
            Self::HistoryTooShort => write!(f, "history must contain at least two levels"),
            Self::InvalidStep => write!(f, "time step must be positive"),
        }
    }
}

impl std::error::Error for FracOpsError {}

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients, kept at
// their published precision).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for strictly positive arguments.
///
/// Integral arguments take an exact factorial path (so `gamma(1) == 1` and
/// `gamma(2) == 1` hold bitwise, which the `alpha = 1` reductions rely on);
/// everything else goes through a fixed-coefficient Lanczos evaluation with
/// reflection below `x = 0.5`.
pub fn gamma<T: Real>(x: T) -> Result<T, FracOpsError> {
    if !(x > T::zero()) {
        return Err(FracOpsError::Domain);
    }
    if x == x.trunc() && x <= real::<T>(170.0) {
        let mut acc = T::one();
        let mut i = T::one();
        while i < x {
            acc = acc * i;
            i = i + T::one();
        }
        return Ok(acc);
    }
    if x < real::<T>(0.5) {
        // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x)).
        let pi = real::<T>(std::f64::consts::PI);
        let denom = (pi * x).sin() * lanczos(T::one() - x);
        return Ok(pi / denom);
    }
    Ok(lanczos(x))
}

fn lanczos<T: Real>(x: T) -> T {
    let z = x - T::one();
    let mut acc = real::<T>(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc = acc + real::<T>(c) / (z + real::<T>(i as f64));
    }
    let t = z + real::<T>(LANCZOS_G) + real::<T>(0.5);
    let sqrt_2pi = real::<T>((2.0 * std::f64::consts::PI).sqrt());
    sqrt_2pi * t.powf(z + real::<T>(0.5)) * (-t).exp() * acc
}

/// Fractional order `alpha` with `0 < alpha <= 1`.
///
/// `alpha = 1` is admitted and selects the exact collapse of the L1 scheme
/// to the classical forward difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder<T: Real>(T);

impl<T: Real> FractionalOrder<T> {
    pub fn new(alpha: T) -> Result<Self, FracOpsError> {
        if alpha > T::zero() && alpha <= T::one() {
            Ok(Self(alpha))
        } else {
            Err(FracOpsError::InvalidOrder)
        }
    }

    pub fn get(self) -> T {
        self.0
    }

    /// True when `alpha = 1` exactly (the classical, memoryless case).
    pub fn is_classical(self) -> bool {
        self.0 == T::one()
    }

    /// `Gamma(2 - alpha) * dt^alpha`, the step factor the scheme calls `g`.
    pub fn step_factor(self, dt: T) -> T {
        gamma(real::<T>(2.0) - self.0).expect("2 - alpha is positive") * dt.powf(self.0)
    }

    /// `dt^{-alpha} / Gamma(2 - alpha)`, the scale in front of the L1 sum.
    pub fn l1_scale(self, dt: T) -> T {
        dt.powf(-self.0) / gamma(real::<T>(2.0) - self.0).expect("2 - alpha is positive")
    }
}

/// The L1 coefficient sequence `b_j = (j+1)^{1-alpha} - j^{1-alpha}`,
/// j = 0..n, computed once per run length and shared.
///
/// `b_0 = 1` exactly for every order, and for `alpha = 1` all later
/// coefficients vanish exactly, which makes the scheme's memory sum reduce
/// to the previous time level alone.
#[derive(Debug, Clone)]
pub struct L1Weights<T: Real> {
    alpha: FractionalOrder<T>,
    b: Vec<T>,
}

impl<T: Real> L1Weights<T> {
    /// Compute `b_0..b_n`.
    ///
    /// The naive closed form is used; cancellation at very large j is an
    /// accepted limitation since run lengths stay at desk scale (j <= 1e5).
    pub fn compute(alpha: FractionalOrder<T>, n: usize) -> Self {
        let e = T::one() - alpha.get();
        let mut b = Vec::with_capacity(n + 1);
        b.push(T::one());
        for j in 1..=n {
            let jt = real::<T>(j as f64);
            b.push((jt + T::one()).powf(e) - jt.powf(e));
        }
        Self { alpha, b }
    }

    pub fn alpha(&self) -> FractionalOrder<T> {
        self.alpha
    }

    /// Largest index available, i.e. weights cover `b_0..b_n`.
    pub fn max_index(&self) -> usize {
        self.b.len() - 1
    }

    /// `b_j`.
    pub fn b(&self, j: usize) -> T {
        self.b[j]
    }

    /// `b_{j-1} - b_j` for `j >= 1`; strictly positive when `alpha < 1`.
    pub fn diff(&self, j: usize) -> T {
        self.b[j - 1] - self.b[j]
    }

    /// Extend the cached sequence so that `b_n` is available.
    pub fn ensure(&mut self, n: usize) {
        let e = T::one() - self.alpha.get();
        for j in self.b.len()..=n {
            let jt = real::<T>(j as f64);
            self.b.push((jt + T::one()).powf(e) - jt.powf(e));
        }
    }
}

/// Discrete Caputo derivative of `history[0..=n]` at the final level, via
/// the telescoped L1 form
/// `rho * [f_n - b_{n-1} f_0 - sum_{j=1}^{n-1} (b_{j-1} - b_j) f_{n-j}]`
/// with `rho = dt^{-alpha} / Gamma(2 - alpha)`.
pub fn caputo_l1<T: Real>(
    history: &[T],
    alpha: FractionalOrder<T>,
    dt: T,
) -> Result<T, FracOpsError> {
    let weights = L1Weights::compute(alpha, history.len().saturating_sub(1));
    caputo_l1_with(&weights, history, dt)
}

/// Telescoped form reusing a precomputed weight table.
pub fn caputo_l1_with<T: Real>(
    weights: &L1Weights<T>,
    history: &[T],
    dt: T,
) -> Result<T, FracOpsError> {
    if history.len() < 2 {
        return Err(FracOpsError::HistoryTooShort);
    }
    if !(dt > T::zero()) {
        return Err(FracOpsError::InvalidStep);
    }
    let n = history.len() - 1;
    // Smallest weights first to limit round-off.
    let mut acc = T::zero();
    for j in (1..n).rev() {
        acc = acc + weights.diff(j) * history[n - j];
    }
    let s = history[n] - weights.b(n - 1) * history[0] - acc;
    Ok(weights.alpha().l1_scale(dt) * s)
}

/// Direct difference-sum form
/// `rho * sum_{j=0}^{n-1} b_j [f_{n-j} - f_{n-j-1}]`.
///
/// Used only as an independent oracle in tests; agrees with the telescoped
/// form to round-off.
pub fn caputo_l1_direct<T: Real>(
    history: &[T],
    alpha: FractionalOrder<T>,
    dt: T,
) -> Result<T, FracOpsError> {
    if history.len() < 2 {
        return Err(FracOpsError::HistoryTooShort);
    }
    if !(dt > T::zero()) {
        return Err(FracOpsError::InvalidStep);
    }
    let n = history.len() - 1;
    let weights = L1Weights::compute(alpha, n);
    let mut acc = T::zero();
    for j in (0..n).rev() {
        acc = acc + weights.b(j) * (history[n - j] - history[n - j - 1]);
    }
    Ok(alpha.l1_scale(dt) * acc)
}
