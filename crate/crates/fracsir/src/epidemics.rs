//! Model parameters, incidence functions, the basic reproduction number and
//! both equilibria of the SIR reaction-diffusion system.
//!
//! The endemic state is located as the unique interior root of
//! `g(I) = beta (lambda - (mu+r) I) / gamma_s * f(I) - (mu+r) I`
//! on `(0, lambda/(mu+r))`, which exists exactly when `R_0 > 1`.

use crate::{real, Real};
use std::fmt;

/// Errors from parameter validation and equilibrium computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpidemicsError {
    /// A parameter failed validation; carries the offending field name.
    InvalidParameter(&'static str),
    /// `R_0 <= 1`: no endemic equilibrium exists.
    NoEndemicEquilibrium,
    /// The sign scan found no interior sign change; the incidence function
    /// likely violates its assumptions.
    BracketingFailure,
}

impl fmt::Display for EpidemicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(name) => write!(f, "invalid model parameter: {name}"),
            Self::NoEndemicEquilibrium => {
                write!(f, "no endemic equilibrium: reproduction number <= 1")
            }
            Self::BracketingFailure => {
                write!(f, "no sign change found when bracketing the endemic root")
            }
        }
    }
}

impl std::error::Error for EpidemicsError {}

/// Epidemiological rates and diffusion coefficients.
///
/// All rates are strictly positive; diffusivities may be zero (the
/// diffusion-free limit is well defined and used in tests).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T: Real> {
    /// Recruitment rate of the total population.
    pub lambda: T,
    /// Transmission coefficient.
    pub beta: T,
    /// Natural death rate of susceptibles.
    pub gamma_s: T,
    /// Natural death rate of recovered.
    pub delta: T,
    /// Disease-related death rate of infected.
    pub mu: T,
    /// Recovery rate.
    pub r: T,
    /// Diffusivities of S, I, R.
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

impl<T: Real> ModelParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda: T,
        beta: T,
        gamma_s: T,
        delta: T,
        mu: T,
        r: T,
        d1: T,
        d2: T,
        d3: T,
    ) -> Result<Self, EpidemicsError> {
        let positive = [
            (lambda, "lambda"),
            (beta, "beta"),
            (gamma_s, "gamma"),
            (delta, "delta"),
            (mu, "mu"),
            (r, "r"),
        ];
        for (v, name) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(EpidemicsError::InvalidParameter(name));
            }
        }
        let nonneg = [(d1, "d1"), (d2, "d2"), (d3, "d3")];
        for (v, name) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(EpidemicsError::InvalidParameter(name));
            }
        }
        Ok(Self {
            lambda,
            beta,
            gamma_s,
            delta,
            mu,
            r,
            d1,
            d2,
            d3,
        })
    }

    /// `mu + r`, the total removal rate of infected individuals.
    pub fn removal(&self) -> T {
        self.mu + self.r
    }

    /// `min(mu, gamma, delta)`, the rate entering the mass bound.
    pub fn min_death_rate(&self) -> T {
        self.mu.min(self.gamma_s).min(self.delta)
    }
}

/// Incidence function `f(I)` with its derivative at zero.
///
/// Implementations are expected to satisfy: `f(0) = 0` and `f > 0` off zero;
/// `f` nondecreasing with `f(I)/I` nonincreasing; `f(I) <= I f'(0)`. These
/// cannot be proven by sampling, only falsified; see
/// [`check_incidence_assumptions`].
pub trait Incidence<T: Real>: Send + Sync {
    fn eval(&self, i: T) -> T;
    fn slope_at_zero(&self) -> T;
}

/// Bilinear incidence, `f(I) = I`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bilinear;

impl<T: Real> Incidence<T> for Bilinear {
    fn eval(&self, i: T) -> T {
        i
    }

    fn slope_at_zero(&self) -> T {
        T::one()
    }
}

/// Saturated incidence, `f(I) = I / (w + I)` with saturation constant `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturated<T: Real> {
    w: T,
}

impl<T: Real> Saturated<T> {
    pub fn new(w: T) -> Result<Self, EpidemicsError> {
        if w > T::zero() && w.is_finite() {
            Ok(Self { w })
        } else {
            Err(EpidemicsError::InvalidParameter("saturation w"))
        }
    }
}

impl<T: Real> Incidence<T> for Saturated<T> {
    fn eval(&self, i: T) -> T {
        i / (self.w + i)
    }

    fn slope_at_zero(&self) -> T {
        self.w.recip()
    }
}

/// Sample the incidence assumptions on a log-spaced grid over
/// `[1e-6, 1e3]` and report every observed violation as a warning string.
///
/// An empty result means "not falsified", not "proven".
pub fn check_incidence_assumptions<T: Real>(f: &dyn Incidence<T>) -> Vec<String> {
    let mut warnings = Vec::new();
    if f.eval(T::zero()) != T::zero() {
        warnings.push("f(0) != 0".to_string());
    }
    let slope = f.slope_at_zero();
    if !(slope > T::zero()) {
        warnings.push("f'(0) must be positive".to_string());
    }
    let n = 200;
    let (lo, hi) = (1e-6_f64.ln(), 1e3_f64.ln());
    let mut prev: Option<(T, T)> = None;
    let tol = real::<T>(1e-12);
    for k in 0..=n {
        let i = real::<T>((lo + (hi - lo) * k as f64 / n as f64).exp());
        let v = f.eval(i);
        if !(v > T::zero()) {
            warnings.push(format!("f({i}) is not positive"));
        }
        if v > i * slope * (T::one() + tol) {
            warnings.push(format!("f({i}) exceeds I * f'(0)"));
        }
        if let Some((pi, pv)) = prev {
            if v < pv * (T::one() - tol) {
                warnings.push(format!("f is decreasing near I = {i}"));
            }
            if v / i > pv / pi * (T::one() + tol) {
                warnings.push(format!("f(I)/I is increasing near I = {i}"));
            }
        }
        prev = Some((i, v));
    }
    warnings
}

/// Which steady state an [`EquilibriumPoint`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

/// A spatially homogeneous steady state of the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint<T: Real> {
    pub s: T,
    pub i: T,
    pub r: T,
    pub kind: EquilibriumKind,
}

impl<T: Real> EquilibriumPoint<T> {
    /// Residuals of the three steady-state equations at this point.
    pub fn residual(&self, p: &ModelParams<T>, f: &dyn Incidence<T>) -> (T, T, T) {
        let fi = f.eval(self.i);
        (
            p.lambda - p.beta * self.s * fi - p.gamma_s * self.s,
            p.beta * self.s * fi - p.removal() * self.i,
            p.r * self.i - p.delta * self.r,
        )
    }
}

/// Basic reproduction number `R_0 = beta (lambda/gamma) f'(0) / (mu + r)`.
pub fn reproduction_number<T: Real>(p: &ModelParams<T>, f: &dyn Incidence<T>) -> T {
    p.beta * (p.lambda / p.gamma_s) * f.slope_at_zero() / p.removal()
}

/// The disease-free equilibrium `E_0 = (lambda/gamma, 0, 0)`.
pub fn disease_free_equilibrium<T: Real>(p: &ModelParams<T>) -> EquilibriumPoint<T> {
    EquilibriumPoint {
        s: p.lambda / p.gamma_s,
        i: T::zero(),
        r: T::zero(),
        kind: EquilibriumKind::DiseaseFree,
    }
}

/// `g(I)` whose unique interior root is the endemic infected level.
fn endemic_indicator<T: Real>(p: &ModelParams<T>, f: &dyn Incidence<T>, i: T) -> T {
    p.beta * (p.lambda - p.removal() * i) / p.gamma_s * f.eval(i) - p.removal() * i
}

const SCAN_INTERVALS: usize = 10_000;

/// The endemic equilibrium, found by a sign scan plus bisection on `g(I)`.
///
/// `I = 0` is itself a root of `g`, so the scan starts strictly inside the
/// interval at `1e-12 * lambda/(mu+r)`. Requires `R_0 > 1`.
pub fn endemic_equilibrium<T: Real>(
    p: &ModelParams<T>,
    f: &dyn Incidence<T>,
    tol: T,
) -> Result<EquilibriumPoint<T>, EpidemicsError> {
    if !(reproduction_number(p, f) > T::one()) {
        return Err(EpidemicsError::NoEndemicEquilibrium);
    }
    let i_max = p.lambda / p.removal();
    let eps = real::<T>(1e-12) * i_max;
    let span = i_max - eps;
    let nf = real::<T>(SCAN_INTERVALS as f64);

    // g > 0 just inside zero when R_0 > 1; walk until the sign flips.
    let mut lo = eps;
    let mut g_lo = endemic_indicator(p, f, lo);
    let mut bracket = None;
    for k in 1..=SCAN_INTERVALS {
        let hi = eps + span * real::<T>(k as f64) / nf;
        let g_hi = endemic_indicator(p, f, hi);
        if g_lo > T::zero() && g_hi <= T::zero() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        g_lo = g_hi;
    }
    let (mut lo, mut hi) = bracket.ok_or(EpidemicsError::BracketingFailure)?;

    let two = real::<T>(2.0);
    let mut mid = (lo + hi) / two;
    for _ in 0..200 {
        mid = (lo + hi) / two;
        let g_mid = endemic_indicator(p, f, mid);
        if g_mid.abs() <= tol {
            break;
        }
        if g_mid > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * mid {
            break;
        }
    }

    let i_star = mid;
    let s_star = (p.lambda - p.removal() * i_star) / p.gamma_s;
    let r_star = p.r * i_star / p.delta;
    Ok(EquilibriumPoint {
        s: s_star,
        i: i_star,
        r: r_star,
        kind: EquilibriumKind::Endemic,
    })
}

/// Closed form of the endemic equilibrium for bilinear incidence:
/// `S* = (mu+r)/beta`, `I* = lambda/(mu+r) - gamma/beta`, `R* = r I*/delta`.
pub fn bilinear_endemic_closed_form<T: Real>(
    p: &ModelParams<T>,
) -> Result<EquilibriumPoint<T>, EpidemicsError> {
    if !(reproduction_number(p, &Bilinear) > T::one()) {
        return Err(EpidemicsError::NoEndemicEquilibrium);
    }
    let i_star = p.lambda / p.removal() - p.gamma_s / p.beta;
    Ok(EquilibriumPoint {
        s: p.removal() / p.beta,
        i: i_star,
        r: p.r * i_star / p.delta,
        kind: EquilibriumKind::Endemic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section4_params(beta: f64) -> ModelParams<f64> {
        ModelParams::new(0.2, beta, 0.2, 0.2, 0.2, 0.25, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn params_reject_nonpositive_rates() {
        assert_eq!(
            ModelParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            Err(EpidemicsError::InvalidParameter("lambda"))
        );
        assert_eq!(
            ModelParams::new(1.0, 1.0, 1.0, 1.0, -0.1, 1.0, 1.0, 1.0, 1.0),
            Err(EpidemicsError::InvalidParameter("mu"))
        );
        // Zero diffusivity is allowed.
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0).is_ok());
        assert_eq!(
            ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.0),
            Err(EpidemicsError::InvalidParameter("d1"))
        );
    }

    #[test]
    fn reproduction_number_endemic_case() {
        // beta = 0.6217 with f bilinear gives R_0 = 1.3816.
        let p = section4_params(0.6217);
        let r0 = reproduction_number(&p, &Bilinear);
        assert!((r0 - 1.3816).abs() <= 1e-4, "R_0 = {r0}");
    }

    #[test]
    fn reproduction_number_dfe_case() {
        // The formula gives 0.4764 at beta = 0.2144 (below threshold).
        let p = section4_params(0.2144);
        let r0 = reproduction_number(&p, &Bilinear);
        assert!((r0 - 0.4764).abs() <= 1e-4, "R_0 = {r0}");
        assert!(r0 < 1.0);
    }

    #[test]
    fn reproduction_number_linear_in_beta() {
        let p1 = section4_params(0.31);
        let p2 = section4_params(0.62);
        let r1 = reproduction_number(&p1, &Bilinear);
        let r2 = reproduction_number(&p2, &Bilinear);
        assert!((r2 - 2.0 * r1).abs() < 1e-14);
    }

    #[test]
    fn disease_free_point() {
        let p = section4_params(0.2144);
        let e0 = disease_free_equilibrium(&p);
        assert_eq!((e0.s, e0.i, e0.r), (1.0, 0.0, 0.0));
        assert_eq!(e0.kind, EquilibriumKind::DiseaseFree);

        let p = ModelParams::new(0.4, 1.0, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(disease_free_equilibrium(&p).s, 2.0);
    }

    #[test]
    fn endemic_point_matches_paper_values() {
        let p = section4_params(0.6217);
        let e = endemic_equilibrium(&p, &Bilinear, 1e-12).unwrap();
        assert!((e.s - 0.7238).abs() <= 5e-4, "S* = {}", e.s);
        assert!((e.i - 0.1227).abs() <= 5e-4, "I* = {}", e.i);
        assert!((e.r - 0.1534).abs() <= 5e-4, "R* = {}", e.r);
    }

    #[test]
    fn endemic_root_matches_closed_form() {
        let p = section4_params(0.6217);
        let num = endemic_equilibrium(&p, &Bilinear, 1e-12).unwrap();
        let exact = bilinear_endemic_closed_form(&p).unwrap();
        assert!((num.s - exact.s).abs() <= 1e-10);
        assert!((num.i - exact.i).abs() <= 1e-10);
        assert!((num.r - exact.r).abs() <= 1e-10);
    }

    #[test]
    fn endemic_requires_supercritical_r0() {
        let p = section4_params(0.2144);
        assert_eq!(
            endemic_equilibrium(&p, &Bilinear, 1e-12),
            Err(EpidemicsError::NoEndemicEquilibrium)
        );
    }

    #[test]
    fn endemic_with_saturated_incidence() {
        // Saturation halves f'(0) relative to bilinear when w = 1 around
        // small I; pick beta large enough to stay supercritical.
        let p = section4_params(0.6217 * 2.0);
        let f = Saturated::new(1.0).unwrap();
        assert!(reproduction_number(&p, &f) > 1.0);
        let e = endemic_equilibrium(&p, &f, 1e-10).unwrap();
        let g =
            p.beta * (p.lambda - p.removal() * e.i) / p.gamma_s * f.eval(e.i) - p.removal() * e.i;
        assert!(g.abs() <= 1e-10, "residual g(I*) = {g}");
        let (r1, r2, r3) = e.residual(&p, &f);
        assert!(r1.abs() <= 1e-9 && r2.abs() <= 1e-9 && r3.abs() <= 1e-9);
    }

    #[test]
    fn equilibrium_residuals_vanish() {
        let p = section4_params(0.6217);
        let e = endemic_equilibrium(&p, &Bilinear, 1e-12).unwrap();
        let (r1, r2, r3) = e.residual(&p, &Bilinear);
        assert!(r1.abs() <= 1e-9);
        assert!(r2.abs() <= 1e-9);
        assert!(r3.abs() <= 1e-9);
    }

    #[test]
    fn incidence_assumptions_hold_for_builtin_models() {
        assert!(check_incidence_assumptions::<f64>(&Bilinear).is_empty());
        for &w in &[0.1, 1.0, 25.0] {
            let f = Saturated::new(w).unwrap();
            assert!(check_incidence_assumptions::<f64>(&f).is_empty(), "w = {w}");
        }
    }

    #[test]
    fn incidence_assumptions_flag_violations() {
        struct Quadratic;
        impl Incidence<f64> for Quadratic {
            fn eval(&self, i: f64) -> f64 {
                i * i
            }
            fn slope_at_zero(&self) -> f64 {
                1.0
            }
        }
        // f(I) = I^2 makes f(I)/I increasing and breaks f <= I f'(0).
        assert!(!check_incidence_assumptions::<f64>(&Quadratic).is_empty());
    }

    #[test]
    fn saturated_rejects_nonpositive_w() {
        assert!(Saturated::new(0.0_f64).is_err());
        assert!(Saturated::new(-2.0_f64).is_err());
    }
}
