//! Property-based tests for the solver stack: weight-sequence facts,
//! operator-form agreement, threshold consistency of the equilibria and
//! positivity of fuzzed runs.

use fracsir::epidemics::{
    check_incidence_assumptions, endemic_equilibrium, reproduction_number, Bilinear,
    EpidemicsError, Incidence, ModelParams, Saturated,
};
use fracsir::fracops::{caputo_l1, caputo_l1_direct, FractionalOrder, L1Weights};
use fracsir::solver::{
    simulate_with, thomas_solve, GridSpec, InitialCondition, SimulateOptions, Tridiagonal,
};
use proptest::prelude::*;

fn order(alpha: f64) -> FractionalOrder<f64> {
    FractionalOrder::new(alpha).unwrap()
}

proptest! {
    /// b_0 = 1 and the sequence stays positive and strictly decreasing for
    /// any admissible fractional order.
    #[test]
    fn l1_weights_positive_decreasing(alpha in 0.01_f64..0.999, n in 1_usize..400) {
        let w = L1Weights::compute(order(alpha), n);
        prop_assert_eq!(w.b(0), 1.0);
        for j in 0..n {
            prop_assert!(w.b(j) > w.b(j + 1));
            prop_assert!(w.b(j + 1) > 0.0);
        }
    }

    /// The telescoped and direct-sum Caputo forms agree to 1e-12 relative
    /// error on arbitrary histories.
    #[test]
    fn caputo_forms_agree(
        alpha in 0.01_f64..1.0,
        dt in 0.001_f64..3.0,
        values in proptest::collection::vec(-50.0_f64..50.0, 2..120),
    ) {
        let a = caputo_l1(&values, order(alpha), dt).unwrap();
        let b = caputo_l1_direct(&values, order(alpha), dt).unwrap();
        let scale = a.abs().max(b.abs()).max(1e-12);
        prop_assert!((a - b).abs() / scale <= 1e-12, "{a} vs {b}");
    }

    /// Thomas solutions of strictly dominant systems satisfy the residual
    /// contract.
    #[test]
    fn thomas_residual_small(
        seedvals in proptest::collection::vec((-1.0_f64..1.0, -1.0_f64..1.0, 0.05_f64..2.0, -5.0_f64..5.0), 3..60),
    ) {
        let n = seedvals.len();
        let lower: Vec<f64> = seedvals.iter().take(n - 1).map(|t| t.0).collect();
        let upper: Vec<f64> = seedvals.iter().take(n - 1).map(|t| t.1).collect();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let mut off = 0.0;
            if i > 0 { off += lower[i - 1].abs(); }
            if i + 1 < n { off += upper[i].abs(); }
            diag.push(off + seedvals[i].2);
        }
        let rhs: Vec<f64> = seedvals.iter().map(|t| t.3).collect();
        let t = Tridiagonal { lower, diag, upper };
        let x = thomas_solve(&t, &rhs).unwrap();
        let ax = t.apply(&x);
        let norm = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-30);
        for (a, b) in ax.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * norm);
        }
    }

    /// The endemic equilibrium exists exactly when R_0 > 1 (boundary cases
    /// excluded), and its residuals vanish.
    #[test]
    fn endemic_threshold_consistency(
        lambda in 0.01_f64..2.0,
        beta in 0.01_f64..2.0,
        gamma in 0.01_f64..2.0,
        delta in 0.01_f64..2.0,
        mu in 0.01_f64..2.0,
        r in 0.01_f64..2.0,
        saturated_w in proptest::option::of(0.05_f64..5.0),
    ) {
        let p = ModelParams::new(lambda, beta, gamma, delta, mu, r, 1.0, 1.0, 1.0).unwrap();
        let f: Box<dyn Incidence<f64>> = match saturated_w {
            Some(w) => Box::new(Saturated::new(w).unwrap()),
            None => Box::new(Bilinear),
        };
        let r0 = reproduction_number(&p, f.as_ref());
        prop_assume!((r0 - 1.0).abs() > 0.05);
        match endemic_equilibrium(&p, f.as_ref(), 1e-12) {
            Ok(e) => {
                prop_assert!(r0 > 1.0);
                prop_assert!(e.i > 0.0 && e.i < lambda / (mu + r));
                let (r1, r2, r3) = e.residual(&p, f.as_ref());
                prop_assert!(r1.abs() <= 1e-9 && r2.abs() <= 1e-9 && r3.abs() <= 1e-9,
                    "residuals ({r1}, {r2}, {r3})");
            }
            Err(EpidemicsError::NoEndemicEquilibrium) => prop_assert!(r0 <= 1.0),
            Err(other) => prop_assert!(false, "unexpected error: {other}"),
        }
    }

    /// The indicator function g changes sign exactly once on the interior
    /// grid when the incidence satisfies its assumptions and R_0 > 1.
    #[test]
    fn endemic_root_is_unique_on_grid(
        lambda in 0.05_f64..2.0,
        gamma in 0.05_f64..2.0,
        mu in 0.05_f64..2.0,
        r in 0.05_f64..2.0,
        saturated_w in proptest::option::of(0.05_f64..5.0),
        boost in 1.1_f64..8.0,
    ) {
        // Pick beta so that R_0 = boost > 1.
        let slope = saturated_w.map_or(1.0, |w| 1.0 / w);
        let beta = boost * gamma * (mu + r) / (lambda * slope);
        let f: Box<dyn Incidence<f64>> = match saturated_w {
            Some(w) => Box::new(Saturated::new(w).unwrap()),
            None => Box::new(Bilinear),
        };
        // Independent sampling of g on a uniform interior grid.
        let i_max = lambda / (mu + r);
        let eps = 1e-9 * i_max;
        let g = |i: f64| beta * (lambda - (mu + r) * i) / gamma * f.eval(i) - (mu + r) * i;
        let mut changes = 0;
        let mut prev = g(eps);
        let samples = 2000;
        for k in 1..=samples {
            let x = eps + (i_max - eps) * k as f64 / samples as f64;
            let cur = g(x);
            if prev > 0.0 && cur <= 0.0 {
                changes += 1;
            }
            prop_assert!(!(prev <= 0.0 && cur > 0.0), "g turned positive again at {x}");
            prev = cur;
        }
        prop_assert_eq!(changes, 1);
    }

    /// Sampled incidence assumptions hold for every admissible saturation
    /// constant.
    #[test]
    fn saturated_incidence_passes_assumption_screen(w in 0.01_f64..50.0) {
        let f = Saturated::new(w).unwrap();
        prop_assert!(check_incidence_assumptions::<f64>(&f).is_empty());
    }

    /// Scheme trajectories stay nonnegative for arbitrary positive data.
    #[test]
    fn trajectories_stay_nonnegative(
        lambda in 0.01_f64..2.0,
        beta in 0.01_f64..2.0,
        gamma in 0.01_f64..2.0,
        delta in 0.01_f64..2.0,
        mu in 0.01_f64..2.0,
        r in 0.01_f64..2.0,
        alpha in 0.05_f64..1.0,
        dt in 0.01_f64..5.0,
        m in 5_usize..40,
        s0 in 0.01_f64..5.0,
        i0 in 0.0_f64..5.0,
        r0 in 0.0_f64..5.0,
    ) {
        let p = ModelParams::new(lambda, beta, gamma, delta, mu, r, 1.0, 0.5, 2.0).unwrap();
        let grid = GridSpec::new(0.0, 5.0, m, dt, 25).unwrap();
        let sim = simulate_with(
            &p,
            &Bilinear,
            &grid,
            &InitialCondition::Constant { s: s0, i: i0, r: r0 },
            order(alpha),
            &SimulateOptions { window: 0, tol: 0.0 },
        )
        .unwrap();
        for k in 0..sim.history.len() {
            prop_assert!(sim.history.level(k).min_entry() >= 0.0);
        }
    }
}

/// The numerics are generic over the scalar; a whole run works in `f32`.
#[test]
fn scheme_runs_in_single_precision() {
    let p = fracsir::Params32::new(0.2, 0.6217, 0.2, 0.2, 0.2, 0.25, 1.0, 1.0, 1.0).unwrap();
    let grid = GridSpec::<f32>::new(0.0, 5.0, 20, 0.1, 30).unwrap();
    let sim = fracsir::solver::simulate(
        &p,
        &Bilinear,
        &grid,
        &InitialCondition::Decaying,
        FractionalOrder::new(0.8_f32).unwrap(),
    )
    .unwrap();
    let last = sim.history.last();
    assert!(last.is_finite());
    assert!(last.min_entry() >= 0.0);
    // Coarse agreement with the double-precision path.
    let p64 = fracsir::Params64::new(0.2, 0.6217, 0.2, 0.2, 0.2, 0.25, 1.0, 1.0, 1.0).unwrap();
    let grid64 = GridSpec::<f64>::new(0.0, 5.0, 20, 0.1, 30).unwrap();
    let sim64 = fracsir::solver::simulate(
        &p64,
        &Bilinear,
        &grid64,
        &InitialCondition::Decaying,
        order(0.8),
    )
    .unwrap();
    for n in 0..last.nodes() {
        assert!((f64::from(last.s[n]) - sim64.history.last().s[n]).abs() < 1e-4);
    }
}
