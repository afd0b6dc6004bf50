//! Numerical construction of non-uniform step permutons that match the
//! uniform densities on a given pattern set, and location of the parameter
//! at which the segment-permuton family matches all order-3 densities.
//!
//! The witness solve pins one perturbation coordinate to a non-zero value
//! `r`, frees as many coordinates as there are patterns (chosen by an exact
//! rank test of the density gradients at the uniform point), and drives the
//! density residuals to zero with Newton's method. Verification re-evaluates
//! every density exactly after rounding the solution to rational
//! coordinates.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::mc::{mc_density, pattern_counts, McEstimate};
use crate::perm::{enumerate_permutations, Permutation};
use crate::rational::{rationalize, Rational};
use crate::segment::SegmentPermuton;
use crate::step::{
    density_and_jacobian_f64, density_gradient, perturb, perturb_f64, step_density,
    PerturbationVector,
};

/// Outcome of a witness solve.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub set: Vec<Permutation>,
    pub n: usize,
    /// Flat 0-indexed coordinate pinned to `pinned_value`.
    pub pinned_index: usize,
    pub pinned_value: f64,
    /// Free flat coordinates adjusted by the solver, aligned with `set`.
    pub free_indices: Vec<usize>,
    /// Full perturbation vector, row-major flat over the `(n-1)^2` grid.
    pub x: Vec<f64>,
    /// Final float residuals `|h_pi(x) - 1/|pi|!|`, aligned with `set`.
    pub residuals: Vec<f64>,
    pub x_max_norm: f64,
    pub iterations: usize,
    /// Max-norm residual before each iteration and at convergence.
    pub residual_history: Vec<f64>,
    /// Times the pinned value was halved after a failed attempt.
    pub halvings: usize,
    pub tol: f64,
    /// True for the `r = 0` solve, whose root is the uniform permuton.
    pub trivial: bool,
}

impl WitnessReport {
    pub fn to_json(&self) -> Value {
        json!({
            "set": self.set.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "n": self.n,
            "pinned": { "index": self.pinned_index, "value": self.pinned_value },
            "free_indices": self.free_indices,
            "x": self.x,
            "residuals": self.residuals,
            "x_max_norm": self.x_max_norm,
            "iterations": self.iterations,
            "residual_history": self.residual_history,
            "halvings": self.halvings,
            "tol": self.tol,
            "trivial": self.trivial,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

/// Picks the pivot coordinates: flat indices where the exact gradients are
/// jointly full-rank, plus the first remaining index for the pin.
fn choose_coordinates(set: &[Permutation], n: usize) -> Result<(Vec<usize>, usize)> {
    let coords = (n - 1) * (n - 1);
    if coords <= set.len() {
        return Err(Error::Range(format!(
            "need (n-1)^2 > |S|, got n = {n} for a set of {}",
            set.len()
        )));
    }
    let mut rows = Vec::with_capacity(set.len());
    for q in set {
        let grid = density_gradient(q, n)?;
        rows.push(grid.into_iter().flatten().collect::<Vec<Rational>>());
    }
    let m = RatMatrix::from_rows(rows)?;
    let (_, pivots) = m.rref();
    if pivots.len() < set.len() {
        return Err(Error::DependentGradients);
    }
    let pin = (0..coords)
        .find(|c| !pivots.contains(c))
        .expect("coords > |S| leaves a free index");
    Ok((pivots, pin))
}

/// Solves a small dense linear system by Gaussian elimination with partial
/// pivoting; errors on a numerically singular matrix.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::SolveFailed("singular Jacobian".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

fn factorial_recip(k: usize) -> f64 {
    1.0 / crate::comb::factorial_u64(k) as f64
}

/// Largest fraction of the proposed step that keeps every matrix entry
/// non-negative, backed off to 90% when the boundary binds.
fn feasible_fraction(n: usize, x: &[f64], delta: &[f64]) -> f64 {
    let current = perturb_f64(n, x);
    let stepped: Vec<f64> = x.iter().zip(delta).map(|(a, d)| a + d).collect();
    let proposed = perturb_f64(n, &stepped);
    let mut gamma: f64 = 1.0;
    for (c, p) in current.iter().zip(&proposed) {
        let change = p - c;
        if change < 0.0 && c + change < 0.0 {
            gamma = gamma.min(0.9 * (c / -change));
        }
    }
    gamma.max(0.0)
}

/// Solution, final per-pattern residuals, iteration count, residual history.
type NewtonOutcome = (Vec<f64>, Vec<f64>, usize, Vec<f64>);

fn newton_attempt(
    set: &[Permutation],
    n: usize,
    free: &[usize],
    pin: usize,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let coords = (n - 1) * (n - 1);
    let mut x = vec![0.0f64; coords];
    x[pin] = r;
    let targets: Vec<f64> = set.iter().map(|q| factorial_recip(q.order())).collect();
    // Solve beyond the requested tolerance so that rational rounding of the
    // solution stays inside it.
    let inner_tol = (tol * 1e-2).max(1e-14);
    let mut history = Vec::new();
    let mut last_max = f64::INFINITY;
    for iter in 0..max_iter {
        let grid = perturb_f64(n, &x);
        if grid.iter().any(|v| *v < 0.0) {
            return Err(Error::SolveFailed("left the valid region".into()));
        }
        let mut residuals = Vec::with_capacity(set.len());
        let mut jac_rows = Vec::with_capacity(set.len());
        for (q, target) in set.iter().zip(&targets) {
            let (h, jac) = density_and_jacobian_f64(q, &grid, n);
            residuals.push(h - target);
            jac_rows.push(free.iter().map(|&c| jac[c]).collect::<Vec<f64>>());
        }
        let max_res = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        history.push(max_res);
        if max_res <= inner_tol {
            let final_res = residuals.iter().map(|r| r.abs()).collect();
            return Ok((x, final_res, iter, history));
        }
        if !max_res.is_finite() || (iter > 4 && max_res > last_max * 4.0) {
            return Err(Error::SolveFailed(format!(
                "diverging at iteration {iter}: residual {max_res}"
            )));
        }
        last_max = max_res;
        let rhs: Vec<f64> = residuals.iter().map(|r| -r).collect();
        let step = solve_dense(jac_rows, rhs)?;
        let mut delta = vec![0.0f64; coords];
        for (&c, &d) in free.iter().zip(&step) {
            delta[c] = d;
        }
        let gamma = feasible_fraction(n, &x, &delta);
        if gamma <= 0.0 {
            return Err(Error::SolveFailed("no feasible step".into()));
        }
        for (xv, d) in x.iter_mut().zip(&delta) {
            *xv += gamma * d;
        }
    }
    Err(Error::SolveFailed(format!(
        "no convergence within {max_iter} iterations"
    )))
}

/// Builds a non-uniform perturbation whose step permuton matches the uniform
/// density of every pattern in `set`, with the pinned coordinate held at `r`
/// (halved on retry when a solve fails). Requires the exact density
/// gradients at the uniform point to be linearly independent.
pub fn find_witness(
    set: &[Permutation],
    n: usize,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<WitnessReport> {
    if set.is_empty() {
        return Err(Error::IndexError("empty set".into()));
    }
    for q in set {
        if q.order() < 2 {
            return Err(Error::OrderOne(format!("{q} cannot constrain a witness")));
        }
    }
    let (free, pin) = choose_coordinates(set, n)?;

    if r == 0.0 {
        let coords = (n - 1) * (n - 1);
        return Ok(WitnessReport {
            set: set.to_vec(),
            n,
            pinned_index: pin,
            pinned_value: 0.0,
            free_indices: free,
            x: vec![0.0; coords],
            residuals: vec![0.0; set.len()],
            x_max_norm: 0.0,
            iterations: 0,
            residual_history: vec![0.0],
            halvings: 0,
            tol,
            trivial: true,
        });
    }

    let mut pinned = r;
    let mut last_err = None;
    for halvings in 0..=6 {
        match newton_attempt(set, n, &free, pin, pinned, tol, max_iter) {
            Ok((x, residuals, iterations, residual_history)) => {
                let x_max_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                return Ok(WitnessReport {
                    set: set.to_vec(),
                    n,
                    pinned_index: pin,
                    pinned_value: pinned,
                    free_indices: free,
                    x,
                    residuals,
                    x_max_norm,
                    iterations,
                    residual_history,
                    halvings,
                    tol,
                    trivial: false,
                });
            }
            Err(e) => {
                last_err = Some(e);
                pinned /= 2.0;
            }
        }
    }
    Err(Error::SolveFailed(format!(
        "witness solve failed after repeated halvings of the pinned value: {}",
        last_err.expect("at least one attempt")
    )))
}

/// Result of exact re-verification of a witness report.
#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    /// All checks passed (matrix validity and every residual within `tol`).
    pub pass: bool,
    /// Name of the first failing check, if any.
    pub failed_check: Option<String>,
    /// The solution is actually non-uniform.
    pub is_witness: bool,
    pub exact_residuals: Vec<Rational>,
    pub x_rationalized: Vec<Rational>,
}

impl VerifyOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass,
            "failed_check": self.failed_check,
            "is_witness": self.is_witness,
            "exact_residuals": self
                .exact_residuals
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>(),
            "x_rationalized": self
                .x_rationalized
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>(),
        })
    }
}

/// Rounds the solution to rational coordinates with `digits` decimal digits
/// of precision, rebuilds the perturbed matrix exactly, and re-evaluates
/// every density with the exact formula.
pub fn verify_witness(report: &WitnessReport, digits: u32) -> VerifyOutcome {
    let mut failed = None;
    let x_rat: Vec<Rational> = report
        .x
        .iter()
        .map(|&v| rationalize(v, digits).expect("finite coordinate"))
        .collect();
    let tol = crate::rational::from_f64(report.tol).expect("finite tolerance");
    let mut exact_residuals = Vec::new();
    let is_witness = x_rat.iter().any(|v| !v.is_zero());

    match PerturbationVector::from_flat(report.n, x_rat.clone()).and_then(|pv| perturb(&pv)) {
        Ok(matrix) => {
            for q in &report.set {
                let density = step_density(q, &matrix);
                let target = Rational::new(1.into(), crate::comb::factorial(q.order()));
                let residual = (density - target).abs();
                if residual > tol && failed.is_none() {
                    failed = Some(format!(
                        "exact residual of {q} is {residual}, above {}",
                        report.tol
                    ));
                }
                exact_residuals.push(residual);
            }
        }
        Err(e) => {
            failed = Some(format!("rationalized perturbation is invalid: {e}"));
        }
    }

    VerifyOutcome {
        pass: failed.is_none(),
        failed_check: failed,
        is_witness,
        exact_residuals,
        x_rationalized: x_rat,
    }
}

/// Report of the bisection for the parameter matching all order-3 densities.
#[derive(Clone, Debug)]
pub struct AlphaReport {
    pub alpha0: f64,
    pub bracket: (f64, f64),
    /// Monte Carlo estimates of every order-3 density at `alpha0`, in
    /// lexicographic pattern order.
    pub densities: Vec<(Permutation, McEstimate)>,
    pub endpoint_low: McEstimate,
    pub endpoint_high: McEstimate,
    pub evaluations: usize,
    pub samples_per_eval: u64,
    pub seed: u64,
}

impl AlphaReport {
    pub fn to_json(&self) -> Value {
        let densities: serde_json::Map<String, Value> = self
            .densities
            .iter()
            .map(|(q, est)| {
                (
                    q.to_string(),
                    json!({
                        "estimate": est.estimate,
                        "stderr": est.stderr,
                        "samples": est.samples,
                        "seed": est.seed,
                    }),
                )
            })
            .collect();
        json!({
            "alpha0": self.alpha0,
            "bracket": [self.bracket.0, self.bracket.1],
            "densities": densities,
            "endpoints": {
                "alpha_0": { "estimate": self.endpoint_low.estimate, "stderr": self.endpoint_low.stderr },
                "alpha_1": { "estimate": self.endpoint_high.estimate, "stderr": self.endpoint_high.stderr },
            },
            "evaluations": self.evaluations,
            "samples_per_eval": self.samples_per_eval,
            "seed": self.seed,
        })
    }
}

const INCREASING_TARGET: f64 = 1.0 / 6.0;

/// Bisects the family parameter until the Monte Carlo density of the
/// increasing 3-pattern is statistically compatible with 1/6 and the bracket
/// is narrower than `tol`. Every evaluation reuses the same seed (common
/// random numbers), so the result is reproducible bit for bit.
pub fn find_alpha0(samples_per_eval: u64, tol: f64, seed: u64) -> Result<AlphaReport> {
    if samples_per_eval == 0 {
        return Err(Error::Range("samples_per_eval must be positive".into()));
    }
    let pattern: Permutation = "123".parse().expect("static pattern");
    let estimate_at = |alpha: f64| -> Result<McEstimate> {
        let p = SegmentPermuton::new(alpha)?;
        Ok(mc_density(&pattern, &p, samples_per_eval, seed))
    };
    let mut evaluations = 2usize;

    let low = estimate_at(0.0)?;
    let high = estimate_at(1.0)?;
    let sign = |est: &McEstimate| est.estimate - INCREASING_TARGET;
    if sign(&low) <= 0.0 || sign(&high) >= 0.0 {
        return Err(Error::Diagnostic(format!(
            "no sign change across the family: d(0) = {:.4}, d(1) = {:.4}",
            low.estimate, high.estimate
        )));
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid;
    loop {
        mid = 0.5 * (lo + hi);
        let mid_est = estimate_at(mid)?;
        evaluations += 1;
        if sign(&mid_est) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let ci_ok =
            (mid_est.estimate - INCREASING_TARGET).abs() <= 3.0 * mid_est.stderr.max(f64::EPSILON);
        if hi - lo <= tol && ci_ok {
            break;
        }
        if evaluations > 90 {
            return Err(Error::Diagnostic(format!(
                "bisection failed to localize the root: bracket ({lo}, {hi}), \
                 estimate {:.5} after {evaluations} evaluations",
                mid_est.estimate
            )));
        }
    }

    let counts = pattern_counts(3, &SegmentPermuton::new(mid)?, samples_per_eval, seed);
    let densities = enumerate_permutations(3)
        .into_iter()
        .zip(counts)
        .map(|(q, c)| {
            let estimate = c as f64 / samples_per_eval as f64;
            (
                q,
                McEstimate {
                    estimate,
                    stderr: (estimate * (1.0 - estimate) / samples_per_eval as f64).sqrt(),
                    samples: samples_per_eval,
                    seed,
                },
            )
        })
        .collect();

    Ok(AlphaReport {
        alpha0: mid,
        bracket: (lo, hi),
        densities,
        endpoint_low: low,
        endpoint_high: high,
        evaluations,
        samples_per_eval,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn witness_for_single_increasing_pair() {
        let report = find_witness(&[p("12")], 3, 0.05, 1e-10, 60).unwrap();
        assert!(!report.trivial);
        assert!(report.x_max_norm >= 0.05);
        assert!(report.residuals.iter().all(|r| *r <= 1e-10));
        let outcome = verify_witness(&report, 12);
        assert!(outcome.pass, "{:?}", outcome.failed_check);
        assert!(outcome.is_witness);
    }

    #[test]
    fn witness_for_pair_and_triple() {
        let report = find_witness(&[p("12"), p("123")], 3, 0.05, 1e-10, 60).unwrap();
        assert!(report.residuals.iter().all(|r| *r <= 1e-10));
        let outcome = verify_witness(&report, 12);
        assert!(outcome.pass, "{:?}", outcome.failed_check);
        assert!(outcome.is_witness);
        assert!(report.x_max_norm > 1e-3);
        // Residuals shrink monotonically along the Newton iterations.
        for w in report.residual_history.windows(2) {
            assert!(w[1] <= w[0], "history {:?}", report.residual_history);
        }
        assert!(report.residual_history.len() >= 2);
    }

    #[test]
    fn trivial_root_is_flagged() {
        let report = find_witness(&[p("12")], 3, 0.0, 1e-10, 50).unwrap();
        assert!(report.trivial);
        assert_eq!(report.x_max_norm, 0.0);
        let outcome = verify_witness(&report, 12);
        assert!(outcome.pass);
        assert!(!outcome.is_witness);
    }

    #[test]
    fn dependent_sets_are_refused() {
        assert!(matches!(
            find_witness(&[p("12"), p("21")], 3, 0.05, 1e-10, 50),
            Err(Error::DependentGradients)
        ));
    }

    #[test]
    fn too_small_grid_is_rejected() {
        // (n-1)^2 must exceed |S|.
        assert!(find_witness(&[p("12")], 2, 0.05, 1e-10, 50).is_err());
    }

    #[test]
    fn corrupting_a_coordinate_fails_verification() {
        let mut report = find_witness(&[p("12")], 3, 0.05, 1e-10, 60).unwrap();
        report.x[report.pinned_index] += 0.01;
        let outcome = verify_witness(&report, 12);
        assert!(!outcome.pass);
        assert!(outcome.failed_check.is_some());
    }

    #[test]
    fn alpha0_bisection_is_reproducible() {
        let a = find_alpha0(40_000, 0.02, 71).unwrap();
        let b = find_alpha0(40_000, 0.02, 71).unwrap();
        assert_eq!(a.alpha0, b.alpha0);
        assert_eq!(a.evaluations, b.evaluations);
        assert!(a.alpha0 > 0.0 && a.alpha0 < 1.0);
        // Endpoint estimates near the known values.
        assert!((a.endpoint_low.estimate - 0.25).abs() < 0.01);
        assert!((a.endpoint_high.estimate - 0.125).abs() < 0.01);
        for (q, est) in &a.densities {
            assert!(
                (est.estimate - INCREASING_TARGET).abs() < 0.02,
                "{q}: {}",
                est.estimate
            );
        }
    }
}
