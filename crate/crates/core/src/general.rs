//! Stationarity system for arbitrary `φ` and its damped Newton solver.
//!
//! Unknowns are the ansatz coordinates `(A₁, r₁, r₂, θ)`. With
//! `L = λ₁ + λ₂` and `Δ = λ₁ − λ₂` the four equations are
//!
//! ```text
//! R₁ = −λ₋cos(φ−θ) − L coth r₁ + 2A₁(sinh r₁ + cosh r₁ cosh r₂ sin θ)
//! R₂ = −Δ + 2A₁ sinh r₁ sinh r₂ sin θ
//! R₃ = −λ₋ r₁ sin(φ−θ) − L cot θ + 2A₁ sinh r₁ cosh r₂ cos θ
//! R₄ = 2A₁ cosh r₁ + 2A₁ sinh r₁ sin θ cosh r₂ − 1
//! ```
//!
//! `R₄` is the trace constraint; the first three come from differentiating
//! the objective along `r₁`, `r₂`, `θ` with the trace multiplier eliminated.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::{solve_diagonal_min, solve_phi_half, ClosestSeparable, Method, SolveInfo};
use crate::dense;
use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix4};
use crate::xstate::XStateParams;

/// Converged once every residual is below this.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Jacobians with a larger condition number are flagged.
pub const ILL_CONDITIONED: f64 = 1e10;
const MIN_STEP: f64 = 1e-12;
const POLISH_STEPS: usize = 3;
const CONTINUATION_STEPS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzPoint {
    pub a1: f64,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
}

impl AnsatzPoint {
    fn to_array(self) -> [f64; 4] {
        [self.a1, self.r1, self.r2, self.theta]
    }

    fn from_array(v: [f64; 4]) -> Self {
        Self { a1: v[0], r1: v[1], r2: v[2], theta: v[3] }
    }

    /// `A₁ > 0`, `r₁ > 0`, `θ ∈ (0, π)`, all finite.
    pub fn in_domain(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
            && self.a1 > 0.0
            && self.r1 > 0.0
            && self.theta > 0.0
            && self.theta < std::f64::consts::PI
    }

    /// `(χ₀, χ₁, χ₂, χ₃)` implied by the point.
    pub fn chi(&self) -> [f64; 4] {
        let a2 = self.a1 * self.r1.sinh() * self.theta.sin();
        [
            self.a1 * self.r1.exp(),
            a2 * self.r2.exp(),
            a2 * (-self.r2).exp(),
            self.a1 * (-self.r1).exp(),
        ]
    }

    /// Implied χ nonnegative with trace within 0.5 of 1.
    pub fn in_corridor(&self) -> bool {
        let chi = self.chi();
        chi.iter().all(|&c| c >= 0.0) && (chi.iter().sum::<f64>() - 1.0).abs() <= 0.5
    }
}

/// The four residuals `(R₁, R₂, R₃, R₄)`; all vanish at a stationary feasible
/// point.
pub fn stationarity_residuals(x: &AnsatzPoint, p: &XStateParams) -> [f64; 4] {
    let AnsatzPoint { a1, r1, r2, theta } = *x;
    let (l, delta, m) = (p.lambda1 + p.lambda2, p.lambda1 - p.lambda2, p.lambda_minus());
    let (s1, c1) = (r1.sinh(), r1.cosh());
    let (s2, c2) = (r2.sinh(), r2.cosh());
    let (st, ct) = theta.sin_cos();
    let (sd, cd) = (p.phi - theta).sin_cos();
    [
        -m * cd - l * c1 / s1 + 2.0 * a1 * (s1 + c1 * c2 * st),
        -delta + 2.0 * a1 * s1 * s2 * st,
        -m * r1 * sd - l * ct / st + 2.0 * a1 * s1 * c2 * ct,
        2.0 * a1 * c1 + 2.0 * a1 * s1 * st * c2 - 1.0,
    ]
}

/// Analytic Jacobian of [`stationarity_residuals`], columns `(A₁, r₁, r₂, θ)`.
pub fn stationarity_jacobian(x: &AnsatzPoint, p: &XStateParams) -> [[f64; 4]; 4] {
    let AnsatzPoint { a1, r1, r2, theta } = *x;
    let (l, m) = (p.lambda1 + p.lambda2, p.lambda_minus());
    let (s1, c1) = (r1.sinh(), r1.cosh());
    let (s2, c2) = (r2.sinh(), r2.cosh());
    let (st, ct) = theta.sin_cos();
    let (sd, cd) = (p.phi - theta).sin_cos();
    let a = 2.0 * a1;
    [
        [
            2.0 * (s1 + c1 * c2 * st),
            l / (s1 * s1) + a * (c1 + s1 * c2 * st),
            a * c1 * s2 * st,
            -m * sd + a * c1 * c2 * ct,
        ],
        [2.0 * s1 * s2 * st, a * c1 * s2 * st, a * s1 * c2 * st, a * s1 * s2 * ct],
        [
            2.0 * s1 * c2 * ct,
            -m * sd + a * c1 * c2 * ct,
            a * s1 * s2 * ct,
            m * r1 * cd + l / (st * st) - a * s1 * c2 * st,
        ],
        [
            2.0 * (c1 + s1 * st * c2),
            a * (s1 + c1 * st * c2),
            a * s1 * st * s2,
            a * s1 * ct * c2,
        ],
    ]
}

/// 2-norm condition number of a 4×4 real matrix.
pub fn condition_number(j: &[[f64; 4]; 4]) -> f64 {
    let mut jtj = ComplexMatrix4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let v: f64 = (0..4).map(|k| j[k][r] * j[k][c]).sum();
            jtj[(r, c)] = crate::linalg::cr(v);
        }
    }
    let s = eigh(&jtj).values;
    if s[3] <= 0.0 {
        f64::INFINITY
    } else {
        (s[0] / s[3]).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralOptions {
    /// Seed for the restart perturbations.
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Uniform perturbation width applied to `(r₁, r₂, θ)` on restart.
    pub noise_width: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self { seed: crate::DEFAULT_SEED, restarts: 8, max_iterations: 500, noise_width: 0.3 }
    }
}

struct NewtonOutcome {
    point: AnsatzPoint,
    residual: f64,
    iterations: usize,
}

fn max_abs(r: &[f64; 4]) -> f64 {
    dense::norm_inf(r)
}

/// Armijo-damped Newton from `start`. Returns the best point reached.
fn newton(p: &XStateParams, start: AnsatzPoint, max_iterations: usize) -> NewtonOutcome {
    let mut x = start;
    let mut f = stationarity_residuals(&x, p);
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < max_iterations {
        if max_abs(&f) < RESIDUAL_TOL {
            polish += 1;
            if polish > POLISH_STEPS {
                break;
            }
        }
        iterations += 1;
        let Some(step) = dense::solve(stationarity_jacobian(&x, p), f.map(|v| -v)) else {
            break;
        };
        let norm0 = dense::norm2(&f);
        let base = x.to_array();
        let mut t = 1.0;
        let mut accepted = None;
        while t >= MIN_STEP {
            let cand = AnsatzPoint::from_array(std::array::from_fn(|i| base[i] + t * step[i]));
            if cand.in_domain() && cand.in_corridor() {
                let fc = stationarity_residuals(&cand, p);
                if dense::norm2(&fc) <= (1.0 - 1e-4 * t) * norm0 {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                x = cand;
                f = fc;
            }
            None => break,
        }
    }
    NewtonOutcome { point: x, residual: max_abs(&f), iterations }
}

fn require_general(p: &XStateParams) -> Result<()> {
    p.validate()?;
    if !p.is_canonical() || !(p.phi > 0.0 && p.phi < std::f64::consts::PI) {
        return Err(Error::InvalidParams(
            "expected canonical parameters with phi in (0, pi)".into(),
        ));
    }
    if !p.is_entangled() {
        return Err(Error::NotEntangled(p.concurrence()));
    }
    Ok(())
}

/// Seed `(A₁, r₁, r₂)` from the `φ = π/2` solution with the same spectrum.
fn phi_half_seed(p: &XStateParams) -> Result<AnsatzPoint> {
    let q = XStateParams { phi: FRAC_PI_2, ..*p };
    let s = match solve_phi_half(&q) {
        Err(Error::DegenerateParams(_)) => solve_diagonal_min(&q)?,
        other => other?,
    };
    Ok(AnsatzPoint { a1: s.a1, r1: s.r1, r2: s.r2, theta: p.phi })
}

fn finish(p: &XStateParams, out: NewtonOutcome, restarts: usize, seed: u64) -> ClosestSeparable {
    let cond = condition_number(&stationarity_jacobian(&out.point, p));
    let info = SolveInfo {
        iterations: out.iterations,
        restarts,
        seed: Some(seed),
        residual: out.residual,
        jacobian_condition: Some(cond),
    };
    ClosestSeparable::from_ansatz(p, &out.point, Method::GeneralNewton, info)
}

/// [`solve_general_with`] using default options.
pub fn solve_general(p: &XStateParams) -> Result<ClosestSeparable> {
    solve_general_with(p, &GeneralOptions::default())
}

/// Solves the stationarity system for a canonical entangled state with
/// `φ ∈ (0, π)`.
///
/// Starts at `θ = φ` with `(A₁, r₁, r₂)` from the `φ = π/2` solution of the
/// same spectrum. If that fails, walks `φ` in from `π/2` by continuation and
/// then tries `restarts` seeded perturbations of the start point.
pub fn solve_general_with(p: &XStateParams, opts: &GeneralOptions) -> Result<ClosestSeparable> {
    require_general(p)?;
    if p.lambda1 == 0.0 && p.lambda2 == 0.0 {
        return Ok(ClosestSeparable::dephased(p));
    }
    let seed_point = phi_half_seed(p)?;
    let mut best = newton(p, seed_point, opts.max_iterations);
    if best.residual < RESIDUAL_TOL {
        return Ok(finish(p, best, 0, opts.seed));
    }

    if let Some(out) = continuation(p, seed_point, opts.max_iterations) {
        if out.residual < RESIDUAL_TOL {
            return Ok(finish(p, out, 0, opts.seed));
        }
        if out.residual < best.residual {
            best = out;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let w = opts.noise_width;
    for k in 1..=opts.restarts {
        let start = AnsatzPoint {
            a1: seed_point.a1,
            r1: (seed_point.r1 + w * (rng.random::<f64>() - 0.5)).max(1e-3),
            r2: seed_point.r2 + w * (rng.random::<f64>() - 0.5),
            theta: (p.phi + w * (rng.random::<f64>() - 0.5)).clamp(1e-3, std::f64::consts::PI - 1e-3),
        };
        let out = newton(p, start, opts.max_iterations);
        if out.residual < RESIDUAL_TOL {
            return Ok(finish(p, out, k, opts.seed));
        }
        if out.residual < best.residual {
            best = out;
        }
    }
    Err(Error::ConvergenceFailure {
        solver: "general_newton",
        residual: best.residual,
        iterations: best.iterations,
    })
}

/// Tracks the solution from `φ = π/2` to `p.phi` in equal steps.
fn continuation(p: &XStateParams, start: AnsatzPoint, max_iterations: usize) -> Option<NewtonOutcome> {
    let mut x = AnsatzPoint { theta: FRAC_PI_2, ..start };
    let mut last = None;
    for k in 1..=CONTINUATION_STEPS {
        let phi = FRAC_PI_2 + (p.phi - FRAC_PI_2) * k as f64 / CONTINUATION_STEPS as f64;
        let q = XStateParams { phi, ..*p };
        let guess = AnsatzPoint { theta: x.theta + (p.phi - FRAC_PI_2) / CONTINUATION_STEPS as f64, ..x };
        let out = newton(&q, guess, max_iterations);
        if out.residual >= RESIDUAL_TOL {
            return None;
        }
        x = out.point;
        last = Some(out);
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> XStateParams {
        XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap()
    }

    fn t2() -> XStateParams {
        XStateParams::new(0.55, 0.05, 0.25, 0.15, 1.3, 0.0).unwrap()
    }

    #[test]
    fn closed_form_point_is_stationary() {
        let s = solve_phi_half(&t1()).unwrap();
        let r = stationarity_residuals(&s.ansatz_point(), &t1());
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn perturbing_a1_breaks_first_and_last() {
        let s = solve_phi_half(&t1()).unwrap();
        let x = AnsatzPoint { a1: s.a1 + 0.01, ..s.ansatz_point() };
        let r = stationarity_residuals(&x, &t1());
        assert!(r[0].abs() > 1e-4);
        assert!(r[3].abs() > 1e-4);
    }

    /// On a border state σ* = ρ is a trivial stationary point.
    #[test]
    fn trivial_branch_on_separable_state() {
        let (l0, l3, l1, l2): (f64, f64, f64, f64) = (0.6, 0.1, 0.2, 0.1);
        let phi = (2.0 * (l1 * l2).sqrt() / (l0 - l3)).asin();
        let p = XStateParams::new(l0, l3, l1, l2, phi, 0.0).unwrap();
        assert!(!p.is_entangled());
        let a1 = (l0 * l3).sqrt();
        let r1 = 0.5 * (l0 / l3).ln();
        let r2 = 0.5 * (l1 / l2).ln();
        let x = AnsatzPoint { a1, r1, r2, theta: phi };
        let lhs = 2.0 * a1 * r1.sinh() * r2.cosh() * phi.sin();
        assert!((lhs - (l1 + l2)).abs() < 1e-12);
        let r = stationarity_residuals(&x, &p);
        assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = t2();
        let x = AnsatzPoint { a1: 0.17, r1: 1.05, r2: 0.21, theta: 1.2 };
        let j = stationarity_jacobian(&x, &p);
        let h = 1e-6;
        for c in 0..4 {
            let mut up = x.to_array();
            let mut dn = x.to_array();
            up[c] += h;
            dn[c] -= h;
            let fu = stationarity_residuals(&AnsatzPoint::from_array(up), &p);
            let fd = stationarity_residuals(&AnsatzPoint::from_array(dn), &p);
            for r in 0..4 {
                let fd_val = (fu[r] - fd[r]) / (2.0 * h);
                assert!((fd_val - j[r][c]).abs() < 1e-6, "({r},{c}) {fd_val} vs {}", j[r][c]);
            }
        }
    }

    #[test]
    fn t2_converges_to_frozen_solution() {
        let s = solve_general(&t2()).unwrap();
        assert_eq!(s.method, Method::GeneralNewton);
        assert!(s.info.residual < RESIDUAL_TOL);
        assert!((s.a1 - 0.16662493547).abs() < 1e-9);
        assert!((s.r1 - 1.10649832260).abs() < 1e-9);
        assert!((s.r2 - 0.23073468141).abs() < 1e-9);
        assert!((s.theta - 1.27759052135).abs() < 1e-9);
        assert!((s.e_r - 0.004524809351141187).abs() < 1e-12);
        assert!(s.info.jacobian_condition.unwrap() < ILL_CONDITIONED);
        s.check_invariants().unwrap();
    }

    #[test]
    fn phi_half_reproduces_closed_form() {
        let a = solve_phi_half(&t1()).unwrap();
        let b = solve_general(&t1()).unwrap();
        for (u, v) in [(a.a1, b.a1), (a.r1, b.r1), (a.r2, b.r2), (a.theta, b.theta), (a.e_r, b.e_r)] {
            assert!((u - v).abs() < 1e-9);
        }
        for i in 0..4 {
            assert!((a.chi[i] - b.chi[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn near_boundary_is_small() {
        // λ₋ sin φ exceeds 2√(λ₁λ₂) by 1e-6.
        let (l1, l2, l3): (f64, f64, f64) = (0.25, 0.15, 0.05);
        let l0 = 1.0 - l1 - l2 - l3;
        let target = 2.0 * (l1 * l2).sqrt() + 1e-6;
        let phi = (target / (l0 - l3)).asin();
        let p = XStateParams::new(l0, l3, l1, l2, phi, 0.0).unwrap();
        assert!((p.concurrence() - 1e-6).abs() < 1e-12);
        let s = solve_general(&p).unwrap();
        assert!(s.e_r < 1e-8 && s.e_r >= 0.0, "{}", s.e_r);
    }

    #[test]
    fn rejects_separable_and_non_canonical() {
        let sep = XStateParams::new(0.4, 0.2, 0.2, 0.2, 1.0, 0.0).unwrap();
        assert!(matches!(solve_general(&sep), Err(Error::NotEntangled(_))));
        let rot = XStateParams::new(0.5, 0.1, 0.25, 0.15, 1.0, 0.5).unwrap();
        assert!(matches!(solve_general(&rot), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn dephased_corner() {
        let p = XStateParams::new(0.7, 0.3, 0.0, 0.0, 1.0, 0.0).unwrap();
        let s = solve_general(&p).unwrap();
        assert_eq!(s.method, Method::Dephased);
        let m = p.matrix();
        assert!((s.chi[0] - m[(0, 0)].re).abs() < 1e-15);
    }

    #[test]
    fn phi_sweep_is_continuous() {
        let base = t2();
        let steps = 50;
        let (lo, hi) = (0.9, FRAC_PI_2);
        let values: Vec<f64> = (0..=steps)
            .map(|k| {
                let phi = lo + (hi - lo) * k as f64 / steps as f64;
                solve_general(&XStateParams { phi, ..base }).unwrap().e_r
            })
            .collect();
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for i in 1..diffs.len() - 1 {
            let neighbour = diffs[i - 1].max(diffs[i + 1]);
            assert!(diffs[i] <= 10.0 * neighbour + 1e-12, "jump at step {i}");
        }
    }
}
