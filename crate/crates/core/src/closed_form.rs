//! Closest separable state on the `φ = π/2` slice and the top-level REE entry
//! point.
//!
//! On that slice ρ and σ* share an eigenbasis, so the problem reduces to
//! minimising `Σ λᵢ log(λᵢ/χᵢ)` subject to `Σχᵢ = 1` and the border condition
//! `χ₁χ₂ = ¼(χ₀ − χ₃)²`. For `λ₁ ≠ λ₂` with `λ₁λ₂ > 0` the stationarity system
//! has the closed-form solution implemented by [`solve_phi_half`]:
//!
//! ```text
//! Δ  = λ₁ − λ₂
//! r₂ = log[(√(Δ²λ₋² + 4λ₁λ₂(1 − Δ²)) − Δλ₋) / (2λ₂(1 − Δ))]
//! r₁ = ½ log(1 − Δ tanh(r₂/2)) − ½ log(1 − Δ coth(r₂/2))
//! A₁ = Δ / (2 sinh r₁ sinh r₂)
//! ```
//!
//! The remaining corners go through the KKT Newton iteration in
//! [`solve_diagonal_min`].

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::general::{self, stationarity_residuals, AnsatzPoint, GeneralOptions};
use crate::linalg::{xlogx, ComplexMatrix4, DensityMatrix, PSD_TOL};
use crate::witness::{certify_with, Certificate, DEFAULT_OVERLAP_TOL};
use crate::xstate::{CanonicalTransform, XStateParams};

/// Below this `|λ₁ − λ₂|` the closed form loses accuracy to cancellation.
pub const MIN_CLOSED_FORM_GAP: f64 = 1e-6;
/// Newton stops once the KKT residual ∞-norm falls below this.
pub const KKT_TOL: f64 = 1e-12;
/// A stalled Newton iteration is still accepted below this residual.
pub const KKT_ACCEPT_TOL: f64 = 1e-11;
pub const KKT_MAX_ITERATIONS: usize = 200;

/// Tolerance used by [`ClosestSeparable::check_invariants`].
pub const INVARIANT_TOL: f64 = 1e-10;

/// Which path produced a [`ClosestSeparable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    DiagonalNewton,
    GeneralNewton,
    /// `λ₁ = λ₂ = 0`: σ* is the dephased state `diag(ρ₀₀, 0, 0, ρ₃₃)`.
    Dephased,
    /// ρ is separable and σ* = ρ.
    Separable,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::DiagonalNewton => "diagonal_newton",
            Method::GeneralNewton => "general_newton",
            Method::Dephased => "dephased",
            Method::Separable => "separable",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: Option<u64>,
    /// Final residual ∞-norm of the system the solver worked on.
    pub residual: f64,
    pub jacobian_condition: Option<f64>,
}

/// A same-structure separable state
///
/// ```text
/// σ* = ⎡ ½(χ₊+χ₋cos θ)  0   0  ½χ₋ sin θ ⎤
///      ⎢      0         χ₁  0      0     ⎥
///      ⎢      0         0   χ₂     0     ⎥
///      ⎣   ½χ₋ sin θ    0   0  ½(χ₊−χ₋cos θ)⎦
/// ```
///
/// with `χ₊ = 2A₁cosh r₁`, `χ₋ = 2A₁sinh r₁`, `χ₁,₂ = A₂e^{±r₂}` and
/// `A₂ = A₁ sinh r₁ sin θ`. `chi` holds `(χ₀, χ₁, χ₂, χ₃)` where `χ₀, χ₃` are
/// the eigenvalues of the corner block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestSeparable {
    /// Canonical parameters of the state this solves.
    pub params: XStateParams,
    pub theta: f64,
    pub a1: f64,
    pub r1: f64,
    pub r2: f64,
    pub a2: f64,
    pub chi: [f64; 4],
    pub sigma_star: DensityMatrix,
    pub e_r: f64,
    pub method: Method,
    pub info: SolveInfo,
}

fn sigma_matrix(chi: [f64; 4], theta: f64) -> ComplexMatrix4 {
    let (plus, minus) = (chi[0] + chi[3], chi[0] - chi[3]);
    let (s, co) = theta.sin_cos();
    let mut m = ComplexMatrix4::from_real_diagonal([
        0.5 * (plus + minus * co),
        chi[1],
        chi[2],
        0.5 * (plus - minus * co),
    ]);
    m[(0, 3)] = crate::linalg::cr(0.5 * minus * s);
    m[(3, 0)] = m[(0, 3)];
    m
}

/// `λ log μ` with `0 log 0 = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

impl ClosestSeparable {
    /// Builds the state from ansatz coordinates. `E_r` uses
    /// `−Tr ρ log σ = −λ₊ log A₁ − λ₋ r₁ cos(θ − φ) − λ₁ log χ₁ − λ₂ log χ₂`.
    pub(crate) fn from_ansatz(
        p: &XStateParams,
        x: &AnsatzPoint,
        method: Method,
        info: SolveInfo,
    ) -> Self {
        let AnsatzPoint { a1, r1, r2, theta } = *x;
        let a2 = a1 * r1.sinh() * theta.sin();
        let chi = [a1 * r1.exp(), a2 * r2.exp(), a2 * (-r2).exp(), a1 * (-r1).exp()];
        let cross = p.lambda_plus() * a1.ln()
            + p.lambda_minus() * r1 * (theta - p.phi).cos()
            + xlogy(p.lambda1, chi[1])
            + xlogy(p.lambda2, chi[2]);
        let e_r = neg_entropy(p) - cross;
        Self {
            params: *p,
            theta,
            a1,
            r1,
            r2,
            a2,
            chi,
            sigma_star: DensityMatrix::assembled(sigma_matrix(chi, theta)),
            e_r,
            method,
            info,
        }
    }

    /// Builds the state from its spectrum on the `θ = φ = π/2` slice.
    /// `E_r = Σ λᵢ log(λᵢ/χᵢ)`.
    pub(crate) fn from_chi(p: &XStateParams, chi: [f64; 4], method: Method, info: SolveInfo) -> Self {
        let lam = p.spectrum();
        let e_r = (0..4).map(|i| xlogx(lam[i]) - xlogy(lam[i], chi[i])).sum();
        Self::assembled_from_chi(p, chi, FRAC_PI_2, e_r, method, info)
    }

    fn assembled_from_chi(
        p: &XStateParams,
        chi: [f64; 4],
        theta: f64,
        e_r: f64,
        method: Method,
        info: SolveInfo,
    ) -> Self {
        let a1 = (chi[0] * chi[3]).sqrt();
        let r1 = if chi[3] > 0.0 { 0.5 * (chi[0] / chi[3]).ln() } else { f64::INFINITY };
        let a2 = (chi[1] * chi[2]).sqrt();
        let r2 = if chi[1] > 0.0 && chi[2] > 0.0 { 0.5 * (chi[1] / chi[2]).ln() } else { 0.0 };
        Self {
            params: *p,
            theta,
            a1,
            r1,
            r2,
            a2,
            chi,
            sigma_star: DensityMatrix::assembled(sigma_matrix(chi, theta)),
            e_r,
            method,
            info,
        }
    }

    /// `σ* = diag(ρ₀₀, 0, 0, ρ₃₃)` for `λ₁ = λ₂ = 0`; `E_r = S(diag ρ) − S(ρ)`.
    pub(crate) fn dephased(p: &XStateParams) -> Self {
        let m = p.matrix();
        let (d0, d3) = (m[(0, 0)].re, m[(3, 3)].re);
        let e_r = (neg_entropy(p) - xlogx(d0) - xlogx(d3)).max(0.0);
        // θ = π puts the larger eigenvalue on |11⟩.
        let (chi, theta) = if d0 < d3 {
            ([d3, 0.0, 0.0, d0], std::f64::consts::PI)
        } else if p.is_phi_half() {
            ([d0, 0.0, 0.0, d3], FRAC_PI_2)
        } else {
            ([d0, 0.0, 0.0, d3], 0.0)
        };
        Self::assembled_from_chi(p, chi, theta, e_r, Method::Dephased, SolveInfo::default())
    }

    /// `σ* = ρ` with `E_r = 0`.
    pub(crate) fn separable(p: &XStateParams) -> Self {
        let rho = p.matrix();
        let spec = p.spectrum();
        let chi = [spec[0], spec[1], spec[2], spec[3]];
        let mut s = Self::assembled_from_chi(p, chi, p.phi, 0.0, Method::Separable, SolveInfo::default());
        s.sigma_star = DensityMatrix::assembled(rho);
        s
    }

    pub fn chi_plus(&self) -> f64 {
        self.chi[0] + self.chi[3]
    }

    pub fn chi_minus(&self) -> f64 {
        self.chi[0] - self.chi[3]
    }

    /// Ansatz coordinates of this solution.
    pub fn ansatz_point(&self) -> AnsatzPoint {
        AnsatzPoint { a1: self.a1, r1: self.r1, r2: self.r2, theta: self.theta }
    }

    /// `χ₁χ₂ − (½χ₋ sin θ)²`.
    pub fn border_residual(&self) -> f64 {
        let h = 0.5 * self.chi_minus() * self.theta.sin();
        self.chi[1] * self.chi[2] - h * h
    }

    /// `Σχᵢ − 1`.
    pub fn trace_residual(&self) -> f64 {
        self.chi.iter().sum::<f64>() - 1.0
    }

    /// Largest mismatch between `chi` and the ansatz coordinates.
    pub fn consistency_residual(&self) -> f64 {
        if !(self.a1 > 0.0) || !self.r1.is_finite() {
            return 0.0;
        }
        let (a1, r1) = (self.a1, self.r1);
        let a2 = a1 * r1.sinh() * self.theta.sin();
        let mut err = [
            self.chi_plus() - 2.0 * a1 * r1.cosh(),
            self.chi_minus() - 2.0 * a1 * r1.sinh(),
            self.a2 - a2,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
        if self.chi[1] > 0.0 && self.chi[2] > 0.0 {
            err = err
                .max((self.chi[1] - a2 * self.r2.exp()).abs())
                .max((self.chi[2] - a2 * (-self.r2).exp()).abs());
        }
        err
    }

    pub fn min_pt_eigenvalue(&self) -> f64 {
        self.sigma_star.min_pt_eigenvalue()
    }

    /// Checks the structural invariants: ansatz consistency, the border
    /// condition, unit trace, a valid σ* and a PSD partial transpose.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: &str, v: f64| {
            Err(Error::InvalidParams(format!("closest separable state: {what} = {v:e}")))
        };
        if self.method != Method::Separable {
            let c = self.consistency_residual();
            if c > INVARIANT_TOL {
                return fail("ansatz inconsistency", c);
            }
            let b = self.border_residual();
            if b.abs() > INVARIANT_TOL {
                return fail("border residual", b);
            }
        }
        let t = self.trace_residual();
        if t.abs() > INVARIANT_TOL {
            return fail("trace residual", t);
        }
        if self.chi.iter().any(|&x| x < 0.0) {
            return fail("negative eigenvalue", self.chi.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        DensityMatrix::new(*self.sigma_star.matrix())?;
        let pt = self.min_pt_eigenvalue();
        if pt < -PSD_TOL {
            return fail("partial-transpose eigenvalue", pt);
        }
        Ok(())
    }
}

fn neg_entropy(p: &XStateParams) -> f64 {
    p.spectrum().iter().map(|&x| xlogx(x)).sum()
}

fn require_phi_half(p: &XStateParams) -> Result<()> {
    p.validate()?;
    if !p.is_canonical() || !p.is_phi_half() {
        return Err(Error::InvalidParams(
            "expected canonical parameters with phi = pi/2".into(),
        ));
    }
    if !p.is_entangled() {
        return Err(Error::NotEntangled(p.concurrence()));
    }
    Ok(())
}

/// Closed-form closest separable state for canonical, entangled `φ = π/2`
/// parameters with `λ₁ ≠ λ₂` and `λ₁λ₂ > 0`.
pub fn solve_phi_half(p: &XStateParams) -> Result<ClosestSeparable> {
    require_phi_half(p)?;
    let (l1, l2, lm) = (p.lambda1, p.lambda2, p.lambda_minus());
    let delta = l1 - l2;
    if l1 == 0.0 || l2 == 0.0 {
        return Err(Error::DegenerateParams("lambda1 * lambda2 = 0".into()));
    }
    if delta.abs() < MIN_CLOSED_FORM_GAP {
        return Err(Error::DegenerateParams(format!("|lambda1 - lambda2| = {:e}", delta.abs())));
    }
    // Positive root of 2λ₂(1−Δ)x² + 2λ₋Δx − 2λ₁(1+Δ) = 0, x = e^{r₂}.
    let disc = (delta * lm).powi(2) + 4.0 * l1 * l2 * (1.0 - delta * delta);
    let x = (disc.sqrt() - delta * lm) / (2.0 * l2 * (1.0 - delta));
    let r2 = x.ln();
    let h = 0.5 * r2;
    let r1 = 0.5 * (1.0 - delta * h.tanh()).ln() - 0.5 * (1.0 - delta / h.tanh()).ln();
    let a1 = delta / (2.0 * r1.sinh() * r2.sinh());
    if !(a1 > 0.0) || !r1.is_finite() {
        return Err(Error::DegenerateParams(format!(
            "closed form left its domain (A1 = {a1}, r1 = {r1})"
        )));
    }
    let point = AnsatzPoint { a1, r1, r2, theta: FRAC_PI_2 };
    let residual = stationarity_residuals(&point, p).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let info = SolveInfo { residual, ..SolveInfo::default() };
    let mut sol = ClosestSeparable::from_ansatz(p, &point, Method::ClosedForm, info);
    // Shared eigenbasis: the direct sum is the more accurate expression.
    let lam = p.spectrum();
    sol.e_r = (0..4).map(|i| xlogx(lam[i]) - xlogy(lam[i], sol.chi[i])).sum();
    Ok(sol)
}

/// KKT residual for unknowns `y = (χ₀, χ₁, χ₂, χ₃, μ, z)`.
fn kkt_residual(lam: &[f64; 4], y: &[f64; 6]) -> [f64; 6] {
    let [c0, c1, c2, c3, mu, z] = *y;
    let half_minus = 0.5 * (c0 - c3);
    [
        -lam[0] / c0 + mu + z * half_minus,
        -lam[1] / c1 + mu - z * c2,
        -lam[2] / c2 + mu - z * c1,
        -lam[3] / c3 + mu - z * half_minus,
        c0 + c1 + c2 + c3 - 1.0,
        c1 * c2 - half_minus * half_minus,
    ]
}

fn kkt_jacobian(lam: &[f64; 4], y: &[f64; 6]) -> [[f64; 6]; 6] {
    let [c0, c1, c2, c3, _, z] = *y;
    let hm = 0.5 * (c0 - c3);
    [
        [lam[0] / (c0 * c0) + 0.5 * z, 0.0, 0.0, -0.5 * z, 1.0, hm],
        [0.0, lam[1] / (c1 * c1), -z, 0.0, 1.0, -c2],
        [0.0, -z, lam[2] / (c2 * c2), 0.0, 1.0, -c1],
        [-0.5 * z, 0.0, 0.0, lam[3] / (c3 * c3) + 0.5 * z, 1.0, -hm],
        [1.0, 1.0, 1.0, 1.0, 0.0, 0.0],
        [-hm, c2, c1, hm, 0.0, 0.0],
    ]
}

/// Point where the segment from λ to the maximally mixed state meets the
/// border `χ₁χ₂ = ¼(χ₀ − χ₃)²`.
fn border_projection(lam: &[f64; 4]) -> [f64; 4] {
    let at = |t: f64| lam.map(|l| (1.0 - t) * l + 0.25 * t);
    let g = |t: f64| {
        let c = at(t);
        c[1] * c[2] - 0.25 * (c[0] - c[3]).powi(2)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    at(hi)
}

/// Minimises `Σ λᵢ log(λᵢ/χᵢ)` over the border of the separable set on the
/// `φ = π/2` slice by damped Newton on the KKT system.
pub fn solve_diagonal_min(p: &XStateParams) -> Result<ClosestSeparable> {
    require_phi_half(p)?;
    if p.lambda1 == 0.0 && p.lambda2 == 0.0 {
        return Ok(ClosestSeparable::dephased(p));
    }
    let lam = p.spectrum();
    let chi0 = border_projection(&lam);
    // Least-squares z for μ = 1 from the first four stationarity rows.
    let hm = 0.5 * (chi0[0] - chi0[3]);
    let coef = [hm, -chi0[2], -chi0[1], -hm];
    let rhs: [f64; 4] = std::array::from_fn(|i| lam[i] / chi0[i] - 1.0);
    let den: f64 = coef.iter().map(|c| c * c).sum();
    let z0 = if den > 0.0 { coef.iter().zip(&rhs).map(|(c, r)| c * r).sum::<f64>() / den } else { 0.0 };
    let mut y = [chi0[0], chi0[1], chi0[2], chi0[3], 1.0, z0];

    let mut f = kkt_residual(&lam, &y);
    let mut iterations = 0;
    while iterations < KKT_MAX_ITERATIONS && dense::norm_inf(&f) >= KKT_TOL {
        iterations += 1;
        let jac = kkt_jacobian(&lam, &y);
        let Some(step) = dense::solve(jac, f.map(|v| -v)) else {
            break;
        };
        let norm0 = dense::norm2(&f);
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-12 {
            let cand: [f64; 6] = std::array::from_fn(|i| y[i] + t * step[i]);
            if cand[..4].iter().all(|&c| c > 0.0) {
                let fc = kkt_residual(&lam, &cand);
                if dense::norm2(&fc) <= (1.0 - 1e-4 * t) * norm0 {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                y = cand;
                f = fc;
            }
            None => break,
        }
    }
    let residual = dense::norm_inf(&f);
    if residual > KKT_ACCEPT_TOL {
        return Err(Error::ConvergenceFailure { solver: "diagonal_newton", residual, iterations });
    }
    let info = SolveInfo { iterations, residual, ..SolveInfo::default() };
    Ok(ClosestSeparable::from_chi(p, [y[0], y[1], y[2], y[3]], Method::DiagonalNewton, info))
}

/// Options for [`relative_entropy_of_entanglement_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReeOptions {
    /// Slack on the product-state bound `⟨αβ|A|αβ⟩ ≤ 1`.
    pub overlap_tolerance: f64,
    pub general: GeneralOptions,
}

impl Default for ReeOptions {
    fn default() -> Self {
        Self { overlap_tolerance: DEFAULT_OVERLAP_TOL, general: GeneralOptions::default() }
    }
}

impl ReeOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { general: GeneralOptions { seed, ..GeneralOptions::default() }, ..Self::default() }
    }
}

/// Result of [`relative_entropy_of_entanglement`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ree {
    /// Relative entropy of entanglement in nats. An upper bound only when
    /// `certificate.passed` is false.
    pub e_r: f64,
    pub input: XStateParams,
    pub canonical: XStateParams,
    pub transform: CanonicalTransform,
    /// Solution in the canonical frame.
    pub solution: ClosestSeparable,
    pub certificate: Certificate,
}

impl Ree {
    pub fn certified(&self) -> bool {
        self.certificate.passed
    }

    pub fn method(&self) -> Method {
        self.solution.method
    }

    /// σ* expressed in the frame of the input parameters.
    pub fn sigma_star_input_frame(&self) -> ComplexMatrix4 {
        self.transform.to_input_frame(self.solution.sigma_star.matrix())
    }
}

/// Canonical form used for solving, with `φ` snapped to `π/2` when within
/// tolerance.
pub fn solving_frame(p: &XStateParams) -> Result<(XStateParams, CanonicalTransform)> {
    p.validate()?;
    let (mut q, transform) = p.canonicalize();
    if q.is_phi_half() {
        q.phi = FRAC_PI_2;
    }
    Ok((q, transform))
}

/// Solves a canonical state along the default path: separable states map to
/// themselves, `φ = π/2` goes to the closed form (Newton at degenerate
/// corners) and other angles to the general solver.
pub fn solve_canonical(q: &XStateParams, general: &GeneralOptions) -> Result<ClosestSeparable> {
    if !q.is_entangled() {
        return Ok(ClosestSeparable::separable(q));
    }
    if q.is_phi_half() {
        return match solve_phi_half(q) {
            Err(Error::DegenerateParams(_)) => solve_diagonal_min(q),
            other => other,
        };
    }
    general::solve_general_with(q, general)
}

/// Relative entropy of entanglement with default options.
pub fn relative_entropy_of_entanglement(p: &XStateParams) -> Result<Ree> {
    relative_entropy_of_entanglement_with(p, &ReeOptions::default())
}

/// Canonicalises, solves, and certifies. On the `φ = π/2` slice a failed
/// certificate is an error; elsewhere the value is returned as an upper bound
/// with `certificate.passed == false`.
pub fn relative_entropy_of_entanglement_with(p: &XStateParams, opts: &ReeOptions) -> Result<Ree> {
    let (q, transform) = solving_frame(p)?;
    let solution = solve_canonical(&q, &opts.general)?;
    let rho = q.to_density()?;
    let certificate = certify_with(&rho, &solution, opts.overlap_tolerance)?;
    if !certificate.passed && (q.is_phi_half() || solution.method == Method::Separable) {
        return Err(Error::CertificationFailure(certificate.summary()));
    }
    Ok(Ree { e_r: solution.e_r, input: *p, canonical: q, transform, solution, certificate })
}
