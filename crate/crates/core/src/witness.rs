//! Optimality certificate for a candidate closest separable state.
//!
//! For `f(x) = S(ρ ‖ (1−x)σ* + xσ)` the directional derivative at `x = 0` is
//! `1 − Tr Aσ`, where in the eigenbasis `{|χₙ⟩}` of σ*
//!
//! ```text
//! A_mn = ⟨χ_m|ρ|χ_n⟩ (log χ_n − log χ_m) / (χ_n − χ_m)
//! ```
//!
//! (with `1/χ` on the diagonal). Since the separable set is the convex hull
//! of product states, σ* is the global minimiser iff `Tr Aσ* = 1` and
//! `⟨αβ|A|αβ⟩ ≤ 1` for every product state. On the `θ = φ = π/2` slice A has
//! the shape
//!
//! ```text
//!     ⎡1 0 0 D⎤
//! A = ⎢0 B 0 0⎥ ,  B = λ₁/χ₁,  C = λ₂/χ₂,  max ⟨αβ|A|αβ⟩ = 1 + (D² − (B−1)(C−1)) / (4(2 − B − C + 2D)).
//!     ⎢0 0 C 0⎥
//!     ⎣D 0 0 1⎦
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::{ClosestSeparable, Method};
use crate::dense;
use crate::error::{Error, Result};
use crate::linalg::{cr, eig_x_structured, eigh, ComplexMatrix4, DensityMatrix, QubitState, Spectrum4, SUPPORT_FLOOR};

/// Eigenvalues closer than this use the coincident-limit rule.
pub const COINCIDENT_TOL: f64 = 1e-9;
/// Slack on `⟨αβ|A|αβ⟩ ≤ 1`.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-7;
/// Tolerance on `Tr Aσ* = 1` and on `D² = (B−1)(C−1)`.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Tolerance for recognising the `[[1,0,0,D],[0,B,0,0],[0,0,C,0],[D,0,0,1]]` shape.
pub const PATTERN_TOL: f64 = 1e-9;
/// The closed-form product maximum needs `2 − B − C + 2D` above this.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

const GRID: usize = 64;
/// Per-axis grid for A outside the six-element shape (four angles).
const GRID_FULL: usize = 20;
const REFINE_STEPS: usize = 50;
const FD_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessA {
    /// A in the product basis.
    pub matrix: ComplexMatrix4,
    pub b: f64,
    pub c: f64,
    /// Real part of the `|00⟩⟨11|` element.
    pub d: f64,
    /// Multiplier `(λ₁/χ₁ − λ₂/χ₂)/(χ₁ − χ₂)` when σ* is a same-structure
    /// solution with `χ₁ ≠ χ₂`.
    pub z: Option<f64>,
    /// `A_mn` in the eigenbasis of σ*, ordered as `sigma_spectrum`.
    pub eigen_elements: [[Complex64; 4]; 4],
    pub sigma_spectrum: Spectrum4,
    /// Rows and columns outside the support of σ* were set to zero.
    pub support_restricted: bool,
}

impl WitnessA {
    /// A with the standard six-element shape and the given `B, C, D`.
    pub fn from_pattern(b: f64, c: f64, d: f64) -> Self {
        let mut m = ComplexMatrix4::from_real_diagonal([1.0, b, c, 1.0]);
        m[(0, 3)] = cr(d);
        m[(3, 0)] = cr(d);
        let spectrum = Spectrum4 {
            values: [1.0; 4],
            vectors: std::array::from_fn(|i| std::array::from_fn(|j| cr(if i == j { 1.0 } else { 0.0 }))),
        };
        Self {
            matrix: m,
            b,
            c,
            d,
            z: None,
            eigen_elements: m.0,
            sigma_spectrum: spectrum,
            support_restricted: false,
        }
    }

    fn from_matrix(matrix: ComplexMatrix4, eigen_elements: [[Complex64; 4]; 4], spectrum: Spectrum4, restricted: bool) -> Self {
        Self {
            matrix,
            b: matrix[(1, 1)].re,
            c: matrix[(2, 2)].re,
            d: matrix[(0, 3)].re,
            z: None,
            eigen_elements,
            sigma_spectrum: spectrum,
            support_restricted: restricted,
        }
    }

    /// Copy with `D` replaced, keeping the rest of the matrix.
    pub fn with_d(&self, d: f64) -> Self {
        let mut w = *self;
        w.d = d;
        w.matrix[(0, 3)] = cr(d);
        w.matrix[(3, 0)] = cr(d);
        w
    }

    /// Whether A has the `[[1,0,0,D],[0,B,0,0],[0,0,C,0],[D,0,0,1]]` shape
    /// with real `D`.
    pub fn matches_pattern(&self, tol: f64) -> bool {
        let m = &self.matrix;
        m.hermiticity_error() <= tol
            && m.is_x_structured(tol)
            && (m[(0, 0)].re - 1.0).abs() <= tol
            && (m[(3, 3)].re - 1.0).abs() <= tol
            && m[(0, 3)].im.abs() <= tol
    }

    /// `D² − (B−1)(C−1)`.
    pub fn border_identity(&self) -> f64 {
        self.d * self.d - (self.b - 1.0) * (self.c - 1.0)
    }

    /// `Tr(A σ)`.
    pub fn trace_with(&self, sigma: &ComplexMatrix4) -> f64 {
        self.matrix.trace_product(sigma)
    }

    /// `⟨αβ|A|αβ⟩`.
    pub fn product_expectation(&self, alpha: &QubitState, beta: &QubitState) -> f64 {
        self.matrix.expectation(&alpha.product(beta)).re
    }

    /// Closed-form product-state maximum
    /// `¼(2 + B + C + 2|D| + (B − C)²/(2 − B − C + 2|D|))`.
    ///
    /// The formula is the stationary value on the slice `θ₁ + θ₂ = π`. It is
    /// returned only when A has the standard shape, the denominator exceeds
    /// `1e-12`, the stationary point is interior, and it is a local maximum
    /// in both angles; otherwise the maximum sits elsewhere and `None` is
    /// returned.
    pub fn closed_form_max(&self) -> Option<f64> {
        if !self.matches_pattern(PATTERN_TOL) {
            return None;
        }
        let (b, c) = (self.b, self.c);
        let d = self.matrix[(0, 3)].norm();
        let den = 2.0 - b - c + 2.0 * d;
        if den <= DENOMINATOR_FLOOR {
            return None;
        }
        // ⟨αβ|A|αβ⟩ = ¼(2+B+C) + P(cos θ₁ − cos θ₂) + Q cos θ₁ cos θ₂ + R sin θ₁ sin θ₂
        let (pp, q, r) = (0.25 * (b - c), 0.25 * (2.0 - b - c), 0.5 * d);
        let c1 = pp / (q + r);
        if c1.abs() > 1.0 {
            return None;
        }
        let s1 = (1.0 - c1 * c1).sqrt();
        let (c2, s2) = (-c1, s1);
        let h11 = -pp * c1 - q * c1 * c2 - r * s1 * s2;
        let h22 = pp * c2 - q * c1 * c2 - r * s1 * s2;
        let h12 = q * s1 * s2 + r * c1 * c2;
        let slack = 1e-12;
        if h11 > slack || h22 > slack || h11 * h22 - h12 * h12 < -slack {
            return None;
        }
        Some(0.25 * (2.0 + b + c + 2.0 * d + (b - c).powi(2) / den))
    }
}

/// `(log y − log x)/(y − x)`, with `2/(x + y)` when `|y − x| < 1e-9`.
fn log_divided_difference(x: f64, y: f64) -> f64 {
    let h = y - x;
    if h.abs() < COINCIDENT_TOL {
        2.0 / (x + y)
    } else {
        (h / x).ln_1p() / h
    }
}

fn sigma_spectrum(sigma: &ComplexMatrix4) -> Spectrum4 {
    eig_x_structured(sigma).unwrap_or_else(|_| eigh(sigma))
}

/// Builds A from ρ and a candidate σ. With `restrict`, eigenvectors of σ
/// below the support floor get zero rows and columns provided ρ has no
/// weight there; otherwise they raise `SupportDeficient`.
fn witness_matrix(rho: &DensityMatrix, sigma: &ComplexMatrix4, restrict: bool) -> Result<WitnessA> {
    let s = sigma_spectrum(sigma);
    let mut support = [true; 4];
    for k in 0..4 {
        if s.values[k] < SUPPORT_FLOOR {
            let weight = rho.matrix().expectation(&s.vectors[k]).re;
            if !restrict || weight > SUPPORT_FLOOR {
                return Err(Error::SupportDeficient { index: k, eigenvalue: s.values[k] });
            }
            support[k] = false;
        }
    }
    // ρ in the eigenbasis of σ.
    let mut rho_eig = [[Complex64::new(0.0, 0.0); 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    acc += s.vectors[m][i].conj() * rho.matrix()[(i, j)] * s.vectors[n][j];
                }
            }
            rho_eig[m][n] = acc;
        }
    }
    let mut elems = [[Complex64::new(0.0, 0.0); 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            if support[m] && support[n] {
                elems[m][n] = rho_eig[m][n] * log_divided_difference(s.values[m], s.values[n]);
            }
        }
    }
    let mut a = ComplexMatrix4::zeros();
    for m in 0..4 {
        for n in 0..4 {
            if elems[m][n] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..4 {
                for j in 0..4 {
                    a[(i, j)] += s.vectors[m][i] * elems[m][n] * s.vectors[n][j].conj();
                }
            }
        }
    }
    Ok(WitnessA::from_matrix(a, elems, s, support.iter().any(|&x| !x)))
}

/// A for a full-rank candidate σ.
pub fn build_witness_for(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<WitnessA> {
    witness_matrix(rho, sigma.matrix(), false)
}

/// A for a same-structure solution. Requires every `χᵢ ≥ 1e-12`.
pub fn build_witness(rho: &DensityMatrix, sigma: &ClosestSeparable) -> Result<WitnessA> {
    if let Some(k) = sigma.chi.iter().position(|&x| x < SUPPORT_FLOOR) {
        return Err(Error::SupportDeficient { index: k, eigenvalue: sigma.chi[k] });
    }
    let mut w = witness_matrix(rho, sigma.sigma_star.matrix(), false)?;
    w.z = multiplier(sigma);
    Ok(w)
}

fn multiplier(s: &ClosestSeparable) -> Option<f64> {
    let p = &s.params;
    let (c1, c2) = (s.chi[1], s.chi[2]);
    if c1 < SUPPORT_FLOOR || c2 < SUPPORT_FLOOR || (c1 - c2).abs() < COINCIDENT_TOL {
        return None;
    }
    Some((p.lambda1 / c1 - p.lambda2 / c2) / (c1 - c2))
}

/// Product-state maximum of `⟨αβ|A|αβ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductOverlap {
    pub closed_form: Option<f64>,
    pub numeric: f64,
    pub argmax: (QubitState, QubitState),
}

/// Expectation on `|α(θ₁, Φ)⟩ ⊗ |β(θ₂, 0)⟩`; for a six-element A only the
/// phase sum matters, carried here by `Φ`.
fn reduced_expectation(a: &ComplexMatrix4, x: &[f64; 3]) -> f64 {
    a.expectation(&QubitState::new(x[0], x[2]).product(&QubitState::new(x[1], 0.0))).re
}

/// Expectation on `|α(θ₁, φ₁)⟩ ⊗ |β(θ₂, φ₂)⟩`.
fn full_expectation(a: &ComplexMatrix4, x: &[f64; 4]) -> f64 {
    a.expectation(&QubitState::new(x[0], x[1]).product(&QubitState::new(x[2], x[3]))).re
}

/// Grid search followed by finite-difference Newton ascent.
fn maximize<const N: usize>(
    f: impl Fn(&[f64; N]) -> f64,
    grid_axes: [(f64, f64, bool); N],
    grid: usize,
) -> ([f64; N], f64) {
    // Grid: `true` marks a periodic axis (endpoint excluded).
    let coords = |axis: usize, k: usize| {
        let (lo, hi, periodic) = grid_axes[axis];
        let n = if periodic { grid as f64 } else { (grid - 1) as f64 };
        lo + (hi - lo) * k as f64 / n
    };
    let total = grid.pow(N as u32);
    let mut best = ([0.0; N], f64::NEG_INFINITY);
    for idx in 0..total {
        let mut rem = idx;
        let mut x = [0.0; N];
        for (axis, xi) in x.iter_mut().enumerate().rev() {
            *xi = coords(axis, rem % grid);
            rem /= grid;
        }
        let v = f(&x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut x, mut fx) = best;
    for _ in 0..REFINE_STEPS {
        let (g, h) = fd_derivatives(&f, &x, fx);
        if dense::norm_inf(&g) < 1e-14 {
            break;
        }
        let mut improved = false;
        // Newton step when the Hessian gives an ascent direction.
        if let Some(step) = dense::solve(h, g.map(|v| -v)) {
            let dot: f64 = step.iter().zip(&g).map(|(s, g)| s * g).sum();
            if dot > 0.0 {
                let cand: [f64; N] = std::array::from_fn(|i| x[i] + step[i]);
                let fc = f(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            let mut t = 1.0;
            while t > 1e-12 {
                let cand: [f64; N] = std::array::from_fn(|i| x[i] + t * g[i]);
                let fc = f(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

fn fd_derivatives<const N: usize>(f: &impl Fn(&[f64; N]) -> f64, x: &[f64; N], fx: f64) -> ([f64; N], [[f64; N]; N]) {
    let h = FD_STEP;
    let shifted = |pairs: &[(usize, f64)]| {
        let mut y = *x;
        for &(i, d) in pairs {
            y[i] += d;
        }
        f(&y)
    };
    let mut g = [0.0; N];
    let mut hess = [[0.0; N]; N];
    for i in 0..N {
        let up = shifted(&[(i, h)]);
        let dn = shifted(&[(i, -h)]);
        g[i] = (up - dn) / (2.0 * h);
        hess[i][i] = (up - 2.0 * fx + dn) / (h * h);
        for j in 0..i {
            let v = (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (g, hess)
}

/// Maximum of `⟨αβ|A|αβ⟩` over product pure states: closed form when
/// applicable, and numerically (64³ grid over `θ₁, θ₂` and the joint phase,
/// then Newton refinement). For A outside the six-element shape the search
/// runs over all four angles on a coarser start.
pub fn max_product_overlap(w: &WitnessA) -> ProductOverlap {
    let pi = std::f64::consts::PI;
    let tau = std::f64::consts::TAU;
    let a = w.matrix;
    let (numeric, argmax) = if a.is_x_structured(PATTERN_TOL) {
        let (x, v) = maximize(|x: &[f64; 3]| reduced_expectation(&a, x), [(0.0, pi, false), (0.0, pi, false), (0.0, tau, true)], GRID);
        (v, (QubitState::new(x[0], x[2]), QubitState::new(x[1], 0.0)))
    } else {
        let (x, v) = maximize(
            |x: &[f64; 4]| full_expectation(&a, x),
            [(0.0, pi, false), (0.0, tau, true), (0.0, pi, false), (0.0, tau, true)],
            GRID_FULL,
        );
        (v, (QubitState::new(x[0], x[1]), QubitState::new(x[2], x[3])))
    };
    ProductOverlap { closed_form: w.closed_form_max(), numeric, argmax }
}

/// Outcome of the optimality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `Tr Aσ* − 1`.
    pub trace_condition: f64,
    /// Numeric product-state maximum of `⟨αβ|A|αβ⟩`.
    pub max_overlap: f64,
    pub closed_form_max: Option<f64>,
    /// `D² − (B−1)(C−1)`, reported for `θ = φ = π/2` solutions.
    pub border_identity: Option<f64>,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub support_restricted: bool,
    pub overlap_tolerance: f64,
    pub passed: bool,
}

impl Certificate {
    pub fn trace_ok(&self) -> bool {
        self.trace_condition.abs() <= IDENTITY_TOL
    }

    pub fn overlap_ok(&self) -> bool {
        let bound = 1.0 + self.overlap_tolerance;
        self.max_overlap <= bound && self.closed_form_max.is_none_or(|v| v <= bound)
    }

    pub fn identity_ok(&self) -> bool {
        self.border_identity.is_none_or(|v| v.abs() <= IDENTITY_TOL)
    }

    pub fn summary(&self) -> String {
        format!(
            "trace condition {:+.3e} ({}), product maximum {:.12} ({}), border identity {} ({})",
            self.trace_condition,
            ok(self.trace_ok()),
            self.max_overlap,
            ok(self.overlap_ok()),
            self.border_identity.map_or("n/a".to_string(), |v| format!("{v:+.3e}")),
            ok(self.identity_ok()),
        )
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn assemble(w: &WitnessA, sigma: &ComplexMatrix4, border: Option<f64>, tol: f64) -> Certificate {
    let overlap = max_product_overlap(w);
    let mut cert = Certificate {
        trace_condition: w.trace_with(sigma) - 1.0,
        max_overlap: overlap.numeric,
        closed_form_max: overlap.closed_form,
        border_identity: border,
        b: w.b,
        c: w.c,
        d: w.d,
        support_restricted: w.support_restricted,
        overlap_tolerance: tol,
        passed: false,
    };
    cert.passed = cert.trace_ok() && cert.overlap_ok() && cert.identity_ok();
    cert
}

/// Certifies a witness directly against a candidate σ.
pub fn certify_witness(w: &WitnessA, sigma: &ComplexMatrix4, tol: f64) -> Certificate {
    assemble(w, sigma, None, tol)
}

/// [`certify_with`] at the default tolerance.
pub fn certify(rho: &DensityMatrix, sigma: &ClosestSeparable) -> Result<Certificate> {
    certify_with(rho, sigma, DEFAULT_OVERLAP_TOL)
}

/// Checks `Tr Aσ* = 1`, `⟨αβ|A|αβ⟩ ≤ 1 + tol`, and on the `θ = φ = π/2`
/// slice `D² = (B−1)(C−1)`. Rank-deficient σ* (Bell limit, dephased and
/// separable corners) use A restricted to the support of σ*, which requires
/// the support of ρ to lie inside it.
pub fn certify_with(rho: &DensityMatrix, sigma: &ClosestSeparable, tol: f64) -> Result<Certificate> {
    let (w, restricted) = match build_witness(rho, sigma) {
        Ok(w) => (w, false),
        Err(Error::SupportDeficient { .. }) => (witness_matrix(rho, sigma.sigma_star.matrix(), true)?, true),
        Err(e) => return Err(e),
    };
    let on_slice = !restricted
        && sigma.method != Method::Separable
        && (sigma.theta - std::f64::consts::FRAC_PI_2).abs() <= 1e-12
        && sigma.params.is_phi_half();
    let border = on_slice.then(|| w.border_identity());
    Ok(assemble(&w, sigma.sigma_star.matrix(), border, tol))
}

/// Certifies an arbitrary candidate σ for ρ.
pub fn certify_candidate(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Certificate> {
    let w = witness_matrix(rho, sigma.matrix(), true)?;
    Ok(assemble(&w, sigma.matrix(), None, DEFAULT_OVERLAP_TOL))
}
