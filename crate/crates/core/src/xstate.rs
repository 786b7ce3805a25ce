//! The six-element two-qubit state family.
//!
//! A state is parametrised by its spectrum `λ₀, λ₁, λ₂, λ₃` and two angles:
//!
//! ```text
//!     ⎡ ½(λ₊+λ₋cos φ)   0    0   ½λ₋ sin φ e^{-iη} ⎤
//! ρ = ⎢      0          λ₁   0          0          ⎥
//!     ⎢      0          0    λ₂         0          ⎥
//!     ⎣ ½λ₋ sin φ e^{iη} 0    0   ½(λ₊−λ₋cos φ)    ⎦
//! ```
//!
//! with `λ₊ = λ₀ + λ₃` and `λ₋ = λ₀ − λ₃`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, ComplexMatrix4, DensityMatrix, PSD_TOL, STRUCTURE_TOL};

/// Tolerance on `Σλᵢ = 1`.
pub const SUM_TOL: f64 = 1e-12;
/// States with concurrence at or below this are treated as separable.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-12;
/// Tolerance for recognising `φ = π/2`.
pub const PHI_HALF_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XStateParams {
    pub lambda0: f64,
    pub lambda3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi: f64,
    pub eta: f64,
}

/// Local-filtering normal form `½[[a+c,0,0,d],[0,0,0,0],[0,0,b−c,0],[d,0,0,a−b]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterNormalForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Record of the local operations applied by [`XStateParams::canonicalize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTransform {
    /// `λ₀` and `λ₃` were exchanged (a relabelling, `φ → φ + π`); the
    /// density matrix itself is unchanged by this step.
    pub relabeled: bool,
    /// Phase removed by `I ⊗ diag(1, e^{-i·phase})`, in `[0, 2π)`.
    pub phase: f64,
}

impl CanonicalTransform {
    pub fn identity() -> Self {
        Self { relabeled: false, phase: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        !self.relabeled && self.phase == 0.0
    }

    /// The local unitary `U` with `ρ_canonical = U ρ U†`.
    pub fn unitary(&self) -> ComplexMatrix4 {
        let e = Complex64::from_polar(1.0, -self.phase);
        let mut u = ComplexMatrix4::identity();
        u[(1, 1)] = e;
        u[(3, 3)] = e;
        u
    }

    /// Maps an operator from the canonical frame back to the input frame.
    pub fn to_input_frame(&self, m: &ComplexMatrix4) -> ComplexMatrix4 {
        let u = self.unitary();
        u.adjoint() * *m * u
    }
}

impl XStateParams {
    pub fn new(lambda0: f64, lambda3: f64, lambda1: f64, lambda2: f64, phi: f64, eta: f64) -> Result<Self> {
        let p = Self { lambda0, lambda3, lambda1, lambda2, phi, eta };
        p.validate()?;
        Ok(p)
    }

    /// Maximally entangled `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        Self { lambda0: 1.0, lambda3: 0.0, lambda1: 0.0, lambda2: 0.0, phi: FRAC_PI_2, eta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda0, self.lambda1, self.lambda2, self.lambda3, self.phi, self.eta];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        for (name, v) in self.named_lambdas() {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} is negative")));
            }
        }
        let sum = self.lambda0 + self.lambda1 + self.lambda2 + self.lambda3;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "lambda0 + lambda1 + lambda2 + lambda3 must equal 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn named_lambdas(&self) -> [(&'static str, f64); 4] {
        [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ]
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda0 + self.lambda3
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda0 - self.lambda3
    }

    /// Spectrum in the order `(λ₀, λ₁, λ₂, λ₃)`.
    pub fn spectrum(&self) -> [f64; 4] {
        [self.lambda0, self.lambda1, self.lambda2, self.lambda3]
    }

    /// The density matrix entries, without validation.
    // Out of line so every caller sees bit-identical entries; inlined copies
    // may lower `sin_cos` differently.
    #[inline(never)]
    pub fn matrix(&self) -> ComplexMatrix4 {
        let (lp, lm) = (self.lambda_plus(), self.lambda_minus());
        let (s, co) = self.phi.sin_cos();
        let corner = 0.5 * lm * s;
        let mut m = ComplexMatrix4::from_real_diagonal([
            0.5 * (lp + lm * co),
            self.lambda1,
            self.lambda2,
            0.5 * (lp - lm * co),
        ]);
        m[(0, 3)] = Complex64::from_polar(1.0, -self.eta) * corner;
        m[(3, 0)] = Complex64::from_polar(1.0, self.eta) * corner;
        m
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        self.validate()?;
        DensityMatrix::new(self.matrix())
    }

    pub fn from_filter_normal_form(f: &FilterNormalForm) -> Result<Self> {
        f.to_density()?;
        let lambda2 = 0.5 * (f.b - f.c);
        let lp = f.a + 0.5 * (f.c - f.b);
        let x = 0.5 * (f.b + f.c);
        let lm = x.hypot(f.d);
        let phi = if lm > 0.0 { f.d.atan2(x) } else { 0.0 };
        let p = Self {
            lambda0: 0.5 * (lp + lm),
            lambda3: 0.5 * (lp - lm),
            lambda1: 0.0,
            lambda2,
            phi,
            eta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Inverse of [`to_density`](Self::to_density). Returns canonical-range
    /// angles: `φ ∈ [0, π]` (0 for diagonal states with `m₀₀ ≥ m₃₃`) and
    /// `η = −arg(m₀₃) ∈ [0, 2π)`.
    pub fn from_matrix(m: &DensityMatrix) -> Result<Self> {
        let m = m.matrix();
        let off = m.off_structure_mass();
        if off > STRUCTURE_TOL {
            return Err(Error::StructureViolation(format!(
                "off-pattern entry of modulus {off:e}"
            )));
        }
        let (a, d) = (m[(0, 0)].re, m[(3, 3)].re);
        let w = 0.5 * (m[(0, 3)] + m[(3, 0)].conj());
        let radius = (0.5 * (a - d)).hypot(w.norm());
        let mid = 0.5 * (a + d);
        let phi = if radius > 0.0 { (2.0 * w.norm()).atan2(a - d) } else { 0.0 };
        let eta = if w.norm() > 0.0 { (-w.arg()).rem_euclid(TAU) } else { 0.0 };
        let clamp = |x: f64| if x < 0.0 && x > -PSD_TOL { 0.0 } else { x };
        Self::new(
            clamp(mid + radius),
            clamp(mid - radius),
            clamp(m[(1, 1)].re),
            clamp(m[(2, 2)].re),
            phi,
            eta,
        )
    }

    /// Brings the parameters to `η = 0`, `sin φ ≥ 0`, `λ₀ ≥ λ₃` using a
    /// relabelling and a local phase on the second qubit; neither changes the
    /// relative entropy of entanglement.
    pub fn canonicalize(&self) -> (Self, CanonicalTransform) {
        let mut q = *self;
        let mut relabeled = false;
        let mut phase = self.eta;
        if q.lambda0 < q.lambda3 {
            std::mem::swap(&mut q.lambda0, &mut q.lambda3);
            q.phi += PI;
            relabeled = true;
        }
        let (s, co) = q.phi.sin_cos();
        if q.lambda_minus() == 0.0 || s == 0.0 {
            q.phi = if q.lambda_minus() == 0.0 || co > 0.0 { 0.0 } else { PI };
            phase = 0.0;
        } else {
            q.phi = s.abs().atan2(co);
            if s < 0.0 {
                phase += PI;
            }
        }
        q.eta = 0.0;
        let phase = phase.rem_euclid(TAU);
        (q, CanonicalTransform { relabeled, phase })
    }

    pub fn is_canonical(&self) -> bool {
        self.eta == 0.0 && self.phi.sin() >= 0.0 && self.lambda0 >= self.lambda3
    }

    pub fn is_phi_half(&self) -> bool {
        (self.phi - FRAC_PI_2).abs() <= PHI_HALF_TOL
    }

    /// `max(0, |λ₋ sin φ| − 2√(λ₁λ₂))`.
    pub fn concurrence(&self) -> f64 {
        let coherence = (self.lambda_minus() * self.phi.sin()).abs();
        (coherence - 2.0 * (self.lambda1 * self.lambda2).sqrt()).max(0.0)
    }

    pub fn is_entangled(&self) -> bool {
        self.concurrence() > ENTANGLEMENT_THRESHOLD
    }
}

impl FilterNormalForm {
    pub fn matrix(&self) -> ComplexMatrix4 {
        let mut m = ComplexMatrix4::from_real_diagonal([
            0.5 * (self.a + self.c),
            0.0,
            0.5 * (self.b - self.c),
            0.5 * (self.a - self.b),
        ]);
        m[(0, 3)] = cr(0.5 * self.d);
        m[(3, 0)] = c(0.5 * self.d, 0.0);
        m
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if [self.a, self.b, self.c, self.d].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("filter-form parameters must be finite".into()));
        }
        DensityMatrix::new(self.matrix())
    }
}
