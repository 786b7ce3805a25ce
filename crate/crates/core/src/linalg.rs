//! Dense complex linear algebra for two-qubit operators.
//!
//! Everything here works on fixed 4×4 matrices in the product basis
//! `|00⟩, |01⟩, |10⟩, |11⟩`. The six-element ("X") structure of the state
//! family (diagonal plus the `|00⟩⟨11|` corner pair) is exploited where it
//! gives exact closed forms; a cyclic Jacobi eigensolver covers the general
//! Hermitian case.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` are accepted as nonnegative.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as outside the support.
pub const SUPPORT_FLOOR: f64 = 1e-12;
/// Entries outside the six-element pattern must stay below this.
pub const STRUCTURE_TOL: f64 = 1e-12;

const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Positions that may be nonzero in a six-element matrix.
const X_PATTERN: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0)];

pub type Matrix2 = [[Complex64; 2]; 2];

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A 4×4 complex matrix, row-major, indexed in the two-qubit product basis.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix4(pub [[Complex64; 4]; 4]);

impl ComplexMatrix4 {
    pub fn zeros() -> Self {
        Self([[Complex64::new(0.0, 0.0); 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_real_diagonal([1.0; 4])
    }

    pub fn from_real_diagonal(d: [f64; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, &x) in d.iter().enumerate() {
            m.0[i][i] = cr(x);
        }
        m
    }

    /// `v v†` for a column vector `v`.
    pub fn outer(v: &[Complex64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.0[0][0].re, self.0[1][1].re, self.0[2][2].re, self.0[3][3].re]
    }

    /// `max |M[i][j] − conj(M[j][i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in i..4 {
                err = err.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        err
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus among entries outside the six-element pattern.
    pub fn off_structure_mass(&self) -> f64 {
        let mut mass = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if !X_PATTERN.contains(&(i, j)) {
                    mass = mass.max(self.0[i][j].norm());
                }
            }
        }
        mass
    }

    pub fn is_x_structured(&self, tol: f64) -> bool {
        self.off_structure_mass() <= tol
    }

    /// `v† M v`.
    pub fn expectation(&self, v: &[Complex64; 4]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..4 {
                row += self.0[i][j] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    /// Real part of `Tr(self · other)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                acc += (self.0[i][k] * other.0[k][i]).re;
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMatrix4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }
}

impl Sub for ComplexMatrix4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] -= rhs.0[i][j];
            }
        }
        m
    }
}

impl Mul for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl fmt::Debug for ComplexMatrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix4[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition of a Hermitian 4×4 matrix.
///
/// `values` are sorted descending; `vectors[k]` is the unit eigenvector of
/// `values[k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum4 {
    pub values: [f64; 4],
    pub vectors: [[Complex64; 4]; 4],
}

impl Spectrum4 {
    fn sorted(values: [f64; 4], vectors: [[Complex64; 4]; 4]) -> Self {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        Self {
            values: order.map(|k| values[k]),
            vectors: order.map(|k| vectors[k]),
        }
    }

    /// `Σ λᵢ vᵢ vᵢ†`.
    pub fn reconstruct(&self) -> ComplexMatrix4 {
        self.map(|x| x)
    }

    /// `Σ f(λᵢ) vᵢ vᵢ†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix4 {
        let mut m = ComplexMatrix4::zeros();
        for k in 0..4 {
            let fx = f(self.values[k]);
            if fx == 0.0 {
                continue;
            }
            m = m + ComplexMatrix4::outer(&self.vectors[k]).scale(fx);
        }
        m
    }

    pub fn min(&self) -> f64 {
        self.values[3]
    }

    /// Largest `|⟨vᵢ|vⱼ⟩ − δᵢⱼ|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let ip: Complex64 = (0..4)
                    .map(|k| self.vectors[i][k].conj() * self.vectors[j][k])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((ip - target).norm());
            }
        }
        err
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Only the Hermitian part of `m` is used.
pub fn eigh(m: &ComplexMatrix4) -> Spectrum4 {
    let mut a = (*m + m.adjoint()).scale(0.5).0;
    let mut v = ComplexMatrix4::identity().0;
    let scale = ComplexMatrix4(a).frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = diag(1, e^{-iω}) · [[c, s], [-s, c]] on the (p, q) plane.
                let u_pp = cr(cs);
                let u_pq = cr(sn);
                let u_qp = -phase.conj() * sn;
                let u_qq = phase.conj() * cs;

                for row in a.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * u_pp + xq * u_qp;
                    row[q] = xp * u_pq + xq * u_qq;
                }
                for k in 0..4 {
                    let (xp, xq) = (a[p][k], a[q][k]);
                    a[p][k] = u_pp.conj() * xp + u_qp.conj() * xq;
                    a[q][k] = u_pq.conj() * xp + u_qq.conj() * xq;
                }
                for row in v.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * u_pp + xq * u_qp;
                    row[q] = xp * u_pq + xq * u_qq;
                }
                a[p][q] = Complex64::new(0.0, 0.0);
                a[q][p] = Complex64::new(0.0, 0.0);
                a[p][p] = cr(a[p][p].re);
                a[q][q] = cr(a[q][q].re);
            }
        }
    }

    let values = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    let vectors = [0, 1, 2, 3].map(|k| [v[0][k], v[1][k], v[2][k], v[3][k]]);
    Spectrum4::sorted(values, vectors)
}

/// Closed-form eigenpairs of a six-element Hermitian matrix: the `{|00⟩,|11⟩}`
/// block is diagonalised analytically, `|01⟩` and `|10⟩` are eigenvectors.
pub fn eig_x_structured(m: &ComplexMatrix4) -> Result<Spectrum4> {
    let off = m.off_structure_mass();
    if off > STRUCTURE_TOL {
        return Err(Error::StructureViolation(format!(
            "off-pattern entry of modulus {off:e}"
        )));
    }
    let a = m[(0, 0)].re;
    let d = m[(3, 3)].re;
    let w = 0.5 * (m[(0, 3)] + m[(3, 0)].conj());
    let half_gap = 0.5 * (a - d);
    let radius = half_gap.hypot(w.norm());
    let mid = 0.5 * (a + d);
    let angle = w.norm().atan2(half_gap);
    let (s, co) = (0.5 * angle).sin_cos();
    let ph = if w.norm() > 0.0 { (w / w.norm()).conj() } else { cr(1.0) };
    let zero = Complex64::new(0.0, 0.0);

    if w.norm() == 0.0 {
        // Diagonal block: keep entries and basis vectors exact.
        let e = |k: usize| std::array::from_fn(|i| cr(if i == k { 1.0 } else { 0.0 }));
        let values = [a, m[(1, 1)].re, m[(2, 2)].re, d];
        return Ok(Spectrum4::sorted(values, [e(0), e(1), e(2), e(3)]));
    }
    let values = [mid + radius, m[(1, 1)].re, m[(2, 2)].re, mid - radius];
    let vectors = [
        [cr(co), zero, zero, ph * s],
        [zero, cr(1.0), zero, zero],
        [zero, zero, cr(1.0), zero],
        [cr(-s), zero, zero, ph * co],
    ];
    Ok(Spectrum4::sorted(values, vectors))
}

/// Partial transpose on the second qubit: `(i₁i₂, j₁j₂) ↦ (i₁j₂, j₁i₂)`.
pub fn partial_transpose(m: &ComplexMatrix4) -> ComplexMatrix4 {
    let mut out = ComplexMatrix4::zeros();
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    out.0[2 * i1 + j2][2 * j1 + i2] = m.0[2 * i1 + i2][2 * j1 + j2];
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue of the partial transpose.
pub fn min_pt_eigenvalue(m: &ComplexMatrix4) -> f64 {
    eigh(&partial_transpose(m)).min()
}

/// Single-qubit pure state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QubitState {
    pub theta: f64,
    pub phi: f64,
}

impl QubitState {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        let (s, co) = (0.5 * self.theta).sin_cos();
        [cr(co), Complex64::from_polar(s, self.phi)]
    }

    /// `|self⟩ ⊗ |other⟩` in the product basis.
    pub fn product(&self, other: &QubitState) -> [Complex64; 4] {
        let a = self.amplitudes();
        let b = other.amplitudes();
        [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    }
}

/// A unit-trace, Hermitian, positive semidefinite 4×4 operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix4,
}

impl DensityMatrix {
    /// Validates and wraps `m`.
    pub fn new(m: ComplexMatrix4) -> Result<Self> {
        let herm = m.hermiticity_error();
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidParams(format!(
                "matrix is not Hermitian (error {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidParams(format!(
                "trace must be 1, got {}{:+}i",
                tr.re, tr.im
            )));
        }
        let min = eigh(&m).min();
        if min < -PSD_TOL {
            return Err(Error::InvalidParams(format!(
                "matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self { matrix: m })
    }

    /// Wraps `m`, rejecting only gross violations. Used for states assembled
    /// internally from probabilities, where rounding may exceed the strict
    /// trace tolerance by a few ulps.
    pub(crate) fn assembled(m: ComplexMatrix4) -> Self {
        debug_assert!(m.hermiticity_error() < 1e-9);
        debug_assert!((m.trace().re - 1.0).abs() < 1e-9);
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.matrix
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: ComplexMatrix4::from_real_diagonal([0.25; 4]) }
    }

    /// Pure state `|ψ⟩⟨ψ|` (normalised internally).
    pub fn pure(psi: [Complex64; 4]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParams("zero state vector".into()));
        }
        Self::new(ComplexMatrix4::outer(&psi.map(|z| z / norm)))
    }

    /// Spectrum, using the closed form when the matrix has six-element shape.
    pub fn spectrum(&self) -> Spectrum4 {
        eig_x_structured(&self.matrix).unwrap_or_else(|_| eigh(&self.matrix))
    }

    pub fn min_pt_eigenvalue(&self) -> f64 {
        min_pt_eigenvalue(&self.matrix)
    }
}

/// The 2×2 matrix `A cosh(r) I + A sinh(r) n·σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochBlock2 {
    pub amplitude: f64,
    pub rapidity: f64,
    pub axis: [f64; 3],
}

impl BlochBlock2 {
    pub fn new(amplitude: f64, rapidity: f64, axis: [f64; 3]) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::NonPositive(amplitude));
        }
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "Bloch axis must be a unit vector, norm {norm}"
            )));
        }
        Ok(Self { amplitude, rapidity, axis })
    }

    pub fn matrix(&self) -> Matrix2 {
        let a = self.amplitude * self.rapidity.cosh();
        let b = self.amplitude * self.rapidity.sinh();
        pauli_combination(a, b, self.axis)
    }

    pub fn log(&self) -> Result<Matrix2> {
        bloch_log(self)
    }
}

/// `a I + b n·σ`.
fn pauli_combination(a: f64, b: f64, n: [f64; 3]) -> Matrix2 {
    [
        [cr(a + b * n[2]), c(b * n[0], -b * n[1])],
        [c(b * n[0], b * n[1]), cr(a - b * n[2])],
    ]
}

/// Matrix logarithm of a Bloch block: `log A · I + r n·σ`.
pub fn bloch_log(b: &BlochBlock2) -> Result<Matrix2> {
    if !(b.amplitude > 0.0) {
        return Err(Error::NonPositive(b.amplitude));
    }
    Ok(pauli_combination(b.amplitude.ln(), b.rapidity, b.axis))
}

/// Logarithm restricted to the support of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportLog {
    pub log: ComplexMatrix4,
    /// `support[k]` is true when `values[k] >= floor`.
    pub support: [bool; 4],
}

/// `Σ log(λᵢ) vᵢvᵢ†` over eigenvalues `λᵢ ≥ floor`.
pub fn matrix_log_on_support(s: &Spectrum4, floor: f64) -> SupportLog {
    let support = s.values.map(|x| x >= floor);
    let mut log = ComplexMatrix4::zeros();
    for k in 0..4 {
        if support[k] {
            log = log + ComplexMatrix4::outer(&s.vectors[k]).scale(s.values[k].ln());
        }
    }
    SupportLog { log, support }
}

/// `x log x` with the convention `0 log 0 = 0`; tiny negatives are clamped.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Quantum relative entropy `Tr ρ(log ρ − log σ)` in nats.
///
/// Returns `f64::INFINITY` when the support of `rho` is not contained in the
/// support of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let neg_entropy: f64 = rho.spectrum().values.iter().map(|&x| xlogx(x)).sum();
    let s = sigma.spectrum();
    let mut cross = 0.0;
    for k in 0..4 {
        let weight = rho.matrix().expectation(&s.vectors[k]).re;
        if s.values[k] >= SUPPORT_FLOOR {
            cross += weight * s.values[k].ln();
        } else if weight > SUPPORT_FLOOR {
            return f64::INFINITY;
        }
    }
    neg_entropy - cross
}

/// Von Neumann entropy `−Tr ρ log ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    -rho.spectrum().values.iter().map(|&x| xlogx(x)).sum::<f64>()
}
