//! Brute-force reference values, independent of the analytic solvers.
//!
//! [`minimize_relative_entropy`] searches over mixtures of `K` product pure
//! states with BFGS and seeded random restarts. [`structured_min`] solves the
//! `φ = π/2` diagonal problem by nested grid plus golden-section search.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, relative_entropy, xlogx, ComplexMatrix4, DensityMatrix, QubitState, PSD_TOL};
use crate::xstate::XStateParams;

/// One term `p |αβ⟩⟨αβ|` of a separable mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductComponent {
    pub weight: f64,
    pub alpha: QubitState,
    pub beta: QubitState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductEnsemble {
    pub components: Vec<ProductComponent>,
}

/// Tolerance on the ensemble weights summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl ProductEnsemble {
    pub fn new(components: Vec<ProductComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParams("ensemble needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| !(c.weight >= 0.0)) {
            return Err(Error::InvalidParams(format!("negative ensemble weight {}", c.weight)));
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams(format!("ensemble weights sum to {sum}")));
        }
        Ok(Self { components })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn matrix(&self) -> ComplexMatrix4 {
        self.components.iter().fold(ComplexMatrix4::zeros(), |acc, c| {
            acc + ComplexMatrix4::outer(&c.alpha.product(&c.beta)).scale(c.weight)
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        ensemble_to_density(self)
    }
}

/// `Σ pᵢ |αᵢβᵢ⟩⟨αᵢβᵢ|`; separable by construction.
pub fn ensemble_to_density(e: &ProductEnsemble) -> DensityMatrix {
    let m = e.matrix();
    debug_assert!(crate::linalg::min_pt_eigenvalue(&m) >= -PSD_TOL);
    DensityMatrix::assembled(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Number of product components `K` (at least 4).
    pub components: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { components: 8, restarts: 64, seed: crate::DEFAULT_SEED, max_iterations: 300 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartDiagnostics {
    pub index: usize,
    pub value: f64,
    pub iterations: usize,
    /// Gradient ∞-norm at termination.
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Best `S(ρ‖σ)` found; an upper bound on the REE.
    pub value: f64,
    pub ensemble: ProductEnsemble,
    pub best_restart: usize,
    pub restarts: Vec<RestartDiagnostics>,
    pub seed: u64,
}

impl OracleResult {
    pub fn sigma(&self) -> DensityMatrix {
        self.ensemble.to_density()
    }
}

const PARAMS_PER_COMPONENT: usize = 5;
const GRADIENT_TOL: f64 = 1e-10;
const STALL_LIMIT: usize = 8;

/// Objective `S(ρ‖σ(x))` and its gradient over the packed parameters
/// `(w, θ₁, φ₁, θ₂, φ₂)` per component, weights `softmax(w)`.
struct Objective<'a> {
    rho: &'a ComplexMatrix4,
    neg_entropy: f64,
    k: usize,
}

struct Unpacked {
    weights: Vec<f64>,
    states: Vec<[Complex64; 4]>,
    alphas: Vec<(QubitState, QubitState)>,
}

fn softmax(w: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let max = w.clone().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

impl<'a> Objective<'a> {
    fn unpack(&self, x: &[f64]) -> Unpacked {
        let weights = softmax(x.chunks(PARAMS_PER_COMPONENT).map(|c| c[0]));
        let alphas: Vec<_> = x
            .chunks(PARAMS_PER_COMPONENT)
            .map(|c| (QubitState::new(c[1], c[2]), QubitState::new(c[3], c[4])))
            .collect();
        let states = alphas.iter().map(|(a, b)| a.product(b)).collect();
        Unpacked { weights, states, alphas }
    }

    fn sigma(&self, u: &Unpacked) -> ComplexMatrix4 {
        let mut m = ComplexMatrix4::zeros();
        for (p, v) in u.weights.iter().zip(&u.states) {
            m = m + ComplexMatrix4::outer(v).scale(*p);
        }
        m
    }

    /// Value and gradient. Uses `d S = −Tr(G dσ)` with
    /// `G = Σ ρ̂_mn (log s_n − log s_m)/(s_n − s_m) |m⟩⟨n|` in the eigenbasis
    /// of σ.
    fn eval(&self, x: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let u = self.unpack(x);
        let sigma = self.sigma(&u);
        let spec = eigh(&sigma);
        let s: [f64; 4] = spec.values.map(|v| v.max(1e-300));
        let mut cross = 0.0;
        for k in 0..4 {
            let w = self.rho.expectation(&spec.vectors[k]).re;
            cross += w * s[k].ln();
        }
        let value = self.neg_entropy - cross;
        if !want_grad || !value.is_finite() {
            return (value, Vec::new());
        }

        let v = &spec.vectors;
        let mut g = ComplexMatrix4::zeros();
        let mut rho_hat = [[Complex64::new(0.0, 0.0); 4]; 4];
        for m in 0..4 {
            let rv: [Complex64; 4] = std::array::from_fn(|i| (0..4).map(|j| self.rho[(i, j)] * v[m][j]).sum());
            for n in 0..4 {
                rho_hat[n][m] = (0..4).map(|i| v[n][i].conj() * rv[i]).sum();
            }
        }
        for m in 0..4 {
            for n in 0..4 {
                let coef = rho_hat[m][n] * log_divided(s[m], s[n]);
                for i in 0..4 {
                    for j in 0..4 {
                        g[(i, j)] += v[m][i] * coef * v[n][j].conj();
                    }
                }
            }
        }

        let mut grad = vec![0.0; x.len()];
        let dots: Vec<f64> = u.states.iter().map(|psi| g.expectation(psi).re).collect();
        let mean: f64 = u.weights.iter().zip(&dots).map(|(p, d)| p * d).sum();
        for k in 0..self.k {
            let base = k * PARAMS_PER_COMPONENT;
            let p = u.weights[k];
            grad[base] = -p * (dots[k] - mean);
            let psi = &u.states[k];
            let g_psi: [Complex64; 4] = std::array::from_fn(|i| (0..4).map(|j| g[(i, j)] * psi[j]).sum());
            let (a, b) = u.alphas[k];
            for (slot, dpsi) in component_derivatives(&a, &b).iter().enumerate() {
                let inner: Complex64 = (0..4).map(|i| dpsi[i].conj() * g_psi[i]).sum();
                grad[base + 1 + slot] = -2.0 * p * inner.re;
            }
        }
        (value, grad)
    }
}

fn log_divided(x: f64, y: f64) -> f64 {
    let h = y - x;
    if h.abs() < 1e-9 {
        2.0 / (x + y)
    } else {
        (h / x).ln_1p() / h
    }
}

/// `∂|αβ⟩` with respect to `θ₁, φ₁, θ₂, φ₂`.
fn component_derivatives(a: &QubitState, b: &QubitState) -> [[Complex64; 4]; 4] {
    let da = qubit_derivatives(a);
    let db = qubit_derivatives(b);
    let va = a.amplitudes();
    let vb = b.amplitudes();
    let kron = |x: [Complex64; 2], y: [Complex64; 2]| [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]];
    [kron(da[0], vb), kron(da[1], vb), kron(va, db[0]), kron(va, db[1])]
}

fn qubit_derivatives(q: &QubitState) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * q.theta).sin_cos();
    let e = Complex64::from_polar(1.0, q.phi);
    [
        [Complex64::new(-0.5 * s, 0.0), e * (0.5 * c)],
        [Complex64::new(0.0, 0.0), e * Complex64::new(0.0, s)],
    ]
}

struct RestartOutcome {
    x: Vec<f64>,
    diag: RestartDiagnostics,
}

fn initial_point(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(k * PARAMS_PER_COMPONENT);
    for _ in 0..k {
        let e: f64 = rng.sample(Exp1);
        x.push(e.max(1e-300).ln());
        for _ in 0..2 {
            let u: f64 = rng.random();
            x.push((1.0 - 2.0 * u).acos());
            x.push(TAU * rng.random::<f64>());
        }
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs(obj: &Objective, mut x: Vec<f64>, max_iterations: usize, index: usize) -> RestartOutcome {
    let n = x.len();
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        (0..n).for_each(|i| h[i * n + i] = 1.0);
        h
    };
    let mut h = identity(n);
    let (mut f, mut g) = obj.eval(&x, true);
    let mut iterations = 0;
    let mut stall = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < GRADIENT_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (fc, _) = obj.eval(&cand, false);
            if fc.is_finite() && fc <= f + 1e-4 * t * slope {
                next = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = next else {
            converged = true;
            break;
        };
        let (_, gc) = obj.eval(&cand, true);
        let s: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-18 {
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let improvement = f - fc;
        stall = if improvement <= 1e-15 * f.abs().max(1e-300) { stall + 1 } else { 0 };
        x = cand;
        f = fc;
        g = gc;
        if stall >= STALL_LIMIT {
            converged = true;
            break;
        }
    }
    let gradient_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    RestartOutcome { x, diag: RestartDiagnostics { index, value: f, iterations, gradient_norm, converged } }
}

/// Minimises `S(ρ‖σ)` over mixtures of `K` product pure states.
///
/// Restart `i` draws its start from `ChaCha8(seed)` on stream `i`, so results
/// do not depend on thread scheduling. The best restart wins, ties going to
/// the lowest index.
pub fn minimize_relative_entropy(rho: &DensityMatrix, config: &OracleConfig) -> Result<OracleResult> {
    if config.components < 4 {
        return Err(Error::InvalidParams(format!(
            "oracle needs at least 4 components, got {}",
            config.components
        )));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidParams("oracle needs at least one restart".into()));
    }
    let obj = Objective {
        rho: rho.matrix(),
        neg_entropy: rho.spectrum().values.iter().map(|&v| xlogx(v)).sum(),
        k: config.components,
    };
    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let x0 = initial_point(config.components, &mut rng);
            bfgs(&obj, x0, config.max_iterations, i)
        })
        .collect();
    let best = outcomes
        .iter()
        .enumerate()
        .fold(0, |b, (i, o)| if o.diag.value < outcomes[b].diag.value { i } else { b });
    let u = obj.unpack(&outcomes[best].x);
    let components = u
        .weights
        .iter()
        .zip(&u.alphas)
        .map(|(&weight, &(alpha, beta))| ProductComponent { weight, alpha, beta })
        .collect();
    let ensemble = ProductEnsemble { components };
    let value = relative_entropy(rho, &ensemble.to_density());
    Ok(OracleResult {
        value,
        ensemble,
        best_restart: best,
        restarts: outcomes.into_iter().map(|o| o.diag).collect(),
        seed: config.seed,
    })
}

const GRID_POINTS: usize = 200;
const GOLDEN_TOL: f64 = 1e-13;

/// Minimises a unimodal function on `[lo, hi]`: grid bracket, then
/// golden-section search.
fn grid_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let step = (hi - lo) / GRID_POINTS as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..=GRID_POINTS {
        let v = f(lo + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + step * best.0.saturating_sub(1) as f64;
    let mut b = (lo + step * (best.0 + 1) as f64).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(lo + step * best.0 as f64, best.1), (mid, f(mid))];
    if candidates[1].1 <= candidates[0].1 {
        candidates[1]
    } else {
        candidates[0]
    }
}

/// `Σ λᵢ log(λᵢ/χᵢ)`, `+∞` when some `λᵢ > 0` meets `χᵢ ≤ 0`.
fn diagonal_objective(lam: &[f64; 4], chi: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        if lam[i] > 0.0 {
            if chi[i] <= 0.0 {
                return f64::INFINITY;
            }
            acc += lam[i] * (lam[i] / chi[i]).ln();
        }
    }
    acc
}

/// Minimum of `Σ λᵢ log(λᵢ/χᵢ)` over the `φ = π/2` slice
/// `χ₁χ₂ ≥ ¼(χ₀ − χ₃)²`, `Σχ = 1`.
///
/// Outer variable `s = χ₁ + χ₂`, middle `χ₋ = χ₀ − χ₃`; for fixed `(s, χ₋)`
/// the best `χ₁` is `sλ₁/(λ₁+λ₂)` clamped to the feasible interval.
pub fn structured_min(p: &XStateParams) -> Result<f64> {
    p.validate()?;
    if !p.is_canonical() || (p.phi - FRAC_PI_2).abs() > crate::xstate::PHI_HALF_TOL {
        return Err(Error::InvalidParams("expected canonical parameters with phi = pi/2".into()));
    }
    let lam = p.spectrum();
    let l12 = lam[1] + lam[2];
    let inner = |s: f64, minus: f64| {
        let root = (s * s - minus * minus).max(0.0).sqrt();
        let (lo, hi) = (0.5 * (s - root), 0.5 * (s + root));
        let ideal = if l12 > 0.0 { s * lam[1] / l12 } else { 0.5 * s };
        let c1 = ideal.clamp(lo, hi);
        let chi = [0.5 * (1.0 - s + minus), c1, s - c1, 0.5 * (1.0 - s - minus)];
        diagonal_objective(&lam, &chi)
    };
    let middle = |s: f64| {
        let bound = s.min(1.0 - s).max(0.0);
        grid_golden(|m| inner(s, m), -bound, bound).1
    };
    let (_, value) = grid_golden(middle, 0.0, 1.0);
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;
    use std::f64::consts::{LN_2, PI};

    fn comp(weight: f64, t1: f64, p1: f64, t2: f64, p2: f64) -> ProductComponent {
        ProductComponent { weight, alpha: QubitState::new(t1, p1), beta: QubitState::new(t2, p2) }
    }

    #[test]
    fn single_product_state() {
        let e = ProductEnsemble::new(vec![comp(1.0, 0.0, 0.0, 0.0, 0.0)]).unwrap();
        let m = e.to_density();
        assert!(m.matrix().max_abs_diff(&ComplexMatrix4::from_real_diagonal([1.0, 0.0, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn classical_mixture() {
        let e = ProductEnsemble::new(vec![comp(0.5, 0.0, 0.0, 0.0, 0.0), comp(0.5, PI, 0.0, PI, 0.0)]).unwrap();
        let want = ComplexMatrix4::from_real_diagonal([0.5, 0.0, 0.0, 0.5]);
        assert!(e.to_density().matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn ensemble_validation() {
        assert!(ProductEnsemble::new(vec![comp(0.7, 0.0, 0.0, 0.0, 0.0)]).is_err());
        assert!(ProductEnsemble::new(vec![comp(-0.1, 0.0, 0.0, 0.0, 0.0), comp(1.1, 0.0, 0.0, 0.0, 0.0)]).is_err());
        assert!(ProductEnsemble::new(vec![]).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap();
        let rho = p.to_density().unwrap();
        let obj = Objective { rho: rho.matrix(), neg_entropy: -crate::linalg::von_neumann_entropy(&rho), k: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = initial_point(4, &mut rng);
        let (_, g) = obj.eval(&x, true);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (obj.eval(&up, false).0 - obj.eval(&dn, false).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn rejects_small_k() {
        let rho = DensityMatrix::maximally_mixed();
        let cfg = OracleConfig { components: 3, ..OracleConfig::default() };
        assert!(matches!(minimize_relative_entropy(&rho, &cfg), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn separable_state_is_reached() {
        let p = XStateParams::new(0.4, 0.2, 0.2, 0.2, FRAC_PI_2, 0.0).unwrap();
        let cfg = OracleConfig { restarts: 8, ..OracleConfig::default() };
        let r = minimize_relative_entropy(&p.to_density().unwrap(), &cfg).unwrap();
        assert!(r.value < 1e-8, "{}", r.value);
        assert_eq!(r.restarts.len(), 8);
        assert_eq!(r.seed, crate::DEFAULT_SEED);
    }

    #[test]
    fn bell_state_gives_log_two() {
        let rho = XStateParams::bell().to_density().unwrap();
        let cfg = OracleConfig { restarts: 8, ..OracleConfig::default() };
        let r = minimize_relative_entropy(&rho, &cfg).unwrap();
        assert!((r.value - LN_2).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let rho = XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap().to_density().unwrap();
        let cfg = OracleConfig { restarts: 4, max_iterations: 50, ..OracleConfig::default() };
        let a = minimize_relative_entropy(&rho, &cfg).unwrap();
        let b = minimize_relative_entropy(&rho, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn structured_min_limits() {
        assert!((structured_min(&XStateParams::bell()).unwrap() - LN_2).abs() < 1e-12);
        let sep = XStateParams::new(0.4, 0.2, 0.2, 0.2, FRAC_PI_2, 0.0).unwrap();
        assert!(structured_min(&sep).unwrap() < 1e-12);
        let t1 = XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap();
        assert!((structured_min(&t1).unwrap() - 8.065950387667238e-5).abs() < 1e-7);
    }

    #[test]
    fn structured_min_requires_phi_half() {
        let p = XStateParams::new(0.5, 0.1, 0.25, 0.15, 1.0, 0.0).unwrap();
        assert!(structured_min(&p).is_err());
    }

    #[test]
    fn derivative_helpers() {
        let q = QubitState::new(0.7, 1.1);
        let d = qubit_derivatives(&q);
        let h = 1e-7;
        let fd_theta: Vec<Complex64> = QubitState::new(0.7 + h, 1.1)
            .amplitudes()
            .iter()
            .zip(QubitState::new(0.7 - h, 1.1).amplitudes().iter())
            .map(|(a, b)| (a - b) / cr(2.0 * h))
            .collect();
        for i in 0..2 {
            assert!((fd_theta[i] - d[0][i]).norm() < 1e-8);
        }
    }
}
