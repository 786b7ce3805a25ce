//! Seeded state generators and a product decomposition of σ* shared by the
//! integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::{FRAC_PI_2, PI};
use xree::{ComplexMatrix4, ProductComponent, ProductEnsemble, QubitState, XStateParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the probability simplex.
pub fn simplex(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let e: [f64; 4] = std::array::from_fn(|_| Exp1.sample(rng));
    let s: f64 = e.iter().sum();
    let mut l = e.map(|x| x / s);
    // Absorb rounding so the trace check sees exactly one.
    l[3] = 1.0 - l[0] - l[1] - l[2];
    l
}

/// Rejection-samples a state with concurrence above `min_concurrence` and
/// the angle drawn by `phi`.
pub fn entangled(rng: &mut ChaCha8Rng, min_concurrence: f64, phi: impl Fn(&mut ChaCha8Rng) -> f64) -> XStateParams {
    loop {
        let l = simplex(rng);
        if l[3] < 0.0 {
            continue;
        }
        let f = phi(rng);
        let p = XStateParams::new(l[0], l[3], l[1], l[2], f, 0.0).unwrap();
        if p.concurrence() > min_concurrence {
            return p;
        }
    }
}

pub fn entangled_half(rng: &mut ChaCha8Rng, min_concurrence: f64) -> XStateParams {
    entangled(rng, min_concurrence, |_| FRAC_PI_2)
}

/// Separable state with an arbitrary angle and phase.
pub fn separable(rng: &mut ChaCha8Rng) -> XStateParams {
    loop {
        let l = simplex(rng);
        if l[3] < 0.0 {
            continue;
        }
        let phi = rng.random_range(0.0..2.0 * PI);
        let eta = rng.random_range(0.0..2.0 * PI);
        let p = XStateParams::new(l[0], l[3], l[1], l[2], phi, eta).unwrap();
        if p.concurrence() == 0.0 {
            return p;
        }
    }
}

pub fn random_qubit(rng: &mut ChaCha8Rng) -> QubitState {
    let z: f64 = rng.random_range(-1.0..1.0);
    QubitState::new(z.acos(), rng.random_range(0.0..2.0 * PI))
}

/// Four-term product decomposition of an X-structured σ lying on the
/// separable border `|σ₀₃|² = σ₁₁σ₂₂`.
///
/// Two groups of two phase-conjugate product states each. Within a group the
/// single-qubit coherences cancel; across groups the `|01⟩⟨10|` coherence
/// cancels and the corner adds up.
pub fn border_decomposition(sigma: &ComplexMatrix4) -> ProductEnsemble {
    let d = sigma.diagonal();
    let corner = sigma[(0, 3)];
    let c = corner.norm();
    let offset = -corner.arg();
    let u = 0.5 * d[0] + (0.25 * d[0] * d[0] - c * c * d[0] / (4.0 * d[3])).max(0.0).sqrt();
    let groups = [
        ([u, 0.5 * d[1], 0.5 * d[2], c * c / (4.0 * u)], [(0.0, 0.0), (PI, PI)]),
        (
            [d[0] - u, 0.5 * d[1], 0.5 * d[2], c * c / (4.0 * (d[0] - u))],
            [(FRAC_PI_2, -FRAC_PI_2), (1.5 * PI, FRAC_PI_2)],
        ),
    ];
    let mut components = Vec::with_capacity(4);
    for (g, phases) in groups {
        let w: f64 = g.iter().sum();
        let pa = (g[0] + g[1]) / w;
        let pb = (g[0] + g[2]) / w;
        for (fa, fb) in phases {
            components.push(ProductComponent {
                weight: 0.5 * w,
                alpha: QubitState::new(2.0 * pa.sqrt().clamp(0.0, 1.0).acos(), fa + offset),
                beta: QubitState::new(2.0 * pb.sqrt().clamp(0.0, 1.0).acos(), fb),
            });
        }
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for k in &mut components {
        k.weight /= total;
    }
    ProductEnsemble::new(components).unwrap()
}
