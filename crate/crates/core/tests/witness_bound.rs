mod common;

use common::{entangled_half, random_qubit, rng};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;
use xree::{build_witness, relative_entropy_of_entanglement, ComplexMatrix4, XStateParams};

fn t1() -> XStateParams {
    XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap()
}

/// `Tr A(σ* − σ_prod) ≥ 0` is the separating-hyperplane form of optimality.
#[test]
fn witness_separates_sigma_star_from_random_products() {
    let mut r = rng(31);
    for state in 0..4 {
        let p = if state == 0 { t1() } else { entangled_half(&mut r, 0.01) };
        let ree = relative_entropy_of_entanglement(&p).unwrap();
        let w = build_witness(&ree.canonical.to_density().unwrap(), &ree.solution).unwrap();
        let at_sigma = w.trace_with(ree.solution.sigma_star.matrix());
        let mut worst = f64::INFINITY;
        for _ in 0..10_000 {
            let (a, b) = (random_qubit(&mut r), random_qubit(&mut r));
            let prod = ComplexMatrix4::outer(&a.product(&b));
            worst = worst.min(at_sigma - w.trace_with(&prod));
        }
        assert!(worst >= -1e-9, "{p:?}: {worst:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_expectation_never_exceeds_one(
        theta_a in 0.0..std::f64::consts::PI,
        phi_a in 0.0..std::f64::consts::TAU,
        theta_b in 0.0..std::f64::consts::PI,
        phi_b in 0.0..std::f64::consts::TAU,
    ) {
        let p = t1();
        let ree = relative_entropy_of_entanglement(&p).unwrap();
        let w = build_witness(&p.to_density().unwrap(), &ree.solution).unwrap();
        let v = w.product_expectation(&xree::QubitState::new(theta_a, phi_a), &xree::QubitState::new(theta_b, phi_b));
        prop_assert!(v <= 1.0 + 1e-9, "{}", v);
    }
}
