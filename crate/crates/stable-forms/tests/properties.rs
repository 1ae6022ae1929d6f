//! Property-based invariants of the exterior algebra, the volume
//! functionals, and the reduced flows.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stable_forms::exterior::Orientation;
use stable_forms::flows::{self, S7State};
use stable_forms::stability::{self, samples};
use stable_forms::Form;

const CASES: [(usize, usize); 10] =
    [(4, 2), (6, 2), (8, 2), (6, 4), (8, 6), (6, 3), (7, 3), (7, 4), (8, 3), (8, 5)];

fn random_form(n: usize, p: usize, seed: u64) -> Form {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Form::zero(n, p).unwrap();
    let coeffs: Vec<f64> =
        (0..f.coeffs().len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
    for (set, c) in stable_forms::exterior::subsets(n, p).iter().zip(coeffs) {
        f.add_term(set, c).unwrap();
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// a∧b = (−1)^{pq}·b∧a.
    #[test]
    fn wedge_graded_commutative(seed in 0u64..1_000, case in 0usize..4) {
        let (n, p, q) = [(6, 2, 3), (7, 3, 4), (8, 3, 5), (6, 1, 1)][case];
        let a = random_form(n, p, seed);
        let b = random_form(n, q, seed.wrapping_add(1));
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(if p * q % 2 == 0 { 1.0 } else { -1.0 });
        prop_assert!(ab.sub(&ba).unwrap().norm_inf() < 1e-12);
    }

    /// ι(v)(a∧b) = ι(v)a∧b + (−1)^p·a∧ι(v)b.
    #[test]
    fn contraction_is_antiderivation(seed in 0u64..1_000) {
        let (n, p, q) = (7usize, 3usize, 2usize);
        let a = random_form(n, p, seed);
        let b = random_form(n, q, seed.wrapping_add(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let v: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let lhs = a.wedge(&b).unwrap().contract(&v).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = a
            .contract(&v)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.contract(&v).unwrap()).unwrap().scale(sign))
            .unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_inf() < 1e-12);
    }

    /// ∗∗a = (−1)^{p(n−p)}·a for the identity metric.
    #[test]
    fn hodge_star_involution(seed in 0u64..1_000, case in 0usize..4) {
        let (n, p) = [(6, 2), (7, 3), (8, 3), (8, 5)][case];
        let a = random_form(n, p, seed);
        let g = DMatrix::<f64>::identity(n, n);
        let ss = a
            .hodge_star(&g, Orientation::Positive)
            .unwrap()
            .hodge_star(&g, Orientation::Positive)
            .unwrap();
        let sign = if p * (n - p) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(ss.sub(&a.scale(sign)).unwrap().norm_inf() < 1e-12);
    }

    /// Pullback is contravariant-functorial: (AB)*ρ = B*(A*ρ).
    #[test]
    fn pullback_functorial(seed in 0u64..1_000) {
        let rho = random_form(6, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        let a = samples::random_gl(6, &mut rng);
        let b = samples::random_gl(6, &mut rng);
        let lhs = rho.pullback(&(&a * &b)).unwrap();
        let rhs = rho.pullback(&a).unwrap().pullback(&b).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_inf() < 1e-9 * (1.0 + lhs.norm_inf()));
    }

    /// φ(λρ) = λ^{n/p}·φ(ρ) for λ > 0, all ten cases.
    #[test]
    fn volume_homogeneity(seed in 0u64..500, lambda in 0.2f64..5.0, case in 0usize..10) {
        let (n, p) = CASES[case];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = samples::random_stable(n, p, &mut rng).unwrap();
        let phi = stability::volume(&rho).unwrap().phi;
        let phi_l = stability::volume(&rho.scale(lambda)).unwrap().phi;
        let expect = lambda.powf(n as f64 / p as f64) * phi;
        prop_assert!((phi_l - expect).abs() < 1e-9 * expect.abs());
    }

    /// φ(A*ρ) = det(A)·φ(ρ) for A ∈ GL⁺: φ is a volume density.
    #[test]
    fn volume_gl_equivariance(seed in 0u64..500, case in 0usize..10) {
        let (n, p) = CASES[case];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = samples::random_stable(n, p, &mut rng).unwrap();
        let a = samples::random_gl(n, &mut rng);
        let phi = stability::volume(&rho).unwrap().phi;
        let phi_a = stability::volume(&rho.pullback(&a).unwrap()).unwrap().phi;
        let expect = a.determinant() * phi;
        prop_assert!((phi_a - expect).abs() < 1e-8 * expect.abs());
    }

    /// Classification is scale- and GL⁺-invariant.
    #[test]
    fn class_is_orbit_invariant(seed in 0u64..500, lambda in 0.2f64..5.0, case in 0usize..10) {
        let (n, p) = CASES[case];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = samples::random_stable(n, p, &mut rng).unwrap();
        let class = stability::volume(&rho).unwrap().class;
        let a = samples::random_gl(n, &mut rng);
        prop_assert_eq!(stability::volume(&rho.scale(lambda)).unwrap().class, class);
        prop_assert_eq!(stability::volume(&rho.pullback(&a).unwrap()).unwrap().class, class);
    }

    /// Euler identity ρ̂∧ρ = (n/p)·φ·e₁…ₙ with the closed-form dual.
    #[test]
    fn euler_identity_closed(seed in 0u64..500, case in 0usize..10) {
        let (n, p) = CASES[case];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = samples::random_stable(n, p, &mut rng).unwrap();
        let phi = stability::volume(&rho).unwrap().phi;
        let hat = stability::dual_form_closed(&rho).unwrap();
        let top = hat.wedge(&rho).unwrap().coeffs()[0];
        let expect = n as f64 / p as f64 * phi;
        prop_assert!((top - expect).abs() < 1e-9 * expect.abs());
    }

    /// S⁷ coordinate maps invert each other on the y₄ > 0 branch.
    #[test]
    fn s7_coord_maps_inverse(
        y1 in 0.2f64..1.5, y2 in 0.2f64..1.5, y3 in 0.2f64..1.5, y4 in 0.5f64..1.5,
    ) {
        let s = S7State { y: [y1, y2, y3, y4] };
        let x = flows::coord_map_inverse(&s).unwrap();
        let back = flows::coord_map(&x).unwrap();
        for i in 0..4 {
            prop_assert!((back.y[i] - s.y[i]).abs() < 1e-10 * (1.0 + s.y[i].abs()));
        }
    }

    /// Trajectories are deterministic: identical inputs, identical CSV bytes.
    #[test]
    fn integration_is_deterministic(y in 0.5f64..1.2, y4 in 1.5f64..2.0) {
        let cfg = flows::IntegratorConfig::default_rkf45((0.0, 0.2));
        let run = || {
            let tr = flows::integrate(flows::s7_rhs_y_flat, &[y, y, y, y4], &cfg).unwrap();
            flows::trajectory_to_csv(&tr, "t,y1,y2,y3,y4")
        };
        prop_assert_eq!(run(), run());
    }
}
