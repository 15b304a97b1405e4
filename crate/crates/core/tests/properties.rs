use boostybe_core::analysis;
use boostybe_core::catalog::{self, Family};
use boostybe_core::graded;
use boostybe_core::linalg::{self, c, CMatrix};
use boostybe_core::pauli;
use boostybe_core::reshetikhin::{self, complete_system};
use boostybe_core::tensor::{self, LocalDensity};
use boostybe_core::transforms::{self, BasisTransform, DiscreteTransform};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0)
}

fn density() -> impl Strategy<Value = LocalDensity> {
    prop::collection::vec(complex(), 16).prop_map(|v| LocalDensity::new(CMatrix::from_fn(4, 4, |i, j| c(v[4 * i + j].0, v[4 * i + j].1))).unwrap())
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn local_basis_changes_preserve_integrability(f in family(), seed in 0u64..50, (a, b) in complex(), (g, d) in complex()) {
        let v = BasisTransform::normalized(c(1.0 + a, b), c(g, 0.3), c(d, -0.2), c(1.0, a * b));
        prop_assume!(v.is_ok());
        let h = catalog::hamiltonian(&catalog::sample_params(f, seed));
        let moved = transforms::apply_local_basis(&h, &v.unwrap()).unwrap();
        let res = reshetikhin::relative_residual(complete_system(), &pauli::decompose_to_pauli(&moved).unwrap());
        prop_assert!(res < 1e-10, "{} {}", f, res);
    }

    #[test]
    fn discrete_symmetries_preserve_integrability(f in family(), seed in 0u64..50) {
        let h = catalog::hamiltonian(&catalog::sample_params(f, seed));
        for which in DiscreteTransform::ALL {
            let t = transforms::discrete_transform(&h, which).unwrap();
            let res = reshetikhin::relative_residual(complete_system(), &pauli::decompose_to_pauli(&t).unwrap());
            prop_assert!(res < 1e-12);
        }
    }

    #[test]
    fn periodic_sums_commute_with_translation(h in density(), length in 3usize..=6) {
        let q = tensor::periodic_sum(&h, length).unwrap();
        let s = tensor::shift_operator(length).unwrap();
        prop_assert!(linalg::max_abs(&(&s * &q - &q * &s)) < 1e-12);
    }

    #[test]
    fn residual_is_scale_free(f in family(), seed in 0u64..20, k in 0.1f64..10.0) {
        let h = catalog::hamiltonian(&catalog::sample_params(f, seed));
        let a = pauli::decompose_to_pauli(&h).unwrap();
        let scaled = pauli::decompose_to_pauli(&LocalDensity::new(h.matrix() * c(k, 0.0)).unwrap()).unwrap();
        let (r1, r2) = (reshetikhin::relative_residual(complete_system(), &a), reshetikhin::relative_residual(complete_system(), &scaled));
        prop_assert!((r1 - r2).abs() < 1e-13);
    }

    #[test]
    fn jordan_profile_accounts_for_every_eigenvalue(h in density()) {
        let p = analysis::jordan_profile(h.matrix(), analysis::DEFAULT_TOL).unwrap();
        prop_assert_eq!(p.dim(), 4);
        for e in &p.eigenvalues {
            prop_assert!(e.geometric >= 1 && e.geometric <= e.algebraic && e.largest_block <= e.algebraic);
        }
    }

    #[test]
    fn charpoly_deviation_is_similarity_invariant(h in density(), (a, b) in complex()) {
        let v = CMatrix::from_fn(4, 4, |i, j| if i == j { c(1.0, 0.0) } else { c(a, b) * (0.3 / (1 + i + 2 * j) as f64) });
        let vinv = linalg::inverse(&v).unwrap();
        let moved = &v * h.matrix() * vinv;
        prop_assert!(analysis::charpoly_deviation(h.matrix(), &moved) < 1e-9);
    }

    #[test]
    fn graded_bijection_is_an_involution(v in prop::collection::vec(complex(), 8)) {
        let slots = [(0, 0), (1, 1), (1, 2), (0, 3), (2, 1), (2, 2), (3, 0), (3, 3)];
        let mut m = CMatrix::zeros(4, 4);
        for (&(i, j), &(re, im)) in slots.iter().zip(&v) {
            m[(i, j)] = c(re, im);
        }
        let once = graded::bijection_matrix(&m).unwrap();
        prop_assert_eq!(graded::operator_parity(&once).unwrap_or(0), 0);
        prop_assert_eq!(graded::bijection_matrix(&once).unwrap(), m);
    }
}
