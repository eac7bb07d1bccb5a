use gencrit_core::densela::{
    fundamental_subspaces, mp_inverse, numerical_rank, oblique_projector, orthonormality_defect,
    PenroseResiduals,
};
use gencrit_core::synth::{random_matrix, random_rank_deficient, random_singular_matrix};
use gencrit_core::{Mat, SubspaceBasis, Tolerances};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn any_matrix(seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if seed.is_multiple_of(3) {
        let rows = 1 + (seed as usize / 3) % 8;
        let cols = 1 + (seed as usize / 24) % 8;
        random_matrix(&mut rng, rows, cols)
    } else {
        random_singular_matrix(&mut rng, 8)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn moore_penrose_satisfies_all_four_conditions(seed in any::<u64>()) {
        let a = any_matrix(seed);
        let res = PenroseResiduals::of(&a, &mp_inverse(&a, &Tolerances::default()));
        prop_assert!(res.max() < 1e-10, "{res:?}");
    }

    #[test]
    fn rank_is_invariant_under_transpose(seed in any::<u64>()) {
        let a = any_matrix(seed);
        let tol = Tolerances::default();
        prop_assert_eq!(numerical_rank(&a, &tol), numerical_rank(&a.transpose(), &tol));
    }

    #[test]
    fn subspace_bases_are_orthonormal_with_complementary_dimensions(seed in any::<u64>()) {
        let a = any_matrix(seed);
        let sp = fundamental_subspaces(&a, &Tolerances::default());
        for basis in [&sp.null, &sp.range, &sp.corange, &sp.cokernel] {
            prop_assert!(orthonormality_defect(basis.matrix()) < 1e-12);
        }
        prop_assert_eq!(sp.null.dim() + sp.corange.dim(), a.ncols());
        prop_assert_eq!(sp.range.dim() + sp.cokernel.dim(), a.nrows());
        prop_assert!((&a * sp.null.matrix()).amax() < 1e-10);
        prop_assert!(sp.cokernel.matrix().tr_mul(&a).amax() < 1e-10);
    }

    #[test]
    fn complementary_oblique_projectors_sum_to_identity(seed in any::<u64>(), dim in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::default();
        let k = 1 + seed as usize % (dim - 1);
        let onto = SubspaceBasis::span_of(&random_matrix(&mut rng, dim, k), &tol);
        let along = SubspaceBasis::span_of(&random_matrix(&mut rng, dim, dim - k), &tol);
        let p = oblique_projector(&onto, &along, &tol).unwrap();
        let q = oblique_projector(&along, &onto, &tol).unwrap();
        prop_assert!((&p + &q - Mat::identity(dim, dim)).amax() < 1e-8);
        prop_assert!((&p * &p - &p).amax() < 1e-8);
        prop_assert!((&p * along.matrix()).amax() < 1e-8);
        prop_assert!((&p * onto.matrix() - onto.matrix()).amax() < 1e-8);
    }

    #[test]
    fn orthogonal_complement_is_orthogonal(seed in any::<u64>(), dim in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::default();
        let k = seed as usize % (dim + 1);
        let basis = SubspaceBasis::span_of(&random_matrix(&mut rng, dim, k), &tol);
        let comp = basis.orthogonal_complement();
        prop_assert_eq!(basis.dim() + comp.dim(), dim);
        prop_assert!(basis.matrix().tr_mul(comp.matrix()).amax() < 1e-12);
        prop_assert!(orthonormality_defect(comp.matrix()) < 1e-12);
    }
}

#[test]
fn rank_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = Tolerances::default();
    for rank in 1..5 {
        let a = random_rank_deficient(&mut rng, 6, 5, rank);
        for scale in [1e-6, 1.0, 1e6] {
            assert_eq!(numerical_rank(&(&a * scale), &tol), rank);
        }
    }
}
