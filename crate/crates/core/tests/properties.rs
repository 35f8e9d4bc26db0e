use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use qdsim::circuits::{lower_to_qubit_qutrit, matmul, SixLevelGate};
use qdsim::group::{ambient, irrep_table, qubit_qutrit_decode, qubit_qutrit_encode, s3};
use qdsim::lattice::LatticeSpec;
use qdsim::operators::{ground_state, particle_family, probability, stabilizers};
use qdsim::state::SparseState;
use qdsim::{Element, FiniteGroup, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn s3_elem() -> impl Strategy<Value = Element> {
    (0u8..6).prop_map(Element)
}

fn ambient_elem() -> impl Strategy<Value = Element> {
    (0u8..12).prop_map(Element)
}

proptest! {
    #[test]
    fn ambient_group_axioms(a in ambient_elem(), b in ambient_elem(), c in ambient_elem()) {
        let g = ambient::group();
        prop_assert_eq!(g.multiply(g.multiply(a, b), c), g.multiply(a, g.multiply(b, c)));
        prop_assert_eq!(g.multiply(a, g.inverse(a)), g.identity());
        prop_assert_eq!(g.multiply(g.identity(), a), a);
    }

    #[test]
    fn encoding_round_trips(g in s3_elem()) {
        let (r, s) = qubit_qutrit_encode(g);
        prop_assert!(r < 3 && s < 2);
        prop_assert_eq!(qubit_qutrit_decode(r, s), g);
    }

    #[test]
    fn lowered_multiplication_composes(g in s3_elem(), h in s3_elem()) {
        let grp = FiniteGroup::s3();
        let gh = grp.multiply(g, h);
        let m = |x: SixLevelGate| lower_to_qubit_qutrit(x).unwrap().matrix();
        prop_assert_eq!(matmul(&m(SixLevelGate::Left(g)), &m(SixLevelGate::Left(h))), m(SixLevelGate::Left(gh)));
        // Right multiplication is an anti-homomorphism: (x h) g = x (h g).
        let hg = grp.multiply(h, g);
        prop_assert_eq!(matmul(&m(SixLevelGate::Right(g)), &m(SixLevelGate::Right(h))), m(SixLevelGate::Right(hg)));
    }

    #[test]
    fn irreps_are_homomorphisms(g in s3_elem(), h in s3_elem()) {
        let grp = FiniteGroup::s3();
        for rho in irrep_table(&grp).unwrap() {
            for i in 0..rho.dim {
                for j in 0..rho.dim {
                    let lhs = rho.entry(grp.multiply(g, h), i, j);
                    let rhs: C64 = (0..rho.dim).map(|k| rho.entry(g, i, k) * rho.entry(h, k, j)).sum();
                    prop_assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn site_families_resolve_identity(seed in any::<u64>(), site_index in 0usize..9) {
        let lat = Arc::new(LatticeSpec::torus(3, 3).build().unwrap());
        let psi = SparseState::<f64>::random(lat.clone(), 8, &mut ChaCha8Rng::seed_from_u64(seed));
        let site = lat.canonical_sites()[site_index];
        let total: f64 = particle_family::<f64>(&lat, site, &BTreeSet::new())
            .unwrap()
            .iter()
            .map(|(_, p)| probability(&psi, p).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stabilizer_expectations_are_probabilities(seed in any::<u64>()) {
        let lat = Arc::new(LatticeSpec::torus(2, 2).build().unwrap());
        let psi = SparseState::<f64>::random(lat.clone(), 10, &mut ChaCha8Rng::seed_from_u64(seed));
        for (_, p) in stabilizers::<f64>(&lat, &BTreeSet::new()) {
            let x = probability(&psi, &p).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x));
        }
    }
}

#[test]
fn single_precision_ground_state_is_stabilized() {
    let lat = Arc::new(LatticeSpec::torus(2, 2).build().unwrap());
    let g = ground_state::<f32>(lat.clone(), None).unwrap();
    for (_, p) in stabilizers::<f32>(&lat, &BTreeSet::new()) {
        assert!((probability(&g, &p).unwrap() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn s3_class_sizes() {
    let g = FiniteGroup::s3();
    let mut sizes: Vec<usize> = g
        .conjugacy_classes()
        .iter()
        .map(|c| c.members.len())
        .collect();
    sizes.sort();
    assert_eq!(sizes, [1, 2, 3]);
    assert_eq!(g.multiply(s3::C, s3::T), s3::CT);
}
