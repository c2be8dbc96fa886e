use hqmap_core::catalog::{normal_form_map, NormalFormId};
use hqmap_core::hypersurfaces::{seeded_rng, Signature};
use hqmap_core::isotropies::{random_pair, sigma_map, sigma_prime_map, IsotropyPair};
use hqmap_core::laws::{
    associativity_defect, catalog_separation, chain_rule_defect, injectivity_grid, inverse_defect,
};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, rng_seed: RngSeed::Fixed(42), failure_persistence: None, ..ProptestConfig::default() }
}

fn eps_of(plus: bool) -> Signature {
    if plus {
        Signature::Plus
    } else {
        Signature::Minus
    }
}

fn pair(seed: u64, eps: Signature) -> IsotropyPair {
    random_pair(&mut seeded_rng(seed), eps)
}

fn catalog_member() -> impl Strategy<Value = NormalFormId> {
    (1u8..=3, 0.0f64..2.0, any::<bool>()).prop_map(|(k, s, plus)| {
        let s = if k == 1 { 0.0 } else { s };
        NormalFormId::new(k, s, eps_of(plus)).unwrap()
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn composition_is_associative(a in any::<u64>(), c in any::<u64>(), g in catalog_member()) {
        let eps = g.eps;
        let outer = sigma_prime_map(&pair(a, eps).gamma_p, eps).unwrap();
        let middle = normal_form_map(&g).unwrap();
        let inner = sigma_map(&pair(c, eps).gamma);
        prop_assert!(associativity_defect(&outer, &middle, &inner).unwrap() < 1e-10);
    }

    #[test]
    fn first_jets_follow_chain_rule(a in any::<u64>(), c in any::<u64>(), g in catalog_member()) {
        let eps = g.eps;
        let map = normal_form_map(&g).unwrap();
        prop_assert!(chain_rule_defect(&map, &sigma_map(&pair(c, eps).gamma)).unwrap() < 1e-10);
        let outer = sigma_prime_map(&pair(a, eps).gamma_p, eps).unwrap();
        prop_assert!(chain_rule_defect(&outer, &map).unwrap() < 1e-10);
    }

    #[test]
    fn isotropies_invert(seed in any::<u64>(), plus in any::<bool>()) {
        let eps = eps_of(plus);
        prop_assert!(inverse_defect(&pair(seed, eps), eps).unwrap() < 1e-10);
    }

    #[test]
    fn grid_members_are_distinct(i in 0usize..43, j in 0usize..43, plus in any::<bool>()) {
        prop_assume!(i != j);
        let grid = injectivity_grid(eps_of(plus), 0.1, 2.0).unwrap();
        let d = catalog_separation(&grid[i], &grid[j]).unwrap();
        if grid[i].same_map(&grid[j]) {
            prop_assert!(d < 1e-14);
        } else {
            prop_assert!(d > 1e-6, "{} {} {}", grid[i], grid[j], d);
        }
    }
}
