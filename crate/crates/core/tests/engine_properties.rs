use std::sync::LazyLock;

use mgn_core::correlator::CorrelatorKey;
use mgn_core::engine::{enumerate_keys, Engine};
use mgn_core::oracles::{dvv_intersection, oracle_intersection};
use mgn_core::verify::{engine_string_dilaton_suite, string_dilaton_suite};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

static ENGINE: LazyLock<Engine> = LazyLock::new(Engine::new);

fn keys_up_to(dim: u32) -> Vec<CorrelatorKey> {
    enumerate_keys(dim, dim / 3 + 1, dim + 3)
}

#[test]
fn matches_dvv_oracle_up_to_dim_6() {
    for key in keys_up_to(6).into_iter().filter(|k| k.kappa_power() == 0) {
        let expected = dvv_intersection(key.genus(), key.psi_exponents()).unwrap();
        assert_eq!(ENGINE.intersection_number(&key), expected, "{key}");
    }
}

#[test]
fn matches_kappa_oracle_up_to_dim_5() {
    let keys: Vec<_> = keys_up_to(5)
        .into_iter()
        .filter(|k| (1..=3).contains(&k.kappa_power()))
        .collect();
    assert!(keys.len() > 20);
    for key in keys {
        assert_eq!(
            ENGINE.intersection_number(&key),
            oracle_intersection(&key).unwrap(),
            "{key}"
        );
    }
}

#[test]
fn table_entries_are_positive() {
    for (key, value) in ENGINE.compute_table(7, 3, 10).unwrap() {
        assert!(value.is_positive(), "{key} = {value}");
    }
}

#[test]
fn breakdowns_sum_to_value() {
    for key in keys_up_to(5) {
        let Ok(b) = ENGINE.recursion_terms(&key) else { continue };
        assert_eq!(b.total() / &b.lhs_factor, ENGINE.intersection_number(&key), "{key}");
        assert!(b.boundary_terms.iter().all(|(_, v)| !v.is_zero()));
    }
}

#[test]
fn string_and_dilaton() {
    let r = string_dilaton_suite(6);
    assert!(r.all_passed(), "{r}");
    let r = engine_string_dilaton_suite(&ENGINE, 6);
    assert!(r.checks.len() > 50);
    assert!(r.all_passed(), "{r}");
}

fn dim5_key() -> impl Strategy<Value = CorrelatorKey> {
    let keys = keys_up_to(5);
    (0..keys.len()).prop_map(move |i| keys[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_invariance(key in dim5_key().prop_flat_map(|k| {
        let ks = k.psi_exponents().to_vec();
        (Just(k), Just(ks).prop_shuffle())
    })) {
        let (key, shuffled) = key;
        let permuted = CorrelatorKey::new(key.genus(), key.kappa_power(), shuffled).unwrap();
        prop_assert_eq!(ENGINE.intersection_number(&permuted), ENGINE.intersection_number(&key));
    }

    #[test]
    fn first_slot_independence(key in dim5_key()) {
        let value = ENGINE.intersection_number(&key);
        for &slot in key.multiplicities().keys() {
            prop_assert_eq!(ENGINE.intersection_number_with_slot(&key, slot).unwrap(), value.clone(), "slot {}", slot);
        }
    }
}
