mod common;

use std::collections::BTreeSet;

use common::{brute_independent, fibonacci, language};
use proptest::prelude::*;
use rankcore::subshift::{Subshift, SubshiftError};

fn sft() -> impl Strategy<Value = (Vec<char>, Vec<String>)> {
    prop_oneof![Just((vec!['0', '1'], 3)), Just((vec!['a', 'b', 'c'], 2))].prop_flat_map(|(alphabet, longest)| {
        let word = prop::collection::vec(prop::sample::select(alphabet.clone()), 1..=longest)
            .prop_map(|cs| cs.into_iter().collect::<String>());
        (Just(alphabet), prop::collection::vec(word, 0..4))
    })
}

fn build(alphabet: &[char], forbidden: &[String]) -> Result<Subshift, SubshiftError> {
    let a: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let f: Vec<&str> = forbidden.iter().map(String::as_str).collect();
    Subshift::from_strs(&a, &f)
}

proptest! {
    #[test]
    fn counts_match_enumeration((alphabet, forbidden) in sft(), n in 1usize..=6) {
        let f: Vec<&str> = forbidden.iter().map(String::as_str).collect();
        let expected = language(&alphabet, &f, n);
        match build(&alphabet, &forbidden) {
            Err(SubshiftError::Empty) => prop_assert!(expected.is_empty()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok(shift) => {
                prop_assert_eq!(shift.count_words(n).unwrap(), expected.len() as u128);
                let words: BTreeSet<String> = shift.words(n).unwrap().iter().map(|w| shift.spec.decode(w)).collect();
                prop_assert_eq!(words, expected);
            }
        }
    }

    #[test]
    fn spectral_entropy_bounds_block_entropy((alphabet, forbidden) in sft()) {
        let Ok(shift) = build(&alphabet, &forbidden) else { return Ok(()) };
        let h = shift.entropy_spectral(1e-9).unwrap();
        prop_assert!(h >= -1e-9);
        prop_assert!(h <= (alphabet.len() as f64).ln() + 1e-9);
        // word counts are submultiplicative, so h is the infimum of the block entropies
        for n in 1..=12 {
            prop_assert!(h <= shift.entropy_estimate(n).unwrap() + 1e-9, "n = {}", n);
        }
    }

    #[test]
    fn block_entropy_times_length_is_log_count((alphabet, forbidden) in sft(), n in 1usize..=30) {
        let Ok(shift) = build(&alphabet, &forbidden) else { return Ok(()) };
        let count = shift.count_words(n).unwrap() as f64;
        let lhs = shift.entropy_estimate(n).unwrap() * n as f64;
        prop_assert!((lhs - count.ln()).abs() <= 4.0 * f64::EPSILON * count.ln().max(1.0));
    }
}

#[test]
fn stock_word_counts() {
    let golden = Subshift::from_strs(&["0", "1"], &["11"]).unwrap();
    let stair = Subshift::from_strs(&["0", "1"], &["01"]).unwrap();
    let full = Subshift::from_strs(&["0", "1"], &[]).unwrap();
    for n in 1..=15 {
        assert_eq!(golden.count_words(n).unwrap(), fibonacci(n + 2));
        assert_eq!(stair.count_words(n).unwrap(), n as u128 + 1);
        assert_eq!(full.count_words(n).unwrap(), 1u128 << n);
    }
    for n in 1..=20 {
        assert_eq!(full.entropy_estimate(n).unwrap(), 2f64.ln());
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((golden.entropy_spectral(1e-9).unwrap() - phi.ln()).abs() < 1e-6);
    assert!((full.entropy_spectral(1e-9).unwrap() - 2f64.ln()).abs() < 1e-9);
    assert!(stair.entropy_spectral(1e-9).unwrap().abs() < 1e-9);
}

#[test]
fn empty_and_malformed_shifts() {
    assert_eq!(Subshift::from_strs(&["0", "1"], &["0", "1"]).unwrap_err(), SubshiftError::Empty);
    assert_eq!(Subshift::from_strs(&["0"], &["00"]).unwrap_err(), SubshiftError::Empty);
    assert!(Subshift::from_strs(&[], &[]).is_err());
    assert!(Subshift::from_strs(&["0", "0"], &[]).is_err());
    assert!(Subshift::from_strs(&["0", "1"], &["2"]).is_err());
    assert!(Subshift::from_strs(&["01"], &[]).is_err());
}

#[test]
fn independence_matches_word_enumeration() {
    for (forbidden, name) in [(vec!["11"], "golden"), (vec!["01"], "stair"), (vec![], "full")] {
        let shift = Subshift::from_strs(&["0", "1"], &forbidden).unwrap();
        let words: Vec<String> = language(&['0', '1'], &forbidden, 9).into_iter().collect();
        for (u, v) in [('0', '1'), ('1', '0'), ('0', '0'), ('1', '1')] {
            let (wu, wv) = (shift.spec.encode(&u.to_string()).unwrap(), shift.spec.encode(&v.to_string()).unwrap());
            for mask in 1u32..(1 << 8) {
                let offsets: Vec<usize> = (0..8).filter(|b| mask >> b & 1 == 1).collect();
                if offsets.len() > 4 {
                    continue;
                }
                assert_eq!(
                    shift.is_independent(&wu, &wv, &offsets),
                    brute_independent(&words, u, v, &offsets),
                    "{name} ({u},{v}) at {offsets:?}"
                );
            }
        }
    }
}

#[test]
fn evidence_relations_are_consistent() {
    for forbidden in [vec!["11"], vec!["01"], vec![], vec!["000", "111"]] {
        let shift = Subshift::from_strs(&["0", "1"], &forbidden).unwrap();
        for n in 1..=2 {
            let rel = shift.ie_relation(n, 8, 0.5).unwrap();
            assert!(rel.lower.is_subset(&rel.upper));
            assert!(rel.undecided.is_empty());
            assert_eq!(rel.lower, rel.upper);
            for cert in rel.certificates.values() {
                assert!(cert.reverify(&shift));
                assert!(cert.positions.len() >= rel.required);
                assert!(cert.density_f64() >= 0.5);
            }
        }
    }
}
