mod common;

use common::{cb_law_samples, interval_law_samples, relation_law_samples};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rankcore::cb_spaces::{CbDerivative, SuccExpansion};
use rankcore::engine::{check_operator_laws, LawReport};
use rankcore::gamma::{BoolMatrix, CellRelation, GammaOperator, RelationDomain};

fn merge(reports: impl Iterator<Item = LawReport>) -> LawReport {
    reports.fold(LawReport::default(), |mut acc, r| {
        acc.pairs_checked += r.pairs_checked;
        acc.comparable_pairs += r.comparable_pairs;
        acc.violations.extend(r.violations);
        acc
    })
}

#[test]
fn cb_derivative_is_contractive_and_monotone() {
    let mut rng = StdRng::seed_from_u64(1);
    let report = merge(
        cb_law_samples(&mut rng, 500)
            .into_iter()
            .map(|(space, a, b)| check_operator_laws(&space, &CbDerivative, &[(a, b)])),
    );
    assert_eq!(report.pairs_checked, 500);
    assert!(report.comparable_pairs >= 500);
    assert!(report.is_clean(), "{:?}", report.violations);
}

#[test]
fn succ_expansion_is_expansive_and_monotone() {
    let mut rng = StdRng::seed_from_u64(2);
    let report = merge(
        interval_law_samples(&mut rng, 500)
            .into_iter()
            .map(|(space, a, b)| check_operator_laws(&space, &SuccExpansion, &[(a, b)])),
    );
    assert_eq!(report.pairs_checked, 500);
    assert!(report.is_clean(), "{:?}", report.violations);
}

#[test]
fn gamma_is_expansive_and_monotone() {
    let mut rng = StdRng::seed_from_u64(3);
    let report = merge(relation_law_samples(&mut rng, 500).into_iter().map(|(n, a, b)| {
        let rel = |p: Vec<(usize, usize)>| CellRelation::new(BoolMatrix::from_pairs(n, p));
        check_operator_laws(&RelationDomain::new(n), &GammaOperator, &[(rel(a), rel(b))])
    }));
    assert_eq!(report.pairs_checked, 500);
    assert!(report.comparable_pairs >= 250);
    assert!(report.is_clean(), "{:?}", report.violations);
}
