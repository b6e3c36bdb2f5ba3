use ep_atlas::symmetry::{all_quantities, predicted_vanishing, vanishing_pattern, SymmetryKind, SymmetryOperator};
use ep_atlas::tables::{check_row, rows, Table};

#[test]
fn every_table_row_reproduced() {
    let mut failures = Vec::new();
    for r in rows() {
        let c = check_row(&r, 50, 20, 11).unwrap();
        if !c.pass {
            failures.push(format!(
                "{} (n={}): constraints {}/{} params {}/{} labels {:?} vs {:?}",
                c.name, c.n, c.observed_constraints, c.expected_constraints, c.observed_parameters,
                c.expected_parameters, c.observed_labels, c.expected_labels
            ));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn named_examples() {
    let find = |t: Table, name: &str| rows().into_iter().find(|r| r.table == t && r.name == name).unwrap();
    let psh = check_row(&find(Table::TwoBand, "psH"), 50, 20, 3).unwrap();
    assert_eq!((psh.observed_constraints, psh.observed_parameters), (1, 3));
    assert_eq!(psh.observed_labels, ["dxR", "dyI", "dzI"]);
    let pscs = check_row(&find(Table::ThreeBand, "psCS"), 50, 20, 3).unwrap();
    assert_eq!(pscs.observed_parameters, 6);
    let cs = check_row(&find(Table::FourBand, "CS"), 50, 20, 3).unwrap();
    assert_eq!(cs.observed_parameters, 26);
    let combo = check_row(&find(Table::PsHCombined, "psH+CS"), 50, 20, 3).unwrap();
    assert_eq!(combo.observed_labels, ["dxR", "dzI"]);
}

fn check_pattern(kind: SymmetryKind, n: usize) {
    let op = SymmetryOperator::default_for(kind, n).unwrap();
    let pattern = vanishing_pattern(&[op], n, 100, 5).unwrap();
    let forbidden = predicted_vanishing(kind, n).unwrap();
    for q in all_quantities(n) {
        let s = pattern.stat(q).unwrap();
        if forbidden.contains(&q) {
            assert!(s.max_rel < 1e-12, "{kind} n={n} {q:?} should vanish: {}", s.max_rel);
        } else {
            assert!(s.median_rel > 1e-3, "{kind} n={n} {q:?} vanished spuriously: {}", s.median_rel);
        }
    }
}

#[test]
fn vanishing_patterns_all_kinds() {
    for n in 2..=4 {
        for kind in SymmetryKind::ALL {
            if kind.supports(n) {
                check_pattern(kind, n);
            }
        }
    }
    check_pattern(SymmetryKind::Sls, 5);
    check_pattern(SymmetryKind::PsCs, 5);
}

#[test]
fn cs_odd_unsupported() {
    assert!(predicted_vanishing(SymmetryKind::Cs, 3).is_err());
    assert!(SymmetryOperator::default_for(SymmetryKind::Cs, 5).is_err());
}
