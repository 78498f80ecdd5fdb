use std::io::Write;

use hypcert::certifier::acceptance::{run_acceptance, Tolerances, CRITERIA};

#[test]
fn acceptance_criteria() {
    let outcomes = run_acceptance(None, Tolerances::default());
    // written straight to stderr so the lines survive output capture
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        writeln!(err, "{o}").unwrap();
    }
    assert_eq!(outcomes.len(), CRITERIA.len());
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn subset_selection() {
    let outcomes = run_acceptance(Some(&[2, 4]), Tolerances::default());
    assert_eq!(outcomes.iter().map(|o| o.id).collect::<Vec<_>>(), vec![2, 4]);
}

#[test]
fn tightened_tolerances_are_reported() {
    let outcomes = run_acceptance(Some(&[3, 5]), Tolerances { tighten: 1e6 });
    assert!(outcomes.iter().all(|o| !o.passed), "{outcomes:?}");
}
