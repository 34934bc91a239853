//! Runs every acceptance criterion and prints one line per criterion.

use stftpr::selftest::{run_criterion, CRITERIA};

#[test]
fn acceptance() {
    let outcomes: Vec<_> = (1..=CRITERIA.len()).map(run_criterion).collect();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
