//! Rigidity ranks of the golden suite: the nalgebra oracle reproduces the
//! pinned values, and so does the library.

mod common;

use common::*;
use geosep::report::canonical_json;
use geosep::rigidity::{is_generically_globally_rigid, rigidity_matrix};

#[test]
fn oracle_reproduces_golden_file() {
    let table = oracle_table();
    if blessing() {
        write_golden(RIGIDITY_GOLDEN, &canonical_json(&table).unwrap());
    }
    assert_eq!(table, load_golden_table());
}

#[test]
fn library_reproduces_golden_file() {
    let golden = load_golden_table();
    for (name, a) in golden_suite() {
        for d in [2usize, 3] {
            let key = format!("{name}/d{d}");
            let want = &golden[&key];
            let r = is_generically_globally_rigid(&a, d, GOLDEN_SEED, 3).unwrap();
            assert_eq!(r.rigidity_rank, want.rigidity_rank, "{key}");
            assert_eq!(r.rigidity_rank_expected, want.rigidity_rank_expected, "{key}");
            assert_eq!(r.stress_rank, want.stress_rank, "{key}");
            assert_eq!(r.generically_rigid, want.generically_rigid, "{key}");
            assert_eq!(r.generically_globally_rigid, want.generically_globally_rigid, "{key}");
        }
    }
}

#[test]
fn rigidity_matrices_agree_entrywise() {
    for (name, a) in golden_suite() {
        let g = realization(&a, 3, 5, 0);
        let ours = rigidity_matrix(&g).unwrap();
        let theirs = oracle_rigidity_matrix(&g);
        assert_eq!((ours.rows(), ours.cols()), theirs.shape(), "{name}");
        for i in 0..ours.rows() {
            for j in 0..ours.cols() {
                assert_eq!(ours[(i, j)], theirs[(i, j)], "{name} ({i}, {j})");
            }
        }
    }
}

#[test]
fn golden_suite_sanity() {
    let golden = load_golden_table();
    assert!(golden["triangle/d2"].generically_rigid);
    assert!(!golden["path6/d2"].generically_rigid);
    assert!(golden["k5/d3"].generically_globally_rigid);
    assert!(golden["path6_pow3/d2"].generically_globally_rigid);
    assert!(!golden["path6_pow2/d2"].generically_globally_rigid);
    assert!(golden["kite/d2"].generically_rigid && !golden["kite/d2"].generically_globally_rigid);
}
