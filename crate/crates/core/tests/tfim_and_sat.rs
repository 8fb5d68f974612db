use merw_core::ensemble::{sat_ensemble, sat_full_ensemble, sat_posterior, ensemble_distribution, Cnf};
use merw_core::tfim::tfim_joint;

#[test]
fn coarse_grid_agrees_with_refined_one() {
    let fine = tfim_joint(1.0, 1.0, 200).unwrap();
    let coarse = tfim_joint(1.0, 1.0, 100).unwrap();
    let tv = fine.coarsen_by_two().unwrap().total_variation(&coarse).unwrap();
    assert!(tv <= 1e-3, "TV {tv}");
}

#[test]
fn field_pulls_angles_toward_zero() {
    let d = tfim_joint(0.5, 2.0, 64).unwrap();
    let m = d.marginal();
    assert!((d.total() - 1.0).abs() < 1e-12);
    // grid point k is angle 2pi(k+1)/lat: index 0 is next to 0, index 31 is pi
    assert!(m[0] > m[31]);
    let chain = d.sample_chain(2000, 1);
    assert_eq!(chain.len(), 2000);
    assert_eq!(chain, d.sample_chain(2000, 1));
    let csv = d.to_csv();
    assert_eq!(csv.lines().count(), 64);
    assert!(csv.lines().all(|l| l.split(',').count() == 64));
    assert!(d.header_json().contains("\"lat\":64"));
}

#[test]
fn single_solution_instances() {
    // x1 forced true by x1 | x1 | x1, x2 by x2 | x2 | x2, x3 false
    let cnf = Cnf::parse_dimacs("c forced\np cnf 3 3\n1 1 1 0\n2 2 2 0\n-3 -3 -3 0\n").unwrap();
    assert_eq!(cnf.brute_force(), vec![0b110]);
    let post = sat_posterior(&cnf).unwrap();
    assert!((post[0b110] - 1.0).abs() < 1e-12);
    let compact = ensemble_distribution(&sat_ensemble(&cnf).unwrap()).unwrap();
    let full = ensemble_distribution(&sat_full_ensemble(&cnf).unwrap()).unwrap();
    let first_full = &full.layers[1];
    for (x, p) in compact.layers[1].iter().enumerate() {
        assert!((p - first_full[x]).abs() < 1e-12);
    }
}

#[test]
fn unsatisfiable_formula_has_no_ensemble() {
    let mut clauses = Vec::new();
    for x in 0..8i32 {
        let lit = |v: i32| if x >> (3 - v) & 1 == 1 { -v } else { v };
        clauses.push([lit(1), lit(2), lit(3)]);
    }
    let cnf = Cnf::new(3, clauses).unwrap();
    assert!(cnf.brute_force().is_empty());
    assert!(sat_posterior(&cnf).is_err());
}

#[test]
fn dimacs_round_trip() {
    let cnf = Cnf::new(4, vec![[1, -2, 3], [-1, 4, 2]]).unwrap();
    assert_eq!(Cnf::parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
}
