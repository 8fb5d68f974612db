use merw_core::mc::{mh_run, running_csv, McConfig};
use merw_core::sweep::{run_sweep, sweep_csv, SweepSpec};
use merw_core::{pair_marginal, ContextShape, InteractionSpec, ModelParams, Representation, SolverOptions, TransferOperator};

#[test]
fn wider_strips_reduce_the_error() {
    let mut spec = SweepSpec::new(0.3, 0.4, 2, vec![10, 13]);
    spec.representation = Some(Representation::Implicit);
    let rows = run_sweep(&spec).unwrap();
    let (narrow, wide) = (&rows[0], &rows[1]);
    assert_eq!((narrow.j, narrow.width, wide.width), (0.3, 10, 13));
    assert!(wide.err_u.abs() < narrow.err_u.abs() * 1.1, "{} vs {}", wide.err_u, narrow.err_u);
    assert!(wide.err_h.abs() < narrow.err_h.abs() * 1.1, "{} vs {}", wide.err_h, narrow.err_h);
}

#[test]
fn sweep_csv_starts_at_the_free_point() {
    let rows = run_sweep(&SweepSpec::new(0.0, 0.5, 3, vec![6])).unwrap();
    let csv = sweep_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "J,width,U_merw,H_merw,U_exact,H_exact,err_U,err_H,status");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.0);
    assert!((first[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(first[8], "ok");
}

#[test]
fn chain_blocks_agree_with_merw() {
    let j = 0.2;
    let params = ModelParams::ising(12, j);
    let op = TransferOperator::build(params, InteractionSpec::Ising, Representation::Implicit).unwrap();
    let sol = op.dominant_eigenpair(&SolverOptions::default()).unwrap();
    let mid = ContextShape::mid(12);
    let merw = pair_marginal(&op, &sol, &[mid, mid + 1], &[mid, mid + 1]).unwrap();

    let cfg = McConfig::new(48, 48, ModelParams::ising(1, j), 3000, 21);
    let rep = mh_run(&cfg).unwrap();
    let tv = merw_core::field::total_variation(&rep.block_freq, &merw);
    assert!(tv < 0.01, "TV {tv}");
    assert!(rep.acceptance_rate > 0.3 && rep.acceptance_rate < 1.0);
}

#[test]
fn running_estimates_are_written_per_sweep() {
    let cfg = McConfig::new(8, 8, ModelParams::ising(1, 0.3), 200, 4);
    let rep = mh_run(&cfg).unwrap();
    let csv = running_csv(&rep);
    assert!(csv.starts_with("sweep_index,U,mag,stderr_U\n"));
    assert_eq!(csv.lines().count(), rep.running.len() + 1);
    let last = rep.running.last().unwrap();
    assert!((last.u - rep.u).abs() < 1e-12);
    assert!(rep.u_stderr.is_finite() && rep.u_stderr > 0.0);
}
