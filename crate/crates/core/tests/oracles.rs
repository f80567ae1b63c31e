use elastic_tep::assembly::error_norms;
use elastic_tep::coefficient::Coefficient;
use elastic_tep::harness::{example, ExampleProblem, Overrides};
use elastic_tep::mesh::{generate_domain, Domain};
use elastic_tep::solvers::{exact_value, solve_source, TepOperator};
use elastic_tep::spaces::BrokenSpace;

#[test]
fn example1_solution_norm_matches_closed_form() {
    let ExampleProblem::Source { exact, .. } = example(1).unwrap().problem else { unreachable!() };
    let w = [Coefficient::parse(exact[0]).unwrap(), Coefficient::parse(exact[1]).unwrap()];
    let mesh = generate_domain(Domain::UnitSquare, 4).unwrap();
    let zero = vec![0.0; BrokenSpace::new(&mesh, 2).dim()];
    let n = error_norms(&mesh, &zero, |p| exact_value(&w, p)).unwrap();
    // Each component squared integrates to (3/8)(5/16).
    let closed = (15.0f64 / 64.0).sqrt();
    assert!((n.l2 - closed).abs() < 1e-9 * closed, "{} vs {closed}", n.l2);
}

#[test]
fn example1_level2_linear_residual() {
    let spec = example(1).unwrap().spec(2, &Overrides::default()).unwrap();
    let s = solve_source(&spec).unwrap();
    assert!(s.residual <= 1e-12, "{}", s.residual);
}

#[test]
fn smallest_branch_changes_sign_once() {
    let spec = example(6).unwrap().spec(1, &Overrides::default()).unwrap();
    let op = TepOperator::new(&spec).unwrap();
    let f: Vec<f64> = [1.0, 4.0, 8.0, 12.0].iter().map(|&t| op.lambda_of_tau(t, 1).unwrap()[0] - t).collect();
    let changes = f.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert_eq!(changes, 1, "{f:?}");
}
