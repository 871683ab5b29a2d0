use cthge::linalg::DenseMatrix;
use cthge::theory::{c0_monte_carlo, complexity, db_index, empirical_generalization_sweep, lower_bound, MixtureSpec, SweepOutcome};

fn spec() -> MixtureSpec {
    MixtureSpec {
        mu_x0: vec![1.0, 0.0, 0.5],
        mu_x1: vec![-1.0, 0.5, 0.0],
        sigma: [0.7, 1.2],
        lambda: 0.5,
        q_s: 0.9,
        q_c: 0.8,
        w: vec![vec![1.0, 0.2, 0.0], vec![0.0, 1.0, -0.5]],
        samples: 10_000,
    }
}

#[test]
fn closed_form_c0_matches_monte_carlo() {
    let s = spec();
    let (c0, _) = lower_bound(&s).unwrap();
    let mc = c0_monte_carlo(&s, 1_000_000, 11).unwrap();
    assert!((mc - c0).abs() / c0 < 0.01, "closed form {c0}, sampled {mc}");
}

#[test]
fn hand_computed_db_index() {
    let a = DenseMatrix::from_vec(2, 2, vec![0.0, 0.0, 2.0, 0.0]);
    let b = DenseMatrix::from_vec(2, 2, vec![10.0, 0.0, 10.0, 2.0]);
    let r = complexity(&[a.clone(), b.clone()], 2.0).unwrap();
    assert!((r.db_index - 2.0 / 82f64.sqrt()).abs() < 1e-15);
    assert!((r.squared_form - 2.0 / 82.0).abs() < 1e-15);
    assert_eq!(r.intra, vec![1.0, 1.0]);
    let l1 = db_index(&[a, b], 1.0).unwrap();
    assert!((l1 - 2.0 / 10.0).abs() < 1e-15);
}

#[test]
fn coincident_centroids_are_rejected() {
    let a = DenseMatrix::from_vec(2, 1, vec![-1.0, 1.0]);
    let b = DenseMatrix::from_vec(2, 1, vec![-2.0, 2.0]);
    assert!(complexity(&[a, b], 2.0).is_err());
}

#[test]
fn sweep_is_deterministic_and_marks_domain_errors() {
    let s = MixtureSpec { q_s: 0.5, ..spec() };
    let grid = [0.3, 0.5, 0.7, 1.0];
    let a = empirical_generalization_sweep(&s, &grid, 4).unwrap();
    let b = empirical_generalization_sweep(&s, &grid, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].outcome, SweepOutcome::DomainError);
    assert_eq!(a[1].outcome, SweepOutcome::DomainError);
    assert!(matches!(a[3].outcome, SweepOutcome::Point { .. }));
}
