use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::selections::regularization_convergence;
use pullback_heaviside::{Field, Series, Symbol, Term};

fn data(disc: &Discretization) -> Field {
    Field::from_fn(disc.grid, |x| (0.3 - (x - 0.4).abs()).max(0.0))
}

#[test]
fn regularized_trajectories_approach_the_sign_selection() {
    let disc = Discretization::new(99, 1e-3).unwrap();
    let sigma = Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, 1.0, 0.0)]),
        Series::constant(0.5),
    )
    .unwrap();
    let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4];
    let rows = regularization_convergence(&data(&disc), &sigma, 0.0, 1.0, &eps, disc).unwrap();
    let diffs: Vec<f64> = rows.iter().map(|r| r.max_l2_difference).collect();
    println!("{diffs:?}");
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
    // error ~ ε^p with p ≈ 1/2: the difference is made where u is O(ε), near the support edges
    let order = (diffs[0] / diffs[5]).ln() / (eps[0] / eps[5]).ln();
    assert!((order - 0.468).abs() < 0.01, "order {order}");
}

#[test]
fn regularization_rejects_bad_input() {
    let disc = Discretization::new(49, 1e-3).unwrap();
    let sigma = Symbol::constant(1.0, 0.0).unwrap();
    assert!(
        regularization_convergence(&Field::zeros(disc.grid), &sigma, 0.0, 0.1, &[1e-2], disc)
            .is_err()
    );
    assert!(
        regularization_convergence(&data(&disc), &sigma, 0.0, 0.1, &[1e-3, 1e-2], disc).is_err()
    );
}
