//! Implicit Euler against the sine-series mild solution on the positive branch.

use pullback_heaviside::fdsolver::{self, Discretization};
use pullback_heaviside::spectral::{self, MildOptions, Source};
use pullback_heaviside::{Field, Result, SelectionPolicy, Symbol};

fn main() -> Result<()> {
    let sigma = Symbol::constant(1.0, 0.0)?;
    let policy = SelectionPolicy::positive_branch();
    println!("{:>5} {:>8} {:>12} {:>8}", "N", "dt", "L2 error", "ratio");
    let mut previous: Option<f64> = None;
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let disc = Discretization::new(199, dt)?;
        let zero = Field::zeros(disc.grid);
        let fd = fdsolver::evolve(&zero, 0.0, 1.0, disc, &sigma, &policy)?;
        let oracle = spectral::mild_solve_linear(
            &zero,
            0.0,
            1.0,
            &sigma,
            Source::PositiveBranch,
            MildOptions::default(),
        )?;
        let err = fd.l2_distance(&oracle);
        let ratio = previous.map_or(String::new(), |p| format!("{:.3}", err / p));
        println!("{:>5} {dt:>8.0e} {err:>12.3e} {ratio:>8}", 199);
        previous = Some(err);
    }
    Ok(())
}
