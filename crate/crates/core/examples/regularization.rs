//! Piecewise-linear selections clamp(u/ε, −1, 1) approach the exact sign selection as ε → 0.

use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::selections::regularization_convergence;
use pullback_heaviside::{Field, Result, Symbol};

fn main() -> Result<()> {
    let disc = Discretization::new(99, 1e-3)?;
    let sigma = Symbol::constant(1.0, 0.5)?;
    let u0 = Field::from_fn(disc.grid, |x| (0.3 - (x - 0.4).abs()).max(0.0));
    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    for row in regularization_convergence(&u0, &sigma, 0.0, 1.0, &eps, disc)? {
        println!(
            "eps = {:>6.0e}: max L2 gap {:.3e}",
            row.eps, row.max_l2_difference
        );
    }
    Ok(())
}
