//! Positive stationary states v₁⁺(b, ω) and the discrete residual of the closed form.

use pullback_heaviside::attractor;
use pullback_heaviside::{Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::new(199)?;
    println!(
        "{:>5} {:>5} {:>12} {:>12} {:>12}",
        "b", "omega", "v(0.5)", "residual", "energy"
    );
    for (b, omega) in [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5), (1.0, 9.0)] {
        let eq = attractor::v1_plus(b, omega, grid)?;
        let mid = eq.field.values()[grid.len() / 2];
        let e = attractor::energy(&eq.field, b, omega);
        println!(
            "{b:>5} {omega:>5} {mid:>12.9} {:>12.3e} {e:>12.6}",
            eq.residual
        );
    }
    Ok(())
}
