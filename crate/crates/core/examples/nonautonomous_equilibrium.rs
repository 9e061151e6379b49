//! ξ_M(t) for b(t) = 1.5 + 0.5 cos t by pullback, bracketed by the autonomous
//! equilibria with frozen extreme coefficients.

use pullback_heaviside::attractor;
use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::{Result, Series, Symbol, Term};

fn main() -> Result<()> {
    let disc = Discretization::standard();
    let sigma = Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, 1.0, 0.0)]),
        Series::constant(0.0),
    )?;
    let (lower, upper) = attractor::sandwich_bounds(&sigma, disc.grid)?;
    let mid = disc.grid.len() / 2;
    println!(
        "lower v(0.5) = {:.6}, upper v(0.5) = {:.6}",
        lower.field.values()[mid],
        upper.field.values()[mid]
    );

    for k in 0..=8 {
        let t = 0.785 * k as f64;
        let (from_below, from_above) = attractor::xi_m_two_sided(t, &sigma, 1.0, disc)?;
        println!(
            "t = {t:5.3}  xi(0.5) = {:.6}  bracket = {:.1e}",
            from_above.values()[mid],
            from_above.l2_distance(&from_below)
        );
    }

    let short = attractor::xi_m(0.0, &sigma, 1.0, disc)?;
    let long = attractor::xi_m(0.0, &sigma, 2.0, disc)?;
    let bound = (-sigma.bounds().delta()).exp() * upper.field.l2_norm();
    println!(
        "T_pull 1 vs 2: {:.3e} <= {bound:.3e}",
        short.l2_distance(&long)
    );
    Ok(())
}
