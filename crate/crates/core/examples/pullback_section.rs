//! The attractor section at t = 0 and the pullback of random nonnegative data into it.

use pullback_heaviside::attractor::{self, AgeSearch};
use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::{Field, Result, Series, Symbol, Term};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let disc = Discretization::standard();
    let sigma = Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, 1.0, 0.0)]),
        Series::constant(0.5),
    )?;

    let taus = [-2.0, -1.0, -0.5, -0.25, -0.1, -0.02];
    let section = attractor::section(0.0, &sigma, &taus, 8.0, disc)?;
    println!("|xi_M(0)| = {:.6}", section.xi_m.l2_norm());
    for (tau, g) in &section.connections {
        println!(
            "tau = {tau:>6}: |gamma| = {:.6}, distance to xi_M = {:.3e}",
            g.l2_norm(),
            g.l2_distance(&section.xi_m)
        );
    }
    println!("ordered: {}", section.satisfies_ordering(1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<Field> = (0..5)
        .map(|_| Field::random_nonnegative(disc.grid, &mut rng))
        .collect();
    for row in attractor::pullback_attraction_test(
        &data,
        0.0,
        &[-0.1, -0.5, -2.0],
        &sigma,
        8.0,
        disc,
        AgeSearch::default(),
    )? {
        let classes: Vec<String> = row
            .nearest
            .iter()
            .map(|n| format!("{:?}", n.class))
            .collect();
        println!(
            "s = {:>5}: max distance {:.3e}  nearest {}",
            row.s,
            row.max_distance,
            classes.join(", ")
        );
    }
    Ok(())
}
