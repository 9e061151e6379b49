//! Uniform attractor of a periodic symbol from four hull phases: fibers,
//! Morse sets {0} and {ξ_M}, and the classification of connections.

use std::f64::consts::PI;

use pullback_heaviside::coefficients::hull_sample;
use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::skewflow::{self, GradientSettings};
use pullback_heaviside::{HullStrategy, Result, Series, Symbol, Term};

fn main() -> Result<()> {
    let disc = Discretization::standard();
    let sigma = Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, PI / 2.0, 0.0)]),
        Series::new(1.0, vec![Term::new(0.5, PI / 2.0, 0.3)]),
    )?;
    let hull = hull_sample(
        &sigma,
        4,
        HullStrategy::LatticeShifts {
            window: 4.0,
            dt: disc.dt,
        },
    )?;

    let assembly = skewflow::uniform_attractor_assemble(&hull, 0.0, &[0.1, 0.5, 1.0], 8.0, disc)?;
    for ((_, section), shift) in assembly.fibers.iter().zip(&hull.shifts) {
        println!("shift {shift:>4}: |xi_M| = {:.6}", section.xi_m.l2_norm());
    }
    println!(
        "radius {:.6}, envelope |.| {:.6}",
        assembly.radius,
        assembly.envelope.l2_norm()
    );

    let morse = skewflow::morse_decomposition(&hull, 8.0, disc)?;
    println!(
        "Morse margin {:.6} >= {:.6}: {}",
        morse.separation_margin,
        morse.lower_bound_norm,
        morse.is_disjoint(1e-9)
    );

    let report = skewflow::gradient_structure_check(
        &hull,
        &[-6.0, -2.0, 0.0, 4.0],
        GradientSettings::default(),
        disc,
    )?;
    for entry in &report.entries {
        println!(
            "fiber {} ignition {:?}: {:?}",
            entry.fiber, entry.ignition, entry.class
        );
    }
    println!("counterexamples: {}", report.counterexamples());
    Ok(())
}
