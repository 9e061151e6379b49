//! From zero data every ignition time gives a different solution: zero until
//! t0, then strictly positive. Later ignitions stay below earlier ones.

use pullback_heaviside::fdsolver::{self, Discretization};
use pullback_heaviside::{Field, Result, SelectionPolicy, Symbol};

fn main() -> Result<()> {
    let disc = Discretization::standard();
    let sigma = Symbol::constant(1.0, 0.0)?;
    let zero = Field::zeros(disc.grid);

    let ignitions = [0.0, 0.25, 0.5, 1.0];
    let mut trajectories = Vec::new();
    for &t0 in &ignitions {
        trajectories.push(fdsolver::solve(
            &zero,
            0.0,
            2.0,
            disc,
            &sigma,
            &SelectionPolicy::ignite(t0),
        )?);
    }

    println!(
        "{:>6} {}",
        "t",
        ignitions
            .map(|t0| format!("{:>12}", format!("t0={t0}")))
            .join("")
    );
    for n in (0..=2000).step_by(250) {
        let row: String = trajectories
            .iter()
            .map(|tr| format!("{:>12.6}", tr.states[n].l2_norm()))
            .collect();
        println!("{:>6.3} {row}", trajectories[0].time(n));
    }
    for pair in trajectories.windows(2) {
        println!(
            "ordered: {}",
            fdsolver::comparison_check(&pair[1], &pair[0])?
        );
    }
    Ok(())
}
