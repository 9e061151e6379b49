//! φ(t + s, σ, u) = φ(t, θ_s σ, φ(s, σ, u)) and U_σ(t + h, τ + h) = U_{θ_h σ}(t, τ),
//! both exact to the last bit on the time lattice.

use pullback_heaviside::fdsolver::Discretization;
use pullback_heaviside::skewflow;
use pullback_heaviside::{Field, Result, SelectionPolicy, Series, Symbol, Term};

fn main() -> Result<()> {
    let disc = Discretization::standard();
    let sigma = Symbol::quasiperiodic(
        Series::new(
            1.5,
            vec![Term::new(0.3, 1.0, 0.0), Term::new(0.2, 2f64.sqrt(), 0.5)],
        ),
        Series::new(0.5, vec![Term::new(0.2, 3f64.sqrt(), 0.0)]),
    )?;
    let u0 = Field::from_fn(disc.grid, |x| (0.2 - (x - 0.3).abs()).max(0.0));

    for (t, s) in [(0.3, 0.2), (1.0, 0.7), (2.0, 3.0)] {
        for policy in [SelectionPolicy::sign(0.0), SelectionPolicy::ignite(0.5)] {
            let dev = skewflow::cocycle_check(t, s, &sigma, &u0, &policy, disc)?;
            println!("cocycle t={t} s={s} {policy}: {dev:e}");
        }
    }
    for (h, tau, t) in [(0.5, 0.0, 0.5), (2.5, -1.0, 0.2)] {
        let dev = skewflow::translation_identity_check(
            &sigma,
            h,
            tau,
            t,
            &u0,
            &SelectionPolicy::sign(0.0),
            disc,
        )?;
        println!("translation h={h} tau={tau} t={t}: {dev:e}");
    }
    match skewflow::cocycle_check(0.3, 0.0005, &sigma, &u0, &SelectionPolicy::sign(0.0), disc) {
        Err(e) => println!("off-lattice shift rejected: {e}"),
        Ok(dev) => println!("unexpected: {dev}"),
    }
    Ok(())
}
