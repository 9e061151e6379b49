//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//! Desk scale: N = 199 and Δt = 1e-3 unless a criterion says otherwise.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use pullback_heaviside::attractor::{self, AgeSearch, Classification};
use pullback_heaviside::coefficients::hull_sample;
use pullback_heaviside::fdsolver::{self, Discretization};
use pullback_heaviside::skewflow::{self, GradientSettings};
use pullback_heaviside::spectral::{self, MildOptions, Source};
use pullback_heaviside::{
    Field, HullStrategy, Result, SelectionPolicy, Series, Symbol, Term, PI_SQUARED,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn standard() -> Discretization {
    Discretization::standard()
}

fn random_data(count: usize, seed: u64, disc: &Discretization) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Field::random_nonnegative(disc.grid, &mut rng))
        .collect()
}

fn cosine_b() -> Symbol {
    Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, 1.0, 0.0)]),
        Series::constant(0.0),
    )
    .unwrap()
}

fn periodic() -> Symbol {
    let f = PI / 2.0;
    Symbol::quasiperiodic(
        Series::new(1.5, vec![Term::new(0.5, f, 0.0)]),
        Series::new(1.0, vec![Term::new(0.5, f, 0.3)]),
    )
    .unwrap()
}

fn quasiperiodic() -> Symbol {
    Symbol::quasiperiodic(
        Series::new(
            1.5,
            vec![Term::new(0.3, 1.0, 0.0), Term::new(0.2, 2f64.sqrt(), 0.5)],
        ),
        Series::new(0.5, vec![Term::new(0.2, 3f64.sqrt(), 0.0)]),
    )
    .unwrap()
}

fn equilibrium_formula() -> Result<Outcome> {
    let disc = standard();
    let eq = attractor::v1_plus(1.0, 1.0, disc.grid)?;
    let mid = eq.field.values()[99];
    let analytic = attractor::v1_plus_at(1.0, 1.0, 0.5);
    let gap = (mid - analytic).abs();
    outcome(
        eq.residual < 1e-3 && gap < 1e-6,
        format!("residual={:.3e} (<1e-3) midpoint={mid:.9} analytic={analytic:.9} gap={gap:.1e} (<1e-6)", eq.residual),
    )
}

fn autonomous_steady_state() -> Result<Outcome> {
    let disc = standard();
    let sigma = Symbol::constant(1.0, 0.0)?;
    let u = fdsolver::evolve(
        &Field::zeros(disc.grid),
        0.0,
        3.0,
        disc,
        &sigma,
        &SelectionPolicy::ignite(0.0),
    )?;
    let target = Field::from_fn(disc.grid, |x| x * (1.0 - x) / 2.0);
    let err = u.l2_distance(&target);
    outcome(err < 1e-3, format!("L2 error at t=3: {err:.3e} (<1e-3)"))
}

fn instant_positivity() -> Result<Outcome> {
    let disc = standard();
    let sigma = Symbol::constant(1.0, 0.0)?;
    let policy = SelectionPolicy::sign(0.0);
    let mut worst = f64::INFINITY;
    let mut all = true;
    for u0 in random_data(20, 3, &disc) {
        let u1 = fdsolver::step(&u0, 0.0, disc, &sigma, &policy.select(&u0, 0.0))?;
        all &= u1.is_strictly_positive();
        worst = worst.min(u1.min());
    }
    outcome(
        all,
        format!("20/20 fields checked, smallest node value {worst:.3e} (>0)"),
    )
}

fn delayed_ignition() -> Result<Outcome> {
    let disc = standard();
    let sigma = Symbol::constant(1.0, 0.0)?;
    let zero = Field::zeros(disc.grid);
    let (t0, t0_late) = (0.5, 0.8);
    let early = fdsolver::solve(&zero, 0.0, 1.5, disc, &sigma, &SelectionPolicy::ignite(t0))?;
    let late = fdsolver::solve(
        &zero,
        0.0,
        1.5,
        disc,
        &sigma,
        &SelectionPolicy::ignite(t0_late),
    )?;
    let k = disc.step_index(t0)? as usize;
    let zero_before = early.states[..=k].iter().all(Field::is_zero);
    let positive_after = early.states[k + 1..]
        .iter()
        .all(Field::is_strictly_positive);
    let ordered = fdsolver::comparison_check(&late, &early)?;
    outcome(
        zero_before && positive_after && ordered,
        format!("zero on [0,{t0}]: {zero_before}, positive from t0+dt: {positive_after}, comparison(t0={t0} vs {t0_late}): {ordered}"),
    )
}

fn decay_rate_of(b: f64, omega: f64) -> Result<(f64, f64)> {
    let disc = standard();
    let sigma = Symbol::constant(b, omega)?;
    let target = if omega == 0.0 {
        attractor::v1_plus(b, omega, disc.grid)?.field
    } else {
        attractor::discrete_equilibrium(b, omega, disc.grid)?
    };
    let mut samples = Vec::new();
    fdsolver::evolve_with(
        &Field::zeros(disc.grid),
        0,
        3000,
        disc,
        &sigma,
        &SelectionPolicy::ignite(0.0),
        |n, u, _| {
            if n >= 1000 && n % 100 == 0 {
                samples.push((disc.time(n as i64), u.l2_distance(&target)));
            }
        },
    )?;
    Ok((attractor::exponential_rate(&samples)?, PI_SQUARED - omega))
}

fn decay_rate() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (b, omega) in [(1.0, 0.0), (1.0, 1.0), (2.0, 5.0)] {
        let (rate, delta) = decay_rate_of(b, omega)?;
        let rel = (rate - delta).abs() / delta;
        passed &= rel <= 0.1;
        parts.push(format!(
            "(b={b},w={omega}) rate={rate:.4} delta={delta:.4} rel={rel:.2e}"
        ));
    }
    outcome(passed, format!("{} (rel<=0.1)", parts.join("; ")))
}

fn sandwich() -> Result<Outcome> {
    let disc = standard();
    let sigma = cosine_b();
    let (lower, upper) = attractor::sandwich_bounds(&sigma, disc.grid)?;
    let tol = 1e-6 + 1e-3;
    let mut worst: f64 = f64::NEG_INFINITY;
    for t in [0.0, 1.3, 2.6, 3.9, 5.2] {
        let xi = attractor::xi_m(t, &sigma, 4.0, disc)?;
        for ((l, x), u) in lower
            .field
            .values()
            .iter()
            .zip(xi.values())
            .zip(upper.field.values())
        {
            worst = worst.max(l - x).max(x - u);
        }
    }
    outcome(
        worst <= tol,
        format!("largest bound violation {worst:.3e} over 5 times (<= {tol:.4e})"),
    )
}

fn pullback_cauchy() -> Result<Outcome> {
    let disc = standard();
    let sigma = cosine_b();
    let (_, upper) = attractor::sandwich_bounds(&sigma, disc.grid)?;
    let gap = attractor::xi_m(0.0, &sigma, 4.0, disc)?
        .l2_distance(&attractor::xi_m(0.0, &sigma, 8.0, disc)?);
    let bound = (-sigma.bounds().delta() * 4.0).exp() * upper.field.l2_norm() + 1e-6;
    outcome(
        gap <= bound,
        format!("||xi(T=4) - xi(T=8)|| = {gap:.3e} (<= {bound:.3e})"),
    )
}

fn structure_probe() -> Result<Outcome> {
    let disc = standard();
    let sigma = cosine_b();
    let data = random_data(10, 5, &disc);
    let taus: Vec<f64> = [0.1, 0.25, 0.5, 1.0, 2.0].iter().map(|a| -a).collect();
    let section = attractor::section(0.0, &sigma, &taus, 8.0, disc)?;
    let rows = attractor::pullback_attraction_test(
        &data,
        0.0,
        &[-2.0, -4.0, -6.0],
        &sigma,
        8.0,
        disc,
        AgeSearch::default(),
    )?;
    let mut worst_section: f64 = 0.0;
    let mut worst_nearest: f64 = 0.0;
    let mut classified = true;
    for (row, &s) in rows.iter().zip(&[-2.0, -4.0, -6.0]) {
        for (u0, near) in data.iter().zip(&row.nearest) {
            let u = fdsolver::evolve(u0, s, 0.0, disc, &sigma, &SelectionPolicy::sign(0.0))?;
            worst_section = worst_section.max(section.distance(&u));
            worst_nearest = worst_nearest.max(near.distance);
            classified &= matches!(
                near.class,
                Classification::Equilibrium | Classification::Connection { .. }
            );
        }
    }
    outcome(
        worst_section < 1e-2 && classified,
        format!("30 runs: max dist to section {worst_section:.3e}, to nearest element {worst_nearest:.3e} (<1e-2); all xi_M or connection: {classified}"),
    )
}

fn oracle_error(nodes: usize, dt: f64, t_end: f64) -> Result<f64> {
    let disc = Discretization::new(nodes, dt)?;
    let sigma = Symbol::constant(1.0, 0.0)?;
    let zero = Field::zeros(disc.grid);
    let fd = fdsolver::evolve(
        &zero,
        0.0,
        t_end,
        disc,
        &sigma,
        &SelectionPolicy::positive_branch(),
    )?;
    let oracle = spectral::mild_solve_linear(
        &zero,
        0.0,
        t_end,
        &sigma,
        Source::PositiveBranch,
        MildOptions::default(),
    )?;
    Ok(fd.l2_distance(&oracle))
}

/// Spatial error with the first-order time error removed by Richardson extrapolation.
fn spatial_error(nodes: usize, dt: f64, t_end: f64) -> Result<f64> {
    let sigma = Symbol::constant(1.0, 0.0)?;
    let run = |dt: f64| -> Result<Field> {
        let disc = Discretization::new(nodes, dt)?;
        fdsolver::evolve(
            &Field::zeros(disc.grid),
            0.0,
            t_end,
            disc,
            &sigma,
            &SelectionPolicy::positive_branch(),
        )
    };
    let (coarse, fine) = (run(dt)?, run(dt / 2.0)?);
    let extrapolated = fine.scaled(2.0).sub(&coarse);
    let zero = Field::zeros(coarse.grid());
    let oracle = spectral::mild_solve_linear(
        &zero,
        0.0,
        t_end,
        &sigma,
        Source::PositiveBranch,
        MildOptions::default(),
    )?;
    Ok(extrapolated.l2_distance(&oracle))
}

fn oracle_equivalence() -> Result<Outcome> {
    let e1 = oracle_error(199, 1e-3, 1.0)?;
    let e2 = oracle_error(199, 5e-4, 1.0)?;
    let time_ratio = e2 / e1;
    let s1 = spatial_error(49, 1e-5, 0.1)?;
    let s2 = spatial_error(99, 1e-5, 0.1)?;
    let space_ratio = s2 / s1;
    let passed = e1 < 5e-4 && (time_ratio - 0.5).abs() <= 0.1 && (space_ratio - 0.25).abs() <= 0.05;
    outcome(
        passed,
        format!(
            "error {e1:.3e} (<5e-4); dt halved: ratio {time_ratio:.4} (0.5±20%); dx halved (N=49→99, T=0.1, Richardson in dt): {s1:.3e}→{s2:.3e} ratio {space_ratio:.4} (0.25±20%)"
        ),
    )
}

fn identities() -> Result<Outcome> {
    let disc = standard();
    let u0 = &random_data(1, 9, &disc)[0];
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for sigma in [Symbol::constant(1.0, 1.0)?, quasiperiodic()] {
        for (t, s, policy) in [
            (0.3, 0.2, SelectionPolicy::sign(0.0)),
            (0.5, 0.25, SelectionPolicy::sign(1.0)),
            (1.0, 0.7, SelectionPolicy::ignite(0.4)),
        ] {
            worst = worst.max(skewflow::cocycle_check(t, s, &sigma, u0, &policy, disc)?);
            runs += 1;
        }
        for (h, tau, t) in [(0.5, 0.0, 0.5), (1.0, -0.3, 0.4), (2.5, -1.0, 0.2)] {
            worst = worst.max(skewflow::translation_identity_check(
                &sigma,
                h,
                tau,
                t,
                u0,
                &SelectionPolicy::sign(0.0),
                disc,
            )?);
            runs += 1;
        }
    }
    outcome(
        worst == 0.0,
        format!("{runs} checks, largest deviation {worst:e} (== 0)"),
    )
}

fn min_principle() -> Result<Outcome> {
    let disc = standard();
    let mut count = 0;
    let mut all = true;
    for sigma in [Symbol::constant(1.0, 0.0)?, periodic(), quasiperiodic()] {
        for u0 in random_data(5, 21, &disc) {
            let traj = fdsolver::solve(&u0, 0.0, 0.5, disc, &sigma, &SelectionPolicy::sign(0.0))?;
            all &= fdsolver::discrete_min_principle_check(&traj)?;
            count += 1;
        }
        let traj = fdsolver::solve(
            &Field::zeros(disc.grid),
            0.0,
            0.5,
            disc,
            &sigma,
            &SelectionPolicy::ignite(0.2),
        )?;
        all &= fdsolver::discrete_min_principle_check(&traj)?;
        count += 1;
    }
    let base = fdsolver::solve(
        &random_data(1, 22, &disc)[0],
        0.0,
        0.1,
        disc,
        &Symbol::constant(1.0, 0.0)?,
        &SelectionPolicy::sign(0.0),
    )?;
    let mut injected = base.clone();
    injected.states[50].values_mut()[100] = -1e-3;
    let caught = !fdsolver::discrete_min_principle_check(&injected)?;
    outcome(
        all && caught,
        format!("{count} trajectories pass: {all}; injected counterexample rejected: {caught}"),
    )
}

fn energy_monotonicity() -> Result<Outcome> {
    let disc = standard();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = f64::NEG_INFINITY;
    let cases = [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)];
    for j in 0..10 {
        let (b, omega) = cases[j % 3];
        let sigma = Symbol::constant(b, omega)?;
        let mut u0 = Field::random_nonnegative(disc.grid, &mut rng);
        if j % 2 == 1 {
            // sign-changing data
            u0 = u0.sub(&Field::random_nonnegative(disc.grid, &mut rng));
        }
        let policy = SelectionPolicy::sign([0.0, 0.5, 1.0, -1.0, -0.5][j % 5]);
        let mut energies = Vec::new();
        fdsolver::evolve_with(&u0, 0, 2000, disc, &sigma, &policy, |_, u, _| {
            energies.push(attractor::energy(u, b, omega))
        })?;
        for w in energies.windows(2) {
            worst = worst.max((w[1] - w[0]) / (1.0 + w[0].abs()));
        }
    }
    let mut equilibria_below = true;
    let mut values = Vec::new();
    for (b, omega) in cases {
        let e = attractor::energy(&attractor::v1_plus(b, omega, disc.grid)?.field, b, omega);
        equilibria_below &= e < 0.0;
        values.push(format!("{e:.4e}"));
    }
    outcome(
        worst < 1e-10 && equilibria_below,
        format!(
            "largest relative increase {worst:.3e} (<1e-10); E(v1+) = [{}] (<0)",
            values.join(", ")
        ),
    )
}

fn gradient_structure() -> Result<Outcome> {
    let disc = standard();
    let hull = hull_sample(
        &periodic(),
        4,
        HullStrategy::LatticeShifts {
            window: 4.0,
            dt: disc.dt,
        },
    )?;
    let ignitions = [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0];
    let report =
        skewflow::gradient_structure_check(&hull, &ignitions, GradientSettings::default(), disc)?;
    let connections = report
        .entries
        .iter()
        .filter(|e| e.ignition.is_some())
        .count();
    let worst_forward = report
        .entries
        .iter()
        .filter_map(|e| match e.class {
            skewflow::TrajectoryClass::Connection { forward, .. } => Some(forward),
            _ => None,
        })
        .fold(0.0, f64::max);
    outcome(
        report.counterexamples() == 0,
        format!(
            "{} trajectories ({connections} connections) over 4 phases, counterexamples {}, largest forward gap {worst_forward:.3e}",
            report.entries.len(),
            report.counterexamples()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 13] = [
        ("equilibrium formula", equilibrium_formula),
        ("omega=0 steady state", autonomous_steady_state),
        ("instant positivity", instant_positivity),
        ("delayed ignition family", delayed_ignition),
        ("decay rate", decay_rate),
        ("sandwich bounds", sandwich),
        ("pullback Cauchy certificate", pullback_cauchy),
        ("structure probe", structure_probe),
        ("oracle equivalence", oracle_equivalence),
        ("cocycle and translation identities", identities),
        ("discrete minimum principle", min_principle),
        ("energy monotonicity", energy_monotonicity),
        ("gradient structure", gradient_structure),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match f() {
            Ok(o) => (if o.passed { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "{status} [{:>2}] {name}: {detail} ({:.2}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
