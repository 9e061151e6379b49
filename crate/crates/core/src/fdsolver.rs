//! Monotone finite-difference time stepping for
//! `u_t − u_xx = b(t)·h + ω(t)·u`, `h ∈ H₀(u)`, with zero Dirichlet data.
//!
//! One implicit-Euler step solves
//!
//! ```text
//! (I + Δt·A_h − Δt·ω(t_{n+1})·I) u^{n+1} = u^n + Δt·b(t_{n+1})·h^n
//! ```
//!
//! with `A_h` the second-difference operator and `h^n` chosen from `u^n` by a
//! [`SelectionPolicy`]. For `Δt·ω1 < 1` the matrix is an irreducible M-matrix,
//! which gives exact positivity and comparison in floating point.
//!
//! Times live on the lattice `t_k = k·Δt`; the start time of every solve must
//! be a lattice point.

use crate::coefficients::Symbol;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::selections::{heaviside_distance, SelectionPolicy, DEFAULT_ZERO_THRESHOLD};
use crate::spectral;
use crate::tridiag::solve_symmetric_toeplitz;

/// Default interior node count.
pub const DEFAULT_NODES: usize = 199;
/// Default time step.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    /// Second order in time but not monotone for large `Δt/Δx²`; accuracy
    /// studies only.
    CrankNicolson,
}

/// Space grid and time step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub grid: Grid,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Discretization {
    pub fn new(nodes: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(Self {
            grid: Grid::new(nodes)?,
            dt,
            scheme: Scheme::ImplicitEuler,
        })
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// `N = 199`, `Δt = 1e-3`.
    pub fn standard() -> Self {
        Self::new(DEFAULT_NODES, DEFAULT_DT).expect("default discretization is valid")
    }

    /// Lattice index of `t`, or an error if `t` is not a multiple of `dt`.
    pub fn step_index(&self, t: f64) -> Result<i64> {
        lattice_index(t, self.dt)
    }

    pub fn time(&self, k: i64) -> f64 {
        k as f64 * self.dt
    }

    pub fn check_symbol(&self, sigma: &Symbol) -> Result<()> {
        let product = self.dt * sigma.bounds().omega1;
        if !(product < 1.0) {
            return Err(Error::StepSizeRejected { product });
        }
        Ok(())
    }
}

pub fn lattice_index(t: f64, dt: f64) -> Result<i64> {
    if !t.is_finite() {
        return Err(Error::Misaligned { time: t, dt });
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * dt.max(dt * k.abs()).max(1e-300) {
        return Err(Error::Misaligned { time: t, dt });
    }
    Ok(k as i64)
}

/// Recorded evolution: `states[n]` at `t = (start_step + n)·dt`, and
/// `sources[n]` the selection used to advance `states[n]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub start_step: i64,
    pub dt: f64,
    pub scheme: Scheme,
    pub states: Vec<Field>,
    pub sources: Vec<Field>,
    pub symbol: Symbol,
    pub policy: Option<SelectionPolicy>,
}

impl Trajectory {
    pub fn grid(&self) -> Grid {
        self.states[0].grid()
    }

    pub fn steps(&self) -> usize {
        self.sources.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        (self.start_step + n as i64) as f64 * self.dt
    }

    pub fn start_time(&self) -> f64 {
        self.time(0)
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn initial(&self) -> &Field {
        &self.states[0]
    }

    pub fn last(&self) -> &Field {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// State at lattice time `t`, if recorded.
    pub fn state_at(&self, t: f64) -> Option<&Field> {
        let k = lattice_index(t, self.dt).ok()?;
        let n = k.checked_sub(self.start_step)?;
        usize::try_from(n).ok().and_then(|n| self.states.get(n))
    }
}

/// Reusable buffers for repeated steps on one grid.
pub struct Stepper {
    disc: Discretization,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    out: Vec<f64>,
}

impl Stepper {
    pub fn new(disc: Discretization) -> Self {
        let n = disc.grid.len();
        Self {
            disc,
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
            out: vec![0.0; n],
        }
    }

    /// Advances `u` in place from lattice step `k` to `k + 1` with source `h`.
    pub fn advance(&mut self, u: &mut [f64], k: i64, sigma: &Symbol, h: &[f64]) -> Result<()> {
        let dt = self.disc.dt;
        let dx = self.disc.grid.dx();
        let r = dt / (dx * dx);
        let next = sigma.eval_step(k + 1, dt)?;
        match self.disc.scheme {
            Scheme::ImplicitEuler => {
                for ((rhs, &ui), &hi) in self.rhs.iter_mut().zip(u.iter()).zip(h) {
                    *rhs = ui + dt * next.b * hi;
                }
                let diag = 1.0 + 2.0 * r - dt * next.omega;
                solve_symmetric_toeplitz(diag, -r, &self.rhs, &mut self.out, &mut self.scratch);
            }
            Scheme::CrankNicolson => {
                let now = sigma.eval_step(k, dt)?;
                let n = u.len();
                let half = 0.5 * r;
                let b_avg = 0.5 * (now.b + next.b);
                for i in 0..n {
                    let left = if i == 0 { 0.0 } else { u[i - 1] };
                    let right = if i + 1 == n { 0.0 } else { u[i + 1] };
                    let explicit = u[i] * (1.0 - r + 0.5 * dt * now.omega) + half * (left + right);
                    self.rhs[i] = explicit + dt * b_avg * h[i];
                }
                let diag = 1.0 + r - 0.5 * dt * next.omega;
                solve_symmetric_toeplitz(diag, -half, &self.rhs, &mut self.out, &mut self.scratch);
            }
        }
        u.copy_from_slice(&self.out);
        Ok(())
    }
}

/// One step from `u_n` at lattice time `t_n` with the given source field.
pub fn step(
    u_n: &Field,
    t_n: f64,
    disc: Discretization,
    sigma: &Symbol,
    h_n: &Field,
) -> Result<Field> {
    disc.check_symbol(sigma)?;
    check_grid(u_n, disc.grid)?;
    check_grid(h_n, disc.grid)?;
    let k = disc.step_index(t_n)?;
    let mut next = u_n.clone();
    Stepper::new(disc).advance(next.values_mut(), k, sigma, h_n.values())?;
    Ok(next)
}

fn check_grid(u: &Field, grid: Grid) -> Result<()> {
    if u.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: u.grid().len(),
        });
    }
    Ok(())
}

fn step_count(tau: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= tau) {
        return Err(Error::InvalidInterval {
            start: tau,
            end: t_end,
        });
    }
    Ok(((t_end - tau) / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Drives the scheme for `steps` steps from lattice step `start`, calling
/// `visit(n, state_n, source_n)` before each step and `visit(steps, final, None)`
/// at the end.
pub fn evolve_with(
    initial: &Field,
    start: i64,
    steps: usize,
    disc: Discretization,
    sigma: &Symbol,
    policy: &SelectionPolicy,
    mut visit: impl FnMut(usize, &Field, Option<&Field>),
) -> Result<Field> {
    disc.check_symbol(sigma)?;
    policy.validate()?;
    check_grid(initial, disc.grid)?;
    let mut stepper = Stepper::new(disc);
    let mut u = initial.clone();
    let mut h = Field::zeros(disc.grid);
    for n in 0..steps {
        let k = start + n as i64;
        policy.select_into(u.values(), disc.time(k), h.values_mut());
        visit(n, &u, Some(&h));
        stepper.advance(u.values_mut(), k, sigma, h.values())?;
    }
    visit(steps, &u, None);
    Ok(u)
}

/// Final state only, from lattice time `tau` to (the first lattice point at or after) `t_end`.
pub fn evolve(
    initial: &Field,
    tau: f64,
    t_end: f64,
    disc: Discretization,
    sigma: &Symbol,
    policy: &SelectionPolicy,
) -> Result<Field> {
    let start = disc.step_index(tau)?;
    let steps = step_count(tau, t_end, disc.dt)?;
    evolve_with(initial, start, steps, disc, sigma, policy, |_, _, _| {})
}

/// Full trajectory with every state and source recorded.
pub fn solve(
    initial: &Field,
    tau: f64,
    t_end: f64,
    disc: Discretization,
    sigma: &Symbol,
    policy: &SelectionPolicy,
) -> Result<Trajectory> {
    if !(tau < t_end) {
        return Err(Error::InvalidInterval {
            start: tau,
            end: t_end,
        });
    }
    let start = disc.step_index(tau)?;
    let steps = step_count(tau, t_end, disc.dt)?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut sources = Vec::with_capacity(steps);
    evolve_with(initial, start, steps, disc, sigma, policy, |_, u, h| {
        states.push(u.clone());
        if let Some(h) = h {
            sources.push(h.clone());
        }
    })?;
    Ok(Trajectory {
        start_step: start,
        dt: disc.dt,
        scheme: disc.scheme,
        states,
        sources,
        symbol: sigma.clone(),
        policy: Some(*policy),
    })
}

/// Re-runs the scheme with a prescribed source sequence.
pub fn replay(
    initial: &Field,
    start_step: i64,
    disc: Discretization,
    sigma: &Symbol,
    sources: &[Field],
) -> Result<Trajectory> {
    disc.check_symbol(sigma)?;
    check_grid(initial, disc.grid)?;
    let mut stepper = Stepper::new(disc);
    let mut states = Vec::with_capacity(sources.len() + 1);
    let mut u = initial.clone();
    states.push(u.clone());
    for (n, h) in sources.iter().enumerate() {
        check_grid(h, disc.grid)?;
        stepper.advance(u.values_mut(), start_step + n as i64, sigma, h.values())?;
        states.push(u.clone());
    }
    Ok(Trajectory {
        start_step,
        dt: disc.dt,
        scheme: disc.scheme,
        states,
        sources: sources.to_vec(),
        symbol: sigma.clone(),
        policy: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualAudit {
    /// `max_{n,i} dist(h^n_i, H₀(u^n_i; η))`.
    pub inclusion_residual: f64,
    /// Largest L² gap between the trajectory and the spectral re-integration
    /// of its recorded sources at the checkpoints.
    pub pde_residual: f64,
}

/// Audits a trajectory against the Heaviside constraint and against the
/// spectral mild solution driven by the same recorded sources.
pub fn residual_audit(traj: &Trajectory, checkpoints: usize) -> Result<ResidualAudit> {
    if traj.states.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let eta = traj.policy.map_or(DEFAULT_ZERO_THRESHOLD, |p| p.eta);
    let inclusion_residual = traj
        .states
        .iter()
        .zip(&traj.sources)
        .flat_map(|(u, h)| {
            u.values()
                .iter()
                .zip(h.values())
                .map(move |(&u, &h)| heaviside_distance(h, u, eta))
        })
        .fold(0.0, f64::max);

    let steps = traj.steps();
    let checkpoints = checkpoints.clamp(1, steps.max(1));
    let marks: Vec<usize> = (1..=checkpoints).map(|j| j * steps / checkpoints).collect();
    let oracle = spectral::replay_recorded_sources(
        traj.initial(),
        traj.start_step,
        traj.dt,
        &traj.symbol,
        &traj.sources,
        &marks,
    )?;
    let pde_residual = marks
        .iter()
        .zip(&oracle)
        .map(|(&n, o)| traj.states[n].l2_distance(o))
        .fold(0.0, f64::max);
    Ok(ResidualAudit {
        inclusion_residual,
        pde_residual,
    })
}

/// Discrete minimum principle: with `b·h^n + ω·u^{n+1} ≥ 0` everywhere, no
/// interior space-time value may drop below the minimum over the parabolic
/// boundary (the initial slice and the zero boundary columns).
pub fn discrete_min_principle_check(traj: &Trajectory) -> Result<bool> {
    if traj.scheme != Scheme::ImplicitEuler {
        return Err(Error::Precondition(
            "minimum principle is certified for implicit Euler only".into(),
        ));
    }
    for (n, h) in traj.sources.iter().enumerate() {
        let c = traj
            .symbol
            .eval_step(traj.start_step + n as i64 + 1, traj.dt)?;
        let next = &traj.states[n + 1];
        if let Some((i, r)) = h
            .values()
            .iter()
            .zip(next.values())
            .map(|(&h, &u)| c.b * h + c.omega * u)
            .enumerate()
            .find(|(_, r)| *r < 0.0)
        {
            return Err(Error::Precondition(format!(
                "source term b*h + omega*u = {r:e} < 0 at step {n}, node {i}"
            )));
        }
    }
    let boundary_min = traj.initial().min().min(0.0);
    Ok(traj.states[1..].iter().all(|u| u.min() >= boundary_min))
}

/// `u^n ≤ v^n` at every node and step, for trajectories on one discretization
/// with ordered data and ordered sources.
pub fn comparison_check(u: &Trajectory, v: &Trajectory) -> Result<bool> {
    if u.grid() != v.grid()
        || u.dt != v.dt
        || u.start_step != v.start_step
        || u.steps() != v.steps()
    {
        return Err(Error::Mismatch(
            "trajectories differ in grid, step, start or length".into(),
        ));
    }
    if u.symbol != v.symbol {
        return Err(Error::Mismatch("trajectories use different symbols".into()));
    }
    if !u.initial().le_with_tol(v.initial(), 0.0) {
        return Err(Error::Precondition("initial data are not ordered".into()));
    }
    if u.sources
        .iter()
        .zip(&v.sources)
        .any(|(a, b)| !a.le_with_tol(b, 0.0))
    {
        return Err(Error::Precondition("sources are not ordered".into()));
    }
    Ok(u.states
        .iter()
        .zip(&v.states)
        .all(|(a, b)| a.le_with_tol(b, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Series, Term};

    fn bump(grid: Grid, lo: f64, hi: f64) -> Field {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Field::from_fn(grid, |x| (1.0 - (x - mid).abs() / half).max(0.0))
    }

    #[test]
    fn zero_is_fixed() {
        let disc = Discretization::standard();
        let s = Symbol::constant(2.0, 3.0).unwrap();
        let z = Field::zeros(disc.grid);
        assert!(step(&z, 0.0, disc, &s, &z).unwrap().is_zero());
    }

    #[test]
    fn unit_source_from_zero() {
        let disc = Discretization::standard();
        let s = Symbol::constant(1.0, 0.0).unwrap();
        let g = disc.grid;
        let next = step(&Field::zeros(g), 0.0, disc, &s, &Field::constant(g, 1.0)).unwrap();
        assert!(next.is_strictly_positive());
        // (I + dt A_h) next = dt * 1
        let residual = next
            .values()
            .iter()
            .zip(next.apply_neg_laplacian().values())
            .map(|(u, au)| (u + disc.dt * au - disc.dt).abs())
            .fold(0.0, f64::max);
        assert!(residual < 1e-15);
    }

    #[test]
    fn discrete_eigenmode_decay() {
        let disc = Discretization::standard();
        let g = disc.grid;
        let s = Symbol::constant(1.0, 0.0).unwrap();
        let u = Field::from_fn(g, |x| 2f64.sqrt() * (std::f64::consts::PI * x).sin());
        let next = step(&u, 0.0, disc, &s, &Field::zeros(g)).unwrap();
        let factor = 1.0 / (1.0 + disc.dt * g.first_discrete_eigenvalue());
        for (a, b) in next.values().iter().zip(u.values()) {
            assert!((a - b * factor).abs() < 1e-14);
        }
    }

    #[test]
    fn step_size_rejection() {
        let disc = Discretization::new(19, 0.2).unwrap();
        let s = Symbol::constant(1.0, 5.0).unwrap();
        let z = Field::zeros(disc.grid);
        assert!(matches!(
            step(&z, 0.0, disc, &s, &z),
            Err(Error::StepSizeRejected { .. })
        ));
        assert!(matches!(
            step(&z, 0.05, disc, &Symbol::constant(1.0, 1.0).unwrap(), &z),
            Err(Error::Misaligned { .. })
        ));
    }

    #[test]
    fn never_ignited_stays_zero() {
        let disc = Discretization::standard();
        let s = Symbol::constant(1.0, 0.5).unwrap();
        let traj = solve(
            &Field::zeros(disc.grid),
            -1.0,
            1.0,
            disc,
            &s,
            &SelectionPolicy::ignite(f64::INFINITY),
        )
        .unwrap();
        assert_eq!(traj.steps(), 2000);
        assert!(traj.states.iter().all(Field::is_zero));
        assert!((traj.end_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_becomes_positive_in_one_step() {
        let disc = Discretization::standard();
        let s = Symbol::quasiperiodic(
            Series::new(1.5, vec![Term::new(0.5, 1.0, 0.0)]),
            Series::new(2.0, vec![Term::new(1.0, 3.0, 0.2)]),
        )
        .unwrap();
        let traj = solve(
            &bump(disc.grid, 0.4, 0.6),
            0.0,
            0.001,
            disc,
            &s,
            &SelectionPolicy::sign(0.0),
        )
        .unwrap();
        assert!(traj.states[1].is_strictly_positive());
    }

    #[test]
    fn audit_flags_corrupted_source() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let s = Symbol::constant(1.0, 0.0).unwrap();
        let mut traj = solve(
            &bump(disc.grid, 0.3, 0.7),
            0.0,
            0.05,
            disc,
            &s,
            &SelectionPolicy::sign(0.0),
        )
        .unwrap();
        assert_eq!(residual_audit(&traj, 5).unwrap().inclusion_residual, 0.0);
        traj.sources[3].values_mut()[0] = 2.0;
        assert_eq!(residual_audit(&traj, 5).unwrap().inclusion_residual, 1.0);
    }

    #[test]
    fn min_principle_and_counterexample() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let s = Symbol::constant(1.0, 0.0).unwrap();
        let traj = solve(
            &bump(disc.grid, 0.2, 0.5),
            0.0,
            0.2,
            disc,
            &s,
            &SelectionPolicy::sign(0.0),
        )
        .unwrap();
        assert!(discrete_min_principle_check(&traj).unwrap());

        let zero = solve(
            &Field::zeros(disc.grid),
            0.0,
            0.1,
            disc,
            &s,
            &SelectionPolicy::sign(0.0),
        )
        .unwrap();
        assert!(discrete_min_principle_check(&zero).unwrap());

        let mut broken = traj.clone();
        broken.states[40].values_mut()[10] = -1e-3;
        assert!(!discrete_min_principle_check(&broken).unwrap());

        let negative = solve(
            &bump(disc.grid, 0.2, 0.5).scaled(-1.0),
            0.0,
            0.1,
            disc,
            &s,
            &SelectionPolicy::sign(-1.0),
        )
        .unwrap();
        assert!(matches!(
            discrete_min_principle_check(&negative),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ignition_comparison() {
        let disc = Discretization::new(99, 1e-3).unwrap();
        let s = Symbol::constant(1.0, 1.0).unwrap();
        let z = Field::zeros(disc.grid);
        let late = solve(&z, 0.0, 1.0, disc, &s, &SelectionPolicy::ignite(0.5)).unwrap();
        let early = solve(&z, 0.0, 1.0, disc, &s, &SelectionPolicy::ignite(0.2)).unwrap();
        assert!(comparison_check(&late, &early).unwrap());
        assert!(early.state_at(0.3).unwrap().is_strictly_positive());
        assert!(late.state_at(0.3).unwrap().is_zero());
        assert!(comparison_check(&late, &late).unwrap());
        assert!(matches!(
            comparison_check(&early, &late),
            Err(Error::Precondition(_))
        ));
        let other = solve(&z, 0.0, 0.5, disc, &s, &SelectionPolicy::ignite(0.2)).unwrap();
        assert!(matches!(
            comparison_check(&other, &early),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn replay_reproduces_solve() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let s = Symbol::quasiperiodic(
            Series::new(1.0, vec![Term::new(0.3, 2.0, 0.0)]),
            Series::constant(0.5),
        )
        .unwrap();
        let traj = solve(
            &bump(disc.grid, 0.1, 0.3),
            0.5,
            0.8,
            disc,
            &s,
            &SelectionPolicy::sign(0.2),
        )
        .unwrap();
        let again = replay(traj.initial(), traj.start_step, disc, &s, &traj.sources).unwrap();
        assert_eq!(again.states, traj.states);
    }

    #[test]
    fn lattice_alignment() {
        assert_eq!(lattice_index(0.7, 1e-3).unwrap(), 700);
        assert_eq!(lattice_index(-2.0, 1e-3).unwrap(), -2000);
        assert!(lattice_index(0.0005, 1e-3).is_err());
        assert!(lattice_index(f64::NAN, 1e-3).is_err());
    }
}
