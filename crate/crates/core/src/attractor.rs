//! Equilibria and pullback-attractor structure in the positive cone.
//!
//! The attractor section at time `t` consists of the zero state, the positive
//! nonautonomous equilibrium `ξ_M(t)`, and the states `γ_τ(t)` of the
//! delayed-ignition connections that stay at zero until `τ` and then follow
//! the linear positive-branch dynamics `u_t − u_xx = b(t) + ω(t)u`.
//!
//! `ξ_M(t)` is obtained by pullback: the positive branch is run from the
//! upper sandwich bound `w⁺_{b1,ω1}` at `t − T_pull`. Differences of
//! positive-branch solutions contract at rate `δ = π² − ω1`, so the result is
//! within `e^{−δ·T_pull}·‖w⁺_{b1,ω1}‖` of the limit.

use rayon::prelude::*;

use crate::coefficients::{Bounds, Symbol, PI_SQUARED};
use crate::error::{Error, Result};
use crate::fdsolver::{self, Discretization};
use crate::grid::{Field, Grid};
use crate::selections::SelectionPolicy;
use crate::tridiag;

/// Closed-form positive stationary solution of `−v'' = b + ωv`, `v(0) = v(1) = 0`.
pub fn v1_plus_at(b: f64, omega: f64, x: f64) -> f64 {
    if omega == 0.0 {
        b * x * (1.0 - x) / 2.0
    } else if omega < 1e-4 {
        // first-order expansion in omega; the closed form cancels badly here
        let base = x * (1.0 - x) / 2.0;
        let first = (x.powi(4) - 2.0 * x.powi(3) + x) / 24.0;
        b * (base + omega * first)
    } else {
        let r = omega.sqrt();
        b / omega * (r * x).cos() + b * (1.0 - r.cos()) / (omega * r.sin()) * (r * x).sin()
            - b / omega
    }
}

/// A stationary profile together with its discrete elliptic residual.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumField {
    pub field: Field,
    pub b: f64,
    pub omega: f64,
    /// `max_i |(A_h v)_i − b − ω v_i|`.
    pub residual: f64,
}

pub fn v1_plus(b: f64, omega: f64, grid: Grid) -> Result<EquilibriumField> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "b must be positive, got {b}"
        )));
    }
    if !(0.0..PI_SQUARED).contains(&omega) {
        return Err(Error::InvalidArgument(format!(
            "omega must lie in [0, pi^2), got {omega}"
        )));
    }
    let field = Field::from_fn(grid, |x| v1_plus_at(b, omega, x));
    let residual = field
        .apply_neg_laplacian()
        .values()
        .iter()
        .zip(field.values())
        .map(|(av, v)| (av - b - omega * v).abs())
        .fold(0.0, f64::max);
    Ok(EquilibriumField {
        field,
        b,
        omega,
        residual,
    })
}

/// Stationary state of the discrete positive branch: `(A_h − ω) v = b`.
pub fn discrete_equilibrium(b: f64, omega: f64, grid: Grid) -> Result<Field> {
    let inv = 1.0 / (grid.dx() * grid.dx());
    if !(omega < grid.first_discrete_eigenvalue()) {
        return Err(Error::InvalidArgument(format!(
            "omega {omega} reaches the discrete spectrum"
        )));
    }
    let rhs = vec![b; grid.len()];
    let mut out = vec![0.0; grid.len()];
    let mut scratch = vec![0.0; grid.len()];
    tridiag::solve_symmetric_toeplitz(2.0 * inv - omega, -inv, &rhs, &mut out, &mut scratch);
    Field::from_values(grid, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorParams {
    pub delta: f64,
    pub bounds: Bounds,
}

impl AttractorParams {
    pub fn from_symbol(sigma: &Symbol) -> Self {
        let bounds = sigma.bounds();
        Self {
            delta: bounds.delta(),
            bounds,
        }
    }
}

/// `(w⁺_{b0,ω0}, w⁺_{b1,ω1})`.
pub fn sandwich_bounds(sigma: &Symbol, grid: Grid) -> Result<(EquilibriumField, EquilibriumField)> {
    let b = sigma.bounds();
    Ok((
        v1_plus(b.b0, b.omega0, grid)?,
        v1_plus(b.b1, b.omega1, grid)?,
    ))
}

/// `ξ_M(t)` by a single pullback solve of length `t_pull` from the upper bound.
pub fn xi_m(t: f64, sigma: &Symbol, t_pull: f64, disc: Discretization) -> Result<Field> {
    let (_, upper) = sandwich_bounds(sigma, disc.grid)?;
    pullback_from(&upper.field, t, sigma, t_pull, disc)
}

/// Brackets `ξ_M(t)` between pullback solves from both sandwich bounds.
pub fn xi_m_two_sided(
    t: f64,
    sigma: &Symbol,
    t_pull: f64,
    disc: Discretization,
) -> Result<(Field, Field)> {
    let (lower, upper) = sandwich_bounds(sigma, disc.grid)?;
    Ok((
        pullback_from(&lower.field, t, sigma, t_pull, disc)?,
        pullback_from(&upper.field, t, sigma, t_pull, disc)?,
    ))
}

/// Positive-branch evolution of `start` from `t − t_pull` to `t`.
pub fn pullback_from(
    start: &Field,
    t: f64,
    sigma: &Symbol,
    t_pull: f64,
    disc: Discretization,
) -> Result<Field> {
    if !(t_pull > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pullback horizon must be positive, got {t_pull}"
        )));
    }
    let k_t = disc.step_index(t)?;
    let m = disc.step_index(t_pull)?;
    fdsolver::evolve(
        start,
        disc.time(k_t - m),
        disc.time(k_t),
        disc,
        sigma,
        &SelectionPolicy::positive_branch(),
    )
}

/// State at `t` of the connection that leaves zero at `tau_ignite`.
pub fn connection(tau_ignite: f64, t: f64, sigma: &Symbol, disc: Discretization) -> Result<Field> {
    let zero = Field::zeros(disc.grid);
    if t <= tau_ignite {
        return Ok(zero);
    }
    fdsolver::evolve(
        &zero,
        tau_ignite,
        t,
        disc,
        sigma,
        &SelectionPolicy::ignite(tau_ignite),
    )
}

/// Attractor section `{0} ∪ {ξ_M(t)} ∪ {γ_τ(t)}` for sampled ignition times.
#[derive(Debug, Clone)]
pub struct AttractorSection {
    pub t: f64,
    pub zero: Field,
    pub xi_m: Field,
    /// `(τ_j, γ_{τ_j}(t))`, sorted by ascending `τ_j`.
    pub connections: Vec<(f64, Field)>,
}

impl AttractorSection {
    /// All elements of the section in a fixed order: zero, `ξ_M`, connections.
    pub fn elements(&self) -> impl Iterator<Item = &Field> {
        std::iter::once(&self.zero)
            .chain(std::iter::once(&self.xi_m))
            .chain(self.connections.iter().map(|(_, f)| f))
    }

    /// `0 ≤ γ_τ ≤ ξ_M + tol` for every sample, and `γ_τ ≥ γ_τ'` for `τ < τ'`.
    pub fn satisfies_ordering(&self, tol: f64) -> bool {
        let bounded = self
            .connections
            .iter()
            .all(|(_, g)| g.is_nonnegative() && g.le_with_tol(&self.xi_m, tol));
        let monotone = self
            .connections
            .windows(2)
            .all(|w| w[1].1.le_with_tol(&w[0].1, tol));
        bounded && monotone
    }

    /// Smallest L² distance from `u` to any sampled element.
    pub fn distance(&self, u: &Field) -> f64 {
        self.elements()
            .map(|e| e.l2_distance(u))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn section(
    t: f64,
    sigma: &Symbol,
    tau_samples: &[f64],
    t_pull: f64,
    disc: Discretization,
) -> Result<AttractorSection> {
    if let Some(&bad) = tau_samples.iter().find(|&&tau| tau > t) {
        return Err(Error::InvalidArgument(format!(
            "ignition time {bad} lies after the section time {t}"
        )));
    }
    let xi = xi_m(t, sigma, t_pull, disc)?;
    let mut taus = tau_samples.to_vec();
    taus.sort_by(f64::total_cmp);
    let connections = taus
        .par_iter()
        .map(|&tau| connection(tau, t, sigma, disc).map(|g| (tau, g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttractorSection {
        t,
        zero: Field::zeros(disc.grid),
        xi_m: xi,
        connections,
    })
}

/// Which part of the section a state is closest to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Zero,
    Equilibrium,
    Connection { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestElement {
    pub class: Classification,
    pub distance: f64,
}

/// Sampling of the connection curve `τ ↦ γ_τ(t)` by age `t − τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeSearch {
    /// Spacing of the initial age grid (rounded to the time lattice).
    pub coarse_step: f64,
    /// Largest age sampled; beyond it connections are indistinguishable from `ξ_M`.
    pub max_age: f64,
    /// Refinement stops once the best distance changes by less than this fraction.
    pub rel_change: f64,
}

impl Default for AgeSearch {
    fn default() -> Self {
        Self {
            coarse_step: 0.05,
            max_age: 4.0,
            rel_change: 0.01,
        }
    }
}

/// Connection states `γ_{t−a}(t)` on the coarse age grid of an [`AgeSearch`],
/// computed once and shared by every nearest-element query at `t`.
#[derive(Debug, Clone)]
pub struct ConnectionCurve {
    t: f64,
    sigma: Symbol,
    disc: Discretization,
    search: AgeSearch,
    coarse: usize,
    max_steps: usize,
    /// `(age in steps, γ)` on the coarse grid.
    samples: Vec<(usize, Field)>,
}

impl ConnectionCurve {
    pub fn new(t: f64, sigma: &Symbol, disc: Discretization, search: AgeSearch) -> Result<Self> {
        disc.step_index(t)?;
        let coarse = ((search.coarse_step / disc.dt).round() as usize).max(1);
        let max_steps = (search.max_age / disc.dt).round() as usize;
        let ages: Vec<usize> = (1..)
            .map(|j| j * coarse)
            .take_while(|&a| a <= max_steps)
            .collect();
        let mut curve = Self {
            t,
            sigma: sigma.clone(),
            disc,
            search,
            coarse,
            max_steps,
            samples: Vec::new(),
        };
        curve.samples = ages
            .par_iter()
            .map(|&a| curve.at(a).map(|g| (a, g)))
            .collect::<Result<_>>()?;
        Ok(curve)
    }

    fn at(&self, age_steps: usize) -> Result<Field> {
        let k_t = self.disc.step_index(self.t)?;
        connection(
            self.disc.time(k_t - age_steps as i64),
            self.t,
            &self.sigma,
            self.disc,
        )
    }

    /// Closest connection to `u` as `(ignition time, distance)`, refining the
    /// coarse optimum by bisection until the distance stabilizes.
    pub fn closest(&self, u: &Field) -> Result<Option<(f64, f64)>> {
        let Some(mut best) = self
            .samples
            .iter()
            .map(|(a, g)| (*a, g.l2_distance(u)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            return Ok(None);
        };
        let mut h = self.coarse;
        while h > 1 {
            h /= 2;
            let before = best.1;
            for cand in [best.0.saturating_sub(h), best.0 + h] {
                if cand >= 1 && cand <= self.max_steps {
                    let d = self.at(cand)?.l2_distance(u);
                    if d < best.1 {
                        best = (cand, d);
                    }
                }
            }
            if before > 0.0 && (before - best.1) / before < self.search.rel_change {
                break;
            }
        }
        let k_t = self.disc.step_index(self.t)?;
        Ok(Some((self.disc.time(k_t - best.0 as i64), best.1)))
    }

    /// Nearest of zero, `ξ_M(t)` and the connections.
    pub fn nearest(&self, u: &Field, xi: &Field) -> Result<NearestElement> {
        let mut out = NearestElement {
            class: Classification::Zero,
            distance: u.l2_norm(),
        };
        let d_xi = u.l2_distance(xi);
        if d_xi < out.distance {
            out = NearestElement {
                class: Classification::Equilibrium,
                distance: d_xi,
            };
        }
        if let Some((tau, d)) = self.closest(u)? {
            if d < out.distance {
                out = NearestElement {
                    class: Classification::Connection { tau },
                    distance: d,
                };
            }
        }
        Ok(out)
    }
}

/// Nearest element of the section at `t` to `u`, refining the ignition-time
/// grid around the best connection until the distance stabilizes.
pub fn nearest_element(
    u: &Field,
    t: f64,
    sigma: &Symbol,
    xi: &Field,
    disc: Discretization,
    search: AgeSearch,
) -> Result<NearestElement> {
    ConnectionCurve::new(t, sigma, disc, search)?.nearest(u, xi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackRow {
    pub s: f64,
    /// `max_{u₀ ∈ B} dist(U(t, s, u₀), section(t))`.
    pub max_distance: f64,
    pub nearest: Vec<NearestElement>,
}

/// Evolves each nonnegative state of `data` from every start time in
/// `starts` (strictly decreasing, all before `t`) with `SignWithValue(0)` and
/// measures its distance to the attractor section at `t`.
pub fn pullback_attraction_test(
    data: &[Field],
    t: f64,
    starts: &[f64],
    sigma: &Symbol,
    t_pull: f64,
    disc: Discretization,
    search: AgeSearch,
) -> Result<Vec<PullbackRow>> {
    if starts.windows(2).any(|w| w[1] >= w[0]) || starts.iter().any(|&s| s >= t) {
        return Err(Error::Precondition(
            "start times must be strictly decreasing and before t".into(),
        ));
    }
    if data.iter().any(|u| !u.is_nonnegative()) {
        return Err(Error::Precondition(
            "pullback data must be nonnegative".into(),
        ));
    }
    let xi = xi_m(t, sigma, t_pull, disc)?;
    let curve = ConnectionCurve::new(t, sigma, disc, search)?;
    let policy = SelectionPolicy::sign(0.0);
    starts
        .iter()
        .map(|&s| {
            let nearest = data
                .par_iter()
                .map(|u0| {
                    let u = fdsolver::evolve(u0, s, t, disc, sigma, &policy)?;
                    curve.nearest(&u, &xi)
                })
                .collect::<Result<Vec<_>>>()?;
            let max_distance = nearest.iter().map(|n| n.distance).fold(0.0, f64::max);
            Ok(PullbackRow {
                s,
                max_distance,
                nearest,
            })
        })
        .collect()
}

/// `E_{b,ω}(u) = ½‖u_x‖² − b‖u‖₁ − (ω/2)‖u‖²`, discrete quadrature.
pub fn energy(u: &Field, b: f64, omega: f64) -> f64 {
    0.5 * u.h1_seminorm().powi(2) - b * u.l1_norm() - 0.5 * omega * u.l2_norm().powi(2)
}

/// Exponential rate `r` of a least-squares fit `gap ≈ C e^{−r t}`.
pub fn exponential_rate(samples: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, g)| *g > 0.0)
        .map(|&(t, g)| (t, g.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two positive gaps".into(),
        ));
    }
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    Ok(-num / den)
}
