//! Cocycle view of the nonautonomous flow.
//!
//! `φ(t, σ, u₀)` is the evolution over `[0, t]` driven by the symbol `σ`, and
//! the skew-product semiflow is `Π_t(u, σ) = (φ(t, σ, u), θ_t σ)`. Because
//! translated symbols evaluate their coefficients at identical lattice
//! arguments, the cocycle and translation identities hold bit for bit.

use rayon::prelude::*;

use crate::attractor::{self, AttractorSection};
use crate::coefficients::{HullSample, Symbol};
use crate::error::{Error, Result};
use crate::fdsolver::{self, Discretization};
use crate::grid::Field;
use crate::selections::SelectionPolicy;

/// A point `(u, σ)` of the product space `H × Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleState {
    pub field: Field,
    pub symbol: Symbol,
}

fn steps_of(duration: f64, disc: &Discretization) -> Result<usize> {
    let k = disc.step_index(duration)?;
    usize::try_from(k).map_err(|_| Error::InvalidArgument(format!("negative duration {duration}")))
}

/// `φ(t, σ, u₀)`.
pub fn cocycle(
    t: f64,
    sigma: &Symbol,
    u0: &Field,
    policy: &SelectionPolicy,
    disc: Discretization,
) -> Result<Field> {
    let n = steps_of(t, &disc)?;
    fdsolver::evolve_with(u0, 0, n, disc, sigma, policy, |_, _, _| {})
}

/// `Π_t(u, σ) = (φ(t, σ, u), θ_t σ)`; the policy clock is shifted along with the symbol.
pub fn skew_product(
    t: f64,
    state: &CocycleState,
    policy: &SelectionPolicy,
    disc: Discretization,
) -> Result<(CocycleState, SelectionPolicy)> {
    let n = steps_of(t, &disc)?;
    let field = fdsolver::evolve_with(
        &state.field,
        0,
        n,
        disc,
        &state.symbol,
        policy,
        |_, _, _| {},
    )?;
    let symbol = state.symbol.translate_steps(n as i64, disc.dt);
    Ok((
        CocycleState { field, symbol },
        policy.translated(disc.time(n as i64)),
    ))
}

/// L² deviation between `φ(t + s, σ, u₀)` and `φ(t, θ_s σ, φ(s, σ, u₀))`.
pub fn cocycle_check(
    t: f64,
    s: f64,
    sigma: &Symbol,
    u0: &Field,
    policy: &SelectionPolicy,
    disc: Discretization,
) -> Result<f64> {
    let (nt, ns) = (steps_of(t, &disc)?, steps_of(s, &disc)?);
    let one_shot = fdsolver::evolve_with(u0, 0, nt + ns, disc, sigma, policy, |_, _, _| {})?;
    let (mid, shifted_policy) = skew_product(
        s,
        &CocycleState {
            field: u0.clone(),
            symbol: sigma.clone(),
        },
        policy,
        disc,
    )?;
    let composed = fdsolver::evolve_with(
        &mid.field,
        0,
        nt,
        disc,
        &mid.symbol,
        &shifted_policy,
        |_, _, _| {},
    )?;
    Ok(one_shot.l2_distance(&composed))
}

/// L² deviation between `U_σ(t + h, τ + h, u₀)` and `U_{θ_h σ}(t, τ, u₀)`.
pub fn translation_identity_check(
    sigma: &Symbol,
    h: f64,
    tau: f64,
    t: f64,
    u0: &Field,
    policy: &SelectionPolicy,
    disc: Discretization,
) -> Result<f64> {
    if !(tau <= t) {
        return Err(Error::InvalidInterval { start: tau, end: t });
    }
    let k0 = disc.step_index(tau)?;
    let m = disc.step_index(h)?;
    let n = steps_of(disc.time(disc.step_index(t)? - k0), &disc)?;
    let original = fdsolver::evolve_with(u0, k0 + m, n, disc, sigma, policy, |_, _, _| {})?;
    let shifted_sigma = sigma.translate_steps(m, disc.dt);
    let shifted_policy = policy.translated(disc.time(m));
    let shifted = fdsolver::evolve_with(
        u0,
        k0,
        n,
        disc,
        &shifted_sigma,
        &shifted_policy,
        |_, _, _| {},
    )?;
    Ok(original.l2_distance(&shifted))
}

/// Union over hull samples of the attractor fibers `𝒜(σ_j) = 𝒜_{σ_j}(t)`.
#[derive(Debug, Clone)]
pub struct UniformAttractor {
    pub t: f64,
    pub fibers: Vec<(Symbol, AttractorSection)>,
    /// Largest L² norm of any sampled element.
    pub radius: f64,
    /// Pointwise maximum of `ξ_{M,σ_j}(t)`; every element lies in `[0, envelope]`.
    pub envelope: Field,
}

impl UniformAttractor {
    pub fn distance(&self, u: &Field) -> f64 {
        self.fibers
            .iter()
            .map(|(_, sec)| sec.distance(u))
            .fold(f64::INFINITY, f64::min)
    }

    /// The skew-product attractor sample `{(u, σ_j) : u ∈ 𝒜(σ_j)}`.
    pub fn skew_product_samples(&self) -> Vec<CocycleState> {
        self.fibers
            .iter()
            .flat_map(|(sigma, sec)| {
                sec.elements().map(move |u| CocycleState {
                    field: u.clone(),
                    symbol: sigma.clone(),
                })
            })
            .collect()
    }
}

/// Projection of skew-product states onto the field component.
pub fn project(states: &[CocycleState]) -> Vec<Field> {
    states.iter().map(|s| s.field.clone()).collect()
}

/// Builds the fibers at time `t` for every hull sample, with connections of
/// the given ages `t − τ`.
pub fn uniform_attractor_assemble(
    hull: &HullSample,
    t: f64,
    ages: &[f64],
    t_pull: f64,
    disc: Discretization,
) -> Result<UniformAttractor> {
    if hull.is_empty() {
        return Err(Error::InvalidArgument("empty hull sample".into()));
    }
    let taus: Vec<f64> = ages.iter().map(|a| t - a).collect();
    let fibers = hull
        .symbols
        .par_iter()
        .map(|sigma| {
            attractor::section(t, sigma, &taus, t_pull, disc).map(|sec| (sigma.clone(), sec))
        })
        .collect::<Result<Vec<_>>>()?;
    let radius = fibers
        .iter()
        .flat_map(|(_, sec)| sec.elements().map(Field::l2_norm))
        .fold(0.0, f64::max);
    let mut envelope = Field::zeros(disc.grid);
    for (_, sec) in &fibers {
        for (e, v) in envelope.values_mut().iter_mut().zip(sec.xi_m.values()) {
            *e = e.max(*v);
        }
    }
    Ok(UniformAttractor {
        t,
        fibers,
        radius,
        envelope,
    })
}

/// `sup_j sup_{u₀ ∈ B} dist(φ(T, σ_j, u₀), 𝒜)` for each horizon `T`.
///
/// Meaningful when every `θ_T σ_j` is (up to round-off) again a sampled
/// symbol, e.g. a periodic symbol sampled at lattice phases and horizons that
/// are multiples of the phase spacing.
pub fn uniform_attraction_probe(
    assembly: &UniformAttractor,
    data: &[Field],
    horizons: &[f64],
    disc: Discretization,
) -> Result<Vec<f64>> {
    let policy = SelectionPolicy::sign(0.0);
    horizons
        .iter()
        .map(|&horizon| {
            let per_fiber = assembly
                .fibers
                .par_iter()
                .map(|(sigma, _)| {
                    let mut worst: f64 = 0.0;
                    for u0 in data {
                        let u = cocycle(
                            horizon,
                            &sigma.translate_steps(disc.step_index(assembly.t)?, disc.dt),
                            u0,
                            &policy,
                            disc,
                        )?;
                        worst = worst.max(assembly.distance(&u));
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(per_fiber.into_iter().fold(0.0, f64::max))
        })
        .collect()
}

/// Evolves every element of the fiber at `section.t` for `duration` and
/// returns the largest distance to the fiber recomputed at `section.t + duration`
/// (connections keep their ignition times, so ages grow by `duration`).
pub fn invariance_probe(
    sigma: &Symbol,
    section: &AttractorSection,
    duration: f64,
    t_pull: f64,
    disc: Discretization,
) -> Result<f64> {
    let t1 = section.t + duration;
    let taus: Vec<f64> = section.connections.iter().map(|(tau, _)| *tau).collect();
    let target = attractor::section(t1, sigma, &taus, t_pull, disc)?;
    let mut worst: f64 = 0.0;
    let evolve = |u: &Field, policy: SelectionPolicy| {
        fdsolver::evolve(u, section.t, t1, disc, sigma, &policy)
    };
    worst = worst.max(target.distance(&evolve(&section.zero, SelectionPolicy::sign(0.0))?));
    worst = worst.max(target.distance(&evolve(&section.xi_m, SelectionPolicy::positive_branch())?));
    for (tau, g) in &section.connections {
        worst = worst.max(target.distance(&evolve(g, SelectionPolicy::ignite(*tau))?));
    }
    Ok(worst)
}

/// Morse sets `M₁ = {(ξ_{M,σ}(0), σ)}` and `M₂ = {(0, σ)}` over hull samples.
#[derive(Debug, Clone)]
pub struct MorseDecomposition {
    pub m1: Vec<CocycleState>,
    pub m2: Vec<CocycleState>,
    /// `min_σ ‖ξ_{M,σ}(0)‖`.
    pub separation_margin: f64,
    /// `‖w⁺_{b0,ω0}‖`, the guaranteed lower bound of the margin.
    pub lower_bound_norm: f64,
}

impl MorseDecomposition {
    pub fn is_disjoint(&self, tol: f64) -> bool {
        self.separation_margin > 0.0 && self.separation_margin >= self.lower_bound_norm - tol
    }
}

pub fn morse_decomposition(
    hull: &HullSample,
    t_pull: f64,
    disc: Discretization,
) -> Result<MorseDecomposition> {
    let m1 = hull
        .symbols
        .par_iter()
        .map(|sigma| {
            attractor::xi_m(0.0, sigma, t_pull, disc).map(|field| CocycleState {
                field,
                symbol: sigma.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m2 = hull
        .symbols
        .iter()
        .map(|sigma| CocycleState {
            field: Field::zeros(disc.grid),
            symbol: sigma.clone(),
        })
        .collect();
    let separation_margin = m1
        .iter()
        .map(|s| s.field.l2_norm())
        .fold(f64::INFINITY, f64::min);
    let (lower, _) = attractor::sandwich_bounds(&hull.base, disc.grid)?;
    Ok(MorseDecomposition {
        m1,
        m2,
        separation_margin,
        lower_bound_norm: lower.field.l2_norm(),
    })
}

/// Classification of one sampled bounded trajectory of `Π⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryClass {
    /// Stays within tolerance of `M₂ = {0}` on the whole window.
    InM2,
    /// Stays within tolerance of `M₁ = {ξ_M}` on the whole window.
    InM1,
    /// Leaves `M₂` backward and reaches `M₁` forward.
    Connection { backward: f64, forward: f64 },
    /// Anything else, including the reverse direction.
    Counterexample { backward: f64, forward: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEntry {
    pub fiber: usize,
    /// `None` for the zero and `ξ_M` trajectories.
    pub ignition: Option<f64>,
    pub class: TrajectoryClass,
    /// Certified bound `e^{−δ(T_fwd − τ)}·‖ξ_M(T_fwd)‖·1.1 + 1e-9` for connections.
    pub forward_bound: f64,
}

#[derive(Debug, Clone)]
pub struct GradientReport {
    pub entries: Vec<GradientEntry>,
}

impl GradientReport {
    pub fn counterexamples(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.class, TrajectoryClass::Counterexample { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSettings {
    pub t_back: f64,
    pub t_fwd: f64,
    pub t_pull: f64,
    pub tol_backward: f64,
    pub tol_forward: f64,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            t_back: 8.0,
            t_fwd: 8.0,
            t_pull: 8.0,
            tol_backward: 1e-10,
            tol_forward: 1e-3,
        }
    }
}

/// Checks on the window `[−t_back, t_fwd]` that, for every hull sample, the
/// zero trajectory sits in `M₂`, the `ξ_M` trajectory in `M₁`, and every
/// connection ignited at one of `ignitions` runs from `M₂` to `M₁`.
pub fn gradient_structure_check(
    hull: &HullSample,
    ignitions: &[f64],
    settings: GradientSettings,
    disc: Discretization,
) -> Result<GradientReport> {
    let GradientSettings {
        t_back,
        t_fwd,
        t_pull,
        tol_backward,
        tol_forward,
    } = settings;
    let start = -t_back;
    let per_fiber = hull
        .symbols
        .par_iter()
        .enumerate()
        .map(|(j, sigma)| -> Result<Vec<GradientEntry>> {
            let delta = sigma.bounds().delta();
            let mut entries = Vec::new();

            let zero_traj = fdsolver::solve(
                &Field::zeros(disc.grid),
                start,
                t_fwd,
                disc,
                sigma,
                &SelectionPolicy::sign(0.0),
            )?;
            let zero_dev = zero_traj
                .states
                .iter()
                .map(Field::l2_norm)
                .fold(0.0, f64::max);
            entries.push(GradientEntry {
                fiber: j,
                ignition: None,
                class: if zero_dev <= tol_backward {
                    TrajectoryClass::InM2
                } else {
                    TrajectoryClass::Counterexample {
                        backward: zero_dev,
                        forward: zero_dev,
                    }
                },
                forward_bound: 0.0,
            });

            let xi_start = attractor::xi_m(start, sigma, t_pull, disc)?;
            let xi_traj = fdsolver::solve(
                &xi_start,
                start,
                t_fwd,
                disc,
                sigma,
                &SelectionPolicy::positive_branch(),
            )?;
            let xi_end = attractor::xi_m(t_fwd, sigma, t_pull, disc)?;
            let xi_dev = xi_traj.last().l2_distance(&xi_end);
            entries.push(GradientEntry {
                fiber: j,
                ignition: None,
                class: if xi_dev <= tol_forward {
                    TrajectoryClass::InM1
                } else {
                    TrajectoryClass::Counterexample {
                        backward: xi_dev,
                        forward: xi_dev,
                    }
                },
                forward_bound: 0.0,
            });

            let xi_start_norm = xi_start.l2_norm();
            for &tau in ignitions {
                if !(tau >= start && tau < t_fwd) {
                    return Err(Error::InvalidArgument(format!(
                        "ignition {tau} outside the window"
                    )));
                }
                let gamma_start = attractor::connection(tau, start, sigma, disc)?;
                let gamma_end = attractor::connection(tau, t_fwd, sigma, disc)?;
                let backward = gamma_start.l2_norm();
                let forward = gamma_end.l2_distance(&xi_end);
                let forward_bound = (-delta * (t_fwd - tau)).exp() * xi_end.l2_norm() * 1.1 + 1e-9;
                // reverse direction: starting near ξ_M instead of near zero
                let reversed = gamma_start.l2_distance(&xi_start) < 0.5 * xi_start_norm;
                let ok = backward <= tol_backward
                    && forward <= forward_bound
                    && forward <= tol_forward
                    && !reversed;
                entries.push(GradientEntry {
                    fiber: j,
                    ignition: Some(tau),
                    class: if ok {
                        TrajectoryClass::Connection { backward, forward }
                    } else {
                        TrajectoryClass::Counterexample { backward, forward }
                    },
                    forward_bound,
                });
            }
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientReport {
        entries: per_fiber.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{hull_sample, HullStrategy, Series, Term};
    use std::f64::consts::PI;

    fn periodic() -> Symbol {
        Symbol::quasiperiodic(
            Series::new(1.5, vec![Term::new(0.5, PI / 2.0, 0.0)]),
            Series::new(1.0, vec![Term::new(0.5, PI / 2.0, 0.3)]),
        )
        .unwrap()
    }

    fn bump(disc: &Discretization) -> Field {
        Field::from_fn(disc.grid, |x| (1.0 - (x - 0.5).abs() * 10.0).max(0.0))
    }

    #[test]
    fn cocycle_is_bitwise() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let u0 = bump(&disc);
        for sigma in [Symbol::constant(1.0, 2.0).unwrap(), periodic()] {
            assert_eq!(
                cocycle_check(0.3, 0.0, &sigma, &u0, &SelectionPolicy::sign(0.0), disc).unwrap(),
                0.0
            );
            assert_eq!(
                cocycle_check(0.25, 0.4, &sigma, &u0, &SelectionPolicy::sign(0.5), disc).unwrap(),
                0.0
            );
            let z = Field::zeros(disc.grid);
            assert_eq!(
                cocycle_check(0.25, 0.4, &sigma, &z, &SelectionPolicy::ignite(0.55), disc).unwrap(),
                0.0
            );
        }
        assert!(cocycle_check(
            0.3,
            0.0005,
            &periodic(),
            &u0,
            &SelectionPolicy::sign(0.0),
            disc
        )
        .is_err());
    }

    #[test]
    fn translation_identity_is_bitwise() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let u0 = bump(&disc);
        assert_eq!(
            translation_identity_check(
                &periodic(),
                0.0,
                -0.2,
                0.3,
                &u0,
                &SelectionPolicy::sign(0.0),
                disc
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            translation_identity_check(
                &Symbol::constant(1.0, 0.0).unwrap(),
                1.0,
                0.0,
                0.5,
                &u0,
                &SelectionPolicy::sign(0.0),
                disc
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            translation_identity_check(
                &periodic(),
                2.5,
                -1.0,
                0.2,
                &u0,
                &SelectionPolicy::sign(0.0),
                disc
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_hull_assembly_is_one_section() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let sigma = Symbol::constant(1.0, 0.0).unwrap();
        let hull = hull_sample(&sigma, 1, HullStrategy::UniformShifts { window: 1.0 }).unwrap();
        let assembly = uniform_attractor_assemble(&hull, 0.0, &[0.1, 0.5], 3.0, disc).unwrap();
        let single = attractor::section(0.0, &sigma, &[-0.1, -0.5], 3.0, disc).unwrap();
        assert_eq!(assembly.fibers.len(), 1);
        let fiber = &assembly.fibers[0].1;
        assert_eq!(fiber.xi_m, single.xi_m);
        for (a, b) in fiber.connections.iter().zip(&single.connections) {
            assert_eq!(a, b);
        }
        let samples = assembly.skew_product_samples();
        assert_eq!(
            project(&samples),
            fiber.elements().cloned().collect::<Vec<_>>()
        );
    }

    #[test]
    fn morse_sets_are_separated() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let hull = hull_sample(
            &periodic(),
            4,
            HullStrategy::LatticeShifts {
                window: 4.0,
                dt: disc.dt,
            },
        )
        .unwrap();
        let morse = morse_decomposition(&hull, 6.0, disc).unwrap();
        assert!(morse.is_disjoint(1e-9));
        assert_eq!(morse.m2.len(), 4);
    }

    #[test]
    fn gradient_examples() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let sigma = Symbol::constant(1.0, 0.0).unwrap();
        let hull = hull_sample(&sigma, 1, HullStrategy::UniformShifts { window: 1.0 }).unwrap();
        let settings = GradientSettings {
            t_back: 2.0,
            t_fwd: 8.0,
            t_pull: 4.0,
            ..Default::default()
        };
        let report = gradient_structure_check(&hull, &[0.0], settings, disc).unwrap();
        assert_eq!(report.counterexamples(), 0);
        assert_eq!(report.entries[0].class, TrajectoryClass::InM2);
        assert_eq!(report.entries[1].class, TrajectoryClass::InM1);
        match report.entries[2].class {
            TrajectoryClass::Connection { backward, forward } => {
                assert_eq!(backward, 0.0);
                assert!(forward < 1e-3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariance_of_fiber() {
        let disc = Discretization::new(49, 1e-3).unwrap();
        let sigma = periodic();
        let sec = attractor::section(0.0, &sigma, &[-1.0, -0.3, 0.0], 6.0, disc).unwrap();
        let gap = invariance_probe(&sigma, &sec, 0.5, 6.0, disc).unwrap();
        assert!(gap < 1e-12, "gap {gap}");
    }
}
