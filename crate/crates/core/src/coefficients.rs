//! Time-dependent coefficient pairs `σ = (b(·), ω(·))`, their time translates
//! `θ_s σ`, and finite samples of the hull.
//!
//! A symbol is an immutable profile plus a time shift. Shifts that are whole
//! multiples of a solver step are tracked as an integer step count so that
//! lattice evaluations of a translated symbol reproduce the untranslated ones
//! bit for bit: evaluating `θ_{mΔt}σ` at step `k` and `σ` at step `k + m`
//! both compute the profile at `((k + m) as f64) * Δt`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `π²`, the first Dirichlet eigenvalue of `-d²/dx²` on (0,1).
pub const PI_SQUARED: f64 = PI * PI;

/// A single `amplitude · cos(frequency · t + phase)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Term {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }
}

/// `mean + Σ amplitude · cos(frequency · t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub mean: f64,
    pub terms: Vec<Term>,
}

impl Series {
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            terms: Vec::new(),
        }
    }

    pub fn new(mean: f64, terms: Vec<Term>) -> Self {
        Self { mean, terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.mean, |acc, term| {
            acc + term.amplitude * (term.frequency * t + term.phase).cos()
        })
    }

    fn range(&self) -> (f64, f64) {
        let spread: f64 = self.terms.iter().map(|t| t.amplitude.abs()).sum();
        (self.mean - spread, self.mean + spread)
    }
}

/// Uniformly sampled `b` and `ω` with linear interpolation between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub start: f64,
    pub step: f64,
    pub b: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Table {
    pub fn end(&self) -> f64 {
        self.start + self.step * (self.b.len() - 1) as f64
    }

    fn interpolate(values: &[f64], pos: f64) -> f64 {
        let last = values.len() - 1;
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        let frac = pos - i as f64;
        if last == 0 {
            values[0]
        } else {
            values[i] + frac * (values[i + 1] - values[i])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant { b: f64, omega: f64 },
    Quasiperiodic { b: Series, omega: Series },
    SampledTable(Table),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Constant,
    Quasiperiodic,
    SampledTable,
}

/// Declared bounds `0 < b0 ≤ b(t) ≤ b1`, `0 ≤ ω0 ≤ ω(t) ≤ ω1 < π²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub b0: f64,
    pub b1: f64,
    pub omega0: f64,
    pub omega1: f64,
}

impl Bounds {
    /// Decay rate `π² − ω1` of positive-branch differences.
    pub fn delta(&self) -> f64 {
        PI_SQUARED - self.omega1
    }
}

/// Value of the coefficient pair at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub b: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Shift {
    steps: i64,
    step: f64,
    offset: f64,
}

impl Shift {
    fn total(&self) -> f64 {
        if self.steps == 0 {
            self.offset
        } else {
            self.steps as f64 * self.step + self.offset
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    profile: Arc<Profile>,
    bounds: Bounds,
    shift: Shift,
}

impl Symbol {
    pub fn constant(b: f64, omega: f64) -> Result<Self> {
        Self::from_profile(Profile::Constant { b, omega })
    }

    pub fn quasiperiodic(b: Series, omega: Series) -> Result<Self> {
        Self::from_profile(Profile::Quasiperiodic { b, omega })
    }

    pub fn sampled_table(start: f64, step: f64, b: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        Self::from_profile(Profile::SampledTable(Table {
            start,
            step,
            b,
            omega,
        }))
    }

    pub fn from_profile(profile: Profile) -> Result<Self> {
        let bounds = match &profile {
            Profile::Constant { b, omega } => Bounds {
                b0: *b,
                b1: *b,
                omega0: *omega,
                omega1: *omega,
            },
            Profile::Quasiperiodic { b, omega } => {
                let all = b.terms.iter().chain(&omega.terms);
                if let Some(t) = all.clone().find(|t| {
                    !(t.amplitude.is_finite() && t.frequency.is_finite() && t.phase.is_finite())
                }) {
                    return Err(Error::InvalidSymbol(format!("non-finite term {t:?}")));
                }
                let (b0, b1) = b.range();
                let (omega0, omega1) = omega.range();
                Bounds {
                    b0,
                    b1,
                    omega0,
                    omega1,
                }
            }
            Profile::SampledTable(table) => {
                if table.b.is_empty() || table.b.len() != table.omega.len() {
                    return Err(Error::InvalidSymbol(
                        "table needs equally many (and at least one) b and omega samples".into(),
                    ));
                }
                if !(table.step > 0.0 && table.step.is_finite() && table.start.is_finite()) {
                    return Err(Error::InvalidSymbol(format!(
                        "bad table step {}",
                        table.step
                    )));
                }
                let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Bounds {
                    b0: lo(&table.b),
                    b1: hi(&table.b),
                    omega0: lo(&table.omega),
                    omega1: hi(&table.omega),
                }
            }
        };
        check_bounds(&bounds)?;
        Ok(Self {
            profile: Arc::new(profile),
            bounds,
            shift: Shift::default(),
        })
    }

    pub fn kind(&self) -> SymbolKind {
        match &*self.profile {
            Profile::Constant { .. } => SymbolKind::Constant,
            Profile::Quasiperiodic { .. } => SymbolKind::Quasiperiodic,
            Profile::SampledTable(_) => SymbolKind::SampledTable,
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Total time shift `s` such that this symbol is `θ_s` of its profile.
    pub fn shift(&self) -> f64 {
        self.shift.total()
    }

    /// Coefficients at continuous time `t`.
    pub fn eval(&self, t: f64) -> Result<Coefficients> {
        self.eval_profile(t + self.shift.total())
    }

    /// Coefficients at lattice time `k·dt`.
    pub fn eval_step(&self, k: i64, dt: f64) -> Result<Coefficients> {
        let arg = if self.shift.steps == 0 || self.shift.step == dt {
            (k + self.shift.steps) as f64 * dt + self.shift.offset
        } else {
            k as f64 * dt + self.shift.total()
        };
        self.eval_profile(arg)
    }

    fn eval_profile(&self, t: f64) -> Result<Coefficients> {
        match &*self.profile {
            Profile::Constant { b, omega } => Ok(Coefficients {
                b: *b,
                omega: *omega,
            }),
            Profile::Quasiperiodic { b, omega } => Ok(Coefficients {
                b: b.eval(t),
                omega: omega.eval(t),
            }),
            Profile::SampledTable(table) => {
                let end = table.end();
                if !(t >= table.start && t <= end) {
                    return Err(Error::Extrapolation {
                        t,
                        start: table.start,
                        end,
                    });
                }
                let pos = (t - table.start) / table.step;
                let b = Table::interpolate(&table.b, pos).clamp(self.bounds.b0, self.bounds.b1);
                let omega = Table::interpolate(&table.omega, pos)
                    .clamp(self.bounds.omega0, self.bounds.omega1);
                Ok(Coefficients { b, omega })
            }
        }
    }

    /// The time range where evaluation succeeds, in this symbol's own time.
    pub fn valid_range(&self) -> (f64, f64) {
        match &*self.profile {
            Profile::SampledTable(table) => {
                let s = self.shift.total();
                (table.start - s, table.end() - s)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `θ_s σ`: evaluates as `σ(· + s)`.
    pub fn translate(&self, s: f64) -> Symbol {
        let mut out = self.clone();
        out.shift.offset += s;
        out
    }

    /// `θ_{m·dt} σ`, tracked exactly on the `dt` lattice.
    pub fn translate_steps(&self, m: i64, dt: f64) -> Symbol {
        let mut out = self.clone();
        if out.shift.steps == 0 {
            out.shift.step = dt;
        }
        if out.shift.step == dt {
            out.shift.steps += m;
        } else {
            out.shift.offset += m as f64 * dt;
        }
        out
    }

    /// Replaces the profile of a quasiperiodic symbol by one whose phases are
    /// advanced per frequency. Used for torus sampling of the hull.
    fn with_phase_offsets(&self, offset_for: impl Fn(f64) -> f64) -> Symbol {
        let profile = match &*self.profile {
            Profile::Quasiperiodic { b, omega } => {
                let adjust = |s: &Series| Series {
                    mean: s.mean,
                    terms: s
                        .terms
                        .iter()
                        .map(|t| Term {
                            phase: t.phase + offset_for(t.frequency),
                            ..*t
                        })
                        .collect(),
                };
                Profile::Quasiperiodic {
                    b: adjust(b),
                    omega: adjust(omega),
                }
            }
            other => other.clone(),
        };
        Symbol {
            profile: Arc::new(profile),
            bounds: self.bounds,
            shift: self.shift,
        }
    }

    /// Sup-norm distance between two symbols over `samples` uniform points of
    /// `[start, end]`, taking the larger of the `b` and `ω` differences.
    pub fn sup_distance(
        &self,
        other: &Symbol,
        start: f64,
        end: f64,
        samples: usize,
    ) -> Result<f64> {
        let samples = samples.max(2);
        let mut worst: f64 = 0.0;
        for j in 0..samples {
            let t = start + (end - start) * j as f64 / (samples - 1) as f64;
            let a = self.eval(t)?;
            let c = other.eval(t)?;
            worst = worst.max((a.b - c.b).abs()).max((a.omega - c.omega).abs());
        }
        Ok(worst)
    }
}

fn check_bounds(bounds: &Bounds) -> Result<()> {
    let Bounds {
        b0,
        b1,
        omega0,
        omega1,
    } = *bounds;
    if ![b0, b1, omega0, omega1].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidSymbol("non-finite coefficient bounds".into()));
    }
    if b0 <= 0.0 {
        return Err(Error::InvalidSymbol(format!(
            "b must stay positive, lower bound is {b0}"
        )));
    }
    if omega0 < 0.0 {
        return Err(Error::InvalidSymbol(format!(
            "omega must stay nonnegative, lower bound is {omega0}"
        )));
    }
    if !(omega1 < PI_SQUARED) {
        return Err(Error::InvalidSymbol(format!(
            "omega upper bound {omega1} must be < pi^2"
        )));
    }
    Ok(())
}

/// How translates are chosen when sampling the hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HullStrategy {
    /// Shifts `s_j = j · window / n`, `j = 0..n`.
    UniformShifts { window: f64 },
    /// Like `UniformShifts` but each shift is rounded to the `dt` lattice and
    /// applied with [`Symbol::translate_steps`].
    LatticeShifts { window: f64, dt: f64 },
    /// Quasiperiodic symbols only: phase of every distinct frequency advanced
    /// along a Weyl sequence on the torus. Assumes rationally independent
    /// frequencies; other kinds fall back to the base symbol.
    TorusPhases,
}

#[derive(Debug, Clone)]
pub struct HullSample {
    pub base: Symbol,
    /// Time shift (or, for torus sampling, the phase of the first frequency).
    pub shifts: Vec<f64>,
    pub symbols: Vec<Symbol>,
}

impl HullSample {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

pub fn hull_sample(sigma: &Symbol, n: usize, strategy: HullStrategy) -> Result<HullSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("hull sample needs n >= 1".into()));
    }
    let mut shifts = Vec::with_capacity(n);
    let mut symbols = Vec::with_capacity(n);
    match strategy {
        HullStrategy::UniformShifts { window } => {
            for j in 0..n {
                let s = window * j as f64 / n as f64;
                shifts.push(s);
                symbols.push(sigma.translate(s));
            }
        }
        HullStrategy::LatticeShifts { window, dt } => {
            for j in 0..n {
                let m = (window * j as f64 / n as f64 / dt).round() as i64;
                shifts.push(m as f64 * dt);
                symbols.push(sigma.translate_steps(m, dt));
            }
        }
        HullStrategy::TorusPhases => {
            let freqs = distinct_frequencies(sigma);
            const GOLDEN: f64 = 0.618_033_988_749_894_9;
            for j in 0..n {
                let phase_of = |f: f64| {
                    let idx = freqs.iter().position(|&g| g == f).unwrap_or(0);
                    let x = j as f64 * (1.0 + idx as f64 * GOLDEN) / n as f64;
                    2.0 * PI * x.fract()
                };
                shifts.push(phase_of(freqs.first().copied().unwrap_or(0.0)));
                symbols.push(sigma.with_phase_offsets(phase_of));
            }
        }
    }
    Ok(HullSample {
        base: sigma.clone(),
        shifts,
        symbols,
    })
}

fn distinct_frequencies(sigma: &Symbol) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    if let Profile::Quasiperiodic { b, omega } = sigma.profile() {
        for t in b.terms.iter().chain(&omega.terms) {
            if !out.contains(&t.frequency) {
                out.push(t.frequency);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> Symbol {
        Symbol::quasiperiodic(
            Series::new(
                2.0,
                vec![Term::new(0.5, 1.0, 0.0), Term::new(0.2, 2f64.sqrt(), 0.3)],
            ),
            Series::new(1.0, vec![Term::new(0.4, 0.7, 1.1)]),
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = Symbol::constant(1.0, 0.0).unwrap().eval(5.0).unwrap();
        assert_eq!((c.b, c.omega), (1.0, 0.0));

        let s = Symbol::quasiperiodic(
            Series::new(2.0, vec![Term::new(0.5, 1.0, 0.0)]),
            Series::constant(1.0),
        )
        .unwrap();
        let c = s.eval(0.0).unwrap();
        assert_eq!((c.b, c.omega), (2.5, 1.0));

        let t = Symbol::sampled_table(0.0, 1.0, vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.5).unwrap().b, 2.0);
        assert!(matches!(t.eval(1.5), Err(Error::Extrapolation { .. })));
        assert!(matches!(t.eval(-0.1), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn translate_examples() {
        let s = Symbol::quasiperiodic(
            Series::new(2.0, vec![Term::new(1.0, 1.0, 0.0)]),
            Series::constant(0.5),
        )
        .unwrap();
        assert_eq!(s.translate(0.0), s);
        assert_eq!(
            s.translate(PI / 2.0).eval(0.0).unwrap().b,
            2.0 + (PI / 2.0).cos()
        );
        let ab = s.translate(0.3).translate(1.7);
        let direct = s.translate(0.3 + 1.7);
        for t in [-3.0, 0.0, 0.25, 9.5] {
            assert_eq!(ab.eval(t).unwrap(), direct.eval(t).unwrap());
        }
    }

    #[test]
    fn lattice_translation_is_bitwise() {
        let s = qp();
        let dt = 1e-3;
        let shifted = s.translate_steps(2500, dt);
        for k in [-40_i64, 0, 1, 777, 12_345] {
            assert_eq!(
                shifted.eval_step(k, dt).unwrap(),
                s.eval_step(k + 2500, dt).unwrap()
            );
        }
        let twice = s.translate_steps(1000, dt).translate_steps(1500, dt);
        assert_eq!(
            twice.eval_step(3, dt).unwrap(),
            shifted.eval_step(3, dt).unwrap()
        );
    }

    #[test]
    fn table_translation_by_sample_step() {
        let t = Symbol::sampled_table(
            0.0,
            0.5,
            vec![1.0, 2.0, 1.5, 3.0, 2.0],
            vec![0.0, 1.0, 0.5, 0.2, 0.0],
        )
        .unwrap();
        let shifted = t.translate(1.0);
        for x in [0.0, 0.3, 0.75, 1.0] {
            let a = shifted.eval(x).unwrap();
            let b = t.eval(x + 1.0).unwrap();
            assert!((a.b - b.b).abs() < 1e-15 && (a.omega - b.omega).abs() < 1e-15);
        }
        assert_eq!(shifted.valid_range(), (-1.0, 1.0));
    }

    #[test]
    fn bound_violations_rejected() {
        assert!(Symbol::constant(0.0, 0.0).is_err());
        assert!(Symbol::constant(1.0, -0.1).is_err());
        assert!(Symbol::constant(1.0, PI_SQUARED).is_err());
        assert!(Symbol::constant(1.0, PI_SQUARED - 1e-9).is_ok());
        let dips = Symbol::quasiperiodic(
            Series::new(1.0, vec![Term::new(1.0, 1.0, 0.0)]),
            Series::constant(0.0),
        );
        assert!(dips.is_err());
        assert!(Symbol::sampled_table(0.0, 1.0, vec![1.0], vec![]).is_err());
    }

    #[test]
    fn constant_hull_is_a_point() {
        let s = Symbol::constant(1.3, 0.4).unwrap();
        let hull = hull_sample(&s, 5, HullStrategy::UniformShifts { window: 10.0 }).unwrap();
        assert_eq!(hull.len(), 5);
        for h in &hull.symbols {
            assert_eq!(h.eval(0.7).unwrap(), s.eval(0.7).unwrap());
        }
    }

    #[test]
    fn antiphase_half_period() {
        let period = 4.0;
        let s = Symbol::quasiperiodic(
            Series::new(2.0, vec![Term::new(1.0, 2.0 * PI / period, 0.0)]),
            Series::constant(0.0),
        )
        .unwrap();
        let hull = hull_sample(&s, 2, HullStrategy::UniformShifts { window: period }).unwrap();
        assert_eq!(hull.shifts, vec![0.0, period / 2.0]);
        let b0 = hull.symbols[0].eval(0.0).unwrap().b - 2.0;
        let b1 = hull.symbols[1].eval(0.0).unwrap().b - 2.0;
        assert!((b0 + b1).abs() < 1e-12 && (b0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_shift_differences_match_direct_evaluation() {
        let s = qp();
        let window = 2.0 * PI;
        let hull = hull_sample(&s, 4, HullStrategy::UniformShifts { window }).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let lhs =
                    hull.symbols[j].eval(0.0).unwrap().b - hull.symbols[k].eval(0.0).unwrap().b;
                let sj = window * j as f64 / 4.0;
                let sk = window * k as f64 / 4.0;
                let rhs = s.eval(sj).unwrap().b - s.eval(sk).unwrap().b;
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn torus_samples_keep_bounds() {
        let s = qp();
        let hull = hull_sample(&s, 6, HullStrategy::TorusPhases).unwrap();
        for h in &hull.symbols {
            assert_eq!(h.bounds(), s.bounds());
            for j in 0..200 {
                let c = h.eval(j as f64 * 0.37).unwrap();
                let b = s.bounds();
                assert!(c.b >= b.b0 && c.b <= b.b1 && c.omega >= b.omega0 && c.omega <= b.omega1);
            }
        }
        // sample 0 is the base symbol
        assert_eq!(hull.symbols[0].eval(1.0).unwrap(), s.eval(1.0).unwrap());
    }

    #[test]
    fn sup_distance_of_translates() {
        let s = Symbol::quasiperiodic(
            Series::new(2.0, vec![Term::new(1.0, 1.0, 0.0)]),
            Series::constant(0.0),
        )
        .unwrap();
        let d = s
            .sup_distance(&s.translate(PI), 0.0, 2.0 * PI, 1001)
            .unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }
}
