//! Sine-series mild solutions of the linear problem
//! `u_t − u_xx = ω(t)u + f(t,x)` with zero Dirichlet data.
//!
//! Fields are expanded in the orthonormal basis `e_k(x) = √2 sin(kπx)` with
//! eigenvalues `λ_k = k²π²`. Because `ω` is constant in space every mode
//! evolves independently, `a_k' = −(λ_k − ω(t)) a_k + f_k(t)`, and is advanced
//! by exponential Euler with the coefficients frozen at each substep
//! midpoint. For constant symbols one substep is exact.

use std::f64::consts::{PI, SQRT_2};

use crate::attractor::v1_plus_at;
use crate::coefficients::Symbol;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Coefficients `a_1..a_K` of a field in the basis `e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    pub coeffs: Vec<f64>,
}

impl SpectralCoeffs {
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    /// `λ_k = k²π²` for the one-based mode index `k`.
    pub fn eigenvalue(k: usize) -> f64 {
        let kp = k as f64 * PI;
        kp * kp
    }

    /// `Σ a_k²`, equal to the squared L² norm of the represented field.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }
}

/// `∫₀¹ √2 sin(kπx) dx`: `2√2/(kπ)` for odd `k`, zero for even `k`.
pub fn constant_coefficient(k: usize) -> f64 {
    if k % 2 == 1 {
        2.0 * SQRT_2 / (k as f64 * PI)
    } else {
        0.0
    }
}

/// Tabulated `e_k(x_i)` for a grid and mode count.
#[derive(Debug, Clone)]
pub struct SineBasis {
    grid: Grid,
    modes: usize,
    // row-major: table[(k-1) * n + i]
    table: Vec<f64>,
}

impl SineBasis {
    pub fn new(grid: Grid, modes: usize) -> Result<Self> {
        let n = grid.len();
        if modes == 0 || modes > n {
            return Err(Error::TooManyModes { modes, nodes: n });
        }
        let mut table = Vec::with_capacity(modes * n);
        for k in 1..=modes {
            for i in 0..n {
                // exact node index keeps sin(kπ i/(n+1)) symmetric
                let arg = PI * ((k * (i + 1)) % (2 * (n + 1))) as f64 / (n + 1) as f64;
                table.push(SQRT_2 * arg.sin());
            }
        }
        Ok(Self { grid, modes, table })
    }

    /// Full basis, `K = N`: forward and inverse transforms are exact inverses.
    pub fn full(grid: Grid) -> Self {
        Self::new(grid, grid.len()).expect("full basis is always valid")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.table[(k - 1) * n..k * n]
    }

    /// Discrete inner products `a_k = Δx Σ_i u_i e_k(x_i)`.
    pub fn forward(&self, u: &Field) -> Result<SpectralCoeffs> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                found: u.grid().len(),
            });
        }
        let dx = self.grid.dx();
        let coeffs = (1..=self.modes)
            .map(|k| {
                dx * self
                    .row(k)
                    .iter()
                    .zip(u.values())
                    .map(|(e, v)| e * v)
                    .sum::<f64>()
            })
            .collect();
        Ok(SpectralCoeffs { coeffs })
    }

    pub fn inverse(&self, c: &SpectralCoeffs) -> Result<Field> {
        if c.modes() > self.modes {
            return Err(Error::TooManyModes {
                modes: c.modes(),
                nodes: self.modes,
            });
        }
        let mut values = vec![0.0; self.grid.len()];
        for (k, &a) in c.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (v, e) in values.iter_mut().zip(self.row(k + 1)) {
                *v += a * e;
            }
        }
        Field::from_values(self.grid, values)
    }
}

pub fn sine_transform(u: &Field, modes: usize) -> Result<SpectralCoeffs> {
    SineBasis::new(u.grid(), modes)?.forward(u)
}

pub fn inverse_transform(c: &SpectralCoeffs, grid: Grid) -> Result<Field> {
    SineBasis::new(grid, c.modes())?.inverse(c)
}

/// Forcing of the linear problem.
pub enum Source<'a> {
    None,
    /// `f = b(t)·1`, the linear dynamics of the positive cone.
    PositiveBranch,
    /// `f_k(t)` given per mode (one-based `k`).
    Modal(&'a dyn Fn(usize, f64) -> f64),
}

/// Options for [`mild_solve_linear`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MildOptions {
    /// Upper bound on the exponential-Euler substep. Ignored for constant
    /// symbols with time-independent forcing, which are integrated exactly.
    pub max_substep: f64,
}

impl Default for MildOptions {
    fn default() -> Self {
        Self { max_substep: 1e-3 }
    }
}

/// `(1 − e^{−μh})/μ`, stable for small `μh`.
fn phi1(mu: f64, h: f64) -> f64 {
    if mu == 0.0 {
        h
    } else {
        -(-mu * h).exp_m1() / mu
    }
}

/// Variation-of-constants solution from `u_tau` at `tau` to time `t`.
///
/// The mode count equals the node count of the grid. For the positive branch
/// the slowly varying part `b(t)·W_{ω(t)}` (the stationary profile for frozen
/// coefficients) is rendered in closed form and only the remainder is
/// summed, which removes the truncation error of the sine series of `b·1`.
/// The initial remainder `u_tau − b(tau)·W_{ω(tau)}` is expanded on the grid,
/// so the split is exact at `t = tau` and solves compose to round-off.
pub fn mild_solve_linear(
    u_tau: &Field,
    tau: f64,
    t: f64,
    sigma: &Symbol,
    source: Source<'_>,
    opts: MildOptions,
) -> Result<Field> {
    if !(tau <= t) {
        return Err(Error::InvalidInterval { start: tau, end: t });
    }
    let basis = SineBasis::full(u_tau.grid());
    let mut a = match source {
        Source::PositiveBranch => {
            // a_k = r_k + b c_k/μ_k with r the coefficients of u − b·W_ω
            let c = sigma.eval(tau)?;
            let mut rest = u_tau.clone();
            for (v, x) in rest.values_mut().iter_mut().zip(basis.grid().nodes()) {
                *v -= v1_plus_at(c.b, c.omega, x);
            }
            let mut a = basis.forward(&rest)?.coeffs;
            for (idx, ak) in a.iter_mut().enumerate() {
                let k = idx + 1;
                *ak += c.b * constant_coefficient(k) / (SpectralCoeffs::eigenvalue(k) - c.omega);
            }
            a
        }
        _ => basis.forward(u_tau)?.coeffs,
    };
    let exact = sigma.kind() == crate::coefficients::SymbolKind::Constant
        && !matches!(source, Source::Modal(_));
    let substeps = if exact || t == tau {
        1
    } else {
        ((t - tau) / opts.max_substep).ceil().max(1.0) as usize
    };
    let h = (t - tau) / substeps as f64;
    for j in 0..substeps {
        let t0 = tau + j as f64 * h;
        let mid = t0 + 0.5 * h;
        let c = sigma.eval(mid)?;
        for (idx, ak) in a.iter_mut().enumerate() {
            let k = idx + 1;
            let mu = SpectralCoeffs::eigenvalue(k) - c.omega;
            let forcing = match &source {
                Source::None => 0.0,
                Source::PositiveBranch => c.b * constant_coefficient(k),
                Source::Modal(f) => f(k, mid),
            };
            *ak = (-mu * h).exp() * *ak + phi1(mu, h) * forcing;
        }
    }

    match source {
        Source::PositiveBranch => {
            let c = sigma.eval(t)?;
            for (idx, ak) in a.iter_mut().enumerate() {
                let k = idx + 1;
                *ak -= c.b * constant_coefficient(k) / (SpectralCoeffs::eigenvalue(k) - c.omega);
            }
            let mut u = basis.inverse(&SpectralCoeffs { coeffs: a })?;
            for (v, x) in u.values_mut().iter_mut().zip(basis.grid().nodes()) {
                *v += v1_plus_at(c.b, c.omega, x);
            }
            Ok(u)
        }
        _ => basis.inverse(&SpectralCoeffs { coeffs: a }),
    }
}

/// Re-integrates the linear problem driven by recorded selections: on
/// `[t_n, t_{n+1}]` the forcing is `b(t)·h^n`, frozen at the step midpoint.
/// Returns the states after each step count in `checkpoints` (ascending).
pub fn replay_recorded_sources(
    initial: &Field,
    start_step: i64,
    dt: f64,
    sigma: &Symbol,
    sources: &[Field],
    checkpoints: &[usize],
) -> Result<Vec<Field>> {
    let basis = SineBasis::full(initial.grid());
    let mut a = basis.forward(initial)?.coeffs;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut marks = checkpoints.iter().peekable();
    while marks.peek() == Some(&&0) {
        out.push(initial.clone());
        marks.next();
    }
    let mut hk: Option<(usize, Vec<f64>)> = None;
    for (n, h) in sources.iter().enumerate() {
        if marks.peek().is_none() {
            break;
        }
        let reuse = matches!(&hk, Some((m, _)) if sources[*m] == *h);
        if !reuse {
            hk = Some((n, basis.forward(h)?.coeffs));
        }
        let coeffs = &hk.as_ref().expect("set above").1;
        let mid = (start_step + n as i64) as f64 * dt + 0.5 * dt;
        let c = sigma.eval(mid)?;
        for (idx, (ak, &fk)) in a.iter_mut().zip(coeffs).enumerate() {
            let mu = SpectralCoeffs::eigenvalue(idx + 1) - c.omega;
            *ak = (-mu * dt).exp() * *ak + phi1(mu, dt) * c.b * fk;
        }
        while marks.peek() == Some(&&(n + 1)) {
            out.push(basis.inverse(&SpectralCoeffs { coeffs: a.clone() })?);
            marks.next();
        }
    }
    if marks.peek().is_some() {
        return Err(Error::InvalidArgument(
            "checkpoint beyond the recorded sources".into(),
        ));
    }
    Ok(out)
}

/// Least-squares slope of `log|a_k|` against `log k` over the nonzero modes.
///
/// Smoother fields have more negative slopes. Coefficients below `1e-14`
/// times the largest one are treated as unresolved and skipped.
pub fn smoothness_indicator(c: &SpectralCoeffs) -> Result<f64> {
    if c.modes() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 modes, got {}",
            c.modes()
        )));
    }
    let peak = c.coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if peak == 0.0 {
        return Err(Error::UndefinedSlope);
    }
    let floor = 1e-14 * peak;
    let pts: Vec<(f64, f64)> = c
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.abs() > floor)
        .map(|(i, a)| (((i + 1) as f64).ln(), a.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedSlope);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(num, den), (x, y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    Ok(num / den)
}
