//! Single-valued selections `h(t,x) ∈ H₀(u(t,x))` of the set-valued Heaviside
//! map, plus the ε-regularization used for convergence studies.
//!
//! `H₀(v; η)` is `{1}` for `v > η`, `{-1}` for `v < -η` and `[-1, 1]` on the
//! zero band `|v| ≤ η`.

use std::fmt;
use std::str::FromStr;

use crate::coefficients::Symbol;
use crate::error::{Error, Result};
use crate::fdsolver::{self, Discretization};
use crate::grid::Field;

/// Default width of the zero band.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// `±1` off the zero band, `beta` on it.
    SignWithValue { beta: f64 },
    /// `+1` above the band, `-1` below it, and on the band `0` before `t0`,
    /// `+1` from `t0` on. `t0 = +∞` never ignites, `t0 = -∞` is the positive branch.
    DelayedIgnition { t0: f64 },
    /// `clamp(u/eps, -1, 1)`; not an exact selection.
    Regularized { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    pub kind: PolicyKind,
    pub eta: f64,
}

impl SelectionPolicy {
    pub fn sign(beta: f64) -> Self {
        Self {
            kind: PolicyKind::SignWithValue { beta },
            eta: DEFAULT_ZERO_THRESHOLD,
        }
    }

    pub fn ignite(t0: f64) -> Self {
        Self {
            kind: PolicyKind::DelayedIgnition { t0 },
            eta: DEFAULT_ZERO_THRESHOLD,
        }
    }

    /// `h ≡ 1` on the closed positive cone.
    pub fn positive_branch() -> Self {
        Self::ignite(f64::NEG_INFINITY)
    }

    pub fn regularized(eps: f64) -> Self {
        Self {
            kind: PolicyKind::Regularized { eps },
            eta: DEFAULT_ZERO_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "zero threshold must be finite and >= 0, got {}",
                self.eta
            )));
        }
        match self.kind {
            PolicyKind::SignWithValue { beta } if !(-1.0..=1.0).contains(&beta) => Err(
                Error::InvalidArgument(format!("beta must lie in [-1, 1], got {beta}")),
            ),
            PolicyKind::DelayedIgnition { t0 } if t0.is_nan() => {
                Err(Error::InvalidArgument("ignition time is NaN".into()))
            }
            PolicyKind::Regularized { eps } if !(eps > 0.0 && eps.is_finite()) => Err(
                Error::InvalidArgument(format!("eps must be positive, got {eps}")),
            ),
            _ => Ok(()),
        }
    }

    /// Whether every output is an element of `H₀(u; η)`.
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, PolicyKind::Regularized { .. })
    }

    /// Whether the output depends on time.
    pub fn is_time_dependent(&self) -> bool {
        matches!(self.kind, PolicyKind::DelayedIgnition { t0 } if t0.is_finite())
    }

    /// Same policy seen from a clock shifted by `s` (ignition at `t0 - s`).
    pub fn translated(&self, s: f64) -> Self {
        match self.kind {
            PolicyKind::DelayedIgnition { t0 } => Self {
                kind: PolicyKind::DelayedIgnition { t0: t0 - s },
                ..*self
            },
            _ => *self,
        }
    }

    pub fn value(&self, u: f64, t: f64) -> f64 {
        match self.kind {
            PolicyKind::Regularized { eps } => (u / eps).clamp(-1.0, 1.0),
            _ if u > self.eta => 1.0,
            _ if u < -self.eta => -1.0,
            PolicyKind::SignWithValue { beta } => beta,
            PolicyKind::DelayedIgnition { t0 } => {
                if ignited(t, t0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn select_into(&self, u: &[f64], t: f64, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = self.value(v, t);
        }
    }

    pub fn select(&self, u: &Field, t: f64) -> Field {
        let mut out = Field::zeros(u.grid());
        self.select_into(u.values(), t, out.values_mut());
        out
    }
}

/// `t ≥ t0`, tolerant to the rounding of lattice times.
fn ignited(t: f64, t0: f64) -> bool {
    t0 == f64::NEG_INFINITY || (t0.is_finite() && t + 1e-12 * (1.0 + t.abs()) >= t0)
}

/// Distance from `h` to the set `H₀(u; η)`.
pub fn heaviside_distance(h: f64, u: f64, eta: f64) -> f64 {
    if u > eta {
        (h - 1.0).abs()
    } else if u < -eta {
        (h + 1.0).abs()
    } else if h > 1.0 {
        h - 1.0
    } else if h < -1.0 {
        -1.0 - h
    } else {
        0.0
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PolicyKind::SignWithValue { beta } => write!(f, "sign(beta={beta:?})"),
            PolicyKind::DelayedIgnition { t0 } => write!(f, "ignite(t0={})", fmt_time(t0)),
            PolicyKind::Regularized { eps } => write!(f, "reg(eps={eps:e})"),
        }?;
        if self.eta != DEFAULT_ZERO_THRESHOLD {
            write!(f, "@eta={:e}", self.eta)?;
        }
        Ok(())
    }
}

fn fmt_time(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t:?}")
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    /// Parses `sign(beta=0.0)`, `ignite(t0=1.5)` (also `inf`/`-inf`) or
    /// `reg(eps=1e-2)`, optionally followed by `@eta=<threshold>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognized policy `{s}`"));
        let s = s.trim().trim_matches('"');
        let (body, eta) = match s.split_once('@') {
            Some((body, rest)) => {
                let v = rest.trim().strip_prefix("eta=").ok_or_else(bad)?;
                (body.trim(), v.trim().parse::<f64>().map_err(|_| bad())?)
            }
            None => (s, DEFAULT_ZERO_THRESHOLD),
        };
        let (name, args) = body.split_once('(').ok_or_else(bad)?;
        let args = args.strip_suffix(')').ok_or_else(bad)?;
        let (key, value) = args.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let kind = match (name.trim(), key.trim()) {
            ("sign", "beta") => PolicyKind::SignWithValue { beta: value },
            ("ignite", "t0") => PolicyKind::DelayedIgnition { t0: value },
            ("reg", "eps") => PolicyKind::Regularized { eps: value },
            _ => return Err(bad()),
        };
        let policy = SelectionPolicy { kind, eta };
        policy.validate()?;
        Ok(policy)
    }
}

/// One row of [`regularization_convergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationRow {
    pub eps: f64,
    /// `sup_n ‖u_ε^n − u^n‖` in discrete L².
    pub max_l2_difference: f64,
}

/// Compares `Regularized(ε)` trajectories against the exact `SignWithValue(0)`
/// trajectory from the same nonnegative data over `[tau, t_end]`.
pub fn regularization_convergence(
    initial: &Field,
    sigma: &Symbol,
    tau: f64,
    t_end: f64,
    eps: &[f64],
    disc: Discretization,
) -> Result<Vec<RegularizationRow>> {
    if !initial.is_nonnegative() || initial.is_zero() {
        return Err(Error::Precondition(
            "initial data must be nonnegative and not identically zero".into(),
        ));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition(
            "eps sequence must be strictly decreasing".into(),
        ));
    }
    let exact = fdsolver::solve(
        initial,
        tau,
        t_end,
        disc,
        sigma,
        &SelectionPolicy::sign(0.0),
    )?;
    eps.iter()
        .map(|&e| {
            let reg = fdsolver::solve(
                initial,
                tau,
                t_end,
                disc,
                sigma,
                &SelectionPolicy::regularized(e),
            )?;
            let max_l2_difference = exact
                .states
                .iter()
                .zip(&reg.states)
                .map(|(a, b)| a.l2_distance(b))
                .fold(0.0, f64::max);
            Ok(RegularizationRow {
                eps: e,
                max_l2_difference,
            })
        })
        .collect()
}

/// True when `values` never grows by more than `slack` (relative) from one entry to the next.
pub fn is_nonincreasing_with_slack(values: &[f64], slack: f64) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + slack) + f64::MIN_POSITIVE)
}
