//! Velocity laws `v(ρ)` and the associated flux `f(ρ) = ρ v(ρ)`.
//!
//! A [`VelocityModel`] is immutable once built. The built-in families are the
//! classical traffic closures (Greenshields, Pipes–Munjal, Underwood and a
//! shifted Greenberg law); arbitrary laws can be supplied either in closed
//! form or as a strictly decreasing table.
//!
//! Three structural properties matter for the particle scheme:
//!
//! * (V1) `v` is `C¹` and strictly decreasing on `[0, ∞)`,
//! * (V2) `v(0) = v_max` is finite,
//! * (V3) `ρ ↦ ρ v'(ρ)` is non-increasing.
//!
//! They are verified on a sampled grid by [`VelocityModel::check_assumptions`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step used by centered differences for models without a closed-form derivative.
pub const DERIVATIVE_STEP: f64 = 1e-6;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum VelocityKind {
    /// `v(ρ) = v_max (1 − ρ)`
    Greenshields,
    /// `v(ρ) = v_max (1 − ρ^α)`, `α > 0`
    PipesMunjal { alpha: f64 },
    /// `v(ρ) = v_max e^{−ρ}`
    Underwood,
    /// `v(ρ) = v_max ln(ρ + α) / ln(α)`, `0 < α < 1`
    ModifiedGreenberg { alpha: f64 },
    /// Linear interpolation of a strictly decreasing table starting at `ρ = 0`.
    Tabulated { densities: Vec<f64>, speeds: Vec<f64> },
    /// User supplied closed form, with an optional exact derivative.
    ClosedForm {
        name: String,
        speed: ScalarFn,
        derivative: Option<ScalarFn>,
    },
}

impl fmt::Debug for VelocityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Greenshields => write!(f, "Greenshields"),
            Self::PipesMunjal { alpha } => write!(f, "PipesMunjal {{ alpha: {alpha} }}"),
            Self::Underwood => write!(f, "Underwood"),
            Self::ModifiedGreenberg { alpha } => {
                write!(f, "ModifiedGreenberg {{ alpha: {alpha} }}")
            }
            Self::Tabulated { densities, .. } => {
                write!(f, "Tabulated {{ nodes: {} }}", densities.len())
            }
            Self::ClosedForm {
                name, derivative, ..
            } => write!(
                f,
                "ClosedForm {{ name: {name:?}, exact_derivative: {} }}",
                derivative.is_some()
            ),
        }
    }
}

/// How [`VelocityModel::eval_derivative`] obtains `v'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DerivativeMethod {
    ClosedForm,
    CenteredDifference { step: f64 },
}

#[derive(Debug, Clone)]
pub struct VelocityModel {
    kind: VelocityKind,
    v_max: f64,
}

/// Outcome of the sampled (V1)/(V2)/(V3) checks on `[0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub strictly_decreasing: bool,
    pub v_zero_is_v_max: bool,
    pub rho_dv_non_increasing: bool,
    /// Sample grid, uniform on `[0, R]`.
    #[serde(skip)]
    pub grid: Vec<f64>,
    /// First grid density at which (V1) failed, if any.
    pub v1_failure_at: Option<f64>,
    /// First grid density at which (V3) failed, if any.
    pub v3_failure_at: Option<f64>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.strictly_decreasing && self.v_zero_is_v_max && self.rho_dv_non_increasing
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "density",
            value: rho,
            expected: "finite and >= 0",
        })
    }
}

impl VelocityModel {
    pub fn greenshields(v_max: f64) -> Result<Self> {
        Self::finite_v_max(v_max)?;
        Ok(Self {
            kind: VelocityKind::Greenshields,
            v_max,
        })
    }

    pub fn pipes_munjal(v_max: f64, alpha: f64) -> Result<Self> {
        Self::finite_v_max(v_max)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidModel(format!(
                "Pipes-Munjal exponent must be > 0, got {alpha}"
            )));
        }
        Ok(Self {
            kind: VelocityKind::PipesMunjal { alpha },
            v_max,
        })
    }

    pub fn underwood(v_max: f64) -> Result<Self> {
        Self::finite_v_max(v_max)?;
        Ok(Self {
            kind: VelocityKind::Underwood,
            v_max,
        })
    }

    /// The shifted Greenberg law. `α` must lie in `(0, 1)`: at `α = 1` the law
    /// is undefined and for `α > 1` it is increasing.
    pub fn modified_greenberg(v_max: f64, alpha: f64) -> Result<Self> {
        Self::finite_v_max(v_max)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidModel(format!(
                "modified Greenberg shift must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            kind: VelocityKind::ModifiedGreenberg { alpha },
            v_max,
        })
    }

    /// Piecewise-linear table. The first node must be `ρ = 0`, densities must
    /// be strictly increasing and speeds strictly decreasing.
    pub fn tabulated(densities: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if densities.len() != speeds.len() || densities.len() < 2 {
            return Err(Error::InvalidModel(
                "table needs at least two nodes and matching lengths".into(),
            ));
        }
        if densities[0] != 0.0 {
            return Err(Error::InvalidModel("table must start at density 0".into()));
        }
        if densities.iter().chain(&speeds).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("table contains non-finite values".into()));
        }
        if densities.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel(
                "table densities must be strictly increasing".into(),
            ));
        }
        if speeds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidModel(
                "table speeds must be strictly decreasing".into(),
            ));
        }
        let v_max = speeds[0];
        Ok(Self {
            kind: VelocityKind::Tabulated { densities, speeds },
            v_max,
        })
    }

    /// Arbitrary closed form. `v_max` is taken as `speed(0)`; no monotonicity
    /// is enforced here, use [`Self::check_assumptions`].
    pub fn closed_form<V, D>(name: impl Into<String>, speed: V, derivative: Option<D>) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let v_max = speed(0.0);
        Self::finite_v_max(v_max)?;
        Ok(Self {
            kind: VelocityKind::ClosedForm {
                name: name.into(),
                speed: Arc::new(speed),
                derivative: derivative.map(|d| Arc::new(d) as ScalarFn),
            },
            v_max,
        })
    }

    fn finite_v_max(v_max: f64) -> Result<()> {
        if v_max.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("v_max must be finite, got {v_max}")))
        }
    }

    pub fn kind(&self) -> &VelocityKind {
        &self.kind
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Largest density the model can be evaluated at.
    pub fn density_limit(&self) -> f64 {
        match &self.kind {
            VelocityKind::Tabulated { densities, .. } => *densities.last().unwrap(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_built_in(&self) -> bool {
        !matches!(
            self.kind,
            VelocityKind::Tabulated { .. } | VelocityKind::ClosedForm { .. }
        )
    }

    /// `v(ρ)`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        let v_max = self.v_max;
        Ok(match &self.kind {
            VelocityKind::Greenshields => v_max * (1.0 - rho),
            VelocityKind::PipesMunjal { alpha } => v_max * (1.0 - rho.powf(*alpha)),
            VelocityKind::Underwood => v_max * (-rho).exp(),
            VelocityKind::ModifiedGreenberg { alpha } => v_max * (rho + alpha).ln() / alpha.ln(),
            VelocityKind::Tabulated { densities, speeds } => {
                interpolate(densities, speeds, rho).ok_or(Error::Domain {
                    quantity: "density",
                    value: rho,
                    expected: "within the tabulated range",
                })?
            }
            VelocityKind::ClosedForm { speed, .. } => speed(rho),
        })
    }

    /// `v'(ρ)`. Closed forms are exact; tables and closed forms without a
    /// derivative use a centered difference of step [`DERIVATIVE_STEP`]
    /// (one-sided at the ends of the admissible range).
    pub fn eval_derivative(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        let v_max = self.v_max;
        match &self.kind {
            VelocityKind::Greenshields => Ok(-v_max),
            VelocityKind::PipesMunjal { alpha } => Ok(if rho == 0.0 {
                if *alpha < 1.0 {
                    f64::NEG_INFINITY * v_max.signum()
                } else if *alpha == 1.0 {
                    -v_max
                } else {
                    0.0
                }
            } else {
                -v_max * alpha * rho.powf(alpha - 1.0)
            }),
            VelocityKind::Underwood => Ok(-v_max * (-rho).exp()),
            VelocityKind::ModifiedGreenberg { alpha } => Ok(v_max / ((rho + alpha) * alpha.ln())),
            VelocityKind::ClosedForm {
                derivative: Some(d),
                ..
            } => Ok(d(rho)),
            _ => self.centered_difference(rho),
        }
    }

    pub fn derivative_method(&self) -> DerivativeMethod {
        match &self.kind {
            VelocityKind::Tabulated { .. }
            | VelocityKind::ClosedForm {
                derivative: None, ..
            } => DerivativeMethod::CenteredDifference {
                step: DERIVATIVE_STEP,
            },
            _ => DerivativeMethod::ClosedForm,
        }
    }

    fn centered_difference(&self, rho: f64) -> Result<f64> {
        let h = DERIVATIVE_STEP;
        let lo = (rho - h).max(0.0);
        let hi = (rho + h).min(self.density_limit());
        if hi <= lo {
            return Err(Error::Domain {
                quantity: "density",
                value: rho,
                expected: "inside the model range",
            });
        }
        Ok((self.eval(hi)? - self.eval(lo)?) / (hi - lo))
    }

    /// `f(ρ) = ρ v(ρ)`; `f(0) = 0` for every model.
    pub fn flux(&self, rho: f64) -> Result<f64> {
        let v = self.eval(rho)?;
        Ok(if rho == 0.0 { 0.0 } else { rho * v })
    }

    /// `f'(ρ) = v(ρ) + ρ v'(ρ)`.
    pub fn flux_derivative(&self, rho: f64) -> Result<f64> {
        Ok(self.eval(rho)? + self.rho_times_derivative(rho)?)
    }

    /// `ρ v'(ρ)`, with the value 0 at `ρ = 0`.
    pub fn rho_times_derivative(&self, rho: f64) -> Result<f64> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(rho * self.eval_derivative(rho)?)
    }

    /// Sampled verification of (V1), (V2) and (V3) on a uniform grid of
    /// `samples` points over `[0, R]`.
    pub fn check_assumptions(&self, r: f64, samples: usize) -> Result<AssumptionReport> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Domain {
                quantity: "R",
                value: r,
                expected: "finite and > 0",
            });
        }
        let samples = samples.max(2);
        let grid = uniform_grid(0.0, r, samples);

        let mut v1_failure_at = None;
        let mut v3_failure_at = None;
        let mut prev_v: Option<f64> = None;
        let mut prev_g: Option<f64> = None;
        for &rho in &grid {
            let (v, g, dv) = match (
                self.eval(rho),
                self.rho_times_derivative(rho),
                self.eval_derivative(rho),
            ) {
                (Ok(v), Ok(g), Ok(dv)) => (v, g, dv),
                _ => {
                    v1_failure_at.get_or_insert(rho);
                    v3_failure_at.get_or_insert(rho);
                    continue;
                }
            };
            let decreasing = prev_v.map_or(true, |p| v < p) && (rho == 0.0 || dv < 0.0);
            if !decreasing && v1_failure_at.is_none() {
                v1_failure_at = Some(rho);
            }
            if let Some(p) = prev_g {
                if g > p + 1e-12 * (1.0 + p.abs()) && v3_failure_at.is_none() {
                    v3_failure_at = Some(rho);
                }
            }
            prev_v = Some(v);
            prev_g = Some(g);
        }

        Ok(AssumptionReport {
            strictly_decreasing: v1_failure_at.is_none(),
            v_zero_is_v_max: matches!(self.eval(0.0), Ok(v) if v == self.v_max),
            rho_dv_non_increasing: v3_failure_at.is_none(),
            grid,
            v1_failure_at,
            v3_failure_at,
        })
    }

    /// Sampled concavity of the flux on `[0, R]` via second differences.
    pub fn flux_is_concave(&self, r: f64, samples: usize) -> bool {
        if r <= 0.0 {
            return true;
        }
        let grid = uniform_grid(0.0, r, samples.max(3));
        let Ok(values) = grid.iter().map(|&p| self.flux(p)).collect::<Result<Vec<_>>>() else {
            return false;
        };
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        values
            .windows(3)
            .all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-12 * scale)
    }

    /// Location of the maximum of the (concave) flux when known in closed form.
    pub(crate) fn flux_argmax(&self) -> Option<f64> {
        if self.v_max <= 0.0 {
            return None;
        }
        match &self.kind {
            VelocityKind::Greenshields => Some(0.5),
            VelocityKind::PipesMunjal { alpha } => Some((1.0 / (1.0 + alpha)).powf(1.0 / alpha)),
            VelocityKind::Underwood => Some(1.0),
            _ => None,
        }
    }
}

pub(crate) fn uniform_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let n = samples - 1;
    (0..=n)
        .map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 })
        .collect()
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let last = *xs.last()?;
    if x > last {
        return None;
    }
    if x == last {
        return ys.last().copied();
    }
    let k = xs.partition_point(|&p| p <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    Some(ys[k] + t * (ys[k + 1] - ys[k]))
}

/// Configuration form of a velocity model (`velocity.kind`, `velocity.v_max`,
/// `velocity.alpha`, and table nodes for `tabulated`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySpec {
    pub kind: String,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_densities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_speeds: Option<Vec<f64>>,
}

fn default_v_max() -> f64 {
    1.0
}

impl VelocitySpec {
    pub fn build(&self) -> Result<VelocityModel> {
        let alpha = || {
            self.alpha.ok_or_else(|| {
                Error::InvalidModel(format!("velocity.alpha is required for '{}'", self.kind))
            })
        };
        match self.kind.as_str() {
            "greenshields" => VelocityModel::greenshields(self.v_max),
            "pipes_munjal" => VelocityModel::pipes_munjal(self.v_max, alpha()?),
            "underwood" => VelocityModel::underwood(self.v_max),
            "modified_greenberg" => VelocityModel::modified_greenberg(self.v_max, alpha()?),
            "tabulated" => {
                let (Some(d), Some(s)) = (&self.table_densities, &self.table_speeds) else {
                    return Err(Error::InvalidModel(
                        "tabulated velocity needs table_densities and table_speeds".into(),
                    ));
                };
                VelocityModel::tabulated(d.clone(), s.clone())
            }
            other => Err(Error::InvalidModel(format!("unknown velocity kind '{other}'"))),
        }
    }
}
