use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::InitialDatum;
use crate::measures::PiecewiseConstantDensity;
use crate::velocity::VelocityModel;

/// Samples used for the concavity check of the flux.
pub const CONCAVITY_SAMPLES: usize = 2001;
const BISECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Wave {
    Constant,
    Shock { speed: f64 },
    Rarefaction { speed_left: f64, speed_right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannSolution {
    pub left_state: f64,
    pub right_state: f64,
    pub wave: Wave,
}

impl RiemannSolution {
    /// Slowest and fastest signal speeds of the wave.
    pub fn speed_range(&self) -> (f64, f64) {
        match self.wave {
            Wave::Constant => (0.0, 0.0),
            Wave::Shock { speed } => (speed, speed),
            Wave::Rarefaction {
                speed_left,
                speed_right,
            } => (speed_left, speed_right),
        }
    }
}

fn check_state(rho: f64) -> Result<()> {
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

/// Entropy solution of the Riemann problem for a concave flux: a shock when
/// `ρ_l < ρ_r`, a rarefaction when `ρ_l > ρ_r`.
pub fn riemann_solve(model: &VelocityModel, rho_l: f64, rho_r: f64) -> Result<RiemannSolution> {
    check_state(rho_l)?;
    check_state(rho_r)?;
    let top = rho_l.max(rho_r);
    if !model.flux_is_concave(top, CONCAVITY_SAMPLES) {
        return Err(Error::UnsupportedFlux(format!("flux is not concave on [0, {top}]")));
    }
    let wave = if rho_l == rho_r {
        Wave::Constant
    } else if rho_l < rho_r {
        Wave::Shock {
            speed: (model.flux(rho_r)? - model.flux(rho_l)?) / (rho_r - rho_l),
        }
    } else {
        Wave::Rarefaction {
            speed_left: model.flux_derivative(rho_l)?,
            speed_right: model.flux_derivative(rho_r)?,
        }
    };
    Ok(RiemannSolution {
        left_state: rho_l,
        right_state: rho_r,
        wave,
    })
}

/// Value of the self-similar solution at `ξ = x/t`.
pub fn riemann_eval(sol: &RiemannSolution, model: &VelocityModel, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            quantity: "time",
            value: t,
            expected: "> 0",
        });
    }
    eval_similarity(sol, model, x / t)
}

fn eval_similarity(sol: &RiemannSolution, model: &VelocityModel, xi: f64) -> Result<f64> {
    match sol.wave {
        Wave::Constant => Ok(sol.left_state),
        Wave::Shock { speed } => Ok(if xi < speed { sol.left_state } else { sol.right_state }),
        Wave::Rarefaction {
            speed_left,
            speed_right,
        } => {
            if xi <= speed_left {
                Ok(sol.left_state)
            } else if xi >= speed_right {
                Ok(sol.right_state)
            } else {
                invert_characteristic_speed(model, xi, sol.right_state, sol.left_state)
            }
        }
    }
}

/// Solves `f'(ρ) = ξ` on `[lo, hi]` by bisection; `f'` is non-increasing there.
fn invert_characteristic_speed(model: &VelocityModel, xi: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (model.flux_derivative(a)? - xi, model.flux_derivative(b)? - xi);
    if fa < 0.0 || fb > 0.0 {
        return Err(Error::Bracketing(format!(
            "f'(ρ) = {xi} not bracketed on [{lo}, {hi}] (residuals {fa}, {fb})"
        )));
    }
    while b - a > BISECTION_TOLERANCE * (1.0 + b.abs()) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if model.flux_derivative(m)? - xi > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Entropy solution for a piecewise-constant, compactly supported datum,
/// assembled from the Riemann problems at its breakpoints. Exact until the
/// first time two neighbouring waves meet, see [`ExactSolution::horizon`].
#[derive(Debug, Clone)]
pub struct ExactSolution {
    model: VelocityModel,
    centers: Vec<f64>,
    waves: Vec<RiemannSolution>,
    horizon: f64,
}

impl ExactSolution {
    pub fn new(datum: &InitialDatum, model: &VelocityModel) -> Result<Self> {
        let b = datum.breakpoints();
        let mut states = Vec::with_capacity(b.len() + 1);
        states.push(0.0);
        states.extend_from_slice(datum.values());
        states.push(0.0);
        let mut centers = Vec::new();
        let mut waves = Vec::new();
        for (j, &x) in b.iter().enumerate() {
            let (l, r) = (states[j], states[j + 1]);
            if l != r {
                centers.push(x);
                waves.push(riemann_solve(model, l, r)?);
            }
        }
        let mut horizon = f64::INFINITY;
        for j in 1..waves.len() {
            let closing = waves[j - 1].speed_range().1 - waves[j].speed_range().0;
            if closing > 0.0 {
                horizon = horizon.min((centers[j] - centers[j - 1]) / closing);
            }
        }
        Ok(Self {
            model: model.clone(),
            centers,
            waves,
            horizon,
        })
    }

    /// First time at which two waves interact.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn waves(&self) -> impl Iterator<Item = (f64, &RiemannSolution)> {
        self.centers.iter().copied().zip(&self.waves)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::Domain {
                quantity: "time",
                value: t,
                expected: "in (0, first wave interaction]",
            });
        }
        Ok(())
    }

    /// Support `[a, b]` of the solution at time `t`.
    pub fn support(&self, t: f64) -> (f64, f64) {
        let first = self.centers[0] + self.waves[0].speed_range().0 * t;
        let k = self.waves.len() - 1;
        let last = self.centers[k] + self.waves[k].speed_range().1 * t;
        (first, last)
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        self.eval_unchecked(t, x)
    }

    fn eval_unchecked(&self, t: f64, x: f64) -> Result<f64> {
        // Waves are ordered and disjoint: the first one not entirely to the
        // left of x decides.
        for (c, w) in self.centers.iter().zip(&self.waves) {
            if x <= c + w.speed_range().1 * t {
                return eval_similarity(w, &self.model, (x - c) / t);
            }
        }
        Ok(self.waves.last().map_or(0.0, |w| w.right_state))
    }

    /// Points in `(a, b)` where the solution or `|value − solution|` may fail
    /// to be smooth: shock positions, fan edges and the point where a fan
    /// crosses `value`.
    fn kinks(&self, t: f64, value: f64, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for (c, w) in self.centers.iter().zip(&self.waves) {
            let (s0, s1) = w.speed_range();
            out.push(c + s0 * t);
            out.push(c + s1 * t);
            if let Wave::Rarefaction { .. } = w.wave {
                let (lo, hi) = (w.right_state, w.left_state);
                if value > lo && value < hi {
                    if let Ok(s) = self.model.flux_derivative(value) {
                        out.push(c + s * t);
                    }
                }
            }
        }
        out.retain(|&x| x > a && x < b);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `∫_a^b |value − ρ(t, x)| dx`.
    fn l1_piece(&self, t: f64, value: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
        let mut pts = vec![a];
        pts.extend(self.kinks(t, value, a, b));
        pts.push(b);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let f = |x: f64| self.eval_unchecked(t, x).map(|r| (value - r).abs());
            total += adaptive_simpson(&f, w[0], w[1], tol)?;
        }
        Ok(total)
    }

    /// `∫ |ρ_h − ρ(t)| dx` over the whole line.
    pub fn l1_error(&self, density: &PiecewiseConstantDensity, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let (s0, s1) = self.support(t);
        let b = density.breakpoints();
        let mut edges: Vec<f64> = b.to_vec();
        edges.push(s0.min(b[0]));
        edges.push(s1.max(*b.last().unwrap()));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let tol = 1e-13 / edges.len() as f64;
        let mut total = 0.0;
        for w in edges.windows(2) {
            let value = density.eval(0.5 * (w[0] + w[1]));
            total += self.l1_piece(t, value, w[0], w[1], tol)?;
        }
        Ok(total)
    }

    /// Exact cell averages on `edges`.
    pub fn cell_averages(&self, edges: &[f64], t: f64) -> Result<PiecewiseConstantDensity> {
        self.check_time(t)?;
        let tol = 1e-13 / edges.len() as f64;
        let mut values = Vec::with_capacity(edges.len().saturating_sub(1));
        for w in edges.windows(2) {
            let mut pts = vec![w[0]];
            pts.extend(self.kinks(t, f64::NAN, w[0], w[1]));
            pts.push(w[1]);
            let mut mass = 0.0;
            for p in pts.windows(2) {
                mass += adaptive_simpson(&|x| self.eval_unchecked(t, x), p[0], p[1], tol)?;
            }
            values.push((mass / (w[1] - w[0])).max(0.0));
        }
        PiecewiseConstantDensity::new(edges.to_vec(), values)
    }

    /// Cell averages on `cells` uniform cells covering the support at `t`.
    pub fn projection(&self, t: f64, cells: usize) -> Result<PiecewiseConstantDensity> {
        let (a, b) = self.support(t);
        let cells = cells.max(1);
        let edges: Vec<f64> = (0..=cells)
            .map(|k| if k == cells { b } else { a + (b - a) * k as f64 / cells as f64 })
            .collect();
        self.cell_averages(&edges, t)
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub(crate) fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(b > a) {
        return Ok(0.0);
    }
    let (fa, fb, fm) = (f(a)?, f(b)?, f(0.5 * (a + b))?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
