//! Time integration of the follow-the-leader system
//!
//! ```text
//! ẋ_N = v_max,    ẋ_i = v(ℓ / (x_{i+1} − x_i)),  i < N
//! ```
//!
//! and of its Lagrangian form in the discrete densities `y_i`.
//!
//! The exact flow never lets a gap fall below `ℓ/R`, with `R` the largest
//! initial discrete density. The integrators enforce a floor of
//! `gap_floor_safety · ℓ/R` on every accepted step: a step that violates it
//! is rejected and retried with half the step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{validate_positions, ParticleConfiguration};
use crate::velocity::VelocityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    #[default]
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default)]
    pub method: IntegratorMethod,
    /// Fixed step (RK4) or initial step (RK45). Chosen from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_safety")]
    pub gap_floor_safety: f64,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_safety() -> f64 {
    0.5
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: IntegratorMethod::Rk4Fixed,
            dt: None,
            abs_tol: default_tol(),
            rel_tol: default_tol(),
            gap_floor_safety: default_safety(),
        }
    }
}

impl IntegratorSettings {
    pub fn rk45(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            method: IntegratorMethod::Rk45Adaptive,
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("integrator.dt must be > 0, got {dt}"));
            }
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("integrator tolerances must be > 0".into());
        }
        if !(self.gap_floor_safety > 0.0 && self.gap_floor_safety <= 1.0) {
            return bad(format!(
                "integrator.gap_floor_safety must lie in (0, 1], got {}",
                self.gap_floor_safety
            ));
        }
        Ok(())
    }
}

/// Bookkeeping recorded alongside a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMetadata {
    pub method: IntegratorMethod,
    pub nominal_dt: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub gap_floor_safety: f64,
    /// `R` of the initial configuration, `max_i ℓ/(x̄_{i+1} − x̄_i)`.
    pub initial_max_density: f64,
    pub accepted_steps: usize,
    /// Steps rejected by the error controller (RK45 only).
    pub error_rejections: usize,
    /// Steps rejected because a gap fell below the floor.
    pub gap_floor_rejections: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl IntegratorMetadata {
    pub fn rejections(&self) -> usize {
        self.error_rejections + self.gap_floor_rejections
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub states: Vec<ParticleConfiguration>,
    pub metadata: IntegratorMetadata,
}

impl Trajectory {
    pub fn initial(&self) -> &ParticleConfiguration {
        &self.states[0]
    }

    pub fn last(&self) -> &ParticleConfiguration {
        self.states.last().unwrap()
    }

    /// State at an exact sample time, if it was recorded.
    pub fn state_at(&self, t: f64) -> Option<&ParticleConfiguration> {
        self.sample_times
            .iter()
            .position(|&s| s == t)
            .map(|k| &self.states[k])
    }

    /// Linear interpolation in time between the bracketing samples.
    ///
    /// Interpolated states are not solutions of the particle system; the
    /// Oleinik and maximum-principle diagnostics can fail on them even when
    /// they hold on every recorded sample.
    pub fn interpolate(&self, t: f64) -> Result<ParticleConfiguration> {
        let first = self.sample_times[0];
        let last = *self.sample_times.last().unwrap();
        if !(t >= first && t <= last) {
            return Err(Error::Domain {
                quantity: "time",
                value: t,
                expected: "within the sampled range",
            });
        }
        let k = self.sample_times.partition_point(|&s| s <= t);
        if k == 0 || self.sample_times[k - 1] == t {
            return Ok(self.states[k.saturating_sub(1)].clone());
        }
        let (t0, t1) = (self.sample_times[k - 1], self.sample_times[k]);
        let w = (t - t0) / (t1 - t0);
        let a = self.states[k - 1].positions();
        let b = self.states[k].positions();
        let x = a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect();
        self.states[k - 1].advanced(t, x)
    }
}

/// Right-hand side of the particle system for the given configuration.
pub fn ftl_rhs(config: &ParticleConfiguration, model: &VelocityModel) -> Result<Vec<f64>> {
    validate_positions(config.positions())?;
    let mut out = vec![0.0; config.positions().len()];
    rhs_into(config.positions(), config.mass_per_particle(), model, &mut out)?;
    Ok(out)
}

fn rhs_into(x: &[f64], ell: f64, model: &VelocityModel, out: &mut [f64]) -> Result<()> {
    let n = x.len() - 1;
    for i in 0..n {
        let gap = x[i + 1] - x[i];
        if !(gap > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "gap {i} is not positive ({gap})"
            )));
        }
        out[i] = model.eval(ell / gap)?;
    }
    out[n] = model.v_max();
    Ok(())
}

/// Time derivative of the discrete densities `y_0 … y_{N−1}`:
///
/// ```text
/// ẏ_{N−1} = −y²_{N−1}/ℓ · (v_max − v(y_{N−1}))
/// ẏ_i     = −y²_i/ℓ · (v(y_{i+1}) − v(y_i))
/// ```
pub fn lagrangian_rhs(y: &[f64], model: &VelocityModel, ell: f64) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::InvalidConfiguration("no densities".into()));
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain {
            quantity: "discrete density",
            value: *bad,
            expected: "finite and > 0",
        });
    }
    let speeds = y.iter().map(|&v| model.eval(v)).collect::<Result<Vec<_>>>()?;
    let n = y.len();
    Ok((0..n)
        .map(|i| {
            let ahead = if i + 1 < n { speeds[i + 1] } else { model.v_max() };
            -y[i] * y[i] / ell * (ahead - speeds[i])
        })
        .collect())
}

/// Classical RK4 on the Lagrangian densities with a fixed step.
pub fn integrate_lagrangian(
    y0: &[f64],
    model: &VelocityModel,
    ell: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut stage = vec![0.0; y.len()];
    while t < t_end {
        let h = dt.min(t_end - t);
        let k1 = lagrangian_rhs(&y, model, ell)?;
        axpy(&y, h / 2.0, &k1, &mut stage);
        let k2 = lagrangian_rhs(&stage, model, ell)?;
        axpy(&y, h / 2.0, &k2, &mut stage);
        let k3 = lagrangian_rhs(&stage, model, ell)?;
        axpy(&y, h, &k3, &mut stage);
        let k4 = lagrangian_rhs(&stage, model, ell)?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if t_end - t <= h { t_end } else { t + h };
    }
    Ok(y)
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// Default RK4 step `min(0.1 ℓ / (R (v_max − v(R)) + ε), t_end / 100)`.
pub fn default_step(ell: f64, r: f64, model: &VelocityModel, t_end: f64) -> Result<f64> {
    const EPS: f64 = 1e-12;
    let spread = model.v_max() - model.eval(r)?;
    let dt = 0.1 * ell / (r * spread + EPS);
    Ok(if t_end > 0.0 { dt.min(t_end / 100.0) } else { dt })
}

struct Stepper<'a> {
    model: &'a VelocityModel,
    ell: f64,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    candidate: Vec<f64>,
    error: Vec<f64>,
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<'a> Stepper<'a> {
    fn new(model: &'a VelocityModel, ell: f64, len: usize) -> Self {
        Self {
            model,
            ell,
            k: std::array::from_fn(|_| vec![0.0; len]),
            stage: vec![0.0; len],
            candidate: vec![0.0; len],
            error: vec![0.0; len],
        }
    }

    /// Fills `candidate` with one RK4 step. Returns `false` when a stage
    /// configuration is not ordered.
    fn rk4(&mut self, x: &[f64], h: f64) -> Result<bool> {
        let (model, ell) = (self.model, self.ell);
        let [k1, k2, k3, k4, ..] = &mut self.k;
        rhs_into(x, ell, model, k1)?;
        axpy(x, h / 2.0, k1, &mut self.stage);
        if !ordered(&self.stage) {
            return Ok(false);
        }
        rhs_into(&self.stage, ell, model, k2)?;
        axpy(x, h / 2.0, k2, &mut self.stage);
        if !ordered(&self.stage) {
            return Ok(false);
        }
        rhs_into(&self.stage, ell, model, k3)?;
        axpy(x, h, k3, &mut self.stage);
        if !ordered(&self.stage) {
            return Ok(false);
        }
        rhs_into(&self.stage, ell, model, k4)?;
        for i in 0..x.len() {
            self.candidate[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(true)
    }

    /// Fills `candidate` (5th order) and `error` (5th − 4th order).
    fn dopri(&mut self, x: &[f64], h: f64) -> Result<bool> {
        let n = x.len();
        for s in 0..7 {
            if s > 0 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (j, a) in DP_A[s].iter().enumerate().take(s) {
                        acc += h * a * self.k[j][i];
                    }
                    self.stage[i] = acc;
                }
                if !ordered(&self.stage) {
                    return Ok(false);
                }
            } else {
                self.stage.copy_from_slice(x);
            }
            let (stage, ks) = (&self.stage, &mut self.k);
            rhs_into(stage, self.ell, self.model, &mut ks[s])?;
        }
        debug_assert!(DP_C[6] == 1.0);
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += DP_B5[s] * self.k[s][i];
                lo += DP_B4[s] * self.k[s][i];
            }
            self.candidate[i] = x[i] + h * hi;
            self.error[i] = h * (hi - lo);
        }
        Ok(true)
    }
}

fn ordered(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0]) && x.iter().all(|v| v.is_finite())
}

fn min_gap(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Integrates the particle system from `config0` up to `t_end`, recording the
/// state at each of `sample_times` (time 0 is always recorded).
pub fn integrate(
    config0: &ParticleConfiguration,
    model: &VelocityModel,
    t_end: f64,
    settings: &IntegratorSettings,
    sample_times: &[f64],
) -> Result<Trajectory> {
    settings.validate()?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Config(format!("t_end must be >= 0, got {t_end}")));
    }
    if config0.time() != 0.0 {
        return Err(Error::InvalidConfiguration(
            "integration starts from a t = 0 configuration".into(),
        ));
    }
    let mut samples: Vec<f64> = sample_times.to_vec();
    if samples.iter().any(|&s| !(s >= 0.0 && s <= t_end)) {
        return Err(Error::Config(format!(
            "sample times must lie in [0, {t_end}]"
        )));
    }
    samples.push(0.0);
    samples.sort_by(f64::total_cmp);
    samples.dedup();

    let ell = config0.mass_per_particle();
    let r = config0.max_discrete_density();
    let floor = settings.gap_floor_safety * ell / r;
    let nominal = match settings.dt {
        Some(dt) => dt,
        None => default_step(ell, r, model, t_end)?,
    };

    let mut meta = IntegratorMetadata {
        method: settings.method,
        nominal_dt: nominal,
        abs_tol: settings.abs_tol,
        rel_tol: settings.rel_tol,
        gap_floor_safety: settings.gap_floor_safety,
        initial_max_density: r,
        accepted_steps: 0,
        error_rejections: 0,
        gap_floor_rejections: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
    };

    let underflow = 1e-12 * t_end;
    let mut stepper = Stepper::new(model, ell, config0.positions().len());
    let mut x = config0.positions().to_vec();
    let mut t = 0.0;
    let mut h = nominal;
    let mut states = Vec::with_capacity(samples.len());

    for &target in &samples {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let ok = match settings.method {
                IntegratorMethod::Rk4Fixed => stepper.rk4(&x, step)?,
                IntegratorMethod::Rk45Adaptive => stepper.dopri(&x, step)?,
            };

            let mut err_ratio = 0.0;
            if ok && settings.method == IntegratorMethod::Rk45Adaptive {
                err_ratio = stepper
                    .error
                    .iter()
                    .zip(&x)
                    .zip(&stepper.candidate)
                    .map(|((e, a), b)| {
                        e.abs() / (settings.abs_tol + settings.rel_tol * a.abs().max(b.abs()))
                    })
                    .fold(0.0, f64::max);
            }

            if !ok || !ordered(&stepper.candidate) || min_gap(&stepper.candidate) < floor {
                meta.gap_floor_rejections += 1;
                h = step / 2.0;
            } else if err_ratio > 1.0 {
                meta.error_rejections += 1;
                h = step * (0.9 * err_ratio.powf(-0.2)).clamp(0.1, 0.5);
            } else {
                std::mem::swap(&mut x, &mut stepper.candidate);
                t = if last { target } else { t + step };
                meta.accepted_steps += 1;
                meta.min_step = meta.min_step.min(step);
                meta.max_step = meta.max_step.max(step);
                h = match settings.method {
                    IntegratorMethod::Rk4Fixed => (2.0 * h).min(nominal),
                    IntegratorMethod::Rk45Adaptive => {
                        let grow = if err_ratio == 0.0 {
                            5.0
                        } else {
                            (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        if last {
                            h
                        } else {
                            step * grow
                        }
                    }
                };
                continue;
            }
            if h < underflow {
                return Err(Error::IntegrationFailure {
                    time: t,
                    step: h,
                    reason: format!(
                        "step size underflow (gap floor {floor:e}, min gap {:e})",
                        min_gap(&x)
                    ),
                    positions: x,
                });
            }
        }
        states.push(config0.advanced(target, x.clone())?);
    }

    if meta.accepted_steps == 0 {
        meta.min_step = 0.0;
    }
    Ok(Trajectory {
        sample_times: samples,
        states,
        metadata: meta,
    })
}
