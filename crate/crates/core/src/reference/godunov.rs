use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::InitialDatum;
use crate::measures::{CompensatedSum, PiecewiseConstantDensity};
use crate::velocity::{uniform_grid, VelocityModel};

/// Relative tolerance on mass conservation per step.
pub const MASS_TOLERANCE: f64 = 1e-12;
const GOLDEN_TOLERANCE: f64 = 1e-13;
const SPEED_SAMPLES: usize = 2001;

/// Maximum of a concave `f` on `[a, b]` by golden-section search.
fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOLERANCE * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let best = [f(a)?, f(b)?, fc, fd];
    Ok(best.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Godunov numerical flux: `min_{[ρ_l, ρ_r]} f` if `ρ_l ≤ ρ_r`, otherwise
/// `max_{[ρ_r, ρ_l]} f`.
pub fn godunov_flux(model: &VelocityModel, rho_l: f64, rho_r: f64) -> Result<f64> {
    let (fl, fr) = (model.flux(rho_l)?, model.flux(rho_r)?);
    if rho_l <= rho_r {
        // A concave function attains its minimum at an endpoint.
        return Ok(fl.min(fr));
    }
    let (lo, hi) = (rho_r, rho_l);
    match model.flux_argmax() {
        Some(m) if m <= lo => Ok(fr),
        Some(m) if m >= hi => Ok(fl),
        Some(m) => model.flux(m),
        None => Ok(golden_max(|r| model.flux(r), lo, hi)?.max(fl).max(fr)),
    }
}

/// Uniform finite-volume grid with its cell averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GodunovGrid {
    pub left: f64,
    pub dx: f64,
    pub averages: Vec<f64>,
    pub cfl: f64,
}

impl GodunovGrid {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.averages.len())
            .map(|k| self.left + k as f64 * self.dx)
            .collect()
    }

    pub fn mass(&self) -> f64 {
        let mut sum = CompensatedSum::default();
        for &u in &self.averages {
            sum.add(u);
        }
        sum.value() * self.dx
    }

    pub fn density(&self) -> Result<PiecewiseConstantDensity> {
        PiecewiseConstantDensity::new(self.edges(), self.averages.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GodunovRun {
    pub grid: GodunovGrid,
    pub time: f64,
    pub steps: usize,
    pub dt: f64,
    /// Largest relative mass drift over all steps.
    pub max_mass_drift: f64,
}

/// Largest `|f'|` on a uniform sample of `[0, r]`.
pub fn max_characteristic_speed(model: &VelocityModel, r: f64) -> Result<f64> {
    let grid = uniform_grid(0.0, r.max(f64::MIN_POSITIVE), SPEED_SAMPLES);
    let mut m: f64 = 0.0;
    for rho in grid {
        m = m.max(model.flux_derivative(rho)?.abs());
    }
    Ok(m)
}

/// First-order Godunov scheme on `[x̄_min − pad, x̄_max + pad]`, with the
/// padding wide enough that no wave reaches the boundary before `t_end`.
pub fn godunov(datum: &InitialDatum, model: &VelocityModel, dx: f64, cfl: f64, t_end: f64) -> Result<GodunovRun> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::Config(format!("dx must be > 0, got {dx}")));
    }
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(Error::Config(format!("cfl must lie in (0, 1), got {cfl}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Config(format!("t_end must be >= 0, got {t_end}")));
    }
    let r = datum.sup_norm();
    let vmax = model.v_max();
    let pad_min = (vmax.abs() + model.eval(r)?.abs() + vmax) * t_end;
    let pad = ((pad_min / dx).ceil() + 2.0) * dx;
    let (x_min, x_max) = datum.support_hull();
    let left = x_min - pad;
    let cells = ((x_max + pad - left) / dx).ceil() as usize;
    let mut averages = Vec::with_capacity(cells);
    for k in 0..cells {
        let a = left + k as f64 * dx;
        averages.push(datum.mass_between(a, a + dx)? / dx);
    }
    let grid = GodunovGrid {
        left,
        dx,
        averages,
        cfl,
    };
    evolve(grid, model, r, t_end)
}

/// Advances cell averages with zero flux through the outer boundaries.
pub fn evolve(mut grid: GodunovGrid, model: &VelocityModel, r: f64, t_end: f64) -> Result<GodunovRun> {
    let speed = max_characteristic_speed(model, r)?;
    let dt = if speed > 0.0 {
        grid.cfl * grid.dx / speed
    } else {
        f64::INFINITY
    };
    let mass0 = grid.mass();
    let n = grid.averages.len();
    let mut fluxes = vec![0.0; n + 1];
    let mut t = 0.0;
    let mut steps = 0;
    let mut drift: f64 = 0.0;
    while t < t_end {
        let h = dt.min(t_end - t);
        if h < 1e-14 * t_end.max(1.0) && t_end - t > h {
            return Err(Error::IntegrationFailure {
                time: t,
                step: h,
                reason: "Godunov time step underflow".into(),
                positions: Vec::new(),
            });
        }
        for j in 1..n {
            fluxes[j] = godunov_flux(model, grid.averages[j - 1], grid.averages[j])?;
        }
        let ratio = h / grid.dx;
        for j in 0..n {
            grid.averages[j] -= ratio * (fluxes[j + 1] - fluxes[j]);
        }
        t = if h >= t_end - t { t_end } else { t + h };
        steps += 1;
        if mass0 > 0.0 {
            let d = (grid.mass() - mass0).abs() / mass0;
            drift = drift.max(d);
            if d > MASS_TOLERANCE {
                return Err(Error::MassMismatch {
                    left: mass0,
                    right: grid.mass(),
                });
            }
        }
    }
    Ok(GodunovRun {
        grid,
        time: t,
        steps,
        dt: if dt.is_finite() { dt } else { 0.0 },
        max_mass_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{l1_distance, MassDistribution};
    use crate::reference::riemann::ExactSolution;

    fn g() -> VelocityModel {
        VelocityModel::greenshields(1.0).unwrap()
    }

    #[test]
    fn flux_examples() {
        assert!((godunov_flux(&g(), 0.2, 0.8).unwrap() - 0.16).abs() < 1e-15);
        assert_eq!(godunov_flux(&g(), 0.8, 0.2).unwrap(), 0.25);
        assert_eq!(godunov_flux(&g(), 0.3, 0.3).unwrap(), g().flux(0.3).unwrap());
        // Fan not containing the sonic point.
        assert_eq!(godunov_flux(&g(), 0.4, 0.1).unwrap(), g().flux(0.4).unwrap());
    }

    #[test]
    fn golden_section_matches_closed_form() {
        let tab = VelocityModel::tabulated(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0]).unwrap();
        let f = godunov_flux(&tab, 0.9, 0.1).unwrap();
        assert!((f - 0.25).abs() < 1e-12);
        let pm = VelocityModel::pipes_munjal(1.0, 2.0).unwrap();
        let m = (1.0f64 / 3.0).sqrt();
        assert_eq!(godunov_flux(&pm, 0.9, 0.1).unwrap(), pm.flux(m).unwrap());
    }

    #[test]
    fn zero_datum_stays_zero() {
        let grid = GodunovGrid {
            left: 0.0,
            dx: 0.1,
            averages: vec![0.0; 10],
            cfl: 0.5,
        };
        let run = evolve(grid, &g(), 1.0, 1.0).unwrap();
        assert!(run.grid.averages.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn constant_interior_is_preserved() {
        let d = InitialDatum::from_piecewise(vec![0.0, 4.0], vec![0.3]).unwrap();
        let run = godunov(&d, &g(), 0.05, 0.5, 0.2).unwrap();
        for (x, u) in run.grid.edges().iter().zip(&run.grid.averages) {
            if *x > 1.0 && *x < 3.0 {
                assert!((u - 0.3).abs() < 1e-14);
            }
        }
        assert!((run.grid.mass() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn converges_to_riemann_solution() {
        let d = InitialDatum::from_piecewise(vec![-1.0, 0.0, 1.0], vec![0.8, 0.2]).unwrap();
        let exact = ExactSolution::new(&d, &g()).unwrap();
        let mut prev = f64::INFINITY;
        for dx in [0.04, 0.02, 0.01] {
            let run = godunov(&d, &g(), dx, 0.5, 0.5).unwrap();
            let rho = run.grid.density().unwrap();
            assert!((rho.total_mass() - 1.0).abs() < 1e-12);
            assert!(run.grid.averages.iter().all(|&u| (-1e-14..=0.8 + 1e-12).contains(&u)));
            let err = exact.l1_error(&rho, 0.5).unwrap();
            assert!(err < prev, "{err} !< {prev}");
            prev = err;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = InitialDatum::from_piecewise(vec![0.0, 1.0], vec![0.5]).unwrap();
        assert!(godunov(&d, &g(), 0.0, 0.5, 1.0).is_err());
        assert!(godunov(&d, &g(), 0.1, 1.0, 1.0).is_err());
        let run = godunov(&d, &g(), 0.1, 0.5, 0.0).unwrap();
        let initial = PiecewiseConstantDensity::new(vec![0.0, 1.0], vec![0.5]).unwrap();
        assert!(l1_distance(&run.grid.density().unwrap(), &initial) < 1e-15);
    }
}
