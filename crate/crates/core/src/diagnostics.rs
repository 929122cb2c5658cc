//! A-posteriori certification of the discrete estimates satisfied by the
//! particle system: maximum principle, one-sided Oleinik bound, total
//! variation contractivity, the uniform bound on `TV[v(ρ̂)]`, the time
//! continuity moduli and non-negativity of the entropy terms `K_i`.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::initial_data::{InitialDatum, ParticleConfiguration};
use crate::measures::{check_density, hat_density, padded_variation, wasserstein};
use crate::velocity::{uniform_grid, AssumptionReport, VelocityModel};

/// Relative slack on the Oleinik bounds, absorbing integration error.
pub const OLEINIK_TOLERANCE: f64 = 1e-6;
pub const GAP_RATIO_TOLERANCE: f64 = 1e-6;
pub const COROLLARY_TOLERANCE: f64 = 1e-8;
pub const TV_TOLERANCE: f64 = 1e-8;
pub const ATOMIZATION_TV_TOLERANCE: f64 = 1e-12;
pub const VELOCITY_TV_TOLERANCE: f64 = 1e-6;
pub const ENTROPY_TOLERANCE: f64 = 1e-12;
/// Number of entropy constants `k`, uniform on `[0, 1.2 R]`.
pub const ENTROPY_K_SAMPLES: usize = 50;
/// Grid size for the sampled velocity-law assumptions.
pub const ASSUMPTION_SAMPLES: usize = 2001;

/// `min_i (x_{i+1} − x_i) / (ℓ/R)`.
pub fn min_gap_ratio(config: &ParticleConfiguration, r: f64) -> f64 {
    let min = config.gaps().fold(f64::INFINITY, f64::min);
    min * r / config.mass_per_particle()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OleinikResidual {
    /// `z_i = t y_i (v(y_{i+1}) − v(y_i))` for `i ≤ N−2`.
    pub interior: Vec<f64>,
    /// `z_{N−1} = t y_{N−1} (v_max − v(y_{N−1}))`.
    pub leader: f64,
}

impl OleinikResidual {
    /// Largest interior term, `−∞` for a single cell.
    pub fn interior_max(&self) -> f64 {
        self.interior.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.interior_max().max(self.leader)
    }
}

pub fn oleinik_residual(config: &ParticleConfiguration, model: &VelocityModel) -> Result<OleinikResidual> {
    let t = config.time();
    let y = config.discrete_densities();
    let v = speeds(&y, model)?;
    let n = y.len();
    let interior = (0..n - 1).map(|i| t * y[i] * (v[i + 1] - v[i])).collect();
    let leader = t * y[n - 1] * (model.v_max() - v[n - 1]);
    Ok(OleinikResidual { interior, leader })
}

/// `max_i [v(y_{i+1}) − v(y_i) − (x_{i+1} − x_i)/t]` over `i ≤ N−2`, the
/// Oleinik bound restated on the velocity profile. `None` at `t = 0` or for a
/// single cell.
pub fn velocity_jump_residual(config: &ParticleConfiguration, model: &VelocityModel) -> Result<Option<f64>> {
    let t = config.time();
    if t <= 0.0 || config.cells() < 2 {
        return Ok(None);
    }
    let y = config.discrete_densities();
    let v = speeds(&y, model)?;
    let x = config.positions();
    Ok(Some(
        (0..y.len() - 1)
            .map(|i| v[i + 1] - v[i] - (x[i + 1] - x[i]) / t)
            .fold(f64::NEG_INFINITY, f64::max),
    ))
}

fn speeds(y: &[f64], model: &VelocityModel) -> Result<Vec<f64>> {
    y.iter().map(|&r| model.eval(r)).collect()
}

/// Total variation of `ρ̂`, jumps from and to vacuum included.
pub fn total_variation(config: &ParticleConfiguration) -> f64 {
    hat_density(config).total_variation()
}

/// Total variation of a piecewise-constant datum on the whole line.
pub fn datum_total_variation(datum: &InitialDatum) -> f64 {
    padded_variation(datum.values())
}

/// `TV[v(ρ̂)]` with the vacuum outside `[x_0, x_N)` moving at `v_max`.
pub fn velocity_total_variation(config: &ParticleConfiguration, model: &VelocityModel) -> Result<f64> {
    let v = speeds(&config.discrete_densities(), model)?;
    let vmax = model.v_max();
    let inner: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok((vmax - v[0]).abs() + inner + (vmax - v[v.len() - 1]).abs())
}

/// `C_δ = 3 (v_max − v(R)) + 2 (x̄_max − x̄_min)/δ`, with `R` the sup norm of the datum.
pub fn c_delta(model: &VelocityModel, datum: &InitialDatum, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain {
            quantity: "delta",
            value: delta,
            expected: "> 0",
        });
    }
    let spread = model.v_max() - model.eval(datum.sup_norm())?;
    Ok(3.0 * spread + 2.0 * datum.support_span() / delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityBvBound {
    pub c_delta: f64,
    /// `(t, TV[v(ρ̂(t))])` for each sample time `t ≥ δ`.
    pub values: Vec<(f64, f64)>,
}

impl VelocityBvBound {
    pub fn exceedances(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.values
            .iter()
            .filter(|(_, tv)| *tv > self.c_delta + VELOCITY_TV_TOLERANCE)
    }
}

pub fn bv_velocity_bound(
    trajectory: &Trajectory,
    model: &VelocityModel,
    delta: f64,
    datum: &InitialDatum,
) -> Result<VelocityBvBound> {
    let c = c_delta(model, datum, delta)?;
    let values = trajectory
        .states
        .iter()
        .filter(|s| s.time() >= delta)
        .map(|s| Ok((s.time(), velocity_total_variation(s, model)?)))
        .collect::<Result<_>>()?;
    Ok(VelocityBvBound { c_delta: c, values })
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `K_i = k [v(k) − v(y_i)] {sgn(y_i − k) − sgn(y_{i−1} − k)}` for
/// `i = 1 … N`, with `y_N = 0`.
pub fn entropy_k_terms(config: &ParticleConfiguration, model: &VelocityModel, k: f64) -> Result<Vec<f64>> {
    if !(k >= 0.0) {
        return Err(Error::Domain {
            quantity: "k",
            value: k,
            expected: ">= 0",
        });
    }
    let mut y = config.discrete_densities();
    y.push(0.0);
    let vk = model.eval(k)?;
    (1..y.len())
        .map(|i| Ok(k * (vk - model.eval(y[i])?) * (sgn(y[i] - k) - sgn(y[i - 1] - k))))
        .collect()
}

/// Smallest `K_i` over a uniform grid of `k` values.
pub fn entropy_min_k(config: &ParticleConfiguration, model: &VelocityModel, ks: &[f64]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for &k in ks {
        for kv in entropy_k_terms(config, model, k)? {
            min = min.min(kv);
        }
    }
    Ok(min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `R² (C_δ + v_max − v(R))`, the Lipschitz constant of `t ↦ ρ̌(t)` in `L¹` for `t ≥ δ`.
    pub l1_rate: f64,
    /// `2 L max{|v_max|, |v(R)|, v_max − v(R)}`.
    pub wasserstein_rate: f64,
    pub l1_pairs: usize,
    pub wasserstein_pairs: usize,
    /// Smallest `bound − value` over the checked pairs (`+∞` if none).
    pub l1_worst_slack: f64,
    pub wasserstein_worst_slack: f64,
}

impl ContinuityReport {
    pub fn holds(&self) -> bool {
        self.l1_worst_slack >= 0.0 && self.wasserstein_worst_slack >= 0.0
    }
}

/// Checks both time-continuity moduli on every pair of samples.
pub fn time_continuity_moduli(
    trajectory: &Trajectory,
    model: &VelocityModel,
    delta: f64,
    datum: &InitialDatum,
) -> Result<ContinuityReport> {
    let r = datum.sup_norm();
    let vmax = model.v_max();
    let vr = model.eval(r)?;
    let l1_rate = r * r * (c_delta(model, datum, delta)? + vmax - vr);
    let wasserstein_rate = 2.0 * datum.mass() * vmax.abs().max(vr.abs()).max(vmax - vr);

    let states = &trajectory.states;
    let hats: Vec<_> = states.iter().map(hat_density).collect();
    let checks: Vec<_> = states.iter().map(check_density).collect();
    let mut report = ContinuityReport {
        l1_rate,
        wasserstein_rate,
        l1_pairs: 0,
        wasserstein_pairs: 0,
        l1_worst_slack: f64::INFINITY,
        wasserstein_worst_slack: f64::INFINITY,
    };
    for a in 0..states.len() {
        for b in a + 1..states.len() {
            let dt = (states[b].time() - states[a].time()).abs();
            let w = wasserstein(&hats[a], &hats[b])?;
            report.wasserstein_pairs += 1;
            report.wasserstein_worst_slack = report.wasserstein_worst_slack.min(wasserstein_rate * dt - w);
            if states[a].time() >= delta && states[b].time() >= delta {
                let l1 = checks[a].l1_distance(&checks[b])?;
                report.l1_pairs += 1;
                report.l1_worst_slack = report.l1_worst_slack.min(l1_rate * dt - l1);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    LeaderLaw,
    MinGapRatio,
    MaxGap,
    LeftFront,
    OleinikInterior,
    OleinikLeader,
    VelocityJump,
    AtomizationTv,
    TvBound,
    TvMonotone,
    VelocityTv,
    EntropyK,
    L1Continuity,
    WassersteinContinuity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub time: f64,
    pub check: Check,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub time: f64,
    pub min_gap_ratio: f64,
    pub max_gap: f64,
    pub leader_error: f64,
    pub oleinik_max: f64,
    pub oleinik_leader: f64,
    pub velocity_jump_max: Option<f64>,
    pub tv_hat: f64,
    pub tv_v_hat: f64,
    pub c_delta: Option<f64>,
    pub entropy_min_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub cells: usize,
    pub mass_per_particle: f64,
    /// Largest initial discrete density.
    pub initial_max_density: f64,
    pub datum_sup_norm: f64,
    pub datum_tv: f64,
    pub delta: Option<f64>,
    pub assumptions: AssumptionReport,
    pub records: Vec<SampleRecord>,
    pub continuity: Option<ContinuityReport>,
    pub warnings: Vec<String>,
    pub violations: Vec<Violation>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, check: Check) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.check == check)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One row per sample time.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "t,min_gap_ratio,max_gap,leader_error,oleinik_max,oleinik_leader,velocity_jump_max,tv_hat,tv_v_hat,c_delta,entropy_min_k"
        )?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.time,
                r.min_gap_ratio,
                r.max_gap,
                r.leader_error,
                r.oleinik_max,
                r.oleinik_leader,
                opt(r.velocity_jump_max),
                r.tv_hat,
                r.tv_v_hat,
                opt(r.c_delta),
                r.entropy_min_k
            )?;
        }
        Ok(())
    }
}

/// Runs every check on a trajectory started from the atomization of `datum`.
///
/// The Oleinik, velocity-jump, `C_δ` and `L¹` continuity checks rely on
/// `ρ ↦ ρ v'(ρ)` being non-increasing on `[0, R]`; when the sampled check of
/// that property fails their exceedances are reported as warnings instead of
/// violations.
pub fn diagnose(
    trajectory: &Trajectory,
    model: &VelocityModel,
    datum: &InitialDatum,
    delta: Option<f64>,
) -> Result<DiagnosticsReport> {
    let initial = trajectory.initial();
    let ell = initial.mass_per_particle();
    let r0 = initial.max_discrete_density();
    let r = datum.sup_norm();
    let vmax = model.v_max();
    let v_r0 = model.eval(r0)?;
    let span0 = initial.leader() - initial.positions()[0];
    let x0_min = initial.positions()[0];
    let x_max = initial.leader();
    let leader_tol = 10.0 * trajectory.metadata.abs_tol;
    let datum_tv = datum_total_variation(datum);
    let c = delta.map(|d| c_delta(model, datum, d)).transpose()?;
    let ks = uniform_grid(0.0, 1.2 * r, ENTROPY_K_SAMPLES);

    let assumptions = model.check_assumptions(r, ASSUMPTION_SAMPLES)?;
    let v3 = assumptions.all_hold();
    let mut warnings = Vec::new();
    if !v3 {
        warnings.push(format!(
            "velocity law fails the sampled monotonicity assumptions on [0, {r}]; \
             Oleinik-type checks are advisory"
        ));
    }

    let mut violations = Vec::new();
    let mut soft = |violations: &mut Vec<Violation>, v: Violation| {
        if v3 {
            violations.push(v);
        } else {
            warnings.push(format!(
                "{:?} at t = {}: {} exceeds {}",
                v.check, v.time, v.value, v.bound
            ));
        }
    };

    let mut records = Vec::with_capacity(trajectory.states.len());
    let mut previous_tv: Option<f64> = None;
    for s in &trajectory.states {
        let t = s.time();
        let flag = |check, value: f64, bound: f64| Violation {
            time: t,
            check,
            value,
            bound,
        };

        let leader_error = (s.leader() - (x_max + vmax * t)).abs();
        if leader_error > leader_tol {
            violations.push(flag(Check::LeaderLaw, leader_error, leader_tol));
        }

        let ratio = min_gap_ratio(s, r0);
        if ratio < 1.0 - GAP_RATIO_TOLERANCE {
            violations.push(flag(Check::MinGapRatio, ratio, 1.0 - GAP_RATIO_TOLERANCE));
        }
        let max_gap = s.gaps().fold(0.0, f64::max);
        let gap_bound = span0 + (vmax - v_r0) * t;
        if max_gap > gap_bound * (1.0 + GAP_RATIO_TOLERANCE) {
            violations.push(flag(Check::MaxGap, max_gap, gap_bound));
        }
        let front = x0_min + v_r0 * t;
        let front_tol = GAP_RATIO_TOLERANCE * (1.0 + front.abs());
        if s.positions()[0] < front - front_tol {
            violations.push(flag(Check::LeftFront, s.positions()[0], front));
        }

        let ole = oleinik_residual(s, model)?;
        let ole_bound = ell * (1.0 + OLEINIK_TOLERANCE);
        if ole.interior_max() > ole_bound {
            soft(&mut violations, flag(Check::OleinikInterior, ole.interior_max(), ole_bound));
        }
        if ole.leader > ole_bound {
            soft(&mut violations, flag(Check::OleinikLeader, ole.leader, ole_bound));
        }
        let jump = velocity_jump_residual(s, model)?;
        if let Some(j) = jump {
            if j > COROLLARY_TOLERANCE {
                soft(&mut violations, flag(Check::VelocityJump, j, COROLLARY_TOLERANCE));
            }
        }

        let tv = total_variation(s);
        if t == 0.0 && tv > datum_tv + ATOMIZATION_TV_TOLERANCE {
            violations.push(flag(Check::AtomizationTv, tv, datum_tv + ATOMIZATION_TV_TOLERANCE));
        }
        if tv > datum_tv + TV_TOLERANCE {
            violations.push(flag(Check::TvBound, tv, datum_tv + TV_TOLERANCE));
        }
        if let Some(p) = previous_tv {
            if tv > p + TV_TOLERANCE {
                violations.push(flag(Check::TvMonotone, tv, p + TV_TOLERANCE));
            }
        }
        previous_tv = Some(tv);

        let tv_v = velocity_total_variation(s, model)?;
        let c_here = match (delta, c) {
            (Some(d), Some(c)) if t >= d => Some(c),
            _ => None,
        };
        if let Some(c) = c_here {
            if tv_v > c + VELOCITY_TV_TOLERANCE {
                soft(&mut violations, flag(Check::VelocityTv, tv_v, c + VELOCITY_TV_TOLERANCE));
            }
        }

        let k_min = entropy_min_k(s, model, &ks)?;
        if k_min < -ENTROPY_TOLERANCE {
            violations.push(flag(Check::EntropyK, k_min, -ENTROPY_TOLERANCE));
        }

        records.push(SampleRecord {
            time: t,
            min_gap_ratio: ratio,
            max_gap,
            leader_error,
            oleinik_max: ole.interior_max(),
            oleinik_leader: ole.leader,
            velocity_jump_max: jump,
            tv_hat: tv,
            tv_v_hat: tv_v,
            c_delta: c_here,
            entropy_min_k: k_min,
        });
    }

    let continuity = match delta {
        Some(d) if trajectory.states.len() >= 2 => {
            let rep = time_continuity_moduli(trajectory, model, d, datum)?;
            let t_end = trajectory.last().time();
            if rep.wasserstein_worst_slack < 0.0 {
                violations.push(Violation {
                    time: t_end,
                    check: Check::WassersteinContinuity,
                    value: -rep.wasserstein_worst_slack,
                    bound: 0.0,
                });
            }
            if rep.l1_worst_slack < 0.0 {
                soft(
                    &mut violations,
                    Violation {
                        time: t_end,
                        check: Check::L1Continuity,
                        value: -rep.l1_worst_slack,
                        bound: 0.0,
                    },
                );
            }
            Some(rep)
        }
        _ => None,
    };

    Ok(DiagnosticsReport {
        cells: initial.cells(),
        mass_per_particle: ell,
        initial_max_density: r0,
        datum_sup_norm: r,
        datum_tv,
        delta,
        assumptions,
        records,
        continuity,
        warnings,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorSettings};

    fn g() -> VelocityModel {
        VelocityModel::greenshields(1.0).unwrap()
    }

    fn pair(time: f64, x: Vec<f64>) -> ParticleConfiguration {
        ParticleConfiguration::with_particle_mass(time, 0.5, x).unwrap()
    }

    #[test]
    fn gap_ratio_examples() {
        let d = InitialDatum::from_piecewise(vec![0.0, 1.0], vec![0.7]).unwrap();
        let c = d.atomize(16).unwrap();
        assert!((min_gap_ratio(&c, 0.7) - 1.0).abs() < 1e-12);
        assert_eq!(min_gap_ratio(&pair(3.0, vec![2.0, 4.0]), 0.5), 2.0);
    }

    #[test]
    fn oleinik_examples() {
        let r = oleinik_residual(&pair(0.0, vec![0.0, 1.0, 1.5]), &g()).unwrap();
        assert!(r.interior.iter().all(|&z| z == 0.0));
        assert_eq!(r.leader, 0.0);
        // Two-particle state at t = 3: y = 0.25.
        let r = oleinik_residual(&pair(3.0, vec![2.0, 4.0]), &g()).unwrap();
        assert!(r.interior.is_empty());
        assert!((r.leader - 0.1875).abs() < 1e-15);
        let r = oleinik_residual(&pair(1.0, vec![0.0, 1.0, 2.0, 3.0]), &g()).unwrap();
        assert_eq!(r.interior, vec![0.0, 0.0]);
    }

    #[test]
    fn velocity_jump_examples() {
        // y = (0.5, 1): v drops from 0.5 to 0, residual = −0.5 − 1/t.
        let c = pair(2.0, vec![0.0, 1.0, 1.5]);
        assert!((velocity_jump_residual(&c, &g()).unwrap().unwrap() + 1.0).abs() < 1e-15);
        // y = (1, 0.5): v rises by 0.5 across a gap of 0.5.
        let c = pair(2.0, vec![0.0, 0.5, 1.5]);
        assert!((velocity_jump_residual(&c, &g()).unwrap().unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(velocity_jump_residual(&pair(0.0, vec![0.0, 0.5, 1.5]), &g()).unwrap(), None);
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&pair(0.0, vec![0.0, 1.0])), 1.0);
        // y = (1, 1/3)
        let c = ParticleConfiguration::with_particle_mass(0.0, 1.0, vec![0.0, 1.0, 4.0]).unwrap();
        assert!((total_variation(&c) - 2.0).abs() < 1e-15);
        // y = (1, 0.5, 0.25)
        let c = ParticleConfiguration::with_particle_mass(0.0, 1.0, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        assert_eq!(total_variation(&c), 2.0);
        assert_eq!(total_variation(&c), check_density(&c).total_variation());
    }

    #[test]
    fn c_delta_example() {
        let d = InitialDatum::from_piecewise(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(c_delta(&g(), &d, 0.5).unwrap(), 7.0);
        assert!(c_delta(&g(), &d, 0.0).is_err());
    }

    #[test]
    fn velocity_tv_of_uniform_state() {
        let c = ParticleConfiguration::with_particle_mass(0.0, 0.3, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((velocity_total_variation(&c, &g()).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        // y_0 = 0.8, y_1 = 0.2 with ℓ = 0.2: gaps 0.25 and 1.
        let c = ParticleConfiguration::with_particle_mass(0.0, 0.2, vec![0.0, 0.25, 1.25]).unwrap();
        let k = entropy_k_terms(&c, &g(), 0.5).unwrap();
        assert_eq!(k.len(), 2);
        assert!((k[0] - 0.3).abs() < 1e-15);
        // Leader term: y_1 = 0.2 < k, y_2 = 0 → both signs −1.
        assert_eq!(k[1], 0.0);
        assert!(entropy_k_terms(&c, &g(), 0.0).unwrap().iter().all(|&v| v == 0.0));
        let below = entropy_k_terms(&c, &g(), 0.1).unwrap();
        assert_eq!(below[0], 0.0);
        assert!(below[1] > 0.0);
        assert!(entropy_k_terms(&c, &g(), -0.1).is_err());
    }

    #[test]
    fn two_particle_run_passes_all_checks() {
        let d = InitialDatum::from_piecewise(vec![0.0, 1.0], vec![1.0]).unwrap();
        let c = d.atomize(2).unwrap();
        let traj = integrate(&c, &g(), 1.1, &IntegratorSettings::default(), &[0.1, 1.1]).unwrap();
        let rep = time_continuity_moduli(&traj, &g(), 0.1, &d).unwrap();
        assert_eq!(rep.l1_pairs, 1);
        assert_eq!(rep.wasserstein_pairs, 3);
        assert!(rep.holds());
        let report = diagnose(&traj, &g(), &d, Some(0.1)).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert_eq!(report.records.len(), 3);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let d = InitialDatum::from_piecewise(vec![0.0, 1.0], vec![1.0]).unwrap();
        let c = d.atomize(4).unwrap();
        let traj = integrate(&c, &g(), 0.0, &IntegratorSettings::default(), &[]).unwrap();
        let rep = time_continuity_moduli(&traj, &g(), 0.0, &d);
        // δ = 0 makes C_δ undefined.
        assert!(rep.is_err());
    }
}
