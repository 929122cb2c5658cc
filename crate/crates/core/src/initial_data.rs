//! Piecewise-constant initial data and their equal-mass atomization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A compactly supported, nonnegative, piecewise-constant density.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// Cumulative mass at each breakpoint; `cumulative[0] = 0`.
    cumulative: Vec<f64>,
    mass: f64,
    sup_norm: f64,
    x_min: f64,
    x_max: f64,
}

impl InitialDatum {
    /// Builds a datum from `values.len()` intervals delimited by `breakpoints`.
    pub fn from_piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidDatum(format!(
                "expected {} breakpoints for {} values, got {}",
                values.len() + 1,
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidDatum("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDatum(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDatum(
                "densities must be finite and nonnegative".into(),
            ));
        }

        let mut cumulative = Vec::with_capacity(breakpoints.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            acc += v * (breakpoints[k + 1] - breakpoints[k]);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidDatum("total mass must be positive".into()));
        }

        let first = values.iter().position(|&v| v > 0.0).unwrap();
        let last = values.iter().rposition(|&v| v > 0.0).unwrap();
        let sup_norm = values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            x_min: breakpoints[first],
            x_max: breakpoints[last + 1],
            breakpoints,
            values,
            cumulative,
            mass: acc,
            sup_norm,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total mass `L`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `R = ‖ρ̄‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Convex hull of the support, `[x̄_min, x̄_max]`.
    pub fn support_hull(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn support_span(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Density at `x` (right-continuous).
    pub fn density_at(&self, x: f64) -> f64 {
        if x < self.breakpoints[0] || x >= *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.values[k]
    }

    /// `∫_{−∞}^x ρ̄`.
    pub fn cumulative_mass(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if x <= b[0] {
            return 0.0;
        }
        if x >= *b.last().unwrap() {
            return self.mass;
        }
        let k = b.partition_point(|&p| p <= x) - 1;
        self.cumulative[k] + self.values[k] * (x - b[k])
    }

    /// Exact `∫_a^b ρ̄ dx`.
    pub fn mass_between(&self, a: f64, b: f64) -> Result<f64> {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::Domain {
                quantity: "interval",
                value: a,
                expected: "a <= b",
            });
        }
        // Summing pieces avoids cancellation between two large cumulative masses.
        let bp = &self.breakpoints;
        let mut total = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let lo = a.max(bp[k]);
            let hi = b.min(bp[k + 1]);
            if hi > lo {
                total += v * (hi - lo);
            }
        }
        Ok(total)
    }

    /// Cumulative masses at the breakpoints.
    pub(crate) fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Smallest `x` with `∫_{−∞}^x ρ̄ ≥ level`, for `0 < level < L`.
    ///
    /// This is `sup{x : ∫ < level}`: on a vacuum plateau the left edge is
    /// returned.
    fn level_crossing(&self, level: f64) -> f64 {
        let b = &self.breakpoints;
        let c = &self.cumulative;
        // First interval whose right cumulative mass reaches the level. It has
        // c[k] < level, hence positive mass, except when rounding pushes the
        // level past the total.
        let last_positive = self.values.iter().rposition(|&v| v > 0.0).unwrap();
        let k = c[1..].partition_point(|&m| m < level).min(last_positive);
        let x = b[k] + (level - c[k]) / self.values[k];
        x.clamp(b[k], b[k + 1])
    }

    /// Equal-mass atomization into `n` particles of mass `L/n` (`n + 1`
    /// positions). `x̄_0 = x̄_min`, `x̄_n = x̄_max`, and each intermediate
    /// position is the first point where the cumulative mass reaches `i·ℓ`.
    pub fn atomize(&self, n: usize) -> Result<ParticleConfiguration> {
        if n < 2 {
            return Err(Error::InvalidConfiguration(format!(
                "atomization needs at least 2 particles, got {n}"
            )));
        }
        let ell = self.mass / n as f64;
        let mut positions = Vec::with_capacity(n + 1);
        positions.push(self.x_min);
        for i in 1..n {
            positions.push(self.level_crossing(i as f64 * ell));
        }
        positions.push(self.x_max);
        ParticleConfiguration::new(0.0, self.mass, positions)
    }
}

/// Ordered particle positions `x_0 < … < x_N` at time `t`, each particle
/// carrying mass `ℓ = L/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfiguration {
    time: f64,
    total_mass: f64,
    mass_per_particle: f64,
    positions: Vec<f64>,
}

impl ParticleConfiguration {
    /// `total_mass` is the mass `L` of the generating datum; `ℓ = L/N`.
    pub fn new(time: f64, total_mass: f64, positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidConfiguration(
                "need at least two particles".into(),
            ));
        }
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "total mass must be positive, got {total_mass}"
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "time must be >= 0, got {time}"
            )));
        }
        validate_positions(&positions)?;
        let n = positions.len() - 1;
        Ok(Self {
            time,
            total_mass,
            mass_per_particle: total_mass / n as f64,
            positions,
        })
    }

    /// Configuration with an explicit particle mass, `L = N·ℓ`.
    pub fn with_particle_mass(time: f64, ell: f64, positions: Vec<f64>) -> Result<Self> {
        let n = positions.len().saturating_sub(1) as f64;
        let mut c = Self::new(time, ell * n.max(1.0), positions)?;
        c.mass_per_particle = ell;
        Ok(c)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `ℓ`.
    pub fn mass_per_particle(&self) -> f64 {
        self.mass_per_particle
    }

    /// `L` of the generating datum.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Number of cells `N` (one less than the number of particles).
    pub fn cells(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn leader(&self) -> f64 {
        *self.positions.last().unwrap()
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }

    /// Discrete densities `y_i = ℓ / (x_{i+1} − x_i)`.
    pub fn discrete_densities(&self) -> Vec<f64> {
        self.gaps().map(|g| self.mass_per_particle / g).collect()
    }

    /// Maximum discrete density `max_i ℓ/(x_{i+1} − x_i)`.
    pub fn max_discrete_density(&self) -> f64 {
        self.discrete_densities().into_iter().fold(0.0, f64::max)
    }

    /// Same particles, new positions and time.
    pub fn advanced(&self, time: f64, positions: Vec<f64>) -> Result<Self> {
        validate_positions(&positions)?;
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidConfiguration(
                "particle count cannot change".into(),
            ));
        }
        Ok(Self {
            time,
            total_mass: self.total_mass,
            mass_per_particle: self.mass_per_particle,
            positions,
        })
    }
}

pub(crate) fn validate_positions(positions: &[f64]) -> Result<()> {
    if positions.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfiguration(
            "positions must be finite".into(),
        ));
    }
    if let Some(k) = positions.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfiguration(format!(
            "positions must be strictly increasing (x[{}] = {} >= x[{}] = {})",
            k,
            positions[k],
            k + 1,
            positions[k + 1]
        )));
    }
    Ok(())
}
