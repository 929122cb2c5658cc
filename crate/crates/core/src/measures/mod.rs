//! Reconstructions of a particle configuration as densities and measures,
//! their distribution functions, and the distances between them.
//!
//! For positions `x_0 < … < x_N` with particle mass `ℓ` and `y_i = ℓ/(x_{i+1} − x_i)`:
//!
//! * [`hat_density`]: `ρ̂ = Σ y_i 1_[x_i, x_{i+1})`,
//! * [`empirical`]: `ρ̃ = ℓ Σ_{i<N} δ_{x_i}`,
//! * [`check_density`]: `ρ̌ = Σ y_i 1_[iℓ, (i+1)ℓ)` on the mass axis.
//!
//! The distance between two measures of equal mass `L` is
//! `∫ |F₁ − F₂| dx = ∫_0^L |X₁ − X₂| dz`, both evaluated in closed form.

mod monotone;

use std::io::Write;

use serde::Serialize;

pub use monotone::{MonotoneKind, PiecewiseMonotone};

use crate::error::{Error, Result};
use crate::initial_data::{InitialDatum, ParticleConfiguration};

/// Relative tolerance on the total masses compared by [`wasserstein`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A finite, non-negative measure on the line with a piecewise-linear CDF.
pub trait MassDistribution {
    fn total_mass(&self) -> f64;

    fn cdf(&self) -> PiecewiseMonotone;

    fn pseudo_inverse(&self) -> PiecewiseMonotone {
        self.cdf().invert()
    }
}

/// Non-negative density, constant on each `[b_j, b_{j+1})`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseConstantDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidDatum(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] >= w[0])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidDatum("breakpoints must be finite and non-decreasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDatum("values must be finite and >= 0".into()));
        }
        let mut b = vec![breakpoints[0]];
        let mut v = Vec::with_capacity(values.len());
        for (j, &val) in values.iter().enumerate() {
            if breakpoints[j + 1] > breakpoints[j] {
                b.push(breakpoints[j + 1]);
                v.push(val);
            }
        }
        if v.is_empty() {
            return Err(Error::InvalidDatum("support has zero length".into()));
        }
        Ok(Self {
            breakpoints: b,
            values: v,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.breakpoints[0] || x >= *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        self.values[self.breakpoints.partition_point(|&b| b <= x) - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Total variation on the whole line, jumps from and to zero included.
    pub fn total_variation(&self) -> f64 {
        padded_variation(&self.values)
    }

    /// Writes `x_left,x_right,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x_left,x_right,value")?;
        for (w, v) in self.breakpoints.windows(2).zip(&self.values) {
            writeln!(out, "{},{},{}", w[0], w[1], v)?;
        }
        Ok(())
    }
}

impl MassDistribution for PiecewiseConstantDensity {
    fn total_mass(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| v * (w[1] - w[0]))
            .sum()
    }

    fn cdf(&self) -> PiecewiseMonotone {
        let mut acc = CompensatedSum::default();
        let pieces = self
            .breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| {
                let start = acc.value();
                acc.add(v * (w[1] - w[0]));
                (start, acc.value())
            })
            .collect();
        PiecewiseMonotone::new(MonotoneKind::Cdf, self.breakpoints.clone(), pieces, 0.0, acc.value())
            .expect("cumulative sums of non-negative terms are monotone")
    }
}

impl MassDistribution for InitialDatum {
    fn total_mass(&self) -> f64 {
        self.mass()
    }

    fn cdf(&self) -> PiecewiseMonotone {
        let c = self.cumulative();
        let pieces = c.windows(2).map(|w| (w[0], w[1])).collect();
        PiecewiseMonotone::new(MonotoneKind::Cdf, self.breakpoints().to_vec(), pieces, 0.0, self.mass())
            .expect("cumulative masses are monotone")
    }
}

/// Atoms of equal weight at sorted positions, optionally followed by a
/// massless leader that closes the support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
    weight: f64,
    leader: Option<f64>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<f64>, weight: f64, leader: Option<f64>) -> Result<Self> {
        if atoms.is_empty() || !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidConfiguration(
                "empirical measure needs atoms and a positive weight".into(),
            ));
        }
        if atoms.windows(2).any(|w| !(w[1] >= w[0])) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfiguration("atoms must be finite and sorted".into()));
        }
        if let Some(l) = leader {
            if !(l >= *atoms.last().unwrap()) {
                return Err(Error::InvalidConfiguration("leader must follow the atoms".into()));
            }
        }
        Ok(Self {
            atoms,
            weight,
            leader,
        })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn leader(&self) -> Option<f64> {
        self.leader
    }
}

impl MassDistribution for EmpiricalMeasure {
    fn total_mass(&self) -> f64 {
        self.weight * self.atoms.len() as f64
    }

    fn cdf(&self) -> PiecewiseMonotone {
        // Coincident atoms collapse into one knot with the summed weight.
        let mut knots: Vec<f64> = Vec::with_capacity(self.atoms.len());
        let mut levels: Vec<f64> = Vec::with_capacity(self.atoms.len());
        for (k, &a) in self.atoms.iter().enumerate() {
            let level = self.weight * (k + 1) as f64;
            if knots.last() == Some(&a) {
                *levels.last_mut().unwrap() = level;
            } else {
                knots.push(a);
                levels.push(level);
            }
        }
        let after = levels.pop().unwrap();
        let pieces = levels.iter().map(|&l| (l, l)).collect();
        PiecewiseMonotone::new(MonotoneKind::Cdf, knots, pieces, 0.0, after)
            .expect("atoms are sorted")
    }

    /// `X̃`, extended by the leader position at `z = L` when one is present.
    fn pseudo_inverse(&self) -> PiecewiseMonotone {
        let x = self.cdf().invert();
        match self.leader {
            Some(l) => x.with_after(l),
            None => x,
        }
    }
}

/// Piecewise-constant density on the mass axis, `y_i` on `[iℓ, (i+1)ℓ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangianDensity {
    ell: f64,
    values: Vec<f64>,
}

impl LagrangianDensity {
    pub fn new(ell: f64, values: Vec<f64>) -> Result<Self> {
        if !(ell > 0.0) || values.is_empty() {
            return Err(Error::InvalidConfiguration(
                "Lagrangian density needs ℓ > 0 and at least one cell".into(),
            ));
        }
        Ok(Self { ell, values })
    }

    pub fn cell_mass(&self) -> f64 {
        self.ell
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        let k = (z / self.ell).floor() as usize;
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// Total variation in the mass variable, jumps at both ends included.
    pub fn total_variation(&self) -> f64 {
        padded_variation(&self.values)
    }

    /// `∫ |ρ̌₁ − ρ̌₂| dz` for two densities on the same cells.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.values.len() != other.values.len() || self.ell != other.ell {
            return Err(Error::InvalidConfiguration(
                "Lagrangian densities live on different cells".into(),
            ));
        }
        Ok(self.ell
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Writes `z_left,z_right,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z_left,z_right,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", i as f64 * self.ell, (i + 1) as f64 * self.ell, v)?;
        }
        Ok(())
    }
}

/// Neumaier summation: the rounding error of a running sum stays at one ulp
/// of the sum instead of growing with the number of terms.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.compensation += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `|v_0| + Σ |v_{i+1} − v_i| + |v_last|`.
pub(crate) fn padded_variation(values: &[f64]) -> f64 {
    let inner: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    values[0].abs() + inner + values.last().unwrap().abs()
}

/// `ρ̂`.
pub fn hat_density(config: &ParticleConfiguration) -> PiecewiseConstantDensity {
    PiecewiseConstantDensity {
        breakpoints: config.positions().to_vec(),
        values: config.discrete_densities(),
    }
}

/// `ρ̃`, with the leader kept for the pseudo-inverse at `z = L`.
pub fn empirical(config: &ParticleConfiguration) -> EmpiricalMeasure {
    let x = config.positions();
    EmpiricalMeasure {
        atoms: x[..x.len() - 1].to_vec(),
        weight: config.mass_per_particle(),
        leader: Some(config.leader()),
    }
}

/// `ρ̌`.
pub fn check_density(config: &ParticleConfiguration) -> LagrangianDensity {
    LagrangianDensity {
        ell: config.mass_per_particle(),
        values: config.discrete_densities(),
    }
}

fn masses_agree(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > MASS_TOLERANCE * a.abs().max(b.abs()) {
        return Err(Error::MassMismatch { left: a, right: b });
    }
    Ok(())
}

/// `∫ |F₁ − F₂| dx`. Errors when the total masses differ by more than
/// [`MASS_TOLERANCE`] relative.
pub fn wasserstein(a: &dyn MassDistribution, b: &dyn MassDistribution) -> Result<f64> {
    masses_agree(a.total_mass(), b.total_mass())?;
    let (fa, fb) = (a.cdf(), b.cdf());
    let lo = fa.first_knot().min(fb.first_knot());
    let hi = fa.last_knot().max(fb.last_knot());
    Ok(fa.l1_between(&fb, lo, hi))
}

/// `∫_0^L |X₁ − X₂| dz`; agrees with [`wasserstein`].
pub fn wasserstein_quantile(a: &dyn MassDistribution, b: &dyn MassDistribution) -> Result<f64> {
    let (la, lb) = (a.total_mass(), b.total_mass());
    masses_agree(la, lb)?;
    let (xa, xb) = (a.pseudo_inverse(), b.pseudo_inverse());
    Ok(xa.l1_between(&xb, 0.0, la.min(lb)))
}

/// `∫ |ρ₁ − ρ₂| dx` for two piecewise-constant densities.
pub fn l1_distance(a: &PiecewiseConstantDensity, b: &PiecewiseConstantDensity) -> f64 {
    let mut grid: Vec<f64> = a.breakpoints.iter().chain(&b.breakpoints).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.windows(2)
        .map(|w| (a.eval(w[0]) - b.eval(w[0])).abs() * (w[1] - w[0]))
        .sum()
}

/// Writes the completed graph of a pseudo-inverse as `z,X` rows (a jump
/// appears as two rows with the same `z`).
pub fn write_pseudo_inverse_csv<W: Write>(x: &PiecewiseMonotone, mut out: W) -> Result<()> {
    writeln!(out, "z,X")?;
    let verts = x.vertices();
    let mut last: Option<(f64, f64)> = None;
    for v in verts {
        if last != Some(v) {
            writeln!(out, "{},{}", v.0, v.1)?;
        }
        last = Some(v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(x: Vec<f64>, ell: f64) -> ParticleConfiguration {
        ParticleConfiguration::with_particle_mass(0.0, ell, x).unwrap()
    }

    #[test]
    fn single_cell_reconstructions() {
        let c = config(vec![0.0, 1.0], 0.5);
        let h = hat_density(&c);
        assert_eq!(h.values(), &[0.5]);
        assert_eq!(h.cdf().eval(0.5), 0.25);
        assert_eq!(h.total_mass(), 0.5);
        let e = empirical(&c);
        assert_eq!(e.cdf().eval(0.0), 0.5);
        assert_eq!(e.cdf().left_limit(0.0), 0.0);
        // ∫_0^1 (0.5 − 0.5x) dx
        assert!((wasserstein(&h, &e).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pseudo_inverses() {
        let c = config(vec![0.0, 1.0, 3.0], 0.5);
        let xh = hat_density(&c).pseudo_inverse();
        assert!((xh.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((xh.eval(0.75) - 2.0).abs() < 1e-15);
        let xe = empirical(&c).pseudo_inverse();
        assert_eq!(xe.eval(0.25), 0.0);
        assert_eq!(xe.eval(0.5), 1.0);
        assert_eq!(xe.eval(1.0), 3.0);
        assert_eq!(xh.eval(1.0), 3.0);
    }

    #[test]
    fn interleaving_identity() {
        let c = config(vec![-1.0, 0.0, 0.5, 2.0, 2.1], 0.25);
        let w = wasserstein(&hat_density(&c), &empirical(&c)).unwrap();
        assert!((w - 0.125 * 3.1).abs() < 1e-14);
    }

    #[test]
    fn hat_cdf_lies_below_empirical_cdf() {
        let c = config(vec![0.0, 0.3, 0.4, 1.0], 1.0 / 3.0);
        let (fh, fe) = (hat_density(&c).cdf(), empirical(&c).cdf());
        for k in 0..=200 {
            let x = -0.25 + k as f64 * 0.0075;
            assert!(fh.eval(x) <= fe.eval(x) + 1e-15);
        }
    }

    #[test]
    fn mass_mismatch_is_an_error() {
        let a = config(vec![0.0, 1.0], 0.5);
        let b = config(vec![0.0, 1.0], 0.6);
        assert!(matches!(
            wasserstein(&hat_density(&a), &hat_density(&b)),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn translation_distance() {
        let a = PiecewiseConstantDensity::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        let b = PiecewiseConstantDensity::new(vec![0.3, 1.3], vec![1.0]).unwrap();
        assert!((wasserstein(&a, &b).unwrap() - 0.3).abs() < 1e-15);
        assert!((wasserstein_quantile(&a, &b).unwrap() - 0.3).abs() < 1e-15);
        assert!((l1_distance(&a, &b) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn datum_cdf_matches_cumulative_mass() {
        let d = InitialDatum::from_piecewise(vec![0.0, 0.5, 1.5, 2.0], vec![0.8, 0.0, 0.6]).unwrap();
        let f = d.cdf();
        for k in 0..=40 {
            let x = -0.5 + k as f64 * 0.075;
            assert!((f.eval(x) - d.cumulative_mass(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn variations() {
        let c = config(vec![0.0, 1.0, 1.5], 0.5);
        // y = (0.5, 1.0): 0.5 + 0.5 + 1.0
        assert_eq!(hat_density(&c).total_variation(), 2.0);
        assert_eq!(check_density(&c).total_variation(), 2.0);
    }

    #[test]
    fn lagrangian_density_on_mass_axis() {
        let c = config(vec![0.0, 1.0, 1.5], 0.5);
        let r = check_density(&c);
        assert_eq!(r.eval(0.25), 0.5);
        assert_eq!(r.eval(0.75), 1.0);
        assert_eq!(r.eval(1.0), 0.0);
        let s = check_density(&config(vec![0.0, 2.0, 2.5], 0.5));
        assert_eq!(r.l1_distance(&s).unwrap(), 0.125);
    }

    #[test]
    fn csv_exports() {
        let c = config(vec![0.0, 1.0, 3.0], 0.5);
        let mut buf = Vec::new();
        hat_density(&c).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x_left,x_right,value\n0,1,0.5\n1,3,0.25\n");
        let mut buf = Vec::new();
        write_pseudo_inverse_csv(&empirical(&c).pseudo_inverse(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "z,X\n0,0\n0.5,0\n0.5,1\n1,1\n1,3\n");
    }
}
