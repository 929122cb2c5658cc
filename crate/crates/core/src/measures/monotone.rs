//! Right-continuous, non-decreasing, piecewise-linear functions.
//!
//! Both cumulative distribution functions and their pseudo-inverses fall in
//! this class, and the map between them is a swap of the axes of the completed
//! graph: jumps become flat pieces, flat pieces become jumps and sloped pieces
//! stay sloped.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneKind {
    /// `F(x)`, mass to the left of `x`.
    Cdf,
    /// `X(z) = inf{x : F(x) > z}`.
    PseudoInverse,
}

impl MonotoneKind {
    fn dual(self) -> Self {
        match self {
            Self::Cdf => Self::PseudoInverse,
            Self::PseudoInverse => Self::Cdf,
        }
    }
}

/// A function equal to `before` left of the first knot, to `after` from the
/// last knot on, and linear on each open interval `(t_j, t_{j+1})` from the
/// right limit `pieces[j].0` to the left limit `pieces[j].1`.
/// At a knot the function takes its right limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseMonotone {
    kind: MonotoneKind,
    knots: Vec<f64>,
    pieces: Vec<(f64, f64)>,
    before: f64,
    after: f64,
}

impl PiecewiseMonotone {
    /// Zero-length intervals are dropped. Fails when the data are not
    /// non-decreasing.
    pub fn new(
        kind: MonotoneKind,
        knots: Vec<f64>,
        pieces: Vec<(f64, f64)>,
        before: f64,
        after: f64,
    ) -> Result<Self> {
        if knots.is_empty() || pieces.len() + 1 != knots.len() {
            return Err(Error::NotMonotone(format!(
                "{} knots for {} pieces",
                knots.len(),
                pieces.len()
            )));
        }
        let mut k = Vec::with_capacity(knots.len());
        let mut p = Vec::with_capacity(pieces.len());
        k.push(knots[0]);
        for (j, piece) in pieces.iter().enumerate() {
            if knots[j + 1] > knots[j] {
                k.push(knots[j + 1]);
                p.push(*piece);
            } else if knots[j + 1] < knots[j] {
                return Err(Error::NotMonotone(format!(
                    "knots decrease at index {}",
                    j + 1
                )));
            }
        }
        let f = Self {
            kind,
            knots: k,
            pieces: p,
            before,
            after,
        };
        f.check_monotone()?;
        Ok(f)
    }

    fn check_monotone(&self) -> Result<()> {
        let values = self.vertices();
        if values.iter().any(|(t, v)| !(t.is_finite() && v.is_finite())) {
            return Err(Error::NotMonotone("non-finite value".into()));
        }
        if let Some(w) = values.windows(2).find(|w| w[1].1 < w[0].1) {
            return Err(Error::NotMonotone(format!(
                "value drops from {} to {} at {}",
                w[0].1, w[1].1, w[1].0
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> MonotoneKind {
        self.kind
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn before(&self) -> f64 {
        self.before
    }

    pub fn after(&self) -> f64 {
        self.after
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub(crate) fn with_after(mut self, after: f64) -> Self {
        self.after = after;
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.knots[0] {
            return self.before;
        }
        let j = self.knots.partition_point(|&k| k <= t);
        if j == self.knots.len() {
            return self.after;
        }
        self.linear(j - 1, t)
    }

    pub fn left_limit(&self, t: f64) -> f64 {
        if t <= self.knots[0] {
            return self.before;
        }
        let j = self.knots.partition_point(|&k| k < t);
        if j == self.knots.len() {
            return self.after;
        }
        self.linear(j - 1, t)
    }

    fn linear(&self, j: usize, t: f64) -> f64 {
        let (a, b) = self.pieces[j];
        let (t0, t1) = (self.knots[j], self.knots[j + 1]);
        if t == t0 {
            return a;
        }
        a + (b - a) * (t - t0) / (t1 - t0)
    }

    /// Vertices of the completed graph, jumps included, left to right.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::with_capacity(2 * self.knots.len());
        v.push((self.knots[0], self.before));
        for (j, &(a, b)) in self.pieces.iter().enumerate() {
            v.push((self.knots[j], a));
            v.push((self.knots[j + 1], b));
        }
        v.push((self.last_knot(), self.after));
        v
    }

    /// Generalized inverse, obtained by swapping the axes of the completed
    /// graph. Inverting twice returns the original function.
    pub fn invert(&self) -> Self {
        let verts = self.vertices();
        let mut knots = Vec::with_capacity(verts.len());
        let mut pieces = Vec::with_capacity(verts.len());
        for w in verts.windows(2) {
            let ((x0, z0), (x1, z1)) = (w[0], w[1]);
            if z1 > z0 {
                if knots.is_empty() {
                    knots.push(z0);
                }
                pieces.push((x0, x1));
                knots.push(z1);
            }
        }
        if knots.is_empty() {
            // A constant function: its inverse jumps across the whole range.
            knots.push(self.before);
        }
        Self {
            kind: self.kind.dual(),
            knots,
            pieces,
            before: self.knots[0],
            after: self.last_knot(),
        }
    }

    /// `∫_lo^hi |self − other|`, exact for piecewise-linear integrands.
    pub fn l1_between(&self, other: &Self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let mut grid: Vec<f64> = self
            .knots
            .iter()
            .chain(&other.knots)
            .copied()
            .filter(|&t| t > lo && t < hi)
            .collect();
        grid.push(lo);
        grid.push(hi);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let da = self.eval(a) - other.eval(a);
                let db = self.left_limit(b) - other.left_limit(b);
                abs_linear_integral(da, db, b - a)
            })
            .sum()
    }
}

/// `∫_0^h |p(s)| ds` for `p` linear with `p(0) = a`, `p(h) = b`.
fn abs_linear_integral(a: f64, b: f64, h: f64) -> f64 {
    if a * b >= 0.0 {
        0.5 * h * (a.abs() + b.abs())
    } else {
        0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_cdf() -> PiecewiseMonotone {
        // Atoms of weight 0.5 at 0 and 1.
        PiecewiseMonotone::new(
            MonotoneKind::Cdf,
            vec![0.0, 1.0],
            vec![(0.5, 0.5)],
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let f = step_cdf();
        assert_eq!(f.eval(-0.1), 0.0);
        assert_eq!(f.eval(0.0), 0.5);
        assert_eq!(f.left_limit(0.0), 0.0);
        assert_eq!(f.eval(0.7), 0.5);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.left_limit(1.0), 0.5);
    }

    #[test]
    fn inverse_of_step_function() {
        let x = step_cdf().invert();
        assert_eq!(x.kind(), MonotoneKind::PseudoInverse);
        assert_eq!(x.eval(0.0), 0.0);
        assert_eq!(x.eval(0.49), 0.0);
        // inf{x : F(x) > 0.5} = 1
        assert_eq!(x.eval(0.5), 1.0);
        assert_eq!(x.eval(0.99), 1.0);
        assert_eq!(x.invert(), step_cdf());
    }

    #[test]
    fn inverse_of_ramp_with_plateau() {
        // Uniform mass 0.5 on [0,1] and on [2,3].
        let f = PiecewiseMonotone::new(
            MonotoneKind::Cdf,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![(0.0, 0.5), (0.5, 0.5), (0.5, 1.0)],
            0.0,
            1.0,
        )
        .unwrap();
        let x = f.invert();
        assert_eq!(x.knots(), &[0.0, 0.5, 1.0]);
        assert_eq!(x.eval(0.25), 0.5);
        assert_eq!(x.left_limit(0.5), 1.0);
        assert_eq!(x.eval(0.5), 2.0);
        assert_eq!(x.eval(0.75), 2.5);
        assert_eq!(x.invert(), f);
    }

    #[test]
    fn zero_length_intervals_are_dropped() {
        let f = PiecewiseMonotone::new(
            MonotoneKind::Cdf,
            vec![0.0, 0.0, 1.0],
            vec![(0.0, 0.0), (0.0, 1.0)],
            0.0,
            1.0,
        )
        .unwrap();
        assert_eq!(f.knots(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_decreasing_data() {
        assert!(PiecewiseMonotone::new(MonotoneKind::Cdf, vec![0.0, 1.0], vec![(0.5, 0.4)], 0.0, 1.0).is_err());
        assert!(PiecewiseMonotone::new(MonotoneKind::Cdf, vec![1.0, 0.0], vec![(0.0, 1.0)], 0.0, 1.0).is_err());
        assert!(PiecewiseMonotone::new(MonotoneKind::Cdf, vec![0.0, 1.0], vec![(0.0, 1.0)], 0.0, 0.5).is_err());
    }

    #[test]
    fn l1_of_crossing_lines() {
        // |x − (1 − x)| on [0, 1] integrates to 1/2.
        let up = PiecewiseMonotone::new(MonotoneKind::Cdf, vec![0.0, 1.0], vec![(0.0, 1.0)], 0.0, 1.0).unwrap();
        let flat = PiecewiseMonotone::new(MonotoneKind::Cdf, vec![-1.0, 2.0], vec![(0.5, 0.5)], 0.0, 1.0).unwrap();
        assert!((up.l1_between(&flat, 0.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((abs_linear_integral(-1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(abs_linear_integral(1.0, 3.0, 2.0), 4.0);
    }
}
