//! Named initial data used by the experiment harness.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::initial_data::InitialDatum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Constant density on `[left, right]`.
    Box {
        #[serde(default = "one")]
        height: f64,
        #[serde(default)]
        left: f64,
        #[serde(default = "one")]
        right: f64,
    },
    /// Two boxes separated by a vacuum gap.
    DoubleHump {
        #[serde(default = "default_hump_left")]
        left_height: f64,
        #[serde(default = "default_hump_right")]
        right_height: f64,
        #[serde(default = "default_hump_width")]
        width: f64,
        #[serde(default = "one")]
        gap: f64,
    },
    /// A tall box on `[−width, 0]` abutting a short box on `[0, width]`.
    RiemannLike {
        #[serde(default = "default_riemann_left")]
        left_density: f64,
        #[serde(default = "default_riemann_right")]
        right_density: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Consecutive steps of equal width, starting at 0.
    SawtoothBv {
        #[serde(default = "default_levels")]
        levels: Vec<f64>,
        #[serde(default = "default_step_width")]
        width: f64,
    },
    /// Explicit breakpoints and per-interval densities.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}
fn default_hump_left() -> f64 {
    0.8
}
fn default_hump_right() -> f64 {
    0.6
}
fn default_hump_width() -> f64 {
    0.5
}
fn default_riemann_left() -> f64 {
    0.8
}
fn default_riemann_right() -> f64 {
    0.2
}
fn default_levels() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}
fn default_step_width() -> f64 {
    0.25
}

impl Scenario {
    pub fn unit_box() -> Self {
        Self::Box {
            height: 1.0,
            left: 0.0,
            right: 1.0,
        }
    }

    pub fn double_hump() -> Self {
        Self::DoubleHump {
            left_height: default_hump_left(),
            right_height: default_hump_right(),
            width: default_hump_width(),
            gap: 1.0,
        }
    }

    pub fn riemann_like() -> Self {
        Self::RiemannLike {
            left_density: default_riemann_left(),
            right_density: default_riemann_right(),
            width: 1.0,
        }
    }

    pub fn sawtooth_bv() -> Self {
        Self::SawtoothBv {
            levels: default_levels(),
            width: default_step_width(),
        }
    }

    /// The four built-in scenarios with default parameters.
    pub fn built_ins() -> Vec<Self> {
        vec![
            Self::unit_box(),
            Self::double_hump(),
            Self::riemann_like(),
            Self::sawtooth_bv(),
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Box { .. } => "box",
            Self::DoubleHump { .. } => "double_hump",
            Self::RiemannLike { .. } => "riemann_like",
            Self::SawtoothBv { .. } => "sawtooth_bv",
            Self::Piecewise { .. } => "piecewise",
        }
    }

    pub fn datum(&self) -> Result<InitialDatum> {
        match self {
            Self::Box {
                height,
                left,
                right,
            } => InitialDatum::from_piecewise(vec![*left, *right], vec![*height]),
            Self::DoubleHump {
                left_height,
                right_height,
                width,
                gap,
            } => InitialDatum::from_piecewise(
                vec![0.0, *width, width + gap, 2.0 * width + gap],
                vec![*left_height, 0.0, *right_height],
            ),
            Self::RiemannLike {
                left_density,
                right_density,
                width,
            } => InitialDatum::from_piecewise(
                vec![-width, 0.0, *width],
                vec![*left_density, *right_density],
            ),
            Self::SawtoothBv { levels, width } => InitialDatum::from_piecewise(
                (0..=levels.len()).map(|k| k as f64 * width).collect(),
                levels.clone(),
            ),
            Self::Piecewise {
                breakpoints,
                values,
            } => InitialDatum::from_piecewise(breakpoints.clone(), values.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_data() {
        let d = Scenario::double_hump().datum().unwrap();
        assert_eq!(d.support_hull(), (0.0, 2.0));
        assert!((d.mass() - 0.7).abs() < 1e-15);
        let r = Scenario::riemann_like().datum().unwrap();
        assert_eq!(r.support_hull(), (-1.0, 1.0));
        assert_eq!(r.sup_norm(), 0.8);
        let s = Scenario::sawtooth_bv().datum().unwrap();
        assert_eq!(s.breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn parses_from_json_with_defaults() {
        let s: Scenario = serde_json::from_str(r#"{"name":"riemann_like","width":2.0}"#).unwrap();
        assert_eq!(
            s,
            Scenario::RiemannLike {
                left_density: 0.8,
                right_density: 0.2,
                width: 2.0
            }
        );
        assert!(serde_json::from_str::<Scenario>(r#"{"name":"nope"}"#).is_err());
    }
}
