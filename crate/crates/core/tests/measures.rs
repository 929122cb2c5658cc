use ftl_core::initial_data::ParticleConfiguration;
use ftl_core::measures::{
    empirical, hat_density, wasserstein, wasserstein_quantile, EmpiricalMeasure, MassDistribution,
    PiecewiseConstantDensity,
};
use proptest::prelude::*;

fn density() -> impl Strategy<Value = PiecewiseConstantDensity> {
    (1usize..8)
        .prop_flat_map(|k| {
            (
                -2.0f64..2.0,
                prop::collection::vec(0.05f64..1.0, k),
                prop::collection::vec(0.1f64..2.0, k),
            )
        })
        .prop_map(|(start, widths, values)| {
            let mut b = vec![start];
            for w in widths {
                b.push(b.last().unwrap() + w);
            }
            PiecewiseConstantDensity::new(b, values).unwrap()
        })
}

/// Rescales `d` to carry `mass`.
fn with_mass(d: &PiecewiseConstantDensity, mass: f64) -> PiecewiseConstantDensity {
    let s = mass / d.total_mass();
    PiecewiseConstantDensity::new(d.breakpoints().to_vec(), d.values().iter().map(|v| v * s).collect()).unwrap()
}

fn configuration() -> impl Strategy<Value = ParticleConfiguration> {
    (-1.0f64..1.0, prop::collection::vec(0.01f64..0.5, 1..40)).prop_map(|(x0, gaps)| {
        let mut x = vec![x0];
        for g in gaps {
            x.push(x.last().unwrap() + g);
        }
        ParticleConfiguration::new(0.0, 1.0, x).unwrap()
    })
}

proptest! {
    #[test]
    fn cdf_and_quantile_forms_agree(a in density(), b in density()) {
        let b = with_mass(&b, a.total_mass());
        let f = wasserstein(&a, &b).unwrap();
        let x = wasserstein_quantile(&a, &b).unwrap();
        prop_assert!((f - x).abs() <= 1e-12 * (1.0 + f));
    }

    #[test]
    fn distance_is_a_metric(a in density(), b in density(), c in density()) {
        let m = a.total_mass();
        let (b, c) = (with_mass(&b, m), with_mass(&c, m));
        let ab = wasserstein(&a, &b).unwrap();
        prop_assert!((ab - wasserstein(&b, &a).unwrap()).abs() <= 1e-13 * (1.0 + ab));
        prop_assert!(wasserstein(&a, &a).unwrap() <= 1e-14);
        let ac = wasserstein(&a, &c).unwrap();
        let cb = wasserstein(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn interleaving_identity(c in configuration()) {
        let x = c.positions();
        let expected = 0.5 * c.mass_per_particle() * (x[x.len() - 1] - x[0]);
        let d = wasserstein(&hat_density(&c), &empirical(&c)).unwrap();
        prop_assert!((d - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn cdf_is_monotone_and_reaches_the_mass(a in density()) {
        let f = a.cdf();
        let b = a.breakpoints();
        let mut prev = f.eval(b[0] - 1.0);
        prop_assert_eq!(prev, 0.0);
        for k in 0..=200 {
            let t = b[0] + (b[b.len() - 1] - b[0]) * k as f64 / 200.0;
            let v = f.eval(t);
            prop_assert!(v >= prev - 1e-15);
            prev = v;
        }
        prop_assert!((f.eval(b[b.len() - 1]) - a.total_mass()).abs() <= 1e-13 * a.total_mass());
    }
}

#[test]
fn mass_mismatch_is_rejected() {
    let a = PiecewiseConstantDensity::new(vec![0.0, 1.0], vec![1.0]).unwrap();
    let b = PiecewiseConstantDensity::new(vec![0.0, 1.0], vec![2.0]).unwrap();
    assert!(wasserstein(&a, &b).is_err());
}

#[test]
fn translated_atom_moves_its_mass() {
    let a = EmpiricalMeasure::new(vec![0.0], 2.0, None).unwrap();
    let b = EmpiricalMeasure::new(vec![1.5], 2.0, None).unwrap();
    assert!((wasserstein(&a, &b).unwrap() - 3.0).abs() < 1e-15);
    assert!((wasserstein_quantile(&a, &b).unwrap() - 3.0).abs() < 1e-15);
}
