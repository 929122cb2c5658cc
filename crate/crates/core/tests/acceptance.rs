//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --release --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use ftl_core::diagnostics::{diagnose, DiagnosticsReport};
use ftl_core::dynamics::{integrate, IntegratorSettings, Trajectory};
use ftl_core::harness::{convergence_study, ExperimentConfig};
use ftl_core::measures::{
    empirical, hat_density, l1_distance, wasserstein, wasserstein_quantile, EmpiricalMeasure,
    MassDistribution, PiecewiseConstantDensity,
};
use ftl_core::reference::godunov;
use ftl_core::{InitialDatum, ParticleConfiguration, Scenario, VelocityModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

const SWEEP_N: [usize; 8] = [8, 16, 32, 64, 128, 256, 512, 1024];
const T_END: f64 = 1.0;
const DELTA: f64 = 0.25;

struct Run {
    scenario: &'static str,
    model: &'static str,
    n: usize,
    datum: InitialDatum,
    traj: Trajectory,
    report: DiagnosticsReport,
}

fn models() -> Vec<(&'static str, VelocityModel)> {
    vec![
        ("greenshields", VelocityModel::greenshields(1.0).unwrap()),
        ("pipes_munjal_2", VelocityModel::pipes_munjal(1.0, 2.0).unwrap()),
        ("underwood", VelocityModel::underwood(1.0).unwrap()),
    ]
}

fn sample_times() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

fn sweep() -> Vec<Run> {
    let mut cases = Vec::new();
    for scenario in Scenario::built_ins() {
        for (name, model) in models() {
            for n in SWEEP_N {
                cases.push((scenario.clone(), name, model.clone(), n));
            }
        }
    }
    let settings = IntegratorSettings::default();
    let times = sample_times();
    cases
        .into_par_iter()
        .map(|(scenario, name, model, n)| {
            let datum = scenario.datum().unwrap();
            let c0 = datum.atomize(n).unwrap();
            let traj = integrate(&c0, &model, T_END, &settings, &times).unwrap();
            let report = diagnose(&traj, &model, &datum, Some(DELTA)).unwrap();
            Run {
                scenario: scenario.label(),
                model: name,
                n,
                datum,
                traj,
                report,
            }
        })
        .collect()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Worst `value − bound` with the case that produced it.
struct Worst {
    excess: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            excess: f64::NEG_INFINITY,
            at: String::new(),
        }
    }

    fn record(&mut self, excess: f64, at: impl FnOnce() -> String) {
        if excess > self.excess {
            self.excess = excess;
            self.at = at();
        }
    }

    fn outcome(self, what: &str) -> Outcome {
        outcome(self.excess <= 0.0, format!("worst {what} excess {:.3e} at {}", self.excess, self.at))
    }
}

fn case(r: &Run, t: f64) -> String {
    format!("{}/{}/N={}/t={}", r.scenario, r.model, r.n, t)
}

fn leader_law(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs {
        let tol = 10.0 * r.traj.metadata.abs_tol;
        let x_max = r.datum.support_hull().1;
        for s in &r.traj.states {
            let err = (s.leader() - (x_max + s.time())).abs();
            w.record(err - tol, || case(r, s.time()));
        }
    }
    w.outcome("leader error")
}

fn maximum_principle(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs {
        for rec in &r.report.records {
            w.record((1.0 - 1e-6) - rec.min_gap_ratio, || case(r, rec.time));
        }
    }
    w.outcome("gap-ratio")
}

fn oleinik(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    let mut skipped = 0;
    for r in runs {
        if !r.report.assumptions.all_hold() {
            skipped += 1;
            continue;
        }
        let bound = r.report.mass_per_particle * (1.0 + 1e-6);
        for rec in &r.report.records {
            w.record((rec.oleinik_max - bound) / r.report.mass_per_particle, || {
                format!("{} (interior)", case(r, rec.time))
            });
            w.record((rec.oleinik_leader - bound) / r.report.mass_per_particle, || {
                format!("{} (leader)", case(r, rec.time))
            });
        }
    }
    let mut o = w.outcome("z/ℓ");
    o.detail.push_str(&format!(", {skipped} runs without the monotonicity assumption"));
    o
}

fn tv_contractivity(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs.iter().filter(|r| matches!(r.scenario, "sawtooth_bv" | "riemann_like")) {
        let mut prev = f64::INFINITY;
        for rec in &r.report.records {
            w.record(rec.tv_hat - (r.report.datum_tv + 1e-8), || format!("{} (bound)", case(r, rec.time)));
            w.record(rec.tv_hat - (prev + 1e-8), || format!("{} (monotone)", case(r, rec.time)));
            prev = rec.tv_hat;
        }
    }
    w.outcome("TV")
}

fn velocity_bv(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs {
        for rec in r.report.records.iter().filter(|rec| rec.time >= DELTA) {
            let c = rec.c_delta.expect("δ supplied");
            w.record(rec.tv_v_hat - (c + 1e-6), || case(r, rec.time));
        }
    }
    w.outcome("TV[v]")
}

fn initial_consistency(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs {
        let c0 = r.traj.initial();
        let bound = c0.mass_per_particle() * r.datum.support_span() + 1e-10;
        let to_datum = wasserstein(&empirical(c0), &r.datum).unwrap();
        let to_hat = wasserstein(&empirical(c0), &hat_density(c0)).unwrap();
        w.record(to_datum - bound, || format!("{} (datum)", case(r, 0.0)));
        w.record(to_hat - bound, || format!("{} (ρ̂)", case(r, 0.0)));
    }
    w.outcome("distance")
}

fn interleaving(runs: &[Run]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for r in runs {
        for s in &r.traj.states {
            let d = wasserstein(&hat_density(s), &empirical(s)).unwrap();
            let x = s.positions();
            let expected = 0.5 * s.mass_per_particle() * (x[x.len() - 1] - x[0]);
            let rel = (d - expected).abs() / expected;
            if rel > worst {
                worst = rel;
                at = case(r, s.time());
            }
        }
    }
    outcome(worst <= 1e-12, format!("worst relative deviation {worst:.3e} {at}"))
}

fn random_density(rng: &mut StdRng, mass: f64) -> PiecewiseConstantDensity {
    let pieces = rng.gen_range(1..12);
    let mut b = vec![rng.gen_range(-3.0..3.0)];
    for _ in 0..pieces {
        let last = *b.last().unwrap();
        b.push(last + rng.gen_range(0.01..1.0));
    }
    let values: Vec<f64> = (0..pieces)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) })
        .collect();
    let mut values = values;
    values[0] += 0.1;
    let d = PiecewiseConstantDensity::new(b.clone(), values.clone()).unwrap();
    let scale = mass / d.total_mass();
    PiecewiseConstantDensity::new(b, values.iter().map(|v| v * scale).collect()).unwrap()
}

fn random_empirical(rng: &mut StdRng, mass: f64) -> EmpiricalMeasure {
    let n = rng.gen_range(1..40);
    let mut atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
    atoms.sort_by(f64::total_cmp);
    let leader = atoms.last().unwrap() + rng.gen_range(0.0..1.0);
    EmpiricalMeasure::new(atoms, mass / n as f64, Some(leader)).unwrap()
}

fn duality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20_240_601);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let mass = rng.gen_range(0.1..5.0);
        let pick = |rng: &mut StdRng, kind: usize| -> Box<dyn MassDistribution> {
            if kind == 0 {
                Box::new(random_density(rng, mass))
            } else {
                Box::new(random_empirical(rng, mass))
            }
        };
        let a = pick(&mut rng, k % 2);
        let b = pick(&mut rng, (k / 2) % 2);
        let f = wasserstein(a.as_ref(), b.as_ref()).unwrap();
        let x = wasserstein_quantile(a.as_ref(), b.as_ref()).unwrap();
        worst = worst.max((f - x).abs() / mass);
    }
    outcome(worst <= 1e-10, format!("worst |F-form − X-form|/L = {worst:.3e} over 200 pairs"))
}

fn two_particles() -> Outcome {
    let c = ParticleConfiguration::with_particle_mass(0.0, 0.5, vec![0.0, 1.0]).unwrap();
    let model = VelocityModel::greenshields(1.0).unwrap();
    let traj = integrate(&c, &model, 3.0, &IntegratorSettings::default(), &[3.0]).unwrap();
    let x0 = traj.last().positions()[0];
    let err = (x0 - 2.0).abs();
    outcome(err <= 1e-6, format!("follower at t=3: {x0} (error {err:.3e})"))
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig::from_json(
        r#"{"scenario":{"name":"riemann_like"},"velocity":{"kind":"greenshields","v_max":1},
            "n_list":[16,32,64,128,256,512,1024],"t_end":0.5}"#,
    )
    .unwrap();
    let table = convergence_study(&config, 0).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rows = &table.rows;
    let last = rows.last().unwrap();
    let order = last.l1_order.unwrap();
    let monotone = table.l1_monotone();
    let small = last.l1_error < 0.02 * table.mass;
    let errors: Vec<String> = rows.iter().map(|r| format!("{:.2e}", r.l1_error)).collect();
    outcome(
        monotone && order >= 0.5 && small && elapsed < 60.0 && table.oracle == "exact",
        format!(
            "L1 errors [{}], last order {order:.3}, monotone {monotone}, {:.1}s",
            errors.join(", "),
            elapsed
        ),
    )
}

fn cross_oracle() -> Outcome {
    let datum = Scenario::double_hump().datum().unwrap();
    let model = VelocityModel::greenshields(1.0).unwrap();
    let t = 0.5;
    let c0 = datum.atomize(1024).unwrap();
    let traj = integrate(&c0, &model, t, &IntegratorSettings::default(), &[t]).unwrap();
    let dx = datum.support_span() / 4096.0;
    let run = godunov(&datum, &model, dx, 0.5, t).unwrap();
    let d = l1_distance(&hat_density(traj.last()), &run.grid.density().unwrap());
    let bound = 0.05 * datum.mass();
    outcome(d <= bound, format!("L1(ρ̂, Godunov) = {d:.3e}, bound {bound:.3e}"))
}

fn entropy(runs: &[Run]) -> Outcome {
    let mut w = Worst::new();
    for r in runs {
        for rec in &r.report.records {
            w.record(-1e-12 - rec.entropy_min_k, || case(r, rec.time));
        }
    }
    w.outcome("−K")
}

fn continuity(runs: &[Run]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    let mut pairs = 0;
    for r in runs {
        let c = r.report.continuity.as_ref().expect("δ supplied");
        pairs += c.l1_pairs + c.wasserstein_pairs;
        for slack in [c.l1_worst_slack, c.wasserstein_worst_slack] {
            if slack < worst {
                worst = slack;
                at = format!("{}/{}/N={}", r.scenario, r.model, r.n);
            }
        }
    }
    outcome(worst >= 0.0, format!("smallest slack {worst:.3e} at {at} over {pairs} pairs"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = sweep();
    println!(
        "sweep: {} runs ({} scenarios × {} models × N in {:?}) in {:.1}s",
        runs.len(),
        Scenario::built_ins().len(),
        models().len(),
        SWEEP_N,
        start.elapsed().as_secs_f64()
    );

    let results = [
        ("leader law", leader_law(&runs)),
        ("discrete maximum principle", maximum_principle(&runs)),
        ("discrete Oleinik condition", oleinik(&runs)),
        ("TV contractivity", tv_contractivity(&runs)),
        ("velocity BV bound", velocity_bv(&runs)),
        ("initial consistency", initial_consistency(&runs)),
        ("interleaving identity", interleaving(&runs)),
        ("Wasserstein duality", duality()),
        ("two-particle closed form", two_particles()),
        ("convergence to the entropy solution", convergence()),
        ("cross-oracle agreement", cross_oracle()),
        ("entropy terms", entropy(&runs)),
        ("time continuity", continuity(&runs)),
    ];

    let mut failures = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {}: {} ({})",
            k + 1,
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        if !o.passed {
            failures += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
