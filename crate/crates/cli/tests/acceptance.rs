//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugfsim::constants::SPEED_OF_LIGHT;
use ugfsim::{
    doppler_shift, em_probe_accelerations, gravimeter_reading, gravitational_redshift,
    gravity_probe_accelerations, infer_field_difference, proper_time_rate_difference,
    reconstruct_em_field, AccelerationKind, ClockPairScenario, EmField, GravityModel, MetricUgf,
    NonGravProfile, ParticleState, SpringBalance,
};
use ugfsim_cli::scenario::{FieldSpec, SegmentSpec};
use ugfsim_cli::{parse_scenario, presets, run, sweep, Outcome, RunReport, Scenario};

const SEED: u64 = 0x5eed;
const C2: f64 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

struct Phases {
    midpoint: f64,
    action: f64,
    perturbation: f64,
    potential: f64,
    kinetic: f64,
}

fn phases(report: &RunReport) -> Phases {
    let Outcome::Interferometer(cv) = &report.outcome else {
        panic!("not an interferometer report")
    };
    let a = cv.breakdown.action.as_ref().expect("action engine ran");
    Phases {
        midpoint: cv.breakdown.midpoint.expect("midpoint engine ran"),
        action: a.total,
        perturbation: cv.breakdown.perturbation.as_ref().expect("perturbation engine ran").total,
        potential: a.potential,
        kinetic: a.kinetic,
    }
}

struct Draw {
    k: f64,
    t: f64,
    a_g: f64,
    mass: f64,
    z0: f64,
}

fn draw(rng: &mut ChaCha8Rng) -> Draw {
    Draw {
        k: 10f64.powf(rng.random_range(6.0..8.0)),
        t: 10f64.powf(rng.random_range(-3.0..0.0)),
        a_g: rng.random_range(-100.0..100.0),
        mass: 10f64.powf(rng.random_range(-27.0..-23.0)),
        z0: rng.random_range(-1.0..1.0),
    }
}

fn configure(base: &Scenario, d: &Draw) -> Scenario {
    let mut s = base.clone();
    s.field = FieldSpec::Uniform {
        acceleration: [0.0, 0.0, d.a_g],
    };
    let i = s.interferometer.as_mut().unwrap();
    i.k = Some(d.k);
    i.t = Some(d.t);
    i.mass = d.mass;
    i.position = [0.0, 0.0, d.z0];
    for seg in &mut i.mirror.ng {
        seg.end = 2.0 * d.t;
    }
    s.validate().expect("configured scenario is valid");
    s
}

fn criterion_1() -> Verdict {
    let base = presets::load("fig1a").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = phases(&run(&configure(&base, &draw(&mut rng))).unwrap());
        worst = worst.max(p.midpoint.abs()).max(p.action.abs()).max(p.perturbation.abs());
    }
    let elapsed = started.elapsed();
    verdict(
        worst < 1e-9 && elapsed < Duration::from_secs(5),
        format!("max |phi| = {worst:e} rad over 100 draws, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let base = presets::load("fig1b").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = draw(&mut rng);
        let a_ng = rng.random_range(-20.0..20.0);
        let mut s = configure(&base, &d);
        s.interferometer.as_mut().unwrap().mirror.ng = vec![SegmentSpec {
            start: 0.0,
            end: 2.0 * d.t,
            acceleration: [0.0, 0.0, a_ng],
        }];
        let p = phases(&run(&s).unwrap());
        let expected = -d.k * a_ng * d.t * d.t;
        for phi in [p.midpoint, p.action, p.perturbation] {
            worst = worst.max((phi - expected).abs() / expected.abs());
        }
    }
    verdict(worst <= 1e-9, format!("max relative error {worst:e} vs -k a_NG T^2 over 100 draws"))
}

fn criterion_3() -> Verdict {
    let (k, a_g, t) = (1e8, 50.0, 0.3);
    let base = presets::load("fig1a").unwrap();
    let s = configure(&base, &Draw { k, t, a_g, mass: 1.44e-25, z0: 0.5 });
    let p = phases(&run(&s).unwrap());
    let expected = k * a_g * t * t;
    let rel_v = (p.potential - expected).abs() / expected;
    let rel_t = (p.kinetic + expected).abs() / expected;
    let sum = (p.potential + p.kinetic).abs();
    verdict(
        rel_v <= 1e-9 && rel_t <= 1e-9 && sum < 1e-9 && p.potential.abs() > 1e6,
        format!("phi_V = {:e}, phi_T = {:e}, |sum| = {sum:e} rad", p.potential, p.kinetic),
    )
}

fn criterion_4() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["fig1a", "fig1b"] {
        let closed = presets::load(name).unwrap();
        let mut numeric = closed.clone();
        numeric.numerics.force_numerical = true;
        numeric.numerics.dt = 1e-5;
        let a = phases(&run(&closed).unwrap());
        let started = Instant::now();
        let b = phases(&run(&numeric).unwrap());
        let elapsed = started.elapsed();
        let delta = [
            (a.midpoint - b.midpoint).abs(),
            (a.action - b.action).abs(),
            (a.perturbation - b.perturbation).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        ok &= delta < 1e-6 && elapsed < Duration::from_secs(30);
        details.push(format!("{name}: max delta {delta:e} rad in {:.2} s", elapsed.as_secs_f64()));
    }
    verdict(ok, details.join("; "))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut max_pair = 0.0f64;
    for _ in 0..100 {
        let a_g = Vector3::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
        let d = Vector3::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let s = ClockPairScenario {
            detector: ParticleState::at_rest(Vector3::zeros()),
            separation: d,
            ng: NonGravProfile::free_fall(),
            metric: MetricUgf::new(a_g),
            f0: 1e15,
        };
        max_pair = max_pair.max((doppler_shift(&s, AccelerationKind::Gravitational) + gravitational_redshift(&s)).abs());
    }
    let total = |r: &RunReport| match &r.outcome {
        Outcome::ClockPair(b) => b.total,
        _ => panic!("not a clock pair"),
    };
    let free = total(&run(&presets::load("fig2a").unwrap()).unwrap());
    let pr = total(&run(&presets::load("pound_rebka").unwrap()).unwrap());
    let oracle = 9.8 * 22.5 / C2;
    let pr_rel = (pr - 2.454e-15).abs() / 2.454e-15;
    let table = sweep(&presets::load("pound_rebka").unwrap()).unwrap();
    let col = table.header.iter().position(|h| h == "total_fractional").unwrap();
    let totals: Vec<f64> = table.rows.iter().map(|r| r.cells[col].parse().unwrap()).collect();
    let invariant = totals.iter().all(|&x| x == totals[0]) && totals[0] == pr;
    verdict(
        max_pair == 0.0 && free == 0.0 && pr_rel <= 1e-3 && (pr - oracle).abs() <= 1e-3 * oracle && invariant,
        format!(
            "max |D_G + D_grav| = {max_pair:e}; fig2a total {free:e}; pound_rebka {pr:e} (rel {pr_rel:.1e}); a_G sweep invariant: {invariant}"
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst_ratio = 0.0f64;
    let n = 200;
    for i in 0..n {
        let log_eps = -18.0 + 9.0 * i as f64 / (n - 1) as f64;
        let eps = 10f64.powf(log_eps);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let phi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let g_mag = rng.random_range(1.0..100.0);
        let a_g = Vector3::new(0.0, 0.0, -g_mag);
        // choose |d| so that |a_G·d|/c² = eps
        let d = dir * (eps * C2 / (g_mag * dir.z.abs().max(1e-3)));
        let first = a_g.dot(&d) / C2;
        let metric = MetricUgf::new(a_g);
        let exact = proper_time_rate_difference(&metric, &Vector3::zeros(), &d, &Vector3::zeros()).unwrap();
        let rel = if exact == first { 0.0 } else { (exact - first).abs() / first.abs() };
        worst_ratio = worst_ratio.max(rel / first.abs());
    }
    verdict(
        worst_ratio < 1.0,
        format!("max (relative error / |a_G.d/c^2|) = {worst_ratio:e} over {n} grid points"),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let earth = GravityModel::point_mass(3.986e14, Vector3::new(0.0, 0.0, -6.371e6));
    let free = SpringBalance {
        state: ParticleState::at_rest(Vector3::zeros()),
        ng: NonGravProfile::free_fall(),
        resolution: 1e-6,
    };
    let free_reading = gravimeter_reading(&free, &earth, 0.5);
    let mut invariant = true;
    let mut accel_ok = true;
    for _ in 0..100 {
        let a = Vector3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let balance = SpringBalance {
            ng: NonGravProfile::constant(0.0, 1.0, a).unwrap(),
            resolution: 0.0,
            ..free.clone()
        };
        let base = gravimeter_reading(&balance, &earth, 0.5);
        accel_ok &= base == a.norm();
        let g = GravityModel::uniform(Vector3::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)));
        invariant &= gravimeter_reading(&balance, &g, 0.5) == base;
        invariant &= gravimeter_reading(&free, &g, 0.5) == free_reading;
    }
    let inferred = infer_field_difference(9.820, 6.371e6, 3.986e14, 1e-3).unwrap().inferred_g;
    let rel = (inferred - 9.820).abs() / 9.820;
    let preset = run(&presets::load("app1_gravimeter").unwrap()).unwrap();
    verdict(
        free_reading == 0.0 && accel_ok && invariant && rel <= 1e-3 && preset.passed,
        format!("free fall reads {free_reading}; accelerated reads |a_NG|: {accel_ok}; field-blind: {invariant}; inferred g {inferred:.6} (rel {rel:.1e})"),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst = 0.0f64;
    let v = |r: f64, rng: &mut ChaCha8Rng| Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r));
    for _ in 0..200 {
        let field = EmField {
            e: v(10.0, &mut rng),
            b: v(10.0, &mut rng),
        };
        let qm = rng.random_range(0.1..1e3) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let (v1, v2) = loop {
            let (a, b) = (v(5.0, &mut rng), v(5.0, &mut rng));
            if a.cross(&b).norm() > 0.1 * a.norm() * b.norm() {
                break (a, b);
            }
        };
        let vs = [Vector3::zeros(), v1, v2];
        let meas: Vec<_> = vs.iter().copied().zip(em_probe_accelerations(&field, qm, &vs)).collect();
        let rec = reconstruct_em_field(&meas, qm).unwrap().field;
        let scale = field.e.norm().max(field.b.norm());
        worst = worst.max((rec.e - field.e).norm() / scale).max((rec.b - field.b).norm() / scale);
    }
    let vs = [Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)];
    let mut zero = true;
    for g in [
        GravityModel::uniform(Vector3::new(0.0, 0.0, -9.8)),
        GravityModel::point_mass(3.986e14, Vector3::new(0.0, 0.0, -6.371e6)),
    ] {
        let acc = gravity_probe_accelerations(&g, &Vector3::zeros(), &vs).unwrap();
        let meas: Vec<_> = vs.iter().copied().zip(acc).collect();
        zero &= reconstruct_em_field(&meas, 1.0).unwrap().field == EmField::default();
    }
    verdict(
        worst <= 1e-8 && zero,
        format!("max relative reconstruction error {worst:e} over 200 fields; gravity protocol gives zero field: {zero}"),
    )
}

const GRADIENT_SCENARIO: &str = r#"
name = "point-mass gradient"

[field]
model = "point_mass"
mu = 3.986e14
center = [0.0, 0.0, -6.371e6]

[numerics]
dt = 1e-5

[interferometer]
k = 1.6e7
T = 0.1
mass = 1.44e-26
position = [0.0, 0.0, 0.5]
"#;

fn criterion_9() -> Verdict {
    let s = parse_scenario(GRADIENT_SCENARIO).unwrap();
    let report = run(&s).unwrap();
    let Outcome::Interferometer(cv) = &report.outcome else { unreachable!() };
    let p = phases(&report);
    let hbar = 1.054_571_817e-34;
    let separation = hbar * 1.6e7 * 0.1 / 1.44e-26;
    let delta = (p.midpoint - p.action).abs();
    let flagged = cv.breakdown.perturbation.as_ref().unwrap().first_order_only;
    verdict(
        p.midpoint.abs() > 0.0 && delta < 1e-6 && flagged && (0.005..0.02).contains(&separation),
        format!(
            "arm separation {:.2} cm; phi_mid = {:e}, |mid - action| = {delta:e} rad; perturbation first-order only: {flagged}",
            separation * 100.0,
            p.midpoint
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = std::env::temp_dir().join(format!("ugfsim-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut mismatched = Vec::new();
    let names = presets::names();
    for name in &names {
        let mut outputs = Vec::new();
        for i in 0..2 {
            let path = dir.join(format!("{name}-{i}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_ugfsim"))
                .args(["preset", name, "--sweep", "--quiet", "--out"])
                .arg(&path)
                .status()
                .expect("binary runs");
            outputs.push((status.code(), std::fs::read(&path).unwrap_or_default()));
        }
        if outputs[0].1.is_empty() || outputs[0] != outputs[1] {
            mismatched.push(name.to_string());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        mismatched.is_empty(),
        format!("{} presets swept twice; mismatches: {:?}", names.len(), mismatched),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("free-mirror phase vanishes for every engine", criterion_1),
        ("supported-mirror phase equals -k a_NG T^2", criterion_2),
        ("potential and kinetic propagation phases cancel", criterion_3),
        ("integrated paths reproduce closed-form phases", criterion_4),
        ("gravitational Doppler and redshift cancel", criterion_5),
        ("exact rate difference matches first order", criterion_6),
        ("gravimeter reads proper acceleration only", criterion_7),
        ("EM field round trip and gravity contrast", criterion_8),
        ("point-mass gradient is observable", criterion_9),
        ("sweeps are byte-identical across runs", criterion_10),
    ];
    let mut failures = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let v = check();
        let flag = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} [{flag}] {title}: {} ({:.2} s)",
            i + 1,
            v.detail,
            started.elapsed().as_secs_f64()
        );
        if !v.passed {
            failures += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
