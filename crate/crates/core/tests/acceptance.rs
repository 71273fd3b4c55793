//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solitary::evolution::{evolve, smooth_perturbation, stability_experiment, travel_test, EvolutionConfig, Evolver};
use solitary::functionals::{momentum, reduced_energy, Penalization};
use solitary::grid::{norm_hs, PeriodicGrid, SpectralField, DEFAULT_TAIL_TOL};
use solitary::longwave::{
    convergence_study, exponents, kdv_energy, kdv_soliton, kdv_speed, long_wave_seed, minimize_reduced, orbit_distance,
    scaling_diagnostics, LongWaveComparison, ReducedGroundState, ScalingDiagnostics,
};
use solitary::solver::{
    continuation_sweep, minimize_constrained, petviashvili, tail_check, warm_start, GridPolicy, SolveConfig,
    SweepResult, WaveProfile,
};
use solitary::{Nonlinearity, Problem};

const SWEEP_MU: [f64; 5] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn tight() -> SolveConfig {
    SolveConfig {
        tol_residual: 1e-12,
        ..SolveConfig::default()
    }
}

/// The five-point Whitham sweep, solved once for all criteria that need it.
fn sweep() -> &'static SweepResult {
    static SWEEP: OnceLock<SweepResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        continuation_sweep(&Problem::whitham(), &SWEEP_MU, &tight(), &GridPolicy::default()).expect("valid sweep")
    })
}

fn sweep_profile(mu: f64) -> &'static WaveProfile {
    sweep()
        .profiles()
        .into_iter()
        .find(|p| p.mu == mu)
        .expect("sweep entry converged")
}

fn comparisons() -> &'static Vec<LongWaveComparison> {
    static CMP: OnceLock<Vec<LongWaveComparison>> = OnceLock::new();
    CMP.get_or_init(|| {
        let profiles: Vec<WaveProfile> = SWEEP_MU.iter().map(|&mu| sweep_profile(mu).clone()).collect();
        convergence_study(&profiles, &exponents(1, 2.0).unwrap(), &ReducedGroundState::whitham()).unwrap()
    })
}

fn sci(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", cells.join(", "))
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

#[test]
fn criterion_01_kdv_oracle() {
    let start = Instant::now();
    let g = PeriodicGrid::new(64.0, 1024).unwrap();
    let w = kdv_soliton(&g).unwrap();
    let q_err = (momentum(&w) - 1.0).abs();
    let nl = Nonlinearity::quadratic();
    let prob = Problem::reduced(1, -1.0 / 3.0, &nl).unwrap();
    let residual = prob
        .discretize(&g)
        .gradient(&w)
        .axpy(kdv_speed(), &w)
        .unwrap()
        .norm_l2();
    let e_err = (reduced_energy(1, -1.0 / 3.0, &nl, &w).unwrap() - kdv_energy()).abs();
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        q_err <= 1e-10 && residual <= 1e-10 && e_err <= 1e-8 && secs < 1.0,
        format!("|Q-1|={q_err:.2e} residual={residual:.2e} |E-I_lw|={e_err:.2e} time={secs:.2}s"),
    );
}

#[test]
fn criterion_02_reduced_minimizer() {
    let start = Instant::now();
    let g = PeriodicGrid::new(64.0, 1024).unwrap();
    let wave = minimize_reduced(
        1,
        -1.0 / 3.0,
        &Nonlinearity::quadratic(),
        &SolveConfig::reduced_default(),
        &g,
    )
    .unwrap();
    let nu_err = (wave.nu - kdv_speed()).abs();
    let (dist, _) = orbit_distance(&wave.field, &kdv_soliton(&g).unwrap(), 1.0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        nu_err <= 1e-6 && dist <= 1e-6 && secs < 30.0,
        format!(
            "|nu-nu_lw|={nu_err:.2e} H1 dist={dist:.2e} iters={} time={secs:.2}s",
            wave.iterations
        ),
    );
}

#[test]
fn criterion_03_solitary_wave_solve() {
    let start = Instant::now();
    let prob = Problem::whitham();
    let cfg = SolveConfig::with_mu(1e-3);
    let result = continuation_sweep(&prob, &[1e-3], &cfg, &GridPolicy::default()).unwrap();
    let wave = result.entries[0].outcome.as_ref().unwrap();
    let tail = tail_check(&wave.field);
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        wave.residual <= 1e-9 && wave.nu > 1.0 && tail < 1e-10 && secs < 60.0,
        format!(
            "residual={:.2e} nu={:.10} tail={tail:.2e} iters={} time={secs:.2}s",
            wave.residual, wave.nu, wave.iterations
        ),
    );
}

#[test]
fn criterion_04_oracle_equivalence() {
    let start = Instant::now();
    let prob = Problem::whitham();
    let exps = exponents(1, 2.0).unwrap();
    let reference = ReducedGroundState::whitham();
    let policy = GridPolicy::default();
    let mut details = Vec::new();
    let mut ok = true;
    for mu in [1e-4, 1e-3] {
        let grid = policy.grid_for(mu, &exps, reference.length_scale()).unwrap();
        let seed = long_wave_seed(&reference, &exps, mu, &grid).unwrap();
        let cfg = SolveConfig { mu, ..tight() };
        let wave = minimize_constrained(&prob, &cfg, &seed).unwrap();
        // an independent seed: the long-wave profile whose predicted speed is nu
        let mu_guess = ((wave.nu - 1.0) / kdv_speed()).powf(1.5);
        let guess = long_wave_seed(&reference, &exps, mu_guess, &grid).unwrap();
        let pcfg = SolveConfig {
            tol_residual: 1e-14,
            max_iter: 20_000,
            ..SolveConfig::default()
        };
        let fixed = petviashvili(&prob, wave.nu, &pcfg, &guess).unwrap();
        let (dist, _) = orbit_distance(&fixed.field, &wave.field, 0.0).unwrap();
        ok &= dist <= 1e-7;
        details.push(format!(
            "mu={mu:e}: dist={dist:.2e} (petviashvili iters {})",
            fixed.iterations
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    report(4, ok && secs < 60.0, format!("{} time={secs:.2}s", details.join("; ")));
}

#[test]
fn criterion_05_speed_law() {
    let start = Instant::now();
    let dev: Vec<f64> = comparisons().iter().map(|c| c.speed_dev.abs()).collect();
    let secs = start.elapsed().as_secs_f64();
    let bound = 0.05 * kdv_speed();
    report(
        5,
        strictly_increasing(&dev) && dev[0] <= bound && sweep().all_converged(),
        format!(
            "|speed_dev| over mu={SWEEP_MU:?}: {} (bound {bound:.3e} at 1e-4) time={secs:.1}s",
            sci(&dev)
        ),
    );
}

#[test]
fn criterion_06_energy_law() {
    let rel: Vec<f64> = comparisons()
        .iter()
        .map(|c| c.energy_dev.abs() / kdv_energy().abs())
        .collect();
    report(
        6,
        strictly_increasing(&rel) && rel[0] <= 0.05,
        format!("relative energy deviation: {}", sci(&rel)),
    );
}

#[test]
fn criterion_07_profile_convergence() {
    let dist: Vec<f64> = comparisons().iter().map(|c| c.dist_aligned).collect();
    report(
        7,
        strictly_increasing(&dist) && dist[0] <= 0.05,
        format!("aligned H1 distance: {}", sci(&dist)),
    );
}

#[test]
fn criterion_08_subadditivity() {
    let prob = Problem::whitham();
    let exps = exponents(1, 2.0).unwrap();
    let reference = ReducedGroundState::whitham();
    let policy = GridPolicy::default();
    let table = sweep().energy_table();
    let max_mu = table.last().unwrap().0;
    let mut checked = 0;
    let mut violations = Vec::new();
    for i in 0..table.len() {
        for j in i..table.len() {
            let (m1, i1) = table[i];
            let (m2, i2) = table[j];
            let sum = m1 + m2;
            if sum > max_mu {
                continue;
            }
            let grid = policy.grid_for(sum, &exps, reference.length_scale()).unwrap();
            let nearest = sweep_profile(m2);
            let seed = warm_start(nearest, sum, &exps, &grid)
                .or_else(|_| long_wave_seed(&reference, &exps, sum, &grid))
                .unwrap();
            let wave = minimize_constrained(&prob, &SolveConfig { mu: sum, ..tight() }, &seed).unwrap();
            checked += 1;
            if wave.energy >= i1 + i2 || wave.energy.is_nan() {
                violations.push(format!("I({sum:e})={} >= {}", wave.energy, i1 + i2));
            }
        }
    }
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            let (m, im) = table[i];
            let (m2, im2) = table[j];
            let a = m2 / m;
            checked += 1;
            if im2 >= a * im || im2.is_nan() {
                violations.push(format!("I({m2:e})={im2} >= {a}*I({m:e})"));
            }
        }
    }
    report(
        8,
        violations.is_empty(),
        format!("{checked} pairs checked, violations: {violations:?}"),
    );
}

fn random_smooth(g: &PeriodicGrid, rng: &mut ChaCha8Rng, amplitude: f64) -> SpectralField {
    let modes: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..6.0),
            )
        })
        .collect();
    let p = g.period();
    SpectralField::from_fn(g, |x| {
        modes
            .iter()
            .enumerate()
            .map(|(j, (a, b, _))| {
                let k = 2.0 * std::f64::consts::PI * (j + 1) as f64 / p;
                amplitude * (a * (k * x).cos() + b * (k * x).sin())
            })
            .sum::<f64>()
            + amplitude * modes[0].2 / 6.0
    })
}

#[test]
fn criterion_09_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = PeriodicGrid::new(20.0, 128).unwrap();
    let full = Problem::whitham();
    let reduced = Problem::reduced(1, -1.0 / 3.0, &Nonlinearity::quadratic()).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for prob in [&full, &reduced] {
        let disc = prob.discretize(&g);
        for _ in 0..100 {
            let u = random_smooth(&g, &mut rng, 0.5);
            let v = random_smooth(&g, &mut rng, 1.0);
            let fd = (disc.energy(&u.axpy(h, &v).unwrap()) - disc.energy(&u.axpy(-h, &v).unwrap())) / (2.0 * h);
            let exact = disc.gradient(&u).inner_spectral(&v).unwrap();
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    report(
        9,
        worst <= 1e-6,
        format!("worst relative error over 200 fields: {worst:.2e}"),
    );
}

/// Whitham wave at mu = 1e-3 solved to a tight residual on the default grid.
fn wave_1e3() -> &'static WaveProfile {
    sweep_profile(1e-3)
}

#[test]
fn criterion_10_evolution_conservation() {
    let prob = Problem::whitham();
    let wave = wave_1e3();
    assert_eq!(wave.field.grid().points(), 1024);
    let cfg = EvolutionConfig {
        dt: 0.02,
        horizon: 100.0,
        stride: 250,
        ..EvolutionConfig::default()
    };
    let trace = evolve(&prob, &wave.field, &cfg).unwrap();
    let q = trace.max_abs_q_drift();
    let e = trace.max_abs_e_drift();

    let linear = EvolutionConfig {
        dt: 0.02,
        horizon: 10.0,
        nonlinear: false,
        ..EvolutionConfig::default()
    };
    let lin = evolve(&prob, &wave.field, &linear).unwrap();
    let ev = Evolver::new(&prob, wave.field.grid(), &linear).unwrap();
    let exact = {
        let lam: Vec<_> = wave
            .field
            .grid()
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i == wave.field.grid().nyquist_slot() {
                    0.0
                } else {
                    -k * prob.symbol().eval(k) * 10.0
                }
            })
            .collect();
        wave.field
            .dealias()
            .map_coeffs(|i, _, c| c * num_complex::Complex64::from_polar(1.0, lam[i]))
    };
    let lin_err = lin.final_field.sub(&exact).unwrap().norm_l2() / wave.field.norm_l2();
    let advanced = ev.advance(&wave.field.dealias(), 0.02, 500).unwrap();
    let adv_err = advanced.sub(&exact).unwrap().norm_l2() / wave.field.norm_l2();
    report(
        10,
        q <= 1e-10 && e <= 1e-8 && lin_err <= 1e-12 && adv_err <= 1e-12,
        format!("Q drift={q:.2e} E drift={e:.2e} linear error={lin_err:.2e}"),
    );
}

#[test]
fn criterion_11_travelling() {
    let prob = Problem::whitham();
    let wave = wave_1e3();
    let cfg = EvolutionConfig {
        dt: 0.02,
        horizon: 20.0,
        stride: 50,
        ..EvolutionConfig::default()
    };
    let r = travel_test(&prob, wave, &cfg).unwrap();
    report(
        11,
        r.max_shape_error <= 1e-6 && r.speed_error() <= 1e-6,
        format!(
            "shape error={:.2e} measured speed={:.12} nu={:.12} |diff|={:.2e}",
            r.max_shape_error,
            r.measured_speed,
            r.nu,
            r.speed_error()
        ),
    );
}

#[test]
fn criterion_12_stability() {
    let prob = Problem::whitham();
    let wave = wave_1e3();
    let exps = exponents(1, 2.0).unwrap();
    let k_c = wave.mu.powf(exps.beta) / ReducedGroundState::whitham().length_scale();
    let cfg = EvolutionConfig {
        dt: 0.02,
        horizon: 100.0,
        stride: 50,
        ..EvolutionConfig::default()
    };
    let mut maxima = Vec::new();
    let mut ratios = Vec::new();
    for scale in [0.005, 0.01, 0.02] {
        let p = smooth_perturbation(&wave.field, scale, k_c, 12).unwrap();
        let r = stability_experiment(&prob, wave, &p, &cfg).unwrap();
        maxima.push(r.max_dist);
        ratios.push(r.ratio());
    }
    let ok = ratios.iter().all(|r| *r <= 5.0) && maxima.windows(2).all(|w| w[0] <= w[1]);
    report(
        12,
        ok,
        format!("scales [0.5%, 1%, 2%]: ratio={ratios:.3?} maxDist={}", sci(&maxima)),
    );
}

#[test]
fn criterion_13_penalization() {
    let prob = Problem::whitham();
    let wave = wave_1e3();
    let grid = wave.field.grid().clone();
    let mu = wave.mu;
    // a rough seed well inside the active region of rho: s = 0.3 at the seed
    let k_max = std::f64::consts::PI * grid.points() as f64 / grid.period();
    let k = 2.0f64.min(0.3 * k_max);
    let base = long_wave_seed(&ReducedGroundState::whitham(), &exponents(1, 2.0).unwrap(), mu, &grid).unwrap();
    let rough = SpectralField::from_fn(&grid, |x| base.interpolate(x) * (1.0 + (k * x).cos()));
    let rough = solitary::solver::renormalize(&rough, mu).unwrap();
    let solution_h1 = norm_hs(&wave.field, 1.0).powi(2);
    let seed_h1 = norm_hs(&rough, 1.0).powi(2);
    let radius = (seed_h1 / 1.9).sqrt();
    let pen = Penalization::new(radius).unwrap();
    let rho_seed = pen.value(seed_h1);
    let active_at_seed = rho_seed > 1e-3 * wave.energy.abs() && radius * radius > solution_h1;

    let plain = minimize_constrained(&prob, &SolveConfig { mu, ..tight() }, &rough).unwrap();
    let penalized = minimize_constrained(
        &prob,
        &SolveConfig {
            mu,
            penalization: Some(pen),
            ..tight()
        },
        &rough,
    )
    .unwrap();
    let (dist, _) = orbit_distance(&penalized.field, &plain.field, 0.0).unwrap();
    let rho = pen.value(norm_hs(&penalized.field, 1.0).powi(2));
    report(
        13,
        dist <= 1e-7 && rho == 0.0 && active_at_seed,
        format!(
            "orbit distance={dist:.2e} rho at solution={rho:e} rho at seed={rho_seed:.2e} (|I|={:.2e}) k={k:.2}",
            wave.energy.abs()
        ),
    );
}

#[test]
fn criterion_14_scaling_diagnostics() {
    let prob = Problem::whitham();
    let exps = exponents(1, 2.0).unwrap();
    let diags: Vec<ScalingDiagnostics> = SWEEP_MU
        .iter()
        .map(|&mu| scaling_diagnostics(sweep_profile(mu), &prob, &exps, 0.9).unwrap())
        .collect();
    let anchor = diags[2];
    let within = |v: f64, a: f64| v <= 3.0 * a && v >= a / 3.0;
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, get) in [
        (
            "tau_ratio1",
            (|d: &ScalingDiagnostics| d.tau_ratio1) as fn(&ScalingDiagnostics) -> f64,
        ),
        ("tau_ratio2", |d| d.tau_ratio2),
        ("supnorm_ratio", |d| d.supnorm_ratio),
    ] {
        let vals: Vec<f64> = diags.iter().map(get).collect();
        let good = vals.iter().all(|v| within(*v, get(&anchor)));
        ok &= good;
        lines.push(format!(
            "{name}={} ({})",
            sci(&vals),
            if good { "ok" } else { "out of x3" }
        ));
    }
    report(14, ok, lines.join("; "));
}

#[test]
fn high_band_is_negligible_at_small_mu() {
    let prob = Problem::whitham();
    let exps = exponents(1, 2.0).unwrap();
    for mu in [1e-4, 1e-3] {
        let d = scaling_diagnostics(sweep_profile(mu), &prob, &exps, 0.9).unwrap();
        assert!(d.u2_h1 < 1e-6 * d.u1_h1, "mu={mu}: {d:?}");
    }
}

#[test]
fn sweep_profiles_pass_the_tail_gate() {
    for e in &sweep().entries {
        assert!(e.tail < DEFAULT_TAIL_TOL, "mu={} tail={}", e.mu, e.tail);
        assert!(e.outcome.as_ref().unwrap().supercritical());
    }
}
