//! Acceptance checks, run in sequence so the runtimes are not skewed by
//! other tests sharing the machine. Each check prints one PASS/FAIL line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use scanqubit::coupling::{
    beta, g_of_position, surrogate_grid, CapCoeffs, GeometryParams, SurrogateGeometry,
};
use scanqubit::fitting::{fit_gx, fit_gy, fit_spectrum, initial_guess};
use scanqubit::jc_model::{dressed_modes, transmission, transmission_at, JcParams, SpectrumTrace};
use scanqubit::scan_sim::{
    coupled_transmission, find_resonance, position_physics, predicted_crossings,
    simulate_flux_sweep, vibration_to_displacement, Position, ScanConfig, DEFAULT_DIP_FRACTION,
};
use scanqubit::transmon::{
    asymptotic_frequency, asymptotic_n01, qubit_frequency, solve, TransmonSpec,
};

const L_R: f64 = 7872.0;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

// Written past the libtest capture so the lines show in plain `cargo test`.
fn report(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let ok = out.ok && took < limit;
    let line = format!(
        "{} criterion {n} ({name}): {}; {:.2} s of {} s\n",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Local maxima of `f` on a fine grid, each polished by golden section.
fn maxima(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| lo + h * i as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 1..n {
        if vs[i] > vs[i - 1] && vs[i] >= vs[i + 1] {
            let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            while b - a > 1e-13 * xs[i].abs().max(1.0) {
                let c = b - r * (b - a);
                let d = a + r * (b - a);
                if f(c) > f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            out.push(0.5 * (a + b));
        }
    }
    out
}

fn splitting_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let nu_r = rng.random_range(4.0..12.0);
        let p = JcParams {
            nu_r,
            nu_q: nu_r + rng.random_range(-1.0..1.0),
            g: rng.random_range(0.001..0.25),
            kappa: rng.random_range(0.001..0.05),
            t1: rng.random_range(0.1..100.0),
            amp: 57.0,
            bg: 0.2,
        };
        let m = dressed_modes(&p).unwrap();
        let exact = (4.0 * p.g * p.g + p.detuning().powi(2)).sqrt();
        worst = worst.max((m.splitting() - exact).abs() / m.splitting());
    }
    // on resonance, g from 3κ up; the boundary itself is always included
    let mut peak_worst = (0.0f64, 0.0f64);
    let mut peak_count_ok = true;
    for i in 0..200 {
        let kappa = rng.random_range(0.002..0.03);
        let ratio = if i == 0 { 3.0 } else { rng.random_range(3.0..20.0) };
        let g = ratio * kappa;
        let nu_r = rng.random_range(4.0..12.0);
        let p = JcParams {
            nu_r,
            nu_q: nu_r,
            g,
            kappa,
            t1: 2.6,
            amp: 57.0,
            bg: 0.2,
        };
        let m = dressed_modes(&p).unwrap();
        let span = g + 3.0 * kappa;
        let n = ((2.0 * span) / (kappa / 100.0)).ceil() as usize;
        let peaks = maxima(|x| transmission_at(&m, p.amp, p.bg, x), nu_r - span, nu_r + span, n);
        if peaks.len() != 2 {
            peak_count_ok = false;
            continue;
        }
        let err = (peaks[1] - peaks[0] - 2.0 * g).abs() / kappa;
        if err > peak_worst.0 {
            peak_worst = (err, ratio);
        }
    }
    outcome(
        worst < 1e-12 && peak_count_ok && peak_worst.0 < 1.0 / 50.0,
        format!(
            "max rel splitting error {worst:.1e}; on resonance max |sep - 2g| = {:.4} κ at g = {:.2} κ (limit 0.02 κ)",
            peak_worst.0, peak_worst.1
        ),
    )
}

fn s1a() -> JcParams {
    JcParams {
        nu_r: 8.342,
        nu_q: 8.339,
        g: 0.020,
        kappa: 0.014,
        t1: 2.6,
        amp: 57.0,
        bg: 0.2,
    }
}

fn spectrum_reproduction() -> Outcome {
    let p = s1a();
    let freqs: Vec<f64> = (0..601).map(|i| 8.192 + 0.0005 * i as f64).collect();
    let clean = transmission(&p, &freqs).unwrap();
    let fit = fit_spectrum(&clean, &initial_guess(&clean, p.t1).unwrap(), p.t1).unwrap();
    let truth = [
        ("amp", p.amp),
        ("bg", p.bg),
        ("g", p.g),
        ("kappa", p.kappa),
        ("nu_r", p.nu_r),
        ("nu_q", p.nu_q),
    ];
    let noiseless = truth
        .iter()
        .map(|(k, v)| (fit.value(k).unwrap() - v).abs() / v)
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gs: Vec<f64> = (0..100)
        .map(|_| {
            let values = clean
                .values()
                .iter()
                .map(|v| v * (1.0 + 0.01 * gauss(&mut rng)))
                .collect();
            let t = SpectrumTrace::new(freqs.clone(), values).unwrap();
            let f = fit_spectrum(&t, &initial_guess(&t, p.t1).unwrap(), p.t1).unwrap();
            f.value("g").unwrap()
        })
        .collect();
    let mean = gs.iter().sum::<f64>() / gs.len() as f64;
    let sd = (gs.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gs.len() - 1) as f64).sqrt();
    outcome(
        fit.converged && noiseless < 1e-6 && sd <= 0.0005,
        format!(
            "noiseless max rel error {noiseless:.1e}; 1% noise g = {:.2} ± {:.3} MHz over 100 fits",
            1e3 * mean,
            1e3 * sd
        ),
    )
}

fn dense(ec: f64, ej: f64, cutoff: usize) -> (f64, f64) {
    let dim = 2 * cutoff + 1;
    let n = |i: usize| i as f64 - cutoff as f64;
    let h = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            4.0 * ec * n(i) * n(i)
        } else if i.abs_diff(j) == 1 {
            -0.5 * ej
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (v0, v1) = (eig.eigenvectors.column(order[0]), eig.eigenvectors.column(order[1]));
    let n01: f64 = (0..dim).map(|i| n(i) * v0[i] * v1[i]).sum();
    (eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]], n01.abs())
}

fn transmon_solver() -> Outcome {
    let (ec, ej) = (0.388, 59.0 * 0.388);
    let (oracle_nu, oracle_n01) = dense(ec, ej, 40);
    let sol = solve(&TransmonSpec::new(ec, ej)).unwrap();
    let nu_err = (oracle_nu - asymptotic_frequency(ec, ej)).abs() / oracle_nu;
    let n01_err = (oracle_n01 - asymptotic_n01(ec, ej)).abs() / oracle_n01;
    let vs_oracle = (sol.nu_q - oracle_nu).abs().max((sol.n01 - oracle_n01).abs());
    let mut cutoff_diff = 0.0f64;
    for k in 0..50 {
        let r = 1.0 + 2.0 * k as f64;
        let a = qubit_frequency(&TransmonSpec::with_cutoff(ec, r * ec, 15)).unwrap();
        let b = qubit_frequency(&TransmonSpec::with_cutoff(ec, r * ec, 30)).unwrap();
        cutoff_diff = cutoff_diff.max((a - b).abs());
    }
    outcome(
        nu_err < 0.02 && n01_err < 0.05 && vs_oracle < 1e-9 && cutoff_diff < 1e-9,
        format!(
            "ν_q = {:.4} GHz ({:.2}% from asymptote), n01 = {:.4} ({:.2}%); solver vs oracle {vs_oracle:.1e}; cutoff 15 vs 30 {cutoff_diff:.1e} GHz",
            sol.nu_q,
            100.0 * nu_err,
            sol.n01,
            100.0 * n01_err
        ),
    )
}

fn beta_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut c = || rng.random_range(1e-3..1e3);
    let mut bounded = true;
    let mut symmetric = true;
    let mut scale = true;
    for i in 0..100_000 {
        let cc = CapCoeffs {
            c_ap: c(),
            c_bp: c(),
            c_ag: c(),
            c_bg: c(),
            c_ab: c(),
        };
        let b = beta(&cc);
        bounded &= (0.0..1.0).contains(&b);
        scale &= beta(&cc.scaled(2f64.powi(i % 9 - 4))) == b;
        let sym = CapCoeffs {
            c_bp: cc.c_ap,
            c_bg: cc.c_ag,
            ..cc
        };
        symmetric &= beta(&sym) == 0.0;
    }
    outcome(
        bounded && symmetric && scale,
        format!("1e5 sets: bounded {bounded}, symmetric zero {symmetric}, scale invariant {scale}"),
    )
}

fn gx_points(g_max: f64, x0: f64) -> Vec<(f64, f64)> {
    (0..5)
        .map(|i| {
            let dx = 600.0 * i as f64;
            (dx, g_max * (PI * (dx + x0) / L_R).sin())
        })
        .collect()
}

fn gx_fit() -> Outcome {
    let fit = fit_gx(&gx_points(0.185, 930.0), L_R).unwrap();
    let noiseless = ((fit.value("g_max").unwrap() - 0.185) / 0.185)
        .abs()
        .max(((fit.value("x0").unwrap() - 930.0) / 930.0).abs());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reps = 500;
    let mut sq = 0.0;
    for _ in 0..reps {
        let pts: Vec<(f64, f64)> = gx_points(0.185, 930.0)
            .into_iter()
            .map(|(x, g)| (x, g * (1.0 + 0.02 * gauss(&mut rng))))
            .collect();
        let g = fit_gx(&pts, L_R).unwrap().value("g_max").unwrap();
        sq += (g / 0.185 - 1.0).powi(2);
    }
    let rms = (sq / reps as f64).sqrt();
    outcome(
        fit.converged && noiseless < 1e-8 && rms < 0.03,
        format!(
            "noiseless rel error {noiseless:.1e}; 2% noise g_max rms error {:.2}% over {reps} fits",
            100.0 * rms
        ),
    )
}

fn gy_fit() -> Outcome {
    let grid = surrogate_grid(&SurrogateGeometry::default()).unwrap();
    let geom = GeometryParams::default();
    let x = 3330.0;
    let pts: Vec<(f64, f64)> = (-15..=15)
        .map(|i| {
            let y = 10.0 * i as f64;
            (y, g_of_position(x, y, 11.0, &grid, &geom).unwrap())
        })
        .collect();
    let fit = fit_gy(&pts, &grid, &geom, x).unwrap();
    let noiseless = (fit.value("z").unwrap() - 11.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut noisy_worst = 0.0f64;
    for _ in 0..20 {
        let noisy: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(y, g)| (y, g * (1.0 + 0.02 * gauss(&mut rng))))
            .collect();
        let z = fit_gy(&noisy, &grid, &geom, x).unwrap().value("z").unwrap();
        noisy_worst = noisy_worst.max((z - 11.0).abs());
    }
    // shape: zero on the center line, one maximum on each side
    let g = |y: f64| g_of_position(x, y, 11.0, &grid, &geom).unwrap();
    let center = g(0.0);
    let peaks = maxima(g, -150.0, 150.0, 600);
    let shape = center.abs() < 1e-12
        && peaks.len() == 2
        && (peaks[0] + peaks[1]).abs() < 1e-6
        && peaks[0] < 0.0;
    outcome(
        fit.converged && noiseless < 0.1 && noisy_worst < 0.5 && shape,
        format!(
            "noiseless |Δz| = {noiseless:.1e} um; 2% noise worst |Δz| = {noisy_worst:.3} um over 20 fits; g(0) = {center:.1e}, maxima at {:?} um",
            peaks.iter().map(|p| (p * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
    )
}

fn resonance_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = ScanConfig::demo(0).unwrap();
    let steps = 1000;
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let mut cfg = base.clone();
        cfg.seed = trial;
        cfg.squid.flux = rng.random_range(-0.5..0.5);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let pos = Position {
            x: rng.random_range(500.0..3900.0),
            y: side * rng.random_range(20.0..140.0),
            z: rng.random_range(6.0..20.0),
        };
        let sweep = simulate_flux_sweep(&cfg, pos, (0.0, 1.0), steps, trial).unwrap();
        let found = find_resonance(&sweep, DEFAULT_DIP_FRACTION).unwrap();
        let ec = position_physics(&cfg, pos).unwrap().ec;
        let miss = predicted_crossings(&cfg, ec)
            .unwrap()
            .iter()
            .map(|c| (c - found).abs())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(miss * steps as f64);
    }
    let on = JcParams {
        nu_r: 8.0,
        nu_q: 8.0,
        g: 0.029,
        kappa: 0.013,
        t1: 2.6,
        amp: 57.0,
        bg: 0.0,
    };
    let off = JcParams { nu_q: 12.0, ..on };
    let ratio = coupled_transmission(&on, 8.0) / coupled_transmission(&off, 8.0);
    outcome(
        worst <= 1.0 && ratio < 0.1,
        format!(
            "worst miss {worst:.2} steps over 100 sweeps; on-resonance dip {:.2}% of off-resonance",
            100.0 * ratio
        ),
    )
}

fn vibration_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..1e-2)).collect();
    let kappa = 0.013;
    let s = -0.002;
    let d = vibration_to_displacement(&p, kappa, s).unwrap();
    let exact = p.iter().zip(&d).all(|(pi, di)| *di == pi * (kappa / 2.0) / s.abs());
    let d2 = vibration_to_displacement(&p, kappa, 2.0 * s).unwrap();
    let linear = d.iter().zip(&d2).all(|(a, b)| *b == a / 2.0);
    outcome(
        exact && linear,
        format!("per-bin exact {exact}; halves when the slope doubles {linear}"),
    )
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let trees: Vec<_> = ["first", "second"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let o = scanqubit::cli::run_args([
                "scanqubit",
                "scan",
                "--seed",
                "2024",
                "--out",
                out.to_str().unwrap(),
            ])
            .unwrap();
            assert_eq!(o.exit_code, 0);
            tree(&out)
        })
        .collect();
    let same = trees[0] == trees[1];
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    outcome(
        same,
        format!(
            "two default scans byte-identical {same} ({} files, {bytes} bytes)",
            trees[0].len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let s = Duration::from_secs;
    let results = [
        report(1, "vacuum-Rabi splitting", s(10), splitting_law),
        report(2, "spectrum refit", s(60), spectrum_reproduction),
        report(3, "transmon solver", s(5), transmon_solver),
        report(4, "voltage division", s(5), beta_properties),
        report(5, "g along x", s(5), gx_fit),
        report(6, "g along y", s(60), gy_fit),
        report(7, "resonance finding", s(30), resonance_protocol),
        report(8, "vibration", s(1), vibration_chain),
        report(9, "determinism", s(120), determinism),
    ];
    let failed: Vec<usize> = (1..=9).filter(|i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
