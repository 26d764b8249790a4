//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apcomp::cli::{run_pipeline, ExperimentConfig};
use apcomp::completion::{dc_fs, dc_ie, limited_moments, offset_mode, phi, CompletionConfig, MomentRule};
use apcomp::forward::{add_noise, min_truncation, solve_disk_series, FarFieldMatrix, NystromSolver};
use apcomp::imaging::{dsm, fm, SamplingGrid, FM_DEFAULT_REG};
use apcomp::prolate::{build_prolate, decay_rate, precise_eigenvalues, spectrum, ProlateVariant, RegularizationSpec};
use apcomp::scene::{ApertureGrid, Boundary, BoundaryCondition};
use apcomp::specfun::bessel_jy;
use apcomp::Execution;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_frobenius(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn reference_grid() -> ApertureGrid {
    ApertureGrid::make(PI / 2.0, 128).unwrap()
}

fn reference_completion() -> CompletionConfig {
    CompletionConfig {
        j: 9,
        reg: RegularizationSpec::Spectral { epsilon: 1e-3 },
        ..Default::default()
    }
}

fn peanut_truth() -> FarFieldMatrix {
    NystromSolver::new(&Boundary::peanut(), BoundaryCondition::Dirichlet, 5.0, 128)
        .unwrap()
        .msr(&reference_grid(), true, Execution::default())
        .unwrap()
}

fn synth(grid: &ApertureGrid, full: bool, b: &DMatrix<Complex64>, j: usize) -> FarFieldMatrix {
    let n = 2 * j + 1;
    FarFieldMatrix::from_fn(grid.clone(), 1.0, full, |i, jj| {
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..n {
            for q in 0..n {
                s += b[(p, q)] * phi(offset_mode(p, j), grid.theta_obs(jj)) * phi(offset_mode(q, j), grid.theta_inc(i));
            }
        }
        s
    })
    .unwrap()
}

fn random_coefficients(rng: &mut ChaCha8Rng, j: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(2 * j + 1, 2 * j + 1, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn c1_prolate_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for j in [4, 9, 39] {
        let p = build_prolate(PI, j, ProlateVariant::Observation).unwrap();
        let n = 2 * j + 1;
        worst = worst.max((p.entries() - DMatrix::<f64>::identity(n, n)).amax());
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-14 && t < Duration::from_secs(1),
        format!("max|P(pi) - I| = {worst:.1e}, {t:.2?}"),
    )
}

fn c2_spectral_suite() -> Outcome {
    let start = Instant::now();
    let j = 39;
    let n = 2 * j + 1;
    let mut notes = Vec::new();
    let mut pass = true;

    let mut inside = true;
    for alpha in [0.3 * PI, PI / 2.0, 0.7 * PI] {
        for e in precise_eigenvalues(alpha, n).unwrap() {
            inside &= e.sigma > 0.0 && e.complement > 0.0;
        }
    }
    notes.push(format!("inside (0,1): {inside}"));
    pass &= inside;

    let a = spectrum(&build_prolate(0.3 * PI, j, ProlateVariant::Observation).unwrap()).unwrap();
    let b = spectrum(&build_prolate(0.7 * PI, j, ProlateVariant::Observation).unwrap()).unwrap();
    let sym = (0..n)
        .map(|i| (a.eigenvalues[i] + b.eigenvalues[n - 1 - i] - 1.0).abs())
        .fold(0.0, f64::max);
    notes.push(format!("symmetry {sym:.1e}"));
    pass &= sym < 1e-8;

    let half = spectrum(&build_prolate(PI / 2.0, j, ProlateVariant::Observation).unwrap()).unwrap();
    let cluster = half.eigenvalues.iter().filter(|&&s| s > 0.1 && s < 0.9).count();
    notes.push(format!("cluster {cluster}"));
    pass &= cluster <= 12;

    let sizes = [21usize, 41, 79];
    let logs: Vec<f64> = sizes
        .iter()
        .map(|&m| precise_eigenvalues(PI / 2.0, m).unwrap().last().unwrap().sigma.ln())
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&m| m as f64).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = logs.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let gamma = decay_rate(PI / 2.0);
    let dev = (slope + gamma).abs() / gamma;
    notes.push(format!("slope {slope:.4} vs -{gamma:.4} ({:.1}%)", 100.0 * dev));
    pass &= dev <= 0.3;

    let t = start.elapsed();
    notes.push(format!("{t:.2?}"));
    outcome(pass && t < Duration::from_secs(5), notes.join(", "))
}

fn c3_forward_oracle() -> Outcome {
    let start = Instant::now();
    let grid = reference_grid();
    let (k, radius) = (5.0, 2.0);
    let mut errs = Vec::new();
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let ny = NystromSolver::new(&Boundary::disk(radius), bc, k, 128)
            .unwrap()
            .msr(&grid, true, Execution::default())
            .unwrap();
        let series = solve_disk_series(radius, bc, k, &grid, min_truncation(k, radius)).unwrap();
        errs.push(rel_frobenius(ny.data(), series.data()));
    }
    let t = start.elapsed();
    outcome(
        errs[0] < 1e-6 && errs[1] < 1e-5 && t < Duration::from_secs(30),
        format!("Dirichlet {:.1e}, Neumann {:.1e}, {t:.2?}", errs[0], errs[1]),
    )
}

fn c4_reciprocity(truth: &FarFieldMatrix) -> Outcome {
    let d = truth.reciprocity_defect();
    outcome(d < 1e-6, format!("|F - F^T|/|F| = {d:.1e}"))
}

fn c5_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let j = 9;
    let full = ApertureGrid::make(PI, 64).unwrap();
    let b = random_coefficients(&mut rng, j);
    let f = synth(&full, true, &b, j);
    let cfg = CompletionConfig {
        j,
        reg: RegularizationSpec::Tsvd { cutoff: 0.5 },
        ..Default::default()
    };
    let scale = f.data().camax();
    let e_fs = (dc_fs(&f, &cfg).unwrap().data() - f.data()).camax() / scale;
    let e_ie = (dc_ie(&f, &cfg, None).unwrap().data() - f.data()).camax() / scale;

    let grid = reference_grid();
    let p = build_prolate(grid.alpha(), j, ProlateVariant::Observation).unwrap();
    let q = build_prolate(grid.alpha(), j, ProlateVariant::Incidence).unwrap();
    let px = p.entries().map(|v| Complex64::new(v, 0.0));
    let pd = q.entries().map(|v| Complex64::new(v, 0.0));
    let mut e_map: f64 = 0.0;
    for _ in 0..10 {
        let b = random_coefficients(&mut rng, j);
        let moments = limited_moments(&synth(&grid, false, &b, j), j, MomentRule::default()).unwrap();
        e_map = e_map.max((moments - &px * &b * &pd).camax());
    }
    outcome(
        e_fs < 1e-8 && e_ie < 1e-8 && e_map < 1e-8,
        format!("DC-FS {e_fs:.1e}, DC-IE {e_ie:.1e}, forward map {e_map:.1e}"),
    )
}

fn c6_reference_completion(truth: &FarFieldMatrix) -> Outcome {
    let start = Instant::now();
    let noisy = add_noise(&truth.measured_block(), 0.05, 1).unwrap();
    let cfg = reference_completion();
    let l = noisy.size();
    let measured = |f: &FarFieldMatrix| f.data().view((0, 0), (l, l)).into_owned();
    let e_fs = rel_frobenius(&measured(&dc_fs(&noisy, &cfg).unwrap()), noisy.data());
    let e_ie = rel_frobenius(&measured(&dc_ie(&noisy, &cfg, None).unwrap()), noisy.data());
    let t = start.elapsed();
    outcome(
        e_fs <= 0.10 && e_ie <= 0.10 && t < Duration::from_secs(120),
        format!("DC-FS {e_fs:.4}, DC-IE {e_ie:.4}, {t:.2?}"),
    )
}

fn c7_point_scatterer() -> Outcome {
    let k = 5.0;
    let z0 = [0.4, -0.3];
    let grid = ApertureGrid::make(PI, 128).unwrap();
    let f = FarFieldMatrix::from_fn(grid.clone(), k, true, |i, j| {
        let (x, d) = (grid.theta_obs(j), grid.theta_inc(i));
        let phase = -k * (x.cos() * z0[0] + x.sin() * z0[1]) + k * (d.cos() * z0[0] + d.sin() * z0[1]);
        Complex64::from_polar(1.0, phase)
    })
    .unwrap();
    let sg = SamplingGrid::square(2.0, 51);
    let field = dsm(&f, &sg).unwrap();
    let peak = (2.0 * PI).powi(2);
    let mut dev: f64 = 0.0;
    for iy in 0..51 {
        for ix in 0..51 {
            let z = sg.point(ix, iy);
            let j0 = bessel_jy(0, k * (z[0] - z0[0]).hypot(z[1] - z0[1])).unwrap().j;
            dev = dev.max((field.value(ix, iy) - peak * j0 * j0).abs() / peak);
        }
    }
    let (ix, iy) = field.argmax();
    let z = sg.point(ix, iy);
    let (hx, hy) = sg.cell();
    let near = (z[0] - z0[0]).abs() <= hx + 1e-12 && (z[1] - z0[1]).abs() <= hy + 1e-12;
    outcome(
        dev < 1e-3 && near,
        format!("max relative deviation {dev:.1e}, peak at ({:.2}, {:.2})", z[0], z[1]),
    )
}

fn disk_contrast(f: &FarFieldMatrix, radius: f64) -> (f64, bool) {
    let k = f.wavenumber();
    let sg = SamplingGrid::square(4.0, 81);
    let wavelength = 2.0 * PI / k;
    let ind = fm(f, &sg, &FM_DEFAULT_REG, 0.0).unwrap();
    let inside = ind.mean_where(|z| z[0].hypot(z[1]) < radius).unwrap();
    let outside = ind.mean_where(|z| z[0].hypot(z[1]) > radius + wavelength).unwrap();
    let d = dsm(f, &sg).unwrap();
    let (ix, iy) = d.argmax();
    let z = sg.point(ix, iy);
    (inside / outside, z[0].hypot(z[1]) < radius)
}

fn c8_imaging_contrast() -> Outcome {
    let (k, radius) = (5.0, 2.0);
    let full_grid = ApertureGrid::make(PI, 128).unwrap();
    let full = solve_disk_series(radius, BoundaryCondition::Dirichlet, k, &full_grid, min_truncation(k, radius)).unwrap();
    let (ratio_full, dsm_inside) = disk_contrast(&full, radius);

    let grid = reference_grid();
    let truth = solve_disk_series(radius, BoundaryCondition::Dirichlet, k, &grid, min_truncation(k, radius)).unwrap();
    let completed = dc_ie(&truth.measured_block(), &reference_completion(), None).unwrap();
    let (ratio_dcie, _) = disk_contrast(&completed, radius);
    outcome(
        ratio_full >= 10.0 && dsm_inside && ratio_dcie >= 3.0,
        format!("FM full {ratio_full:.1}, DSM argmax inside {dsm_inside}, FM after DC-IE {ratio_dcie:.2}"),
    )
}

fn c9_shadow_improvement(truth: &FarFieldMatrix) -> Outcome {
    let peanut = Boundary::peanut();
    let noisy = add_noise(&truth.measured_block(), 0.05, 1).unwrap();
    let completed = dc_ie(&noisy, &reference_completion(), None).unwrap();
    let sg = SamplingGrid::default();
    let shadow = |z: [f64; 2]| z[1] < 0.0 && peanut.distance(z) <= 0.25;
    let score = |f: &FarFieldMatrix| {
        let field = dsm(f, &sg).unwrap();
        field.mean_where(shadow).unwrap() / field.max()
    };
    let raw = score(&noisy);
    let dcie = score(&completed);
    outcome(dcie > raw, format!("shadow mean: raw {raw:.4}, DC-IE {dcie:.4}"))
}

fn c10_determinism() -> Outcome {
    let cfg = ExperimentConfig::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_pipeline(&cfg, a.path(), Execution::default()).unwrap();
    let mb = run_pipeline(&cfg, b.path(), Execution::default()).unwrap();
    let mut csvs = 0;
    let mut same = ma.artifacts.len() == mb.artifacts.len();
    for art in ma.artifacts.iter().filter(|x| x.path.ends_with(".csv")) {
        csvs += 1;
        let x = std::fs::read(a.path().join(&art.path)).unwrap();
        let y = std::fs::read(b.path().join(&art.path)).unwrap();
        same &= x == y;
    }
    outcome(same && csvs > 0, format!("{csvs} CSV files compared"))
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let truth = peanut_truth();
    let checks: Vec<(&str, Check)> = vec![
        ("prolate identity", Box::new(c1_prolate_identity)),
        ("prolate spectral suite", Box::new(c2_spectral_suite)),
        ("forward oracle equivalence", Box::new(c3_forward_oracle)),
        ("reciprocity", Box::new(|| c4_reciprocity(&truth))),
        ("completion round trips", Box::new(c5_round_trips)),
        ("reference-setting completion", Box::new(|| c6_reference_completion(&truth))),
        ("DSM point-scatterer closed form", Box::new(c7_point_scatterer)),
        ("imaging contrast", Box::new(c8_imaging_contrast)),
        ("shadow-side improvement", Box::new(|| c9_shadow_improvement(&truth))),
        ("determinism", Box::new(c10_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
