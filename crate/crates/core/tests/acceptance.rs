//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skinfem::fem::{
    solve_benchmark, solve_condensed, Coefficients, FeSpace, FieldMeta, SourceSpec,
};
use skinfem::geometry::{ConfigId, MeridianDomain};
use skinfem::mesh::{MeshSpec, QuadMesh};
use skinfem::physics::{curv_ratio, theoretical_slope, PhysicalParams};
use skinfem::postprocess::{
    conductor_norm, corner_sample_distances, corner_slopes, diagonal_vertex_distances,
    radial_abscissae, scaling_exponent, slope_report,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const B1_EQUATOR_H: f64 = 1.25;

fn mesh(cfg: ConfigId, level: usize) -> Arc<QuadMesh> {
    Arc::new(MeshSpec::new(level).build(cfg).unwrap())
}

fn params(sigma: f64) -> PhysicalParams {
    PhysicalParams::with_sigma(sigma).unwrap()
}

fn significant(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn closed_form_rows() -> Outcome {
    let rows = [
        (5.0, 0.103, 3.67332, 0.148),
        (20.0, 0.0515, 7.88951, 0.069),
        (80.0, 0.0258, 16.32188, 0.033),
    ];
    let mut notes = Vec::new();
    for (sigma, ell, s, ratio) in rows {
        let p = params(sigma);
        let got_s = theoretical_slope(&p, B1_EQUATOR_H);
        let got_ratio = curv_ratio(&p, B1_EQUATOR_H).map_err(|e| e.to_string())?;
        if significant(p.ell, 3) != ell
            || (got_s - s).abs() > 1e-4
            || (got_ratio - ratio).abs() > 1e-3
        {
            return Err(format!(
                "sigma {sigma}: ell {:.5} s {got_s:.5} curv_ratio {got_ratio:.4}",
                p.ell
            ));
        }
        notes.push(format!("s({sigma})={got_s:.5}"));
    }
    Ok(notes.join(" "))
}

fn manufactured() -> Outcome {
    let kappa = params(5.0).kappa;
    let dom = MeridianDomain::new(ConfigId::A);
    let mut worst = 0.0f64;
    for p in [1, 4, 10] {
        let space = Arc::new(FeSpace::new(mesh(ConfigId::A, 2), p).map_err(|e| e.to_string())?);
        let meta = FieldMeta {
            sigma: None,
            p,
            mesh: "A-M2".into(),
        };
        let f = solve_condensed(
            &space,
            &Coefficients::uniform(kappa),
            &SourceSpec::manufactured(kappa),
            meta,
        )
        .map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        let mut n = 0;
        while n < 50 {
            let (r, z) = (2.0 * rng.gen::<f64>(), 4.0 * rng.gen::<f64>() - 2.0);
            if !dom.contains(r, z) {
                continue;
            }
            let v = f.evaluate(r, z).map_err(|e| e.to_string())?;
            worst = worst.max((v - Complex64::new(r, 0.0)).norm());
            n += 1;
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} > 1e-10"))
    }
}

fn slope_reproduction() -> Outcome {
    let m = mesh(ConfigId::B1, 3);
    let dom = MeridianDomain::new(ConfigId::B1);
    let mut notes = Vec::new();
    let mut ok = true;
    for (sigma, p, limit) in [(5.0, 10, 0.015), (20.0, 12, 0.004), (80.0, 16, 0.0016)] {
        let prm = params(sigma);
        let f = solve_benchmark(ConfigId::B1, m.clone(), &prm, p).map_err(|e| e.to_string())?;
        let radii = radial_abscissae(&m, p).map_err(|e| e.to_string())?;
        let rep = slope_report(&f, &dom, &prm, p, &radii).map_err(|e| e.to_string())?;
        ok &= rep.rel_err <= limit && rep.rel_err < rep.curv_ratio;
        notes.push(format!(
            "sigma {sigma}: n={} s~={:.5} err={:.4} (limit {limit}, curv_ratio {:.3})",
            rep.n_used, rep.slope_fit, rep.rel_err, rep.curv_ratio
        ));
    }
    let text = notes.join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn sigma_scaling() -> Outcome {
    let m = mesh(ConfigId::B1, 3);
    let pairs = [80.0, 100.0, 200.0, 300.0, 400.0]
        .iter()
        .map(|&sigma| {
            let f = solve_benchmark(ConfigId::B1, m.clone(), &params(sigma), 16)
                .map_err(|e| e.to_string())?;
            Ok((sigma, conductor_norm(&f)))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let exponent = scaling_exponent(&pairs).map_err(|e| e.to_string())?;
    if (-0.30..=-0.20).contains(&exponent) {
        Ok(format!("exponent {exponent:.5}"))
    } else {
        Err(format!("exponent {exponent:.5} outside [-0.30, -0.20]"))
    }
}

fn p_plateau() -> Outcome {
    let (coarse, fine) = (mesh(ConfigId::A, 2), mesh(ConfigId::A, 3));
    let mut worst = 0.0f64;
    for sigma in [5.0, 20.0, 80.0] {
        let prm = params(sigma);
        let reference = conductor_norm(
            &solve_benchmark(ConfigId::A, fine.clone(), &prm, 16).map_err(|e| e.to_string())?,
        );
        for p in 12..=20 {
            let a = conductor_norm(
                &solve_benchmark(ConfigId::A, coarse.clone(), &prm, p)
                    .map_err(|e| e.to_string())?,
            );
            worst = worst.max((a - reference).abs());
        }
    }
    if worst <= 1e-4 {
        Ok(format!(
            "max |A(p, M2) - A(16, M3)| over p = 12..20 is {worst:.2e}"
        ))
    } else {
        Err(format!("max difference {worst:.2e} > 1e-4"))
    }
}

fn corner() -> Outcome {
    let m = mesh(ConfigId::A, 4);
    let prm = params(80.0);
    let f = solve_benchmark(ConfigId::A, m.clone(), &prm, 16).map_err(|e| e.to_string())?;
    let rho = corner_sample_distances(prm.ell, &diagonal_vertex_distances(&m));
    let slopes = corner_slopes(&f, &rho).map_err(|e| e.to_string())?;
    let flat = theoretical_slope(&prm, 0.0);
    let nearest = slopes[0].1 / flat;
    let far = slopes
        .iter()
        .filter(|(r, _)| *r >= 2.0 * prm.ell)
        .map(|s| s.1 / flat)
        .fold(f64::INFINITY, f64::min);
    let text = format!("nearest {nearest:.3} of s, smallest beyond 2 ell {far:.3} of s");
    if nearest < 0.3 && far > 0.5 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    cases: u32,
    check: impl Fn(S::Value) -> CheckResult,
) -> Result<(), String> {
    runner(cases)
        .run(&strategy, check)
        .map_err(|e| format!("{name}: {e}"))
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut record = |r: Result<(), String>| {
        count += 1;
        if let Err(e) = r {
            failures.push(e);
        }
    };
    record(run_property(
        "frenet",
        (spheroid_strategy(), 0.01f64..0.99),
        64,
        |(c, f)| check_frenet(c, f),
    ));
    record(run_property(
        "unit speed",
        (spheroid_strategy(), 0.01f64..0.99),
        64,
        |(c, f)| check_unit_speed(c, f),
    ));
    record(run_property(
        "orientation",
        (spheroid_strategy(), 0.01f64..0.99),
        64,
        |(c, f)| check_orientation(c, f),
    ));
    record(run_property(
        "normal coordinates",
        (spheroid_strategy(), 0.0f64..1.0, 0.0f64..0.9),
        64,
        |(c, f, h)| check_normal_coords(c, f, h),
    ));
    record(run_property(
        "ellipse length",
        (1.0f64..8.0, 0.1f64..3.0),
        64,
        |(r, c)| check_ellipse_length(r, c),
    ));
    record(run_property(
        "reparametrization",
        (1.0f64..8.0, 0.0f64..1.0),
        64,
        |(r, f)| check_reparametrization_idempotent(r, f),
    ));
    record(run_property(
        "skin depth identity",
        sigma_strategy(),
        64,
        check_length_identity,
    ));
    record(run_property(
        "v0 modulus",
        (sigma_strategy(), 0.0f64..150.0, complex_strategy()),
        64,
        |(s, y, h)| check_v0_modulus(s, y, h),
    ));
    record(run_property(
        "v0 ode",
        (sigma_strategy(), 1.0f64..150.0, complex_strategy()),
        64,
        |(s, y, h)| check_v0_ode(s, y, h),
    ));
    record(run_property(
        "v1 ode",
        (
            sigma_strategy(),
            1.0f64..150.0,
            complex_strategy(),
            complex_strategy(),
            -3.0f64..3.0,
            -3.0f64..3.0,
        ),
        64,
        |(s, y, h0, h1, k, zr)| check_v1_ode(s, y, h0, h1, k, zr),
    ));
    record(run_property(
        "slope from profile",
        (sigma_strategy(), 0.01f64..5.0, -2.0f64..2.0),
        64,
        |(s, y, h)| check_slope_from_profile(s, y, h),
    ));
    record(run_property(
        "v1 modulus expansion",
        (sigma_strategy(), 0.0f64..3.0, -2.0f64..2.0),
        64,
        |(s, y, h)| check_v1_modulus_expansion(s, y, h),
    ));
    record(run_property(
        "regression shift",
        (samples_strategy(), -10.0f64..10.0),
        64,
        |(v, c)| check_regression_shift(&v, c),
    ));
    record(run_property(
        "regression exponential",
        (sigma_strategy(), 3usize..40),
        64,
        |(s, n)| check_regression_exponential(s, n),
    ));
    record(run_property(
        "matrix symmetry",
        (config_strategy(), 1usize..=5, sigma_strategy()),
        12,
        |(c, p, s)| check_matrix_symmetry(c, p, s),
    ));
    record(run_property(
        "mesh conformity",
        (config_strategy(), 1usize..=6),
        12,
        |(c, l)| check_mesh_conformity(c, l),
    ));
    if failures.is_empty() {
        Ok(format!("{count} property suites"))
    } else {
        Err(failures.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("closed-form table rows", closed_form_rows),
        ("manufactured solution", manufactured),
        ("slope reproduction on M3", slope_reproduction),
        ("sigma^-1/4 scaling", sigma_scaling),
        ("p-convergence plateau", p_plateau),
        ("corner behaviour", corner),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
