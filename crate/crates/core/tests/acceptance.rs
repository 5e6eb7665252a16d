//! Acceptance run. Prints one PASS/FAIL line per criterion and fails if any
//! criterion is red. Tolerances and time limits are pinned below.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use hzlab::config::parse_config;
use hzlab::curve_bounds::{
    box_area, build_box_curve, curve_from_curvature, random_box_curve, random_closed_profile,
    verify_curvature_area_bound, BoxCurve, CurvatureProfile, CurveOptions,
};
use hzlab::magnetic::{
    build_orbit, energy_sweep, orbit_invariants, FourierMode, MagneticField, OrbitOptions,
};
use hzlab::model::{
    acceptance_placement, admissibility_check, capacity_witness, minimal_period,
    numeric_return_time, preset_table, Branch, DimensionData, Family, PresetParams, WindowClass,
};
use hzlab::report::{render_report, Format};
use hzlab::scenario::{run_scenario, RunOptions};
use hzlab::spectral::{
    brute_force_homology, compute_pages, cp_betti, hopf_bundle, hopf_complex,
    random_filtered_complex, splitting_check, torus_complex, trivial_sphere_bundle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CIRCLE_BOX_TOL: f64 = 1e-9;
const CIRCLE_AREA_TOL: f64 = 1e-6;
const CHAIN_TOL: f64 = 1e-6;
const CONSTANT_FIELD_TOL: f64 = 1e-8;
const CERTIFICATE_TOL: f64 = 1e-6;
const ACTION_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(
    id: u32,
    title: &str,
    limit: Option<Duration>,
    f: impl FnOnce() -> Result<String, String>,
) -> bool {
    let start = Instant::now();
    let res = f();
    let elapsed = start.elapsed();
    let mut out = match res {
        Ok(detail) => Outcome { pass: true, detail },
        Err(detail) => Outcome {
            pass: false,
            detail,
        },
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail = format!("{}; over time limit {limit:?}", out.detail);
        }
    }
    println!(
        "{} criterion {id}: {title} [{:.3} s] {}",
        if out.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        out.detail
    );
    out.pass
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn circle_equality() -> Result<String, String> {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for k in 1..=3u32 {
        for &(kc, v) in &[(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
            let r = v / kc;
            let curve = curve_from_curvature(
                &CurvatureProfile::constant(kc, TAU / kc),
                v,
                TAU * k as f64 / kc,
                &CurveOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            let rep = verify_curvature_area_bound(&curve, CHAIN_TOL).map_err(|e| e.to_string())?;
            ensure(rep.rotation_number == k, || {
                format!("rotation number {} for k = {k}", rep.rotation_number)
            })?;
            let e_box = rel(rep.area_box, k as f64 * 4.0 * r * r);
            let e_curve = rel(rep.area_curve, k as f64 * PI * r * r);
            worst = (worst.0.max(e_box), worst.1.max(e_curve));
        }
    }
    ensure(
        worst.0 < CIRCLE_BOX_TOL && worst.1 < CIRCLE_AREA_TOL,
        || format!("box rel {:e}, curve rel {:e}", worst.0, worst.1),
    )?;
    Ok(format!(
        "max rel error: box {:.1e}, curve {:.1e}",
        worst.0, worst.1
    ))
}

fn shoelace(b: &BoxCurve) -> f64 {
    let v = b.vertices();
    v.windows(2)
        .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
        .sum::<f64>()
        .abs()
        / 2.0
}

fn curvature_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240);
    for i in 0..200 {
        let k = 1 + (i % 3) as u32;
        let period = rng.random_range(1.0..10.0);
        let speed = rng.random_range(0.5..2.0);
        let prof = random_closed_profile(&mut rng, k, period);
        let curve = curve_from_curvature(&prof, speed, period, &CurveOptions::default())
            .map_err(|e| format!("curve {i}: {e}"))?;
        let rep = verify_curvature_area_bound(&curve, CHAIN_TOL)
            .map_err(|e| format!("curve {i}: {e}"))?;
        let bc = build_box_curve(&curve, CHAIN_TOL).map_err(|e| format!("curve {i}: {e}"))?;
        let a_box = shoelace(&bc.curve);
        let bound = k as f64 * 4.0 * (speed / prof.minimum()).powi(2);
        let a = curve.signed_area();
        ensure(
            rep.rotation_number == k
                && a >= -CHAIN_TOL
                && a <= a_box + CHAIN_TOL
                && a_box <= bound + CHAIN_TOL,
            || format!("curve {i}: A = {a}, A_box = {a_box}, bound = {bound}"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20241);
    for i in 0..500 {
        let k = 1 + i % 4;
        let b = random_box_curve(&mut rng, k);
        let c = b.a.iter().chain(&b.b).fold(0.0f64, |m, x| m.max(x.abs()));
        let area = shoelace(&b);
        ensure(area > 0.0 && area <= k as f64 * c * c, || {
            format!("box {i}: {area}")
        })?;
        ensure((box_area(&b) - area).abs() < 1e-12 * (1.0 + area), || {
            format!("box {i}: formula")
        })?;
    }
    Ok("200 curves, 500 boxes".into())
}

fn constant_field() -> Result<String, String> {
    let opts = OrbitOptions::default();
    let mut worst = 0.0f64;
    for &f0 in &[1.0, 5.0] {
        let field = MagneticField::constant_field(f0).map_err(|e| e.to_string())?;
        for &e in &[0.05, 0.5] {
            let o = build_orbit(&field, e, [0.3, 0.6], &opts).map_err(|e| e.to_string())?;
            let inv = orbit_invariants(&field, &o, &opts).map_err(|e| e.to_string())?;
            ensure(inv.rotation_number == -1, || {
                format!("k = {}", inv.rotation_number)
            })?;
            let a = inv.areas;
            for (got, want) in [
                (inv.period, TAU / f0),
                (a.a1, 4.0 * PI * e / f0),
                (a.a2, -TAU * e / f0),
                (a.a, TAU * e / f0),
            ] {
                worst = worst.max(rel(got, want));
            }
            // F̲T = −2πk = F̄T.
            let k = inv.rotation_number as f64;
            ensure(
                inv.rotation_bounds_hold && rel(f0 * inv.period, -TAU * k) < CONSTANT_FIELD_TOL,
                || format!("rotation bound F0 T = {}", f0 * inv.period),
            )?;
        }
    }
    ensure(worst < CONSTANT_FIELD_TOL, || format!("max rel {worst:e}"))?;
    Ok(format!("max rel error {worst:.1e}"))
}

fn cos_cos_field() -> MagneticField {
    MagneticField::new(
        10.0,
        vec![FourierMode::cos(1, 1, 0.5), FourierMode::cos(1, -1, 0.5)],
    )
    .unwrap()
}

fn energies() -> Vec<f64> {
    (0..10).map(|i| 0.01 + 0.01 * i as f64).collect()
}

fn torus_sweep() -> Result<String, String> {
    let field = cos_cos_field();
    let v = 11.0 / 9.0;
    ensure((field.variance_ratio - v).abs() < 1e-9, || {
        format!("V = {}", field.variance_ratio)
    })?;
    ensure(v < FRAC_PI_2.sqrt(), || "hypothesis".into())?;
    let opts = OrbitOptions {
        certificate_tol: CERTIFICATE_TOL,
        ..OrbitOptions::default()
    };
    let sweep = energy_sweep(&field, &energies(), 8, &opts);
    let mut total = 0;
    for l in &sweep.levels {
        let c_e = 4.0 * l.energy / (PI * v) * (FRAC_PI_2 - v * v);
        let contractible: Vec<_> = l.orbits.iter().filter(|o| o.contractible).collect();
        ensure(!contractible.is_empty(), || {
            format!("E = {}: no contractible orbit", l.energy)
        })?;
        for o in contractible {
            let a = o.a.ok_or("missing area")?;
            ensure(a.abs() >= c_e * o.period - CERTIFICATE_TOL, || {
                format!(
                    "E = {}: |A| = {} < C T = {}",
                    l.energy,
                    a.abs(),
                    c_e * o.period
                )
            })?;
            total += 1;
        }
    }
    ensure(sweep.all_levels_certified, || {
        "sweep reports an uncertified level".into()
    })?;
    Ok(format!(
        "{total} contractible orbits certified over 10 levels"
    ))
}

fn capacity_witness_check() -> Result<String, String> {
    let (radius, eps) = (1.0, 0.1);
    let prof = capacity_witness(radius, eps).map_err(|e| e.to_string())?;
    ensure((prof.max_value() - (PI - eps)).abs() < 1e-12, || {
        format!("max {}", prof.max_value())
    })?;
    let adm = admissibility_check(&prof);
    ensure(adm.admissible && adm.sup_slope < PI, || {
        format!("sup slope {}", adm.sup_slope)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut min_period = f64::INFINITY;
    for seed in 0..100 {
        let s = rng.random_range(0.0..radius * radius);
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let z = v.map(|x| x / n * s.sqrt());
        let ret = numeric_return_time(&prof, z, 1.0, 1e-6).map_err(|e| e.to_string())?;
        ensure(ret.is_none(), || format!("seed {seed} returns at {ret:?}"))?;
        // π/|α′| from the slope is the analytic minimal period.
        let slope = prof.slope(s).abs();
        if slope > 0.0 {
            let p = PI / slope;
            ensure(p > 1.0, || format!("seed {seed}: period {p}"))?;
            ensure(
                minimal_period(&prof, s).is_some_and(|q| (q - p).abs() < 1e-12),
                || format!("seed {seed}: period mismatch"),
            )?;
            min_period = min_period.min(p);
        }
    }
    Ok(format!("min period over seeds {min_period:.4}"))
}

fn table_one() -> Result<String, String> {
    let params = PresetParams::acceptance();
    let dims = DimensionData::new(1, 1).map_err(|e| e.to_string())?;
    let (window, rows) =
        preset_table(&params, dims, acceptance_placement()).map_err(|e| e.to_string())?;
    ensure(!rows.is_empty(), || "no levels".into())?;
    let mut worst = 0.0f64;
    for r in &rows {
        let k = r.k as i64;
        let want = match (r.family, r.branch) {
            (Family::Plus, Branch::C) => 2 * k - 1,
            (Family::Plus, Branch::D) => 2 * k - 2,
            (_, Branch::C) => 4 * k - 1,
            (_, Branch::D) => 4 * k - 2,
        };
        ensure(r.index == want, || {
            format!("{r:?}: index {} != {want}", r.index)
        })?;
        let prof = params.profile(r.family).map_err(|e| e.to_string())?;
        let action = prof.value(r.level) + r.k as f64 * PI * r.level;
        worst = worst.max((r.action - action).abs());
        let excluded = !(r.action > window.a && r.action < window.b);
        let expect_out = match r.branch {
            Branch::D => r.k == 1,
            Branch::C => r.k >= 2,
        };
        ensure(excluded == expect_out, || {
            format!("{r:?} in window ({}, {})", window.a, window.b)
        })?;
        ensure((r.window_class != WindowClass::Inside) == excluded, || {
            format!("{r:?}: class")
        })?;
    }
    ensure(worst < ACTION_TOL, || format!("action error {worst:e}"))?;
    Ok(format!("{} levels, action error {worst:.1e}", rows.len()))
}

fn spectral_engine() -> Result<String, String> {
    let seq = compute_pages(&hopf_complex(), None);
    let tot = seq.infinity_total();
    let dims: Vec<usize> = (0..=3).map(|l| tot.get(&l).copied().unwrap_or(0)).collect();
    ensure(dims == [1, 0, 0, 1], || format!("Hopf E^inf {dims:?}"))?;
    let d2 = seq
        .page(2)
        .and_then(|p| p.differential((2, 0)))
        .ok_or("no d2")?;
    ensure(d2.rank == 1, || format!("d2 rank {}", d2.rank))?;
    let tot = compute_pages(&torus_complex(), None).infinity_total();
    let dims: Vec<usize> = tot.values().copied().collect();
    ensure(dims == [1, 2, 1], || format!("torus {dims:?}"))?;
    for (m, n) in [(1, 2), (2, 3)] {
        let seq = compute_pages(
            &trivial_sphere_bundle(m, n)
                .to_complex()
                .map_err(|e| e.to_string())?,
            None,
        );
        let rep = splitting_check(&seq, m, n, &cp_betti(m)).map_err(|e| e.to_string())?;
        ensure(rep.splits && rep.corner_survives, || {
            format!("({m}, {n}): {rep:?}")
        })?;
    }
    let seq = compute_pages(
        &hopf_bundle().to_complex().map_err(|e| e.to_string())?,
        None,
    );
    let rep = splitting_check(&seq, 1, 1, &cp_betti(1)).map_err(|e| e.to_string())?;
    ensure(!rep.splits, || "Hopf bundle splits".into())?;
    Ok("Hopf, torus, products and Hopf bundle as expected".into())
}

fn oracle_equivalence() -> Result<String, String> {
    let mut gens = 0;
    for seed in 0..20u64 {
        let c = random_filtered_complex(&mut ChaCha8Rng::seed_from_u64(1000 + seed), 40);
        ensure(c.len() <= 40, || {
            format!("seed {seed}: {} generators", c.len())
        })?;
        gens += c.len();
        let tot = compute_pages(&c, None).infinity_total();
        for (l, d) in brute_force_homology(&c) {
            let got = tot.get(&l).copied().unwrap_or(0);
            ensure(got == d, || {
                format!("seed {seed}, degree {l}: {got} vs {d}")
            })?;
        }
        for (l, d) in &tot {
            ensure(
                *d == 0 || brute_force_homology(&c).get(l) == Some(d),
                || format!("seed {seed}: extra degree {l}"),
            )?;
        }
    }
    Ok(format!("20 complexes, {gens} generators"))
}

/// Every acceptance workload as a scenario config.
fn scenario_configs() -> Vec<&'static str> {
    vec![
        "scenario = \"curve-bound\"\n[curve]\nmode = \"curvature\"\nmean = 2.0\nperiod = 3.141592653589793\nspeed = 1.0\nduration = 9.42477796076938\n",
        "scenario = \"curve-bound\"\nseed = 20240\n[curve]\nmode = \"random\"\ncount = 200\nrotation_numbers = [1, 2, 3]\nboxes = 500\n",
        "scenario = \"magnetic\"\n[magnetic]\nconstant = 5.0\nenergies = [0.05, 0.5]\ngrid = 4\n",
        "scenario = \"magnetic\"\n[magnetic]\nconstant = 10.0\nenergies = [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1]\ngrid = 8\nmodes = [{ m1 = 1, m2 = 1, coeff_cos = 0.5 }, { m1 = 1, m2 = -1, coeff_cos = 0.5 }]\n",
        "scenario = \"levels\"\nseed = 31\n[levels]\na_position = 0.1\nb_position = 0.05\npreset = { max_h = 4.0, big_r = 1.0, r = 0.9746794344808963, eps = 0.05 }\nwitness = { radius = 1.0, eps = 0.1, seeds = 100 }\n",
        "scenario = \"spectral\"\n[spectral]\nsource = { kind = \"preset\", name = \"hopf-bundle\" }\nsplitting = { m = 1, n = 1, betti = [1, 0, 1] }\n",
        "scenario = \"spectral\"\n[spectral]\nsource = { kind = \"preset\", name = \"trivial-bundle\" }\nsplitting = { m = 2, n = 3, betti = [1, 0, 1, 0, 1] }\nexpect_split = true\noracle = true\n",
        "scenario = \"spectral\"\nseed = 1000\n[spectral]\nsource = { kind = \"random\", count = 20, max_generators = 40 }\n",
    ]
}

fn render_all(threads: usize) -> Result<Vec<Vec<(String, String)>>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| {
        scenario_configs()
            .into_iter()
            .map(|text| {
                let cfg = parse_config(text).map_err(|e| e.to_string())?;
                let opts = RunOptions {
                    oracle: true,
                    ..RunOptions::default()
                };
                let doc = run_scenario(&cfg, &opts).map_err(|e| e.to_string())?;
                let mut files =
                    render_report(&doc, Format::Csv, "run").map_err(|e| e.to_string())?;
                files.extend(render_report(&doc, Format::Json, "run").map_err(|e| e.to_string())?);
                Ok(files)
            })
            .collect()
    })
}

fn determinism() -> Result<String, String> {
    let one = render_all(1)?;
    let eight = render_all(8)?;
    let mut files = 0;
    for (i, (a, b)) in one.iter().zip(&eight).enumerate() {
        ensure(a.len() == b.len(), || format!("run {i}: file lists differ"))?;
        for ((na, ba), (nb, bb)) in a.iter().zip(b) {
            ensure(na == nb && ba == bb, || format!("run {i}: {na} differs"))?;
            files += 1;
        }
    }
    Ok(format!(
        "{} runs, {files} report bodies identical",
        one.len()
    ))
}

// Runs without the libtest harness so the PASS/FAIL lines are never captured.
fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "circle equality", Some(secs(1)), circle_equality),
        criterion(
            2,
            "curvature-bound property suite",
            Some(secs(60)),
            curvature_suite,
        ),
        criterion(3, "constant-field closed form", None, constant_field),
        criterion(
            4,
            "contractible orbits on the torus",
            Some(secs(300)),
            torus_sweep,
        ),
        criterion(
            5,
            "capacity lower-bound witness",
            Some(secs(30)),
            capacity_witness_check,
        ),
        criterion(6, "index and action table", None, table_one),
        criterion(7, "spectral engine", Some(secs(10)), spectral_engine),
        criterion(8, "oracle equivalence", Some(secs(30)), oracle_equivalence),
        criterion(9, "determinism across thread counts", None, determinism),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        eprintln!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
