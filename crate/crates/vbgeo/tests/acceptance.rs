//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Tolerances are pinned here and nowhere else.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vbgeo::bundle::{lambda2_bundle, trivial_bundle, BundleSign};
use vbgeo::chart::{model_chart, ChartKind};
use vbgeo::curvature::{self, FdOracle};
use vbgeo::geodesic::{self, GeodesicState, IntegrationStatus};
use vbgeo::hermitian;
use vbgeo::holonomy::{self, G2Base};
use vbgeo::numerics::max_abs;
use vbgeo::scenario::{preset, Scene, PRESET_NAMES};
use vbgeo::total::{self, FieldJet, RadialFn, SplitVector, TotalPoint};
use vbgeo::weights::WeightProfile;

fn preset_scene(name: &str) -> Scene {
    Scene::build(&preset(name).unwrap()).unwrap()
}

fn rand_split(rng: &mut ChaCha8Rng, m: usize, k: usize) -> SplitVector {
    SplitVector {
        h: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
        v: DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0)),
    }
}

fn rand_point(scene: &Scene, rng: &mut ChaCha8Rng, rmax_frac: f64) -> TotalPoint {
    let x = scene.chart.sample_interior(rng);
    let cap = if scene.weights.r_max().is_finite() {
        scene.weights.r_max() * rmax_frac
    } else {
        1.5
    };
    let mut y = DVector::from_fn(scene.k(), |_, _| rng.random_range(-1.0..1.0));
    let norm = y.norm();
    if norm > 0.0 {
        y *= rng.random_range(0.05..cap.sqrt() * 0.95) / norm;
    }
    TotalPoint { x: DVector::from_vec(x), y }
}

fn report(criterion: u32, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion} {}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion}: {detail}");
}

#[test]
fn criterion_01_g2_holonomy_dimension() {
    let mut detail = String::new();
    let mut ok = true;
    for (base, c0, c1, label) in [
        (G2Base::Sphere4, 1.0, 1.0, "Lambda2- over S4"),
        (G2Base::Hyperbolic4, 1.0, 2.0, "Lambda2+ over H4"),
    ] {
        let start = Instant::now();
        let rep = holonomy::g2_scenario(base, c0, c1).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let margin = rep.holonomy.singular_value_margin();
        ok &= rep.holonomy.dimension == 14 && margin >= 1e4 && elapsed < 5.0;
        detail.push_str(&format!(
            "{label}: dim {} ({}), sv margin {margin:.1e}, {elapsed:.2} s; ",
            rep.holonomy.dimension, rep.holonomy.classification
        ));
    }
    report(1, ok, &detail);
}

#[test]
fn criterion_02_proof_decomposition_dimensions() {
    let mut detail = String::new();
    let mut ok = true;
    for (base, c0, c1, label) in [
        (G2Base::Sphere4, 1.0, 1.0, "S4"),
        (G2Base::Hyperbolic4, 1.0, 2.0, "H4"),
    ] {
        let rep = holonomy::g2_scenario(base, c0, c1).unwrap();
        let ranks_ok =
            rep.family_ranks.len() == 4 && rep.family_ranks.iter().all(|&r| r == 2);
        ok &= rep.subspace_dims == (3, 3, 8) && ranks_ok;
        detail.push_str(&format!(
            "{label}: subspaces {:?}, family Gram ranks {:?}; ",
            rep.subspace_dims, rep.family_ranks
        ));
    }
    report(2, ok, &detail);
}

#[test]
fn criterion_03_ricci_flatness() {
    let mut detail = String::new();
    let mut ok = true;
    for name in ["bs_s4", "bs_h4_plus"] {
        let scene = preset_scene(name);
        let x = scene.chart.origin();
        let rep = curvature::ricci_scalar_zero_section(&scene, &x).unwrap();
        let analytic = max_abs(&rep.ricci).max(rep.scalar.abs());
        // FD oracle Ricci extrapolated to the zero section
        let oracle = FdOracle::new(&scene);
        let k = scene.k();
        let dir = DVector::from_element(k, 1.0 / (k as f64).sqrt());
        let mut vals = Vec::new();
        for delta in [1e-2, 5e-3] {
            let p = TotalPoint { x: DVector::from_vec(x.clone()), y: &dir * delta };
            vals.push(oracle.ricci_coord(&p).unwrap());
        }
        let fd = max_abs(&(&vals[1] * 2.0 - &vals[0]));
        ok &= analytic < 1e-10 && fd < 1e-3;
        detail.push_str(&format!("{name}: analytic {analytic:.1e}, oracle {fd:.1e}; "));
    }
    report(3, ok, &detail);
}

#[test]
fn criterion_04_flat_case_holonomy() {
    let chart = model_chart(ChartKind::Flat, 2).unwrap();
    let res_full =
        holonomy::flat_holonomy_scenario(&chart, 2, &WeightProfile::poly(vec![0.0, 1.0], vec![0.0]))
            .unwrap();
    let res_trivial =
        holonomy::flat_holonomy_scenario(&chart, 2, &WeightProfile::constant(0.3, -0.1)).unwrap();
    let ok = res_full.dimension == 6 && res_trivial.dimension == 0;
    report(
        4,
        ok,
        &format!(
            "phi1' != 0: dim {} ({}); constant weights: dim {}",
            res_full.dimension, res_full.classification, res_trivial.dimension
        ),
    );
}

#[test]
fn criterion_05_closed_forms_vs_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // flat-bundle formulas at 20 random weighted points
    let chart = model_chart(ChartKind::Flat, 2).unwrap();
    let bundle = trivial_bundle(&chart, 2).unwrap();
    let scene = Scene::new(
        chart,
        bundle,
        WeightProfile::poly(vec![0.0, 0.5], vec![0.0, -0.25, 0.05]),
    );
    let oracle = FdOracle::new(&scene);
    let mut worst_flat: f64 = 0.0;
    for _ in 0..20 {
        let p = rand_point(&scene, &mut rng, 0.4);
        let riem = oracle.riemann_coord(&p).unwrap();
        let metric = total::assemble_metric(&scene, &p).unwrap().coord;
        let a = rand_split(&mut rng, 2, 2);
        let b = rand_split(&mut rng, 2, 2);
        let c = rand_split(&mut rng, 2, 2);
        let d = rand_split(&mut rng, 2, 2);
        let op = curvature::flat_bundle_curvature(&scene, &p, &a, &b, &c).unwrap();
        let opc = total::unsplit(&scene, &p, &op);
        let dc = total::unsplit(&scene, &p, &d);
        let closed = (&metric * &dc).dot(&opc);
        let fd = oracle.value_split(&p, &riem, &a, &b, &c, &d);
        worst_flat = worst_flat.max((closed - fd).abs() / closed.abs().max(1.0));
    }

    // zero-section formulas against the delta-extrapolated oracle
    let mut worst_zs: f64 = 0.0;
    for name in ["bs_s4", "bs_h4_plus"] {
        let scene = preset_scene(name);
        let oracle = FdOracle::new(&scene);
        let x = scene.chart.sample_interior(&mut rng);
        for _ in 0..15 {
            let a = rand_split(&mut rng, 4, 3);
            let b = rand_split(&mut rng, 4, 3);
            let c = rand_split(&mut rng, 4, 3);
            let d = rand_split(&mut rng, 4, 3);
            let closed = curvature::zero_section_curvature(&scene, &x, &a, &b, &c, &d).unwrap();
            let fd = oracle.zero_section_value(&x, &a, &b, &c, &d).unwrap();
            worst_zs = worst_zs.max((closed - fd).abs() / closed.abs().max(1.0));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_flat < 1e-4 && worst_zs < 1e-3 && elapsed < 30.0;
    report(
        5,
        ok,
        &format!("flat-bundle {worst_flat:.2e} (tol 1e-4), zero-section {worst_zs:.2e} (tol 1e-3), {elapsed:.1} s"),
    );
}

#[test]
fn criterion_06_fiber_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let profiles = [
        WeightProfile::poly(vec![0.0], vec![0.0, 1.0]),
        WeightProfile::poly(vec![0.0], vec![0.0, 0.0, 0.25]),
    ];
    let mut worst: f64 = 0.0;
    for w in &profiles {
        for k in [2usize, 3, 5] {
            let mut y = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            y *= 0.8 / y.norm();
            let closed = curvature::fiber_curvatures(w, k, &y).unwrap().scalar;
            let fd = curvature::fd_fiber_scalar(w, k, &y).unwrap();
            worst = worst.max((closed - fd).abs() / closed.abs().max(1.0));
        }
    }
    // k = 2 flatness family phi2 = l log r
    let mut worst_flat: f64 = 0.0;
    for l in [0.25, -0.4, 1.0] {
        let w = WeightProfile::custom(
            |_| 0.0,
            |_| 0.0,
            |_| 0.0,
            move |r| l * r.ln(),
            move |r| l / r,
            move |r| -l / (r * r),
            None,
        );
        let y = DVector::from_vec(vec![0.7, 0.4]);
        let f = curvature::fiber_curvatures(&w, 2, &y).unwrap();
        worst_flat = worst_flat.max(max_abs(&f.sectional));
    }
    let ok = worst < 1e-3 && worst_flat < 1e-8;
    report(
        6,
        ok,
        &format!("scalar vs oracle {worst:.2e} (tol 1e-3); k=2 flat family sectional {worst_flat:.2e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_07_geodesics() {
    // S4 great circle vs closed form at t = 1, step 1e-3
    let scene = preset_scene("bs_s4");
    let u = [0.5, 0.5, 0.5, 0.5];
    let st = GeodesicState::new(
        vec![0.0; 4],
        vec![0.0; 3],
        u.iter().map(|v| v / 2.0).collect(),
        vec![0.0; 3],
    );
    let traj = geodesic::integrate(&scene, &st, 1.0, 1e-3).unwrap();
    let fin = traj.final_state();
    let expect = (0.5_f64).tan();
    let circle_err = (0..4)
        .map(|i| (fin.x[i] - expect * u[i]).abs())
        .fold(0.0_f64, f64::max);

    // speed drift over all presets
    let mut worst_drift: f64 = 0.0;
    for name in PRESET_NAMES {
        let scene = preset_scene(name);
        let m = scene.m();
        let k = scene.k();
        let x = vec![0.02; m];
        let mut dx = vec![0.15; m];
        dx[0] = 0.2;
        let y: Vec<f64> = (0..k).map(|i| 0.1 + 0.05 * i as f64).collect();
        let mut z = vec![0.1; k];
        if k > 1 {
            z[1] = -0.1;
        }
        let traj =
            geodesic::integrate(&scene, &GeodesicState::new(x, y, dx, z), 1.0, 1e-3).unwrap();
        assert_eq!(traj.status, IntegrationStatus::Completed, "{name}");
        worst_drift = worst_drift.max(traj.max_speed_drift);
    }

    // fourth-order convergence by step halving
    let exact: Vec<f64> = u.iter().map(|v| (0.5_f64).tan() * v).collect();
    let err = |h: f64| -> f64 {
        let st = GeodesicState::new(
            vec![0.0; 4],
            vec![0.0; 3],
            u.iter().map(|v| v / 2.0).collect(),
            vec![0.0; 3],
        );
        let traj = geodesic::integrate(&scene, &st, 1.0, h).unwrap();
        let fin = traj.final_state();
        (0..4).map(|i| (fin.x[i] - exact[i]).abs()).fold(0.0_f64, f64::max)
    };
    let ratio = err(0.05) / err(0.025);

    let ok = circle_err < 1e-6 && worst_drift < 1e-7 && (12.0..=20.0).contains(&ratio);
    report(
        7,
        ok,
        &format!(
            "great circle {circle_err:.2e} (tol 1e-6); preset drift {worst_drift:.2e} (tol 1e-7); halving ratio {ratio:.1}"
        ),
    );
}

#[test]
fn criterion_08_conformal_equivalence() {
    let scene = preset_scene("bs_s4");
    let f = RadialFn::sinh();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = scene.chart.sample_interior(&mut rng);
        let r = rng.random_range(0.1..2.0_f64);
        let mut y = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        y *= r.sqrt() / y.norm();
        let p = TotalPoint { x: DVector::from_vec(x), y };
        worst = worst.max(total::conformal_check(&scene, &p, &f).unwrap());
    }
    report(8, worst < 1e-10, &format!("max deviation {worst:.2e} (tol 1e-10)"));
}

#[test]
fn criterion_09_symplectic_dichotomy() {
    let scene = preset_scene("sasaki_flat");
    let p = TotalPoint::new(vec![0.1, -0.2], vec![0.4, 0.3]);
    let closed = hermitian::d_omega_norm(&scene, &p).unwrap();
    let open_scene = Scene::new(
        scene.chart.clone(),
        scene.bundle.clone(),
        WeightProfile::poly(vec![0.0], vec![0.0, 1.0]),
    );
    let p1 = TotalPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    let open = hermitian::d_omega_norm(&open_scene, &p1).unwrap();
    let ok = closed < 1e-6 && open > 1e-2;
    report(
        9,
        ok,
        &format!("constant psibar: {closed:.2e} (< 1e-6); psibar = r: {open:.2e} (> 1e-2)"),
    );
}

#[test]
fn criterion_10_nabla_xi_identity() {
    let scenes = [preset_scene("bs_s4"), preset_scene("flat_m2k2")];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for scene in &scenes {
        for _ in 0..25 {
            let p = rand_point(scene, &mut rng, 0.4);
            let x = rand_split(&mut rng, scene.m(), scene.k());
            let xi = FieldJet::xi(scene, &p);
            let got = total::levi_civita(scene, &p, &x, &xi).unwrap();
            let c = scene.weights.coefficients(p.r()).unwrap();
            let expect = SplitVector {
                h: &x.h * (c.a * p.r()),
                v: &x.v * (1.0 + c.b * p.r()),
            };
            worst = worst.max(got.add(&expect.scale(-1.0)).max_abs());
        }
    }
    report(10, worst < 1e-10, &format!("max deviation over 50 draws {worst:.2e} (tol 1e-10)"));
}

// The lambda2 bundle of a flat chart is flat; used by criterion 5's scене
// setup sanity and kept here as a guard against preset drift.
#[test]
fn presets_parse_and_build() {
    for name in PRESET_NAMES {
        let scene = preset_scene(name);
        assert!(scene.dim_total() >= 3, "{name}");
    }
    let _ = lambda2_bundle(&model_chart(ChartKind::Flat, 4).unwrap(), BundleSign::Minus).unwrap();
}
