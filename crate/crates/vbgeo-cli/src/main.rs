//! `vbgeo` command line: scenario loading, subcommand dispatch and JSON/CSV
//! result emission. Floating-point values are printed with 17 significant
//! digits; reports are byte-identical for a fixed seed.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use vbgeo::bundle::BundleSign;
use vbgeo::curvature;
use vbgeo::geodesic::{self, GeodesicState};
use vbgeo::hermitian;
use vbgeo::holonomy;
use vbgeo::scenario::{BundleSpec, Scenario, Scene, SignSpec};
use vbgeo::total::{self, RadialFn, SplitVector, TotalPoint};
use vbgeo::{check, Error};

#[derive(Parser)]
#[command(name = "vbgeo", version, about = "Weighted metrics on vector bundle manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Connection coefficients a, b, c1, c2 at a radius
    Coeffs {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Metric matrix at a point, coordinate and split frame
    Metric {
        #[arg(long)]
        scenario: PathBuf,
        /// "x=0.1,0.2;y=0.3,0.4"
        #[arg(long)]
        point: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the geodesic system; CSV columns t, gamma, y, dgamma, z, speed
    Geodesic {
        #[arg(long)]
        scenario: PathBuf,
        /// JSON file {"x": [..], "y": [..], "dgamma": [..], "z": [..]}
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curvature values: zero-section closed forms, or the flat-bundle
    /// formulas at an off-section point
    Curvature {
        #[arg(long)]
        scenario: PathBuf,
        /// "zero-section" or "point"
        #[arg(long, default_value = "zero-section")]
        at: String,
        /// base point "0.0,0.0,0.0,0.0" (zero-section mode)
        #[arg(long)]
        x: Option<String>,
        /// total point "x=..;y=.." (point mode, flat bundles)
        #[arg(long)]
        point: Option<String>,
    },
    /// Closed-form Ricci tensor and scalar curvature at a zero-section point
    Ricci {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        x: Option<String>,
    },
    /// Local holonomy dimension by bracket closure of curvature generators
    Holonomy {
        #[arg(long)]
        scenario: PathBuf,
        /// For lambda2 scenarios, also report the proof-decomposition
        /// subspace dimensions and mixed family Gram ranks
        #[arg(long)]
        report_subspaces: bool,
    },
    /// Sectional/Ricci/scalar curvature of the pure fibre metric
    Fiber {
        #[arg(long)]
        scenario: PathBuf,
        /// fibre point "1.0,0.0,0.0"
        #[arg(long)]
        y: String,
    },
    /// Deviation between the Bergery metric and the scaled Musso-Tricerri form
    Conformal {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        point: String,
        /// radial profile: identity | sinh | cubic
        #[arg(long, default_value = "sinh")]
        f: String,
    },
    /// Sasaki structure checks on tangent-bundle scenarios
    Hermitian {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        point: String,
        /// "domega" or "j"
        #[arg(long = "check", default_value = "domega")]
        what: String,
    },
    /// Run the bundled verification suites
    Check {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("VBGEO_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<Error>() {
                Some(Error::Domain(_)) => ExitCode::from(3),
                Some(Error::Scenario(_)) | Some(Error::InvalidParameter(_)) => ExitCode::from(2),
                Some(Error::Numerical(_)) => ExitCode::from(1),
                // IO / JSON / argument parsing problems
                None => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Coeffs { scenario, r } => {
            let (_, scene) = load_scene(&scenario)?;
            let c = scene.weights.coefficients(r)?;
            let out = json!({
                "r": r,
                "a": c.a,
                "b": c.b,
                "c1": c.c1,
                "c2": c.c2,
                "phi1": scene.weights.phi1(r),
                "phi2": scene.weights.phi2(r),
                "e2phi1": scene.weights.e2phi1(r),
                "e2phi2": scene.weights.e2phi2(r),
            });
            emit(&out, None)?;
        }
        Cmd::Metric { scenario, point, out } => {
            let (_, scene) = load_scene(&scenario)?;
            let p = parse_point(&point, scene.m(), scene.k())?;
            let m = total::assemble_metric(&scene, &p)?;
            let v = json!({
                "r": p.r(),
                "coord": matrix_value(&m.coord),
                "split": matrix_value(&m.split),
            });
            emit(&v, out.as_deref())?;
        }
        Cmd::Geodesic { scenario, init, t_end, step, out } => {
            let (_, scene) = load_scene(&scenario)?;
            let st = load_initial_state(&init, &scene)?;
            let traj = geodesic::integrate(&scene, &st, t_end, step)?;
            let csv = trajectory_csv(&scene, &traj);
            match &out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            log::info!(
                "geodesic: {} samples, status {:?}, max speed drift {:.3e}",
                traj.samples.len(),
                traj.status,
                traj.max_speed_drift
            );
        }
        Cmd::Curvature { scenario, at, x, point } => {
            let (_, scene) = load_scene(&scenario)?;
            match at.as_str() {
                "zero-section" => {
                    let xv = parse_base_point(x.as_deref(), &scene)?;
                    let rep = curvature::ricci_scalar_zero_section(&scene, &xv)?;
                    let entries = zero_section_entries(&scene, &xv)?;
                    let v = json!({
                        "at": "zero-section",
                        "x": xv,
                        "scalar": rep.scalar,
                        "ricci": matrix_value(&rep.ricci),
                        "einstein_lambda": opt_f64(rep.einstein_lambda),
                        "riemann_nonzero": entries,
                    });
                    emit(&v, None)?;
                }
                "point" => {
                    let spec = point.ok_or_else(|| {
                        Error::InvalidParameter("--point required with --at point".into())
                    })?;
                    let p = parse_point(&spec, scene.m(), scene.k())?;
                    let entries = flat_bundle_entries(&scene, &p)?;
                    let v = json!({
                        "at": "point",
                        "r": p.r(),
                        "riemann_nonzero": entries,
                    });
                    emit(&v, None)?;
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "--at must be zero-section or point (got {other})"
                    ))
                    .into())
                }
            }
        }
        Cmd::Ricci { scenario, x } => {
            let (_, scene) = load_scene(&scenario)?;
            let xv = parse_base_point(x.as_deref(), &scene)?;
            let rep = curvature::ricci_scalar_zero_section(&scene, &xv)?;
            let mut v = json!({
                "x": xv,
                "ricci": matrix_value(&rep.ricci),
                "scalar": rep.scalar,
                "einstein_lambda": opt_f64(rep.einstein_lambda),
            });
            if let Ok(ec) = curvature::einstein_check(&scene, &xv) {
                v["einstein_check"] = json!({
                    "lambda_m": ec.lambda_m,
                    "residual_condition": ec.residual_condition,
                    "residual_lambda": ec.residual_lambda,
                    "lambda_e": opt_f64(ec.lambda_e),
                });
            }
            emit(&v, None)?;
        }
        Cmd::Holonomy { scenario, report_subspaces } => {
            let (spec, scene) = load_scene(&scenario)?;
            let x = scene.chart.origin();
            let gens = holonomy::curvature_generators(&scene, &x)?;
            let res = holonomy::lie_closure(&gens)?;
            let mut v = json!({
                "dimension": res.dimension,
                "classification": res.classification,
                "rounds": res.closure_rounds,
                "generators": gens.len(),
                "singular_value_margins": {
                    "smallest_retained": res.smallest_retained_sv,
                    "largest_discarded": res.largest_discarded_sv,
                    "ratio": finite_or_null(res.singular_value_margin()),
                },
            });
            if report_subspaces {
                let sign = match &spec.bundle {
                    BundleSpec::Lambda2 { sign: SignSpec::Plus } => BundleSign::Plus,
                    BundleSpec::Lambda2 { sign: SignSpec::Minus } => BundleSign::Minus,
                    _ => {
                        return Err(Error::InvalidParameter(
                            "--report-subspaces needs a lambda2 scenario".into(),
                        )
                        .into())
                    }
                };
                let (dims, ranks) = holonomy::lambda2_subspaces(&scene, sign, &x)?;
                v["subspace_dims"] = json!([dims.0, dims.1, dims.2]);
                v["family_gram_ranks"] = json!(ranks);
            }
            emit(&v, None)?;
        }
        Cmd::Fiber { scenario, y } => {
            let (_, scene) = load_scene(&scenario)?;
            let yv = parse_vector(&y)?;
            if yv.len() != scene.k() {
                return Err(Error::InvalidParameter(format!(
                    "fibre point has length {}, bundle rank is {}",
                    yv.len(),
                    scene.k()
                ))
                .into());
            }
            let f = curvature::fiber_curvatures(
                &scene.weights,
                scene.k(),
                &nalgebra::DVector::from_vec(yv.clone()),
            )?;
            let v = json!({
                "y": yv,
                "sectional": matrix_value(&f.sectional),
                "ricci_diag": f.ricci_diag.iter().copied().collect::<Vec<f64>>(),
                "scalar": f.scalar,
            });
            emit(&v, None)?;
        }
        Cmd::Conformal { scenario, point, f } => {
            let (_, scene) = load_scene(&scenario)?;
            let p = parse_point(&point, scene.m(), scene.k())?;
            let profile = radial_profile(&f)?;
            let dev = total::conformal_check(&scene, &p, &profile)?;
            emit(&json!({"f": f, "r": p.r(), "deviation": dev}), None)?;
        }
        Cmd::Hermitian { scenario, point, what } => {
            let (_, scene) = load_scene(&scenario)?;
            let p = parse_point(&point, scene.m(), scene.k())?;
            match what.as_str() {
                "domega" => {
                    let d = hermitian::d_omega_norm(&scene, &p)?;
                    emit(
                        &json!({
                            "check": "domega",
                            "psibar": hermitian::psibar(&scene, p.r()),
                            "d_omega_norm": d,
                        }),
                        None,
                    )?;
                }
                "j" => {
                    let j = hermitian::sasaki_j(&scene, &p)?;
                    emit(
                        &json!({
                            "check": "j",
                            "psi": hermitian::psi(&scene, p.r()),
                            "j_split": matrix_value(&j),
                        }),
                        None,
                    )?;
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "--check must be domega or j (got {other})"
                    ))
                    .into())
                }
            }
        }
        Cmd::Check { suite, seed, out } => {
            let known = check::suite_names();
            if suite != "all" && !known.contains(&suite.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "unknown suite '{suite}' (expected all or one of {known:?})"
                ))
                .into());
            }
            let report = check::run_suite(&suite, seed);
            let cases: Vec<Value> = report
                .cases
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "suite": c.suite,
                        "passed": c.passed,
                        "residual": c.residual,
                        "tolerance": c.tolerance,
                        "detail": c.detail,
                    })
                })
                .collect();
            let v = json!({
                "suite": report.suite_filter,
                "seed": report.seed,
                "passed": report.passed,
                "cases": cases,
            });
            emit(&v, out.as_deref())?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_scene(path: &PathBuf) -> anyhow::Result<(Scenario, Scene)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
    let spec = Scenario::from_json(&text)?;
    let scene = Scene::build(&spec)?;
    Ok((spec, scene))
}

fn parse_vector(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad number '{t}': {e}")).into())
        })
        .collect()
}

/// Parse "x=0.1,0.2;y=0.3,0.4" (the comma form "x=..,y=.." also works).
fn parse_point(s: &str, m: usize, k: usize) -> anyhow::Result<TotalPoint> {
    let cleaned = s.trim();
    let (xpart, ypart) = if let Some((a, b)) = cleaned.split_once(';') {
        (a, b)
    } else if let Some(pos) = cleaned.find(",y=") {
        (&cleaned[..pos], &cleaned[pos + 1..])
    } else {
        return Err(Error::InvalidParameter(format!(
            "point must look like \"x=..;y=..\" (got '{s}')"
        ))
        .into());
    };
    let xs = xpart
        .trim()
        .strip_prefix("x=")
        .ok_or_else(|| Error::InvalidParameter("point must start with x=".into()))?;
    let ys = ypart
        .trim()
        .strip_prefix("y=")
        .ok_or_else(|| Error::InvalidParameter("missing y= part".into()))?;
    let x = parse_vector(xs)?;
    let y = parse_vector(ys)?;
    if x.len() != m || y.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {m} base and {k} fibre coordinates, got {} and {}",
            x.len(),
            y.len()
        ))
        .into());
    }
    Ok(TotalPoint::new(x, y))
}

fn parse_base_point(arg: Option<&str>, scene: &Scene) -> anyhow::Result<Vec<f64>> {
    match arg {
        None => Ok(scene.chart.origin()),
        Some(s) => {
            let x = parse_vector(s)?;
            if x.len() != scene.m() {
                return Err(Error::InvalidParameter(format!(
                    "expected {} base coordinates, got {}",
                    scene.m(),
                    x.len()
                ))
                .into());
            }
            Ok(x)
        }
    }
}

fn radial_profile(name: &str) -> anyhow::Result<RadialFn> {
    match name {
        "identity" => Ok(RadialFn::identity()),
        "sinh" => Ok(RadialFn::sinh()),
        "cubic" => Ok(RadialFn::cubic()),
        other => {
            Err(Error::InvalidParameter(format!("unknown radial profile '{other}'")).into())
        }
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct InitState {
    x: Vec<f64>,
    y: Vec<f64>,
    dgamma: Vec<f64>,
    #[serde(default)]
    z: Option<Vec<f64>>,
    #[serde(default)]
    ydot: Option<Vec<f64>>,
}

fn load_initial_state(path: &PathBuf, scene: &Scene) -> anyhow::Result<GeodesicState> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
    let init: InitState = serde_json::from_str(&text)
        .map_err(|e| Error::Scenario(format!("initial state parse: {e}")))?;
    if init.x.len() != scene.m() || init.y.len() != scene.k() || init.dgamma.len() != scene.m() {
        return Err(Error::Scenario("initial state dimensions do not match scenario".into()).into());
    }
    let z = match (init.z, init.ydot) {
        (Some(z), None) => z,
        (None, Some(ydot)) => {
            // z^beta = ydot^beta + dgamma^i y^alpha Gamma^{E,beta}_{i alpha}
            let gam = scene.bundle.gamma(&init.x);
            let mut z = ydot;
            for beta in 0..scene.k() {
                for i in 0..scene.m() {
                    for alpha in 0..scene.k() {
                        z[beta] += init.dgamma[i] * init.y[alpha] * gam.get(i, alpha, beta);
                    }
                }
            }
            z
        }
        _ => {
            return Err(
                Error::Scenario("initial state needs exactly one of 'z' or 'ydot'".into()).into()
            )
        }
    };
    if z.len() != scene.k() {
        return Err(Error::Scenario("fibre velocity has wrong length".into()).into());
    }
    Ok(GeodesicState::new(init.x, init.y, init.dgamma, z))
}

fn trajectory_csv(scene: &Scene, traj: &geodesic::Trajectory) -> String {
    let (m, k) = (scene.m(), scene.k());
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    header.extend((0..m).map(|i| format!("gamma{i}")));
    header.extend((0..k).map(|a| format!("y{a}")));
    header.extend((0..m).map(|i| format!("dgamma{i}")));
    header.extend((0..k).map(|a| format!("z{a}")));
    header.push("speed".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for (t, st, speed) in &traj.samples {
        let mut row = vec![fmt_float(*t)];
        row.extend(st.x.iter().map(|v| fmt_float(*v)));
        row.extend(st.y.iter().map(|v| fmt_float(*v)));
        row.extend(st.dx.iter().map(|v| fmt_float(*v)));
        row.extend(st.z.iter().map(|v| fmt_float(*v)));
        row.push(fmt_float(*speed));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Zero-section Riemann values over the orthonormal split frame; entries
/// with |value| <= 1e-12 are omitted.
fn zero_section_entries(scene: &Scene, x: &[f64]) -> anyhow::Result<Vec<Value>> {
    let (m, k) = (scene.m(), scene.k());
    let n = m + k;
    let frame = scene.chart.frame(x);
    let basis: Vec<SplitVector> = (0..n)
        .map(|a| {
            if a < m {
                SplitVector::horizontal(frame.column(a).clone_owned(), k)
            } else {
                let mut v = nalgebra::DVector::zeros(k);
                v[a - m] = 1.0;
                SplitVector::vertical(m, v)
            }
        })
        .collect();
    let data = curvature::ZeroSectionData::new(scene, x)?;
    let mut entries = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in 0..n {
                for d in (c + 1)..n {
                    let v = data.value(&basis[a], &basis[b], &basis[c], &basis[d]);
                    if v.abs() > 1e-12 {
                        entries.push(json!({"abcd": [a, b, c, d], "value": v}));
                    }
                }
            }
        }
    }
    Ok(entries)
}

fn flat_bundle_entries(scene: &Scene, p: &TotalPoint) -> anyhow::Result<Vec<Value>> {
    let (m, k) = (scene.m(), scene.k());
    let n = m + k;
    let metric = total::assemble_metric(scene, p)?.coord;
    let mut basis = Vec::new();
    for a in 0..n {
        let mut e = nalgebra::DVector::zeros(n);
        e[a] = 1.0;
        basis.push(total::split(scene, p, &e));
    }
    let coord_basis: Vec<nalgebra::DVector<f64>> = (0..n)
        .map(|a| {
            let mut e = nalgebra::DVector::zeros(n);
            e[a] = 1.0;
            e
        })
        .collect();
    let mut entries = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in 0..n {
                let op = curvature::flat_bundle_curvature(scene, p, &basis[a], &basis[b], &basis[c])?;
                let opc = total::unsplit(scene, p, &op);
                for d in 0..n {
                    let v = (&metric * &coord_basis[d]).dot(&opc);
                    if v.abs() > 1e-12 {
                        entries.push(json!({"abcd": [a, b, c, d], "value": v}));
                    }
                }
            }
        }
    }
    Ok(entries)
}

fn matrix_value(m: &nalgebra::DMatrix<f64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

fn opt_f64(v: Option<f64>) -> Value {
    match v {
        Some(x) => json!(x),
        None => Value::Null,
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON serializer printing every f64 with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn to_output_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    serde::Serialize::serialize(v, &mut ser).expect("JSON serialization");
    let mut s = String::from_utf8(out).expect("utf8 JSON");
    s.push('\n');
    s
}

fn emit(v: &Value, out: Option<&std::path::Path>) -> anyhow::Result<()> {
    let text = to_output_string(v);
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
