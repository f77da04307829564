//! `qfl` — command-line front end for the integrable-systems laboratory.
//!
//! Single binary with batch subcommands; every artifact starts with a
//! provenance header (config echo + artifact version) and floats are
//! serialized with fixed 17-significant-digit formatting so identical
//! configurations produce byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qfl::config::{parse_config, Command, Format, RunConfig};
use qfl::flow::{self, Method};
use qfl::metric::{build_family1, build_family2, gauss_curvature, nontriviality_witness, ConformalFactor};
use qfl::natural::{build_natural, jacobi_metric, SystemVariant};
use qfl::psi::{closed_form_y, PsiSolution};
use qfl::quartic::{build_quartic, pde_residual, poisson_bracket};
use qfl::report::{error_record, report_document, run_all, Lab};
use qfl::{jsonfmt, Chart, Error, PhaseState, Result};

#[derive(Parser)]
#[command(name = "qfl", version, about = "numerical laboratory for quartically integrable systems on the sphere")]
struct Cli {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the defining ODE and write the profile table plus the
    /// oracle-comparison report.
    Ode(Common),
    /// Run the phase-plane, root-scan, and closed-form-inverse checks.
    Verify(Common),
    /// Write conformal-factor grids and curvature samples for both families.
    Metric(Common),
    /// Write criterion-residual grids, bracket-scan report, loop residuals.
    Integral(Common),
    /// Integrate flows and write trajectories plus drift summaries.
    Flow(Common),
    /// Run every acceptance criterion and aggregate a pass/fail report.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "E")]
    energy: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (fallback: env QFL_OUT_DIR, then the current dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory/table format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", jsonfmt::to_string(&error_record(&e)));
            std::process::exit(1);
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let (command, a) = match &cli.command {
        Cmd::Ode(a) => (Command::Ode, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Metric(a) => (Command::Metric, a),
        Cmd::Integral(a) => (Command::Integral, a),
        Cmd::Flow(a) => (Command::Flow, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    cfg.command = command;
    if let Some(v) = a.y_max {
        cfg.y_max = v;
    }
    if let Some(v) = a.tol {
        cfg.tol = v;
    }
    if let Some(v) = a.c {
        cfg.c = v;
    }
    if let Some(v) = a.d1 {
        cfg.d1 = v;
    }
    if let Some(v) = a.p {
        cfg.p = Some(v);
    }
    if let Some(v) = a.energy {
        cfg.energy = v;
    }
    if let Some(v) = a.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = a.dt {
        cfg.dt = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = &a.out {
        cfg.output_dir = Some(v.clone());
    }
    if let Some(v) = &a.format {
        cfg.format = match v.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => {
                return Err(Error::Config {
                    key: "format".into(),
                    msg: format!("unknown format `{v}`"),
                })
            }
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os("QFL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn csv_header(cfg: &RunConfig) -> String {
    let echo = cfg.echo();
    let pairs: Vec<String> = echo
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!(
        "# qfl {} schema_version=1\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        pairs.join(" ")
    )
}

fn json_doc(cfg: &RunConfig, body: Value) -> Value {
    let mut doc = json!({
        "schema_version": 1,
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config": cfg.echo(),
    });
    for (k, v) in body.as_object().cloned().unwrap_or_default() {
        doc[k] = v;
    }
    doc
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn write_json(cfg: &RunConfig, dir: &Path, name: &str, body: Value) -> Result<()> {
    write_text(dir, name, &jsonfmt::to_string(&json_doc(cfg, body)))
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = build_config(&cli)?;
    let dir = out_dir(&cfg);
    match cfg.command {
        Command::Ode => cmd_ode(&cfg, &dir),
        Command::Verify => cmd_verify(&cfg, &dir),
        Command::Metric => cmd_metric(&cfg, &dir),
        Command::Integral => cmd_integral(&cfg, &dir),
        Command::Flow => cmd_flow(&cfg, &dir),
        Command::Report => cmd_report(&cfg, &dir),
    }
}

fn solve(cfg: &RunConfig) -> Result<Arc<PsiSolution>> {
    Ok(Arc::new(PsiSolution::solve(cfg.y_max, cfg.tol)?))
}

fn cmd_ode(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let psi = solve(cfg)?;
    let mut table = csv_header(cfg);
    table.push_str("y,psi,dpsi,d2psi\n");
    for y in psi.nodes() {
        let [p, dp, d2p] = psi.triple(y);
        table.push_str(&format!(
            "{},{},{},{}\n",
            jsonfmt::format_f64(y),
            jsonfmt::format_f64(p),
            jsonfmt::format_f64(dp),
            jsonfmt::format_f64(d2p)
        ));
    }
    write_text(dir, "psi_table.csv", &table)?;

    // oracle comparison: analytic inverse integral vs the solved profile
    let mut worst_fi: f64 = 0.0;
    for y in psi.nodes() {
        worst_fi = worst_fi.max(psi.first_integral_residual(y).abs());
    }
    let y_at_1 = closed_form_y(1.0)?;
    let psi_back = psi.psi(y_at_1);
    write_json(
        cfg,
        dir,
        "ode_report.json",
        json!({
            "nodes": psi.nodes().len(),
            "max_first_integral_residual": worst_fi,
            "closed_form_y_at_psi_1": y_at_1,
            "psi_at_that_y": psi_back,
            "inverse_roundtrip_error": (psi_back - 1.0).abs(),
        }),
    )?;
    println!("ode: {} nodes, first-integral residual {:.3e}", psi.nodes().len(), worst_fi);
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let psi = solve(cfg)?;
    let phase = psi.verify_phase_analysis();
    let roots = psi.potential_root_scan();
    let grid: Vec<f64> = (1..=50).map(|i| 0.05 + 2.45 * i as f64 / 50.0).collect();
    let had = psi.hadeler_inverse_check(&grid)?;
    write_json(
        cfg,
        dir,
        "verify_report.json",
        json!({
            "eigenvalues": [phase.eigenvalues.0, phase.eigenvalues.1],
            "g_residual_max": phase.g_residual_max,
            "orbit_residual_max": phase.orbit_residual_max,
            "ode_integral_max": phase.ode_integral_max,
            "eta_roots": roots,
            "inverse_max_derivative_deviation": had.max_derivative_deviation,
            "inverse_best_fit_offset": had.best_fit_offset,
            "inverse_monotone": had.monotone,
        }),
    )?;
    println!(
        "verify: eigenvalues ({}, {}), g residual {:.3e}, inverse deviation {:.3e}",
        phase.eigenvalues.0, phase.eigenvalues.1, phase.g_residual_max, had.max_derivative_deviation
    );
    Ok(0)
}

fn p_shift(cfg: &RunConfig, psi: &Arc<PsiSolution>) -> Result<f64> {
    match cfg.p {
        Some(p) => Ok(p),
        None => Ok(psi.compute_p0(128)?.p0 + 1.0),
    }
}

fn cmd_metric(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let psi = solve(cfg)?;
    let p = p_shift(cfg, &psi)?;
    let m1 = build_family1(psi.clone(), cfg.c, cfg.d1);
    let m2 = build_family2(psi.clone(), cfg.c, cfg.d1, p);

    let mut grid = csv_header(cfg);
    grid.push_str("x,y,lambda_fam1,lambda_fam2\n");
    let n = 33;
    for j in 0..n {
        for i in 0..n {
            let x = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let y = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
            grid.push_str(&format!(
                "{},{},{},{}\n",
                jsonfmt::format_f64(x),
                jsonfmt::format_f64(y),
                jsonfmt::format_f64(m1.lam(x, y)),
                jsonfmt::format_f64(m2.lam(x, y))
            ));
        }
    }
    write_text(dir, "lambda_grid.csv", &grid)?;

    let curv_samples: Vec<Value> = (0..10)
        .map(|i| {
            let x = 0.3 + 0.55 * i as f64;
            let y = -0.9 + 0.2 * i as f64;
            let k = if m1.lam(x, y) > 0.0 {
                gauss_curvature(&m1, x, y).ok()
            } else {
                None
            };
            json!({ "x": x, "y": y, "K_fam1": k })
        })
        .collect();
    let w1 = nontriviality_witness(&m1);
    let w2 = nontriviality_witness(&m2);
    write_json(
        cfg,
        dir,
        "metric_report.json",
        json!({
            "family1": m1.descriptor(),
            "family2": m2.descriptor(),
            "family1_positive_on_grid": m1.positive_on_grid,
            "family2_positive_on_grid": m2.positive_on_grid,
            "family1_witnesses": { "xy": w1.xy, "anisotropy": w1.anisotropy },
            "family2_witnesses": { "xy": w2.xy, "anisotropy": w2.anisotropy },
            "curvature_samples": curv_samples,
        }),
    )?;
    println!("metric: grids and curvature samples written (p = {p:.6})");
    Ok(0)
}

fn cmd_integral(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let psi = solve(cfg)?;
    let p = p_shift(cfg, &psi)?;
    let m1 = build_family1(psi.clone(), cfg.c, cfg.d1);
    let m2 = build_family2(psi.clone(), cfg.c, cfg.d1, p);
    let q1 = build_quartic(&m1, (0.0, 0.0))?;
    let q2 = build_quartic(&m2, (0.0, 0.0))?;

    let mut res_grid = csv_header(cfg);
    res_grid.push_str("x,y,pde_residual_fam1,pde_residual_fam2\n");
    let mut r1_max: f64 = 0.0;
    let mut r2_max: f64 = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            let x = 2.0 * std::f64::consts::PI * i as f64 / 15.0;
            let y = -2.0 + 4.0 * j as f64 / 15.0;
            let r1 = pde_residual(&m1.ansatz, x, y);
            let r2 = pde_residual(&m2.ansatz, x, y);
            r1_max = r1_max.max(r1.abs());
            r2_max = r2_max.max(r2.abs());
            res_grid.push_str(&format!(
                "{},{},{},{}\n",
                jsonfmt::format_f64(x),
                jsonfmt::format_f64(y),
                jsonfmt::format_f64(r1),
                jsonfmt::format_f64(r2)
            ));
        }
    }
    write_text(dir, "pde_residual_grid.csv", &res_grid)?;

    // bracket scan on seeded states for both families
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bracket_max: f64 = 0.0;
    for _ in 0..100 {
        let s = PhaseState::new(
            Chart::North,
            rng.gen::<f64>() * 2.0 * std::f64::consts::PI,
            rng.gen::<f64>() * 3.0 - 1.5,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        for (m, q) in [(&m1, &q1), (&m2, &q2)] {
            let h = |st: &PhaseState| {
                (st.px * st.px + st.py * st.py) / (2.0 * m.lam(st.x, st.y))
            };
            let f = |st: &PhaseState| q.eval(st).expect("F in scan window");
            bracket_max = bracket_max.max(poisson_bracket(&f, &h, &s, 5e-4)?.abs());
        }
    }

    write_json(
        cfg,
        dir,
        "integral_report.json",
        json!({
            "pde_residual_max_fam1": r1_max,
            "pde_residual_max_fam2": r2_max,
            "loop_residual_fam1": q1.loop_residual,
            "loop_residual_fam2": q2.loop_residual,
            "bracket_scan_max": bracket_max,
            "bracket_states": 100,
        }),
    )?;
    println!(
        "integral: residuals ({r1_max:.3e}, {r2_max:.3e}), loops ({:.3e}, {:.3e}), brackets {bracket_max:.3e}",
        q1.loop_residual, q2.loop_residual
    );
    Ok(0)
}

fn trajectory_artifact(
    cfg: &RunConfig,
    dir: &Path,
    name: &str,
    tr: &flow::Trajectory,
) -> Result<Value> {
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            buf.extend_from_slice(csv_header(cfg).as_bytes());
            tr.write_csv(&mut buf)?;
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{name}.csv")), &buf)?;
        }
        Format::Json => {
            let rows: Vec<Value> = tr
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let (h, f, px) = tr.samples[i];
                    json!({
                        "time": tr.times[i],
                        "chart": match s.chart { Chart::North => "north", Chart::South => "south" },
                        "x": s.x, "y": s.y, "px": s.px, "py": s.py,
                        "H": h, "F": f, "px_sample": px,
                    })
                })
                .collect();
            write_json(cfg, dir, &format!("{name}.json"), json!({ "samples": rows }))?;
        }
    }
    Ok(json!({
        "method": tr.method.name(),
        "dt": tr.dt,
        "steps": tr.steps,
        "chart_switches": tr.switches,
        "drift": tr.drift_summaries(),
    }))
}

fn cmd_flow(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let psi = solve(cfg)?;
    let p = p_shift(cfg, &psi)?;
    let mut summaries = serde_json::Map::new();

    // geodesic flow of family 1
    let m1 = build_family1(psi.clone(), cfg.c, cfg.d1);
    let q1 = build_quartic(&m1, (0.0, 0.0))?;
    let s_geo = flow::sample_geodesic_state(&m1, cfg.energy, cfg.seed)?;
    let tr = flow::integrate_geodesic(&m1, &s_geo, cfg.t_final, cfg.dt, Method::Gauss4, Some(&q1))?;
    summaries.insert(
        "fam1_geodesic".into(),
        trajectory_artifact(cfg, dir, "fam1_geodesic", &tr)?,
    );

    for (label, variant, pv) in [
        ("s1_natural", SystemVariant::S1, None),
        ("s2_natural", SystemVariant::S2, Some(p)),
    ] {
        let sys = build_natural(psi.clone(), variant, pv, false)?;
        // the Jacobi metric at E degenerates on the Hill boundary when the
        // potential reaches E; refuse instead of integrating a singular flow
        let vmax = sys.max_potential();
        if cfg.energy <= vmax {
            return Err(Error::NoRoom(format!(
                "{label}: E = {} does not dominate the potential (max V = {vmax:.6}); \
                 the Jacobi metric degenerates",
                cfg.energy
            )));
        }
        let jac = jacobi_metric(&sys, cfg.energy);
        let qf = build_quartic(&jac, (0.0, 0.0))?;
        let s0 = flow::sample_energy_surface(&sys, cfg.energy, cfg.seed)?;
        let tr = flow::integrate_natural(&sys, &s0, cfg.t_final, cfg.dt, Method::Gauss4, Some(&qf))?;
        summaries.insert(label.into(), trajectory_artifact(cfg, dir, label, &tr)?);
    }

    write_json(cfg, dir, "flow_report.json", Value::Object(summaries))?;
    println!("flow: trajectories written to {}", dir.display());
    Ok(0)
}

fn cmd_report(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let lab = Lab::new(cfg.clone())?;
    let results = run_all(&lab);
    for r in &results {
        println!("{}", r.line());
    }
    let all = results.iter().all(|r| r.passed);
    write_text(
        dir,
        "acceptance_report.json",
        &jsonfmt::to_string(&report_document(&lab, &results)),
    )?;
    Ok(if all { 0 } else { 1 })
}
