//! Acceptance evaluation: each criterion of the verification plan runs as
//! an independent check and reports a pass/fail flag plus the measured
//! quantities, for the CLI `report` subcommand and the acceptance test
//! target.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::flow::{self, Method};
use crate::metric::{
    build_family1, build_family2, gauss_curvature, nontriviality_witness, distinctness_check,
    ConformalFactor, ConformalMetric, FAnsatzData, RoundSphere,
};
use crate::natural::{build_natural, jacobi_metric, NaturalSystem, SystemVariant};
use crate::psi::PsiSolution;
use crate::quartic::{build_quartic, killing_residual, pde_residual, poisson_bracket};
use crate::{Chart, Error, PhaseState, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    pub details: Value,
}

impl CriterionResult {
    /// One-line rendering for the acceptance log.
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {}",
            self.index,
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        )
    }
}

/// Shared inputs for the criteria.
pub struct Lab {
    pub cfg: RunConfig,
    pub psi: Arc<PsiSolution>,
    pub p0: f64,
}

impl Lab {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let psi = Arc::new(PsiSolution::solve(cfg.y_max, cfg.tol)?);
        let p0 = psi.compute_p0(128)?.p0;
        Ok(Lab { cfg, psi, p0 })
    }

    /// The default S2 / family-2 shift: configured `p`, else `p0 + 1`.
    pub fn p_shift(&self) -> f64 {
        self.cfg.p.unwrap_or(self.p0 + 1.0)
    }
}

fn finish(
    index: usize,
    name: &str,
    outcome: Result<(bool, Value)>,
) -> CriterionResult {
    match outcome {
        Ok((passed, details)) => CriterionResult {
            index,
            name: name.to_string(),
            passed,
            details,
        },
        Err(e) => CriterionResult {
            index,
            name: name.to_string(),
            passed: false,
            details: json!({ "error": e.to_string() }),
        },
    }
}

/// Run every acceptance criterion and collect the results.
pub fn run_all(lab: &Lab) -> Vec<CriterionResult> {
    vec![
        finish(1, "ODE first integral", c1_first_integral(lab)),
        finish(2, "closed-form inverse", c2_closed_form(lab)),
        finish(3, "phase-plane analysis", c3_phase_plane(lab)),
        finish(4, "integrability criterion", c4_criterion(lab)),
        finish(5, "quartic construction", c5_quartic(lab)),
        finish(6, "bracket and killing scan", c6_brackets(lab)),
        finish(7, "flow conservation", c7_flows(lab)),
        finish(8, "Maupertuis identity", c8_maupertuis(lab)),
        finish(9, "sphere smoothness data", c9_smoothness(lab)),
        finish(10, "potential extremum", c10_extremum(lab)),
        finish(11, "nontriviality and inequivalence", c11_nontriviality(lab)),
    ]
}

// --- criterion 1: max |psi'^4 - psi^4 - 1| over [-y_max, y_max] ---------

fn c1_first_integral(lab: &Lab) -> Result<(bool, Value)> {
    let n = 2001;
    let ym = lab.psi.y_max();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let y = -ym + 2.0 * ym * i as f64 / (n - 1) as f64;
        worst = worst.max(lab.psi.first_integral_residual(y).abs());
    }
    Ok((
        worst <= 1e-8,
        json!({ "max_residual": worst, "bound": 1e-8, "grid_points": n }),
    ))
}

// --- criterion 2: endnote inverse formula ------------------------------

fn c2_closed_form(lab: &Lab) -> Result<(bool, Value)> {
    let grid: Vec<f64> = (1..=50).map(|i| 0.05 + 2.45 * i as f64 / 50.0).collect();
    let rep = lab.psi.hadeler_inverse_check(&grid)?;
    let quarter_pi = std::f64::consts::FRAC_PI_4;
    Ok((
        rep.max_derivative_deviation <= 1e-8 && rep.monotone,
        json!({
            "max_derivative_deviation": rep.max_derivative_deviation,
            "bound": 1e-8,
            "best_fit_offset": rep.best_fit_offset,
            "offset_minus_quarter_pi": rep.best_fit_offset - quarter_pi,
            "sample_points": grid.len(),
        }),
    ))
}

// --- criterion 3: eigenvalues, g(s) = s^3, orbit-integral constant ------

fn c3_phase_plane(lab: &Lab) -> Result<(bool, Value)> {
    let rep = lab.psi.verify_phase_analysis();
    let eig_ok = rep.eigenvalues == (-3.0, -4.0);
    let passed = eig_ok && rep.g_residual_max <= 1e-12 && rep.ode_integral_max <= 1e-9;
    Ok((
        passed,
        json!({
            "eigenvalues": [rep.eigenvalues.0, rep.eigenvalues.1],
            "g_residual_max": rep.g_residual_max,
            "g_bound": 1e-12,
            "orbit_residual_max": rep.orbit_residual_max,
            "ode_integral_max": rep.ode_integral_max,
            "ode_integral_bound": 1e-9,
        }),
    ))
}

fn grid_16(f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            let x = TAU * i as f64 / 15.0;
            let y = -2.0 + 4.0 * j as f64 / 15.0;
            worst = worst.max(f(x, y).abs());
        }
    }
    worst
}

// --- criterion 4: pde residual on both families + broken control --------

fn c4_criterion(lab: &Lab) -> Result<(bool, Value)> {
    let a1 = FAnsatzData::family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let a2 = FAnsatzData::family2(lab.psi.clone(), lab.cfg.c, lab.cfg.d1, lab.p_shift());
    let r1 = grid_16(&|x, y| pde_residual(&a1, x, y));
    let r2 = grid_16(&|x, y| pde_residual(&a2, x, y));
    // scaling family 1's xi'' only rescales (c, d1) inside the family, so
    // the sensitivity control perturbs family 2, where the quotient mixes
    // w and p terms and the scaling genuinely breaks the criterion
    let broken = a2.with_xi_scale(1.1);
    let rb = grid_16(&|x, y| pde_residual(&broken, x, y));
    Ok((
        r1 <= 1e-8 && r2 <= 1e-8 && rb > 1e-3,
        json!({
            "family1_max_residual": r1,
            "family2_max_residual": r2,
            "bound": 1e-8,
            "broken_control_max": rb,
            "control_floor": 1e-3,
        }),
    ))
}

// --- criterion 5: loop closure, a1 identity, scale invariance -----------

/// `f_zz` recomputed from the ansatz data alone (independent of the
/// evaluator inside the quartic builder): `f_zz = ((f_xx - f_yy) - 2i f_xy)/4`.
fn f_zz_direct(m: &ConformalMetric, x: f64, y: f64) -> Complex64 {
    let a = &m.ansatz;
    let [p, dp, d2p] = a.psi.triple(y);
    let fxx = a.cos_coeff * (-p * x.cos()) + 2.0 * a.d;
    let fxy = a.cos_coeff * (-dp * x.sin());
    let fyy = a.cos_coeff * d2p * x.cos() + a.xi_jet(y).value() - 2.0 * a.d;
    m.scale * Complex64::new(fxx - fyy, -2.0 * fxy) / 4.0
}

fn c5_quartic(lab: &Lab) -> Result<(bool, Value)> {
    let m1 = build_family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let m2 = build_family2(lab.psi.clone(), lab.cfg.c, lab.cfg.d1, lab.p_shift());
    let q1 = build_quartic(&m1, (0.0, 0.0))?;
    let q2 = build_quartic(&m2, (0.0, 0.0))?;
    let loop_max = q1.loop_residual.max(q2.loop_residual);

    let mut a1_defect: f64 = 0.0;
    for q in [&q1, &q2] {
        for &(x, y) in &[(0.7, 0.3), (2.4, -1.1), (4.8, 0.9), (1.3, -0.2)] {
            let lam = q.metric.lambda_small(x, y);
            let lhs = q.a1(x, y) * lam;
            let rhs = -4.0 * f_zz_direct(&q.metric, x, y);
            a1_defect = a1_defect.max((lhs - rhs).norm());
        }
    }

    let q1s = build_quartic(&m1.scaled(2.0), (0.0, 0.0))?;
    let mut scale_defect: f64 = 0.0;
    for &(x, y) in &[(0.9, 0.5), (3.0, -1.1), (5.5, 1.3)] {
        scale_defect = scale_defect.max((q1.a1(x, y) - q1s.a1(x, y)).norm());
        scale_defect = scale_defect.max((q1.a2(x, y)? - q1s.a2(x, y)?).abs());
    }

    Ok((
        loop_max <= 1e-8 && a1_defect <= 1e-10 && scale_defect <= 1e-10,
        json!({
            "loop_residual_max": loop_max,
            "loop_bound": 1e-8,
            "a1_identity_defect": a1_defect,
            "scale_invariance_defect": scale_defect,
            "pointwise_bound": 1e-10,
        }),
    ))
}

// --- criterion 6: Poisson-bracket scan + killing recursion --------------

fn geo_h(m: &ConformalMetric) -> impl Fn(&PhaseState) -> f64 + '_ {
    move |s: &PhaseState| {
        let (x, y) = match s.chart {
            Chart::North => (s.x, s.y),
            Chart::South => (-s.x, -s.y),
        };
        (s.px * s.px + s.py * s.py) / (2.0 * m.lam(x, y))
    }
}

fn random_states(seed: u64, n: usize, p_max: f64) -> Vec<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let px = rng.gen::<f64>() * 2.0 * p_max - p_max;
        let py = rng.gen::<f64>() * 2.0 * p_max - p_max;
        if px * px + py * py > p_max * p_max {
            continue;
        }
        out.push(PhaseState::new(
            Chart::North,
            rng.gen::<f64>() * TAU,
            rng.gen::<f64>() * 3.0 - 1.5,
            px,
            py,
        ));
    }
    out
}

fn c6_brackets(lab: &Lab) -> Result<(bool, Value)> {
    let m1 = build_family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let m2 = build_family2(lab.psi.clone(), lab.cfg.c, lab.cfg.d1, lab.p_shift());
    let states = random_states(lab.cfg.seed, 100, 2.0);

    let mut bracket_max: f64 = 0.0;
    for m in [&m1, &m2] {
        let q = build_quartic(m, (0.0, 0.0))?;
        let h = geo_h(m);
        let f = |s: &PhaseState| q.eval(s).expect("F evaluation in scan window");
        for s in &states {
            bracket_max = bracket_max.max(poisson_bracket(&f, &h, s, 5e-4)?.abs());
        }
    }

    // killing recursion on the family-1 quartic coefficients
    let q = build_quartic(&m1, (0.0, 0.0))?;
    let one = |_x: f64, _y: f64| Complex64::new(1.0, 0.0);
    let b1 = |x: f64, y: f64| q.a1(x, y);
    let b2 = |x: f64, y: f64| Complex64::new(q.a2(x, y).expect("a2 in scan window"), 0.0);
    let b3 = |x: f64, y: f64| q.a1(x, y).conj();
    let coeffs: Vec<&dyn Fn(f64, f64) -> Complex64> = vec![&one, &b1, &b2, &b3, &one];
    let theta = |x: f64, y: f64| m1.lambda_small(x, y);
    let mut killing_max: f64 = 0.0;
    for s in states.iter().take(20) {
        for k in 0..=5 {
            killing_max =
                killing_max.max(killing_residual(&coeffs, &theta, k, (s.x, s.y))?.norm());
        }
    }

    // control: constant shift of a2 is not in the gauge orbit of the
    // recursion and must be detected
    let b2_bad = |x: f64, y: f64| Complex64::new(q.a2(x, y).expect("a2") + 0.01, 0.0);
    let coeffs_bad: Vec<&dyn Fn(f64, f64) -> Complex64> = vec![&one, &b1, &b2_bad, &b3, &one];
    let mut control: f64 = 0.0;
    for k in 0..=5 {
        control = control.max(killing_residual(&coeffs_bad, &theta, k, (0.9, 0.5))?.norm());
    }

    Ok((
        bracket_max <= 1e-6 && killing_max <= 1e-6 && control > 1e-4,
        json!({
            "bracket_max": bracket_max,
            "bracket_bound": 1e-6,
            "bracket_states": states.len(),
            "killing_max": killing_max,
            "killing_bound": 1e-6,
            "perturbed_a2_control": control,
            "control_floor": 1e-4,
        }),
    ))
}

// --- criterion 7: conservation along symplectic flows -------------------

fn natural_h(sys: &NaturalSystem) -> impl Fn(&PhaseState) -> f64 + '_ {
    move |s: &PhaseState| {
        (s.px * s.px + s.py * s.py) / (2.0 * sys.kinetic_coeff(s.y))
            + sys.potential(s.chart, s.x, s.y)
    }
}

fn c7_flows(lab: &Lab) -> Result<(bool, Value)> {
    let t_final = lab.cfg.t_final;
    let dt = lab.cfg.dt;
    let e = lab.cfg.energy;

    // geodesic flow of family 1
    let m1 = build_family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let q1 = build_quartic(&m1, (0.0, 0.0))?;
    let s_geo = flow::sample_geodesic_state(&m1, e, lab.cfg.seed)?;
    let geo = flow::integrate_geodesic(&m1, &s_geo, t_final, dt, Method::Gauss4, Some(&q1))?;

    // natural flows: F is the quartic integral of the Jacobi metric at E
    let mut nat_results = Vec::new();
    for (label, variant, p) in [
        ("s1", SystemVariant::S1, None),
        ("s2", SystemVariant::S2, Some(lab.p_shift())),
    ] {
        let sys = build_natural(lab.psi.clone(), variant, p, false)?;
        let jac = jacobi_metric(&sys, e);
        let qf = build_quartic(&jac, (0.0, 0.0))?;
        let s0 = flow::sample_energy_surface(&sys, e, lab.cfg.seed)?;
        let tr = flow::integrate_natural(&sys, &s0, t_final, dt, Method::Gauss4, Some(&qf))?;
        nat_results.push((label, tr));
    }

    // symplectic order check: implicit midpoint drift scales as dt^2
    let d_coarse = flow::integrate_geodesic(&m1, &s_geo, 10.0, 4e-3, Method::Midpoint, None)?
        .h_drift;
    let d_fine = flow::integrate_geodesic(&m1, &s_geo, 10.0, 2e-3, Method::Midpoint, None)?
        .h_drift;
    let ratio = d_coarse / d_fine;

    let mut passed = geo.relative_h_drift() <= 1e-8
        && geo.relative_f_drift().unwrap_or(f64::INFINITY) <= 1e-6
        && (3.0..=5.0).contains(&ratio);
    let mut details = json!({
        "geodesic_h_drift": geo.relative_h_drift(),
        "geodesic_f_drift": geo.relative_f_drift(),
        "h_bound": 1e-8,
        "f_bound": 1e-6,
        "midpoint_drift_ratio": ratio,
        "ratio_window": [3.0, 5.0],
        "T": t_final,
        "dt": dt,
    });
    for (label, tr) in &nat_results {
        passed = passed
            && tr.relative_h_drift() <= 1e-8
            && tr.relative_f_drift().unwrap_or(f64::INFINITY) <= 1e-6;
        details[format!("{label}_h_drift")] = json!(tr.relative_h_drift());
        details[format!("{label}_f_drift")] = json!(tr.relative_f_drift());
        details[format!("{label}_chart_switches")] = json!(tr.switches);
    }
    Ok((passed, details))
}

// --- criterion 8: Jacobi metric == family metric -----------------------

fn c8_maupertuis(lab: &Lab) -> Result<(bool, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(lab.cfg.seed ^ 0x9e3779b97f4a7c15);
    let p = lab.p_shift();
    let s1 = build_natural(lab.psi.clone(), SystemVariant::S1, None, false)?;
    let s2 = build_natural(lab.psi.clone(), SystemVariant::S2, Some(p), false)?;
    let mut worst: f64 = 0.0;
    for &e in &[0.5, 1.0, 2.0] {
        let f1 = build_family1(lab.psi.clone(), e, 0.0);
        let f2 = build_family2(lab.psi.clone(), e, 0.0, p);
        for _ in 0..100 {
            let x = rng.gen::<f64>() * TAU;
            let y = rng.gen::<f64>() * 4.0 - 2.0;
            worst = worst.max((s1.jacobi_lambda(x, y, e) - f1.lam(x, y)).abs());
            worst = worst.max((s2.jacobi_lambda(x, y, e) - f2.lam(x, y)).abs());
        }
    }
    Ok((
        worst <= 1e-12,
        json!({ "max_deviation": worst, "bound": 1e-12, "energies": [0.5, 1.0, 2.0] }),
    ))
}

// --- criterion 9: sphere smoothness data -------------------------------

/// Second-difference stencil at a plane-chart pole: for a C^2 function of
/// a rotation-invariant construction the axial second differences agree
/// and the mixed difference vanishes as the stencil shrinks.
fn stencil_defect(f: &dyn Fn(f64, f64) -> Result<f64>, h: f64) -> Result<f64> {
    let c = f(0.0, 0.0)?;
    let d2u = (f(h, 0.0)? - 2.0 * c + f(-h, 0.0)?) / (h * h);
    let d2v = (f(0.0, h)? - 2.0 * c + f(0.0, -h)?) / (h * h);
    let mixed = (f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h);
    Ok((d2u - d2v).abs().max(mixed.abs()))
}

fn c9_smoothness(lab: &Lab) -> Result<(bool, Value)> {
    // p0 stability under quadrature-grid refinement
    let p0_fine = lab.psi.compute_p0(256)?.p0;
    let p0_delta = (lab.p0 - p0_fine).abs();

    // S2 kinetic coefficient on both charts
    let p = lab.p0 + 1.0;
    let s2 = build_natural(lab.psi.clone(), SystemVariant::S2, Some(p), true)?;
    let mut kin_min = f64::INFINITY;
    let ym = lab.psi.y_max();
    for i in 0..400 {
        let y = -ym + 2.0 * ym * i as f64 / 399.0;
        kin_min = kin_min.min(s2.kinetic_coeff(y));
    }
    // plane-chart factors at both poles via the chart functions
    let mut hloss: f64 = 0.0;
    let s1 = build_natural(lab.psi.clone(), SystemVariant::S1, None, false)?;
    for sys in [&s1, &s2] {
        for chart in [Chart::North, Chart::South] {
            let kin = |u: f64, v: f64| Ok(sys.to_plane_chart(chart, u, v)?.0);
            let pot = |u: f64, v: f64| Ok(sys.to_plane_chart(chart, u, v)?.1);
            hloss = hloss.max(stencil_defect(&kin, 0.05)?);
            hloss = hloss.max(stencil_defect(&pot, 0.05)?);
        }
    }
    // Hamiltonian continuity across the chart switch
    let m1 = build_family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let s = PhaseState::new(Chart::North, 0.8, 1.6, 0.5, 0.3);
    let t = flow::chart_switch(&s);
    let h_geo = (geo_h(&m1)(&s) - geo_h(&m1)(&t)).abs();
    let h_nat = (natural_h(&s2)(&s) - natural_h(&s2)(&t)).abs();
    let h_gap = h_geo.max(h_nat);

    Ok((
        p0_delta <= 1e-6 && kin_min > 0.0 && hloss <= 1e-4 && h_gap <= 1e-10,
        json!({
            "p0": lab.p0,
            "p0_refinement_delta": p0_delta,
            "p0_bound": 1e-6,
            "s2_kinetic_min": kin_min,
            "pole_stencil_defect": hloss,
            "stencil_bound": 1e-4,
            "chart_switch_h_gap": h_gap,
            "h_gap_bound": 1e-10,
        }),
    ))
}

// --- criterion 10: max of the S1 potential -----------------------------

fn c10_extremum(lab: &Lab) -> Result<(bool, Value)> {
    let s1 = build_natural(lab.psi.clone(), SystemVariant::S1, None, false)?;
    let vmax = s1.max_potential();
    let exact = 3.0f64.powf(-0.75);
    Ok((
        (vmax - exact).abs() <= 1e-6,
        json!({ "max_potential": vmax, "analytic": exact, "bound": 1e-6 }),
    ))
}

// --- criterion 11: nontriviality and inequivalence ---------------------

fn c11_nontriviality(lab: &Lab) -> Result<(bool, Value)> {
    let m1 = build_family1(lab.psi.clone(), lab.cfg.c, lab.cfg.d1);
    let m2 = build_family2(lab.psi.clone(), lab.cfg.c, lab.cfg.d1, lab.p_shift());
    let w1 = nontriviality_witness(&m1).both().is_some();
    let w2 = nontriviality_witness(&m2).both().is_some();
    let rot = ConformalMetric::new(FAnsatzData::rotational(lab.psi.clone(), lab.cfg.c));
    // an x-independent factor has Lambda_xy = 0 identically but generally
    // Lambda_yy != 0, so only the xy witness is required to vanish
    let wr = nontriviality_witness(&rot);
    let rot_clean = wr.xy.is_none();

    // curvature: round-sphere control constant, family 1 not
    let mut rng = ChaCha8Rng::seed_from_u64(lab.cfg.seed ^ 0x5bf0a8b145769ea7);
    let round = RoundSphere;
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..50 {
        let u = rng.gen::<f64>() * 2.0 - 1.0;
        let v = rng.gen::<f64>() * 2.0 - 1.0;
        let k = gauss_curvature(&round, u, v)?;
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    let round_spread = kmax - kmin;
    let (mut f1min, mut f1max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..20 {
        for j in 0..20 {
            let x = TAU * i as f64 / 19.0;
            let y = -1.0 + 2.0 * j as f64 / 19.0;
            if m1.lam(x, y) > 0.1 {
                let k = gauss_curvature(&m1, x, y)?;
                f1min = f1min.min(k);
                f1max = f1max.max(k);
            }
        }
    }
    let fam1_spread = f1max - f1min;

    let roots = lab.psi.potential_root_scan();
    let roots_ok = roots.len() == 1 && roots[0].abs() < 1e-9;
    let distinct = distinctness_check(&lab.psi, lab.p0 + 1.0, lab.p0 + 2.0)?;
    // Psi_2(1) - Psi_0(1) = psi''(0) - psi(0)
    let kc_fact = (lab.psi.d2psi(0.0) - lab.psi.psi(0.0)).abs();

    Ok((
        w1 && w2
            && rot_clean
            && round_spread <= 1e-9
            && fam1_spread > 1e-3
            && roots_ok
            && distinct
            && kc_fact <= 1e-10,
        json!({
            "family1_witnesses": w1,
            "family2_witnesses": w2,
            "rotational_control_clean": rot_clean,
            "round_curvature_spread": round_spread,
            "round_bound": 1e-9,
            "family1_curvature_spread": fam1_spread,
            "variation_floor": 1e-3,
            "eta_roots": roots,
            "distinctness": distinct,
            "kovalevskaya_comparison_value": kc_fact,
        }),
    ))
}

/// Aggregate report document for serialization.
pub fn report_document(lab: &Lab, results: &[CriterionResult]) -> Value {
    json!({
        "schema_version": 1,
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config": lab.cfg.echo(),
        "p0": lab.p0,
        "all_passed": results.iter().all(|r| r.passed),
        "criteria": results.iter().map(|r| serde_json::to_value(r).unwrap()).collect::<Vec<_>>(),
    })
}

/// Convenience: machine-readable error record for CLI failure paths.
pub fn error_record(e: &Error) -> Value {
    json!({
        "schema_version": 1,
        "status": "error",
        "message": e.to_string(),
    })
}
