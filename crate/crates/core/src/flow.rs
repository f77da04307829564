//! Symplectic integration of geodesic and natural Hamiltonian flows on the
//! cylinder charts of S^2, with automatic chart switching and conservation
//! drift measurement.
//!
//! Steppers: implicit midpoint (order 2) and the two-stage Gauss-Legendre
//! method (order 4), both symplectic; the Hamiltonians here have
//! position-dependent kinetic terms, so explicit splitting methods do not
//! apply. Gauss-4 is the default for long conservation runs; midpoint is
//! kept for the O(dt^2) drift-ratio diagnostic.

use std::io::Write as IoWrite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::{ConformalFactor, ConformalMetric};
use crate::natural::NaturalSystem;
use crate::quartic::{Chart, PhaseState, QuarticIntegral};
use crate::{Error, Result};

/// Chart-switch trigger: switch when the signed `y` exceeds this, which
/// maps the state to `y < -y_switch` in the other chart (and therefore
/// does not re-trigger).
pub const Y_SWITCH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Midpoint,
    Gauss4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Midpoint => "implicit-midpoint",
            Method::Gauss4 => "gauss4",
        }
    }
}

/// A Hamiltonian on the chart-tagged cotangent bundle with analytic
/// gradient, as needed by the implicit steppers.
pub trait HamSystem {
    fn hamiltonian(&self, s: &PhaseState) -> f64;
    /// `(H_x, H_y, H_px, H_py)` at the state.
    fn gradient(&self, s: &PhaseState) -> [f64; 4];
    /// Largest `|y|` the underlying data resolves.
    fn y_limit(&self) -> f64;
    /// Positivity of the kinetic coefficient at the state (domain check).
    fn kinetic_positive(&self, s: &PhaseState) -> bool;
}

/// Geodesic Hamiltonian `H = (p_x^2 + p_y^2) / (2 Lambda)`. South-chart
/// states are pulled back through `(x, y, p) -> (-x, -y, -p)`.
pub struct GeodesicFlow<'a> {
    pub metric: &'a ConformalMetric,
}

impl GeodesicFlow<'_> {
    fn north(s: &PhaseState) -> PhaseState {
        match s.chart {
            Chart::North => *s,
            Chart::South => PhaseState {
                chart: Chart::North,
                x: -s.x,
                y: -s.y,
                px: -s.px,
                py: -s.py,
            },
        }
    }
}

impl HamSystem for GeodesicFlow<'_> {
    fn hamiltonian(&self, s: &PhaseState) -> f64 {
        let n = Self::north(s);
        let p2 = n.px * n.px + n.py * n.py;
        p2 / (2.0 * self.metric.lam(n.x, n.y))
    }

    fn gradient(&self, s: &PhaseState) -> [f64; 4] {
        let n = Self::north(s);
        let lam = self.metric.lam(n.x, n.y);
        let p2 = n.px * n.px + n.py * n.py;
        let fac = -p2 / (2.0 * lam * lam);
        let g = [
            fac * self.metric.lam_partial(n.x, n.y, 1, 0),
            fac * self.metric.lam_partial(n.x, n.y, 0, 1),
            n.px / lam,
            n.py / lam,
        ];
        match s.chart {
            Chart::North => g,
            // H_south(z) = H_north(-z): the gradient picks up a sign
            Chart::South => [-g[0], -g[1], -g[2], -g[3]],
        }
    }

    fn y_limit(&self) -> f64 {
        self.metric.ansatz.psi.y_max()
    }

    fn kinetic_positive(&self, s: &PhaseState) -> bool {
        let n = Self::north(s);
        self.metric.lam(n.x, n.y) > 0.0
    }
}

/// Natural Hamiltonian `H = (p_x^2 + p_y^2) / (2 Lambda_K) + V`; the
/// `NaturalSystem` evaluators already take the chart, with the south-chart
/// potential sign flip built in.
pub struct NaturalFlow<'a> {
    pub sys: &'a NaturalSystem,
}

impl HamSystem for NaturalFlow<'_> {
    fn hamiltonian(&self, s: &PhaseState) -> f64 {
        let p2 = s.px * s.px + s.py * s.py;
        p2 / (2.0 * self.sys.kinetic_coeff(s.y)) + self.sys.potential(s.chart, s.x, s.y)
    }

    fn gradient(&self, s: &PhaseState) -> [f64; 4] {
        let lk = self.sys.kinetic_coeff(s.y);
        let p2 = s.px * s.px + s.py * s.py;
        [
            self.sys.potential_dx(s.chart, s.x, s.y),
            -p2 * self.sys.kinetic_coeff_dy(s.y) / (2.0 * lk * lk)
                + self.sys.potential_dy(s.chart, s.x, s.y),
            s.px / lk,
            s.py / lk,
        ]
    }

    fn y_limit(&self) -> f64 {
        self.sys.psi.y_max()
    }

    fn kinetic_positive(&self, s: &PhaseState) -> bool {
        self.sys.kinetic_coeff(s.y) > 0.0
    }
}

/// The antipodal chart change `(x, y, p_x, p_y) -> (-x mod 2pi, -y, -p_x, -p_y)`
/// with the chart tag flipped; an exact relabeling of the same phase point.
pub fn chart_switch(s: &PhaseState) -> PhaseState {
    let chart = match s.chart {
        Chart::North => Chart::South,
        Chart::South => Chart::North,
    };
    PhaseState::new(chart, -s.x, -s.y, -s.px, -s.py)
}

fn rhs<S: HamSystem>(sys: &S, s: &PhaseState) -> [f64; 4] {
    let g = sys.gradient(s);
    [g[2], g[3], -g[0], -g[1]]
}

fn with_z(s: &PhaseState, z: [f64; 4]) -> PhaseState {
    PhaseState {
        chart: s.chart,
        x: z[0],
        y: z[1],
        px: z[2],
        py: z[3],
    }
}

fn z_of(s: &PhaseState) -> [f64; 4] {
    [s.x, s.y, s.px, s.py]
}

/// One implicit-midpoint step via Newton iteration with a finite-difference
/// Jacobian; tolerance 1e-12, at most 20 iterations.
fn midpoint_step<S: HamSystem>(sys: &S, s: &PhaseState, dt: f64) -> Result<PhaseState> {
    let z0 = z_of(s);
    let mut z1 = z0;
    let f0 = rhs(sys, s);
    for i in 0..4 {
        z1[i] += dt * f0[i];
    }
    for _ in 0..20 {
        let mut mid = [0.0; 4];
        for i in 0..4 {
            mid[i] = 0.5 * (z0[i] + z1[i]);
        }
        let fm = rhs(sys, &with_z(s, mid));
        let mut res = [0.0; 4];
        let mut rnorm: f64 = 0.0;
        for i in 0..4 {
            res[i] = z1[i] - z0[i] - dt * fm[i];
            rnorm = rnorm.max(res[i].abs());
        }
        if rnorm < 1e-12 {
            return Ok(with_z(s, z1));
        }
        // J = I - (dt/2) Df(mid), Df by forward differences
        let eps = 1e-7;
        let mut jac = [[0.0; 4]; 4];
        for j in 0..4 {
            let mut mp = mid;
            mp[j] += eps;
            let fp = rhs(sys, &with_z(s, mp));
            for i in 0..4 {
                jac[i][j] = -(0.5 * dt) * (fp[i] - fm[i]) / eps;
            }
            jac[j][j] += 1.0;
        }
        let delta = solve4(jac, [-res[0], -res[1], -res[2], -res[3]])?;
        for i in 0..4 {
            z1[i] += delta[i];
        }
    }
    Err(Error::Stepper("midpoint Newton did not converge".into()))
}

/// One step of the two-stage Gauss-Legendre method (order 4), stages
/// resolved by fixed-point iteration.
fn gauss4_step<S: HamSystem>(sys: &S, s: &PhaseState, dt: f64) -> Result<PhaseState> {
    let sqrt3 = 3.0f64.sqrt();
    let a = [
        [0.25, 0.25 - sqrt3 / 6.0],
        [0.25 + sqrt3 / 6.0, 0.25],
    ];
    let z0 = z_of(s);
    let f0 = rhs(sys, s);
    let mut k = [f0, f0];
    for iter in 0..100 {
        let mut change: f64 = 0.0;
        let mut knew = k;
        for (si, kn) in knew.iter_mut().enumerate() {
            let mut zz = z0;
            for i in 0..4 {
                zz[i] += dt * (a[si][0] * k[0][i] + a[si][1] * k[1][i]);
            }
            *kn = rhs(sys, &with_z(s, zz));
            for i in 0..4 {
                change = change.max((kn[i] - k[si][i]).abs());
            }
        }
        k = knew;
        if change < 1e-13 {
            break;
        }
        if iter == 99 {
            return Err(Error::Stepper("Gauss-4 fixed point did not converge".into()));
        }
    }
    let mut z1 = z0;
    for i in 0..4 {
        z1[i] += dt * 0.5 * (k[0][i] + k[1][i]);
    }
    Ok(with_z(s, z1))
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Result<[f64; 4]> {
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Stepper("singular Newton system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let mut s = b[r];
        for c in r + 1..4 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

/// Per-quantity drift record of a trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DriftSummary {
    pub quantity: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub relative_drift: f64,
    pub steps: usize,
    pub switches: usize,
}

/// Result of a flow integration: thinned states plus drift statistics
/// computed over every step before thinning.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// Tracked `(H, F, p_x)` at the thinned times; `F` is present only
    /// when a quartic integral was attached.
    pub samples: Vec<(f64, Option<f64>, f64)>,
    pub method: Method,
    pub dt: f64,
    pub switches: usize,
    pub steps: usize,
    pub h_initial: f64,
    pub h_drift: f64,
    pub f_initial: Option<f64>,
    pub f_drift: Option<f64>,
    pub px_initial: f64,
    pub px_drift: f64,
}

impl Trajectory {
    /// `max |Q - Q(0)| / max(|Q(0)|, 1)`.
    pub fn relative_h_drift(&self) -> f64 {
        self.h_drift / self.h_initial.abs().max(1.0)
    }

    pub fn relative_f_drift(&self) -> Option<f64> {
        Some(self.f_drift? / self.f_initial?.abs().max(1.0))
    }

    pub fn relative_px_drift(&self) -> f64 {
        self.px_drift / self.px_initial.abs().max(1.0)
    }

    pub fn drift_summaries(&self) -> Vec<DriftSummary> {
        let mut out = vec![
            DriftSummary {
                quantity: "H".into(),
                initial: self.h_initial,
                max_abs_drift: self.h_drift,
                relative_drift: self.relative_h_drift(),
                steps: self.steps,
                switches: self.switches,
            },
            DriftSummary {
                quantity: "px".into(),
                initial: self.px_initial,
                max_abs_drift: self.px_drift,
                relative_drift: self.relative_px_drift(),
                steps: self.steps,
                switches: self.switches,
            },
        ];
        if let (Some(f0), Some(fd)) = (self.f_initial, self.f_drift) {
            out.push(DriftSummary {
                quantity: "F".into(),
                initial: f0,
                max_abs_drift: fd,
                relative_drift: self.relative_f_drift().unwrap(),
                steps: self.steps,
                switches: self.switches,
            });
        }
        out
    }

    /// CSV rows `time,chart,x,y,px,py,H,F` at the thinned times.
    pub fn write_csv<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "time,chart,x,y,px,py,H,F")?;
        for (i, s) in self.states.iter().enumerate() {
            let (h, f, _) = self.samples[i];
            let chart = match s.chart {
                Chart::North => "north",
                Chart::South => "south",
            };
            let f_str = f.map_or(String::new(), |v| format!("{v:.17e}"));
            writeln!(
                w,
                "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                self.times[i], chart, s.x, s.y, s.px, s.py, h, f_str
            )?;
        }
        Ok(())
    }
}

/// Thinning stride for stored states.
const THIN: usize = 10;
/// `F` is evaluated only at the thinned times (its evaluation carries two
/// adaptive quadratures); `H` and `p_x` are tracked at every step.
struct Tracker<'a> {
    f: Option<&'a QuarticIntegral>,
}

fn integrate_impl<S: HamSystem>(
    sys: &S,
    s0: &PhaseState,
    t_final: f64,
    dt: f64,
    method: Method,
    tracker: Tracker<'_>,
    allow_switch: bool,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(Error::Domain(format!("dt = {dt} outside (0, 1e-2]")));
    }
    let n_steps = (t_final.abs() / dt).round().max(1.0) as usize;
    let dt = dt.copysign(t_final);
    let y_lim = sys.y_limit();
    let mut s = *s0;
    let mut switches = 0usize;

    let eval_f = |s: &PhaseState| -> Result<Option<f64>> {
        tracker.f.map(|q| q.eval(s)).transpose()
    };

    let h0 = sys.hamiltonian(&s);
    let f0 = eval_f(&s)?;
    let px0 = s.px;
    let mut h_drift: f64 = 0.0;
    let mut f_drift: Option<f64> = f0.map(|_| 0.0);
    let mut px_drift: f64 = 0.0;

    let mut times = vec![0.0];
    let mut states = vec![s];
    let mut samples = vec![(h0, f0, s.px)];

    for step in 1..=n_steps {
        if !sys.kinetic_positive(&s) {
            return Err(Error::DomainExit(format!(
                "kinetic coefficient nonpositive at ({}, {})",
                s.x, s.y
            )));
        }
        s = match method {
            Method::Midpoint => midpoint_step(sys, &s, dt)?,
            Method::Gauss4 => gauss4_step(sys, &s, dt)?,
        };
        if allow_switch && s.y > Y_SWITCH {
            s = chart_switch(&s);
            switches += 1;
        }
        if s.y.abs() > y_lim {
            return Err(Error::DomainExit(format!(
                "|y| = {} left the solved band [-{y_lim}, {y_lim}] at step {step}",
                s.y.abs()
            )));
        }
        let h = sys.hamiltonian(&s);
        h_drift = h_drift.max((h - h0).abs());
        px_drift = px_drift.max((s.px - px0).abs());
        let thin_now = step % THIN == 0 || step == n_steps;
        let f_here = if thin_now { eval_f(&s)? } else { None };
        if let (Some(fd), Some(f0v), Some(fv)) = (f_drift.as_mut(), f0, f_here) {
            *fd = fd.max((fv - f0v).abs());
        }
        if thin_now {
            times.push(step as f64 * dt);
            states.push(s);
            samples.push((h, f_here, s.px));
        }
    }

    Ok(Trajectory {
        times,
        states,
        samples,
        method,
        dt,
        switches,
        steps: n_steps,
        h_initial: h0,
        h_drift,
        f_initial: f0,
        f_drift,
        px_initial: px0,
        px_drift,
    })
}

/// Integrate the geodesic flow of a conformal metric, optionally tracking
/// an attached quartic integral.
pub fn integrate_geodesic(
    metric: &ConformalMetric,
    s0: &PhaseState,
    t_final: f64,
    dt: f64,
    method: Method,
    quartic: Option<&QuarticIntegral>,
) -> Result<Trajectory> {
    let flow = GeodesicFlow { metric };
    integrate_impl(&flow, s0, t_final, dt, method, Tracker { f: quartic }, true)
}

/// Same, but with chart switching disabled (for the chart-transparency
/// diagnostic; the trajectory must then stay inside the solved band).
pub fn integrate_geodesic_single_chart(
    metric: &ConformalMetric,
    s0: &PhaseState,
    t_final: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory> {
    let flow = GeodesicFlow { metric };
    integrate_impl(&flow, s0, t_final, dt, method, Tracker { f: None }, false)
}

/// Integrate a natural system's flow, optionally tracking the quartic
/// integral of its Jacobi metric at the trajectory energy.
pub fn integrate_natural(
    sys: &NaturalSystem,
    s0: &PhaseState,
    t_final: f64,
    dt: f64,
    method: Method,
    quartic: Option<&QuarticIntegral>,
) -> Result<Trajectory> {
    let flow = NaturalFlow { sys };
    integrate_impl(&flow, s0, t_final, dt, method, Tracker { f: quartic }, true)
}

/// Draw a reproducible phase state on the energy surface `H_nat = E`:
/// position rejected until `V < E`, direction uniform, `|p|` fixed by the
/// energy.
pub fn sample_energy_surface(sys: &NaturalSystem, energy: f64, seed: u64) -> Result<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * std::f64::consts::PI;
    for _ in 0..1000 {
        let x = rng.gen::<f64>() * tau;
        let y = rng.gen::<f64>() * 2.0 - 1.0;
        let v = sys.potential(Chart::North, x, y);
        if v >= energy {
            continue;
        }
        let alpha = rng.gen::<f64>() * tau;
        let pmag = (2.0 * sys.kinetic_coeff(y) * (energy - v)).sqrt();
        return Ok(PhaseState::new(
            Chart::North,
            x,
            y,
            pmag * alpha.cos(),
            pmag * alpha.sin(),
        ));
    }
    Err(Error::NoRoom(format!(
        "no point with V < E = {energy} found on the sample window"
    )))
}

/// Geodesic analogue: a state with `H_geo = E` at a seeded position.
pub fn sample_geodesic_state(metric: &ConformalMetric, energy: f64, seed: u64) -> Result<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * std::f64::consts::PI;
    for _ in 0..1000 {
        let x = rng.gen::<f64>() * tau;
        let y = rng.gen::<f64>() * 2.0 - 1.0;
        let lam = metric.lam(x, y);
        if lam <= 0.0 {
            continue;
        }
        let alpha = rng.gen::<f64>() * tau;
        let pmag = (2.0 * lam * energy).sqrt();
        return Ok(PhaseState::new(
            Chart::North,
            x,
            y,
            pmag * alpha.cos(),
            pmag * alpha.sin(),
        ));
    }
    Err(Error::NoRoom("metric nonpositive on the sample window".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_family1, ConformalMetric, FAnsatzData};
    use crate::natural::{build_natural, SystemVariant};
    use crate::psi::PsiSolution;
    use crate::quartic::build_quartic;
    use std::sync::Arc;

    fn psi() -> Arc<PsiSolution> {
        Arc::new(PsiSolution::solve(8.0, 1e-10).unwrap())
    }

    #[test]
    fn chart_switch_involution() {
        let s = PhaseState::new(Chart::North, 1.2, 0.7, 0.4, -0.9);
        let t = chart_switch(&chart_switch(&s));
        assert_eq!(t.chart, Chart::North);
        assert!((t.x - s.x).abs() < 1e-15);
        assert_eq!(t.y, s.y);
        assert_eq!(t.px, s.px);
        assert_eq!(t.py, s.py);
        assert_eq!(chart_switch(&s).px.abs(), s.px.abs());
    }

    #[test]
    fn chart_switch_preserves_h() {
        let p = psi();
        let sys = build_natural(p.clone(), SystemVariant::S1, None, false).unwrap();
        let flow = NaturalFlow { sys: &sys };
        let m = build_family1(p, 1.0, 0.0);
        let geo = GeodesicFlow { metric: &m };
        let s = PhaseState::new(Chart::North, 0.8, 1.6, 0.5, 0.3);
        let t = chart_switch(&s);
        assert!((flow.hamiltonian(&s) - flow.hamiltonian(&t)).abs() < 1e-10);
        assert!((geo.hamiltonian(&s) - geo.hamiltonian(&t)).abs() < 1e-10);
    }

    #[test]
    fn rotational_metric_conserves_px() {
        let m = ConformalMetric::new(FAnsatzData::rotational(psi(), 1.0));
        let s0 = PhaseState::new(Chart::North, 0.3, 0.1, 0.8, 0.2);
        let tr = integrate_geodesic(&m, &s0, 50.0, 1e-3, Method::Gauss4, None).unwrap();
        assert!(tr.relative_px_drift() < 1e-10, "px drift {:.3e}", tr.px_drift);
    }

    #[test]
    fn time_reversal() {
        let m = build_family1(psi(), 1.0, 0.0);
        let s0 = PhaseState::new(Chart::North, 1.0, 0.2, 0.6, -0.3);
        let fwd = integrate_geodesic(&m, &s0, 5.0, 1e-3, Method::Gauss4, None).unwrap();
        let end = *fwd.states.last().unwrap();
        let back = integrate_geodesic(&m, &end, -5.0, 1e-3, Method::Gauss4, None).unwrap();
        let s1 = *back.states.last().unwrap();
        // compare as phase points (charts may differ by the involution)
        let a = GeodesicFlow::north(&s1);
        let b = GeodesicFlow::north(&s0);
        assert!((a.x - b.x).abs() < 1e-7, "x: {} vs {}", a.x, b.x);
        assert!((a.y - b.y).abs() < 1e-7);
        assert!((a.px - b.px).abs() < 1e-7);
        assert!((a.py - b.py).abs() < 1e-7);
    }

    #[test]
    fn geodesic_conservation_short() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let s0 = sample_geodesic_state(&m, 1.0, 42).unwrap();
        let tr = integrate_geodesic(&m, &s0, 10.0, 1e-3, Method::Gauss4, Some(&q)).unwrap();
        assert!(tr.relative_h_drift() < 1e-8, "H drift {:.3e}", tr.relative_h_drift());
        assert!(
            tr.relative_f_drift().unwrap() < 1e-6,
            "F drift {:.3e}",
            tr.relative_f_drift().unwrap()
        );
    }

    #[test]
    fn natural_conservation_short() {
        let p = psi();
        let sys = build_natural(p, SystemVariant::S1, None, false).unwrap();
        let s0 = sample_energy_surface(&sys, 1.0, 42).unwrap();
        let flow = NaturalFlow { sys: &sys };
        assert!((flow.hamiltonian(&s0) - 1.0).abs() < 1e-12);
        let tr = integrate_natural(&sys, &s0, 10.0, 1e-3, Method::Gauss4, None).unwrap();
        assert!(tr.relative_h_drift() < 1e-8, "H drift {:.3e}", tr.relative_h_drift());
    }

    #[test]
    fn midpoint_drift_ratio() {
        let m = build_family1(psi(), 1.0, 0.0);
        let s0 = sample_geodesic_state(&m, 1.0, 42).unwrap();
        let d1 = integrate_geodesic(&m, &s0, 10.0, 4e-3, Method::Midpoint, None)
            .unwrap()
            .h_drift;
        let d2 = integrate_geodesic(&m, &s0, 10.0, 2e-3, Method::Midpoint, None)
            .unwrap()
            .h_drift;
        let ratio = d1 / d2;
        assert!((3.0..=5.0).contains(&ratio), "drift ratio {ratio}");
    }

    #[test]
    fn chart_transparency() {
        let m = build_family1(psi(), 1.0, 0.0);
        // aim over the switch line
        let s0 = PhaseState::new(Chart::North, 0.5, 1.2, 0.1, 0.9);
        let with = integrate_geodesic(&m, &s0, 3.0, 1e-3, Method::Gauss4, None).unwrap();
        let without = integrate_geodesic_single_chart(&m, &s0, 3.0, 1e-3, Method::Gauss4).unwrap();
        assert!(with.switches > 0);
        for (i, s) in with.states.iter().enumerate() {
            let a = GeodesicFlow::north(s);
            let b = GeodesicFlow::north(&without.states[i]);
            let tau = 2.0 * std::f64::consts::PI;
            let dx = (a.x - b.x).rem_euclid(tau).min(tau - (a.x - b.x).rem_euclid(tau));
            assert!(dx < 1e-6 && (a.y - b.y).abs() < 1e-6, "step {i}");
        }
    }

    #[test]
    fn sampler_deterministic() {
        let sys = build_natural(psi(), SystemVariant::S1, None, false).unwrap();
        let a = sample_energy_surface(&sys, 1.0, 7).unwrap();
        let b = sample_energy_surface(&sys, 1.0, 7).unwrap();
        assert_eq!(z_of(&a), z_of(&b));
        // E below min V over the window is impossible
        assert!(sample_energy_surface(&sys, -10.0, 7).is_err());
    }

    #[test]
    fn rejects_large_dt() {
        let m = build_family1(psi(), 1.0, 0.0);
        let s0 = PhaseState::new(Chart::North, 0.5, 0.1, 0.4, 0.2);
        assert!(integrate_geodesic(&m, &s0, 1.0, 0.5, Method::Gauss4, None).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let m = build_family1(psi(), 1.0, 0.0);
        let s0 = PhaseState::new(Chart::North, 0.5, 0.1, 0.4, 0.2);
        let tr = integrate_geodesic(&m, &s0, 0.1, 1e-3, Method::Gauss4, None).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,chart,x,y,px,py,H,F");
        assert_eq!(lines.len(), 1 + tr.states.len());
    }
}
