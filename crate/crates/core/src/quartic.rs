//! The integrability criterion and the fourth-degree integral of the
//! geodesic flow: `F = 2 Re(p_z^4 + a1 p_z^3 p_zbar) + a2 (p_z p_zbar)^2`
//! with `a1 = -4 f_zz / lambda` and `a2` recovered from the antiderivative
//! `h` (`h_zbar = g`, `a2 = -h / lambda^2`). Also the generic Poisson
//! bracket and killing-recursion verification engines.
//!
//! Convention: `z = x + i y`, `p_z = (p_x - i p_y)/2`, so
//! `p_z p_zbar = (p_x^2 + p_y^2)/4`.

use num_complex::Complex64;

use crate::metric::{ConformalFactor, ConformalMetric, FAnsatzData};
use crate::quad;
use crate::{Error, Result};

/// Which polar chart of S^2 a phase point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    North,
    South,
}

/// Chart-tagged point of the cotangent bundle.
#[derive(Debug, Clone, Copy)]
pub struct PhaseState {
    pub chart: Chart,
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseState {
    pub fn new(chart: Chart, x: f64, y: f64, px: f64, py: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        PhaseState {
            chart,
            x: x.rem_euclid(tau),
            y,
            px,
            py,
        }
    }

    /// `p_z = (p_x - i p_y)/2`.
    pub fn p_z(&self) -> Complex64 {
        Complex64::new(0.5 * self.px, -0.5 * self.py)
    }
}

/// Second- and third-order data of `f = psi cos x + xi + d (x^2 - y^2)` at
/// a point, in complex form, including the metric's constant scale.
struct FData {
    f_zz: Complex64,
    f_zzz: Complex64,
    lambda: f64,
    lambda_z: Complex64,
}

fn f_data(m: &ConformalMetric, x: f64, y: f64) -> FData {
    let a = &m.ansatz;
    let pk = a.psi.pack(y);
    let xi = a.xi_jet(y);
    let cc = a.cos_coeff;
    let (psi, dpsi, d2psi, d3psi) = (cc * pk.psi[0], cc * pk.psi[1], cc * pk.psi[2], cc * pk.psi[3]);
    let (cx, sx) = (x.cos(), x.sin());
    let d = a.d;
    let f_xx = -psi * cx + 2.0 * d;
    let f_xy = -dpsi * sx;
    let f_yy = d2psi * cx + xi.value() - 2.0 * d;
    let f_xxx = psi * sx;
    let f_xxy = -dpsi * cx;
    let f_xyy = -d2psi * sx;
    let f_yyy = d3psi * cx + xi.deriv(1);
    let s = m.scale;
    let f_zz = Complex64::new(0.25 * (f_xx - f_yy), -0.5 * f_xy) * s;
    let f_zzz = Complex64::new(0.125 * (f_xxx - 3.0 * f_xyy), 0.125 * (f_yyy - 3.0 * f_xxy)) * s;
    // lambda = f_zzbar = Lambda/4; its z-derivative from the Lambda partials
    let lambda = 0.25 * m.lam(x, y);
    let lambda_z = Complex64::new(
        0.125 * m.lam_partial(x, y, 1, 0),
        -0.125 * m.lam_partial(x, y, 0, 1),
    );
    FData {
        f_zz,
        f_zzz,
        lambda,
        lambda_z,
    }
}

/// Residual of the real form of the integrability criterion,
/// `6(A_y B_y + A_x B_x) + 2(B ΔA + A ΔB) + (B_xx - B_yy - 2 A_xy) λ`,
/// with `A = -((psi''+psi)cos x + xi'' - 4d)/4`, `B = psi' sin x / 2`.
pub fn pde_residual(ansatz: &FAnsatzData, x: f64, y: f64) -> f64 {
    let pk = ansatz.psi.pack(y);
    let xi = ansatz.xi_jet(y);
    let cc = ansatz.cos_coeff;
    let ps: Vec<f64> = pk.psi.iter().map(|v| cc * v).collect();
    let (cx, sx) = (x.cos(), x.sin());
    let d = ansatz.d;

    let a_val = -0.25 * ((ps[2] + ps[0]) * cx + xi.value() - 4.0 * d);
    let a_x = 0.25 * (ps[2] + ps[0]) * sx;
    let a_y = -0.25 * ((ps[3] + ps[1]) * cx + xi.deriv(1));
    let a_xx = 0.25 * (ps[2] + ps[0]) * cx;
    let a_xy = 0.25 * (ps[3] + ps[1]) * sx;
    let a_yy = -0.25 * ((ps[4] + ps[2]) * cx + xi.deriv(2));

    let b_val = 0.5 * ps[1] * sx;
    let b_x = 0.5 * ps[1] * cx;
    let b_y = 0.5 * ps[2] * sx;
    let b_xx = -0.5 * ps[1] * sx;
    let b_yy = 0.5 * ps[3] * sx;

    // lambda of the ansatz (cos part can be switched off in controls)
    let lambda = 0.25 * (cc * pk.eta[0] * cx + xi.value());

    6.0 * (a_y * b_y + a_x * b_x)
        + 2.0 * (b_val * (a_xx + a_yy) + a_val * (b_xx + b_yy))
        + (b_xx - b_yy - 2.0 * a_xy) * lambda
}

/// Integrate `dh = 2 Re(gbar dz)` along the axis-aligned two-segment path
/// `from -> (to.x, from.y) -> to`.
pub fn path_antiderivative<G>(g: &G, from: (f64, f64), to: (f64, f64)) -> Result<f64>
where
    G: Fn(f64, f64) -> Complex64,
{
    const TOL: f64 = 1e-11;
    // along x: dh = 2 Re g dx; along y: dh = 2 Im g dy
    let leg_x = quad::integrate(|x| 2.0 * g(x, from.1).re, from.0, to.0, TOL)?;
    let leg_y = quad::integrate(|y| 2.0 * g(to.0, y).im, from.1, to.1, TOL)?;
    Ok(leg_x + leg_y)
}

/// Same endpoints, other corner: `from -> (from.x, to.y) -> to`.
fn path_antiderivative_alt<G>(g: &G, from: (f64, f64), to: (f64, f64)) -> Result<f64>
where
    G: Fn(f64, f64) -> Complex64,
{
    const TOL: f64 = 1e-11;
    let leg_y = quad::integrate(|y| 2.0 * g(from.0, y).im, from.1, to.1, TOL)?;
    let leg_x = quad::integrate(|x| 2.0 * g(x, to.1).re, from.0, to.0, TOL)?;
    Ok(leg_y + leg_x)
}

/// The degree-4 integral attached to a metric. `a0 = a4 = 1` and
/// `a3 = conj(a1)` by construction; only `a1` and `a2` are stored as
/// evaluators.
#[derive(Debug, Clone)]
pub struct QuarticIntegral {
    pub metric: ConformalMetric,
    pub base_point: (f64, f64),
    /// Path-independence defect of `h` over the unit square at the base
    /// point, recorded at construction.
    pub loop_residual: f64,
    /// Additive gauge constant of `h` (shifts `F` by a function of `H`).
    pub h_offset: f64,
}

impl QuarticIntegral {
    pub fn a1(&self, x: f64, y: f64) -> Complex64 {
        let d = f_data(&self.metric, x, y);
        -4.0 * d.f_zz / d.lambda
    }

    /// `g = d(a1 lambda^3)/dz / lambda = -4 (f_zzz lambda + 2 f_zz lambda_z)`.
    pub fn g(&self, x: f64, y: f64) -> Complex64 {
        let d = f_data(&self.metric, x, y);
        -4.0 * (d.f_zzz * d.lambda + 2.0 * d.f_zz * d.lambda_z)
    }

    /// Antiderivative with `h_zbar = g`, gauged to `h(base_point) = 0`.
    pub fn h(&self, x: f64, y: f64) -> Result<f64> {
        let g = |x: f64, y: f64| self.g(x, y);
        Ok(path_antiderivative(&g, self.base_point, (x, y))? + self.h_offset)
    }

    pub fn a2(&self, x: f64, y: f64) -> Result<f64> {
        let lambda = self.metric.lambda_small(x, y);
        Ok(-self.h(x, y)? / (lambda * lambda))
    }

    /// Copy with `h` shifted by `c0` (gauge freedom; changes `F` by
    /// `-c0 (p_z p_zbar / lambda)^2`, a function of `H` alone).
    pub fn with_gauge(&self, c0: f64) -> Self {
        let mut q = self.clone();
        q.h_offset += c0;
        q
    }

    /// Evaluate `F` at a phase state. South-chart states are transported
    /// to the north coordinates `(x, y, p) -> (-x, -y, -p)` first.
    pub fn eval(&self, s: &PhaseState) -> Result<f64> {
        let s = match s.chart {
            Chart::North => *s,
            Chart::South => PhaseState::new(Chart::North, -s.x, -s.y, -s.px, -s.py),
        };
        let pz = s.p_z();
        let pzb = pz.conj();
        let a1 = self.a1(s.x, s.y);
        let a2 = self.a2(s.x, s.y)?;
        Ok(2.0 * (pz.powi(4) + a1 * pz.powi(3) * pzb).re + a2 * (pz * pzb).re.powi(2))
    }
}

/// Construct the quartic integral, refusing when the criterion residual
/// exceeds 1e-6 on a 16x16 probe grid over `[0, 2pi] x [-2, 2]`.
pub fn build_quartic(metric: &ConformalMetric, base_point: (f64, f64)) -> Result<QuarticIntegral> {
    let n = 16;
    let mut max_res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let y = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
            max_res = max_res.max(pde_residual(&metric.ansatz, x, y).abs());
        }
    }
    if max_res > 1e-6 {
        return Err(Error::NotIntegrable(format!(
            "criterion residual {max_res:.3e} > 1e-6 on the probe grid"
        )));
    }
    if metric.lambda_small(base_point.0, base_point.1) == 0.0 {
        return Err(Error::Positivity("lambda = 0 at the base point".into()));
    }
    let q = QuarticIntegral {
        metric: metric.clone(),
        base_point,
        loop_residual: 0.0,
        h_offset: 0.0,
    };
    let g = |x: f64, y: f64| q.g(x, y);
    let to = (base_point.0 + 1.0, base_point.1 + 1.0);
    let loop_residual =
        (path_antiderivative(&g, base_point, to)? - path_antiderivative_alt(&g, base_point, to)?)
            .abs();
    Ok(QuarticIntegral {
        loop_residual,
        ..q
    })
}

/// Poisson bracket of two phase-space functions by 4th-order central
/// differences in all four coordinates.
pub fn poisson_bracket<F, G>(f: &F, g: &G, s: &PhaseState, step: f64) -> Result<f64>
where
    F: Fn(&PhaseState) -> f64,
    G: Fn(&PhaseState) -> f64,
{
    if !(step > 1e-8 && step < 1e-3) {
        return Err(Error::Domain(format!("step = {step} outside (1e-8, 1e-3)")));
    }
    let shift = |s: &PhaseState, i: usize, d: f64| {
        let mut t = *s;
        match i {
            0 => t.x += d,
            1 => t.y += d,
            2 => t.px += d,
            _ => t.py += d,
        }
        t
    };
    let d4 = |f: &dyn Fn(&PhaseState) -> f64, i: usize| {
        (-f(&shift(s, i, 2.0 * step)) + 8.0 * f(&shift(s, i, step))
            - 8.0 * f(&shift(s, i, -step))
            + f(&shift(s, i, -2.0 * step)))
            / (12.0 * step)
    };
    let mut sum = 0.0;
    for i in 0..2 {
        sum += d4(f, i) * d4(g, i + 2) - d4(f, i + 2) * d4(g, i);
    }
    Ok(sum)
}

/// The k-th residual of the killing recursion for a degree-n polynomial
/// integral `sum_k b_k p_w^(n-k) p_wbar^k` of `H = p_w p_wbar / (4 theta)`:
/// `theta db_{k-1}/dw + (n-(k-1)) b_{k-1} dtheta/dw
///  + theta db_k/dwbar + k b_k dtheta/dwbar`,
/// with `b_{-1} = b_{n+1} = 0`. Derivatives by central differences.
pub fn killing_residual(
    coeffs: &[&dyn Fn(f64, f64) -> Complex64],
    theta: &dyn Fn(f64, f64) -> f64,
    k: usize,
    at: (f64, f64),
) -> Result<Complex64> {
    let n = coeffs.len() - 1;
    if k > n + 1 {
        return Err(Error::Domain(format!("k = {k} > n+1 = {}", n + 1)));
    }
    let h = 1e-5;
    let (x, y) = at;
    let dw = |f: &dyn Fn(f64, f64) -> Complex64| {
        // d/dw = (d/dx - i d/dy)/2
        let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        (fx - Complex64::i() * fy) * 0.5
    };
    let dwb = |f: &dyn Fn(f64, f64) -> Complex64| {
        let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        (fx + Complex64::i() * fy) * 0.5
    };
    let theta_c = |x: f64, y: f64| Complex64::new(theta(x, y), 0.0);
    let th = theta(x, y);
    let th_w = dw(&theta_c);
    let th_wb = dwb(&theta_c);
    let mut res = Complex64::new(0.0, 0.0);
    if k >= 1 {
        let bm = coeffs[k - 1];
        res += th * dw(bm) + ((n - (k - 1)) as f64) * bm(x, y) * th_w;
    }
    if k <= n {
        let bk = coeffs[k];
        res += th * dwb(bk) + (k as f64) * bk(x, y) * th_wb;
    }
    Ok(res)
}

/// Residual of the integrated compatibility equation for `xi`:
/// `psi' xi''' + 2 psi'' xi'' - 4d (psi'' - psi) - d1`.
pub fn xi_consistency(ansatz: &FAnsatzData, y: f64) -> f64 {
    let t = ansatz.psi.triple(y);
    let xi = ansatz.xi_jet(y);
    t[1] * xi.deriv(1) + 2.0 * t[2] * xi.value() - 4.0 * ansatz.d * ansatz.psi.eta(y) - ansatz.d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_family1, build_family2, ConformalMetric};
    use crate::psi::PsiSolution;
    use std::sync::Arc;

    fn psi() -> Arc<PsiSolution> {
        Arc::new(PsiSolution::solve(8.0, 1e-10).unwrap())
    }

    fn p0() -> f64 {
        psi().compute_p0(128).unwrap().p0
    }

    #[test]
    fn pde_residual_families() {
        let p = psi();
        let f1 = FAnsatzData::family1(p.clone(), 1.0, 0.0);
        assert!(pde_residual(&f1, 0.7, 0.3).abs() < 1e-8);
        let f2 = FAnsatzData::family2(p.clone(), 1.0, 0.0, p0() + 1.0);
        for &(x, y) in &[(0.7, 0.3), (2.2, -1.4), (4.8, 1.9)] {
            assert!(pde_residual(&f2, x, y).abs() < 1e-8, "({x},{y})");
        }
    }

    #[test]
    fn pde_residual_flat_surrogate_zero() {
        let f = FAnsatzData::flat(psi(), 1.0);
        assert_eq!(pde_residual(&f, 0.9, -0.4), 0.0);
    }

    #[test]
    fn pde_residual_detects_broken_ansatz() {
        let f2 = FAnsatzData::family2(psi(), 1.0, 0.0, 1.0).with_xi_scale(1.1);
        let mut max: f64 = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                let x = 2.0 * std::f64::consts::PI * i as f64 / 15.0;
                let y = -2.0 + 4.0 * j as f64 / 15.0;
                max = max.max(pde_residual(&f2, x, y).abs());
            }
        }
        assert!(max > 1e-3, "broken ansatz residual only {max:.3e}");
    }

    #[test]
    fn xi_consistency_residuals() {
        let p = psi();
        let f1 = FAnsatzData::family1(p.clone(), 2.0, 0.7);
        assert!(xi_consistency(&f1, 0.8).abs() < 1e-9);
        let f2 = FAnsatzData::family2(p.clone(), 1.0, 0.0, 1.0);
        assert!(xi_consistency(&f2, 1.2).abs() < 1e-9);
        let zero = FAnsatzData::family1(p, 0.0, 0.0);
        assert_eq!(xi_consistency(&zero, 0.5), 0.0);
    }

    #[test]
    fn path_antiderivative_constants() {
        let one = |_x: f64, _y: f64| Complex64::new(1.0, 0.0);
        let h = path_antiderivative(&one, (0.0, 0.0), (1.5, 2.0)).unwrap();
        assert!((h - 3.0).abs() < 1e-10); // h = 2x
        let im = |_x: f64, _y: f64| Complex64::new(0.0, 1.0);
        let h = path_antiderivative(&im, (0.0, 0.0), (1.5, 2.0)).unwrap();
        assert!((h - 4.0).abs() < 1e-10); // h = 2y
    }

    #[test]
    fn build_and_loop_residual() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        assert!(q.loop_residual < 1e-8, "loop {:.3e}", q.loop_residual);
        // a1 real on the line x = 0 (B vanishes there)
        for &y in &[0.0, 0.7, -1.3] {
            assert!(q.a1(0.0, y).im.abs() < 1e-12);
        }
        // h(base) = 0 gauge
        assert_eq!(q.h(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn a1_lambda_identity() {
        let m = build_family2(psi(), 1.0, 0.0, 1.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        for &(x, y) in &[(0.4, 0.9), (2.8, -0.6), (5.9, 1.6)] {
            let d = f_data(&m, x, y);
            let lhs = q.a1(x, y) * d.lambda;
            let rhs = -4.0 * d.f_zz;
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn refuses_broken_ansatz() {
        let bad = ConformalMetric::new(FAnsatzData::family2(psi(), 1.0, 0.0, 1.0).with_xi_scale(1.1));
        match build_quartic(&bad, (0.0, 0.0)) {
            Err(Error::NotIntegrable(_)) => {}
            other => panic!("expected NotIntegrable, got {other:?}"),
        }
    }

    #[test]
    fn scale_invariance_of_coefficients() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let q2 = build_quartic(&m.scaled(2.0), (0.0, 0.0)).unwrap();
        for &(x, y) in &[(0.9, 0.5), (3.0, -1.1)] {
            assert!((q.a1(x, y) - q2.a1(x, y)).norm() < 1e-10);
            assert!((q.a2(x, y).unwrap() - q2.a2(x, y).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn grad_h_matches_g() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let h = 1e-4;
        for &(x, y) in &[(0.8, 0.4), (2.5, -0.9)] {
            let gx = (q.h(x + h, y).unwrap() - q.h(x - h, y).unwrap()) / (2.0 * h);
            let gy = (q.h(x, y + h).unwrap() - q.h(x, y - h).unwrap()) / (2.0 * h);
            let g = q.g(x, y);
            assert!((gx - 2.0 * g.re).abs() < 1e-6, "h_x vs 2 Re g at ({x},{y})");
            assert!((gy - 2.0 * g.im).abs() < 1e-6, "h_y vs 2 Im g at ({x},{y})");
        }
    }

    #[test]
    fn eval_homogeneity() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let s = PhaseState::new(Chart::North, 1.1, 0.4, 0.7, -0.3);
        let f0 = q.eval(&s).unwrap();
        let neg = PhaseState { px: -s.px, py: -s.py, ..s };
        assert!((q.eval(&neg).unwrap() - f0).abs() < 1e-12);
        let dbl = PhaseState { px: 2.0 * s.px, py: 2.0 * s.py, ..s };
        assert!((q.eval(&dbl).unwrap() - 16.0 * f0).abs() < 1e-9 * f0.abs().max(1.0));
        let rest = PhaseState { px: 0.0, py: 0.0, ..s };
        assert_eq!(q.eval(&rest).unwrap(), 0.0);
    }

    #[test]
    fn eval_chart_involution() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let s = PhaseState::new(Chart::North, 1.1, 0.4, 0.7, -0.3);
        let flipped = PhaseState::new(Chart::South, -s.x, -s.y, -s.px, -s.py);
        assert!((q.eval(&s).unwrap() - q.eval(&flipped).unwrap()).abs() < 1e-8);
    }

    fn geo_h(m: &ConformalMetric) -> impl Fn(&PhaseState) -> f64 + '_ {
        move |s: &PhaseState| {
            let (x, y) = match s.chart {
                Chart::North => (s.x, s.y),
                Chart::South => (-s.x, -s.y),
            };
            (s.px * s.px + s.py * s.py) / (2.0 * m.lam(x, y))
        }
    }

    #[test]
    fn bracket_trivial_cases() {
        let m = build_family1(psi(), 1.0, 0.0);
        let h = geo_h(&m);
        let s = PhaseState::new(Chart::North, 0.9, 0.2, 1.1, -0.4);
        assert!(poisson_bracket(&h, &h, &s, 5e-4).unwrap().abs() < 1e-10);
        // rotational symmetry: x-independent metric conserves p_x
        let rot = ConformalMetric::new(FAnsatzData::rotational(psi(), 1.0));
        let hr = geo_h(&rot);
        let px = |s: &PhaseState| s.px;
        assert!(poisson_bracket(&px, &hr, &s, 5e-4).unwrap().abs() < 1e-10);
        assert!(poisson_bracket(&px, &hr, &s, 1.0).is_err());
    }

    #[test]
    fn bracket_scan_family1() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let h = geo_h(&m);
        let f = |s: &PhaseState| q.eval(s).unwrap();
        let mut rng = 42u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let s = PhaseState::new(
                Chart::North,
                next() * 2.0 * std::f64::consts::PI,
                next() * 4.0 - 2.0,
                next() * 4.0 - 2.0,
                next() * 4.0 - 2.0,
            );
            let b = poisson_bracket(&f, &h, &s, 5e-4).unwrap();
            assert!(b.abs() < 1e-6, "bracket {b:.3e} at {s:?}");
        }
    }

    #[test]
    fn gauge_freedom() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap().with_gauge(1.0);
        let h = geo_h(&m);
        let f = |s: &PhaseState| q.eval(s).unwrap();
        let s = PhaseState::new(Chart::North, 1.7, -0.8, 0.9, 0.6);
        let b = poisson_bracket(&f, &h, &s, 5e-4).unwrap();
        assert!(b.abs() < 1e-6, "gauged bracket {b:.3e}");
        // and the shift is exactly -c0 (p_z p_zbar / lambda)^2
        let q0 = build_quartic(&m, (0.0, 0.0)).unwrap();
        let pp = (s.px * s.px + s.py * s.py) / 4.0;
        let lam = m.lambda_small(s.x, s.y);
        let expected = -1.0 * (pp / lam).powi(2);
        assert!((f(&s) - q0.eval(&s).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn killing_linear_integral() {
        // n=1, b0 = b1 = 1 (F = p_x), theta independent of x
        let p = psi();
        let b = |_x: f64, _y: f64| Complex64::new(1.0, 0.0);
        let pc = p.clone();
        let theta = move |_x: f64, y: f64| {
            let d = pc.dpsi(y);
            1.0 / (d * d)
        };
        let coeffs: Vec<&dyn Fn(f64, f64) -> Complex64> = vec![&b, &b];
        for k in 0..=2 {
            let r = killing_residual(&coeffs, &theta, k, (0.7, 0.4)).unwrap();
            assert!(r.norm() < 1e-9, "k={k}, r={r}");
        }
    }

    #[test]
    fn killing_quartic_coefficients() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let one = |_x: f64, _y: f64| Complex64::new(1.0, 0.0);
        let b1 = |x: f64, y: f64| q.a1(x, y);
        let b2 = |x: f64, y: f64| Complex64::new(q.a2(x, y).unwrap(), 0.0);
        let b3 = |x: f64, y: f64| q.a1(x, y).conj();
        let coeffs: Vec<&dyn Fn(f64, f64) -> Complex64> = vec![&one, &b1, &b2, &b3, &one];
        let theta = |x: f64, y: f64| m.lambda_small(x, y);
        for &(x, y) in &[(0.9, 0.5), (2.3, -0.8), (4.1, 1.2)] {
            for k in 0..=5 {
                let r = killing_residual(&coeffs, &theta, k, (x, y)).unwrap();
                assert!(r.norm() < 1e-6, "k={k} at ({x},{y}): {r}");
            }
        }
    }

    #[test]
    fn killing_detects_perturbed_a2() {
        let m = build_family1(psi(), 1.0, 0.0);
        let q = build_quartic(&m, (0.0, 0.0)).unwrap();
        let one = |_x: f64, _y: f64| Complex64::new(1.0, 0.0);
        let b1 = |x: f64, y: f64| q.a1(x, y);
        // a2 shifted by a constant: theta_wbar != 0 makes k=2,3 residuals move
        let b2 = |x: f64, y: f64| Complex64::new(q.a2(x, y).unwrap() + 0.01, 0.0);
        let b3 = |x: f64, y: f64| q.a1(x, y).conj();
        let coeffs: Vec<&dyn Fn(f64, f64) -> Complex64> = vec![&one, &b1, &b2, &b3, &one];
        let theta = |x: f64, y: f64| m.lambda_small(x, y);
        let mut worst: f64 = 0.0;
        for k in 0..=5 {
            worst = worst.max(killing_residual(&coeffs, &theta, k, (0.9, 0.5)).unwrap().norm());
        }
        assert!(worst > 1e-4, "perturbation undetected: {worst:.3e}");
    }
}
