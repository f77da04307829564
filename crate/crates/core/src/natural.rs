//! Natural (kinetic + potential) systems on S^2 built from the generating
//! solution, their Jacobi (Maupertuis) metrics, and the polar plane charts
//! used for the smoothness probes at the poles.

use std::sync::Arc;

use crate::metric::{build_family1, build_family2, ConformalMetric};
use crate::psi::PsiSolution;
use crate::quartic::Chart;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemVariant {
    S1,
    S2,
}

/// Kinetic coefficient `Lambda_K(y)` plus potential `V(x, y)` in the
/// cylinder coordinates `(x, y) = (phi, log r)`:
///
/// - S1: `Lambda_K = 1/psi'^2`, `V = -psi'^2 (psi'' - psi) cos x`;
/// - S2: `Lambda_K = (psi'^2 - psi^2 + p)/psi'^2`,
///   `V = -psi'^2 (psi'' - psi) cos x / (psi'^2 - psi^2 + p)`.
///
/// The south chart carries the same kinetic coefficient (everything in it
/// is even in `y`) and the sign-flipped potential, which is exactly the
/// pullback of the north formulas under `(x, y) -> (-x, -y)`.
#[derive(Debug, Clone)]
pub struct NaturalSystem {
    pub psi: Arc<PsiSolution>,
    pub variant: SystemVariant,
    pub p: f64,
}

impl NaturalSystem {
    fn chart_sign(chart: Chart) -> f64 {
        match chart {
            Chart::North => 1.0,
            Chart::South => -1.0,
        }
    }

    /// `psi'^2 - psi^2 + p` for S2 (denominator / kinetic numerator).
    fn s2_q(&self, y: f64) -> f64 {
        self.psi.w(y) + self.p
    }

    pub fn kinetic_coeff(&self, y: f64) -> f64 {
        let dpsi = self.psi.dpsi(y);
        match self.variant {
            SystemVariant::S1 => 1.0 / (dpsi * dpsi),
            SystemVariant::S2 => self.s2_q(y) / (dpsi * dpsi),
        }
    }

    /// `d Lambda_K / dy`.
    pub fn kinetic_coeff_dy(&self, y: f64) -> f64 {
        let t = self.psi.triple(y);
        let (dpsi, d2psi) = (t[1], t[2]);
        let eta = self.psi.eta(y);
        match self.variant {
            SystemVariant::S1 => -2.0 * d2psi / dpsi.powi(3),
            SystemVariant::S2 => {
                // (q/psi'^2)' with q' = 2 psi' eta
                2.0 * (eta * dpsi * dpsi - self.s2_q(y) * d2psi) / dpsi.powi(3)
            }
        }
    }

    /// `G(y) = -psi'^2 (psi'' - psi)`, the shared potential amplitude.
    fn g(&self, y: f64) -> f64 {
        let dpsi = self.psi.dpsi(y);
        -dpsi * dpsi * self.psi.eta(y)
    }

    fn g_dy(&self, y: f64) -> f64 {
        let t = self.psi.triple(y);
        let p = self.psi.pack(y);
        -(2.0 * t[1] * t[2] * p.eta[0] + t[1] * t[1] * p.eta[1])
    }

    pub fn potential(&self, chart: Chart, x: f64, y: f64) -> f64 {
        let s = Self::chart_sign(chart);
        match self.variant {
            SystemVariant::S1 => s * self.g(y) * x.cos(),
            SystemVariant::S2 => s * self.g(y) * x.cos() / self.s2_q(y),
        }
    }

    pub fn potential_dx(&self, chart: Chart, x: f64, y: f64) -> f64 {
        let s = Self::chart_sign(chart);
        match self.variant {
            SystemVariant::S1 => -s * self.g(y) * x.sin(),
            SystemVariant::S2 => -s * self.g(y) * x.sin() / self.s2_q(y),
        }
    }

    pub fn potential_dy(&self, chart: Chart, x: f64, y: f64) -> f64 {
        let s = Self::chart_sign(chart);
        match self.variant {
            SystemVariant::S1 => s * self.g_dy(y) * x.cos(),
            SystemVariant::S2 => {
                let q = self.s2_q(y);
                let qd = 2.0 * self.psi.dpsi(y) * self.psi.eta(y);
                s * (self.g_dy(y) * q - self.g(y) * qd) / (q * q) * x.cos()
            }
        }
    }

    /// `(E - V) Lambda_K` computed directly from the system's evaluators
    /// (north chart); the honest side of the Maupertuis identity check.
    pub fn jacobi_lambda(&self, x: f64, y: f64, energy: f64) -> f64 {
        (energy - self.potential(Chart::North, x, y)) * self.kinetic_coeff(y)
    }

    /// Global maximum of the potential. For S1 the analytic critical point
    /// gives `max V = 3^(-3/4)`; computed numerically here so the analytic
    /// value stays an independent oracle.
    pub fn max_potential(&self) -> f64 {
        // V is maximal on the line x = 0 (for y > 0) by inspection of the
        // sign structure; scan y and refine by golden section
        let f = |y: f64| self.potential(Chart::North, 0.0, y).max(self.potential(
            Chart::North,
            std::f64::consts::PI,
            y,
        ));
        let y_lim = self.psi.y_max();
        let n = 400;
        let mut best = (0.0, f(0.0));
        for k in 0..=n {
            let y = -y_lim + 2.0 * y_lim * k as f64 / n as f64;
            let v = f(y);
            if v > best.1 {
                best = (y, v);
            }
        }
        let (mut a, mut b) = (best.0 - 0.1, best.0 + 0.1);
        const PHI: f64 = 0.618_033_988_749_894_9;
        let (mut c, mut d) = (b - PHI * (b - a), a + PHI * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - PHI * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + PHI * (b - a);
                fd = f(d);
            }
        }
        fc.max(fd)
    }

    /// Plane-chart form near a pole: returns `(kinetic_factor, potential)`
    /// at `(u, v)` with `r^2 = u^2 + v^2`:
    ///
    /// - S1: `(1/nu^2(r^2), +-mu(r^2) u)`;
    /// - S2: `((+-Phi(r^2) + p + 1)/nu^2(r^2), +-mu(r^2) u / (+-Phi + p + 1))`;
    ///
    /// upper signs in the north chart, lower in the south.
    pub fn to_plane_chart(&self, chart: Chart, u: f64, v: f64) -> Result<(f64, f64)> {
        let t = u * u + v * v;
        if t > 4.0 {
            return Err(Error::Domain(format!(
                "(u, v) with r^2 = {t} > 4 is outside the polar chart"
            )));
        }
        let s = Self::chart_sign(chart);
        let (nu, mu) = self.psi.nu_mu(t);
        match self.variant {
            SystemVariant::S1 => Ok((1.0 / (nu * nu), s * mu * u)),
            SystemVariant::S2 => {
                let q = s * self.psi.phi(t) + self.p + 1.0;
                if q <= 0.0 {
                    return Err(Error::Positivity(format!(
                        "kinetic factor numerator {q} <= 0 (p too small)"
                    )));
                }
                Ok((q / (nu * nu), s * mu * u / q))
            }
        }
    }
}

/// Construct a natural system. S2 requires `p`; `p <= p0` is allowed for
/// construction (positivity is advisory) unless `strict` is set.
pub fn build_natural(
    psi: Arc<PsiSolution>,
    variant: SystemVariant,
    p: Option<f64>,
    strict: bool,
) -> Result<NaturalSystem> {
    let p = match variant {
        SystemVariant::S1 => 0.0,
        SystemVariant::S2 => {
            p.ok_or_else(|| Error::Domain("variant S2 requires the parameter p".into()))?
        }
    };
    if variant == SystemVariant::S2 && strict {
        let a = psi.compute_p0(128)?;
        if p <= a.p0 {
            return Err(Error::Positivity(format!(
                "p = {p} <= p0 = {} degenerates the S2 kinetic coefficient",
                a.p0
            )));
        }
    }
    Ok(NaturalSystem { psi, variant, p })
}

/// The Jacobi metric of the system at energy `E` as a member of the
/// corresponding conformal family: fam1(c=E, d1=0) for S1 and
/// fam2(c=E, d1=0, p) for S2. `NaturalSystem::jacobi_lambda` is the direct
/// `(E - V) Lambda_K` evaluation the identity is tested against.
pub fn jacobi_metric(sys: &NaturalSystem, energy: f64) -> ConformalMetric {
    match sys.variant {
        SystemVariant::S1 => build_family1(sys.psi.clone(), energy, 0.0),
        SystemVariant::S2 => build_family2(sys.psi.clone(), energy, 0.0, sys.p),
    }
}
