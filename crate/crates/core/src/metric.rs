//! Conformal metric families on the cylinder `(x, y)`, built from the
//! generating solution: `Lambda = (psi'' - psi) cos x + xi''(y)` with the
//! family-specific `xi''`, plus control metrics (round sphere, rotationally
//! symmetric) and the nontriviality / distinctness witnesses.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::jet::Jet;
use crate::psi::PsiSolution;
use crate::{Error, Result};

/// Which second member of the ansatz family a metric belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyTag {
    Fam1,
    Fam2,
    Custom,
}

/// Rule producing `xi''(y)` and its derivatives.
#[derive(Debug, Clone, Copy)]
enum XiRule {
    /// `xi'' = N(y) / psi'^2` with the family numerator.
    Quotient,
    /// `xi'' = const` (flat surrogate and degenerate fixtures).
    Constant(f64),
}

/// Data of the ansatz `f(x,y) = psi(y) cos x + xi(y) + d (x^2 - y^2)`.
///
/// Only `xi''` and higher derivatives of `xi` are ever needed, so `xi`
/// itself is not represented. `cos_coeff` multiplies the `psi cos x` part
/// (0 gives the rotationally symmetric / flat controls) and `xi_scale`
/// multiplies `xi''` (≠1 produces the deliberately broken ansatz used as a
/// sensitivity control).
#[derive(Debug, Clone)]
pub struct FAnsatzData {
    pub psi: Arc<PsiSolution>,
    pub c: f64,
    pub d1: f64,
    pub p: f64,
    pub d: f64,
    pub family_tag: FamilyTag,
    xi_rule: XiRule,
    pub cos_coeff: f64,
    pub xi_scale: f64,
}

/// Serializable descriptor of a metric for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDescriptor {
    pub family: FamilyTag,
    pub c: f64,
    pub d1: f64,
    pub p: f64,
    pub d: f64,
    pub psi_tolerance: f64,
    pub y_max: f64,
}

impl FAnsatzData {
    pub fn family1(psi: Arc<PsiSolution>, c: f64, d1: f64) -> Self {
        FAnsatzData {
            psi,
            c,
            d1,
            p: 0.0,
            d: 0.0,
            family_tag: FamilyTag::Fam1,
            xi_rule: XiRule::Quotient,
            cos_coeff: 1.0,
            xi_scale: 1.0,
        }
    }

    pub fn family2(psi: Arc<PsiSolution>, c: f64, d1: f64, p: f64) -> Self {
        FAnsatzData {
            psi,
            c,
            d1,
            p,
            d: c / 2.0,
            family_tag: FamilyTag::Fam2,
            xi_rule: XiRule::Quotient,
            cos_coeff: 1.0,
            xi_scale: 1.0,
        }
    }

    /// Flat surrogate `f = const·(x^2+y^2)`-like: `psi` absent, `xi''`
    /// constant, `d = 0`; `Lambda = xi''`.
    pub fn flat(psi: Arc<PsiSolution>, xi2: f64) -> Self {
        FAnsatzData {
            psi,
            c: xi2,
            d1: 0.0,
            p: 0.0,
            d: 0.0,
            family_tag: FamilyTag::Custom,
            xi_rule: XiRule::Constant(xi2),
            cos_coeff: 0.0,
            xi_scale: 1.0,
        }
    }

    /// Rotationally symmetric control: `Lambda = c / psi'^2`, no `cos x`
    /// term.
    pub fn rotational(psi: Arc<PsiSolution>, c: f64) -> Self {
        FAnsatzData {
            psi,
            c,
            d1: 0.0,
            p: 0.0,
            d: 0.0,
            family_tag: FamilyTag::Custom,
            xi_rule: XiRule::Quotient,
            cos_coeff: 0.0,
            xi_scale: 1.0,
        }
    }

    /// Copy with `xi''` multiplied by `s` (broken-ansatz control).
    pub fn with_xi_scale(&self, s: f64) -> Self {
        let mut a = self.clone();
        a.xi_scale = s;
        a
    }

    /// `xi''` and its first four derivatives at `y`, via the quotient rule
    /// on jets. For family 2 the numerator `c (psi'^2 - psi^2 + d1 psi + p)`
    /// is differentiated in the cancellation-free form
    /// `(psi'^2-psi^2)' = 2 psi' (psi''-psi)`.
    pub fn xi_jet(&self, y: f64) -> Jet {
        let base = match self.xi_rule {
            XiRule::Constant(v) => Jet::constant(v),
            XiRule::Quotient => {
                let pk = self.psi.pack(y);
                let ps = pk.psi;
                let eta = pk.eta;
                let denom = {
                    let dpsi = Jet::new([ps[1], ps[2], ps[3], ps[4], ps[5]]);
                    dpsi.mul(&dpsi)
                };
                let num = match self.family_tag {
                    FamilyTag::Fam2 => {
                        // N = c (w + d1 psi + p), w = psi'^2 - psi^2
                        let n0 = pk.w + self.d1 * ps[0] + self.p;
                        let n1 = ps[1] * (2.0 * eta[0] + self.d1);
                        let n2 = 2.0 * (ps[2] * eta[0] + ps[1] * eta[1]) + self.d1 * ps[2];
                        let n3 = 2.0 * (ps[3] * eta[0] + 2.0 * ps[2] * eta[1] + ps[1] * eta[2])
                            + self.d1 * ps[3];
                        let n4 = 2.0
                            * (ps[4] * eta[0]
                                + 3.0 * ps[3] * eta[1]
                                + 3.0 * ps[2] * eta[2]
                                + ps[1] * eta[3])
                            + self.d1 * ps[4];
                        Jet::new([n0, n1, n2, n3, n4]).scale(self.c)
                    }
                    // Fam1 and the rotational control: N = d1 psi + c
                    _ => Jet::new([
                        self.d1 * ps[0] + self.c,
                        self.d1 * ps[1],
                        self.d1 * ps[2],
                        self.d1 * ps[3],
                        self.d1 * ps[4],
                    ]),
                };
                num.div(&denom)
            }
        };
        base.scale(self.xi_scale)
    }

    pub fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor {
            family: self.family_tag,
            c: self.c,
            d1: self.d1,
            p: self.p,
            d: self.d,
            psi_tolerance: self.psi.tolerance(),
            y_max: self.psi.y_max(),
        }
    }
}

/// Anything that behaves as a conformal factor `Lambda(x, y)` with partial
/// derivatives; curvature and witness scans are generic over this.
pub trait ConformalFactor {
    fn lam(&self, x: f64, y: f64) -> f64;
    /// `d^(i+j) Lambda / dx^i dy^j`, total order `i + j <= 4`.
    fn lam_partial(&self, x: f64, y: f64, i: usize, j: usize) -> f64;
}

/// A metric `Lambda (dx^2 + dy^2)` assembled from an ansatz:
/// `Lambda = scale · (cos_coeff (psi''-psi) cos x + xi'')`.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    pub ansatz: FAnsatzData,
    /// Constant conformal rescaling (the quartic coefficients must be
    /// invariant under it; kept as an explicit knob for that check).
    pub scale: f64,
    /// Advisory positivity flag computed on a probe grid at construction.
    pub positive_on_grid: bool,
}

impl ConformalMetric {
    pub fn new(ansatz: FAnsatzData) -> Self {
        let mut m = ConformalMetric {
            ansatz,
            scale: 1.0,
            positive_on_grid: true,
        };
        m.positive_on_grid = m.min_on_grid(64) > 0.0;
        m
    }

    /// Same metric with `Lambda` multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut m = self.clone();
        m.scale *= k;
        m
    }

    fn min_on_grid(&self, n: usize) -> f64 {
        let y_lim = self.ansatz.psi.y_max().min(3.0);
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
                let y = -y_lim + 2.0 * y_lim * j as f64 / (n - 1) as f64;
                min = min.min(self.lam(x, y));
            }
        }
        min
    }

    /// `lambda = Lambda / 4`, the `f`-normalized factor (`lambda = f_zzbar`).
    pub fn lambda_small(&self, x: f64, y: f64) -> f64 {
        0.25 * self.lam(x, y)
    }

    pub fn descriptor(&self) -> MetricDescriptor {
        self.ansatz.descriptor()
    }
}

impl ConformalFactor for ConformalMetric {
    fn lam(&self, x: f64, y: f64) -> f64 {
        let a = &self.ansatz;
        self.scale * (a.cos_coeff * a.psi.eta(y) * x.cos() + a.xi_jet(y).value())
    }

    fn lam_partial(&self, x: f64, y: f64, i: usize, j: usize) -> f64 {
        assert!(i + j <= 4, "partial order too high");
        let a = &self.ansatz;
        // d^i/dx^i cos x cycles through (cos, -sin, -cos, sin)
        let cx = match i % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        };
        let eta_j = a.psi.pack(y).eta[j];
        let xi_term = if i == 0 { a.xi_jet(y).deriv(j) } else { 0.0 };
        self.scale * (a.cos_coeff * eta_j * cx + xi_term)
    }
}

/// Round-sphere control in the plane chart: `Lambda = 4/(1 + u^2 + v^2)^2`
/// (unit curvature).
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundSphere;

impl ConformalFactor for RoundSphere {
    fn lam(&self, u: f64, v: f64) -> f64 {
        let s = 1.0 + u * u + v * v;
        4.0 / (s * s)
    }

    fn lam_partial(&self, u: f64, v: f64, i: usize, j: usize) -> f64 {
        let s = 1.0 + u * u + v * v;
        match (i, j) {
            (0, 0) => 4.0 / (s * s),
            (1, 0) => -16.0 * u / s.powi(3),
            (0, 1) => -16.0 * v / s.powi(3),
            (2, 0) => -16.0 / s.powi(3) + 96.0 * u * u / s.powi(4),
            (0, 2) => -16.0 / s.powi(3) + 96.0 * v * v / s.powi(4),
            (1, 1) => 96.0 * u * v / s.powi(4),
            _ => panic!("round-sphere partials implemented to order 2"),
        }
    }
}

/// Gaussian curvature of `Lambda (dx^2 + dy^2)`:
/// `K = -(Lambda_xx + Lambda_yy - (Lambda_x^2 + Lambda_y^2)/Lambda) / (2 Lambda^2)`.
pub fn gauss_curvature<M: ConformalFactor + ?Sized>(m: &M, x: f64, y: f64) -> Result<f64> {
    let l = m.lam(x, y);
    if l <= 0.0 {
        return Err(Error::Positivity(format!("Lambda({x}, {y}) = {l} <= 0")));
    }
    let lx = m.lam_partial(x, y, 1, 0);
    let ly = m.lam_partial(x, y, 0, 1);
    let lxx = m.lam_partial(x, y, 2, 0);
    let lyy = m.lam_partial(x, y, 0, 2);
    Ok(-(lxx + lyy - (lx * lx + ly * ly) / l) / (2.0 * l * l))
}

pub fn build_family1(psi: Arc<PsiSolution>, c: f64, d1: f64) -> ConformalMetric {
    ConformalMetric::new(FAnsatzData::family1(psi, c, d1))
}

pub fn build_family2(psi: Arc<PsiSolution>, c: f64, d1: f64, p: f64) -> ConformalMetric {
    ConformalMetric::new(FAnsatzData::family2(psi, c, d1, p))
}

/// Grid-search result of the two second-derivative witnesses of
/// nontriviality: a point where `Lambda_xy != 0` and a point where
/// `Lambda_xx != Lambda_yy`.
#[derive(Debug, Clone, Copy)]
pub struct Witnesses {
    pub xy: Option<(f64, f64)>,
    pub anisotropy: Option<(f64, f64)>,
}

impl Witnesses {
    pub fn both(&self) -> Option<((f64, f64), (f64, f64))> {
        Some((self.xy?, self.anisotropy?))
    }
}

/// Search a 64x64 grid over `[0, 2pi] x [-3, 3]` for the nontriviality
/// witnesses, threshold 1e-6.
pub fn nontriviality_witness<M: ConformalFactor + ?Sized>(m: &M) -> Witnesses {
    const DELTA: f64 = 1e-6;
    let n = 64;
    let mut xy = None;
    let mut anis = None;
    for i in 0..n {
        for j in 0..n {
            let x = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let y = -3.0 + 6.0 * j as f64 / (n - 1) as f64;
            if xy.is_none() && m.lam_partial(x, y, 1, 1).abs() > DELTA {
                xy = Some((x, y));
            }
            if anis.is_none()
                && (m.lam_partial(x, y, 2, 0) - m.lam_partial(x, y, 0, 2)).abs() > DELTA
            {
                anis = Some((x, y));
            }
            if xy.is_some() && anis.is_some() {
                return Witnesses { xy, anisotropy: anis };
            }
        }
    }
    Witnesses { xy, anisotropy: anis }
}

/// The parameter-distinctness obstruction: the root scan of `psi'' - psi`
/// must find the single root 0, after which two parameter values give
/// equivalent systems only if equal. Returns whether `p1`, `p2` give
/// distinct systems.
pub fn distinctness_check(psi: &PsiSolution, p1: f64, p2: f64) -> Result<bool> {
    let roots = psi.potential_root_scan();
    if roots.len() != 1 || roots[0].abs() > 1e-8 {
        return Err(Error::Inconclusive(format!(
            "root scan of psi''-psi returned {roots:?}, expected exactly {{0}}"
        )));
    }
    Ok((p1 - p2).abs() > 1e-12)
}
