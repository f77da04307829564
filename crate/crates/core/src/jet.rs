//! Small fixed-order Taylor jets: a value together with derivatives up to
//! order four with respect to a single variable. Used to differentiate the
//! rational expressions built from the psi recurrences (xi'' and friends)
//! without finite differences.

/// Value plus derivatives 1..=4. `c[k]` is the k-th derivative, not the
/// Taylor coefficient (no factorial scaling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; 5],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { c: [v, 0.0, 0.0, 0.0, 0.0] }
    }

    pub fn new(c: [f64; 5]) -> Self {
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn deriv(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        for v in &mut c {
            *v *= s;
        }
        Jet { c }
    }

    pub fn add(&self, o: &Jet) -> Self {
        let mut c = [0.0; 5];
        for k in 0..5 {
            c[k] = self.c[k] + o.c[k];
        }
        Jet { c }
    }

    pub fn sub(&self, o: &Jet) -> Self {
        let mut c = [0.0; 5];
        for k in 0..5 {
            c[k] = self.c[k] - o.c[k];
        }
        Jet { c }
    }

    /// Leibniz product with binomial weights on derivative values.
    pub fn mul(&self, o: &Jet) -> Self {
        const BINOM: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0],
        ];
        let mut c = [0.0; 5];
        for k in 0..5 {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += BINOM[k][j] * self.c[j] * o.c[k - j];
            }
            c[k] = acc;
        }
        Jet { c }
    }

    /// Quotient self/o, solving the Leibniz relation for the quotient's
    /// derivative values.
    pub fn div(&self, o: &Jet) -> Self {
        const BINOM: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0],
        ];
        let mut q = [0.0; 5];
        for k in 0..5 {
            let mut acc = self.c[k];
            for j in 0..k {
                acc -= BINOM[k][j] * q[j] * o.c[k - j];
            }
            q[k] = acc / o.c[0];
        }
        Jet { c: q }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet_of_exp(x: f64) -> Jet {
        let e = x.exp();
        Jet::new([e, e, e, e, e])
    }

    fn jet_of_sin(x: f64) -> Jet {
        Jet::new([x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()])
    }

    #[test]
    fn product_rule() {
        let x = 0.7;
        let p = jet_of_exp(x).mul(&jet_of_sin(x));
        // d^2/dx^2 (e^x sin x) = 2 e^x cos x
        assert!((p.deriv(2) - 2.0 * x.exp() * x.cos()).abs() < 1e-12);
        // d^4 (e^x sin x) = -4 e^x sin x
        assert!((p.deriv(4) + 4.0 * x.exp() * x.sin()).abs() < 1e-12);
    }

    #[test]
    fn quotient_inverts_product() {
        let x = 0.3;
        let a = jet_of_exp(x);
        let b = jet_of_sin(x).add(&Jet::constant(2.0));
        let q = a.mul(&b).div(&b);
        for k in 0..5 {
            assert!((q.c[k] - a.c[k]).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn tan_derivatives() {
        let x = 0.4;
        let s = jet_of_sin(x);
        let c = Jet::new([x.cos(), -x.sin(), -x.cos(), x.sin(), x.cos()]);
        let t = s.div(&c);
        let sec2 = 1.0 / (x.cos() * x.cos());
        assert!((t.deriv(1) - sec2).abs() < 1e-12);
        let tn = x.tan();
        assert!((t.deriv(2) - 2.0 * tn * sec2).abs() < 1e-11);
    }
}
