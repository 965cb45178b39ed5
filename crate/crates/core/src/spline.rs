//! Natural cubic splines evaluated in Taylor arithmetic.
//!
//! Node values may themselves be Taylor expansions, which lets a tensor
//! product spline be differentiated in both directions.

use crate::error::{GeomError, Result};
use crate::taylor::Taylor;

#[derive(Debug, Clone)]
pub struct NaturalCubic {
    knots: Vec<f64>,
}

impl NaturalCubic {
    pub fn new(knots: Vec<f64>) -> Result<NaturalCubic> {
        if knots.len() < 2 {
            return Err(GeomError::Domain("a spline needs at least two knots".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(GeomError::Domain("non-finite spline knot".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::Domain("spline knots must be strictly increasing".into()));
        }
        Ok(NaturalCubic { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Second-derivative moments with zero end moments.
    pub fn moments(&self, values: &[Taylor]) -> Vec<Taylor> {
        let n = self.knots.len();
        assert_eq!(values.len(), n, "spline value count must match knots");
        let zero = values[0].zero_like();
        let mut m = vec![zero.clone(); n];
        if n < 3 {
            return m;
        }
        let h: Vec<f64> = self.knots.windows(2).map(|w| w[1] - w[0]).collect();
        // Thomas algorithm on the interior system
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs: Vec<Taylor> = Vec::with_capacity(k);
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            let slope_r = (&values[i + 2] - &values[i + 1]) / h[i + 1];
            let slope_l = (&values[i + 1] - &values[i]) / h[i];
            rhs.push((slope_r - slope_l) * 6.0);
        }
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            let prev = rhs[i - 1].clone();
            rhs[i] -= &(&prev * w);
        }
        m[k] = &rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (&rhs[i] - &(&m[i + 2] * h[i + 1])) / diag[i];
        }
        m
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Evaluates the spline (extrapolating with the end cubics outside the knots).
    pub fn eval(&self, values: &[Taylor], moments: &[Taylor], x: &Taylor) -> Taylor {
        let i = self.interval(x.value());
        let (xl, xr) = (self.knots[i], self.knots[i + 1]);
        let h = xr - xl;
        let a = (x * -1.0) + xr; // xr − x
        let b = x - xl; // x − xl
        let cube = |t: &Taylor| t * &t.square();
        let term_m = &cube(&a) * &moments[i] + &cube(&b) * &moments[i + 1];
        let lin_l = &values[i] / h - &moments[i] * (h / 6.0);
        let lin_r = &values[i + 1] / h - &moments[i + 1] * (h / 6.0);
        term_m / (6.0 * h) + &a * &lin_l + &b * &lin_r
    }

    /// First derivative of [`NaturalCubic::eval`] in closed form.
    pub fn eval_derivative(&self, values: &[Taylor], moments: &[Taylor], x: &Taylor) -> Taylor {
        let i = self.interval(x.value());
        let (xl, xr) = (self.knots[i], self.knots[i + 1]);
        let h = xr - xl;
        let a = (x * -1.0) + xr;
        let b = x - xl;
        let term_m = &b.square() * &moments[i + 1] - &a.square() * &moments[i];
        let lin_l = &values[i] / h - &moments[i] * (h / 6.0);
        let lin_r = &values[i + 1] / h - &moments[i + 1] * (h / 6.0);
        term_m / (2.0 * h) + lin_r - lin_l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values_and_linear_data() {
        let s = NaturalCubic::new(vec![0.0, 0.5, 1.5, 2.0, 3.0]).unwrap();
        let vals = Taylor::constants(&[1.0, 2.0, 4.0, 5.0, 7.0]);
        let m = s.moments(&vals);
        for (k, v) in s.knots().iter().zip(&vals) {
            let y = s.eval(&vals, &m, &Taylor::scalar(*k));
            assert!((y.value() - v.value()).abs() < 1e-13);
        }
        // linear data gives zero moments and exact derivative
        let lin: Vec<Taylor> = s.knots().iter().map(|k| Taylor::scalar(2.0 * k + 1.0)).collect();
        let ml = s.moments(&lin);
        assert!(ml.iter().all(|m| m.value().abs() < 1e-13));
        let x = &Taylor::seed(&[1.1], 3)[0];
        let y = s.eval(&lin, &ml, x);
        assert!((y.derivative(&[0]) - 2.0).abs() < 1e-13);
        assert!(y.derivative(&[0, 0]).abs() < 1e-12);
    }

    #[test]
    fn natural_end_conditions() {
        let s = NaturalCubic::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let vals = Taylor::constants(&[0.0, 1.0, 0.0, 1.0]);
        let m = s.moments(&vals);
        let at = |x: f64| s.eval(&vals, &m, &Taylor::seed(&[x], 2)[0]).derivative(&[0, 0]);
        assert!(at(0.0).abs() < 1e-12);
        assert!(at(3.0).abs() < 1e-12);
        // C2 across an interior knot
        assert!((at(1.0 - 1e-9) - at(1.0 + 1e-9)).abs() < 1e-6);
    }

    #[test]
    fn closed_form_derivative_matches_taylor() {
        let s = NaturalCubic::new(vec![0.0, 0.7, 1.5, 2.0, 3.1]).unwrap();
        let vals = Taylor::constants(&[1.0, -2.0, 4.0, 0.5, 7.0]);
        let m = s.moments(&vals);
        for x in [0.1, 0.7, 1.2, 2.9, 3.5] {
            let xt = &Taylor::seed(&[x], 3)[0];
            let d = s.eval_derivative(&vals, &m, xt);
            let f = s.eval(&vals, &m, xt);
            assert!((d.value() - f.derivative(&[0])).abs() < 1e-12);
            assert!((d.derivative(&[0]) - f.derivative(&[0, 0])).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalCubic::new(vec![0.0]).is_err());
        assert!(NaturalCubic::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(NaturalCubic::new(vec![0.0, f64::NAN]).is_err());
    }
}
