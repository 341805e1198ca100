//! Natural cubic spline interpolation.

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Debug)]
pub struct CubicSpline<T> {
    knots: Vec<T>,
    values: Vec<T>,
    /// Second derivatives at the knots.
    curvature: Vec<T>,
}

impl<T: Real> CubicSpline<T> {
    /// Natural spline (zero curvature at both ends) through `(knots, values)`.
    pub fn natural(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(Error::Invalid("spline knots and values differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Invalid("a spline needs at least two knots".into()));
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid(format!(
                "spline knots must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if knots.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("spline data must be finite".into()));
        }

        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let two = T::of(2.0);
        let six = T::of(6.0);
        let mut curvature = vec![T::zero(); n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![T::zero(); m];
            let mut upper = vec![T::zero(); m];
            let mut rhs = vec![T::zero(); m];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = two * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] =
                    six * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = knots[k + 1] - knots[k];
                let w = lower / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                let carry = rhs[k - 1];
                rhs[k] -= w * carry;
            }
            curvature[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                curvature[k + 1] = (rhs[k] - upper[k] * curvature[k + 2]) / diag[k];
            }
        }
        Ok(Self {
            knots,
            values,
            curvature,
        })
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn domain(&self) -> (T, T) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn interval(&self, x: T) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Interpolated value; outside the knots the end cubics are extended.
    pub fn eval(&self, x: T) -> T {
        let i = self.interval(x);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - x) / h;
        let b = (x - self.knots[i]) / h;
        let six = T::of(6.0);
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * h
                * h
                / six
    }

    pub fn derivative(&self, x: T) -> T {
        let i = self.interval(x);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - x) / h;
        let b = (x - self.knots[i]) / h;
        let three = T::of(3.0);
        let six = T::of(6.0);
        (self.values[i + 1] - self.values[i]) / h
            - (three * a * a - T::one()) / six * h * self.curvature[i]
            + (three * b * b - T::one()) / six * h * self.curvature[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_through_knots() {
        let xs = vec![0.0f64, 0.5, 1.7, 2.0, 3.1];
        let ys = vec![1.0, -2.0, 0.3, 4.0, 4.5];
        let s = CubicSpline::natural(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn collinear_data_is_reproduced_exactly() {
        let s = CubicSpline::natural(vec![1.0f64, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.eval(2.5) - 2.5).abs() < 1e-15);
        assert!((s.derivative(3.3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn natural_spline_matches_hand_solution() {
        // Three knots at 0,1,2 with values 0,1,0: interior curvature M1 = -3.
        let s = CubicSpline::natural(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        // S(x) on [0,1] = x + (x^3 - x) * M1 / 6
        let x = 0.4f64;
        let expected = x + (x * x * x - x) * (-3.0) / 6.0;
        assert!((s.eval(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_repeated_knots() {
        assert!(CubicSpline::natural(vec![1.0, 2.0, 2.0, 3.0], vec![0.0; 4]).is_err());
    }
}
