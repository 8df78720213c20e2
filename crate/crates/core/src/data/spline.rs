use crate::error::{ForecastError, Result};

/// Interpolating cubic spline with zero second derivative at both ends.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(ForecastError::dim("spline values", n, values.len()));
        }
        if n == 0 {
            return Err(ForecastError::InvalidArgument("spline needs at least one knot".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ForecastError::InvalidArgument(
                "spline knots must be strictly increasing".into(),
            ));
        }

        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives (Thomas algorithm).
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0
                    * ((values[i + 2] - values[i + 1]) / h[i + 1]
                        - (values[i + 1] - values[i]) / h[i]);
            }
            for i in 1..m {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - h[i + 1] * second[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        })
    }

    /// Evaluates the spline; outside the knot span the end segments are extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if n == 1 {
            return self.values[0];
        }
        let seg = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (x0, x1) = (self.knots[seg], self.knots[seg + 1]);
        if t == x0 {
            return self.values[seg];
        }
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.values[seg]
            + b * self.values[seg + 1]
            + ((a * a * a - a) * self.second[seg] + (b * b * b - b) * self.second[seg + 1]) * h * h
                / 6.0
    }
}
