//! Dormand–Prince 5(4) embedded Runge–Kutta stepper for autonomous systems
//! `ẏ = f(y)`, with the PI step-size controller of Hairer & Wanner.

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

pub struct DormandPrince {
    abs_tol: f64,
    rel_tol: f64,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    k1_valid: bool,
    err_prev: f64,
}

impl DormandPrince {
    pub fn new(dim: usize, abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            k1_valid: false,
            err_prev: 1e-4,
        }
    }

    /// Derivative at the current state, evaluating it if not cached.
    pub fn derivative<F, E>(&mut self, f: &mut F, y: &[f64]) -> Result<&[f64], E>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<(), E>,
    {
        if !self.k1_valid {
            f(y, &mut self.k[0])?;
            self.k1_valid = true;
        }
        Ok(&self.k[0])
    }

    /// Tries one step of size `h` from `y`. Returns the scaled error norm;
    /// the candidate state is available from [`Self::y_new`].
    pub fn attempt<F, E>(&mut self, f: &mut F, y: &[f64], h: f64) -> Result<f64, E>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<(), E>,
    {
        self.derivative(f, y)?;
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            f(&self.stage, &mut self.k[s])?;
            if s == 6 {
                self.y_new.copy_from_slice(&self.stage);
            }
        }
        // The last stage sits at the fifth-order solution, so k[6] = f(y_new).
        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, es) in E.iter().enumerate() {
                e += es * self.k[s][i];
            }
            let sc = self.abs_tol + self.rel_tol * y[i].abs().max(self.y_new[i].abs());
            let r = h * e / sc;
            sum += r * r;
        }
        Ok((sum / n as f64).sqrt())
    }

    pub fn y_new(&self) -> &[f64] {
        &self.y_new
    }

    /// Marks the last attempt as accepted; reuses its final stage as the
    /// first stage of the next step.
    pub fn accept(&mut self, err: f64) {
        self.k.swap(0, 6);
        self.k1_valid = true;
        self.err_prev = err.max(1e-4);
    }

    /// Step size proposal after an attempt with scaled error `err`.
    pub fn propose(&self, h: f64, err: f64, accepted: bool) -> f64 {
        if !err.is_finite() {
            return h * FAC_MIN;
        }
        let expo = 0.2 - BETA * 0.75;
        let fac11 = err.max(1e-300).powf(expo);
        if accepted {
            let fac = fac11 / self.err_prev.powf(BETA) / SAFETY;
            h / fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN)
        } else {
            h / (fac11 / SAFETY).min(1.0 / FAC_MIN)
        }
    }

    /// Initial step size heuristic (Hairer, Nørsett & Wanner, II.4).
    pub fn initial_step<F, E>(&mut self, f: &mut F, y: &[f64], h_max: f64) -> Result<f64, E>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<(), E>,
    {
        let f0 = self.derivative(f, y)?.to_vec();
        let n = y.len() as f64;
        let scale = |i: usize, v: &[f64]| self.abs_tol + self.rel_tol * v[i].abs();
        let d0 = (0..y.len()).map(|i| (y[i] / scale(i, y)).powi(2)).sum::<f64>() / n;
        let d1 = (0..y.len()).map(|i| (f0[i] / scale(i, y)).powi(2)).sum::<f64>() / n;
        let (d0, d1) = (d0.sqrt(), d1.sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_max);
        for i in 0..y.len() {
            self.stage[i] = y[i] + h0 * f0[i];
        }
        let mut f1 = vec![0.0; y.len()];
        f(&self.stage, &mut f1)?;
        let d2 = ((0..y.len()).map(|i| ((f1[i] - f0[i]) / scale(i, y)).powi(2)).sum::<f64>() / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        Ok((100.0 * h0).min(h1).min(h_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<F>(mut f: F, y0: Vec<f64>, t_end: f64, tol: f64) -> Vec<f64>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<(), ()>,
    {
        let mut dp = DormandPrince::new(y0.len(), tol, tol);
        let mut y = y0;
        let mut t = 0.0;
        let mut h = dp.initial_step(&mut f, &y, t_end).unwrap();
        while t < t_end {
            h = h.min(t_end - t);
            let err = dp.attempt(&mut f, &y, h).unwrap();
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(dp.y_new());
                dp.accept(err);
                h = dp.propose(h, err, true);
            } else {
                h = dp.propose(h, err, false);
            }
        }
        y
    }

    #[test]
    fn exponential_decay() {
        let y = run(
            |y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            vec![1.0],
            5.0,
            1e-12,
        );
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y = run(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            vec![1.0, 0.0],
            2.0 * std::f64::consts::PI,
            1e-12,
        );
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }
}
