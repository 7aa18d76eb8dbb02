//! Generalized Morse wavelets, `Psi(w) = a w^beta exp(-w^gamma)` for `w > 0`.

use std::f64::consts::E;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::fft_frequencies;

/// A member of the generalized Morse family, normalized so that the
/// frequency-domain peak value is 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseWavelet {
    beta: f64,
    gamma: f64,
}

impl Default for MorseWavelet {
    fn default() -> Self {
        Self { beta: 3.0, gamma: 3.0 }
    }
}

impl MorseWavelet {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta.is_finite() && gamma.is_finite() && beta > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Morse parameters must be positive, got beta={beta}, gamma={gamma}"
            )));
        }
        Ok(Self { beta, gamma })
    }

    /// Checks the decay constraint (`beta > 2`) required before transforming.
    pub fn for_transform(self) -> Result<Self> {
        if self.beta <= 2.0 {
            return Err(Error::InvalidInput(format!(
                "beta must exceed 2 for the ridge transform, got {}",
                self.beta
            )));
        }
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Radian frequency of the spectral peak, `(beta/gamma)^(1/gamma)`.
    pub fn peak_frequency(&self) -> f64 {
        (self.beta / self.gamma).powf(1.0 / self.gamma)
    }

    pub fn amplitude_const(&self) -> f64 {
        2.0 * (E * self.gamma / self.beta).powf(self.beta / self.gamma)
    }

    /// Dimensionless duration `P = sqrt(beta gamma)`.
    pub fn duration(&self) -> f64 {
        (self.beta * self.gamma).sqrt()
    }

    /// Frequency-domain value; zero for `omega <= 0`.
    pub fn evaluate_freq(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        // log form avoids overflow of w^beta for large arguments
        (self.amplitude_const().ln() + self.beta * omega.ln() - omega.powf(self.gamma)).exp()
    }

    /// k-th derivative of `ln Psi` at `omega > 0`, for k >= 1.
    fn log_derivative(&self, k: usize, omega: f64) -> f64 {
        // d^k/dw^k [beta ln w] = beta (-1)^(k-1) (k-1)! / w^k
        let fact: f64 = (1..k).map(|i| i as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let log_part = self.beta * sign * fact / omega.powi(k as i32);
        // d^k/dw^k [w^gamma] = gamma (gamma-1) ... (gamma-k+1) w^(gamma-k)
        let falling: f64 = (0..k).map(|i| self.gamma - i as f64).product();
        log_part - falling * omega.powf(self.gamma - k as f64)
    }

    /// `Psi^(p)(w) / Psi(w)` for p = 0..=max via the log-derivative recursion
    /// `m_p = sum_{k<p} C(p-1,k) L^(k+1) m_(p-1-k)`.
    fn derivative_ratios(&self, max: usize, omega: f64) -> Vec<f64> {
        let logs: Vec<f64> = (1..=max).map(|k| self.log_derivative(k, omega)).collect();
        let mut m = vec![1.0; max + 1];
        for p in 1..=max {
            let mut acc = 0.0;
            let mut binom = 1.0;
            for k in 0..p {
                acc += binom * logs[k] * m[p - 1 - k];
                binom = binom * (p - 1 - k) as f64 / (k + 1) as f64;
            }
            m[p] = acc;
        }
        m
    }

    /// Dimensionless derivative `w^p Psi^(p)(w) / Psi(w)` for p in 1..=4.
    pub fn dimensionless_derivative(&self, p: usize, omega: f64) -> Result<f64> {
        if !(1..=4).contains(&p) {
            return Err(Error::UnsupportedOrder(p));
        }
        if omega <= 0.0 {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        Ok(omega.powi(p as i32) * self.derivative_ratios(p, omega)[p])
    }

    /// Checks the suitability bounds at the peak frequency for orders 1..=max_order.
    pub fn suitability_check(&self, delta: f64, max_order: usize) -> Result<SuitabilityReport> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidInput(format!("stability level must be positive, got {delta}")));
        }
        if delta >= 1.0 {
            return Err(Error::NotModulated(delta));
        }
        if !(1..=4).contains(&max_order) {
            return Err(Error::UnsupportedOrder(max_order));
        }
        let wp = self.peak_frequency();
        let mut orders = Vec::with_capacity(max_order);
        let mut factorial = 1.0;
        for p in 1..=max_order {
            factorial *= p as f64;
            let value = self.dimensionless_derivative(p, wp)?.abs() / factorial;
            let exponent = if p % 2 == 0 { p as f64 / 2.0 } else { (p as f64 - 1.0) / 2.0 };
            let bound = delta.powf(-exponent);
            orders.push(OrderCheck { order: p, value, bound, pass: value <= bound, margin: bound - value });
        }
        let p = self.duration();
        let duration_upper = (2.0 / delta).sqrt();
        Ok(SuitabilityReport {
            delta,
            duration: p,
            duration_upper,
            duration_in_range: (1.0..=duration_upper).contains(&p),
            orders,
        })
    }

    /// Sampled time-domain wavelet `psi(t/s)/s` on a unit sample grid,
    /// centered at index `length/2`, via inverse FFT of `Psi(s w)`.
    pub fn time_domain(&self, length: usize, scale: f64) -> Result<Vec<Complex64>> {
        if length < 16 {
            return Err(Error::InvalidInput(format!("time-domain length must be >= 16, got {length}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let omega = fft_frequencies(length, 1.0);
        let mut buf: Vec<Complex64> = omega
            .iter()
            .map(|&w| Complex64::new(self.evaluate_freq(scale * w) / length as f64, 0.0))
            .collect();
        FftPlanner::new().plan_fft_inverse(length).process(&mut buf);
        buf.rotate_right(length / 2);
        Ok(buf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub order: usize,
    /// `|Psi~_p(w_psi)| / p!`
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    /// `bound - value`; negative when failing.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub delta: f64,
    pub duration: f64,
    pub duration_upper: f64,
    /// Whether `1 <= P <= sqrt(2/delta)`.
    pub duration_in_range: bool,
    pub orders: Vec<OrderCheck>,
}

impl SuitabilityReport {
    pub fn all_pass(&self) -> bool {
        self.orders.iter().all(|o| o.pass)
    }

    /// The order with the smallest margin.
    pub fn binding(&self) -> Option<&OrderCheck> {
        self.orders.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}
