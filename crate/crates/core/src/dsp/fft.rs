//! Iterative radix-2 decimation-in-time FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::DspError;

/// Precomputed twiddles and bit-reversal permutation for one size.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if n < 2 || !n.is_power_of_two() {
            return Err(DspError::NotPowerOfTwo(n));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Fft { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward transform in place: `X[k] = sum_t x[t] e^{-2 pi i k t / n}`.
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let step = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }

    /// One-sided spectrum (`n/2 + 1` bins) of a real signal of length `n`.
    pub fn real_forward(&self, signal: &[f64], scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(signal.len(), self.n, "signal length must match plan");
        scratch.clear();
        scratch.extend(signal.iter().map(|&v| Complex64::new(v, 0.0)));
        self.process(scratch);
        scratch[..=self.n / 2].to_vec()
    }
}

/// One-sided DFT of a real power-of-two-length signal.
pub fn fft_real(signal: &[f64]) -> Result<Vec<Complex64>, DspError> {
    let plan = Fft::new(signal.len())?;
    Ok(plan.real_forward(signal, &mut Vec::with_capacity(signal.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_dc() {
        let z = fft_real(&[0.0; 8]).unwrap();
        assert_eq!(z.len(), 5);
        assert!(z.iter().all(|c| c.norm() == 0.0));
        let dc = fft_real(&[1.0; 8]).unwrap();
        assert!((dc[0].re - 8.0).abs() < 1e-9 && dc[0].im.abs() < 1e-9);
        assert!(dc[1..].iter().all(|c| c.norm() < 1e-9));
    }

    #[test]
    fn rejects_bad_lengths() {
        for n in [0, 1, 3, 6, 100] {
            assert!(matches!(fft_real(&vec![0.0; n]), Err(DspError::NotPowerOfTwo(m)) if m == n));
        }
    }

    #[test]
    fn single_tone_lands_in_its_bin() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 5.0 * t as f64 / n as f64).cos()).collect();
        let spec = fft_real(&x).unwrap();
        assert!((spec[5].re - 32.0).abs() < 1e-9);
        for (k, c) in spec.iter().enumerate() {
            if k != 5 {
                assert!(c.norm() < 1e-9, "bin {k}");
            }
        }
    }
}
