use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::simulate::fft_nd;

/// Sums of squared increments Σ (z(x+h) - z(x))² and pair counts for every
/// lag vector of a gridded field, from one zero-padded FFT autocorrelation
/// and prefix sums of z².
pub(crate) struct LagTable {
    shape: Vec<usize>,
    padded: Vec<usize>,
    autocorr: Vec<f64>,
    prefix: Vec<f64>,
}

impl LagTable {
    pub(crate) fn new(values: &[f64], shape: &[usize]) -> Self {
        let padded: Vec<usize> = shape.iter().map(|&n| 2 * n).collect();
        let total: usize = padded.iter().product();
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let dims = shape.len();
        let mut idx = vec![0usize; dims];
        for &v in values {
            let mut flat = 0;
            for (i, p) in idx.iter().zip(&padded) {
                flat = flat * p + i;
            }
            buf[flat] = Complex::new(v, 0.0);
            for ax in (0..dims).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        fft_nd(&mut buf, &padded, false);
        buf.par_iter_mut()
            .for_each(|z| *z = Complex::new(z.norm_sqr(), 0.0));
        fft_nd(&mut buf, &padded, true);
        let autocorr = buf.iter().map(|z| z.re / total as f64).collect();

        // prefix sums of z² on the (n+1)-shaped array
        let ext: Vec<usize> = shape.iter().map(|&n| n + 1).collect();
        let ext_total: usize = ext.iter().product();
        let mut prefix = vec![0.0; ext_total];
        let mut idx = vec![0usize; dims];
        for &v in values {
            let mut flat = 0;
            for (i, e) in idx.iter().zip(&ext) {
                flat = flat * e + i + 1;
            }
            prefix[flat] = v * v;
            for ax in (0..dims).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        for ax in 0..dims {
            let stride: usize = ext[ax + 1..].iter().product();
            for flat in 0..ext_total {
                if !(flat / stride).is_multiple_of(ext[ax]) {
                    prefix[flat] += prefix[flat - stride];
                }
            }
        }
        Self {
            shape: shape.to_vec(),
            padded,
            autocorr,
            prefix,
        }
    }

    pub(crate) fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Σ z² over the box lo ≤ x < hi.
    fn box_sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let dims = self.shape.len();
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut flat = 0;
            let mut sign = 1.0;
            for ax in 0..dims {
                let upper = corner >> ax & 1 == 1;
                let c = if upper { hi[ax] } else { lo[ax] };
                if !upper {
                    sign = -sign;
                }
                flat = flat * (self.shape[ax] + 1) + c;
            }
            acc += sign * self.prefix[flat];
        }
        acc
    }

    /// (Σ over ordered pairs x, x+h of (z(x+h) - z(x))², number of pairs).
    pub(crate) fn increments(&self, h: &[isize]) -> (f64, u64) {
        let dims = self.shape.len();
        let mut lo_a = vec![0usize; dims];
        let mut hi_a = vec![0usize; dims];
        let mut lo_b = vec![0usize; dims];
        let mut hi_b = vec![0usize; dims];
        let mut count = 1u64;
        let mut flat = 0usize;
        for ax in 0..dims {
            let n = self.shape[ax] as isize;
            let hx = h[ax];
            if hx.abs() >= n {
                return (0.0, 0);
            }
            count *= (n - hx.abs()) as u64;
            lo_a[ax] = (-hx).max(0) as usize;
            hi_a[ax] = (n - hx).min(n) as usize;
            lo_b[ax] = hx.max(0) as usize;
            hi_b[ax] = (n + hx).min(n) as usize;
            let p = self.padded[ax] as isize;
            flat = flat * self.padded[ax] + hx.rem_euclid(p) as usize;
        }
        let s = self.box_sum(&lo_a, &hi_a) + self.box_sum(&lo_b, &hi_b) - 2.0 * self.autocorr[flat];
        (s.max(0.0), count)
    }
}
