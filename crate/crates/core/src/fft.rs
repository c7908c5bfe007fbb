//! Minimal radix-2 complex FFT, 1D and separable 3D.
//!
//! Only power-of-two lengths are needed: the demag operator picks its padded
//! box sizes. Layout of 3D data matches `Grid3` (x fastest).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone)]
pub(crate) struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two, got {n}");
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Self { n, twiddles }
    }

    /// Unnormalized in-place transform; `inverse` uses conjugate twiddles.
    pub(crate) fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        if n <= 1 {
            return;
        }
        let mut j = 0;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Fft3 {
    dims: [usize; 3],
    plans: [Radix2; 3],
}

impl Fft3 {
    pub(crate) fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            plans: dims.map(Radix2::new),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/N` normalization.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let [nx, ny, nz] = self.dims;
        debug_assert_eq!(data.len(), nx * ny * nz);
        if nx > 1 {
            for line in data.chunks_exact_mut(nx) {
                self.plans[0].process(line, inverse);
            }
        }
        if ny > 1 {
            let mut scratch = vec![Complex64::new(0.0, 0.0); ny];
            for k in 0..nz {
                for i in 0..nx {
                    let base = i + nx * ny * k;
                    for (j, s) in scratch.iter_mut().enumerate() {
                        *s = data[base + nx * j];
                    }
                    self.plans[1].process(&mut scratch, inverse);
                    for (j, s) in scratch.iter().enumerate() {
                        data[base + nx * j] = *s;
                    }
                }
            }
        }
        if nz > 1 {
            let mut scratch = vec![Complex64::new(0.0, 0.0); nz];
            let plane = nx * ny;
            for base in 0..plane {
                for (k, s) in scratch.iter_mut().enumerate() {
                    *s = data[base + plane * k];
                }
                self.plans[2].process(&mut scratch, inverse);
                for (k, s) in scratch.iter().enumerate() {
                    data[base + plane * k] = *s;
                }
            }
        }
    }
}
