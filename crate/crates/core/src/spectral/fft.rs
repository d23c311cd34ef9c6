//! Three-dimensional complex FFTs on the `N^3` lattice, stored x-fastest.
//!
//! The forward transform is normalised by `1/N^3` so that the output holds
//! Fourier coefficients; the inverse transform is the plain synthesis sum.
//! Pairs of real fields are packed into one complex transform.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Arc<Fft3>>> = RefCell::new(HashMap::new());
}

/// Cached plan for side length `n`.
pub(crate) fn plan(n: usize) -> Arc<Fft3> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft3 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    })
}

impl Fft3 {
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, self.forward.as_ref());
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, self.inverse.as_ref());
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
        let mut buf = vec![zero; n * n];

        // x: rows are contiguous
        fft.process_with_scratch(data, &mut scratch);

        // y: transpose each z-plane
        for plane in data.chunks_exact_mut(n * n) {
            for j in 0..n {
                for i in 0..n {
                    buf[i * n + j] = plane[j * n + i];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for i in 0..n {
                    plane[j * n + i] = buf[i * n + j];
                }
            }
        }

        // z: gather one y-slab at a time
        for j in 0..n {
            for k in 0..n {
                let row = &data[n * j + n * n * k..n * j + n * n * k + n];
                for (i, v) in row.iter().enumerate() {
                    buf[i * n + k] = *v;
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..n {
                let row = &mut data[n * j + n * n * k..n * j + n * n * k + n];
                for (i, v) in row.iter_mut().enumerate() {
                    *v = buf[i * n + k];
                }
            }
        }
    }

    /// Flat index of the mode `-m` for the mode stored at `idx`.
    #[inline]
    fn negated(&self, idx: usize) -> usize {
        let n = self.n;
        let i = idx % n;
        let j = (idx / n) % n;
        let k = idx / (n * n);
        (n - i) % n + n * ((n - j) % n) + n * n * ((n - k) % n)
    }

    /// Forward transform of one or two real fields with a single complex FFT.
    pub(crate) fn forward_real_pair(
        &self,
        a: &[f64],
        b: Option<&[f64]>,
    ) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let mut z: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        self.forward(&mut z);
        if b.is_none() {
            return (z, None);
        }
        let mut ah = vec![Complex64::new(0.0, 0.0); z.len()];
        let mut bh = vec![Complex64::new(0.0, 0.0); z.len()];
        for idx in 0..z.len() {
            let zp = z[idx];
            let zm = z[self.negated(idx)].conj();
            ah[idx] = (zp + zm) * 0.5;
            // (zp - zm) / (2i)
            let d = zp - zm;
            bh[idx] = Complex64::new(d.im * 0.5, -d.re * 0.5);
        }
        (ah, Some(bh))
    }

    /// Inverse transform of one or two Hermitian spectra with a single complex FFT.
    pub(crate) fn inverse_real_pair(
        &self,
        a: &[Complex64],
        b: Option<&[Complex64]>,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let mut z: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
                .collect(),
            None => a.to_vec(),
        };
        self.inverse(&mut z);
        match b {
            Some(_) => {
                let re = z.iter().map(|c| c.re).collect();
                let im = z.iter().map(|c| c.im).collect();
                (re, Some(im))
            }
            None => (z.iter().map(|c| c.re).collect(), None),
        }
    }

    /// Forward transform of any number of real fields, paired two per FFT.
    pub(crate) fn forward_real_many(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(fields.len());
        for chunk in fields.chunks(2) {
            let (a, b) = self.forward_real_pair(chunk[0], chunk.get(1).copied());
            out.push(a);
            out.extend(b);
        }
        out
    }

    /// Inverse transform of any number of Hermitian spectra, paired two per FFT.
    pub(crate) fn inverse_real_many(&self, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(spectra.len());
        for chunk in spectra.chunks(2) {
            let (a, b) = self.inverse_real_pair(chunk[0], chunk.get(1).copied());
            out.push(a);
            out.extend(b);
        }
        out
    }
}
