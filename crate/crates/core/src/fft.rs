//! Cubic three-dimensional FFT built from batched one-dimensional transforms.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform, x-fastest layout.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&*self.forward, data);
    }

    /// Inverse transform including the 1/n³ factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&*self.inverse, data);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        let plane = n * n;
        assert_eq!(data.len(), plane * n, "buffer does not match the grid");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];

        // x axis: contiguous rows.
        plan.process_with_scratch(data, &mut scratch);

        // y axis: transpose each z-plane, transform rows, transpose back.
        let mut buf = vec![Complex64::default(); plane];
        for slab in data.chunks_exact_mut(plane) {
            transpose(slab, &mut buf, n);
            plan.process_with_scratch(&mut buf, &mut scratch);
            transpose(&buf, slab, n);
        }

        // z axis: gather (x, z) lines for each y.
        for y in 0..n {
            for z in 0..n {
                let src = z * plane + y * n;
                for x in 0..n {
                    buf[x * n + z] = data[src + x];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for z in 0..n {
                let dst = z * plane + y * n;
                for x in 0..n {
                    data[dst + x] = buf[x * n + z];
                }
            }
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 16;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let n = 8;
        let fft = Fft3::new(n);
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut data: Vec<Complex64> = (0..n * n * n)
            .map(|idx| {
                let (x, y, z) = (idx % n, (idx / n) % n, idx / (n * n));
                let phase = two_pi * (x as f64 + 2.0 * y as f64 + 3.0 * z as f64) / n as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let original = data.clone();
        fft.forward(&mut data);
        let peak = 1 + 2 * n + 3 * n * n;
        for (i, v) in data.iter().enumerate() {
            let expect = if i == peak { (n * n * n) as f64 } else { 0.0 };
            assert!(
                (v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9,
                "mode {i}: {v}"
            );
        }
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
