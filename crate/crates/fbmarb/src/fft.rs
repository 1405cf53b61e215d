//! FFT-based lagged convolution for path synthesis on large grids.

use std::sync::Arc;

use fbmarb_core::driver::DriverPath;
use fbmarb_core::fbm::{Convolver, DirectConvolver, FbmPath, KernelPlan};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Below this many steps the direct sum is faster.
pub const FFT_MIN_STEPS: usize = 128;

/// Linear convolution with a fixed kernel through zero-padded FFTs.
pub struct FftConvolver {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("len", &self.len).finish()
    }
}

impl FftConvolver {
    pub fn new(weights: &[f64]) -> Self {
        let len = (2 * weights.len()).max(2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum: Vec<Complex<f64>> =
            weights.iter().map(|&w| Complex::new(w, 0.0)).collect();
        spectrum.resize(len, Complex::new(0.0, 0.0));
        forward.process(&mut spectrum);
        let scale = 1.0 / len as f64;
        for s in &mut spectrum {
            *s *= scale;
        }
        Self { len, forward, inverse, spectrum }
    }
}

impl Convolver for FftConvolver {
    fn convolve(&self, increments: &[f64], out: &mut [f64]) {
        let n = increments.len();
        assert!(2 * n <= self.len, "convolver sized for {} increments, got {n}", self.len / 2);
        let mut buf: Vec<Complex<f64>> = increments.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(self.len, Complex::new(0.0, 0.0));
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        out[0] = 0.0;
        for j in 1..=n {
            out[j] = buf[j - 1].re;
        }
    }
}

/// A [`KernelPlan`] paired with the convolver suited to its grid size.
#[derive(Debug)]
pub struct FastPlan {
    kernel: KernelPlan,
    fft: Option<FftConvolver>,
}

impl FastPlan {
    pub fn new(kernel: KernelPlan) -> Self {
        let fft = (kernel.grid().steps() >= FFT_MIN_STEPS && !kernel.hurst().is_brownian())
            .then(|| FftConvolver::new(kernel.lag_weights()));
        Self { kernel, fft }
    }

    pub fn kernel(&self) -> &KernelPlan {
        &self.kernel
    }

    pub fn synthesize(&self, driver: &DriverPath) -> fbmarb_core::Result<FbmPath> {
        match &self.fft {
            Some(fft) => self.kernel.synthesize_with(driver, fft),
            None => self.kernel.synthesize_with(driver, &DirectConvolver::new(self.kernel.lag_weights())),
        }
    }
}
