use alloc::format;

use crate::{Error, Result};

/// Hurst parameter restricted to `[1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub const BROWNIAN: HurstParam = HurstParam(0.5);

    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && (0.5..1.0).contains(&h) {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `H - 1/2`, the kernel exponent.
    pub fn exponent(self) -> f64 {
        self.0 - 0.5
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

/// Uniform partition `t_i = i T / N` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid(format!("step count must be positive")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i >= self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.node(i))
    }

    /// Number of whole steps contained in `duration`, tolerating rounding
    /// of values that are meant to be exact multiples.
    pub fn whole_steps(&self, duration: f64) -> usize {
        let ratio = duration / self.step();
        let nearest = libm::round(ratio);
        if libm::fabs(ratio - nearest) <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            libm::floor(ratio) as usize
        }
    }

    /// Grid with `steps / factor` cells over the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} steps by factor {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}
