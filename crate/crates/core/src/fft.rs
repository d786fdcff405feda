//! Cubic 3-D FFT built from rustfft line transforms.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest size >= `min` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub struct Fft3 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("m", &self.m).finish()
    }
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Unnormalized transform in place; `inverse` uses the e^{+i} sign.
    pub fn process(&self, data: &mut [C64], inverse: bool) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut plane = vec![C64::new(0.0, 0.0); m * m];
        // middle axis
        for i1 in 0..m {
            let slab = &mut data[i1 * m * m..(i1 + 1) * m * m];
            for i2 in 0..m {
                for i3 in 0..m {
                    plane[i3 * m + i2] = slab[i2 * m + i3];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for i2 in 0..m {
                for i3 in 0..m {
                    slab[i2 * m + i3] = plane[i3 * m + i2];
                }
            }
        }
        // first axis
        for i2 in 0..m {
            for i1 in 0..m {
                for i3 in 0..m {
                    plane[i3 * m + i1] = data[(i1 * m + i2) * m + i3];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for i1 in 0..m {
                for i3 in 0..m {
                    data[(i1 * m + i2) * m + i3] = plane[i3 * m + i1];
                }
            }
        }
    }
}
