//! Derivative-free local maximization used by the channel-norm searches.

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy)]
pub(crate) struct PatternSearch {
    pub initial_step: f64,
    pub min_step: f64,
    /// Random orthonormal frames tried after the coordinate frame converges.
    pub rotated_frames: usize,
    /// Gains at or below this are treated as rounding noise.
    pub noise: f64,
}

fn orthonormal_frame(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    while frame.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for u in &frame {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            frame.push(v);
        }
    }
    frame
}

fn axes(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

impl PatternSearch {
    /// Compass search along `frame` (both signs). The step doubles after a
    /// sweep that improves (up to its starting size) and halves otherwise.
    fn climb(
        &self,
        f: &impl Fn(&[f64]) -> f64,
        x: &mut [f64],
        fx: &mut f64,
        frame: &[Vec<f64>],
        mut step: f64,
    ) {
        let max_step = step;
        let mut trial = x.to_vec();
        while step >= self.min_step {
            let mut improved = false;
            for dir in frame {
                for sign in [1.0, -1.0] {
                    for (t, (xi, di)) in trial.iter_mut().zip(x.iter().zip(dir)) {
                        *t = xi + sign * step * di;
                    }
                    let ft = f(&trial);
                    // gains at rounding level would let the climb wander on plateaus
                    if ft > *fx + self.noise {
                        *fx = ft;
                        x.copy_from_slice(&trial);
                        improved = true;
                        break;
                    }
                }
            }
            if improved {
                step = (step * 2.0).min(max_step);
            } else {
                step *= 0.5;
            }
        }
    }

    pub fn maximize(
        &self,
        f: &impl Fn(&[f64]) -> f64,
        start: &[f64],
        rng: &mut impl Rng,
    ) -> (Vec<f64>, f64) {
        let n = start.len();
        let mut x = start.to_vec();
        let mut fx = f(&x);
        let coordinate = axes(n);
        self.climb(f, &mut x, &mut fx, &coordinate, self.initial_step);
        for _ in 0..self.rotated_frames {
            let frame = orthonormal_frame(n, rng);
            self.climb(f, &mut x, &mut fx, &frame, self.initial_step * 0.1);
        }
        self.climb(f, &mut x, &mut fx, &coordinate, self.initial_step * 0.01);
        (x, fx)
    }

    /// Largest gain found by probing `x` with steps of size `h` along the
    /// coordinate axes and a few random directions.
    pub fn local_gain(
        f: &impl Fn(&[f64]) -> f64,
        x: &[f64],
        fx: f64,
        h: f64,
        rng: &mut impl Rng,
    ) -> f64 {
        let n = x.len();
        let mut dirs = axes(n);
        dirs.extend(orthonormal_frame(n, rng));
        let mut gain: f64 = 0.0;
        let mut trial = x.to_vec();
        for dir in &dirs {
            for sign in [1.0, -1.0] {
                for (t, (xi, di)) in trial.iter_mut().zip(x.iter().zip(dir)) {
                    *t = xi + sign * h * di;
                }
                gain = gain.max(f(&trial) - fx);
            }
        }
        gain
    }
}
