//! Mixed-unitary ensembles and the bounds that make their errors incoherent.
//!
//! For options `W_a` drawn with probabilities `q(a)` in place of a target `U`,
//! the averaged channel `sigma -> sum_a q(a) W_a sigma W_a^dag` is within
//! `delta + 2 ||W̄ - U||` of `U·U^dag` in diamond norm, where `W̄ = sum_a q(a) W_a`
//! and `delta = sum_a q(a) ||W_a - W̄||^2`. For Z rotations whose mean angle
//! hits the target, both terms are second order in the option offsets.

use std::f64::consts::PI;

use rand::Rng;

use crate::channel::{check_distribution, mix, Channel, COMPLETENESS_TOL};
use crate::error::{Error, Result};
use crate::matrix::{cis, gates::z_rotation, Matrix};

/// Remainder constant for the series bound on `||W̄ - U||`.
pub const NORM_REMAINDER_CONST: f64 = 1.0;

/// Remainder constant for the series bound on `delta`.
pub const DELTA_REMAINDER_CONST: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct MixedUnitaryEnsemble {
    target: Matrix,
    options: Vec<Matrix>,
    probs: Vec<f64>,
}

impl MixedUnitaryEnsemble {
    pub fn new(target: Matrix, options: Vec<Matrix>, probs: Vec<f64>) -> Result<Self> {
        if options.is_empty() {
            return Err(Error::InvalidEnsemble(
                "at least one option is required".into(),
            ));
        }
        if !target.is_square() {
            return Err(Error::NotSquare {
                op: "ensemble target",
                rows: target.rows(),
                cols: target.cols(),
            });
        }
        let deviation = target.unitarity_deviation();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        for w in &options {
            if w.shape() != target.shape() {
                return Err(Error::DimensionMismatch {
                    op: "ensemble option",
                    left: target.shape(),
                    right: w.shape(),
                });
            }
            let deviation = w.unitarity_deviation();
            if deviation > COMPLETENESS_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        check_distribution(&probs, options.len())?;
        Ok(Self {
            target,
            options,
            probs,
        })
    }

    /// A gate implemented exactly: the single option is the target.
    pub fn exact(u: Matrix) -> Result<Self> {
        Self::new(u.clone(), vec![u], vec![1.0])
    }

    pub fn target(&self) -> &Matrix {
        &self.target
    }

    pub fn options(&self) -> &[Matrix] {
        &self.options
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.target.rows()
    }

    /// `W̄ = sum_a q(a) W_a`
    pub fn mean_unitary(&self) -> Matrix {
        self.options
            .iter()
            .zip(&self.probs)
            .fold(Matrix::zeros(self.dim(), self.dim()), |acc, (w, &q)| {
                &acc + &w.scale_real(q)
            })
    }

    /// `delta = sum_a q(a) ||W_a - W̄||^2`
    pub fn delta(&self) -> f64 {
        let mean = self.mean_unitary();
        self.options
            .iter()
            .zip(&self.probs)
            .map(|(w, &q)| {
                q * (w - &mean)
                    .operator_norm()
                    .expect("ensemble dims are small")
                    .powi(2)
            })
            .sum()
    }

    /// `||W̄ - U||`
    pub fn mean_deviation(&self) -> f64 {
        (&self.mean_unitary() - &self.target)
            .operator_norm()
            .expect("ensemble dims are small")
    }

    /// `delta + 2 ||W̄ - U||`, an upper bound on the diamond distance between
    /// the target channel and the averaged channel.
    pub fn lemma1_bound(&self) -> f64 {
        self.delta() + 2.0 * self.mean_deviation()
    }

    pub fn target_channel(&self) -> Result<Channel> {
        Channel::from_unitary(&self.target)
    }

    /// `sigma -> sum_a q(a) W_a sigma W_a^dag`
    pub fn averaged_channel(&self) -> Result<Channel> {
        let channels = self
            .options
            .iter()
            .map(Channel::from_unitary)
            .collect::<Result<Vec<_>>>()?;
        mix(&channels, &self.probs)
    }

    /// Draw an option index (0-based) with probability `q(a)`.
    pub fn sample_index(&self, rng: &mut impl Rng) -> usize {
        if self.options.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, &q) in self.probs.iter().enumerate() {
            acc += q;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding gap above the cumulative sum
        self.probs.iter().rposition(|&q| q > 0.0).unwrap_or(0)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> (usize, &Matrix) {
        let a = self.sample_index(rng);
        (a, &self.options[a])
    }
}

/// Sum of per-gate bounds, `sum_i (delta_i + 2 ||W̄_i - U_i||)`.
pub fn lemma2_bound<'a>(ensembles: impl IntoIterator<Item = &'a MixedUnitaryEnsemble>) -> f64 {
    ensembles.into_iter().map(|e| e.lemma1_bound()).sum()
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A target Z rotation `exp(i theta sigma_Z)` and the option angles available
/// to approximate it.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRotationSpec {
    theta_target: f64,
    theta_options: Vec<f64>,
}

impl ZRotationSpec {
    pub fn new(theta_target: f64, theta_options: Vec<f64>) -> Result<Self> {
        if !theta_target.is_finite() || theta_options.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidEnsemble("non-finite angle".into()));
        }
        if theta_options.is_empty() {
            return Err(Error::InvalidEnsemble(
                "at least one option angle is required".into(),
            ));
        }
        Ok(Self {
            theta_target: normalize_angle(theta_target),
            theta_options: theta_options.into_iter().map(normalize_angle).collect(),
        })
    }

    pub fn theta_target(&self) -> f64 {
        self.theta_target
    }

    pub fn theta_options(&self) -> &[f64] {
        &self.theta_options
    }

    /// Option offsets `phi_a = theta_a - theta`, wrapped into `(-pi, pi]`.
    pub fn phis(&self) -> Vec<f64> {
        self.theta_options
            .iter()
            .map(|t| normalize_angle(t - self.theta_target))
            .collect()
    }

    /// Probabilities `(q1, q2)` with `q1 phi_1 + q2 phi_2 = 0`.
    pub fn solve_probs(&self) -> Result<[f64; 2]> {
        let [p1, p2] = match self.phis().as_slice() {
            &[a, b] => [a, b],
            other => {
                return Err(Error::NoValidMixture(format!(
                    "the mean constraint fixes probabilities only for two options, got {}; supply probabilities explicitly",
                    other.len()
                )))
            }
        };
        if p1 == 0.0 {
            return Ok([1.0, 0.0]);
        }
        if p2 == 0.0 {
            return Ok([0.0, 1.0]);
        }
        if p1.signum() == p2.signum() {
            return Err(Error::NoValidMixture(format!(
                "target {} is not between the options {:?} (offsets {p1}, {p2} share a sign)",
                self.theta_target, self.theta_options
            )));
        }
        let q1 = p2 / (p2 - p1);
        Ok([q1, 1.0 - q1])
    }

    /// Ensemble with probabilities from the mean constraint.
    pub fn ensemble(&self) -> Result<MixedUnitaryEnsemble> {
        let q = self.solve_probs()?;
        self.ensemble_with_probs(&q)
    }

    /// Ensemble with caller-supplied probabilities (any number of options).
    pub fn ensemble_with_probs(&self, probs: &[f64]) -> Result<MixedUnitaryEnsemble> {
        MixedUnitaryEnsemble::new(
            z_rotation(self.theta_target),
            self.theta_options.iter().map(|&t| z_rotation(t)).collect(),
            probs.to_vec(),
        )
    }

    fn two_phis(&self) -> Result<[f64; 2]> {
        match self.phis().as_slice() {
            &[a, b] => Ok([a, b]),
            other => Err(Error::InvalidEnsemble(format!(
                "two option angles required, got {}",
                other.len()
            ))),
        }
    }

    pub fn norm_exact(&self, probs: &[f64; 2]) -> Result<f64> {
        Ok(z_rotation_norm_exact(self.two_phis()?, *probs))
    }

    pub fn series_bound(&self, probs: &[f64; 2]) -> Result<SeriesBound> {
        Ok(z_rotation_series_bound(self.two_phis()?, *probs))
    }
}

/// `||W̄ - U|| = |q1 e^{i phi_1} + q2 e^{i phi_2} - 1|` for a two-option Z ensemble.
pub fn z_rotation_norm_exact(phis: [f64; 2], probs: [f64; 2]) -> f64 {
    (cis(phis[0]) * probs[0] + cis(phis[1]) * probs[1] - 1.0).norm()
}

/// The same quantity through its real/imaginary square-root form.
pub fn z_rotation_norm_sqrt_form(phis: [f64; 2], probs: [f64; 2]) -> f64 {
    let re = probs[0] * phis[0].cos() + probs[1] * phis[1].cos() - 1.0;
    let im = probs[0] * phis[0].sin() + probs[1] * phis[1].sin();
    (re * re + im * im).sqrt()
}

/// `delta` for a two-option Z ensemble. Both diagonal entries of `W_a - W̄`
/// have the same modulus, so this is `sum_a q_a |e^{i phi_a} - m|^2` with
/// `m = sum_a q_a e^{i phi_a}`.
pub fn z_rotation_delta_exact(phis: [f64; 2], probs: [f64; 2]) -> f64 {
    let m = cis(phis[0]) * probs[0] + cis(phis[1]) * probs[1];
    probs[0] * (cis(phis[0]) - m).norm_sqr() + probs[1] * (cis(phis[1]) - m).norm_sqr()
}

/// Second-order leading terms for `||W̄ - U||` and `delta`, with the quartic
/// remainder caps `C (phi_1^4 + phi_2^4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBound {
    /// `(q1 phi_1^2 + q2 phi_2^2) / 2`
    pub norm_lead: f64,
    /// `q1 phi_1^2 + q2 phi_2^2`
    pub delta_lead: f64,
    pub norm_remainder: f64,
    pub delta_remainder: f64,
}

impl SeriesBound {
    pub fn norm_upper(&self) -> f64 {
        self.norm_lead + self.norm_remainder
    }

    pub fn delta_upper(&self) -> f64 {
        self.delta_lead + self.delta_remainder
    }

    pub fn norm_brackets(&self, exact: f64) -> bool {
        (exact - self.norm_lead).abs() <= self.norm_remainder
    }

    pub fn delta_brackets(&self, exact: f64) -> bool {
        (exact - self.delta_lead).abs() <= self.delta_remainder
    }
}

/// Leading terms assume the mean constraint `q1 phi_1 + q2 phi_2 = 0`;
/// without it `||W̄ - U||` is first order and no quartic bracket holds.
pub fn z_rotation_series_bound(phis: [f64; 2], probs: [f64; 2]) -> SeriesBound {
    let second = probs[0] * phis[0].powi(2) + probs[1] * phis[1].powi(2);
    let quartic = phis[0].powi(4) + phis[1].powi(4);
    SeriesBound {
        norm_lead: second / 2.0,
        delta_lead: second,
        norm_remainder: NORM_REMAINDER_CONST * quartic,
        delta_remainder: DELTA_REMAINDER_CONST * quartic,
    }
}
