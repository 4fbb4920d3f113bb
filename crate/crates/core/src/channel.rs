//! Linear maps on density matrices: CPTP channels and their differences.
//!
//! The canonical representation is the superoperator acting on column-stacked
//! density matrices, `vec(rho)[j*d + i] = rho[(i, j)]`, so that
//! `vec(A rho B) = (B^T kron A) vec(rho)`. Kraus operators are kept alongside
//! when they are known.
//!
//! Choi matrices use the unnormalized convention
//! `J(Phi) = sum_ij Phi(|i><j|) kron |i><j|`, with the channel acting on the
//! first (slow) factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, C64};
use crate::search::PatternSearch;

/// Largest input dimension a [`Channel`] may have.
pub const MAX_CHANNEL_DIM: usize = 8;

/// Largest input dimension accepted by [`diamond_norm_diff`].
pub const MAX_DIAMOND_DIM: usize = 4;

/// Tolerance on `sum A^dag A = I` and on unitarity of channel inputs.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Tolerance on probability vectors summing to one.
pub const DISTRIBUTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Cptp,
    /// `E - G` for CPTP `E`, `G`; not trace preserving.
    HermiticityPreservingDifference,
}

#[derive(Debug, Clone)]
pub struct Channel {
    dim: usize,
    kraus: Option<Vec<Matrix>>,
    superop: Matrix,
    kind: ChannelKind,
}

/// Unnormalized Choi matrix of a map on `dim x dim` matrices.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: Matrix,
}

fn vec_index(d: usize, i: usize, j: usize) -> usize {
    j * d + i
}

fn check_channel_dim(d: usize) -> Result<()> {
    if d > MAX_CHANNEL_DIM {
        return Err(Error::DimensionTooLarge {
            op: "channel",
            dim: d,
            max: MAX_CHANNEL_DIM,
        });
    }
    Ok(())
}

/// Validate a probability vector against `n` outcomes.
pub(crate) fn check_distribution(probs: &[f64], n: usize) -> Result<()> {
    if probs.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "{} probabilities for {} outcomes",
            probs.len(),
            n
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "probability {p} is not a finite nonnegative number"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

fn kraus_superop(ops: &[Matrix]) -> Matrix {
    let d = ops[0].rows();
    let mut s = Matrix::zeros(d * d, d * d);
    for a in ops {
        s = &s + &a.conj().kron(a);
    }
    s
}

impl Channel {
    pub fn identity(d: usize) -> Result<Channel> {
        check_channel_dim(d)?;
        Ok(Channel {
            dim: d,
            kraus: Some(vec![Matrix::identity(d)]),
            superop: Matrix::identity(d * d),
            kind: ChannelKind::Cptp,
        })
    }

    /// `sigma -> U sigma U^dag`
    pub fn from_unitary(u: &Matrix) -> Result<Channel> {
        if !u.is_square() {
            return Err(Error::NotSquare {
                op: "channel_from_unitary",
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        check_channel_dim(u.rows())?;
        let deviation = u.unitarity_deviation();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Channel {
            dim: u.rows(),
            superop: u.conj().kron(u),
            kraus: Some(vec![u.clone()]),
            kind: ChannelKind::Cptp,
        })
    }

    /// `sigma -> sum_i A_i sigma A_i^dag`; rejects incomplete operator sets.
    pub fn from_kraus(ops: &[Matrix]) -> Result<Channel> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidEnsemble("empty Kraus operator list".into()))?;
        let d = first.rows();
        for a in ops {
            if a.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    op: "channel_from_kraus",
                    left: (d, d),
                    right: a.shape(),
                });
            }
        }
        check_channel_dim(d)?;
        let mut completeness = Matrix::zeros(d, d);
        for a in ops {
            completeness = &completeness + &(&a.adjoint() * a);
        }
        let deviation = completeness.max_abs_diff(&Matrix::identity(d));
        if deviation > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus { deviation });
        }
        Ok(Channel {
            dim: d,
            superop: kraus_superop(ops),
            kraus: Some(ops.to_vec()),
            kind: ChannelKind::Cptp,
        })
    }

    /// Wrap a raw superoperator as a general Hermiticity-preserving map.
    ///
    /// No structural check beyond shape is made.
    pub fn from_superoperator(dim: usize, superop: Matrix) -> Result<Channel> {
        check_channel_dim(dim)?;
        if superop.shape() != (dim * dim, dim * dim) {
            return Err(Error::DimensionMismatch {
                op: "from_superoperator",
                left: (dim * dim, dim * dim),
                right: superop.shape(),
            });
        }
        Ok(Channel {
            dim,
            kraus: None,
            superop,
            kind: ChannelKind::HermiticityPreservingDifference,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn kraus(&self) -> Option<&[Matrix]> {
        self.kraus.as_deref()
    }

    pub fn superoperator(&self) -> &Matrix {
        &self.superop
    }

    fn check_same_dim(&self, other: &Channel, op: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                op,
                left: (self.dim, self.dim),
                right: (other.dim, other.dim),
            });
        }
        Ok(())
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        self.check_same_dim(inner, "compose")?;
        let kind = if self.kind == ChannelKind::Cptp && inner.kind == ChannelKind::Cptp {
            ChannelKind::Cptp
        } else {
            ChannelKind::HermiticityPreservingDifference
        };
        let kraus = match (&self.kraus, &inner.kraus) {
            (Some(a), Some(b)) if a.len() * b.len() <= 64 => Some(
                a.iter()
                    .flat_map(|x| b.iter().map(move |y| x * y))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Channel {
            dim: self.dim,
            kraus,
            superop: &self.superop * &inner.superop,
            kind,
        })
    }

    /// `self - other`, tagged as a Hermiticity-preserving difference.
    pub fn difference(&self, other: &Channel) -> Result<Channel> {
        self.check_same_dim(other, "difference")?;
        Ok(Channel {
            dim: self.dim,
            kraus: None,
            superop: &self.superop - &other.superop,
            kind: ChannelKind::HermiticityPreservingDifference,
        })
    }

    /// Action on a `dim x dim` matrix.
    pub fn apply(&self, rho: &Matrix) -> Result<Matrix> {
        if rho.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                op: "apply",
                left: (self.dim, self.dim),
                right: rho.shape(),
            });
        }
        let d = self.dim;
        let v = Matrix::from_fn(d * d, 1, |k, _| rho[(k % d, k / d)]);
        let w = &self.superop * &v;
        Ok(Matrix::from_fn(d, d, |i, j| w[(vec_index(d, i, j), 0)]))
    }

    /// `(self ⊗ id_m)(sigma)` for `sigma` on system ⊗ ancilla, system first.
    pub fn apply_extended(&self, sigma: &Matrix, ancilla_dim: usize) -> Result<Matrix> {
        let d = self.dim;
        let m = ancilla_dim;
        if sigma.shape() != (d * m, d * m) {
            return Err(Error::DimensionMismatch {
                op: "apply_extended",
                left: (d * m, d * m),
                right: sigma.shape(),
            });
        }
        let mut out = Matrix::zeros(d * m, d * m);
        let mut entries = vec![C64::new(0.0, 0.0); d * d * m * m];
        for k in 0..m {
            for l in 0..m {
                let block = Matrix::from_fn(d, d, |a, b| sigma[(a * m + k, b * m + l)]);
                let image = self.apply(&block)?;
                for a in 0..d {
                    for b in 0..d {
                        entries[(a * m + k) * d * m + (b * m + l)] = image[(a, b)];
                    }
                }
            }
        }
        if d * m > 0 {
            out = Matrix::new(d * m, d * m, entries)?;
        }
        Ok(out)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let s = &self.superop;
        let matrix = Matrix::from_fn(d * d, d * d, |r, c| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (c / d, c % d);
            s[(vec_index(d, a, b), vec_index(d, i, j))]
        });
        ChoiMatrix { dim: d, matrix }
    }

    /// `max |tr(Phi(rho)) - tr(rho)|` over the matrix units, i.e. how far the
    /// map is from trace preserving.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let ptr = self.to_choi().partial_trace_system();
        ptr.max_abs_diff(&Matrix::identity(self.dim))
    }
}

/// Convex combination of channels.
pub fn mix(channels: &[Channel], probs: &[f64]) -> Result<Channel> {
    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidDistribution("no channels to mix".into()))?;
    check_distribution(probs, channels.len())?;
    for c in channels {
        first.check_same_dim(c, "mix")?;
    }
    let d = first.dim;
    let mut superop = Matrix::zeros(d * d, d * d);
    for (c, &p) in channels.iter().zip(probs) {
        superop = &superop + &c.superop.scale_real(p);
    }
    let all_cptp = channels.iter().all(|c| c.kind == ChannelKind::Cptp);
    let kraus = if all_cptp && channels.iter().all(|c| c.kraus.is_some()) {
        let ops: Vec<Matrix> = channels
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .flat_map(|(c, &p)| {
                c.kraus
                    .as_ref()
                    .into_iter()
                    .flatten()
                    .map(move |k| k.scale_real(p.sqrt()))
            })
            .collect();
        Some(ops)
    } else {
        None
    };
    Ok(Channel {
        dim: d,
        kraus,
        superop,
        kind: if all_cptp {
            ChannelKind::Cptp
        } else {
            ChannelKind::HermiticityPreservingDifference
        },
    })
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Trace over the first (system-output) factor, `sum_a J[(a,i),(a,j)]`.
    pub fn partial_trace_system(&self) -> Matrix {
        let d = self.dim;
        Matrix::from_fn(d, d, |i, j| {
            (0..d).map(|a| self.matrix[(a * d + i, a * d + j)]).sum()
        })
    }

    /// `(I ⊗ x) J (I ⊗ x)` for a `dim x dim` matrix `x`.
    pub fn sandwich(&self, x: &Matrix) -> Matrix {
        let lift = Matrix::identity(self.dim).kron(x);
        &(&lift * &self.matrix) * &lift
    }

    /// `(I ⊗ t^dag) J (I ⊗ t)`.
    fn congruence(&self, t: &Matrix) -> Matrix {
        let lift = Matrix::identity(self.dim).kron(t);
        &(&lift.adjoint() * &self.matrix) * &lift
    }
}

/// Search schedule for [`diamond_norm_diff_with`].
#[derive(Debug, Clone)]
pub struct DiamondOptions {
    /// Bloch-ball grid resolution per axis (qubit inputs).
    pub grid_points_per_axis: usize,
    /// Random density matrices scored in place of a grid when `d > 2`.
    pub sampled_points: usize,
    /// Local refinements started from random points.
    pub restarts: usize,
    /// Best grid points that also get refined.
    pub refined_grid_points: usize,
    /// Every start is first climbed down to this step.
    pub coarse_step: f64,
    /// Best coarse results then refined down to `min_step`.
    pub polished: usize,
    pub seed: u64,
    pub min_step: f64,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        Self {
            grid_points_per_axis: 9,
            sampled_points: 600,
            restarts: 20,
            refined_grid_points: 3,
            coarse_step: 1e-2,
            polished: 3,
            seed: 0x5eed_d1a3,
            min_step: 1e-7,
        }
    }
}

/// Below this Choi trace norm the search is skipped and the map reported as
/// rounding noise.
const NEGLIGIBLE_DIAMOND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DiamondEstimate {
    pub value: f64,
    /// Input reduced state attaining `value`.
    pub maximizer: Matrix,
    /// Largest objective gain found by probing the maximizer at step 1e-6.
    pub slack: f64,
}

/// Lower-triangular factor `T` of `rho = T T^dag / tr(T T^dag)`, flattened as
/// the real diagonal followed by (re, im) pairs below it. The chart has no
/// boundary, so pure states are interior points of the search space.
struct CholeskyChart {
    dim: usize,
}

impl CholeskyChart {
    fn params(&self) -> usize {
        self.dim * self.dim
    }

    /// The unnormalized factor `T`; `None` if `x` is not finite.
    fn factor(&self, x: &[f64]) -> Option<Matrix> {
        let d = self.dim;
        let mut entries = vec![C64::new(0.0, 0.0); d * d];
        let mut k = d;
        for i in 0..d {
            entries[i * d + i] = C64::new(x[i], 0.0);
            for j in 0..i {
                entries[i * d + j] = C64::new(x[k], x[k + 1]);
                k += 2;
            }
        }
        Matrix::new(d, d, entries).ok()
    }

    fn density(&self, x: &[f64]) -> Matrix {
        let d = self.dim;
        let Some(t) = self.factor(x) else {
            return Matrix::identity(d).scale_real(1.0 / d as f64);
        };
        let w = &t * &t.adjoint();
        let tr = w.trace().re;
        if tr > 1e-300 {
            w.scale_real(1.0 / tr)
        } else {
            Matrix::identity(d).scale_real(1.0 / d as f64)
        }
    }

    /// Inverse of `density` for a qubit state given by its Bloch vector.
    fn from_bloch(b: [f64; 3]) -> Vec<f64> {
        let p00 = 0.5 * (1.0 + b[2]);
        let p10 = C64::new(0.5 * b[0], 0.5 * b[1]);
        if p00 < 1e-12 {
            return vec![0.0, 1.0, 0.0, 0.0];
        }
        let a = p00.sqrt();
        let c = p10 / a;
        let rest = (1.0 - p00 - c.norm_sqr()).max(0.0).sqrt();
        vec![a, rest, c.re, c.im]
    }

    fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.params())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }
}

/// `||(I ⊗ sqrt(rho)) J (I ⊗ sqrt(rho))||_1` for a Hermitian Choi matrix.
fn sandwich_trace_norm(choi: &ChoiMatrix, rho: &Matrix) -> f64 {
    let root = match rho.psd_sqrt() {
        Ok(r) => r,
        Err(_) => return f64::NEG_INFINITY,
    };
    choi.sandwich(&root)
        .hermitian_trace_norm()
        .unwrap_or(f64::NEG_INFINITY)
}

/// Diamond norm of a Hermiticity-preserving map, as the maximum over input
/// density matrices `rho` of `||(I ⊗ sqrt(rho)) J (I ⊗ sqrt(rho))||_1`.
///
/// The maximum is located by a grid (Bloch ball for qubits, seeded random
/// density matrices otherwise), then compass search: a coarse climb from the
/// best grid points and from `restarts` random points, and a fine climb from
/// the best `polished` of those. Output is a deterministic function of the
/// inputs and `opts.seed`.
pub fn diamond_norm_with(phi: &Channel, opts: &DiamondOptions) -> Result<DiamondEstimate> {
    let d = phi.dim;
    if d > MAX_DIAMOND_DIM {
        return Err(Error::DimensionTooLarge {
            op: "diamond_norm",
            dim: d,
            max: MAX_DIAMOND_DIM,
        });
    }
    let choi = phi.to_choi();
    let deviation = choi.matrix().hermiticity_deviation();
    if deviation > 1e-9 {
        return Err(Error::NotHermitian { deviation });
    }
    if d == 1 {
        let value = choi.matrix()[(0, 0)].norm();
        return Ok(DiamondEstimate {
            value,
            maximizer: Matrix::identity(1),
            slack: 0.0,
        });
    }

    // the diamond norm never exceeds the Choi trace norm
    let upper = choi.matrix().hermitian_trace_norm()?;
    if upper <= NEGLIGIBLE_DIAMOND {
        let mixed = Matrix::identity(d).scale_real(1.0 / d as f64);
        let value = sandwich_trace_norm(&choi, &mixed).max(0.0);
        return Ok(DiamondEstimate {
            value,
            maximizer: mixed,
            slack: (upper - value).max(0.0),
        });
    }

    let chart = CholeskyChart { dim: d };
    // sqrt(rho) = T W / sqrt(tr) for a unitary W, and (I ⊗ sqrt(rho)) J (I ⊗ sqrt(rho))
    // shares its nonzero spectrum with (I ⊗ T^dag) J (I ⊗ T) / tr, so no
    // square root is needed per evaluation
    let mixed = Matrix::identity(d).scale_real(1.0 / d as f64);
    let objective = |x: &[f64]| match chart.factor(x) {
        Some(t) if t.frobenius_norm() > 1e-150 => {
            let tr = t.frobenius_norm().powi(2);
            choi.congruence(&t)
                .hermitian_trace_norm()
                .map_or(f64::NEG_INFINITY, |n| n / tr)
        }
        _ => sandwich_trace_norm(&choi, &mixed),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let grid: Vec<Vec<f64>> = if d == 2 {
        let n = opts.grid_points_per_axis.max(2);
        let coord = |k: usize| -1.0 + 2.0 * k as f64 / (n - 1) as f64;
        let mut pts = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let p = [coord(a), coord(b), coord(c)];
                    if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
                        pts.push(CholeskyChart::from_bloch(p));
                    }
                }
            }
        }
        pts
    } else {
        (0..opts.sampled_points)
            .map(|_| chart.random_point(&mut rng))
            .collect()
    };
    let mut scored: Vec<(f64, Vec<f64>)> = grid.into_iter().map(|p| (objective(&p), p)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut starts: Vec<Vec<f64>> = scored
        .iter()
        .take(opts.refined_grid_points.max(1))
        .map(|(_, p)| p.clone())
        .collect();
    starts.extend((0..opts.restarts).map(|_| chart.random_point(&mut rng)));

    let noise = 64.0 * f64::EPSILON * choi.matrix().frobenius_norm();
    let coarse = PatternSearch {
        initial_step: 0.1,
        min_step: opts.coarse_step.max(opts.min_step),
        rotated_frames: 0,
        noise,
    };
    let mut climbed: Vec<(f64, Vec<f64>)> = starts
        .iter()
        .map(|start| {
            let (x, fx) = coarse.maximize(&objective, start, &mut rng);
            (fx, x)
        })
        .collect();
    climbed.sort_by(|a, b| b.0.total_cmp(&a.0));

    let fine = PatternSearch {
        initial_step: opts.coarse_step.max(opts.min_step) * 4.0,
        min_step: opts.min_step,
        rotated_frames: 2,
        noise,
    };
    let (mut best_x, mut best) = (scored[0].1.clone(), scored[0].0);
    for (_, start) in climbed.iter().take(opts.polished.max(1)) {
        let (x, fx) = fine.maximize(&objective, start, &mut rng);
        if fx > best {
            best = fx;
            best_x = x;
        }
    }
    let slack = PatternSearch::local_gain(&objective, &best_x, best, 1e-6, &mut rng);
    debug_assert!(chart.params() == best_x.len());
    Ok(DiamondEstimate {
        value: best,
        maximizer: chart.density(&best_x),
        slack,
    })
}

/// `||e - g||_◇` with the default search schedule.
pub fn diamond_norm_diff(e: &Channel, g: &Channel) -> Result<f64> {
    Ok(diamond_norm_diff_with(e, g, &DiamondOptions::default())?.value)
}

pub fn diamond_norm_diff_with(
    e: &Channel,
    g: &Channel,
    opts: &DiamondOptions,
) -> Result<DiamondEstimate> {
    e.check_same_dim(g, "diamond_norm_diff")?;
    diamond_norm_with(&e.difference(g)?, opts)
}

/// `||(e - g)(rho)||_1` for a fixed input.
pub fn output_distance(e: &Channel, g: &Channel, rho: &Matrix) -> Result<f64> {
    e.check_same_dim(g, "output_distance")?;
    let diff = &e.apply(rho)? - &g.apply(rho)?;
    diff.hermitian_trace_norm()
}

/// Induced trace norm of `e - g` without an ancilla, maximized over pure
/// inputs (where it is attained among Hermitian inputs).
pub fn induced_norm_diff(e: &Channel, g: &Channel) -> Result<f64> {
    e.check_same_dim(g, "induced_norm_diff")?;
    let d = e.dim;
    if d > MAX_DIAMOND_DIM {
        return Err(Error::DimensionTooLarge {
            op: "induced_norm_diff",
            dim: d,
            max: MAX_DIAMOND_DIM,
        });
    }
    let diff = e.difference(g)?;
    let objective = |x: &[f64]| {
        let psi: Vec<C64> = (0..d).map(|k| C64::new(x[2 * k], x[2 * k + 1])).collect();
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if n < 1e-300 {
            return f64::NEG_INFINITY;
        }
        let rho = Matrix::projector(&psi).scale_real(1.0 / n);
        diff.apply(&rho)
            .and_then(|m| m.hermitian_trace_norm())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d_0ced);
    let search = PatternSearch {
        initial_step: 0.2,
        min_step: 1e-9,
        rotated_frames: 2,
        noise: 64.0 * f64::EPSILON * diff.superoperator().frobenius_norm(),
    };
    let mut best = f64::NEG_INFINITY;
    for _ in 0..20 {
        let start: Vec<f64> = (0..2 * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let (_, fx) = search.maximize(&objective, &start, &mut rng);
        best = best.max(fx);
    }
    Ok(best)
}
