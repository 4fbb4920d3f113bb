//! Gate sequences on a qubit register, simulated exactly, on average over
//! ensemble choices, or one sampled realization at a time.
//!
//! Slot 1 is applied first, so the ideal circuit unitary is
//! `U = U_N ... U_2 U_1`. Qubit 0 is the first (slow) Kronecker factor of the
//! register; the first entry of a slot's placement is the slow factor of its
//! gate matrix.

use rand::Rng;

use crate::ensemble::MixedUnitaryEnsemble;
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, SlopeFit};
use crate::matrix::gates::{pauli_x, pauli_y, plus_state, z_rotation};
use crate::matrix::{Matrix, C64, MAX_DECOMPOSITION_DIM};
use crate::random::stream_rng;

/// Widest register for exact averaged (superoperator-level) evolution.
pub const MAX_AVERAGED_WIDTH: usize = 5;

/// Widest register for sampled realizations.
pub const MAX_SAMPLED_WIDTH: usize = 10;

/// Tolerance on density-matrix trace, Hermiticity and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum GateContent {
    Exact(Matrix),
    Ensemble(MixedUnitaryEnsemble),
}

#[derive(Debug, Clone)]
pub struct GateSlot {
    placement: Vec<usize>,
    content: GateContent,
    t_slot: bool,
}

impl GateSlot {
    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn content(&self) -> &GateContent {
        &self.content
    }

    /// Marked for replacement by state injection.
    pub fn is_t_slot(&self) -> bool {
        self.t_slot
    }

    /// The ideal gate: the exact matrix or the ensemble's target.
    pub fn target(&self) -> &Matrix {
        match &self.content {
            GateContent::Exact(u) => u,
            GateContent::Ensemble(e) => e.target(),
        }
    }

    pub fn ensemble(&self) -> Option<&MixedUnitaryEnsemble> {
        match &self.content {
            GateContent::Ensemble(e) => Some(e),
            GateContent::Exact(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    width: usize,
    slots: Vec<GateSlot>,
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidCircuit(
                "width must be at least one qubit".into(),
            ));
        }
        if width > MAX_SAMPLED_WIDTH {
            return Err(Error::WidthCap {
                mode: "any simulation",
                width,
                max: MAX_SAMPLED_WIDTH,
                hint: "reduce the register width",
            });
        }
        Ok(Self {
            width,
            slots: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        1 << self.width
    }

    pub fn slots(&self) -> &[GateSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    fn check_placement(&self, placement: &[usize], gate_dim: usize) -> Result<()> {
        if placement.is_empty() {
            return Err(Error::InvalidCircuit("empty placement".into()));
        }
        if gate_dim != 1 << placement.len() {
            return Err(Error::InvalidCircuit(format!(
                "gate of dimension {gate_dim} placed on {} qubits",
                placement.len()
            )));
        }
        for (k, &q) in placement.iter().enumerate() {
            if q >= self.width {
                return Err(Error::InvalidCircuit(format!(
                    "qubit {q} outside a register of width {}",
                    self.width
                )));
            }
            if placement[..k].contains(&q) {
                return Err(Error::InvalidCircuit(format!(
                    "qubit {q} repeated in placement"
                )));
            }
        }
        Ok(())
    }

    pub fn push_exact(&mut self, placement: &[usize], u: Matrix) -> Result<&mut Self> {
        if !u.is_square() {
            return Err(Error::NotSquare {
                op: "gate",
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        self.check_placement(placement, u.rows())?;
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.slots.push(GateSlot {
            placement: placement.to_vec(),
            content: GateContent::Exact(u),
            t_slot: false,
        });
        Ok(self)
    }

    pub fn push_ensemble(
        &mut self,
        placement: &[usize],
        e: MixedUnitaryEnsemble,
    ) -> Result<&mut Self> {
        self.check_placement(placement, e.dim())?;
        self.slots.push(GateSlot {
            placement: placement.to_vec(),
            content: GateContent::Ensemble(e),
            t_slot: false,
        });
        Ok(self)
    }

    /// Ideal T gate `exp(i pi/8 sigma_Z)` on `qubit`, flagged for injection.
    pub fn push_t(&mut self, qubit: usize) -> Result<&mut Self> {
        let t = z_rotation(std::f64::consts::FRAC_PI_8);
        self.push_exact(&[qubit], t)?;
        if let Some(slot) = self.slots.last_mut() {
            slot.t_slot = true;
        }
        Ok(self)
    }

    pub fn ensembles(&self) -> impl Iterator<Item = &MixedUnitaryEnsemble> {
        self.slots.iter().filter_map(|s| s.ensemble())
    }

    /// Sum of per-slot ensemble bounds.
    pub fn lemma2_bound(&self) -> f64 {
        crate::ensemble::lemma2_bound(self.ensembles())
    }

    pub fn t_slot_count(&self) -> usize {
        self.slots.iter().filter(|s| s.t_slot).count()
    }

    /// `U_N ... U_1` as a full-register matrix.
    pub fn ideal_unitary(&self) -> Result<Matrix> {
        if self.dim() > MAX_DECOMPOSITION_DIM {
            return Err(Error::WidthCap {
                mode: "full unitary",
                width: self.width,
                max: 6,
                hint: "use state evolution instead",
            });
        }
        let mut u = Matrix::identity(self.dim());
        for slot in &self.slots {
            let g = embed(slot.target(), &slot.placement, self.width);
            u = &g * &u;
        }
        Ok(u)
    }
}

/// Full-register matrix of a gate acting on `placement`.
pub fn embed(gate: &Matrix, placement: &[usize], width: usize) -> Matrix {
    let layout = Layout::new(placement, width);
    let dim = 1 << width;
    Matrix::from_fn(dim, dim, |r, c| {
        if r & !layout.mask == c & !layout.mask {
            gate[(layout.local(r), layout.local(c))]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

struct Layout {
    mask: usize,
    /// Full-index bits for each local index.
    offsets: Vec<usize>,
    width: usize,
    placement: Vec<usize>,
}

impl Layout {
    fn new(placement: &[usize], width: usize) -> Self {
        let k = placement.len();
        let bit = |q: usize| 1usize << (width - 1 - q);
        let mask = placement.iter().map(|&q| bit(q)).fold(0, |a, b| a | b);
        let offsets = (0..1usize << k)
            .map(|s| {
                placement
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| s >> (k - 1 - j) & 1 == 1)
                    .map(|(_, &q)| bit(q))
                    .fold(0, |a, b| a | b)
            })
            .collect();
        Self {
            mask,
            offsets,
            width,
            placement: placement.to_vec(),
        }
    }

    fn local(&self, full: usize) -> usize {
        let k = self.placement.len();
        self.placement
            .iter()
            .enumerate()
            .map(|(j, &q)| ((full >> (self.width - 1 - q)) & 1) << (k - 1 - j))
            .sum()
    }

    fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.width).filter(move |i| i & self.mask == 0)
    }
}

/// Row-major dense density matrix with in-place local gate application.
#[derive(Debug, Clone)]
pub(crate) struct DensityState {
    width: usize,
    dim: usize,
    data: Vec<C64>,
}

impl DensityState {
    pub fn from_matrix(rho: &Matrix) -> Self {
        Self {
            width: rho.rows().trailing_zeros() as usize,
            dim: rho.rows(),
            data: rho.to_row_major(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.dim, self.dim, self.data.clone()).expect("state stays finite")
    }

    /// `rho -> G rho` on the row index.
    fn left(&mut self, g: &Matrix, layout: &Layout) {
        let k = layout.offsets.len();
        let mut buf = vec![C64::new(0.0, 0.0); k];
        for base in layout.bases() {
            for c in 0..self.dim {
                for (s, &off) in layout.offsets.iter().enumerate() {
                    buf[s] = self.data[(base | off) * self.dim + c];
                }
                for (s, &off) in layout.offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (t, b) in buf.iter().enumerate() {
                        acc += g[(s, t)] * b;
                    }
                    self.data[(base | off) * self.dim + c] = acc;
                }
            }
        }
    }

    /// `rho -> rho G^dag` on the column index.
    fn right_adjoint(&mut self, g: &Matrix, layout: &Layout) {
        let k = layout.offsets.len();
        let mut buf = vec![C64::new(0.0, 0.0); k];
        for base in layout.bases() {
            for r in 0..self.dim {
                let row = r * self.dim;
                for (s, &off) in layout.offsets.iter().enumerate() {
                    buf[s] = self.data[row + (base | off)];
                }
                for (s, &off) in layout.offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (t, b) in buf.iter().enumerate() {
                        acc += g[(s, t)].conj() * b;
                    }
                    self.data[row + (base | off)] = acc;
                }
            }
        }
    }

    /// `rho -> G rho G^dag`
    pub fn conjugate(&mut self, g: &Matrix, placement: &[usize]) {
        let layout = Layout::new(placement, self.width);
        self.left(g, &layout);
        self.right_adjoint(g, &layout);
    }

    /// `rho -> sum_a w_a K_a rho K_a^dag`
    pub fn conjugate_sum<'a>(
        &mut self,
        terms: impl IntoIterator<Item = (f64, &'a Matrix)>,
        placement: &[usize],
    ) {
        let layout = Layout::new(placement, self.width);
        let mut total = vec![C64::new(0.0, 0.0); self.data.len()];
        for (w, k) in terms {
            if w == 0.0 {
                continue;
            }
            let mut branch = self.clone();
            branch.left(k, &layout);
            branch.right_adjoint(k, &layout);
            for (t, b) in total.iter_mut().zip(&branch.data) {
                *t += b * w;
            }
        }
        self.data = total;
    }

    /// `tr(rho M)`, real part.
    pub fn expectation(&self, m: &Matrix) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.data[i * self.dim + j] * m[(j, i)];
            }
        }
        acc.re
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn add_scaled(&mut self, other: &DensityState, w: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * w;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|a| *a *= s);
    }

    pub fn zeroed(&self) -> DensityState {
        DensityState {
            width: self.width,
            dim: self.dim,
            data: vec![C64::new(0.0, 0.0); self.data.len()],
        }
    }
}

/// Checks that `rho` is a density matrix on `dim` levels.
pub fn validate_density(rho: &Matrix, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::InvalidState(format!(
            "expected {dim}x{dim}, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = rho.hermiticity_deviation();
    if dev > STATE_TOL {
        return Err(Error::InvalidState(format!(
            "not Hermitian (deviation {dev:.3e})"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace is {tr}")));
    }
    let psd = if dim <= MAX_DECOMPOSITION_DIM {
        rho.min_eigenvalue()? >= -STATE_TOL
    } else {
        rho.is_psd_by_cholesky(STATE_TOL)
    };
    if !psd {
        return Err(Error::InvalidState("not positive semidefinite".into()));
    }
    Ok(())
}

pub fn validate_observable(m: &Matrix, dim: usize) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::InvalidObservable(format!(
            "expected {dim}x{dim}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermiticity_deviation();
    if dev > STATE_TOL {
        return Err(Error::InvalidObservable(format!(
            "not Hermitian (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

fn check_averaged_width(c: &Circuit) -> Result<()> {
    if c.width > MAX_AVERAGED_WIDTH {
        return Err(Error::WidthCap {
            mode: "exact averaged evolution",
            width: c.width,
            max: MAX_AVERAGED_WIDTH,
            hint: "use the Resampled protocol to estimate the average by sampling",
        });
    }
    Ok(())
}

/// `U rho U^dag` for the ideal circuit.
pub fn ideal_state(c: &Circuit, rho: &Matrix) -> Result<Matrix> {
    validate_density(rho, c.dim())?;
    let mut st = DensityState::from_matrix(rho);
    for slot in &c.slots {
        st.conjugate(slot.target(), &slot.placement);
    }
    Ok(st.to_matrix())
}

/// `tr(U rho U^dag M)`
pub fn ideal_expectation(c: &Circuit, rho: &Matrix, m: &Matrix) -> Result<f64> {
    validate_observable(m, c.dim())?;
    let out = ideal_state(c, rho)?;
    Ok(DensityState::from_matrix(&out).expectation(m))
}

/// `E[V rho V^dag] = G_N ∘ ... ∘ G_1(rho)`, each ensemble slot replaced by its
/// averaged channel.
pub fn averaged_state(c: &Circuit, rho: &Matrix) -> Result<Matrix> {
    check_averaged_width(c)?;
    validate_density(rho, c.dim())?;
    let mut st = DensityState::from_matrix(rho);
    for slot in &c.slots {
        match &slot.content {
            GateContent::Exact(u) => st.conjugate(u, &slot.placement),
            GateContent::Ensemble(e) => {
                st.conjugate_sum(e.probs().iter().copied().zip(e.options()), &slot.placement)
            }
        }
    }
    Ok(st.to_matrix())
}

/// `tr(M E[V rho V^dag])`
pub fn averaged_expectation(c: &Circuit, rho: &Matrix, m: &Matrix) -> Result<f64> {
    validate_observable(m, c.dim())?;
    let out = averaged_state(c, rho)?;
    Ok(DensityState::from_matrix(&out).expectation(m))
}

/// A circuit with every ensemble slot replaced by one sampled option.
#[derive(Debug, Clone)]
pub struct Realization {
    pub circuit: Circuit,
    /// Sampled option index per slot; `None` for exact slots.
    pub choices: Vec<Option<usize>>,
}

pub fn sample_realization(c: &Circuit, rng: &mut impl Rng) -> Realization {
    let mut choices = Vec::with_capacity(c.slots.len());
    let slots = c
        .slots
        .iter()
        .map(|slot| match &slot.content {
            GateContent::Exact(_) => {
                choices.push(None);
                slot.clone()
            }
            GateContent::Ensemble(e) => {
                let (a, w) = e.sample(rng);
                choices.push(Some(a));
                GateSlot {
                    placement: slot.placement.clone(),
                    content: GateContent::Exact(w.clone()),
                    t_slot: slot.t_slot,
                }
            }
        })
        .collect();
    Realization {
        circuit: Circuit {
            width: c.width,
            slots,
        },
        choices,
    }
}

/// Evolution under one realization, given as a slot-index → unitary choice.
fn evolve_realized<'a>(
    c: &'a Circuit,
    rho: &DensityState,
    mut pick: impl FnMut(usize, &'a GateSlot) -> &'a Matrix,
) -> DensityState {
    let mut st = rho.clone();
    for (i, slot) in c.slots.iter().enumerate() {
        st.conjugate(pick(i, slot), &slot.placement);
    }
    st
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Every slot is its target followed by a fixed `exp(i offset sigma_Z)`;
    /// one offset per slot, or a single offset applied to all slots.
    Systematic { offsets: Vec<f64> },
    /// One sampled realization reused for every shot.
    FixedRealization,
    /// A fresh realization for every shot.
    Resampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolTag {
    Systematic,
    FixedRealization,
    Resampled,
    ExactAveraged,
}

impl ProtocolTag {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Systematic => "systematic",
            Self::FixedRealization => "fixed_realization",
            Self::Resampled => "resampled",
            Self::ExactAveraged => "exact_averaged",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub shots: usize,
    pub seed: u64,
    /// Sample eigenvalue outcomes of `M` per shot instead of using exact
    /// expectations.
    pub shot_noise: bool,
}

impl RunConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            seed,
            shot_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub protocol: ProtocolTag,
    /// Estimated `<M>` (mean over shots for sampled protocols).
    pub value: f64,
    /// `tr(U rho U^dag M)`
    pub ideal: f64,
    /// `value - ideal`
    pub error: f64,
    /// Standard error of `value`; zero when shots are exact and identical.
    pub std_error: f64,
    pub shots: usize,
    pub seed: u64,
}

struct ShotSampler {
    eigenvalues: Vec<f64>,
    projectors: Vec<Matrix>,
}

impl ShotSampler {
    fn new(m: &Matrix) -> Result<Self> {
        let eig = m.hermitian_eig()?;
        let n = m.rows();
        let projectors = (0..n)
            .map(|k| {
                let v: Vec<C64> = (0..n).map(|i| eig.eigenvectors[(i, k)]).collect();
                Matrix::projector(&v)
            })
            .collect();
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            projectors,
        })
    }

    fn draw(&self, st: &DensityState, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (lambda, p) in self.eigenvalues.iter().zip(&self.projectors) {
            acc += st.expectation(p).max(0.0);
            if u < acc {
                return *lambda;
            }
        }
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs one error protocol and reports its estimate of `<M>` against the ideal.
pub fn run_protocol(
    c: &Circuit,
    rho: &Matrix,
    m: &Matrix,
    protocol: &Protocol,
    cfg: &RunConfig,
) -> Result<ExperimentResult> {
    if cfg.shots == 0 {
        return Err(Error::InvalidProtocol("shots must be at least 1".into()));
    }
    let ideal = ideal_expectation(c, rho, m)?;
    let start = DensityState::from_matrix(rho);
    let mut rng = stream_rng(cfg.seed, 0);
    let sampler = if cfg.shot_noise {
        Some(ShotSampler::new(m)?)
    } else {
        None
    };
    let measure = |st: &DensityState, rng: &mut rand_chacha::ChaCha8Rng| match &sampler {
        Some(s) => s.draw(st, rng),
        None => st.expectation(m),
    };

    let (tag, samples) = match protocol {
        Protocol::Systematic { offsets } => {
            let offsets: Vec<f64> = match offsets.len() {
                1 => vec![offsets[0]; c.len()],
                n if n == c.len() => offsets.clone(),
                n => {
                    return Err(Error::InvalidProtocol(format!(
                        "{n} offsets for {} slots",
                        c.len()
                    )))
                }
            };
            let shifted: Vec<Matrix> = c
                .slots
                .iter()
                .zip(&offsets)
                .map(|(slot, &off)| {
                    if off == 0.0 {
                        Ok(slot.target().clone())
                    } else if slot.placement.len() == 1 {
                        Ok(slot.target() * &z_rotation(off))
                    } else {
                        Err(Error::InvalidProtocol(
                            "systematic offsets apply to single-qubit slots only".into(),
                        ))
                    }
                })
                .collect::<Result<_>>()?;
            let st = evolve_realized(c, &start, |i, _| &shifted[i]);
            let samples = if cfg.shot_noise {
                (0..cfg.shots).map(|_| measure(&st, &mut rng)).collect()
            } else {
                vec![measure(&st, &mut rng)]
            };
            (ProtocolTag::Systematic, samples)
        }
        Protocol::FixedRealization => {
            let real = sample_realization(c, &mut rng);
            let st = evolve_realized(&real.circuit, &start, |_, s| s.target());
            let samples = if cfg.shot_noise {
                (0..cfg.shots).map(|_| measure(&st, &mut rng)).collect()
            } else {
                vec![measure(&st, &mut rng)]
            };
            (ProtocolTag::FixedRealization, samples)
        }
        Protocol::Resampled => {
            let samples = (0..cfg.shots)
                .map(|_| {
                    let st = evolve_realized(c, &start, |_, slot| match &slot.content {
                        GateContent::Exact(u) => u,
                        GateContent::Ensemble(e) => e.sample(&mut rng).1,
                    });
                    measure(&st, &mut rng)
                })
                .collect();
            (ProtocolTag::Resampled, samples)
        }
    };
    let (value, std_error) = mean_and_stderr(&samples);
    Ok(ExperimentResult {
        protocol: tag,
        value,
        ideal,
        error: value - ideal,
        std_error,
        shots: cfg.shots,
        seed: cfg.seed,
    })
}

/// Single qubit, `N` slots of `exp(i theta sigma_Z)`, each implementable as
/// `exp(i (theta ± eps) sigma_Z)` with equal probability; prepared in `|+>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModel {
    pub theta: f64,
    pub epsilon: f64,
}

impl ToyModel {
    pub fn circuit(&self, n: usize) -> Result<Circuit> {
        let target = z_rotation(self.theta);
        let ens = MixedUnitaryEnsemble::new(
            target,
            vec![
                z_rotation(self.theta + self.epsilon),
                z_rotation(self.theta - self.epsilon),
            ],
            vec![0.5, 0.5],
        )?;
        let mut c = Circuit::new(1)?;
        for _ in 0..n {
            c.push_ensemble(&[0], ens.clone())?;
        }
        Ok(c)
    }

    pub fn initial_state(&self) -> Matrix {
        plus_state()
    }

    /// `sigma_y`, the observable whose ideal value `sin(-2 N theta)` moves first
    /// under a Z-angle error.
    pub fn observable(&self) -> Matrix {
        pauli_y()
    }

    pub fn coherence_observable(&self) -> Matrix {
        pauli_x()
    }
}

/// How a scaling sweep turns a protocol into one error number per `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepProtocol {
    /// `|<sigma_y>_V - <sigma_y>_U|` with every slot offset by `+eps`.
    Systematic,
    /// RMS over `seeds` fixed realizations of the `<sigma_y>` error.
    FixedRealization { seeds: usize },
    /// `2 (1 - <psi|rho_avg|psi>)` for the ideal output `|psi>` and the mean
    /// state over `shots` fresh realizations. Each shot contributes a
    /// same-sign term, so finite-shot noise is relative rather than additive.
    Resampled { shots: usize },
    /// The same statistic for `E[V rho V^dag]`; for the toy it equals
    /// `||E[V rho V^dag] - U rho U^dag||_1`.
    ExactAveraged,
}

impl SweepProtocol {
    pub fn tag(&self) -> ProtocolTag {
        match self {
            Self::Systematic => ProtocolTag::Systematic,
            Self::FixedRealization { .. } => ProtocolTag::FixedRealization,
            Self::Resampled { .. } => ProtocolTag::Resampled,
            Self::ExactAveraged => ProtocolTag::ExactAveraged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub protocol: ProtocolTag,
    pub toy: ToyModel,
    pub rows: Vec<SweepRow>,
    /// `None` when fewer than two points clear the noise floor.
    pub fit: Option<SlopeFit>,
}

/// Error statistic of one protocol at one `N`. Randomness comes from
/// `stream_rng(seed, n)` so points can be computed in any order.
pub fn sweep_point(toy: &ToyModel, n: usize, protocol: SweepProtocol, seed: u64) -> Result<f64> {
    let c = toy.circuit(n)?;
    let rho = toy.initial_state();
    let m = toy.observable();
    let ideal_rho = ideal_state(&c, &rho)?;
    let start = DensityState::from_matrix(&rho);
    match protocol {
        SweepProtocol::Systematic => {
            let r = run_protocol(
                &c,
                &rho,
                &m,
                &Protocol::Systematic {
                    offsets: vec![toy.epsilon],
                },
                &RunConfig::new(1, seed),
            )?;
            Ok(r.error.abs())
        }
        SweepProtocol::FixedRealization { seeds } => {
            if seeds == 0 {
                return Err(Error::InvalidProtocol(
                    "at least one seed is required".into(),
                ));
            }
            let ideal = DensityState::from_matrix(&ideal_rho).expectation(&m);
            let mut rng = stream_rng(seed, n as u64);
            let mut sq = 0.0;
            for _ in 0..seeds {
                let real = sample_realization(&c, &mut rng);
                let st = evolve_realized(&real.circuit, &start, |_, s| s.target());
                sq += (st.expectation(&m) - ideal).powi(2);
            }
            Ok((sq / seeds as f64).sqrt())
        }
        SweepProtocol::Resampled { shots } => {
            if shots == 0 {
                return Err(Error::InvalidProtocol("shots must be at least 1".into()));
            }
            let fidelity_obs = ideal_rho.scale_real(2.0);
            let mut rng = stream_rng(seed, n as u64);
            let mut total = 0.0;
            for _ in 0..shots {
                let st = evolve_realized(&c, &start, |_, slot| match &slot.content {
                    GateContent::Exact(u) => u,
                    GateContent::Ensemble(e) => e.sample(&mut rng).1,
                });
                total += 2.0 - st.expectation(&fidelity_obs);
            }
            Ok(total / shots as f64)
        }
        SweepProtocol::ExactAveraged => {
            let avg = DensityState::from_matrix(&averaged_state(&c, &rho)?);
            Ok(2.0 - avg.expectation(&ideal_rho.scale_real(2.0)))
        }
    }
}

/// Error statistic against `N` for one protocol, with a log-log slope fit.
pub fn scaling_sweep(
    toy: &ToyModel,
    ns: &[usize],
    protocol: SweepProtocol,
    seed: u64,
) -> Result<Sweep> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidProtocol(
            "N values must be strictly ascending".into(),
        ));
    }
    let rows = ns
        .iter()
        .map(|&n| {
            Ok(SweepRow {
                n,
                statistic: sweep_point(toy, n, protocol, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        protocol: protocol.tag(),
        toy: *toy,
        fit: fit_rows(&rows),
        rows,
    })
}

pub fn fit_rows(rows: &[SweepRow]) -> Option<SlopeFit> {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.statistic).collect();
    fit_loglog(&xs, &ys).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::ZRotationSpec;
    use crate::matrix::gates::*;
    use crate::random::{haar_unitary, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(21)
    }

    fn pm(eps: f64, theta: f64) -> MixedUnitaryEnsemble {
        ZRotationSpec::new(theta, vec![theta + eps, theta - eps])
            .unwrap()
            .ensemble()
            .unwrap()
    }

    #[test]
    fn ideal_expectation_examples() {
        let c = Circuit::new(1).unwrap();
        assert!((ideal_expectation(&c, &plus_state(), &pauli_x()).unwrap() - 1.0).abs() < 1e-15);

        for &theta in &[0.0, 0.2, 1.1, -0.7] {
            let mut c = Circuit::new(1).unwrap();
            c.push_exact(&[0], z_rotation(theta)).unwrap();
            let v = ideal_expectation(&c, &plus_state(), &pauli_x()).unwrap();
            assert!((v - (2.0 * theta).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn toy_sigma_y_matches_matrix_chain() {
        let theta = 0.013;
        for n in [1, 7, 50] {
            let mut c = Circuit::new(1).unwrap();
            for _ in 0..n {
                c.push_exact(&[0], z_rotation(theta)).unwrap();
            }
            let v = ideal_expectation(&c, &plus_state(), &pauli_y()).unwrap();
            // oracle: explicit product and trace
            let mut u = Matrix::identity(2);
            for _ in 0..n {
                u = &z_rotation(theta) * &u;
            }
            let out = &(&u * &plus_state()) * &u.adjoint();
            let oracle = (&out * &pauli_y()).trace().re;
            assert!((v - oracle).abs() < 1e-13);
            assert!((v + (2.0 * n as f64 * theta).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn slot_order_is_right_to_left() {
        let mut r = rng();
        let gates: Vec<Matrix> = (0..3).map(|_| haar_unitary(2, &mut r)).collect();
        let mut c = Circuit::new(1).unwrap();
        for g in &gates {
            c.push_exact(&[0], g.clone()).unwrap();
        }
        let u = &(&gates[2] * &gates[1]) * &gates[0];
        assert!(c.ideal_unitary().unwrap().max_abs_diff(&u) < 1e-14);

        let rho = random_density(2, &mut r);
        let expected = &(&u * &rho) * &u.adjoint();
        assert!(ideal_state(&c, &rho).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn embedding_matches_kron() {
        let mut r = rng();
        let g = haar_unitary(2, &mut r);
        let i2 = Matrix::identity(2);
        assert!(embed(&g, &[0], 2).max_abs_diff(&g.kron(&i2)) < 1e-15);
        assert!(embed(&g, &[1], 2).max_abs_diff(&i2.kron(&g)) < 1e-15);
        assert!(embed(&g, &[1], 3).max_abs_diff(&i2.kron(&g).kron(&i2)) < 1e-15);

        // reversed placement of a two-qubit gate swaps its factors
        let swap = Matrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        let flipped = &(&swap * &cnot()) * &swap;
        assert!(embed(&cnot(), &[1, 0], 2).max_abs_diff(&flipped) < 1e-15);
    }

    #[test]
    fn local_application_matches_embedded_matrices() {
        let mut r = rng();
        let width = 3;
        let mut c = Circuit::new(width).unwrap();
        c.push_exact(&[2, 0], haar_unitary(4, &mut r)).unwrap();
        c.push_exact(&[1], haar_unitary(2, &mut r)).unwrap();
        c.push_exact(&[0, 1, 2], haar_unitary(8, &mut r)).unwrap();
        c.push_exact(&[1, 2], cnot()).unwrap();
        let rho = random_density(8, &mut r);
        let u = c.ideal_unitary().unwrap();
        let expected = &(&u * &rho) * &u.adjoint();
        let got = ideal_state(&c, &rho).unwrap();
        assert!(got.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn placement_validation() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push_exact(&[2], pauli_x()).is_err());
        assert!(c.push_exact(&[0, 0], cnot()).is_err());
        assert!(c.push_exact(&[0], cnot()).is_err());
        assert!(c.push_exact(&[0], Matrix::real_diag(&[1.0, 0.5])).is_err());
        assert!(Circuit::new(0).is_err());
        assert!(matches!(Circuit::new(11), Err(Error::WidthCap { .. })));
    }

    #[test]
    fn invalid_states_and_observables_rejected() {
        let c = Circuit::new(1).unwrap();
        let not_unit_trace = Matrix::real_diag(&[1.0, 1.0]);
        assert!(matches!(
            ideal_expectation(&c, &not_unit_trace, &pauli_x()),
            Err(Error::InvalidState(_))
        ));
        let negative = Matrix::real_diag(&[1.5, -0.5]);
        assert!(matches!(
            ideal_expectation(&c, &negative, &pauli_x()),
            Err(Error::InvalidState(_))
        ));
        let non_hermitian = Matrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            ideal_expectation(&c, &plus_state(), &non_hermitian),
            Err(Error::InvalidObservable(_))
        ));
    }

    #[test]
    fn averaged_expectation_examples() {
        let mut r = rng();
        let mut c = Circuit::new(2).unwrap();
        c.push_exact(&[0, 1], haar_unitary(4, &mut r)).unwrap();
        c.push_exact(&[1], haar_unitary(2, &mut r)).unwrap();
        let rho = random_density(4, &mut r);
        let m = pauli_x().kron(&pauli_z());
        let a = averaged_expectation(&c, &rho, &m).unwrap();
        let b = ideal_expectation(&c, &rho, &m).unwrap();
        assert!((a - b).abs() < 1e-14);

        let eps: f64 = 0.23;
        let mut c = Circuit::new(1).unwrap();
        c.push_ensemble(&[0], pm(eps, 0.0)).unwrap();
        let v = averaged_expectation(&c, &plus_state(), &pauli_x()).unwrap();
        assert!((v - (eps.cos().powi(2) - eps.sin().powi(2))).abs() < 1e-15);
        assert!((v - (2.0 * eps).cos()).abs() < 1e-15);
    }

    #[test]
    fn averaged_matches_channel_composition() {
        let mut r = rng();
        let mut c = Circuit::new(1).unwrap();
        let mut chan = crate::channel::Channel::identity(2).unwrap();
        for _ in 0..5 {
            let e = pm(r.random_range(0.0..0.3), r.random_range(-1.0..1.0));
            chan = e.averaged_channel().unwrap().compose(&chan).unwrap();
            c.push_ensemble(&[0], e).unwrap();
            let u = haar_unitary(2, &mut r);
            chan = crate::channel::Channel::from_unitary(&u)
                .unwrap()
                .compose(&chan)
                .unwrap();
            c.push_exact(&[0], u).unwrap();
        }
        let rho = random_density(2, &mut r);
        let a = averaged_state(&c, &rho).unwrap();
        assert!(a.max_abs_diff(&chan.apply(&rho).unwrap()) < 1e-13);
    }

    #[test]
    fn averaged_width_cap() {
        let c = Circuit::new(6).unwrap();
        let rho = Matrix::from_fn(64, 64, |i, j| {
            if i == 0 && j == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = Matrix::identity(64);
        assert!(matches!(
            averaged_expectation(&c, &rho, &m),
            Err(Error::WidthCap { .. })
        ));
        assert!(ideal_expectation(&c, &rho, &m).is_ok());
    }

    fn random_circuit(width: usize, slots: usize, phi_max: f64, r: &mut ChaCha8Rng) -> Circuit {
        let mut c = Circuit::new(width).unwrap();
        for _ in 0..slots {
            if r.random_bool(0.5) {
                let q = r.random_range(0..width);
                let theta = r.random_range(-3.0..3.0);
                let spec = ZRotationSpec::new(
                    theta,
                    vec![
                        theta + r.random_range(0.0..phi_max),
                        theta - r.random_range(0.0..phi_max),
                    ],
                )
                .unwrap();
                c.push_ensemble(&[q], spec.ensemble().unwrap()).unwrap();
            } else if width > 1 && r.random_bool(0.5) {
                let a = r.random_range(0..width);
                let b = (a + 1 + r.random_range(0..width - 1)) % width;
                c.push_exact(&[a, b], cnot()).unwrap();
            } else {
                let q = r.random_range(0..width);
                c.push_exact(&[q], haar_unitary(2, r)).unwrap();
            }
        }
        c
    }

    #[test]
    fn averaged_error_within_lemma2_bound() {
        let mut r = rng();
        for _ in 0..20 {
            let c = random_circuit(2, 30, 0.1, &mut r);
            let rho = random_density(4, &mut r);
            let bound = c.lemma2_bound();
            for m in [
                pauli_x().kron(&Matrix::identity(2)),
                pauli_z().kron(&pauli_z()),
            ] {
                let err = (averaged_expectation(&c, &rho, &m).unwrap()
                    - ideal_expectation(&c, &rho, &m).unwrap())
                .abs();
                assert!(err <= bound * m.operator_norm().unwrap() + 1e-12);
            }
            let tr = (&averaged_state(&c, &rho).unwrap() - &ideal_state(&c, &rho).unwrap())
                .hermitian_trace_norm()
                .unwrap();
            assert!(tr <= bound + 1e-12);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let mut r = rng();
        let c = random_circuit(3, 40, 0.3, &mut r);
        let rho = random_density(8, &mut r);
        let out = averaged_state(&c, &rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-9);
        let real = sample_realization(&c, &mut r);
        let out = ideal_state(&real.circuit, &rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_realization_examples() {
        let mut r = rng();
        let mut c = Circuit::new(1).unwrap();
        c.push_exact(&[0], hadamard()).unwrap();
        let real = sample_realization(&c, &mut r);
        assert_eq!(real.choices, vec![None]);
        assert_eq!(real.circuit.slots()[0].target(), &hadamard());

        let det = ZRotationSpec::new(0.2, vec![0.2, 0.4])
            .unwrap()
            .ensemble()
            .unwrap();
        c.push_ensemble(&[0], det).unwrap();
        for _ in 0..50 {
            assert_eq!(sample_realization(&c, &mut r).choices, vec![None, Some(0)]);
        }
    }

    #[test]
    fn realization_histogram_matches_probabilities() {
        let mut r = rng();
        let spec = ZRotationSpec::new(std::f64::consts::FRAC_PI_8, vec![0.35, 0.40]).unwrap();
        let q = spec.solve_probs().unwrap();
        let mut c = Circuit::new(1).unwrap();
        for _ in 0..3 {
            c.push_ensemble(&[0], spec.ensemble().unwrap()).unwrap();
        }
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            for (k, ch) in sample_realization(&c, &mut r).choices.iter().enumerate() {
                if *ch == Some(0) {
                    counts[k] += 1;
                }
            }
        }
        let sigma = (q[0] * q[1] / n as f64).sqrt();
        for k in counts {
            assert!((k as f64 / n as f64 - q[0]).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn systematic_zero_offsets_reproduce_ideal() {
        let mut r = rng();
        let c = random_circuit(2, 20, 0.1, &mut r);
        let rho = random_density(4, &mut r);
        let m = pauli_y().kron(&pauli_x());
        let res = run_protocol(
            &c,
            &rho,
            &m,
            &Protocol::Systematic { offsets: vec![0.0] },
            &RunConfig::new(1, 0),
        )
        .unwrap();
        assert!(res.error.abs() < 1e-12);
        assert_eq!(res.protocol, ProtocolTag::Systematic);
    }

    #[test]
    fn systematic_toy_is_a_coherent_rotation() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 1e-3,
        };
        for n in [10, 100, 400] {
            let c = toy.circuit(n).unwrap();
            let res = run_protocol(
                &c,
                &toy.initial_state(),
                &toy.observable(),
                &Protocol::Systematic {
                    offsets: vec![toy.epsilon],
                },
                &RunConfig::new(1, 0),
            )
            .unwrap();
            let phase = 2.0 * n as f64 * toy.epsilon;
            assert!((res.error.abs() - phase.sin()).abs() < 1e-12);
            if phase < 0.3 {
                assert!((res.error.abs() / phase - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn systematic_protocol_validation() {
        let mut c = Circuit::new(2).unwrap();
        c.push_exact(&[0, 1], cnot()).unwrap();
        let rho = Matrix::identity(4).scale_real(0.25);
        let m = pauli_z().kron(&pauli_z());
        assert!(run_protocol(
            &c,
            &rho,
            &m,
            &Protocol::Systematic { offsets: vec![0.1] },
            &RunConfig::new(1, 0)
        )
        .is_err());
        assert!(run_protocol(
            &c,
            &rho,
            &m,
            &Protocol::Systematic {
                offsets: vec![0.0, 0.1]
            },
            &RunConfig::new(1, 0)
        )
        .is_err());
        assert!(run_protocol(&c, &rho, &m, &Protocol::Resampled, &RunConfig::new(0, 0)).is_err());
    }

    #[test]
    fn resampled_mean_converges_to_averaged() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 0.05,
        };
        let c = toy.circuit(100).unwrap();
        let m = toy.coherence_observable();
        let rho = toy.initial_state();
        let avg = averaged_expectation(&c, &rho, &m).unwrap();
        let res = run_protocol(
            &c,
            &rho,
            &m,
            &Protocol::Resampled,
            &RunConfig::new(100_000, 99),
        )
        .unwrap();
        assert!(res.std_error > 0.0);
        assert!(
            (res.value - avg).abs() < 3.0 * res.std_error,
            "{} vs {avg} ± {}",
            res.value,
            res.std_error
        );

        // same for sigma_y, whose average is exactly zero
        let res = run_protocol(
            &c,
            &rho,
            &toy.observable(),
            &Protocol::Resampled,
            &RunConfig::new(100_000, 100),
        )
        .unwrap();
        assert!(res.value.abs() < 3.0 * res.std_error);
    }

    #[test]
    fn resampled_with_shot_noise_is_unbiased() {
        let toy = ToyModel {
            theta: 0.1,
            epsilon: 0.05,
        };
        let c = toy.circuit(20).unwrap();
        let m = toy.coherence_observable();
        let rho = toy.initial_state();
        let avg = averaged_expectation(&c, &rho, &m).unwrap();
        let cfg = RunConfig {
            shots: 40_000,
            seed: 5,
            shot_noise: true,
        };
        let res = run_protocol(&c, &rho, &m, &Protocol::Resampled, &cfg).unwrap();
        assert!((res.value - avg).abs() < 3.0 * res.std_error);
        // outcomes are eigenvalues of sigma_x
        assert!(res.std_error > 1e-3);
    }

    #[test]
    fn fixed_realization_rms_is_a_random_walk() {
        let eps = 1e-3;
        let toy = ToyModel {
            theta: 0.0,
            epsilon: eps,
        };
        let seeds = 2000;
        for n in [16, 100, 400] {
            let rms = sweep_point(&toy, n, SweepProtocol::FixedRealization { seeds }, 3).unwrap();
            let expected = 2.0 * eps * (n as f64).sqrt();
            // relative sampling error of an RMS over `seeds` Gaussian draws is ~ 1/sqrt(2 seeds)
            assert!(
                (rms / expected - 1.0).abs() < 5.0 / (2.0 * seeds as f64).sqrt(),
                "n {n} rms {rms}"
            );
        }
    }

    #[test]
    fn fixed_realization_run_matches_single_realization() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 0.01,
        };
        let c = toy.circuit(30).unwrap();
        let res = run_protocol(
            &c,
            &toy.initial_state(),
            &toy.observable(),
            &Protocol::FixedRealization,
            &RunConfig::new(50, 8),
        )
        .unwrap();
        assert_eq!(res.std_error, 0.0);
        assert_eq!(res.shots, 50);
        // the realized angle is an even multiple of eps in [-30 eps, 30 eps]
        let k = (-res.value).asin() / 2.0 / 0.01;
        assert!(
            (k - k.round()).abs() < 1e-6 && k.abs() <= 30.0 + 1e-9 && (k.round() as i64) % 2 == 0
        );
    }

    #[test]
    fn exact_averaged_sweep_closed_form() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 1e-3,
        };
        for n in [10, 1000] {
            let v = sweep_point(&toy, n, SweepProtocol::ExactAveraged, 0).unwrap();
            let expected = 1.0 - (2.0 * toy.epsilon).cos().powi(n as i32);
            assert!((v - expected).abs() < 1e-13);
            let c = toy.circuit(n).unwrap();
            let rho = toy.initial_state();
            let tr = (&averaged_state(&c, &rho).unwrap() - &ideal_state(&c, &rho).unwrap())
                .hermitian_trace_norm()
                .unwrap();
            assert!((v - tr).abs() < 1e-13);
        }
    }

    #[test]
    fn resampled_sweep_approaches_exact_average() {
        for theta in [0.0, 0.3] {
            let toy = ToyModel {
                theta,
                epsilon: 0.05,
            };
            let exact = sweep_point(&toy, 50, SweepProtocol::ExactAveraged, 0).unwrap();
            let sampled =
                sweep_point(&toy, 50, SweepProtocol::Resampled { shots: 20_000 }, 1).unwrap();
            // per-shot terms are 2 sin^2 of a random-walk angle, relative spread ~ sqrt(2)
            let tol = 4.0 * exact * (2.0f64 / 20_000.0).sqrt();
            assert!((sampled - exact).abs() < tol, "{sampled} vs {exact}");
        }
    }

    #[test]
    fn resampled_statistic_is_quadratic_in_epsilon() {
        let stat = |eps: f64| {
            let toy = ToyModel {
                theta: 0.0,
                epsilon: eps,
            };
            sweep_point(&toy, 10, SweepProtocol::Resampled { shots: 4000 }, 2).unwrap()
        };
        let ratio = stat(2e-3) / stat(1e-3);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn sweeps_are_deterministic_and_reject_unsorted_ns() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 1e-2,
        };
        let p = SweepProtocol::FixedRealization { seeds: 50 };
        let a = scaling_sweep(&toy, &[10, 20, 40], p, 77).unwrap();
        let b = scaling_sweep(&toy, &[10, 20, 40], p, 77).unwrap();
        assert_eq!(a, b);
        assert!(scaling_sweep(&toy, &[20, 10], p, 77).is_err());
        assert!(scaling_sweep(&toy, &[10, 10], p, 77).is_err());
    }

    #[test]
    fn zero_epsilon_sweeps_vanish() {
        let toy = ToyModel {
            theta: 0.0,
            epsilon: 0.0,
        };
        for p in [
            SweepProtocol::Systematic,
            SweepProtocol::FixedRealization { seeds: 10 },
            SweepProtocol::Resampled { shots: 10 },
            SweepProtocol::ExactAveraged,
        ] {
            let s = scaling_sweep(&toy, &[10, 100], p, 1).unwrap();
            assert!(s.rows.iter().all(|r| r.statistic <= 1e-10));
            assert!(s.fit.is_none());
        }
    }

    #[test]
    fn sampled_mode_handles_wide_registers() {
        let width = 8;
        let mut c = Circuit::new(width).unwrap();
        c.push_exact(&[0], hadamard()).unwrap();
        for q in 0..width - 1 {
            c.push_exact(&[q, q + 1], cnot()).unwrap();
        }
        c.push_ensemble(&[3], pm(0.1, 0.0)).unwrap();
        let dim = 1 << width;
        let rho = Matrix::from_fn(dim, dim, |i, j| {
            if i == 0 && j == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        // GHZ parity Z...Z is +1 and unaffected by Z rotations
        let m = Matrix::real_diag(
            &(0..dim)
                .map(|i: usize| {
                    if i.count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect::<Vec<_>>(),
        );
        let res = run_protocol(&c, &rho, &m, &Protocol::Resampled, &RunConfig::new(4, 0)).unwrap();
        assert!((res.value - 1.0).abs() < 1e-12);
    }
}
