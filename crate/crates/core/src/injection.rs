//! T gates by state injection.
//!
//! An ancilla `u|0> + v|1>` is entangled with the control qubit by a CNOT
//! (control to ancilla), the ancilla is measured in the Z basis, and on outcome
//! 1 the control is corrected by `exp(i pi/4 sigma_Z)`. Averaged over outcomes
//! this is the channel with Kraus operators `diag(u, v)` and
//! `diag(v e^{i pi/4}, u e^{-i pi/4})`, equal to the T gate
//! `exp(i pi/8 sigma_Z)` for the magic ancilla `theta = tau = pi/4`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

use rand::Rng;

use crate::channel::Channel;
use crate::circuit::{
    ideal_state, validate_density, Circuit, DensityState, MAX_AVERAGED_WIDTH, MAX_SAMPLED_WIDTH,
};
use crate::ensemble::normalize_angle;
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, SlopeFit};
use crate::matrix::gates::{cnot, z_rotation};
use crate::matrix::{cis, Matrix, C64};
use crate::random::stream_rng;

/// `e^{i pi/8}`
pub const OMEGA: C64 = C64::new(0.923_879_532_511_286_7, 0.382_683_432_365_089_8);

/// Ancilla `cos(tau) e^{i theta/2} |0> + sin(tau) e^{-i theta/2} |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaState {
    pub theta: f64,
    pub tau: f64,
}

impl AncillaState {
    pub fn new(theta: f64, tau: f64) -> Result<Self> {
        if !theta.is_finite() || !tau.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { theta, tau })
    }

    /// The magic state, `theta = tau = pi/4`.
    pub fn perfect() -> Self {
        Self {
            theta: FRAC_PI_4,
            tau: FRAC_PI_4,
        }
    }

    pub fn u(&self) -> C64 {
        cis(self.theta / 2.0) * self.tau.cos()
    }

    pub fn v(&self) -> C64 {
        cis(-self.theta / 2.0) * self.tau.sin()
    }

    pub fn vector(&self) -> [C64; 2] {
        [self.u(), self.v()]
    }

    /// `theta - pi/4` wrapped into `(-pi, pi]`.
    pub fn theta_offset(&self) -> f64 {
        normalize_angle(self.theta - FRAC_PI_4)
    }
}

/// Ancillas drawn uniformly, one per injection.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaEnsemble {
    ancillas: Vec<AncillaState>,
    mu2: f64,
    mu4: f64,
}

impl AncillaEnsemble {
    pub fn new(ancillas: Vec<AncillaState>) -> Result<Self> {
        if ancillas.is_empty() {
            return Err(Error::InvalidEnsemble("ancilla ensemble is empty".into()));
        }
        let n = ancillas.len() as f64;
        let mu2 = ancillas
            .iter()
            .map(|a| a.theta_offset().powi(2))
            .sum::<f64>()
            / n;
        let mu4 = ancillas
            .iter()
            .map(|a| a.theta_offset().powi(4))
            .sum::<f64>()
            / n;
        Ok(Self { ancillas, mu2, mu4 })
    }

    pub fn ancillas(&self) -> &[AncillaState] {
        &self.ancillas
    }

    /// Mean of `(theta - pi/4)^2`.
    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// Mean of `(theta - pi/4)^4`.
    pub fn mu4(&self) -> f64 {
        self.mu4
    }

    /// `S mu2 + 2 S mu4` for `S` injections.
    pub fn trace_distance_bound(&self, injections: usize) -> f64 {
        let s = injections as f64;
        s * self.mu2 + 2.0 * s * self.mu4
    }

    pub fn averaged_channel(&self) -> Result<Channel> {
        let w = (1.0 / self.ancillas.len() as f64).sqrt();
        let ops: Vec<Matrix> = self
            .ancillas
            .iter()
            .flat_map(|a| {
                let (k1, k2) = injection_kraus(a);
                [k1.scale_real(w), k2.scale_real(w)]
            })
            .collect();
        Channel::from_kraus(&ops)
    }

    fn draw(&self, rng: &mut impl Rng) -> &AncillaState {
        &self.ancillas[rng.random_range(0..self.ancillas.len())]
    }
}

/// `exp(i pi/8 sigma_Z)`
pub fn t_gate() -> Matrix {
    z_rotation(FRAC_PI_8)
}

/// Correction applied after outcome 1, `exp(i pi/4 sigma_Z)`.
pub fn s_correction() -> Matrix {
    z_rotation(FRAC_PI_4)
}

pub fn t_channel() -> Channel {
    Channel::from_unitary(&t_gate()).expect("T is unitary")
}

/// `(diag(u, v), diag(v e^{i pi/4}, u e^{-i pi/4}))`
pub fn injection_kraus(a: &AncillaState) -> (Matrix, Matrix) {
    let (u, v) = (a.u(), a.v());
    let w = cis(FRAC_PI_4);
    (Matrix::diag(&[u, v]), Matrix::diag(&[v * w, u * w.conj()]))
}

pub fn injection_channel(a: &AncillaState) -> Channel {
    let (k1, k2) = injection_kraus(a);
    Channel::from_kraus(&[k1, k2]).expect("injection Kraus pair is complete")
}

/// Diamond-norm bound on the distance from the injection channel to the T
/// gate: `2 |omega - (u + omega^2 v)/sqrt 2| + (1/2) |u - v e^{i pi/4}|^2`.
pub fn injection_bound(a: &AncillaState) -> f64 {
    let (u, v) = (a.u(), a.v());
    let coherent = (OMEGA - (u + OMEGA * OMEGA * v) / SQRT_2).norm();
    let spread = (u - v * cis(FRAC_PI_4)).norm_sqr() / 4.0;
    2.0 * coherent + 2.0 * spread
}

/// One outcome of the injection circuit.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcome: u8,
    pub probability: f64,
    /// Normalized, corrected control state; `None` when the outcome has
    /// probability zero.
    pub state: Option<Matrix>,
}

fn partial_trace_ancilla(joint: &Matrix) -> Matrix {
    Matrix::from_fn(2, 2, |i, j| {
        joint[(2 * i, 2 * j)] + joint[(2 * i + 1, 2 * j + 1)]
    })
}

/// Both measurement branches of the injection circuit run on `control ⊗ ancilla`.
pub fn protocol_branches(a: &AncillaState, control_rho: &Matrix) -> Result<[Branch; 2]> {
    validate_density(control_rho, 2)?;
    let anc = Matrix::projector(&a.vector());
    let joint = control_rho.kron(&anc);
    let cx = cnot();
    let entangled = &(&cx * &joint) * &cx.adjoint();
    let i2 = Matrix::identity(2);
    let branch = |outcome: u8| {
        let mut proj = [C64::new(0.0, 0.0); 2];
        proj[outcome as usize] = C64::new(1.0, 0.0);
        let p = i2.kron(&Matrix::projector(&proj));
        let post = partial_trace_ancilla(&(&(&p * &entangled) * &p));
        let probability = post.trace().re.max(0.0);
        let state = (probability > 0.0).then(|| {
            let s = post.scale_real(1.0 / probability);
            if outcome == 1 {
                let c = s_correction();
                &(&c * &s) * &c.adjoint()
            } else {
                s
            }
        });
        Branch {
            outcome,
            probability,
            state,
        }
    };
    Ok([branch(0), branch(1)])
}

/// Outcome-probability-weighted average of both branches.
pub fn protocol_average(a: &AncillaState, control_rho: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(2, 2);
    for b in protocol_branches(a, control_rho)? {
        if let Some(s) = b.state {
            out = &out + &s.scale_real(b.probability);
        }
    }
    Ok(out)
}

/// Runs the injection circuit once with a Born-rule measurement.
pub fn protocol_simulate(
    a: &AncillaState,
    control_rho: &Matrix,
    rng: &mut impl Rng,
) -> Result<(u8, Matrix)> {
    let [b0, b1] = protocol_branches(a, control_rho)?;
    let r: f64 = rng.random();
    let pick = if r < b0.probability { b0 } else { b1 };
    match pick.state {
        Some(s) => Ok((pick.outcome, s)),
        None => Err(Error::Decomposition(
            "sampled a zero-probability outcome".into(),
        )),
    }
}

/// Bound values along the ray `(pi/4, pi/4) + s (d_theta, d_tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSweep {
    pub direction: (f64, f64),
    /// `(s, bound)` with `s` log-spaced.
    pub rows: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
}

pub fn bound_sweep(
    direction: (f64, f64),
    s_min: f64,
    s_max: f64,
    points: usize,
) -> Result<BoundSweep> {
    if !(s_min > 0.0 && s_max > s_min && s_min.is_finite() && s_max.is_finite()) {
        return Err(Error::InvalidProtocol(format!(
            "sweep range must satisfy 0 < s_min < s_max, got [{s_min}, {s_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidProtocol(
            "sweep needs at least two points".into(),
        ));
    }
    let norm = direction.0.hypot(direction.1);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidProtocol(
            "sweep direction must be nonzero".into(),
        ));
    }
    let dir = (direction.0 / norm, direction.1 / norm);
    let ratio = (s_max / s_min).ln() / (points - 1) as f64;
    let rows: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let s = s_min * (ratio * k as f64).exp();
            let a = AncillaState {
                theta: FRAC_PI_4 + s * dir.0,
                tau: FRAC_PI_4 + s * dir.1,
            };
            (s, injection_bound(&a))
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(BoundSweep {
        direction: dir,
        fit: fit_loglog(&xs, &ys).ok(),
        rows,
    })
}

/// `bound / s^2` along a unit direction at a small step, the leading
/// second-order coefficient of the bound in that direction.
pub fn second_order_coefficient(direction: (f64, f64), s: f64) -> f64 {
    let norm = direction.0.hypot(direction.1);
    let a = AncillaState {
        theta: FRAC_PI_4 + s * direction.0 / norm,
        tau: FRAC_PI_4 + s * direction.1 / norm,
    };
    injection_bound(&a) / (s * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InjectionMode {
    /// Every T slot replaced by the uniform mixture of injection channels.
    ExactAveraged,
    /// Mean state over `shots` runs, each drawing ancillas and measurement
    /// outcomes afresh.
    Sampled { shots: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct InjectedRun {
    pub sigma: Matrix,
    /// `||sigma - rho_ideal||_1`
    pub trace_distance: f64,
    pub injections: usize,
}

/// Replaces each T slot of `c` by state injection with ancillas from `ens`.
/// Other slots run their ideal gate.
pub fn simulate_injected_circuit(
    c: &Circuit,
    rho: &Matrix,
    ens: &AncillaEnsemble,
    mode: InjectionMode,
) -> Result<InjectedRun> {
    let injections = c.t_slot_count();
    if injections == 0 {
        return Err(Error::InvalidCircuit(
            "circuit has no T slots to inject".into(),
        ));
    }
    let cap = match mode {
        InjectionMode::ExactAveraged => MAX_AVERAGED_WIDTH,
        InjectionMode::Sampled { .. } => MAX_SAMPLED_WIDTH,
    };
    if c.width() > cap {
        return Err(Error::WidthCap {
            mode: "injected circuit simulation",
            width: c.width(),
            max: cap,
            hint: "use sampled mode or a narrower register",
        });
    }
    let ideal = ideal_state(c, rho)?;
    let start = DensityState::from_matrix(rho);
    let sigma = match mode {
        InjectionMode::ExactAveraged => {
            let w = 1.0 / ens.ancillas.len() as f64;
            let kraus: Vec<Matrix> = ens
                .ancillas
                .iter()
                .flat_map(|a| {
                    let (k1, k2) = injection_kraus(a);
                    [k1, k2]
                })
                .collect();
            let mut st = start;
            for slot in c.slots() {
                if slot.is_t_slot() {
                    st.conjugate_sum(kraus.iter().map(|k| (w, k)), slot.placement());
                } else {
                    st.conjugate(slot.target(), slot.placement());
                }
            }
            st.to_matrix()
        }
        InjectionMode::Sampled { shots, seed } => {
            if shots == 0 {
                return Err(Error::InvalidProtocol("shots must be at least 1".into()));
            }
            let mut rng = stream_rng(seed, 0);
            let mut mean = start.zeroed();
            for _ in 0..shots {
                let mut st = start.clone();
                for slot in c.slots() {
                    if !slot.is_t_slot() {
                        st.conjugate(slot.target(), slot.placement());
                        continue;
                    }
                    let (k1, k2) = injection_kraus(ens.draw(&mut rng));
                    let mut b0 = st.clone();
                    b0.conjugate(&k1, slot.placement());
                    let p0 = b0.trace();
                    let r: f64 = rng.random();
                    st = if r < p0 {
                        b0.scale(1.0 / p0);
                        b0
                    } else {
                        st.conjugate(&k2, slot.placement());
                        let p1 = st.trace();
                        st.scale(1.0 / p1);
                        st
                    };
                }
                mean.add_scaled(&st, 1.0 / shots as f64);
            }
            mean.to_matrix()
        }
    };
    let trace_distance = (&sigma - &ideal).hermitian_trace_norm()?;
    Ok(InjectedRun {
        sigma,
        trace_distance,
        injections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::diamond_norm_diff;
    use crate::ensemble::ZRotationSpec;
    use crate::matrix::gates::*;
    use crate::random::{haar_unitary, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(8)
    }

    fn completeness(a: &AncillaState) -> f64 {
        let (k1, k2) = injection_kraus(a);
        let sum = &(&k1.adjoint() * &k1) + &(&k2.adjoint() * &k2);
        sum.max_abs_diff(&Matrix::identity(2))
    }

    #[test]
    fn omega_constant() {
        assert!((OMEGA - cis(FRAC_PI_8)).norm() < 1e-16);
    }

    #[test]
    fn ancilla_is_normalized() {
        let mut r = rng();
        for _ in 0..1000 {
            let a =
                AncillaState::new(r.random_range(-7.0..7.0), r.random_range(-7.0..7.0)).unwrap();
            assert!((a.u().norm_sqr() + a.v().norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert!(AncillaState::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn kraus_examples() {
        let (k1, k2) = injection_kraus(&AncillaState::perfect());
        let t = t_gate().scale_real(1.0 / SQRT_2);
        assert!(k1.max_abs_diff(&t) < 1e-15);
        assert!(k2.max_abs_diff(&t) < 1e-15);

        let theta: f64 = 0.37;
        let (k1, k2) = injection_kraus(&AncillaState::new(theta, 0.0).unwrap());
        let zero = C64::new(0.0, 0.0);
        assert!(k1.max_abs_diff(&Matrix::diag(&[cis(theta / 2.0), zero])) < 1e-15);
        assert!(k2.max_abs_diff(&Matrix::diag(&[zero, cis(theta / 2.0 - FRAC_PI_4)])) < 1e-15);
        assert!(completeness(&AncillaState::new(theta, 0.0).unwrap()) < 1e-12);

        let mut r = rng();
        for _ in 0..1000 {
            let a =
                AncillaState::new(r.random_range(-4.0..4.0), r.random_range(-4.0..4.0)).unwrap();
            assert!(completeness(&a) < 1e-12);
        }
    }

    #[test]
    fn perfect_injection_is_t() {
        let d =
            diamond_norm_diff(&injection_channel(&AncillaState::perfect()), &t_channel()).unwrap();
        assert!(d <= 1e-10, "{d}");
        assert!(injection_bound(&AncillaState::perfect()) < 1e-15);
    }

    #[test]
    fn imperfect_injection_within_bound() {
        let a = AncillaState::new(FRAC_PI_4 + 0.1, FRAC_PI_4).unwrap();
        let d = diamond_norm_diff(&injection_channel(&a), &t_channel()).unwrap();
        let b = injection_bound(&a);
        assert!(d > 0.0);
        assert!(d <= b + 1e-9, "{d} > {b}");
        // at tau = pi/4 the channel dephases by ±0.05 around T
        assert!((d - 2.0 * 0.05f64.sin().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn injection_preserves_trace() {
        let mut r = rng();
        for _ in 0..20 {
            let a =
                AncillaState::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)).unwrap();
            let rho = random_density(2, &mut r);
            let out = injection_channel(&a).apply(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_protocol_applies_t_on_both_branches() {
        let mut r = rng();
        let rho = random_density(2, &mut r);
        let t = t_gate();
        let expected = &(&t * &rho) * &t.adjoint();
        for b in protocol_branches(&AncillaState::perfect(), &rho).unwrap() {
            assert!((b.probability - 0.5).abs() < 1e-12);
            assert!(b.state.unwrap().max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn tau_quarter_branches_are_z_rotations() {
        let mut r = rng();
        let rho = random_density(2, &mut r);
        for &theta in &[0.0, 0.3, FRAC_PI_4, 1.7] {
            let a = AncillaState::new(theta, FRAC_PI_4).unwrap();
            let [b0, b1] = protocol_branches(&a, &rho).unwrap();
            for (b, angle) in [(b0, theta / 2.0), (b1, FRAC_PI_4 - theta / 2.0)] {
                assert!((b.probability - 0.5).abs() < 1e-12);
                let g = z_rotation(angle);
                let expected = &(&g * &rho) * &g.adjoint();
                assert!(b.state.unwrap().max_abs_diff(&expected) < 1e-12);
            }
        }
    }

    #[test]
    fn branch_average_is_the_kraus_channel() {
        let mut r = rng();
        let basis = [
            Matrix::real_diag(&[1.0, 0.0]),
            Matrix::real_diag(&[0.0, 1.0]),
            plus_state(),
            {
                let s = [C64::new(1.0 / SQRT_2, 0.0), C64::new(0.0, 1.0 / SQRT_2)];
                Matrix::projector(&s)
            },
        ];
        for _ in 0..50 {
            let a =
                AncillaState::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)).unwrap();
            let chan = injection_channel(&a);
            for rho in basis.iter().cloned().chain([random_density(2, &mut r)]) {
                let avg = protocol_average(&a, &rho).unwrap();
                assert!(avg.max_abs_diff(&chan.apply(&rho).unwrap()) < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_protocol_converges_to_channel() {
        let mut r = rng();
        let a = AncillaState::new(0.6, 0.5).unwrap();
        let rho = random_density(2, &mut r);
        let target = injection_channel(&a).apply(&rho).unwrap();
        let n = 100_000;
        let mut mean = Matrix::zeros(2, 2);
        let mut ones = 0usize;
        for _ in 0..n {
            let (o, s) = protocol_simulate(&a, &rho, &mut r).unwrap();
            ones += o as usize;
            mean = &mean + &s;
        }
        let mean = mean.scale_real(1.0 / n as f64);
        let p1 = protocol_branches(&a, &rho).unwrap()[1].probability;
        let sigma = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p1).abs() < 4.0 * sigma);
        // entries of a two-point mixture fluctuate at most like the outcome frequency
        assert!(mean.max_abs_diff(&target) < 4.0 * sigma);
    }

    #[test]
    fn protocol_rejects_invalid_state() {
        let mut r = rng();
        let bad = Matrix::real_diag(&[0.7, 0.7]);
        assert!(protocol_simulate(&AncillaState::perfect(), &bad, &mut r).is_err());
    }

    #[test]
    fn bound_dominates_diamond_distance() {
        let mut r = rng();
        for _ in 0..100 {
            let a = AncillaState::new(
                FRAC_PI_4 + r.random_range(-0.3..0.3),
                FRAC_PI_4 + r.random_range(-0.3..0.3),
            )
            .unwrap();
            let d = diamond_norm_diff(&injection_channel(&a), &t_channel()).unwrap();
            assert!(d <= injection_bound(&a) + 1e-6);
        }
    }

    #[test]
    fn bound_has_zero_gradient_at_magic_point() {
        let h = 1e-4;
        for dir in [(1.0, 0.0), (0.0, 1.0)] {
            let at = |s: f64| {
                injection_bound(&AncillaState {
                    theta: FRAC_PI_4 + s * dir.0,
                    tau: FRAC_PI_4 + s * dir.1,
                })
            };
            let grad = (at(h) - at(-h)) / (2.0 * h);
            assert!(grad.abs() <= 1e-6, "{dir:?}: {grad}");
        }
    }

    #[test]
    fn bound_is_second_order() {
        for k in 0..6 {
            let phi = k as f64 * std::f64::consts::PI / 3.0 + 0.2;
            let sweep = bound_sweep((phi.cos(), phi.sin()), 1e-3, 1e-1, 9).unwrap();
            let fit = sweep.fit.unwrap();
            assert!(
                fit.within(2.0, 0.05),
                "direction {phi}: slope {}",
                fit.slope
            );
            let c = second_order_coefficient((phi.cos(), phi.sin()), 1e-3);
            let c2 = second_order_coefficient((phi.cos(), phi.sin()), 5e-4);
            assert!(c > 0.0 && ((c - c2) / c).abs() < 1e-2);
        }
        assert!(bound_sweep((0.0, 0.0), 1e-3, 1e-1, 5).is_err());
        assert!(bound_sweep((1.0, 0.0), 1e-1, 1e-3, 5).is_err());
    }

    #[test]
    fn tau_quarter_matches_two_angle_ensemble() {
        let mut r = rng();
        for _ in 0..20 {
            let theta = FRAC_PI_4 + r.random_range(-0.5..0.5);
            let a = AncillaState::new(theta, FRAC_PI_4).unwrap();
            let spec =
                ZRotationSpec::new(FRAC_PI_8, vec![theta / 2.0, FRAC_PI_4 - theta / 2.0]).unwrap();
            let ens = spec.ensemble_with_probs(&[0.5, 0.5]).unwrap();

            let (k1, k2) = injection_kraus(&a);
            let w_bar = (&k1 + &k2).scale_real(0.5);
            assert!(ens.mean_unitary().max_abs_diff(&w_bar.scale_real(SQRT_2)) < 1e-14);
            let delta_inj = 2.0 * (&k1 - &w_bar).operator_norm().unwrap().powi(2);
            assert!((ens.delta() - delta_inj).abs() < 1e-14);
            assert!((ens.lemma1_bound() - injection_bound(&a)).abs() < 1e-13);

            let d = diamond_norm_diff(&injection_channel(&a), &ens.averaged_channel().unwrap())
                .unwrap();
            assert!(d < 1e-10);
        }
    }

    #[test]
    fn ensemble_moments() {
        let ens = AncillaEnsemble::new(vec![
            AncillaState::new(FRAC_PI_4 + 0.02, FRAC_PI_4).unwrap(),
            AncillaState::new(FRAC_PI_4 - 0.02, FRAC_PI_4).unwrap(),
        ])
        .unwrap();
        assert!((ens.mu2() - 4e-4).abs() < 1e-15);
        assert!((ens.mu4() - 1.6e-7).abs() < 1e-18);
        assert!(AncillaEnsemble::new(vec![]).is_err());

        let mut r = rng();
        for _ in 0..100 {
            let ancillas = (0..5)
                .map(|_| AncillaState::new(r.random_range(-10.0..10.0), 0.3).unwrap())
                .collect();
            let ens = AncillaEnsemble::new(ancillas).unwrap();
            assert!(ens.mu4() <= std::f64::consts::PI.powi(2) * ens.mu2() + 1e-12);
        }
    }

    fn t_circuit(injections: usize, r: &mut ChaCha8Rng) -> Circuit {
        let mut c = Circuit::new(2).unwrap();
        c.push_exact(&[0], hadamard()).unwrap();
        c.push_exact(&[1], hadamard()).unwrap();
        for k in 0..injections {
            c.push_t(k % 2).unwrap();
            if k % 3 == 0 {
                c.push_exact(&[0, 1], cnot()).unwrap();
            }
            c.push_exact(&[k % 2], haar_unitary(2, r)).unwrap();
        }
        c
    }

    #[test]
    fn perfect_ancillas_reproduce_ideal_circuit() {
        let mut r = rng();
        let c = t_circuit(6, &mut r);
        let rho = random_density(4, &mut r);
        let ens = AncillaEnsemble::new(vec![AncillaState::perfect()]).unwrap();
        let run = simulate_injected_circuit(&c, &rho, &ens, InjectionMode::ExactAveraged).unwrap();
        assert!(run.trace_distance < 1e-9);
        assert_eq!(run.injections, 6);
        let run = simulate_injected_circuit(
            &c,
            &rho,
            &ens,
            InjectionMode::Sampled { shots: 10, seed: 1 },
        )
        .unwrap();
        assert!(run.trace_distance < 1e-9);
    }

    #[test]
    fn twenty_injections_within_mu_bound() {
        let mut r = rng();
        let c = t_circuit(20, &mut r);
        let rho = random_density(4, &mut r);
        let independent = AncillaEnsemble::new(vec![
            AncillaState::new(FRAC_PI_4 + 0.02, FRAC_PI_4).unwrap(),
            AncillaState::new(FRAC_PI_4 - 0.02, FRAC_PI_4).unwrap(),
        ])
        .unwrap();
        let correlated =
            AncillaEnsemble::new(vec![AncillaState::new(FRAC_PI_4 + 0.02, FRAC_PI_4).unwrap()])
                .unwrap();
        for ens in [independent, correlated] {
            let run =
                simulate_injected_circuit(&c, &rho, &ens, InjectionMode::ExactAveraged).unwrap();
            assert!(run.trace_distance > 0.0);
            assert!(run.trace_distance <= ens.trace_distance_bound(20));
            assert!(run.trace_distance <= 20.0 * 4e-4 + 2.0 * 20.0 * 1.6e-7);
        }
    }

    #[test]
    fn sampled_injection_approaches_exact() {
        let mut r = rng();
        let c = t_circuit(4, &mut r);
        let rho = random_density(4, &mut r);
        let ens = AncillaEnsemble::new(vec![
            AncillaState::new(FRAC_PI_4 + 0.3, FRAC_PI_4 - 0.2).unwrap(),
            AncillaState::new(FRAC_PI_4 - 0.25, FRAC_PI_4 + 0.1).unwrap(),
        ])
        .unwrap();
        let exact =
            simulate_injected_circuit(&c, &rho, &ens, InjectionMode::ExactAveraged).unwrap();
        let sampled = simulate_injected_circuit(
            &c,
            &rho,
            &ens,
            InjectionMode::Sampled {
                shots: 20_000,
                seed: 4,
            },
        )
        .unwrap();
        assert!(sampled.sigma.max_abs_diff(&exact.sigma) < 0.02);
        assert!((sampled.sigma.trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_mode_matches_averaged_channel() {
        let mut r = rng();
        let ens = AncillaEnsemble::new(vec![
            AncillaState::new(0.5, 0.9).unwrap(),
            AncillaState::new(1.1, 0.6).unwrap(),
        ])
        .unwrap();
        let mut c = Circuit::new(1).unwrap();
        c.push_t(0).unwrap();
        let rho = random_density(2, &mut r);
        let run = simulate_injected_circuit(&c, &rho, &ens, InjectionMode::ExactAveraged).unwrap();
        let direct = ens.averaged_channel().unwrap().apply(&rho).unwrap();
        assert!(run.sigma.max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn circuits_without_t_slots_rejected() {
        let mut c = Circuit::new(1).unwrap();
        c.push_exact(&[0], t_gate()).unwrap();
        assert!(!c.slots()[0].is_t_slot());
        let ens = AncillaEnsemble::new(vec![AncillaState::perfect()]).unwrap();
        assert!(matches!(
            simulate_injected_circuit(&c, &plus_state(), &ens, InjectionMode::ExactAveraged),
            Err(Error::InvalidCircuit(_))
        ));
    }
}
