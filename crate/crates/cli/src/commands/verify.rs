//! Averaged circuit expectations checked against the summed ensemble bound.

use incoherent::circuit::{
    averaged_expectation, ideal_expectation, run_protocol, Protocol, RunConfig, MAX_AVERAGED_WIDTH,
};
use incoherent::matrix::gates::{pauli_x, pauli_y, pauli_z, plus_state};
use incoherent::Matrix;
use rayon::prelude::*;
use serde_json::json;

use super::{read_input, Context, InputError, Report, EXACT_SLACK};
use crate::config::InitialState;
use crate::output::{num, Table};
use crate::specfile::{build_circuit, inferred_width, parse_gate_spec};

pub const HEADER: &[&str] = &[
    "observable",
    "ideal",
    "averaged",
    "error",
    "bound",
    "check",
    "mc_mean",
    "mc_std_error",
    "mc_within_3se",
];

pub fn pauli_string(s: &str, width: usize) -> Result<Matrix, InputError> {
    if s.chars().count() != width {
        return Err(InputError(format!(
            "observable `{s}` has {} letters for {width} qubits",
            s.chars().count()
        )));
    }
    let mut m = Matrix::identity(1);
    for c in s.chars() {
        let p = match c.to_ascii_uppercase() {
            'I' => Matrix::identity(2),
            'X' => pauli_x(),
            'Y' => pauli_y(),
            'Z' => pauli_z(),
            other => {
                return Err(InputError(format!(
                    "observable `{s}`: `{other}` is not one of I, X, Y, Z"
                )))
            }
        };
        m = m.kron(&p);
    }
    Ok(m)
}

fn default_observables(width: usize) -> Vec<String> {
    let pad = |head: &str| format!("{head}{}", "I".repeat(width - head.len()));
    if width == 1 {
        vec!["X".into(), "Y".into(), "Z".into()]
    } else {
        vec![pad("X"), pad("Y"), pad("ZZ")]
    }
}

fn initial_state(kind: InitialState, width: usize) -> Matrix {
    match kind {
        InitialState::Zero => {
            let mut d = vec![0.0; 1 << width];
            d[0] = 1.0;
            Matrix::real_diag(&d)
        }
        InitialState::Plus => (1..width).fold(plus_state(), |acc, _| acc.kron(&plus_state())),
    }
}

pub fn run(ctx: &Context) -> Result<Report, InputError> {
    let cfg = ctx
        .cfg
        .verify
        .as_ref()
        .ok_or_else(|| InputError("config has no [verify] section".into()))?;
    let (text, bytes) = read_input(&cfg.spec)?;
    let entries =
        parse_gate_spec(&text).map_err(|e| InputError(format!("{}: {e}", cfg.spec.display())))?;
    let width = cfg.width.unwrap_or_else(|| inferred_width(&entries));
    if width > MAX_AVERAGED_WIDTH {
        return Err(InputError(format!(
            "width {width} exceeds the exact averaged-evolution cap of {MAX_AVERAGED_WIDTH} qubits; \
             estimate by resampling on a narrower register instead"
        )));
    }
    let circuit = build_circuit(&entries, width)
        .map_err(|m| InputError(format!("{}: {m}", cfg.spec.display())))?;
    let names = cfg
        .observables
        .clone()
        .unwrap_or_else(|| default_observables(width));
    let observables = names
        .iter()
        .map(|s| pauli_string(s, width))
        .collect::<Result<Vec<_>, _>>()?;
    let rho = initial_state(cfg.initial, width);
    let shots = ctx.shots.or(cfg.shots);
    let bound = circuit.lemma2_bound();

    let results: Vec<_> = observables
        .par_iter()
        .enumerate()
        .map(|(k, m)| -> incoherent::Result<_> {
            let ideal = ideal_expectation(&circuit, &rho, m)?;
            let avg = averaged_expectation(&circuit, &rho, m)?;
            let scaled = bound * m.operator_norm()?;
            let mc = match shots {
                Some(s) => {
                    let seed = ctx.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                    Some(run_protocol(
                        &circuit,
                        &rho,
                        m,
                        &Protocol::Resampled,
                        &RunConfig::new(s, seed),
                    )?)
                }
                None => None,
            };
            Ok((ideal, avg, scaled, mc))
        })
        .collect::<incoherent::Result<_>>()
        .map_err(|e| InputError(e.to_string()))?;

    let mut report = Report::new(
        Table::new(HEADER),
        json!({
            "width": width,
            "initial": cfg.initial,
            "observables": names,
            "shots": shots,
            "slots": circuit.len(),
            "circuit_bound": bound,
        }),
    );
    report.inputs.push((cfg.spec.clone(), bytes));
    for (name, (ideal, avg, scaled, mc)) in names.iter().zip(results) {
        let err = (avg - ideal).abs();
        let check = report.check(err <= scaled + EXACT_SLACK);
        let (mean, se, within) = match mc {
            Some(r) => (
                num(r.value),
                num(r.std_error),
                ((r.value - avg).abs() <= 3.0 * r.std_error + EXACT_SLACK).to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        report.table.push(vec![
            name.clone(),
            num(ideal),
            num(avg),
            num(err),
            num(scaled),
            check,
            mean,
            se,
            within,
        ]);
    }
    Ok(report)
}
