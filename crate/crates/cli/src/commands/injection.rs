//! Circuits whose T gates are implemented by state injection.

use std::f64::consts::PI;

use incoherent::circuit::Circuit;
use incoherent::injection::{
    bound_sweep, simulate_injected_circuit, AncillaEnsemble, InjectionMode,
};
use incoherent::matrix::gates::{cnot, hadamard};
use incoherent::Matrix;
use serde_json::json;

use super::{read_input, Context, InputError, Report, EXACT_SLACK};
use crate::config::InjectionModeName;
use crate::output::{num, Table};
use crate::specfile::{build_circuit, inferred_width, parse_ancillas, parse_gate_spec};

pub const HEADER: &[&str] = &[
    "kind",
    "injections",
    "mu2",
    "mu4",
    "direction",
    "s",
    "distance",
    "bound",
    "check",
];

/// Hadamards on every qubit, then `injections` T slots cycling over the
/// qubits with a CNOT after every second one.
pub fn default_circuit(width: usize, injections: usize) -> Result<Circuit, InputError> {
    let build = || -> incoherent::Result<Circuit> {
        let mut c = Circuit::new(width)?;
        for q in 0..width {
            c.push_exact(&[q], hadamard())?;
        }
        for k in 0..injections {
            let q = k % width;
            c.push_t(q)?;
            if width > 1 && k % 2 == 1 {
                c.push_exact(&[q, (q + 1) % width], cnot())?;
            }
        }
        Ok(c)
    };
    build().map_err(|e| InputError(e.to_string()))
}

fn zero_state(width: usize) -> Matrix {
    let dim = 1usize << width;
    let mut d = vec![0.0; dim];
    d[0] = 1.0;
    Matrix::real_diag(&d)
}

pub fn run(ctx: &Context) -> Result<Report, InputError> {
    let cfg = ctx
        .cfg
        .injection
        .as_ref()
        .ok_or_else(|| InputError("config has no [injection] section".into()))?;
    let (text, bytes) = read_input(&cfg.ancillas)?;
    let ancillas = parse_ancillas(&text)
        .map_err(|e| InputError(format!("{}: {e}", cfg.ancillas.display())))?;
    let ens = AncillaEnsemble::new(ancillas).map_err(|e| InputError(e.to_string()))?;

    let mut inputs = vec![(cfg.ancillas.clone(), bytes)];
    let circuit = match &cfg.circuit {
        Some(path) => {
            let (text, bytes) = read_input(path)?;
            inputs.push((path.clone(), bytes));
            let entries = parse_gate_spec(&text)
                .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            let width = inferred_width(&entries).max(cfg.width);
            build_circuit(&entries, width)
                .map_err(|m| InputError(format!("{}: {m}", path.display())))?
        }
        None => default_circuit(cfg.width, cfg.injections)?,
    };
    let shots = ctx.shots.unwrap_or(cfg.shots);
    let mode = match cfg.mode {
        InjectionModeName::Exact => InjectionMode::ExactAveraged,
        InjectionModeName::Sampled => InjectionMode::Sampled {
            shots,
            seed: ctx.seed,
        },
    };
    let sweep = ctx
        .sweep
        .or_else(|| cfg.sweep.as_ref().map(|s| (s.s_min, s.s_max, s.points)));
    let directions = cfg.sweep.as_ref().map_or(8, |s| s.directions);

    let mut report = Report::new(
        Table::new(HEADER),
        json!({
            "mode": cfg.mode,
            "shots": shots,
            "width": circuit.width(),
            "injections": circuit.t_slot_count(),
            "sweep": sweep,
            "directions": directions,
        }),
    );
    report.inputs = inputs;

    let rho = zero_state(circuit.width());
    let run = simulate_injected_circuit(&circuit, &rho, &ens, mode)
        .map_err(|e| InputError(e.to_string()))?;
    let bound = ens.trace_distance_bound(run.injections);
    // a finite-shot mean state carries sampling noise, so only the exact
    // average is checked against the bound
    let check = match mode {
        InjectionMode::ExactAveraged => report.check(run.trace_distance <= bound + EXACT_SLACK),
        InjectionMode::Sampled { .. } => String::new(),
    };
    report.table.push(vec![
        "run".into(),
        run.injections.to_string(),
        num(ens.mu2()),
        num(ens.mu4()),
        String::new(),
        String::new(),
        num(run.trace_distance),
        num(bound),
        check,
    ]);

    if let Some((s_min, s_max, points)) = sweep {
        if directions == 0 {
            return Err(InputError("sweep needs at least one direction".into()));
        }
        for k in 0..directions {
            let angle = 2.0 * PI * k as f64 / directions as f64 + 0.1;
            let sw = bound_sweep((angle.cos(), angle.sin()), s_min, s_max, points)
                .map_err(|e| InputError(e.to_string()))?;
            for (s, b) in &sw.rows {
                report.table.push(vec![
                    "sweep".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    num(angle),
                    num(*s),
                    String::new(),
                    num(*b),
                    String::new(),
                ]);
            }
            report.table.footers.push(match sw.fit {
                Some(f) => format!(
                    "fit direction={} slope={:.6} ci95_low={:.6} ci95_high={:.6} points={}",
                    num(angle),
                    f.slope,
                    f.slope_ci95.0,
                    f.slope_ci95.1,
                    f.points_used
                ),
                None => format!("fit direction={} slope=none", num(angle)),
            });
        }
    }
    Ok(report)
}
