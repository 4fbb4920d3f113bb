//! Per-gate ensemble bounds and their circuit total.

use incoherent::channel::diamond_norm_diff;
use incoherent::MixedUnitaryEnsemble;
use serde_json::json;

use super::{read_input, Context, InputError, Report, DIAMOND_SLACK};
use crate::output::{num, Table};
use crate::specfile::{parse_gate_spec, GateKind};

pub const HEADER: &[&str] = &[
    "index",
    "name",
    "line",
    "qubits",
    "repeat",
    "target",
    "options",
    "probs",
    "delta",
    "mean_deviation",
    "lemma1_bound",
    "weighted_bound",
    "diamond",
    "check",
    "status",
];

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

pub fn run(ctx: &Context) -> Result<Report, InputError> {
    let cfg = ctx
        .cfg
        .bounds
        .as_ref()
        .ok_or_else(|| InputError("config has no [bounds] section".into()))?;
    let measure = ctx.measure_diamond || cfg.measure_diamond;
    let (text, bytes) = read_input(&cfg.spec)?;
    let entries =
        parse_gate_spec(&text).map_err(|e| InputError(format!("{}: {e}", cfg.spec.display())))?;

    let mut report = Report::new(Table::new(HEADER), json!({ "measure_diamond": measure }));
    report.inputs.push((cfg.spec.clone(), bytes));
    let mut total = 0.0;
    let mut total_valid = true;
    for (i, e) in entries.iter().enumerate() {
        let qubits = e
            .qubits
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let mut row = vec![
            (i + 1).to_string(),
            e.label(i),
            e.line.to_string(),
            qubits,
            e.repeat.to_string(),
        ];
        let resolved: Result<Option<MixedUnitaryEnsemble>, String> = match &e.kind {
            GateKind::Ensemble { probs, .. } => e
                .z_spec()
                .expect("ensemble entry")
                .and_then(|spec| match probs {
                    Some(p) => spec.ensemble_with_probs(p),
                    None => spec.ensemble(),
                })
                .map(Some)
                .map_err(|err| err.to_string()),
            _ => Ok(None),
        };
        let (target, options) = match &e.kind {
            GateKind::Ensemble {
                target, options, ..
            } => (num(*target), join(options)),
            GateKind::Rotation(t) => (num(*t), String::new()),
            GateKind::Named(g) => (format!("{g:?}").to_lowercase(), String::new()),
        };
        row.push(target);
        row.push(options);
        match resolved {
            Err(msg) => {
                report.invalid += 1;
                total_valid = false;
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(format!("invalid: {msg}"));
            }
            Ok(ens) => {
                let (probs, delta, dev, bound, diamond) = match &ens {
                    Some(ens) => {
                        let diamond = if measure {
                            let d = diamond_norm_diff(
                                &ens.target_channel()
                                    .map_err(|e| InputError(e.to_string()))?,
                                &ens.averaged_channel()
                                    .map_err(|e| InputError(e.to_string()))?,
                            )
                            .map_err(|e| InputError(e.to_string()))?;
                            Some(d)
                        } else {
                            None
                        };
                        (
                            join(ens.probs()),
                            ens.delta(),
                            ens.mean_deviation(),
                            ens.lemma1_bound(),
                            diamond,
                        )
                    }
                    None => (String::new(), 0.0, 0.0, 0.0, measure.then_some(0.0)),
                };
                let weighted = bound * e.repeat as f64;
                total += weighted;
                row.push(probs);
                row.push(num(delta));
                row.push(num(dev));
                row.push(num(bound));
                row.push(num(weighted));
                match diamond {
                    Some(d) => {
                        row.push(num(d));
                        row.push(report.check(d <= bound + DIAMOND_SLACK));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
                row.push("ok".into());
            }
        }
        report.table.push(row);
    }
    let gates: usize = entries.iter().map(|e| e.repeat).sum();
    let mut row = vec![
        "total".to_string(),
        String::new(),
        String::new(),
        String::new(),
        gates.to_string(),
    ];
    row.extend(std::iter::repeat_n(String::new(), 6));
    row.push(if total_valid {
        num(total)
    } else {
        String::new()
    });
    row.push(String::new());
    row.push(String::new());
    row.push(if total_valid {
        "ok".into()
    } else {
        "incomplete: invalid gates".into()
    });
    report.table.push(row);
    Ok(report)
}
