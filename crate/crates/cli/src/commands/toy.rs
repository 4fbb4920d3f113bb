//! Coherent versus incoherent error growth in the single-qubit toy model.

use incoherent::circuit::{fit_rows, sweep_point, SweepProtocol, SweepRow, ToyModel};
use rayon::prelude::*;
use serde_json::json;

use super::{Context, InputError, Report};
use crate::config::ToyConfig;
use crate::output::{num, Table};

pub const HEADER: &[&str] = &["protocol", "epsilon", "theta", "n", "statistic"];

fn protocol(name: &str, cfg: &ToyConfig, shots: usize) -> Result<SweepProtocol, InputError> {
    Ok(match name {
        "systematic" => SweepProtocol::Systematic,
        "fixed_realization" => SweepProtocol::FixedRealization { seeds: cfg.seeds },
        "resampled" => SweepProtocol::Resampled { shots },
        "exact_averaged" => SweepProtocol::ExactAveraged,
        other => {
            return Err(InputError(format!(
                "unknown toy protocol `{other}` (expected systematic, fixed_realization, resampled or exact_averaged)"
            )))
        }
    })
}

pub fn run(ctx: &Context) -> Result<Report, InputError> {
    let cfg = ctx.cfg.toy.clone().unwrap_or_default();
    let shots = ctx.shots.unwrap_or(cfg.shots);
    let cfg = ToyConfig { shots, ..cfg };
    cfg.validate().map_err(|e| InputError(e.to_string()))?;
    let protocols = cfg
        .protocols
        .iter()
        .map(|p| protocol(p, &cfg, shots))
        .collect::<Result<Vec<_>, _>>()?;

    let (n_eps, n_ns) = (cfg.epsilons.len(), cfg.ns.len());
    let keys: Vec<(usize, usize, usize)> = (0..protocols.len())
        .flat_map(|p| (0..n_eps).flat_map(move |e| (0..n_ns).map(move |n| (p, e, n))))
        .collect();
    // order of `keys` fixes the row order regardless of scheduling
    let stats: Vec<f64> = keys
        .par_iter()
        .map(|&(p, e, n)| {
            let toy = ToyModel {
                theta: cfg.theta,
                epsilon: cfg.epsilons[e],
            };
            sweep_point(&toy, cfg.ns[n], protocols[p], ctx.seed)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| InputError(e.to_string()))?;

    let mut report = Report::new(
        Table::new(HEADER),
        json!({
            "theta": cfg.theta,
            "epsilons": cfg.epsilons,
            "ns": cfg.ns,
            "seeds": cfg.seeds,
            "shots": shots,
            "protocols": cfg.protocols,
        }),
    );
    for (&(p, e, n), s) in keys.iter().zip(&stats) {
        report.table.push(vec![
            protocols[p].tag().name().to_string(),
            num(cfg.epsilons[e]),
            num(cfg.theta),
            cfg.ns[n].to_string(),
            num(*s),
        ]);
    }

    let per_n = cfg.ns.len();
    let block = |p: usize, e: usize| {
        let start = (p * cfg.epsilons.len() + e) * per_n;
        &stats[start..start + per_n]
    };
    for (p, proto) in protocols.iter().enumerate() {
        let name = proto.tag().name();
        for (e, eps) in cfg.epsilons.iter().enumerate() {
            let rows: Vec<SweepRow> = cfg
                .ns
                .iter()
                .zip(block(p, e))
                .map(|(&n, &statistic)| SweepRow { n, statistic })
                .collect();
            report.table.footers.push(match fit_rows(&rows) {
                Some(f) => format!(
                    "fit protocol={name} epsilon={} slope={:.6} ci95_low={:.6} ci95_high={:.6} intercept={:.6} points={}",
                    num(*eps),
                    f.slope,
                    f.slope_ci95.0,
                    f.slope_ci95.1,
                    f.intercept,
                    f.points_used
                ),
                None => format!("fit protocol={name} epsilon={} slope=none points_above_floor<2", num(*eps)),
            });
        }
        for e in 1..cfg.epsilons.len() {
            let ratios: Vec<f64> = block(p, e - 1)
                .iter()
                .zip(block(p, e))
                .filter(|(a, b)| {
                    **a > incoherent::fit::NOISE_FLOOR && **b > incoherent::fit::NOISE_FLOOR
                })
                .map(|(a, b)| b / a)
                .collect();
            if !ratios.is_empty() {
                let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
                report.table.footers.push(format!(
                    "ratio protocol={name} epsilon={}->{} mean_ratio={mean:.6} points={}",
                    num(cfg.epsilons[e - 1]),
                    num(cfg.epsilons[e]),
                    ratios.len()
                ));
            }
        }
    }
    Ok(report)
}
