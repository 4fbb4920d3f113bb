//! Parsers for gate spec files and ancilla lists.
//!
//! The grammar is documented in `docs/formats.md`.

use std::f64::consts::PI;

use incoherent::circuit::Circuit;
use incoherent::ensemble::ZRotationSpec;
use incoherent::injection::AncillaState;
use incoherent::matrix::gates::{cnot, cz, hadamard, pauli_x, pauli_y, pauli_z, z_rotation};
use incoherent::Matrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Fixed gates accepted by `gate = ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Cnot,
    Cz,
}

impl NamedGate {
    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "h" => Self::H,
            "x" => Self::X,
            "y" => Self::Y,
            "z" => Self::Z,
            "s" => Self::S,
            "t" => Self::T,
            "cnot" | "cx" => Self::Cnot,
            "cz" => Self::Cz,
            _ => return None,
        })
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Cnot | Self::Cz => 2,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> Matrix {
        match self {
            Self::H => hadamard(),
            Self::X => pauli_x(),
            Self::Y => pauli_y(),
            Self::Z => pauli_z(),
            Self::S => z_rotation(PI / 4.0),
            Self::T => z_rotation(PI / 8.0),
            Self::Cnot => cnot(),
            Self::Cz => cz(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Named(NamedGate),
    /// Exact `exp(i theta sigma_Z)`.
    Rotation(f64),
    /// Z-rotation ensemble; probabilities solved from the mean constraint when
    /// absent.
    Ensemble {
        target: f64,
        options: Vec<f64>,
        probs: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateEntry {
    pub name: Option<String>,
    /// Line of the `[gate]` header.
    pub line: usize,
    pub qubits: Vec<usize>,
    pub kind: GateKind,
    pub repeat: usize,
}

impl GateEntry {
    pub fn label(&self, index: usize) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("gate{}", index + 1))
    }

    pub fn z_spec(&self) -> Option<Result<ZRotationSpec, incoherent::Error>> {
        match &self.kind {
            GateKind::Ensemble {
                target, options, ..
            } => Some(ZRotationSpec::new(*target, options.clone())),
            _ => None,
        }
    }
}

/// Parses a radian value: a decimal number or `[-][k*]pi[/m]`.
pub fn parse_angle(token: &str) -> Result<f64, String> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    if lower.ends_with("deg") || lower.ends_with("degrees") || t.ends_with('°') {
        return Err(format!(
            "`{t}`: angles are in radians; degree units are not accepted"
        ));
    }
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{t}` is not finite"))
        };
    }
    let (sign, body) = match lower.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, lower.as_str()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let coefficient = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(k) => k
            .strip_suffix('*')
            .and_then(|k| k.parse::<f64>().ok())
            .ok_or_else(|| format!("`{t}` is not a number or multiple of pi"))?,
        None => return Err(format!("`{t}` is not a number or multiple of pi")),
    };
    let divisor = match den {
        Some(d) => d
            .parse::<f64>()
            .ok()
            .filter(|d| *d != 0.0 && d.is_finite())
            .ok_or_else(|| format!("`{t}` has an invalid divisor"))?,
        None => 1.0,
    };
    Ok(sign * coefficient * PI / divisor)
}

fn parse_angles(value: &str) -> Result<Vec<f64>, String> {
    value.split_whitespace().map(parse_angle).collect()
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[derive(Default)]
struct Pending {
    line: usize,
    name: Option<String>,
    qubits: Option<Vec<usize>>,
    gate: Option<NamedGate>,
    target: Option<f64>,
    options: Option<Vec<f64>>,
    probs: Option<Vec<f64>>,
    repeat: Option<usize>,
}

impl Pending {
    fn finish(self) -> Result<GateEntry, ParseError> {
        let line = self.line;
        let qubits = self
            .qubits
            .ok_or_else(|| err(line, "gate is missing `qubits`"))?;
        let kind = match (self.gate, self.target, self.options, self.probs) {
            (Some(g), None, None, None) => {
                if qubits.len() != g.arity() {
                    return Err(err(
                        line,
                        format!("{g:?} acts on {} qubit(s), got {}", g.arity(), qubits.len()),
                    ));
                }
                GateKind::Named(g)
            }
            (Some(_), ..) => {
                return Err(err(
                    line,
                    "`gate` cannot be combined with target/options/probs",
                ))
            }
            (None, Some(t), None, None) => GateKind::Rotation(t),
            (None, Some(_), None, Some(_)) => {
                return Err(err(line, "`probs` given without `options`"))
            }
            (None, Some(target), Some(options), probs) => {
                if options.is_empty() {
                    return Err(err(line, "`options` is empty"));
                }
                if let Some(p) = &probs {
                    if p.len() != options.len() {
                        return Err(err(
                            line,
                            format!("{} probabilities for {} options", p.len(), options.len()),
                        ));
                    }
                }
                GateKind::Ensemble {
                    target,
                    options,
                    probs,
                }
            }
            (None, None, ..) => return Err(err(line, "gate needs `gate` or `target`")),
        };
        if !matches!(kind, GateKind::Named(_)) && qubits.len() != 1 {
            return Err(err(line, "Z rotations act on exactly one qubit"));
        }
        let repeat = self.repeat.unwrap_or(1);
        if repeat == 0 {
            return Err(err(line, "`repeat` must be at least 1"));
        }
        Ok(GateEntry {
            name: self.name,
            line,
            qubits,
            kind,
            repeat,
        })
    }
}

/// Parses a gate spec file.
pub fn parse_gate_spec(text: &str) -> Result<Vec<GateEntry>, ParseError> {
    let mut entries = Vec::new();
    let mut current: Option<Pending> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[gate]" {
                return Err(err(line, format!("unknown section `{content}`")));
            }
            if let Some(p) = current.take() {
                entries.push(p.finish()?);
            }
            current = Some(Pending {
                line,
                ..Pending::default()
            });
            continue;
        }
        let pending = current
            .as_mut()
            .ok_or_else(|| err(line, "key outside a [gate] section"))?;
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        if value.is_empty() {
            return Err(err(line, format!("`{key}` has no value")));
        }
        let duplicate = match key {
            "name" => pending.name.replace(value.to_string()).is_some(),
            "qubits" => {
                let q = value
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(line, format!("invalid qubit list `{value}`")))?;
                pending.qubits.replace(q).is_some()
            }
            "gate" => {
                let g = NamedGate::parse(value)
                    .ok_or_else(|| err(line, format!("unknown gate `{value}`")))?;
                pending.gate.replace(g).is_some()
            }
            "target" => {
                let t = parse_angle(value).map_err(|m| err(line, m))?;
                pending.target.replace(t).is_some()
            }
            "options" => {
                let o = parse_angles(value).map_err(|m| err(line, m))?;
                pending.options.replace(o).is_some()
            }
            "probs" => {
                let p = value
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(line, format!("invalid probability list `{value}`")))?;
                pending.probs.replace(p).is_some()
            }
            "repeat" => {
                let r = value
                    .parse::<usize>()
                    .map_err(|_| err(line, format!("invalid repeat count `{value}`")))?;
                pending.repeat.replace(r).is_some()
            }
            other => return Err(err(line, format!("unknown key `{other}`"))),
        };
        if duplicate {
            return Err(err(line, format!("`{key}` given twice in one gate")));
        }
    }
    if let Some(p) = current.take() {
        entries.push(p.finish()?);
    }
    if entries.is_empty() {
        return Err(err(text.lines().count().max(1), "spec contains no gates"));
    }
    Ok(entries)
}

/// Builds a circuit from parsed entries, expanding `repeat`. `gate = t`
/// slots are flagged for injection.
pub fn build_circuit(entries: &[GateEntry], width: usize) -> Result<Circuit, String> {
    let mut c = Circuit::new(width).map_err(|e| e.to_string())?;
    for (i, e) in entries.iter().enumerate() {
        let at = |m: incoherent::Error| format!("line {} ({}): {m}", e.line, e.label(i));
        for _ in 0..e.repeat {
            match &e.kind {
                GateKind::Named(NamedGate::T) => c.push_t(e.qubits[0]).map(|_| ()),
                GateKind::Named(g) => c.push_exact(&e.qubits, g.matrix()).map(|_| ()),
                GateKind::Rotation(t) => c.push_exact(&e.qubits, z_rotation(*t)).map(|_| ()),
                GateKind::Ensemble { probs, .. } => {
                    let spec = e.z_spec().expect("ensemble entry").map_err(at)?;
                    let ens = match probs {
                        Some(p) => spec.ensemble_with_probs(p),
                        None => spec.ensemble(),
                    }
                    .map_err(at)?;
                    c.push_ensemble(&e.qubits, ens).map(|_| ())
                }
            }
            .map_err(at)?;
        }
    }
    Ok(c)
}

/// Narrowest register holding every placement.
pub fn inferred_width(entries: &[GateEntry]) -> usize {
    entries
        .iter()
        .flat_map(|e| e.qubits.iter())
        .max()
        .map_or(1, |q| q + 1)
}

/// Parses an ancilla list: one `theta tau` pair per line, radians.
pub fn parse_ancillas(text: &str) -> Result<Vec<AncillaState>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(err(
                line,
                format!("expected `theta tau`, got {} field(s)", fields.len()),
            ));
        }
        let theta = parse_angle(fields[0]).map_err(|m| err(line, m))?;
        let tau = parse_angle(fields[1]).map_err(|m| err(line, m))?;
        out.push(AncillaState { theta, tau });
    }
    if out.is_empty() {
        return Err(err(text.lines().count().max(1), "ancilla list is empty"));
    }
    Ok(out)
}
