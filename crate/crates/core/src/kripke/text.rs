//! Line-oriented text formats for frames and valuations.
//!
//! ```text
//! # comment
//! points: a b c
//! R: a b
//! S: b c
//! label: a Alpha
//! ```
//!
//! `label:` lines are passed through uninterpreted. A hybrid frame without
//! S-edges is marked with `kind: H2`.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Frame, KripkeError, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

fn perr(line: usize, message: impl Into<String>) -> TextError {
    TextError::Parse {
        line,
        message: message.into(),
    }
}

/// A parsed frame together with its (uninterpreted) label lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameText {
    pub frame: Frame,
    pub labels: Vec<(String, String)>,
}

pub fn parse_frame(text: &str) -> Result<FrameText, TextError> {
    let mut points: Option<Vec<String>> = None;
    let mut r_names = Vec::new();
    let mut s_names = Vec::new();
    let mut labels = Vec::new();
    let mut hybrid = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| perr(lineno, "expected 'key: value'"))?;
        let rest = rest.trim();
        match key.trim() {
            "points" => {
                if points.is_some() {
                    return Err(perr(lineno, "duplicate points line"));
                }
                points = Some(rest.split_whitespace().map(String::from).collect());
            }
            "kind" => match rest {
                "L" => {}
                "H2" => hybrid = true,
                other => return Err(perr(lineno, format!("unknown frame kind {other}"))),
            },
            k @ ("R" | "S") => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [x, y] = parts[..] else {
                    return Err(perr(lineno, "edge lines take exactly two points"));
                };
                let edge = (x.to_string(), y.to_string(), lineno);
                if k == "R" {
                    r_names.push(edge);
                } else {
                    hybrid = true;
                    s_names.push(edge);
                }
            }
            "label" => {
                let (point, label) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| perr(lineno, "label lines take a point and a label"))?;
                labels.push((point.to_string(), label.trim().to_string()));
            }
            other => return Err(perr(lineno, format!("unknown key {other}"))),
        }
    }
    let points = points.ok_or_else(|| perr(0, "missing points line"))?;
    let probe = Frame::new(points.clone(), [], None)?;
    let resolve = |edges: Vec<(String, String, usize)>| -> Result<Vec<(usize, usize)>, TextError> {
        edges
            .into_iter()
            .map(|(x, y, lineno)| {
                let px = probe.point(&x).map_err(|e| perr(lineno, e.to_string()))?;
                let py = probe.point(&y).map_err(|e| perr(lineno, e.to_string()))?;
                Ok((px, py))
            })
            .collect()
    };
    let r = resolve(r_names)?;
    let s = if hybrid {
        Some(resolve(s_names)?)
    } else {
        None
    };
    for (p, _) in &labels {
        probe.point(p)?;
    }
    Ok(FrameText {
        frame: Frame::new(points, r, s)?,
        labels,
    })
}

pub fn write_frame(frame: &Frame, labels: &[(String, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "points: {}", frame.points().join(" ")).unwrap();
    if frame.kind() == crate::formula::Language::H2
        && frame.edges(crate::formula::Modality::Hyb).is_empty()
    {
        out.push_str("kind: H2\n");
    }
    for (x, y) in frame.edges(crate::formula::Modality::Rel) {
        writeln!(out, "R: {} {}", frame.name(x), frame.name(y)).unwrap();
    }
    for (x, y) in frame.edges(crate::formula::Modality::Hyb) {
        writeln!(out, "S: {} {}", frame.name(x), frame.name(y)).unwrap();
    }
    for (p, l) in labels {
        writeln!(out, "label: {p} {l}").unwrap();
    }
    out
}

pub fn write_valuation(frame: &Frame, valuation: &Valuation) -> String {
    let mut out = String::new();
    for (v, set) in &valuation.vars {
        let names: Vec<&str> = set.iter().map(|&x| frame.name(x)).collect();
        writeln!(out, "p{v} = {{{}}}", names.join(", ")).unwrap();
    }
    for (i, &x) in &valuation.noms {
        writeln!(out, "n{i} = {}", frame.name(x)).unwrap();
    }
    out
}

pub fn parse_valuation(frame: &Frame, text: &str) -> Result<Valuation, TextError> {
    let mut val = Valuation::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| perr(lineno, "expected 'symbol = value'"))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let index = |s: &str| -> Result<u32, TextError> {
            s.parse::<u32>()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| perr(lineno, format!("bad symbol {lhs}")))
        };
        if let Some(k) = lhs.strip_prefix('p') {
            let body = rhs
                .strip_prefix('{')
                .and_then(|r| r.strip_suffix('}'))
                .ok_or_else(|| perr(lineno, "variable values are written {a, b}"))?;
            let mut set = std::collections::BTreeSet::new();
            for name in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                set.insert(frame.point(name).map_err(|e| perr(lineno, e.to_string()))?);
            }
            val.vars.insert(index(k)?, set);
        } else if let Some(k) = lhs.strip_prefix('n') {
            let x = frame.point(rhs).map_err(|e| perr(lineno, e.to_string()))?;
            val.noms.insert(index(k)?, x);
        } else {
            return Err(perr(lineno, format!("bad symbol {lhs}")));
        }
    }
    Ok(val)
}
