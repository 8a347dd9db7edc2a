//! Flat `key=value` configuration files.
//!
//! ```text
//! # unit beam with damping on [0.9, 1.9]
//! rho=1
//! K=1
//! I_rho=1
//! EI=1
//! l=3.141592653589793
//! b=localized:1.0:0.9:1.9
//! n=200
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{BeamParams, DampingProfile};
use crate::error::{Error, Result};

/// Optional run settings carried by a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: BeamParams,
    pub damping: DampingProfile,
    pub options: RunOptions,
}

const KNOWN_KEYS: [&str; 9] = ["rho", "K", "I_rho", "EI", "l", "b", "n", "dt", "t_final"];

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

/// Parses configuration text. Relative `table:` paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Config> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            reason: format!("expected key=value, got `{line}`"),
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        if entries
            .insert(key.to_string(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("duplicate key `{key}`"),
            });
        }
    }

    let number = |key: &str| -> Result<f64> {
        let (line, value) = entries.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))?;
        parse_number(value, *line)
    };
    let params = BeamParams::new(
        number("rho")?,
        number("K")?,
        number("I_rho")?,
        number("EI")?,
        number("l")?,
    )?;

    let damping = match entries.get("b") {
        Some((line, value)) => parse_damping(value, *line, base_dir)?,
        None => DampingProfile::Zero,
    };
    damping.validate(params.l)?;

    let mut options = RunOptions::default();
    if let Some((line, value)) = entries.get("n") {
        let n: usize = value.parse().map_err(|_| Error::Parse {
            line: *line,
            reason: format!("`{value}` is not a cell count"),
        })?;
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        options.n = Some(n);
    }
    for (key, slot) in [("dt", &mut options.dt), ("t_final", &mut options.t_final)] {
        if let Some((line, value)) = entries.get(key) {
            let x = parse_number(value, *line)?;
            if x <= 0.0 {
                return Err(Error::invalid(key, format!("must be > 0, got {x}")));
            }
            *slot = Some(x);
        }
    }

    Ok(Config {
        params,
        damping,
        options,
    })
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    let x: f64 = text.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("`{text}` is not a number"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            reason: format!("`{text}` is not finite"),
        });
    }
    Ok(x)
}

fn parse_damping(text: &str, line: usize, base_dir: &Path) -> Result<DampingProfile> {
    let mut parts = text.split(':');
    let kind = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let bad = |reason: String| Error::Parse { line, reason };
    match (kind, rest.len()) {
        ("zero", 0) => Ok(DampingProfile::Zero),
        ("const", 1) => Ok(DampingProfile::Constant(parse_number(rest[0], line)?)),
        ("localized", 3) => Ok(DampingProfile::Localized {
            value: parse_number(rest[0], line)?,
            b0: parse_number(rest[1], line)?,
            b1: parse_number(rest[2], line)?,
        }),
        ("table", n) if n >= 1 => {
            // the path itself may contain ':'
            let raw = rest.join(":");
            let mut path = PathBuf::from(&raw);
            if path.is_relative() {
                path = base_dir.join(path);
            }
            let body = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let samples = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| parse_number(s, line))
                .collect::<Result<Vec<_>>>()?;
            Ok(DampingProfile::Tabulated(samples))
        }
        _ => Err(bad(format!(
            "unrecognised damping `{text}` (expected zero, const:<v>, localized:<v>:<b0>:<b1> or table:<path>)"
        ))),
    }
}
