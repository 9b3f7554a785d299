//! INI-style configuration files.
//!
//! Five sections are recognized — `[domain]`, `[solver]`, `[initial]`,
//! `[output]`, `[expansion]` — each with a fixed key set. Unknown sections
//! or keys are hard errors carrying the line number (and a suggestion when
//! the key looks like a typo for a known one), so a misspelled parameter can
//! never silently fall back to a default. `#` and `;` start comments.
//!
//! ```ini
//! [domain]
//! r0 = 1.0        # inner radius
//! R0 = 2.0        # outer radius
//! L3 = 3.141592653589793
//! Nr = 128        # radial cells (nodes = Nr + 1)
//! Nz = 128        # axial points
//!
//! [solver]
//! nu = 0.5
//! dt = 1e-3       # or: cfl = 0.4 (adaptive); giving both is an error
//! T_end = 1.0
//!
//! [initial]
//! preset = quartic-cos
//! amplitude = 1.0
//! axial_mode = 1
//!
//! [output]
//! report_every = 10
//! out_dir = out
//! ```

use crate::errors::CliError;
use cns_core::{Preset, TimeStep};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Fully validated configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub r0: f64,
    pub r_outer: f64,
    pub l3: f64,
    /// Radial cells; the grid has `nr_cells + 1` nodes.
    pub nr_cells: usize,
    pub nz: usize,
    pub nu: f64,
    pub time_step: TimeStep,
    pub t_end: f64,
    pub preset: Preset,
    pub report_every: usize,
    pub out_dir: Option<PathBuf>,
    pub levels: usize,
    pub base_n: u32,
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("domain", &["r0", "R0", "L3", "Nr", "Nz"]),
    ("solver", &["nu", "dt", "cfl", "T_end"]),
    ("initial", &["preset", "amplitude", "axial_mode"]),
    ("output", &["report_every", "out_dir"]),
    ("expansion", &["levels", "base_n"]),
];

/// Common misspellings mapped straight to the intended key.
const ALIASES: [(&str, &str); 3] = [
    ("viscosity", "nu"),
    ("viscocity", "nu"),
    ("t_end", "T_end"),
];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { prev } else { prev + 1 };
            prev = row[j + 1];
            row[j + 1] = cost.min(prev + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

fn suggest(key: &str, section_keys: &[&'static str]) -> Option<&'static str> {
    for (wrong, right) in ALIASES {
        if key.eq_ignore_ascii_case(wrong) {
            return Some(right);
        }
    }
    // closest known key, preferring the current section on ties
    let mut best: Option<(&'static str, usize, bool)> = None;
    for (_, keys) in SECTIONS {
        for &k in keys {
            let d = levenshtein(&key.to_ascii_lowercase(), &k.to_ascii_lowercase());
            let local = section_keys.contains(&k);
            let better = match best {
                None => true,
                Some((_, bd, blocal)) => d < bd || (d == bd && local && !blocal),
            };
            if d <= 2 && better {
                best = Some((k, d, local));
            }
        }
    }
    best.map(|(k, _, _)| k)
}

/// Raw parse result: every `key = value` with its line, grouped by section.
struct RawConfig {
    path: String,
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn parse_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| CliError::Config {
                path: self.path.clone(),
                line,
                msg: format!("bad value for key \"{key}\": \"{v}\" is not a number"),
            }),
        }
    }

    fn parse_usize(&mut self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        match self.take(section, key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<usize>().map(Some).map_err(|_| CliError::Config {
                path: self.path.clone(),
                line,
                msg: format!("bad value for key \"{key}\": \"{v}\" is not a non-negative integer"),
            }),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(|c| c == '#' || c == ';') {
        Some(p) => &line[..p],
        None => line,
    }
}

fn parse_raw(path: &str, text: &str) -> Result<RawConfig, CliError> {
    let mut entries = BTreeMap::new();
    let mut section: Option<&'static str> = None;
    let err = |line: usize, msg: String| CliError::Config {
        path: path.to_string(),
        line,
        msg,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, format!("unterminated section header \"{line}\"")))?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .map(|&(s, _)| s)
                    .find(|&s| s == name)
                    .ok_or_else(|| {
                        err(
                            line_no,
                            format!(
                                "unknown section \"[{name}]\" (expected one of [domain], \
                                 [solver], [initial], [output], [expansion])"
                            ),
                        )
                    })?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got \"{line}\"")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .ok_or_else(|| err(line_no, format!("key \"{key}\" appears before any section")))?;
        let keys = SECTIONS.iter().find(|&&(s, _)| s == sec).unwrap().1;
        if !keys.contains(&key) {
            let hint = match suggest(key, keys) {
                Some(s) => format!(" (did you mean \"{s}\"?)"),
                None => String::new(),
            };
            return Err(err(
                line_no,
                format!("unknown key \"{key}\" in [{sec}]{hint}"),
            ));
        }
        if entries
            .insert(
                (sec.to_string(), key.to_string()),
                (line_no, value.to_string()),
            )
            .is_some()
        {
            return Err(err(line_no, format!("duplicate key \"{key}\" in [{sec}]")));
        }
    }
    Ok(RawConfig {
        path: path.to_string(),
        entries,
    })
}

pub fn parse_config(path: &std::path::Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&path.display().to_string(), &text)
}

pub fn parse_config_str(path: &str, text: &str) -> Result<ConfigFile, CliError> {
    let mut raw = parse_raw(path, text)?;
    let missing = |section: &str, key: &str| {
        CliError::Invalid(format!("missing key \"{key}\" in [{section}]"))
    };
    let bad = |key: &str, why: String| CliError::Invalid(format!("bad value for \"{key}\": {why}"));

    let r0 = raw.parse_f64("domain", "r0")?.ok_or(missing("domain", "r0"))?;
    let r_outer = raw.parse_f64("domain", "R0")?.ok_or(missing("domain", "R0"))?;
    let l3 = raw.parse_f64("domain", "L3")?.ok_or(missing("domain", "L3"))?;
    let nr_cells = raw
        .parse_usize("domain", "Nr")?
        .ok_or(missing("domain", "Nr"))?;
    let nz = raw
        .parse_usize("domain", "Nz")?
        .ok_or(missing("domain", "Nz"))?;
    if !(r0 > 0.0) {
        return Err(bad("r0", format!("inner radius must be positive, got {r0}")));
    }
    if !(r_outer > r0) {
        return Err(bad(
            "R0",
            format!("outer radius must exceed r0 = {r0}, got {r_outer}"),
        ));
    }
    if !(l3 > 0.0) {
        return Err(bad("L3", format!("axial half-length must be positive, got {l3}")));
    }

    let nu = raw.parse_f64("solver", "nu")?.ok_or(missing("solver", "nu"))?;
    if !(nu > 0.0) {
        return Err(bad("nu", format!("viscosity must be positive, got {nu}")));
    }
    let t_end = raw
        .parse_f64("solver", "T_end")?
        .ok_or(missing("solver", "T_end"))?;
    if !(t_end > 0.0) {
        return Err(bad("T_end", format!("final time must be positive, got {t_end}")));
    }
    let dt = raw.parse_f64("solver", "dt")?;
    let cfl = raw.parse_f64("solver", "cfl")?;
    let time_step = match (dt, cfl) {
        (Some(_), Some(_)) => {
            return Err(bad(
                "dt",
                "both \"dt\" and \"cfl\" are set; pick one".to_string(),
            ))
        }
        (Some(dt), None) if dt > 0.0 => TimeStep::Fixed(dt),
        (Some(dt), None) => return Err(bad("dt", format!("time step must be positive, got {dt}"))),
        (None, Some(cfl)) if cfl > 0.0 && cfl <= 1.0 => TimeStep::Adaptive { cfl },
        (None, Some(cfl)) => {
            return Err(bad("cfl", format!("cfl must lie in (0, 1], got {cfl}")))
        }
        (None, None) => TimeStep::Adaptive { cfl: 0.4 },
    };

    let preset_name = raw
        .take("initial", "preset")
        .ok_or(missing("initial", "preset"))?
        .1;
    let amplitude = raw.parse_f64("initial", "amplitude")?.unwrap_or(1.0);
    if !amplitude.is_finite() {
        return Err(bad("amplitude", format!("must be finite, got {amplitude}")));
    }
    let axial_mode = raw.parse_usize("initial", "axial_mode")?.unwrap_or(1);
    if axial_mode == 0 || axial_mode > u32::MAX as usize {
        return Err(bad("axial_mode", format!("must be a positive mode index, got {axial_mode}")));
    }
    let preset = Preset::from_name(&preset_name, amplitude, axial_mode as u32)
        .map_err(|_| bad("preset", format!("unknown preset \"{preset_name}\" (available: zero, quartic-cos, gauss-cos)")))?;

    let report_every = raw.parse_usize("output", "report_every")?.unwrap_or(10);
    if report_every == 0 {
        return Err(bad("report_every", "must be at least 1".to_string()));
    }
    let out_dir = raw.take("output", "out_dir").map(|(_, v)| PathBuf::from(v));

    let levels = raw.parse_usize("expansion", "levels")?.unwrap_or(3);
    let base_n = raw.parse_usize("expansion", "base_n")?.unwrap_or(1);
    if base_n == 0 || base_n > u32::MAX as usize {
        return Err(bad("base_n", format!("must be a positive level index, got {base_n}")));
    }

    Ok(ConfigFile {
        r0,
        r_outer,
        l3,
        nr_cells,
        nz,
        nu,
        time_step,
        t_end,
        preset,
        report_every,
        out_dir,
        levels,
        base_n: base_n as u32,
    })
}
