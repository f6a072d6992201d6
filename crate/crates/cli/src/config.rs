//! `--config` files and grid triples.

use std::fs;
use std::str::FromStr;

/// Inclusive linear grid `min:max:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| if k + 1 == self.steps { self.max } else { self.min + h * k as f64 }).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts[..] else {
            return Err(format!("expected min:max:steps, got '{s}'"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
        let (min, max) = (num(min)?, num(max)?);
        let steps: usize = steps.trim().parse().map_err(|e| format!("'{steps}': {e}"))?;
        if steps == 0 || !min.is_finite() || !max.is_finite() {
            return Err(format!("grid '{s}' needs finite bounds and steps >= 1"));
        }
        Ok(Grid { min, max, steps })
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.steps)
    }
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') {
            return Err(format!("line {}: bad key '{k}'", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Removes `--config PATH` from `args` and splices the file's entries in as
/// flags right after the subcommand, so explicit flags take precedence.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config '{path}': {e}"))?;
    let flags: Vec<String> =
        parse_config(&text)?.into_iter().flat_map(|(k, v)| [format!("--{k}"), v]).collect();
    // first positional after the program name is the subcommand
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 2).unwrap_or(rest.len());
    rest.splice(sub..sub, flags);
    Ok(rest)
}
