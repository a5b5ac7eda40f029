//! Flat key = value experiment configuration.
//!
//! The format is deliberately minimal and diff-friendly: one `key = value`
//! per line, `#` comments, no sections. Unknown keys are rejected so typos
//! surface as configuration errors.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    HalfLine { lambda: f64 },
    Grid2d { x0: f64, x1: f64, y0: f64, y1: f64, h: f64, shape: Shape2d },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape2d {
    Rect,
    /// Box with the upper-right quadrant (above the midpoints) removed.
    LShape,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatumSpec {
    One,
    /// exp(-((x-c)/w)²) (product over coordinates in 2D).
    Bump { center: f64, width: f64 },
    /// Two-column CSV (node, value) aligned with the experiment grid.
    Csv(String),
}

/// Parameters shared by all subcommands; each experiment reads the subset
/// it needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub datum: DatumSpec,
    pub s: f64,
    pub p: f64,
    pub alpha: f64,
    pub k: usize,
    pub resolution: usize,
    pub sym_resolution: usize,
    pub seed: u64,
    /// y-levels of the `extend` output.
    pub y_levels: Vec<f64>,
    /// Side length of the `kernel` table.
    pub kernel_grid: usize,
    /// `greens` (default) or `mehler` kernel table.
    pub kernel_table: String,
    /// Mehler time for `kernel_table = mehler`.
    pub t: f64,
    /// Family size for `regularity` batches.
    pub family: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainSpec::HalfLine { lambda: 0.0 },
            datum: DatumSpec::One,
            s: 0.5,
            p: 2.0,
            alpha: 0.0,
            k: 30,
            resolution: 1200,
            sym_resolution: 2400,
            seed: 0,
            y_levels: vec![0.0, 0.25, 0.5, 1.0, 2.0],
            kernel_grid: 20,
            kernel_table: "greens".into(),
            t: 0.5,
            family: 30,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        ExperimentConfig::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let take = |map: &mut BTreeMap<String, String>, key: &str| map.remove(key);
        let parse_f64 = |key: &str, v: String| {
            v.parse::<f64>()
                .map_err(|e| ConfigError(format!("{key}: bad number `{v}` ({e})")))
        };
        let parse_usize = |key: &str, v: String| {
            v.parse::<usize>()
                .map_err(|e| ConfigError(format!("{key}: bad integer `{v}` ({e})")))
        };

        if let Some(kind) = take(&mut map, "domain") {
            cfg.domain = match kind.as_str() {
                "interval" => {
                    let a = parse_f64("a", take(&mut map, "a").ok_or_else(|| ConfigError("interval needs `a`".into()))?)?;
                    let b = parse_f64("b", take(&mut map, "b").ok_or_else(|| ConfigError("interval needs `b`".into()))?)?;
                    DomainSpec::Interval { a, b }
                }
                "halfline" => {
                    let lambda = parse_f64(
                        "lambda",
                        take(&mut map, "lambda").unwrap_or_else(|| "0.0".into()),
                    )?;
                    DomainSpec::HalfLine { lambda }
                }
                "grid2d" => {
                    let g = |m: &mut BTreeMap<String, String>, k: &str, d: &str| {
                        m.remove(k).unwrap_or_else(|| d.to_string())
                    };
                    let x0 = parse_f64("x0", g(&mut map, "x0", "0.0"))?;
                    let x1 = parse_f64("x1", g(&mut map, "x1", "1.0"))?;
                    let y0 = parse_f64("y0", g(&mut map, "y0", "0.0"))?;
                    let y1 = parse_f64("y1", g(&mut map, "y1", "1.0"))?;
                    let h = parse_f64("h", g(&mut map, "h", "0.05"))?;
                    let shape = match g(&mut map, "shape", "rect").as_str() {
                        "rect" => Shape2d::Rect,
                        "lshape" => Shape2d::LShape,
                        other => return Err(ConfigError(format!("unknown shape `{other}`"))),
                    };
                    DomainSpec::Grid2d { x0, x1, y0, y1, h, shape }
                }
                other => return Err(ConfigError(format!("unknown domain `{other}`"))),
            };
        }
        if let Some(d) = take(&mut map, "datum") {
            cfg.datum = if d == "one" {
                DatumSpec::One
            } else if d == "bump" {
                let center = parse_f64(
                    "bump_center",
                    take(&mut map, "bump_center").unwrap_or_else(|| "1.0".into()),
                )?;
                let width = parse_f64(
                    "bump_width",
                    take(&mut map, "bump_width").unwrap_or_else(|| "0.5".into()),
                )?;
                DatumSpec::Bump { center, width }
            } else if let Some(path) = d.strip_prefix("csv:") {
                DatumSpec::Csv(path.to_string())
            } else {
                return Err(ConfigError(format!("unknown datum `{d}`")));
            };
        }
        if let Some(v) = take(&mut map, "s") {
            cfg.s = parse_f64("s", v)?;
        }
        if let Some(v) = take(&mut map, "p") {
            cfg.p = parse_f64("p", v)?;
        }
        if let Some(v) = take(&mut map, "alpha") {
            cfg.alpha = parse_f64("alpha", v)?;
        }
        if let Some(v) = take(&mut map, "k") {
            cfg.k = parse_usize("k", v)?;
        }
        if let Some(v) = take(&mut map, "resolution") {
            cfg.resolution = parse_usize("resolution", v)?;
        }
        if let Some(v) = take(&mut map, "sym_resolution") {
            cfg.sym_resolution = parse_usize("sym_resolution", v)?;
        }
        if let Some(v) = take(&mut map, "seed") {
            cfg.seed = v
                .parse::<u64>()
                .map_err(|e| ConfigError(format!("seed: {e}")))?;
        }
        if let Some(v) = take(&mut map, "y_levels") {
            cfg.y_levels = v
                .split(',')
                .map(|x| parse_f64("y_levels", x.trim().to_string()))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = take(&mut map, "kernel_grid") {
            cfg.kernel_grid = parse_usize("kernel_grid", v)?;
        }
        if let Some(v) = take(&mut map, "kernel_table") {
            if v != "greens" && v != "mehler" {
                return Err(ConfigError(format!("kernel_table must be greens|mehler, got `{v}`")));
            }
            cfg.kernel_table = v;
        }
        if let Some(v) = take(&mut map, "t") {
            cfg.t = parse_f64("t", v)?;
        }
        if let Some(v) = take(&mut map, "family") {
            cfg.family = parse_usize("family", v)?;
        }
        if let Some((key, _)) = map.into_iter().next() {
            return Err(ConfigError(format!("unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(ConfigError(format!("s = {} outside (0, 1)", self.s)));
        }
        if self.resolution < 64 {
            return Err(ConfigError(format!(
                "resolution = {} below the minimum of 64",
                self.resolution
            )));
        }
        if self.k < 1 {
            return Err(ConfigError("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical one-line rendering used for the config hash.
    pub fn canonical(&self) -> String {
        format!(
            "domain={:?};datum={:?};s={};p={};alpha={};k={};resolution={};sym={};seed={};y={:?};kg={};kt={};t={};family={}",
            self.domain,
            self.datum,
            self.s,
            self.p,
            self.alpha,
            self.k,
            self.resolution,
            self.sym_resolution,
            self.seed,
            self.y_levels,
            self.kernel_grid,
            self.kernel_table,
            self.t,
            self.family
        )
    }
}

/// FNV-1a over the canonical config string: stable across runs and
/// platforms, unlike the std hasher.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in cfg.canonical().bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "
            # comparison experiment
            domain = interval
            a = 1.0
            b = 3.0
            s = 0.5
            datum = one
            k = 24
            resolution = 800
            seed = 7
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.domain, DomainSpec::Interval { a: 1.0, b: 3.0 });
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.k, 24);
        let h1 = config_hash(&cfg);
        let h2 = config_hash(&ExperimentConfig::parse(text).unwrap());
        assert_eq!(h1, h2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("domain = dodecahedron").is_err());
        assert!(ExperimentConfig::parse("s = 1.5").is_err());
        assert!(ExperimentConfig::parse("resolution = 10").is_err());
        assert!(ExperimentConfig::parse("mystery = 1").is_err());
        assert!(ExperimentConfig::parse("s 0.5").is_err());
    }
}
