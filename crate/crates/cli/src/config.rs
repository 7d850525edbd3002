//! Flat `key = value` run files.
//!
//! ```text
//! # heaviside sweep
//! kind = heaviside
//! methods = reference, lp, hg
//! eps_range = 0, 6, 0.1
//! out_csv = sweep.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nsosc_core::hg_core::FrequencyForm;
use nsosc_core::hg_impact::ChiMode;
use nsosc_core::systems::OscillatorKind;
use nsosc_core::table::{eps_grid, Method, SolveSettings, USABILITY_THRESHOLD};

const KEYS: [&str; 17] = [
    "kind",
    "methods",
    "eps",
    "eps_range",
    "amplitude",
    "out_csv",
    "out_json",
    "waveforms",
    "waveform_dir",
    "periods",
    "threshold",
    "form",
    "newton_steps",
    "hg_tol",
    "chi_mode",
    "roots",
    "omega_seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: OscillatorKind,
    pub methods: Vec<Method>,
    pub eps: Vec<f64>,
    pub settings: SolveSettings,
    pub out_csv: PathBuf,
    pub out_json: PathBuf,
    /// Methods whose waveforms are written for every ε.
    pub waveforms: Vec<Method>,
    pub waveform_dir: PathBuf,
    pub periods: usize,
    pub threshold: f64,
}

/// Key-value pairs in file order; blank lines and `#` comments skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got '{raw}'", n + 1);
        };
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            bail!("line {}: unknown key '{k}'", n + 1);
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            bail!("line {}: duplicate key '{k}'", n + 1);
        }
    }
    Ok(out)
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow::anyhow!("{what} '{p}': {e}")))
        .collect()
}

fn number<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match pairs.get(key) {
        Some(v) => v.parse().map_err(|e| anyhow::anyhow!("{key} = '{v}': {e}")),
        None => Ok(default),
    }
}

/// `a, b, step` into the grid a, a + step, …, b.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let p: Vec<f64> = parse_list(s, "eps_range")?;
    let [start, end, step] = p[..] else {
        bail!("eps_range needs `start, end, step`, got '{s}'");
    };
    Ok(eps_grid(start, end, step)?)
}

/// Solver settings from the optional tuning keys.
pub fn settings_from(pairs: &BTreeMap<String, String>) -> Result<SolveSettings> {
    let mut s = SolveSettings::default();
    s.amplitude = number(pairs, "amplitude", 1.0)?;
    if let Some(f) = pairs.get("form") {
        s.hg.form = f.parse::<FrequencyForm>()?;
    }
    s.hg.newton_steps = number(pairs, "newton_steps", s.hg.newton_steps)?;
    s.hg.tol = number(pairs, "hg_tol", s.hg.tol)?;
    if let Some(w) = pairs.get("omega_seed") {
        s.hg.omega_seed = Some(w.parse().with_context(|| format!("omega_seed = '{w}'"))?);
    }
    if let Some(c) = pairs.get("chi_mode") {
        s.impact.chi_mode = c.parse::<ChiMode>()?;
    }
    s.impact.roots = number(pairs, "roots", s.impact.roots)?;
    if !(s.amplitude > 0.0) || !(s.hg.tol > 0.0) {
        bail!("amplitude and hg_tol must be positive");
    }
    Ok(s)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let get = |k: &str| pairs.get(k).with_context(|| format!("missing key '{k}'"));
        let kind: OscillatorKind = get("kind")?.parse()?;
        let methods = parse_list(get("methods")?, "method")?;
        if methods.is_empty() {
            bail!("methods is empty");
        }
        let eps = match (pairs.get("eps"), pairs.get("eps_range")) {
            (Some(l), None) => parse_list(l, "eps")?,
            (None, Some(r)) => parse_range(r)?,
            (Some(_), Some(_)) => bail!("give either eps or eps_range, not both"),
            (None, None) => bail!("missing key 'eps' (or 'eps_range')"),
        };
        if eps.is_empty() {
            bail!("no epsilon values");
        }
        let out_csv = PathBuf::from(pairs.get("out_csv").map_or("table.csv", String::as_str));
        let out_json = pairs.get("out_json").map_or_else(|| out_csv.with_extension("json"), PathBuf::from);
        let waveforms = match pairs.get("waveforms") {
            Some(w) => parse_list(w, "method")?,
            None => Vec::new(),
        };
        let periods = number(&pairs, "periods", 1usize)?;
        let threshold = number(&pairs, "threshold", USABILITY_THRESHOLD)?;
        if periods == 0 || !(threshold > 0.0) {
            bail!("periods and threshold must be positive");
        }
        Ok(Self {
            kind,
            methods,
            eps,
            settings: settings_from(&pairs)?,
            out_csv,
            out_json,
            waveforms,
            waveform_dir: PathBuf::from(pairs.get("waveform_dir").map_or(".", String::as_str)),
            periods,
            threshold,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let c = RunConfig::parse(
            "# sweep\nkind = heaviside\nmethods = reference, lp ,hg\neps_range = 0, 1, 0.5\n\nout_csv = a.csv # here\nform = printed\nroots = 6\n",
        )
        .unwrap();
        assert_eq!(c.kind, OscillatorKind::Heaviside);
        assert_eq!(c.methods, vec![Method::Reference, Method::Lp, Method::Hg]);
        assert_eq!(c.eps, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.out_json, PathBuf::from("a.json"));
        assert_eq!(c.settings.hg.form, FrequencyForm::Printed);
        assert_eq!(c.settings.impact.roots, 6);
        assert_eq!(c.threshold, 0.02);
    }

    #[test]
    fn rejects_mistakes() {
        let base = "kind = signum\nmethods = hg\n";
        assert!(RunConfig::parse(base).is_err());
        assert!(RunConfig::parse(&format!("{base}eps = 3\nepz = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{base}eps = 3\neps = 4\n")).is_err());
        assert!(RunConfig::parse(&format!("{base}eps = 3\neps_range = 0,1,0.1\n")).is_err());
        assert!(RunConfig::parse("kind = pendulum\nmethods = hg\neps = 1\n").is_err());
        assert!(RunConfig::parse(&format!("{base}eps = 3\nmethods2 x\n")).is_err());
        assert!(RunConfig::parse("kind = signum\nmethods = hg, magic\neps = 1\n").is_err());
    }
}
