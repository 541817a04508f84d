//! Run configuration: a flat JSON object overridden by command-line flags.

use std::path::Path;

use divopt::Params;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// `gamma` may be a number or a string such as `"2^-0.4"` or `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct FileConfig {
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<GammaSpec>,
    pub x0: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parses `1.5`, `2^-0.4` or `inf`.
pub fn parse_gamma(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let bad = || CliError::Usage(format!("cannot parse gamma {:?}", s));
    let g = if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        f64::INFINITY
    } else if let Some(n) = t.strip_prefix("2^") {
        2f64.powf(n.trim().parse::<f64>().map_err(|_| bad())?)
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if g.is_nan() || g <= 0.0 {
        return Err(CliError::Usage(format!(
            "gamma must be positive, got {}",
            s
        )));
    }
    Ok(g)
}

impl GammaSpec {
    pub fn value(&self) -> CliResult<f64> {
        match self {
            GammaSpec::Number(g) => parse_gamma(&g.to_string()),
            GammaSpec::Text(s) => parse_gamma(s),
        }
    }
}

/// Fully resolved model and intensity.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub params: Params,
    pub gamma: f64,
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<String>,
    pub x0: Option<f64>,
}

impl RunConfig {
    pub fn resolve(file: Option<FileConfig>, o: &Overrides) -> CliResult<Self> {
        let f = file.unwrap_or(FileConfig {
            delta: None,
            sigma: None,
            mu: None,
            eta: None,
            gamma: None,
            x0: None,
        });
        let need = |name: &str, flag: Option<f64>, file: Option<f64>| {
            flag.or(file)
                .ok_or_else(|| CliError::Usage(format!("missing parameter {}", name)))
        };
        let params = Params::new(
            need("delta", o.delta, f.delta)?,
            need("sigma", o.sigma, f.sigma)?,
            need("mu", o.mu, f.mu)?,
            need("eta", o.eta, f.eta)?,
        )?;
        let gamma = match (&o.gamma, &f.gamma) {
            (Some(s), _) => parse_gamma(s)?,
            (None, Some(g)) => g.value()?,
            (None, None) => return Err(CliError::Usage("missing parameter gamma".into())),
        };
        Ok(Self {
            params,
            gamma,
            x0: o.x0.or(f.x0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_notation() {
        assert_eq!(parse_gamma("2").unwrap(), 2.0);
        assert_eq!(parse_gamma("2^-1").unwrap(), 0.5);
        assert!(parse_gamma("inf").unwrap().is_infinite());
        assert!(parse_gamma("-1").is_err());
        assert!(parse_gamma("x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let f: FileConfig =
            serde_json::from_str(r#"{"delta":0.5,"sigma":0.3,"mu":1.2,"eta":0.2,"gamma":2}"#)
                .unwrap();
        let o = Overrides {
            gamma: Some("2^-1".into()),
            eta: Some(0.25),
            ..Default::default()
        };
        let c = RunConfig::resolve(Some(f), &o).unwrap();
        assert_eq!(c.gamma, 0.5);
        assert_eq!(c.params.eta, 0.25);
        assert_eq!(c.params.delta, 0.5);
    }
}
