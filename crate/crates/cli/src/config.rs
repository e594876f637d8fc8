//! Flat INI-style run configuration: `[section]` headers and `key = value`
//! lines. Unknown keys are rejected with a suggestion; values are validated
//! with their full key path in the message.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use porohdg::materials::{MaterialParams, Provenance};

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "material.preset",
    "material.rho11",
    "material.rho12",
    "material.rho22",
    "material.rho_s",
    "material.rho_f",
    "material.phi",
    "material.nu",
    "material.mu",
    "material.lambda",
    "material.s",
    "material.alpha",
    "material.beta",
    "material.eta",
    "material.kappa",
    "mesh.n",
    "mesh.file",
    "discretization.k",
    "discretization.k_min",
    "discretization.k_max",
    "discretization.levels",
    "discretization.n0",
    "discretization.dt",
    "discretization.dt_coeff",
    "discretization.steps",
    "time.t_end",
    "output.dir",
    "run.seed",
    "wavebench.domain",
    "wavebench.f0",
    "wavebench.t0",
    "wavebench.source",
    "wavebench.receivers",
    "wavebench.snapshots",
    "wavebench.support_radius",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggest(key: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .map(|k| (levenshtein(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 2)
        .map(|(_, k)| k)
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    no + 1
                )));
            };
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            if !KNOWN_KEYS.contains(&full.as_str()) {
                let hint = suggest(&full)
                    .map(|s| format!("; did you mean `{s}`?"))
                    .unwrap_or_default();
                return Err(CliError::Validation(format!("unknown config key `{full}`{hint}")));
            }
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Validation(format!("duplicate config key `{full}`")));
            }
        }
        Ok(FileConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {path:?}: {e}")))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Validation(format!("`{key}` must be a number, got {v:?}")))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    CliError::Validation(format!("`{key}` must be a nonnegative integer, got {v:?}"))
                })
            })
            .transpose()
    }

    /// Canonical text of the resolved entries (for hashing and the summary).
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn set_if_absent(&mut self, key: &str, value: String) {
        self.entries.entry(key.to_string()).or_insert(value);
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }
}

/// Resolve the material section: a preset (`L1`, `L2`, `coeffs`) possibly
/// with an `eta` override, or a fully explicit parameter set.
pub fn resolve_material(cfg: &FileConfig) -> Result<MaterialParams, CliError> {
    let preset = cfg.get("material.preset");
    let eta = cfg.get_f64("material.eta")?;
    if let Some(name) = preset {
        let params = match name {
            "L1" => MaterialParams::preset_l1(),
            "L2" => MaterialParams::preset_l2(),
            "coeffs" => MaterialParams::preset_coeffs(eta.unwrap_or(0.0)),
            other => {
                return Err(CliError::Validation(format!(
                    "`material.preset` must be L1, L2 or coeffs, got {other:?}"
                )))
            }
        };
        return Ok(params);
    }
    let need = |key: &str| -> Result<f64, CliError> {
        cfg.get_f64(key)?
            .ok_or_else(|| CliError::Validation(format!("missing `{key}` (no preset given)")))
    };
    let mu = need("material.mu")?;
    let lambda = need("material.lambda")?;
    let s = need("material.s")?;
    let alpha = need("material.alpha")?;
    let material = if cfg.get("material.rho_s").is_some() {
        let prov = Provenance {
            rho_s: need("material.rho_s")?,
            rho_f: need("material.rho_f")?,
            phi: need("material.phi")?,
            nu: need("material.nu")?,
            eta: eta.unwrap_or(0.0),
            kappa: cfg.get_f64("material.kappa")?.unwrap_or(1.0),
        };
        MaterialParams::from_provenance(prov, mu, lambda, s, alpha)
    } else {
        let beta = match (cfg.get_f64("material.beta")?, eta, cfg.get_f64("material.kappa")?) {
            (Some(b), _, _) => b,
            (None, Some(e), Some(k)) => e / k,
            (None, None, None) => 0.0,
            _ => {
                return Err(CliError::Validation(
                    "specify `material.beta` or both `material.eta` and `material.kappa`".into(),
                ))
            }
        };
        MaterialParams::new(
            need("material.rho11")?,
            need("material.rho12")?,
            need("material.rho22")?,
            mu,
            lambda,
            s,
            alpha,
            beta,
        )
    };
    material.map_err(|e| CliError::Validation(format!("material.*: {e}")))
}

/// Validate the material section eagerly so errors carry the key path.
pub fn validate_material_values(cfg: &FileConfig) -> Result<(), CliError> {
    for key in ["material.mu", "material.s", "material.kappa"] {
        if let Some(v) = cfg.get_f64(key)? {
            if v <= 0.0 {
                return Err(CliError::Validation(format!("`{key}` must be positive, got {v}")));
            }
        }
    }
    if let Some(v) = cfg.get_f64("material.lambda")? {
        if v < 0.0 {
            return Err(CliError::Validation(format!(
                "`material.lambda` must be nonnegative, got {v}"
            )));
        }
    }
    if let Some(v) = cfg.get_f64("material.alpha")? {
        if !(v > 0.0 && v <= 1.0) {
            return Err(CliError::Validation(format!(
                "`material.alpha` must lie in (0, 1], got {v}"
            )));
        }
    }
    if let Some(v) = cfg.get_f64("material.beta")? {
        if v < 0.0 {
            return Err(CliError::Validation(format!(
                "`material.beta` must be nonnegative, got {v}"
            )));
        }
    }
    Ok(())
}

/// Parse "x,y" into a point.
pub fn parse_point(text: &str, what: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<_> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Validation(format!("{what} must be `x,y`, got {text:?}")));
    }
    let x = parts[0]
        .parse()
        .map_err(|_| CliError::Validation(format!("{what}: bad number {:?}", parts[0])))?;
    let y = parts[1]
        .parse()
        .map_err(|_| CliError::Validation(format!("{what}: bad number {:?}", parts[1])))?;
    Ok([x, y])
}

/// Parse "x,y; x,y; ..." into points.
pub fn parse_points(text: &str, what: &str) -> Result<Vec<[f64; 2]>, CliError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_point(s, what))
        .collect()
}

/// Parse a comma-separated list of numbers.
pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Validation(format!("{what}: bad number {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = FileConfig::parse(
            "[material]\npreset = L1\n\n[discretization]\nk = 1\nlevels = 4\n[time]\nt_end = 0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.get("material.preset"), Some("L1"));
        assert_eq!(cfg.get_usize("discretization.k").unwrap(), Some(1));
        let params = resolve_material(&cfg).unwrap();
        assert_eq!(params.mu, 50.0);
    }

    #[test]
    fn unknown_key_suggests() {
        let err = FileConfig::parse("[material]\nlamda = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("material.lamda"), "{msg}");
        assert!(msg.contains("material.lambda"), "{msg}");
    }

    #[test]
    fn negative_lambda_names_key_path() {
        let cfg = FileConfig::parse("[material]\nlambda = -1\n").unwrap();
        let err = validate_material_values(&cfg).unwrap_err();
        assert!(err.to_string().contains("material.lambda"), "{err}");
    }

    #[test]
    fn explicit_material_with_eta_kappa() {
        let cfg = FileConfig::parse(
            "[material]\nrho11 = 10\nrho12 = 10\nrho22 = 20\nmu = 50\nlambda = 100\ns = 1\nalpha = 1\neta = 2\nkappa = 4\n",
        )
        .unwrap();
        let params = resolve_material(&cfg).unwrap();
        assert_eq!(params.beta, 0.5);
    }

    #[test]
    fn point_lists() {
        assert_eq!(parse_point("2000, 2200", "r").unwrap(), [2000.0, 2200.0]);
        assert_eq!(
            parse_points("1,2; 3,4", "r").unwrap(),
            vec![[1.0, 2.0], [3.0, 4.0]]
        );
        assert_eq!(parse_list("0.7, 0.9,1.1", "t").unwrap(), vec![0.7, 0.9, 1.1]);
        assert!(parse_point("abc", "r").is_err());
    }
}
