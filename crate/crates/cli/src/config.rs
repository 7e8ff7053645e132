//! Run configuration: one TOML section per command, every field defaulted.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gkdv_core::evolver::EvolverConfig;
use gkdv_core::resolvent;
use gkdv_core::stability::StabilityConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub ps: Vec<f64>,
    pub half_length: f64,
    pub h: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            ps: vec![1.5, 2.0, 3.0, 4.0],
            half_length: 40.0,
            h: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvansScanConfig {
    pub p: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub h: f64,
    /// Coarser of the two steps in the second-difference estimate of D''(0).
    pub fit_tau: f64,
}

impl Default for EvansScanConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            tau_min: 0.05,
            tau_max: 30.0,
            points: 200,
            h: 0.01,
            fit_tau: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JostConfig {
    pub p: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub h: f64,
}

impl Default for JostConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            lambda_re: 0.0,
            lambda_im: 0.5,
            h: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventScanConfig {
    pub p: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    /// Weight exponent of sech(κx); (p-1)/4 when absent.
    pub kappa: Option<f64>,
    pub h: f64,
}

impl Default for ResolventScanConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            tau_min: 0.01,
            tau_max: 30.0,
            points: 31,
            kappa: None,
            h: resolvent::RESOLVENT_H,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Speed of the initial soliton.
    pub c: f64,
    /// Gaussian bump a·e^{-((x-x0)/w)²} added to the soliton.
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub solver: EvolverConfig,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            amplitude: 0.0,
            width: 1.0,
            center: 0.0,
            solver: EvolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub identities: IdentitiesConfig,
    pub evans_scan: EvansScanConfig,
    pub jost: JostConfig,
    pub resolvent_scan: ResolventScanConfig,
    pub evolve: EvolveConfig,
    pub stability: StabilityConfig,
}

impl RunConfig {
    /// Defaults, then the file, then `key=value` overrides with dotted keys.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let parsed: RunConfig = toml::from_str(&text)
                    .map_err(|e| anyhow!("{}: {e}", path.display()))?;
                toml::Table::try_from(parsed)?
            }
            None => toml::Table::try_from(RunConfig::default())?,
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e| anyhow!("after overrides: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Physical constraints of the core types, checked before anything runs.
    pub fn validate(&self) -> Result<()> {
        let check_p = |p: f64, what: &str| -> Result<()> {
            gkdv_core::SolitonParams::unit(p).map_err(|e| anyhow!("{what}: {e}"))?;
            Ok(())
        };
        for &p in &self.identities.ps {
            check_p(p, "identities.ps")?;
        }
        check_p(self.evans_scan.p, "evans_scan.p")?;
        check_p(self.jost.p, "jost.p")?;
        check_p(self.resolvent_scan.p, "resolvent_scan.p")?;
        for (tmin, tmax, n, what) in [
            (self.evans_scan.tau_min, self.evans_scan.tau_max, self.evans_scan.points, "evans_scan"),
            (
                self.resolvent_scan.tau_min,
                self.resolvent_scan.tau_max,
                self.resolvent_scan.points,
                "resolvent_scan",
            ),
        ] {
            if !(tmin > 0.0 && tmax > tmin && n >= 1) {
                bail!("{what}: need 0 < tau_min < tau_max and points >= 1");
            }
        }
        if !(self.evolve.c > 0.0 && self.evolve.width > 0.0) {
            bail!("evolve: c and width must be positive");
        }
        self.evolve.solver.validate().map_err(|e| anyhow!("evolve.solver: {e}"))?;
        self.stability.validate().map_err(|e| anyhow!("stability: {e}"))?;
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{item}` is not of the form key=value"))?;
    let value = parse_value(raw.trim());
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields one element");
    let mut node = table;
    for part in parents {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{key}`: `{part}` is not a section"))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// A TOML literal when it parses as one, a bare string otherwise.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Where a command writes, creating the directory.
pub fn output_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = RunConfig::resolve(
            None,
            &["evolve.solver.n=2048".into(), "jost.lambda_im = 1.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.evolve.solver.n, 2048);
        assert_eq!(cfg.jost.lambda_im, 1.5);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::resolve(None, &["jost.lamda=1".into()]).unwrap_err();
        assert!(format!("{err:#}").contains("lamda"));
    }

    #[test]
    fn physical_constraints_are_checked() {
        assert!(RunConfig::resolve(None, &["evans_scan.p=5.5".into()]).is_err());
        assert!(RunConfig::resolve(None, &["evolve.solver.n=1000".into()]).is_err());
    }
}
