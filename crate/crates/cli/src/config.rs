//! Scenario configuration: a TOML file with one `[[scenario]]` table per run.
//!
//! Physical values may be plain numbers, read in the key's default unit, or
//! strings carrying a unit (`"17 ps/(km·nm)"`). Unknown keys are rejected.

use nli_core::dispersion::{DispersiveMediumSpec, DmKind, FiberSpec, PumpSpec, Sellmeier};
use nli_core::design::{elliptical_condition, EllipticalVerdict};
use nli_core::grid::SpectralGrid;
use nli_core::jsf::{NliDesign, NliModel, SimpleJsfParams};
use nli_core::metrics::{FilterSpec, Passband, PassbandShape};
use nli_core::units::{format_significant, from_si, lookup_unit, omega_from_lambda, parse_quantity, to_si};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("cannot read {0}: {1}")]
    Read(String, String),
}

fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.to_string() }
}

/// A number in the key's default unit, or a string with an explicit unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    /// SI value; `unit` fixes both the default unit and the dimension.
    pub fn si(&self, path: &str, unit: &str) -> Result<f64, ConfigError> {
        let want = lookup_unit(unit).map_err(|e| invalid(path, e))?;
        let v = match self {
            Value::Number(x) => to_si(*x, unit).map_err(|e| invalid(path, e))?,
            Value::Text(t) => {
                let q = parse_quantity(t).map_err(|e| invalid(path, e))?;
                if q.unit.dim != want.dim {
                    return Err(invalid(path, format!("`{t}` has the wrong dimension (expected {:?})", want.dim)));
                }
                q.si
            }
        };
        if !v.is_finite() {
            return Err(invalid(path, "value must be finite"));
        }
        Ok(v)
    }

    /// Rewrites as a plain number in `unit`, rounded to 15 significant digits.
    fn normalize(&mut self, path: &str, unit: &str) -> Result<(), ConfigError> {
        let si = self.si(path, unit)?;
        let v = from_si(si, unit).map_err(|e| invalid(path, e))?;
        *self = Value::Number(format_significant(v).parse().unwrap_or(v));
        Ok(())
    }
}

fn norm_opt(v: &mut Option<Value>, path: &str, unit: &str) -> Result<(), ConfigError> {
    match v {
        Some(x) => x.normalize(path, unit),
        None => Ok(()),
    }
}

fn si_opt(v: &Option<Value>, path: &str, unit: &str) -> Result<Option<f64>, ConfigError> {
    v.as_ref().map(|x| x.si(path, unit)).transpose()
}

fn required<'a, T>(v: &'a Option<T>, path: &str) -> Result<&'a T, ConfigError> {
    v.as_ref().ok_or_else(|| invalid(path, "missing"))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Linearized single-fiber JSF in σ_p units.
    Simple,
    /// One physical fiber.
    Fiber,
    /// Multi-stage interferometer.
    Nli,
    /// Interference factor |H/N|² alone.
    Interference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub pump: PumpCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dm: Option<DmCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nli: Option<NliCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simple: Option<SimpleCfg>,
    pub grid: GridCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<SchmidtCfg>,
    /// Island indices whose windows are reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub islands: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highgain: Option<HighGainCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignCfg>,
}

/// `lambda` nm, `fwhm` nm, `sigma` rad/s. `sigma_rule = "elliptical"` takes
/// σ_p from the factorability condition of the DM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpCfg {
    pub lambda: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rule: Option<String>,
    #[serde(default)]
    pub chirp: f64,
}

/// `length` m, `lambda_zero` nm, `d_slope` ps/(km·nm²), `gamma_pp` km⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberCfg {
    pub length: Value,
    pub lambda_zero: Value,
    pub d_slope: Value,
    pub gamma_pp: Value,
}

/// `length` m; `d` ps/(km·nm); `tau_s`, `tau_i` ps/m; `dk0` m⁻¹;
/// `lambda_s0`, `lambda_i0` nm; `lambda` nm; `omega` rad/s; `phase` rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmCfg {
    /// smf | large-detuning | sellmeier | tabulated | arbitrary-phase
    pub kind: String,
    pub length: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_i: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dk0: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_s0: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_i0: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glass: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub index: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase: Vec<f64>,
}

/// Either `stages` equal lengths of `stage_length` (m), explicit
/// `stage_lengths` (m), or `binomial` stages with first length `stage_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NliCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_length: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binomial: Option<usize>,
    #[serde(default = "yes")]
    pub include_sinc: bool,
    #[serde(default)]
    pub include_dk_in_theta: bool,
    #[serde(default)]
    pub model: NliModel,
}

fn yes() -> bool {
    true
}

/// `a`, `b` in units of σ_p; centers in nm (default: the pump).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleCfg {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_s0: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_i0: Option<Value>,
}

/// A wavelength window (nm) shared by both axes, separate windows per axis,
/// or a square of half-width `half_span_sigma`·σ_p around `center_s/center_i` (nm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_s: Option<[Value; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_i: Option<[Value; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_span_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_s: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_i: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchmidtCfg {
    /// Number of leading mode pairs written out.
    #[serde(default = "four")]
    pub modes: usize,
}

fn four() -> usize {
    4
}

/// Filter centers: `island = m` or explicit `center_s`/`center_i` (nm).
/// `bandwidth` nm (common Δλ_f) or `sigma` rad/s; `shape` rectangular|gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub island: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_s: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_i: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<PassbandShape>,
    #[serde(default = "one")]
    pub eta_s: f64,
    #[serde(default = "one")]
    pub eta_i: f64,
    /// Gain used for probabilities and the heralded g̃².
    #[serde(default = "small_gain")]
    pub gain: f64,
}

fn one() -> f64 {
    1.0
}

fn small_gain() -> f64 {
    0.1
}

/// Bandwidth sweep `from`..=`to` by `step` (nm) with the filter's centers;
/// `stages` sweeps the stage count and `gains` the gain, both with the
/// configured filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<usize>,
    /// Gain ladder for the gain scan.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighGainCfg {
    pub gains: Vec<f64>,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Also write h₂ₛ for each gain.
    #[serde(default)]
    pub export_kernels: bool,
}

fn default_order() -> usize {
    nli_core::highgain::DEFAULT_ORDER
}

/// Island index and stage count for the closed-form design rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignCfg {
    #[serde(default = "one_u32")]
    pub m: u32,
    #[serde(default = "two")]
    pub stages: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_length: Option<Value>,
}

fn one_u32() -> u32 {
    1
}

fn two() -> usize {
    2
}

pub fn parse_str(text: &str) -> Result<ConfigFile, ConfigError> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for (k, s) in cfg.scenario.iter().enumerate() {
        s.validate(&format!("scenario[{k}]"))?;
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<(ConfigFile, Vec<u8>), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Read(path.display().to_string(), e.to_string()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Parse(e.to_string()))?;
    Ok((parse_str(&text)?, bytes))
}

impl ConfigFile {
    /// Same configuration with every quantity a number in its default unit.
    pub fn normalized(&self) -> Result<ConfigFile, ConfigError> {
        let mut out = self.clone();
        for (k, s) in out.scenario.iter_mut().enumerate() {
            s.normalize(&format!("scenario[{k}]"))?;
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

/// Everything a scenario needs, in SI units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub pump: PumpSpec,
    pub fiber: Option<FiberSpec>,
    pub dm: Option<DispersiveMediumSpec>,
    pub design: Option<NliDesign>,
    pub simple: Option<(SimpleJsfParams, f64, f64)>,
    pub grid: SpectralGrid,
}

impl Scenario {
    fn normalize(&mut self, p: &str) -> Result<(), ConfigError> {
        let pm = &mut self.pump;
        pm.lambda.normalize(&format!("{p}.pump.lambda"), "nm")?;
        norm_opt(&mut pm.fwhm, &format!("{p}.pump.fwhm"), "nm")?;
        norm_opt(&mut pm.sigma, &format!("{p}.pump.sigma"), "rad/s")?;
        if let Some(f) = &mut self.fiber {
            f.length.normalize(&format!("{p}.fiber.length"), "m")?;
            f.lambda_zero.normalize(&format!("{p}.fiber.lambda_zero"), "nm")?;
            f.d_slope.normalize(&format!("{p}.fiber.d_slope"), "ps/(km·nm²)")?;
            f.gamma_pp.normalize(&format!("{p}.fiber.gamma_pp"), "km⁻¹")?;
        }
        if let Some(d) = &mut self.dm {
            d.length.normalize(&format!("{p}.dm.length"), "m")?;
            norm_opt(&mut d.d, &format!("{p}.dm.d"), "ps/(km·nm)")?;
            norm_opt(&mut d.tau_s, &format!("{p}.dm.tau_s"), "ps/m")?;
            norm_opt(&mut d.tau_i, &format!("{p}.dm.tau_i"), "ps/m")?;
            norm_opt(&mut d.dk0, &format!("{p}.dm.dk0"), "m⁻¹")?;
            norm_opt(&mut d.lambda_s0, &format!("{p}.dm.lambda_s0"), "nm")?;
            norm_opt(&mut d.lambda_i0, &format!("{p}.dm.lambda_i0"), "nm")?;
        }
        if let Some(n) = &mut self.nli {
            norm_opt(&mut n.stage_length, &format!("{p}.nli.stage_length"), "m")?;
        }
        if let Some(s) = &mut self.simple {
            norm_opt(&mut s.lambda_s0, &format!("{p}.simple.lambda_s0"), "nm")?;
            norm_opt(&mut s.lambda_i0, &format!("{p}.simple.lambda_i0"), "nm")?;
        }
        let g = &mut self.grid;
        norm_opt(&mut g.lambda_min, &format!("{p}.grid.lambda_min"), "nm")?;
        norm_opt(&mut g.lambda_max, &format!("{p}.grid.lambda_max"), "nm")?;
        for (key, w) in [("lambda_s", &mut g.lambda_s), ("lambda_i", &mut g.lambda_i)] {
            if let Some(pair) = w {
                for (k, v) in pair.iter_mut().enumerate() {
                    v.normalize(&format!("{p}.grid.{key}[{k}]"), "nm")?;
                }
            }
        }
        norm_opt(&mut g.center_s, &format!("{p}.grid.center_s"), "nm")?;
        norm_opt(&mut g.center_i, &format!("{p}.grid.center_i"), "nm")?;
        if let Some(f) = &mut self.filter {
            norm_opt(&mut f.center_s, &format!("{p}.filter.center_s"), "nm")?;
            norm_opt(&mut f.center_i, &format!("{p}.filter.center_i"), "nm")?;
            norm_opt(&mut f.bandwidth, &format!("{p}.filter.bandwidth"), "nm")?;
            norm_opt(&mut f.sigma, &format!("{p}.filter.sigma"), "rad/s")?;
        }
        if let Some(s) = &mut self.scan {
            norm_opt(&mut s.from, &format!("{p}.scan.from"), "nm")?;
            norm_opt(&mut s.to, &format!("{p}.scan.to"), "nm")?;
            norm_opt(&mut s.step, &format!("{p}.scan.step"), "nm")?;
        }
        if let Some(d) = &mut self.design {
            norm_opt(&mut d.first_length, &format!("{p}.design.first_length"), "m")?;
        }
        Ok(())
    }

    /// Checks every cross-field rule by resolving the scenario.
    pub fn validate(&self, p: &str) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(invalid(format!("{p}.name"), "must be a plain, non-empty file name"));
        }
        self.resolve(p, None)?;
        if let Some(f) = &self.filter {
            self.filter_spec(p, f, None)?;
        }
        if let Some(s) = &self.scan {
            if s.from.is_some() || s.to.is_some() {
                self.bandwidths(p)?;
            }
            if s.gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(invalid(format!("{p}.scan.gains"), "need finite non-negative gains"));
            }
            if self.filter.is_none() {
                return Err(invalid(format!("{p}.scan"), "a scan needs a [filter] for its centers"));
            }
            if !s.stages.is_empty() && (self.kind != ScenarioKind::Nli || s.stages.iter().any(|&n| n < 2)) {
                return Err(invalid(format!("{p}.scan.stages"), "stage scans need an nli scenario and counts ≥ 2"));
            }
        }
        if let Some(h) = &self.highgain {
            if h.gains.is_empty() || h.gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(invalid(format!("{p}.highgain.gains"), "need finite non-negative gains"));
            }
            if h.order == 0 {
                return Err(invalid(format!("{p}.highgain.order"), "must be ≥ 1"));
            }
        }
        Ok(())
    }

    fn pump_spec(&self, p: &str, dm: Option<&DmCfg>) -> Result<PumpSpec, ConfigError> {
        let pm = &self.pump;
        let lp = pm.lambda.si(&format!("{p}.pump.lambda"), "nm")?;
        let err = |e: nli_core::Error| invalid(format!("{p}.pump"), e);
        let given = [pm.fwhm.is_some(), pm.sigma.is_some(), pm.sigma_rule.is_some()].iter().filter(|x| **x).count();
        if given != 1 {
            return Err(invalid(format!("{p}.pump"), "give exactly one of fwhm, sigma, sigma_rule"));
        }
        if let Some(f) = &pm.fwhm {
            return PumpSpec::new(lp, f.si(&format!("{p}.pump.fwhm"), "nm")?, pm.chirp).map_err(err);
        }
        if let Some(s) = &pm.sigma {
            return PumpSpec::from_sigma(lp, s.si(&format!("{p}.pump.sigma"), "rad/s")?, pm.chirp).map_err(err);
        }
        let rule = pm.sigma_rule.as_deref().unwrap_or_default();
        if rule != "elliptical" {
            return Err(invalid(format!("{p}.pump.sigma_rule"), format!("unknown rule `{rule}` (expected elliptical)")));
        }
        let dm = dm.ok_or_else(|| invalid(format!("{p}.pump.sigma_rule"), "the elliptical rule needs a [dm]"))?;
        let (ts, ti, l) = walk_off(p, dm, lp)?;
        match elliptical_condition(ts, ti, l).map_err(err)? {
            EllipticalVerdict::Feasible { sigma_p, .. } => PumpSpec::from_sigma(lp, sigma_p, pm.chirp).map_err(err),
            EllipticalVerdict::Infeasible { .. } => {
                Err(invalid(format!("{p}.pump.sigma_rule"), "τ_sτ_i > 0: no factorable pump width for this medium"))
            }
        }
    }

    pub fn resolve(&self, p: &str, n_override: Option<usize>) -> Result<Resolved, ConfigError> {
        let pump = self.pump_spec(p, self.dm.as_ref())?;
        let fiber = self
            .fiber
            .as_ref()
            .map(|f| {
                let q = |v: &Value, k: &str, u: &str| v.si(&format!("{p}.fiber.{k}"), u);
                FiberSpec::new(
                    q(&f.length, "length", "m")?,
                    q(&f.lambda_zero, "lambda_zero", "nm")?,
                    q(&f.d_slope, "d_slope", "ps/(km·nm²)")?,
                    q(&f.gamma_pp, "gamma_pp", "km⁻¹")?,
                )
                .map_err(|e| invalid(format!("{p}.fiber"), e))
            })
            .transpose()?;
        let dm = self.dm.as_ref().map(|d| dm_spec(p, d, pump.lambda_p0)).transpose()?;
        let grid = self.grid_spec(p, &pump, n_override)?;
        let mut out = Resolved { pump, fiber, dm, design: None, simple: None, grid };
        match self.kind {
            ScenarioKind::Simple => {
                let s = required(&self.simple, &format!("{p}.simple"))?;
                let params = SimpleJsfParams::new(s.a, s.b, self.pump.chirp).map_err(|e| invalid(format!("{p}.simple"), e))?;
                let wp = out.pump.omega_p0();
                let c = |v: &Option<Value>, k: &str| -> Result<f64, ConfigError> {
                    Ok(si_opt(v, &format!("{p}.simple.{k}"), "nm")?.map_or(wp, omega_from_lambda))
                };
                out.simple = Some((params, c(&s.lambda_s0, "lambda_s0")?, c(&s.lambda_i0, "lambda_i0")?));
            }
            ScenarioKind::Fiber => {
                required(&out.fiber, &format!("{p}.fiber"))?;
            }
            ScenarioKind::Nli => {
                let n = required(&self.nli, &format!("{p}.nli"))?;
                let lengths = stage_lengths(p, n)?;
                let d = NliDesign::new(lengths, out.dm.clone())
                    .map_err(|e| invalid(format!("{p}.nli"), e))?
                    .with_sinc(n.include_sinc)
                    .with_dk_in_theta(n.include_dk_in_theta)
                    .with_model(n.model);
                // Surfaces fiber requirements at load time.
                nli_core::jsf::NliAmplitude::new(&d, &out.pump, out.fiber.as_ref())
                    .map_err(|e| invalid(format!("{p}.nli"), e))?;
                out.design = Some(d);
            }
            ScenarioKind::Interference => {
                required(&out.dm, &format!("{p}.dm"))?;
                let n = self.nli.as_ref().and_then(|n| n.stages).unwrap_or(2);
                if n < 2 {
                    return Err(invalid(format!("{p}.nli.stages"), "an interference pattern needs ≥ 2 stages"));
                }
            }
        }
        Ok(out)
    }

    fn grid_spec(&self, p: &str, pump: &PumpSpec, n_override: Option<usize>) -> Result<SpectralGrid, ConfigError> {
        let g = &self.grid;
        let n = n_override.unwrap_or(g.n);
        let path = format!("{p}.grid");
        if n < nli_core::grid::MIN_POINTS {
            return Err(invalid(format!("{path}.n"), format!("need at least {} points", nli_core::grid::MIN_POINTS)));
        }
        let err = |e: nli_core::Error| invalid(path.clone(), e);
        let window = |w: &[Value; 2], k: &str| -> Result<(f64, f64), ConfigError> {
            let a = w[0].si(&format!("{path}.{k}[0]"), "nm")?;
            let b = w[1].si(&format!("{path}.{k}[1]"), "nm")?;
            let (lo, hi) = (omega_from_lambda(a.max(b)), omega_from_lambda(a.min(b)));
            if !(a > 0.0 && b > 0.0 && a != b) {
                return Err(invalid(format!("{path}.{k}"), "need two distinct positive wavelengths"));
            }
            Ok((lo, hi))
        };
        if let Some(h) = g.half_span_sigma {
            let c = |v: &Option<Value>, k: &str| -> Result<f64, ConfigError> {
                Ok(si_opt(v, &format!("{path}.{k}"), "nm")?.map_or(pump.omega_p0(), omega_from_lambda))
            };
            if !(h > 0.0) {
                return Err(invalid(format!("{path}.half_span_sigma"), "must be positive"));
            }
            return SpectralGrid::centered(c(&g.center_s, "center_s")?, c(&g.center_i, "center_i")?, h * pump.sigma_p, n)
                .map_err(err);
        }
        if let (Some(ws), Some(wi)) = (&g.lambda_s, &g.lambda_i) {
            let (a, b) = (window(ws, "lambda_s")?, window(wi, "lambda_i")?);
            return SpectralGrid::uniform(a.0, a.1, n, b.0, b.1, n).map_err(err);
        }
        match (&g.lambda_min, &g.lambda_max) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.si(&format!("{path}.lambda_min"), "nm")?, b.si(&format!("{path}.lambda_max"), "nm")?);
                SpectralGrid::from_wavelength_window(a, b, n).map_err(err)
            }
            _ => Err(invalid(path.clone(), "give lambda_min/lambda_max, lambda_s/lambda_i, or half_span_sigma")),
        }
    }

    /// Filter for this scenario; `bandwidth` overrides the configured width (m).
    pub fn filter_spec(&self, p: &str, f: &FilterCfg, bandwidth: Option<f64>) -> Result<FilterSpec, ConfigError> {
        let path = format!("{p}.filter");
        let r = self.resolve(p, None)?;
        let (cs, ci) = filter_centers(&path, f, &r)?;
        let shape = f.shape.unwrap_or(PassbandShape::Rectangular);
        let width = match (bandwidth, &f.bandwidth, &f.sigma) {
            (Some(b), _, _) => Some(nli_core::units::sigma_from_dlambda(b)),
            (None, Some(b), None) => Some(nli_core::units::sigma_from_dlambda(b.si(&format!("{path}.bandwidth"), "nm")?)),
            (None, None, Some(s)) => Some(s.si(&format!("{path}.sigma"), "rad/s")?),
            (None, None, None) => None,
            _ => return Err(invalid(path, "give bandwidth or sigma, not both")),
        };
        if width.is_some_and(|w| !(w >= 0.0)) {
            return Err(invalid(path, "filter width must be non-negative"));
        }
        // No width at all means no filter; a zero width detects nothing.
        let band = |c| width.map(|width| Passband { center: c, width, shape });
        FilterSpec { signal: band(cs), idler: band(ci), ..FilterSpec::none() }
            .with_efficiency(f.eta_s, f.eta_i)
            .map_err(|e| invalid(path.clone(), e))
    }

    /// (τ_s, τ_i, L_DM) when the medium defines walk-off at the carriers.
    pub fn walk_off(&self, p: &str) -> Result<Option<(f64, f64, f64)>, ConfigError> {
        let Some(d) = &self.dm else { return Ok(None) };
        let defined = match d.kind.as_str() {
            "large-detuning" => true,
            "sellmeier" => d.lambda_s0.is_some(),
            _ => false,
        };
        if !defined {
            return Ok(None);
        }
        let lp = self.pump.lambda.si(&format!("{p}.pump.lambda"), "nm")?;
        walk_off(p, d, lp).map(Some)
    }

    /// Scan bandwidths in metres.
    pub fn bandwidths(&self, p: &str) -> Result<Vec<f64>, ConfigError> {
        let s = required(&self.scan, &format!("{p}.scan"))?;
        let path = format!("{p}.scan");
        let from = required(&s.from, &format!("{path}.from"))?.si(&format!("{path}.from"), "nm")?;
        let to = required(&s.to, &format!("{path}.to"))?.si(&format!("{path}.to"), "nm")?;
        let step = match &s.step {
            Some(v) => v.si(&format!("{path}.step"), "nm")?,
            None => (to - from).max(0.0),
        };
        if !(from > 0.0) || to < from || !(step >= 0.0) || (step == 0.0 && to > from) {
            return Err(invalid(path, "need 0 < from ≤ to and a positive step"));
        }
        if step == 0.0 {
            return Ok(vec![from]);
        }
        let k = ((to - from) / step + 1e-9).floor() as usize;
        if k > 100_000 {
            return Err(invalid(format!("{path}.step"), "too many scan points"));
        }
        Ok((0..=k).map(|j| from + j as f64 * step).collect())
    }
}

fn filter_centers(path: &str, f: &FilterCfg, r: &Resolved) -> Result<(f64, f64), ConfigError> {
    match (f.island, &f.center_s, &f.center_i) {
        (Some(m), None, None) => {
            let dm = r.dm.as_ref().ok_or_else(|| invalid(format!("{path}.island"), "island centers need a [dm]"))?;
            let d = nli_core::jsf::detuning_at_theta(m as f64 * std::f64::consts::PI, &r.pump, dm)
                .map_err(|e| invalid(format!("{path}.island"), e))?;
            let wp = r.pump.omega_p0();
            Ok((wp - 0.5 * d, wp + 0.5 * d))
        }
        (None, Some(s), Some(i)) => Ok((
            omega_from_lambda(s.si(&format!("{path}.center_s"), "nm")?),
            omega_from_lambda(i.si(&format!("{path}.center_i"), "nm")?),
        )),
        (None, None, None) => Ok((r.pump.omega_p0(), r.pump.omega_p0())),
        _ => Err(invalid(path, "give either island or both center_s and center_i")),
    }
}

fn stage_lengths(p: &str, n: &NliCfg) -> Result<Vec<f64>, ConfigError> {
    let path = format!("{p}.nli");
    let first = si_opt(&n.stage_length, &format!("{path}.stage_length"), "m")?;
    match (n.stages, n.binomial, n.stage_lengths.is_empty()) {
        (Some(k), None, true) => {
            let l = first.ok_or_else(|| invalid(format!("{path}.stage_length"), "missing"))?;
            Ok(vec![l; k])
        }
        (None, Some(k), true) => {
            let l = first.ok_or_else(|| invalid(format!("{path}.stage_length"), "missing"))?;
            nli_core::design::binomial_lengths(k, l).map_err(|e| invalid(format!("{path}.binomial"), e))
        }
        (None, None, false) if first.is_none() => Ok(n.stage_lengths.clone()),
        _ => Err(invalid(path, "give stages + stage_length, binomial + stage_length, or stage_lengths")),
    }
}

fn walk_off(p: &str, d: &DmCfg, lambda_p: f64) -> Result<(f64, f64, f64), ConfigError> {
    let path = format!("{p}.dm");
    let l = d.length.si(&format!("{path}.length"), "m")?;
    match d.kind.as_str() {
        "large-detuning" => Ok((
            required(&d.tau_s, &format!("{path}.tau_s"))?.si(&format!("{path}.tau_s"), "ps/m")?,
            required(&d.tau_i, &format!("{path}.tau_i"))?.si(&format!("{path}.tau_i"), "ps/m")?,
            l,
        )),
        "sellmeier" => {
            let (ls, li) = carrier_pair(&path, d, lambda_p)?;
            let (ts, ti) = glass(&path, d)?.walk_off(lambda_p, ls, li);
            Ok((ts, ti, l))
        }
        k => Err(invalid(format!("{path}.kind"), format!("walk-off is not defined for `{k}`"))),
    }
}

/// Signal and idler carriers; a missing idler follows from 2ω_p = ω_s + ω_i.
fn carrier_pair(path: &str, d: &DmCfg, lambda_p: f64) -> Result<(f64, f64), ConfigError> {
    let ls = required(&d.lambda_s0, &format!("{path}.lambda_s0"))?.si(&format!("{path}.lambda_s0"), "nm")?;
    let li = match &d.lambda_i0 {
        Some(v) => v.si(&format!("{path}.lambda_i0"), "nm")?,
        None => {
            let wi = 2.0 * omega_from_lambda(lambda_p) - omega_from_lambda(ls);
            if !(wi > 0.0) {
                return Err(invalid(format!("{path}.lambda_s0"), "no idler satisfies energy conservation"));
            }
            nli_core::units::lambda_from_omega(wi)
        }
    };
    Ok((ls, li))
}

fn glass(path: &str, d: &DmCfg) -> Result<Sellmeier, ConfigError> {
    match d.glass.as_deref().unwrap_or("fused-silica") {
        "fused-silica" => Ok(Sellmeier::fused_silica()),
        g => Err(invalid(format!("{path}.glass"), format!("unknown glass `{g}`"))),
    }
}

fn dm_spec(p: &str, d: &DmCfg, lambda_p: f64) -> Result<DispersiveMediumSpec, ConfigError> {
    let path = format!("{p}.dm");
    let l = d.length.si(&format!("{path}.length"), "m")?;
    let kind = match d.kind.as_str() {
        "smf" | "small-detuning" => DmKind::SmallDetuningQuadratic {
            d: required(&d.d, &format!("{path}.d"))?.si(&format!("{path}.d"), "ps/(km·nm)")?,
        },
        "large-detuning" => {
            let (ts, ti, _) = walk_off(p, d, lambda_p)?;
            let (ls, li) = carrier_pair(&path, d, lambda_p)?;
            DmKind::LargeDetuningLinear {
                tau_s: ts,
                tau_i: ti,
                dk0: si_opt(&d.dk0, &format!("{path}.dk0"), "m⁻¹")?.unwrap_or(0.0),
                omega_s0: omega_from_lambda(ls),
                omega_i0: omega_from_lambda(li),
            }
        }
        "sellmeier" => DmKind::SellmeierGlass { sellmeier: glass(&path, d)? },
        "tabulated" => DmKind::Tabulated { lambda: d.lambda.iter().map(|x| x * 1e-9).collect(), index: d.index.clone() },
        "arbitrary-phase" => DmKind::ArbitraryPhase { omega: d.omega.clone(), phase: d.phase.clone() },
        k => return Err(invalid(format!("{path}.kind"), format!("unknown medium kind `{k}`"))),
    };
    DispersiveMediumSpec::new(l, kind).map_err(|e| invalid(path, e))
}
