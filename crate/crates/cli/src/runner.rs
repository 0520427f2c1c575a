//! Scenario pipeline and result persistence.

use crate::config::{ConfigError, ConfigFile, Scenario, ScenarioKind};
use nli_core::design::{self, EllipticalVerdict};
use nli_core::highgain::{green_series, highgain_mode_indices};
use nli_core::io;
use nli_core::jsf::{self, Axis};
use nli_core::metrics::{bandwidth_scan, metrics_report, FilterSpec};
use nli_core::schmidt::{schmidt_decompose, Rank};
use nli_core::units::lambda_from_omega;
use nli_core::{Diagnostic, JsfGrid};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Core { path: String, source: nli_core::Error },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{count} numerical-validity warning(s) under --strict")]
    Strict { count: usize, manifest: Box<RunManifest> },
}

impl RunError {
    /// 2 for invalid input, 3 for warnings escalated by `--strict`, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core { source, .. } => match source {
                nli_core::Error::Domain(_)
                | nli_core::Error::Config(_)
                | nli_core::Error::Grid(_)
                | nli_core::Error::OutOfWindow { .. }
                | nli_core::Error::InterpolationRange { .. } => 2,
                _ => 1,
            },
            RunError::Io(..) => 1,
            RunError::Strict { .. } => 3,
        }
    }
}

fn core(path: impl Into<String>) -> impl FnOnce(nli_core::Error) -> RunError {
    let path = path.into();
    move |source| RunError::Core { path, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScanParam {
    #[value(alias = "filter_bandwidth")]
    FilterBandwidth,
    Gain,
    #[value(alias = "stage_count")]
    StageCount,
}

/// Which parts of the pipeline to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Jsf,
    Schmidt,
    Metrics,
    HighGain,
    Scan(ScanParam),
    Design,
    All,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub grid: Option<usize>,
    pub format: Format,
    pub strict: bool,
    pub stage: Stage,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions { out: out.into(), grid: None, format: Format::Csv, strict: false, stage: Stage::All }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub scenario: String,
    pub step: String,
    pub diagnostic: Diagnostic,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub scenarios: Vec<String>,
    pub files: Vec<FileEntry>,
    pub warnings: Vec<Warning>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Collects output files and warnings for one invocation.
struct Sink<'a> {
    root: &'a Path,
    files: Vec<FileEntry>,
    warnings: Vec<Warning>,
}

impl Sink<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| RunError::Io(dir.display().to_string(), e))?;
        }
        fs::write(&path, bytes).map_err(|e| RunError::Io(path.display().to_string(), e))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    fn with<F>(&mut self, rel: &str, f: F) -> Result<(), RunError>
    where
        F: FnOnce(&mut Vec<u8>) -> nli_core::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(core(rel))?;
        self.write(rel, &buf)
    }

    fn warn(&mut self, scenario: &str, step: &str, diags: &[Diagnostic]) {
        for d in diags {
            self.warnings.push(Warning {
                scenario: scenario.to_string(),
                step: step.to_string(),
                diagnostic: d.clone(),
                message: d.to_string(),
            });
        }
    }
}

/// Parses, runs and writes `manifest.json` under `opts.out`.
pub fn run_file(config: &Path, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let (cfg, bytes) = crate::config::load(config)?;
    run(&cfg, &bytes, opts)
}

pub fn run(cfg: &ConfigFile, config_bytes: &[u8], opts: &RunOptions) -> Result<RunManifest, RunError> {
    let started = unix_now();
    fs::create_dir_all(&opts.out).map_err(|e| RunError::Io(opts.out.display().to_string(), e))?;
    let mut sink = Sink { root: &opts.out, files: Vec::new(), warnings: Vec::new() };
    for (k, s) in cfg.scenario.iter().enumerate() {
        run_scenario(&format!("scenario[{k}]"), s, opts, &mut sink)?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_bytes),
        started_unix: started,
        finished_unix: unix_now(),
        scenarios: cfg.scenario.iter().map(|s| s.name.clone()).collect(),
        files: sink.files,
        warnings: sink.warnings,
    };
    let path = opts.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    fs::write(&path, text).map_err(|e| RunError::Io(path.display().to_string(), e))?;
    if opts.strict && !manifest.warnings.is_empty() {
        return Err(RunError::Strict { count: manifest.warnings.len(), manifest: Box::new(manifest) });
    }
    Ok(manifest)
}

/// Builds the scenario's JSF. Interference patterns are left unnormalized.
pub fn build_jsf(p: &str, s: &Scenario, grid_n: Option<usize>) -> Result<JsfGrid, RunError> {
    let r = s.resolve(p, grid_n)?;
    let g = &r.grid;
    match s.kind {
        ScenarioKind::Simple => {
            let (params, ws, wi) = r.simple.expect("resolved");
            jsf::build_simple_jsf(&params, r.pump.sigma_p, ws, wi, g)
        }
        ScenarioKind::Fiber => jsf::build_single_fiber_jsf(&r.pump, r.fiber.as_ref().expect("resolved"), g),
        ScenarioKind::Nli => jsf::build_nli_jsf(r.design.as_ref().expect("resolved"), &r.pump, r.fiber.as_ref(), g),
        ScenarioKind::Interference => {
            let n = s.nli.as_ref().and_then(|n| n.stages).unwrap_or(2);
            jsf::build_interference_grid(&r.pump, r.dm.as_ref().expect("resolved"), n, g)
        }
    }
    .map_err(core(format!("{p}.grid")))
}

fn wants(opts: &RunOptions, stage: Stage) -> bool {
    opts.stage == Stage::All || opts.stage == stage
}

fn run_scenario(p: &str, s: &Scenario, opts: &RunOptions, sink: &mut Sink) -> Result<(), RunError> {
    let name = s.name.as_str();
    let jsf = build_jsf(p, s, opts.grid)?;
    sink.warn(name, "jsf", &jsf.diagnostics);
    let physical = s.kind != ScenarioKind::Interference;

    if wants(opts, Stage::Jsf) {
        write_jsf(sink, name, &jsf, opts.format)?;
    }
    if !physical {
        return Ok(());
    }
    if wants(opts, Stage::Schmidt) {
        schmidt_outputs(p, s, &jsf, sink)?;
    }
    if wants(opts, Stage::Metrics) {
        let filt = scenario_filter(p, s)?;
        let gain = s.filter.as_ref().map_or(0.1, |f| f.gain);
        let report = metrics_report(&jsf, &filt, gain).map_err(core(format!("{p}.filter")))?;
        sink.warn(name, "metrics", &report.diagnostics);
        sink.json(&format!("{name}/metrics.json"), &report)?;
    }
    if s.scan.is_some() {
        for param in [ScanParam::FilterBandwidth, ScanParam::Gain, ScanParam::StageCount] {
            if wants(opts, Stage::Scan(param)) {
                scan(p, s, &jsf, param, opts, sink)?;
            }
        }
    }
    if wants(opts, Stage::HighGain) && s.highgain.is_some() {
        highgain_outputs(p, s, &jsf, opts, sink)?;
    }
    if wants(opts, Stage::Design) {
        design_outputs(p, s, opts, sink)?;
    }
    Ok(())
}

fn write_jsf(sink: &mut Sink, name: &str, jsf: &JsfGrid, format: Format) -> Result<(), RunError> {
    let (ws, wi) = (jsf.grid.omega_s(), jsf.grid.omega_i());
    match format {
        Format::Csv => sink.with(&format!("{name}/jsf.csv"), |b| io::write_grid_csv(b, ws, wi, &jsf.values))?,
        Format::Bin => sink.with(&format!("{name}/jsf.bin"), |b| io::write_grid_bin(b, ws, wi, &jsf.values))?,
    }
    if jsf.normalized {
        for (axis, tag, omega) in [(Axis::Signal, "s", ws), (Axis::Idler, "i", wi)] {
            let m = jsf::marginal_intensity(jsf, axis).map_err(core(name))?;
            sink.with(&format!("{name}/marginal_{tag}.csv"), |b| io::write_marginal_csv(b, omega, &m))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SchmidtOut {
    #[serde(rename = "K")]
    k: f64,
    g2: f64,
    purity: f64,
    truncation_rank: usize,
    /// Leading coefficients r_k, Σr_k² = 1.
    r_k: Vec<f64>,
    islands: Vec<IslandOut>,
}

#[derive(Serialize)]
struct IslandOut {
    m: u32,
    center_s_nm: f64,
    center_i_nm: f64,
    analytic_s_nm: f64,
    analytic_i_nm: f64,
    roundness: Option<design::Roundness>,
}

fn nm(omega: f64) -> f64 {
    lambda_from_omega(omega) * 1e9
}

fn schmidt_outputs(p: &str, s: &Scenario, jsf: &JsfGrid, sink: &mut Sink) -> Result<(), RunError> {
    let name = s.name.as_str();
    let dec = schmidt_decompose(jsf, Rank::Default).map_err(core(format!("{p}.grid")))?;
    let sum = dec.summary();
    let modes = s.schmidt.as_ref().map_or(4, |c| c.modes).min(dec.coefficients.len());
    let mut islands = Vec::new();
    if !s.islands.is_empty() {
        let r = s.resolve(p, None)?;
        let dm = r.dm.as_ref().ok_or_else(|| ConfigError::Invalid {
            path: format!("{p}.islands"),
            message: "island windows need a [dm]".into(),
        })?;
        for &m in &s.islands {
            let w = jsf::island_window(jsf, m, &r.pump, dm).map_err(core(format!("{p}.islands")))?;
            islands.push(IslandOut {
                m,
                center_s_nm: nm(w.center_s),
                center_i_nm: nm(w.center_i),
                analytic_s_nm: nm(w.analytic_s),
                analytic_i_nm: nm(w.analytic_i),
                roundness: design::island_roundness(jsf, &w).ok(),
            });
        }
    }
    let out = SchmidtOut {
        k: sum.k,
        g2: sum.g2,
        purity: sum.purity,
        truncation_rank: sum.truncation_rank,
        r_k: sum.r_k.iter().take(64).copied().collect(),
        islands,
    };
    sink.json(&format!("{name}/schmidt.json"), &out)?;
    for k in 0..modes {
        sink.with(&format!("{name}/mode_s_{}.csv", k + 1), |b| {
            io::write_mode_csv(b, &dec.omega_s, dec.signal_modes.column(k))
        })?;
        sink.with(&format!("{name}/mode_i_{}.csv", k + 1), |b| {
            io::write_mode_csv(b, &dec.omega_i, dec.idler_modes.column(k))
        })?;
    }
    Ok(())
}

/// The scenario's filter, or no filter when none is configured.
pub fn scenario_filter(p: &str, s: &Scenario) -> Result<FilterSpec, RunError> {
    Ok(match &s.filter {
        Some(f) => s.filter_spec(p, f, None)?,
        None => FilterSpec::none(),
    })
}

#[derive(Serialize)]
struct GainRow {
    #[serde(rename = "G")]
    gain: f64,
    #[serde(rename = "P_s")]
    p_s: f64,
    #[serde(rename = "P_c")]
    p_c: f64,
    heralded_g2: Option<f64>,
}

#[derive(Serialize)]
struct StageRow {
    stages: usize,
    #[serde(rename = "K")]
    k: f64,
    g2s: Option<f64>,
    g2i: Option<f64>,
    xi_s: Option<f64>,
    xi_i: Option<f64>,
    purity_filtered: Option<f64>,
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

fn scan(p: &str, s: &Scenario, jsf: &JsfGrid, param: ScanParam, opts: &RunOptions, sink: &mut Sink) -> Result<(), RunError> {
    let name = s.name.as_str();
    let cfg = s.scan.as_ref().expect("checked");
    let fcfg = s.filter.as_ref().expect("validated");
    match param {
        ScanParam::FilterBandwidth => {
            if cfg.from.is_none() {
                return Ok(());
            }
            let filt = s.filter_spec(p, fcfg, Some(1e-9))?;
            let (cs, ci) = (filt.signal.expect("set").center, filt.idler.expect("set").center);
            let rows = bandwidth_scan(jsf, cs, ci, &s.bandwidths(p)?);
            sink.with(&format!("{name}/scan_bandwidth.csv"), |b| io::write_scan_csv(b, &rows))
        }
        ScanParam::Gain => {
            if cfg.gains.is_empty() {
                return Ok(());
            }
            let filt = scenario_filter(p, s)?;
            let mut text = String::from("G,P_s,P_c,heralded_g2\n");
            for &g in &cfg.gains {
                let r = metrics_report(jsf, &filt, g).map_err(core(format!("{p}.scan.gains")))?;
                sink.warn(name, "scan", &r.diagnostics);
                let row = GainRow { gain: g, p_s: r.p_s, p_c: r.p_c, heralded_g2: r.heralded_g2 };
                text += &format!("{},{:.12e},{:.12e},{}\n", row.gain, row.p_s, row.p_c, csv_opt(row.heralded_g2));
            }
            sink.write(&format!("{name}/scan_gain.csv"), text.as_bytes())
        }
        ScanParam::StageCount => {
            if cfg.stages.is_empty() {
                return Ok(());
            }
            let filt = scenario_filter(p, s)?;
            let mut text = String::from("stages,K,g2s,g2i,xi_s,xi_i,purity_filtered\n");
            for &n in &cfg.stages {
                let mut v = s.clone();
                let nli = v.nli.as_mut().expect("validated");
                if nli.binomial.is_some() {
                    nli.binomial = Some(n);
                } else if nli.stage_lengths.is_empty() {
                    nli.stages = Some(n);
                } else {
                    return Err(ConfigError::Invalid {
                        path: format!("{p}.scan.stages"),
                        message: "stage scans need stages or binomial, not explicit stage_lengths".into(),
                    }
                    .into());
                }
                let j = build_jsf(p, &v, opts.grid)?;
                sink.warn(name, "scan", &j.diagnostics);
                let k = nli_core::schmidt::schmidt_coefficients(&j)
                    .map(|c| nli_core::schmidt::schmidt_number(&c))
                    .map_err(core(format!("{p}.scan.stages")))?;
                let r = metrics_report(&j, &filt, fcfg.gain).map_err(core(format!("{p}.scan.stages")))?;
                let row = StageRow {
                    stages: n,
                    k,
                    g2s: r.g2_bar_s,
                    g2i: r.g2_bar_i,
                    xi_s: r.xi_s,
                    xi_i: r.xi_i,
                    purity_filtered: r.purity_filtered,
                };
                text += &format!(
                    "{},{:.12e},{},{},{},{},{}\n",
                    row.stages,
                    row.k,
                    csv_opt(row.g2s),
                    csv_opt(row.g2i),
                    csv_opt(row.xi_s),
                    csv_opt(row.xi_i),
                    csv_opt(row.purity_filtered)
                );
            }
            sink.write(&format!("{name}/scan_stages.csv"), text.as_bytes())
        }
    }
}

#[derive(Serialize)]
struct HighGainOut {
    #[serde(rename = "G")]
    gain: f64,
    order: usize,
    commutator_residual_signal: f64,
    commutator_residual_idler: f64,
    mode_coefficients: Vec<f64>,
    diagnostics: Vec<Diagnostic>,
}

fn highgain_outputs(p: &str, s: &Scenario, jsf: &JsfGrid, opts: &RunOptions, sink: &mut Sink) -> Result<(), RunError> {
    let name = s.name.as_str();
    let h = s.highgain.as_ref().expect("checked");
    let filt = scenario_filter(p, s)?;
    let mut ladder = Vec::new();
    let mut summary = Vec::new();
    for &g in &h.gains {
        let gf = green_series(jsf, g, h.order).map_err(core(format!("{p}.highgain")))?;
        sink.warn(name, "highgain", &gf.diagnostics);
        let idx = highgain_mode_indices(&gf, &filt).map_err(core(format!("{p}.highgain")))?;
        if h.export_kernels {
            let kernel = gf.h2s_normalized().map_err(core(format!("{p}.highgain")))?;
            write_jsf(sink, &format!("{name}/h2s_G{g}"), &kernel, opts.format)?;
        }
        summary.push(HighGainOut {
            gain: g,
            order: h.order,
            commutator_residual_signal: gf.commutator_residual_signal(),
            commutator_residual_idler: gf.commutator_residual_idler(),
            mode_coefficients: idx.iter().take(16).copied().collect(),
            diagnostics: gf.diagnostics.clone(),
        });
        ladder.push((g, idx.into_iter().take(16).collect::<Vec<_>>()));
    }
    sink.with(&format!("{name}/mode_index.csv"), |b| io::write_mode_index_csv(b, &ladder))?;
    sink.json(&format!("{name}/highgain.json"), &summary)
}

#[derive(Serialize)]
struct DesignOut {
    m: u32,
    stages: usize,
    binomial_lengths_m: Option<Vec<f64>>,
    round_island_ldm_m: Option<f64>,
    stripe_width_rad_s: Option<f64>,
    elliptical: Option<EllipticalVerdict>,
    cross_term: Option<f64>,
}

fn design_outputs(p: &str, s: &Scenario, _opts: &RunOptions, sink: &mut Sink) -> Result<(), RunError> {
    let Some(d) = &s.design else { return Ok(()) };
    let r = s.resolve(p, None)?;
    let first = match &d.first_length {
        Some(v) => Some(v.si(&format!("{p}.design.first_length"), "m")?),
        None => r.design.as_ref().map(|x| x.stage_lengths[0]),
    };
    let small = r.dm.as_ref().filter(|dm| dm.k2(&r.pump).is_ok());
    let walk = s.walk_off(p)?;
    let out = DesignOut {
        m: d.m,
        stages: d.stages,
        binomial_lengths_m: first
            .map(|l| design::binomial_lengths(d.stages, l))
            .transpose()
            .map_err(core(format!("{p}.design.stages")))?,
        round_island_ldm_m: small
            .map(|dm| design::round_island_ldm(d.m, d.stages, &r.pump, dm))
            .transpose()
            .map_err(core(format!("{p}.design")))?,
        stripe_width_rad_s: small
            .map(|dm| design::stripe_width(d.m, &r.pump, dm))
            .transpose()
            .map_err(core(format!("{p}.design")))?,
        elliptical: walk
            .map(|(a, b, l)| design::elliptical_condition(a, b, l))
            .transpose()
            .map_err(core(format!("{p}.design")))?,
        cross_term: walk.map(|(a, b, l)| design::cross_term_coefficient(a, b, l, r.pump.sigma_p)),
    };
    sink.json(&format!("{}/design.json", s.name), &out)
}
